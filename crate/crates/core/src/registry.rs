//! Name-keyed registries for interchangeable components.
//!
//! Components are addressed by spec strings of the form `name` or
//! `name:key=value,key=value`. A registry maps each name to a factory; the
//! factory signature is chosen by the component family (rules, strategies).

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("malformed spec {0:?}: expected name or name:key=value[,key=value]")]
    Syntax(String),
    #[error("unknown {family} {name:?} (known: {known})")]
    UnknownName {
        family: &'static str,
        name: String,
        known: String,
    },
    #[error("{name}: unknown option {key:?}")]
    UnknownOption { name: String, key: String },
    #[error("{name}: missing option {key:?}")]
    MissingOption { name: String, key: String },
    #[error("{name}: bad value {value:?} for option {key:?}")]
    BadValue {
        name: String,
        key: String,
        value: String,
    },
    #[error("{name}: {reason}")]
    Invalid { name: String, reason: String },
}

/// A parsed `name:key=value,...` string. Options keep their input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentSpec {
    name: String,
    options: Vec<(String, String)>,
}

impl ComponentSpec {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            options: Vec::new(),
        }
    }

    pub fn with_option(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.options.push((key.into(), value.to_string()));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn options(&self) -> &[(String, String)] {
        &self.options
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.options
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Rejects any option key not listed in `allowed`.
    pub fn expect_keys(&self, allowed: &[&str]) -> Result<(), SpecError> {
        match self
            .options
            .iter()
            .find(|(k, _)| !allowed.contains(&k.as_str()))
        {
            Some((key, _)) => Err(SpecError::UnknownOption {
                name: self.name.clone(),
                key: key.clone(),
            }),
            None => Ok(()),
        }
    }

    pub fn parse_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, SpecError> {
        self.get(key)
            .map(|value| {
                value.parse().map_err(|_| SpecError::BadValue {
                    name: self.name.clone(),
                    key: key.to_string(),
                    value: value.to_string(),
                })
            })
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, SpecError> {
        self.parse_opt(key)?
            .ok_or_else(|| SpecError::MissingOption {
                name: self.name.clone(),
                key: key.to_string(),
            })
    }

    pub fn invalid(&self, reason: impl Into<String>) -> SpecError {
        SpecError::Invalid {
            name: self.to_string(),
            reason: reason.into(),
        }
    }
}

impl FromStr for ComponentSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, SpecError> {
        let s = s.trim();
        let syntax = || SpecError::Syntax(s.to_string());
        let (name, rest) = match s.split_once(':') {
            Some((name, rest)) => (name, Some(rest)),
            None => (s, None),
        };
        let valid_token = |t: &str| {
            !t.is_empty()
                && t.chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.' | '+'))
        };
        if !valid_token(name) {
            return Err(syntax());
        }
        let mut spec = ComponentSpec::new(name);
        if let Some(rest) = rest {
            for pair in rest.split(',') {
                let (key, value) = pair.split_once('=').ok_or_else(syntax)?;
                let (key, value) = (key.trim(), value.trim());
                if !valid_token(key) || !valid_token(value) || spec.get(key).is_some() {
                    return Err(syntax());
                }
                spec.options.push((key.to_string(), value.to_string()));
            }
        }
        Ok(spec)
    }
}

impl fmt::Display for ComponentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        for (i, (key, value)) in self.options.iter().enumerate() {
            let sep = if i == 0 { ':' } else { ',' };
            write!(f, "{sep}{key}={value}")?;
        }
        Ok(())
    }
}

/// One named component: `check` validates a spec without building anything,
/// `build` constructs the component.
pub struct Registration<F> {
    pub name: &'static str,
    pub usage: &'static str,
    pub check: fn(&ComponentSpec) -> Result<(), SpecError>,
    pub build: F,
}

pub struct Registry<F: 'static> {
    family: &'static str,
    entries: &'static [Registration<F>],
}

impl<F> Registry<F> {
    pub const fn new(family: &'static str, entries: &'static [Registration<F>]) -> Self {
        Self { family, entries }
    }

    pub fn entries(&self) -> &'static [Registration<F>] {
        self.entries
    }

    pub fn lookup(&self, name: &str) -> Result<&'static Registration<F>, SpecError> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| SpecError::UnknownName {
                family: self.family,
                name: name.to_string(),
                known: self
                    .entries
                    .iter()
                    .map(|e| e.usage)
                    .collect::<Vec<_>>()
                    .join(", "),
            })
    }

    /// Parses and validates a spec string against the registered entry.
    pub fn parse(&self, s: &str) -> Result<ComponentSpec, SpecError> {
        let spec: ComponentSpec = s.parse()?;
        (self.lookup(spec.name())?.check)(&spec)?;
        Ok(spec)
    }
}
