use crate::game::Move;
use crate::model::within_limit;

/// Appends blocks of given target sizes to the adversarial chain as fast as
/// the current space allows.
///
/// In each free round the builder either finishes the block in progress with
/// one replot, or bootstraps every upcoming block that fits in one go and then
/// starts the first one that does not: bootstrap it at the current space and
/// immediately replot it once. A block of size `alpha` built at space `a`
/// therefore costs `ceil(alpha / a - 1)` replots and no extra rounds.
#[derive(Debug, Clone)]
pub struct SegmentBuilder {
    targets: Vec<f64>,
    next: usize,
    /// Space still missing from the block at the chain tip.
    pending: Option<f64>,
}

impl SegmentBuilder {
    pub fn new(targets: Vec<f64>) -> Self {
        Self {
            targets,
            next: 0,
            pending: None,
        }
    }

    pub fn is_done(&self) -> bool {
        self.pending.is_none() && self.next == self.targets.len()
    }

    /// Moves for a free round with adversarial space `a`.
    pub fn plan(&mut self, a: f64) -> Vec<Move> {
        if let Some(missing) = self.pending {
            return vec![Move::Replot(self.grow(missing, a))];
        }
        let mut sizes = Vec::new();
        let mut moves = Vec::new();
        while let Some(&t) = self.targets.get(self.next) {
            self.next += 1;
            if within_limit(t, a) {
                sizes.push(t);
            } else {
                sizes.push(a);
                let add = self.grow(t - a, a);
                moves.push(Move::Replot(add));
                break;
            }
        }
        if !sizes.is_empty() {
            moves.insert(0, Move::Bootstrap(sizes));
        }
        moves
    }

    /// One replot towards the missing amount; returns the space added.
    fn grow(&mut self, missing: f64, a: f64) -> f64 {
        if within_limit(missing, a) {
            self.pending = None;
            missing
        } else {
            self.pending = Some(missing - a);
            a
        }
    }
}
