use forklab_core::adversaries::search::{search_actions, tree_size};
use forklab_core::adversaries::{
    grid_search, replot_schedule, universal_profiles, Direction, GenesisAttack, Horizon,
    UniversalAttack, WeightAttack, NODE_LIMIT,
};
use forklab_core::bounds::{ell_genesis, ell_tent_lower, ell_universal, ell_weight};
use forklab_core::model::{approx_eq, fork_point, validate_profile, ForkPoint};
use forklab_core::rules::{GenesisRule, TentRule, WeightRule};
use forklab_core::{run_game, ChainRule, GameParams, Transcript, Winner};

const PHIS: [f64; 4] = [1.1, 1.5, 2.0, 3.0];
const EPSILONS: [f64; 3] = [0.5, 0.1, 0.01];
const RHOS: [u32; 3] = [2, 4, 8];

fn grid() -> impl Iterator<Item = GameParams> {
    PHIS.into_iter().flat_map(|phi| {
        EPSILONS.into_iter().flat_map(move |eps| {
            RHOS.into_iter()
                .map(move |rho| GameParams::new(phi, eps, rho).unwrap())
        })
    })
}

fn universal(p: &GameParams, dir: Direction, rule: &dyn ChainRule) -> Transcript {
    let mut s = UniversalAttack::new(p, dir).unwrap();
    run_game(p, &mut s, rule).unwrap()
}

fn assert_lock_spacing(t: &Transcript) {
    let rho = t.params.rho() as usize;
    for w in t.replot_rounds().windows(2) {
        assert!(
            w[1] - w[0] >= rho,
            "replots at rounds {} and {} under rho={rho}",
            w[0],
            w[1]
        );
    }
}

#[test]
fn universal_attack_builds_target_profiles() {
    for p in grid() {
        let pair = universal_profiles(&p);
        let ell = ell_universal(p.phi(), p.epsilon(), p.rho()).unwrap().ell as usize;
        for (dir, adv_target, honest_target) in [
            (Direction::FakeSTilde, &pair.s_tilde, &pair.s),
            (Direction::FakeS, &pair.s, &pair.s_tilde),
        ] {
            let t = universal(&p, dir, &WeightRule);
            let st = &t.final_state;
            let adv = st.adv_chain().profile();
            let honest = st.honest_chain().profile();
            assert_eq!(adv.len(), ell + 1, "{p:?} {dir:?}");
            assert!(
                adv.iter()
                    .zip(adv_target.iter())
                    .all(|(a, b)| approx_eq(*a, *b)),
                "{p:?} {dir:?}"
            );
            assert!(
                honest
                    .iter()
                    .zip(honest_target.iter())
                    .all(|(a, b)| approx_eq(*a, *b)),
                "{p:?} {dir:?}"
            );
            assert_eq!(
                fork_point(st.honest_chain(), st.adv_chain()).unwrap(),
                ForkPoint::At(1)
            );
            assert_eq!(t.outcome.fork_length, ell);
            assert!(validate_profile(&honest, p.epsilon()).unwrap().is_valid());
            assert_lock_spacing(&t);
            assert!(t.replay().unwrap().bitwise_eq(st));
        }
    }
}

#[test]
fn adversary_reaches_unit_space_at_round_k() {
    let p = GameParams::new(2.0, 0.01, 4).unwrap();
    let t = universal(&p, Direction::FakeSTilde, &WeightRule);
    let mut a = p.a0();
    for (i, action) in t.actions.iter().enumerate() {
        a *= action.gamma;
        let round = i + 1;
        if round < 70 {
            assert!(a < 1.0 && action.is_idle());
        }
        if round == 70 {
            assert!(a >= 1.0);
            assert!(!action.is_idle());
            break;
        }
    }
}

#[test]
fn replot_budget_fits_everywhere() {
    for p in grid() {
        let pair = universal_profiles(&p);
        let sched = replot_schedule(&pair.tent_targets(), p.phi(), p.rho()).unwrap();
        assert!(
            sched.rounds <= pair.l as u64,
            "{p:?}: {} > {}",
            sched.rounds,
            pair.l
        );
    }
}

#[test]
fn weight_attack_in_bracket() {
    for p in grid() {
        let mut s = WeightAttack::new(&p, Horizon::Threshold);
        let t = run_game(&p, &mut s, &WeightRule).unwrap();
        let lo = ell_weight(p.phi(), p.epsilon()).unwrap() as usize;
        let hi = lo + (p.phi() * p.growth()).ceil() as usize + 2;
        assert_eq!(t.outcome.winner, Winner::Adversary, "{p:?}");
        assert!(
            (lo..=hi).contains(&t.outcome.fork_length),
            "{p:?}: {}",
            t.outcome.fork_length
        );
    }
}

#[test]
fn weight_attack_minimal_horizon_also_wins() {
    for p in grid() {
        let mut s = WeightAttack::new(&p, Horizon::Min);
        let t = run_game(&p, &mut s, &WeightRule).unwrap();
        assert_eq!(t.outcome.winner, Winner::Adversary, "{p:?}");
    }
}

#[test]
fn genesis_attack_exact_length() {
    for p in grid() {
        for k in [1u64, 2, 5] {
            let mut s = GenesisAttack::new(&p, k).unwrap();
            let t = run_game(&p, &mut s, &GenesisRule { k: k as usize }).unwrap();
            assert_eq!(t.outcome.winner, Winner::Adversary, "{p:?} k={k}");
            assert_eq!(
                t.actions.len() as u64,
                ell_genesis(p.phi(), k, p.rho()).unwrap()
            );
            assert_lock_spacing(&t);
        }
    }
}

#[test]
fn genesis_attack_examples() {
    let p = GameParams::new(2.0, 0.01, 4).unwrap();
    let mut s = GenesisAttack::new(&p, 3).unwrap();
    let t = run_game(&p, &mut s, &GenesisRule { k: 3 }).unwrap();
    assert_eq!(t.actions.len(), 24);
    let adv: f64 = t.final_state.adv_chain().spaces().skip(1).take(3).sum();
    let honest: f64 = t.final_state.honest_chain().spaces().skip(1).take(3).sum();
    assert_eq!((adv, honest), (3.0, 3.0));
    assert_eq!(t.outcome.winner, Winner::Adversary);

    let p = GameParams::new(1.5, 0.1, 2).unwrap();
    let mut s = GenesisAttack::new(&p, 2).unwrap();
    let t = run_game(&p, &mut s, &GenesisRule { k: 2 }).unwrap();
    assert_eq!(t.actions.len(), 8);
    let window: Vec<f64> = t.final_state.adv_chain().spaces().skip(1).take(2).collect();
    assert!(window.iter().all(|&v| approx_eq(v, 2.0 / 1.5)));
    assert_eq!(t.outcome.winner, Winner::Adversary);
}

#[test]
fn universal_pair_beats_weight_and_genesis() {
    for p in grid() {
        let mut rules: Vec<Box<dyn ChainRule>> = vec![Box::new(WeightRule)];
        for k in [1, 2, 5] {
            rules.push(Box::new(GenesisRule { k }));
        }
        for rule in &rules {
            let wins = [Direction::FakeS, Direction::FakeSTilde]
                .into_iter()
                .filter(|&d| universal(&p, d, rule.as_ref()).outcome.winner == Winner::Adversary)
                .count();
            assert!(wins >= 1, "{p:?} {}", rule.spec());
        }
    }
}

#[test]
fn grid_search_beats_weight_at_coarse_point() {
    let p = GameParams::new(2.0, 0.5, 2).unwrap();
    let t = grid_search(&p, &WeightRule, 10)
        .unwrap()
        .expect("a win on the grid");
    assert_eq!(t.outcome.winner, Winner::Adversary);
    assert!(t.outcome.fork_length <= 10);
}

#[test]
fn grid_search_none_below_tent_bound() {
    let p = GameParams::new(2.0, 0.5, 2).unwrap();
    let max_fork = ell_tent_lower(2.0, 0.5, 2).unwrap().ceil() as usize - 1;
    let rule = TentRule { delta: 1.5 };
    assert!(grid_search(&p, &rule, max_fork).unwrap().is_none());
}

#[test]
fn grid_search_budget_error_is_deterministic() {
    let p = GameParams::new(2.0, 0.5, 2).unwrap();
    assert!(tree_size(&p, 40) > NODE_LIMIT);
    let a = search_actions(&p, &TentRule { delta: 1.5 }, 40, 10_000).unwrap_err();
    let b = search_actions(&p, &TentRule { delta: 1.5 }, 40, 10_000).unwrap_err();
    assert_eq!(a, b);
}
