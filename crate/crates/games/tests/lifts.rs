use queuelay_core::layout::Validation;
use queuelay_games::lifts::{
    copy_nesting_witness, lift_iii_to_ii, lift_iv_to_iii, lift_v_to_iv, lift_vi_to_v, lift_vii_to_vi, play,
    right_placement_witness, PlayOutcome, ReservedTwins,
};
use queuelay_games::rules::structural_candidates;
use queuelay_games::strategy::{five_round_strategy, overload_strategy, RandomCliques, Strategy};
use queuelay_games::{check_transition, initial_layouts, legal_bob_moves, AliceMove, Caps, GameConfig, GameError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn local(state: &queuelay_games::GameState, ell: u32) -> bool {
    state.layout.incident_queues().iter().all(|q| q.len() <= ell as usize)
}

#[test]
fn misplaced_grandchildren_nest_under_reserved_twins() {
    let cfg = GameConfig::new(2, 2, 4).unwrap();
    let mut misplaced = 0;
    for s0 in initial_layouts(&cfg) {
        let first = AliceMove::new(vec![0, 1], 3);
        for bob in legal_bob_moves(&s0, &cfg, &first).unwrap() {
            let s1 = s0.apply(&first, &bob).unwrap();
            let twins = ReservedTwins { parent: vec![0, 1], first: 2, last: 4, kept: vec![3] };
            let second = AliceMove::new(vec![0, 3], 3);
            for cand in structural_candidates(&s1, &cfg, &second).unwrap() {
                let s2 = s1.apply(&second, &cand).unwrap();
                if !local(&s2, 2) {
                    continue;
                }
                for &y in &s2.rounds[1].children {
                    if s2.position(y) < s2.position(4) {
                        misplaced += 1;
                        let w = right_placement_witness(&s2, &twins, y).expect("nesting pair");
                        assert!(w.verify(&s2.layout.order, Some(&s2.layout.assign)));
                    }
                }
            }
        }
    }
    assert!(misplaced > 0);
}

#[test]
fn paired_games_imply_copy_condition() {
    let six = GameConfig::new(2, 2, 6).unwrap();
    let seven = GameConfig::new(2, 2, 7).unwrap();
    let mut witnessed = 0;
    for s0 in initial_layouts(&six) {
        let first = AliceMove::new(vec![0, 1], 1);
        for bob in legal_bob_moves(&s0, &six, &first).unwrap() {
            let s1 = s0.apply(&first, &bob).unwrap();
            for clique in [vec![0, 1], vec![0, 4], vec![1, 4]] {
                let mv = AliceMove::new(clique, 1);
                for reply in legal_bob_moves(&s1, &six, &mv).unwrap() {
                    assert!(check_transition(&s1, &seven, &mv, &reply).unwrap().1.is_none());
                }
                for cand in structural_candidates(&s1, &six, &mv).unwrap() {
                    let (next, v) = check_transition(&s1, &seven, &mv, &cand).unwrap();
                    if let Some(v) = v.filter(|v| v.condition == 7) {
                        let n = next.n() as u32;
                        let found = (0..n)
                            .flat_map(|a| (0..n).map(move |b| (a, b)))
                            .filter(|&(a, b)| next.has_edge(a, b))
                            .flat_map(|(a, b)| next.children_of(a).map(move |x| (a, b, x)))
                            .find_map(|(a, b, x)| copy_nesting_witness(&next, a, b, x));
                        assert!(found.is_some(), "{} {:?} {:?}", v.detail, next.layout.order, next.layout.assign);
                        witnessed += 1;
                    }
                }
            }
        }
    }
    assert!(witnessed > 0);
}

fn seeded_play(strategy: &mut dyn Strategy, cfg: &GameConfig, seed: u64) -> Vec<Result<PlayOutcome, GameError>> {
    initial_layouts(cfg)
        .into_iter()
        .enumerate()
        .map(|(i, init)| {
            let mut s = strategy.box_clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + i as u64);
            play(s.as_mut(), cfg, init, &mut rng, 300).map(|r| r.outcome)
        })
        .collect()
}

#[test]
fn pigeonhole_counters_hold_under_random_replies() {
    let mut replies = 0;
    for (k, ell) in [(2usize, 2u32), (2, 3), (3, 2)] {
        for seed in 0..12u64 {
            let script = RandomCliques { seed, rounds: 3, max_children: 2 };
            let three = lift_iv_to_iii(Box::new(script.clone()), k, ell);
            let stats3 = three.stats();
            let two = lift_iii_to_ii(Box::new(three), k, ell);
            let stats2 = two.stats();
            let cfg = GameConfig::new(k, ell, 2)
                .unwrap()
                .with_caps(Caps { max_vertices: 400, max_rounds: 4 });
            for out in seeded_play(&mut two.clone(), &cfg, seed) {
                out.expect("no reduction gap");
            }
            let s3 = stats3.lock().unwrap();
            let s2 = stats2.lock().unwrap();
            assert_eq!(s3.class_overflows, 0);
            assert!(s3.max_classes <= (ell as usize).pow(k as u32));
            assert_eq!(s2.pigeonhole_failures + s3.pigeonhole_failures, 0);
            assert!(s2.min_slack.unwrap_or(0) >= 0);
            replies += s2.replies;
        }
    }
    assert!(replies >= 100, "{replies}");
}

#[test]
fn lifted_five_round_never_hits_a_gap() {
    let cfg = GameConfig::new(2, 2, 4).unwrap().with_caps(Caps { max_vertices: 100, max_rounds: 12 });
    let mut lifted = lift_v_to_iv(Box::new(five_round_strategy()), 2, 2);
    for out in seeded_play(&mut lifted, &cfg, 7) {
        let out = out.expect("no reduction gap");
        assert!(matches!(out, PlayOutcome::BobStuck | PlayOutcome::SamplerGaveUp), "{out:?}");
    }
}

#[test]
fn lifted_overload_plays_level_six() {
    let cfg = GameConfig::new(2, 2, 6).unwrap();
    let mut lifted = lift_vii_to_vi(Box::new(overload_strategy(2, 2)), 2, 2);
    for out in seeded_play(&mut lifted, &cfg, 3) {
        let out = out.expect("no reduction gap");
        assert!(matches!(out, PlayOutcome::BobStuck | PlayOutcome::SamplerGaveUp), "{out:?}");
    }
}

#[test]
fn clone_lift_pairs_identical_clones() {
    let cfg = GameConfig::new(2, 2, 5).unwrap().with_caps(Caps { max_vertices: 64, max_rounds: 40 });
    let inner = lift_vii_to_vi(Box::new(overload_strategy(2, 2)), 2, 2);
    let lifted = lift_vi_to_v(Box::new(inner), 2, 2);
    let stats = lifted.stats();
    for out in seeded_play(&mut lifted.clone(), &cfg, 11) {
        let out = out.expect("no reduction gap");
        eprintln!("{out:?}");
    }
    let s = stats.lock().unwrap();
    eprintln!("{s:?}");
    assert!(s.clones >= 2);
}

#[test]
fn mismatched_config_is_rejected() {
    let lifted = lift_v_to_iv(Box::new(five_round_strategy()), 2, 2);
    let cfg = GameConfig::new(2, 2, 3).unwrap();
    assert!(matches!(lifted.check_config(&cfg), Err(GameError::ConfigMismatch(_))));
    let _ = Validation::Ok;
}
