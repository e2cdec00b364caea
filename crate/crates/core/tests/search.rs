use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use satisfaction_core::game::fixtures::{g1, g2};
use satisfaction_core::sesa::{monte_carlo, run_rng};
use satisfaction_core::{
    enumerate_se, find_clipping_actions, has_blocking_clipping, run_sesa, sesa_step, ActionProfile,
    ConstrainedGame, LearningRate, SesaConfig, SesaState,
};

fn config(max_steps: u64) -> SesaConfig {
    SesaConfig {
        max_steps,
        ..SesaConfig::default()
    }
}

#[test]
fn coordination_fixture_converges_fast() {
    let game = g1();
    let se = enumerate_se(&game);
    let outcomes = monte_carlo(&game, &config(500), 2024, 1000).unwrap();
    let converged: Vec<_> = outcomes.iter().filter(|o| o.converged_at.is_some()).collect();
    assert!(converged.len() >= 990, "{} of 1000 converged", converged.len());
    assert!(converged.iter().all(|o| se.contains(&o.terminal)));
}

#[test]
fn blocked_fixture_gets_stuck_on_clipping_action() {
    let game = g2();
    assert!(has_blocking_clipping(&game));
    let outcomes = monte_carlo(&game, &config(10_000), 99, 1000).unwrap();
    let stuck: Vec<_> = outcomes.iter().filter(|o| o.converged_at.is_none()).collect();
    assert!(!stuck.is_empty());
    assert!(stuck.iter().all(|o| o.terminal[0] == 1 && o.steps == 10_000));
}

#[test]
fn clipping_action_is_never_left() {
    let game = g2();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let uniform = vec![vec![1.0 / 3.0; 3], vec![0.5; 2]];
    for second in 0..2 {
        let mut state =
            SesaState::from_parts(&game, 0, uniform.clone(), ActionProfile::new(vec![1, second])).unwrap();
        for _ in 0..500 {
            state = sesa_step(&game, &state, LearningRate::Harmonic, &mut rng);
            assert_eq!(state.current_actions[0], 1);
            assert!(!state.satisfied[1]);
        }
    }
}

#[test]
fn trace_is_constant_after_convergence() {
    let game = g1();
    let cfg = SesaConfig {
        max_steps: 1000,
        tail: 25,
        learning_rate: LearningRate::Harmonic,
    };
    for run in 0..50 {
        let trace = run_sesa(&game, &cfg, &mut run_rng(8, run)).unwrap();
        let t = trace.converged_at.expect("fixture converges") as usize;
        assert_eq!(trace.steps.len(), t + 26);
        let settled = &trace.steps[t];
        for step in &trace.steps[t..] {
            assert!(step.satisfied.iter().all(|&s| s));
            assert_eq!(step.profile, settled.profile);
        }
        for step in &trace.steps[..t] {
            assert!(!step.satisfied.iter().all(|&s| s));
        }
    }
}

#[test]
fn constant_rate_runs_are_reproducible() {
    let game = g1();
    let cfg = SesaConfig {
        max_steps: 200,
        tail: 0,
        learning_rate: LearningRate::Constant(0.3),
    };
    let a = run_sesa(&game, &cfg, &mut run_rng(3, 4)).unwrap();
    let b = run_sesa(&game, &cfg, &mut run_rng(3, 4)).unwrap();
    assert_eq!(a, b);
    let parallel = monte_carlo(&game, &cfg, 3, 8).unwrap();
    assert_eq!(parallel[4].converged_at, a.converged_at);
}

/// Three binary players. Players 1 and 2 are satisfied iff they match,
/// whatever player 3 does; player 3 is satisfied only at `(1, 1, *)`.
fn coalition_trap() -> ConstrainedGame {
    ConstrainedGame::from_fn(vec![2, 2, 2], vec![1.0; 3], vec![1.0; 3], |k, s| match k {
        0 | 1 => f64::from(u8::from(s[0] == s[1])),
        _ => f64::from(u8::from(s[0] == 1 && s[1] == 1)),
    })
    .unwrap()
}

#[test]
fn clipping_free_game_can_still_deadlock() {
    let game = coalition_trap();
    assert!(find_clipping_actions(&game).iter().all(|c| c.is_empty()));
    assert!(!enumerate_se(&game).is_empty());

    // players 1 and 2 agree on 0 and freeze; player 3 can never be satisfied
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut state =
        SesaState::from_parts(&game, 0, vec![vec![0.5; 2]; 3], ActionProfile::new(vec![0, 0, 0])).unwrap();
    for _ in 0..1000 {
        state = sesa_step(&game, &state, LearningRate::Harmonic, &mut rng);
        assert_eq!(&state.current_actions[..2], &[0, 0]);
        assert!(!state.all_satisfied());
    }

    let outcomes = monte_carlo(&game, &config(2000), 1, 400).unwrap();
    let stuck = outcomes.iter().filter(|o| o.converged_at.is_none()).count();
    assert!(stuck > 0);
    assert!(outcomes
        .iter()
        .filter(|o| o.converged_at.is_none())
        .all(|o| o.terminal[0] == 0 && o.terminal[1] == 0));
}
