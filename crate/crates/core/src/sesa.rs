//! Satisfaction equilibrium search.
//!
//! Each player only sees its own utility. A satisfied player keeps its
//! action and distribution. An unsatisfied one reinforces the action it just
//! played by `λ·b`, where `b = (M_k + û_k - Γ_k) / (2 M_k)`, and then
//! resamples from the updated distribution. Once every player is satisfied
//! nobody moves again, so the first all-satisfied step is the convergence
//! time.
//!
//! Within a step the utility observed at the end of the previous step both
//! gates the update and feeds `b`; the reinforced action is the one that
//! produced that observation.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{ActionProfile, ConstrainedGame};

const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearningRate {
    /// `λ_t = 1 / (t + 1)`.
    #[default]
    Harmonic,
    Constant(f64),
}

impl LearningRate {
    pub fn at(&self, t: u64) -> f64 {
        match *self {
            LearningRate::Harmonic => 1.0 / (t as f64 + 1.0),
            LearningRate::Constant(l) => l,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            LearningRate::Constant(l) if !(0.0..=1.0).contains(&l) => {
                Err(Error::invalid(format!("learning rate {l} must lie in [0, 1]")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SesaConfig {
    pub max_steps: u64,
    /// Extra steps recorded after convergence.
    pub tail: u64,
    pub learning_rate: LearningRate,
}

impl Default for SesaConfig {
    fn default() -> Self {
        SesaConfig {
            max_steps: 10_000,
            tail: 0,
            learning_rate: LearningRate::Harmonic,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SesaState {
    pub t: u64,
    pub distributions: Vec<Vec<f64>>,
    pub current_actions: ActionProfile,
    pub last_utilities: Vec<f64>,
    pub satisfied: Vec<bool>,
}

impl SesaState {
    pub fn all_satisfied(&self) -> bool {
        self.satisfied.iter().all(|&s| s)
    }

    /// State at step `t` playing `current_actions`; utilities and
    /// satisfaction flags are read off `game`.
    pub fn from_parts(
        game: &ConstrainedGame,
        t: u64,
        distributions: Vec<Vec<f64>>,
        current_actions: ActionProfile,
    ) -> Result<Self> {
        game.check_profile(&current_actions)?;
        if distributions.len() != game.num_players() {
            return Err(Error::invalid(format!(
                "{} distributions for {} players",
                distributions.len(),
                game.num_players()
            )));
        }
        for (k, pi) in distributions.iter().enumerate() {
            check_distribution(k, pi, game.action_counts()[k])?;
        }
        let k = game.num_players();
        let mut state = SesaState {
            t,
            distributions,
            current_actions,
            last_utilities: vec![0.0; k],
            satisfied: vec![false; k],
        };
        state.observe(game);
        Ok(state)
    }

    fn observe(&mut self, game: &ConstrainedGame) {
        for k in 0..game.num_players() {
            let u = game.utility_raw(k, &self.current_actions);
            self.last_utilities[k] = u;
            self.satisfied[k] = u >= game.thresholds()[k];
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub t: u64,
    pub profile: ActionProfile,
    pub utilities: Vec<f64>,
    pub satisfied: Vec<bool>,
}

impl From<&SesaState> for TraceStep {
    fn from(s: &SesaState) -> Self {
        TraceStep {
            t: s.t,
            profile: s.current_actions.clone(),
            utilities: s.last_utilities.clone(),
            satisfied: s.satisfied.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SesaTrace {
    pub steps: Vec<TraceStep>,
    pub converged_at: Option<u64>,
}

/// Summary of one run without the per-step record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SesaOutcome {
    pub converged_at: Option<u64>,
    pub terminal: ActionProfile,
    pub steps: u64,
}

fn check_distribution(k: usize, pi: &[f64], n: usize) -> Result<()> {
    if pi.len() != n {
        return Err(Error::invalid(format!(
            "distribution of player {k} has {} entries, expected {n}",
            pi.len()
        )));
    }
    if let Some(p) = pi.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(Error::invalid(format!(
            "distribution of player {k} has invalid entry {p}"
        )));
    }
    let total: f64 = pi.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::invalid(format!(
            "distribution of player {k} sums to {total}"
        )));
    }
    Ok(())
}

fn sample_action<R: Rng + ?Sized>(pi: &[f64], rng: &mut R) -> usize {
    WeightedIndex::new(pi)
        .expect("distribution is a valid probability vector")
        .sample(rng)
}

/// Draws the initial profile from `initial` (uniform when `None`) and
/// records the utilities it produces.
pub fn sesa_init<R: Rng + ?Sized>(
    game: &ConstrainedGame,
    initial: Option<Vec<Vec<f64>>>,
    rng: &mut R,
) -> Result<SesaState> {
    for k in 0..game.num_players() {
        let (g, m) = (game.thresholds()[k], game.caps()[k]);
        if g > m {
            return Err(Error::invalid(format!(
                "threshold {g} of player {k} exceeds its utility cap {m}"
            )));
        }
    }
    let distributions = match initial {
        Some(d) => {
            if d.len() != game.num_players() {
                return Err(Error::invalid(format!(
                    "{} initial distributions for {} players",
                    d.len(),
                    game.num_players()
                )));
            }
            // validated before sampling
            for (k, pi) in d.iter().enumerate() {
                check_distribution(k, pi, game.action_counts()[k])?;
            }
            d
        }
        None => game
            .action_counts()
            .iter()
            .map(|&n| vec![1.0 / n as f64; n])
            .collect(),
    };
    let actions = distributions.iter().map(|pi| sample_action(pi, rng)).collect();
    SesaState::from_parts(game, 0, distributions, ActionProfile::new(actions))
}

/// `b = (M_k + û - Γ_k) / (2 M_k)`, in `[0, 1]` when `0 <= û, Γ_k <= M_k`.
pub fn normalized_gain(game: &ConstrainedGame, k: usize, u_hat: f64) -> Result<f64> {
    game.check_player(k)?;
    let (m, g) = (game.caps()[k], game.thresholds()[k]);
    if m <= 0.0 {
        return Err(Error::invalid(format!("utility cap of player {k} must be > 0")));
    }
    if !(0.0..=m).contains(&u_hat) {
        return Err(Error::invalid(format!(
            "observed utility {u_hat} outside [0, {m}]"
        )));
    }
    if !(0.0..=m).contains(&g) {
        return Err(Error::invalid(format!("threshold {g} outside [0, {m}]")));
    }
    Ok(gain_formula(m, g, u_hat))
}

fn gain_formula(m: f64, g: f64, u_hat: f64) -> f64 {
    (m + u_hat - g) / (2.0 * m)
}

/// Moves `played` toward probability one by `λ·b`; every other entry
/// shrinks by the factor `1 - λ·b`.
pub fn update_distribution(pi: &[f64], played: usize, b: f64, lambda: f64) -> Result<Vec<f64>> {
    if played >= pi.len() {
        return Err(Error::invalid(format!(
            "played action {played} out of range for {} actions",
            pi.len()
        )));
    }
    if !(0.0..=1.0).contains(&b) || !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!(
            "b = {b} and λ = {lambda} must lie in [0, 1]"
        )));
    }
    Ok(reinforce(pi, played, lambda * b))
}

fn reinforce(pi: &[f64], played: usize, step: f64) -> Vec<f64> {
    pi.iter()
        .enumerate()
        .map(|(n, &p)| {
            let hit = if n == played { 1.0 } else { 0.0 };
            p + step * (hit - p)
        })
        .collect()
}

/// Advances every player by one step; satisfied players are left untouched.
///
/// Unsatisfied players draw from `rng` in player order.
pub fn sesa_step<R: Rng + ?Sized>(
    game: &ConstrainedGame,
    state: &SesaState,
    rate: LearningRate,
    rng: &mut R,
) -> SesaState {
    let mut next = state.clone();
    next.t = state.t + 1;
    let lambda = rate.at(next.t);
    for k in 0..game.num_players() {
        if state.satisfied[k] {
            continue;
        }
        let b = gain_formula(game.caps()[k], game.thresholds()[k], state.last_utilities[k]);
        let played = state.current_actions[k];
        let pi = reinforce(&state.distributions[k], played, lambda * b);
        let action = sample_action(&pi, rng);
        next.distributions[k] = pi;
        next.current_actions = next.current_actions.with_action(k, action);
    }
    next.observe(game);
    next
}

/// Runs the search from a uniform start, handing every recorded state and
/// the convergence step seen so far to `record`. Returns the final state.
pub fn run_sesa_with<R, F>(
    game: &ConstrainedGame,
    config: &SesaConfig,
    rng: &mut R,
    mut record: F,
) -> Result<SesaState>
where
    R: Rng + ?Sized,
    F: FnMut(&SesaState, Option<u64>),
{
    if config.max_steps == 0 {
        return Err(Error::invalid("max_steps must be at least 1"));
    }
    config.learning_rate.validate()?;
    let mut state = sesa_init(game, None, rng)?;
    let mut converged_at = state.all_satisfied().then_some(0);
    record(&state, converged_at);
    while state.t < config.max_steps {
        if let Some(t) = converged_at {
            if state.t >= t + config.tail {
                break;
            }
        }
        state = sesa_step(game, &state, config.learning_rate, rng);
        if converged_at.is_none() && state.all_satisfied() {
            converged_at = Some(state.t);
        }
        record(&state, converged_at);
    }
    Ok(state)
}

/// Runs the search from a uniform start and records every step.
pub fn run_sesa<R: Rng + ?Sized>(
    game: &ConstrainedGame,
    config: &SesaConfig,
    rng: &mut R,
) -> Result<SesaTrace> {
    let mut steps = Vec::new();
    let mut converged_at = None;
    run_sesa_with(game, config, rng, |s, c| {
        steps.push(TraceStep::from(s));
        converged_at = c;
    })?;
    Ok(SesaTrace { steps, converged_at })
}

/// Same dynamics as [`run_sesa`] without keeping the trace.
pub fn simulate<R: Rng + ?Sized>(
    game: &ConstrainedGame,
    config: &SesaConfig,
    rng: &mut R,
) -> Result<SesaOutcome> {
    let mut converged_at = None;
    let last = run_sesa_with(game, config, rng, |_, c| converged_at = c)?;
    Ok(SesaOutcome {
        converged_at,
        terminal: last.current_actions,
        steps: last.t,
    })
}

/// Random stream of run `run_index` under `base_seed`.
pub fn run_rng(base_seed: u64, run_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(run_index);
    rng
}

/// Independent runs `0..runs`, each on its own stream. Output is ordered by
/// run index and does not depend on thread scheduling.
pub fn monte_carlo(
    game: &ConstrainedGame,
    config: &SesaConfig,
    base_seed: u64,
    runs: u64,
) -> Result<Vec<SesaOutcome>> {
    (0..runs)
        .into_par_iter()
        .map(|i| simulate(game, config, &mut run_rng(base_seed, i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::{g1, g2};

    #[test]
    fn gain_values() {
        let g = g1();
        assert_eq!(normalized_gain(&g, 0, 1.0).unwrap(), 0.5);
        let g0 = g.with_thresholds(vec![0.0, 0.0]).unwrap();
        assert_eq!(normalized_gain(&g0, 0, 2.0).unwrap(), 1.0);
        assert_eq!(normalized_gain(&g0, 1, 0.0).unwrap(), 0.5);
        assert!(normalized_gain(&g, 0, 2.5).is_err());
        assert!(normalized_gain(&g, 0, -0.1).is_err());
        assert!(normalized_gain(&g, 4, 1.0).is_err());
        let over = g.with_thresholds(vec![3.0, 1.0]).unwrap();
        assert!(normalized_gain(&over, 0, 1.0).is_err());
    }

    #[test]
    fn update_examples() {
        assert_eq!(
            update_distribution(&[0.5, 0.5], 0, 1.0, 1.0).unwrap(),
            vec![1.0, 0.0]
        );
        assert_eq!(
            update_distribution(&[0.5, 0.5], 0, 0.5, 0.5).unwrap(),
            vec![0.625, 0.375]
        );
        let pi = [0.2, 0.3, 0.5];
        assert_eq!(update_distribution(&pi, 1, 0.0, 0.7).unwrap(), pi.to_vec());
        assert_eq!(update_distribution(&pi, 1, 0.7, 0.0).unwrap(), pi.to_vec());
        assert!(update_distribution(&pi, 3, 0.5, 0.5).is_err());
        assert!(update_distribution(&pi, 0, 1.5, 0.5).is_err());
    }

    #[test]
    fn init_uniform_and_validation() {
        let g = ConstrainedGame::from_fn(vec![4, 2], vec![0.0, 0.0], vec![1.0, 1.0], |_, _| 0.5).unwrap();
        let s = sesa_init(&g, None, &mut run_rng(1, 0)).unwrap();
        assert_eq!(s.distributions[0], vec![0.25; 4]);
        assert_eq!(s.t, 0);
        assert!(sesa_init(
            &g,
            Some(vec![vec![0.5, 0.6, 0.0, 0.0], vec![0.5, 0.5]]),
            &mut run_rng(1, 0)
        )
        .is_err());
        assert!(sesa_init(
            &g,
            Some(vec![vec![1.5, -0.5, 0.0, 0.0], vec![0.5, 0.5]]),
            &mut run_rng(1, 0)
        )
        .is_err());
        assert!(sesa_init(&g, Some(vec![vec![1.0]]), &mut run_rng(1, 0)).is_err());
    }

    #[test]
    fn init_point_mass_and_determinism() {
        let g = g2();
        for seed in 0..20 {
            let s = sesa_init(
                &g,
                Some(vec![vec![0.0, 0.0, 1.0], vec![1.0, 0.0]]),
                &mut run_rng(seed, 0),
            )
            .unwrap();
            assert_eq!(s.current_actions, ActionProfile::new(vec![2, 0]));
            assert!(s.all_satisfied());
        }
        let a = sesa_init(&g, None, &mut run_rng(3, 4)).unwrap();
        let b = sesa_init(&g, None, &mut run_rng(3, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn satisfied_state_is_absorbing() {
        let g = g1();
        let s = sesa_init(&g, Some(vec![vec![1.0, 0.0], vec![1.0, 0.0]]), &mut run_rng(0, 0)).unwrap();
        assert!(s.all_satisfied());
        let next = sesa_step(&g, &s, LearningRate::Harmonic, &mut run_rng(0, 1));
        assert_eq!(next.t, 1);
        assert_eq!(SesaState { t: 0, ..next }, s);
    }

    #[test]
    fn g2_clipping_freezes_player_one() {
        let g = g2();
        let mut s = sesa_init(
            &g,
            Some(vec![vec![0.0, 1.0, 0.0], vec![0.5, 0.5]]),
            &mut run_rng(0, 0),
        )
        .unwrap();
        let mut rng = run_rng(0, 1);
        for _ in 0..200 {
            s = sesa_step(&g, &s, LearningRate::Harmonic, &mut rng);
            assert_eq!(s.current_actions[0], 1);
            assert!(!s.satisfied[1]);
        }
    }

    #[test]
    fn forced_sample_satisfies() {
        // player 0 unsatisfied at action 0, but all mass already on action 1
        let g = g1();
        let s = SesaState {
            t: 3,
            distributions: vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            current_actions: ActionProfile::new(vec![0, 1]),
            last_utilities: vec![0.0, 2.0],
            satisfied: vec![false, true],
        };
        let next = sesa_step(&g, &s, LearningRate::Harmonic, &mut run_rng(0, 0));
        assert_eq!(next.current_actions, ActionProfile::new(vec![1, 1]));
        assert!(next.satisfied[0]);
    }

    #[test]
    fn run_vacuous_converges_at_zero() {
        let g = g2().with_thresholds(vec![0.0, 0.0]).unwrap();
        let cfg = SesaConfig {
            max_steps: 50,
            ..Default::default()
        };
        let trace = run_sesa(&g, &cfg, &mut run_rng(11, 0)).unwrap();
        assert_eq!(trace.converged_at, Some(0));
        assert_eq!(trace.steps.len(), 1);
        let cfg = SesaConfig { tail: 5, ..cfg };
        let trace = run_sesa(&g, &cfg, &mut run_rng(11, 0)).unwrap();
        assert_eq!(trace.steps.len(), 6);
        assert!(trace.steps.iter().all(|s| s.profile == trace.steps[0].profile));
    }

    #[test]
    fn run_rejects_bad_config() {
        let cfg = SesaConfig {
            max_steps: 0,
            ..Default::default()
        };
        assert!(run_sesa(&g1(), &cfg, &mut run_rng(0, 0)).is_err());
        let cfg = SesaConfig {
            learning_rate: LearningRate::Constant(2.0),
            ..Default::default()
        };
        assert!(run_sesa(&g1(), &cfg, &mut run_rng(0, 0)).is_err());
    }

    #[test]
    fn simulate_matches_trace() {
        let g = g1();
        let cfg = SesaConfig {
            max_steps: 500,
            ..Default::default()
        };
        for i in 0..20 {
            let trace = run_sesa(&g, &cfg, &mut run_rng(5, i)).unwrap();
            let out = simulate(&g, &cfg, &mut run_rng(5, i)).unwrap();
            assert_eq!(out.converged_at, trace.converged_at);
            assert_eq!(&out.terminal, &trace.steps.last().unwrap().profile);
        }
    }

    #[test]
    fn streams_differ_per_run() {
        let mut a = run_rng(1, 0);
        let mut b = run_rng(1, 1);
        assert_ne!(a.random::<u64>(), b.random::<u64>());
    }
}
