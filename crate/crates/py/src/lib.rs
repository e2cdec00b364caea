//! Python bindings for `satisfaction-core`.
//!
//! ```python
//! import sateq
//! g = sateq.Game.from_tables([2, 2], [[1, 0, 2, 1], [1, 2, 0, 1]], [1, 1], [2, 2])
//! g.enumerate()["se"]        # [(0, 0), (1, 1)]
//! ```

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use satisfaction_core::channel::{self, to_game};
use satisfaction_core::harness::load_game;
use satisfaction_core::sesa::{monte_carlo, run_rng, SesaConfig};
use satisfaction_core::{
    equilibria, ActionProfile, ConstrainedGame, CostModel, EquilibriumReport, Error, LearningRate,
};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyIOError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn tuples(set: &std::collections::BTreeSet<ActionProfile>) -> Vec<Vec<usize>> {
    set.iter().map(|s| s.actions().to_vec()).collect()
}

fn sesa_config(max_steps: u64, tail: u64, learning_rate: Option<f64>) -> SesaConfig {
    SesaConfig {
        max_steps,
        tail,
        learning_rate: learning_rate.map_or(LearningRate::Harmonic, LearningRate::Constant),
    }
}

/// A constrained game together with its effort model.
#[pyclass(frozen, module = "sateq")]
struct Game {
    game: ConstrainedGame,
    cost: CostModel,
}

#[pymethods]
impl Game {
    /// Table game. `tables[k]` lists u_k over profiles in lexicographic
    /// order (player 0 slowest). Costs default to zero.
    #[staticmethod]
    #[pyo3(signature = (action_counts, tables, thresholds, caps, costs=None))]
    fn from_tables(
        action_counts: Vec<usize>,
        tables: Vec<Vec<f64>>,
        thresholds: Vec<f64>,
        caps: Vec<f64>,
        costs: Option<Vec<Vec<f64>>>,
    ) -> PyResult<Self> {
        let game = ConstrainedGame::from_tables(action_counts, tables, thresholds, caps).map_err(to_py)?;
        let cost = match costs {
            Some(c) => CostModel::new(c).map_err(to_py)?,
            None => CostModel::zero(game.action_counts()),
        };
        cost.check_shape(&game).map_err(to_py)?;
        Ok(Game { game, cost })
    }

    /// Parses a JSON game document.
    #[staticmethod]
    fn from_json(document: &str) -> PyResult<Self> {
        let (game, cost) = load_game(document).map_err(to_py)?;
        Ok(Game { game, cost })
    }

    /// Power-control game on a freshly sampled interference channel.
    #[staticmethod]
    #[pyo3(signature = (gamma, seed, snr_db=10.0, levels=32))]
    fn interference_channel(gamma: Vec<f64>, seed: u64, snr_db: f64, levels: usize) -> PyResult<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = channel::sample_channel(&mut rng, gamma.len(), snr_db, levels).map_err(to_py)?;
        let (game, cost) = to_game(&ch, &gamma).map_err(to_py)?;
        Ok(Game { game, cost })
    }

    #[getter]
    fn num_players(&self) -> usize {
        self.game.num_players()
    }

    #[getter]
    fn action_counts(&self) -> Vec<usize> {
        self.game.action_counts().to_vec()
    }

    #[getter]
    fn num_profiles(&self) -> usize {
        self.game.num_profiles()
    }

    #[getter]
    fn thresholds(&self) -> Vec<f64> {
        self.game.thresholds().to_vec()
    }

    #[getter]
    fn caps(&self) -> Vec<f64> {
        self.game.caps().to_vec()
    }

    fn action_values(&self) -> Vec<Vec<f64>> {
        self.game.action_values().to_vec()
    }

    fn utility(&self, k: usize, profile: Vec<usize>) -> PyResult<f64> {
        self.game
            .utility_of(k, &ActionProfile::new(profile))
            .map_err(to_py)
    }

    fn feasible_set(&self, k: usize, others: Vec<usize>) -> PyResult<Vec<usize>> {
        self.game.feasible_set(k, &others).map_err(to_py)
    }

    fn is_satisfied(&self, k: usize, profile: Vec<usize>) -> PyResult<bool> {
        self.game
            .is_satisfied(k, &ActionProfile::new(profile))
            .map_err(to_py)
    }

    fn potential(&self, profile: Vec<usize>) -> PyResult<f64> {
        let s = ActionProfile::new(profile);
        self.game.check_profile(&s).map_err(to_py)?;
        Ok(equilibria::potential_of(&self.cost, &s))
    }

    /// All equilibrium sets as a dict of lists of profiles.
    fn enumerate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = EquilibriumReport::compute(&self.game, &self.cost).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("ne", tuples(&r.ne_set))?;
        d.set_item("gne", tuples(&r.gne_set))?;
        d.set_item("se", tuples(&r.se_set))?;
        d.set_item("ese", tuples(&r.ese_set))?;
        let clipping: Vec<Vec<usize>> = r.clipping.iter().map(|c| c.iter().copied().collect()).collect();
        d.set_item("clipping", clipping)?;
        d.set_item("blocking_clipping", r.blocking_clipping)?;
        Ok(d)
    }

    /// Best-response dynamics: `(profile, converged, iterations)`.
    #[pyo3(signature = (start, max_iters=1000))]
    fn run_brd(&self, start: Vec<usize>, max_iters: usize) -> PyResult<(Vec<usize>, bool, usize)> {
        let out = equilibria::run_brd(&self.game, &ActionProfile::new(start), max_iters).map_err(to_py)?;
        Ok((out.profile.into_inner(), out.converged, out.iterations))
    }

    /// One search run: `(converged_at, profiles, utilities)` per recorded step.
    #[pyo3(signature = (seed, run=0, max_steps=10_000, tail=0, learning_rate=None))]
    #[allow(clippy::type_complexity)]
    fn run_sesa(
        &self,
        seed: u64,
        run: u64,
        max_steps: u64,
        tail: u64,
        learning_rate: Option<f64>,
    ) -> PyResult<(Option<u64>, Vec<Vec<usize>>, Vec<Vec<f64>>)> {
        let cfg = sesa_config(max_steps, tail, learning_rate);
        let trace = satisfaction_core::run_sesa(&self.game, &cfg, &mut run_rng(seed, run)).map_err(to_py)?;
        let profiles = trace.steps.iter().map(|s| s.profile.actions().to_vec()).collect();
        let utilities = trace.steps.into_iter().map(|s| s.utilities).collect();
        Ok((trace.converged_at, profiles, utilities))
    }

    /// Independent runs `0..runs`: list of `(converged_at, terminal_profile)`.
    #[pyo3(signature = (runs, seed, max_steps=10_000, learning_rate=None))]
    fn monte_carlo(
        &self,
        py: Python<'_>,
        runs: u64,
        seed: u64,
        max_steps: u64,
        learning_rate: Option<f64>,
    ) -> PyResult<Vec<(Option<u64>, Vec<usize>)>> {
        let cfg = sesa_config(max_steps, 0, learning_rate);
        let outcomes = py
            .detach(|| monte_carlo(&self.game, &cfg, seed, runs))
            .map_err(to_py)?;
        Ok(outcomes
            .into_iter()
            .map(|o| (o.converged_at, o.terminal.into_inner()))
            .collect())
    }
}

#[pyfunction]
fn power_grid(p_max: f64, levels: usize) -> PyResult<Vec<f64>> {
    Ok(channel::power_grid(p_max, levels)
        .map_err(to_py)?
        .powers()
        .to_vec())
}

#[pyfunction]
fn update_distribution(pi: Vec<f64>, played: usize, b: f64, learning_rate: f64) -> PyResult<Vec<f64>> {
    satisfaction_core::update_distribution(&pi, played, b, learning_rate).map_err(to_py)
}

#[pymodule]
fn sateq(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Game>()?;
    m.add_function(wrap_pyfunction!(power_grid, m)?)?;
    m.add_function(wrap_pyfunction!(update_distribution, m)?)?;
    Ok(())
}
