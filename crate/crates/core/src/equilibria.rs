//! Exact equilibrium enumeration over the full profile space.
//!
//! Every enumerator scans all `∏|S_k|` profiles against a dense utility
//! table, so results are exact and need no tolerance.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{ActionProfile, ConstrainedGame};

/// Per-player effort `c_k : S_k -> [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct CostModel {
    costs: Vec<Vec<f64>>,
}

impl CostModel {
    pub fn new(costs: Vec<Vec<f64>>) -> Result<Self> {
        for (k, row) in costs.iter().enumerate() {
            for (a, &c) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&c) {
                    return Err(Error::invalid(format!(
                        "cost of player {k} action {a} is {c}, outside [0, 1]"
                    )));
                }
            }
        }
        Ok(CostModel { costs })
    }

    /// Same cost for every action of every player.
    pub fn uniform(action_counts: &[usize], value: f64) -> Result<Self> {
        Self::new(action_counts.iter().map(|&n| vec![value; n]).collect())
    }

    pub fn zero(action_counts: &[usize]) -> Self {
        CostModel {
            costs: action_counts.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn cost(&self, k: usize, action: usize) -> f64 {
        self.costs[k][action]
    }

    pub fn costs(&self) -> &[Vec<f64>] {
        &self.costs
    }

    /// Multiplies every cost by `factor` in `(0, 1]`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor <= 1.0) {
            return Err(Error::invalid(format!("scale factor {factor} not in (0, 1]")));
        }
        Ok(CostModel {
            costs: self
                .costs
                .iter()
                .map(|row| row.iter().map(|c| c * factor).collect())
                .collect(),
        })
    }

    /// Checks that the model covers exactly the game's action sets.
    pub fn check_shape(&self, game: &ConstrainedGame) -> Result<()> {
        let matches = self.costs.len() == game.num_players()
            && self
                .costs
                .iter()
                .zip(game.action_counts())
                .all(|(row, &n)| row.len() == n);
        if !matches {
            return Err(Error::invalid("cost model does not match the game's action sets"));
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<f64>>> for CostModel {
    type Error = Error;

    fn try_from(costs: Vec<Vec<f64>>) -> Result<Self> {
        CostModel::new(costs)
    }
}

impl From<CostModel> for Vec<Vec<f64>> {
    fn from(model: CostModel) -> Self {
        model.costs
    }
}

/// All four equilibrium sets plus the clipping analysis of one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub ne_set: BTreeSet<ActionProfile>,
    pub gne_set: BTreeSet<ActionProfile>,
    pub se_set: BTreeSet<ActionProfile>,
    pub ese_set: BTreeSet<ActionProfile>,
    pub clipping: Vec<BTreeSet<usize>>,
    pub blocking_clipping: bool,
}

impl EquilibriumReport {
    pub fn compute(game: &ConstrainedGame, cost: &CostModel) -> Result<Self> {
        cost.check_shape(game)?;
        let scan = Scan::new(game);
        let clipping = scan.clipping();
        Ok(EquilibriumReport {
            ne_set: scan.ne(),
            gne_set: scan.gne(),
            se_set: scan.se(),
            ese_set: scan.ese(cost),
            blocking_clipping: scan.blocking(&clipping),
            clipping,
        })
    }
}

/// Dense utilities and satisfaction flags, indexed `[profile * K + k]`.
struct Scan<'g> {
    game: &'g ConstrainedGame,
    k: usize,
    utilities: Vec<f64>,
    satisfied: Vec<bool>,
}

impl<'g> Scan<'g> {
    fn new(game: &'g ConstrainedGame) -> Self {
        let k = game.num_players();
        let utilities = game.utility_table().into_owned();
        let thresholds = game.thresholds();
        let satisfied = utilities
            .iter()
            .enumerate()
            .map(|(i, &u)| u >= thresholds[i % k])
            .collect();
        Scan {
            game,
            k,
            utilities,
            satisfied,
        }
    }

    fn u(&self, p: usize, player: usize) -> f64 {
        self.utilities[p * self.k + player]
    }

    fn sat(&self, p: usize, player: usize) -> bool {
        self.satisfied[p * self.k + player]
    }

    /// Own action of `player` at profile `p` and the indices of all its
    /// unilateral deviations (including `p` itself).
    fn deviations(&self, p: usize, player: usize) -> (usize, impl Iterator<Item = usize>) {
        let stride = self.game.strides()[player];
        let n = self.game.action_counts()[player];
        let own = (p / stride) % n;
        let base = p - own * stride;
        (own, (0..n).map(move |a| base + a * stride))
    }

    fn collect(&self, keep: impl Fn(usize) -> bool) -> BTreeSet<ActionProfile> {
        (0..self.game.num_profiles())
            .filter(|&p| keep(p))
            .map(|p| self.game.profile_at(p))
            .collect()
    }

    fn all_satisfied(&self, p: usize) -> bool {
        (0..self.k).all(|player| self.sat(p, player))
    }

    fn ne(&self) -> BTreeSet<ActionProfile> {
        self.collect(|p| {
            (0..self.k).all(|player| {
                let here = self.u(p, player);
                let (_, devs) = self.deviations(p, player);
                devs.into_iter().all(|q| here >= self.u(q, player))
            })
        })
    }

    fn gne(&self) -> BTreeSet<ActionProfile> {
        self.constrained_optima(|p, player| self.u(p, player))
    }

    /// GNE with respect to an arbitrary per-player objective, under the
    /// game's own feasible sets.
    fn constrained_optima(&self, objective: impl Fn(usize, usize) -> f64) -> BTreeSet<ActionProfile> {
        self.collect(|p| {
            self.all_satisfied(p)
                && (0..self.k).all(|player| {
                    let here = objective(p, player);
                    let (_, devs) = self.deviations(p, player);
                    devs.into_iter()
                        .filter(|&q| self.sat(q, player))
                        .all(|q| here >= objective(q, player))
                })
        })
    }

    fn se(&self) -> BTreeSet<ActionProfile> {
        self.collect(|p| self.all_satisfied(p))
    }

    fn ese(&self, cost: &CostModel) -> BTreeSet<ActionProfile> {
        self.collect(|p| {
            self.all_satisfied(p)
                && (0..self.k).all(|player| {
                    let (own, devs) = self.deviations(p, player);
                    let stride = self.game.strides()[player];
                    let n = self.game.action_counts()[player];
                    let cheapest = devs
                        .filter(|&q| self.sat(q, player))
                        .map(|q| cost.cost(player, (q / stride) % n))
                        .fold(f64::INFINITY, f64::min);
                    cost.cost(player, own) == cheapest
                })
        })
    }

    fn clipping(&self) -> Vec<BTreeSet<usize>> {
        let counts = self.game.action_counts();
        let strides = self.game.strides();
        (0..self.k)
            .map(|player| {
                let mut clip = vec![true; counts[player]];
                for p in 0..self.game.num_profiles() {
                    if !self.sat(p, player) {
                        clip[(p / strides[player]) % counts[player]] = false;
                    }
                }
                clip.iter()
                    .enumerate()
                    .filter_map(|(a, &c)| c.then_some(a))
                    .collect()
            })
            .collect()
    }

    fn blocking(&self, clipping: &[BTreeSet<usize>]) -> bool {
        let counts = self.game.action_counts();
        let strides = self.game.strides();
        clipping.iter().enumerate().any(|(k, actions)| {
            actions.iter().any(|&a| {
                (0..self.k).filter(|&j| j != k).any(|j| {
                    // profiles with s_k = a sweep every (s_j, s_{-{j,k}}), so
                    // f_j is empty everywhere iff j is never satisfied there
                    (0..self.game.num_profiles())
                        .filter(|&p| (p / strides[k]) % counts[k] == a)
                        .all(|p| !self.sat(p, j))
                })
            })
        })
    }
}

/// Pure Nash equilibria.
pub fn enumerate_ne(game: &ConstrainedGame) -> BTreeSet<ActionProfile> {
    Scan::new(game).ne()
}

/// Generalized Nash equilibria under the threshold feasible sets.
pub fn enumerate_gne(game: &ConstrainedGame) -> BTreeSet<ActionProfile> {
    Scan::new(game).gne()
}

/// Profiles where every player is satisfied.
pub fn enumerate_se(game: &ConstrainedGame) -> BTreeSet<ActionProfile> {
    Scan::new(game).se()
}

/// Satisfaction equilibria where each player plays a cheapest feasible
/// action. Cost ties are all kept.
pub fn enumerate_ese(game: &ConstrainedGame, cost: &CostModel) -> BTreeSet<ActionProfile> {
    Scan::new(game).ese(cost)
}

/// GNE of the auxiliary game in which every player maximizes `-c_k` over
/// the same feasible sets as `game`.
pub fn enumerate_cost_gne(game: &ConstrainedGame, cost: &CostModel) -> BTreeSet<ActionProfile> {
    let scan = Scan::new(game);
    let strides = game.strides();
    let counts = game.action_counts();
    scan.constrained_optima(|p, player| -cost.cost(player, (p / strides[player]) % counts[player]))
}

/// `φ(s) = Σ_k c_k(s_k)`.
pub fn potential_of(cost: &CostModel, s: &ActionProfile) -> f64 {
    s.iter().enumerate().map(|(k, &a)| cost.cost(k, a)).sum()
}

/// Checks `c_k(a) - c_k(a') == φ(a, s_{-k}) - φ(a', s_{-k})` exactly for
/// every player, every `s_{-k}` and every pair of feasible actions.
pub fn verify_potential_identity<F>(game: &ConstrainedGame, cost: &CostModel, phi: F) -> bool
where
    F: Fn(&ActionProfile) -> f64,
{
    let scan = Scan::new(game);
    for p in 0..game.num_profiles() {
        for k in 0..game.num_players() {
            let (own, _) = scan.deviations(p, k);
            // visit each s_{-k} once, from its action-0 representative
            if own != 0 {
                continue;
            }
            let base = game.profile_at(p);
            let feasible: Vec<(usize, f64)> = (0..game.action_counts()[k])
                .filter(|&a| scan.sat(p + a * game.strides()[k], k))
                .map(|a| (a, phi(&base.with_action(k, a))))
                .collect();
            for &(a, phi_a) in &feasible {
                for &(b, phi_b) in &feasible {
                    if cost.cost(k, a) - cost.cost(k, b) != phi_a - phi_b {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Actions that satisfy their player against every opponent profile.
pub fn find_clipping_actions(game: &ConstrainedGame) -> Vec<BTreeSet<usize>> {
    Scan::new(game).clipping()
}

/// True iff some player's clipping action leaves another player with an
/// empty feasible set whatever the remaining players do.
pub fn has_blocking_clipping(game: &ConstrainedGame) -> bool {
    let scan = Scan::new(game);
    let clipping = scan.clipping();
    scan.blocking(&clipping)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrdOutcome {
    pub profile: ActionProfile,
    pub converged: bool,
    pub iterations: usize,
}

/// Round-robin best-response dynamics.
///
/// Each player in turn moves to a utility maximizer over its feasible set,
/// or over its whole action set when nothing is feasible. A player already
/// at a maximizer stays put; otherwise the lowest maximizing index wins.
/// Stops after the first round without a change or after `max_iters`
/// rounds.
pub fn run_brd(game: &ConstrainedGame, start: &ActionProfile, max_iters: usize) -> Result<BrdOutcome> {
    game.check_profile(start)?;
    if max_iters == 0 {
        return Err(Error::invalid("max_iters must be at least 1"));
    }
    let scan = Scan::new(game);
    let mut p = game.profile_index(start);
    for round in 1..=max_iters {
        let mut changed = false;
        for k in 0..game.num_players() {
            let devs: Vec<usize> = scan.deviations(p, k).1.collect();
            let feasible: Vec<usize> = devs.iter().copied().filter(|&q| scan.sat(q, k)).collect();
            let domain = if feasible.is_empty() { &devs } else { &feasible };
            let best = domain
                .iter()
                .map(|&q| scan.u(q, k))
                .fold(f64::NEG_INFINITY, f64::max);
            let current_is_best = domain.contains(&p) && scan.u(p, k) == best;
            if !current_is_best {
                let q = *domain
                    .iter()
                    .find(|&&q| scan.u(q, k) == best)
                    .expect("domain is nonempty");
                p = q;
                changed = true;
            }
        }
        if !changed {
            return Ok(BrdOutcome {
                profile: game.profile_at(p),
                converged: true,
                iterations: round,
            });
        }
    }
    Ok(BrdOutcome {
        profile: game.profile_at(p),
        converged: false,
        iterations: max_iters,
    })
}
