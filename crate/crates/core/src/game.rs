//! Finite normal-form games with per-player satisfaction thresholds.
//!
//! Profiles are indexed in mixed radix with player 0 as the most significant
//! digit, so profile index order is the lexicographic order of the action
//! vectors. Nested utility tables in game documents use the same layout.

use std::borrow::Cow;
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelUtility, InterferenceChannel};
use crate::error::{Error, Result};

/// One action index per player.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionProfile(Vec<usize>);

impl ActionProfile {
    pub fn new(actions: Vec<usize>) -> Self {
        ActionProfile(actions)
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    /// Copy of this profile with player `k` switched to `action`.
    pub fn with_action(&self, k: usize, action: usize) -> Self {
        let mut actions = self.0.clone();
        actions[k] = action;
        ActionProfile(actions)
    }

    /// The opponents' actions `s_{-k}`.
    pub fn others(&self, k: usize) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(j, &a)| (j != k).then_some(a))
            .collect()
    }

    /// Rebuilds `(a, s_{-k})` from an opponents' slice.
    pub fn from_parts(k: usize, action: usize, others: &[usize]) -> Self {
        let mut actions = Vec::with_capacity(others.len() + 1);
        actions.extend_from_slice(&others[..k]);
        actions.push(action);
        actions.extend_from_slice(&others[k..]);
        ActionProfile(actions)
    }
}

impl Deref for ActionProfile {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for ActionProfile {
    fn from(actions: Vec<usize>) -> Self {
        ActionProfile(actions)
    }
}

impl fmt::Debug for ActionProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for ActionProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone)]
pub(crate) enum UtilitySource {
    /// Dense table, `values[profile_index * K + k]`.
    Table(Vec<f64>),
    Channel(ChannelUtility),
}

/// A finite game where player `k` is satisfied iff `u_k(s) >= thresholds[k]`.
///
/// Immutable after construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct ConstrainedGame {
    action_counts: Vec<usize>,
    strides: Vec<usize>,
    num_profiles: usize,
    thresholds: Vec<f64>,
    caps: Vec<f64>,
    action_values: Vec<Vec<f64>>,
    utility: UtilitySource,
}

impl ConstrainedGame {
    /// Builds a table-backed game.
    ///
    /// `tables[k]` holds `u_k` for every profile in profile-index order.
    pub fn from_tables(
        action_counts: Vec<usize>,
        tables: Vec<Vec<f64>>,
        thresholds: Vec<f64>,
        caps: Vec<f64>,
    ) -> Result<Self> {
        let (strides, num_profiles) = layout(&action_counts)?;
        let k = action_counts.len();
        if tables.len() != k {
            return Err(Error::invalid(format!(
                "expected {k} utility tables, got {}",
                tables.len()
            )));
        }
        let mut values = vec![0.0; num_profiles * k];
        for (player, table) in tables.iter().enumerate() {
            if table.len() != num_profiles {
                return Err(Error::invalid(format!(
                    "utility table of player {player} has {} entries, expected {num_profiles}",
                    table.len()
                )));
            }
            for (p, &u) in table.iter().enumerate() {
                values[p * k + player] = u;
            }
        }
        let game = Self::assemble(
            action_counts,
            strides,
            num_profiles,
            thresholds,
            caps,
            None,
            UtilitySource::Table(values),
        )?;
        game.check_utility_range()?;
        Ok(game)
    }

    /// Builds a table-backed game by evaluating `utility(k, profile)` on
    /// every profile.
    pub fn from_fn<F>(
        action_counts: Vec<usize>,
        thresholds: Vec<f64>,
        caps: Vec<f64>,
        utility: F,
    ) -> Result<Self>
    where
        F: Fn(usize, &[usize]) -> f64,
    {
        let (_, num_profiles) = layout(&action_counts)?;
        let k = action_counts.len();
        let mut tables = vec![Vec::with_capacity(num_profiles); k];
        let mut actions = vec![0; k];
        for p in 0..num_profiles {
            decode_into(&action_counts, p, &mut actions);
            for (player, table) in tables.iter_mut().enumerate() {
                table.push(utility(player, &actions));
            }
        }
        Self::from_tables(action_counts, tables, thresholds, caps)
    }

    pub(crate) fn from_channel(
        evaluator: ChannelUtility,
        thresholds: Vec<f64>,
        caps: Vec<f64>,
    ) -> Result<Self> {
        let action_counts = evaluator.action_counts();
        let (strides, num_profiles) = layout(&action_counts)?;
        let action_values = evaluator.action_values();
        Self::assemble(
            action_counts,
            strides,
            num_profiles,
            thresholds,
            caps,
            Some(action_values),
            UtilitySource::Channel(evaluator),
        )
    }

    fn assemble(
        action_counts: Vec<usize>,
        strides: Vec<usize>,
        num_profiles: usize,
        thresholds: Vec<f64>,
        caps: Vec<f64>,
        action_values: Option<Vec<Vec<f64>>>,
        utility: UtilitySource,
    ) -> Result<Self> {
        let k = action_counts.len();
        if thresholds.len() != k || caps.len() != k {
            return Err(Error::invalid(format!(
                "{k} players but {} thresholds and {} caps",
                thresholds.len(),
                caps.len()
            )));
        }
        for player in 0..k {
            let (g, m) = (thresholds[player], caps[player]);
            if !g.is_finite() || g < 0.0 {
                return Err(Error::invalid(format!(
                    "threshold of player {player} must be finite and >= 0, got {g}"
                )));
            }
            if !m.is_finite() || m < 0.0 {
                return Err(Error::invalid(format!(
                    "utility cap of player {player} must be finite and >= 0, got {m}"
                )));
            }
        }
        let action_values = action_values.unwrap_or_else(|| {
            action_counts
                .iter()
                .map(|&n| (0..n).map(|a| a as f64).collect())
                .collect()
        });
        Ok(ConstrainedGame {
            action_counts,
            strides,
            num_profiles,
            thresholds,
            caps,
            action_values,
            utility,
        })
    }

    /// Checks `0 <= u_k(s) <= M_k` on every profile.
    pub fn check_utility_range(&self) -> Result<()> {
        let k = self.num_players();
        let table = self.utility_table();
        for p in 0..self.num_profiles {
            for player in 0..k {
                let u = table[p * k + player];
                if !(u.is_finite() && (0.0..=self.caps[player]).contains(&u)) {
                    return Err(Error::invalid(format!(
                        "utility of player {player} at profile {} is {u}, outside [0, {}]",
                        self.profile_at(p),
                        self.caps[player]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Same game with different thresholds.
    pub fn with_thresholds(&self, thresholds: Vec<f64>) -> Result<Self> {
        Self::assemble(
            self.action_counts.clone(),
            self.strides.clone(),
            self.num_profiles,
            thresholds,
            self.caps.clone(),
            Some(self.action_values.clone()),
            self.utility.clone(),
        )
    }

    /// Same game with different utility caps. The range invariant is not
    /// re-checked; call [`Self::check_utility_range`] if needed.
    pub fn with_caps(&self, caps: Vec<f64>) -> Result<Self> {
        Self::assemble(
            self.action_counts.clone(),
            self.strides.clone(),
            self.num_profiles,
            self.thresholds.clone(),
            caps,
            Some(self.action_values.clone()),
            self.utility.clone(),
        )
    }

    /// Replaces the per-action labels (e.g. transmit powers) used in reports.
    pub fn with_action_values(mut self, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != self.num_players()
            || values.iter().zip(&self.action_counts).any(|(v, &n)| v.len() != n)
        {
            return Err(Error::invalid("action values do not match the action sets"));
        }
        self.action_values = values;
        Ok(self)
    }

    pub fn num_players(&self) -> usize {
        self.action_counts.len()
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn num_profiles(&self) -> usize {
        self.num_profiles
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn caps(&self) -> &[f64] {
        &self.caps
    }

    pub fn action_value(&self, k: usize, action: usize) -> f64 {
        self.action_values[k][action]
    }

    pub fn action_values(&self) -> &[Vec<f64>] {
        &self.action_values
    }

    pub(crate) fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// The underlying channel for channel-backed games.
    pub fn channel(&self) -> Option<&InterferenceChannel> {
        match &self.utility {
            UtilitySource::Channel(c) => Some(c.channel()),
            UtilitySource::Table(_) => None,
        }
    }

    pub fn check_player(&self, k: usize) -> Result<()> {
        if k >= self.num_players() {
            return Err(Error::PlayerOutOfRange {
                player: k,
                players: self.num_players(),
            });
        }
        Ok(())
    }

    fn check_action(&self, k: usize, action: usize) -> Result<()> {
        let count = self.action_counts[k];
        if action >= count {
            return Err(Error::ActionOutOfRange {
                player: k,
                action,
                count,
            });
        }
        Ok(())
    }

    pub fn check_profile(&self, s: &[usize]) -> Result<()> {
        if s.len() != self.num_players() {
            return Err(Error::invalid(format!(
                "profile has {} entries, game has {} players",
                s.len(),
                self.num_players()
            )));
        }
        for (k, &a) in s.iter().enumerate() {
            self.check_action(k, a)?;
        }
        Ok(())
    }

    pub fn profile_index(&self, s: &[usize]) -> usize {
        s.iter().zip(&self.strides).map(|(a, st)| a * st).sum()
    }

    pub fn profile_at(&self, index: usize) -> ActionProfile {
        let mut actions = vec![0; self.num_players()];
        decode_into(&self.action_counts, index, &mut actions);
        ActionProfile(actions)
    }

    /// All profiles in index order.
    pub fn profiles(&self) -> impl Iterator<Item = ActionProfile> + '_ {
        (0..self.num_profiles).map(|p| self.profile_at(p))
    }

    /// `u_k(s)` without bounds checks.
    pub(crate) fn utility_raw(&self, k: usize, s: &[usize]) -> f64 {
        match &self.utility {
            UtilitySource::Table(values) => values[self.profile_index(s) * self.num_players() + k],
            UtilitySource::Channel(c) => c.utility(k, s),
        }
    }

    /// Every utility, laid out as `[profile_index * K + k]`.
    pub fn utility_table(&self) -> Cow<'_, [f64]> {
        match &self.utility {
            UtilitySource::Table(values) => Cow::Borrowed(values),
            UtilitySource::Channel(c) => {
                let k = self.num_players();
                let mut values = Vec::with_capacity(self.num_profiles * k);
                let mut actions = vec![0; k];
                for p in 0..self.num_profiles {
                    decode_into(&self.action_counts, p, &mut actions);
                    values.extend(c.utilities(&actions));
                }
                Cow::Owned(values)
            }
        }
    }

    pub fn utility_of(&self, k: usize, s: &ActionProfile) -> Result<f64> {
        self.check_player(k)?;
        self.check_profile(s)?;
        Ok(self.utility_raw(k, s))
    }

    /// `f_k(s_{-k}) = { a : u_k(a, s_{-k}) >= Γ_k }`, ascending. May be empty.
    pub fn feasible_set(&self, k: usize, s_minus_k: &[usize]) -> Result<Vec<usize>> {
        self.check_player(k)?;
        if s_minus_k.len() + 1 != self.num_players() {
            return Err(Error::invalid(format!(
                "opponent profile has {} entries, expected {}",
                s_minus_k.len(),
                self.num_players() - 1
            )));
        }
        let mut s = ActionProfile::from_parts(k, 0, s_minus_k);
        self.check_profile(&s)?;
        let mut feasible = Vec::new();
        for a in 0..self.action_counts[k] {
            s.0[k] = a;
            if self.utility_raw(k, &s) >= self.thresholds[k] {
                feasible.push(a);
            }
        }
        Ok(feasible)
    }

    pub fn is_satisfied(&self, k: usize, s: &ActionProfile) -> Result<bool> {
        Ok(self.utility_of(k, s)? >= self.thresholds[k])
    }
}

fn layout(action_counts: &[usize]) -> Result<(Vec<usize>, usize)> {
    if action_counts.is_empty() {
        return Err(Error::invalid("a game needs at least one player"));
    }
    if let Some(k) = action_counts.iter().position(|&n| n == 0) {
        return Err(Error::invalid(format!("player {k} has an empty action set")));
    }
    let mut strides = vec![1; action_counts.len()];
    let mut total: usize = 1;
    for k in (0..action_counts.len()).rev() {
        strides[k] = total;
        total = total
            .checked_mul(action_counts[k])
            .ok_or_else(|| Error::invalid("profile space too large"))?;
    }
    Ok((strides, total))
}

fn decode_into(action_counts: &[usize], mut index: usize, out: &mut [usize]) {
    for k in (0..action_counts.len()).rev() {
        out[k] = index % action_counts[k];
        index /= action_counts[k];
    }
}

/// Shared test fixtures.
pub mod fixtures {
    use super::ConstrainedGame;

    /// 2×2 game with thresholds (1, 1) and caps (2, 2).
    ///
    /// `u_1 = [[1,0],[2,1]]`, `u_2 = [[1,2],[0,1]]`, both indexed `[s_1][s_2]`.
    pub fn g1() -> ConstrainedGame {
        ConstrainedGame::from_tables(
            vec![2, 2],
            vec![vec![1.0, 0.0, 2.0, 1.0], vec![1.0, 2.0, 0.0, 1.0]],
            vec![1.0, 1.0],
            vec![2.0, 2.0],
        )
        .expect("G1 is valid")
    }

    /// 3×2 game whose player-0 action 1 always satisfies player 0 and never
    /// lets player 1 be satisfied.
    ///
    /// `u_1 = [[0,0],[1,1],[1,0]]`, `u_2 = [[0,0],[0,0],[1,0]]`, thresholds
    /// (1, 1), caps (1, 1).
    pub fn g2() -> ConstrainedGame {
        ConstrainedGame::from_tables(
            vec![3, 2],
            vec![
                vec![0.0, 0.0, 1.0, 1.0, 1.0, 0.0],
                vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
            ],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
        )
        .expect("G2 is valid")
    }
}
