//! Definition-level oracles and random game generators shared by the
//! integration suites.
//!
//! The oracles only use the public per-profile API (`utility_of`,
//! `thresholds`) and nested loops over explicit action vectors, so they
//! share no code with the dense scans inside the enumerators.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use satisfaction_core::{ActionProfile, ConstrainedGame, CostModel};

pub type Set = BTreeSet<ActionProfile>;

/// Every action vector of the product space, odometer order.
pub fn all_profiles(counts: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut s = vec![0; counts.len()];
    loop {
        out.push(s.clone());
        let mut k = counts.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            s[k] += 1;
            if s[k] < counts[k] {
                break;
            }
            s[k] = 0;
        }
    }
}

pub fn u(game: &ConstrainedGame, k: usize, s: &[usize]) -> f64 {
    game.utility_of(k, &ActionProfile::new(s.to_vec())).unwrap()
}

fn with(s: &[usize], k: usize, a: usize) -> Vec<usize> {
    let mut t = s.to_vec();
    t[k] = a;
    t
}

pub fn satisfied(game: &ConstrainedGame, k: usize, s: &[usize]) -> bool {
    u(game, k, s) >= game.thresholds()[k]
}

/// `f_k(s_{-k})` straight from the threshold definition.
pub fn feasible(game: &ConstrainedGame, k: usize, s: &[usize]) -> Vec<usize> {
    (0..game.action_counts()[k])
        .filter(|&a| satisfied(game, k, &with(s, k, a)))
        .collect()
}

fn collect(game: &ConstrainedGame, keep: impl Fn(&[usize]) -> bool) -> Set {
    all_profiles(game.action_counts())
        .into_iter()
        .filter(|s| keep(s))
        .map(ActionProfile::new)
        .collect()
}

pub fn oracle_ne(game: &ConstrainedGame) -> Set {
    collect(game, |s| {
        (0..game.num_players())
            .all(|k| (0..game.action_counts()[k]).all(|a| u(game, k, s) >= u(game, k, &with(s, k, a))))
    })
}

pub fn oracle_se(game: &ConstrainedGame) -> Set {
    collect(game, |s| {
        (0..game.num_players()).all(|k| feasible(game, k, s).contains(&s[k]))
    })
}

/// GNE for an arbitrary objective under the game's feasible sets.
pub fn oracle_gne_with(game: &ConstrainedGame, objective: impl Fn(usize, &[usize]) -> f64) -> Set {
    collect(game, |s| {
        (0..game.num_players()).all(|k| {
            let f = feasible(game, k, s);
            f.contains(&s[k]) && f.iter().all(|&a| objective(k, s) >= objective(k, &with(s, k, a)))
        })
    })
}

pub fn oracle_gne(game: &ConstrainedGame) -> Set {
    oracle_gne_with(game, |k, s| u(game, k, s))
}

pub fn oracle_ese(game: &ConstrainedGame, cost: &CostModel) -> Set {
    collect(game, |s| {
        (0..game.num_players()).all(|k| {
            let f = feasible(game, k, s);
            f.contains(&s[k]) && f.iter().all(|&a| cost.cost(k, s[k]) <= cost.cost(k, a))
        })
    })
}

pub fn oracle_clipping(game: &ConstrainedGame) -> Vec<BTreeSet<usize>> {
    let profiles = all_profiles(game.action_counts());
    (0..game.num_players())
        .map(|k| {
            (0..game.action_counts()[k])
                .filter(|&a| {
                    profiles
                        .iter()
                        .filter(|s| s[k] == a)
                        .all(|s| satisfied(game, k, s))
                })
                .collect()
        })
        .collect()
}

/// Literal reading: some clipping action `a` of `k` and some `j != k`
/// with `f_j(a, s_{-{j,k}})` empty for every `s_{-{j,k}}`.
pub fn oracle_blocking(game: &ConstrainedGame) -> bool {
    let clipping = oracle_clipping(game);
    let profiles = all_profiles(game.action_counts());
    (0..game.num_players()).any(|k| {
        clipping[k].iter().any(|&a| {
            (0..game.num_players()).filter(|&j| j != k).any(|j| {
                profiles
                    .iter()
                    .filter(|s| s[k] == a && s[j] == 0)
                    .all(|s| feasible(game, j, s).is_empty())
            })
        })
    })
}

pub struct RandomGame {
    pub game: ConstrainedGame,
    pub cost: CostModel,
}

/// Random finite game: `K ∈ {1,2,3}`, `|S_k| ∈ 1..=6`, utilities and
/// thresholds uniform in `[0, M_k]`.
///
/// Every other game draws utilities from an 8-step grid so ties and
/// `u == Γ` cases occur. Costs sit on a 1/64 grid in `[0, 1]`; sums of such
/// values are exact in binary floating point.
pub fn random_game(rng: &mut ChaCha8Rng) -> RandomGame {
    let k = rng.random_range(1..=3usize);
    random_game_with_players(rng, k)
}

pub fn random_game_with_players(rng: &mut ChaCha8Rng, k: usize) -> RandomGame {
    let counts: Vec<usize> = (0..k).map(|_| rng.random_range(1..=6)).collect();
    let caps: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..4.0)).collect();
    let gridded = rng.random_bool(0.5);
    let n: usize = counts.iter().product();
    let tables: Vec<Vec<f64>> = caps
        .iter()
        .map(|&m| {
            (0..n)
                .map(|_| {
                    if gridded {
                        m * rng.random_range(0..=8u32) as f64 / 8.0
                    } else {
                        rng.random_range(0.0..=m)
                    }
                })
                .collect()
        })
        .collect();
    let thresholds: Vec<f64> = caps
        .iter()
        .map(|&m| {
            if gridded && rng.random_bool(0.3) {
                m * rng.random_range(0..=8u32) as f64 / 8.0
            } else {
                rng.random_range(0.0..=m)
            }
        })
        .collect();
    let cost = CostModel::new(
        counts
            .iter()
            .map(|&c| {
                (0..c)
                    .map(|_| rng.random_range(0..=64u32) as f64 / 64.0)
                    .collect()
            })
            .collect(),
    )
    .unwrap();
    let game = ConstrainedGame::from_tables(counts, tables, thresholds, caps).unwrap();
    RandomGame { game, cost }
}
