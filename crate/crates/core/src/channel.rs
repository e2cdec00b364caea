//! Power control over a K-link Gaussian interference channel.
//!
//! Transmitter `k` picks a power from a log-spaced grid and earns the
//! Shannon rate of its own link, treating the other links as noise.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::equilibria::CostModel;
use crate::error::{Error, Result};
use crate::game::ConstrainedGame;

/// Squared channel gains, noise powers and power budgets of `K` links.
///
/// `gain_sq[j * K + k]` is `|h_{j,k}|²`, the linear power gain from
/// transmitter `k` to receiver `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelFields", into = "ChannelFields")]
pub struct InterferenceChannel {
    num_links: usize,
    gain_sq: Vec<f64>,
    noise: Vec<f64>,
    p_max: Vec<f64>,
    levels: usize,
}

/// Wire layout of a channel document. Extra keys (e.g. the sampling seed)
/// are ignored on read.
#[derive(Serialize, Deserialize)]
struct ChannelFields {
    k: usize,
    gain_sq: Vec<f64>,
    noise: Vec<f64>,
    p_max: Vec<f64>,
    levels: usize,
}

impl TryFrom<ChannelFields> for InterferenceChannel {
    type Error = Error;

    fn try_from(f: ChannelFields) -> Result<Self> {
        InterferenceChannel::new(f.k, f.gain_sq, f.noise, f.p_max, f.levels)
    }
}

impl From<InterferenceChannel> for ChannelFields {
    fn from(c: InterferenceChannel) -> Self {
        ChannelFields {
            k: c.num_links,
            gain_sq: c.gain_sq,
            noise: c.noise,
            p_max: c.p_max,
            levels: c.levels,
        }
    }
}

impl InterferenceChannel {
    pub fn new(
        num_links: usize,
        gain_sq: Vec<f64>,
        noise: Vec<f64>,
        p_max: Vec<f64>,
        levels: usize,
    ) -> Result<Self> {
        if num_links == 0 {
            return Err(Error::invalid("channel needs at least one link"));
        }
        if gain_sq.len() != num_links * num_links {
            return Err(Error::invalid(format!(
                "gain_sq has {} entries, expected {}",
                gain_sq.len(),
                num_links * num_links
            )));
        }
        if noise.len() != num_links || p_max.len() != num_links {
            return Err(Error::invalid(format!(
                "expected {num_links} noise and p_max entries"
            )));
        }
        if let Some(g) = gain_sq.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(Error::invalid(format!("gain {g} must be finite and >= 0")));
        }
        if let Some(s) = noise.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::invalid(format!("noise power {s} must be finite and > 0")));
        }
        if let Some(p) = p_max.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::invalid(format!("p_max {p} must be finite and > 0")));
        }
        if levels < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 power levels, got {levels}"
            )));
        }
        Ok(InterferenceChannel {
            num_links,
            gain_sq,
            noise,
            p_max,
            levels,
        })
    }

    pub fn num_links(&self) -> usize {
        self.num_links
    }

    /// `|h_{receiver, transmitter}|²`.
    pub fn gain(&self, receiver: usize, transmitter: usize) -> f64 {
        self.gain_sq[receiver * self.num_links + transmitter]
    }

    pub fn gain_sq(&self) -> &[f64] {
        &self.gain_sq
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn p_max(&self) -> &[f64] {
        &self.p_max
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// One power grid per link.
    pub fn grids(&self) -> Vec<PowerGrid> {
        self.p_max
            .iter()
            .map(|&p| power_grid(p, self.levels).expect("validated at construction"))
            .collect()
    }

    fn rate_unchecked(&self, k: usize, powers: &[f64]) -> f64 {
        let interference: f64 = (0..self.num_links)
            .filter(|&j| j != k)
            .map(|j| powers[j] * self.gain(k, j))
            .sum();
        let sinr = powers[k] * self.gain(k, k) / (self.noise[k] + interference);
        (1.0 + sinr).log2()
    }
}

/// Descending log-spaced transmit powers, in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerGrid {
    powers: Vec<f64>,
}

impl PowerGrid {
    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }
}

/// `p_max · N^(-n/(N-1))` for `n = 0..N`.
pub fn power_grid(p_max: f64, n_levels: usize) -> Result<PowerGrid> {
    if n_levels < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 power levels, got {n_levels}"
        )));
    }
    if !(p_max.is_finite() && p_max > 0.0) {
        return Err(Error::invalid(format!("p_max {p_max} must be finite and > 0")));
    }
    let base = n_levels as f64;
    let span = (n_levels - 1) as f64;
    let powers = (0..n_levels)
        .map(|n| p_max * base.powf(-(n as f64) / span))
        .collect();
    Ok(PowerGrid { powers })
}

/// Per-link rate `log2(1 + p_k g_kk / (σ²_k + Σ_{j≠k} p_j g_kj))` in bits
/// per channel use.
pub fn rate_utility(ch: &InterferenceChannel, powers: &[f64]) -> Result<Vec<f64>> {
    if powers.len() != ch.num_links {
        return Err(Error::invalid(format!(
            "expected {} powers, got {}",
            ch.num_links,
            powers.len()
        )));
    }
    if let Some(p) = powers.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(Error::invalid(format!("power {p} must be finite and >= 0")));
    }
    Ok((0..ch.num_links).map(|k| ch.rate_unchecked(k, powers)).collect())
}

/// Rate of link `k` alone at full power.
pub fn single_user_cap(ch: &InterferenceChannel, k: usize) -> Result<f64> {
    if k >= ch.num_links {
        return Err(Error::PlayerOutOfRange {
            player: k,
            players: ch.num_links,
        });
    }
    Ok((1.0 + ch.p_max[k] * ch.gain(k, k) / ch.noise[k]).log2())
}

/// Draws `|h|²` for every link pair from a unit-variance circularly
/// symmetric complex Gaussian, with `p_max = 1 W` and the noise set so that
/// `p_max / σ²` equals `snr_db`.
///
/// Entries are drawn row-major, real part before imaginary part.
pub fn sample_channel<R: Rng + ?Sized>(
    rng: &mut R,
    num_links: usize,
    snr_db: f64,
    n_levels: usize,
) -> Result<InterferenceChannel> {
    if !snr_db.is_finite() {
        return Err(Error::invalid(format!("snr_db {snr_db} must be finite")));
    }
    let component = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid std dev");
    let gain_sq = (0..num_links * num_links)
        .map(|_| {
            let re: f64 = component.sample(rng);
            let im: f64 = component.sample(rng);
            re * re + im * im
        })
        .collect();
    let noise = 1.0 / 10f64.powf(snr_db / 10.0);
    InterferenceChannel::new(
        num_links,
        gain_sq,
        vec![noise; num_links],
        vec![1.0; num_links],
        n_levels,
    )
}

/// Turns a channel into a game over its power grids.
///
/// Caps are the single-user rates and the effort of a power is `p / p_max`.
pub fn to_game(ch: &InterferenceChannel, gamma: &[f64]) -> Result<(ConstrainedGame, CostModel)> {
    if gamma.len() != ch.num_links {
        return Err(Error::invalid(format!(
            "expected {} thresholds, got {}",
            ch.num_links,
            gamma.len()
        )));
    }
    let caps = (0..ch.num_links)
        .map(|k| single_user_cap(ch, k))
        .collect::<Result<Vec<_>>>()?;
    let evaluator = ChannelUtility::new(ch.clone());
    let cost = CostModel::new(
        evaluator
            .grids
            .iter()
            .zip(&ch.p_max)
            .map(|(g, &p_max)| g.powers.iter().map(|p| (p / p_max).min(1.0)).collect())
            .collect(),
    )?;
    let game = ConstrainedGame::from_channel(evaluator, gamma.to_vec(), caps)?;
    Ok((game, cost))
}

/// Closed-form utility evaluator behind channel-backed games.
#[derive(Debug, Clone)]
pub(crate) struct ChannelUtility {
    channel: InterferenceChannel,
    grids: Vec<PowerGrid>,
}

impl ChannelUtility {
    fn new(channel: InterferenceChannel) -> Self {
        let grids = channel.grids();
        ChannelUtility { channel, grids }
    }

    pub(crate) fn channel(&self) -> &InterferenceChannel {
        &self.channel
    }

    pub(crate) fn action_counts(&self) -> Vec<usize> {
        self.grids.iter().map(PowerGrid::len).collect()
    }

    pub(crate) fn action_values(&self) -> Vec<Vec<f64>> {
        self.grids.iter().map(|g| g.powers.clone()).collect()
    }

    fn powers(&self, actions: &[usize]) -> Vec<f64> {
        actions
            .iter()
            .zip(&self.grids)
            .map(|(&a, g)| g.powers[a])
            .collect()
    }

    pub(crate) fn utility(&self, k: usize, actions: &[usize]) -> f64 {
        self.channel.rate_unchecked(k, &self.powers(actions))
    }

    pub(crate) fn utilities(&self, actions: &[usize]) -> Vec<f64> {
        let powers = self.powers(actions);
        (0..self.channel.num_links)
            .map(|k| self.channel.rate_unchecked(k, &powers))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_channel(k: usize) -> InterferenceChannel {
        InterferenceChannel::new(k, vec![1.0; k * k], vec![1.0; k], vec![1.0; k], 4).unwrap()
    }

    #[test]
    fn grid_two_levels() {
        assert_eq!(power_grid(1.0, 2).unwrap().powers(), &[1.0, 0.5]);
    }

    #[test]
    fn grid_endpoints_and_order() {
        for n in 2..=64 {
            let g = power_grid(1.0, n).unwrap();
            assert_eq!(g.len(), n);
            assert_eq!(g.powers()[0], 1.0);
            let last = g.powers()[n - 1];
            let want = 1.0 / n as f64;
            assert!(
                (last - want).abs() <= f64::EPSILON * want,
                "N={n}: {last} vs {want}"
            );
            assert!(g.powers().windows(2).all(|w| w[0] > w[1]));
        }
        let g = power_grid(1.0, 32).unwrap();
        assert_eq!(g.powers()[31], 0.03125);
    }

    #[test]
    fn grid_matches_decimal_form() {
        // p_max · 10^(-(n/(N-1)) log10 N)
        let g = power_grid(2.0, 32).unwrap();
        for (n, &p) in g.powers().iter().enumerate() {
            let alt = 2.0 * 10f64.powf(-(n as f64 / 31.0) * 32f64.log10());
            assert!((p - alt).abs() <= 4.0 * f64::EPSILON * p);
        }
    }

    #[test]
    fn grid_rejects_bad_args() {
        assert!(power_grid(1.0, 1).is_err());
        assert!(power_grid(0.0, 4).is_err());
    }

    #[test]
    fn rates_by_hand() {
        assert_eq!(rate_utility(&unit_channel(1), &[1.0]).unwrap(), vec![1.0]);
        let r = rate_utility(&unit_channel(2), &[1.0, 1.0]).unwrap();
        assert_eq!(r, vec![1.5f64.log2(); 2]);
        assert!((r[0] - 0.58496).abs() < 1e-5);
        let r = rate_utility(&unit_channel(3), &[0.0, 1.0, 0.25]).unwrap();
        assert_eq!(r[0], 0.0);
        assert!(rate_utility(&unit_channel(2), &[-1.0, 1.0]).is_err());
        assert!(rate_utility(&unit_channel(2), &[1.0]).is_err());
    }

    #[test]
    fn cross_gain_orientation() {
        // only transmitter 1 -> receiver 0 interferes
        let ch =
            InterferenceChannel::new(2, vec![1.0, 3.0, 0.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0], 2).unwrap();
        let r = rate_utility(&ch, &[1.0, 1.0]).unwrap();
        assert_eq!(r[0], (1.0f64 + 1.0 / 4.0).log2());
        assert_eq!(r[1], 1.0);
    }

    #[test]
    fn single_user_caps() {
        let ch =
            InterferenceChannel::new(2, vec![1.0, 0.3, 0.2, 0.0], vec![0.1, 0.1], vec![1.0, 1.0], 2).unwrap();
        let cap = single_user_cap(&ch, 0).unwrap();
        assert!((cap - 11f64.log2()).abs() < 1e-12);
        assert!((cap - 3.4594).abs() < 1e-4);
        assert_eq!(cap, rate_utility(&ch, &[1.0, 0.0]).unwrap()[0]);
        assert_eq!(single_user_cap(&ch, 1).unwrap(), 0.0);
        assert!(single_user_cap(&ch, 2).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        let a = sample_channel(&mut ChaCha8Rng::seed_from_u64(9), 3, 10.0, 8).unwrap();
        let b = sample_channel(&mut ChaCha8Rng::seed_from_u64(9), 3, 10.0, 8).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.noise(), &[0.1, 0.1, 0.1]);
        assert_eq!(a.p_max(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn gain_mean_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut sum = 0.0;
        let draws = 100_000;
        for _ in 0..draws {
            sum += sample_channel(&mut rng, 1, 10.0, 2).unwrap().gain(0, 0);
        }
        let mean = sum / draws as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn game_from_channel() {
        let ch = sample_channel(&mut ChaCha8Rng::seed_from_u64(5), 2, 10.0, 32).unwrap();
        let (game, cost) = to_game(&ch, &[0.6, 1.2]).unwrap();
        assert_eq!(game.num_profiles(), 1024);
        assert_eq!(game.thresholds(), &[0.6, 1.2]);
        game.check_utility_range().unwrap();
        assert_eq!(cost.cost(0, 0), 1.0);
        assert_eq!(cost.cost(1, 31), 0.03125);
        // max-power profile utility equals the closed form
        let s = crate::ActionProfile::new(vec![0, 0]);
        let want = (1.0 + ch.gain(0, 0) / (0.1 + ch.gain(0, 1))).log2();
        assert!((game.utility_of(0, &s).unwrap() - want).abs() < 1e-12);
        assert!(to_game(&ch, &[0.6]).is_err());
    }

    #[test]
    fn document_round_trip_is_bit_exact() {
        let ch = sample_channel(&mut ChaCha8Rng::seed_from_u64(77), 3, 7.3, 5).unwrap();
        let text = serde_json::to_string(&ch).unwrap();
        let back: InterferenceChannel = serde_json::from_str(&text).unwrap();
        for (a, b) in ch.gain_sq().iter().zip(back.gain_sq()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back, ch);
        assert!(text.starts_with("{\"k\":3,"));
    }

    #[test]
    fn document_validation() {
        let bad = r#"{"k":2,"gain_sq":[1,1,1],"noise":[0.1,0.1],"p_max":[1,1],"levels":4}"#;
        assert!(serde_json::from_str::<InterferenceChannel>(bad).is_err());
        let bad = r#"{"k":1,"gain_sq":[1],"noise":[0],"p_max":[1],"levels":4}"#;
        assert!(serde_json::from_str::<InterferenceChannel>(bad).is_err());
    }
}
