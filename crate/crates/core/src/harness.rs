//! Game documents, experiment configs and the commands behind `sateq`.
//!
//! Game document (JSON):
//!
//! ```text
//! { "players": K,
//!   "thresholds": [Γ_1, ..., Γ_K],
//!   "caps": [M_1, ..., M_K],
//!   "utilities": { "table": [u_1, ..., u_K] },
//!   "costs": [[c_1(0), ...], ...] }
//! ```
//!
//! where each `u_k` is a K-deep nested array indexed `[s_1][s_2]...[s_K]`.
//! A channel-backed game replaces the table with
//! `"utilities": { "channel": <channel document> }`; its caps then default
//! to the single-user rates and its costs to `p / p_max`. Table games
//! default to zero cost.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::channel::{sample_channel, to_game, InterferenceChannel};
use crate::equilibria::{run_brd, BrdOutcome, CostModel, EquilibriumReport};
use crate::error::{Error, Result};
use crate::game::{ActionProfile, ConstrainedGame};
use crate::sesa::{monte_carlo, run_rng, run_sesa_with, LearningRate, SesaConfig, SesaOutcome};

pub const REPORT_FILE: &str = "report.json";
pub const RATE_MAP_FILE: &str = "rate_map.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const BRD_FILE: &str = "brd.json";
pub const CHANNEL_FILE: &str = "channel.json";
pub const TRACE_HEADER: [&str; 6] = [
    "t",
    "player",
    "action_index",
    "action_value",
    "utility",
    "satisfied",
];

pub fn trace_file_name(run: u64) -> String {
    format!("trace_{run:04}.csv")
}

// ---------------------------------------------------------------------------
// Game documents
// ---------------------------------------------------------------------------

/// Parses and validates a game document.
pub fn load_game(document: &str) -> Result<(ConstrainedGame, CostModel)> {
    let root: Value = serde_json::from_str(document)?;
    game_from_value(&root)
}

pub fn game_from_value(root: &Value) -> Result<(ConstrainedGame, CostModel)> {
    let obj = root
        .as_object()
        .ok_or_else(|| Error::document("$", "game document must be an object"))?;
    for key in obj.keys() {
        if !["players", "thresholds", "caps", "utilities", "levels", "costs"].contains(&key.as_str()) {
            return Err(Error::document(key.as_str(), "unknown field"));
        }
    }
    let players = obj
        .get("players")
        .and_then(Value::as_u64)
        .filter(|&k| k >= 1)
        .ok_or_else(|| Error::document("players", "expected a positive integer"))? as usize;
    let thresholds = number_list(obj, "thresholds", players)?;
    for (k, &g) in thresholds.iter().enumerate() {
        if g < 0.0 {
            return Err(Error::document(
                format!("thresholds[{k}]"),
                "threshold must be >= 0",
            ));
        }
    }
    let caps = match obj.get("caps") {
        Some(_) => Some(number_list(obj, "caps", players)?),
        None => None,
    };

    let utilities = obj
        .get("utilities")
        .and_then(Value::as_object)
        .ok_or_else(|| Error::document("utilities", "expected an object"))?;
    if utilities.len() != 1 {
        return Err(Error::document(
            "utilities",
            "expected exactly one of \"table\" or \"channel\"",
        ));
    }

    let (game, default_cost) = if let Some(table) = utilities.get("table") {
        let caps = caps.ok_or_else(|| Error::document("caps", "table games need explicit caps"))?;
        check_caps(&thresholds, &caps)?;
        let (counts, tables) = parse_tables(table, players)?;
        for (k, t) in tables.iter().enumerate() {
            if let Some(i) = t.iter().position(|&u| !(0.0..=caps[k]).contains(&u)) {
                return Err(Error::document(
                    format!("utilities.table[{k}]{}", nested_path(&counts, i)),
                    format!("utility outside [0, {}]", caps[k]),
                ));
            }
        }
        let cost = CostModel::zero(&counts);
        let game = ConstrainedGame::from_tables(counts, tables, thresholds, caps)
            .map_err(|e| Error::document("utilities.table", e.to_string()))?;
        (game, cost)
    } else if let Some(channel) = utilities.get("channel") {
        let channel: InterferenceChannel = serde_json::from_value(channel.clone())
            .map_err(|e| Error::document("utilities.channel", e.to_string()))?;
        if channel.num_links() != players {
            return Err(Error::document(
                "utilities.channel.k",
                format!(
                    "channel has {} links but players = {players}",
                    channel.num_links()
                ),
            ));
        }
        if let Some(levels) = obj.get("levels") {
            if levels.as_u64() != Some(channel.levels() as u64) {
                return Err(Error::document(
                    "levels",
                    "does not match utilities.channel.levels",
                ));
            }
        }
        let (game, cost) = to_game(&channel, &thresholds)?;
        let game = match caps {
            Some(caps) => rebuild_caps(game, caps)?,
            None => game,
        };
        check_caps(game.thresholds(), game.caps())?;
        (game, cost)
    } else {
        return Err(Error::document(
            "utilities",
            "expected exactly one of \"table\" or \"channel\"",
        ));
    };

    let cost = match obj.get("costs") {
        None => default_cost,
        Some(v) => parse_costs(v, game.action_counts())?,
    };
    Ok((game, cost))
}

fn rebuild_caps(game: ConstrainedGame, caps: Vec<f64>) -> Result<ConstrainedGame> {
    let game = game.with_caps(caps)?;
    game.check_utility_range()
        .map_err(|e| Error::document("caps", e.to_string()))?;
    Ok(game)
}

fn check_caps(thresholds: &[f64], caps: &[f64]) -> Result<()> {
    for (k, (&g, &m)) in thresholds.iter().zip(caps).enumerate() {
        if m < 0.0 {
            return Err(Error::document(format!("caps[{k}]"), "cap must be >= 0"));
        }
        if g > m {
            return Err(Error::document(
                format!("players[{k}]"),
                "threshold exceeds utility cap",
            ));
        }
    }
    Ok(())
}

fn number_list(obj: &Map<String, Value>, key: &str, len: usize) -> Result<Vec<f64>> {
    let arr = obj
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| Error::document(key, "expected an array of numbers"))?;
    if arr.len() != len {
        return Err(Error::document(
            key,
            format!("expected {len} entries, got {}", arr.len()),
        ));
    }
    arr.iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::document(format!("{key}[{i}]"), "expected a finite number"))
        })
        .collect()
}

fn nested_path(counts: &[usize], mut index: usize) -> String {
    let mut parts = vec![0; counts.len()];
    for k in (0..counts.len()).rev() {
        parts[k] = index % counts[k];
        index /= counts[k];
    }
    parts.iter().map(|p| format!("[{p}]")).collect()
}

/// Reads `K` nested tables; the first one fixes the action counts.
fn parse_tables(value: &Value, players: usize) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    let arr = value
        .as_array()
        .ok_or_else(|| Error::document("utilities.table", "expected one table per player"))?;
    if arr.len() != players {
        return Err(Error::document(
            "utilities.table",
            format!("expected {players} tables, got {}", arr.len()),
        ));
    }
    let mut counts = Vec::with_capacity(players);
    let mut cursor = &arr[0];
    for depth in 0..players {
        let level = cursor.as_array().filter(|a| !a.is_empty()).ok_or_else(|| {
            Error::document(
                format!("utilities.table[0]{}", "[0]".repeat(depth)),
                "expected a nonempty array",
            )
        })?;
        counts.push(level.len());
        cursor = &level[0];
    }
    let mut tables = Vec::with_capacity(players);
    for (k, t) in arr.iter().enumerate() {
        let mut flat = Vec::new();
        flatten(t, &counts, 0, &mut format!("utilities.table[{k}]"), &mut flat)?;
        tables.push(flat);
    }
    Ok((counts, tables))
}

fn flatten(
    value: &Value,
    counts: &[usize],
    depth: usize,
    path: &mut String,
    out: &mut Vec<f64>,
) -> Result<()> {
    if depth == counts.len() {
        let x = value
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::document(path.clone(), "expected a finite number"))?;
        out.push(x);
        return Ok(());
    }
    let arr = value
        .as_array()
        .filter(|a| a.len() == counts[depth])
        .ok_or_else(|| {
            Error::document(
                path.clone(),
                format!("expected an array of length {}", counts[depth]),
            )
        })?;
    for (i, v) in arr.iter().enumerate() {
        let len = path.len();
        path.push_str(&format!("[{i}]"));
        flatten(v, counts, depth + 1, path, out)?;
        path.truncate(len);
    }
    Ok(())
}

fn parse_costs(value: &Value, counts: &[usize]) -> Result<CostModel> {
    let arr = value
        .as_array()
        .filter(|a| a.len() == counts.len())
        .ok_or_else(|| Error::document("costs", format!("expected {} per-player arrays", counts.len())))?;
    let mut costs = Vec::with_capacity(counts.len());
    for (k, row) in arr.iter().enumerate() {
        let row = row.as_array().filter(|r| r.len() == counts[k]).ok_or_else(|| {
            Error::document(format!("costs[{k}]"), format!("expected {} entries", counts[k]))
        })?;
        let mut parsed = Vec::with_capacity(row.len());
        for (a, c) in row.iter().enumerate() {
            let c = c.as_f64().filter(|c| (0.0..=1.0).contains(c)).ok_or_else(|| {
                Error::document(format!("costs[{k}][{a}]"), "cost must be a number in [0, 1]")
            })?;
            parsed.push(c);
        }
        costs.push(parsed);
    }
    CostModel::new(costs)
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Enumerate,
    Sesa,
    Brd,
    ChannelGen,
}

/// Parameters of a freshly sampled channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerParams {
    pub k: usize,
    pub snr_db: f64,
    pub levels: usize,
    pub gamma: Vec<f64>,
    pub seed: u64,
}

impl Default for SamplerParams {
    fn default() -> Self {
        SamplerParams {
            k: 2,
            snr_db: 10.0,
            levels: 32,
            gamma: vec![0.6, 1.2],
            seed: 7,
        }
    }
}

/// Where the game comes from. Exactly one variant per config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GameSource {
    /// Inline game document.
    Game(Value),
    /// Path to a game document.
    GameFile(PathBuf),
    /// Path to a channel document plus thresholds.
    Channel {
        path: PathBuf,
        gamma: Vec<f64>,
    },
    Sampler(SamplerParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SesaSettings {
    pub runs: u64,
    pub seed: u64,
    pub max_steps: u64,
    pub tail: u64,
    /// Constant learning rate; `None` uses `1 / (t + 1)`.
    pub learning_rate: Option<f64>,
    /// Number of runs (from run 0) whose traces are written; `None` = all.
    pub max_traces: Option<u64>,
}

impl Default for SesaSettings {
    fn default() -> Self {
        SesaSettings {
            runs: 1,
            seed: 0,
            max_steps: 10_000,
            tail: 0,
            learning_rate: None,
            max_traces: None,
        }
    }
}

impl SesaSettings {
    pub fn sesa_config(&self) -> SesaConfig {
        SesaConfig {
            max_steps: self.max_steps,
            tail: self.tail,
            learning_rate: self
                .learning_rate
                .map_or(LearningRate::Harmonic, LearningRate::Constant),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BrdSettings {
    /// Start profile; all zeros when absent.
    pub start: Option<Vec<usize>>,
    pub max_iters: usize,
}

impl Default for BrdSettings {
    fn default() -> Self {
        BrdSettings {
            start: None,
            max_iters: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// When set, must agree with the command being run.
    pub mode: Option<Mode>,
    pub source: Option<GameSource>,
    pub sesa: SesaSettings,
    pub brd: BrdSettings,
    /// Sampler used by `channel-gen`.
    pub channel: Option<SamplerParams>,
    pub out: Option<PathBuf>,
    /// Directory that relative paths in the config are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub runs: Option<u64>,
    pub max_steps: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_json(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sesa.runs == 0 {
            return Err(Error::document("sesa.runs", "must be at least 1"));
        }
        if self.sesa.max_steps == 0 {
            return Err(Error::document("sesa.max_steps", "must be at least 1"));
        }
        if self.brd.max_iters == 0 {
            return Err(Error::document("brd.max_iters", "must be at least 1"));
        }
        Ok(())
    }

    /// Applies command-line overrides for `mode`. `--seed` targets the
    /// run seed for `sesa` and the channel sampler otherwise.
    pub fn apply(&mut self, mode: Mode, o: &Overrides) -> Result<()> {
        if let Some(m) = self.mode {
            if m != mode {
                return Err(Error::document(
                    "mode",
                    format!("config is for {m:?}, not {mode:?}"),
                ));
            }
        }
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
        if let Some(runs) = o.runs {
            self.sesa.runs = runs;
        }
        if let Some(steps) = o.max_steps {
            self.sesa.max_steps = steps;
        }
        if let Some(seed) = o.seed {
            match mode {
                Mode::Sesa => self.sesa.seed = seed,
                Mode::ChannelGen => self.channel.get_or_insert_with(Default::default).seed = seed,
                Mode::Enumerate | Mode::Brd => {
                    if let Some(GameSource::Sampler(p)) = &mut self.source {
                        p.seed = seed;
                    }
                }
            }
        }
        self.validate()
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        match &self.out {
            Some(p) => self.resolve(p),
            None => self.base_dir.clone(),
        }
    }

    /// Builds the game and cost model named by `source`.
    pub fn load_source(&self) -> Result<(ConstrainedGame, CostModel)> {
        match self.source.as_ref() {
            None => Err(Error::document("source", "a game source is required")),
            Some(GameSource::Game(doc)) => game_from_value(doc),
            Some(GameSource::GameFile(path)) => {
                let path = self.resolve(path);
                load_game(&fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?)
            }
            Some(GameSource::Channel { path, gamma }) => {
                let path = self.resolve(path);
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                let channel: InterferenceChannel = serde_json::from_str(&text)
                    .map_err(|e| Error::document("source.channel.path", e.to_string()))?;
                to_game(&channel, gamma)
            }
            Some(GameSource::Sampler(p)) => {
                let channel = sample_params(p)?;
                to_game(&channel, &p.gamma)
            }
        }
    }
}

fn sample_params(p: &SamplerParams) -> Result<InterferenceChannel> {
    if p.k == 0 {
        return Err(Error::document("k", "need at least one link"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    sample_channel(&mut rng, p.k, p.snr_db, p.levels)
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// One row of the rate map: a profile, its action values, utilities and
/// equilibrium membership.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateMapRow {
    pub profile_index: usize,
    pub profile: ActionProfile,
    pub action_values: Vec<f64>,
    pub utilities: Vec<f64>,
    pub ne: bool,
    pub gne: bool,
    pub se: bool,
    pub ese: bool,
}

/// Per-profile dataset derived from a single report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateMapDataset {
    pub players: usize,
    pub rows: Vec<RateMapRow>,
}

impl RateMapDataset {
    pub fn build(game: &ConstrainedGame, report: &EquilibriumReport) -> Self {
        let k = game.num_players();
        let table = game.utility_table();
        let rows = game
            .profiles()
            .enumerate()
            .map(|(i, s)| RateMapRow {
                profile_index: i,
                action_values: s
                    .iter()
                    .enumerate()
                    .map(|(j, &a)| game.action_value(j, a))
                    .collect(),
                utilities: table[i * k..(i + 1) * k].to_vec(),
                ne: report.ne_set.contains(&s),
                gne: report.gne_set.contains(&s),
                se: report.se_set.contains(&s),
                ese: report.ese_set.contains(&s),
                profile: s,
            })
            .collect();
        RateMapDataset { players: k, rows }
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["profile".to_string()];
        for prefix in ["a", "p", "u"] {
            h.extend((1..=self.players).map(|k| format!("{prefix}{k}")));
        }
        h.extend(["ne", "gne", "se", "ese"].map(String::from));
        h
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv_writer(path)?;
        w.write_record(self.header())?;
        for row in &self.rows {
            let mut rec = vec![row.profile_index.to_string()];
            rec.extend(row.profile.iter().map(|a| a.to_string()));
            rec.extend(row.action_values.iter().map(|v| v.to_string()));
            rec.extend(row.utilities.iter().map(|u| u.to_string()));
            rec.extend([row.ne, row.gne, row.se, row.ese].map(|b| flag(b).to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone)]
pub struct EnumerateOutput {
    pub report: EquilibriumReport,
    pub dataset: RateMapDataset,
    /// No profile satisfies everyone.
    pub infeasible: bool,
    pub report_path: PathBuf,
    pub rate_map_path: PathBuf,
}

/// Enumerates every equilibrium set, writing `report.json` and
/// `rate_map.csv` to the output directory.
pub fn cmd_enumerate(config: &ExperimentConfig) -> Result<EnumerateOutput> {
    let (game, cost) = config.load_source()?;
    let report = EquilibriumReport::compute(&game, &cost)?;
    let dataset = RateMapDataset::build(&game, &report);
    let out = config.out_dir();
    create_dir(&out)?;
    let report_path = out.join(REPORT_FILE);
    let rate_map_path = out.join(RATE_MAP_FILE);
    write_json(&report_path, &report)?;
    dataset.write_csv(&rate_map_path)?;
    Ok(EnumerateOutput {
        infeasible: report.se_set.is_empty(),
        report,
        dataset,
        report_path,
        rate_map_path,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTimes {
    pub mean: f64,
    pub p50: u64,
    pub p90: u64,
    pub p99: u64,
    pub max: u64,
}

impl ConvergenceTimes {
    /// Nearest-rank percentiles; `None` for an empty sample.
    pub fn from_times(times: &[u64]) -> Option<Self> {
        if times.is_empty() {
            return None;
        }
        let mut sorted = times.to_vec();
        sorted.sort_unstable();
        let rank = |q: f64| {
            let r = (q * sorted.len() as f64).ceil() as usize;
            sorted[r.clamp(1, sorted.len()) - 1]
        };
        Some(ConvergenceTimes {
            mean: sorted.iter().sum::<u64>() as f64 / sorted.len() as f64,
            p50: rank(0.5),
            p90: rank(0.9),
            p99: rank(0.99),
            max: *sorted.last().expect("nonempty"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: u64,
    pub converged_at: Option<u64>,
    pub terminal: ActionProfile,
    pub terminal_index: usize,
    pub terminal_in_se: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SesaSummary {
    pub runs: u64,
    pub seed: u64,
    pub max_steps: u64,
    pub learning_rate: LearningRate,
    pub se_size: usize,
    pub converged_runs: u64,
    pub convergence_frequency: f64,
    pub convergence_time: Option<ConvergenceTimes>,
    /// Terminal profile index -> number of runs ending there.
    pub terminal_histogram: BTreeMap<usize, u64>,
    pub per_run: Vec<RunSummary>,
}

#[derive(Debug, Clone)]
pub struct SesaOutput {
    pub summary: SesaSummary,
    pub infeasible: bool,
    pub summary_path: PathBuf,
    pub trace_paths: Vec<PathBuf>,
}

/// Runs `sesa.runs` independent searches, writing one trace CSV per run
/// (up to `max_traces`) and `summary.json`.
pub fn cmd_sesa(config: &ExperimentConfig) -> Result<SesaOutput> {
    let (game, cost) = config.load_source()?;
    let report = EquilibriumReport::compute(&game, &cost)?;
    let settings = &config.sesa;
    let sesa = settings.sesa_config();
    let outcomes = monte_carlo(&game, &sesa, settings.seed, settings.runs)?;

    let out = config.out_dir();
    create_dir(&out)?;
    let traced = settings.max_traces.unwrap_or(settings.runs).min(settings.runs);
    let mut trace_paths = Vec::with_capacity(traced as usize);
    for run in 0..traced {
        let path = out.join(trace_file_name(run));
        let replay = write_trace(&game, &sesa, settings.seed, run, &path)?;
        debug_assert_eq!(replay, outcomes[run as usize]);
        trace_paths.push(path);
    }

    let summary = summarize(&game, &report, settings, sesa.learning_rate, &outcomes);
    let summary_path = out.join(SUMMARY_FILE);
    write_json(&summary_path, &summary)?;
    Ok(SesaOutput {
        summary,
        infeasible: report.se_set.is_empty(),
        summary_path,
        trace_paths,
    })
}

fn summarize(
    game: &ConstrainedGame,
    report: &EquilibriumReport,
    settings: &SesaSettings,
    learning_rate: LearningRate,
    outcomes: &[SesaOutcome],
) -> SesaSummary {
    let mut histogram = BTreeMap::new();
    let mut times = Vec::new();
    let per_run: Vec<RunSummary> = outcomes
        .iter()
        .enumerate()
        .map(|(run, o)| {
            let idx = game.profile_index(&o.terminal);
            *histogram.entry(idx).or_insert(0) += 1;
            times.extend(o.converged_at);
            RunSummary {
                run: run as u64,
                converged_at: o.converged_at,
                terminal_index: idx,
                terminal_in_se: report.se_set.contains(&o.terminal),
                terminal: o.terminal.clone(),
            }
        })
        .collect();
    SesaSummary {
        runs: settings.runs,
        seed: settings.seed,
        max_steps: settings.max_steps,
        learning_rate,
        se_size: report.se_set.len(),
        converged_runs: times.len() as u64,
        convergence_frequency: times.len() as f64 / settings.runs as f64,
        convergence_time: ConvergenceTimes::from_times(&times),
        terminal_histogram: histogram,
        per_run,
    }
}

/// Replays run `run` and streams its trace to `path`.
fn write_trace(
    game: &ConstrainedGame,
    sesa: &SesaConfig,
    seed: u64,
    run: u64,
    path: &Path,
) -> Result<SesaOutcome> {
    let mut w = csv_writer(path)?;
    w.write_record(TRACE_HEADER)?;
    let mut converged_at = None;
    let mut failure = None;
    let last = run_sesa_with(game, sesa, &mut run_rng(seed, run), |state, c| {
        converged_at = c;
        if failure.is_some() {
            return;
        }
        for k in 0..game.num_players() {
            let a = state.current_actions[k];
            let rec = [
                state.t.to_string(),
                (k + 1).to_string(),
                a.to_string(),
                game.action_value(k, a).to_string(),
                state.last_utilities[k].to_string(),
                flag(state.satisfied[k]).to_string(),
            ];
            if let Err(e) = w.write_record(&rec) {
                failure = Some(e);
                return;
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(SesaOutcome {
        converged_at,
        terminal: last.current_actions,
        steps: last.t,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrdReport {
    pub start: ActionProfile,
    #[serde(flatten)]
    pub outcome: BrdOutcome,
    pub in_se: bool,
    pub in_gne: bool,
}

pub struct BrdOutput {
    pub report: BrdReport,
    pub path: PathBuf,
}

/// Runs best-response dynamics from the configured start and writes
/// `brd.json`.
pub fn cmd_brd(config: &ExperimentConfig) -> Result<BrdOutput> {
    let (game, cost) = config.load_source()?;
    let start = ActionProfile::new(
        config
            .brd
            .start
            .clone()
            .unwrap_or_else(|| vec![0; game.num_players()]),
    );
    game.check_profile(&start)
        .map_err(|e| Error::document("brd.start", e.to_string()))?;
    let outcome = run_brd(&game, &start, config.brd.max_iters)?;
    let eq = EquilibriumReport::compute(&game, &cost)?;
    let report = BrdReport {
        in_se: eq.se_set.contains(&outcome.profile),
        in_gne: eq.gne_set.contains(&outcome.profile),
        start,
        outcome,
    };
    let out = config.out_dir();
    create_dir(&out)?;
    let path = out.join(BRD_FILE);
    write_json(&path, &report)?;
    Ok(BrdOutput { report, path })
}

/// Channel document as written by `channel-gen`, tagged with how it was
/// drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDocument {
    #[serde(flatten)]
    pub channel: InterferenceChannel,
    pub seed: u64,
    pub snr_db: f64,
}

pub struct ChannelGenOutput {
    pub document: ChannelDocument,
    pub path: PathBuf,
}

/// Samples a channel and writes `channel.json`.
pub fn cmd_channel_gen(config: &ExperimentConfig) -> Result<ChannelGenOutput> {
    let params = config.channel.clone().unwrap_or_default();
    let channel = sample_params(&params)?;
    let document = ChannelDocument {
        channel,
        seed: params.seed,
        snr_db: params.snr_db,
    };
    let out = config.out_dir();
    create_dir(&out)?;
    let path = out.join(CHANNEL_FILE);
    write_json(&path, &document)?;
    Ok(ChannelGenOutput { document, path })
}

/// Writes a short human-readable line per report to `w`.
pub fn describe_report<W: Write>(w: &mut W, report: &EquilibriumReport) -> std::io::Result<()> {
    let show = |set: &std::collections::BTreeSet<ActionProfile>| {
        if set.len() <= 8 {
            set.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
        } else {
            format!("{} profiles", set.len())
        }
    };
    writeln!(w, "NE:  {}", show(&report.ne_set))?;
    writeln!(w, "GNE: {}", show(&report.gne_set))?;
    writeln!(w, "SE:  {}", show(&report.se_set))?;
    writeln!(w, "ESE: {}", show(&report.ese_set))?;
    writeln!(w, "blocking clipping: {}", report.blocking_clipping)
}
