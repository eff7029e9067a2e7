//! Entry points behind the `acc-cutin` subcommands. Every command resolves
//! its full configuration up front, writes its outputs atomically and leaves
//! a `<output>.manifest.json` next to the main output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dde::ParamSet;
use crate::error::{Error, Result};
use crate::lambert;
use crate::params::{self, Population, SamplerSpec};
use crate::safety::{self, Axis, AxisRange, SweepGrid};
use crate::scenario::{self, InitialState, Mode, ScenarioConfig, ScenarioRun};
use crate::stability;

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    let mut w = BufWriter::new(tmp.reopen()?);
    f(&mut w)?;
    w.flush()?;
    w.get_ref().sync_all()?;
    drop(w);
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Key-value scenario file (TOML syntax). Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub a1: Option<f64>,
    pub a2: Option<f64>,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub vf0: Option<f64>,
    pub lprime: Option<f64>,
    pub tl_start: Option<f64>,
    pub dt: Option<f64>,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub ufb: Option<f64>,
    pub mode: Option<String>,
    pub seed: Option<u64>,
    pub umax: Option<f64>,
    pub saturate: Option<bool>,
    pub horizon: Option<f64>,
    pub branches: Option<usize>,
    pub success_prob: Option<f64>,
    pub pl0: Option<f64>,
    pub vl0: Option<f64>,
    pub pf0: Option<f64>,
    pub af0: Option<f64>,
    pub pc0: Option<f64>,
    pub vc0: Option<f64>,
    pub ds_l: Option<f64>,
    pub dv_l: Option<f64>,
    pub ds_c: Option<f64>,
    pub dv_c: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    fn has_deviations(&self) -> bool {
        [self.ds_l, self.dv_l, self.ds_c, self.dv_c].iter().any(Option::is_some)
    }

    fn has_kinematics(&self) -> bool {
        [self.pl0, self.vl0, self.pf0, self.pc0, self.vc0].iter().any(Option::is_some)
    }

    /// The initial state this file asks for, if it names one.
    fn initial(&self) -> Result<Option<InitialState>> {
        let v_f = self.vf0.unwrap_or(20.0);
        let a_f = self.af0.unwrap_or(0.0);
        match (self.has_deviations(), self.has_kinematics()) {
            (true, true) => Err(Error::Config(
                "give either deviations (ds_l, dv_l, ds_c, dv_c) or kinematics (pl0, vl0, pf0, pc0, vc0), not both".into(),
            )),
            (true, false) => Ok(Some(InitialState::Deviations {
                ds_l: self.ds_l.unwrap_or(0.0),
                dv_l: self.dv_l.unwrap_or(0.0),
                ds_c: self.ds_c.unwrap_or(0.0),
                dv_c: self.dv_c.unwrap_or(0.0),
                v_f,
                a_f,
            })),
            (false, true) => Ok(Some(InitialState::Kinematics {
                p_l: self.pl0.unwrap_or(100.0),
                v_l: self.vl0.unwrap_or(20.0),
                p_f: self.pf0.unwrap_or(50.0),
                v_f,
                a_f,
                p_c: self.pc0.unwrap_or(110.0),
                v_c: self.vc0.unwrap_or(20.0),
            })),
            (false, false) if self.vf0.is_some() || self.af0.is_some() => Ok(Some(InitialState::Kinematics {
                p_l: 100.0,
                v_l: 20.0,
                p_f: 50.0,
                v_f,
                a_f,
                p_c: 110.0,
                v_c: 20.0,
            })),
            (false, false) => Ok(None),
        }
    }

    /// Applies the file on top of `base`.
    pub fn apply(&self, base: &ScenarioConfig) -> Result<ScenarioConfig> {
        let mut c = base.clone();
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut c.profile.a1, self.a1);
        set(&mut c.profile.a2, self.a2);
        set(&mut c.profile.t1, self.t1);
        set(&mut c.profile.t2, self.t2);
        set(&mut c.lprime, self.lprime);
        set(&mut c.tl_start, self.tl_start);
        set(&mut c.dt, self.dt);
        set(&mut c.theta, self.theta);
        set(&mut c.phi, self.phi);
        set(&mut c.ufb, self.ufb);
        set(&mut c.umax, self.umax);
        set(&mut c.horizon, self.horizon);
        set(&mut c.anticipation_success_prob, self.success_prob);
        if let Some(m) = &self.mode {
            c.mode = m.parse()?;
        }
        if let Some(s) = self.saturate {
            c.saturate = s;
        }
        if let Some(n) = self.branches {
            c.branches = n;
        }
        if let Some(i) = self.initial()? {
            c.initial = i;
        }
        Ok(c)
    }
}

#[derive(Debug, Parser)]
#[command(name = "acc-cutin", version, about = "Delayed and anticipatory ACC under cut-in maneuvers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one cut-in and write its trajectory.
    Simulate(SimulateArgs),
    /// Classify a parameter population as stable or unstable.
    Stability(StabilityArgs),
    /// Collision probability over a grid of initial conditions, delays or anticipations.
    Sweep(SweepArgs),
    /// Distribution of inverse time-to-collision over a population.
    TtcDist(TtcDistArgs),
    /// Branches of the scalar Lambert W function on a real grid.
    LambertPlot(LambertPlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    FullFeedback,
    WorstCaseBraking,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::FullFeedback => Mode::FullFeedback,
            ModeArg::WorstCaseBraking => Mode::WorstCaseBraking,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// Scenario file (TOML key = value).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sensing delay θ, s.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Anticipation φ, s.
    #[arg(long)]
    pub phi: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Braking bound u_f^b, m/s².
    #[arg(long, allow_hyphen_values = true)]
    pub ufb: Option<f64>,
    /// Replace the cut-in profile with zero acceleration.
    #[arg(long)]
    pub flat_profile: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PopulationArgs {
    /// Parameter CSV (id,ks,kv,ka,tau,l,TL).
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Draw this many stable sets from the synthetic sampler instead.
    #[arg(long, conflicts_with = "params")]
    pub synthetic: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Parameter CSV; the reference set when omitted.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Row id to use from the parameter file (first row by default).
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long, default_value = "trajectory.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub population: PopulationArgs,
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    /// Relative spread of the synthetic sampler around the reference set.
    #[arg(long, default_value_t = 0.2)]
    pub spread: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "stability.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    Cutin,
    Leader,
    DelayAnticipation,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(value_enum)]
    pub kind: SweepKind,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub population: PopulationArgs,
    /// Grid axis `name=lo:hi:step` (ds_c, dv_c, ds_l, dv_l, theta, phi);
    /// repeat to replace the default axes.
    #[arg(long = "axis", allow_hyphen_values = true)]
    pub axes: Vec<String>,
    /// Probability that an anticipated cut-in is predicted correctly.
    #[arg(long)]
    pub success_prob: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TtcDistArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub population: PopulationArgs,
    #[arg(long)]
    pub success_prob: Option<f64>,
    #[arg(long, default_value = "ttc_dist.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LambertPlotArgs {
    /// Branches k = −K..=K.
    #[arg(long, default_value_t = 3)]
    pub branches: i32,
    /// Real grid `lo:hi:count`; `lo` may be `-1/e`.
    #[arg(long, default_value = "-1/e:5:201", allow_hyphen_values = true)]
    pub grid: String,
    #[arg(long, default_value = "lambert.csv")]
    pub out: PathBuf,
}

/// Record of one command invocation, written next to its main output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub version: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub params: serde_json::Value,
    pub outputs: Vec<String>,
    pub duration_s: f64,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

impl RunManifest {
    fn new(command: &str, seed: Option<u64>, config: serde_json::Value, params: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            args: std::env::args().collect(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            params,
            outputs: vec![],
            duration_s: 0.0,
        }
    }

    fn finish(mut self, main_out: &Path, outputs: &[&Path], started: Instant) -> Result<PathBuf> {
        self.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
        self.duration_s = started.elapsed().as_secs_f64();
        let path = manifest_path(main_out);
        write_atomic(&path, |f| {
            serde_json::to_writer_pretty(&mut *f, &self)?;
            writeln!(f)?;
            Ok(())
        })?;
        Ok(path)
    }
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

fn population_json(pop: &Population) -> serde_json::Value {
    serde_json::json!({ "count": pop.len(), "provenance": to_json(&pop.provenance) })
}

/// Defaults, then the config file, then flags. Returns the config and seed.
fn resolve_scenario(args: &ScenarioArgs, base: ScenarioConfig) -> Result<(ScenarioConfig, u64, bool)> {
    let file = match &args.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let mut c = file.apply(&base)?;
    let explicit_initial = file.initial()?.is_some();
    if let Some(t) = args.theta {
        c.theta = t;
    }
    if let Some(p) = args.phi {
        c.phi = p;
    }
    if let Some(m) = args.mode {
        c.mode = m.into();
    }
    if let Some(u) = args.ufb {
        c.ufb = u;
    }
    if args.flat_profile {
        c.profile = c.profile.flat();
    }
    let seed = args.seed.or(file.seed).unwrap_or(1);
    c.validate()?;
    Ok((c, seed, explicit_initial))
}

/// Stable synthetic sets (at θ = 0.3) drawn around the reference set.
pub fn synthetic_stable(count: usize, seed: u64) -> Result<Population> {
    let raw = params::synth_sample(&SamplerSpec::default_with(count * 4, seed))?;
    let pop = params::filter_stable(&raw, 0.3, Some(count))?;
    if pop.len() < count {
        return Err(Error::invalid(
            "synthetic",
            format!("only {} of {} draws are stable, need {count}", pop.len(), count * 4),
        ));
    }
    Ok(pop)
}

fn resolve_population(args: &PopulationArgs, default_count: usize, seed: u64) -> Result<Population> {
    match (&args.params, args.synthetic) {
        (Some(p), _) => params::load(p),
        (None, Some(n)) => synthetic_stable(n, seed),
        (None, None) => synthetic_stable(default_count, seed),
    }
}

fn check_parent(out: &Path) -> Result<()> {
    if let Some(d) = out.parent() {
        if !d.as_os_str().is_empty() && !d.is_dir() {
            return Err(Error::invalid("out", format!("directory {} does not exist", d.display())));
        }
    }
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let started = Instant::now();
    check_parent(&args.out)?;
    let (cfg, seed, _) = resolve_scenario(&args.scenario, ScenarioConfig::default())?;
    let pop = match &args.params {
        Some(p) => params::load(p)?,
        None => Population::single(ParamSet::REFERENCE)?,
    };
    let (id, p) = match &args.id {
        Some(id) => pop
            .sets
            .iter()
            .find(|(i, _)| i == id)
            .cloned()
            .ok_or_else(|| Error::invalid("id", format!("no parameter set {id:?}")))?,
        None => pop.sets[0].clone(),
    };
    let run = ScenarioRun::new(&cfg, &p)?;
    let tr = run.sample()?;
    let g = scenario::min_gap(&tr);
    tr.save(&args.out)?;
    println!(
        "{id}: min gap {:.3} m at t = {:.2} s{}; final gap {:.3} m ({} engine)",
        g.value,
        g.time - cfg.tl_start,
        if g.collision { ", collision" } else { "" },
        tr.gap.last().copied().unwrap_or(f64::NAN),
        run.engine()
    );
    let m = RunManifest::new(
        "simulate",
        Some(seed),
        to_json(&cfg),
        serde_json::json!({ "id": id, "set": to_json(&p), "source": to_json(&pop.provenance) }),
    );
    m.finish(&args.out, &[&args.out], started)?;
    Ok(())
}

pub fn cmd_stability(args: &StabilityArgs) -> Result<()> {
    let started = Instant::now();
    check_parent(&args.out)?;
    let pop = match (&args.population.params, args.population.synthetic) {
        (Some(p), _) => params::load(p)?,
        (None, Some(n)) => params::synth_sample(&SamplerSpec::around(ParamSet::REFERENCE, args.spread, n, args.seed))?,
        (None, None) => Population::single(ParamSet::REFERENCE)?,
    };
    let scan = stability::stability_scan(&pop, args.theta)?;
    scan.save(&args.out)?;
    let (s, u, f) = scan.counts();
    println!("θ = {}: {s} stable, {u} unstable, {f} failed of {}", args.theta, pop.len());
    let m = RunManifest::new(
        "stability",
        Some(args.seed),
        serde_json::json!({ "theta": args.theta, "spread": args.spread }),
        population_json(&pop),
    );
    m.finish(&args.out, &[&args.out], started)?;
    Ok(())
}

/// `name=lo:hi:step`.
pub fn parse_axis(s: &str) -> Result<AxisRange> {
    let bad = || Error::invalid("axis", format!("expected name=lo:hi:step, got {s:?}"));
    let (name, range) = s.split_once('=').ok_or_else(bad)?;
    let parts: Vec<f64> = range
        .split(':')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    let axis: Axis = name.trim().parse()?;
    match parts[..] {
        [v] => Ok(AxisRange::fixed(axis, v)),
        [lo, hi, step] => AxisRange::new(axis, lo, hi, step),
        _ => Err(bad()),
    }
}

pub fn default_axes(kind: SweepKind) -> Vec<AxisRange> {
    let r = |a, lo, hi, step| AxisRange { axis: a, lo, hi, step };
    match kind {
        SweepKind::Cutin => vec![r(Axis::DsC, -5.0, 0.0, 0.5), r(Axis::DvC, -5.0, 0.0, 0.5)],
        SweepKind::Leader => vec![r(Axis::DsL, 0.0, 5.0, 0.5), r(Axis::DvL, 0.0, 5.0, 0.5)],
        SweepKind::DelayAnticipation => vec![r(Axis::Theta, 0.0, 0.3, 0.1), r(Axis::Phi, 0.0, 2.0, 0.1)],
    }
}

/// Population sizes used when no parameter file is given.
pub fn default_population_size(kind: SweepKind) -> usize {
    match kind {
        SweepKind::DelayAnticipation => 200,
        _ => 50,
    }
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let started = Instant::now();
    let kind_name = match args.kind {
        SweepKind::Cutin => "cutin",
        SweepKind::Leader => "leader",
        SweepKind::DelayAnticipation => "delay-anticipation",
    };
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from(format!("sweep_{kind_name}.csv")));
    check_parent(&out)?;
    let (mut cfg, seed, explicit_initial) = resolve_scenario(&args.scenario, safety::ttc_config(&ScenarioConfig::default()))?;
    if !explicit_initial {
        cfg.initial = InitialState::HIGH_RISK;
    }
    cfg.anticipation_success_prob = match (args.success_prob, args.kind) {
        (Some(p), _) => p,
        (None, SweepKind::DelayAnticipation) => 0.997,
        (None, _) => cfg.anticipation_success_prob,
    };
    cfg.validate()?;
    let axes = if args.axes.is_empty() {
        default_axes(args.kind)
    } else {
        args.axes.iter().map(|a| parse_axis(a)).collect::<Result<_>>()?
    };
    let grid = SweepGrid::new(axes)?;
    let pop = resolve_population(&args.population, default_population_size(args.kind), seed)?;
    let result = safety::sweep(&grid, &cfg, &pop, seed)?;
    result.save(&out)?;
    let mut outputs = vec![out.clone()];
    if args.population.params.is_none() {
        let p = out.with_extension("params.csv");
        pop.save(&p)?;
        outputs.push(p);
    }
    let errors: usize = result.cells.iter().map(|c| c.errors.len()).sum();
    let worst = result
        .cells
        .iter()
        .filter_map(|c| c.aggregate.as_ref().map(|a| a.collision_probability))
        .fold(0.0, f64::max);
    println!(
        "{kind_name}: {} cells × {} sets, max collision probability {worst:.3}, {errors} failures",
        result.cells.len(),
        pop.len()
    );
    let m = RunManifest::new(
        &format!("sweep {kind_name}"),
        Some(seed),
        serde_json::json!({ "scenario": to_json(&cfg), "grid": to_json(&grid) }),
        population_json(&pop),
    );
    let refs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    m.finish(&out, &refs, started)?;
    Ok(())
}

pub fn cmd_ttc_dist(args: &TtcDistArgs) -> Result<()> {
    let started = Instant::now();
    check_parent(&args.out)?;
    let (mut cfg, seed, explicit_initial) = resolve_scenario(&args.scenario, safety::ttc_config(&ScenarioConfig::default()))?;
    if !explicit_initial {
        cfg.initial = InitialState::HIGH_RISK;
    }
    if let Some(p) = args.success_prob {
        cfg.anticipation_success_prob = p;
    }
    cfg.validate()?;
    let pop = resolve_population(&args.population, 50, seed)?;
    let agg = safety::aggregate(&pop, &cfg, seed)?;
    write_atomic(&args.out, |f| safety::write_distribution(&agg, f))?;
    println!(
        "M = {}: E[1/t*] = {:.4} 1/s, collision probability {:.3}",
        agg.m, agg.expectation_inverse_ttc, agg.collision_probability
    );
    let m = RunManifest::new("ttc-dist", Some(seed), to_json(&cfg), population_json(&pop));
    m.finish(&args.out, &[&args.out], started)?;
    Ok(())
}

/// `lo:hi:count` with `lo`/`hi` possibly `-1/e`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::invalid("grid", format!("expected lo:hi:count, got {s:?}"));
    let num = |x: &str| -> Result<f64> {
        match x.trim() {
            "-1/e" => Ok(-(-1.0f64).exp()),
            v => v.parse().map_err(|_| bad()),
        }
    };
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts[..] else { return Err(bad()) };
    let (lo, hi) = (num(lo)?, num(hi)?);
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n < 2 || !(lo < hi) {
        return Err(bad());
    }
    Ok((0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect())
}

/// Rows `(y, k, Re w_k(y), Im w_k(y))`. Points where a branch is undefined
/// (`y = 0` off the principal branch) are skipped.
pub fn lambert_rows(branches: i32, grid: &[f64]) -> Result<Vec<(f64, i32, f64, f64)>> {
    if branches < 0 {
        return Err(Error::invalid("branches", "must be >= 0"));
    }
    let mut rows = Vec::new();
    for k in -branches..=branches {
        for &y in grid {
            match lambert::scalar_w(k, crate::linalg::c(y, 0.0)) {
                Ok(w) => rows.push((y, k, w.re, w.im)),
                Err(Error::LambertDomain { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(rows)
}

pub fn cmd_lambert_plot(args: &LambertPlotArgs) -> Result<()> {
    let started = Instant::now();
    check_parent(&args.out)?;
    let grid = parse_grid(&args.grid)?;
    let rows = lambert_rows(args.branches, &grid)?;
    write_atomic(&args.out, |f| {
        let mut w = csv::Writer::from_writer(f);
        w.write_record(["y", "k", "re", "im"])?;
        for (y, k, re, im) in &rows {
            w.write_record([y.to_string(), k.to_string(), re.to_string(), im.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    println!("{} rows over k = {}..={}", rows.len(), -args.branches, args.branches);
    let m = RunManifest::new(
        "lambert-plot",
        None,
        serde_json::json!({ "branches": args.branches, "grid": args.grid }),
        serde_json::Value::Null,
    );
    m.finish(&args.out, &[&args.out], started)?;
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Stability(a) => cmd_stability(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::TtcDist(a) => cmd_ttc_dist(a),
        Command::LambertPlot(a) => cmd_lambert_plot(a),
    }
}

/// 0 on success, 2 for bad input, 1 for numerical failures.
pub fn exit_code(result: &Result<()>) -> i32 {
    match result {
        Ok(()) => 0,
        Err(e) if e.is_input_error() => 2,
        Err(_) => 1,
    }
}
