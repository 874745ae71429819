//! Command-line front end. Every subcommand writes one report to stdout (or `--out`);
//! diagnostics go to stderr.
//!
//! Exit codes: 0 pass, 1 assertion failure, 2 config or input error, 3 numerical failure.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{
    below_band, bs_check, critical_coupling, default_coarse_n, positivity_check,
    resonance_analysis, threshold_count, verify_cheksiz, verify_existence, verify_neraven,
    Tolerances, ZSchedule,
};
use crate::dispersion::{band_geometry, BandGeometry};
use crate::error::{Error, Result};
use crate::model::{load_potential_file, MassPair, MomentumGrid, Potential, Quasimomentum};
use crate::operators::build_h;
use crate::sampling;
use crate::spectral::{count_above, count_below, default_tie_tol, verify_counting_theorem};

pub const THREADS_ENV: &str = "LATTICE_SPECTRA_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "lattice-spectra",
    version,
    about = "Spectral analysis of two-particle lattice Schrodinger operators"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form band geometry per k.
    Band(CommonArgs),
    /// Eigenvalues of H(k) and the counts outside the band.
    Spectrum(CommonArgs),
    /// Run theorem checks; exit 1 if any assertion fails.
    Verify {
        #[arg(long, value_delimiter = ',', required = true)]
        suite: Vec<Suite>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Critical coupling of the potential, optionally Richardson-refined.
    Critical(CommonArgs),
    /// Plot data along a k-path.
    Plotdata {
        #[arg(long)]
        quantity: Quantity,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Counting,
    Neraven,
    Bs,
    Threshold,
    Existence,
    Cheksiz,
    Positivity,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Counting => "counting",
            Suite::Neraven => "neraven",
            Suite::Bs => "bs",
            Suite::Threshold => "threshold",
            Suite::Existence => "existence",
            Suite::Cheksiz => "cheksiz",
            Suite::Positivity => "positivity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    #[value(name = "band_edges", alias = "band-edges")]
    BandEdges,
    #[value(name = "below_band_eigs", alias = "below-band-eigs")]
    BelowBandEigs,
    #[value(name = "bs_counts", alias = "bs-counts")]
    BsCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Particle masses m1,m2.
    #[arg(long, default_value = "1,1")]
    pub masses: String,
    /// Potential file ({"sites": [{"s": [i, j, k], "v": value}, ...]}); empty if omitted.
    #[arg(long)]
    pub potential: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    pub grid: usize,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub offset: f64,
    /// Quasimomentum a,b,c; repeatable. Components accept expressions like pi/2 or -3pi/4.
    #[arg(long, allow_hyphen_values = true)]
    pub k: Vec<String>,
    /// Segment a,b,c:d,e,f:COUNT with COUNT equally spaced points including both ends.
    #[arg(long = "k-path", conflicts_with = "k", allow_hyphen_values = true)]
    pub k_path: Option<String>,
    #[arg(long = "z-delta0", default_value_t = 1.0)]
    pub z_delta0: f64,
    #[arg(long = "z-ratio", default_value_t = 0.1)]
    pub z_ratio: f64,
    #[arg(long = "z-steps", default_value_t = 7)]
    pub z_steps: usize,
    /// Absolute tie band for counts; default 1e-9 * max(1, |A|) per spectrum.
    #[arg(long = "tie-tol")]
    pub tie_tol: Option<f64>,
    #[arg(long = "unit-tol", default_value_t = 1e-6)]
    pub unit_tol: f64,
    #[arg(long = "overlap-tol", default_value_t = 1e-6)]
    pub overlap_tol: f64,
    /// Relative nonnegativity band: eigenvalues >= -pos_tol * |H| pass.
    #[arg(long = "pos-tol", default_value_t = 1e-8)]
    pub pos_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trials for randomized suites (counting 200, bs 50, positivity 20 by default).
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub refine: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<Format>,
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub masses: MassPair,
    pub potential_path: Option<PathBuf>,
    pub potential: Potential,
    pub grid: MomentumGrid,
    pub k_points: Option<Vec<Quasimomentum>>,
    pub schedule: ZSchedule,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub trials: Option<usize>,
    pub refine: bool,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Serialize)]
struct ConfigEcho {
    masses: [f64; 2],
    potential: Option<String>,
    grid: usize,
    offset: f64,
    z_schedule: ZSchedule,
    tolerances: Tolerances,
    seed: u64,
}

impl RunConfig {
    pub fn from_args(args: &CommonArgs) -> Result<Self> {
        let masses = parse_masses(&args.masses)?;
        let potential = match &args.potential {
            Some(p) => load_potential_file(p)?,
            None => Potential::empty(),
        };
        let grid = MomentumGrid::new(args.grid, args.offset)?;
        let k_points = match (&args.k_path, args.k.is_empty()) {
            (Some(path), _) => Some(parse_k_path(path)?),
            (None, false) => Some(args.k.iter().map(|s| parse_k(s)).collect::<Result<_>>()?),
            (None, true) => None,
        };
        let schedule = ZSchedule::new(args.z_delta0, args.z_ratio, args.z_steps)?;
        for (name, v) in [
            ("unit-tol", args.unit_tol),
            ("overlap-tol", args.overlap_tol),
            ("pos-tol", args.pos_tol),
        ]
        .into_iter()
        .chain(args.tie_tol.map(|t| ("tie-tol", t)))
        {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("--{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            masses,
            potential_path: args.potential.clone(),
            potential,
            grid,
            k_points,
            schedule,
            tolerances: Tolerances {
                tie_tol: args.tie_tol,
                unit_tol: args.unit_tol,
                overlap_tol: args.overlap_tol,
                pos_tol: args.pos_tol,
                edge_margin: 0.0,
            },
            seed: args.seed,
            trials: args.trials,
            refine: args.refine,
            out: args.out.clone(),
            format: args.format,
        })
    }

    fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            masses: [self.masses.m1(), self.masses.m2()],
            potential: self
                .potential_path
                .as_ref()
                .map(|p| p.display().to_string()),
            grid: self.grid.n(),
            offset: self.grid.offset(),
            z_schedule: self.schedule,
            tolerances: self.tolerances,
            seed: self.seed,
        }
    }

    fn k_or(&self, default: [f64; 3]) -> Vec<Quasimomentum> {
        self.k_points
            .clone()
            .unwrap_or_else(|| vec![Quasimomentum::new(default)])
    }

    fn require_json(&self) -> Result<()> {
        match self.format {
            Some(Format::Csv) => Err(Error::Config(
                "csv output is only available for plotdata".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Parses an angle: a number or a multiple of pi such as `pi`, `-pi/2`, `3pi/4`, `0.5*pi`.
pub fn parse_angle(text: &str) -> Result<f64> {
    let bad = || Error::Config(format!("cannot parse angle '{text}'"));
    let t: String = text
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .to_lowercase();
    let Some(at) = t.find("pi") else {
        return t
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(bad);
    };
    let (head, tail) = (&t[..at], &t[at + 2..]);
    let head = head.strip_suffix('*').unwrap_or(head);
    let coef = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| bad())?,
    };
    let den = match tail {
        "" => 1.0,
        d => d
            .strip_prefix('/')
            .and_then(|d| d.parse::<f64>().ok())
            .filter(|d| *d != 0.0)
            .ok_or_else(bad)?,
    };
    Ok(coef * std::f64::consts::PI / den)
}

fn parse_triple(text: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "expected three components in '{text}'"
        )));
    }
    Ok([
        parse_angle(parts[0])?,
        parse_angle(parts[1])?,
        parse_angle(parts[2])?,
    ])
}

pub fn parse_k(text: &str) -> Result<Quasimomentum> {
    Ok(Quasimomentum::new(parse_triple(text)?))
}

/// `a,b,c:d,e,f:COUNT` -> COUNT points on the straight segment, ends included.
/// Points are wrapped onto the torus after interpolation.
pub fn parse_k_path(text: &str) -> Result<Vec<Quasimomentum>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "k-path '{text}' must look like a,b,c:d,e,f:COUNT"
        )));
    }
    let a = parse_triple(parts[0])?;
    let b = parse_triple(parts[1])?;
    let count: usize = parts[2]
        .trim()
        .parse()
        .ok()
        .filter(|&c| c >= 1)
        .ok_or_else(|| Error::Config(format!("bad point count '{}'", parts[2])))?;
    Ok((0..count)
        .map(|i| {
            let t = if count == 1 {
                0.0
            } else {
                i as f64 / (count - 1) as f64
            };
            Quasimomentum::new([0, 1, 2].map(|j| a[j] + t * (b[j] - a[j])))
        })
        .collect())
}

pub fn parse_masses(text: &str) -> Result<MassPair> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Config(format!("masses '{text}' must be m1,m2")));
    }
    let m: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad mass '{p}'")))
        })
        .collect::<Result<_>>()?;
    MassPair::new(m[0], m[1])
}

/// A rendered report and whether every assertion in it held.
#[derive(Debug)]
pub struct Output {
    pub body: String,
    pub passed: bool,
}

fn json_output(command: &str, cfg: &RunConfig, report: Value, passed: bool) -> Result<Output> {
    let doc = json!({ "command": command, "config": cfg.echo(), "report": report });
    let mut body =
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Numerical(e.to_string()))?;
    body.push('\n');
    Ok(Output { body, passed })
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

#[derive(Serialize)]
struct BandRecord {
    k: [f64; 3],
    #[serde(flatten)]
    geometry: BandGeometry,
}

pub fn cmd_band(cfg: &RunConfig) -> Result<Output> {
    cfg.require_json()?;
    let records: Vec<BandRecord> = cfg
        .k_or([0.0; 3])
        .iter()
        .map(|k| BandRecord {
            k: k.components(),
            geometry: band_geometry(&cfg.masses, k),
        })
        .collect();
    json_output("band", cfg, json!({ "records": records }), true)
}

#[derive(Serialize)]
struct SpectrumRecord {
    k: [f64; 3],
    e_min: f64,
    e_max: f64,
    tie_tol: f64,
    n_below_band: usize,
    n_above_band: usize,
    eigenvalues: Vec<f64>,
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Output> {
    cfg.require_json()?;
    let records: Vec<SpectrumRecord> = cfg
        .k_or([0.0; 3])
        .par_iter()
        .map(|k| {
            let geom = band_geometry(&cfg.masses, k);
            let eigs = build_h(&cfg.masses, k, &cfg.potential, &cfg.grid)?.eigenvalues()?;
            let tie = cfg
                .tolerances
                .tie_tol
                .unwrap_or_else(|| default_tie_tol(&eigs));
            Ok(SpectrumRecord {
                k: k.components(),
                e_min: geom.e_min,
                e_max: geom.e_max,
                tie_tol: tie,
                n_below_band: count_below(geom.e_min, &eigs, tie),
                n_above_band: count_above(geom.e_max, &eigs, tie),
                eigenvalues: eigs,
            })
        })
        .collect::<Result<_>>()?;
    json_output("spectrum", cfg, json!({ "records": records }), true)
}

#[derive(Debug, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub passed: usize,
    pub total: usize,
    pub pass: bool,
    pub checks: Vec<Value>,
}

impl SuiteReport {
    fn new(suite: Suite, checks: Vec<(bool, Value)>) -> Self {
        let total = checks.len();
        let passed = checks.iter().filter(|c| c.0).count();
        Self {
            suite: suite.name(),
            passed,
            total,
            pass: passed == total,
            checks: checks.into_iter().map(|c| c.1).collect(),
        }
    }
}

fn suite_counting(cfg: &RunConfig) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pairs: Vec<_> = (0..cfg.trials.unwrap_or(200))
        .map(|_| sampling::counting_pair(&mut rng, 50))
        .collect();
    let checks = pairs
        .par_iter()
        .enumerate()
        .map(|(trial, (a, v))| {
            let r = verify_counting_theorem(a, v)?;
            Ok((
                r.holds(),
                json!({ "trial": trial, "dim": a.nrows(), "result": r }),
            ))
        })
        .collect::<Result<_>>()?;
    Ok(SuiteReport::new(Suite::Counting, checks))
}

fn suite_bs(cfg: &RunConfig) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let instances: Vec<_> = (0..cfg.trials.unwrap_or(50))
        .map(|_| sampling::bs_instance(&mut rng))
        .collect();
    let checks = instances
        .par_iter()
        .enumerate()
        .map(|(trial, inst)| {
            let r = bs_check(
                &inst.masses,
                &inst.k,
                &inst.potential,
                inst.z,
                &inst.grid,
                &cfg.tolerances,
            )?;
            let sites: Vec<Value> = inst
                .potential
                .entries()
                .map(|(s, v)| json!({ "s": s, "v": v }))
                .collect();
            Ok((
                r.equal,
                json!({
                    "trial": trial,
                    "masses": [inst.masses.m1(), inst.masses.m2()],
                    "k": inst.k.components(),
                    "grid": inst.grid.n(),
                    "sites": sites,
                    "result": r,
                }),
            ))
        })
        .collect::<Result<_>>()?;
    Ok(SuiteReport::new(Suite::Bs, checks))
}

fn suite_neraven(cfg: &RunConfig) -> Result<SuiteReport> {
    let pi = std::f64::consts::PI;
    let checks = cfg
        .k_or([pi; 3])
        .par_iter()
        .map(|k| {
            let r = verify_neraven(&cfg.masses, k, &cfg.potential, &cfg.grid, &cfg.tolerances)?;
            Ok((r.holds, json!({ "k": k.components(), "result": r })))
        })
        .collect::<Result<_>>()?;
    Ok(SuiteReport::new(Suite::Neraven, checks))
}

fn suite_threshold(cfg: &RunConfig) -> Result<SuiteReport> {
    let (m, pot, grid, tol) = (&cfg.masses, &cfg.potential, &cfg.grid, &cfg.tolerances);
    let classification = resonance_analysis(m, pot, grid, tol)?;
    if classification.ambiguous {
        eprintln!(
            "warning: threshold classification is ambiguous at overlap_tol = {}",
            tol.overlap_tol
        );
    }
    let mut checks = vec![(true, json!({ "threshold_state": classification }))];
    let per_k: Vec<(bool, Value)> = cfg
        .k_or([0.0; 3])
        .par_iter()
        .map(|k| {
            let t = threshold_count(m, k, pot, grid, &cfg.schedule, tol)?;
            let z_last = *t.z.last().expect("schedule has steps");
            let direct = bs_check(m, k, pot, z_last, grid, tol)?;
            let agree = direct.n_minus == t.final_count();
            Ok((
                t.monotone && agree,
                json!({ "k": k.components(), "result": t, "direct_at_last_z": direct }),
            ))
        })
        .collect::<Result<_>>()?;
    checks.extend(per_k);
    Ok(SuiteReport::new(Suite::Threshold, checks))
}

fn suite_existence(cfg: &RunConfig) -> Result<SuiteReport> {
    let half = std::f64::consts::FRAC_PI_2;
    let ks = cfg.k_or([half; 3]);
    let r = verify_existence(&cfg.masses, &cfg.potential, &ks, &cfg.grid, &cfg.tolerances)?;
    if r.threshold.ambiguous {
        eprintln!("warning: threshold classification is ambiguous");
    }
    let mut checks = vec![(
        true,
        json!({ "threshold_state": r.threshold, "required": r.required }),
    )];
    checks.extend(r.entries.iter().map(|e| (e.holds, to_value(e))));
    Ok(SuiteReport::new(Suite::Existence, checks))
}

fn suite_cheksiz(cfg: &RunConfig) -> Result<SuiteReport> {
    let pi = std::f64::consts::PI;
    let checks = cfg
        .k_or([pi, 0.0, 0.0])
        .iter()
        .map(|k| {
            let r = verify_cheksiz(&cfg.masses, k, &cfg.potential, &cfg.grid, &cfg.schedule, &cfg.tolerances)?;
            Ok((
                r.holds,
                json!({ "k": k.components(), "count": r.final_count, "target": r.target, "result": r }),
            ))
        })
        .collect::<Result<_>>()?;
    Ok(SuiteReport::new(Suite::Cheksiz, checks))
}

fn suite_positivity(cfg: &RunConfig) -> Result<SuiteReport> {
    let ks = match &cfg.k_points {
        Some(ks) => ks.clone(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            (0..cfg.trials.unwrap_or(20))
                .map(|_| sampling::quasimomentum(&mut rng))
                .collect()
        }
    };
    let r = positivity_check(&cfg.masses, &cfg.potential, &ks, &cfg.grid, &cfg.tolerances)?;
    let mut checks = vec![(
        true,
        json!({ "h0_min_eigenvalue": r.h0_min_eigenvalue, "h0_floor": r.h0_floor }),
    )];
    checks.extend(r.entries.iter().map(|e| (e.holds, to_value(e))));
    Ok(SuiteReport::new(Suite::Positivity, checks))
}

pub fn cmd_verify(cfg: &RunConfig, suites: &[Suite]) -> Result<Output> {
    cfg.require_json()?;
    if suites.is_empty() {
        return Err(Error::Config("at least one suite is required".into()));
    }
    let mut seen = Vec::new();
    for &s in suites {
        if !seen.contains(&s) {
            seen.push(s);
        }
    }
    let mut reports = Vec::with_capacity(seen.len());
    for s in seen {
        let r = match s {
            Suite::Counting => suite_counting(cfg)?,
            Suite::Neraven => suite_neraven(cfg)?,
            Suite::Bs => suite_bs(cfg)?,
            Suite::Threshold => suite_threshold(cfg)?,
            Suite::Existence => suite_existence(cfg)?,
            Suite::Cheksiz => suite_cheksiz(cfg)?,
            Suite::Positivity => suite_positivity(cfg)?,
        };
        eprintln!(
            "{}: {}/{} {}",
            r.suite,
            r.passed,
            r.total,
            if r.pass { "pass" } else { "FAIL" }
        );
        reports.push(r);
    }
    let pass = reports.iter().all(|r| r.pass);
    json_output(
        "verify",
        cfg,
        json!({ "pass": pass, "suites": reports }),
        pass,
    )
}

pub fn cmd_critical(cfg: &RunConfig) -> Result<Output> {
    cfg.require_json()?;
    let coarse = cfg.refine.then(|| default_coarse_n(cfg.grid.n()));
    let r = critical_coupling(&cfg.masses, &cfg.potential, &cfg.grid, coarse)?;
    json_output("critical", cfg, to_value(&r), true)
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Array(xs) => xs.iter().map(csv_cell).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

pub fn cmd_plotdata(cfg: &RunConfig, quantity: Quantity) -> Result<Output> {
    let ks = cfg
        .k_points
        .clone()
        .ok_or_else(|| Error::Config("plotdata needs --k-path or --k".into()))?;
    let (m, pot, grid, tol) = (&cfg.masses, &cfg.potential, &cfg.grid, &cfg.tolerances);
    let (header, rows): (Vec<&str>, Vec<Vec<Value>>) = match quantity {
        Quantity::BandEdges => (
            vec![
                "k1", "k2", "k3", "e_min", "e_max", "w_b", "w_1b", "w_2b", "w_3b",
            ],
            ks.iter()
                .map(|k| {
                    let g = band_geometry(m, k);
                    let [k1, k2, k3] = k.components();
                    let [w1, w2, w3] = g.w_jb;
                    vec![
                        json!(k1),
                        json!(k2),
                        json!(k3),
                        json!(g.e_min),
                        json!(g.e_max),
                        json!(g.w_b),
                        json!(w1),
                        json!(w2),
                        json!(w3),
                    ]
                })
                .collect(),
        ),
        Quantity::BelowBandEigs => (
            vec!["k1", "k2", "k3", "e_min", "count", "eigenvalues"],
            ks.par_iter()
                .map(|k| {
                    let b = below_band(m, k, pot, grid, tol)?;
                    let [k1, k2, k3] = k.components();
                    Ok(vec![
                        json!(k1),
                        json!(k2),
                        json!(k3),
                        json!(b.e_min),
                        json!(b.count),
                        json!(b.eigenvalues),
                    ])
                })
                .collect::<Result<_>>()?,
        ),
        Quantity::BsCounts => (
            vec!["k1", "k2", "k3", "z", "delta", "count", "lambda_max"],
            ks.par_iter()
                .map(|k| {
                    let t = threshold_count(m, k, pot, grid, &cfg.schedule, tol)?;
                    let [k1, k2, k3] = k.components();
                    Ok((0..t.z.len())
                        .map(|i| {
                            vec![
                                json!(k1),
                                json!(k2),
                                json!(k3),
                                json!(t.z[i]),
                                json!(t.e_min - t.z[i]),
                                json!(t.counts[i]),
                                json!(t.lambda_max[i]),
                            ]
                        })
                        .collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect(),
        ),
    };
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&header).map_err(csv_err)?;
            for row in &rows {
                w.write_record(row.iter().map(csv_cell)).map_err(csv_err)?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
            Ok(Output {
                body: String::from_utf8(bytes).expect("csv output is utf-8"),
                passed: true,
            })
        }
        Format::Json => {
            let records: Vec<Value> = rows
                .into_iter()
                .map(|row| {
                    let obj: serde_json::Map<String, Value> =
                        header.iter().map(|h| h.to_string()).zip(row).collect();
                    Value::Object(obj)
                })
                .collect();
            json_output("plotdata", cfg, json!({ "rows": records }), true)
        }
    }
}

/// Runs one parsed command.
pub fn run(cli: &Cli) -> Result<(Output, Option<PathBuf>)> {
    let common = match &cli.command {
        Command::Band(c) | Command::Spectrum(c) | Command::Critical(c) => c,
        Command::Verify { common, .. } | Command::Plotdata { common, .. } => common,
    };
    let cfg = RunConfig::from_args(common)?;
    let output = match &cli.command {
        Command::Band(_) => cmd_band(&cfg)?,
        Command::Spectrum(_) => cmd_spectrum(&cfg)?,
        Command::Verify { suite, .. } => cmd_verify(&cfg, suite)?,
        Command::Critical(_) => cmd_critical(&cfg)?,
        Command::Plotdata { quantity, .. } => cmd_plotdata(&cfg, *quantity)?,
    };
    Ok((output, cfg.out.clone()))
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
        Error::Config(format!(
            "{THREADS_ENV} must be a positive integer, got '{raw}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return 2;
    }
    match run(&cli) {
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
        Ok((output, out_path)) => {
            let written = match out_path {
                Some(p) => std::fs::write(&p, output.body.as_bytes()),
                None => std::io::stdout().lock().write_all(output.body.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return 2;
            }
            if output.passed {
                0
            } else {
                1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("-pi/2").unwrap(), -PI / 2.0);
        assert_eq!(parse_angle("3pi/4").unwrap(), 0.75 * PI);
        assert_eq!(parse_angle("0.5*pi").unwrap(), 0.5 * PI);
        assert_eq!(parse_angle(" 1.25 ").unwrap(), 1.25);
        assert_eq!(parse_angle("PI").unwrap(), PI);
        for bad in ["", "pie", "pi/0", "x", "2pi/", "nan"] {
            assert!(parse_angle(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn k_path_endpoints() {
        let ks = parse_k_path("0,0,0:pi,0,0:5").unwrap();
        assert_eq!(ks.len(), 5);
        assert_eq!(ks[0].components(), [0.0; 3]);
        assert_eq!(ks[4].components(), [PI, 0.0, 0.0]);
        assert!((ks[2].get(0) - PI / 2.0).abs() < 1e-15);
        assert!(parse_k_path("0,0,0:pi,0,0").is_err());
        assert!(parse_k_path("0,0,0:pi,0,0:0").is_err());
        assert!(parse_k("1,2").is_err());
    }

    #[test]
    fn masses() {
        let m = parse_masses("1,2").unwrap();
        assert_eq!((m.m1(), m.m2()), (1.0, 2.0));
        assert!(parse_masses("1").is_err());
        assert!(parse_masses("1,-2").is_err());
        assert!(parse_masses("a,b").is_err());
    }
}
