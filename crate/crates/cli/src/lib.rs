//! Command-line interface for the open-boundary ASEP toolkit.
//!
//! Subcommands map onto the library surface: trajectory simulation, exact
//! transient/stationary/profile analysis, Monte Carlo current and hitting
//! experiments, the duality check, Mallows tails, the exact identity
//! self-check, mixing times, and reference-table generation.
//!
//! Rates given as `p/q` strings are carried exactly, which matters only on
//! the `rho = 1/2` phase boundary; decimal rates near the boundary get a
//! warning. A `key = value` config file can supply any long flag; explicit
//! flags win. All outputs are pure functions of the effective
//! configuration, so rerunning a subcommand with the same flags and seed
//! reproduces every output file byte-for-byte (output directories are
//! stamped with a hash of the configuration, not the clock).

use anyhow::{anyhow, bail, Context, Result};
use asep_core::config::{Config, Species};
use asep_core::exact::{self, ProfileMode};
use asep_core::experiments::{self, ExperimentConfig, ParamSpec};
use asep_core::params::{effective_density, phase_time, CdfTable, ModelParams, Phase, ReferenceCdf};
use asep_core::perm::SignedPermutation;
use asep_core::sim::{self, BoundaryMechanism, SimSpec, SimState};
use asep_core::{checks, tw};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Rational64;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(
    name = "asep",
    about = "Open-boundary ASEP: simulation, exact Hecke-algebra analysis, mixing profiles",
    version
)]
struct Cli {
    /// Worker threads for Monte Carlo experiments (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Config file of `key = value` lines supplying any long flag;
    /// explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct RateArgs {
    /// Bulk leftward rate q in (0,1); accepts `p/q` for exact mode.
    #[arg(long)]
    q: Option<String>,
    /// Reservoir entry rate alpha; accepts `p/q`.
    #[arg(long)]
    alpha: Option<String>,
    /// Reservoir exit rate gamma (must be below alpha); accepts `p/q`.
    #[arg(long)]
    gamma: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
struct OutArgs {
    /// Output directory (default: runs/<subcommand>-<config hash>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format for experiment outputs.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum OutputFormat {
    Json,
    Csv,
    Both,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum SimMode {
    Single,
    Multi,
    Colored,
    Halfspace,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum BoundaryArg {
    TwoClock,
    AcceptReject,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one trajectory and write its sampled observables.
    Simulate {
        #[command(flatten)]
        rates: RateArgs,
        /// Segment length (ignored for half-space mode).
        #[arg(short = 'N', long, visible_alias = "N")]
        sites: Option<usize>,
        /// Horizon.
        #[arg(long)]
        t: Option<f64>,
        /// Number of equally spaced sample times.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<SimMode>,
        /// Initial configuration: bit string (single/half-space); colored
        /// and multi-species modes start from the identity / all-holes.
        #[arg(long)]
        init: Option<String>,
        #[arg(long, value_enum)]
        boundary: Option<BoundaryArg>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exact transient distribution, stationary measures, and the d_N(t)
    /// profile.
    Exact {
        #[command(flatten)]
        rates: RateArgs,
        #[arg(short = 'N', long, visible_alias = "N")]
        sites: Option<usize>,
        /// Time of the transient snapshot.
        #[arg(long)]
        t: Option<f64>,
        /// Grid points of the d_N profile (0 disables it).
        #[arg(long)]
        profile_points: Option<usize>,
        /// Final profile time (default: twice the expected mixing scale).
        #[arg(long)]
        t_max: Option<f64>,
        /// Maximize over all starts (capped) or the two extremes.
        #[arg(long)]
        all_starts: Option<bool>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Half-space current fluctuations against the phase's limit CDF.
    Current {
        #[command(flatten)]
        rates: RateArgs,
        /// Times on the KPZ scale (the physical horizon is t/(1-q)); repeatable.
        #[arg(long, num_args = 1..)]
        t: Option<Vec<f64>>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory holding tw_goe.tsv / tw_gse.tsv (falls back to the
        /// ASEP_TABLE_DIR environment variable, then ./data).
        #[arg(long)]
        table_dir: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monte Carlo hitting-profile statistics on the g_rho(c) time scale.
    Profile {
        #[command(flatten)]
        rates: RateArgs,
        #[arg(short = 'N', long, visible_alias = "N")]
        sites: Option<usize>,
        /// c grid; repeatable.
        #[arg(long, num_args = 1.., allow_negative_numbers = true)]
        c: Option<Vec<f64>>,
        #[arg(long)]
        trials: Option<u64>,
        /// Hitting threshold m (default max(1, ceil((ln N)^{1/16}))).
        #[arg(long)]
        m: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory with the Tracy-Widom tables for the 1 - F_rho(c)
        /// reference column (optional; omitted from the report if absent).
        #[arg(long)]
        table_dir: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exact duality identity plus its Monte Carlo analog.
    Duality {
        #[command(flatten)]
        rates: RateArgs,
        #[arg(short = 'N', long, visible_alias = "N")]
        sites: Option<usize>,
        /// Reservoir interval size S.
        #[arg(short = 'S', long, visible_alias = "S")]
        s_extra: Option<usize>,
        /// Integer threshold m.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Tail of the rightmost empty site under an interval Mallows measure.
    MallowsTail {
        #[command(flatten)]
        rates: RateArgs,
        /// Interval lower end a (0 engages the signed boundary case).
        #[arg(long)]
        a: Option<usize>,
        /// Interval upper end b.
        #[arg(long)]
        b: Option<usize>,
        /// Number of empties k.
        #[arg(long)]
        k: Option<usize>,
        /// Offsets x; repeatable.
        #[arg(long, num_args = 1..)]
        x: Option<Vec<f64>>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the exact Hecke/Mallows identity suites and print PASS/FAIL
    /// lines.
    HeckeCheck {
        /// Group size for the Mallows suite (quadratic relation always
        /// checks up to B_4).
        #[arg(short = 'n', long)]
        n: Option<usize>,
        /// Bulk parameter as an exact rational `p/q`.
        #[arg(long)]
        q: Option<String>,
        /// Boundary parameter as an exact rational `p/q`.
        #[arg(long)]
        r: Option<String>,
    },
    /// Epsilon-mixing time (exact bisection under the cap, Monte Carlo
    /// hitting bound above it).
    MixingTime {
        #[command(flatten)]
        rates: RateArgs,
        #[arg(short = 'N', long, visible_alias = "N")]
        sites: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Trials for the Monte Carlo bound (used above the exact cap).
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Compute and write the Tracy-Widom GOE/GSE reference tables.
    GenTables {
        /// Destination directory (default ./data).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Entry point; returns the process exit code.
pub fn run(args: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // clap renders its own help/version output
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        // a second invocation in-process keeps the first pool; results do
        // not depend on the pool size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let file_config = match cli.config.as_deref().map(load_config_file).transpose() {
        Ok(c) => c.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e:#}");
            return 1;
        }
    };
    match dispatch(cli.command, &file_config) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {} is not `key = value`", i + 1))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// `flag.or(config file).or(default)` with parsing for file values.
fn merged<T: Clone + std::str::FromStr>(
    flag: Option<T>,
    file: &BTreeMap<String, String>,
    key: &str,
    default: T,
) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    if let Some(raw) = file.get(key) {
        return raw
            .parse::<T>()
            .map_err(|e| anyhow!("config key {key} = {raw}: {e}"));
    }
    Ok(default)
}

fn merged_opt_string(
    flag: Option<String>,
    file: &BTreeMap<String, String>,
    key: &str,
) -> Option<String> {
    flag.or_else(|| file.get(key).cloned())
}

/// Parse a rate that may be an exact rational `p/q` or a decimal.
fn parse_rate(text: &str) -> Result<(f64, Option<Rational64>)> {
    if let Some((num, den)) = text.split_once('/') {
        let num: i64 = num.trim().parse().context("rational numerator")?;
        let den: i64 = den.trim().parse().context("rational denominator")?;
        if den == 0 {
            bail!("zero denominator in rate {text}");
        }
        let r = Rational64::new(num, den);
        return Ok((*r.numer() as f64 / *r.denom() as f64, Some(r)));
    }
    Ok((text.parse::<f64>().context("rate")?, None))
}

fn build_params(rates: &RateArgs, file: &BTreeMap<String, String>, n: usize) -> Result<ModelParams> {
    let q_text = merged_opt_string(rates.q.clone(), file, "q").unwrap_or_else(|| "1/2".into());
    let a_text = merged_opt_string(rates.alpha.clone(), file, "alpha").unwrap_or_else(|| "1".into());
    let g_text =
        merged_opt_string(rates.gamma.clone(), file, "gamma").unwrap_or_else(|| "1/4".into());
    let (qf, qr) = parse_rate(&q_text)?;
    let (af, ar) = parse_rate(&a_text)?;
    let (gf, gr) = parse_rate(&g_text)?;
    let params = match (qr, ar, gr) {
        (Some(q), Some(a), Some(g)) => ModelParams::new_exact(q, a, g, n)?,
        _ => {
            let p = ModelParams::new(qf, af, gf, n)?;
            let rho = effective_density(&p).rho;
            if (rho - 0.5).abs() < 1e-9 {
                eprintln!(
                    "warning: rho = {rho} sits on the phase boundary within 1e-9; \
                     supply rates as p/q rationals for an exact classification"
                );
            }
            p
        }
    };
    Ok(params)
}

fn fnv1a(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

struct OutputSink {
    dir: PathBuf,
    format: OutputFormat,
    config_json: String,
    files: Vec<String>,
}

impl OutputSink {
    fn new(
        out: &OutArgs,
        file: &BTreeMap<String, String>,
        subcommand: &str,
        config_json: String,
    ) -> Result<Self> {
        let format = match out.format {
            Some(f) => f,
            None => match file.get("format").map(String::as_str) {
                Some("json") => OutputFormat::Json,
                Some("csv") => OutputFormat::Csv,
                Some("both") | None => OutputFormat::Both,
                Some(other) => bail!("unknown format {other}"),
            },
        };
        let dir = match &out.out {
            Some(d) => d.clone(),
            None => match file.get("out") {
                Some(d) => PathBuf::from(d),
                None => PathBuf::from(format!(
                    "runs/{subcommand}-{:016x}",
                    fnv1a(&config_json)
                )),
            },
        };
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(OutputSink {
            dir,
            format,
            config_json,
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        println!("wrote {}", path.display());
        Ok(())
    }

    fn write_report(&mut self, stem: &str, report: &experiments::StatReport) -> Result<()> {
        if matches!(self.format, OutputFormat::Json | OutputFormat::Both) {
            self.write(&format!("{stem}.json"), &report.to_json())?;
        }
        if matches!(self.format, OutputFormat::Csv | OutputFormat::Both) {
            self.write(&format!("{stem}.csv"), &report.to_csv())?;
        }
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        let manifest = format!(
            "{{\n  \"artifact\": \"asep {}\",\n  \"config\": {},\n  \"files\": {}\n}}\n",
            env!("CARGO_PKG_VERSION"),
            self.config_json,
            serde_json::to_string(&self.files)?
        );
        self.write("manifest.json", &manifest)?;
        Ok(())
    }
}

fn resolve_table_dir(flag: Option<PathBuf>, file: &BTreeMap<String, String>) -> PathBuf {
    flag.or_else(|| file.get("table_dir").map(PathBuf::from))
        .or_else(|| std::env::var_os("ASEP_TABLE_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data"))
}

fn dispatch(cmd: Command, file: &BTreeMap<String, String>) -> Result<i32> {
    match cmd {
        Command::Simulate {
            rates,
            sites,
            t,
            samples,
            mode,
            init,
            boundary,
            seed,
            out,
        } => {
            let n = merged(sites, file, "sites", 8)?;
            let t = merged(t, file, "t", 10.0)?;
            let samples = merged(samples, file, "samples", 20)?;
            let seed = merged(seed, file, "seed", 1)?;
            let mode = mode.unwrap_or(SimMode::Single);
            let boundary = match boundary.unwrap_or(BoundaryArg::TwoClock) {
                BoundaryArg::TwoClock => BoundaryMechanism::TwoClock,
                BoundaryArg::AcceptReject => BoundaryMechanism::AcceptReject,
            };
            let params = build_params(&rates, file, n)?;
            let config_json = format!(
                "{{\"cmd\":\"simulate\",\"q\":{},\"alpha\":{},\"gamma\":{},\"N\":{n},\"t\":{t},\"samples\":{samples},\"mode\":\"{mode:?}\",\"boundary\":\"{boundary:?}\",\"init\":{:?},\"seed\":{seed}}}",
                params.q, params.alpha, params.gamma, init.clone().unwrap_or_default()
            );
            let mut sink = OutputSink::new(&out, file, "simulate", config_json)?;
            let times: Vec<f64> = (0..=samples).map(|i| t * i as f64 / samples as f64).collect();
            let mut csv = String::new();
            match mode {
                SimMode::Halfspace => {
                    let init_occ: Vec<u8> = init
                        .unwrap_or_default()
                        .chars()
                        .map(|c| if c == '1' { 1u8 } else { 0u8 })
                        .collect();
                    let run = sim::simulate_halfspace(
                        &params,
                        &init_occ,
                        t,
                        &times,
                        seed,
                        sim::DEFAULT_WINDOW_CAP,
                    )?;
                    csv.push_str("time,current,rightmost\n");
                    for (ts, j, r) in &run.samples {
                        writeln!(csv, "{ts},{j},{r}").unwrap();
                    }
                }
                SimMode::Single => {
                    let init_cfg = match init {
                        Some(s) => Config::parse(&s)?,
                        None => Config::empty(n),
                    };
                    let spec = SimSpec::new(params.clone(), SimState::Single(init_cfg), t)
                        .with_samples(times)
                        .with_boundary(boundary);
                    let traj = sim::simulate(&spec, seed)?;
                    csv.push_str("time,config,particles,rightmost_empty\n");
                    for (ts, st) in &traj.samples {
                        let c = st.as_single().unwrap();
                        writeln!(csv, "{ts},{c},{},{}", c.particle_count(), c.rightmost_empty())
                            .unwrap();
                    }
                }
                SimMode::Multi => {
                    let init_cfg = asep_core::ColoredConfig::new(vec![Species::Hole; n]);
                    let spec = SimSpec::new(params.clone(), SimState::Multi(init_cfg), t)
                        .with_samples(times)
                        .with_boundary(boundary);
                    let traj = sim::simulate(&spec, seed)?;
                    csv.push_str("time,labels,projected\n");
                    for (ts, st) in &traj.samples {
                        let c = st.as_multi().unwrap();
                        writeln!(csv, "{ts},\"{c}\",{}", c.project_multispecies()).unwrap();
                    }
                }
                SimMode::Colored => {
                    let spec = SimSpec::new(
                        params.clone(),
                        SimState::Colored(SignedPermutation::identity(n)),
                        t,
                    )
                    .with_samples(times)
                    .with_boundary(boundary);
                    let traj = sim::simulate(&spec, seed)?;
                    csv.push_str("time,permutation,projected\n");
                    for (ts, st) in &traj.samples {
                        let p = st.as_colored().unwrap();
                        writeln!(csv, "{ts},\"{p}\",{}", p.project_particles()).unwrap();
                    }
                }
            }
            sink.write("trajectory.csv", &csv)?;
            sink.finish()?;
            Ok(0)
        }
        Command::Exact {
            rates,
            sites,
            t,
            profile_points,
            t_max,
            all_starts,
            out,
        } => {
            let n = merged(sites, file, "sites", 4)?;
            let t = merged(t, file, "t", 1.0)?;
            let points = merged(profile_points, file, "profile_points", 0)?;
            let params = build_params(&rates, file, n)?;
            let all = merged(all_starts, file, "all_starts", n <= exact::ALL_STARTS_CAP)?;
            let config_json = format!(
                "{{\"cmd\":\"exact\",\"q\":{},\"alpha\":{},\"gamma\":{},\"N\":{n},\"t\":{t},\"profile_points\":{points},\"all_starts\":{all}}}",
                params.q, params.alpha, params.gamma
            );
            let mut sink = OutputSink::new(&out, file, "exact", config_json)?;
            let gen = exact::build_generator(&params, n)?;
            let init = asep_core::Distribution::point_mass(&Config::empty(n));
            let transient = exact::transient_distribution(&gen, &init, t, 1e-12)?;
            let mut csv = String::from("config,probability\n");
            for (i, p) in transient.dist.probs().iter().enumerate() {
                writeln!(csv, "{},{p}", Config::from_index(i, n)).unwrap();
            }
            sink.write("transient.csv", &csv)?;
            let stationary = exact::stationary_nullspace(&gen)?;
            let mut csv = String::from("config,probability\n");
            for (i, p) in stationary.probs().iter().enumerate() {
                writeln!(csv, "{},{p}", Config::from_index(i, n)).unwrap();
            }
            sink.write("stationary.csv", &csv)?;
            if points > 0 {
                let info = effective_density(&params);
                let default_max = 2.0 * phase_time(&info, &params, 0.0)?;
                let t_hi = merged(t_max, file, "t_max", default_max)?;
                let times: Vec<f64> = (0..=points)
                    .map(|i| t_hi * i as f64 / points as f64)
                    .collect();
                let mode = if all {
                    ProfileMode::AllStarts
                } else {
                    ProfileMode::ExtremalStarts
                };
                let prof = exact::exact_tv_profile(&params, n, &times, mode)?;
                let mut csv = String::from("t,d\n");
                for (ts, d) in prof {
                    writeln!(csv, "{ts},{d}").unwrap();
                }
                sink.write("profile.csv", &csv)?;
            }
            sink.finish()?;
            Ok(0)
        }
        Command::Current {
            rates,
            t,
            trials,
            seed,
            table_dir,
            out,
        } => {
            let t_grid = match t {
                Some(v) => v,
                None => vec![merged(None, file, "t", 200.0)?],
            };
            let trials = merged(trials, file, "trials", 1000)?;
            let seed = merged(seed, file, "seed", 1)?;
            let params = build_params(&rates, file, 1)?;
            let info = effective_density(&params);
            let (reference, ref_name) = match info.phase {
                Phase::Gauss => (ReferenceCdf::Gaussian, "gaussian".to_string()),
                Phase::Goe | Phase::Gse => {
                    let dir = resolve_table_dir(table_dir, file);
                    let name = if info.phase == Phase::Goe {
                        "tw_goe.tsv"
                    } else {
                        "tw_gse.tsv"
                    };
                    let path = dir.join(name);
                    let table = CdfTable::from_path(&path).with_context(|| {
                        format!(
                            "phase {} needs the reference table {}; run `asep gen-tables`",
                            info.phase,
                            path.display()
                        )
                    })?;
                    (ReferenceCdf::Table(table), name.to_string())
                }
            };
            let cfg = ExperimentConfig {
                params: ParamSpec::from(&params),
                n: 1,
                c_grid: vec![],
                t_grid,
                trials,
                master_seed: seed,
                m: None,
                reference: Some(ref_name),
            };
            let report = experiments::current_fluctuations(&cfg, &reference)?;
            let config_json = serde_json::to_string(&cfg)?;
            let mut sink = OutputSink::new(&out, file, "current", config_json)?;
            sink.write_report("current", &report)?;
            sink.finish()?;
            Ok(0)
        }
        Command::Profile {
            rates,
            sites,
            c,
            trials,
            m,
            seed,
            table_dir,
            out,
        } => {
            let n = merged(sites, file, "sites", 8)?;
            let c_grid = c.unwrap_or_else(|| vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
            let trials = merged(trials, file, "trials", 2000)?;
            let seed = merged(seed, file, "seed", 1)?;
            let m = match m {
                Some(v) => Some(v),
                None => file.get("m").map(|s| s.parse()).transpose()?,
            };
            let params = build_params(&rates, file, n)?;
            // the 1 - F_rho(c) reference column is best-effort: Gaussian in
            // closed form, tables when present
            let info = effective_density(&params);
            let (reference, ref_name) = match info.phase {
                Phase::Gauss => (Some(ReferenceCdf::Gaussian), Some("gaussian".to_string())),
                Phase::Goe | Phase::Gse => {
                    let name = if info.phase == Phase::Goe {
                        "tw_goe.tsv"
                    } else {
                        "tw_gse.tsv"
                    };
                    let path = resolve_table_dir(table_dir, file).join(name);
                    match CdfTable::from_path(&path) {
                        Ok(t) => (Some(ReferenceCdf::Table(t)), Some(name.to_string())),
                        Err(_) => (None, None),
                    }
                }
            };
            let cfg = ExperimentConfig {
                params: ParamSpec::from(&params),
                n,
                c_grid,
                t_grid: vec![],
                trials,
                master_seed: seed,
                m,
                reference: ref_name,
            };
            let report = experiments::tv_profile_mc(&cfg, reference.as_ref())?;
            let config_json = serde_json::to_string(&cfg)?;
            let mut sink = OutputSink::new(&out, file, "profile", config_json)?;
            sink.write_report("lower", &report.lower)?;
            sink.write_report("exit", &report.exit)?;
            sink.finish()?;
            Ok(0)
        }
        Command::Duality {
            rates,
            sites,
            s_extra,
            m,
            t,
            trials,
            seed,
            out,
        } => {
            let n = merged(sites, file, "sites", 2)?;
            let s = merged(s_extra, file, "S", 1)?;
            let m = merged(m, file, "m", 1)?;
            let t = merged(t, file, "t", 0.5)?;
            let trials = merged(trials, file, "trials", 20_000)?;
            let seed = merged(seed, file, "seed", 1)?;
            let params = build_params(&rates, file, n)?;
            let config_json = format!(
                "{{\"cmd\":\"duality\",\"q\":{},\"alpha\":{},\"gamma\":{},\"N\":{n},\"S\":{s},\"m\":{m},\"t\":{t},\"trials\":{trials},\"seed\":{seed}}}",
                params.q, params.alpha, params.gamma
            );
            let mut sink = OutputSink::new(&out, file, "duality", config_json)?;
            let mc = experiments::duality_experiment(&params, n, s, m, t, trials, seed)?;
            let exact_pair = if n + s <= exact::HECKE_MODULE_CAP {
                Some(exact::duality_check(&params, n, s, m, t, 1e-12)?)
            } else {
                None
            };
            let mut body = serde_json::to_value(&mc)?;
            if let Some((pl, pr)) = exact_pair {
                body["exact_p_left"] = serde_json::json!(pl);
                body["exact_p_right"] = serde_json::json!(pr);
                body["exact_gap"] = serde_json::json!((pl - pr).abs());
            }
            sink.write("duality.json", &serde_json::to_string_pretty(&body)?)?;
            sink.finish()?;
            if let Some((pl, pr)) = exact_pair {
                println!("exact: p_left = {pl:.10}, p_right = {pr:.10}");
            }
            println!(
                "mc:    p_C = {:.5} +- {:.5}, p_D = {:.5} +- {:.5}",
                mc.p_c, mc.se_c, mc.p_d, mc.se_d
            );
            Ok(0)
        }
        Command::MallowsTail {
            rates,
            a,
            b,
            k,
            x,
            trials,
            seed,
            out,
        } => {
            let a = merged(a, file, "a", 1)?;
            let b = merged(b, file, "b", 9)?;
            let k = merged(k, file, "k", 4)?;
            let x_grid = x.unwrap_or_else(|| vec![0.0, 1.0, 2.0, 3.0]);
            let trials = merged(trials, file, "trials", 20_000)?;
            let seed = merged(seed, file, "seed", 1)?;
            let params = build_params(&rates, file, b.max(1))?;
            let report =
                experiments::mallows_tail(&params, a, b, k, &x_grid, trials, seed)?;
            let config_json = serde_json::to_string(&report.config)?;
            let mut sink = OutputSink::new(&out, file, "mallows-tail", config_json)?;
            sink.write_report("tail", &report)?;
            sink.finish()?;
            for note in &report.notes {
                println!("{note}");
            }
            Ok(0)
        }
        Command::HeckeCheck { n, q, r } => {
            let n = n.unwrap_or(3);
            let parse_pair = |text: Option<String>, default: (i64, i64)| -> Result<(i64, i64)> {
                match text {
                    None => Ok(default),
                    Some(t) => {
                        let (_, rat) = parse_rate(&t)?;
                        let rat =
                            rat.ok_or_else(|| anyhow!("hecke-check needs exact rationals"))?;
                        Ok((*rat.numer(), *rat.denom()))
                    }
                }
            };
            let q = parse_pair(q, (1, 2))?;
            let r = parse_pair(r, (1, 3))?;
            let mut all_pass = true;
            for c in checks::hecke_identity_suite(n.max(4), q, r)
                .into_iter()
                .chain(checks::mallows_identity_suite(n.min(3), q, r))
            {
                all_pass &= c.pass;
                println!(
                    "{} {} - {}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            Ok(if all_pass { 0 } else { 1 })
        }
        Command::MixingTime {
            rates,
            sites,
            epsilon,
            trials,
            seed,
            out,
        } => {
            let n = merged(sites, file, "sites", 6)?;
            let eps = merged(epsilon, file, "epsilon", 0.25)?;
            let trials = merged(trials, file, "trials", 2000)?;
            let seed = merged(seed, file, "seed", 1)?;
            let params = build_params(&rates, file, n)?;
            let est = experiments::mixing_time(&params, n, eps, trials, seed)?;
            let config_json = format!(
                "{{\"cmd\":\"mixing-time\",\"q\":{},\"alpha\":{},\"gamma\":{},\"N\":{n},\"epsilon\":{eps},\"trials\":{trials},\"seed\":{seed}}}",
                params.q, params.alpha, params.gamma
            );
            let mut sink = OutputSink::new(&out, file, "mixing-time", config_json)?;
            sink.write("mixing.json", &serde_json::to_string_pretty(&est)?)?;
            sink.finish()?;
            println!(
                "t_mix({eps}) ~ {:.4} via {:?} bound",
                est.t, est.bound
            );
            Ok(0)
        }
        Command::GenTables { out } => {
            let dir = out
                .or_else(|| file.get("out").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("data"));
            let (goe, gse) = tw::generate_tables(&dir)?;
            println!("wrote {}", goe.display());
            println!("wrote {}", gse.display());
            Ok(0)
        }
    }
}
