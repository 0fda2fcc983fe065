use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use quasidiff::catalog::{self, CatalogEntry};
use quasidiff::forms::{self, EnergyMode, FormDescriptor, TestFunctionSpec};
use quasidiff::lattice;
use quasidiff::markov::{self, ChainModel, PathSample, TimeChange};
use quasidiff::measures::{symmetrizing_from_speed, StieltjesMeasure};
use quasidiff::sets::NearlyClosedSet;
use quasidiff::Error;

#[derive(Parser)]
#[command(
    name = "quasidiff",
    version,
    about = "Quasidiffusions, their energy forms and Fukushima subspaces"
)]
struct Cli {
    #[command(flatten)]
    config: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, Serialize)]
struct RunConfig {
    /// Absolute tolerance for brackets and set queries.
    #[arg(long, global = true, default_value_t = 1e-9, value_parser = positive)]
    tol: f64,
    /// Gaps listed in truncation diagnostics.
    #[arg(long, global = true, default_value_t = 16)]
    gaps: usize,
    #[arg(long, global = true, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    paths: u64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// First stream; path k uses stream + k.
    #[arg(long, global = true, default_value_t = 0)]
    stream: u64,
    /// Refuse functions outside the form domain.
    #[arg(long, global = true)]
    strict: bool,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print JSON instead of a text summary.
    #[arg(long, global = true)]
    json: bool,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 => Ok(x),
        _ => Err(format!("{s} is not a positive number")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    Chain,
    Timechange,
    /// Run both and compare exit sides.
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in example processes.
    Catalog,
    /// Energy of a pair of test functions.
    Energy {
        /// Form JSON file, or `catalog:NAME`.
        #[arg(long)]
        form: String,
        #[arg(long)]
        f: PathBuf,
        /// Defaults to f.
        #[arg(long)]
        g: Option<PathBuf>,
    },
    /// Whether proper and minimal Fukushima subspaces exist.
    Classify {
        /// Set JSON file, or `catalog:NAME`.
        #[arg(long)]
        set: String,
        /// Symmetrizing measure JSON used for the witness.
        #[arg(long)]
        measure: Option<PathBuf>,
    },
    /// Monte Carlo paths of a process.
    Simulate {
        /// Speed measure JSON file, or `catalog:NAME`.
        #[arg(long)]
        speed: String,
        #[arg(long)]
        x0: f64,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, value_enum, default_value_t = Method::Chain)]
        method: Method,
        /// Grid step of the time-change walk.
        #[arg(long, default_value_t = 1e-3)]
        grid_step: f64,
        /// States used when discretizing a non-atomic measure.
        #[arg(long, default_value_t = 64)]
        states: usize,
        /// Stop paths at these two states and check hitting frequencies.
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        target: Option<Vec<f64>>,
    },
    /// Check a candidate subspace against a natural-scale parent.
    VerifySubspace {
        #[arg(long)]
        parent: PathBuf,
        #[arg(long)]
        child: PathBuf,
        /// JSON array of test functions.
        #[arg(long)]
        probes: PathBuf,
    },
}

fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn catalog_name(arg: &str) -> Option<&str> {
    arg.strip_prefix("catalog:")
}

fn load_entry(name: &str) -> anyhow::Result<CatalogEntry> {
    Ok(catalog::entry(name)?)
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn emit<T: Serialize>(
    config: &RunConfig,
    body: T,
    text: impl FnOnce(&T) -> String,
) -> anyhow::Result<()> {
    let out = if config.json {
        serde_json::to_string_pretty(&Report { config, body })? + "\n"
    } else {
        text(&body)
    };
    match std::io::stdout().lock().write_all(out.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn write_out(config: &RunConfig, name: &str, contents: &str) -> anyhow::Result<Option<PathBuf>> {
    let Some(dir) = &config.out else {
        return Ok(None);
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(Some(path))
}

fn threads() -> Option<usize> {
    std::env::var("QUASIDIFF_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
}

fn cmd_catalog(config: &RunConfig) -> anyhow::Result<()> {
    let rows = catalog::catalog()?
        .iter()
        .map(|e| e.row())
        .collect::<Result<Vec<_>, _>>()?;
    emit(config, serde_json::json!({ "entries": rows }), |_| {
        let mut s = String::new();
        for r in &rows {
            s.push_str(&format!(
                "{:<24} [{}, {}]  |E| in [{:.6}, {:.6}]  nowhere dense: {:<5}  boundary: {}{}\n",
                r.entry.name,
                r.l,
                r.r,
                r.lebesgue_measure.lo,
                r.lebesgue_measure.hi,
                r.nowhere_dense,
                r.entry.boundary,
                if r.entry.approximated_speed_measure {
                    "  (approximated speed measure)"
                } else {
                    ""
                }
            ));
        }
        s
    })
}

#[derive(Serialize)]
struct EnergyOut {
    energy: forms::EnergyReport,
    mode: EnergyMode,
    /// Largest gaps with their jump weights.
    gaps: Vec<((f64, f64), f64)>,
}

fn cmd_energy(config: &RunConfig, form: &str, f: &Path, g: Option<&Path>) -> anyhow::Result<()> {
    let form: FormDescriptor = match catalog_name(form) {
        Some(name) => load_entry(name)?.form()?,
        None => read_json(Path::new(form))?,
    };
    let e = form.state_space();
    let f = read_json::<TestFunctionSpec>(f)?.resolve(e, config.tol)?;
    let g = match g {
        Some(p) => read_json::<TestFunctionSpec>(p)?.resolve(e, config.tol)?,
        None => f.clone(),
    };
    let mode = if config.strict {
        EnergyMode::Strict
    } else {
        EnergyMode::Functional
    };
    let energy = forms::energy(&form, &f, &g, config.tol, mode)?;
    let gaps = forms::jump_weights(e, config.gaps)?;
    emit(config, EnergyOut { energy, mode, gaps }, |o| {
        let t = o.energy.total;
        format!(
            "energy {:.15} in [{:.15}, {:.15}]\nlocal  [{:.15}, {:.15}]\njump   [{:.15}, {:.15}]\n",
            t.mid(),
            t.lo,
            t.hi,
            o.energy.local.lo,
            o.energy.local.hi,
            o.energy.jump.lo,
            o.energy.jump.hi
        )
    })
}

fn cmd_classify(config: &RunConfig, set: &str, measure: Option<&Path>) -> anyhow::Result<()> {
    let (e, mu): (NearlyClosedSet, Option<StieltjesMeasure>) = match catalog_name(set) {
        Some(name) => {
            let entry = load_entry(name)?;
            let mu = symmetrizing_from_speed(&entry.speed)?;
            (entry.state_space, Some(mu))
        }
        None => (read_json(Path::new(set))?, None),
    };
    let mu = match measure {
        Some(p) => Some(read_json(p)?),
        None => mu,
    };
    let c = lattice::classify(&e, mu.as_ref(), config.tol)?;
    emit(config, c, |c| {
        let minimal = serde_json::to_value(c.minimal_exists).unwrap_or_default();
        format!(
            "proper subspaces: {}\nminimal subspace: {}\n|E| in [{}, {}], nowhere dense: {}\nwitness: {}\n",
            if c.proper_subspaces { "yes" } else { "no" },
            minimal.as_str().unwrap_or_default(),
            c.measure.lo,
            c.measure.hi,
            c.nowhere_dense,
            if c.witness.is_some() { "constructed (see --json)" } else { "none" }
        )
    })
}

#[derive(Serialize)]
struct SimulateOut {
    method: Method,
    x0: f64,
    /// Chain start: the chain state closest to `x0`.
    chain_x0: f64,
    horizon: f64,
    threads: Option<usize>,
    chain_states: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_step: Option<f64>,
    checks: Vec<(Method, markov::EmpiricalReport)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    agreement: Option<markov::SideAgreement>,
    files: Vec<PathBuf>,
}

fn paths_csv(paths: &[PathSample]) -> String {
    let mut out = String::from("path,seed,stream,t,state\n");
    for (k, p) in paths.iter().enumerate() {
        for (t, x) in p.times.iter().zip(&p.states) {
            out.push_str(&format!("{k},{},{},{t:.17e},{x:.17e}\n", p.seed, p.stream));
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    config: &RunConfig,
    speed: &str,
    x0: f64,
    horizon: f64,
    method: Method,
    grid_step: f64,
    states: usize,
    target: Option<(f64, f64)>,
) -> anyhow::Result<()> {
    let m: StieltjesMeasure = match catalog_name(speed) {
        Some(name) => load_entry(name)?.speed,
        None => read_json(Path::new(speed))?,
    };
    let form = FormDescriptor::from_speed(&m)?;
    let chain = if form.mu().is_purely_atomic() {
        ChainModel::from_atomic(form.mu())?
    } else {
        markov::discretize(&form, states)?
    };
    let chain_x0 = chain.nearest_state(x0);
    let stop: Vec<f64> = target.map_or(Vec::new(), |(a, b)| vec![a, b]);
    let threads = threads();
    let (n, seed, stream) = (config.paths, config.seed, config.stream);
    let mut runs: Vec<(Method, Vec<PathSample>)> = Vec::new();
    if matches!(method, Method::Chain | Method::Both) {
        let ps = markov::run_paths(n, threads, |k| {
            markov::simulate_chain_stopped(&chain, chain_x0, horizon, &stop, seed, stream + k)
        });
        runs.push((Method::Chain, ps.into_iter().collect::<Result<_, _>>()?));
    }
    if matches!(method, Method::Timechange | Method::Both) {
        let tc = TimeChange::new(&m, grid_step)?;
        let ps = markov::run_paths(n, threads, |k| {
            tc.simulate(x0, horizon, &stop, seed, stream + k)
        });
        runs.push((
            Method::Timechange,
            ps.into_iter().collect::<Result<_, _>>()?,
        ));
    }
    let mut checks = Vec::new();
    let mut files = Vec::new();
    for (which, ps) in &runs {
        let oracle_target = if *which == Method::Chain {
            target
        } else {
            None
        };
        checks.push((*which, markov::empirical_checks(ps, &chain, oracle_target)?));
        let name = format!(
            "paths_{}.csv",
            serde_json::to_value(which)?.as_str().unwrap_or_default()
        );
        files.extend(write_out(config, &name, &paths_csv(ps))?);
    }
    let agreement = match runs.as_slice() {
        [(_, a), (_, b)] => Some(markov::exit_side_agreement(a, b, x0)),
        _ => None,
    };
    let out = SimulateOut {
        method,
        x0,
        chain_x0,
        horizon,
        threads,
        chain_states: chain.len(),
        grid_step: (method != Method::Chain).then_some(grid_step),
        checks,
        agreement,
        files,
    };
    if config.out.is_some() {
        let json = serde_json::to_string_pretty(&Report { config, body: &out })?;
        write_out(config, "checks.json", &json)?;
    }
    emit(config, out, |o| {
        let mut s = String::new();
        for (which, c) in &o.checks {
            s.push_str(&format!(
                "{which:?}: {} paths, skip-free {:.2}%, detailed balance defect {:e}\n",
                c.paths,
                100.0 * c.skip_free_rate,
                c.detailed_balance_defect
            ));
            if let Some(h) = &c.hitting {
                s.push_str(&format!(
                    "  P(hit {} before {}) = {:.6}, exact {:.6}, z = {:.3}\n",
                    h.a, h.b, h.frequency, h.exact, h.z
                ));
            }
        }
        if let Some(a) = &o.agreement {
            s.push_str(&format!(
                "exit left of x0: chain {:.6}, time change {:.6}, z = {:.3} ({})\n",
                a.left_frequency[0],
                a.left_frequency[1],
                a.z,
                if a.within_4_sigma {
                    "agree"
                } else {
                    "disagree"
                }
            ));
        }
        s
    })
}

fn cmd_verify(
    config: &RunConfig,
    parent: &Path,
    child: &Path,
    probes: &Path,
) -> anyhow::Result<()> {
    let parent: FormDescriptor = read_json(parent)?;
    let child: FormDescriptor = read_json(child)?;
    let specs: Vec<TestFunctionSpec> = read_json(probes)?;
    let probes = specs
        .iter()
        .map(|s| s.resolve(child.state_space(), config.tol))
        .collect::<Result<Vec<_>, _>>()?;
    let report = forms::verify_subspace(&child, &parent, &probes, config.tol)?;
    write_out(config, "probes.csv", &report.to_csv())?;
    emit(config, report, |r| {
        let v = serde_json::to_value(r.verdict).unwrap_or_default();
        let mut s = r.to_csv();
        s.push_str(&format!("verdict: {}\n", v.as_str().unwrap_or_default()));
        if let Some(m) = r.defect_matched {
            s.push_str(&format!("defect prediction matched: {m}\n"));
        }
        s
    })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::DomainViolation(_) | Error::MismatchedBase) => 2,
        Some(Error::TolNotAchievable { .. }) => 3,
        Some(Error::QkViolated) => 4,
        _ => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = &cli.config;
    match &cli.command {
        Command::Catalog => cmd_catalog(config),
        Command::Energy { form, f, g } => cmd_energy(config, form, f, g.as_deref()),
        Command::Classify { set, measure } => cmd_classify(config, set, measure.as_deref()),
        Command::Simulate {
            speed,
            x0,
            horizon,
            method,
            grid_step,
            states,
            target,
        } => {
            let target = match target.as_deref() {
                Some([a, b]) => Some((*a, *b)),
                Some(_) => return Err(anyhow!("--target takes two states")),
                None => None,
            };
            cmd_simulate(
                config, speed, *x0, *horizon, *method, *grid_step, *states, target,
            )
        }
        Command::VerifySubspace {
            parent,
            child,
            probes,
        } => cmd_verify(config, parent, child, probes),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
