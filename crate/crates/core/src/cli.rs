//! Command-line front end. Every run produces a report; `--json` prints it,
//! `--out` writes it atomically.
//!
//! Exit codes: 0 success, 1 error, 2 infeasible or not viable, 64 usage.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use crate::average::{extreme_decompose, realize_on_average_with};
use crate::channel::{extremality_test, kraus_rank, Channel};
use crate::design::{block_convex_design_with, block_convex_plan, design_stochastic_unitary_with, DiagonalInitialization};
use crate::dilation::{
    dilate_via_subsystem_with, find_eps_pure_subsystem, find_eps_pure_subsystem_with_cofactor, DilationReport,
    MeasureOptions,
};
use crate::distance::{channel_distance_1to1, DEFAULT_RESTARTS};
use crate::error::{Error, Result};
use crate::io::{float, matrix_to_value, read_channel, read_document, read_state, reals_to_value, to_canonical_string, write_atomic, Document};
use crate::operators::DensityOperator;
use crate::protocols::feedback::fbdd_run;
use crate::protocols::coherent::{lv_nested, NestedSchedules};
use crate::protocols::splitting::{split_closed_form, split_measurement_feedback, split_run, target_population};
use crate::random::{random_density, seeded};
use crate::spectral::eigh;
use crate::tolerance::{TOL_EQ, TOL_EXTREME, TOL_TP};
use crate::transfer::{optimize, propagate, target_components, OptimizeOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "qdf", version, about = "Unitary design of quantum channels")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Numerical tolerance override.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Write the JSON report here.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print the JSON report on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DilateMode {
    Auto,
    Stinespring,
    Subsystem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolKind {
    Lv2,
    Lv3,
    Fbdd,
    Split,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kraus rank, extremality and Choi spectrum of a channel.
    Analyze {
        #[arg(long)]
        channel: PathBuf,
    },
    /// Dilate a channel on a given environment state.
    Dilate {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        env: PathBuf,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, value_enum, default_value_t = DilateMode::Auto)]
        mode: DilateMode,
    },
    /// Structured designs on mixed environments.
    Design {
        #[command(subcommand)]
        which: DesignCommand,
    },
    /// Split a channel into extreme components.
    Decompose {
        #[command(subcommand)]
        which: DecomposeCommand,
    },
    /// Realize a channel as a random mixture of exact dilations.
    Realize {
        #[command(subcommand)]
        which: RealizeCommand,
    },
    /// Simulate a coherent protocol.
    Protocol {
        #[arg(value_enum)]
        kind: ProtocolKind,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        cycles: Option<usize>,
    },
    /// Search for a control pulse realizing a target channel.
    Optimize {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum DesignCommand {
    /// Mixed-unitary target on a diagonal environment.
    Stochastic {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        env: PathBuf,
    },
    /// Convex combination of extreme channels on a block-structured environment.
    Convex {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        env: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum DecomposeCommand {
    /// Split a channel into extreme components.
    Extreme {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        max: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum RealizeCommand {
    /// Randomized mixture of exact dilations.
    Average {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        env: PathBuf,
    },
}

/// Everything a run reports besides its status.
#[derive(Debug, Default)]
pub struct Outcome {
    pub method: Option<String>,
    pub eps_certified: Option<f64>,
    pub eps_measured: Option<f64>,
    pub diagnostics: Vec<String>,
    pub result: Map<String, Value>,
}

impl Outcome {
    fn put(&mut self, key: &str, v: Value) {
        self.result.insert(key.to_string(), v);
    }

    fn from_dilation(report: &DilationReport) -> Self {
        let mut o = Outcome {
            method: Some(report.method.as_str().to_string()),
            eps_certified: Some(report.eps_certified),
            eps_measured: Some(report.eps_measured),
            diagnostics: report.diagnostics.clone(),
            ..Default::default()
        };
        o.put("d_s", int(report.d_s));
        o.put("d_e", int(report.env_state.dim()));
        o.put("unitary", matrix_to_value(report.w.matrix()));
        o
    }
}

fn int(n: usize) -> Value {
    Value::from(n as u64)
}

fn opts(cli: &Cli) -> MeasureOptions {
    MeasureOptions {
        restarts: DEFAULT_RESTARTS,
        seed: cli.seed,
    }
}

fn is_pure(rho: &DensityOperator) -> bool {
    eigh(rho.matrix()).values[0] >= 1.0 - 1e-10
}

fn analyze(cli: &Cli, path: &Path) -> Result<Outcome> {
    let ch = read_channel(path)?;
    let tol = cli.tol.unwrap_or(TOL_EXTREME);
    let verdict = extremality_test(&ch, tol);
    let mut o = Outcome::default();
    o.put("dim", int(ch.dim()));
    o.put("kraus_count", int(ch.kraus().len()));
    o.put("kraus_rank", int(kraus_rank(&ch)));
    o.put("extreme", Value::Bool(verdict.is_extreme));
    o.put("gram_rank", int(verdict.gram_rank));
    o.put("min_singular_value", float(verdict.min_singular_value));
    o.put("choi_spectrum", reals_to_value(&eigh(ch.choi().matrix()).values));
    o.put("tp_residual", float(ch.kraus().tp_residual()));
    Ok(o)
}

fn dilate(cli: &Cli, channel: &Path, env: &Path, m: Option<usize>, mode: DilateMode) -> Result<Outcome> {
    let ch = read_channel(channel)?;
    let rho_e = read_state(env)?;
    let d_e = rho_e.dim();
    let pure = is_pure(&rho_e);
    let init = match mode {
        DilateMode::Stinespring => {
            if !pure {
                return Err(Error::PreconditionFailed("stinespring mode needs a pure environment".into()));
            }
            find_eps_pure_subsystem_with_cofactor(&rho_e, m.unwrap_or(d_e), 1)?
        }
        DilateMode::Auto if pure && m.is_none() => find_eps_pure_subsystem_with_cofactor(&rho_e, d_e, 1)?,
        _ => find_eps_pure_subsystem(&rho_e, m.unwrap_or_else(|| kraus_rank(&ch).min(d_e)))?,
    };
    let report = dilate_via_subsystem_with(&ch, &init, opts(cli))?;
    let mut o = Outcome::from_dilation(&report);
    o.put("m", int(init.decomp().m()));
    o.put("f", int(init.decomp().f()));
    o.put("initialization_epsilon", float(init.epsilon()));
    Ok(o)
}

fn design_stochastic(cli: &Cli, spec: &Path, env: &Path) -> Result<Outcome> {
    let Document::StochasticSpec(file) = read_document(spec)? else {
        return Err(Error::Parse(format!("{}: expected kind \"stochastic-spec\"", spec.display())));
    };
    let rho_e = read_state(env)?;
    let m = file.spec.len();
    let f = file.cofactor.unwrap_or(rho_e.dim() / m.max(1));
    let init = DiagonalInitialization::from_environment(&rho_e, m, f)?;
    let report = design_stochastic_unitary_with(&file.spec, &init, opts(cli))?;
    let mut o = Outcome::from_dilation(&report);
    o.put("m", int(m));
    o.put("f", int(f));
    o.put("populations", reals_to_value(init.populations().as_slice()));
    Ok(o)
}

fn design_convex(cli: &Cli, spec: &Path, env: &Path) -> Result<Outcome> {
    let Document::ConvexSpec(spec) = read_document(spec)? else {
        return Err(Error::Parse(format!("{}: expected kind \"convex-spec\"", spec.display())));
    };
    let rho_e = read_state(env)?;
    let plan = block_convex_plan(&spec, &rho_e)?;
    let report = block_convex_design_with(&spec, &rho_e, opts(cli))?;
    let mut o = Outcome::from_dilation(&report);
    o.put("f", int(plan.f));
    o.put("order", Value::Array(plan.order.iter().map(|&i| int(i)).collect()));
    o.put("block_mass", reals_to_value(&plan.block_mass));
    o.put("kernel_needed", int(plan.kernel_needed));
    o.put("kernel_available", int(plan.kernel_available));
    Ok(o)
}

fn decompose(cli: &Cli, channel: &Path, max: Option<usize>) -> Result<Outcome> {
    let ch = read_channel(channel)?;
    let tol = cli.tol.unwrap_or(TOL_EXTREME);
    let dec = extreme_decompose(&ch, tol, max.unwrap_or(ch.dim().pow(4)))?;
    let mut o = Outcome {
        method: Some("extreme_decomposition".into()),
        diagnostics: dec.warnings.clone(),
        ..Default::default()
    };
    let comps: Vec<Value> = dec
        .components
        .iter()
        .map(|c| {
            let mut m = Map::new();
            m.insert("weight".into(), float(c.weight));
            m.insert("kraus_rank".into(), int(c.verdict.m));
            m.insert("extreme".into(), Value::Bool(c.verdict.is_extreme));
            m.insert("min_singular_value".into(), float(c.verdict.min_singular_value));
            m.insert(
                "kraus".into(),
                Value::Array(c.channel.kraus().ops().iter().map(matrix_to_value).collect()),
            );
            Value::Object(m)
        })
        .collect();
    o.put("component_count", int(comps.len()));
    o.put("components", Value::Array(comps));
    o.put("reconstitution_error", float(dec.reconstitution_error));
    Ok(o)
}

fn realize(cli: &Cli, channel: &Path, env: &Path) -> Result<Outcome> {
    let ch = read_channel(channel)?;
    let rho_e = read_state(env)?;
    let init = find_eps_pure_subsystem(&rho_e, ch.dim())?;
    let ar = realize_on_average_with(&ch, &init, opts(cli))?;
    let mut o = Outcome {
        method: Some("average".into()),
        eps_certified: Some(ar.eps_certified),
        eps_measured: Some(ar.eps_measured),
        diagnostics: ar.warnings.clone(),
        ..Default::default()
    };
    o.put("distribution", reals_to_value(ar.distribution.as_slice()));
    o.put("reconstitution_error", float(ar.reconstitution_error));
    let comps: Vec<Value> = ar
        .dilations
        .iter()
        .map(|r| {
            let mut m = Map::new();
            m.insert("method".into(), Value::String(r.method.as_str().into()));
            m.insert("eps_certified".into(), float(r.eps_certified));
            m.insert("eps_measured".into(), float(r.eps_measured));
            m.insert("unitary".into(), matrix_to_value(r.w.matrix()));
            Value::Object(m)
        })
        .collect();
    o.put("component_count", int(comps.len()));
    o.put("components", Value::Array(comps));
    Ok(o)
}

fn protocol(cli: &Cli, kind: ProtocolKind, config: &Path, cycles: Option<usize>) -> Result<Outcome> {
    match kind {
        ProtocolKind::Lv2 | ProtocolKind::Lv3 => {
            let n = if kind == ProtocolKind::Lv2 { 2 } else { 3 };
            let ch = match read_document(config)? {
                Document::Kraus(ks) => ks,
                other => {
                    return Err(Error::Parse(format!(
                        "{}: expected kind \"kraus\", found \"{}\"",
                        config.display(),
                        other.kind()
                    )))
                }
            };
            if ch.len() > n {
                return Err(Error::InvalidArgument(format!(
                    "this protocol handles at most {n} Kraus operators, file has {}",
                    ch.len()
                )));
            }
            let ops = ch.padded(n).ops().to_vec();
            let ancillas = vec![DensityOperator::basis_state(2, 0); n - 1];
            let out = lv_nested(&ops, &NestedSchedules::Spectral { cycles: cycles.unwrap_or(64) }, &ancillas)?;
            let mut o = Outcome {
                method: Some(format!("coherent_rank{n}")),
                eps_measured: Some(out.target_error),
                ..Default::default()
            };
            if out.pseudo_inverse_used {
                o.diagnostics.push("intermediate operator singular: pseudo-inverse with kernel completion".into());
            }
            o.put("ancilla_qubits", int(out.ancilla_qubits));
            o.put("cycles", int(cycles.unwrap_or(64)));
            o.put("theta", reals_to_value(&out.stages.iter().map(|s| s.theta).collect::<Vec<_>>()));
            o.put("stage_tp_residuals", reals_to_value(&out.stage_tp_residuals));
            o.put("trotter_error", float(out.trotter_error));
            o.put("target_error", float(out.target_error));
            Ok(o)
        }
        ProtocolKind::Fbdd => {
            let Document::FbddConfig(file) = read_document(config)? else {
                return Err(Error::Parse(format!("{}: expected kind \"fbdd-config\"", config.display())));
            };
            let out = fbdd_run(&file.config, &file.rho_b, file.force)?;
            let mut o = Outcome {
                method: Some("feedback_decoupling".into()),
                ..Default::default()
            };
            if !out.check.passed() {
                o.diagnostics.push("checks failed; run forced by override".into());
            }
            o.put("block_form_ok", Value::Bool(out.check.block_form_ok));
            o.put("mixing_ok", Value::Bool(out.check.mixing_ok));
            o.put("coupling_spectrum", reals_to_value(&out.check.spectrum));
            o.put("fidelity", float(out.fidelity));
            o.put(
                "a_plus_formula_residual",
                float(crate::operators::max_abs_diff(&out.a_plus, &out.a_plus_formula)),
            );
            o.put("a_plus_block_residual", float(out.a_plus_block_residual));
            o.put("rho_s_final", matrix_to_value(out.rho_s_final.matrix()));
            Ok(o)
        }
        ProtocolKind::Split => {
            let Document::SplitConfig(cfg) = read_document(config)? else {
                return Err(Error::Parse(format!("{}: expected kind \"split-config\"", config.display())));
            };
            let mut rng = seeded(cli.seed);
            let mut inputs = vec![DensityOperator::maximally_mixed(cfg.d_s)];
            inputs.extend((0..8).map(|_| random_density(cfg.d_s, &mut rng)));
            let (mut pop, mut closed, mut meas) = (0.0f64, 0.0f64, 0.0f64);
            let mut first = None;
            for rho in &inputs {
                let out = split_run(&cfg, rho)?;
                pop = pop.max((target_population(&cfg, &out) - 1.0).abs());
                closed = closed.max(crate::operators::max_abs_diff(out.matrix(), split_closed_form(&cfg, rho)?.matrix()));
                meas = meas.max(crate::operators::max_abs_diff(
                    out.matrix(),
                    split_measurement_feedback(&cfg, rho)?.matrix(),
                ));
                first.get_or_insert(out);
            }
            let mut o = Outcome {
                method: Some("splitting_subspace".into()),
                ..Default::default()
            };
            o.put("k", int(cfg.k));
            o.put("d_t", int(cfg.d_t));
            o.put(
                "block_ranks",
                Value::Array(cfg.blocks.iter().map(|p| int(p.trace().re.round() as usize)).collect()),
            );
            o.put("inputs", int(inputs.len()));
            o.put("max_target_leakage", float(pop));
            o.put("max_closed_form_residual", float(closed));
            o.put("max_measurement_feedback_residual", float(meas));
            if let Some(out) = first {
                o.put("output_for_maximally_mixed", matrix_to_value(out.matrix()));
            }
            Ok(o)
        }
    }
}

fn run_optimize(cli: &Cli, problem: &Path, target: &Path, iters: usize, restarts: usize) -> Result<Outcome> {
    let Document::Problem(prob) = read_document(problem)? else {
        return Err(Error::Parse(format!("{}: expected kind \"problem\"", problem.display())));
    };
    let target_ch: Channel = read_channel(target)?;
    if target_ch.dim() != prob.d_s {
        return Err(Error::DimensionMismatch("target channel does not act on the system".into()));
    }
    let comps = target_components(&target_ch, &prob.basis)?;
    let options = OptimizeOptions {
        max_iters: iters,
        seed: cli.seed,
        restarts,
        ..Default::default()
    };
    let res = optimize(&prob, &comps, &options)?;
    let u = propagate(&prob, &res.pulse)?;
    let achieved = crate::channel::reduced_channel(&u, &prob.rho_e, prob.d_s)?;
    let dist = channel_distance_1to1(&achieved, &target_ch, DEFAULT_RESTARTS, cli.seed)?;
    let mut o = Outcome {
        method: Some("gradient_descent".into()),
        eps_measured: Some(dist.lower_bound),
        ..Default::default()
    };
    o.put("final_cost", float(res.final_cost));
    o.put("restart", int(res.restart));
    o.put("iterations", int(res.iterations));
    o.put("cost_trace", reals_to_value(&res.cost_trace));
    o.put(
        "pulse",
        Value::Array(res.pulse.values.iter().map(|row| reals_to_value(row)).collect()),
    );
    Ok(o)
}

fn execute(cli: &Cli) -> Result<Outcome> {
    if let Some(t) = cli.tol {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {t}")));
        }
    }
    match &cli.command {
        Command::Analyze { channel } => analyze(cli, channel),
        Command::Dilate { channel, env, m, mode } => dilate(cli, channel, env, *m, *mode),
        Command::Design { which } => match which {
            DesignCommand::Stochastic { spec, env } => design_stochastic(cli, spec, env),
            DesignCommand::Convex { spec, env } => design_convex(cli, spec, env),
        },
        Command::Decompose {
            which: DecomposeCommand::Extreme { channel, max },
        } => decompose(cli, channel, *max),
        Command::Realize {
            which: RealizeCommand::Average { channel, env },
        } => realize(cli, channel, env),
        Command::Protocol { kind, config, cycles } => protocol(cli, *kind, config, *cycles),
        Command::Optimize {
            problem,
            target,
            iters,
            restarts,
        } => run_optimize(cli, problem, target, *iters, *restarts),
    }
}

fn opt_float(x: Option<f64>) -> Value {
    x.map(float).unwrap_or(Value::Null)
}

/// JSON report for a finished run.
pub fn report_value(argv: &[String], cli: &Cli, outcome: &Result<Outcome>) -> Value {
    let mut top = Map::new();
    top.insert("command".into(), Value::Array(argv.iter().cloned().map(Value::String).collect()));
    top.insert("seed".into(), Value::from(cli.seed));
    let mut tol = Map::new();
    tol.insert("eq".into(), float(TOL_EQ));
    tol.insert("tp".into(), float(TOL_TP));
    tol.insert("extreme".into(), float(cli.tol.unwrap_or(TOL_EXTREME)));
    top.insert("tolerances".into(), Value::Object(tol));
    match outcome {
        Ok(o) => {
            top.insert("status".into(), Value::String("ok".into()));
            top.insert("method".into(), o.method.clone().map(Value::String).unwrap_or(Value::Null));
            top.insert("eps_certified".into(), opt_float(o.eps_certified));
            top.insert("eps_measured".into(), opt_float(o.eps_measured));
            top.insert(
                "diagnostics".into(),
                Value::Array(o.diagnostics.iter().cloned().map(Value::String).collect()),
            );
            top.insert("result".into(), Value::Object(o.result.clone()));
        }
        Err(e) => {
            let status = if e.is_infeasible() { "infeasible" } else { "error" };
            top.insert("status".into(), Value::String(status.into()));
            top.insert("error".into(), Value::String(e.to_string()));
        }
    }
    Value::Object(top)
}

fn exit_code(outcome: &Result<Outcome>) -> i32 {
    match outcome {
        Ok(_) => EXIT_OK,
        Err(e) if e.is_infeasible() => EXIT_INFEASIBLE,
        Err(_) => EXIT_ERROR,
    }
}

fn human_summary(outcome: &Result<Outcome>) -> String {
    let mut s = String::new();
    match outcome {
        Ok(o) => {
            s.push_str("status: ok\n");
            if let Some(m) = &o.method {
                s.push_str(&format!("method: {m}\n"));
            }
            if let Some(e) = o.eps_certified {
                s.push_str(&format!("eps_certified: {e:.6e}\n"));
            }
            if let Some(e) = o.eps_measured {
                s.push_str(&format!("eps_measured: {e:.6e}\n"));
            }
            for (k, v) in &o.result {
                match v {
                    Value::Number(_) | Value::Bool(_) | Value::String(_) => s.push_str(&format!("{k}: {v}\n")),
                    Value::Array(items) if items.iter().all(Value::is_number) => {
                        s.push_str(&format!("{k}: {v}\n"))
                    }
                    _ => {}
                }
            }
            for d in &o.diagnostics {
                s.push_str(&format!("note: {d}\n"));
            }
        }
        Err(e) => {
            let status = if e.is_infeasible() { "infeasible" } else { "error" };
            s.push_str(&format!("status: {status}\n{e}\n"));
        }
    }
    s
}

fn configure_threads() {
    if let Some(n) = std::env::var("QDF_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let start = Instant::now();
    let outcome = execute(&cli);
    let text = to_canonical_string(&report_value(&argv, &cli, &outcome));
    if let Some(path) = &cli.out {
        if let Err(e) = write_atomic(path, &text) {
            eprintln!("qdf: cannot write report: {e}");
            return EXIT_ERROR;
        }
    }
    if cli.json {
        print!("{text}");
    } else {
        let summary = human_summary(&outcome);
        if outcome.is_ok() {
            print!("{summary}");
        } else {
            eprint!("{summary}");
        }
    }
    eprintln!("elapsed: {:.3}s", start.elapsed().as_secs_f64());
    exit_code(&outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{emit_document, Document};

    fn write(dir: &Path, name: &str, doc: &Document) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, emit_document(doc)).unwrap();
        p
    }

    fn run(args: &[&str]) -> i32 {
        let mut v = vec!["qdf"];
        v.extend_from_slice(args);
        main_with_args(v)
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run(&["frobnicate"]), EXIT_USAGE);
        assert_eq!(run(&["analyze"]), EXIT_USAGE);
        assert_eq!(run(&["protocol", "lv9", "--config", "x"]), EXIT_USAGE);
    }

    #[test]
    fn analyze_and_dilate_write_reports() {
        let dir = tempfile::tempdir().unwrap();
        let id = write(dir.path(), "id.json", &Document::Kraus(Channel::identity(2).kraus().clone()));
        let out = dir.path().join("report.json");
        let code = run(&["analyze", "--channel", id.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(v["result"]["kraus_rank"], 1);
        assert_eq!(v["result"]["extreme"], true);

        let ad = write(dir.path(), "ad.json", &Document::Kraus(Channel::amplitude_damping(0.36).unwrap().kraus().clone()));
        let env = write(dir.path(), "env.json", &Document::State(DensityOperator::basis_state(2, 0)));
        let code = run(&[
            "dilate",
            "--channel",
            ad.to_str().unwrap(),
            "--env",
            env.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert!(v["eps_measured"].as_f64().unwrap() <= 1e-10);
        assert_eq!(v["method"], "stinespring_pure");
    }

    #[test]
    fn missing_file_is_an_error() {
        assert_eq!(run(&["analyze", "--channel", "/nonexistent/x.json"]), EXIT_ERROR);
    }

    #[test]
    fn infeasible_verdict_exits_two() {
        let dir = tempfile::tempdir().unwrap();
        let dep = write(dir.path(), "dep.json", &Document::Kraus(Channel::depolarizing(0.5).unwrap().kraus().clone()));
        let env = write(dir.path(), "env.json", &Document::State(DensityOperator::basis_state(2, 0)));
        // Kraus rank 4 on a 2-dimensional pure environment
        let code = run(&["dilate", "--channel", dep.to_str().unwrap(), "--env", env.to_str().unwrap(), "--mode", "stinespring"]);
        assert_eq!(code, EXIT_INFEASIBLE);
    }
}
