//! weightlab command-line front end: load weight/signal specs, run the
//! estimators, verifiers and experiments, and emit machine-readable reports
//! with CSV side tables.
//!
//! Exit codes: 0 all verdicts passed, 1 a verdict failed, 2 usage or
//! configuration error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use weightlab::error::Error;
use weightlab::geometry::{enumerate_dyadic, enumerate_dyadic_shifted, Cube, CubeFamily};
use weightlab::report::{default_ambient, ConstantRecord, Report, RunConfig, VerdictRecord};
use weightlab::sawyer::{self, SignalSpec};
use weightlab::tails::{self, EstimatorConfig};
use weightlab::util::seeded_rng;
use weightlab::verify;
use weightlab::weights::{gallery_all, GalleryParams, Weight, WeightSpec};

#[derive(Parser)]
#[command(
    name = "weightlab",
    version,
    about = "Numerical toolkit for maximal functions, C_p tails, weight constants and reverse Hölder inequalities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Shared {
    /// Dimension (1 or 2)
    #[arg(long = "n", default_value_t = 1)]
    dimension: usize,

    /// Grid resolution per axis (power of two)
    #[arg(long, default_value_t = 1024)]
    resolution: usize,

    /// Dyadic family depth
    #[arg(long, default_value_t = 6)]
    depth: u32,

    /// Certified tail tolerance
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,

    /// Verdict slack (relative)
    #[arg(long, default_value_t = 1e-8)]
    slack: f64,

    /// Seed for every random choice in the run
    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Output path stem (JSON report and CSV side tables)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Record a wall-clock timestamp (off by default so equal configs give
    /// byte-identical reports)
    #[arg(long, default_value_t = false)]
    stamp: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate A-infinity/C_p/C_{p,s}/RH constants and the theorem constants
    Constants {
        #[command(flatten)]
        shared: Shared,
        /// Weight spec file (JSON); repeatable. Default: the gallery.
        #[arg(long = "weight")]
        weight: Vec<PathBuf>,
        #[arg(long = "p", value_delimiter = ',', default_values_t = vec![2.0])]
        p_list: Vec<f64>,
        #[arg(long = "q", value_delimiter = ',')]
        q_list: Vec<f64>,
        #[arg(long = "s", value_delimiter = ',')]
        s_list: Vec<f64>,
    },
    /// Run a verification suite; exit 0 iff every verdict passes
    Verify {
        /// Suite: tail-equivalence | rhi-cp | rhi-ainfty | rhi-dilation |
        /// cp-definition | monotonicity | power-sweep | all
        suite: String,
        #[command(flatten)]
        shared: Shared,
        /// Weight spec files, or the literal `gallery`
        #[arg(long = "weights", default_value = "gallery")]
        weights: Vec<String>,
        /// Number of seeded random grid weights added to the matrix
        #[arg(long, default_value_t = 5)]
        random: usize,
        #[arg(long = "p", value_delimiter = ',', default_values_t = vec![1.5, 2.0, 3.0])]
        p_list: Vec<f64>,
        #[arg(long = "s", value_delimiter = ',', default_values_t = vec![2.0, 1.5, 1.25])]
        s_list: Vec<f64>,
    },
    /// Good-lambda measurements and the Coifman-Fefferman ratio experiment
    Cfi {
        #[command(flatten)]
        shared: Shared,
        /// Signal spec file (JSON) or inline JSON
        #[arg(long)]
        signal: String,
        /// Weight spec file (JSON); default constant weight
        #[arg(long)]
        weight: Option<PathBuf>,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 4.0)]
        q: f64,
        /// Gamma grid for the good-lambda table
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 0.25, 0.125, 0.0625, 0.03125])]
        gammas: Vec<f64>,
    },
    /// Sharpness sweep over the power-weight family w_eps
    Sweep {
        #[command(flatten)]
        shared: Shared,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long = "eps", value_delimiter = ',', default_values_t = vec![0.2, 0.1, 0.05])]
        eps_list: Vec<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(all_passed) => {
            if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Constants { shared, weight, p_list, q_list, s_list } => {
            cmd_constants(shared, weight, p_list, q_list, s_list)
        }
        Command::Verify { suite, shared, weights, random, p_list, s_list } => {
            cmd_verify(&suite, shared, weights, random, p_list, s_list)
        }
        Command::Cfi { shared, signal, weight, p, q, gammas } => {
            cmd_cfi(shared, signal, weight, p, q, gammas)
        }
        Command::Sweep { shared, p, eps_list } => cmd_sweep(shared, p, eps_list),
    }
}

struct Env {
    ambient: Cube,
    family: CubeFamily,
    shifted_family: CubeFamily,
    cfg: EstimatorConfig,
}

fn build_env(shared: &Shared, command: &str, weights: &[String]) -> Result<(Env, Report), Error> {
    let ambient = default_ambient(shared.dimension)?;
    let family = enumerate_dyadic(&ambient, shared.depth)?;
    let shifted_depth = if shared.dimension == 1 { shared.depth } else { shared.depth.min(5) };
    let shifted_family = enumerate_dyadic_shifted(&ambient, shifted_depth)?;
    let cfg = EstimatorConfig { ambient, resolution: shared.resolution, tol: shared.tol };
    let config = RunConfig {
        command: command.to_string(),
        dimension: shared.dimension,
        resolution: shared.resolution,
        depth: shared.depth,
        p_list: Vec::new(),
        q_list: Vec::new(),
        s_list: Vec::new(),
        tol: shared.tol,
        slack: shared.slack,
        seed: shared.seed,
        weights: weights.to_vec(),
        random_weights: 0,
    };
    config.validate()?;
    let mut report = Report::new(config);
    if shared.stamp {
        report.timestamp = Some(format!("{:?}", std::time::SystemTime::now()));
    }
    Ok((Env { ambient, family, shifted_family, cfg }, report))
}

fn load_weights(paths: &[PathBuf], dimension: usize) -> Result<Vec<Weight>, Error> {
    let mut out = Vec::new();
    for p in paths {
        let spec = WeightSpec::from_file(p)?;
        let base = p.parent().unwrap_or(Path::new("."));
        out.push(spec.build(dimension, base)?);
    }
    Ok(out)
}

fn weight_matrix(
    names: &[String],
    dimension: usize,
    random: usize,
    seed: u64,
    ambient: &Cube,
    resolution: usize,
) -> Result<Vec<Weight>, Error> {
    let mut out = Vec::new();
    for n in names {
        if n == "gallery" {
            out.extend(gallery_all(dimension, GalleryParams::default())?);
        } else {
            let p = PathBuf::from(n);
            let spec = WeightSpec::from_file(&p)?;
            let base = p.parent().unwrap_or(Path::new("."));
            out.push(spec.build(dimension, base)?);
        }
    }
    let mut rng = seeded_rng(seed);
    let grid_res = resolution.min(512);
    for i in 0..random {
        let w = verify::random_grid_weight(dimension, *ambient, grid_res, &mut rng)?;
        out.push(w.with_id(format!("random_grid_{i}")));
    }
    Ok(out)
}

fn cmd_constants(
    shared: Shared,
    weight_paths: Vec<PathBuf>,
    p_list: Vec<f64>,
    q_list: Vec<f64>,
    s_list: Vec<f64>,
) -> Result<bool, Error> {
    let names: Vec<String> = weight_paths.iter().map(|p| p.display().to_string()).collect();
    let (env, mut report) = build_env(&shared, "constants", &names)?;
    report.config.p_list = p_list.clone();
    report.config.q_list = q_list.clone();
    report.config.s_list = s_list.clone();
    let weights = if weight_paths.is_empty() {
        gallery_all(shared.dimension, GalleryParams::default())?
    } else {
        load_weights(&weight_paths, shared.dimension)?
    };
    for w in &weights {
        match tails::ainfty_constant(w, &env.family, &env.cfg) {
            Ok(est) => report.constants.push(ConstantRecord {
                op: "ainfty_constant".into(),
                weight_id: w.id().into(),
                p: None,
                s: None,
                estimate: est,
            }),
            Err(Error::AllCubesZeroMass) => {}
            Err(e) => return Err(e),
        }
        for &p in p_list.iter().chain(q_list.iter()) {
            let est = tails::cp_constant(w, p, &env.family, &env.cfg)?;
            let value = est.value;
            report.constants.push(ConstantRecord {
                op: "cp_constant".into(),
                weight_id: w.id().into(),
                p: Some(p),
                s: None,
                estimate: est,
            });
            for &s in &s_list {
                let est = tails::cps_constant(w, p, s, &env.family, &env.cfg)?;
                report.constants.push(ConstantRecord {
                    op: "cps_constant".into(),
                    weight_id: w.id().into(),
                    p: Some(p),
                    s: Some(s),
                    estimate: est,
                });
                report
                    .tables
                    .theorem_constants
                    .push(tails::theorem_constants(shared.dimension, p, Some(s), value.max(0.0))?);
            }
            if s_list.is_empty() {
                report
                    .tables
                    .theorem_constants
                    .push(tails::theorem_constants(shared.dimension, p, None, value.max(0.0))?);
            }
            let r_exp = if p > 1.0 { p } else { 2.0 };
            let est = tails::rh_constant(w, r_exp, &env.family, &env.cfg)?;
            report.constants.push(ConstantRecord {
                op: "rh_constant".into(),
                weight_id: w.id().into(),
                p: Some(r_exp),
                s: None,
                estimate: est,
            });
        }
    }
    for c in &report.constants {
        println!(
            "{:18} {:34} p={:<6} s={:<6} value={:.6e} upper={:.6e} (family {}, skipped {})",
            c.op,
            c.weight_id,
            c.p.map(|v| v.to_string()).unwrap_or_default(),
            c.s.map(|v| v.to_string()).unwrap_or_default(),
            c.estimate.value,
            c.estimate.upper,
            c.estimate.family_size,
            c.estimate.skipped,
        );
    }
    emit(&report, &shared)?;
    Ok(true)
}

fn cmd_verify(
    suite: &str,
    shared: Shared,
    weight_names: Vec<String>,
    random: usize,
    p_list: Vec<f64>,
    s_list: Vec<f64>,
) -> Result<bool, Error> {
    let known = [
        "tail-equivalence",
        "rhi-cp",
        "rhi-ainfty",
        "rhi-dilation",
        "cp-definition",
        "monotonicity",
        "power-sweep",
        "all",
    ];
    if !known.contains(&suite) {
        return Err(Error::InvalidConfig(format!(
            "unknown suite `{suite}`; valid suites: {}",
            known.join(", ")
        )));
    }
    let (env, mut report) = build_env(&shared, &format!("verify {suite}"), &weight_names)?;
    report.config.p_list = p_list.clone();
    report.config.s_list = s_list.clone();
    report.config.random_weights = random;
    let weights = weight_matrix(
        &weight_names,
        shared.dimension,
        random,
        shared.seed,
        &env.ambient,
        shared.resolution,
    )?;

    let want = |name: &str| suite == name || suite == "all";

    if want("tail-equivalence") {
        for w in &weights {
            for &p in &p_list {
                let v = verify::check_tail_equivalence(w, &env.family, p, &env.cfg, shared.slack)?;
                push_verdict(&mut report, "check_tail_equivalence", w.id(), format!("p={p}"), v);
            }
        }
    }
    if want("rhi-cp") {
        for w in &weights {
            for &p in &p_list {
                let v = verify::check_rhi_cp(w, &env.family, p, &env.cfg, shared.slack)?;
                push_verdict(&mut report, "check_rhi_cp", w.id(), format!("p={p}"), v);
            }
        }
    }
    if want("rhi-ainfty") {
        let mut pool: Vec<Weight> = Vec::new();
        for a in [-0.5, 0.0, 0.5, 1.0, 2.0] {
            pool.push(Weight::power(shared.dimension, a)?);
        }
        pool.extend(weights.iter().cloned());
        for w in &pool {
            let v = verify::check_rhi_ainfty(w, &env.family, &env.cfg, shared.slack)?;
            push_verdict(&mut report, "check_rhi_ainfty", w.id(), String::new(), v);
        }
    }
    if want("rhi-dilation") {
        for w in &weights {
            for &s in &s_list {
                let p = p_list.iter().copied().find(|&p| p >= 2.0).unwrap_or(2.0);
                let v = verify::check_rhi_dilation(w, &env.family, p, s, &env.cfg, shared.slack)?;
                push_verdict(&mut report, "check_rhi_dilation", w.id(), format!("p={p} s={s}"), v);
            }
        }
    }
    if want("cp-definition") {
        let q = if shared.dimension == 1 {
            Cube::interval(-1.0, 1.0)?
        } else {
            Cube::square(0.0, 0.0, 1.0)?
        };
        let mut rng = seeded_rng(shared.seed ^ 0x5eed);
        let subset_res = if shared.dimension == 1 { 64 } else { 32 };
        let subsets = verify::sample_subsets(&q, 4, 100, subset_res, &mut rng)?;
        for w in &weights {
            for &p in &p_list {
                if w.tail_divergent(p) {
                    continue;
                }
                let est = tails::cp_constant(w, p, &env.family, &env.cfg)?;
                let v = verify::check_cp_definition(
                    w,
                    &q,
                    p,
                    &subsets,
                    est.value,
                    &env.cfg,
                    shared.slack,
                )?;
                push_verdict(&mut report, "check_cp_definition", w.id(), format!("p={p}"), v);
            }
        }
    }
    if want("monotonicity") {
        for w in &weights {
            for (qe, pe) in [(1.5, 2.0), (2.0, 3.0)] {
                let v =
                    verify::check_constant_chain(w, &env.family, qe, pe, &env.cfg, shared.slack)?;
                push_verdict(
                    &mut report,
                    "check_constant_chain",
                    w.id(),
                    format!("q={qe} p={pe}"),
                    v,
                );
            }
        }
    }
    if want("power-sweep") {
        let table =
            verify::sweep_power_weights(2.0, &[0.2, 0.1, 0.05], &env.shifted_family, &env.cfg)?;
        let v = sweep_verdict(&table);
        push_verdict(&mut report, "sweep_power_weights", "power_eps family", "p=2".into(), v);
        report.tables.sweep = Some(table);
    }

    for v in &report.verdicts {
        println!(
            "{} {:24} {:30} {:14} margin={:+.3e} tests={}{}",
            if v.verdict.passed { "PASS" } else { "FAIL" },
            v.op,
            v.weight_id,
            v.params,
            v.verdict.worst_margin,
            v.verdict.tests_run,
            if v.verdict.guard_flagged { " [guard flagged]" } else { "" },
        );
    }
    emit(&report, &shared)?;
    let ok = report.all_passed();
    if !ok {
        let worst = report
            .verdicts
            .iter()
            .filter(|v| !v.verdict.passed)
            .min_by(|a, b| a.verdict.worst_margin.partial_cmp(&b.verdict.worst_margin).unwrap());
        if let Some(v) = worst {
            eprintln!(
                "worst failure: {} on {} ({}), margin {:+.6e}, witness {:?}",
                v.op, v.weight_id, v.params, v.verdict.worst_margin, v.verdict.witness
            );
        }
    }
    Ok(ok)
}

fn sweep_verdict(table: &verify::SweepTable) -> verify::Verdict {
    verify::Verdict {
        theorem: "power-sweep".into(),
        passed: table.strictly_decreasing && table.ratio_band <= 10.0,
        worst_margin: if table.strictly_decreasing { 10.0 - table.ratio_band } else { -1.0 },
        witness: None,
        tests_run: table.rows.len(),
        skipped: 0,
        guard_flagged: false,
    }
}

fn cmd_cfi(
    shared: Shared,
    signal: String,
    weight: Option<PathBuf>,
    p: f64,
    q: f64,
    gammas: Vec<f64>,
) -> Result<bool, Error> {
    if !(q > p && p > 1.0) {
        return Err(Error::InvalidConfig(format!("cfi requires q > p > 1, got p={p}, q={q}")));
    }
    if shared.dimension != 1 {
        return Err(Error::InvalidConfig("cfi runs in dimension 1".into()));
    }
    let (env, mut report) = build_env(&shared, "cfi", &[signal.clone()])?;
    report.config.p_list = vec![p];
    report.config.q_list = vec![q];
    let spec = if signal.trim_start().starts_with('{') {
        SignalSpec::from_json(&signal)?
    } else {
        SignalSpec::from_json(&std::fs::read_to_string(&signal)?)?
    };
    let w = match &weight {
        Some(path) => {
            let ws = WeightSpec::from_file(path)?;
            ws.build(shared.dimension, path.parent().unwrap_or(Path::new(".")))?
        }
        None => Weight::constant(shared.dimension, 1.0)?,
    };
    let boxc = Cube::interval(-4.0, 4.0)?;
    let f = spec.sample(&boxc, shared.resolution)?;
    let glcfg = sawyer::GoodLambdaConfig { gammas, k_range: None, whitney_r: 1.0 };
    let table = sawyer::good_lambda_measure(&f, &w, &glcfg, &spec.id())?;
    let fit = sawyer::buckley_decay_fit(&table);
    let row = sawyer::cfi_ratio(&f, &spec.id(), &w, p, q, &env.family, &env.cfg)?;
    println!(
        "cfi ratio={:.4} phi_bound={:.4} factor={:.2} degenerate={}",
        row.ratio, row.phi_bound, row.exponent_factor, row.degenerate
    );
    match &fit {
        Some(fit) => println!(
            "good-lambda decay fit: slope={:.4} intercept={:.4} r2={:.4} points={}",
            fit.slope, fit.intercept, fit.r2, fit.points
        ),
        None => println!("good-lambda decay fit: not enough positive fractions"),
    }
    report.tables.cfi.push(row);
    report.tables.decay_fits.push((spec.id(), fit));
    report.tables.good_lambda.push(table);
    emit(&report, &shared)?;
    Ok(true)
}

fn cmd_sweep(shared: Shared, p: f64, eps_list: Vec<f64>) -> Result<bool, Error> {
    let (env, mut report) = build_env(&shared, "sweep", &[])?;
    report.config.p_list = vec![p];
    let table = verify::sweep_power_weights(p, &eps_list, &env.shifted_family, &env.cfg)?;
    for r in &table.rows {
        println!(
            "eps={:<8} cp=[{:.6}, {:.6}] ratio_to_eps={:.4}",
            r.eps, r.cp_lower, r.cp_upper, r.ratio_to_eps
        );
    }
    println!(
        "strictly_decreasing={} ratio_band={:.3}",
        table.strictly_decreasing, table.ratio_band
    );
    let ok = table.strictly_decreasing;
    report.tables.sweep = Some(table);
    emit(&report, &shared)?;
    Ok(ok)
}

fn push_verdict(report: &mut Report, op: &str, weight: &str, params: String, v: verify::Verdict) {
    report.verdicts.push(VerdictRecord {
        op: op.into(),
        weight_id: weight.into(),
        params,
        verdict: v,
    });
}

fn emit(report: &Report, shared: &Shared) -> Result<(), Error> {
    match &shared.out {
        Some(stem) => {
            let json_path = if stem.extension().is_some() {
                stem.clone()
            } else {
                stem.with_extension("json")
            };
            if shared.format == Format::Json || shared.format == Format::Both {
                report.write_json(&json_path)?;
                eprintln!("wrote {}", json_path.display());
            }
            if shared.format == Format::Csv || shared.format == Format::Both {
                for p in report.write_csv(&json_path)? {
                    eprintln!("wrote {}", p.display());
                }
            }
        }
        None => {
            if shared.format == Format::Json || shared.format == Format::Both {
                println!("{}", report.to_json()?);
            }
        }
    }
    Ok(())
}
