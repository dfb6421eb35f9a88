//! Command-line front end for the stochastic Schrödinger large-deviations
//! toolkit: scheme validation, rate-function queries, Monte Carlo
//! studies, and raw ensemble simulation.
//!
//! Every refusal exits nonzero with one JSON line on stderr carrying a
//! machine-readable reason code. Studies write CSV plus a manifest that
//! echoes the full configuration; re-running from that echo reproduces
//! the CSV bodies byte for byte.

mod config;
mod errors;
mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use sls_core::exact_law::{
    fernique_identity_check, mass_expectation, sample_terminal, ExactLawParams,
};
use sls_core::monte_carlo::{
    empirical_lmgf, lmgf_from_moments, m_convergence_study, simulate_checkpoints,
    simulate_ensemble, tail_probability, tau_convergence_study, EnsembleConfig,
};
use sls_core::rate::{
    lmgf_full, mass_tail_rate, rate_continuous, rate_full, rate_galerkin, rate_modified,
    rate_nonsymplectic, RateValue, DEFAULT_TOL,
};
use sls_core::scheme::{check_assumptions, AssumptionReport, Classification, SYMPLECTIC_TOL};
use sls_core::{CoreError, SpectralVector};

use config::{load_scheme, parse_grid, read_vector_file, Config};
use errors::{CliError, CliResult};
use output::{ensure_dir, fmt_f64, write_csv, ManifestBuilder};

/// Probability floor below which plain Monte Carlo tail estimates are
/// refused; deeper tails need importance sampling, which is out of scope.
const TAIL_FLOOR: f64 = 1e-4;

#[derive(Parser)]
#[command(
    name = "sls",
    version,
    about = "Stochastic linear Schrödinger equation: symplectic discretizations and large-deviations rate functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Overrides mc.seed from the config; without either, the seed is 0.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for CSV files and the run manifest.
    #[arg(long, global = true, default_value = "sls-out")]
    out: PathBuf,

    /// Stdout format for reports and summaries.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Worker threads for ensemble generation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Additionally write each table as a gnuplot-ready .dat file
    /// (space-separated columns, `#` header).
    #[arg(long, global = true)]
    gnuplot: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Checks the structural assumptions of a scheme over a stepsize grid.
    Validate {
        /// Catalog name (midpoint | exp-euler | backward-em) or @table-file.
        #[arg(long)]
        scheme: String,
        /// Stepsize grid a:b:n (n evenly spaced points, inclusive).
        #[arg(long, value_name = "A:B:N")]
        h: String,
        /// Symplecticity tolerance on |det A − 1|.
        #[arg(long, default_value_t = SYMPLECTIC_TOL)]
        tol: f64,
    },
    /// Evaluates one rate function at a vector read from a file.
    Rate {
        #[arg(long, value_enum)]
        kind: RateKind,
        /// Vector file: one `re im` pair per line.
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Runs a study and writes CSV plus a manifest.
    Study {
        #[arg(long, value_enum)]
        kind: StudyKind,
        #[arg(long)]
        config: PathBuf,
    },
    /// Simulates an ensemble and writes the terminal coefficients.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum RateKind {
    Continuous,
    Galerkin,
    Full,
    Modified,
    Nonsymplectic,
}

impl RateKind {
    fn as_str(self) -> &'static str {
        match self {
            RateKind::Continuous => "continuous",
            RateKind::Galerkin => "galerkin",
            RateKind::Full => "full",
            RateKind::Modified => "modified",
            RateKind::Nonsymplectic => "nonsymplectic",
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum StudyKind {
    TauConvergence,
    MConvergence,
    Lmgf,
    Tail,
    Fernique,
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // Ignore failure: the pool can only be set once per process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    std::process::exit(match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code
        }
    });
}

fn run(cli: Cli) -> CliResult<i32> {
    match &cli.command {
        Command::Validate { scheme, h, tol } => cmd_validate(&cli, scheme, h, *tol),
        Command::Rate { kind, x, config } => cmd_rate(&cli, *kind, x, config),
        Command::Study { kind, config } => cmd_study(&cli, *kind, config),
        Command::Simulate { config } => cmd_simulate(&cli, config),
    }
}

// ---------------------------------------------------------------- validate

fn report_json(report: &AssumptionReport) -> Value {
    json!({
        "scheme": report.scheme,
        "tol": report.tol,
        "classification": report.classification.as_str(),
        "steps": report.steps.iter().map(|s| json!({
            "h": s.h,
            "det": s.det,
            "tr": s.tr,
            "elliptic_margin": s.elliptic_margin,
            "symplectic_residual": s.symplectic_residual,
            "noise_form_margin": if s.noise_form_margin.is_nan() { Value::Null } else { json!(s.noise_form_margin) },
            "contractive_margin": s.contractive_margin,
            "consistency_matrix_residual": s.consistency_matrix_residual,
            "consistency_noise_residual": s.consistency_noise_residual,
            "noise_norm_sq": s.noise_norm_sq,
        })).collect::<Vec<_>>(),
    })
}

fn cmd_validate(cli: &Cli, scheme_name: &str, h: &str, tol: f64) -> CliResult<i32> {
    let scheme = load_scheme(scheme_name).map_err(|mut e| {
        if e.code == "unknown-scheme" {
            e.exit_code = 2;
        }
        e
    })?;
    let grid = parse_grid(h)?;
    let report = check_assumptions(&scheme, &grid, tol)?;
    let as_json = report_json(&report);

    match cli.format {
        Format::Json => println!("{as_json:#}"),
        Format::Csv => {
            println!(
                "scheme {} over {} stepsizes in [{}, {}]",
                report.scheme,
                grid.len(),
                grid.first().unwrap(),
                grid.last().unwrap()
            );
            println!(
                "{:>10} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}",
                "h", "det", "4det-tr2", "|det-1|", "noise-margin", "A5-matrix", "A5-noise"
            );
            for s in &report.steps {
                println!(
                    "{:>10.5} {:>12.6} {:>12.3e} {:>12.3e} {:>12.5} {:>12.3e} {:>12.3e}",
                    s.h,
                    s.det,
                    s.elliptic_margin,
                    s.symplectic_residual,
                    s.noise_form_margin,
                    s.consistency_matrix_residual,
                    s.consistency_noise_residual
                );
            }
            println!("classification: {}", report.classification.as_str());
        }
    }
    if cli.out != Path::new("sls-out") || cli.out.exists() {
        ensure_dir(&cli.out)?;
        std::fs::write(cli.out.join("validate.json"), format!("{as_json:#}\n"))?;
    }
    if report.is_usable() {
        Ok(0)
    } else {
        Err(CliError::new(
            "invalid-scheme",
            format!(
                "scheme `{}` is invalid on the given grid (ellipticity or determinant pattern fails)",
                report.scheme
            ),
        ))
    }
}

// -------------------------------------------------------------------- rate

fn not_symplectic(e: CoreError) -> CliError {
    match &e {
        CoreError::AssumptionViolated {
            assumption: "A2", ..
        } => CliError::new("not-symplectic", e.to_string()),
        _ => e.into(),
    }
}

fn cmd_rate(_cli: &Cli, kind: RateKind, x_path: &Path, config_path: &Path) -> CliResult<i32> {
    let cfg = Config::load(config_path)?;
    let x = read_vector_file(x_path)?;
    let spec = cfg.noise_spec()?;
    let tol = cfg.f64_opt("observables.tol")?.unwrap_or(DEFAULT_TOL);
    let mut params = BTreeMap::from([
        ("alpha".to_string(), json!(spec.alpha())),
        ("tol".to_string(), json!(tol)),
    ]);

    let value = match kind {
        RateKind::Continuous => rate_continuous(&spec, &x, tol),
        RateKind::Galerkin => {
            let m = cfg.usize("model.M")?;
            params.insert("M".into(), json!(m));
            rate_galerkin(&spec, m, &x, tol)
        }
        RateKind::Full | RateKind::Modified => {
            let m = cfg.usize("model.M")?;
            let tau = cfg.f64("time.tau")?;
            let scheme = cfg.scheme()?;
            params.insert("M".into(), json!(m));
            params.insert("tau".into(), json!(tau));
            params.insert("scheme".into(), json!(scheme.name()));
            let r = if kind == RateKind::Full {
                rate_full(&scheme, &spec, m, tau, &x, tol)
            } else {
                rate_modified(&scheme, &spec, m, tau, &x, tol)
            };
            r.map_err(not_symplectic)?
        }
        RateKind::Nonsymplectic => {
            let m = cfg.usize("model.M")?;
            let tau = cfg.f64("time.tau")?;
            let scheme = cfg.scheme()?;
            params.insert("M".into(), json!(m));
            params.insert("tau".into(), json!(tau));
            params.insert("scheme".into(), json!(scheme.name()));
            let grid: Vec<f64> = (1..=m).map(|k| (k * k) as f64 * tau).collect();
            let report = check_assumptions(&scheme, &grid, SYMPLECTIC_TOL)?;
            if report.classification != Classification::NonSymplectic {
                return Err(CliError::new(
                    "classification-mismatch",
                    format!(
                        "scheme `{}` classifies as {}, not non-symplectic",
                        scheme.name(),
                        report.classification.as_str()
                    ),
                ));
            }
            rate_nonsymplectic(&x, tol)
        }
    };

    let record = match value {
        RateValue::Finite(v) => json!({
            "kind": kind.as_str(),
            "params": params,
            "value": v,
        }),
        RateValue::Infinite => json!({
            "kind": kind.as_str(),
            "params": params,
            "value": "inf",
            "reason": "outside-range",
        }),
    };
    println!("{record:#}");
    Ok(0)
}

// ------------------------------------------------------------------- study

struct StudyContext {
    cfg: Config,
    seed: u64,
    out_dir: PathBuf,
}

fn study_context(cli: &Cli, config_path: &Path) -> CliResult<StudyContext> {
    let mut cfg = Config::load(config_path)?;
    let seed = match cli.seed {
        Some(s) => s,
        None => match cfg.get("mc.seed") {
            Some(_) => cfg.u64("mc.seed")?,
            None => 0,
        },
    };
    cfg.set("mc.seed", seed.to_string());
    ensure_dir(&cli.out)?;
    Ok(StudyContext {
        cfg,
        seed,
        out_dir: cli.out.clone(),
    })
}

fn finish_study(
    cli: &Cli,
    ctx: &StudyContext,
    kind: &str,
    header: &[&str],
    rows: &[Vec<String>],
    extra: BTreeMap<String, Value>,
) -> CliResult<i32> {
    let csv_path = ctx.out_dir.join(format!("{kind}.csv"));
    write_csv(&csv_path, header, rows)?;
    let mut builder = ManifestBuilder::new("study")
        .kind(kind)
        .seed(ctx.seed)
        .config(ctx.cfg.echo())
        .output(&csv_path);
    if cli.gnuplot {
        let dat_path = ctx.out_dir.join(format!("{kind}.dat"));
        output::write_gnuplot(&dat_path, header, rows)?;
        builder = builder.output(&dat_path);
    }
    for (k, v) in extra {
        builder = builder.extra(&k, v);
    }
    let manifest = builder.write(&ctx.out_dir.join("manifest.json"))?;
    match cli.format {
        Format::Json => println!("{manifest:#}"),
        Format::Csv => println!(
            "wrote {} ({} rows) and {}",
            csv_path.display(),
            rows.len(),
            ctx.out_dir.join("manifest.json").display()
        ),
    }
    Ok(0)
}

fn cmd_study(cli: &Cli, kind: StudyKind, config_path: &Path) -> CliResult<i32> {
    let ctx = study_context(cli, config_path)?;
    match kind {
        StudyKind::TauConvergence => study_tau(cli, ctx),
        StudyKind::MConvergence => study_m(cli, ctx),
        StudyKind::Lmgf => study_lmgf(cli, ctx),
        StudyKind::Tail => study_tail(cli, ctx),
        StudyKind::Fernique => study_fernique(cli, ctx),
    }
}

fn study_tau(cli: &Cli, ctx: StudyContext) -> CliResult<i32> {
    let spec = ctx.cfg.noise_spec()?;
    let scheme = ctx.cfg.scheme()?;
    let m = ctx.cfg.usize("model.M")?;
    let taus = ctx.cfg.f64_list("study.taus")?;
    let points = ctx.cfg.vector_list("observables.points")?;
    let tol = ctx.cfg.f64_opt("observables.tol")?.unwrap_or(DEFAULT_TOL);
    let study = tau_convergence_study(&scheme, &spec, m, &taus, &points, tol)
        .map_err(not_symplectic)?;
    let rows: Vec<Vec<String>> = study
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.tau),
                r.point_id.to_string(),
                fmt_f64(r.mod_rate),
                fmt_f64(r.galerkin_rate),
                fmt_f64(r.abs_err),
            ]
        })
        .collect();
    let extra = BTreeMap::from([(
        "fitted_order".to_string(),
        study.fitted_order.map_or(Value::Null, |o| json!(o)),
    )]);
    finish_study(
        cli,
        &ctx,
        "tau-convergence",
        &["tau", "point_id", "mod_rate", "galerkin_rate", "abs_err"],
        &rows,
        extra,
    )
}

fn study_m(cli: &Cli, ctx: StudyContext) -> CliResult<i32> {
    let spec = ctx.cfg.noise_spec()?;
    let x = ctx.cfg.vector("observables.x")?;
    let ms = ctx.cfg.usize_list("study.ms")?;
    let tol = ctx.cfg.f64_opt("observables.tol")?.unwrap_or(DEFAULT_TOL);
    let rows_data = m_convergence_study(&spec, &x, &ms, tol)?;
    let rows: Vec<Vec<String>> = rows_data
        .iter()
        .map(|r| vec![r.m.to_string(), fmt_f64(r.gap), fmt_f64(r.distance)])
        .collect();
    finish_study(
        cli,
        &ctx,
        "m-convergence",
        &["m", "gap", "distance"],
        &rows,
        BTreeMap::new(),
    )
}

fn study_lmgf(cli: &Cli, ctx: StudyContext) -> CliResult<i32> {
    let spec = ctx.cfg.noise_spec()?;
    let scheme = ctx.cfg.scheme()?;
    let m = ctx.cfg.usize("model.M")?;
    let tau = ctx.cfg.f64("time.tau")?;
    let ns = ctx.cfg.usize_list("study.ns")?;
    let samples = ctx.cfg.usize("mc.samples")?;
    let lambda = ctx.cfg.vector("observables.lambda")?;
    let u0 = ctx.cfg.u0(m)?;

    let config = EnsembleConfig {
        scheme: scheme.clone(),
        spec: spec.clone(),
        m,
        tau,
        n_steps: *ns.iter().max().unwrap_or(&0),
        samples,
        seed: ctx.seed,
        u0: u0.clone(),
    };
    let ensembles = simulate_checkpoints(&config, &ns)?;
    let closed = lmgf_full(&scheme, &spec, m, tau, &lambda).ok();

    let mut rows = Vec::with_capacity(ns.len());
    for (&n, draws) in ns.iter().zip(&ensembles) {
        let est = empirical_lmgf(draws, &lambda, n, tau)?;
        let prelimit = lmgf_from_moments(&scheme, &spec, m, tau, n, &u0, &lambda)?;
        rows.push(vec![
            n.to_string(),
            fmt_f64(est.estimate),
            fmt_f64(est.std_error),
            fmt_f64(est.ess.unwrap_or(f64::NAN)),
            if est.reliable() { "ok" } else { "unreliable" }.to_string(),
            fmt_f64(prelimit),
            closed.map_or(String::new(), fmt_f64),
        ]);
    }
    finish_study(
        cli,
        &ctx,
        "lmgf",
        &["n", "empirical", "se", "ess", "flag", "prelimit", "closed_form"],
        &rows,
        BTreeMap::new(),
    )
}

fn study_tail(cli: &Cli, ctx: StudyContext) -> CliResult<i32> {
    let spec = ctx.cfg.noise_spec()?;
    let m = ctx.cfg.usize("model.M")?;
    let ts = ctx.cfg.f64_list("study.ts")?;
    let r = ctx.cfg.f64("observables.r")?;
    let samples = ctx.cfg.usize("mc.samples")?;
    let u0 = ctx.cfg.u0(m)?;
    let j_bound = mass_tail_rate(&spec, r)?;

    let mut rows = Vec::with_capacity(ts.len());
    for (row_idx, &t) in ts.iter().enumerate() {
        let params = ExactLawParams::new(spec.clone(), u0.clone(), t, m)?;
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        rng.set_stream(row_idx as u64);
        let draws: Vec<SpectralVector> = (0..samples)
            .map(|_| sample_terminal(&params, &mut rng))
            .collect::<Result<_, _>>()?;
        let est = tail_probability(&draws, t, r)?;
        if est.estimate < TAIL_FLOOR {
            return Err(CliError::new(
                "tail-too-deep",
                format!(
                    "empirical tail probability {} at T = {t} is below the plain-MC floor {TAIL_FLOOR}; \
                     choose a smaller R or shorter horizon",
                    est.estimate
                ),
            ));
        }
        let markov = mass_expectation(&params) / (t * t * r * r);
        rows.push(vec![
            fmt_f64(t),
            fmt_f64(r),
            fmt_f64(est.estimate),
            fmt_f64(est.std_error),
            fmt_f64(markov),
            fmt_f64(j_bound),
        ]);
    }
    finish_study(
        cli,
        &ctx,
        "tail",
        &["t", "r", "p_hat", "se", "markov_bound", "j_bound_slope"],
        &rows,
        BTreeMap::new(),
    )
}

fn study_fernique(cli: &Cli, ctx: StudyContext) -> CliResult<i32> {
    let eigs = if ctx.cfg.get("study.eigs").is_some() {
        ctx.cfg.f64_list("study.eigs")?
    } else {
        ctx.cfg.noise_spec()?.etas().to_vec()
    };
    let eps_list = ctx.cfg.f64_list("study.eps")?;
    let samples = ctx.cfg.usize("mc.samples")?;
    let mut rows = Vec::with_capacity(eps_list.len());
    for (i, &eps) in eps_list.iter().enumerate() {
        let (mc, closed) =
            fernique_identity_check(&eigs, eps, samples, ctx.seed.wrapping_add(i as u64))?;
        rows.push(vec![
            fmt_f64(eps),
            fmt_f64(mc.estimate),
            fmt_f64(closed),
            fmt_f64(mc.std_error),
        ]);
    }
    finish_study(
        cli,
        &ctx,
        "fernique",
        &["eps", "mc", "closed_form", "se"],
        &rows,
        BTreeMap::new(),
    )
}

// ---------------------------------------------------------------- simulate

fn cmd_simulate(cli: &Cli, config_path: &Path) -> CliResult<i32> {
    let ctx = study_context(cli, config_path)?;
    let spec = ctx.cfg.noise_spec()?;
    let scheme = ctx.cfg.scheme()?;
    let m = ctx.cfg.usize("model.M")?;
    let tau = ctx.cfg.f64("time.tau")?;
    let n_steps = ctx.cfg.usize("time.N")?;
    let samples = ctx.cfg.usize("mc.samples")?;
    let u0 = ctx.cfg.u0(m)?;

    let config = EnsembleConfig {
        scheme,
        spec,
        m,
        tau,
        n_steps,
        samples,
        seed: ctx.seed,
        u0,
    };
    let draws = simulate_ensemble(&config)?;

    let mut header: Vec<String> = vec!["sample".to_string()];
    for k in 1..=m {
        header.push(format!("re_{k}"));
        header.push(format!("im_{k}"));
    }
    header.push("mass".to_string());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let rows: Vec<Vec<String>> = draws
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mut row = Vec::with_capacity(2 * m + 2);
            row.push(i.to_string());
            for c in d.coeffs() {
                row.push(fmt_f64(c.re));
                row.push(fmt_f64(c.im));
            }
            row.push(fmt_f64(d.mass()));
            row
        })
        .collect();

    let csv_path = ctx.out_dir.join("samples.csv");
    write_csv(&csv_path, &header_refs, &rows)?;
    let mut builder = ManifestBuilder::new("simulate")
        .seed(ctx.seed)
        .config(ctx.cfg.echo())
        .output(&csv_path);
    if cli.gnuplot {
        let dat_path = ctx.out_dir.join("samples.dat");
        output::write_gnuplot(&dat_path, &header_refs, &rows)?;
        builder = builder.output(&dat_path);
    }
    let manifest = builder.write(&ctx.out_dir.join("manifest.json"))?;
    match cli.format {
        Format::Json => println!("{manifest:#}"),
        Format::Csv => println!("wrote {} ({} samples)", csv_path.display(), rows.len()),
    }
    Ok(0)
}
