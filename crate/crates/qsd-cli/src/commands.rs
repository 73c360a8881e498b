//! Command implementations and the error-to-exit-code policy.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use qsd::analysis::experiments::{trace_csv, ExperimentId, ExperimentParams, SchemeSummary};
use qsd::analysis::{aggregate_trace, clt_report, replicate, replicate_with, run_experiment};
use qsd::output::{fmt17, to_json_string, write_json_file};
use qsd::schemes::rng::derive_seed;
use qsd::schemes::{run_scheme, Scheme, SchemeConfig};
use qsd::theory::clt::matrix_rows as rows;
use qsd::theory::{clt_covariance_with, exact_qsd, CltVariant};
use qsd::{AbsorbingChain, QsdError, Result};

use crate::config::{
    build_scheme_config, chain_from_arg, default_stride, resolve_chain, resolve_initial_states,
    ChainDescriptor, ConfigFile,
};
use crate::manifest::{ResolvedRun, RunManifest};

/// Writes a line to stdout, exiting quietly if the consumer closed the
/// pipe (all file outputs are written before anything is printed).
fn print_line(line: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if writeln!(out, "{line}").and_then(|_| out.flush()).is_err() {
        std::process::exit(0);
    }
}

/// 0 success, 2 input error, 3 model-assumption violation, 4 numerical
/// failure.
pub fn exit_code(err: &QsdError) -> i32 {
    match err {
        QsdError::Reducible
        | QsdError::NotHurwitz { .. }
        | QsdError::BelowThreshold { .. }
        | QsdError::NotStable { .. } => 3,
        QsdError::NoConvergence { .. } | QsdError::SingularSystem => 4,
        _ => 2,
    }
}

pub fn cmd_exact(chain_arg: &str, tol: f64) -> Result<()> {
    let (chain, _) = chain_from_arg(chain_arg)?;
    let sol = exact_qsd(&chain, tol)?;
    #[derive(Serialize)]
    struct Out<'a> {
        theta_star: &'a [f64],
        lambda: f64,
        residual: f64,
    }
    print_line(&to_json_string(&Out {
            theta_star: sol.theta_star.weights(),
            lambda: sol.lambda,
            residual: sol.residual,
        })?
    );
    Ok(())
}

fn parse_variant(name: &str, zeta: f64) -> Result<CltVariant> {
    match name.to_ascii_lowercase().as_str() {
        "algi" | "alg1" | "i" => Ok(CltVariant::AlgI),
        "algii" | "alg2" | "ii" => Ok(CltVariant::AlgII { zeta }),
        "algii_beta" | "alg2_beta" | "ii_beta" => Ok(CltVariant::AlgIIBeta { zeta }),
        other => Err(QsdError::Config(format!(
            "unknown variant {other:?}; expected algI, algII, or algII_beta"
        ))),
    }
}

pub fn cmd_theory(
    chain_arg: &str,
    gamma_star: f64,
    variant_name: &str,
    zeta: f64,
    force: bool,
) -> Result<()> {
    let (chain, _) = chain_from_arg(chain_arg)?;
    let variant = parse_variant(variant_name, zeta)?;
    let theory = clt_covariance_with(&chain, gamma_star, variant, !force)?;
    #[derive(Serialize)]
    struct Out {
        gamma_star: f64,
        variant: CltVariant,
        l: f64,
        gamma_star_min: f64,
        lambda: f64,
        theta_star: Vec<f64>,
        grad_h: Vec<Vec<f64>>,
        u_star: Vec<Vec<f64>>,
        v: Vec<Vec<f64>>,
        lyapunov_residual: f64,
        forced: bool,
    }
    print_line(&to_json_string(&Out {
            gamma_star,
            variant,
            l: theory.l,
            gamma_star_min: theory.gamma_star_min,
            lambda: theory.qsd.lambda,
            theta_star: theory.qsd.theta_star.weights().to_vec(),
            grad_h: rows(&theory.grad_h),
            u_star: rows(&theory.u_star),
            v: rows(&theory.v),
            lyapunov_residual: theory.lyapunov_residual,
            forced: force,
        })?
    );
    Ok(())
}

/// Fully resolved inputs shared by the file-writing commands.
struct Job {
    chain: AbsorbingChain,
    desc: ChainDescriptor,
    resolved: ResolvedRun,
    out_dir: PathBuf,
    config_path: String,
    stride_override: Option<u64>,
}

fn prepare_job(
    config_path: &str,
    out_override: Option<&str>,
    seed_override: Option<u64>,
    reps_override: Option<u32>,
    parallelism_override: Option<usize>,
    stride_override: Option<u64>,
    default_out: &str,
) -> Result<Job> {
    let cfg = ConfigFile::load(config_path)?;
    let (chain, desc) = resolve_chain(&cfg.chain)?;
    let master_seed = seed_override.unwrap_or(cfg.run.seed);
    let states = resolve_initial_states(&cfg, &chain, master_seed)?;
    let scheme_config = build_scheme_config(&cfg, states.clone(), stride_override)?;
    scheme_config.validate(&chain)?;
    let out_dir = PathBuf::from(
        out_override
            .map(str::to_string)
            .or(cfg.run.out.clone())
            .unwrap_or_else(|| default_out.to_string()),
    );
    Ok(Job {
        chain,
        desc,
        resolved: ResolvedRun {
            master_seed,
            replications: reps_override.or(cfg.run.reps).unwrap_or(1),
            parallelism: parallelism_override.or(cfg.run.parallelism).unwrap_or(0),
            scheme_config,
            initial_multiset: states,
        },
        out_dir,
        config_path: config_path.to_string(),
        stride_override: stride_override.or(cfg.run.stride),
    })
}

fn job_from_manifest(path: &str, out_override: Option<&str>) -> Result<(Job, String)> {
    let man = RunManifest::load(path)?;
    let chain = AbsorbingChain::validate(&man.chain.matrix)?;
    let out_dir = PathBuf::from(out_override.unwrap_or("qsd-rerun"));
    let stride = Some(man.resolved.scheme_config.trace_stride);
    Ok((
        Job {
            chain,
            desc: man.chain.clone(),
            resolved: man.resolved.clone(),
            out_dir,
            config_path: path.to_string(),
            stride_override: stride,
        },
        man.command.clone(),
    ))
}

pub fn cmd_run(
    config: &str,
    from_manifest: bool,
    out: Option<&str>,
    seed: Option<u64>,
    stride: Option<u64>,
) -> Result<()> {
    let started = Instant::now();
    let job = if from_manifest {
        let (job, command) = job_from_manifest(config, out)?;
        match command.as_str() {
            "run" => job,
            "compare" => return finish_compare(job, started),
            "clt" => return finish_clt(job, started),
            other => {
                return Err(QsdError::Config(format!(
                    "manifest was written by {other:?}; rerun it with that command"
                )))
            }
        }
    } else {
        prepare_job(config, out, seed, None, None, stride, "qsd-run")?
    };
    finish_run(job, started)
}

fn finish_run(job: Job, started: Instant) -> Result<()> {
    let mut cfg = job.resolved.scheme_config.clone();
    cfg.seed = derive_seed(job.resolved.master_seed, 0);
    let result = run_scheme(&job.chain, &cfg)?;

    std::fs::create_dir_all(&job.out_dir)?;
    let d = job.chain.dim();
    let mut csv = String::from("moves");
    for s in 1..=d {
        csv.push_str(&format!(",s{s}"));
    }
    csv.push('\n');
    for p in &result.trace {
        csv.push_str(&p.moves.to_string());
        for w in p.estimate.weights() {
            csv.push(',');
            csv.push_str(&fmt17(*w));
        }
        csv.push('\n');
    }
    let trace_path = job.out_dir.join("trace.csv");
    std::fs::write(&trace_path, csv)?;

    #[derive(Serialize)]
    struct Estimate<'a> {
        estimate: &'a [f64],
        moves_used: u64,
        steps_executed: u64,
        master_seed: u64,
        run_seed: u64,
    }
    let est_path = job.out_dir.join("estimate.json");
    write_json_file(
        &est_path,
        &Estimate {
            estimate: result.estimate.weights(),
            moves_used: result.moves_used,
            steps_executed: result.steps_executed,
            master_seed: job.resolved.master_seed,
            run_seed: cfg.seed,
        },
    )?;

    let mut man = RunManifest::new("run", &job.config_path, job.desc, job.resolved);
    man.outputs = vec![
        trace_path.to_string_lossy().into_owned(),
        est_path.to_string_lossy().into_owned(),
    ];
    man.duration_secs = started.elapsed().as_secs_f64();
    man.write(&job.out_dir)?;
    print_line(&to_json_string(&serde_json::json!({
            "estimate": result.estimate.weights(),
            "moves_used": result.moves_used,
            "out": job.out_dir.to_string_lossy(),
        }))?
    );
    Ok(())
}

pub fn cmd_compare(
    config: &str,
    out: Option<&str>,
    seed: Option<u64>,
    reps: Option<u32>,
    parallelism: Option<usize>,
    stride: Option<u64>,
) -> Result<()> {
    let started = Instant::now();
    let mut job = prepare_job(config, out, seed, reps, parallelism, stride, "qsd-compare")?;
    // The multiset must cover the pooled schemes regardless of which scheme
    // the config names.
    let pooled = job.resolved.scheme_config.growth.a_of(job.resolved.scheme_config.horizon_n) as usize;
    if job.resolved.initial_multiset.len() != pooled {
        return Err(QsdError::Config(format!(
            "compare needs {} initial states (one per particle), got {}",
            pooled,
            job.resolved.initial_multiset.len()
        )));
    }
    job.stride_override = stride;
    finish_compare(job, started)
}

fn finish_compare(job: Job, started: Instant) -> Result<()> {
    if !matches!(
        job.resolved.scheme_config.growth,
        qsd::schemes::GrowthSchedule::Power { .. }
    ) {
        return Err(QsdError::Config(
            "compare requires power growth: the branching scheme has no constant-population form"
                .into(),
        ));
    }
    let theta_star = exact_qsd(&job.chain, 1e-12)?.theta_star;
    let base = &job.resolved.scheme_config;
    let multiset = &job.resolved.initial_multiset;
    std::fs::create_dir_all(&job.out_dir)?;

    let mut summary: BTreeMap<String, SchemeSummary> = BTreeMap::new();
    let mut outputs = Vec::new();
    for scheme in Scheme::all() {
        let per_particle = matches!(scheme, Scheme::Single | Scheme::Branching);
        let template = SchemeConfig {
            scheme,
            horizon_n: base.horizon_n,
            growth: base.growth,
            steps: base.steps,
            initial_states: if per_particle {
                vec![multiset[0]]
            } else {
                multiset.clone()
            },
            seed: 0,
            trace_stride: job
                .stride_override
                .unwrap_or_else(|| default_stride(scheme, base.horizon_n, &base.growth)),
        };
        let reps = replicate_with(
            &job.chain,
            &template,
            job.resolved.replications,
            job.resolved.master_seed,
            job.resolved.parallelism,
            |rep, cfg| {
                if per_particle {
                    cfg.initial_states = vec![multiset[rep as usize % multiset.len()]];
                }
            },
        )?;
        let trace = aggregate_trace(&reps, &theta_star)?;
        let path = job.out_dir.join(format!("{}.csv", scheme.name()));
        std::fs::write(&path, trace_csv(&trace))?;
        outputs.push(path.to_string_lossy().into_owned());
        let last = trace.points.last().expect("nonempty trace");
        summary.insert(
            scheme.name().to_string(),
            SchemeSummary {
                final_mean_tv: last.mean_tv,
                final_median_tv: last.median_tv,
                moves_used: reps.results[0].moves_used,
                seed: job.resolved.master_seed,
                params: ExperimentParams {
                    horizon_n: base.horizon_n,
                    growth: base.growth,
                    gamma_star: base.steps.gamma_star,
                    replications: job.resolved.replications,
                    trace_stride: template.trace_stride,
                },
            },
        );
    }
    let summary_path = job.out_dir.join("summary.json");
    write_json_file(&summary_path, &summary)?;
    outputs.push(summary_path.to_string_lossy().into_owned());

    let mut man = RunManifest::new("compare", &job.config_path, job.desc, job.resolved);
    man.outputs = outputs;
    man.duration_secs = started.elapsed().as_secs_f64();
    man.write(&job.out_dir)?;
    print_line(&to_json_string(&summary)?);
    Ok(())
}

pub fn cmd_experiment(
    id: &str,
    reps: u32,
    seed: u64,
    parallelism: usize,
    out: &str,
) -> Result<()> {
    let started = Instant::now();
    let id = ExperimentId::parse(id)
        .ok_or_else(|| QsdError::Config(format!("unknown experiment {id:?}; use one or two")))?;
    let chain = AbsorbingChain::preset("paper-10state").expect("preset exists");
    let out_dir = PathBuf::from(out);
    let outcome = run_experiment(&chain, id, reps, seed, parallelism, Some(&out_dir))?;

    let n = chain.dim() + 1;
    let matrix: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| chain.p(i, j)).collect())
        .collect();
    let (horizon, growth) = qsd::analysis::experiments::experiment_geometry(id);
    let resolved = ResolvedRun {
        master_seed: seed,
        replications: reps,
        parallelism,
        scheme_config: SchemeConfig {
            scheme: Scheme::Interacting,
            horizon_n: horizon,
            growth,
            steps: qsd::schemes::StepSchedule::new(4.17)?,
            initial_states: outcome.initial_states.clone(),
            seed: 0,
            trace_stride: 1,
        },
        initial_multiset: outcome.initial_states.clone(),
    };
    let command = match id {
        ExperimentId::One => "experiment:one",
        ExperimentId::Two => "experiment:two",
    };
    let mut man = RunManifest::new(
        command,
        "(builtin)",
        ChainDescriptor {
            source: "preset:paper-10state".into(),
            matrix,
        },
        resolved,
    );
    man.outputs = Scheme::all()
        .iter()
        .map(|s| {
            out_dir
                .join(format!("{}.csv", s.name()))
                .to_string_lossy()
                .into_owned()
        })
        .chain(std::iter::once(
            out_dir.join("summary.json").to_string_lossy().into_owned(),
        ))
        .collect();
    man.duration_secs = started.elapsed().as_secs_f64();
    man.write(&out_dir)?;
    print_line(&to_json_string(&outcome.summary)?);
    Ok(())
}

pub fn cmd_clt(
    config: &str,
    out: Option<&str>,
    seed: Option<u64>,
    reps: Option<u32>,
    parallelism: Option<usize>,
) -> Result<()> {
    let started = Instant::now();
    let job = prepare_job(config, out, seed, reps, parallelism, None, "qsd-clt")?;
    finish_clt(job, started)
}

fn finish_clt(job: Job, started: Instant) -> Result<()> {
    let base = &job.resolved.scheme_config;
    let variant = match (base.scheme, base.growth) {
        (Scheme::Interacting, _) => CltVariant::AlgI,
        (Scheme::Branching, qsd::schemes::GrowthSchedule::Power { zeta }) => {
            CltVariant::AlgII { zeta }
        }
        (s, _) => {
            return Err(QsdError::Config(format!(
                "clt validation runs on interacting or branching, not {}",
                s.name()
            )))
        }
    };
    let reps = replicate(
        &job.chain,
        base,
        job.resolved.replications,
        job.resolved.master_seed,
        job.resolved.parallelism,
    )?;
    let report = clt_report(&job.chain, &reps, variant)?;

    std::fs::create_dir_all(&job.out_dir)?;
    let report_path = job.out_dir.join("clt_report.json");
    write_json_file(&report_path, &report)?;
    let mut man = RunManifest::new("clt", &job.config_path, job.desc, job.resolved);
    man.outputs = vec![report_path.to_string_lossy().into_owned()];
    man.duration_secs = started.elapsed().as_secs_f64();
    man.write(&job.out_dir)?;
    print_line(&to_json_string(&report)?);
    Ok(())
}
