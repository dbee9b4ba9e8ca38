//! The four subcommands, each producing a [`RunReport`].

use std::time::Instant;

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use solspace::ddw::write_section_binary;
use solspace::engine::{bracket_pairs, evolve, BracketRow, TimeWindow};
use solspace::pipeline::{build_pipeline, Pipeline};
use solspace::presymp::Classification;
use solspace::slicing::SliceState;
use solspace::verify::{helmholtz_residual, run_invariant_suite, VerifyOptions};

use crate::config::RunConfig;
use crate::report::{
    ChainSummary, ProjectorSummary, RunReport, TrajectorySummary,
};
use crate::CliError;

pub const VERSION: &str = match option_env!("SOLSPACE_GIT_DESCRIBE") {
    Some(v) => v,
    None => env!("CARGO_PKG_VERSION"),
};

fn window(cfg: &RunConfig) -> TimeWindow<f64> {
    let t = cfg.window_halfwidth();
    TimeWindow::new(-t, t)
}

fn build(cfg: &RunConfig) -> Result<Pipeline<f64>, CliError> {
    build_pipeline::<f64>(&cfg.model, window(cfg), cfg.tolerances.rank_rtol, 64)
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn chain_summary(p: &Pipeline<f64>) -> Result<ChainSummary, CliError> {
    Ok(ChainSummary {
        dims: p.chain.dims(),
        classification: match p.chain.classification {
            Classification::Symplectic => "Symplectic".into(),
            Classification::Gauge => "Gauge".into(),
        },
        final_dim: p.chain.final_dim(),
        kernel_dim: p.chain.kernel_dim(),
        iterations: p.chain.iterations,
        omega_condition: p
            .chain
            .omega_condition()
            .map_err(|e| CliError::Internal(e.to_string()))?,
    })
}

fn projector_summary(p: &Pipeline<f64>) -> Option<ProjectorSummary> {
    p.projector.as_ref().map(|proj| ProjectorSummary {
        rank: proj.rank,
        idempotency_residual: proj.idempotency_residual,
        range_residual: proj.range_residual,
    })
}

/// Build the slice system, run the constraint algorithm, report the chain.
pub fn cmd_analyze(cfg: &RunConfig) -> Result<RunReport, CliError> {
    let mut report = RunReport::new("analyze", VERSION, cfg.hash(), cfg.seed);
    let t0 = Instant::now();
    let p = build(cfg)?;
    report.timings.build_s = t0.elapsed().as_secs_f64();
    report.chain = Some(chain_summary(&p)?);
    report.projector = projector_summary(&p);
    report.helmholtz_residual = helmholtz_residual::<f64>(&cfg.model, cfg.seed)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    report.timings.command_s = t0.elapsed().as_secs_f64();
    Ok(report)
}

/// All ordered pairs of the configured observables through
/// `bracket_spacetime`; per-pair failures become error rows.
pub fn cmd_bracket(cfg: &RunConfig) -> Result<RunReport, CliError> {
    let mut report = RunReport::new("bracket", VERSION, cfg.hash(), cfg.seed);
    let t0 = Instant::now();
    let p = build(cfg)?;
    report.timings.build_s = t0.elapsed().as_secs_f64();
    let observables = cfg.build_observables()?;
    if observables.len() < 2 {
        return Err(CliError::Validation(
            "bracket needs at least two observables".into(),
        ));
    }
    let mut pairs = Vec::new();
    for f in &observables {
        for g in &observables {
            pairs.push((f.clone(), g.clone()));
        }
    }
    let values = bracket_pairs(&pairs, &p.flow, &p.model, cfg.sigma_time(), &p.engine);
    let rows: Vec<BracketRow> = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let (f, g) = &pairs[i];
            match v {
                Ok(x) => BracketRow {
                    pair_id: i,
                    f_label: f.label.clone(),
                    g_label: g.label.clone(),
                    value: Some(x),
                    error: None,
                },
                Err(e) => BracketRow {
                    pair_id: i,
                    f_label: f.label.clone(),
                    g_label: g.label.clone(),
                    value: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    report.chain = Some(chain_summary(&p)?);
    report.projector = projector_summary(&p);
    report.brackets = Some(rows);
    report.timings.command_s = t0.elapsed().as_secs_f64();
    Ok(report)
}

/// Evolve a seeded admissible Cauchy datum and dump the trajectory section.
pub fn cmd_evolve(
    cfg: &RunConfig,
    out_dir: &std::path::Path,
    write_json: bool,
) -> Result<RunReport, CliError> {
    let mut report = RunReport::new("evolve", VERSION, cfg.hash(), cfg.seed);
    let t0 = Instant::now();
    let p = build(cfg)?;
    report.timings.build_s = t0.elapsed().as_secs_f64();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w0 = Array1::from_shape_fn(p.chain.final_dim(), |_| rng.gen_range(-1.0..1.0));
    if let Some(proj) = &p.projector {
        let v = proj.apply(&w0);
        w0 = &w0 - &v;
    }
    let n_steps = cfg.time.n_steps;
    let dt = cfg.time.dt;
    let h0 = p.chain.hamiltonian_final.value(&w0);
    let mut drift = 0.0f64;
    let mut states = Vec::with_capacity(n_steps + 1);
    for i in 0..=n_steps {
        let w = evolve(&p.flow, &w0, i as f64 * dt)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        drift = drift.max((p.chain.hamiltonian_final.value(&w) - h0).abs());
        states.push(SliceState {
            data: p.chain.final_subspace().embed(&w),
        });
    }
    let spatial = p.model.spatial.clone();
    let lattice = solspace::ddw::SpacetimeLattice::new(n_steps + 1, dt, spatial)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let section = p
        .model
        .curve_to_section(&states, &lattice)
        .map_err(|e| CliError::Internal(e.to_string()))?;

    std::fs::create_dir_all(out_dir)?;
    let bin_path = out_dir.join("trajectory.ssec");
    let file = std::fs::File::create(&bin_path)?;
    write_section_binary(&section, std::io::BufWriter::new(file))
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let json_path = if write_json {
        let path = out_dir.join("trajectory.json");
        std::fs::write(&path, serde_json::to_string(&section)?)?;
        Some(path.display().to_string())
    } else {
        None
    };

    report.chain = Some(chain_summary(&p)?);
    report.trajectory = Some(TrajectorySummary {
        n_steps,
        dt,
        energy_initial: h0,
        energy_max_drift: drift,
        section_json: json_path,
        section_binary: Some(bin_path.display().to_string()),
    });
    report.timings.command_s = t0.elapsed().as_secs_f64();
    Ok(report)
}

/// Run the deterministic invariant suite; all results land in the report.
pub fn cmd_verify(cfg: &RunConfig) -> Result<RunReport, CliError> {
    let mut report = RunReport::new("verify", VERSION, cfg.hash(), cfg.seed);
    let t0 = Instant::now();
    let opts = VerifyOptions {
        seed: cfg.seed,
        rank_rtol: cfg.tolerances.rank_rtol,
        bracket_tol: cfg.tolerances.bracket_tol,
        inject: cfg.fault_injection(),
    };
    let invariants = run_invariant_suite::<f64>(&cfg.model, &opts)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    report.helmholtz_residual = helmholtz_residual::<f64>(&cfg.model, cfg.seed)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    report.invariants = Some(invariants);
    report.timings.command_s = t0.elapsed().as_secs_f64();
    Ok(report)
}
