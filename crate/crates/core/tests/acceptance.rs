//! Acceptance suite: the headline results of the pipeline at pinned
//! tolerances, one test per criterion, each printing a PASS/FAIL line.
//!
//! Sign bookkeeping: the engine fixes the flat map by Ω(X_f, ·) = df, the
//! convention pinned by the free-particle results (criterion 1). Relative to
//! a naive reading of the mixed momentum/field mode-sum formula this flips
//! one global sign, recorded here as `GLOBAL_SIGN_VS_PRINTED_NAIVE` and
//! asserted — never fitted — across every pair: the slot-swapped bracket
//! must match the same oracle with the opposite sign.

mod common;

use std::time::Instant;

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use solspace::ddw::{ddw_residual, DiscretizedSection, FieldTheorySpec, SpacetimeLattice};
use solspace::engine::{
    bracket_spacetime, evolve, evolve_any, pullback_observable, FieldComponent, Observable,
    ObservableKind, TimeWindow,
};
use solspace::lattice::SpatialLattice;
use solspace::pipeline::{build_pipeline, ModelConfig, Pipeline};
use solspace::presymp::Classification;

/// Global sign of mixed {P⁰, φ}-type brackets relative to the naive printed
/// mode-sum form; fixed once by the free-particle convention.
const GLOBAL_SIGN_VS_PRINTED_NAIVE: f64 = -1.0;

fn window() -> TimeWindow<f64> {
    TimeWindow::new(-16.0, 16.0)
}

fn build(cfg: &ModelConfig) -> Pipeline<f64> {
    build_pipeline::<f64>(cfg, window(), 1e-10, 64).expect("pipeline build")
}

#[test]
fn criterion_1_free_particle_bracket() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for &(m, t1, t2) in &[(1.0, 2.0, 5.0), (2.0, 0.0, 1.0), (0.5, -1.0, 3.0)] {
        let p = build(&ModelConfig::FreeParticle { mass: m });
        let f = Observable::field_point(FieldComponent::Field(0), vec![], t1, "q(t1)");
        let g = Observable::field_point(FieldComponent::Field(0), vec![], t2, "q(t2)");
        let expected = (t1 - t2) / m;
        for sigma in [0.0, 0.5, -2.0, 4.0] {
            let v = bracket_spacetime(&f, &g, &p.flow, &p.model, sigma, &p.engine).unwrap();
            worst = worst.max((v - expected).abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst < 1e-12 && elapsed < 1.0;
    common::report(
        1,
        pass,
        &format!("free-particle {{q(t2),q(t1)}} = (t1−t2)/m: max|err| = {worst:.3e}, {elapsed:.2}s"),
    );
    assert!(pass, "max err {worst:e}, elapsed {elapsed}s");
}

#[test]
fn criterion_2_vector_boson_chain() {
    let start = Instant::now();
    let p = build(&ModelConfig::VectorBoson {
        mass: 1.0,
        r: 1,
        shape: vec![4, 4, 4],
        h: 1.0,
    });
    let n = 64;
    let dims = p.chain.dims();
    let one_step = p.chain.iterations == 1 && dims == vec![5 * n, 2 * n];
    let eliminated = dims[0] - dims[1] == 3 * n;
    let sv = {
        use ndarray_linalg::{JobSvd, SVDDC};
        let (_, s, _) = p.chain.omega_final.svddc(JobSvd::None).unwrap();
        s
    };
    let cond_ok = sv[sv.len() - 1] / sv[0] > 1e-3;
    let symplectic = p.chain.classification == Classification::Symplectic;
    let elapsed = start.elapsed().as_secs_f64();
    let pass = one_step && eliminated && cond_ok && symplectic && elapsed < 10.0;
    common::report(
        2,
        pass,
        &format!(
            "vector-boson 4³ chain: dims {dims:?}, σmin/σmax = {:.3e}, {elapsed:.2}s",
            sv[sv.len() - 1] / sv[0]
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_vector_boson_bracket_vs_mode_sum() {
    let start = Instant::now();
    let shape = vec![8usize, 8, 8];
    let (h, m) = (1.0, 1.0);
    let p = build(&ModelConfig::VectorBoson {
        mass: m,
        r: 1,
        shape: shape.clone(),
        h,
    });
    let mut rng = ChaCha8Rng::seed_from_u64(314159);
    let mut worst = 0.0f64;
    let mut worst_swapped = 0.0f64;
    for _ in 0..20 {
        let x1: Vec<usize> = (0..3).map(|j| rng.gen_range(0..shape[j])).collect();
        let x2: Vec<usize> = (0..3).map(|j| rng.gen_range(0..shape[j])).collect();
        let t1: f64 = rng.gen_range(-4.0..4.0);
        let dt_max = 5.0 - (0.0f64).max(t1.abs() - 4.0);
        let t2 = (t1 + rng.gen_range(-dt_max..dt_max)).clamp(-8.0, 8.0);
        let f = Observable::field_point(FieldComponent::Field(0), x1.clone(), t1, "phi");
        let g = Observable::field_point(FieldComponent::MomentumTime(0), x2.clone(), t2, "p0");
        let v = bracket_spacetime(&f, &g, &p.flow, &p.model, 0.0, &p.engine).unwrap();
        let oracle = common::vb_mode_sum(&shape, h, m, &x1, &x2, t1 - t2);
        worst = worst.max((v - GLOBAL_SIGN_VS_PRINTED_NAIVE * oracle).abs());
        // Slot-swapped bracket carries the printed sign exactly.
        let v_swap = bracket_spacetime(&g, &f, &p.flow, &p.model, 0.0, &p.engine).unwrap();
        worst_swapped = worst_swapped.max((v_swap - oracle).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst < 1e-8 && worst_swapped < 1e-8 && elapsed < 60.0;
    common::report(
        3,
        pass,
        &format!(
            "vector-boson 8³ {{P⁰(t2,x2), φ(t1,x1)}} vs mode sum: max|err| = {worst:.3e} \
             (global sign vs printed form: {GLOBAL_SIGN_VS_PRINTED_NAIVE:+.0}), \
             swapped-slot |err| = {worst_swapped:.3e}, {elapsed:.1}s"
        ),
    );
    assert!(pass, "err {worst:e} swapped {worst_swapped:e} elapsed {elapsed}");
}

#[test]
fn criterion_4_electrodynamics() {
    let start = Instant::now();
    let shape = vec![4usize, 4, 4];
    let h = 1.0;
    let p = build(&ModelConfig::Electrodynamics {
        shape: shape.clone(),
        h,
    });
    let n = 64usize;

    // Gauss law and β-elimination from the chain.
    let dims = p.chain.dims();
    let chain_ok = dims == vec![9 * n, 5 * n + 1] && p.chain.classification == Classification::Gauge;
    let div = p.model.spatial.div_matrix();
    let mut gauss_resid = 0.0f64;
    for col in p.chain.final_subspace().basis().columns() {
        let mom = col
            .slice(ndarray::s![p.model.layout.mom.clone()])
            .to_owned();
        gauss_resid = gauss_resid.max(
            div.dot(&mom)
                .iter()
                .fold(0.0f64, |mx, &x| mx.max(x.abs())),
        );
    }
    let kernel_ok = p.chain.kernel_dim() == n - 1;
    let proj = p.projector.as_ref().unwrap();
    let idem_ok = proj.idempotency_residual < 1e-12;

    // Transverse A-brackets against the mode-sum oracle.
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    let mut worst_bracket = 0.0f64;
    for _ in 0..8 {
        let x1: Vec<usize> = (0..3).map(|j| rng.gen_range(0..shape[j])).collect();
        let x2: Vec<usize> = (0..3).map(|j| rng.gen_range(0..shape[j])).collect();
        let c1 = rng.gen_range(1..=3usize);
        let c2 = rng.gen_range(1..=3usize);
        let t1: f64 = rng.gen_range(-3.0..3.0);
        let t2: f64 = rng.gen_range(-3.0..3.0);
        let f = Observable::transverse_field_point(FieldComponent::Field(c1), x1.clone(), t1, "aT");
        let g = Observable::transverse_field_point(FieldComponent::Field(c2), x2.clone(), t2, "aT");
        let v = bracket_spacetime(&f, &g, &p.flow, &p.model, 0.0, &p.engine).unwrap();
        let oracle =
            common::ed_transverse_mode_sum(&shape, h, c1 - 1, &x1, c2 - 1, &x2, t1 - t2);
        worst_bracket = worst_bracket.max((v - oracle).abs());
    }

    // Pure-gradient shifts of the Cauchy datum are invisible to transverse
    // observables (and leave the state-independent brackets untouched).
    let datum = {
        let w = Array1::from_shape_fn(p.chain.final_dim(), |i| ((i % 17) as f64 - 8.0) * 0.07);
        let v = proj.apply(&w);
        &w - &v
    };
    let gauge_dir = p.chain.kernel_final.basis().column(0).to_owned();
    let shifted = &datum + &(gauge_dir * 0.61);
    let f_obs =
        Observable::transverse_field_point(FieldComponent::Field(1), vec![1, 2, 0], 0.9, "aT");
    let f_sig = pullback_observable(&f_obs, &p.flow, &p.model, 0.0).unwrap();
    let coeffs = match &f_sig.kind {
        ObservableKind::CauchyLinear { coefficients } => coefficients.clone(),
        _ => unreachable!(),
    };
    let mut worst_gauge = 0.0f64;
    for step in 0..6 {
        let t = step as f64 * 0.5;
        let a = evolve_any(&p.flow, &datum, t).unwrap();
        let b = evolve_any(&p.flow, &shifted, t).unwrap();
        worst_gauge = worst_gauge.max((coeffs.dot(&a) - coeffs.dot(&b)).abs());
    }

    let elapsed = start.elapsed().as_secs_f64();
    let pass = chain_ok
        && gauss_resid < 1e-10
        && kernel_ok
        && idem_ok
        && worst_bracket < 1e-8
        && worst_gauge < 1e-10
        && elapsed < 60.0;
    common::report(
        4,
        pass,
        &format!(
            "electrodynamics 4³: dims {dims:?}, ker Ω∞ = {}, Gauss resid {gauss_resid:.2e}, \
             P idem {:.2e}, transverse-bracket |err| {worst_bracket:.3e}, gauge shift {worst_gauge:.2e}, {elapsed:.1}s",
            p.chain.kernel_dim(),
            proj.idempotency_residual
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_5_slice_independence() {
    let vb = build(&ModelConfig::VectorBoson {
        mass: 1.0,
        r: 1,
        shape: vec![4, 4, 4],
        h: 1.0,
    });
    let ed = build(&ModelConfig::Electrodynamics {
        shape: vec![4, 4, 4],
        h: 1.0,
    });
    let mut worst = 0.0f64;
    {
        let f = Observable::field_point(FieldComponent::Field(0), vec![0, 1, 2], 0.8, "phi");
        let g = Observable::field_point(FieldComponent::MomentumTime(0), vec![3, 0, 1], 2.3, "p0");
        let mut vals = Vec::new();
        for j in 0..10 {
            let sigma = j as f64 * 0.4;
            vals.push(
                bracket_spacetime(&f, &g, &vb.flow, &vb.model, sigma, &vb.engine).unwrap(),
            );
        }
        for a in &vals {
            for b in &vals {
                worst = worst.max((a - b).abs());
            }
        }
    }
    {
        let f =
            Observable::transverse_field_point(FieldComponent::Field(2), vec![0, 1, 2], 0.8, "aT");
        let g =
            Observable::transverse_field_point(FieldComponent::Field(1), vec![3, 0, 1], 2.3, "aT");
        let mut vals = Vec::new();
        for j in 0..10 {
            let sigma = j as f64 * 0.4;
            vals.push(
                bracket_spacetime(&f, &g, &ed.flow, &ed.model, sigma, &ed.engine).unwrap(),
            );
        }
        for a in &vals {
            for b in &vals {
                worst = worst.max((a - b).abs());
            }
        }
    }
    let pass = worst < 1e-10;
    common::report(
        5,
        pass,
        &format!("slice independence over 10 σ shifts (both field models): max dev = {worst:.3e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_6_isotropy_and_energy_conservation() {
    let mut worst_pairing = 0.0f64;
    let mut worst_energy = 0.0f64;
    for cfg in [
        ModelConfig::FreeParticle { mass: 1.5 },
        ModelConfig::VectorBoson {
            mass: 1.0,
            r: 1,
            shape: vec![4, 4, 4],
            h: 1.0,
        },
        ModelConfig::Electrodynamics {
            shape: vec![4, 4, 4],
            h: 1.0,
        },
    ] {
        let p = build(&cfg);
        let k = p.chain.final_dim();
        let mk = |seed: u64| {
            let w = Array1::from_shape_fn(k, |i| {
                (((i as u64).wrapping_mul(2654435761).wrapping_add(seed) % 1000) as f64 / 500.0)
                    - 1.0
            });
            match &p.projector {
                None => w,
                Some(proj) => {
                    let v = proj.apply(&w);
                    &w - &v
                }
            }
        };
        let j1 = mk(11);
        let j2 = mk(23);
        let z0 = mk(37);
        let pairing0 = j1.dot(&p.chain.omega_final.dot(&j2));
        let h0 = p.chain.hamiltonian_final.value(&z0);
        for step in 1..=10 {
            let t = step as f64 * 0.37;
            let j1t = evolve(&p.flow, &j1, t).unwrap();
            let j2t = evolve(&p.flow, &j2, t).unwrap();
            worst_pairing =
                worst_pairing.max((j1t.dot(&p.chain.omega_final.dot(&j2t)) - pairing0).abs());
            let zt = evolve(&p.flow, &z0, t).unwrap();
            worst_energy = worst_energy.max((p.chain.hamiltonian_final.value(&zt) - h0).abs());
        }
    }
    let pass = worst_pairing < 1e-10 && worst_energy < 1e-10;
    common::report(
        6,
        pass,
        &format!(
            "isotropy Ω^Σ(J1(t),J2(t)) dev = {worst_pairing:.3e}; H∞ drift = {worst_energy:.3e}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_ddw_residuals() {
    // Free particle: closed-form solutions, interior residuals at machine
    // precision.
    let spec = FieldTheorySpec::<f64>::free_particle(0.7).unwrap();
    let lat = SpacetimeLattice::new(41, 0.05, SpatialLattice::point()).unwrap();
    let sec = solspace::ddw::free_particle_solution(&spec, &lat, 0.4, -1.1);
    let fp_resid = ddw_residual(&spec, &lat, &sec).unwrap().max_norm();

    // Vector boson: single lattice mode, Cauchy data evolved spectrally,
    // section assembled with the mode's analytic spatial momenta; interior
    // residual norms must drop at order ≥ 2 under (Δt, h) → (Δt/2, h/2).
    // Same physical wavevector k = 2π/(N h) on every level (N h fixed).
    let res = [
        vb_mode_residual(16, 0.5, 0.1, 1),
        vb_mode_residual(32, 0.25, 0.05, 1),
        vb_mode_residual(64, 0.125, 0.025, 1),
    ];
    let order = (res[0] / res[1]).log2();
    let order_fine = (res[1] / res[2]).log2();

    // Second-order convergence: the measured two-level estimates sit at the
    // asymptotic order 2 up to the next-order correction and approach it
    // from the finer pair.
    let pass = fp_resid < 1e-12 && order >= 1.95 && order_fine >= 1.97 && order_fine >= order;
    common::report(
        7,
        pass,
        &format!(
            "DDW residuals: free-particle interior = {fp_resid:.3e}; vector-boson refinement \
             orders = {order:.3}, {order_fine:.3} (residuals {:.3e} → {:.3e} → {:.3e})",
            res[0], res[1], res[2]
        ),
    );
    assert!(pass, "fp {fp_resid:e}, orders {order} {order_fine}");
}

/// Interior residual max-norm of the analytic single-mode vector-boson
/// section on an N-site circle, spot-checked against the engine evolution.
fn vb_mode_residual(n_sites: usize, h: f64, dt: f64, mode: usize) -> f64 {
    let mass = 1.0;
    let shape = vec![n_sites];
    let p = build(&ModelConfig::VectorBoson {
        mass,
        r: 1,
        shape: shape.clone(),
        h,
    });
    let spec = FieldTheorySpec::<f64>::vector_boson(mass, 1, 1).unwrap();
    let spatial = SpatialLattice::cubic(shape.clone(), h).unwrap();
    let n_t = (2.0_f64 / dt).round() as usize + 1;
    let lat = SpacetimeLattice::new(n_t, dt, spatial).unwrap();

    let omega = common::dispersion(&shape, h, mass, &[mode]);
    let k = 2.0 * std::f64::consts::PI * mode as f64 / (n_sites as f64 * h);
    let xs = |s: usize| s as f64 * h;

    // Cauchy datum (φ, p) = (cos(kx), 0); spot-check the spectral flow
    // against the closed form before assembling.
    let phi0 = Array1::from_shape_fn(n_sites, |s| (k * xs(s)).cos());
    let p0 = Array1::zeros(n_sites);
    let state = p.model.embed_natural(&phi0, &p0).unwrap();
    let w0 = p.chain.final_subspace().coords(&state.data);
    let t_probe = 0.7;
    let wt = evolve(&p.flow, &w0, t_probe).unwrap();
    let zt = p.chain.final_subspace().embed(&wt);
    for s in 0..n_sites {
        let expect_phi = (omega * t_probe).cos() * (k * xs(s)).cos();
        let expect_p = -omega * (omega * t_probe).sin() * (k * xs(s)).cos();
        assert!(
            (zt[s] - expect_phi).abs() < 1e-12 && (zt[n_sites + s] - expect_p).abs() < 1e-12,
            "slice evolution disagrees with the closed-form mode"
        );
    }

    // Analytic lattice-mode section: φ(t,x) = cos(ωt)cos(kx),
    // P⁰ = ∂ₜφ, Pʲ = −∂ⱼφ (exact trigonometric derivatives).
    let mut sec = DiscretizedSection::zeros(&spec, &lat);
    for t in 0..n_t {
        let time = t as f64 * dt;
        for s in 0..n_sites {
            let cx = (k * xs(s)).cos();
            let sx = (k * xs(s)).sin();
            sec.phi[[t, s, 0]] = (omega * time).cos() * cx;
            sec.momenta[[t, s, 0]] = -omega * (omega * time).sin() * cx;
            sec.momenta[[t, s, 1]] = (omega * time).cos() * k * sx;
        }
    }
    ddw_residual(&spec, &lat, &sec).unwrap().max_norm()
}
