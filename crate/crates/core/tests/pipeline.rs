//! Cross-module integration checks that tie the slice systems, flows and
//! brackets together on small lattices.

mod common;

use ndarray::Array1;

use solspace::ddw::{ddw_residual, FieldTheorySpec, SpacetimeLattice};
use solspace::engine::{
    bracket_spacetime, build_flow_leapfrog, evolve, evolve_any, pullback_observable,
    BracketEngine, FieldComponent, Observable, ObservableKind, TimeWindow,
};
use solspace::error::Error;
use solspace::lattice::SpatialLattice;
use solspace::pipeline::{build_pipeline, ModelConfig, Pipeline};
use solspace::slicing::SliceState;

fn window() -> TimeWindow<f64> {
    TimeWindow::new(-16.0, 16.0)
}

fn build(cfg: &ModelConfig) -> Pipeline<f64> {
    build_pipeline::<f64>(cfg, window(), 1e-10, 64).unwrap()
}

#[test]
fn ed_constant_transverse_mode_drifts() {
    // k = 0 transverse mode: a(t) = a(0) + t·p(0); oracle = leapfrog at
    // small dt agrees to O(dt²).
    let p = build(&ModelConfig::Electrodynamics {
        shape: vec![2, 2, 2],
        h: 1.0,
    });
    let n = p.model.n_sites();
    let mut a0 = Array1::zeros(3 * n);
    let mut p0 = Array1::zeros(3 * n);
    for s in 0..n {
        a0[s] = 0.3; // constant a_1
        p0[2 * n + s] = -0.8; // constant p^3
    }
    let state = p.model.embed_natural(&a0, &p0).unwrap();
    let w0 = p.chain.final_subspace().coords(&state.data);
    let t = 1.7;
    let wt = evolve(&p.flow, &w0, t).unwrap();
    let zt = p.chain.final_subspace().embed(&wt);
    for s in 0..n {
        let a1 = zt[p.model.layout.config.start + s];
        let a3 = zt[p.model.layout.config.start + 2 * n + s];
        assert!((a1 - 0.3).abs() < 1e-12, "a1 {a1}");
        assert!((a3 - (-0.8 * t)).abs() < 1e-12, "a3 {a3}");
    }
    // leapfrog oracle
    let lf = build_flow_leapfrog(&p.model, &p.chain, p.projector.as_ref(), window(), 1e-3)
        .unwrap();
    let wt_lf = evolve(&lf, &w0, t).unwrap();
    let dev = (&wt - &wt_lf).iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    assert!(dev < 1e-6, "leapfrog deviation {dev}");
}

#[test]
fn ed_vertical_state_is_rejected_by_checked_evolution() {
    let p = build(&ModelConfig::Electrodynamics {
        shape: vec![2, 2, 2],
        h: 1.0,
    });
    // A pure-gauge datum sits entirely in ker Ω_∞, i.e. vertically.
    let vertical = p.chain.kernel_final.basis().column(0).to_owned();
    assert!(matches!(
        evolve(&p.flow, &vertical, 1.0),
        Err(Error::NotHorizontal { .. })
    ));
    // The unchecked variant carries it along unchanged.
    let moved = evolve_any(&p.flow, &vertical, 1.0).unwrap();
    let dev = (&moved - &vertical)
        .iter()
        .fold(0.0f64, |m, &x| m.max(x.abs()));
    assert!(dev < 1e-12, "vertical part moved by {dev}");
}

#[test]
fn ed_longitudinal_observable_is_gauge_variant() {
    let p = build(&ModelConfig::Electrodynamics {
        shape: vec![2, 2, 2],
        h: 1.0,
    });
    // Raw (unprojected) a-evaluation overlaps the gradient kernel.
    let f = Observable::field_point(FieldComponent::Field(1), vec![0, 0, 0], 0.5, "a1raw");
    let g = Observable::field_point(FieldComponent::Field(2), vec![1, 0, 0], 1.0, "a2raw");
    let err = bracket_spacetime(&f, &g, &p.flow, &p.model, 0.0, &p.engine);
    assert!(matches!(err, Err(Error::GaugeVariantObservable { .. })));
}

#[test]
fn vb_pullback_coefficients_match_mode_synthesis() {
    // d = 1 lattice: the pulled-back φ(t₁,x₁) functional must reproduce the
    // independent mode synthesis Σ_k cos(ω_k Δt)·modes against random data.
    let shape = vec![5usize];
    let (h, m) = (0.7, 1.3);
    let p = build(&ModelConfig::VectorBoson {
        mass: m,
        r: 1,
        shape: shape.clone(),
        h,
    });
    let n = 5;
    let (t1, sigma) = (2.1, 0.4);
    let x1 = 3usize;
    let obs = Observable::field_point(FieldComponent::Field(0), vec![x1], t1, "phi");
    let pulled = pullback_observable(&obs, &p.flow, &p.model, sigma).unwrap();
    let coeffs = match &pulled.kind {
        ObservableKind::CauchyLinear { coefficients } => coefficients.clone(),
        _ => unreachable!(),
    };
    // random Cauchy datum, value via the coefficients…
    let phi0 = Array1::from_shape_fn(n, |s| ((s * 3 + 1) as f64 * 0.41).sin());
    let p0 = Array1::from_shape_fn(n, |s| ((s * 5 + 2) as f64 * 0.29).cos());
    let state = p.model.embed_natural(&phi0, &p0).unwrap();
    let w = p.chain.final_subspace().coords(&state.data);
    let via_coeffs = coeffs.dot(&w);
    // …and via the trigonometric mode sum (complex DFT, real synthesis).
    let dt = t1 - sigma;
    let mut value = 0.0;
    for kidx in 0..n {
        let omega = common::dispersion(&shape, h, m, &[kidx]);
        let (mut re_phi, mut im_phi, mut re_p, mut im_p) = (0.0, 0.0, 0.0, 0.0);
        for s in 0..n {
            let th = 2.0 * std::f64::consts::PI * (kidx * s) as f64 / n as f64;
            re_phi += phi0[s] * th.cos();
            im_phi -= phi0[s] * th.sin();
            re_p += p0[s] * th.cos();
            im_p -= p0[s] * th.sin();
        }
        let th1 = 2.0 * std::f64::consts::PI * (kidx * x1) as f64 / n as f64;
        let (c, s_) = ((omega * dt).cos(), (omega * dt).sin());
        // φ̂(t) = φ̂ cos + p̂ sin/ω, then evaluate e^{ik x₁}/N
        let re_t = re_phi * c + re_p * s_ / omega;
        let im_t = im_phi * c + im_p * s_ / omega;
        value += (re_t * th1.cos() - im_t * th1.sin()) / n as f64;
    }
    assert!(
        (via_coeffs - value).abs() < 1e-12,
        "{via_coeffs} vs {value}"
    );
}

#[test]
fn jacobi_identity_for_linear_observables() {
    // {g, h} is a constant functional, so {f, {g, h}} pairs f with a zero
    // differential: exactly zero.
    let p = build(&ModelConfig::VectorBoson {
        mass: 1.0,
        r: 1,
        shape: vec![3],
        h: 1.0,
    });
    let k = p.chain.final_dim();
    let f = Observable::cauchy_linear(Array1::from_shape_fn(k, |i| (i as f64 * 0.3).sin()), "f");
    let g = Observable::cauchy_linear(Array1::from_shape_fn(k, |i| (i as f64 * 0.7).cos()), "g");
    let h = Observable::cauchy_linear(Array1::from_shape_fn(k, |i| 0.2 * i as f64 - 0.5), "h");
    let gh = p.engine.bracket(&g, &h).unwrap();
    assert!(gh.is_finite());
    // d{g,h} = 0: the inner bracket is a constant on F_∞.
    let const_diff = Observable::cauchy_linear(Array1::zeros(k), "d{g,h}");
    let jac = p.engine.bracket(&const_diff, &f).unwrap();
    assert_eq!(jac, 0.0);
    let jac2 = p.engine.bracket(&f, &const_diff).unwrap();
    assert_eq!(jac2, 0.0);
}

#[test]
fn bracket_is_bilinear_and_antisymmetric() {
    let p = build(&ModelConfig::VectorBoson {
        mass: 1.0,
        r: 1,
        shape: vec![4],
        h: 0.5,
    });
    let k = p.chain.final_dim();
    let mk = |seed: usize| {
        Observable::cauchy_linear(
            Array1::from_shape_fn(k, |i| ((i * seed + 3) as f64 * 0.17).sin()),
            format!("o{seed}"),
        )
    };
    let (f, g, h) = (mk(2), mk(5), mk(11));
    let over = |a: &Observable<f64>, b: &Observable<f64>| p.engine.bracket(a, b).unwrap();
    // antisymmetry
    assert!((over(&f, &g) + over(&g, &f)).abs() < 1e-12);
    // bilinearity in each slot
    let fg = over(&f, &g);
    let fh = over(&f, &h);
    let combo = {
        let cg = match &g.kind {
            ObservableKind::CauchyLinear { coefficients } => coefficients,
            _ => unreachable!(),
        };
        let ch = match &h.kind {
            ObservableKind::CauchyLinear { coefficients } => coefficients,
            _ => unreachable!(),
        };
        Observable::cauchy_linear(cg * 2.0 + &(ch * -3.5), "combo")
    };
    let lhs = over(&f, &combo);
    assert!((lhs - (2.0 * fg - 3.5 * fh)).abs() < 1e-11);
}

#[test]
fn evolve_then_assemble_free_particle_solves_ddw() {
    // Slice-evolve the free particle, assemble with curve_to_section, check
    // interior DDW residuals at machine precision.
    let p = build(&ModelConfig::FreeParticle { mass: 2.0 });
    let spec = FieldTheorySpec::<f64>::free_particle(2.0).unwrap();
    let lat = SpacetimeLattice::new(21, 0.1, SpatialLattice::point()).unwrap();
    let w0 = p
        .chain
        .final_subspace()
        .coords(&ndarray::array![0.3, -0.9]);
    let states: Vec<SliceState<f64>> = (0..21)
        .map(|i| {
            let w = evolve(&p.flow, &w0, i as f64 * 0.1).unwrap();
            SliceState {
                data: p.chain.final_subspace().embed(&w),
            }
        })
        .collect();
    let sec = p.model.curve_to_section(&states, &lat).unwrap();
    let res = ddw_residual(&spec, &lat, &sec).unwrap();
    assert!(res.max_norm() < 1e-13);
}

#[test]
fn vb_curve_assembly_residuals_shrink_under_refinement() {
    // The strict curve_to_section assembly (β from the constraint block)
    // has first-order spatial residuals; they must still go to zero.
    let run = |n_sites: usize, h: f64, dt: f64| -> f64 {
        let p = build(&ModelConfig::VectorBoson {
            mass: 1.0,
            r: 1,
            shape: vec![n_sites],
            h,
        });
        let spec = FieldTheorySpec::<f64>::vector_boson(1.0, 1, 1).unwrap();
        let spatial = SpatialLattice::cubic(vec![n_sites], h).unwrap();
        let n_t = (1.0_f64 / dt).round() as usize + 1;
        let lat = SpacetimeLattice::new(n_t, dt, spatial).unwrap();
        let k = 2.0 * std::f64::consts::PI / (n_sites as f64 * h);
        let phi0 = Array1::from_shape_fn(n_sites, |s| (k * s as f64 * h).cos());
        let p0 = Array1::zeros(n_sites);
        let st = p.model.embed_natural(&phi0, &p0).unwrap();
        let w0 = p.chain.final_subspace().coords(&st.data);
        let states: Vec<SliceState<f64>> = (0..n_t)
            .map(|i| {
                let w = evolve(&p.flow, &w0, i as f64 * dt).unwrap();
                SliceState {
                    data: p.chain.final_subspace().embed(&w),
                }
            })
            .collect();
        let sec = p.model.curve_to_section(&states, &lat).unwrap();
        ddw_residual(&spec, &lat, &sec).unwrap().max_norm()
    };
    let r1 = run(8, 1.0, 0.2);
    let r2 = run(16, 0.5, 0.1);
    let r3 = run(32, 0.25, 0.05);
    assert!(r2 < r1 && r3 < r2, "{r1} {r2} {r3}");
    // first-order spatial bias: roughly halves per refinement
    assert!(r3 < 0.75 * r2);
}

#[test]
fn leapfrog_brackets_agree_within_dt_squared() {
    let cfg = ModelConfig::VectorBoson {
        mass: 1.0,
        r: 1,
        shape: vec![4],
        h: 1.0,
    };
    let p = build(&cfg);
    let f = Observable::field_point(FieldComponent::Field(0), vec![1], 0.8, "phi");
    let g = Observable::field_point(FieldComponent::MomentumTime(0), vec![3], 2.0, "p0");
    let exact = bracket_spacetime(&f, &g, &p.flow, &p.model, 0.0, &p.engine).unwrap();
    let mut prev_err = f64::INFINITY;
    for dt in [0.05, 0.025] {
        let lf =
            build_flow_leapfrog(&p.model, &p.chain, None, window(), dt).unwrap();
        let f_lf = pullback_observable(&f, &lf, &p.model, 0.0).unwrap();
        let g_lf = pullback_observable(&g, &lf, &p.model, 0.0).unwrap();
        let engine = BracketEngine::new(&p.chain, None).unwrap();
        let v = engine.bracket(&f_lf, &g_lf).unwrap();
        let err = (v - exact).abs();
        assert!(err < 40.0 * dt * dt, "dt {dt}: err {err}");
        assert!(err < prev_err);
        prev_err = err;
    }
}

#[test]
fn engine_solver_matches_flat_solve() {
    // The cached engine solver and the reference flat map must agree, in
    // both the symplectic and the gauge case.
    let vb = build(&ModelConfig::VectorBoson {
        mass: 1.0,
        r: 1,
        shape: vec![3],
        h: 1.0,
    });
    let c = Array1::from_shape_fn(vb.chain.final_dim(), |i| (i as f64 * 0.83).sin());
    let x1 = vb.engine.hamiltonian_vector_field(&c).unwrap();
    let x2 = solspace::presymp::flat_solve(&vb.chain.omega_final, &c, None).unwrap();
    let dev = (&x1 - &x2).iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    assert!(dev < 1e-12, "symplectic case dev {dev}");

    let ed = build(&ModelConfig::Electrodynamics {
        shape: vec![2, 2, 2],
        h: 1.0,
    });
    let mut c = Array1::from_shape_fn(ed.chain.final_dim(), |i| (i as f64 * 0.31).cos());
    let kb = ed.chain.kernel_final.basis();
    let overlap = kb.t().dot(&c);
    c = &c - &kb.dot(&overlap);
    let proj = ed.projector.as_ref().unwrap();
    let x1 = ed.engine.hamiltonian_vector_field(&c).unwrap();
    let x2 = solspace::presymp::flat_solve(&ed.chain.omega_final, &c, Some(proj)).unwrap();
    let dev = (&x1 - &x2).iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    assert!(dev < 1e-10, "gauge case dev {dev}");
}

#[test]
fn symplectic_solve_is_continuous_in_the_covector() {
    // Perturbed right-hand sides move the solution by at most ‖δ‖/σ_min.
    let p = build(&ModelConfig::VectorBoson {
        mass: 1.0,
        r: 1,
        shape: vec![4],
        h: 0.5,
    });
    let sigma_min = {
        let cond = p.chain.omega_condition().unwrap();
        // σ_min = cond · σ_max; σ_max bounded by the max-abs times dimension.
        let smax = p
            .chain
            .omega_final
            .iter()
            .fold(0.0f64, |m, &x| m.max(x.abs()))
            * p.chain.final_dim() as f64;
        cond * smax
    };
    let k = p.chain.final_dim();
    let c = Array1::from_shape_fn(k, |i| ((i * 7 % 5) as f64 - 2.0) * 0.4);
    let x = p.engine.hamiltonian_vector_field(&c).unwrap();
    for eps in [1e-4, 1e-7] {
        let delta = Array1::from_shape_fn(k, |i| eps * ((i * 3 % 7) as f64 - 3.0) / 3.0);
        let x2 = p.engine.hamiltonian_vector_field(&(&c + &delta)).unwrap();
        let dx = (&x2 - &x).iter().map(|v| v * v).sum::<f64>().sqrt();
        let dn = delta.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(dx <= 1.01 * dn / sigma_min * k as f64, "dx {dx} vs {dn}");
        assert!(dx > 0.0);
    }
}

#[test]
fn section_json_round_trip() {
    let spec = FieldTheorySpec::<f64>::vector_boson(1.0, 1, 1).unwrap();
    let lat = SpacetimeLattice::new(3, 0.1, SpatialLattice::cubic(vec![2], 1.0).unwrap()).unwrap();
    let mut sec = solspace::ddw::DiscretizedSection::zeros(&spec, &lat);
    sec.phi[[1, 1, 0]] = 0.25;
    sec.momenta[[2, 0, 1]] = -1.5;
    let s = serde_json::to_string(&sec).unwrap();
    let back: solspace::ddw::DiscretizedSection<f64> = serde_json::from_str(&s).unwrap();
    assert_eq!(back, sec);
}
