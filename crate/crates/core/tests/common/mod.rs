//! Shared oracles for the integration suites: direct trigonometric mode sums
//! over integer wavevectors, independent of the eigensolver-based engine path.

/// Lattice dispersion ω² = m² + (4/h²) Σⱼ sin²(π nⱼ/Nⱼ).
pub fn dispersion(shape: &[usize], h: f64, mass: f64, n: &[usize]) -> f64 {
    let mut acc = mass * mass;
    for (j, &nj) in n.iter().enumerate() {
        let s = (std::f64::consts::PI * nj as f64 / shape[j] as f64).sin();
        acc += 4.0 / (h * h) * s * s;
    }
    acc.sqrt()
}

fn wavevectors(shape: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = shape.iter().product();
    (0..total)
        .map(|mut i| {
            let mut out = vec![0; shape.len()];
            for a in (0..shape.len()).rev() {
                out[a] = i % shape[a];
                i /= shape[a];
            }
            out
        })
        .collect()
}

fn phase(shape: &[usize], n: &[usize], x1: &[usize], x2: &[usize]) -> f64 {
    let mut acc = 0.0;
    for j in 0..shape.len() {
        let dx = x2[j] as f64 - x1[j] as f64;
        acc += 2.0 * std::f64::consts::PI * n[j] as f64 * dx / shape[j] as f64;
    }
    acc
}

/// Vector-boson mixed bracket magnitude:
/// (1/(N h^d)) Σ_k cos(ω_k (t₁−t₂)) e^{i k·(x₂−x₁)}, real part.
pub fn vb_mode_sum(
    shape: &[usize],
    h: f64,
    mass: f64,
    x1: &[usize],
    x2: &[usize],
    t1_minus_t2: f64,
) -> f64 {
    let total: usize = shape.iter().product();
    let vol = h.powi(shape.len() as i32);
    let mut acc = 0.0;
    for n in wavevectors(shape) {
        let w = dispersion(shape, h, mass, &n);
        acc += (w * t1_minus_t2).cos() * phase(shape, &n, x1, x2).cos();
    }
    acc / (total as f64 * vol)
}

/// Electrodynamics transverse bracket oracle:
/// (1/(N h³)) Σ_k Re[ T̂(k)_{c₂ c₁} e^{i k·(x₂−x₁)} ] · s_{ω_k}(t₁−t₂),
/// with T̂ the forward-difference transverse projector and s the propagator
/// kernel sin(ωδ)/ω (drift limit δ at ω = 0).
pub fn ed_transverse_mode_sum(
    shape: &[usize],
    h: f64,
    c1: usize,
    x1: &[usize],
    c2: usize,
    x2: &[usize],
    t1_minus_t2: f64,
) -> f64 {
    let total: usize = shape.iter().product();
    let vol = h * h * h;
    let mut acc = 0.0;
    for n in wavevectors(shape) {
        // forward-difference symbol g_j = (e^{iθ_j} − 1)/h
        let mut g_re = [0.0f64; 3];
        let mut g_im = [0.0f64; 3];
        let mut g2 = 0.0;
        for j in 0..3 {
            let theta = 2.0 * std::f64::consts::PI * n[j] as f64 / shape[j] as f64;
            g_re[j] = (theta.cos() - 1.0) / h;
            g_im[j] = theta.sin() / h;
            g2 += g_re[j] * g_re[j] + g_im[j] * g_im[j];
        }
        // T̂_{c2,c1} = δ − g_{c2} conj(g_{c1}) / |g|²
        let (t_re, t_im) = if g2 < 1e-14 {
            (if c1 == c2 { 1.0 } else { 0.0 }, 0.0)
        } else {
            let num_re = g_re[c2] * g_re[c1] + g_im[c2] * g_im[c1];
            let num_im = g_im[c2] * g_re[c1] - g_re[c2] * g_im[c1];
            (
                (if c1 == c2 { 1.0 } else { 0.0 }) - num_re / g2,
                -num_im / g2,
            )
        };
        let ph = phase(shape, &n, x1, x2);
        let re_part = t_re * ph.cos() - t_im * ph.sin();
        let kernel = if g2 < 1e-14 {
            t1_minus_t2
        } else {
            let w = g2.sqrt();
            (w * t1_minus_t2).sin() / w
        };
        acc += re_part * kernel;
    }
    acc / (total as f64 * vol)
}

/// One pass/fail line per acceptance criterion.
pub fn report(criterion: usize, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {criterion}: {status} — {detail}");
}
