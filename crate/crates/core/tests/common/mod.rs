//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

/// Gauss-Kronrod 7/15 nodes on [-1, 1] (non-negative half) and weights.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod quadrature to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, whole: (f64, f64), depth: u32) -> f64 {
        if whole.1 <= tol || depth > 50 {
            return whole.0;
        }
        let m = 0.5 * (a + b);
        let l = gk15(f, a, m);
        let r = gk15(f, m, b);
        rec(f, a, m, 0.5 * tol, l, depth + 1) + rec(f, m, b, 0.5 * tol, r, depth + 1)
    }
    rec(f, a, b, tol, gk15(f, a, b), 0)
}

/// Sum of adaptive integrals over consecutive panels `breaks[i]..breaks[i+1]`.
pub fn integrate_panels(f: &dyn Fn(f64) -> f64, breaks: &[f64], tol: f64) -> f64 {
    let per = tol / breaks.len().max(1) as f64;
    breaks.windows(2).map(|w| integrate(f, w[0], w[1], per)).sum()
}

/// `K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt`, evaluated in scaled
/// form relative to the integrand peak.
pub fn bessel_k_integral(nu: f64, x: f64) -> f64 {
    let log_g = |t: f64| -x * t.cosh() + nu * t;
    // peak of -x cosh t + nu t: sinh t = nu / x
    let t_peak = (nu / x).asinh();
    let peak = log_g(t_peak);
    let f = |t: f64| (-x * t.cosh() - peak).exp() * (nu * t).cosh();
    // extend until the integrand is negligible relative to the peak
    let mut t_end = t_peak + 1.0;
    while log_g(t_end) - peak > -60.0 {
        t_end += 1.0;
    }
    let mut breaks = vec![0.0];
    let n = 64;
    for i in 1..=n {
        breaks.push(t_end * i as f64 / n as f64);
    }
    if t_peak > 0.0 && t_peak < t_end {
        breaks.push(t_peak);
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    let scale = (-peak).exp().recip();
    let approx = integrate_panels(&f, &breaks, 1e-15 * t_end);
    approx * scale
}

/// `int_{-kappa}^{kappa} g(x) cos(omega x) dx` for an even `g` supported in
/// `[-kappa, kappa]`, with extra breakpoints.
pub fn even_cosine_transform(g: &dyn Fn(f64) -> f64, omega: f64, kinks: &[f64], kappa: f64) -> f64 {
    let f = |x: f64| g(x) * (omega * x).cos();
    let mut breaks = vec![0.0];
    let panels = 64;
    for i in 1..=panels {
        breaks.push(kappa * i as f64 / panels as f64);
    }
    breaks.extend_from_slice(kinks);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    2.0 * integrate_panels(&f, &breaks, 1e-14)
}
