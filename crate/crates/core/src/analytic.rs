//! Closed-form and semi-analytic weight functions in the plane: the two-point
//! example's `g` and its density `rho`, the isotropic formula for `g`, the
//! Gaussian specialization, an Abel-type radial inversion for the density, and
//! a numeric line-integral checker that ties the density back to `g`.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyticError {
    /// Evaluation requested at a point where the closed form blows up.
    #[error("evaluation at singular point ({x}, {y})")]
    SingularPoint { x: f64, y: f64 },
    /// Adaptive quadrature exhausted its depth budget above tolerance.
    #[error("quadrature error estimate {estimate:.3e} exceeds budget {budget:.3e}")]
    QuadratureFailure { estimate: f64, budget: f64 },
    /// A singular point sits close to (but not on) the integration line, where
    /// no symmetric principal window can absorb it.
    #[error("singular point ({x}, {y}) lies {distance:.3e} from the integration line")]
    SingularOnLine { x: f64, y: f64, distance: f64 },
}

/// Scale factor of the two-point `g`; equals sqrt(2)/4. The value is pinned by
/// the empirical-weight oracle for the dataset {(1,0), (-1,0)}.
pub fn two_point_alpha() -> f64 {
    2.0_f64.sqrt() / 4.0
}

/// Weight of the direction/offset pair (v, b) for the symmetric two-point
/// dataset {(1,0), (-1,0)}: alpha * max(|v_1| - |b|, 0).
///
/// `v` must be a unit 2-vector.
pub fn two_point_g(v: [f64; 2], b: f64) -> f64 {
    debug_assert!((v[0] * v[0] + v[1] * v[1] - 1.0).abs() < 1e-9);
    two_point_alpha() * (v[0].abs() - b.abs()).max(0.0)
}

const TWO_POINT_SINGULARITIES: [[f64; 2]; 3] = [[1.0, 0.0], [-1.0, 0.0], [0.0, 0.0]];

/// Singular points of [`two_point_rho`]: the two data points and the origin.
pub fn two_point_singularities() -> Vec<[f64; 2]> {
    TWO_POINT_SINGULARITIES.to_vec()
}

/// Planar density whose line integrals reproduce [`two_point_g`]:
/// (alpha/2pi) * (log|x - x1| + log|x - x2| - 2 log|x|) with x1 = (1,0),
/// x2 = (-1,0). Negative values are expected; the line integrals stay
/// nonnegative. Errors at the three logarithmic singularities.
pub fn two_point_rho(x: [f64; 2]) -> Result<f64, AnalyticError> {
    let dist = |p: [f64; 2]| ((x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2)).sqrt();
    for p in TWO_POINT_SINGULARITIES {
        if dist(p) < 1e-12 {
            return Err(AnalyticError::SingularPoint { x: x[0], y: x[1] });
        }
    }
    let d1 = dist([1.0, 0.0]);
    let d2 = dist([-1.0, 0.0]);
    let d0 = dist([0.0, 0.0]);
    Ok(two_point_alpha() / (2.0 * std::f64::consts::PI) * (d1.ln() + d2.ln() - 2.0 * d0.ln()))
}

/// Standard normal upper-tail probability Q(b).
pub fn gaussian_tail(b: f64) -> f64 {
    0.5 * libm::erfc(b / 2.0_f64.sqrt())
}

/// Integral of [`gaussian_tail`] from `b` to infinity, via the closed form
/// phi(b) - b * Q(b).
pub fn gaussian_tail_integral(b: f64) -> f64 {
    let phi = (-0.5 * b * b).exp() / (2.0 * std::f64::consts::PI).sqrt();
    phi - b * gaussian_tail(b)
}

/// Weight of any unit direction at offset `b` for an isotropic input law with
/// upper-tail function `m`: with t = |b| and I = int_t^inf m, the value is
/// m(t) * I * sqrt((t + I/m(t))^2 + 1). Even in b by construction; returns 0
/// once the tail function vanishes. The tail integral is evaluated by adaptive
/// quadrature over doubling blocks.
pub fn isotropic_g(m: &dyn Fn(f64) -> f64, b: f64) -> f64 {
    let t = b.abs();
    let mt = m(t);
    if !(mt > 0.0) {
        return 0.0;
    }
    let integral = tail_quadrature(m, t);
    if !(integral > 0.0) {
        return 0.0;
    }
    mt * integral * ((t + integral / mt).powi(2) + 1.0).sqrt()
}

/// [`isotropic_g`] for the standard Gaussian, using the closed-form tail
/// integral instead of quadrature.
pub fn gaussian_isotropic_g(b: f64) -> f64 {
    let t = b.abs();
    let mt = gaussian_tail(t);
    if !(mt > 0.0) {
        return 0.0;
    }
    let integral = gaussian_tail_integral(t);
    if !(integral > 0.0) {
        return 0.0;
    }
    mt * integral * ((t + integral / mt).powi(2) + 1.0).sqrt()
}

/// int_t^inf m, integrating over blocks [a, a+w] with doubling w until a block
/// contributes nothing. Assumes m decays to an integrable tail.
fn tail_quadrature(m: &dyn Fn(f64) -> f64, t: f64) -> f64 {
    let mut acc = 0.0;
    let mut a = t;
    let mut w = (1.0_f64).max(0.5 * t.abs());
    for _ in 0..64 {
        let block = fixed_adaptive(m, a, a + w, 1e-13 * (acc + 1.0), 32).0;
        acc += block;
        if block.abs() <= 1e-14 * (acc.abs() + 1e-300) {
            break;
        }
        a += w;
        w *= 2.0;
    }
    acc
}

/// Tolerance and recursion budget for the adaptive quadratures.
#[derive(Debug, Clone, Copy)]
pub struct QuadOpts {
    /// Relative tolerance against the integrand's sampled scale.
    pub tol: f64,
    /// Maximum bisection depth per panel.
    pub max_depth: u32,
}

impl Default for QuadOpts {
    fn default() -> Self {
        QuadOpts { tol: 1e-9, max_depth: 44 }
    }
}

/// Adaptive Simpson on [a, b]: 32 seed panels, then bisection with the
/// pointwise |delta| <= 15 tol accept rule. Returns (value, error estimate).
fn fixed_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_depth: u32) -> (f64, f64) {
    const SEED: usize = 32;
    let mut value = 0.0;
    let mut err = 0.0;
    let w = (b - a) / SEED as f64;
    for i in 0..SEED {
        let lo = a + i as f64 * w;
        let hi = if i + 1 == SEED { b } else { lo + w };
        let mid = 0.5 * (lo + hi);
        let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
        let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        let (v, e) = simpson_rec(
            f,
            lo,
            flo,
            mid,
            fmid,
            hi,
            fhi,
            whole,
            tol / SEED as f64,
            max_depth,
        );
        value += v;
        err += e;
    }
    (value, err)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> (f64, f64) {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return (left + right + delta / 15.0, delta.abs() / 15.0);
    }
    let (lv, le) = simpson_rec(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1);
    let (rv, re) = simpson_rec(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
    (lv + rv, le + re)
}

/// Radial density paired with an even weight profile in the plane:
/// rho(r) = -(1/pi) int_r^inf g'(b) / sqrt(b^2 - r^2) db, evaluated through
/// the substitution b = r cosh(t) which removes the endpoint singularity.
/// g' is taken by central differences with step 1e-4 * (1 + |b|).
///
/// Requires r > 0 and a profile smooth enough for the differences to make
/// sense; tolerance is relative to the integrand's scale.
pub fn radial_rho(
    g_profile: &dyn Fn(f64) -> f64,
    r: f64,
    opts: &QuadOpts,
) -> Result<f64, AnalyticError> {
    assert!(r > 0.0 && r.is_finite());
    let gp = |b: f64| {
        let h = 1e-4 * (1.0 + b.abs());
        (g_profile(b + h) - g_profile(b - h)) / (2.0 * h)
    };
    let integrand = move |t: f64| gp(r * t.cosh());
    // Far cutoff: cover offsets out to 4r + 60, which exhausts any profile
    // that dies on a fixed scale as well as the Gaussian's b ~ 40 underflow.
    let t_max = (4.0 + 60.0 / r).acosh();
    let mut scale: f64 = 0.0;
    for i in 0..=128 {
        scale = scale.max(integrand(t_max * i as f64 / 128.0).abs());
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    let budget = opts.tol * scale * t_max;
    let (value, err) = fixed_adaptive(&integrand, 0.0, t_max, budget, opts.max_depth);
    if err > budget {
        return Err(AnalyticError::QuadratureFailure { estimate: err, budget });
    }
    Ok(-value / std::f64::consts::PI)
}

/// Options for [`line_integral`]: quadrature budget plus the field's singular
/// points and how to treat them.
#[derive(Debug, Clone)]
pub struct LineOpts {
    pub quad: QuadOpts,
    /// Points where the field is singular. One sitting on the line gets a
    /// symmetric principal window; one merely near the line is an error.
    pub singular_points: Vec<[f64; 2]>,
    /// Distance below which a singular point counts as "near" the line.
    pub exclusion_tol: f64,
    /// Half width of the principal window cut out around an on-line
    /// logarithmic singularity.
    pub window: f64,
}

impl Default for LineOpts {
    fn default() -> Self {
        LineOpts {
            quad: QuadOpts { tol: 1e-7, max_depth: 44 },
            singular_points: Vec::new(),
            exclusion_tol: 1e-3,
            window: 1e-6,
        }
    }
}

/// Line integral truncated to parameter |t| <= half_width, with an error
/// estimate for the discarded far field assuming O(t^-2) decay.
#[derive(Debug, Clone, Copy)]
pub struct LineIntegral {
    pub value: f64,
    /// Far-field truncation bound plus the mass skipped by the principal
    /// windows; not a quadrature error.
    pub truncation_error: f64,
}

/// Integrates `field` over the line {x : v.x = b}, parameterized as
/// x(t) = b v + t u with u the rotation of the unit vector `v` by 90 degrees.
///
/// Singular points listed in `opts` that land on the line are excised by a
/// symmetric window (the logarithmic mass omitted is folded into the reported
/// truncation error); points within `exclusion_tol` of the line but not on it
/// are refused.
pub fn line_integral(
    field: &dyn Fn([f64; 2]) -> f64,
    v: [f64; 2],
    b: f64,
    half_width: f64,
    opts: &LineOpts,
) -> Result<LineIntegral, AnalyticError> {
    debug_assert!((v[0] * v[0] + v[1] * v[1] - 1.0).abs() < 1e-9);
    assert!(half_width > 0.0);
    let u = [-v[1], v[0]];
    let at = move |t: f64| [b * v[0] + t * u[0], b * v[1] + t * u[1]];

    let mut windows: Vec<(f64, f64)> = Vec::new();
    for p in &opts.singular_points {
        let perp = v[0] * p[0] + v[1] * p[1] - b;
        let on_line_tol = 1e-12 * (1.0 + b.abs() + p[0].abs() + p[1].abs());
        if perp.abs() <= on_line_tol {
            let ts = u[0] * p[0] + u[1] * p[1];
            if ts.abs() <= half_width + opts.window {
                windows.push((ts - opts.window, ts + opts.window));
            }
        } else if perp.abs() < opts.exclusion_tol {
            return Err(AnalyticError::SingularOnLine {
                x: p[0],
                y: p[1],
                distance: perp.abs(),
            });
        }
    }
    windows.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Segment [-T, T] around the windows, seeding extra breakpoints so the
    // adaptive pass cannot step over a localized feature in one panel.
    let mut cuts = vec![-half_width];
    for mag in [1.0_f64, 4.0, 16.0, 64.0, 256.0] {
        for s in [-mag, mag] {
            if s.abs() < half_width {
                cuts.push(s);
            }
        }
    }
    for &(lo, hi) in &windows {
        cuts.push(lo.clamp(-half_width, half_width));
        cuts.push(hi.clamp(-half_width, half_width));
    }
    cuts.push(half_width);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let f = move |t: f64| field(at(t));
    let mut value = 0.0;
    let mut window_skip = 0.0;
    let inside_window =
        |t: f64| windows.iter().any(|&(lo, hi)| t > lo + 1e-15 && t < hi - 1e-15);
    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi - lo <= 0.0 || inside_window(0.5 * (lo + hi)) {
            continue;
        }
        let (v_seg, _) = fixed_adaptive(
            &f,
            lo,
            hi,
            opts.quad.tol * (hi - lo).max(1.0),
            opts.quad.max_depth,
        );
        value += v_seg;
    }
    for &(lo, hi) in &windows {
        let edge = f(lo.max(-half_width)).abs().max(f(hi.min(half_width)).abs());
        window_skip += 3.0 * opts.window * edge;
    }

    // O(t^-2) far field: |f| ~ C/t^2 gives a tail bound of 2C/T.
    let mut c_far: f64 = 0.0;
    for s in [1.0, 0.85, 0.7] {
        let t = s * half_width;
        c_far = c_far.max(f(t).abs() * t * t).max(f(-t).abs() * t * t);
    }
    Ok(LineIntegral {
        value,
        truncation_error: 2.0 * c_far / half_width + window_skip,
    })
}

/// Sampled radial profile with monotone cubic (Fritsch-Carlson) evaluation.
/// Radii must be strictly increasing and values finite; evaluation clamps to
/// the end values outside the sampled range.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    radii: Vec<f64>,
    values: Vec<f64>,
    tangents: Vec<f64>,
}

impl RadialProfile {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Self {
        assert!(radii.len() >= 2 && radii.len() == values.len());
        assert!(radii.windows(2).all(|w| w[0] < w[1]));
        assert!(radii.iter().chain(values.iter()).all(|x| x.is_finite()));
        let n = radii.len();
        let d: Vec<f64> = (0..n - 1)
            .map(|i| (values[i + 1] - values[i]) / (radii[i + 1] - radii[i]))
            .collect();
        let mut m = vec![0.0; n];
        m[0] = d[0];
        m[n - 1] = d[n - 2];
        for i in 1..n - 1 {
            m[i] = if d[i - 1] * d[i] <= 0.0 { 0.0 } else { 0.5 * (d[i - 1] + d[i]) };
        }
        for i in 0..n - 1 {
            if d[i] == 0.0 {
                m[i] = 0.0;
                m[i + 1] = 0.0;
                continue;
            }
            let alpha = m[i] / d[i];
            let beta = m[i + 1] / d[i];
            let s = alpha * alpha + beta * beta;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                m[i] = tau * alpha * d[i];
                m[i + 1] = tau * beta * d[i];
            }
        }
        RadialProfile { radii, values, tangents: m }
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, r: f64) -> f64 {
        let n = self.radii.len();
        if r <= self.radii[0] {
            return self.values[0];
        }
        if r >= self.radii[n - 1] {
            return self.values[n - 1];
        }
        let i = match self.radii.binary_search_by(|x| x.total_cmp(&r)) {
            Ok(i) => return self.values[i],
            Err(i) => i - 1,
        };
        let h = self.radii[i + 1] - self.radii[i];
        let t = (r - self.radii[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.values[i]
            + h10 * h * self.tangents[i]
            + h01 * self.values[i + 1]
            + h11 * h * self.tangents[i + 1]
    }
}
