//! Scalar quadrature and root bracketing shared by the limit and recursion
//! code.

/// Relative accuracy floor for quadrature: integrals of size 10⁷ (small α)
/// cannot be resolved to an absolute 1e-11 in double precision.
const REL_FLOOR: f64 = 1e-14;
const MAX_DEPTH: u32 = 50;
const INITIAL_PANELS: usize = 8;

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// Each panel is accepted once halving changes the estimate by less than
/// `15·tol` (the interval-doubling test), and the Richardson-corrected value
/// is returned. The tolerance is absolute, floored at `1e-14` relative to the
/// magnitude of the integral.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b == a {
        return 0.0;
    }
    if b < a {
        return -adaptive_simpson(f, b, a, tol);
    }
    let width = (b - a) / INITIAL_PANELS as f64;
    let mut panels = Vec::with_capacity(INITIAL_PANELS);
    let mut rough = 0.0;
    for i in 0..INITIAL_PANELS {
        let lo = a + width * i as f64;
        let hi = if i + 1 == INITIAL_PANELS { b } else { lo + width };
        let mid = 0.5 * (lo + hi);
        let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
        let whole = simpson(lo, hi, flo, fmid, fhi);
        rough += whole;
        panels.push((lo, hi, flo, fmid, fhi, whole));
    }
    let tol = tol.max(REL_FLOOR * rough.abs());
    let panel_tol = tol / INITIAL_PANELS as f64;
    panels
        .into_iter()
        .map(|(lo, hi, flo, fmid, fhi, whole)| {
            refine(&f, lo, hi, flo, fmid, fhi, whole, panel_tol, MAX_DEPTH)
        })
        .sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || m <= a || m >= b {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `∫₀^s f(y) dy` for integrands that behave like `y^{1/k}` at the origin.
///
/// When `power > 1` the initial segment `[0, min(1, s)]` is integrated after
/// the substitution `y = t^power`, which turns a `y^{1/power}` cusp into a
/// smooth integrand. The remainder `[1, s]` is integrated directly.
pub fn integrate_from_zero<F: Fn(f64) -> f64>(f: F, s: f64, power: f64, tol: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if power <= 1.0 {
        return adaptive_simpson(&f, 0.0, s, tol);
    }
    let head_end = s.min(1.0);
    let t_end = head_end.powf(1.0 / power);
    let head = adaptive_simpson(
        |t: f64| {
            if t <= 0.0 {
                0.0
            } else {
                f(t.powf(power)) * power * t.powf(power - 1.0)
            }
        },
        0.0,
        t_end,
        0.5 * tol,
    );
    if s <= 1.0 {
        head
    } else {
        head + adaptive_simpson(&f, 1.0, s, 0.5 * tol)
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Returns `None` when the endpoints do not bracket a root. Stops once the
/// bracket is narrower than `xtol` or cannot be split further in floating
/// point.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Option<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return None;
    }
    let lo_positive = flo > 0.0;
    while hi - lo > xtol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if (fm > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12);
        assert!((v - (4.0 - 4.0 + 2.0)).abs() < 1e-13);
    }

    #[test]
    fn simpson_handles_reversed_and_empty_intervals() {
        assert_eq!(adaptive_simpson(|x| x, 1.0, 1.0, 1e-12), 0.0);
        let v = adaptive_simpson(|x| x, 1.0, 0.0, 1e-12);
        assert!((v + 0.5).abs() < 1e-14);
    }

    #[test]
    fn cusp_substitution_resolves_root_singularity() {
        // ∫₀^3 y^{1/4} dy = (4/5)·3^{5/4}
        let exact = 0.8 * 3f64.powf(1.25);
        let v = integrate_from_zero(|y: f64| y.powf(0.25), 3.0, 4.0, 1e-12);
        assert!((v - exact).abs() < 1e-11, "{v} vs {exact}");
    }

    #[test]
    fn smooth_integrand_matches_closed_form() {
        let v = integrate_from_zero(|y: f64| y.exp(), 2.5, 1.0, 1e-12);
        assert!((v - (2.5f64.exp() - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn bisect_finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn bisect_rejects_unbracketed_interval() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_none());
    }
}
