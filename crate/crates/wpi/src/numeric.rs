//! Small numerical toolbox shared across the crate: grids, golden-section search,
//! adaptive Simpson quadrature, monotone bisection, and least-squares slope fits.

/// `n` log-spaced points from `lo` to `hi` inclusive. Requires `0 < lo < hi`, `n >= 2`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    debug_assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `n` linearly spaced points from `lo` to `hi` inclusive. Requires `n >= 2`.
pub fn lin_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    debug_assert!(n >= 2);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
///
/// Runs until the bracket is shorter than `tol` (in the search coordinate) or `max_iter`
/// shrink steps, then returns the best point evaluated, endpoints included. Exact for
/// unimodal `f`; for a discontinuous unimodal objective it converges to the supremum side.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for _ in 0..max_iter {
        if (hi - lo).abs() <= tol {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = f(x2);
        }
        let cand = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
        if cand.1 > best.1 {
            best = cand;
        }
    }
    for x in [a, b] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Golden-section search for the minimum of `f` on `[a, b]`; see [`golden_max`].
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> (f64, f64) {
    let (x, fx) = golden_max(|t| -f(t), a, b, tol, max_iter);
    (x, -fx)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` with combined absolute/relative tolerance.
///
/// The interval is split until the classical `|S2 - S1| / 15` estimate meets
/// `max(abs_tol, rel_tol * |whole|)` scaled to the subinterval, where `whole` is the running
/// whole-interval estimate. Depth is capped; the cap is generous enough for integrable
/// endpoint behavior after the log substitutions used by callers.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let budget = abs_tol.max(rel_tol * whole.abs());
    simpson_rec(f, a, b, fa, fm, fb, whole, budget, 48)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Solve `g(x) = target` for continuous strictly decreasing `g` on `[lo, hi]` by bisection.
///
/// Requires `g(lo) >= target >= g(hi)`; the bracket is bisected `iters` times.
pub fn invert_decreasing<F: FnMut(f64) -> f64>(mut g: F, target: f64, lo: f64, hi: f64, iters: usize) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * (lo.abs().max(hi.abs()).max(1.0)) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Infimum of `{ x in [lo, hi] : g(x) <= level }` for nonincreasing `g`, by bisection.
///
/// Returns `lo` if `g(lo) <= level` already, and `hi` if the set is empty on the bracket.
pub fn first_below<F: FnMut(f64) -> f64>(mut g: F, level: f64, lo: f64, hi: f64, iters: usize) -> f64 {
    if g(lo) <= level {
        return lo;
    }
    if g(hi) > level {
        return hi;
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Least-squares slope of `y` against `x`. Requires equal lengths `>= 2`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    debug_assert!(x.len() == y.len() && x.len() >= 2);
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Mean and standard error of the mean of `xs` (sample standard deviation over `sqrt(n)`).
///
/// Returns `(mean, se)`; the standard error is `NaN` for fewer than two samples.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grids_hit_endpoints() {
        let g = log_spaced(1e-3, 1e3, 7);
        assert_relative_eq!(g[0], 1e-3, max_relative = 1e-12);
        assert_relative_eq!(g[6], 1e3, max_relative = 1e-12);
        assert_relative_eq!(g[3], 1.0, max_relative = 1e-12);
        let l = lin_spaced(0.0, 2.0, 5);
        assert_relative_eq!(l[1], 0.5, max_relative = 1e-15);
    }

    #[test]
    fn golden_finds_quadratic_max() {
        let (x, fx) = golden_max(|t| 3.0 - (t - 1.25) * (t - 1.25), -4.0, 4.0, 1e-12, 200);
        assert_relative_eq!(x, 1.25, epsilon = 1e-7);
        assert_relative_eq!(fx, 3.0, epsilon = 1e-13);
    }

    #[test]
    fn golden_handles_jump_objective() {
        // Increasing ramp that drops to a negative branch at t = 0.7: sup approached from the left.
        let f = |t: f64| if t < 0.7 { t } else { -1.0 };
        let (_, fx) = golden_max(f, 0.0, 2.0, 1e-14, 300);
        assert_relative_eq!(fx, 0.7, epsilon = 1e-9);
    }

    #[test]
    fn simpson_matches_closed_forms() {
        let v = adaptive_simpson(&mut |t: f64| t.exp(), 0.0, 3.0, 1e-12, 1e-12);
        assert_relative_eq!(v, 3f64.exp() - 1.0, max_relative = 1e-11);
        let v = adaptive_simpson(&mut |t: f64| 1.0 / t, 1.0, 100.0, 1e-12, 1e-12);
        assert_relative_eq!(v, 100f64.ln(), max_relative = 1e-11);
        let v = adaptive_simpson(&mut |t: f64| (-t * t).exp(), -8.0, 8.0, 1e-13, 1e-13);
        assert_relative_eq!(v, core::f64::consts::PI.sqrt(), max_relative = 1e-11);
    }

    #[test]
    fn bisection_inverts_monotone_functions() {
        let x = invert_decreasing(|t: f64| (-t).exp(), 0.25, 0.0, 50.0, 200);
        assert_relative_eq!(x, 4f64.ln(), epsilon = 1e-12);
        let x = first_below(|t: f64| 1.0 / t, 0.125, 1e-6, 1e6, 200);
        assert_relative_eq!(x, 8.0, max_relative = 1e-9);
        assert_eq!(first_below(|_| 0.0, 1.0, 1.0, 2.0, 50), 1.0);
    }

    #[test]
    fn slope_fit_recovers_power_law() {
        let xs: Vec<f64> = log_spaced(1.0, 1e4, 40).iter().map(|v| v.ln()).collect();
        let ys: Vec<f64> = xs.iter().map(|t| -2.5 * t + 0.3).collect();
        assert_relative_eq!(ls_slope(&xs, &ys), -2.5, epsilon = 1e-12);
    }

    #[test]
    fn mean_se_shrinks_with_samples() {
        let xs: Vec<f64> = (0..100).map(|i| (i % 10) as f64).collect();
        let (m, se) = mean_se(&xs);
        assert_relative_eq!(m, 4.5, epsilon = 1e-12);
        assert!(se > 0.0 && se < 1.0);
    }
}
