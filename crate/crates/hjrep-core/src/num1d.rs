//! One-dimensional search primitives shared by the conjugation and
//! projection code: golden-section extremization over a bracket (robust to
//! +inf plateaus at the edges) and monotone bisection.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizes a unimodal `f` on `[lo, hi]`; `f` may return +inf near the
/// edges. A coarse scan locates a finite bracket first, then golden section
/// refines it. Returns `(argmin, min)`.
pub fn golden_min(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    debug_assert!(lo <= hi);
    if hi - lo <= tol {
        let m = 0.5 * (lo + hi);
        return (m, f(m));
    }
    const SCAN: usize = 64;
    let mut best = (f64::INFINITY, lo);
    for k in 0..=SCAN {
        let x = lo + (hi - lo) * (k as f64) / (SCAN as f64);
        let v = f(x);
        if v < best.0 {
            best = (v, x);
        }
    }
    if !best.0.is_finite() {
        return (best.1, best.0);
    }
    let step = (hi - lo) / (SCAN as f64);
    let mut a = (best.1 - step).max(lo);
    let mut b = (best.1 + step).min(hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    let m = 0.5 * (a + b);
    let fm = f(m);
    if fm <= f1 && fm <= f2 {
        (m, fm)
    } else if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximizes a unimodal `f` on `[lo, hi]`. Returns `(argmax, max)`.
pub fn golden_max(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (x, v) = golden_min(&|t| -f(t), lo, hi, tol);
    (x, -v)
}

/// Finds `x in [lo, hi]` with `f(x) = target` for monotone `f` by bisection;
/// `increasing` states the monotonicity direction. 200 iterations pin the
/// root to machine precision relative to the bracket.
pub fn bisect_monotone(
    f: &dyn Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    target: f64,
    increasing: bool,
) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        let go_right = if increasing { v < target } else { v > target };
        if go_right {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = if n.is_multiple_of(2) { n.max(2) } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * k as f64);
    }
    s * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_min() {
        // Argmin precision is limited to sqrt(eps * f / f'') by the flat
        // floating-point plateau around a smooth minimum; the value is exact.
        let (x, v) = golden_min(&|t| (t - 1.25) * (t - 1.25) + 3.0, -10.0, 10.0, 1e-12);
        assert!((x - 1.25).abs() < 1e-7);
        assert!((v - 3.0).abs() < 1e-15);
    }

    #[test]
    fn golden_handles_infinite_edges() {
        let f = |t: f64| if t.abs() >= 1.0 { f64::INFINITY } else { t * t };
        let (x, v) = golden_min(&f, -5.0, 5.0, 1e-12);
        assert!(x.abs() < 1e-9 && v < 1e-15);
    }

    #[test]
    fn bisect_hits_target() {
        let x = bisect_monotone(&|t| t * t * t, 0.0, 10.0, 8.0, true);
        assert!((x - 2.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_integrates_cubic_exactly() {
        let v = simpson(&|t| t * t * t, 0.0, 2.0, 8);
        assert!((v - 4.0).abs() < 1e-12);
    }
}
