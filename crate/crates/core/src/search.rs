//! One-dimensional search helpers for concave profit functions.

/// Golden-section search for the maximum of a unimodal `f` on
/// `[lo, hi]`, to an absolute tolerance `tol` on the argument.
///
/// Endpoints are evaluated as well, so a monotone `f` resolves to the
/// boundary. Returns `(x_max, f_max)`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    if hi <= lo {
        return (lo, f(lo));
    }
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 >= f2 {
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
    let mut best = (x1, f1);
    for cand in [(x2, f2), (lo, f(lo)), (hi, f(hi))] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    best
}

/// Bisection for the largest `x` in `[lo, hi]` with `pred(x)` true,
/// assuming `pred` is true at `lo` and monotonically flips to false.
/// Returns `hi` when the predicate never fails.
pub fn bisect_largest(pred: impl Fn(f64) -> bool, lo: f64, hi: f64, tol: f64) -> f64 {
    if pred(hi) {
        return hi;
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if pred(mid) {
            a = mid;
        } else {
            b = mid;
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_maximum() {
        let (x, fx) = golden_section_max(|x| -(x - 2.5) * (x - 2.5), 0.0, 10.0, 1e-10);
        assert!((x - 2.5).abs() < 1e-8);
        assert!(fx.abs() < 1e-15);
    }

    #[test]
    fn monotone_function_resolves_to_boundary() {
        let (x, _) = golden_section_max(|x| x, 0.0, 3.0, 1e-10);
        assert_eq!(x, 3.0);
        let (x, _) = golden_section_max(|x| -x, 0.0, 3.0, 1e-10);
        assert_eq!(x, 0.0);
    }

    #[test]
    fn bisect_finds_threshold() {
        let x = bisect_largest(|x| x * x <= 2.0, 0.0, 10.0, 1e-12);
        assert!((x - 2.0f64.sqrt()).abs() < 1e-10);
        assert_eq!(bisect_largest(|_| true, 0.0, 5.0, 1e-12), 5.0);
    }
}
