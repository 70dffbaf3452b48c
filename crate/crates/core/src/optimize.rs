//! One-dimensional maximization on a bounded interval.

const INV_PHI: f64 = 0.618_033_988_749_894_9; // (sqrt(5) - 1) / 2

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`,
/// stopping when the bracket is narrower than `tol`. The endpoints are never
/// evaluated. Returns the best point seen and its value.
pub fn golden_section_max<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    debug_assert!(lo <= hi);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// How a search interval `(0, upper]` treats its right end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpperEnd {
    Closed,
    Open,
}

pub const GRID_POINTS: usize = 1024;

/// Maximizes `f` over `(0, upper]` (or `(0, upper)`): a uniform
/// [`GRID_POINTS`]-point scan, then golden-section refinement on the two
/// grid cells around the best point down to `tol`. Returns `(argmax, max)`;
/// the maximum is never worse than the best grid value.
pub fn grid_then_golden_max<F>(f: F, upper: f64, end: UpperEnd, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let divisions = match end {
        UpperEnd::Closed => GRID_POINTS,
        UpperEnd::Open => GRID_POINTS + 1,
    };
    let point = |i: usize| {
        if i == divisions {
            upper
        } else {
            upper * i as f64 / divisions as f64
        }
    };
    let mut best_i = 1;
    let mut best_f = f64::NEG_INFINITY;
    for i in 1..=GRID_POINTS {
        let v = f(point(i));
        if v > best_f {
            best_f = v;
            best_i = i;
        }
    }
    let mut best_x = point(best_i);
    if best_f == f64::NEG_INFINITY {
        return (best_x, best_f);
    }
    let lo = point(best_i - 1);
    let hi = point((best_i + 1).min(divisions));
    let (gx, gf) = golden_section_max(&f, lo, hi, tol);
    if gf > best_f {
        best_f = gf;
        best_x = gx;
    }
    (best_x, best_f)
}
