//! One-dimensional maximization: coarse global scan followed by
//! golden-section refinement of the bracketing interval.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
/// Stops when the bracket is narrower than `rel_tol * max(|x|, abs_floor)`.
pub fn golden_max<F>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64, abs_floor: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= rel_tol * mid.abs().max(abs_floor) {
            break;
        }
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

/// Result of [`scan_then_refine`].
#[derive(Debug, Clone, Copy)]
pub struct ScanMax {
    pub x: f64,
    pub value: f64,
    /// Index of the best coarse sample.
    pub coarse_index: usize,
}

/// Evaluate `f` on `points` (increasing), take the global grid maximum
/// (first occurrence wins ties, i.e. the smaller abscissa), then refine with
/// golden-section search on the neighbouring interval.
pub fn scan_then_refine<F>(f: F, points: &[f64], rel_tol: f64) -> Option<ScanMax>
where
    F: Fn(f64) -> f64,
{
    let values: Vec<f64> = points.iter().map(|&x| f(x)).collect();
    let mut best = None;
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            continue;
        }
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((i, v)),
        }
    }
    let (i, v) = best?;
    let lo = points[i.saturating_sub(1)];
    let hi = points[(i + 1).min(points.len() - 1)];
    let floor = (hi - lo).abs().max(f64::MIN_POSITIVE);
    let (x, fx) = golden_max(&f, lo, hi, rel_tol, floor * 1e-3);
    Some(if fx >= v {
        ScanMax {
            x,
            value: fx,
            coarse_index: i,
        }
    } else {
        ScanMax {
            x: points[i],
            value: v,
            coarse_index: i,
        }
    })
}
