//! Unnormalized cardinal sine `sin(x)/x` and its first two derivatives,
//! with series branches near the origin.

const SERIES_CUTOFF: f64 = 1e-3;

pub fn sinc(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

pub fn sinc_d1(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        let x2 = x * x;
        -x / 3.0 * (1.0 - x2 / 10.0 * (1.0 - x2 / 28.0))
    } else {
        (x * x.cos() - x.sin()) / (x * x)
    }
}

pub fn sinc_d2(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        let x2 = x * x;
        -1.0 / 3.0 + x2 / 10.0 - x2 * x2 / 168.0
    } else {
        let (s, c) = x.sin_cos();
        ((2.0 - x * x) * s - 2.0 * x * c) / (x * x * x)
    }
}
