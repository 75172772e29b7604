//! Power-of-two geometric row/column equilibration.
//!
//! Scale factors are exact powers of two, so scaling and unscaling never
//! introduce rounding error of their own.

const PASSES: usize = 4;

fn pow2_near(v: f64) -> f64 {
    if !(v.is_finite() && v > 0.0) {
        return 1.0;
    }
    v.log2().round().clamp(-200.0, 200.0).exp2()
}

/// Row and column scale factors for a dense `m x n` matrix. The scaled
/// entries are `row[i] * a[i][j] * col[j]`.
pub(crate) fn equilibrate(m: usize, n: usize, a: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut row = vec![1.0; m];
    let mut col = vec![1.0; n];
    for _ in 0..PASSES {
        for i in 0..m {
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for j in 0..n {
                let v = (a[i * n + j] * col[j]).abs();
                if v > 0.0 {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            row[i] = if hi > 0.0 { pow2_near(1.0 / (lo * hi).sqrt()) } else { 1.0 };
        }
        for j in 0..n {
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for i in 0..m {
                let v = (a[i * n + j] * row[i]).abs();
                if v > 0.0 {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            col[j] = if hi > 0.0 { pow2_near(1.0 / (lo * hi).sqrt()) } else { 1.0 };
        }
    }
    (row, col)
}
