use crate::error::{Error, Result};

pub fn l1(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).abs() + (a[1] - b[1]).abs()
}

/// Mean pairwise L1 distance, in the units of the input.
pub fn l1_avg(points: &[[f64; 2]]) -> Result<f64> {
    let m = points.len();
    if m < 2 {
        return Err(Error::InsufficientData { needed: 2, got: m });
    }
    let mut sum = 0.0;
    for (i, &p) in points.iter().enumerate() {
        for &q in &points[i + 1..] {
            sum += l1(p, q);
        }
    }
    Ok(sum / (m * (m - 1) / 2) as f64)
}
