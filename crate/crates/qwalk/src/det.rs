//! Small dense determinants with row scaling pulled out in log space.
//!
//! Transition determinants mix coefficients spanning many orders of
//! magnitude, so each row's dominant scale is factored out before LU.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Returns `(det_of_scaled_matrix, log_scale)` so that the true determinant
/// is `det_of_scaled · exp(log_scale)`. A zero row short-circuits to zero.
pub(crate) fn det_row_scaled(mut m: DMatrix<f64>) -> (f64, f64) {
    let n = m.nrows();
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut log_scale = 0.0;
    for i in 0..n {
        let s = (0..n).map(|j| m[(i, j)].abs()).fold(0.0f64, f64::max);
        if s == 0.0 {
            return (0.0, 0.0);
        }
        for j in 0..n {
            m[(i, j)] /= s;
        }
        log_scale += s.ln();
    }
    (m.determinant(), log_scale)
}

pub(crate) fn det_complex(m: DMatrix<Complex64>) -> Complex64 {
    if m.nrows() == 0 {
        return Complex64::new(1.0, 0.0);
    }
    m.determinant()
}
