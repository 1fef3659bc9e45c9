//! Central finite-difference gradient, used as the oracle for every analytic
//! gradient in the crate's test suites.

use crate::error::{Error, Result};

/// Gradient of `f` at `x` by central differences with step `h`:
/// `(f(x + h e_i) - f(x - h e_i)) / (2h)` per coordinate.
pub fn finite_diff_grad<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if h <= 0.0 {
        return Err(Error::domain(format!("step must be positive, got {h}")));
    }
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = f(&probe);
        probe[i] = x[i] - h;
        let fm = f(&probe);
        probe[i] = x[i];
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::numeric(format!(
                "objective non-finite near coordinate {i}: f+={fp}, f-={fm}"
            )));
        }
        grad[i] = (fp - fm) / (2.0 * h);
    }
    Ok(grad)
}
