//! Derivative-free scalar maximization.

use crate::error::{NumericalError, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Maximizer found by [`golden_section_max`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMax {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<ScalarMax>
where
    F: FnMut(f64) -> Result<f64>,
{
    assert!(lo < hi && tol > 0.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut evaluations = 2;
    while b - a > tol {
        if !fc.is_finite() || !fd.is_finite() {
            return Err(NumericalError::NonFinite {
                context: "golden-section objective",
                value: if fc.is_finite() { fd } else { fc },
            }
            .into());
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        evaluations += 1;
    }
    let (x, value) = if fc >= fd { (c, fc) } else { (d, fd) };
    Ok(ScalarMax { x, value, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_vertex() {
        let m = golden_section_max(|x| Ok(-(x - 1.234).powi(2) + 3.0), 0.0, 10.0, 1e-9).unwrap();
        assert!((m.x - 1.234).abs() < 1e-6);
        assert!((m.value - 3.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_maximum_ends_at_the_edge() {
        let m = golden_section_max(|x| Ok(x), 0.0, 1.0, 1e-7).unwrap();
        assert!(1.0 - m.x < 1e-6);
    }

    #[test]
    fn nan_objective_is_an_error() {
        assert!(golden_section_max(|_| Ok(f64::NAN), 0.0, 1.0, 1e-3).is_err());
    }
}
