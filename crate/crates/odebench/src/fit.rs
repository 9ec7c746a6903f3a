//! Least-squares order fits on `(log h, log error)`.

use crate::error::{BenchError, BenchResult};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub r2: f64,
    pub rows_used: usize,
}

/// Ordinary least squares slope of `log(error)` against `log(h)`.
pub fn order_fit(rows: &[(f64, f64)]) -> BenchResult<OrderFit> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|(h, e)| *h > 0.0 && *e > 0.0 && h.is_finite() && e.is_finite())
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(BenchError::InsufficientRows { usable: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(BenchError::InsufficientRows { usable: 1 });
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(OrderFit {
        slope,
        r2,
        rows_used: pts.len(),
    })
}

/// Keeps rows with error in `(1e2 * reference_tol, 1e-1)`.
pub fn usable_rows(rows: &[(f64, f64)], reference_tol: f64) -> Vec<(f64, f64)> {
    rows.iter()
        .copied()
        .filter(|&(_, e)| e > 1e2 * reference_tol && e < 1e-1)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ladder() -> Vec<f64> {
        [20.0, 40.0, 80.0, 160.0, 320.0].iter().map(|n| 0.3 / n).collect()
    }

    #[test]
    fn exact_power_law() {
        let rows: Vec<_> = ladder().into_iter().map(|h| (h, 3.0 * h.powi(4))).collect();
        let f = order_fit(&rows).unwrap();
        assert!((f.slope - 4.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert_eq!(f.rows_used, 5);
    }

    #[test]
    fn floor_rows_are_excluded() {
        let hs: Vec<f64> = (0..10).map(|k| 0.1 / 2f64.powi(k)).collect();
        let rows: Vec<_> = hs.iter().map(|&h| (h, 5.0 * h.powi(4) + 1e-14)).collect();
        let kept = usable_rows(&rows, 1e-13);
        assert!(kept.len() < rows.len());
        let f = order_fit(&kept).unwrap();
        assert!((f.slope - 4.0).abs() < 0.05, "slope {}", f.slope);
    }

    #[test]
    fn two_rows_are_insufficient() {
        let rows = [(0.1, 1e-4), (0.05, 1e-5)];
        assert!(matches!(order_fit(&rows), Err(BenchError::InsufficientRows { usable: 2 })));
    }

    #[test]
    fn degenerate_h_is_insufficient() {
        let rows = [(0.1, 1e-4), (0.1, 1e-5), (0.1, 1e-6)];
        assert!(order_fit(&rows).is_err());
    }

    proptest! {
        #[test]
        fn recovers_any_power(p in 0.5f64..6.0, c in 1e-3f64..1e3) {
            let rows: Vec<_> = ladder().into_iter().map(|h| (h, c * h.powf(p))).collect();
            let f = order_fit(&rows).unwrap();
            prop_assert!((f.slope - p).abs() < 1e-10);
        }

        #[test]
        fn slope_is_scale_invariant(p in 1.0f64..5.0, s in 1e-3f64..1e3) {
            let rows: Vec<_> = ladder().into_iter().enumerate()
                .map(|(i, h)| (h, h.powf(p) * (1.0 + 0.1 * (i as f64).sin()))).collect();
            let scaled: Vec<_> = rows.iter().map(|&(h, e)| (h, s * e)).collect();
            let a = order_fit(&rows).unwrap();
            let b = order_fit(&scaled).unwrap();
            prop_assert!((a.slope - b.slope).abs() < 1e-9);
            prop_assert!(a.r2 <= 1.0 + 1e-12);
        }
    }
}
