//! Calibration of the positional impact curve from injection sweep data.
//!
//! The exponential `I(k) = w_a * exp(alpha * x)` is linear in log space, so
//! the fit is an ordinary least-squares regression of `ln(drop_rate)` on the
//! form's exponent argument: `x = k / K` for the normalized form, `x = k - 1`
//! for the absolute-position form. The intercept recovers `ln(w_a)` and the
//! slope recovers `alpha`; the sign of `alpha` is unconstrained.

use serde::{Deserialize, Serialize};

use crate::config::{DropNormalization, ImpactForm, ImpactParams};
use crate::error::{Error, Result};
use crate::injector::SweepRow;

/// One observed failure rate at a chain position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropPoint {
    pub k: usize,
    pub total_steps: usize,
    /// Fraction of runs lost to the injected error, in (0, 1].
    pub drop_rate: f64,
}

impl DropPoint {
    fn x(&self, form: ImpactForm) -> f64 {
        match form {
            ImpactForm::Normalized => self.k as f64 / self.total_steps as f64,
            ImpactForm::Appendix => (self.k - 1) as f64,
        }
    }
}

/// Sweep observations plus the curve fitted to them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DropCurve {
    pub points: Vec<DropPoint>,
    /// How sweep accuracy drops were turned into rates.
    pub normalization: DropNormalization,
    pub fitted: ImpactParams,
    /// Sum of squared log-space residuals; non-negative.
    pub residual: f64,
    /// Points kept after excluding non-positive rates.
    pub n_points: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub excluded: Vec<String>,
}

/// Converts aggregate sweep rows into fit points. Normalized mode divides the
/// drop by the group's baseline accuracy; absolute mode divides by 100.
pub fn rows_to_points(rows: &[SweepRow], normalization: DropNormalization) -> Vec<DropPoint> {
    rows.iter()
        .map(|r| {
            let denom = match normalization {
                DropNormalization::Normalized => r.ori_acc,
                DropNormalization::Absolute => 100.0,
            };
            DropPoint {
                k: r.err_step,
                total_steps: r.all_steps,
                drop_rate: if denom > 0.0 { r.drop / denom } else { 0.0 },
            }
        })
        .collect()
}

/// Least-squares fit in log space.
///
/// Points with non-positive drop rates are excluded (each with a diagnostic);
/// at least two surviving points with distinct exponent arguments are
/// required.
pub fn fit_positional_impact(
    points: &[DropPoint],
    form: ImpactForm,
) -> Result<(ImpactParams, f64, usize, Vec<String>)> {
    let mut excluded = Vec::new();
    let usable: Vec<&DropPoint> = points
        .iter()
        .filter(|p| {
            if p.drop_rate > 0.0 {
                true
            } else {
                excluded.push(format!(
                    "point (k={}, K={}) has non-positive drop rate {}",
                    p.k, p.total_steps, p.drop_rate
                ));
                false
            }
        })
        .collect();
    if usable.len() < 2 {
        return Err(Error::Fit(format!(
            "need at least 2 usable points, have {}",
            usable.len()
        )));
    }
    let xs: Vec<f64> = usable.iter().map(|p| p.x(form)).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.drop_rate.ln()).collect();
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit(
            "all points share the same position argument (rank-deficient)".into(),
        ));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let alpha = sxy / sxx;
    let intercept = y_mean - alpha * x_mean;
    let w_a = intercept.exp();
    let residual: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + alpha * x)).powi(2))
        .sum();
    let params = ImpactParams::new(w_a, alpha, form)?;
    Ok((params, residual, usable.len(), excluded))
}

/// Full calibration: rows to points, fit, and curve assembly.
pub fn calibrate(
    rows: &[SweepRow],
    form: ImpactForm,
    normalization: DropNormalization,
) -> Result<DropCurve> {
    let points = rows_to_points(rows, normalization);
    let (fitted, residual, n_points, excluded) = fit_positional_impact(&points, form)?;
    Ok(DropCurve {
        points,
        normalization,
        fitted,
        residual,
        n_points,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::injector::InjectionKind;
    use crate::scoring::positional_impact;

    fn synthetic_points(w_a: f64, alpha: f64, form: ImpactForm, total: usize) -> Vec<DropPoint> {
        (1..=total)
            .map(|k| DropPoint {
                k,
                total_steps: total,
                drop_rate: positional_impact(k, total, &ImpactParams { w_a, alpha, form }),
            })
            .collect()
    }

    #[test]
    fn recovers_noiseless_parameters_exactly() {
        for form in [ImpactForm::Normalized, ImpactForm::Appendix] {
            let points = synthetic_points(0.3, 1.2, form, 5);
            let (params, residual, n, excluded) =
                fit_positional_impact(&points, form).unwrap();
            assert!((params.w_a - 0.3).abs() / 0.3 < 1e-9, "w_a={}", params.w_a);
            assert!((params.alpha - 1.2).abs() / 1.2 < 1e-9);
            assert!(residual <= 1e-10);
            assert_eq!(n, 5);
            assert!(excluded.is_empty());
        }
    }

    #[test]
    fn fits_paper_style_numeric_drop_rates_with_positive_slope() {
        // absolute drops 14.64, 29.56, 51.69 points as rates at k/K = 2/4, 3/4, 4/4
        let points = vec![
            DropPoint { k: 2, total_steps: 4, drop_rate: 0.1464 },
            DropPoint { k: 3, total_steps: 4, drop_rate: 0.2956 },
            DropPoint { k: 4, total_steps: 4, drop_rate: 0.5169 },
        ];
        for form in [ImpactForm::Normalized, ImpactForm::Appendix] {
            let (params, _, n, _) = fit_positional_impact(&points, form).unwrap();
            assert!(params.alpha > 0.0, "late positions must fit a rising curve");
            assert_eq!(n, 3);
        }
        // fitted curve is monotone increasing over the observed positions
        let (params, _, _, _) =
            fit_positional_impact(&points, ImpactForm::Normalized).unwrap();
        let values: Vec<f64> = (2..=4).map(|k| positional_impact(k, 4, &params)).collect();
        assert!(values[0] < values[1] && values[1] < values[2]);
    }

    #[test]
    fn identical_positions_are_rank_deficient() {
        let points = vec![
            DropPoint { k: 3, total_steps: 4, drop_rate: 0.2 },
            DropPoint { k: 3, total_steps: 4, drop_rate: 0.4 },
        ];
        assert!(matches!(
            fit_positional_impact(&points, ImpactForm::Normalized),
            Err(Error::Fit(_))
        ));
    }

    #[test]
    fn non_positive_rates_are_excluded_with_diagnostics() {
        let mut points = synthetic_points(0.3, 1.0, ImpactForm::Normalized, 4);
        points.push(DropPoint {
            k: 5,
            total_steps: 5,
            drop_rate: 0.0,
        });
        let (_, _, n, excluded) =
            fit_positional_impact(&points, ImpactForm::Normalized).unwrap();
        assert_eq!(n, 4);
        assert_eq!(excluded.len(), 1);

        let all_zero = vec![
            DropPoint { k: 1, total_steps: 2, drop_rate: 0.0 },
            DropPoint { k: 2, total_steps: 2, drop_rate: -0.1 },
        ];
        assert!(matches!(
            fit_positional_impact(&all_zero, ImpactForm::Normalized),
            Err(Error::Fit(_))
        ));
    }

    #[test]
    fn row_conversion_honors_normalization() {
        let rows = vec![SweepRow {
            all_steps: 4,
            err_step: 4,
            kind: InjectionKind::Numeric,
            ori_acc: 95.75,
            fin_acc: 44.06,
            drop: 51.69,
        }];
        let normalized = rows_to_points(&rows, DropNormalization::Normalized);
        assert!((normalized[0].drop_rate - 51.69 / 95.75).abs() < 1e-12);
        let absolute = rows_to_points(&rows, DropNormalization::Absolute);
        assert!((absolute[0].drop_rate - 0.5169).abs() < 1e-12);
    }
}
