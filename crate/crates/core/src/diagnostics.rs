//! Influence analysis: leverage, studentized residuals, Cook's distance,
//! influence-plot data, and the transportation-hub dummy that the analysis
//! motivates.
//!
//! With h = leverage, e = residual, s = residual standard error, p = k+1:
//!   internal  r = e / (s sqrt(1-h))
//!   external  t = r sqrt((n-p-1) / (n-p-r^2))
//!   Cook's    D = r^2 h / (p (1-h))
//! A row with exact leverage 1 fits itself; its Cook's distance is reported
//! as +infinity and the row is flagged with a dedicated reason.

use std::path::Path;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::ingest::fmt_f64;
use crate::regress::OlsFit;

#[derive(Debug, Clone)]
pub struct InfluenceRow {
    /// Station id, or the 1-based observation number when unlabeled.
    pub label: String,
    pub leverage: f64,
    pub internally_studentized: f64,
    pub externally_studentized: f64,
    pub cooks_distance: f64,
    pub flagged: bool,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct InfluenceReport {
    pub rows: Vec<InfluenceRow>,
    pub n: usize,
    pub k: usize,
}

/// Flagging cutoffs. `conventional` gives D > 4/n, |t| > 2, h > 2(k+1)/n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlagThresholds {
    pub cooks: f64,
    pub abs_t: f64,
    pub leverage: f64,
}

impl FlagThresholds {
    pub fn conventional(n: usize, k: usize) -> Self {
        FlagThresholds {
            cooks: 4.0 / n as f64,
            abs_t: 2.0,
            leverage: 2.0 * (k as f64 + 1.0) / n as f64,
        }
    }
}

/// Influence measures with observations labeled 1..n.
pub fn influence_measures(fit: &OlsFit) -> Result<InfluenceReport> {
    let labels: Vec<String> = (1..=fit.n()).map(|i| i.to_string()).collect();
    influence_measures_labeled(fit, &labels)
}

/// Influence measures with caller-supplied row labels (station ids).
pub fn influence_measures_labeled(fit: &OlsFit, labels: &[String]) -> Result<InfluenceReport> {
    let n = fit.n();
    let k = fit.k();
    if labels.len() != n {
        return Err(Error::Data(format!("{} labels for {n} observations", labels.len())));
    }
    if fit.df < 2 {
        return Err(Error::Numeric(format!(
            "influence measures need n - k - 1 >= 2 residual degrees of freedom, got {}",
            fit.df
        )));
    }

    let p = k as f64 + 1.0;
    let nf = n as f64;
    let s = fit.sigma;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let h = fit.hat[i];
        let e = fit.residuals[i];

        let (r, t, d, reasons) = if h >= 1.0 {
            // The observation determines its own fit exactly: e = 0, 1-h = 0.
            (
                0.0,
                0.0,
                f64::INFINITY,
                vec!["leverage is exactly 1; Cook's distance undefined (reported +inf)".to_string()],
            )
        } else if s == 0.0 {
            // Perfect fit: every residual is zero, nothing is influential.
            (0.0, 0.0, 0.0, Vec::new())
        } else {
            let r = e / (s * (1.0 - h).sqrt());
            let denom = nf - p - r * r;
            // r^2 <= n-p algebraically; guard the boundary where the
            // observation carries all residual variation.
            let t = if denom > 0.0 {
                r * ((nf - p - 1.0) / denom).sqrt()
            } else {
                f64::INFINITY * r.signum()
            };
            let d = r * r * h / (p * (1.0 - h));
            (r, t, d, Vec::new())
        };

        let flagged = !reasons.is_empty();
        rows.push(InfluenceRow {
            label: labels[i].clone(),
            leverage: h,
            internally_studentized: r,
            externally_studentized: t,
            cooks_distance: d,
            flagged,
            reasons,
        });
    }
    Ok(InfluenceReport { rows, n, k })
}

/// Apply flagging rules, rebuilding every row's reasons, and return the
/// labels of flagged observations in row order.
pub fn flag_influential(report: &mut InfluenceReport, thresholds: &FlagThresholds) -> Vec<String> {
    let mut flagged_labels = Vec::new();
    for row in &mut report.rows {
        let mut reasons = Vec::new();
        if row.cooks_distance.is_infinite() {
            reasons.push("leverage is exactly 1; Cook's distance undefined (reported +inf)".to_string());
        }
        if row.cooks_distance > thresholds.cooks {
            reasons.push(format!("cooks_distance > {}", fmt_f64(thresholds.cooks)));
        }
        if row.externally_studentized.abs() > thresholds.abs_t {
            reasons.push(format!("|studentized_residual| > {}", fmt_f64(thresholds.abs_t)));
        }
        if row.leverage > thresholds.leverage {
            reasons.push(format!("leverage > {}", fmt_f64(thresholds.leverage)));
        }
        row.flagged = !reasons.is_empty();
        row.reasons = reasons;
        if row.flagged {
            flagged_labels.push(row.label.clone());
        }
    }
    flagged_labels
}

/// One exported influence-plot point: leverage on x, externally studentized
/// residual on y, Cook's distance as bubble size.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluencePlotRow {
    pub label: String,
    pub leverage: f64,
    pub studentized_residual: f64,
    pub cooks_distance: f64,
    pub flag: u8,
}

pub fn influence_plot_data(report: &InfluenceReport) -> Vec<InfluencePlotRow> {
    report
        .rows
        .iter()
        .map(|r| InfluencePlotRow {
            label: r.label.clone(),
            leverage: r.leverage,
            studentized_residual: r.externally_studentized,
            cooks_distance: r.cooks_distance,
            flag: u8::from(r.flagged),
        })
        .collect()
}

pub fn save_influence_csv(report: &InfluenceReport, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .from_path(path)
        .map_err(|e| Error::parse(path, None, e.to_string()))?;
    w.write_record(["station_id", "leverage", "studentized_residual", "cooks_distance", "flag"])
        .map_err(|e| Error::parse(path, None, e.to_string()))?;
    for r in influence_plot_data(report) {
        w.write_record([
            r.label.as_str(),
            &fmt_f64(r.leverage),
            &fmt_f64(r.studentized_residual),
            &fmt_f64(r.cooks_distance),
            &r.flag.to_string(),
        ])
        .map_err(|e| Error::parse(path, None, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Io { path: path.into(), source: e })
}

/// Set the Trans_hub column to 1 for the given stations and 0 elsewhere.
/// Idempotent; unknown ids are an error.
pub fn add_hub_dummy(matrix: &FeatureMatrix, hub_ids: &[String]) -> Result<FeatureMatrix> {
    for id in hub_ids {
        if !matrix.station_ids().contains(id) {
            return Err(Error::Data(format!("hub id '{id}' is not a station")));
        }
    }
    let values: Vec<f64> = matrix
        .station_ids()
        .iter()
        .map(|s| if hub_ids.contains(s) { 1.0 } else { 0.0 })
        .collect();
    let mut out = matrix.clone();
    out.set_column_values("Trans_hub", values)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureColumn, Transform};
    use crate::regress::{fit_ols, DesignMatrix};

    fn design(names: &[&str], cols: Vec<Vec<f64>>) -> DesignMatrix {
        DesignMatrix::with_intercept(names.iter().map(|s| s.to_string()).collect(), cols).unwrap()
    }

    #[test]
    fn balanced_design_has_equal_leverage() {
        // Three mutually orthogonal +/-1 columns on 8 rows: every row has
        // h = (k+1)/n = 4/8.
        let a = vec![1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0];
        let b = vec![1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        let c = vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let d = design(&["a", "b", "c"], vec![a, b, c]);
        let y = vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let fit = fit_ols(&d, &y).unwrap();
        let report = influence_measures(&fit).unwrap();
        for row in &report.rows {
            assert!((row.leverage - 0.5).abs() < 1e-12, "h = {}", row.leverage);
        }
    }

    #[test]
    fn external_studentization_matches_leave_one_out_sigma() {
        let mut state: u64 = 31;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let n = 25;
        let x: Vec<f64> = (0..n).map(|_| next() * 4.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.0 + 2.0 * v + (next() - 0.5)).collect();
        let d = design(&["x"], vec![x]);
        let fit = fit_ols(&d, &y).unwrap();
        let report = influence_measures(&fit).unwrap();

        // t_i computed directly from the deleted-variance identity
        // RSS_(i) = RSS - e^2/(1-h), s_(i)^2 = RSS_(i)/(n-p-1).
        let p = 2.0;
        for (i, row) in report.rows.iter().enumerate() {
            let e = fit.residuals[i];
            let h = fit.hat[i];
            let rss_i = fit.rss - e * e / (1.0 - h);
            let s_i = (rss_i / (n as f64 - p - 1.0)).sqrt();
            let t_direct = e / (s_i * (1.0 - h).sqrt());
            assert!(
                (row.externally_studentized - t_direct).abs() <= 1e-12 * t_direct.abs().max(1.0),
                "row {i}: {} vs {t_direct}",
                row.externally_studentized
            );
        }
    }

    #[test]
    fn zero_residual_fit_flags_nothing() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let d = design(&["x"], vec![x]);
        let fit = fit_ols(&d, &y).unwrap();
        let mut report = influence_measures(&fit).unwrap();
        let flagged = flag_influential(&mut report, &FlagThresholds::conventional(10, 1));
        assert!(flagged.is_empty(), "{flagged:?}");
        for row in &report.rows {
            assert_eq!(row.cooks_distance, 0.0);
            assert!(!row.flagged && row.reasons.is_empty());
        }
    }

    #[test]
    fn infinite_thresholds_flag_nothing() {
        let x = vec![0.0, 1.0, 2.0, 3.0, 4.0, 20.0];
        let mut y: Vec<f64> = x.iter().map(|v| v + 1.0).collect();
        y[5] += 30.0;
        let d = design(&["x"], vec![x]);
        let fit = fit_ols(&d, &y).unwrap();
        let mut report = influence_measures(&fit).unwrap();
        let th = FlagThresholds { cooks: f64::INFINITY, abs_t: f64::INFINITY, leverage: f64::INFINITY };
        assert!(flag_influential(&mut report, &th).is_empty());
    }

    #[test]
    fn gross_outlier_is_flagged_with_reasons() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let mut y: Vec<f64> = x.iter().map(|v| 3.0 * v + 2.0).collect();
        // Small noise so the fit is not exact, then one gross outlier.
        for (i, v) in y.iter_mut().enumerate() {
            *v += ((i * 7919) % 13) as f64 * 0.01;
        }
        y[10] += 500.0;
        let d = design(&["x"], vec![x]);
        let fit = fit_ols(&d, &y).unwrap();
        let mut report = influence_measures(&fit).unwrap();
        let flagged = flag_influential(&mut report, &FlagThresholds::conventional(20, 1));
        assert!(flagged.contains(&"11".to_string()), "{flagged:?}");
        let row = &report.rows[10];
        assert!(row.flagged && !row.reasons.is_empty());
        // Flagging twice with the same thresholds is stable.
        let again = flag_influential(&mut report, &FlagThresholds::conventional(20, 1));
        assert_eq!(again, flagged);
    }

    #[test]
    fn plot_data_rejoins_report_fields() {
        let x: Vec<f64> = (0..12).map(|i| (i as f64).sin() + i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v * 2.0 + (v * 3.0).cos()).collect();
        let d = design(&["x"], vec![x]);
        let fit = fit_ols(&d, &y).unwrap();
        let mut report = influence_measures(&fit).unwrap();
        flag_influential(&mut report, &FlagThresholds::conventional(12, 1));
        let plot = influence_plot_data(&report);
        assert_eq!(plot.len(), 12);
        for (p, r) in plot.iter().zip(&report.rows) {
            assert_eq!(p.leverage, r.leverage);
            assert_eq!(p.studentized_residual, r.externally_studentized);
            assert_eq!(p.cooks_distance, r.cooks_distance);
            assert_eq!(p.flag == 1, r.flagged);
        }
    }

    fn toy_matrix() -> FeatureMatrix {
        FeatureMatrix::new(
            vec!["A".into(), "B".into(), "C".into()],
            vec![FeatureColumn {
                name: "Trans_hub".into(),
                values: vec![0.0, 0.0, 0.0],
                transform: Transform::Identity,
            }],
        )
        .unwrap()
    }

    #[test]
    fn hub_dummy_sets_exactly_the_named_stations() {
        let m = toy_matrix();
        let out = add_hub_dummy(&m, &["B".to_string()]).unwrap();
        assert_eq!(out.column("Trans_hub").unwrap().values, vec![0.0, 1.0, 0.0]);
        // Idempotent.
        let out2 = add_hub_dummy(&out, &["B".to_string()]).unwrap();
        assert_eq!(out, out2);
        // Empty set clears the column.
        let cleared = add_hub_dummy(&out, &[]).unwrap();
        assert_eq!(cleared.column("Trans_hub").unwrap().values, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn hub_dummy_rejects_unknown_station() {
        let m = toy_matrix();
        assert!(add_hub_dummy(&m, &["Z".to_string()]).is_err());
    }
}
