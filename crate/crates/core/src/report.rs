//! Model-report rendering: a JSON document mirroring the regression-table
//! fields (per-coefficient rows plus a diagnostics block) and a fixed-width
//! text table with significance codes.
//!
//! JSON floats are written with 17 significant digits (lossless for f64 and
//! byte-deterministic); the text rendering uses table-style rounding:
//! scientific with 4 significant digits for estimates and standard errors,
//! 4 decimals for unit-interval statistics, and R-flavoured p-value
//! formatting with the "< 2e-16" floor.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};

use crate::error::{Error, Result};
use crate::regress::{significance_code, AicVariant, OlsFit};
use crate::select::{CvResult, SelectionTrace, StepRecord};

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub p_value: f64,
    pub significance: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsBlock {
    pub residual_standard_error: f64,
    pub n: usize,
    pub df: usize,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub f_statistic: Option<f64>,
    pub f_p_value: Option<f64>,
    pub aic_profile: Option<f64>,
    pub aic_full: Option<f64>,
    pub cv_r_squared: f64,
    pub cv_change: f64,
    pub cv_k: usize,
    pub cv_seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InfluenceFlag {
    pub station_id: String,
    pub reasons: Vec<String>,
}

/// The per-model report: everything the regression tables print.
#[derive(Debug, Clone, Serialize)]
pub struct ModelReport {
    pub model: String,
    pub n: usize,
    pub coefficients: Vec<CoefficientRow>,
    pub diagnostics: DiagnosticsBlock,
    /// Stations flagged by the influence analysis that motivated the hub
    /// dummy, with the rule(s) each row triggered.
    pub influence_flags: Vec<InfluenceFlag>,
}

impl ModelReport {
    pub fn new(
        model: &str,
        fit: &OlsFit,
        cv: &CvResult,
        influence_flags: Vec<InfluenceFlag>,
    ) -> Self {
        let coefficients = fit
            .names()
            .iter()
            .enumerate()
            .map(|(i, name)| CoefficientRow {
                name: name.clone(),
                estimate: fit.beta[i],
                std_error: fit.std_errors[i],
                t_value: fit.t_values[i],
                p_value: fit.p_values[i],
                significance: significance_code(fit.p_values[i]).to_string(),
            })
            .collect();
        let diagnostics = DiagnosticsBlock {
            residual_standard_error: fit.sigma,
            n: fit.n(),
            df: fit.df,
            r_squared: fit.r_squared,
            adj_r_squared: fit.adj_r_squared,
            f_statistic: fit.f_statistic,
            f_p_value: fit.f_p_value,
            aic_profile: fit.aic(AicVariant::Profile).ok(),
            aic_full: fit.aic(AicVariant::Full).ok(),
            cv_r_squared: cv.cv_r2,
            cv_change: cv.change,
            cv_k: cv.k,
            cv_seed: cv.seed,
        };
        ModelReport {
            model: model.to_string(),
            n: fit.n(),
            coefficients,
            diagnostics,
            influence_flags,
        }
    }
}

/// Stepwise trace as exported to selection_trace.json: the pre-hub pass and
/// the final pass including the hub dummy.
#[derive(Debug, Clone, Serialize)]
pub struct SelectionTraceReport {
    pub initial: TraceBlock,
    #[serde(rename = "final")]
    pub final_: TraceBlock,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceBlock {
    pub steps: Vec<StepReport>,
    pub final_variables: Vec<String>,
    pub final_aic_profile: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepReport {
    pub removed: Option<String>,
    pub aic_before: f64,
    pub candidates: Vec<CandidateAic>,
    pub aic_after: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateAic {
    pub variable: String,
    pub aic: f64,
}

impl TraceBlock {
    pub fn from_trace(trace: &SelectionTrace) -> Self {
        TraceBlock {
            steps: trace.steps.iter().map(StepReport::from_record).collect(),
            final_variables: trace.final_variables.clone(),
            final_aic_profile: trace.final_fit.aic(AicVariant::Profile).ok(),
        }
    }
}

impl StepReport {
    fn from_record(step: &StepRecord) -> Self {
        StepReport {
            removed: step.removed.clone(),
            aic_before: step.aic_before,
            candidates: step
                .candidates
                .iter()
                .map(|(variable, aic)| CandidateAic { variable: variable.clone(), aic: *aic })
                .collect(),
            aic_after: step.aic_after,
        }
    }
}

/// Cross-validation block as exported to cv.json.
#[derive(Debug, Clone, Serialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub cv_r_squared: f64,
    pub training_r_squared: f64,
    pub change: f64,
    pub fold_assignment: Vec<usize>,
}

impl CvReport {
    pub fn new(cv: &CvResult) -> Self {
        CvReport {
            k: cv.k,
            seed: cv.seed,
            cv_r_squared: cv.cv_r2,
            training_r_squared: cv.r2,
            change: cv.change,
            fold_assignment: cv.fold_assignment.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// JSON with 17-significant-digit floats

struct SigDigitFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Formatter for SigDigitFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        // 17 significant digits round-trip any finite f64 exactly.
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn end_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_key(writer)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

/// Serialize to pretty JSON with floats at 17 significant digits, ending in
/// a newline.
pub fn to_json(value: &impl Serialize) -> Result<String> {
    let mut out = Vec::new();
    let formatter = SigDigitFormatter { inner: PrettyFormatter::new() };
    let mut ser = Serializer::with_formatter(&mut out, formatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Data(format!("json serialization failed: {e}")))?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| Error::Data(format!("json not utf-8: {e}")))
}

// ---------------------------------------------------------------------------
// Text rendering

/// Scientific notation with 4 significant digits and a signed two-digit
/// exponent: 1333.2 -> "1.333e+03".
pub fn fmt_sci4(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.3e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent format");
    let e: i32 = exp.parse().expect("exponent digits");
    format!("{mantissa}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

/// Round to `digits` significant digits.
fn signif(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let d = x.abs().log10().ceil();
    let mag = 10f64.powf(digits as f64 - d);
    (x * mag).round() / mag
}

/// 4 significant digits in plain notation: 16263.2 -> "16260".
pub fn fmt_signif4(x: f64) -> String {
    format!("{}", signif(x, 4))
}

/// Coefficient p-value: "< 2e-16" floor, scientific with 3 significant
/// digits below 1e-4, fixed 6 decimals otherwise.
pub fn fmt_pval(p: f64) -> String {
    if !p.is_finite() {
        return format!("{p}");
    }
    if p < 2e-16 {
        "< 2e-16".to_string()
    } else if p < 1e-4 {
        let s = format!("{p:.2e}");
        let (mantissa, exp) = s.split_once('e').expect("exponent format");
        let e: i32 = exp.parse().expect("exponent digits");
        format!("{mantissa}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
    } else {
        format!("{p:.6}")
    }
}

/// Model-level (F test) p-value; same shape with the "< 2.2e-16" floor.
pub fn fmt_pval_model(p: f64) -> String {
    if p.is_finite() && p < 2.2e-16 {
        "< 2.2e-16".to_string()
    } else {
        fmt_pval(p)
    }
}

const SIGNIF_LEGEND: &str = "Signif. codes: 0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1";

/// Fixed-width text rendering of a model report.
pub fn render_text(report: &ModelReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("Model: {}\n", report.model));
    out.push_str(&"=".repeat(88));
    out.push('\n');
    out.push_str(&format!(
        "{:<24}{:>12}{:>16}{:>12}{:>12}  {}\n",
        "Explanatory variables", "Estimate", "Standard error", "t(Est/SE)", "Pr(>|t|)", "Significance"
    ));
    for c in &report.coefficients {
        out.push_str(&format!(
            "{:<24}{:>12}{:>16}{:>12}{:>12}  {}\n",
            c.name,
            fmt_sci4(c.estimate),
            fmt_sci4(c.std_error),
            format!("{:.4}", c.t_value),
            fmt_pval(c.p_value),
            c.significance
        ));
    }
    out.push_str(SIGNIF_LEGEND);
    out.push('\n');
    out.push_str(&"-".repeat(88));
    out.push('\n');
    out.push_str("Diagnostic\n");
    let d = &report.diagnostics;
    let f_stat = d.f_statistic.map_or("NA".to_string(), fmt_signif4);
    let f_p = d.f_p_value.map_or("NA".to_string(), fmt_pval_model);
    let aic = d.aic_full.map_or("NA".to_string(), |a| format!("{a:.3}"));
    out.push_str(&format!(
        "{:<34}{:>12}   {:<14}{:>12}\n",
        "Residual standard error",
        fmt_signif4(d.residual_standard_error),
        "n",
        d.n
    ));
    out.push_str(&format!(
        "{:<34}{:>12}   {:<14}{:>12}\n",
        "R-square",
        format!("{:.4}", d.r_squared),
        "DF",
        d.df
    ));
    out.push_str(&format!(
        "{:<34}{:>12}   {:<14}{:>12}\n",
        "Adjusted R-square",
        format!("{:.4}", d.adj_r_squared),
        "F-statistic",
        f_stat
    ));
    out.push_str(&format!(
        "{:<34}{:>12}   {:<14}{:>12}\n",
        format!("{} Fold Cross-Validated R-square", d.cv_k),
        format!("{:.7}", d.cv_r_squared),
        "P-value",
        f_p
    ));
    out.push_str(&format!(
        "{:<34}{:>12}   {:<14}{:>12}\n",
        "Change",
        format!("{:.7}", d.cv_change),
        "AIC",
        aic
    ));
    if !report.influence_flags.is_empty() {
        out.push_str(&"-".repeat(88));
        out.push('\n');
        out.push_str("Influential observations (pre-hub model):\n");
        for flag in &report.influence_flags {
            out.push_str(&format!("  {}: {}\n", flag.station_id, flag.reasons.join("; ")));
        }
    }
    out
}
