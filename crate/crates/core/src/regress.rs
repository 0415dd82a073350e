//! Ordinary least squares with full inferential output: coefficients,
//! standard errors, t statistics, two-sided p-values, significance codes,
//! R-square, adjusted R-square, F statistic, residual standard error, hat
//! diagonal, and two AIC variants.
//!
//! The solve path is Householder QR with column pivoting (`linalg`); the
//! explicit normal-equations route exists only as an independent oracle in
//! the test suites.

use crate::dist::{f_p_upper, student_t_p_two_sided};
use crate::error::{Error, Result};
use crate::linalg::{mat_vec, ColPivQr};

/// A column is declared linearly dependent when its rank-revealing diagonal
/// falls below this ratio of the largest diagonal.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Design matrix with a leading intercept column of ones.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    /// Column names; names[0] is always "Intercept".
    names: Vec<String>,
    n: usize,
    /// Column-major storage including the intercept column.
    cols: Vec<Vec<f64>>,
}

impl DesignMatrix {
    /// Build from predictor columns; the intercept is prepended. The fitting
    /// requirement n > k+1 is enforced by `fit_ols`, not here, so prediction
    /// matrices with few rows remain constructible.
    pub fn with_intercept(names: Vec<String>, cols: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != cols.len() {
            return Err(Error::Data(format!(
                "{} column names for {} columns",
                names.len(),
                cols.len()
            )));
        }
        let n = match cols.first() {
            Some(c) => c.len(),
            None => {
                return Err(Error::Data(
                    "no predictor columns; use intercept_only for the null model".to_string(),
                ))
            }
        };
        Self::build(names, cols, n)
    }

    /// The intercept-only (null) design with `n` rows.
    pub fn intercept_only(n: usize) -> Result<Self> {
        Self::build(Vec::new(), Vec::new(), n)
    }

    fn build(names: Vec<String>, cols: Vec<Vec<f64>>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Data("design matrix needs at least one row".to_string()));
        }
        let mut seen = std::collections::HashSet::new();
        seen.insert("Intercept".to_string());
        for (name, col) in names.iter().zip(&cols) {
            if col.len() != n {
                return Err(Error::Data(format!(
                    "column '{name}' has {} rows, expected {n}",
                    col.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("column '{name}' contains a non-finite entry")));
            }
            if !seen.insert(name.clone()) {
                return Err(Error::Data(format!("duplicate column name '{name}'")));
            }
        }
        let mut all_names = Vec::with_capacity(names.len() + 1);
        all_names.push("Intercept".to_string());
        all_names.extend(names);
        let mut all_cols = Vec::with_capacity(cols.len() + 1);
        all_cols.push(vec![1.0; n]);
        all_cols.extend(cols);
        Ok(DesignMatrix { names: all_names, n, cols: all_cols })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of predictors, excluding the intercept.
    pub fn k(&self) -> usize {
        self.cols.len() - 1
    }

    /// All column names, intercept first.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn predictor_names(&self) -> &[String] {
        &self.names[1..]
    }

    pub(crate) fn columns(&self) -> &[Vec<f64>] {
        &self.cols
    }

    /// Copy without one predictor column.
    pub fn without(&self, name: &str) -> Result<DesignMatrix> {
        let idx = self.names[1..]
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Data(format!("no predictor named '{name}'")))?;
        let names: Vec<String> =
            self.names[1..].iter().enumerate().filter(|(i, _)| *i != idx).map(|(_, n)| n.clone()).collect();
        let cols: Vec<Vec<f64>> =
            self.cols[1..].iter().enumerate().filter(|(i, _)| *i != idx).map(|(_, c)| c.clone()).collect();
        let n = self.n;
        Self::build(names, cols, n)
    }

    /// Copy keeping only the given rows, in the given order.
    pub fn subset_rows(&self, rows: &[usize]) -> Result<DesignMatrix> {
        let names: Vec<String> = self.names[1..].to_vec();
        let cols: Vec<Vec<f64>> = self.cols[1..]
            .iter()
            .map(|c| rows.iter().map(|&r| c[r]).collect())
            .collect();
        Self::build(names, cols, rows.len())
    }
}

/// AIC variants exposed by the toolkit. Stepwise selection uses `Profile`;
/// at fixed n the two differ by the constant n ln(2 pi) + n + 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AicVariant {
    /// n ln(RSS/n) + 2 (k+1)
    Profile,
    /// n ln(2 pi RSS/n) + n + 2 (k+2): the full Gaussian log-likelihood
    /// form, counting the error variance as a parameter.
    Full,
}

/// A fitted OLS model.
#[derive(Debug, Clone)]
pub struct OlsFit {
    names: Vec<String>,
    n: usize,
    k: usize,
    pub beta: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub tss: f64,
    /// Residual standard error s = sqrt(RSS / (n-k-1)).
    pub sigma: f64,
    /// Residual degrees of freedom, n - k - 1.
    pub df: usize,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    /// F statistic with (k, n-k-1) degrees of freedom; absent for the
    /// intercept-only model.
    pub f_statistic: Option<f64>,
    pub f_p_value: Option<f64>,
    /// Hat-matrix diagonal.
    pub hat: Vec<f64>,
}

impl OlsFit {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Column names, intercept first.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.beta[i])
    }

    pub fn aic(&self, variant: AicVariant) -> Result<f64> {
        aic(self, variant)
    }
}

/// Simple-regression significance codes for a two-sided p-value.
pub fn significance_code(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else if p < 0.1 {
        "."
    } else {
        " "
    }
}

/// Fit ordinary least squares of y on the design matrix.
pub fn fit_ols(design: &DesignMatrix, y: &[f64]) -> Result<OlsFit> {
    let n = design.n();
    let k = design.k();
    if y.len() != n {
        return Err(Error::Data(format!("response has {} rows, design has {n}", y.len())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("response contains a non-finite entry".to_string()));
    }
    if n <= k + 1 {
        return Err(Error::Numeric(format!(
            "need n > k+1 observations: n = {n}, k+1 = {}",
            k + 1
        )));
    }

    let qr = ColPivQr::factor(design.columns());
    let dependent = qr.dependent_columns(RANK_TOLERANCE);
    if !dependent.is_empty() {
        let names: Vec<&str> = dependent.iter().map(|&j| design.names()[j].as_str()).collect();
        return Err(Error::Numeric(format!(
            "design matrix is rank deficient; dependent columns: {}",
            names.join(", ")
        )));
    }

    let beta = qr.solve(y);
    let fitted = mat_vec(design.columns(), &beta);
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(yi, fi)| yi - fi).collect();
    let mut rss: f64 = residuals.iter().map(|e| e * e).sum();
    // An exact fit leaves only rounding dust in the residuals; snap it to
    // zero so RSS = 0 and R-square = 1 hold exactly on exact data.
    let scale: f64 = y.iter().map(|v| v * v).sum();
    if rss <= 1e-24 * scale {
        rss = 0.0;
    }
    let mean_y: f64 = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum();

    let df = n - k - 1;
    let sigma2 = rss / df as f64;
    let sigma = sigma2.sqrt();

    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / df as f64;

    let xtx_inv = qr.xtx_inverse();
    let std_errors: Vec<f64> = (0..=k).map(|j| sigma * xtx_inv[j][j].sqrt()).collect();
    let t_values: Vec<f64> = beta.iter().zip(&std_errors).map(|(b, se)| b / se).collect();
    let p_values: Vec<f64> =
        t_values.iter().map(|&t| student_t_p_two_sided(t, df as f64)).collect();

    let (f_statistic, f_p_value) = if k >= 1 {
        let f = ((tss - rss) / k as f64) / sigma2;
        (Some(f), Some(f_p_upper(f, k as f64, df as f64)))
    } else {
        (None, None)
    };

    let hat = qr.hat_diagonal();

    Ok(OlsFit {
        names: design.names().to_vec(),
        n,
        k,
        beta,
        std_errors,
        t_values,
        p_values,
        fitted,
        residuals,
        rss,
        tss,
        sigma,
        df,
        r_squared,
        adj_r_squared,
        f_statistic,
        f_p_value,
        hat,
    })
}

/// Predict responses for new rows; the design's columns must match the fit's
/// columns by name and order.
pub fn predict(fit: &OlsFit, x_new: &DesignMatrix) -> Result<Vec<f64>> {
    if x_new.names() != fit.names() {
        return Err(Error::Data(format!(
            "column mismatch: fit has {:?}, new design has {:?}",
            fit.names(),
            x_new.names()
        )));
    }
    Ok(mat_vec(x_new.columns(), &fit.beta))
}

/// Akaike information criterion of a fit.
pub fn aic(fit: &OlsFit, variant: AicVariant) -> Result<f64> {
    if fit.rss <= 0.0 {
        return Err(Error::Numeric(
            "AIC undefined: residual sum of squares is zero (log of zero)".to_string(),
        ));
    }
    let n = fit.n as f64;
    let p = fit.k as f64 + 1.0;
    Ok(match variant {
        AicVariant::Profile => n * (fit.rss / n).ln() + 2.0 * p,
        AicVariant::Full => {
            n * (2.0 * std::f64::consts::PI * fit.rss / n).ln() + n + 2.0 * (p + 1.0)
        }
    })
}

/// Profile AIC that tolerates a perfect fit, for selection loops: RSS = 0
/// maps to negative infinity (the best possible score) instead of an error.
pub(crate) fn profile_aic_allow_perfect(fit: &OlsFit) -> f64 {
    if fit.rss <= 0.0 {
        f64::NEG_INFINITY
    } else {
        let n = fit.n as f64;
        n * (fit.rss / n).ln() + 2.0 * (fit.k as f64 + 1.0)
    }
}
