//! Variable selection: backward-stepwise elimination by profile AIC, and
//! k-fold cross-validated R-square.
//!
//! Stepwise removal is greedy: at each step every single-variable removal is
//! refitted; the removal attaining the lowest AIC wins if it is strictly
//! below the current AIC, with ties broken toward the earliest column. Equal
//! AIC does not trigger removal. The intercept is never a candidate.
//!
//! Fold assignment is a seeded Fisher-Yates shuffle of row indices (the
//! generator below, not a library RNG, so assignments stay bit-for-bit
//! stable across toolchain upgrades), cut into contiguous near-equal blocks.

use crate::error::{Error, Result};
use crate::regress::{fit_ols, predict, profile_aic_allow_perfect, DesignMatrix, OlsFit};

/// Default shuffle seed for reproducible reports.
pub const DEFAULT_CV_SEED: u64 = 20151012;

/// One stepwise step: the candidate AIC of every single removal, and which
/// removal (if any) was taken. `removed == None` marks the stop step.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub removed: Option<String>,
    pub aic_before: f64,
    /// (variable, AIC of the model with that variable removed), in current
    /// column order.
    pub candidates: Vec<(String, f64)>,
    pub aic_after: f64,
}

/// Ordered record of a backward-stepwise run; the last step is always the
/// stop step.
#[derive(Debug, Clone)]
pub struct SelectionTrace {
    pub steps: Vec<StepRecord>,
    pub final_variables: Vec<String>,
    pub final_fit: OlsFit,
}

/// Backward-stepwise elimination by profile AIC.
pub fn backward_stepwise(design: &DesignMatrix, y: &[f64]) -> Result<SelectionTrace> {
    let mut current = design.clone();
    let mut fit = fit_ols(&current, y)?;
    let mut steps = Vec::new();

    loop {
        let aic_before = profile_aic_allow_perfect(&fit);
        let vars: Vec<String> = current.predictor_names().to_vec();

        let mut candidates = Vec::with_capacity(vars.len());
        let mut best: Option<(f64, DesignMatrix, OlsFit, String)> = None;
        for v in &vars {
            let d2 = current.without(v)?;
            let f2 = fit_ols(&d2, y)?;
            let a2 = profile_aic_allow_perfect(&f2);
            candidates.push((v.clone(), a2));
            // Strict `<` keeps the earliest column on ties.
            if best.as_ref().map_or(true, |(ba, ..)| a2 < *ba) {
                best = Some((a2, d2, f2, v.clone()));
            }
        }

        match best {
            Some((a2, d2, f2, name)) if a2 < aic_before => {
                steps.push(StepRecord {
                    removed: Some(name),
                    aic_before,
                    candidates,
                    aic_after: a2,
                });
                current = d2;
                fit = f2;
            }
            _ => {
                steps.push(StepRecord { removed: None, aic_before, candidates, aic_after: aic_before });
                break;
            }
        }
    }

    Ok(SelectionTrace {
        steps,
        final_variables: current.predictor_names().to_vec(),
        final_fit: fit,
    })
}

/// splitmix64: tiny, well-mixed, and stable forever.
pub(crate) struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }
}

/// Seeded Fisher-Yates permutation of 0..n.
pub fn seeded_shuffle(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = SplitMix64::new(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        idx.swap(i, j);
    }
    idx
}

/// Cross-validation outcome. `change` is computed as `r2 - cv_r2` on the
/// same floats, so the identity holds exactly.
#[derive(Debug, Clone)]
pub struct CvResult {
    pub k: usize,
    pub seed: u64,
    /// Fold index of every row, in row order.
    pub fold_assignment: Vec<usize>,
    pub cv_r2: f64,
    /// Training R-square of the full-data fit.
    pub r2: f64,
    pub change: f64,
}

/// k-fold cross-validated R-square with a seeded, reproducible fold split.
pub fn cross_validated_r2(design: &DesignMatrix, y: &[f64], k: usize, seed: u64) -> Result<CvResult> {
    let n = design.n();
    if y.len() != n {
        return Err(Error::Data(format!("response has {} rows, design has {n}", y.len())));
    }
    if k < 2 {
        return Err(Error::Data(format!("cross-validation needs k >= 2 folds, got {k}")));
    }
    if n < k {
        return Err(Error::Data(format!("cannot split {n} rows into {k} folds")));
    }

    let full_fit = fit_ols(design, y)?;

    let order = seeded_shuffle(n, seed);
    // Contiguous blocks of the shuffled order; the first n % k folds get one
    // extra row, so sizes differ by at most one.
    let base = n / k;
    let extra = n % k;
    let mut fold_assignment = vec![0usize; n];
    let mut bounds = Vec::with_capacity(k + 1);
    bounds.push(0usize);
    for f in 0..k {
        let size = base + usize::from(f < extra);
        bounds.push(bounds[f] + size);
    }
    for f in 0..k {
        for &row in &order[bounds[f]..bounds[f + 1]] {
            fold_assignment[row] = f;
        }
    }

    let mean_y: f64 = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum();
    let mut sse = 0.0;
    for f in 0..k {
        let test: &[usize] = &order[bounds[f]..bounds[f + 1]];
        let mut train = Vec::with_capacity(n - test.len());
        train.extend_from_slice(&order[..bounds[f]]);
        train.extend_from_slice(&order[bounds[f + 1]..]);

        let d_train = design.subset_rows(&train)?;
        let y_train: Vec<f64> = train.iter().map(|&r| y[r]).collect();
        let fit = fit_ols(&d_train, &y_train).map_err(|e| match e {
            Error::Numeric(msg) => Error::Numeric(format!("fold {f}: {msg}")),
            other => other,
        })?;

        let d_test = design.subset_rows(test)?;
        let pred = predict(&fit, &d_test)?;
        for (row, p) in test.iter().zip(pred) {
            let e = y[*row] - p;
            sse += e * e;
        }
    }

    let cv_r2 = 1.0 - sse / tss;
    let r2 = full_fit.r_squared;
    Ok(CvResult { k, seed, fold_assignment, cv_r2, r2, change: r2 - cv_r2 })
}
