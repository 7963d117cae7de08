//! Ordinary least squares with coefficient inference and backward elimination.
//!
//! Fits go through a Householder QR factorization of the design matrix rather
//! than the normal equations: step counts sit around 10^4, so forming `X'X`
//! squares values to 10^8 and throws away half the available precision.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Row-major design matrix with named feature columns.
///
/// The intercept is not stored as a column; `has_intercept` adds it at fit
/// time.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    values: Vec<f64>,
    targets: Vec<f64>,
    feature_names: Vec<String>,
    has_intercept: bool,
}

impl DesignMatrix {
    /// Empty design with the given columns.
    pub fn new(feature_names: Vec<String>, has_intercept: bool) -> Self {
        DesignMatrix {
            values: Vec::new(),
            targets: Vec::new(),
            feature_names,
            has_intercept,
        }
    }

    pub fn with_capacity(feature_names: Vec<String>, has_intercept: bool, rows: usize) -> Self {
        let width = feature_names.len();
        DesignMatrix {
            values: Vec::with_capacity(rows * width),
            targets: Vec::with_capacity(rows),
            feature_names,
            has_intercept,
        }
    }

    pub fn from_rows(
        rows: &[Vec<f64>],
        targets: &[f64],
        feature_names: Vec<String>,
        has_intercept: bool,
    ) -> Result<Self> {
        if rows.len() != targets.len() {
            return Err(Error::Dimension {
                expected: rows.len(),
                got: targets.len(),
            });
        }
        let mut design = Self::with_capacity(feature_names, has_intercept, rows.len());
        for (row, &y) in rows.iter().zip(targets) {
            design.push_row(row, y)?;
        }
        Ok(design)
    }

    pub fn push_row(&mut self, features: &[f64], target: f64) -> Result<()> {
        if features.len() != self.feature_names.len() {
            return Err(Error::Dimension {
                expected: self.feature_names.len(),
                got: features.len(),
            });
        }
        self.values.extend_from_slice(features);
        self.targets.push(target);
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Number of estimated parameters, counting the intercept.
    pub fn n_params(&self) -> usize {
        self.n_features() + usize::from(self.has_intercept)
    }

    pub fn has_intercept(&self) -> bool {
        self.has_intercept
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_features();
        &self.values[i * w..(i + 1) * w]
    }

    /// Copy of the design with feature column `index` dropped.
    pub fn without_feature(&self, index: usize) -> DesignMatrix {
        let w = self.n_features();
        let mut names = self.feature_names.clone();
        names.remove(index);
        let mut values = Vec::with_capacity(self.n_rows() * (w - 1));
        for i in 0..self.n_rows() {
            let row = self.row(i);
            values.extend_from_slice(&row[..index]);
            values.extend_from_slice(&row[index + 1..]);
        }
        DesignMatrix {
            values,
            targets: self.targets.clone(),
            feature_names: names,
            has_intercept: self.has_intercept,
        }
    }
}

/// Result of an OLS fit.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub feature_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub intercept: Option<f64>,
    pub std_errors: Vec<f64>,
    pub intercept_std_error: Option<f64>,
    /// Unbiased residual variance `RSS / df`; NaN for an exactly determined system.
    pub residual_variance: f64,
    /// Residual degrees of freedom, rows minus estimated parameters.
    pub df: usize,
}

impl RegressionFit {
    /// A model with fixed coefficients and no inference attached.
    pub fn from_coefficients(feature_names: Vec<String>, coefficients: Vec<f64>, intercept: Option<f64>) -> Self {
        let k = coefficients.len();
        RegressionFit {
            feature_names,
            coefficients,
            intercept,
            std_errors: vec![0.0; k],
            intercept_std_error: intercept.map(|_| 0.0),
            residual_variance: 0.0,
            df: 0,
        }
    }

    /// Two-sided p-values of the per-feature t-tests against zero.
    pub fn p_values(&self) -> Vec<f64> {
        let dist = (self.df > 0).then(|| StudentsT::new(0.0, 1.0, self.df as f64).unwrap());
        self.coefficients
            .iter()
            .zip(&self.std_errors)
            .map(|(&b, &se)| two_sided_p(dist.as_ref(), b, se))
            .collect()
    }

    pub fn t_statistics(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .zip(&self.std_errors)
            .map(|(&b, &se)| t_statistic(b, se))
            .collect()
    }

    pub fn n_features(&self) -> usize {
        self.coefficients.len()
    }
}

fn t_statistic(coef: f64, se: f64) -> f64 {
    if se == 0.0 {
        if coef == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(coef)
        }
    } else {
        coef / se
    }
}

fn two_sided_p(dist: Option<&StudentsT>, coef: f64, se: f64) -> f64 {
    let t = t_statistic(coef, se).abs();
    match dist {
        None => 1.0,
        Some(_) if t == 0.0 => 1.0,
        Some(_) if t.is_infinite() => 0.0,
        Some(d) => (2.0 * d.sf(t)).clamp(0.0, 1.0),
    }
}

/// Relative threshold below which a pivot marks a column as linearly dependent.
const RANK_TOLERANCE: f64 = 1e-9;

/// Least-squares fit with standard errors from the unbiased residual variance.
pub fn fit_ols(design: &DesignMatrix) -> Result<RegressionFit> {
    let n = design.n_rows();
    let p = design.n_params();
    if p == 0 {
        return Err(Error::InsufficientData("design has no parameters".into()));
    }
    if n < p {
        return Err(Error::InsufficientData(format!(
            "{n} rows cannot determine {p} parameters"
        )));
    }
    let offset = usize::from(design.has_intercept);

    // Column-major copy of [1 | X].
    let mut a = vec![0.0; n * p];
    if design.has_intercept {
        a[..n].fill(1.0);
    }
    for i in 0..n {
        for (j, &x) in design.row(i).iter().enumerate() {
            a[(j + offset) * n + i] = x;
        }
    }
    let col_norms: Vec<f64> = (0..p)
        .map(|j| a[j * n..(j + 1) * n].iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();

    let mut qty = design.targets.clone();
    let mut diag = vec![0.0; p];
    for c in 0..p {
        let (head, tail) = a.split_at_mut((c + 1) * n);
        let col = &mut head[c * n..];
        let norm = col[c..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= RANK_TOLERANCE * col_norms[c] || norm == 0.0 {
            return Err(Error::SingularDesign(format!(
                "column {} is linearly dependent on the preceding columns",
                column_name(design, c)
            )));
        }
        let alpha = if col[c] > 0.0 { -norm } else { norm };
        col[c] -= alpha;
        let vnorm2: f64 = col[c..].iter().map(|x| x * x).sum();
        let v = &col[c..];
        for j in (c + 1)..p {
            let other = &mut tail[(j - c - 1) * n + c..(j - c) * n];
            let dot: f64 = v.iter().zip(other.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vnorm2;
            for (o, vi) in other.iter_mut().zip(v) {
                *o -= f * vi;
            }
        }
        let dot: f64 = v.iter().zip(&qty[c..]).map(|(a, b)| a * b).sum();
        let f = 2.0 * dot / vnorm2;
        for (o, vi) in qty[c..].iter_mut().zip(v) {
            *o -= f * vi;
        }
        diag[c] = alpha;
    }
    // R is stored above the diagonal of `a`, with its diagonal in `diag`.
    let r = |i: usize, j: usize| if i == j { diag[i] } else { a[j * n + i] };

    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = ((i + 1)..p).map(|j| r(i, j) * beta[j]).sum();
        beta[i] = (qty[i] - s) / r(i, i);
    }

    let rss: f64 = (0..n)
        .map(|i| {
            let fitted = if design.has_intercept { beta[0] } else { 0.0 }
                + design
                    .row(i)
                    .iter()
                    .zip(&beta[offset..])
                    .map(|(x, b)| x * b)
                    .sum::<f64>();
            let e = design.targets[i] - fitted;
            e * e
        })
        .sum();
    let df = n - p;

    // diag((X'X)^-1) = row sums of squares of R^-1.
    let mut rinv = vec![0.0; p * p];
    for j in 0..p {
        rinv[j * p + j] = 1.0 / r(j, j);
        for i in (0..j).rev() {
            let s: f64 = ((i + 1)..=j).map(|m| r(i, m) * rinv[m * p + j]).sum();
            rinv[i * p + j] = -s / r(i, i);
        }
    }
    let xtx_inv_diag: Vec<f64> = (0..p).map(|i| (i..p).map(|j| rinv[i * p + j].powi(2)).sum()).collect();

    let (residual_variance, std_errors_all): (f64, Vec<f64>) = if df == 0 {
        (f64::NAN, vec![f64::INFINITY; p])
    } else {
        let s2 = rss / df as f64;
        (s2, xtx_inv_diag.iter().map(|d| (s2 * d).sqrt()).collect())
    };

    Ok(RegressionFit {
        feature_names: design.feature_names.clone(),
        coefficients: beta[offset..].to_vec(),
        intercept: design.has_intercept.then(|| beta[0]),
        std_errors: std_errors_all[offset..].to_vec(),
        intercept_std_error: design.has_intercept.then(|| std_errors_all[0]),
        residual_variance,
        df,
    })
}

fn column_name(design: &DesignMatrix, c: usize) -> String {
    match (design.has_intercept, c) {
        (true, 0) => "intercept".to_string(),
        (true, c) => design.feature_names[c - 1].clone(),
        (false, c) => design.feature_names[c].clone(),
    }
}

/// Intercept (if any) plus the dot product of coefficients and features.
pub fn predict(fit: &RegressionFit, features: &[f64]) -> Result<f64> {
    if features.len() != fit.coefficients.len() {
        return Err(Error::Dimension {
            expected: fit.coefficients.len(),
            got: features.len(),
        });
    }
    let dot: f64 = fit.coefficients.iter().zip(features).map(|(b, x)| b * x).sum();
    Ok(fit.intercept.unwrap_or(0.0) + dot)
}

/// Refit while dropping the least significant feature, one per round, until
/// every remaining feature has p < `alpha`. The intercept is never dropped.
pub fn backward_eliminate(design: &DesignMatrix, alpha: f64) -> Result<(RegressionFit, Vec<String>)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::ParameterDomain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let mut current = design.clone();
    loop {
        let fit = fit_ols(&current)?;
        let worst =
            fit.p_values()
                .into_iter()
                .enumerate()
                .fold(None, |best: Option<(usize, f64)>, (j, p)| match best {
                    Some((_, bp)) if bp >= p => best,
                    _ => Some((j, p)),
                });
        match worst {
            Some((j, p)) if p >= alpha => current = current.without_feature(j),
            _ => {
                let names = current.feature_names.clone();
                return Ok((fit, names));
            }
        }
    }
}
