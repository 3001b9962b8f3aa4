//! L2-regularized multinomial logistic regression and ridge regression.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Standardizer};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinearTask {
    Logistic,
    Ridge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearOptions {
    pub max_iter: usize,
    /// Stop once the largest absolute gradient entry falls below this.
    pub tol: f64,
    pub folds: usize,
    pub fit_intercept: bool,
}

impl Default for LinearOptions {
    fn default() -> Self {
        LinearOptions {
            max_iter: 500,
            tol: 1e-6,
            folds: 5,
            fit_intercept: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// `n_classes` rows of `width` weights, in standardized input space.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub scaler: Standardizer,
    pub lambda: f64,
}

impl LogisticModel {
    pub fn zeros(n_classes: usize, width: usize) -> Self {
        LogisticModel {
            weights: vec![vec![0.0; width]; n_classes],
            bias: vec![0.0; n_classes],
            scaler: Standardizer::default(),
            lambda: 0.0,
        }
    }

    pub fn predict_sparse(&self, row: &[(usize, f64)]) -> Vec<f64> {
        let row = self.scaler.apply(row);
        let mut z: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| b + row.iter().map(|&(c, x)| w[c] * x).sum::<f64>())
            .collect();
        softmax_in_place(&mut z);
        z
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
}

impl RidgeModel {
    pub fn predict_sparse(&self, row: &[(usize, f64)]) -> f64 {
        self.intercept + row.iter().map(|&(c, x)| self.weights[c] * x).sum::<f64>()
    }
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    for v in z.iter_mut() {
        *v /= s;
    }
}

/// Mean cross-entropy plus `lambda/2 * |W|^2` (bias unpenalized). Parameters
/// are laid out as `W` row-major (`n_classes x width`) followed by the biases.
pub struct LogisticObjective<'a> {
    pub rows: &'a [Vec<(usize, f64)>],
    pub labels: &'a [usize],
    pub n_classes: usize,
    pub width: usize,
    pub lambda: f64,
}

impl LogisticObjective<'_> {
    pub fn n_params(&self) -> usize {
        self.n_classes * (self.width + 1)
    }

    pub fn loss_and_grad(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let (k, d) = (self.n_classes, self.width);
        let n = self.rows.len() as f64;
        let mut grad = vec![0.0; params.len()];
        let mut loss = 0.0;
        let mut z = vec![0.0; k];
        for (row, &y) in self.rows.iter().zip(self.labels) {
            for (c, zc) in z.iter_mut().enumerate() {
                *zc = params[k * d + c] + row.iter().map(|&(j, x)| params[c * d + j] * x).sum::<f64>();
            }
            let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            loss += lse - z[y];
            for c in 0..k {
                let r = ((z[c] - lse).exp() - if c == y { 1.0 } else { 0.0 }) / n;
                grad[k * d + c] += r;
                for &(j, x) in row {
                    grad[c * d + j] += r * x;
                }
            }
        }
        loss /= n;
        for i in 0..k * d {
            loss += 0.5 * self.lambda * params[i] * params[i];
            grad[i] += self.lambda * params[i];
        }
        (loss, grad)
    }
}

/// Gradient descent with Barzilai-Borwein steps safeguarded by Armijo
/// backtracking.
pub(crate) fn minimize<F>(f: F, mut x: Vec<f64>, max_iter: usize, tol: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let (mut fx, mut g) = f(&x);
    let mut step = 1.0;
    for _ in 0..max_iter {
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax <= tol {
            break;
        }
        let gg: f64 = g.iter().map(|v| v * v).sum();
        let mut t = step;
        let (mut xn, mut fxn, mut gn);
        loop {
            xn = x.iter().zip(&g).map(|(a, b)| a - t * b).collect::<Vec<_>>();
            (fxn, gn) = f(&xn);
            if fxn <= fx - 1e-4 * t * gg || t < 1e-16 {
                break;
            }
            t *= 0.5;
        }
        if fxn > fx {
            break;
        }
        let mut sy = 0.0;
        let mut ss = 0.0;
        for i in 0..x.len() {
            let s = xn[i] - x[i];
            sy += s * (gn[i] - g[i]);
            ss += s * s;
        }
        step = if sy > 0.0 { (ss / sy).clamp(1e-10, 1e10) } else { t * 2.0 };
        x = xn;
        fx = fxn;
        g = gn;
    }
    x
}

fn fit_logistic_scaled(
    rows: &[Vec<(usize, f64)>],
    labels: &[usize],
    n_classes: usize,
    width: usize,
    lambda: f64,
    opts: &LinearOptions,
    scaler: Standardizer,
) -> LogisticModel {
    let scaled: Vec<Vec<(usize, f64)>> = rows.iter().map(|r| scaler.apply(r)).collect();
    let obj = LogisticObjective {
        rows: &scaled,
        labels,
        n_classes,
        width,
        lambda,
    };
    let x = minimize(|p| obj.loss_and_grad(p), vec![0.0; obj.n_params()], opts.max_iter, opts.tol);
    let weights = (0..n_classes).map(|c| x[c * width..(c + 1) * width].to_vec()).collect();
    LogisticModel {
        weights,
        bias: x[n_classes * width..].to_vec(),
        scaler,
        lambda,
    }
}

/// Solves `(XᵀX + λI) w = Xᵀy`. With an intercept, columns and targets are
/// centered first and the intercept is left unpenalized.
pub fn ridge_solve(x: &[Vec<f64>], y: &[f64], lambda: f64, fit_intercept: bool) -> Result<(Vec<f64>, f64)> {
    if x.is_empty() {
        return Err(Error::Empty("ridge design matrix"));
    }
    let n = x.len();
    let d = x[0].len();
    let (xm, ym) = if fit_intercept {
        let mut m = vec![0.0; d];
        for row in x {
            for (a, b) in m.iter_mut().zip(row) {
                *a += b;
            }
        }
        m.iter_mut().for_each(|v| *v /= n as f64);
        (m, y.iter().sum::<f64>() / n as f64)
    } else {
        (vec![0.0; d], 0.0)
    };
    let mut a = vec![vec![0.0; d]; d];
    let mut b = vec![0.0; d];
    for (row, &t) in x.iter().zip(y) {
        let r: Vec<f64> = row.iter().zip(&xm).map(|(v, m)| v - m).collect();
        for i in 0..d {
            if r[i] == 0.0 {
                continue;
            }
            b[i] += r[i] * (t - ym);
            for j in 0..=i {
                a[i][j] += r[i] * r[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            a[j][i] = a[i][j];
        }
        a[i][i] += lambda;
    }
    let w = cholesky_solve(&a, &b)?;
    let intercept = ym - w.iter().zip(&xm).map(|(a, b)| a * b).sum::<f64>();
    Ok((w, intercept))
}

fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let d = b.len();
    let trace: f64 = (0..d).map(|i| a[i][i]).sum();
    let mut jitter = 0.0;
    for _ in 0..8 {
        if let Some(l) = cholesky(a, jitter) {
            let mut z = vec![0.0; d];
            for i in 0..d {
                let s: f64 = (0..i).map(|k| l[i][k] * z[k]).sum();
                z[i] = (b[i] - s) / l[i][i];
            }
            let mut w = vec![0.0; d];
            for i in (0..d).rev() {
                let s: f64 = (i + 1..d).map(|k| l[k][i] * w[k]).sum();
                w[i] = (z[i] - s) / l[i][i];
            }
            return Ok(w);
        }
        jitter = if jitter == 0.0 { 1e-12 * trace.max(1.0) } else { jitter * 100.0 };
    }
    Err(Error::Invalid("ridge system is not positive definite".into()))
}

fn cholesky(a: &[Vec<f64>], jitter: f64) -> Option<Vec<Vec<f64>>> {
    let d = a.len();
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let v = a[i][i] + jitter - s;
                if v <= 0.0 || !v.is_finite() {
                    return None;
                }
                l[i][i] = v.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

fn fold_split(n: usize, k: usize, f: usize) -> (Vec<usize>, Vec<usize>) {
    (0..n).partition(|i| i % k != f)
}

fn densify(rows: &[Vec<(usize, f64)>], width: usize) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| {
            let mut v = vec![0.0; width];
            for &(c, x) in r {
                v[c] = x;
            }
            v
        })
        .collect()
}

/// Picks the grid value with the lowest mean held-out loss (first on ties).
fn select<F>(grid: &[f64], n: usize, folds: usize, held_out_loss: F) -> Result<f64>
where
    F: Fn(f64, &[usize], &[usize]) -> Result<f64> + Sync,
{
    let k = folds.min(n);
    if grid.len() == 1 || k < 2 {
        return Ok(grid[0]);
    }
    let scores = grid
        .par_iter()
        .map(|&lam| {
            let mut total = 0.0;
            for f in 0..k {
                let (tr, te) = fold_split(n, k, f);
                total += held_out_loss(lam, &tr, &te)?;
            }
            Ok(total / k as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    log::debug!("regularization grid {grid:?} -> cv loss {scores:?}");
    Ok(grid[best])
}

pub(crate) enum LinearFit {
    Constant(Vec<f64>),
    Logistic(LogisticModel),
    Ridge(RidgeModel),
}

pub(crate) fn fit_linear(ds: &Dataset, task: LinearTask, reg_grid: &[f64], opts: &LinearOptions) -> Result<LinearFit> {
    if ds.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    if reg_grid.is_empty() {
        return Err(Error::Config("empty regularization grid".into()));
    }
    let width = ds.encoding.width;
    let rows: Vec<Vec<(usize, f64)>> = ds.records.iter().map(|r| ds.encoding.encode_sparse(r)).collect();
    match task {
        LinearTask::Logistic => {
            let labels = ds.class_labels()?;
            let k = ds.classes.len();
            let first = labels[0];
            if labels.iter().all(|&y| y == first) {
                let mut p = vec![0.0; k];
                p[first] = 1.0;
                return Ok(LinearFit::Constant(p));
            }
            let numeric = ds.encoding.numeric_columns();
            let lambda = select(reg_grid, rows.len(), opts.folds, |lam, tr, te| {
                let tr_rows: Vec<_> = tr.iter().map(|&i| rows[i].clone()).collect();
                let tr_y: Vec<usize> = tr.iter().map(|&i| labels[i]).collect();
                let scaler = Standardizer::fit(&tr_rows, numeric.clone());
                let m = fit_logistic_scaled(&tr_rows, &tr_y, k, width, lam, opts, scaler);
                Ok(te
                    .iter()
                    .map(|&i| -m.predict_sparse(&rows[i])[labels[i]].max(1e-15).ln())
                    .sum::<f64>()
                    / te.len().max(1) as f64)
            })?;
            let scaler = Standardizer::fit(&rows, numeric);
            Ok(LinearFit::Logistic(fit_logistic_scaled(&rows, labels, k, width, lambda, opts, scaler)))
        }
        LinearTask::Ridge => {
            let y = ds.real_labels()?;
            let dense = densify(&rows, width);
            let lambda = select(reg_grid, rows.len(), opts.folds, |lam, tr, te| {
                let x: Vec<Vec<f64>> = tr.iter().map(|&i| dense[i].clone()).collect();
                let t: Vec<f64> = tr.iter().map(|&i| y[i]).collect();
                let (w, b) = ridge_solve(&x, &t, lam, opts.fit_intercept)?;
                let m = RidgeModel {
                    weights: w,
                    intercept: b,
                    lambda: lam,
                };
                Ok(te
                    .iter()
                    .map(|&i| (m.predict_sparse(&rows[i]) - y[i]).powi(2))
                    .sum::<f64>()
                    / te.len().max(1) as f64)
            })?;
            let (weights, intercept) = ridge_solve(&dense, y, lambda, opts.fit_intercept)?;
            Ok(LinearFit::Ridge(RidgeModel {
                weights,
                intercept,
                lambda,
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Gauss-Jordan inverse applied to Xᵀy, written independently of the solver.
    fn closed_form(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Vec<f64> {
        let d = x[0].len();
        let mut m = vec![vec![0.0; 2 * d]; d];
        for i in 0..d {
            for j in 0..d {
                m[i][j] = x.iter().map(|r| r[i] * r[j]).sum::<f64>() + if i == j { lambda } else { 0.0 };
            }
            m[i][d + i] = 1.0;
        }
        for c in 0..d {
            let p = (c..d).max_by(|a, b| m[*a][c].abs().total_cmp(&m[*b][c].abs())).unwrap();
            m.swap(c, p);
            let piv = m[c][c];
            m[c].iter_mut().for_each(|v| *v /= piv);
            for r in 0..d {
                if r != c {
                    let f = m[r][c];
                    for j in 0..2 * d {
                        m[r][j] -= f * m[c][j];
                    }
                }
            }
        }
        let xty: Vec<f64> = (0..d).map(|i| x.iter().zip(y).map(|(r, t)| r[i] * t).sum()).collect();
        (0..d).map(|i| (0..d).map(|j| m[i][d + j] * xty[j]).sum()).collect()
    }

    #[test]
    fn ridge_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x: Vec<Vec<f64>> = (0..10).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let y: Vec<f64> = (0..10).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let (w, b) = ridge_solve(&x, &y, 0.1, false).unwrap();
        assert_eq!(b, 0.0);
        for (a, e) in w.iter().zip(closed_form(&x, &y, 0.1)) {
            assert!((a - e).abs() <= 1e-8, "{a} vs {e}");
        }
        // normal-equation residual
        for i in 0..3 {
            let lhs: f64 = (0..3)
                .map(|j| (x.iter().map(|r| r[i] * r[j]).sum::<f64>() + if i == j { 0.1 } else { 0.0 }) * w[j])
                .sum();
            let rhs: f64 = x.iter().zip(&y).map(|(r, t)| r[i] * t).sum();
            assert!((lhs - rhs).abs() <= 1e-8);
        }
    }

    #[test]
    fn ridge_shrinkage_limit() {
        let x = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![2.0, 1.0], vec![1.0, 3.0]];
        let y = vec![1.0, 2.0, 4.0, 5.0];
        let (w, b) = ridge_solve(&x, &y, 1e9, true).unwrap();
        assert!(w.iter().all(|v| v.abs() < 1e-6));
        assert!((b - 3.0).abs() < 1e-6);
    }

    fn finite_difference_check(obj: &LogisticObjective, params: &[f64]) {
        let (_, g) = obj.loss_and_grad(params);
        let h = 1e-4;
        for i in 0..params.len() {
            let mut p = params.to_vec();
            p[i] += h;
            let up = obj.loss_and_grad(&p).0;
            p[i] -= 2.0 * h;
            let down = obj.loss_and_grad(&p).0;
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-3);
            assert!(rel <= 1e-4, "param {i}: analytic {} fd {fd}", g[i]);
        }
    }

    #[test]
    fn logistic_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..5 {
            let width = 4;
            let rows: Vec<Vec<(usize, f64)>> = (0..10)
                .map(|_| (0..width).map(|c| (c, rng.gen_range(-1.0..1.0))).collect())
                .collect();
            let labels: Vec<usize> = (0..10).map(|_| rng.gen_range(0..3)).collect();
            let obj = LogisticObjective {
                rows: &rows,
                labels: &labels,
                n_classes: 3,
                width,
                lambda: 0.1 * trial as f64,
            };
            let params: Vec<f64> = (0..obj.n_params()).map(|_| rng.gen_range(-0.5..0.5)).collect();
            finite_difference_check(&obj, &params);
        }
    }

    #[test]
    fn minimizer_reaches_tolerance_on_quadratic() {
        let x = minimize(
            |p| {
                let f = (p[0] - 3.0).powi(2) + 10.0 * (p[1] + 1.0).powi(2);
                (f, vec![2.0 * (p[0] - 3.0), 20.0 * (p[1] + 1.0)])
            },
            vec![0.0, 0.0],
            500,
            1e-9,
        );
        assert!((x[0] - 3.0).abs() < 1e-8 && (x[1] + 1.0).abs() < 1e-8);
    }
}
