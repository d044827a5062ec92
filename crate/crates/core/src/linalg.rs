//! Householder least squares with rank detection.

/// Relative tolerance on the residual column norm below which a column is
/// treated as a linear combination of the columns before it.
pub(crate) const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub(crate) struct LeastSquares {
    pub coef: Vec<f64>,
    /// Diagonal of `(X^T X)^{-1}`.
    pub inv_gram_diag: Vec<f64>,
}

/// Solves `min ||y - X b||` for column-major `X` (each inner vec is a column).
///
/// Returns the indices of columns that are numerically dependent on earlier
/// columns when the design is rank deficient.
pub(crate) fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Result<LeastSquares, Vec<usize>> {
    let p = columns.len();
    let n = y.len();
    let max_norm = columns.iter().map(|c| norm(c)).fold(0.0, f64::max);
    let tol = RANK_TOL * max_norm.max(f64::MIN_POSITIVE);

    let mut a: Vec<Vec<f64>> = columns.to_vec();
    let mut qty = y.to_vec();
    let mut dependent = Vec::new();
    let mut rank = 0;
    for k in 0..p {
        let alpha = norm(&a[k][rank..]);
        if alpha <= tol || rank == n {
            dependent.push(k);
            continue;
        }
        // Reflector v = x - beta e_1 with beta = -sign(x_0) ||x||.
        let beta = if a[k][rank] > 0.0 { -alpha } else { alpha };
        let mut v = a[k][rank..].to_vec();
        v[0] -= beta;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        for col in a.iter_mut().skip(k) {
            reflect(&v, vnorm2, &mut col[rank..]);
        }
        reflect(&v, vnorm2, &mut qty[rank..]);
        rank += 1;
    }
    if !dependent.is_empty() {
        return Err(dependent);
    }

    // Back substitution on R b = (Q^T y)[..p].
    let r = |i: usize, j: usize| a[j][i];
    let mut coef = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = ((i + 1)..p).map(|j| r(i, j) * coef[j]).sum();
        coef[i] = (qty[i] - s) / r(i, i);
    }

    // R^{-1} column by column; (X^T X)^{-1} = R^{-1} R^{-T}.
    let mut rinv = vec![vec![0.0; p]; p];
    #[allow(clippy::needless_range_loop)]
    for j in 0..p {
        rinv[j][j] = 1.0 / r(j, j);
        for i in (0..j).rev() {
            let s: f64 = ((i + 1)..=j).map(|l| r(i, l) * rinv[l][j]).sum();
            rinv[i][j] = -s / r(i, i);
        }
    }
    let inv_gram_diag = rinv
        .iter()
        .map(|row| row.iter().map(|x| x * x).sum())
        .collect();
    Ok(LeastSquares {
        coef,
        inv_gram_diag,
    })
}

fn norm(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale
        * x.iter()
            .map(|v| (v / scale) * (v / scale))
            .sum::<f64>()
            .sqrt()
}

fn reflect(v: &[f64], vnorm2: f64, x: &mut [f64]) {
    if vnorm2 == 0.0 {
        return;
    }
    let dot: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    let f = 2.0 * dot / vnorm2;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= f * vi;
    }
}
