//! Non-negative least squares (Lawson-Hanson active set).
//!
//! Small dense systems only (tens of rows/columns): the factorial-moment
//! inversion behind the decoded-count distribution.

/// Solve `min ||A x - b||` subject to `x >= 0`. `a` is row-major `rows x cols`.
pub fn nnls(a: &[f64], rows: usize, cols: usize, b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), rows * cols);
    assert_eq!(b.len(), rows);
    let mut x = vec![0.0; cols];
    let mut passive = vec![false; cols];
    let mut w = vec![0.0; cols];
    let max_outer = 3 * cols + 30;
    for _ in 0..max_outer {
        // gradient w = A^T (b - A x)
        let mut resid = b.to_vec();
        for r in 0..rows {
            let mut acc = 0.0;
            for c in 0..cols {
                acc += a[r * cols + c] * x[c];
            }
            resid[r] -= acc;
        }
        for c in 0..cols {
            w[c] = (0..rows).map(|r| a[r * cols + c] * resid[r]).sum();
        }
        // most-violating free variable
        let mut best = None;
        for c in 0..cols {
            if !passive[c] && w[c] > 1e-12 {
                if best.map(|(_, bw)| w[c] > bw).unwrap_or(true) {
                    best = Some((c, w[c]));
                }
            }
        }
        let Some((enter, _)) = best else {
            break;
        };
        passive[enter] = true;
        // inner loop: solve on passive set, step back while negative
        loop {
            let idx: Vec<usize> = (0..cols).filter(|&c| passive[c]).collect();
            let z = ls_solve(a, rows, cols, b, &idx);
            if z.iter().all(|&v| v > 1e-12) {
                for (k, &c) in idx.iter().enumerate() {
                    x[c] = z[k];
                }
                break;
            }
            // step toward z until a variable hits zero
            let mut alpha = 1.0f64;
            for (k, &c) in idx.iter().enumerate() {
                if z[k] <= 1e-12 {
                    let denom = x[c] - z[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[c] / denom);
                    }
                }
            }
            for (k, &c) in idx.iter().enumerate() {
                x[c] += alpha * (z[k] - x[c]);
                if x[c] <= 1e-12 {
                    x[c] = 0.0;
                    passive[c] = false;
                }
            }
            if idx.iter().all(|&c| !passive[c]) {
                break;
            }
        }
    }
    x
}

/// Unconstrained least squares on a column subset via normal equations with a
/// small ridge (the systems here are tiny and well scaled).
fn ls_solve(a: &[f64], rows: usize, cols: usize, b: &[f64], idx: &[usize]) -> Vec<f64> {
    let k = idx.len();
    let mut ata = vec![0.0; k * k];
    let mut atb = vec![0.0; k];
    for r in 0..rows {
        for (i, &ci) in idx.iter().enumerate() {
            let ai = a[r * cols + ci];
            if ai == 0.0 {
                continue;
            }
            atb[i] += ai * b[r];
            for (j, &cj) in idx.iter().enumerate().skip(i) {
                ata[i * k + j] += ai * a[r * cols + cj];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            ata[i * k + j] = ata[j * k + i];
        }
        ata[i * k + i] += 1e-12;
    }
    // Cholesky
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = ata[i * k + j];
            for t in 0..j {
                s -= l[i * k + t] * l[j * k + t];
            }
            if i == j {
                l[i * k + i] = s.max(1e-300).sqrt();
            } else {
                l[i * k + j] = s / l[j * k + j];
            }
        }
    }
    let mut y = vec![0.0; k];
    for i in 0..k {
        let mut s = atb[i];
        for t in 0..i {
            s -= l[i * k + t] * y[t];
        }
        y[i] = s / l[i * k + i];
    }
    let mut z = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = y[i];
        for t in i + 1..k {
            s -= l[t * k + i] * z[t];
        }
        z[i] = s / l[i * k + i];
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_nonnegative_solution() {
        // x = (1, 2), A = I
        let a = [1.0, 0.0, 0.0, 1.0];
        let x = nnls(&a, 2, 2, &[1.0, 2.0]);
        assert!((x[0] - 1.0).abs() < 1e-9 && (x[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn clamps_negative_component() {
        // unconstrained solution would be (-1, 2)
        let a = [1.0, 0.0, 0.0, 1.0];
        let x = nnls(&a, 2, 2, &[-1.0, 2.0]);
        assert!(x[0].abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn overdetermined() {
        // A = [[1,1],[1,0],[0,1]], b = [2, 1, 1]: exact x = (1,1)
        let a = [1.0, 1.0, 1.0, 0.0, 0.0, 1.0];
        let x = nnls(&a, 3, 2, &[2.0, 1.0, 1.0]);
        assert!((x[0] - 1.0).abs() < 1e-8 && (x[1] - 1.0).abs() < 1e-8);
    }
}
