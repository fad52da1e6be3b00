use crate::error::{Error, Result};

use super::matrix::DenseMatrix;

/// Row-wise softmax with the row maximum subtracted first.
pub fn softmax(logits: &DenseMatrix) -> DenseMatrix {
    let mut p = logits.clone();
    let cols = p.cols();
    if cols == 0 {
        return p;
    }
    for row in p.data_mut().chunks_exact_mut(cols) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    p
}

/// Mean cross-entropy over rows and its gradient with respect to the logits.
pub fn softmax_cross_entropy(logits: &DenseMatrix, labels: &[usize]) -> Result<(f64, DenseMatrix)> {
    let (rows, cols) = logits.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyInput);
    }
    if labels.len() != rows {
        return Err(Error::Shape(format!("{} labels for {rows} rows", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= cols) {
        return Err(Error::Shape(format!("label {bad} with {cols} classes")));
    }
    let mut grad = softmax(logits);
    let mut loss = 0.0;
    let inv = 1.0 / rows as f64;
    for (r, &y) in labels.iter().enumerate() {
        // log-sum-exp form keeps tiny probabilities exact
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - row[y];
        let g = grad.row_mut(r);
        g[y] -= 1.0;
        for v in g {
            *v *= inv;
        }
    }
    Ok((loss * inv, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_log_k() {
        for k in 2..6 {
            let l = DenseMatrix::zeros(4, k);
            let (loss, _) = softmax_cross_entropy(&l, &[0, 1, 0, 1]).unwrap();
            assert!((loss - (k as f64).ln()).abs() < 1e-12);
        }
        let (loss, _) = softmax_cross_entropy(&DenseMatrix::zeros(1, 3), &[2]).unwrap();
        assert!((loss - 1.0986).abs() < 1e-4);
    }

    #[test]
    fn confident_margin() {
        let l = DenseMatrix::from_rows(&[vec![50.0, 0.0, 0.0]]).unwrap();
        let (loss, _) = softmax_cross_entropy(&l, &[0]).unwrap();
        assert!(loss < 1e-20);
    }

    #[test]
    fn scalar_evaluation() {
        let e = std::f64::consts::E;
        let l = DenseMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        // the higher logit is the true class: ln(1 + e) - 1
        let (loss, _) = softmax_cross_entropy(&l, &[1]).unwrap();
        assert!((loss - ((1.0 + e).ln() - 1.0)).abs() < 1e-12);
        assert!((loss - 0.3133).abs() < 1e-4);
        // the lower logit is the true class: ln(1 + e)
        let (loss, g) = softmax_cross_entropy(&l, &[0]).unwrap();
        assert!((loss - (1.0 + e).ln()).abs() < 1e-12);
        let p0 = 1.0 / (1.0 + e);
        assert!((g.get(0, 0) - (p0 - 1.0)).abs() < 1e-12);
        assert!((g.get(0, 1) - (1.0 - p0)).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            softmax_cross_entropy(&DenseMatrix::zeros(0, 3), &[]),
            Err(Error::EmptyInput)
        ));
        assert!(softmax_cross_entropy(&DenseMatrix::zeros(1, 3), &[3]).is_err());
    }
}
