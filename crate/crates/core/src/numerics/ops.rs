//! Masked reductions shared by the tape and by value-level callers.

use super::{Mask, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Stand-in for −∞ written into padded positions before softmax and max-pooling.
/// Every masked reduction in the crate uses this one constant.
pub const MASK_FILL: f64 = -1e9;

/// Softmax along each row, with padded columns forced to contribute nothing.
///
/// Padded logits are replaced (not offset) by [`MASK_FILL`], so the result does
/// not depend on what the padded columns held, and their probabilities are exactly zero.
pub fn masked_softmax<T: Scalar>(scores: &Matrix<T>, col_mask: &Mask) -> Result<Matrix<T>> {
    if col_mask.len() != scores.cols() {
        return Err(Error::shape(
            "masked_softmax",
            format!("mask of {} for {} columns", col_mask.len(), scores.cols()),
        ));
    }
    col_mask.require_nonempty("masked_softmax")?;
    let mut out = Matrix::zeros(scores.rows(), scores.cols());
    let mut buf = vec![0.0f64; scores.cols()];
    for i in 0..scores.rows() {
        for (j, slot) in buf.iter_mut().enumerate() {
            *slot = if col_mask.is_valid(j) { scores.get(i, j).widen() } else { MASK_FILL };
        }
        let max = buf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in buf.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for (o, &v) in out.row_mut(i).iter_mut().zip(&buf) {
            *o = T::narrow(v / total);
        }
    }
    Ok(out)
}

/// Columnwise maximum over valid rows. Returns the 1×d pooled row and, for each
/// column, the row index that supplied it (first occurrence on ties).
pub fn masked_max_pool_with_argmax<T: Scalar>(
    x: &Matrix<T>,
    row_mask: &Mask,
) -> Result<(Matrix<T>, Vec<usize>)> {
    if row_mask.len() != x.rows() {
        return Err(Error::shape(
            "masked_max_pool",
            format!("mask of {} for {} rows", row_mask.len(), x.rows()),
        ));
    }
    row_mask.require_nonempty("masked_max_pool")?;
    let fill = T::narrow(MASK_FILL);
    let mut best = vec![fill; x.cols()];
    let mut arg = vec![usize::MAX; x.cols()];
    for i in 0..x.rows() {
        let valid = row_mask.is_valid(i);
        for j in 0..x.cols() {
            let v = if valid { x.get(i, j) } else { fill };
            if arg[j] == usize::MAX || v > best[j] {
                best[j] = v;
                arg[j] = i;
            }
        }
    }
    Ok((Matrix::row_vector(best), arg))
}

pub fn masked_max_pool<T: Scalar>(x: &Matrix<T>, row_mask: &Mask) -> Result<Matrix<T>> {
    masked_max_pool_with_argmax(x, row_mask).map(|(m, _)| m)
}

/// Average over valid rows only; 1×n result.
pub fn mean_pool_rows<T: Scalar>(a: &Matrix<T>, row_mask: &Mask) -> Result<Matrix<T>> {
    if row_mask.len() != a.rows() {
        return Err(Error::shape(
            "mean_pool_rows",
            format!("mask of {} for {} rows", row_mask.len(), a.rows()),
        ));
    }
    row_mask.require_nonempty("mean_pool_rows")?;
    let count = row_mask.valid_count() as f64;
    let mut acc = vec![0.0f64; a.cols()];
    for i in row_mask.valid_indices() {
        for (s, &v) in acc.iter_mut().zip(a.row(i)) {
            *s += v.widen();
        }
    }
    Ok(Matrix::row_vector(acc.into_iter().map(|s| T::narrow(s / count)).collect()))
}

pub(crate) const LAYER_NORM_EPS: f64 = 1e-5;

/// Row-wise normalization to zero mean and unit variance. Returns the
/// normalized rows and each row's inverse standard deviation.
pub(crate) fn normalize_rows<T: Scalar>(x: &Matrix<T>) -> (Matrix<T>, Vec<T>) {
    let n = x.cols() as f64;
    let mut out = Matrix::zeros(x.rows(), x.cols());
    let mut inv = Vec::with_capacity(x.rows());
    for i in 0..x.rows() {
        let row = x.row(i);
        let mean = row.iter().map(|v| v.widen()).sum::<f64>() / n;
        let var = row.iter().map(|v| (v.widen() - mean).powi(2)).sum::<f64>() / n;
        let r = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        for (o, &v) in out.row_mut(i).iter_mut().zip(row) {
            *o = T::narrow((v.widen() - mean) * r);
        }
        inv.push(T::narrow(r));
    }
    (out, inv)
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

pub(crate) fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh())
}

pub(crate) fn gelu_grad(x: f64) -> f64 {
    let u = GELU_C * (x + 0.044715 * x * x * x);
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[f64]) -> Matrix<f64> {
        Matrix::row_vector(v.to_vec())
    }

    #[test]
    fn softmax_examples() {
        let out = masked_softmax(&row(&[0.0, 0.0]), &Mask::all_valid(2)).unwrap();
        assert_eq!(out.data(), &[0.5, 0.5]);

        let out = masked_softmax(&row(&[3.0, 3.0]), &Mask::from_flags(vec![true, false])).unwrap();
        assert_eq!(out.data(), &[1.0, 0.0]);

        let out = masked_softmax(&row(&[2f64.ln(), 0.0]), &Mask::all_valid(2)).unwrap();
        assert!((out.get(0, 0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((out.get(0, 1) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_rejects_all_masked() {
        let err = masked_softmax(&row(&[1.0, 2.0]), &Mask::from_flags(vec![false, false]));
        assert!(matches!(err, Err(Error::DegenerateMask(_))));
    }

    #[test]
    fn max_pool_examples() {
        let x = Matrix::from_rows(&[vec![1.0, -2.0], vec![3.0, 0.0]]).unwrap();
        assert_eq!(masked_max_pool(&x, &Mask::all_valid(2)).unwrap().data(), &[3.0, 0.0]);
        let m = Mask::from_flags(vec![true, false]);
        assert_eq!(masked_max_pool(&x, &m).unwrap().data(), &[1.0, -2.0]);
        assert!(matches!(
            masked_max_pool(&x, &Mask::from_flags(vec![false, false])),
            Err(Error::DegenerateMask(_))
        ));
    }

    #[test]
    fn mean_pool_examples() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(mean_pool_rows(&x, &Mask::all_valid(2)).unwrap().data(), &[0.5, 0.5]);
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![9.0, 9.0]]).unwrap();
        let m = Mask::from_flags(vec![true, false]);
        assert_eq!(mean_pool_rows(&x, &m).unwrap().data(), &[1.0, 0.0]);
        assert!(mean_pool_rows(&x, &Mask::from_flags(vec![false, false])).is_err());
    }

    #[test]
    fn gelu_derivative_matches_difference() {
        for &x in &[-3.0, -0.7, 0.0, 0.4, 2.5] {
            let h = 1e-6;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_grad(x)).abs() < 1e-8);
        }
    }
}
