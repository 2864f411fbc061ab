//! Reference and streaming numerical kernels.
//!
//! Softmax and layernorm are both split into a *reduction* stage (max and
//! exp-sum, or sum and sum-of-squares) and a *normalization* stage. The
//! streaming variants consume elements one at a time so a reduction can run
//! against the serial output of an inner-product GEMV and a normalization
//! against the serial input of an outer-product GEMV. All arithmetic is f64;
//! the 16-bit datapath of the modeled hardware only shows up in the byte
//! accounting of the cycle model.

use crate::error::{Error, Result};

/// Dense vector of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(elements: Vec<f64>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::invalid_argument("vector must be nonempty"));
        }
        if let Some(bad) = elements.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid_argument(format!(
                "vector element {bad} is not finite"
            )));
        }
        Ok(DenseVector(elements))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }
}

impl std::ops::Index<usize> for DenseVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Row-contiguous dense matrix of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl DenseMatrix {
    pub fn new(data: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid_argument("matrix dims must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid_argument(format!(
                "matrix data length {} != {rows}x{cols}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid_argument(format!(
                "matrix element {bad} is not finite"
            )));
        }
        Ok(DenseMatrix { data, rows, cols })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        DenseMatrix {
            data,
            rows: n,
            cols: n,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

/// A score row with explicit validity flags instead of -inf sentinels, so
/// every stored number stays finite.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedRow {
    values: Vec<f64>,
    valid_len: usize,
}

impl MaskedRow {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid_len(&self) -> usize {
        self.valid_len
    }

    pub fn is_masked(&self, i: usize) -> bool {
        i >= self.valid_len
    }
}

/// Masks every entry at index >= `valid_len`. Masked entries behave as -inf
/// under softmax (probability 0).
pub fn causal_mask_row(row: &DenseVector, valid_len: usize) -> Result<MaskedRow> {
    if valid_len == 0 || valid_len > row.len() {
        return Err(Error::invalid_argument(format!(
            "valid_len {valid_len} out of range 1..={}",
            row.len()
        )));
    }
    Ok(MaskedRow {
        values: row.as_slice().to_vec(),
        valid_len,
    })
}

/// Numerically stabilized softmax over a full vector.
pub fn softmax_reference(v: &DenseVector) -> Result<DenseVector> {
    let out = softmax_slice(v.as_slice());
    DenseVector::new(out)
}

/// Softmax over a masked row; masked positions get probability 0.
pub fn softmax_masked(row: &MaskedRow) -> Result<DenseVector> {
    let mut out = vec![0.0; row.values.len()];
    let valid = softmax_slice(&row.values[..row.valid_len]);
    out[..row.valid_len].copy_from_slice(&valid);
    DenseVector::new(out)
}

fn softmax_slice(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Layer normalization: `gamma * (v - mean)/sqrt(var + eps) + beta`.
/// Variance is the population variance.
pub fn layernorm_reference(
    v: &DenseVector,
    gamma: &DenseVector,
    beta: &DenseVector,
    eps: f64,
) -> Result<DenseVector> {
    if v.len() != gamma.len() || v.len() != beta.len() {
        return Err(Error::invalid_argument(format!(
            "length mismatch: v {} gamma {} beta {}",
            v.len(),
            gamma.len(),
            beta.len()
        )));
    }
    if eps <= 0.0 {
        return Err(Error::invalid_argument("eps must be positive"));
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let denom = (var + eps).sqrt();
    let out = v
        .iter()
        .zip(gamma.iter())
        .zip(beta.iter())
        .map(|((x, g), b)| g * (x - mean) / denom + b)
        .collect();
    DenseVector::new(out)
}

/// Default layernorm epsilon. The modeled hardware leaves this unspecified;
/// it is configurable wherever layernorm is invoked.
pub const DEFAULT_LAYERNORM_EPS: f64 = 1e-5;

/// Online softmax reduction state: running maximum and rescaled exponent sum.
///
/// Tiling-invariant: any ordered partition of a vector into tiles produces
/// the same `(max, exp_sum)` as a single pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftmaxStats {
    running_max: f64,
    running_exp_sum: f64,
    count: usize,
}

impl SoftmaxStats {
    pub fn new() -> Self {
        SoftmaxStats {
            running_max: f64::NEG_INFINITY,
            running_exp_sum: 0.0,
            count: 0,
        }
    }

    pub fn max(&self) -> f64 {
        self.running_max
    }

    pub fn exp_sum(&self) -> f64 {
        self.running_exp_sum
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Folds one tile into the reduction. The previous exponent sum is
    /// rescaled by `exp(old_max - new_max)` before the tile contributions
    /// are added.
    pub fn update(&mut self, tile: &[f64]) -> Result<()> {
        if tile.is_empty() {
            return Err(Error::invalid_argument("tile must be nonempty"));
        }
        let tile_max = tile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !tile_max.is_finite() {
            return Err(Error::invalid_argument("tile contains non-finite values"));
        }
        let new_max = self.running_max.max(tile_max);
        let mut sum = if self.count == 0 {
            0.0
        } else {
            self.running_exp_sum * (self.running_max - new_max).exp()
        };
        for x in tile {
            sum += (x - new_max).exp();
        }
        self.running_max = new_max;
        self.running_exp_sum = sum;
        self.count += tile.len();
        Ok(())
    }

    /// Consumes a single scalar.
    pub fn push(&mut self, x: f64) -> Result<()> {
        self.update(std::slice::from_ref(&x))
    }

    /// Normalizes one element of the reduced vector: `exp(x - max)/exp_sum`.
    pub fn normalize(&self, x: f64) -> Result<f64> {
        if self.running_exp_sum <= 0.0 {
            return Err(Error::NumericDomain(
                "normalize with zero exp_sum (no elements consumed)".into(),
            ));
        }
        Ok((x - self.running_max).exp() / self.running_exp_sum)
    }
}

impl Default for SoftmaxStats {
    fn default() -> Self {
        Self::new()
    }
}

/// Online sum / sum-of-squares reduction for mean and standard deviation.
///
/// Matches the hardware's simultaneous element and element-square
/// accumulation; the derived variance is clamped at zero. Inputs in this
/// crate are attention scores in [0, 1], where the naive form is safe.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentStats {
    count: usize,
    sum: f64,
    sum_sq: f64,
}

impl MomentStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn extend(&mut self, xs: &[f64]) {
        for &x in xs {
            self.push(x);
        }
    }

    /// Returns `(mean, std)` with population variance clamped at zero.
    pub fn finalize(&self) -> Result<(f64, f64)> {
        if self.count == 0 {
            return Err(Error::invalid_state("finalize on empty moment stats"));
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        let var = (self.sum_sq / n - mean * mean).max(0.0);
        Ok((mean, var.sqrt()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec_of(xs: &[f64]) -> DenseVector {
        DenseVector::new(xs.to_vec()).unwrap()
    }

    /// Independent direct-formula oracle: e^{x - max} / sum, two passes.
    fn softmax_oracle(v: &[f64]) -> Vec<f64> {
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = v.iter().map(|x| (x - max).exp()).sum();
        v.iter().map(|x| (x - max).exp() / sum).collect()
    }

    /// Independent two-pass mean/std oracle.
    fn moments_oracle(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        (mean, var.sqrt())
    }

    #[test]
    fn softmax_symmetric_pair() {
        let out = softmax_reference(&vec_of(&[0.0, 0.0])).unwrap();
        assert_eq!(out.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn softmax_single_element_is_one() {
        for x in [-100.0, 0.0, 3.5, 88.0] {
            let out = softmax_reference(&vec_of(&[x])).unwrap();
            assert_eq!(out.as_slice(), &[1.0]);
        }
    }

    #[test]
    fn softmax_1_2_3_matches_direct_formula() {
        // Frozen from the direct-formula oracle over [1, 2, 3].
        let expected = [0.09003057317038046, 0.24472847105479764, 0.6652409557748218];
        let oracle = softmax_oracle(&[1.0, 2.0, 3.0]);
        let out = softmax_reference(&vec_of(&[1.0, 2.0, 3.0])).unwrap();
        for i in 0..3 {
            assert!((oracle[i] - expected[i]).abs() < 1e-15);
            assert!((out[i] - expected[i]).abs() < 1e-12);
        }
        let sum: f64 = out.iter().sum();
        assert!((sum - 1.0).abs() < 1e-6);
    }

    #[test]
    fn softmax_shift_invariance() {
        let v = [0.3, -1.2, 4.0, 2.2, 0.0];
        let shifted: Vec<f64> = v.iter().map(|x| x + 123.5).collect();
        let a = softmax_reference(&vec_of(&v)).unwrap();
        let b = softmax_reference(&vec_of(&shifted)).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn softmax_rejects_empty() {
        assert!(DenseVector::new(vec![]).is_err());
    }

    #[test]
    fn mask_then_softmax_zeroes_tail() {
        let row = vec_of(&[1.0, 1.0, 1.0]);
        let masked = causal_mask_row(&row, 2).unwrap();
        let out = softmax_masked(&masked).unwrap();
        assert_eq!(out.as_slice(), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn mask_full_length_is_identity() {
        let row = vec_of(&[0.4, -2.0, 1.5]);
        let masked = causal_mask_row(&row, 3).unwrap();
        let out = softmax_masked(&masked).unwrap();
        let full = softmax_reference(&row).unwrap();
        assert_eq!(out, full);
    }

    #[test]
    fn mask_single_survivor() {
        let row = vec_of(&[5.0, 0.0, 0.0]);
        let masked = causal_mask_row(&row, 1).unwrap();
        let out = softmax_masked(&masked).unwrap();
        assert_eq!(out.as_slice(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn mask_rejects_out_of_range() {
        let row = vec_of(&[1.0, 2.0]);
        assert!(causal_mask_row(&row, 0).is_err());
        assert!(causal_mask_row(&row, 3).is_err());
    }

    #[test]
    fn layernorm_constant_vector_is_zero() {
        let v = vec_of(&[3.0, 3.0, 3.0, 3.0]);
        let gamma = vec_of(&[1.0; 4]);
        let beta = vec_of(&[0.0; 4]);
        let out = layernorm_reference(&v, &gamma, &beta, 1e-5).unwrap();
        for x in out.iter() {
            assert!(x.abs() < 1e-6);
        }
    }

    #[test]
    fn layernorm_unit_variance_pair() {
        let v = vec_of(&[-1.0, 1.0]);
        let gamma = vec_of(&[1.0, 1.0]);
        let beta = vec_of(&[0.0, 0.0]);
        let out = layernorm_reference(&v, &gamma, &beta, 1e-12).unwrap();
        assert!((out[0] + 1.0).abs() < 1e-6);
        assert!((out[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn layernorm_matches_two_pass_oracle() {
        let v: Vec<f64> = (0..64)
            .map(|i| ((i * 37 % 19) as f64) * 0.13 - 1.1)
            .collect();
        let (mean, std) = moments_oracle(&v);
        let eps = 1e-5;
        let gamma = vec_of(&vec![1.0; 64]);
        let beta = vec_of(&vec![0.0; 64]);
        let out = layernorm_reference(&vec_of(&v), &gamma, &beta, eps).unwrap();
        for (x, y) in v.iter().zip(out.iter()) {
            let want = (x - mean) / (std * std + eps).sqrt();
            let rel = (y - want).abs() / want.abs().max(1e-9);
            assert!(rel < 1e-5, "got {y}, want {want}");
        }
    }

    #[test]
    fn layernorm_pre_affine_is_standardized() {
        let v: Vec<f64> = (0..33).map(|i| (i as f64).sin() * 2.0 + 0.7).collect();
        let gamma = vec_of(&vec![1.0; 33]);
        let beta = vec_of(&vec![0.0; 33]);
        let out = layernorm_reference(&vec_of(&v), &gamma, &beta, 1e-10).unwrap();
        let (mean, std) = moments_oracle(out.as_slice());
        assert!(mean.abs() < 1e-4);
        assert!((std - 1.0).abs() < 1e-4);
    }

    #[test]
    fn layernorm_rejects_length_mismatch() {
        let v = vec_of(&[1.0, 2.0]);
        let g = vec_of(&[1.0]);
        let b = vec_of(&[0.0, 0.0]);
        assert!(layernorm_reference(&v, &g, &b, 1e-5).is_err());
    }

    #[test]
    fn streaming_softmax_single_zero() {
        let mut s = SoftmaxStats::new();
        s.update(&[0.0]).unwrap();
        assert_eq!(s.max(), 0.0);
        assert_eq!(s.exp_sum(), 1.0);
        assert_eq!(s.count(), 1);
    }

    #[test]
    fn streaming_softmax_any_tiling_matches_single_pass() {
        let v = [1.0, 2.0, 3.0];
        let single = {
            let mut s = SoftmaxStats::new();
            s.update(&v).unwrap();
            s
        };
        for split in 1..v.len() {
            let mut s = SoftmaxStats::new();
            s.update(&v[..split]).unwrap();
            s.update(&v[split..]).unwrap();
            assert_eq!(s.max(), single.max());
            let rel = (s.exp_sum() - single.exp_sum()).abs() / single.exp_sum();
            assert!(rel < 1e-9);
            assert_eq!(s.count(), 3);
        }
    }

    #[test]
    fn streaming_softmax_uniform_tile_sums_count() {
        let mut s = SoftmaxStats::new();
        s.update(&[2.5; 7]).unwrap();
        assert_eq!(s.max(), 2.5);
        assert!((s.exp_sum() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn streaming_softmax_exp_sum_at_least_one() {
        let mut s = SoftmaxStats::new();
        s.update(&[-5.0, -80.0]).unwrap();
        s.update(&[-1.0]).unwrap();
        assert!(s.exp_sum() >= 1.0);
    }

    #[test]
    fn normalize_matches_reference() {
        let v = [0.7, -0.3, 2.1, 1.0, -4.0, 0.0];
        let mut s = SoftmaxStats::new();
        s.update(&v[..2]).unwrap();
        s.update(&v[2..]).unwrap();
        let reference = softmax_oracle(&v);
        let mut total = 0.0;
        for (i, x) in v.iter().enumerate() {
            let p = s.normalize(*x).unwrap();
            assert!((p - reference[i]).abs() < 1e-6);
            total += p;
        }
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn normalize_uniform_pair() {
        let mut s = SoftmaxStats::new();
        s.update(&[0.0, 0.0]).unwrap();
        assert!((s.normalize(0.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn normalize_without_elements_is_domain_error() {
        let s = SoftmaxStats::new();
        assert!(matches!(s.normalize(0.0), Err(Error::NumericDomain(_))));
    }

    #[test]
    fn moments_constant_stream() {
        let mut m = MomentStats::new();
        m.extend(&[4.0, 4.0, 4.0]);
        let (mean, std) = m.finalize().unwrap();
        assert_eq!(mean, 4.0);
        assert_eq!(std, 0.0);
    }

    #[test]
    fn moments_zero_two() {
        let mut m = MomentStats::new();
        m.extend(&[0.0, 2.0]);
        let (mean, std) = m.finalize().unwrap();
        assert_eq!(mean, 1.0);
        assert_eq!(std, 1.0);
    }

    #[test]
    fn moments_match_two_pass_oracle_on_unit_interval() {
        let v: Vec<f64> = (0..257).map(|i| ((i * 31 % 101) as f64) / 100.0).collect();
        let mut m = MomentStats::new();
        m.extend(&v);
        let (mean, std) = m.finalize().unwrap();
        let (mean2, std2) = moments_oracle(&v);
        assert!((mean - mean2).abs() < 1e-5);
        assert!((std - std2).abs() < 1e-5);
    }

    #[test]
    fn moments_finalize_empty_is_invalid_state() {
        let m = MomentStats::new();
        assert!(matches!(m.finalize(), Err(Error::InvalidState(_))));
    }
}
