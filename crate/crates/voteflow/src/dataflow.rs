//! GEMV under both mathematical interpretations, transpose-free attention
//! kernels over the row-addressed `(l, d)` KV layout, and cycle-plan
//! generation for flexible and fixed-adder-tree engines.
//!
//! The GEMV notation throughout is `(1, k) x (k, n) = (1, n)`. The inner
//! interpretation reduces over `k` and emits output elements one by one; the
//! outer interpretation broadcasts input elements one by one and accumulates
//! partial output rows. Element-serial emission/consumption is part of the
//! operation contract so that nonlinear reductions and normalizations can
//! overlap with the GEMV streams.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{DenseMatrix, DenseVector};

/// GEMV problem shape `(1, k) x (k, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GemvProblem {
    pub k: usize,
    pub n: usize,
}

impl GemvProblem {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(Error::invalid_argument("gemv dims must be >= 1"));
        }
        Ok(GemvProblem { k, n })
    }

    pub fn macs(&self) -> u64 {
        self.k as u64 * self.n as u64
    }
}

/// The two mathematical interpretations of GEMV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpretation {
    /// Dot products column by column; reduces over `k`, emits over `n`.
    Inner,
    /// Scalar-times-row partial vectors; broadcasts over `k`, spans `n`.
    Outer,
}

/// KV cache storage for one layer and one head: `l` position-addressed rows
/// of `d` elements, K and V sharing the format. Only row access is exposed;
/// nothing in the crate can materialize a `(d, l)` transpose of it.
#[derive(Debug, Clone, Default)]
pub struct KVLayout {
    data: Vec<f64>,
    dim: usize,
}

impl KVLayout {
    pub fn new(dim: usize) -> Self {
        KVLayout {
            data: Vec::new(),
            dim,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut kv = KVLayout::new(dim);
        for r in rows {
            kv.push_row(r)?;
        }
        Ok(kv)
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// One memory operation fetches one `(1, d)` row.
    pub fn row(&self, addr: usize) -> &[f64] {
        &self.data[addr * self.dim..(addr + 1) * self.dim]
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::invalid_argument(format!(
                "row length {} != layout dim {}",
                row.len(),
                self.dim
            )));
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    /// Removes the row at `addr`, shifting later addresses down by one.
    pub fn remove_row(&mut self, addr: usize) {
        let start = addr * self.dim;
        self.data.drain(start..start + self.dim);
    }
}

fn check_shapes(x_len: usize, w: &DenseMatrix) -> Result<()> {
    if x_len != w.rows() {
        return Err(Error::invalid_argument(format!(
            "gemv shape mismatch: x has {} elements, W is {}x{}",
            x_len,
            w.rows(),
            w.cols()
        )));
    }
    Ok(())
}

/// Inner-product GEMV: `out[j] = sum_i x[i] * W[i, j]`, emitting output
/// elements to `sink` in index order (the element-serial output contract).
pub fn inner_product_gemv(
    x: &DenseVector,
    w: &DenseMatrix,
    mut sink: impl FnMut(usize, f64),
) -> Result<DenseVector> {
    check_shapes(x.len(), w)?;
    let mut out = Vec::with_capacity(w.cols());
    for j in 0..w.cols() {
        let mut acc = 0.0;
        for i in 0..w.rows() {
            acc += x[i] * w.get(i, j);
        }
        sink(j, acc);
        out.push(acc);
    }
    DenseVector::new(out)
}

/// Outer-product GEMV: consumes input elements one by one from `source`
/// (the element-serial input contract) and accumulates `x[i] * W[i, .]`
/// partial rows into the output.
pub fn outer_product_gemv_streamed(
    k: usize,
    w: &DenseMatrix,
    mut source: impl FnMut(usize) -> f64,
) -> Result<DenseVector> {
    check_shapes(k, w)?;
    let mut out = vec![0.0; w.cols()];
    for i in 0..k {
        let xi = source(i);
        let row = w.row(i);
        for (o, wij) in out.iter_mut().zip(row) {
            *o += xi * wij;
        }
    }
    DenseVector::new(out)
}

/// Outer-product GEMV over a materialized input vector.
pub fn outer_product_gemv(x: &DenseVector, w: &DenseMatrix) -> Result<DenseVector> {
    outer_product_gemv_streamed(x.len(), w, |i| x[i])
}

/// Attention scores `s[j] = q . K[j]` over the `(l, d)` layout, one cache
/// row per step, emitted serially. No `(d, l)` transpose is ever formed.
pub fn qk_scores(
    q: &DenseVector,
    kcache: &KVLayout,
    mut sink: impl FnMut(usize, f64),
) -> Result<DenseVector> {
    if q.len() != kcache.dim() {
        return Err(Error::invalid_argument(format!(
            "query dim {} != cache dim {}",
            q.len(),
            kcache.dim()
        )));
    }
    if kcache.is_empty() {
        return Err(Error::invalid_argument("empty kv cache"));
    }
    let mut out = Vec::with_capacity(kcache.len());
    for j in 0..kcache.len() {
        let row = kcache.row(j);
        let s: f64 = q.iter().zip(row).map(|(a, b)| a * b).sum();
        sink(j, s);
        out.push(s);
    }
    DenseVector::new(out)
}

/// Attention output `o = sum_j s'[j] * V[j]`, consuming `s'` serially from
/// `source` (one scalar broadcast per cache row).
pub fn sv_output_streamed(
    l: usize,
    vcache: &KVLayout,
    mut source: impl FnMut(usize) -> f64,
) -> Result<DenseVector> {
    if l != vcache.len() {
        return Err(Error::invalid_argument(format!(
            "weight length {} != cache rows {}",
            l,
            vcache.len()
        )));
    }
    let mut out = vec![0.0; vcache.dim()];
    for j in 0..l {
        let sj = source(j);
        for (o, v) in out.iter_mut().zip(vcache.row(j)) {
            *o += sj * v;
        }
    }
    DenseVector::new(out)
}

/// Attention output over a materialized score vector.
pub fn sv_output(s_prime: &DenseVector, vcache: &KVLayout) -> Result<DenseVector> {
    sv_output_streamed(s_prime.len(), vcache, |j| s_prime[j])
}

/// Cycle plan for one GEMV on a lane-parallel engine.
///
/// Inner: `k` maps spatially, `n` temporally; `passes = ceil(k/lanes)` lane
/// passes feed one output element, so the plan runs `n * passes` cycles.
/// Outer: `n` maps spatially, `k` temporally; each pass of
/// `ceil(n/lanes)` covers one output slice for all `k` broadcast cycles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GemvSchedule {
    pub interpretation: Interpretation,
    pub problem: GemvProblem,
    pub lanes: usize,
    pub passes: usize,
    pub total_cycles: u64,
    /// Mean fraction of lanes doing useful work per cycle.
    pub utilization: f64,
}

fn div_ceil(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// Plans a GEMV on a `lanes`-wide flexible engine. The serially-accessed
/// dimension maps to cycles, so arbitrary sizes in that dimension cost
/// cycles instead of utilization.
pub fn make_schedule(p: GemvProblem, interp: Interpretation, lanes: usize) -> Result<GemvSchedule> {
    if lanes == 0 {
        return Err(Error::invalid_argument("lanes must be >= 1"));
    }
    let (passes, total_cycles, spatial) = match interp {
        Interpretation::Inner => {
            let passes = div_ceil(p.k, lanes);
            (passes, p.n as u64 * passes as u64, p.k)
        }
        Interpretation::Outer => {
            let passes = div_ceil(p.n, lanes);
            (passes, p.k as u64 * passes as u64, p.n)
        }
    };
    Ok(GemvSchedule {
        interpretation: interp,
        problem: p,
        lanes,
        passes,
        total_cycles,
        utilization: spatial as f64 / (passes * lanes) as f64,
    })
}

/// Plans a GEMV on a fixed `tree_width`-input multiplier-and-adder-tree
/// engine (inner product only). `k` is padded up to whole tree passes.
pub fn fixed_tree_schedule(p: GemvProblem, tree_width: usize) -> Result<GemvSchedule> {
    if tree_width == 0 {
        return Err(Error::invalid_argument("tree width must be >= 1"));
    }
    let passes = div_ceil(p.k, tree_width);
    Ok(GemvSchedule {
        interpretation: Interpretation::Inner,
        problem: p,
        lanes: tree_width,
        passes,
        total_cycles: p.n as u64 * passes as u64,
        utilization: p.k as f64 / (passes * tree_width) as f64,
    })
}
