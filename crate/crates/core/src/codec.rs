//! Systematic (n, k, m) MDS array codec over GF(2^8).
//!
//! Nodes `1..=k` hold the data columns verbatim and nodes `k+1..=n` hold
//! parity. Every row of the array is an independent codeword of the same
//! scalar MDS code, so any `k` columns determine the whole array.
//!
//! Node ids are 1-based at this API boundary.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{mul_add_slice, Gf256};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("invalid code parameters: {0}")]
    InvalidParams(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid node subset: {0}")]
    Subset(String),
}

/// Geometry of an (n, k, m) array code. `r = n - k` parity nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodeParams {
    n: usize,
    k: usize,
    m: usize,
}

impl CodeParams {
    pub fn new(n: usize, k: usize, m: usize) -> Result<Self, CodecError> {
        if k < 1 {
            return Err(CodecError::InvalidParams(format!("k must be at least 1, got {k}")));
        }
        if k >= n {
            return Err(CodecError::InvalidParams(format!("need k < n, got n={n} k={k}")));
        }
        if n > 255 {
            return Err(CodecError::InvalidParams(format!("n must be at most 255, got {n}")));
        }
        if m < 1 {
            return Err(CodecError::InvalidParams("m must be at least 1".into()));
        }
        Ok(Self { n, k, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn r(&self) -> usize {
        self.n - self.k
    }

    /// Same (n, k) with a different sub-packetization level.
    pub fn with_m(&self, m: usize) -> Result<Self, CodecError> {
        Self::new(self.n, self.k, m)
    }

    fn check_node(&self, id: usize) -> Result<(), CodecError> {
        if id == 0 || id > self.n {
            return Err(CodecError::Subset(format!("node id {id} outside 1..={}", self.n)));
        }
        Ok(())
    }
}

/// Dense square matrix over GF(2^8), row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    size: usize,
    cells: Vec<Gf256>,
}

impl Matrix {
    pub fn from_fn(size: usize, f: impl Fn(usize, usize) -> Gf256) -> Self {
        let mut cells = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                cells.push(f(i, j));
            }
        }
        Self { size, cells }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> Gf256 {
        self.cells[i * self.size + j]
    }

    /// Gauss-Jordan inverse; `None` when singular.
    pub fn inverse(&self) -> Option<Matrix> {
        let n = self.size;
        let mut a = self.cells.clone();
        let mut inv = Matrix::from_fn(n, |i, j| if i == j { Gf256::ONE } else { Gf256::ZERO }).cells;
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a[r * n + col].is_zero())?;
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                    inv.swap(pivot * n + j, col * n + j);
                }
            }
            let scale = a[col * n + col].inv().ok()?;
            for j in 0..n {
                a[col * n + j] *= scale;
                inv[col * n + j] *= scale;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[r * n + col];
                if factor.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let (pa, pi) = (a[col * n + j], inv[col * n + j]);
                    a[r * n + j] += factor * pa;
                    inv[r * n + j] += factor * pi;
                }
            }
        }
        Some(Matrix { size: n, cells: inv })
    }

    pub fn is_invertible(&self) -> bool {
        self.inverse().is_some()
    }
}

/// Systematic k×n generator `[I_k | C]`.
///
/// `C[i][j] = 1 / (u_i + v_j)` with `u_i = i` and `v_j = k + j` (0-based), a
/// Cauchy block, so every k×k submatrix of the generator is invertible. With a
/// single parity node the column is all ones and parity is the XOR of the data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    params: CodeParams,
    /// k×r parity coefficients, row-major.
    parity: Vec<Gf256>,
}

impl Generator {
    pub fn new(params: CodeParams) -> Self {
        let (k, r) = (params.k(), params.r());
        let parity = if r == 1 {
            vec![Gf256::ONE; k]
        } else {
            let mut parity = Vec::with_capacity(k * r);
            for i in 0..k {
                for j in 0..r {
                    let denom = Gf256(i as u8) + Gf256((k + j) as u8);
                    parity.push(denom.inv().expect("Cauchy points are distinct"));
                }
            }
            parity
        };
        Self { params, parity }
    }

    pub fn params(&self) -> CodeParams {
        self.params
    }

    /// Entry `(row, col)` of the k×n generator, both 0-based.
    pub fn coefficient(&self, row: usize, col: usize) -> Gf256 {
        let k = self.params.k();
        if col < k {
            if row == col {
                Gf256::ONE
            } else {
                Gf256::ZERO
            }
        } else {
            self.parity[row * self.params.r() + (col - k)]
        }
    }

    /// The k×k submatrix formed by the given 0-based columns.
    pub fn submatrix(&self, cols: &[usize]) -> Matrix {
        Matrix::from_fn(cols.len(), |i, j| self.coefficient(i, cols[j]))
    }
}

/// The full n-column array: data columns followed by parity columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeArray {
    pub params: CodeParams,
    pub columns: Vec<Vec<u8>>,
}

impl CodeArray {
    /// Column of node `id` (1-based).
    pub fn node(&self, id: usize) -> &[u8] {
        &self.columns[id - 1]
    }

    pub fn data_columns(&self) -> &[Vec<u8>] {
        &self.columns[..self.params.k()]
    }
}

/// Encoder/decoder for one (n, k) code. Inverses are cached per node subset.
#[derive(Debug)]
pub struct MdsCodec {
    generator: Generator,
    inverse_cache: Mutex<HashMap<Vec<usize>, Matrix>>,
}

impl Clone for MdsCodec {
    fn clone(&self) -> Self {
        Self::new(self.generator.params())
    }
}

impl MdsCodec {
    pub fn new(params: CodeParams) -> Self {
        Self {
            generator: Generator::new(params),
            inverse_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn params(&self) -> CodeParams {
        self.generator.params()
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    /// Encode `k` data columns of `m` symbols each into the full array.
    pub fn encode<C: AsRef<[u8]>>(&self, data: &[C]) -> Result<CodeArray, CodecError> {
        let p = self.params();
        if data.len() != p.k() {
            return Err(CodecError::Shape(format!(
                "expected {} data columns, got {}",
                p.k(),
                data.len()
            )));
        }
        if let Some((i, c)) = data.iter().enumerate().find(|(_, c)| c.as_ref().len() != p.m()) {
            return Err(CodecError::Shape(format!(
                "data column {} has {} symbols, expected {}",
                i + 1,
                c.as_ref().len(),
                p.m()
            )));
        }
        let mut columns: Vec<Vec<u8>> = data.iter().map(|c| c.as_ref().to_vec()).collect();
        for col in p.k()..p.n() {
            let mut parity = vec![0u8; p.m()];
            for (row, d) in data.iter().enumerate() {
                mul_add_slice(&mut parity, d.as_ref(), self.generator.coefficient(row, col));
            }
            columns.push(parity);
        }
        Ok(CodeArray { params: p, columns })
    }

    fn validate_subset<C: AsRef<[u8]>>(
        &self,
        ids: &[usize],
        symbols: &[C],
    ) -> Result<usize, CodecError> {
        let p = self.params();
        if ids.len() != p.k() {
            return Err(CodecError::Subset(format!("need exactly {} node ids, got {}", p.k(), ids.len())));
        }
        if symbols.len() != ids.len() {
            return Err(CodecError::Shape(format!(
                "{} node ids but {} columns",
                ids.len(),
                symbols.len()
            )));
        }
        let mut seen = [false; 256];
        for &id in ids {
            p.check_node(id)?;
            if std::mem::replace(&mut seen[id], true) {
                return Err(CodecError::Subset(format!("duplicate node id {id}")));
            }
        }
        let m = symbols[0].as_ref().len();
        if m == 0 || symbols.iter().any(|s| s.as_ref().len() != m) {
            return Err(CodecError::Shape("columns must share a nonzero length".into()));
        }
        Ok(m)
    }

    fn inverse_for(&self, ids: &[usize]) -> Matrix {
        let key: Vec<usize> = ids.to_vec();
        let mut cache = self.inverse_cache.lock().expect("inverse cache poisoned");
        cache
            .entry(key)
            .or_insert_with(|| {
                let cols: Vec<usize> = ids.iter().map(|id| id - 1).collect();
                self.generator
                    .submatrix(&cols)
                    .inverse()
                    .expect("generator submatrix singular: MDS invariant broken")
            })
            .clone()
    }

    /// Recover the `k` data columns from the columns of `k` distinct nodes.
    ///
    /// Column length may differ from `params.m()`; every row is solved with the
    /// same inverse.
    pub fn decode_from<C: AsRef<[u8]>>(
        &self,
        ids: &[usize],
        symbols: &[C],
    ) -> Result<Vec<Vec<u8>>, CodecError> {
        let m = self.validate_subset(ids, symbols)?;
        let k = self.params().k();
        if ids.iter().enumerate().all(|(i, &id)| id == i + 1) {
            return Ok(symbols.iter().map(|s| s.as_ref().to_vec()).collect());
        }
        // codeword_S = data · G_S, so data = codeword_S · G_S^{-1}
        let inv = self.inverse_for(ids);
        let mut data = vec![vec![0u8; m]; k];
        for (out_col, out) in data.iter_mut().enumerate() {
            for (src_idx, src) in symbols.iter().enumerate() {
                mul_add_slice(out, src.as_ref(), inv.get(src_idx, out_col));
            }
        }
        Ok(data)
    }

    /// The column of node `target`, read through if present or rebuilt from
    /// the `k` given columns otherwise.
    pub fn recover_node<C: AsRef<[u8]>>(
        &self,
        ids: &[usize],
        symbols: &[C],
        target: usize,
    ) -> Result<Vec<u8>, CodecError> {
        let m = self.validate_subset(ids, symbols)?;
        self.params().check_node(target)?;
        if let Some(pos) = ids.iter().position(|&id| id == target) {
            return Ok(symbols[pos].as_ref().to_vec());
        }
        let data = self.decode_from(ids, symbols)?;
        let col = target - 1;
        let mut out = vec![0u8; m];
        for (row, d) in data.iter().enumerate() {
            mul_add_slice(&mut out, d, self.generator.coefficient(row, col));
        }
        Ok(out)
    }
}
