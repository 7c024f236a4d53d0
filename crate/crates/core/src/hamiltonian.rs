//! Random-field XXZ Hamiltonian in the `z` basis.
//!
//! ```text
//! H = Σ_i J⊥ (s^x_i s^x_{i+1} + s^y_i s^y_{i+1}) + Δ s^z_i s^z_{i+1} + Σ_i h_i s^z_i
//! ```
//!
//! with spin-1/2 operators `s = σ/2`, ħ = 1 and fields `h_i` uniform on
//! `[-W, W]`. The flip-flop term couples configurations that differ by one
//! adjacent ↑↓ ↔ ↓↑ exchange with amplitude `J⊥/2`; everything else is
//! diagonal. The matrix is real symmetric and conserves total `s^z`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{self, SectorDecomposition};

/// Largest dimension accepted by [`dense_spectrum`].
pub const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    #[default]
    Periodic,
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Boundary::Open),
            "periodic" | "pbc" => Ok(Boundary::Periodic),
            other => Err(Error::Parse(format!("unknown boundary '{other}'"))),
        }
    }
}

/// One draw of the random fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub fields: Vec<f64>,
    #[serde(rename = "W")]
    pub w: f64,
    pub seed: u64,
    pub realization_index: u64,
}

impl DisorderRealization {
    pub fn clean(len: usize) -> Self {
        Self {
            fields: vec![0.0; len],
            w: 0.0,
            seed: 0,
            realization_index: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

/// Samples i.i.d. fields on `[-W, W]`.
///
/// Each realization reads its own ChaCha stream (`stream = realization_index`)
/// under the master seed, so a realization can be regenerated without
/// replaying the ones before it. The underlying uniform draws do not depend
/// on `W`: sweeps over disorder strength share the same field pattern.
pub fn sample_disorder(
    len: usize,
    w: f64,
    seed: u64,
    realization_index: u64,
) -> Result<DisorderRealization> {
    if !(w >= 0.0 && w.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "disorder strength must be finite and >= 0, got {w}"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(realization_index);
    let fields = (0..len)
        .map(|_| w * (2.0 * rng.random::<f64>() - 1.0))
        .collect();
    Ok(DisorderRealization {
        fields,
        w,
        seed,
        realization_index,
    })
}

/// Compressed-row storage for a real sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of one row, columns ascending.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.values[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r)
            .find(|&(col, _)| col == c)
            .map_or(0.0, |(_, v)| v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|r| self.get(r, r)).sum()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|r| self.row(r).all(|(c, v)| c == r || v == 0.0))
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += x[self.cols[k] as usize] * self.values[k];
            }
            *out = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Restriction to the rows and columns in `indices` (ascending), which
    /// must be closed under the matrix's couplings.
    pub fn block(&self, indices: &[usize]) -> CsrMatrix {
        let mut local = std::collections::HashMap::with_capacity(indices.len());
        for (i, &g) in indices.iter().enumerate() {
            local.insert(g, i as u32);
        }
        let mut row_ptr = Vec::with_capacity(indices.len() + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &g in indices {
            for (c, v) in self.row(g) {
                let lc = *local
                    .get(&c)
                    .expect("block index set not closed under the matrix");
                cols.push(lc);
                values.push(v);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix {
            dim: indices.len(),
            row_ptr,
            cols,
            values,
        }
    }

    fn from_rows(rows: Vec<Vec<(u32, f64)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|&(c, _)| c);
            for (c, v) in row {
                cols.push(c);
                values.push(v);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix {
            dim,
            row_ptr,
            cols,
            values,
        }
    }
}

/// What a [`SparseHamiltonian`] was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    Xxz {
        len: usize,
        delta: f64,
        hopping: f64,
        fields: Vec<f64>,
        boundary: Boundary,
    },
    /// `σ^z_1 + σ^z_2 + V σ^z_1 σ^z_2` in Pauli normalization.
    TwoSpin { v_int: f64 },
}

#[derive(Debug, Clone)]
pub struct SparseHamiltonian {
    matrix: CsrMatrix,
    model: Model,
    len: usize,
}

impl SparseHamiltonian {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn chain_len(&self) -> usize {
        self.len
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim
    }

    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.matrix.apply(x, y)
    }

    /// `<ψ|H|ψ>` (real because H is Hermitian).
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        let mut hpsi = vec![Complex64::new(0.0, 0.0); psi.len()];
        self.apply(psi, &mut hpsi);
        psi.iter().zip(&hpsi).map(|(a, b)| (a.conj() * b).re).sum()
    }
}

/// Nearest-neighbour bonds of the chain; a periodic chain of two sites has a
/// single bond.
pub fn bonds(len: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..len.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    if boundary == Boundary::Periodic && len > 2 {
        out.push((len - 1, 0));
    }
    out
}

pub fn build_hamiltonian(
    len: usize,
    delta: f64,
    hopping: f64,
    disorder: &DisorderRealization,
    boundary: Boundary,
) -> Result<SparseHamiltonian> {
    if len < 2 {
        return Err(Error::InvalidParameter(format!(
            "XXZ chain needs at least 2 sites, got {len}"
        )));
    }
    hilbert::check_len(len)?;
    if disorder.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            got: disorder.len(),
        });
    }
    let bonds = bonds(len, boundary);
    let fields = &disorder.fields;
    let dim = 1usize << len;
    let rows = (0..dim)
        .map(|a| {
            let sz = |i: usize| if a >> i & 1 == 1 { 1.0 } else { -1.0 };
            let mut diag = 0.0;
            let mut row = Vec::with_capacity(bonds.len() + 1);
            for &(i, j) in &bonds {
                diag += 0.25 * delta * sz(i) * sz(j);
                if hopping != 0.0 && sz(i) != sz(j) {
                    let b = a ^ (1 << i | 1 << j);
                    row.push((b as u32, 0.5 * hopping));
                }
            }
            for (i, h) in fields.iter().enumerate() {
                diag += 0.5 * h * sz(i);
            }
            row.push((a as u32, diag));
            row
        })
        .collect();
    Ok(SparseHamiltonian {
        matrix: CsrMatrix::from_rows(rows),
        model: Model::Xxz {
            len,
            delta,
            hopping,
            fields: fields.clone(),
            boundary,
        },
        len,
    })
}

/// The two-spin dephasing model `σ^z_1 + σ^z_2 + V σ^z_1 σ^z_2`.
pub fn build_phenomenological_two_spin(v_int: f64) -> SparseHamiltonian {
    let rows = (0..4usize)
        .map(|a| {
            let s1 = if a & 1 == 1 { 1.0 } else { -1.0 };
            let s2 = if a & 2 == 2 { 1.0 } else { -1.0 };
            vec![(a as u32, s1 + s2 + v_int * s1 * s2)]
        })
        .collect();
    SparseHamiltonian {
        matrix: CsrMatrix::from_rows(rows),
        model: Model::TwoSpin { v_int },
        len: 2,
    }
}

/// Eigenpairs of one magnetization block.
#[derive(Debug, Clone)]
pub struct EigenBlock {
    /// Basis indices spanned by this block, ascending.
    pub indices: Vec<usize>,
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]` in block coordinates.
    pub vectors: DMatrix<f64>,
}

/// Full spectrum of a magnetization-conserving Hamiltonian, stored block by
/// block. Eigenvalues are exposed in globally ascending order.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    dim: usize,
    blocks: Vec<EigenBlock>,
    values: Vec<f64>,
    order: Vec<(usize, usize)>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    pub fn blocks(&self) -> &[EigenBlock] {
        &self.blocks
    }

    /// Eigenvector `k` (ascending order) embedded in the full space.
    pub fn eigenvector(&self, k: usize) -> DVector<f64> {
        let (b, col) = self.order[k];
        let block = &self.blocks[b];
        let mut v = DVector::zeros(self.dim);
        for (i, &g) in block.indices.iter().enumerate() {
            v[g] = block.vectors[(i, col)];
        }
        v
    }

    /// Dense `D×D` eigenvector matrix, columns in ascending eigenvalue order.
    pub fn to_dense_vectors(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for k in 0..self.dim {
            m.set_column(k, &self.eigenvector(k));
        }
        m
    }

    /// `|<E_ν|ψ>|²` for every eigenstate, in ascending eigenvalue order.
    pub fn overlaps(&self, psi: &[Complex64]) -> Result<Vec<f64>> {
        if psi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: psi.len(),
            });
        }
        let per_block: Vec<Vec<f64>> = self
            .blocks
            .iter()
            .map(|block| {
                (0..block.values.len())
                    .map(|col| {
                        let amp: Complex64 = block
                            .indices
                            .iter()
                            .enumerate()
                            .map(|(i, &g)| psi[g] * block.vectors[(i, col)])
                            .sum();
                        amp.norm_sqr()
                    })
                    .collect()
            })
            .collect();
        Ok(self.order.iter().map(|&(b, c)| per_block[b][c]).collect())
    }
}

/// Dense diagonalization, one magnetization sector at a time.
pub fn dense_spectrum(h: &SparseHamiltonian) -> Result<EigenDecomposition> {
    let dim = h.dim();
    if dim > DENSE_LIMIT {
        return Err(Error::DimensionTooLarge(dim));
    }
    let sectors = hilbert::sector_decomposition(h.chain_len())?;
    Ok(spectrum_by_sectors(h.matrix(), &sectors))
}

fn spectrum_by_sectors(matrix: &CsrMatrix, sectors: &SectorDecomposition) -> EigenDecomposition {
    let blocks: Vec<EigenBlock> = sectors
        .sectors()
        .iter()
        .map(|s| {
            let dense = matrix.block(&s.indices).to_dense();
            let eig = SymmetricEigen::new(dense);
            let mut perm: Vec<usize> = (0..s.len()).collect();
            perm.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let values = perm.iter().map(|&k| eig.eigenvalues[k]).collect();
            let vectors = DMatrix::from_fn(s.len(), s.len(), |r, c| eig.eigenvectors[(r, perm[c])]);
            EigenBlock {
                indices: s.indices.clone(),
                values,
                vectors,
            }
        })
        .collect();
    let mut order: Vec<(usize, usize)> = blocks
        .iter()
        .enumerate()
        .flat_map(|(b, blk)| (0..blk.values.len()).map(move |c| (b, c)))
        .collect();
    order.sort_by(|&(b1, c1), &(b2, c2)| blocks[b1].values[c1].total_cmp(&blocks[b2].values[c2]));
    let values = order.iter().map(|&(b, c)| blocks[b].values[c]).collect();
    EigenDecomposition {
        dim: sectors.dim(),
        blocks,
        values,
        order,
    }
}
