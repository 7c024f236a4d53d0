//! Reduced density matrices and entanglement measures of pure states.
//!
//! Subsystem matrices are indexed by the subsystem's own bit pattern, lowest
//! site least significant; for a single site index 0 is ↓ and index 1 is ↑.
//! Entropies are in nats.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagator::StateVector;

const TRACE_TOLERANCE: f64 = 1e-10;
const NEGATIVE_EIGENVALUE_TOLERANCE: f64 = 1e-12;
/// Below this dimension per-site work is not worth spreading over threads.
const PARALLEL_DIM: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDensityMatrix {
    pub matrix: DMatrix<Complex64>,
    pub sites: Vec<usize>,
}

impl ReducedDensityMatrix {
    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Reduced state of one site.
pub fn single_site_rdm(psi: &StateVector, site: usize) -> Result<ReducedDensityMatrix> {
    let len = psi.chain_len();
    if site >= len {
        return Err(Error::SiteOutOfRange { site, len });
    }
    let (down, up, coherence) = site_moments(psi.amplitudes(), site);
    let total = down + up;
    let matrix = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(down / total, 0.0),
            coherence.conj() / total,
            coherence / total,
            Complex64::new(up / total, 0.0),
        ],
    );
    Ok(ReducedDensityMatrix {
        matrix,
        sites: vec![site],
    })
}

/// `(Σ|ψ_↓|², Σ|ψ_↑|², Σ ψ_↑ ψ̄_↓)` over index pairs differing only in `site`.
fn site_moments(amps: &[Complex64], site: usize) -> (f64, f64, Complex64) {
    let stride = 1usize << site;
    let mut down = 0.0;
    let mut up = 0.0;
    let mut coherence = Complex64::new(0.0, 0.0);
    for chunk in amps.chunks_exact(2 * stride) {
        let (lo, hi) = chunk.split_at(stride);
        for (a, b) in lo.iter().zip(hi) {
            down += a.norm_sqr();
            up += b.norm_sqr();
            coherence += b * a.conj();
        }
    }
    (down, up, coherence)
}

/// Reduced state of a contiguous block of sites.
pub fn block_rdm(psi: &StateVector, sites: &[usize]) -> Result<ReducedDensityMatrix> {
    let len = psi.chain_len();
    if sites.is_empty() || sites.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(Error::NonContiguous(sites.to_vec()));
    }
    let first = sites[0];
    let k = sites.len();
    if first + k > len {
        return Err(Error::SiteOutOfRange {
            site: first + k - 1,
            len,
        });
    }
    if k > len / 2 + 1 {
        return Err(Error::InvalidParameter(format!(
            "block of {k} sites exceeds half of a {len}-site chain plus one"
        )));
    }
    let amps = psi.amplitudes();
    let block_dim = 1usize << k;
    let low_dim = 1usize << first;
    let high_dim = 1usize << (len - first - k);
    // rows: block configuration, columns: environment configuration
    let m = DMatrix::from_fn(block_dim, low_dim * high_dim, |b, env| {
        let low = env % low_dim;
        let high = env / low_dim;
        amps[(high << (first + k)) | (b << first) | low]
    });
    let mut matrix = &m * m.adjoint();
    let trace: f64 = matrix.diagonal().iter().map(|z| z.re).sum();
    matrix /= Complex64::new(trace, 0.0);
    Ok(ReducedDensityMatrix {
        matrix,
        sites: sites.to_vec(),
    })
}

/// `-Tr ρ ln ρ`.
pub fn vn_entropy(rho: &ReducedDensityMatrix) -> Result<f64> {
    let trace = rho.trace();
    if (trace - 1.0).abs() > TRACE_TOLERANCE {
        return Err(Error::InvalidDensityMatrix(format!("trace {trace}")));
    }
    let eigenvalues: Vec<f64> = if rho.dim() == 2 {
        let m = &rho.matrix;
        let (a, d, b) = (m[(0, 0)].re, m[(1, 1)].re, m[(0, 1)]);
        let r = ((a - d).powi(2) + 4.0 * b.norm_sqr()).sqrt();
        vec![0.5 * (trace + r), 0.5 * (trace - r)]
    } else {
        SymmetricEigen::new(rho.matrix.clone()).eigenvalues.iter().copied().collect()
    };
    let mut s = 0.0;
    for &l in &eigenvalues {
        if l < -NEGATIVE_EIGENVALUE_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {l}")));
        }
        s -= xlnx(l.clamp(0.0, 1.0));
    }
    Ok(s.max(0.0))
}

/// Total correlations computed as the relative entropy from the state to the
/// product of its single-site marginals, `−S(ψ) − ⟨ψ| Σ_n ln ρ_n |ψ⟩`, with
/// each `ln ρ_n` applied to the state directly. For a pure state `S(ψ) = 0`,
/// so this is an independent route to `Σ_n S_n`.
pub fn total_correlations(psi: &StateVector) -> Result<f64> {
    let n = psi.norm();
    if (n - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(n));
    }
    let amps = psi.amplitudes();
    let mut cross = 0.0;
    for site in 0..psi.chain_len() {
        let rho = single_site_rdm(psi, site)?;
        let eig = SymmetricEigen::new(rho.matrix.clone());
        let mut log_rho = DMatrix::<Complex64>::zeros(2, 2);
        for (k, &l) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(k);
            // an empty eigendirection carries no weight; any finite log works
            let ln = l.max(f64::MIN_POSITIVE).ln();
            log_rho += v * v.adjoint() * Complex64::new(ln, 0.0);
        }
        let stride = 1usize << site;
        let mut expectation = Complex64::new(0.0, 0.0);
        for chunk in amps.chunks_exact(2 * stride) {
            let (lo, hi) = chunk.split_at(stride);
            for (a, b) in lo.iter().zip(hi) {
                let ta = log_rho[(0, 0)] * a + log_rho[(0, 1)] * b;
                let tb = log_rho[(1, 0)] * a + log_rho[(1, 1)] * b;
                expectation += a.conj() * ta + b.conj() * tb;
            }
        }
        cross -= expectation.re;
    }
    // same normalization as the reduced density matrices
    Ok(cross / (n * n))
}

/// `x ln x` with `0 ln 0 = 0`.
pub fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Entanglement summary of one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRecord {
    pub t: f64,
    /// `S_n` for every site.
    pub site_entropies: Vec<f64>,
    /// Lattice average of `S_n`.
    pub average: f64,
    /// `Σ S_n − S(global)`; the global state is pure so this is `L·S`.
    pub total_correlations: f64,
    pub half_chain: Option<f64>,
    /// Root-mean-square deviation of `S_n` from the average.
    pub lattice_deviation: f64,
}

impl EntropyRecord {
    pub fn from_site_entropies(t: f64, site_entropies: Vec<f64>, half_chain: Option<f64>) -> Self {
        let len = site_entropies.len() as f64;
        let total: f64 = site_entropies.iter().sum();
        let average = total / len;
        let lattice_deviation = (site_entropies
            .iter()
            .map(|s| (s - average).powi(2))
            .sum::<f64>()
            / len)
            .sqrt();
        Self {
            t,
            site_entropies,
            average,
            total_correlations: total,
            half_chain,
            lattice_deviation,
        }
    }

    pub fn chain_len(&self) -> usize {
        self.site_entropies.len()
    }
}

pub fn entropy_record(psi: &StateVector, t: f64, with_half_chain: bool) -> Result<EntropyRecord> {
    let len = psi.chain_len();
    let n = psi.norm();
    if (n - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(n));
    }
    let site_entropy = |site| single_site_rdm(psi, site).and_then(|rho| vn_entropy(&rho));
    let site_entropies: Vec<f64> = if psi.dim() >= PARALLEL_DIM {
        (0..len).into_par_iter().map(site_entropy).collect::<Result<_>>()?
    } else {
        (0..len).map(site_entropy).collect::<Result<_>>()?
    };
    let half_chain = if with_half_chain && len >= 2 {
        let sites: Vec<usize> = (0..len / 2).collect();
        Some(vn_entropy(&block_rdm(psi, &sites)?)?)
    } else {
        None
    };
    Ok(EntropyRecord::from_site_entropies(t, site_entropies, half_chain))
}
