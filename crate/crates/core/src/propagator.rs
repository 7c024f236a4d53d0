//! Real-time evolution `|ψ(t)> = exp(-iHt)|ψ(0)>`.
//!
//! The workhorse is [`lanczos_expv`]: a Lanczos basis of dimension at most
//! `m` is built from the current state, the small tridiagonal projection is
//! exponentiated exactly, and the step is shortened until the a-posteriori
//! residual estimate `β_m |[exp(-iTτ) e_1]_m|` is below tolerance. One basis
//! serves every trial step length, so step control costs no extra
//! matrix-vector products.
//!
//! [`exact_expv`] applies the full spectral propagator and is used as the
//! reference for small chains.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{CsrMatrix, EigenDecomposition, SparseHamiltonian};
use crate::hilbert::{self, SectorDecomposition};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const BREAKDOWN: f64 = 1e-14;
const NORM_TOLERANCE: f64 = 1e-10;

/// A pure state in the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Wraps amplitudes that are already normalized to within `1e-10`.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let s = Self { amps };
        let n = s.norm();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(n));
        }
        Ok(s)
    }

    /// Normalizes arbitrary non-zero amplitudes.
    pub fn normalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let n = norm(&amps);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized(n));
        }
        amps.iter_mut().for_each(|a| *a /= n);
        Ok(Self { amps })
    }

    pub fn basis(index: usize, dim: usize) -> Self {
        let mut amps = vec![ZERO; dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// Number of sites, `log2(dim)`.
    pub fn chain_len(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        dot(&self.amps, &other.amps)
    }

    /// `|<self|other>|²`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reorthogonalization {
    #[default]
    Full,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KrylovConfig {
    pub subspace_dim: usize,
    /// Error allowed per substep, relative to the state norm.
    pub tolerance: f64,
    /// Upper bound on substeps in a single [`lanczos_expv`] call.
    pub max_substeps: usize,
    pub reorthogonalization: Reorthogonalization,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            subspace_dim: 30,
            tolerance: 1e-10,
            max_substeps: 1_000_000,
            reorthogonalization: Reorthogonalization::Full,
        }
    }
}

impl KrylovConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subspace_dim < 2 {
            return Err(Error::InvalidParameter(
                "Krylov subspace dimension must be at least 2".into(),
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("Krylov tolerance must be positive".into()));
        }
        if self.max_substeps == 0 {
            return Err(Error::InvalidParameter("max_substeps must be positive".into()));
        }
        Ok(())
    }
}

/// Counters from a Krylov propagation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KrylovStats {
    pub substeps: usize,
    pub matvecs: usize,
    /// Sum of per-substep error estimates, relative to the norm.
    pub error_estimate: f64,
}

/// Approximates `exp(-iHτ) ψ`.
pub fn lanczos_expv(
    h: &SparseHamiltonian,
    psi: &StateVector,
    tau: f64,
    cfg: &KrylovConfig,
) -> Result<StateVector> {
    if psi.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: psi.dim(),
        });
    }
    let n = psi.norm();
    if (n - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized(n));
    }
    let mut amps = psi.amps.clone();
    krylov_propagate(h.matrix(), &mut amps, tau, cfg)?;
    Ok(StateVector { amps })
}

/// In-place Krylov propagation on an arbitrary (not necessarily normalized)
/// vector. Used for whole states and for individual magnetization blocks.
pub fn krylov_propagate(
    matrix: &CsrMatrix,
    v: &mut [Complex64],
    tau: f64,
    cfg: &KrylovConfig,
) -> Result<KrylovStats> {
    cfg.validate()?;
    if !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("time step {tau} is not finite")));
    }
    let mut stats = KrylovStats::default();
    let beta0 = norm(v);
    if tau == 0.0 || beta0 == 0.0 {
        return Ok(stats);
    }
    let dim = v.len();
    let m = cfg.subspace_dim.min(dim);
    let sign = tau.signum();
    let total = tau.abs();
    let mut done = 0.0;
    let mut step_hint = total;
    let mut ws = LanczosWorkspace::new(dim, m);

    while done < total {
        if stats.substeps >= cfg.max_substeps {
            return Err(Error::Propagation {
                t_start: 0.0,
                t_end: tau,
                estimate: stats.error_estimate,
            });
        }
        let remaining = total - done;
        let beta = norm(v);
        let basis = ws.build(matrix, v, beta, m, cfg.reorthogonalization);
        stats.matvecs += basis.k;
        // Invariant subspace: the projection is exact for any step length.
        let mut step = if basis.beta_next < BREAKDOWN {
            remaining
        } else {
            step_hint.min(remaining)
        };
        let mut coeffs;
        let mut err;
        let mut halvings = 0;
        loop {
            coeffs = basis.exp_coefficients(sign * step);
            err = if basis.beta_next < BREAKDOWN {
                0.0
            } else {
                basis.beta_next * coeffs[basis.k - 1].norm()
            };
            if err <= cfg.tolerance || step <= f64::EPSILON * total {
                break;
            }
            step *= 0.5;
            halvings += 1;
            if halvings > 200 {
                return Err(Error::Propagation {
                    t_start: done * sign,
                    t_end: (done + step) * sign,
                    estimate: err,
                });
            }
        }
        // v = β Σ c_j v_j
        v.iter_mut().for_each(|x| *x = ZERO);
        for (j, c) in coeffs.iter().enumerate() {
            let c = c * beta;
            for (x, b) in v.iter_mut().zip(ws.basis_vector(j)) {
                *x += c * b;
            }
        }
        stats.substeps += 1;
        stats.error_estimate += err;
        done += step;
        // grow the step again after a successful short one
        step_hint = if halvings == 0 { step * 2.0 } else { step };
        if remaining - step <= f64::EPSILON * total {
            break;
        }
    }
    Ok(stats)
}

struct LanczosWorkspace {
    dim: usize,
    /// `m` basis vectors stored back to back.
    basis: Vec<Complex64>,
    w: Vec<Complex64>,
}

struct LanczosBasis {
    k: usize,
    beta_next: f64,
    values: Vec<f64>,
    /// Eigenvectors of the tridiagonal, column-major `k × k`.
    vectors: DMatrix<f64>,
}

impl LanczosBasis {
    /// `exp(-iTτ) e_1` in the Lanczos basis.
    fn exp_coefficients(&self, tau: f64) -> Vec<Complex64> {
        let k = self.k;
        let weighted: Vec<Complex64> = (0..k)
            .map(|c| Complex64::from_polar(self.vectors[(0, c)], -self.values[c] * tau))
            .collect();
        (0..k)
            .map(|r| (0..k).map(|c| weighted[c] * self.vectors[(r, c)]).sum())
            .collect()
    }
}

impl LanczosWorkspace {
    fn new(dim: usize, m: usize) -> Self {
        Self {
            dim,
            basis: vec![ZERO; dim * m],
            w: vec![ZERO; dim],
        }
    }

    fn basis_vector(&self, j: usize) -> &[Complex64] {
        &self.basis[j * self.dim..(j + 1) * self.dim]
    }

    fn build(
        &mut self,
        matrix: &CsrMatrix,
        v: &[Complex64],
        beta: f64,
        m: usize,
        reorth: Reorthogonalization,
    ) -> LanczosBasis {
        let dim = self.dim;
        for (b, x) in self.basis[..dim].iter_mut().zip(v) {
            *b = x / beta;
        }
        let mut alpha = Vec::with_capacity(m);
        let mut offdiag = Vec::with_capacity(m);
        let mut beta_next = 0.0;
        let mut k = 0;
        while k < m {
            let (done, rest) = self.basis.split_at_mut((k + 1) * dim);
            let current = &done[k * dim..];
            matrix.apply(current, &mut self.w);
            let a = dot(current, &self.w).re;
            for (w, x) in self.w.iter_mut().zip(current) {
                *w -= x * a;
            }
            if k > 0 {
                let prev = &done[(k - 1) * dim..k * dim];
                let b: f64 = offdiag[k - 1];
                for (w, x) in self.w.iter_mut().zip(prev) {
                    *w -= x * b;
                }
            }
            if reorth == Reorthogonalization::Full {
                for _ in 0..2 {
                    for j in 0..=k {
                        let q = &done[j * dim..(j + 1) * dim];
                        let proj = dot(q, &self.w);
                        for (w, x) in self.w.iter_mut().zip(q) {
                            *w -= x * proj;
                        }
                    }
                }
            }
            alpha.push(a);
            k += 1;
            beta_next = norm(&self.w);
            if beta_next < BREAKDOWN || k == m {
                break;
            }
            offdiag.push(beta_next);
            for (b, w) in rest[..dim].iter_mut().zip(&self.w) {
                *b = w / beta_next;
            }
        }
        let t = DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                offdiag[r]
            } else if c + 1 == r {
                offdiag[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        LanczosBasis {
            k,
            beta_next,
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }
}

/// Grid points back-transformed together by the spectral propagator.
const EXACT_BATCH: usize = 64;

/// `V exp(-iΛt) V† ψ` from a full spectrum.
pub fn exact_expv(eig: &EigenDecomposition, psi: &StateVector, t: f64) -> Result<StateVector> {
    Ok(SpectralPropagator::new(eig, psi)?.state_at(t))
}

/// A state expanded once in the energy eigenbasis, so that `exp(-iHt)ψ` for
/// many `t` costs one back-transformation each.
pub struct SpectralPropagator<'a> {
    eig: &'a EigenDecomposition,
    /// `V†ψ`, block by block.
    coefficients: Vec<Vec<Complex64>>,
}

impl<'a> SpectralPropagator<'a> {
    pub fn new(eig: &'a EigenDecomposition, psi: &StateVector) -> Result<Self> {
        if psi.dim() != eig.dim() {
            return Err(Error::DimensionMismatch {
                expected: eig.dim(),
                got: psi.dim(),
            });
        }
        let coefficients = eig
            .blocks()
            .iter()
            .map(|block| {
                let local: Vec<Complex64> = block.indices.iter().map(|&g| psi.amps[g]).collect();
                (0..block.values.len())
                    .map(|c| {
                        let col = block.vectors.column(c);
                        col.iter().zip(&local).map(|(v, x)| x * *v).sum()
                    })
                    .collect()
            })
            .collect();
        Ok(Self { eig, coefficients })
    }

    pub fn state_at(&self, t: f64) -> StateVector {
        self.states_at(&[t]).pop().expect("one time in, one state out")
    }

    /// States at several times at once; the back-transformation becomes two
    /// real matrix products per block.
    pub fn states_at(&self, times: &[f64]) -> Vec<StateVector> {
        let mut out = vec![vec![ZERO; self.eig.dim()]; times.len()];
        for (block, coeffs) in self.eig.blocks().iter().zip(&self.coefficients) {
            let n = block.values.len();
            let mut re = DMatrix::<f64>::zeros(n, times.len());
            let mut im = DMatrix::<f64>::zeros(n, times.len());
            for (j, &t) in times.iter().enumerate() {
                for (k, (c, e)) in coeffs.iter().zip(&block.values).enumerate() {
                    let r = c * Complex64::from_polar(1.0, -e * t);
                    re[(k, j)] = r.re;
                    im[(k, j)] = r.im;
                }
            }
            let re = &block.vectors * re;
            let im = &block.vectors * im;
            for (j, amps) in out.iter_mut().enumerate() {
                for (i, &g) in block.indices.iter().enumerate() {
                    amps[g] = Complex64::new(re[(i, j)], im[(i, j)]);
                }
            }
        }
        out.into_iter().map(|amps| StateVector { amps }).collect()
    }
}

/// Sorted sampling times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidGrid("empty grid".into()));
        }
        if times.iter().any(|t| !t.is_finite()) || times[0] < 0.0 {
            return Err(Error::InvalidGrid("times must be finite and non-negative".into()));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidGrid("times must be sorted ascending".into()));
        }
        Ok(Self { times })
    }

    /// `points_per_decade` logarithmically spaced times from `t_min` to
    /// `t_max`, both included.
    pub fn logarithmic(t_min: f64, t_max: f64, points_per_decade: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min && points_per_decade > 0) {
            return Err(Error::InvalidGrid(format!(
                "log grid needs 0 < t_min < t_max and points_per_decade > 0 (got {t_min}, {t_max}, {points_per_decade})"
            )));
        }
        let decades = (t_max / t_min).log10();
        let n = (decades * points_per_decade as f64).round().max(1.0) as usize;
        let times = (0..=n)
            .map(|k| t_min * 10f64.powf(decades * k as f64 / n as f64))
            .collect();
        Self::new(times)
    }

    /// `0, dt, 2dt, …` up to `t_max`.
    pub fn uniform(dt: f64, t_max: f64) -> Result<Self> {
        if !(dt > 0.0 && t_max > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "uniform grid needs positive dt and t_max (got {dt}, {t_max})"
            )));
        }
        let n = (t_max / dt + 1e-9).floor() as usize;
        Self::new((0..=n).map(|k| k as f64 * dt).collect())
    }

    /// A thousand points per decade on `[0.1, 1e4]`: fine enough to resolve
    /// oscillations of period ~2π out to t ~ 10³.
    pub fn log_preset() -> Self {
        Self::logarithmic(0.1, 1e4, 1000).expect("valid preset")
    }

    /// `dt = 0.1` on `[0, 400]`.
    pub fn uniform_preset() -> Self {
        Self::uniform(0.1, 400.0).expect("valid preset")
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// How a trajectory is propagated between grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropagatorKind {
    /// Lanczos propagation between consecutive grid points.
    #[default]
    Krylov,
    /// Spectral propagation from the initial state (dense, `L <= 12`).
    Exact,
}

impl std::str::FromStr for PropagatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "krylov" => Ok(Self::Krylov),
            "exact" => Ok(Self::Exact),
            other => Err(Error::Parse(format!("unknown propagator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvolveOptions {
    pub propagator: PropagatorKind,
    /// Evolve each magnetization block separately (Krylov only).
    pub sector_blocked: bool,
    pub krylov: KrylovConfig,
}

/// Evolves `psi0` along `grid`, handing the state at every grid time to
/// `observer`.
pub fn evolve_on_grid<F>(
    h: &SparseHamiltonian,
    psi0: &StateVector,
    grid: &TimeGrid,
    opts: &EvolveOptions,
    mut observer: F,
) -> Result<KrylovStats>
where
    F: FnMut(f64, &StateVector) -> Result<()>,
{
    if psi0.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: psi0.dim(),
        });
    }
    let mut stats = KrylovStats::default();
    match opts.propagator {
        PropagatorKind::Exact => {
            let eig = crate::hamiltonian::dense_spectrum(h)?;
            let prop = SpectralPropagator::new(&eig, psi0)?;
            for chunk in grid.times().chunks(EXACT_BATCH) {
                for (&t, psi) in chunk.iter().zip(prop.states_at(chunk)) {
                    observer(t, &psi)?;
                }
            }
        }
        PropagatorKind::Krylov => {
            opts.krylov.validate()?;
            let blocks = if opts.sector_blocked {
                Some(SectorBlocks::new(h)?)
            } else {
                None
            };
            let mut psi = psi0.clone();
            let mut t_now = 0.0;
            for &t in grid.times() {
                let tau = t - t_now;
                if tau > 0.0 {
                    let step = match &blocks {
                        Some(b) => b.propagate(&mut psi.amps, tau, &opts.krylov),
                        None => krylov_propagate(h.matrix(), &mut psi.amps, tau, &opts.krylov),
                    };
                    let s = step.map_err(|e| match e {
                        Error::Propagation { estimate, .. } => Error::Propagation {
                            t_start: t_now,
                            t_end: t,
                            estimate,
                        },
                        other => other,
                    })?;
                    stats.substeps += s.substeps;
                    stats.matvecs += s.matvecs;
                    stats.error_estimate += s.error_estimate;
                    t_now = t;
                }
                observer(t, &psi)?;
            }
        }
    }
    Ok(stats)
}

/// The Hamiltonian split into its magnetization blocks.
struct SectorBlocks {
    sectors: SectorDecomposition,
    blocks: Vec<CsrMatrix>,
}

impl SectorBlocks {
    fn new(h: &SparseHamiltonian) -> Result<Self> {
        let sectors = hilbert::sector_decomposition(h.chain_len())?;
        let blocks = sectors
            .sectors()
            .iter()
            .map(|s| h.matrix().block(&s.indices))
            .collect();
        Ok(Self { sectors, blocks })
    }

    fn propagate(&self, amps: &mut [Complex64], tau: f64, cfg: &KrylovConfig) -> Result<KrylovStats> {
        let mut stats = KrylovStats::default();
        for (sector, block) in self.sectors.sectors().iter().zip(&self.blocks) {
            let mut local: Vec<Complex64> = sector.indices.iter().map(|&g| amps[g]).collect();
            let s = krylov_propagate(block, &mut local, tau, cfg)?;
            stats.substeps += s.substeps;
            stats.matvecs += s.matvecs;
            stats.error_estimate += s.error_estimate;
            for (&g, x) in sector.indices.iter().zip(local) {
                amps[g] = x;
            }
        }
        Ok(stats)
    }
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}
