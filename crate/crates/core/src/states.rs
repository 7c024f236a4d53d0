//! Product initial states and their spread over the energy eigenbasis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::EigenDecomposition;
use crate::hilbert;
use crate::propagator::StateVector;

/// Single-spin polarization. Amplitudes in the `{↑z, ↓z}` basis:
/// `↑x = (1, 1)/√2`, `↓x = (1, −1)/√2`, `↑y = (1, i)/√2`, `↓y = (1, −i)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LocalDirection {
    UpZ,
    DownZ,
    UpX,
    DownX,
    UpY,
    DownY,
}

impl LocalDirection {
    /// `(amplitude on ↑z, amplitude on ↓z)`.
    pub fn amplitudes(self) -> (Complex64, Complex64) {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let re = |x: f64| Complex64::new(x, 0.0);
        match self {
            Self::UpZ => (re(1.0), re(0.0)),
            Self::DownZ => (re(0.0), re(1.0)),
            Self::UpX => (re(h), re(h)),
            Self::DownX => (re(h), re(-h)),
            Self::UpY => (re(h), Complex64::new(0.0, h)),
            Self::DownY => (re(h), Complex64::new(0.0, -h)),
        }
    }

    fn pair(axis: Axis) -> (Self, Self) {
        match axis {
            Axis::X => (Self::UpX, Self::DownX),
            Axis::Y => (Self::UpY, Self::DownY),
            Axis::Z => (Self::UpZ, Self::DownZ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    X,
    Y,
    Z,
}

/// Per-site polarizations of a product state; site 0 first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductStateSpec {
    pub directions: Vec<LocalDirection>,
}

impl ProductStateSpec {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

/// Named product states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    NeelX,
    NeelY,
    NeelZ,
    FerroX,
    FerroY,
    DomainsX,
    DomainsY,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::NeelX,
        Preset::NeelY,
        Preset::NeelZ,
        Preset::FerroX,
        Preset::FerroY,
        Preset::DomainsX,
        Preset::DomainsY,
    ];

    /// The transversely polarized presets that sit close to an unbiased
    /// basis at strong disorder.
    pub const TRANSVERSE: [Preset; 6] = [
        Preset::NeelX,
        Preset::NeelY,
        Preset::FerroX,
        Preset::FerroY,
        Preset::DomainsX,
        Preset::DomainsY,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::NeelX => "neel_x",
            Preset::NeelY => "neel_y",
            Preset::NeelZ => "neel_z",
            Preset::FerroX => "ferro_x",
            Preset::FerroY => "ferro_y",
            Preset::DomainsX => "domains_x",
            Preset::DomainsY => "domains_y",
        }
    }

    /// Néel: alternating, starting up. Domains: first `⌈L/2⌉` sites up.
    pub fn expand(self, len: usize) -> ProductStateSpec {
        let (axis, pattern): (Axis, fn(usize, usize) -> bool) = match self {
            Preset::NeelX => (Axis::X, |i, _| i % 2 == 0),
            Preset::NeelY => (Axis::Y, |i, _| i % 2 == 0),
            Preset::NeelZ => (Axis::Z, |i, _| i % 2 == 0),
            Preset::FerroX => (Axis::X, |_, _| true),
            Preset::FerroY => (Axis::Y, |_, _| true),
            Preset::DomainsX => (Axis::X, |i, l| i < l.div_ceil(2)),
            Preset::DomainsY => (Axis::Y, |i, l| i < l.div_ceil(2)),
        };
        let (up, down) = LocalDirection::pair(axis);
        ProductStateSpec {
            directions: (0..len)
                .map(|i| if pattern(i, len) { up } else { down })
                .collect(),
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown initial state '{s}'")))
    }
}

/// Tensor product of the per-site spinors.
pub fn product_state(spec: &ProductStateSpec) -> Result<StateVector> {
    hilbert::check_len(spec.len())?;
    let mut amps = vec![Complex64::new(1.0, 0.0)];
    // site i is bit i: new index = old + bit·2^i
    for dir in &spec.directions {
        let (up, down) = dir.amplitudes();
        let half = amps.len();
        let mut next = Vec::with_capacity(2 * half);
        next.extend(amps.iter().map(|a| a * down));
        next.extend(amps.iter().map(|a| a * up));
        amps = next;
    }
    StateVector::normalized(amps)
}

/// Same as [`product_state`] but checks the spec against a chain length.
pub fn product_state_for(spec: &ProductStateSpec, len: usize) -> Result<StateVector> {
    if spec.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            got: spec.len(),
        });
    }
    product_state(spec)
}

/// Spread of a state over the energy eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HubStats {
    /// Extremes and mean of `D |<ψ|E_ν>|²`.
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// `-Σ p ln p` over eigenstates, in nats.
    pub participation_entropy: f64,
    pub dim: usize,
}

impl HubStats {
    /// Participation entropy divided by `ln D`.
    pub fn normalized_entropy(&self) -> f64 {
        self.participation_entropy / (self.dim as f64).ln()
    }
}

pub fn hub_stats(psi: &StateVector, eig: &EigenDecomposition) -> Result<HubStats> {
    let n = psi.norm();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(n));
    }
    let p = eig.overlaps(psi.amplitudes())?;
    let d = p.len() as f64;
    let (mut min, mut max, mut sum, mut entropy) = (f64::INFINITY, 0.0f64, 0.0, 0.0);
    for &x in &p {
        min = min.min(d * x);
        max = max.max(d * x);
        sum += x;
        if x > 0.0 {
            entropy -= x * x.ln();
        }
    }
    Ok(HubStats {
        min,
        max,
        mean: sum,
        participation_entropy: entropy,
        dim: p.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_hamiltonian, dense_spectrum, sample_disorder, Boundary};
    use crate::hilbert::SpinConfiguration;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn amp_of(psi: &StateVector, spins: &[bool]) -> Complex64 {
        let c = SpinConfiguration::from_spins(spins).unwrap();
        psi.amplitudes()[c.bits() as usize]
    }

    #[test]
    fn presets_expand() {
        use LocalDirection::*;
        assert_eq!(Preset::NeelX.expand(4).directions, vec![UpX, DownX, UpX, DownX]);
        assert_eq!(Preset::DomainsY.expand(5).directions, vec![UpY, UpY, UpY, DownY, DownY]);
        assert_eq!(Preset::FerroX.expand(3).directions, vec![UpX; 3]);
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("neel_w".parse::<Preset>().is_err());
    }

    #[test]
    fn neel_x_two_sites() {
        let psi = product_state(&Preset::NeelX.expand(2)).unwrap();
        let expect = [
            ([true, true], 0.5),
            ([true, false], -0.5),
            ([false, true], 0.5),
            ([false, false], -0.5),
        ];
        for (spins, a) in expect {
            assert_abs_diff_eq!((amp_of(&psi, &spins) - Complex64::new(a, 0.0)).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn neel_z_is_basis_state() {
        let psi = product_state(&Preset::NeelZ.expand(6)).unwrap();
        let nonzero: Vec<usize> = (0..64).filter(|&i| psi.amplitudes()[i].norm() > 0.0).collect();
        assert_eq!(nonzero, vec![0b010101]);
    }

    #[test]
    fn length_mismatch() {
        assert!(product_state_for(&Preset::NeelX.expand(4), 5).is_err());
        assert!(product_state(&ProductStateSpec { directions: vec![] }).is_err());
    }

    #[test]
    fn x_basis_is_orthonormal() {
        for len in 1..=6 {
            let states: Vec<StateVector> = (0..1usize << len)
                .map(|bits| {
                    let directions = (0..len)
                        .map(|i| if bits >> i & 1 == 1 { LocalDirection::UpX } else { LocalDirection::DownX })
                        .collect();
                    product_state(&ProductStateSpec { directions }).unwrap()
                })
                .collect();
            for (a, sa) in states.iter().enumerate() {
                for (b, sb) in states.iter().enumerate() {
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(sa.inner(sb).norm(), expect, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn eigenstate_is_maximally_biased() {
        let d = sample_disorder(6, 3.0, 1, 0).unwrap();
        let h = build_hamiltonian(6, 1.0, 1.0, &d, Boundary::Periodic).unwrap();
        let eig = dense_spectrum(&h).unwrap();
        let v = eig.eigenvector(10);
        let psi = StateVector::new(v.iter().map(|&x| Complex64::new(x, 0.0)).collect()).unwrap();
        let s = hub_stats(&psi, &eig).unwrap();
        assert_abs_diff_eq!(s.max, 64.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.participation_entropy, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.mean, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn x_state_is_exact_hub_for_z_diagonal_hamiltonian() {
        // with J⊥ = 0 the eigenbasis is the z basis, to which every x product state is unbiased
        let d = sample_disorder(6, 3.0, 2, 0).unwrap();
        let h = build_hamiltonian(6, 1.0, 0.0, &d, Boundary::Periodic).unwrap();
        let eig = dense_spectrum(&h).unwrap();
        let s = hub_stats(&product_state(&Preset::NeelX.expand(6)).unwrap(), &eig).unwrap();
        assert_abs_diff_eq!(s.min, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.max, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.participation_entropy, 64f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn rejects_unnormalized() {
        let d = sample_disorder(2, 1.0, 0, 0).unwrap();
        let h = build_hamiltonian(2, 1.0, 1.0, &d, Boundary::Open).unwrap();
        let eig = dense_spectrum(&h).unwrap();
        let psi = StateVector::normalized(vec![Complex64::new(1.0, 0.0); 4]).unwrap();
        assert!(hub_stats(&psi, &eig).is_ok());
        let bad = StateVector::basis(0, 8);
        assert!(hub_stats(&bad, &eig).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn overlaps_complete(seed in 0u64..1000, w in 0.0f64..12.0, preset in 0usize..7) {
            let d = sample_disorder(7, w, seed, 0).unwrap();
            let h = build_hamiltonian(7, 1.0, 1.0, &d, Boundary::Periodic).unwrap();
            let eig = dense_spectrum(&h).unwrap();
            let psi = product_state(&Preset::ALL[preset].expand(7)).unwrap();
            let s = hub_stats(&psi, &eig).unwrap();
            prop_assert!((s.mean - 1.0).abs() < 1e-12);
            prop_assert!(s.participation_entropy >= -1e-12);
            prop_assert!(s.participation_entropy <= 128f64.ln() + 1e-12);
        }
    }
}
