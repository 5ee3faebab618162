//! Momentum-space two-body lattice model with a contact interaction, and
//! the exact classical oracles built on its dense Hamiltonian.

use crate::linalg::{self, c, CMat};
use crate::{Error, Result, C64};
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConfig {
    pub n_x: usize,
    pub n_y: usize,
    pub n_z: usize,
    /// fm
    pub spacing_a: f64,
    /// MeV
    pub v0: f64,
    /// MeV fm
    pub hbar_c: f64,
    /// MeV
    pub nucleon_mass: f64,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self::reference()
    }
}

impl LatticeConfig {
    /// 8x8x8 sites, a = 1 fm, V0 = -235 MeV.
    pub fn reference() -> Self {
        LatticeConfig { n_x: 8, n_y: 8, n_z: 8, spacing_a: 1.0, v0: -235.0, hbar_c: 197.327, nucleon_mass: 938.92 }
    }

    pub fn cubic(n: usize) -> Self {
        LatticeConfig { n_x: n, n_y: n, n_z: n, ..Self::reference() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("n_x", self.n_x), ("n_y", self.n_y), ("n_z", self.n_z)] {
            if n < 2 || !n.is_power_of_two() {
                return Err(Error::InvalidConfig(format!("{name} = {n} must be an even power of two")));
            }
        }
        if self.n_sites() > 1 << 20 {
            return Err(Error::InvalidConfig(format!("{} sites is too many", self.n_sites())));
        }
        for (name, v) in [("spacing_a", self.spacing_a), ("hbar_c", self.hbar_c), ("nucleon_mass", self.nucleon_mass)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} = {v} must be positive")));
            }
        }
        if !self.v0.is_finite() {
            return Err(Error::InvalidConfig("v0 must be finite".into()));
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.n_x * self.n_y * self.n_z
    }

    pub fn n_qubits(&self) -> usize {
        self.n_sites().trailing_zeros() as usize
    }

    /// Qubits per axis, ordered (x, y, z).
    pub fn axis_qubits(&self) -> [usize; 3] {
        [self.n_x, self.n_y, self.n_z].map(|n| n.trailing_zeros() as usize)
    }

    /// First qubit of each axis block (z occupies the lowest bits).
    pub fn axis_offsets(&self) -> [usize; 3] {
        let [qx, qy, qz] = self.axis_qubits();
        let _ = qx;
        [qz + qy, qz, 0]
    }

    pub fn side_lengths(&self) -> [f64; 3] {
        [self.n_x, self.n_y, self.n_z].map(|n| n as f64 * self.spacing_a)
    }

    /// hbar_c^2 / m, MeV fm^2.
    pub fn kinetic_scale(&self) -> f64 {
        self.hbar_c * self.hbar_c / self.nucleon_mass
    }
}

/// Relative momentum of the pair |k, -k>, fm^-1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumVector {
    pub kx: f64,
    pub ky: f64,
    pub kz: f64,
}

impl MomentumVector {
    pub fn norm_sqr(&self) -> f64 {
        self.kx * self.kx + self.ky * self.ky + self.kz * self.kz
    }
}

/// Integer grid label j of 2πj/L along one axis, in the stored order
/// 0, 1, ..., n/2-1, -n/2, ..., -1.
pub fn axis_label(index: usize, n: usize) -> i64 {
    if index < n / 2 {
        index as i64
    } else {
        index as i64 - n as i64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoBodyBasis {
    pub states: Vec<MomentumVector>,
    /// Integer (x, y, z) grid labels of each state.
    pub labels: Vec<[i64; 3]>,
    /// Bitstring assigned to each state.
    pub codes: Vec<usize>,
    pub n_qubits: usize,
}

impl TwoBodyBasis {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Inverse of `codes`.
    pub fn state_of_code(&self) -> Vec<usize> {
        let mut inv = alloc::vec![0; self.codes.len()];
        for (s, &cd) in self.codes.iter().enumerate() {
            inv[cd] = s;
        }
        inv
    }
}

pub fn build_momentum_grid(config: &LatticeConfig) -> Result<TwoBodyBasis> {
    config.validate()?;
    let [lx, ly, lz] = config.side_lengths();
    let n = config.n_sites();
    let mut states = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for ix in 0..config.n_x {
        for iy in 0..config.n_y {
            for iz in 0..config.n_z {
                let l = [axis_label(ix, config.n_x), axis_label(iy, config.n_y), axis_label(iz, config.n_z)];
                states.push(MomentumVector {
                    kx: 2.0 * PI * l[0] as f64 / lx,
                    ky: 2.0 * PI * l[1] as f64 / ly,
                    kz: 2.0 * PI * l[2] as f64 / lz,
                });
                labels.push(l);
            }
        }
    }
    Ok(TwoBodyBasis { states, labels, codes: (0..n).collect(), n_qubits: config.n_qubits() })
}

/// hbar_c^2 |k|^2 / m: kinetic energy of the pair in its rest frame.
pub fn kinetic_energy(k: &MomentumVector, config: &LatticeConfig) -> f64 {
    config.kinetic_scale() * k.norm_sqr()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseHamiltonian {
    pub matrix: CMat,
    /// Kinetic energy of each basis code.
    pub kinetic_diagonal: Vec<f64>,
    pub v0_over_n: f64,
}

impl DenseHamiltonian {
    pub fn dim(&self) -> usize {
        self.kinetic_diagonal.len()
    }

    pub fn kinetic_matrix(&self) -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_iterator(self.dim(), self.kinetic_diagonal.iter().map(|&t| c(t, 0.0))))
    }

    pub fn potential_matrix(&self) -> CMat {
        CMat::from_element(self.dim(), self.dim(), c(self.v0_over_n, 0.0))
    }
}

pub fn build_hamiltonian(config: &LatticeConfig) -> Result<DenseHamiltonian> {
    let basis = build_momentum_grid(config)?;
    Ok(build_hamiltonian_in(config, &basis))
}

/// Dense Hamiltonian with rows indexed by the basis codes.
pub fn build_hamiltonian_in(config: &LatticeConfig, basis: &TwoBodyBasis) -> DenseHamiltonian {
    let n = basis.len();
    let vn = config.v0 / n as f64;
    let mut kin = alloc::vec![0.0; n];
    for (s, k) in basis.states.iter().enumerate() {
        kin[basis.codes[s]] = kinetic_energy(k, config);
    }
    let mut m = CMat::from_element(n, n, c(vn, 0.0));
    for (i, t) in kin.iter().enumerate() {
        m[(i, i)] += c(*t, 0.0);
    }
    DenseHamiltonian { matrix: m, kinetic_diagonal: kin, v0_over_n: vn }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
    pub e0: f64,
    pub gap_delta: f64,
    pub delta_h: f64,
}

impl SpectralData {
    pub fn ground_state(&self) -> Vec<C64> {
        self.eigenvectors.column(0).iter().copied().collect()
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// V f(Λ) V†.
    pub fn function(&self, f: impl Fn(f64) -> C64) -> CMat {
        linalg::spectral_function(&self.eigenvalues, &self.eigenvectors, f)
    }

    /// exp(-i H t).
    pub fn propagator(&self, t: f64) -> CMat {
        self.function(|e| linalg::cis(-e * t))
    }
}

pub fn diagonalize(h: &DenseHamiltonian) -> Result<SpectralData> {
    diagonalize_matrix(&h.matrix)
}

pub fn diagonalize_matrix(m: &CMat) -> Result<SpectralData> {
    let (vals, vecs) = linalg::eigh(m)?;
    let n = vals.len();
    if n == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    let e0 = vals[0];
    let gap = if n > 1 { vals[1] - e0 } else { 0.0 };
    Ok(SpectralData { e0, gap_delta: gap, delta_h: vals[n - 1] - e0, eigenvalues: vals, eigenvectors: vecs })
}

/// (ω̄_ν, |<Ψ_ν|O|Ψ_0>|²) per energy level; degenerate eigenvalues are
/// merged and levels with negligible strength are dropped.
pub fn exact_response(spec: &SpectralData, transition: &CMat, ground: &[C64]) -> Result<Vec<(f64, f64)>> {
    let n = spec.dim();
    if transition.nrows() != n || transition.ncols() != n || ground.len() != n {
        return Err(Error::Dimension("transition matrix and spectrum differ in size".into()));
    }
    let dh = if spec.delta_h > 0.0 { spec.delta_h } else { 1.0 };
    let phi = linalg::mat_vec(transition, ground);
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        let mut s = 0.0;
        while j < n && (spec.eigenvalues[j] - spec.eigenvalues[i]).abs() <= 1e-9 * dh.max(1.0) {
            let col: Vec<C64> = spec.eigenvectors.column(j).iter().copied().collect();
            s += linalg::inner(&col, &phi).norm_sqr();
            j += 1;
        }
        if s > 1e-14 {
            out.push(((spec.eigenvalues[i] - spec.e0) / dh, s));
        }
        i = j;
    }
    Ok(out)
}

/// 𝓝 cos[(H - E0) t] ψ and the success probability <ψ|cos²[(H - E0) t]|ψ>.
pub fn exact_filtered_state(spec: &SpectralData, psi: &[C64], t: f64) -> Result<(Vec<C64>, f64)> {
    if psi.len() != spec.dim() {
        return Err(Error::Dimension("state and spectrum differ in size".into()));
    }
    let nrm = linalg::norm(psi);
    if (nrm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("input state norm {nrm} is not 1")));
    }
    let e0 = spec.e0;
    let f = spec.function(|e| c(((e - e0) * t).cos(), 0.0));
    let mut out = linalg::mat_vec(&f, psi);
    let p = linalg::norm(&out).powi(2);
    if p < 1e-14 {
        return Err(Error::PostSelection(p));
    }
    let s = 1.0 / p.sqrt();
    for z in out.iter_mut() {
        *z *= s;
    }
    Ok((out, p))
}

/// Basis vector |code⟩.
pub fn basis_state(dim: usize, code: usize) -> Vec<C64> {
    let mut v = alloc::vec![C64::new(0.0, 0.0); dim];
    v[code] = c(1.0, 0.0);
    v
}
