//! Weighted Pauli strings under the binary (qubit-efficient) encoding.
//!
//! A term is stored as an X-mask and a Z-mask: qubit q carries X if bit q of
//! `x` is set, Z if bit q of `z` is set and Y if both are. The operator is
//! i^{|x∧z|} X^x Z^z. Display strings are written with the highest qubit
//! first, so "IZ" is Z on qubit 0.

use crate::linalg::{c, CMat};
use crate::{Error, Result, C64};
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

pub const PRUNE_THRESHOLD: f64 = 1e-12;
pub const MATRIX_QUBIT_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliTerm {
    pub x: u64,
    pub z: u64,
    pub coeff: C64,
}

impl PauliTerm {
    pub fn new(x: u64, z: u64, coeff: C64) -> Self {
        PauliTerm { x, z, coeff }
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> u32 {
        self.support().count_ones()
    }

    pub fn commutes_with(&self, other: &PauliTerm) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    pub fn axes(&self, n_qubits: usize) -> String {
        (0..n_qubits)
            .rev()
            .map(|q| match ((self.x >> q) & 1, (self.z >> q) & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (1, 1) => 'Y',
                _ => 'Z',
            })
            .collect()
    }

    /// Masks from a display string such as "XIZ".
    pub fn parse_axes(axes: &str) -> Result<(u64, u64, usize)> {
        let n = axes.chars().count();
        if n > 64 {
            return Err(Error::InvalidArgument("more than 64 qubits".into()));
        }
        let (mut x, mut z) = (0u64, 0u64);
        for (i, ch) in axes.chars().enumerate() {
            let q = n - 1 - i;
            match ch {
                'I' => {}
                'X' => x |= 1 << q,
                'Y' => {
                    x |= 1 << q;
                    z |= 1 << q
                }
                'Z' => z |= 1 << q,
                _ => return Err(Error::InvalidArgument(format!("bad Pauli symbol {ch:?}"))),
            }
        }
        Ok((x, z, n))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    pub n_qubits: usize,
    pub terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        PauliSum { n_qubits, terms: Vec::new() }
    }

    /// Combines duplicates, drops |c| < threshold, orders by (x, z).
    pub fn from_terms(n_qubits: usize, terms: impl IntoIterator<Item = PauliTerm>, threshold: f64) -> Self {
        let mut map: BTreeMap<(u64, u64), C64> = BTreeMap::new();
        for t in terms {
            *map.entry((t.x, t.z)).or_insert(C64::new(0.0, 0.0)) += t.coeff;
        }
        let terms = map.into_iter().filter(|(_, cf)| cf.norm() >= threshold).map(|((x, z), cf)| PauliTerm::new(x, z, cf)).collect();
        PauliSum { n_qubits, terms }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn identity_coefficient(&self) -> C64 {
        self.terms.iter().find(|t| t.is_identity()).map(|t| t.coeff).unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn without_identity(&self) -> PauliSum {
        PauliSum { n_qubits: self.n_qubits, terms: self.terms.iter().filter(|t| !t.is_identity()).copied().collect() }
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(|t| t.is_diagonal())
    }

    pub fn is_hermitian(&self) -> bool {
        self.terms.iter().all(|t| t.coeff.im.abs() < PRUNE_THRESHOLD)
    }

    pub fn mutually_commuting(&self) -> bool {
        self.terms.iter().enumerate().all(|(i, a)| self.terms[i + 1..].iter().all(|b| a.commutes_with(b)))
    }

    pub fn add(&self, other: &PauliSum) -> PauliSum {
        let n = self.n_qubits.max(other.n_qubits);
        PauliSum::from_terms(n, self.terms.iter().chain(other.terms.iter()).copied(), PRUNE_THRESHOLD)
    }

    pub fn scale(&self, s: f64) -> PauliSum {
        PauliSum::from_terms(self.n_qubits, self.terms.iter().map(|t| PauliTerm::new(t.x, t.z, t.coeff * s)), PRUNE_THRESHOLD)
    }

    /// Adds a multiple of the identity.
    pub fn shift(&self, s: f64) -> PauliSum {
        let extra = PauliTerm::new(0, 0, c(s, 0.0));
        PauliSum::from_terms(self.n_qubits, self.terms.iter().copied().chain(core::iter::once(extra)), PRUNE_THRESHOLD)
    }

    /// Drops terms with |c| below `eps`.
    pub fn truncate(&self, eps: f64) -> PauliSum {
        PauliSum { n_qubits: self.n_qubits, terms: self.terms.iter().filter(|t| t.coeff.norm() >= eps).copied().collect() }
    }

    /// One term per line, "±c.ccccc AXES".
    pub fn to_text(&self, decimals: usize) -> String {
        let mut s = String::new();
        for t in &self.terms {
            let cf = if t.coeff.im.abs() < PRUNE_THRESHOLD {
                format!("{:+.*}", decimals, t.coeff.re)
            } else {
                format!("{:+.*}{:+.*}i", decimals, t.coeff.re, decimals, t.coeff.im)
            };
            s.push_str(&cf);
            s.push(' ');
            s.push_str(&t.axes(self.n_qubits));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<PauliSum> {
        let mut n = None;
        let mut terms = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::InvalidArgument(format!("line {}: expected \"±c AXES\"", lineno + 1));
            let mut parts = line.split_whitespace();
            let cf = parts.next().ok_or_else(bad)?;
            let axes = parts.next().ok_or_else(bad)?;
            if parts.next().is_some() {
                return Err(bad());
            }
            let coeff = parse_coefficient(cf).ok_or_else(bad)?;
            let (x, z, len) = PauliTerm::parse_axes(axes)?;
            if *n.get_or_insert(len) != len {
                return Err(Error::InvalidArgument(format!("line {}: inconsistent qubit count", lineno + 1)));
            }
            terms.push(PauliTerm::new(x, z, coeff));
        }
        Ok(PauliSum::from_terms(n.unwrap_or(0), terms, 0.0))
    }
}

fn parse_coefficient(s: &str) -> Option<C64> {
    if let Some(body) = s.strip_suffix('i') {
        // split at the sign that starts the imaginary part
        let pos = body.char_indices().skip(1).filter(|&(i, ch)| (ch == '+' || ch == '-') && !body[..i].ends_with(['e', 'E'])).map(|(i, _)| i).last()?;
        let re = body[..pos].parse().ok()?;
        let im = body[pos..].parse().ok()?;
        Some(c(re, im))
    } else {
        Some(c(s.parse().ok()?, 0.0))
    }
}

fn check_bits(n: usize) -> Result<()> {
    if n > 63 {
        return Err(Error::Dimension(format!("{n} qubits exceeds mask width")));
    }
    Ok(())
}

/// |ket⟩⟨bra| as a sum of 2^n Pauli strings (bit q of each index is qubit q).
pub fn map_projector_bits(ket: u64, bra: u64, n: usize) -> Result<PauliSum> {
    check_bits(n)?;
    if n < 64 && (ket >> n != 0 || bra >> n != 0) {
        return Err(Error::InvalidArgument("bitstring longer than qubit count".into()));
    }
    // per-qubit expansion, distributed one qubit at a time
    let mut terms = alloc::vec![PauliTerm::new(0, 0, c(1.0, 0.0))];
    for q in 0..n {
        let (k, b) = ((ket >> q) & 1, (bra >> q) & 1);
        let pair: [(u64, u64, C64); 2] = match (k, b) {
            (0, 0) => [(0, 0, c(0.5, 0.0)), (0, 1, c(0.5, 0.0))],
            (1, 1) => [(0, 0, c(0.5, 0.0)), (0, 1, c(-0.5, 0.0))],
            (0, 1) => [(1, 0, c(0.5, 0.0)), (1, 1, c(0.0, 0.5))],
            _ => [(1, 0, c(0.5, 0.0)), (1, 1, c(0.0, -0.5))],
        };
        let mut next = Vec::with_capacity(terms.len() * 2);
        for t in &terms {
            for &(xb, zb, cf) in &pair {
                next.push(PauliTerm::new(t.x | (xb << q), t.z | (zb << q), t.coeff * cf));
            }
        }
        terms = next;
    }
    Ok(PauliSum { n_qubits: n, terms })
}

/// Same as [`map_projector_bits`] for display bitstrings ("01" = qubit 0 set).
pub fn map_projector(ket: &str, bra: &str) -> Result<PauliSum> {
    if ket.len() != bra.len() {
        return Err(Error::InvalidArgument(format!("bitstring lengths {} and {} differ", ket.len(), bra.len())));
    }
    let parse = |s: &str| -> Result<u64> {
        check_bits(s.len())?;
        s.chars().try_fold(0u64, |acc, ch| match ch {
            '0' => Ok(acc << 1),
            '1' => Ok((acc << 1) | 1),
            _ => Err(Error::InvalidArgument(format!("bad bit {ch:?}"))),
        })
    };
    map_projector_bits(parse(ket)?, parse(bra)?, ket.len())
}

/// In-place fast Walsh–Hadamard transform (unnormalized).
pub fn fwht<T>(v: &mut [T])
where
    T: Copy + core::ops::Add<Output = T> + core::ops::Sub<Output = T>,
{
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

fn qubits_of_dim(n: usize) -> Result<usize> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Dimension(format!("dimension {n} is not a power of two")));
    }
    let q = n.trailing_zeros() as usize;
    check_bits(q)?;
    Ok(q)
}

fn i_pow(k: u32) -> C64 {
    match k % 4 {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    }
}

/// Σ_ij m_ij |i⟩⟨j| as Pauli strings; rows and columns are bitstrings.
pub fn map_matrix(m: &CMat) -> Result<PauliSum> {
    map_matrix_pruned(m, PRUNE_THRESHOLD)
}

pub fn map_matrix_pruned(m: &CMat, threshold: f64) -> Result<PauliSum> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension("matrix is not square".into()));
    }
    let n = m.nrows();
    let nq = qubits_of_dim(n)?;
    let inv = 1.0 / n as f64;
    let mut terms = Vec::new();
    let mut buf = alloc::vec![C64::new(0.0, 0.0); n];
    for x in 0..n {
        let mut any = false;
        for (l, b) in buf.iter_mut().enumerate() {
            *b = m[(l ^ x, l)];
            any |= *b != C64::new(0.0, 0.0);
        }
        if !any {
            continue;
        }
        fwht(&mut buf);
        for (z, v) in buf.iter().enumerate() {
            let cf = *v * inv * i_pow(3 * (x & z).count_ones());
            if cf.norm() >= threshold {
                terms.push(PauliTerm::new(x as u64, z as u64, cf));
            }
        }
    }
    Ok(PauliSum { n_qubits: nq, terms })
}

/// {I, Z} expansion of a diagonal operator.
pub fn map_diagonal(d: &[f64]) -> Result<PauliSum> {
    map_diagonal_pruned(d, PRUNE_THRESHOLD)
}

pub fn map_diagonal_pruned(d: &[f64], threshold: f64) -> Result<PauliSum> {
    let nq = qubits_of_dim(d.len())?;
    let mut v = d.to_vec();
    fwht(&mut v);
    let inv = 1.0 / d.len() as f64;
    let terms = v.iter().enumerate().filter(|(_, w)| (*w * inv).abs() >= threshold).map(|(z, w)| PauliTerm::new(0, z as u64, c(w * inv, 0.0))).collect();
    Ok(PauliSum { n_qubits: nq, terms })
}

pub fn gray_code(i: u64) -> u64 {
    i ^ (i >> 1)
}

/// Position of `g` in the reflected Gray sequence.
pub fn gray_rank(g: u64) -> u64 {
    let mut r = g;
    let mut s = 1;
    while s < 64 {
        r ^= r >> s;
        s *= 2;
    }
    r
}

/// Diagonal terms sorted along the reflected Gray sequence of their Z-masks.
pub fn gray_code_order(s: &PauliSum) -> Result<Vec<PauliTerm>> {
    if !s.is_diagonal() {
        return Err(Error::NotDiagonal);
    }
    let mut t = s.terms.clone();
    t.sort_by_key(|p| gray_rank(p.z));
    Ok(t)
}

/// Dense matrix of a Pauli sum.
pub fn matrix_of(s: &PauliSum) -> Result<CMat> {
    if s.n_qubits > MATRIX_QUBIT_LIMIT {
        return Err(Error::CircuitTooLarge { qubits: s.n_qubits, limit: MATRIX_QUBIT_LIMIT });
    }
    let n = 1usize << s.n_qubits;
    let mut m = CMat::zeros(n, n);
    for t in &s.terms {
        let ph = t.coeff * i_pow((t.x & t.z).count_ones());
        for l in 0..n {
            let sign = if (t.z & l as u64).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            m[(l ^ t.x as usize, l)] += ph * sign;
        }
    }
    Ok(m)
}

/// Applies a Pauli sum to a state vector without forming the matrix.
pub fn apply_sum(s: &PauliSum, v: &[C64]) -> Vec<C64> {
    let mut out = alloc::vec![C64::new(0.0, 0.0); v.len()];
    for t in &s.terms {
        let ph = t.coeff * i_pow((t.x & t.z).count_ones());
        for (l, a) in v.iter().enumerate() {
            let sign = if (t.z & l as u64).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            out[l ^ t.x as usize] += ph * *a * sign;
        }
    }
    out
}
