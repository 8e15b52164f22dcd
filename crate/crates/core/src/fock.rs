//! Truncated three-mode Fock space and sparse ladder operators.
//!
//! Basis states are occupation triples `|m1, m2, m0⟩` with every `m_i` in
//! `0..=n_max`. The flat index puts mode 1 slowest and mode 0 fastest:
//!
//! ```text
//! index(m1, m2, m0) = m1·(n_max+1)² + m2·(n_max+1) + m0
//! ```
//!
//! Creation operators use a hard cutoff: `a†` sends the `n_max` level to zero.

use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// One of the three resonator modes. `Zero` is the degenerate (pumped-pair)
/// mode ω0, `One` and `Two` are the signal/idler modes ω1, ω2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Zero,
    One,
    Two,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Zero, Mode::One, Mode::Two];

    pub fn index(self) -> usize {
        match self {
            Mode::Zero => 0,
            Mode::One => 1,
            Mode::Two => 2,
        }
    }
}

impl TryFrom<usize> for Mode {
    type Error = Error;

    fn try_from(i: usize) -> Result<Self> {
        match i {
            0 => Ok(Mode::Zero),
            1 => Ok(Mode::One),
            2 => Ok(Mode::Two),
            _ => Err(Error::InvalidMode(i)),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Photon numbers in the three modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Occupations {
    pub m1: usize,
    pub m2: usize,
    pub m0: usize,
}

impl Occupations {
    pub const VACUUM: Occupations = Occupations {
        m1: 0,
        m2: 0,
        m0: 0,
    };

    pub fn new(m1: usize, m2: usize, m0: usize) -> Self {
        Self { m1, m2, m0 }
    }

    pub fn get(&self, mode: Mode) -> usize {
        match mode {
            Mode::Zero => self.m0,
            Mode::One => self.m1,
            Mode::Two => self.m2,
        }
    }

    pub fn total(&self) -> usize {
        self.m0 + self.m1 + self.m2
    }
}

impl fmt::Display for Occupations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}_{}", self.m1, self.m2, self.m0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FockBasis {
    n_max: usize,
    dim: usize,
}

impl FockBasis {
    pub const N_MODES: usize = 3;

    pub fn new(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::CutoffTooSmall(n_max));
        }
        let levels = n_max + 1;
        Ok(Self {
            n_max,
            dim: levels * levels * levels,
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Index distance between neighbouring occupations of `mode`.
    pub fn stride(&self, mode: Mode) -> usize {
        let levels = self.n_max + 1;
        match mode {
            Mode::One => levels * levels,
            Mode::Two => levels,
            Mode::Zero => 1,
        }
    }

    pub fn contains(&self, occ: Occupations) -> bool {
        occ.m0 <= self.n_max && occ.m1 <= self.n_max && occ.m2 <= self.n_max
    }

    pub fn index(&self, occ: Occupations) -> Result<usize> {
        if !self.contains(occ) {
            return Err(Error::OccupationOutOfRange {
                m1: occ.m1,
                m2: occ.m2,
                m0: occ.m0,
                n_max: self.n_max,
            });
        }
        Ok(self.index_unchecked(occ))
    }

    pub(crate) fn index_unchecked(&self, occ: Occupations) -> usize {
        let levels = self.n_max + 1;
        (occ.m1 * levels + occ.m2) * levels + occ.m0
    }

    /// Inverse of [`FockBasis::index`]. Panics if `index >= dim`.
    pub fn occupations(&self, index: usize) -> Occupations {
        assert!(index < self.dim, "basis index {index} out of range");
        let levels = self.n_max + 1;
        Occupations {
            m0: index % levels,
            m2: (index / levels) % levels,
            m1: index / (levels * levels),
        }
    }

    pub fn states(&self) -> impl Iterator<Item = Occupations> + '_ {
        (0..self.dim).map(move |i| self.occupations(i))
    }
}

/// Compressed-row sparse complex matrix over a [`FockBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    basis: FockBasis,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<C64>,
}

impl SparseOperator {
    pub fn zero(basis: FockBasis) -> Self {
        Self {
            basis,
            row_ptr: vec![0; basis.dim() + 1],
            cols: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(basis: FockBasis) -> Self {
        Self::from_triplets(basis, (0..basis.dim()).map(|i| (i, i, C64::new(1.0, 0.0))))
            .expect("diagonal indices are in range")
    }

    /// Builds an operator from `(row, col, value)` entries. Duplicates are
    /// summed and exact zeros dropped.
    pub fn from_triplets<I>(basis: FockBasis, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let dim = basis.dim();
        let mut triplets: Vec<(usize, usize, C64)> = entries.into_iter().collect();
        for &(r, c, _) in &triplets {
            if r >= dim || c >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.max(c) + 1,
                });
            }
        }
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            cols.push(c);
            values.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut op = Self {
            basis,
            row_ptr,
            cols,
            values,
        };
        op.prune();
        Ok(op)
    }

    fn prune(&mut self) {
        if self.values.iter().all(|v| *v != C64::new(0.0, 0.0)) {
            return;
        }
        let triplets: Vec<_> = self
            .triplets()
            .filter(|t| t.2 != C64::new(0.0, 0.0))
            .collect();
        *self = Self::from_triplets(self.basis, triplets).expect("indices already validated");
    }

    pub fn basis(&self) -> FockBasis {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Nonzero entries of row `r` as `(column, value)` pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.row(r)
            .find(|&(col, _)| col == c)
            .map(|(_, v)| v)
            .unwrap_or_default()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.basis,
            self.triplets().map(|(r, c, v)| (c, r, v.conj())),
        )
        .expect("indices already validated")
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self::from_triplets(
            self.basis,
            self.triplets().map(|(r, c, v)| (r, c, v * factor)),
        )
        .expect("indices already validated")
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_basis(other)?;
        Self::from_triplets(self.basis, self.triplets().chain(other.triplets()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Sparse matrix product `self · other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_basis(other)?;
        let mut triplets = Vec::new();
        for r in 0..self.dim() {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    triplets.push((r, c, a * b));
                }
            }
        }
        Self::from_triplets(self.basis, triplets)
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok((0..self.dim())
            .map(|r| self.row(r).map(|(c, a)| a * v[c]).sum())
            .collect())
    }

    /// Largest entry modulus; zero for the empty operator.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().all(|(r, c, _)| r == c)
    }

    fn check_same_basis(&self, other: &Self) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

pub fn build_basis(n_max: usize) -> Result<FockBasis> {
    FockBasis::new(n_max)
}

/// Truncated annihilation operator `a_mode`, with `⟨m−1|a|m⟩ = √m`.
pub fn annihilation(basis: FockBasis, mode: Mode) -> SparseOperator {
    let stride = basis.stride(mode);
    let entries = (0..basis.dim()).filter_map(|col| {
        let m = basis.occupations(col).get(mode);
        (m > 0).then(|| (col - stride, col, C64::new((m as f64).sqrt(), 0.0)))
    });
    SparseOperator::from_triplets(basis, entries).expect("ladder indices stay inside the basis")
}

pub fn creation(basis: FockBasis, mode: Mode) -> SparseOperator {
    annihilation(basis, mode).adjoint()
}

pub fn number_operator(basis: FockBasis, mode: Mode) -> SparseOperator {
    let entries = (0..basis.dim()).filter_map(|i| {
        let m = basis.occupations(i).get(mode);
        (m > 0).then(|| (i, i, C64::new(m as f64, 0.0)))
    });
    SparseOperator::from_triplets(basis, entries).expect("diagonal indices are in range")
}

/// Total photon number `Σ_i a_i† a_i`.
pub fn total_number(basis: FockBasis) -> SparseOperator {
    let entries = (0..basis.dim()).filter_map(|i| {
        let n = basis.occupations(i).total();
        (n > 0).then(|| (i, i, C64::new(n as f64, 0.0)))
    });
    SparseOperator::from_triplets(basis, entries).expect("diagonal indices are in range")
}

/// Basis vector `|occ⟩` as a dense state vector.
pub fn basis_vector(basis: FockBasis, occ: Occupations) -> Result<Vec<C64>> {
    let mut v = vec![C64::new(0.0, 0.0); basis.dim()];
    v[basis.index(occ)?] = C64::new(1.0, 0.0);
    Ok(v)
}
