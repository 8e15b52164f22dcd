//! Density matrices stored block-diagonally over symmetry sectors.
//!
//! When the Hamiltonian and the initial state both conserve some linear
//! charge of the occupations (for example `m1 − m2`, or the parity of
//! `m0`), the density matrix stays block diagonal in that charge for all
//! times: photon loss shifts the charge of bra and ket together. Only the
//! diagonal blocks are stored. The trivial layout is a single block, i.e.
//! the full dense matrix.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{FockBasis, Mode, Occupations};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// A charge `Σ_i w_i m_i`, optionally reduced modulo `modulus`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Charge {
    /// Weights for modes 0, 1, 2.
    pub weights: [i64; 3],
    pub modulus: Option<i64>,
}

impl Charge {
    pub const PAIR_DIFFERENCE: Charge = Charge {
        weights: [0, 1, -1],
        modulus: None,
    };
    pub const TOTAL_NUMBER: Charge = Charge {
        weights: [1, 1, 1],
        modulus: None,
    };
    pub const MODE0_PARITY: Charge = Charge {
        weights: [1, 0, 0],
        modulus: Some(2),
    };
    pub const PAIR_PARITY: Charge = Charge {
        weights: [0, 1, 1],
        modulus: Some(2),
    };

    pub const CANDIDATES: [Charge; 4] = [
        Charge::PAIR_DIFFERENCE,
        Charge::TOTAL_NUMBER,
        Charge::MODE0_PARITY,
        Charge::PAIR_PARITY,
    ];

    pub fn value(&self, occ: Occupations) -> i64 {
        let raw: i64 = Mode::ALL
            .iter()
            .map(|&m| self.weights[m.index()] * occ.get(m) as i64)
            .sum();
        match self.modulus {
            Some(p) => raw.rem_euclid(p),
            None => raw,
        }
    }
}

/// Partition of the basis into blocks of equal charge.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorLayout {
    basis: FockBasis,
    charges: Vec<Charge>,
    block_of: Vec<usize>,
    local_of: Vec<usize>,
    blocks: Vec<Vec<usize>>,
    offsets: Vec<usize>,
}

impl SectorLayout {
    pub fn trivial(basis: FockBasis) -> Self {
        Self::from_charges(basis, &[])
    }

    /// Groups basis states by the tuple of `charges`. Blocks are numbered in
    /// order of their smallest basis index, so the layout is deterministic.
    pub fn from_charges(basis: FockBasis, charges: &[Charge]) -> Self {
        let dim = basis.dim();
        let mut ids: HashMap<Vec<i64>, usize> = HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut block_of = vec![0; dim];
        let mut local_of = vec![0; dim];
        for i in 0..dim {
            let occ = basis.occupations(i);
            let key: Vec<i64> = charges.iter().map(|c| c.value(occ)).collect();
            let id = *ids.entry(key).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            block_of[i] = id;
            local_of[i] = blocks[id].len();
            blocks[id].push(i);
        }
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for b in &blocks {
            acc += b.len() * b.len();
            offsets.push(acc);
        }
        Self {
            basis,
            charges: charges.to_vec(),
            block_of,
            local_of,
            blocks,
            offsets,
        }
    }

    pub fn basis(&self) -> FockBasis {
        self.basis
    }

    pub fn charges(&self) -> &[Charge] {
        &self.charges
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Basis indices belonging to block `b`, ascending.
    pub fn block(&self, b: usize) -> &[usize] {
        &self.blocks[b]
    }

    pub fn block_size(&self, b: usize) -> usize {
        self.blocks[b].len()
    }

    pub fn block_of(&self, i: usize) -> usize {
        self.block_of[i]
    }

    pub fn local_of(&self, i: usize) -> usize {
        self.local_of[i]
    }

    /// Offset of block `b` in the flat storage.
    pub fn offset(&self, b: usize) -> usize {
        self.offsets[b]
    }

    /// Number of stored complex entries.
    pub fn storage_len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Position of `(r, c)` in flat storage, or `None` when the entry lies
    /// outside every block (and is therefore zero).
    pub fn position(&self, r: usize, c: usize) -> Option<usize> {
        let b = self.block_of[r];
        if self.block_of[c] != b {
            return None;
        }
        let n = self.blocks[b].len();
        Some(self.offsets[b] + self.local_of[r] * n + self.local_of[c])
    }
}

/// Density matrix over a [`FockBasis`], block diagonal in its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    layout: Arc<SectorLayout>,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn zeros(layout: Arc<SectorLayout>) -> Self {
        let len = layout.storage_len();
        Self {
            layout,
            data: vec![ZERO; len],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.layout.clone())
    }

    /// Wraps a dense row-major `dim × dim` matrix.
    pub fn from_dense(basis: FockBasis, dense: Vec<C64>) -> Result<Self> {
        let dim = basis.dim();
        if dense.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: dense.len(),
            });
        }
        Ok(Self {
            layout: Arc::new(SectorLayout::trivial(basis)),
            data: dense,
        })
    }

    /// Projector `|occ⟩⟨occ|` in the given layout.
    pub fn pure_fock(layout: Arc<SectorLayout>, occ: Occupations) -> Result<Self> {
        let i = layout.basis().index(occ)?;
        let mut rho = Self::zeros(layout);
        let p = rho
            .layout
            .position(i, i)
            .expect("diagonal entries are stored");
        rho.data[p] = C64::new(1.0, 0.0);
        Ok(rho)
    }

    pub fn basis(&self) -> FockBasis {
        self.layout.basis()
    }

    pub fn dim(&self) -> usize {
        self.basis().dim()
    }

    pub fn layout(&self) -> &SectorLayout {
        &self.layout
    }

    pub fn layout_arc(&self) -> Arc<SectorLayout> {
        self.layout.clone()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn block_data(&self, b: usize) -> &[C64] {
        &self.data[self.layout.offset(b)..self.layout.offset(b + 1)]
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.layout
            .position(r, c)
            .map(|p| self.data[p])
            .unwrap_or(ZERO)
    }

    pub fn diag(&self, i: usize) -> C64 {
        self.get(i, i)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.diag(i)).sum()
    }

    pub fn to_dense(&self) -> Vec<C64> {
        let dim = self.dim();
        let mut dense = vec![ZERO; dim * dim];
        for b in 0..self.layout.n_blocks() {
            let states = self.layout.block(b);
            let data = self.block_data(b);
            let n = states.len();
            for (lr, &r) in states.iter().enumerate() {
                for (lc, &c) in states.iter().enumerate() {
                    dense[r * dim + c] = data[lr * n + lc];
                }
            }
        }
        dense
    }

    /// Re-expresses this matrix in `layout`. Fails if a nonzero entry falls
    /// outside the target blocks.
    pub fn reblock(&self, layout: Arc<SectorLayout>) -> Result<Self> {
        if layout.basis() != self.basis() {
            return Err(Error::DimensionMismatch {
                expected: layout.basis().dim(),
                found: self.dim(),
            });
        }
        let mut out = Self::zeros(layout);
        for (r, c, v) in self.nonzeros() {
            match out.layout.position(r, c) {
                Some(p) => out.data[p] = v,
                None => return Err(Error::NotBlockDiagonal),
            }
        }
        Ok(out)
    }

    /// Stored nonzero entries as `(row, col, value)` in basis indices.
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.layout.n_blocks()).flat_map(move |b| {
            let states = self.layout.block(b);
            let n = states.len();
            self.block_data(b)
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != ZERO)
                .map(move |(k, v)| (states[k / n], states[k % n], *v))
        })
    }

    /// `max |ρ_rc − conj(ρ_cr)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for b in 0..self.layout.n_blocks() {
            let n = self.layout.block_size(b);
            let d = self.block_data(b);
            for r in 0..n {
                for c in r..n {
                    worst = worst.max((d[r * n + c] - d[c * n + r].conj()).norm());
                }
            }
        }
        worst
    }

    /// `ρ ← (ρ + ρ†)/2`; returns the residual `‖ρ − ρ†‖_max` it removed.
    pub fn symmetrize(&mut self) -> f64 {
        let mut worst = 0.0f64;
        for b in 0..self.layout.n_blocks() {
            let n = self.layout.block_size(b);
            let off = self.layout.offset(b);
            let d = &mut self.data[off..off + n * n];
            worst = worst.max(hermitian_part_in_place(d, n));
        }
        worst
    }

    pub fn adjoint(&self) -> Self {
        let mut out = self.clone();
        for b in 0..self.layout.n_blocks() {
            let n = self.layout.block_size(b);
            let off = self.layout.offset(b);
            let src = &self.data[off..off + n * n];
            let dst = &mut out.data[off..off + n * n];
            for r in 0..n {
                for c in 0..n {
                    dst[r * n + c] = src[c * n + r].conj();
                }
            }
        }
        out
    }

    /// Smallest eigenvalue of the Hermitian part, over all blocks.
    pub fn min_eigenvalue(&self) -> f64 {
        (0..self.layout.n_blocks())
            .map(|b| {
                let n = self.layout.block_size(b);
                let d = self.block_data(b);
                let m = DMatrix::from_fn(n, n, |r, c| 0.5 * (d[r * n + c] + d[c * n + r].conj()));
                m.symmetric_eigenvalues().min()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Entrywise max-abs distance; the layouts may differ.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.basis() != other.basis() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        if self.layout == other.layout {
            return Ok(self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max));
        }
        let a = self.to_dense();
        let b = other.to_dense();
        Ok(a.iter()
            .zip(&b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max))
    }
}

const TILE: usize = 32;

/// Calls `f(r, c)` for every `r < c < n`, tile by tile so that both `(r, c)`
/// and `(c, r)` stay in cache.
pub(crate) fn for_upper_pairs(n: usize, mut f: impl FnMut(usize, usize)) {
    for r0 in (0..n).step_by(TILE) {
        for c0 in (r0..n).step_by(TILE) {
            for r in r0..(r0 + TILE).min(n) {
                for c in c0.max(r + 1)..(c0 + TILE).min(n) {
                    f(r, c);
                }
            }
        }
    }
}

fn hermitian_part_in_place(d: &mut [C64], n: usize) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..n {
        let v = d[r * n + r];
        worst = worst.max(4.0 * v.im * v.im);
        d[r * n + r] = C64::new(v.re, 0.0);
    }
    for_upper_pairs(n, |r, c| {
        let upper = d[r * n + c];
        let lower = d[c * n + r].conj();
        worst = worst.max((upper - lower).norm_sqr());
        let avg = 0.5 * (upper + lower);
        d[r * n + c] = avg;
        d[c * n + r] = avg.conj();
    });
    worst.sqrt()
}
