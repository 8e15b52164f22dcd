//! Block kernel for the Lindblad right-hand side.
//!
//! The right-hand side is evaluated by direct products of the sparse
//! Hamiltonian with the stored density blocks; no superoperator is built.
//! Loss of a photon from mode `i` maps the block with charge `q` onto the
//! block with charge `q − w_i`, so each target block reads its jump term
//! from exactly one source block.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::density::{for_upper_pairs, Charge, DensityMatrix, SectorLayout};
use crate::error::{Error, Result};
use crate::fock::{Mode, SparseOperator};
use crate::model::{HamiltonianParts, ModelSpec, PulseEnvelope};

/// Finest layout built from [`Charge::CANDIDATES`] that both the Hamiltonian
/// (at any pump amplitude) and `rho0` respect.
pub fn conserved_layout(parts: &HamiltonianParts, rho0: &DensityMatrix) -> SectorLayout {
    let basis = parts.basis();
    let h_static = parts.static_part();
    let h_pump = parts.pump_sum();
    let kept: Vec<Charge> = Charge::CANDIDATES
        .iter()
        .copied()
        .filter(|charge| {
            let q = |i: usize| charge.value(basis.occupations(i));
            let conserved = |op: &SparseOperator| op.triplets().all(|(r, c, _)| q(r) == q(c));
            conserved(&h_static)
                && conserved(&h_pump)
                && rho0.nonzeros().all(|(r, c, _)| q(r) == q(c))
        })
        .collect();
    SectorLayout::from_charges(basis, &kept)
}

#[derive(Debug, Clone)]
struct Jump {
    src_offset: usize,
    src_n: usize,
    /// Local index in the source block of the state with one more photon;
    /// paired with a zero factor where the raised state is cut off.
    src_local: Vec<usize>,
    factor: Vec<f64>,
}

#[derive(Debug, Clone)]
struct BlockKernel {
    n: usize,
    offset: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    h_static: Vec<C64>,
    h_pump: Vec<C64>,
    photons: Vec<f64>,
    jumps: Vec<Jump>,
}

/// Prepared right-hand side `dρ/dt` for one model and one sector layout.
#[derive(Debug, Clone)]
pub struct MasterEquation {
    layout: Arc<SectorLayout>,
    gamma: f64,
    envelope: PulseEnvelope,
    blocks: Vec<BlockKernel>,
}

impl MasterEquation {
    pub fn new(
        spec: &ModelSpec,
        parts: &HamiltonianParts,
        layout: Arc<SectorLayout>,
    ) -> Result<Self> {
        spec.validate()?;
        let basis = layout.basis();
        if basis != parts.basis() {
            return Err(Error::DimensionMismatch {
                expected: parts.basis().dim(),
                found: basis.dim(),
            });
        }
        let h_static = parts.static_part();
        let h_pump = parts.pump_sum();

        let mut blocks = Vec::with_capacity(layout.n_blocks());
        for b in 0..layout.n_blocks() {
            let states = layout.block(b);
            let n = states.len();

            let mut row_ptr = Vec::with_capacity(n + 1);
            let mut cols = Vec::new();
            let mut hs = Vec::new();
            let mut hp = Vec::new();
            row_ptr.push(0);
            for &s in states {
                let mut entries: Vec<(usize, C64, C64)> = Vec::new();
                let mut push = |c: usize, v: C64, pump: bool| -> Result<()> {
                    if layout.block_of(c) != b {
                        return Err(Error::NotBlockDiagonal);
                    }
                    let lc = layout.local_of(c);
                    match entries.iter_mut().find(|e| e.0 == lc) {
                        Some(e) if pump => e.2 += v,
                        Some(e) => e.1 += v,
                        None if pump => entries.push((lc, C64::default(), v)),
                        None => entries.push((lc, v, C64::default())),
                    }
                    Ok(())
                };
                for (c, v) in h_static.row(s) {
                    push(c, v, false)?;
                }
                for (c, v) in h_pump.row(s) {
                    push(c, v, true)?;
                }
                entries.sort_by_key(|e| e.0);
                for (c, vs, vp) in entries {
                    cols.push(c);
                    hs.push(vs);
                    hp.push(vp);
                }
                row_ptr.push(cols.len());
            }

            let photons = states
                .iter()
                .map(|&s| basis.occupations(s).total() as f64)
                .collect();

            let mut jumps = Vec::new();
            if spec.gamma > 0.0 {
                for mode in Mode::ALL {
                    let stride = basis.stride(mode);
                    let mut src_block: Option<usize> = None;
                    let mut src_local = vec![0; n];
                    let mut factor = vec![0.0; n];
                    for (j, &s) in states.iter().enumerate() {
                        let m = basis.occupations(s).get(mode);
                        if m >= basis.n_max() {
                            continue;
                        }
                        let raised = s + stride;
                        let rb = layout.block_of(raised);
                        if *src_block.get_or_insert(rb) != rb {
                            return Err(Error::NotBlockDiagonal);
                        }
                        src_local[j] = layout.local_of(raised);
                        factor[j] = ((m + 1) as f64).sqrt();
                    }
                    if let Some(sb) = src_block {
                        jumps.push(Jump {
                            src_offset: layout.offset(sb),
                            src_n: layout.block_size(sb),
                            src_local,
                            factor,
                        });
                    }
                }
            }

            blocks.push(BlockKernel {
                n,
                offset: layout.offset(b),
                row_ptr,
                cols,
                h_static: hs,
                h_pump: hp,
                photons,
                jumps,
            });
        }

        Ok(Self {
            layout,
            gamma: spec.gamma,
            envelope: spec.envelope,
            blocks,
        })
    }

    pub fn layout(&self) -> &Arc<SectorLayout> {
        &self.layout
    }

    pub fn envelope(&self) -> &PulseEnvelope {
        &self.envelope
    }

    /// Writes `dρ/dt` at pump amplitude `f` into `out`.
    pub fn apply(&self, f: f64, rho: &[C64], out: &mut [C64]) {
        debug_assert_eq!(rho.len(), self.layout.storage_len());
        debug_assert_eq!(out.len(), rho.len());
        let mut h = Vec::new();
        for blk in &self.blocks {
            h.clear();
            h.extend(blk.h_static.iter().zip(&blk.h_pump).map(|(s, p)| s + p * f));
            self.apply_block(blk, &h, rho, out);
        }
    }

    fn apply_block(&self, blk: &BlockKernel, h: &[C64], rho: &[C64], out: &mut [C64]) {
        let n = blk.n;
        let gamma = self.gamma;
        let own = &rho[blk.offset..blk.offset + n * n];
        let out = &mut out[blk.offset..blk.offset + n * n];

        for r in 0..n {
            let rho_row = &own[r * n..(r + 1) * n];
            let out_row = &mut out[r * n..(r + 1) * n];

            let pr = blk.photons[r];
            for ((o, x), pc) in out_row.iter_mut().zip(rho_row).zip(&blk.photons) {
                *o = x * (-gamma * (pr + pc));
            }

            // −i H ρ
            for idx in blk.row_ptr[r]..blk.row_ptr[r + 1] {
                let k = blk.cols[idx];
                let coef = C64::new(h[idx].im, -h[idx].re);
                let src = &own[k * n..(k + 1) * n];
                for (o, x) in out_row.iter_mut().zip(src) {
                    *o += coef * x;
                }
            }

            // +i ρ H
            for (k, x) in rho_row.iter().enumerate() {
                if x.re == 0.0 && x.im == 0.0 {
                    continue;
                }
                let ix = C64::new(-x.im, x.re);
                for idx in blk.row_ptr[k]..blk.row_ptr[k + 1] {
                    out_row[blk.cols[idx]] += ix * h[idx];
                }
            }

            // 2γ a ρ a†
            for jump in &blk.jumps {
                let fr = jump.factor[r];
                if fr == 0.0 {
                    continue;
                }
                let w = 2.0 * gamma * fr;
                let src_row = &rho[jump.src_offset + jump.src_local[r] * jump.src_n..];
                for ((o, &cs), &fc) in out_row.iter_mut().zip(&jump.src_local).zip(&jump.factor) {
                    *o += src_row[cs] * (w * fc);
                }
            }
        }
    }

    /// Same as [`MasterEquation::apply`] for Hermitian `rho`, using
    /// `−i[H, ρ] − γ{N, ρ} = X + X†` with `X = −i(H − iγN)ρ`.
    pub fn apply_hermitian(&self, f: f64, rho: &[C64], out: &mut [C64]) {
        debug_assert_eq!(rho.len(), self.layout.storage_len());
        debug_assert_eq!(out.len(), rho.len());
        let mut h = Vec::new();
        for blk in &self.blocks {
            h.clear();
            h.extend(blk.h_static.iter().zip(&blk.h_pump).map(|(s, p)| s + p * f));
            self.apply_block_hermitian(blk, &h, rho, out);
        }
    }

    fn apply_block_hermitian(&self, blk: &BlockKernel, h: &[C64], rho: &[C64], out: &mut [C64]) {
        let n = blk.n;
        let gamma = self.gamma;
        let own = &rho[blk.offset..blk.offset + n * n];
        let out = &mut out[blk.offset..blk.offset + n * n];

        for r in 0..n {
            let out_row = &mut out[r * n..(r + 1) * n];
            let damp = -gamma * blk.photons[r];
            for (o, x) in out_row.iter_mut().zip(&own[r * n..(r + 1) * n]) {
                *o = x * damp;
            }
            for idx in blk.row_ptr[r]..blk.row_ptr[r + 1] {
                let k = blk.cols[idx];
                let coef = C64::new(h[idx].im, -h[idx].re);
                for (o, x) in out_row.iter_mut().zip(&own[k * n..(k + 1) * n]) {
                    *o += coef * x;
                }
            }
        }

        for_upper_pairs(n, |r, c| {
            let a = out[r * n + c];
            let b = out[c * n + r];
            out[r * n + c] = a + b.conj();
            out[c * n + r] = b + a.conj();
        });
        for r in 0..n {
            out[r * n + r] = C64::new(2.0 * out[r * n + r].re, 0.0);
        }

        for jump in &blk.jumps {
            for r in 0..n {
                let fr = jump.factor[r];
                if fr == 0.0 {
                    continue;
                }
                let w = 2.0 * gamma * fr;
                let src_row = &rho[jump.src_offset + jump.src_local[r] * jump.src_n..];
                let out_row = &mut out[r * n..(r + 1) * n];
                for ((o, &cs), &fc) in out_row.iter_mut().zip(&jump.src_local).zip(&jump.factor) {
                    *o += src_row[cs] * (w * fc);
                }
            }
        }
    }

    pub fn rhs(&self, rho: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if rho.layout() != self.layout.as_ref() {
            return Err(Error::NotBlockDiagonal);
        }
        let f = self.envelope.value(t)?;
        let mut out = rho.zeros_like();
        self.apply(f, rho.data(), out.data_mut());
        Ok(out)
    }
}
