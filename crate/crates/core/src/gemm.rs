//! Single-precision matrix multiply used by the im2col convolution.
//!
//! `C[m][n] = Σ_k A[m][k] · B[k][n]` with `A` row-major and `B` pre-packed
//! into column panels of [`NR`] floats. Every output element is accumulated
//! strictly in increasing `k`, so results do not depend on blocking or on how
//! rows are distributed across threads.

/// Rows per micro-tile.
pub(crate) const MR: usize = 4;
/// Columns per packed panel.
pub(crate) const NR: usize = 16;
/// Depth of one k-block.
const KC: usize = 256;

/// `B` (`k × n`, row-major) repacked as `ceil(n / NR)` panels, each `k × NR`
/// contiguous, zero-padded past column `n`.
pub(crate) struct PackedB {
    k: usize,
    n: usize,
    panels: Vec<f32>,
}

impl PackedB {
    pub(crate) fn pack(b: &[f32], k: usize, n: usize) -> Self {
        debug_assert_eq!(b.len(), k * n);
        let n_panels = n.div_ceil(NR);
        let mut panels = vec![0.0f32; n_panels * k * NR];
        for p in 0..n_panels {
            let j0 = p * NR;
            let width = NR.min(n - j0);
            let panel = &mut panels[p * k * NR..(p + 1) * k * NR];
            for kk in 0..k {
                panel[kk * NR..kk * NR + width].copy_from_slice(&b[kk * n + j0..kk * n + j0 + width]);
            }
        }
        PackedB { k, n, panels }
    }

    pub(crate) fn n_panels(&self) -> usize {
        self.n.div_ceil(NR)
    }

    fn panel(&self, p: usize) -> &[f32] {
        &self.panels[p * self.k * NR..(p + 1) * self.k * NR]
    }
}

/// Multiply an `m × k` row-major block `a` (with `m` a multiple of [`MR`])
/// into `c`, an `m × (n_panels · NR)` row-major scratch that is overwritten.
pub(crate) fn gemm_block(a: &[f32], m: usize, b: &PackedB, c: &mut [f32]) {
    debug_assert_eq!(m % MR, 0);
    debug_assert_eq!(a.len(), m * b.k);
    debug_assert_eq!(c.len(), m * b.n_panels() * NR);

    #[cfg(target_arch = "x86_64")]
    {
        if has_fma() {
            // SAFETY: the required CPU features were detected at runtime.
            unsafe { gemm_block_fma(a, m, b, c) };
            return;
        }
    }
    gemm_block_generic::<false>(a, m, b, c);
}

#[cfg(target_arch = "x86_64")]
fn has_fma() -> bool {
    use std::sync::OnceLock;
    static FMA: OnceLock<bool> = OnceLock::new();
    *FMA.get_or_init(|| is_x86_feature_detected!("avx2") && is_x86_feature_detected!("fma"))
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn gemm_block_fma(a: &[f32], m: usize, b: &PackedB, c: &mut [f32]) {
    gemm_block_generic::<true>(a, m, b, c);
}

#[inline(always)]
fn gemm_block_generic<const FMA: bool>(a: &[f32], m: usize, b: &PackedB, c: &mut [f32]) {
    let k = b.k;
    let ldc = b.n_panels() * NR;
    c.fill(0.0);
    let mut k0 = 0;
    while k0 < k {
        let kc = KC.min(k - k0);
        for p in 0..b.n_panels() {
            let panel = &b.panel(p)[k0 * NR..(k0 + kc) * NR];
            for r0 in (0..m).step_by(MR) {
                let rows: [&[f32]; MR] = std::array::from_fn(|i| &a[(r0 + i) * k + k0..(r0 + i) * k + k0 + kc]);
                let mut acc = [[0.0f32; NR]; MR];
                for (i, row) in acc.iter_mut().enumerate() {
                    let off = (r0 + i) * ldc + p * NR;
                    row.copy_from_slice(&c[off..off + NR]);
                }
                micro_kernel::<FMA>(&rows, panel, &mut acc);
                for (i, row) in acc.iter().enumerate() {
                    let off = (r0 + i) * ldc + p * NR;
                    c[off..off + NR].copy_from_slice(row);
                }
            }
        }
        k0 += kc;
    }
}

#[inline(always)]
fn micro_kernel<const FMA: bool>(rows: &[&[f32]; MR], panel: &[f32], acc: &mut [[f32; NR]; MR]) {
    for (kk, bv) in panel.chunks_exact(NR).enumerate() {
        let bv: &[f32; NR] = bv.try_into().unwrap();
        for (i, row) in acc.iter_mut().enumerate() {
            let av = rows[i][kk];
            for j in 0..NR {
                row[j] = if FMA {
                    av.mul_add(bv[j], row[j])
                } else {
                    av * bv[j] + row[j]
                };
            }
        }
    }
}
