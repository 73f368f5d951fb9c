//! Real parametrization of Hermitian covariance blocks.
//!
//! An `n x n` Hermitian block is described by `n^2` reals: the `n` diagonal
//! entries first, then for each `a < b` (row-major) the pair
//! `(Re Q_ab, Im Q_ab)`.

use num_complex::Complex64;

use super::barrier::{AffineForm, PsdTerm};
use crate::model::{CMat, CovariancePoint, NetworkInstance};

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianLayout {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
}

impl HermitianLayout {
    pub fn new(dims: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(dims.len());
        let mut total = 0;
        for &n in &dims {
            offsets.push(total);
            total += n * n;
        }
        Self { dims, offsets, total }
    }

    /// One block per link, in link order.
    pub fn for_instance(inst: &NetworkInstance) -> Self {
        Self::new((0..inst.links()).map(|m| inst.antennas(m / inst.carriers())).collect())
    }

    /// Total number of real parameters.
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn blocks(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, block: usize) -> usize {
        self.dims[block]
    }

    pub fn offset(&self, block: usize) -> usize {
        self.offsets[block]
    }

    /// Global parameter index of each `(a, b)` slot with `a < b`: real part
    /// at the returned index, imaginary part right after it.
    fn pair_index(&self, block: usize, a: usize, b: usize) -> usize {
        let n = self.dims[block];
        debug_assert!(a < b && b < n);
        // pairs before row a: sum_{r<a} (n-1-r)
        let before = a * (2 * n - a - 1) / 2;
        self.offsets[block] + n + 2 * (before + (b - a - 1))
    }

    pub fn pack_block(&self, block: usize, q: &CMat, out: &mut [f64]) {
        let n = self.dims[block];
        let off = self.offsets[block];
        for a in 0..n {
            out[off + a] = q[(a, a)].re;
            for b in a + 1..n {
                // average with the mirrored entry to absorb rounding asymmetry
                let z = (q[(a, b)] + q[(b, a)].conj()) * 0.5;
                let p = self.pair_index(block, a, b);
                out[p] = z.re;
                out[p + 1] = z.im;
            }
        }
    }

    pub fn pack(&self, q: &CovariancePoint) -> Vec<f64> {
        let mut out = vec![0.0; self.total];
        for (block, m) in q.blocks().iter().enumerate() {
            self.pack_block(block, m, &mut out);
        }
        out
    }

    pub fn unpack_block(&self, block: usize, x: &[f64]) -> CMat {
        let n = self.dims[block];
        let off = self.offsets[block];
        let mut m = CMat::zeros(n, n);
        for a in 0..n {
            m[(a, a)] = Complex64::new(x[off + a], 0.0);
            for b in a + 1..n {
                let p = self.pair_index(block, a, b);
                let z = Complex64::new(x[p], x[p + 1]);
                m[(a, b)] = z;
                m[(b, a)] = z.conj();
            }
        }
        m
    }

    pub fn unpack(&self, inst: &NetworkInstance, x: &[f64]) -> CovariancePoint {
        let blocks = (0..self.dims.len()).map(|b| self.unpack_block(b, x)).collect();
        CovariancePoint::from_blocks(inst, blocks).expect("layout matches instance")
    }

    /// Basis matrices `E_p` of a block: `Q_b = sum_p x_p E_p`.
    pub(crate) fn basis(&self, block: usize) -> Vec<PsdTerm> {
        let n = self.dims[block];
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let mut terms = Vec::with_capacity(n * n);
        for a in 0..n {
            terms.push(PsdTerm {
                var: self.offsets[block] + a,
                entries: vec![(a, a, one)],
            });
        }
        for a in 0..n {
            for b in a + 1..n {
                let p = self.pair_index(block, a, b);
                terms.push(PsdTerm {
                    var: p,
                    entries: vec![(a, b, one), (b, a, one)],
                });
                terms.push(PsdTerm {
                    var: p + 1,
                    entries: vec![(a, b, i), (b, a, -i)],
                });
            }
        }
        terms.sort_by_key(|t| t.var);
        terms
    }

    /// Linear form `x -> Tr(A Q_block)` for Hermitian `A`.
    pub(crate) fn trace_form(&self, block: usize, a: &CMat) -> AffineForm {
        let n = self.dims[block];
        let mut idx = Vec::with_capacity(n * n);
        let mut val = Vec::with_capacity(n * n);
        for d in 0..n {
            idx.push(self.offsets[block] + d);
            val.push(a[(d, d)].re);
        }
        for r in 0..n {
            for c in r + 1..n {
                let p = self.pair_index(block, r, c);
                // Tr(A Q) picks up A_cr Q_rc + A_rc Q_cr = 2 Re(A_rc conj(Q_rc))
                let z = (a[(r, c)] + a[(c, r)].conj()) * 0.5;
                idx.push(p);
                val.push(2.0 * z.re);
                idx.push(p + 1);
                val.push(2.0 * z.im);
            }
        }
        AffineForm::new(idx, val, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CVec, Topology};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn herm3() -> CMat {
        CMat::from_row_slice(
            3,
            3,
            &[
                c(2.0, 0.0),
                c(0.3, -0.4),
                c(-1.0, 0.2),
                c(0.3, 0.4),
                c(1.5, 0.0),
                c(0.7, 0.1),
                c(-1.0, -0.2),
                c(0.7, -0.1),
                c(3.0, 0.0),
            ],
        )
    }

    #[test]
    fn pack_unpack_round_trip() {
        let layout = HermitianLayout::new(vec![3, 1]);
        let q = herm3();
        let mut x = vec![0.0; layout.len()];
        layout.pack_block(0, &q, &mut x);
        assert_eq!(layout.len(), 10);
        assert_eq!(layout.unpack_block(0, &x), q);
    }

    #[test]
    fn basis_reconstructs_block() {
        let layout = HermitianLayout::new(vec![3]);
        let q = herm3();
        let x = {
            let mut x = vec![0.0; 9];
            layout.pack_block(0, &q, &mut x);
            x
        };
        let mut m = CMat::zeros(3, 3);
        for t in layout.basis(0) {
            for (a, b, v) in t.entries {
                m[(a, b)] += v * x[t.var];
            }
        }
        assert!((m - q).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn trace_form_matches_complex_trace() {
        let layout = HermitianLayout::new(vec![3]);
        let q = herm3();
        let h = CVec::from_vec(vec![c(0.2, 1.0), c(-0.5, 0.5), c(1.0, -0.3)]);
        let a = crate::model::instance::outer(&h);
        let mut x = vec![0.0; 9];
        layout.pack_block(0, &q, &mut x);
        let form = layout.trace_form(0, &a);
        let direct = (&a * &q).trace();
        assert!((form.eval(&x) - direct.re).abs() < 1e-12);
        assert!((form.eval(&x) - crate::model::quad_form(&h, &q)).abs() < 1e-12);
    }

    #[test]
    fn instance_layout_orders_links() {
        let h = |n: usize| CVec::from_element(n, c(1.0, 0.0));
        let inst = NetworkInstance::new(
            vec![2, 1],
            2,
            Topology::Interference,
            vec![h(2), h(2), h(2), h(2), h(1), h(1), h(1), h(1)],
            vec![1.0; 4],
        )
        .unwrap();
        let layout = HermitianLayout::for_instance(&inst);
        assert_eq!(layout.blocks(), 4);
        assert_eq!(layout.len(), 4 + 4 + 1 + 1);
        assert_eq!(layout.offset(2), 8);
    }
}
