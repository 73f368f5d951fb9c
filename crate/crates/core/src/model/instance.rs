use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Relative tolerance on the anti-Hermitian part of a covariance block.
pub const TOL_HERMITIAN: f64 = 1e-10;
/// Minimum eigenvalue allowed, relative to the block trace.
pub const TOL_PSD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    #[serde(rename = "IC")]
    Interference,
    #[serde(rename = "BC")]
    Broadcast,
}

/// Channels, noise powers and carrier layout of a multi-user MISO network.
///
/// Link `(k, l)` is receiver `k` on carrier `l`; its flat index is
/// `k * carriers + l`, the same layout used by the interference vector and
/// by the covariance blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkInstance {
    antennas: Vec<usize>,
    carriers: usize,
    topology: Topology,
    // indexed by (j * K + k) * L_C + l: transmitter j, receiver k, carrier l
    channels: Vec<CVec>,
    noise: Vec<f64>,
}

impl NetworkInstance {
    /// Builds and validates an instance. `channels` is ordered by
    /// transmitter, then receiver, then carrier; `noise` by receiver, then
    /// carrier.
    pub fn new(
        antennas: Vec<usize>,
        carriers: usize,
        topology: Topology,
        channels: Vec<CVec>,
        noise: Vec<f64>,
    ) -> Result<Self> {
        let inst = Self {
            antennas,
            carriers,
            topology,
            channels,
            noise,
        };
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<()> {
        let k = self.antennas.len();
        if k == 0 {
            return Err(Error::Validation("at least one user is required".into()));
        }
        if self.carriers == 0 {
            return Err(Error::Validation("L_C must be at least 1".into()));
        }
        if let Some(pos) = self.antennas.iter().position(|&n| n == 0) {
            return Err(Error::Validation(format!("N[{pos}] must be positive")));
        }
        if self.channels.len() != k * k * self.carriers {
            return Err(Error::Dimension(format!(
                "expected {} channel vectors, got {}",
                k * k * self.carriers,
                self.channels.len()
            )));
        }
        if self.noise.len() != k * self.carriers {
            return Err(Error::Dimension(format!(
                "expected {} noise powers, got {}",
                k * self.carriers,
                self.noise.len()
            )));
        }
        for j in 0..k {
            for rx in 0..k {
                for l in 0..self.carriers {
                    let h = self.channel(j, rx, l);
                    if h.len() != self.antennas[j] {
                        return Err(Error::Dimension(format!(
                            "channel (j={j}, k={rx}, l={l}) has length {} but transmitter {j} has {} antennas",
                            h.len(),
                            self.antennas[j]
                        )));
                    }
                    if h.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                        return Err(Error::Validation(format!(
                            "channel (j={j}, k={rx}, l={l}) is not finite"
                        )));
                    }
                }
            }
        }
        for (idx, &s) in self.noise.iter().enumerate() {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Validation(format!(
                    "noise power for link {idx} must be strictly positive, got {s}"
                )));
            }
        }
        if self.topology == Topology::Broadcast {
            let n0 = self.antennas[0];
            if self.antennas.iter().any(|&n| n != n0) {
                return Err(Error::Validation(
                    "broadcast topology needs equal antenna counts".into(),
                ));
            }
            for rx in 0..k {
                for l in 0..self.carriers {
                    let h0 = self.channel(0, rx, l);
                    for j in 1..k {
                        if self.channel(j, rx, l) != h0 {
                            return Err(Error::Validation(format!(
                                "broadcast channel to receiver {rx} on carrier {l} differs across transmitters"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn users(&self) -> usize {
        self.antennas.len()
    }

    pub fn carriers(&self) -> usize {
        self.carriers
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn antennas(&self, k: usize) -> usize {
        self.antennas[k]
    }

    pub fn antenna_counts(&self) -> &[usize] {
        &self.antennas
    }

    /// Number of (receiver, carrier) links, `K * L_C`.
    pub fn links(&self) -> usize {
        self.antennas.len() * self.carriers
    }

    pub fn link(&self, k: usize, l: usize) -> usize {
        k * self.carriers + l
    }

    /// Channel from transmitter `j` to receiver `k` on carrier `l`.
    pub fn channel(&self, j: usize, k: usize, l: usize) -> &CVec {
        let users = self.antennas.len();
        &self.channels[(j * users + k) * self.carriers + l]
    }

    pub fn noise(&self, k: usize, l: usize) -> f64 {
        self.noise[k * self.carriers + l]
    }

    pub fn noise_powers(&self) -> &[f64] {
        &self.noise
    }

    /// True when every cross channel (j != k) is identically zero.
    pub fn is_decoupled(&self) -> bool {
        let k = self.users();
        (0..k).all(|j| {
            (0..k).filter(|&rx| rx != j).all(|rx| {
                (0..self.carriers).all(|l| self.channel(j, rx, l).iter().all(|c| c.norm_sqr() == 0.0))
            })
        })
    }

    /// Copy with every noise power replaced.
    pub fn with_noise(&self, noise: Vec<f64>) -> Result<Self> {
        Self::new(
            self.antennas.clone(),
            self.carriers,
            self.topology,
            self.channels.clone(),
            noise,
        )
    }
}

/// `h Q h^H` for a row vector `h`, returned as a real number.
///
/// Panics in debug builds if the imaginary residue is not negligible, which
/// can only happen for a non-Hermitian `Q`.
pub fn quad_form(h: &CVec, q: &CMat) -> f64 {
    let n = h.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for b in 0..n {
            row += q[(a, b)] * h[b].conj();
        }
        acc += h[a] * row;
    }
    debug_assert!(
        acc.im.abs() <= 1e-9 * acc.re.abs() + 1e-12,
        "quadratic form has imaginary residue {}",
        acc.im
    );
    acc.re
}

/// The set of transmit covariance blocks `Q_kl`, one per link.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariancePoint {
    carriers: usize,
    blocks: Vec<CMat>,
}

impl CovariancePoint {
    pub fn zeros(inst: &NetworkInstance) -> Self {
        let blocks = (0..inst.users())
            .flat_map(|k| (0..inst.carriers()).map(move |_| k))
            .map(|k| CMat::zeros(inst.antennas(k), inst.antennas(k)))
            .collect();
        Self {
            carriers: inst.carriers(),
            blocks,
        }
    }

    pub fn scaled_identity(inst: &NetworkInstance, scale: f64) -> Self {
        let mut q = Self::zeros(inst);
        for b in &mut q.blocks {
            let n = b.nrows();
            *b = CMat::identity(n, n) * Complex64::new(scale, 0.0);
        }
        q
    }

    /// Builds a point from blocks ordered by user, then carrier.
    pub fn from_blocks(inst: &NetworkInstance, blocks: Vec<CMat>) -> Result<Self> {
        let q = Self {
            carriers: inst.carriers(),
            blocks,
        };
        q.check_shape(inst)?;
        Ok(q)
    }

    pub fn check_shape(&self, inst: &NetworkInstance) -> Result<()> {
        if self.blocks.len() != inst.links() || self.carriers != inst.carriers() {
            return Err(Error::Dimension(format!(
                "covariance point has {} blocks, instance needs {}",
                self.blocks.len(),
                inst.links()
            )));
        }
        for k in 0..inst.users() {
            for l in 0..inst.carriers() {
                let b = self.block(k, l);
                let n = inst.antennas(k);
                if b.nrows() != n || b.ncols() != n {
                    return Err(Error::Dimension(format!(
                        "block (k={k}, l={l}) is {}x{}, expected {n}x{n}",
                        b.nrows(),
                        b.ncols()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks the Hermitian and PSD invariants within `TOL_HERMITIAN` and
    /// `TOL_PSD`.
    pub fn validate(&self, inst: &NetworkInstance) -> Result<()> {
        self.check_shape(inst)?;
        for (idx, b) in self.blocks.iter().enumerate() {
            let scale = b.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let skew = (b - b.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
            if skew > TOL_HERMITIAN * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::Validation(format!("block {idx} is not Hermitian")));
            }
            let trace: f64 = (0..b.nrows()).map(|a| b[(a, a)].re).sum();
            let min_eig = min_eigenvalue(b);
            if min_eig < -TOL_PSD * trace.abs().max(f64::MIN_POSITIVE) {
                return Err(Error::Validation(format!(
                    "block {idx} is not PSD (min eigenvalue {min_eig:e})"
                )));
            }
        }
        Ok(())
    }

    pub fn block(&self, k: usize, l: usize) -> &CMat {
        &self.blocks[k * self.carriers + l]
    }

    pub fn block_mut(&mut self, k: usize, l: usize) -> &mut CMat {
        &mut self.blocks[k * self.carriers + l]
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn carriers(&self) -> usize {
        self.carriers
    }

    /// `t * self + (1 - t) * other`.
    pub fn convex_combination(&self, other: &Self, t: f64) -> Self {
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a * Complex64::new(t, 0.0) + b * Complex64::new(1.0 - t, 0.0))
            .collect();
        Self {
            carriers: self.carriers,
            blocks,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            carriers: self.carriers,
            blocks: self
                .blocks
                .iter()
                .map(|b| b * Complex64::new(factor, 0.0))
                .collect(),
        }
    }

    pub fn total_trace(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| (0..b.nrows()).map(|a| b[(a, a)].re).sum::<f64>())
            .sum()
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    SymmetricEigen::new(herm)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Eigenvalues of a Hermitian matrix in descending order.
pub fn eigenvalues_desc(m: &CMat) -> Vec<f64> {
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Outer product `h^H h` of a channel row vector, a rank-one PSD matrix.
pub fn outer(h: &CVec) -> CMat {
    let n = h.len();
    CMat::from_fn(n, n, |a, b| h[a].conj() * h[b])
}
