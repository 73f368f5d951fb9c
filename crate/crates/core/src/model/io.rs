//! JSON instance files.
//!
//! All indices are zero-based. Complex vectors and matrices are stored as a
//! pair of real/imaginary arrays; matrices are dense and row-major.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::constraints::{ConstraintSet, PowerConstraint};
use super::instance::{CMat, CVec, NetworkInstance, Topology};
use super::utility::UtilitySpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelEntry {
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseEntry {
    pub k: usize,
    pub l: usize,
    pub sigma2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightEntry {
    pub k: usize,
    pub l: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintEntry {
    #[serde(rename = "A")]
    pub weights: Vec<WeightEntry>,
    #[serde(rename = "P")]
    pub budget: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UtilityEntry {
    pub alpha: f64,
    pub weights: Vec<f64>,
}

/// On-disk representation, mirrored field by field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(rename = "K")]
    pub users: usize,
    #[serde(rename = "N")]
    pub antennas: Vec<usize>,
    #[serde(rename = "L_C")]
    pub carriers: usize,
    pub topology: Topology,
    pub channels: Vec<ChannelEntry>,
    pub noise: Vec<NoiseEntry>,
    pub constraints: Vec<ConstraintEntry>,
    pub utility: UtilityEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A validated problem: network, constraint set and utility.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub instance: NetworkInstance,
    pub constraints: ConstraintSet,
    pub utility: UtilitySpec,
    pub seed: Option<u64>,
}

fn complex_vec(re: &[f64], im: &[f64], what: &str) -> Result<CVec> {
    if re.len() != im.len() {
        return Err(Error::Dimension(format!(
            "{what}: re has {} entries, im has {}",
            re.len(),
            im.len()
        )));
    }
    Ok(CVec::from_iterator(
        re.len(),
        re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)),
    ))
}

fn complex_mat(re: &[f64], im: &[f64], n: usize, what: &str) -> Result<CMat> {
    if re.len() != n * n || im.len() != n * n {
        return Err(Error::Dimension(format!(
            "{what}: expected {} entries for a {n}x{n} matrix, got re={} im={}",
            n * n,
            re.len(),
            im.len()
        )));
    }
    Ok(CMat::from_fn(n, n, |a, b| Complex64::new(re[a * n + b], im[a * n + b])))
}

impl Scenario {
    pub fn new(instance: NetworkInstance, constraints: ConstraintSet, utility: UtilitySpec) -> Result<Self> {
        constraints.validate(&instance)?;
        crate::model::interference::check_utility(&instance, &utility)?;
        Ok(Self {
            instance,
            constraints,
            utility,
            seed: None,
        })
    }

    pub fn from_file(file: InstanceFile) -> Result<Self> {
        let k = file.users;
        if file.antennas.len() != k {
            return Err(Error::Validation(format!("N has {} entries but K = {k}", file.antennas.len())));
        }
        let lc = file.carriers;
        if k == 0 || lc == 0 {
            return Err(Error::Validation("K and L_C must be positive".into()));
        }
        let mut channels: Vec<Option<CVec>> = vec![None; k * k * lc];
        for (idx, e) in file.channels.iter().enumerate() {
            if e.j >= k || e.k >= k || e.l >= lc {
                return Err(Error::Validation(format!("channels[{idx}]: index (j={}, k={}, l={}) out of range", e.j, e.k, e.l)));
            }
            let slot = &mut channels[(e.j * k + e.k) * lc + e.l];
            if slot.is_some() {
                return Err(Error::Validation(format!("channels[{idx}]: duplicate entry (j={}, k={}, l={})", e.j, e.k, e.l)));
            }
            let h = complex_vec(&e.re, &e.im, &format!("channels[{idx}]"))?;
            if h.len() != file.antennas[e.j] {
                return Err(Error::Dimension(format!(
                    "channels[{idx}]: length {} but N[{}] = {}",
                    h.len(),
                    e.j,
                    file.antennas[e.j]
                )));
            }
            *slot = Some(h);
        }
        let channels = channels
            .into_iter()
            .enumerate()
            .map(|(pos, h)| {
                h.ok_or_else(|| {
                    let l = pos % lc;
                    let rx = (pos / lc) % k;
                    let j = pos / (lc * k);
                    Error::Validation(format!("channels: missing entry (j={j}, k={rx}, l={l})"))
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut noise = vec![f64::NAN; k * lc];
        for (idx, e) in file.noise.iter().enumerate() {
            if e.k >= k || e.l >= lc {
                return Err(Error::Validation(format!("noise[{idx}]: index (k={}, l={}) out of range", e.k, e.l)));
            }
            noise[e.k * lc + e.l] = e.sigma2;
        }
        if let Some(pos) = noise.iter().position(|s| s.is_nan()) {
            return Err(Error::Validation(format!("noise: missing entry (k={}, l={})", pos / lc, pos % lc)));
        }

        let instance = NetworkInstance::new(file.antennas.clone(), lc, file.topology, channels, noise)?;

        let mut constraints = Vec::with_capacity(file.constraints.len());
        for (ci, c) in file.constraints.iter().enumerate() {
            let mut weights: Vec<Option<CMat>> = vec![None; k * lc];
            for (wi, w) in c.weights.iter().enumerate() {
                if w.k >= k || w.l >= lc {
                    return Err(Error::Validation(format!("constraints[{ci}].A[{wi}]: index (k={}, l={}) out of range", w.k, w.l)));
                }
                let m = complex_mat(&w.re, &w.im, file.antennas[w.k], &format!("constraints[{ci}].A[{wi}]"))?;
                weights[w.k * lc + w.l] = Some(m);
            }
            constraints.push(PowerConstraint { weights, budget: c.budget });
        }
        let constraints = ConstraintSet::new(&instance, constraints)
            .map_err(|e| Error::Validation(format!("constraints: {e}")))?;
        let utility = UtilitySpec::new(file.utility.alpha, file.utility.weights.clone())
            .map_err(|e| Error::Validation(format!("utility: {e}")))?;
        let mut s = Self::new(instance, constraints, utility)?;
        s.seed = file.seed;
        Ok(s)
    }

    pub fn to_file(&self) -> InstanceFile {
        let inst = &self.instance;
        let k = inst.users();
        let lc = inst.carriers();
        let mut channels = Vec::with_capacity(k * k * lc);
        for j in 0..k {
            for rx in 0..k {
                for l in 0..lc {
                    let h = inst.channel(j, rx, l);
                    channels.push(ChannelEntry {
                        j,
                        k: rx,
                        l,
                        re: h.iter().map(|c| c.re).collect(),
                        im: h.iter().map(|c| c.im).collect(),
                    });
                }
            }
        }
        let noise = (0..k)
            .flat_map(|rx| (0..lc).map(move |l| (rx, l)))
            .map(|(rx, l)| NoiseEntry {
                k: rx,
                l,
                sigma2: inst.noise(rx, l),
            })
            .collect();
        let constraints = self
            .constraints
            .constraints()
            .iter()
            .map(|c| ConstraintEntry {
                weights: c
                    .weights
                    .iter()
                    .enumerate()
                    .filter_map(|(link, a)| {
                        a.as_ref().map(|a| {
                            let n = a.nrows();
                            WeightEntry {
                                k: link / lc,
                                l: link % lc,
                                re: (0..n * n).map(|t| a[(t / n, t % n)].re).collect(),
                                im: (0..n * n).map(|t| a[(t / n, t % n)].im).collect(),
                            }
                        })
                    })
                    .collect(),
                budget: c.budget,
            })
            .collect();
        InstanceFile {
            users: k,
            antennas: inst.antenna_counts().to_vec(),
            carriers: lc,
            topology: inst.topology(),
            channels,
            noise,
            constraints,
            utility: UtilityEntry {
                alpha: self.utility.alpha(),
                weights: self.utility.weights().to_vec(),
            },
            seed: self.seed,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_file(file)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Copy with every budget multiplied by `factor`, channels unchanged.
    pub fn with_scaled_budgets(&self, factor: f64) -> Self {
        Self {
            instance: self.instance.clone(),
            constraints: self.constraints.scaled(factor),
            utility: self.utility.clone(),
            seed: self.seed,
        }
    }
}
