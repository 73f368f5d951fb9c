//! Transmit-power sweeps: every selected algorithm on the same channels
//! with the constraint budgets rescaled per power level.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::bb::{run_bb, BbOptions};
use crate::error::{Error, Result};
use crate::model::{interference_box, Scenario};
use crate::oracle::{dpc_sum_capacity, grid_search, GridSpec};
use crate::pricing::{run_pricing, PricingOptions};

#[derive(Debug, Clone, PartialEq)]
pub enum SweepAlgorithm {
    /// Two columns: achieved sum rate and the bound from the global lower
    /// bound on the cost.
    Bb,
    Pricing { lambda0: f64 },
    Dpc,
    Grid,
}

impl SweepAlgorithm {
    fn columns(&self) -> Vec<String> {
        match self {
            Self::Bb => vec!["bb".into(), "bb_bound".into()],
            Self::Pricing { lambda0 } => vec![format!("pricing_lambda0={lambda0:e}")],
            Self::Dpc => vec!["dpc".into()],
            Self::Grid => vec!["grid".into()],
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    /// Total power levels in dB relative to unit noise.
    pub db: Vec<f64>,
    pub algorithms: Vec<SweepAlgorithm>,
    /// Initial interference level for every pricing column.
    pub i0: f64,
    pub bb: BbOptions,
    pub pricing: PricingOptions,
    pub grid: GridSpec,
    /// Sequential evaluation and no timing-dependent output.
    pub deterministic: bool,
}

impl SweepSpec {
    pub fn new(db: Vec<f64>, algorithms: Vec<SweepAlgorithm>) -> Self {
        Self {
            db,
            algorithms,
            i0: 1.0,
            bb: BbOptions::default(),
            pricing: PricingOptions::default(),
            grid: GridSpec::default(),
            deterministic: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.db.is_empty() {
            return Err(Error::Validation("sweep needs at least one power level".into()));
        }
        if self.db.iter().any(|d| !d.is_finite()) {
            return Err(Error::Validation("power levels must be finite".into()));
        }
        if self.db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("power levels must be strictly increasing".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Validation("sweep needs at least one algorithm".into()));
        }
        Ok(())
    }

    pub fn columns(&self) -> Vec<String> {
        self.algorithms.iter().flat_map(|a| a.columns()).collect()
    }
}

/// Outcome flags of one power level.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointFlags {
    pub bb_budget_exhausted: bool,
    pub pricing_not_converged: bool,
    pub failures: usize,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub db: f64,
    /// Sum rates in bits per channel use; NaN for failed runs.
    pub cells: Vec<f64>,
    pub flags: PointFlags,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p_db");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for r in &self.rows {
            write!(out, "{}", r.db).unwrap();
            for v in &r.cells {
                if v.is_nan() {
                    out.push_str(",NaN");
                } else {
                    write!(out, ",{v:.9}").unwrap();
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|x| x == name)?;
        Some(self.rows.iter().map(|r| r.cells[c]).collect())
    }

    pub fn any_budget_exhausted(&self) -> bool {
        self.rows.iter().any(|r| r.flags.bb_budget_exhausted)
    }

    pub fn any_pricing_not_converged(&self) -> bool {
        self.rows.iter().any(|r| r.flags.pricing_not_converged)
    }
}

/// Copy of `base` whose largest budget equals `10^(db / 10)`, all budgets
/// keeping their ratios.
pub fn at_power(base: &Scenario, db: f64) -> Scenario {
    let largest = base
        .constraints
        .constraints()
        .iter()
        .map(|c| c.budget)
        .fold(0.0, f64::max);
    base.with_scaled_budgets(10f64.powf(db / 10.0) / largest)
}

fn bits(nats: f64) -> f64 {
    nats / LN_2
}

fn run_point(base: &Scenario, spec: &SweepSpec, db: f64) -> SweepRow {
    let s = at_power(base, db);
    let (inst, util, cons) = (&s.instance, &s.utility, &s.constraints);
    let mut cells = Vec::new();
    let mut flags = PointFlags::default();
    let fail = |flags: &mut PointFlags, cells: &mut Vec<f64>, n: usize, what: &str, e: Error| {
        log::error!("{what} failed at {db} dB: {e}");
        flags.failures += 1;
        cells.extend(std::iter::repeat_n(f64::NAN, n));
    };
    for alg in &spec.algorithms {
        match alg {
            SweepAlgorithm::Bb => match run_bb(inst, util, cons, &spec.bb) {
                Ok(r) => {
                    if r.budget_exhausted() {
                        log::warn!("branch and bound stopped at its node budget at {db} dB (gap {:.3e})", r.gap);
                        flags.bb_budget_exhausted = true;
                    }
                    cells.push(bits(-r.upper_final));
                    cells.push(bits(-r.lower_final));
                }
                Err(e) => fail(&mut flags, &mut cells, 2, "branch and bound", e),
            },
            SweepAlgorithm::Pricing { lambda0 } => {
                let run = interference_box(inst, cons, &spec.pricing.solver).and_then(|root| {
                    let l = root.len();
                    run_pricing(inst, util, cons, &root, &vec![*lambda0; l], &vec![spec.i0; l], &spec.pricing)
                });
                match run {
                    Ok(r) => {
                        if !r.converged {
                            flags.pricing_not_converged = true;
                        }
                        cells.push(bits(-r.cost));
                    }
                    Err(e) => fail(&mut flags, &mut cells, 1, "pricing", e),
                }
            }
            SweepAlgorithm::Dpc => match dpc_sum_capacity(inst, cons, &spec.bb.solver) {
                Ok(r) => cells.push(bits(r.capacity)),
                Err(e) => fail(&mut flags, &mut cells, 1, "DPC", e),
            },
            SweepAlgorithm::Grid => match grid_search(inst, util, cons, &spec.grid) {
                Ok(r) => cells.push(bits(-r.cost_best)),
                Err(e) => fail(&mut flags, &mut cells, 1, "grid search", e),
            },
        }
    }
    SweepRow { db, cells, flags }
}

/// Runs the sweep; rows come back in increasing power order. Failed runs
/// leave NaN cells and the sweep continues.
pub fn run_sweep(base: &Scenario, spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let rows = if spec.deterministic {
        spec.db.iter().map(|&db| run_point(base, spec, db)).collect()
    } else {
        spec.db.par_iter().map(|&db| run_point(base, spec, db)).collect()
    };
    Ok(SweepTable {
        columns: spec.columns(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate, GeneratorSpec, Topology};

    fn single_user() -> Scenario {
        generate(&GeneratorSpec {
            seed: 8,
            users: 1,
            antennas: 2,
            carriers: 1,
            topology: Topology::Broadcast,
            power: 1.0,
        })
        .unwrap()
    }

    #[test]
    fn single_user_columns_coincide() {
        let s = single_user();
        let spec = SweepSpec::new(
            vec![0.0, 10.0, 20.0],
            vec![
                SweepAlgorithm::Bb,
                SweepAlgorithm::Pricing { lambda0: 1e-5 },
                SweepAlgorithm::Dpc,
                SweepAlgorithm::Grid,
            ],
        );
        let t = run_sweep(&s, &spec).unwrap();
        let g = s.instance.channel(0, 0, 0).norm_squared();
        for r in &t.rows {
            let exact = (1.0 + 10f64.powf(r.db / 10.0) * g).log2();
            for (c, v) in t.columns.iter().zip(&r.cells) {
                assert!((v - exact).abs() < 2e-3, "{c} at {} dB: {v} vs {exact}", r.db);
            }
        }
    }

    #[test]
    fn spec_validation() {
        let bad = SweepSpec::new(vec![10.0, 5.0], vec![SweepAlgorithm::Dpc]);
        assert!(bad.validate().is_err());
        assert!(SweepSpec::new(vec![1.0], vec![]).validate().is_err());
    }

    #[test]
    fn failures_become_nan_cells() {
        let s = generate(&GeneratorSpec {
            seed: 1,
            users: 3,
            antennas: 2,
            carriers: 1,
            topology: Topology::Interference,
            power: 1.0,
        })
        .unwrap();
        let t = run_sweep(&s, &SweepSpec::new(vec![0.0], vec![SweepAlgorithm::Dpc])).unwrap();
        assert!(t.rows[0].cells[0].is_nan());
        assert_eq!(t.rows[0].flags.failures, 1);
        assert!(t.to_csv().ends_with("0,NaN\n"));
    }
}
