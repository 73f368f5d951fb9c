//! Exhaustive rank-one beamforming search for tiny instances.
//!
//! Each user transmits `Q_k = p_k d_k d_k^H` with `d_k` a unit vector
//! parametrized by hyperspherical magnitude angles and relative phases (the
//! first entry is real). A direction enters the rate expressions only
//! through its signal gain, its leakage to the other receiver and its
//! constraint usages, so directions dominated in all of these are dropped
//! before the pairwise enumeration.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::instance::outer;
use crate::model::{objective, CMat, CVec, ConstraintSet, CovariancePoint, NetworkInstance, UtilitySpec};

pub const MAX_USERS: usize = 2;
pub const MAX_TOTAL_ANTENNAS: usize = 4;
pub const MAX_POINTS: f64 = 1e8;
pub const MIN_RESOLUTION: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Intervals per magnitude angle on `[0, pi/2]`.
    pub angle_resolution: usize,
    /// Points per relative phase on `[0, 2 pi)`.
    pub phase_resolution: usize,
    /// Intervals of the power axis `[0, p_max]`.
    pub power_resolution: usize,
    /// Local zoom around the best coarse candidates.
    pub refine: bool,
    pub refine_candidates: usize,
    pub refine_levels: usize,
    /// Points per axis of each zoom level (odd).
    pub refine_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            angle_resolution: 32,
            phase_resolution: 32,
            power_resolution: 32,
            refine: true,
            refine_candidates: 6,
            refine_levels: 30,
            refine_points: 5,
        }
    }
}

impl GridSpec {
    pub fn coarse(resolution: usize) -> Self {
        Self {
            angle_resolution: resolution,
            phase_resolution: resolution,
            power_resolution: resolution,
            refine: false,
            ..Self::default()
        }
    }

    pub fn doubled(&self) -> Self {
        Self {
            angle_resolution: 2 * self.angle_resolution,
            phase_resolution: 2 * self.phase_resolution,
            power_resolution: 2 * self.power_resolution,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub q_best: CovariancePoint,
    pub cost_best: f64,
    /// Estimated utility left on the table by the final grid spacing.
    pub resolution_bound: f64,
    pub points_evaluated: u64,
}

/// Per-user parameter layout: `n - 1` magnitude angles, `n - 1` phases and
/// one power.
#[derive(Debug, Clone, Copy)]
struct UserAxes {
    n: usize,
}

impl UserAxes {
    fn dims(&self) -> usize {
        2 * (self.n - 1) + 1
    }

    fn direction(&self, params: &[f64]) -> CVec {
        let n = self.n;
        let (angles, phases) = params[..2 * (n - 1)].split_at(n - 1);
        let mut mags = vec![0.0; n];
        let mut rest = 1.0;
        for a in 0..n - 1 {
            mags[a] = rest * angles[a].cos();
            rest *= angles[a].sin();
        }
        mags[n - 1] = rest;
        CVec::from_iterator(
            n,
            (0..n).map(|a| {
                if a == 0 {
                    Complex64::new(mags[0], 0.0)
                } else {
                    Complex64::from_polar(mags[a], phases[a - 1])
                }
            }),
        )
    }
}

/// Scalar summary of one direction for user `k`.
#[derive(Debug, Clone)]
struct DirectionGains {
    params: Vec<f64>,
    signal: f64,
    leakage: f64,
    usage: Vec<f64>,
}

fn dominates(a: &DirectionGains, b: &DirectionGains) -> bool {
    a.signal >= b.signal && a.leakage <= b.leakage && a.usage.iter().zip(&b.usage).all(|(x, y)| x <= y)
}

struct Problem<'a> {
    inst: &'a NetworkInstance,
    util: &'a UtilitySpec,
    cons: &'a ConstraintSet,
    axes: Vec<UserAxes>,
    /// Power range per user.
    p_max: Vec<f64>,
}

impl Problem<'_> {
    fn weights(&self, k: usize) -> Vec<Option<&CMat>> {
        self.cons.constraints().iter().map(|c| c.weights[k].as_ref()).collect()
    }

    fn gains(&self, k: usize, params: &[f64]) -> DirectionGains {
        let d = self.axes[k].direction(params);
        let dd = outer(&d);
        let form = |h: &CVec| crate::model::quad_form(h, &dd);
        let signal = form(self.inst.channel(k, k, 0));
        let leakage = if self.inst.users() > 1 {
            form(self.inst.channel(k, 1 - k, 0))
        } else {
            0.0
        };
        let usage = self
            .weights(k)
            .iter()
            .map(|a| a.map_or(0.0, |a| (a * &dd).trace().re))
            .collect();
        DirectionGains {
            params: params.to_vec(),
            signal,
            leakage,
            usage,
        }
    }

    fn feasible(&self, used: &[f64]) -> bool {
        self.cons
            .constraints()
            .iter()
            .zip(used)
            .all(|(c, u)| *u <= c.budget * (1.0 + 1e-12))
    }

    /// Utility (to maximize) of per-user `(gains, power)` choices, or `None`
    /// when infeasible.
    fn utility(&self, choice: &[(&DirectionGains, f64)]) -> Option<f64> {
        let mut used = vec![0.0; self.cons.len()];
        for (g, p) in choice {
            for (u, x) in used.iter_mut().zip(&g.usage) {
                *u += p * x;
            }
        }
        if !self.feasible(&used) {
            return None;
        }
        let k_users = choice.len();
        let mut total = 0.0;
        for k in 0..k_users {
            let (g, p) = choice[k];
            let interference = if k_users > 1 {
                let (o, po) = choice[1 - k];
                po * o.leakage
            } else {
                0.0
            };
            let r = (p * g.signal / (self.inst.noise(k, 0) + interference)).ln_1p();
            total += self.util.weight(k) * self.util.fair(r);
        }
        Some(total)
    }

    fn utility_at(&self, x: &[f64]) -> Option<f64> {
        let mut offset = 0;
        let mut parts = Vec::with_capacity(self.axes.len());
        for (k, ax) in self.axes.iter().enumerate() {
            let d = ax.dims();
            let p = x[offset + d - 1];
            if p < 0.0 || p > self.p_max[k] {
                return None;
            }
            parts.push((self.gains(k, &x[offset..offset + d - 1]), p));
            offset += d;
        }
        let refs: Vec<(&DirectionGains, f64)> = parts.iter().map(|(g, p)| (g, *p)).collect();
        self.utility(&refs)
    }

    /// Lower/upper limits and periodicity of every axis.
    fn axis_ranges(&self) -> Vec<(f64, f64, bool)> {
        let mut out = Vec::new();
        for (k, ax) in self.axes.iter().enumerate() {
            for _ in 0..ax.n - 1 {
                out.push((0.0, FRAC_PI_2, false));
            }
            for _ in 0..ax.n - 1 {
                out.push((0.0, TAU, true));
            }
            out.push((0.0, self.p_max[k], false));
        }
        out
    }

    fn covariance(&self, x: &[f64]) -> CovariancePoint {
        let mut blocks = Vec::with_capacity(self.axes.len());
        let mut offset = 0;
        for ax in &self.axes {
            let d = ax.dims();
            let dir = ax.direction(&x[offset..offset + d - 1]);
            blocks.push(outer(&dir) * Complex64::new(x[offset + d - 1], 0.0));
            offset += d;
        }
        CovariancePoint::from_blocks(self.inst, blocks).expect("shapes follow the instance")
    }
}

/// Every combination of `counts[a]` indices, in lexicographic order.
fn for_each_index(counts: &[usize], mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0; counts.len()];
    if counts.iter().any(|&c| c == 0) {
        return;
    }
    loop {
        f(&idx);
        let mut a = counts.len();
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < counts[a] {
                break;
            }
            idx[a] = 0;
        }
    }
}

fn direction_grid(n: usize, spec: &GridSpec) -> Vec<Vec<f64>> {
    let mut counts = vec![spec.angle_resolution + 1; n - 1];
    counts.extend(vec![spec.phase_resolution; n - 1]);
    let mut out = Vec::new();
    for_each_index(&counts, |idx| {
        let (a, p) = idx.split_at(n - 1);
        let mut params: Vec<f64> = a.iter().map(|&i| FRAC_PI_2 * i as f64 / spec.angle_resolution as f64).collect();
        params.extend(p.iter().map(|&i| TAU * i as f64 / spec.phase_resolution as f64));
        out.push(params);
    });
    out
}

fn pareto(mut dirs: Vec<DirectionGains>) -> Vec<DirectionGains> {
    dirs.sort_by(|a, b| b.signal.total_cmp(&a.signal).then(a.leakage.total_cmp(&b.leakage)));
    let mut kept: Vec<DirectionGains> = Vec::new();
    for d in dirs {
        if !kept.iter().any(|k| dominates(k, &d)) {
            kept.push(d);
        }
    }
    kept
}

fn check_caps(inst: &NetworkInstance) -> Result<()> {
    let total: usize = inst.antenna_counts().iter().sum();
    if inst.users() > MAX_USERS || total > MAX_TOTAL_ANTENNAS || inst.carriers() != 1 {
        return Err(Error::GridCaps(format!(
            "grid search supports K <= {MAX_USERS}, total antennas <= {MAX_TOTAL_ANTENNAS} and L_C = 1; \
             got K = {}, total antennas = {total}, L_C = {}",
            inst.users(),
            inst.carriers()
        )));
    }
    Ok(())
}

fn refine_points(inst: &NetworkInstance, spec: &GridSpec) -> f64 {
    if !spec.refine {
        return 0.0;
    }
    let dims: usize = (0..inst.users()).map(|k| 2 * (inst.antennas(k) - 1) + 1).sum();
    (spec.refine_candidates * spec.refine_levels) as f64 * (spec.refine_points as f64).powi(dims as i32)
}

/// Best rank-one strategy on the grid described by `spec`.
pub fn grid_search(inst: &NetworkInstance, util: &UtilitySpec, cons: &ConstraintSet, spec: &GridSpec) -> Result<GridResult> {
    check_caps(inst)?;
    if spec.angle_resolution < MIN_RESOLUTION || spec.phase_resolution < MIN_RESOLUTION || spec.power_resolution < MIN_RESOLUTION {
        return Err(Error::GridCaps(format!("grid resolutions must be at least {MIN_RESOLUTION}")));
    }
    if spec.refine && (spec.refine_points < 3 || spec.refine_points % 2 == 0) {
        return Err(Error::GridCaps("refine_points must be odd and at least 3".into()));
    }
    let directions: f64 = (0..inst.users())
        .map(|k| {
            let m = inst.antennas(k) as i32 - 1;
            ((spec.angle_resolution + 1) as f64).powi(m) * (spec.phase_resolution as f64).powi(m)
        })
        .sum();
    let cap = |planned: f64| {
        if planned > MAX_POINTS {
            Err(Error::GridCaps(format!("grid would evaluate {planned:.3e} points, above the cap of {MAX_POINTS:.0e}")))
        } else {
            Ok(())
        }
    };
    cap(directions + refine_points(inst, spec))?;
    let k_users = inst.users();
    let axes: Vec<UserAxes> = (0..k_users).map(|k| UserAxes { n: inst.antennas(k) }).collect();
    // largest power any direction can carry with the other users silent
    let p_max: Vec<f64> = (0..k_users)
        .map(|k| {
            cons.constraints()
                .iter()
                .filter_map(|c| {
                    let a = c.weights[k].as_ref()?;
                    let lmin = crate::model::instance::min_eigenvalue(a);
                    (lmin > 0.0).then(|| c.budget / lmin)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    if p_max.iter().any(|p| !p.is_finite()) {
        return Err(Error::Precondition("a user's power is not bounded by any single constraint".into()));
    }
    let prob = Problem {
        inst,
        util,
        cons,
        axes,
        p_max,
    };

    let per_user: Vec<Vec<DirectionGains>> = (0..k_users)
        .map(|k| {
            let n = prob.axes[k].n;
            let all: Vec<DirectionGains> = direction_grid(n, spec).iter().map(|p| prob.gains(k, p)).collect();
            pareto(all)
        })
        .collect();
    let pairs: f64 = per_user.iter().map(|d| (d.len() * (spec.power_resolution + 1)) as f64).product();
    cap(directions + pairs + refine_points(inst, spec))?;
    let powers: Vec<Vec<f64>> = (0..k_users)
        .map(|k| {
            (0..=spec.power_resolution)
                .map(|i| prob.p_max[k] * i as f64 / spec.power_resolution as f64)
                .collect()
        })
        .collect();

    // coarse enumeration; ties keep the lowest flat index
    let first: Vec<(usize, usize)> = (0..per_user[0].len())
        .flat_map(|d| (0..powers[0].len()).map(move |p| (d, p)))
        .collect();
    let keep = if spec.refine { spec.refine_candidates.max(1) } else { 1 };
    let chunks: Vec<(Vec<(f64, Vec<f64>)>, u64)> = first
        .par_iter()
        .enumerate()
        .map(|(flat, &(d0, p0))| {
            let mut best: Vec<(f64, usize, Vec<f64>)> = Vec::new();
            let mut count = 0u64;
            let g0 = &per_user[0][d0];
            let pw0 = powers[0][p0];
            let mut consider = |value: f64, order: usize, x: Vec<f64>| {
                if best.len() < keep || value > best.last().unwrap().0 {
                    best.push((value, order, x));
                    best.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
                    best.truncate(keep);
                }
            };
            if k_users == 1 {
                count += 1;
                if let Some(v) = prob.utility(&[(g0, pw0)]) {
                    let mut x = g0.params.clone();
                    x.push(pw0);
                    consider(v, flat, x);
                }
            } else {
                let n2 = powers[1].len();
                for (d1, g1) in per_user[1].iter().enumerate() {
                    for (p1, &pw1) in powers[1].iter().enumerate() {
                        count += 1;
                        if let Some(v) = prob.utility(&[(g0, pw0), (g1, pw1)]) {
                            let mut x = g0.params.clone();
                            x.push(pw0);
                            x.extend(g1.params.iter().copied());
                            x.push(pw1);
                            consider(v, (flat * per_user[1].len() + d1) * n2 + p1, x);
                        }
                    }
                }
            }
            (best.into_iter().map(|(v, _, x)| (v, x)).collect(), count)
        })
        .collect();
    let mut points: u64 = directions as u64 + chunks.iter().map(|c| c.1).sum::<u64>();
    let mut candidates: Vec<(f64, Vec<f64>)> = Vec::new();
    for (c, _) in chunks {
        for item in c {
            candidates.push(item);
        }
    }
    // stable sort keeps enumeration order among equal values
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
    candidates.truncate(keep);
    if candidates.is_empty() {
        return Err(Error::Solver("no feasible grid point".into()));
    }

    let ranges = prob.axis_ranges();
    let coarse_steps: Vec<f64> = ranges
        .iter()
        .enumerate()
        .map(|(a, &(lo, hi, periodic))| {
            let res = if a_is_power(&prob.axes, a) {
                spec.power_resolution
            } else if periodic {
                spec.phase_resolution
            } else {
                spec.angle_resolution
            };
            (hi - lo) / res as f64
        })
        .collect();

    let (_, best_x, final_steps) = if spec.refine {
        let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
        for (v, x) in candidates {
            let (v, x, steps, n) = zoom(&prob, &ranges, x, v, coarse_steps.clone(), spec);
            points += n;
            if best.as_ref().is_none_or(|b| v > b.0) {
                best = Some((v, x, steps));
            }
        }
        best.expect("at least one candidate")
    } else {
        let (v, x) = candidates.swap_remove(0);
        (v, x, coarse_steps)
    };
    let resolution_bound = quadratic_slack(&prob, &ranges, &best_x, &final_steps, &mut points);
    let q_best = prob.covariance(&best_x);
    let cost_best = objective(inst, util, &q_best)?;
    Ok(GridResult {
        q_best,
        cost_best,
        resolution_bound,
        points_evaluated: points,
    })
}

fn a_is_power(axes: &[UserAxes], a: usize) -> bool {
    let mut offset = 0;
    for ax in axes {
        offset += ax.dims();
        if a == offset - 1 {
            return true;
        }
    }
    false
}

fn clamp_axis(v: f64, (lo, hi, periodic): (f64, f64, bool)) -> f64 {
    if periodic {
        v.rem_euclid(hi - lo) + lo
    } else {
        v.clamp(lo, hi)
    }
}

/// Nested local grids around `x`: each level spans one cell of the previous
/// level on every axis.
fn zoom(
    prob: &Problem,
    ranges: &[(f64, f64, bool)],
    mut x: Vec<f64>,
    mut value: f64,
    mut steps: Vec<f64>,
    spec: &GridSpec,
) -> (f64, Vec<f64>, Vec<f64>, u64) {
    let dims = x.len();
    let r = spec.refine_points;
    let half = (r / 2) as isize;
    let mut points = 0u64;
    for _ in 0..spec.refine_levels {
        let fine: Vec<f64> = steps.iter().map(|s| s / half as f64).collect();
        let mut best = (value, x.clone());
        for_each_index(&vec![r; dims], |idx| {
            points += 1;
            let y: Vec<f64> = (0..dims)
                .map(|a| clamp_axis(x[a] + (idx[a] as isize - half) as f64 * fine[a] * 0.5, ranges[a]))
                .collect();
            if let Some(v) = prob.utility_at(&y) {
                if v > best.0 {
                    best = (v, y);
                }
            }
        });
        value = best.0;
        x = best.1;
        steps = fine.iter().map(|s| s * 0.5).collect();
    }
    (value, x, steps, points)
}

/// Sum over axes of the improvement predicted by a parabola through the
/// best point and its two neighbours at spacing `steps`.
fn quadratic_slack(prob: &Problem, ranges: &[(f64, f64, bool)], x: &[f64], steps: &[f64], points: &mut u64) -> f64 {
    let Some(f0) = prob.utility_at(x) else { return f64::INFINITY };
    let mut total = 0.0;
    for a in 0..x.len() {
        let h = steps[a];
        let eval = |delta: f64| {
            let mut y = x.to_vec();
            let raw = x[a] + delta;
            let (lo, hi, periodic) = ranges[a];
            if !periodic && (raw < lo || raw > hi) {
                return None;
            }
            y[a] = clamp_axis(raw, ranges[a]);
            prob.utility_at(&y)
        };
        let fm = eval(-h);
        let fp = eval(h);
        *points += 2;
        let gain = match (fm, fp) {
            (Some(fm), Some(fp)) => {
                let curv = fp - 2.0 * f0 + fm;
                if curv < 0.0 {
                    // vertex of the interpolating parabola
                    let slope = (fp - fm) / 2.0;
                    let t = (-slope / curv).clamp(-1.0, 1.0);
                    (slope * t + 0.5 * curv * t * t).max(0.0)
                } else {
                    (fm - f0).max(fp - f0).max(0.0)
                }
            }
            (Some(f1), None) | (None, Some(f1)) => (f1 - f0).max(0.0),
            (None, None) => 0.0,
        };
        total += gain;
    }
    total
}
