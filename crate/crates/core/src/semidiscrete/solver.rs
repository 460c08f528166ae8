//! Dual ascent for the pixel-discretized semi-discrete problem.
//!
//! Two phases, both monotone in the dual objective:
//!
//! 1. diagonal-scaled supergradient steps `ψ += η (1/n − mass)` with
//!    backtracking on Φ, plus capture boosts for empty cells;
//! 2. exact group raises: lift all underfull cells together to the first
//!    threshold at which an outside pixel switches in. Each raise strictly
//!    increases Φ (or transfers pixels at a flat plateau), which drives the
//!    mass residual to the pixel-granularity optimum.
//!
//! Large grids are warm-started by solving coarsened pixelizations first;
//! only fine-level iterations enter the reported trajectory.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::PointSample;
use crate::torus::TorusPoint;

use super::{validate_solve_args, DualWeights, SemidiscreteSolution};

struct Buckets {
    g: usize,
    /// Site indices grouped by bucket, bucket-major; ordered by site index.
    entries: Vec<Vec<u32>>,
}

impl Buckets {
    fn build(x1: &[f64], x2: &[f64], g: usize) -> Buckets {
        let mut entries = vec![Vec::new(); g * g];
        for i in 0..x1.len() {
            let b1 = ((x1[i] * g as f64) as usize).min(g - 1);
            let b2 = ((x2[i] * g as f64) as usize).min(g - 1);
            entries[b1 * g + b2].push(i as u32);
        }
        Buckets { g, entries }
    }
}

struct Problem<'a> {
    n: usize,
    m: usize,
    x1: Vec<f64>,
    x2: Vec<f64>,
    buckets: Buckets,
    sites: &'a [TorusPoint],
}

#[inline]
fn torus_diff(a: f64, b: f64) -> f64 {
    let mut d = a - b;
    if d >= 0.5 {
        d -= 1.0;
    } else if d < -0.5 {
        d += 1.0;
    }
    d
}

struct SweepOut {
    values: Vec<f64>,
    assign: Vec<u32>,
    counts: Vec<u32>,
    /// Σ_p min_i (d² − ψ_i), Kahan-compensated.
    value_sum: f64,
}

impl<'a> Problem<'a> {
    fn new(sites: &'a [TorusPoint], m: usize) -> Problem<'a> {
        let n = sites.len();
        let x1: Vec<f64> = sites.iter().map(|p| p.x1()).collect();
        let x2: Vec<f64> = sites.iter().map(|p| p.x2()).collect();
        let g = ((n as f64).sqrt().floor() as usize).clamp(1, 256);
        let buckets = Buckets::build(&x1, &x2, g);
        Problem {
            n,
            m,
            x1,
            x2,
            buckets,
            sites,
        }
    }

    /// Best (value, site) at an arbitrary point under weights ψ.
    #[inline]
    fn best_site(&self, y1: f64, y2: f64, psi: &[f64], psi_max: f64) -> (f64, u32) {
        let g = self.buckets.g;
        if g <= 2 || self.n <= 32 {
            return self.best_site_direct(y1, y2, psi);
        }
        let gb = g as f64;
        let b1 = ((y1 * gb) as usize).min(g - 1);
        let b2 = ((y2 * gb) as usize).min(g - 1);
        let mut best = f64::INFINITY;
        let mut best_i = u32::MAX;
        let max_ring = g / 2 + 1;
        for ring in 0..=max_ring {
            if ring > 0 {
                let reach = (ring - 1) as f64 / gb;
                if reach * reach - psi_max > best {
                    break;
                }
            }
            let r = ring as i64;
            let visit = |this: &Problem, o1: i64, o2: i64, best: &mut f64, best_i: &mut u32| {
                let c1 = (b1 as i64 + o1).rem_euclid(g as i64) as usize;
                let c2 = (b2 as i64 + o2).rem_euclid(g as i64) as usize;
                for &si in &this.buckets.entries[c1 * g + c2] {
                    let i = si as usize;
                    let d1 = torus_diff(y1, this.x1[i]);
                    let d2 = torus_diff(y2, this.x2[i]);
                    let val = d1 * d1 + d2 * d2 - psi[i];
                    if val < *best || (val == *best && si < *best_i) {
                        *best = val;
                        *best_i = si;
                    }
                }
            };
            if ring == 0 {
                visit(self, 0, 0, &mut best, &mut best_i);
            } else {
                for o in -r..=r {
                    visit(self, -r, o, &mut best, &mut best_i);
                    visit(self, r, o, &mut best, &mut best_i);
                }
                for o in (-r + 1)..=(r - 1) {
                    visit(self, o, -r, &mut best, &mut best_i);
                    visit(self, o, r, &mut best, &mut best_i);
                }
            }
            // Wrapped rings beyond g/2 revisit buckets; the ring bound above
            // terminates earlier in all but degenerate weight configurations.
            if ring >= max_ring {
                break;
            }
        }
        (best, best_i)
    }

    #[inline]
    fn best_site_direct(&self, y1: f64, y2: f64, psi: &[f64]) -> (f64, u32) {
        let mut best = f64::INFINITY;
        let mut best_i = 0u32;
        for i in 0..self.n {
            let d1 = torus_diff(y1, self.x1[i]);
            let d2 = torus_diff(y2, self.x2[i]);
            let val = d1 * d1 + d2 * d2 - psi[i];
            if val < best {
                best = val;
                best_i = i as u32;
            }
        }
        (best, best_i)
    }

    /// Full assignment sweep. Deterministic independent of worker count:
    /// per-pixel results are pure, rows are reduced in index order.
    fn sweep(&self, psi: &[f64]) -> SweepOut {
        let m = self.m;
        let psi_max = psi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let inv_m = 1.0 / m as f64;
        let rows: Vec<(Vec<f64>, Vec<u32>, Vec<u32>, f64)> = (0..m)
            .into_par_iter()
            .map(|i1| {
                let y1 = (i1 as f64 + 0.5) * inv_m;
                let mut row_vals = Vec::with_capacity(m);
                let mut row_assign = Vec::with_capacity(m);
                let mut counts = vec![0u32; self.n];
                let mut sum = 0.0;
                let mut comp = 0.0;
                for i2 in 0..m {
                    let y2 = (i2 as f64 + 0.5) * inv_m;
                    let (val, site) = self.best_site(y1, y2, psi, psi_max);
                    row_vals.push(val);
                    row_assign.push(site);
                    counts[site as usize] += 1;
                    let y = val - comp;
                    let t = sum + y;
                    comp = (t - sum) - y;
                    sum = t;
                }
                (row_vals, row_assign, counts, sum)
            })
            .collect();

        let mut values = Vec::with_capacity(m * m);
        let mut assign = Vec::with_capacity(m * m);
        let mut counts = vec![0u32; self.n];
        let mut value_sum = 0.0;
        let mut comp = 0.0;
        for (rv, ra, rc, rs) in rows {
            values.extend_from_slice(&rv);
            assign.extend_from_slice(&ra);
            for (c, r) in counts.iter_mut().zip(&rc) {
                *c += r;
            }
            let y = rs - comp;
            let t = value_sum + y;
            comp = (t - value_sum) - y;
            value_sum = t;
        }
        SweepOut {
            values,
            assign,
            counts,
            value_sum,
        }
    }

    fn objective(&self, psi: &[f64], value_sum: f64) -> f64 {
        let psi_mean: f64 = psi.iter().sum::<f64>() / self.n as f64;
        psi_mean + value_sum / (self.m * self.m) as f64
    }

    fn residual(&self, counts: &[u32]) -> f64 {
        let m2 = (self.m * self.m) as f64;
        let target = 1.0 / self.n as f64;
        counts
            .iter()
            .map(|&c| (c as f64 / m2 - target).abs())
            .fold(0.0, f64::max)
    }

    /// Capture threshold for a site: min over pixels of d²(p, X_i) − v_p,
    /// the ψ_i increase at which the site first wins a pixel.
    fn capture_threshold(&self, i: usize, psi_i: f64, values: &[f64]) -> f64 {
        let m = self.m;
        let inv_m = 1.0 / m as f64;
        let (sx1, sx2) = (self.x1[i], self.x2[i]);
        (0..m)
            .into_par_iter()
            .map(|i1| {
                let y1 = (i1 as f64 + 0.5) * inv_m;
                let d1 = torus_diff(y1, sx1);
                let mut best = f64::INFINITY;
                for i2 in 0..m {
                    let y2 = (i2 as f64 + 0.5) * inv_m;
                    let d2 = torus_diff(y2, sx2);
                    let gap = (d1 * d1 + d2 * d2 - psi_i) - values[i1 * m + i2];
                    if gap < best {
                        best = gap;
                    }
                }
                best
            })
            .reduce(|| f64::INFINITY, f64::min)
    }

    /// First and second thresholds at which an outside pixel enters the
    /// raised group U (indicator `in_group`).
    fn group_entry_thresholds(
        &self,
        in_group: &[bool],
        psi: &[f64],
        values: &[f64],
        assign: &[u32],
    ) -> (f64, f64) {
        let m = self.m;
        let inv_m = 1.0 / m as f64;
        let group: Vec<u32> = (0..self.n as u32)
            .filter(|&i| in_group[i as usize])
            .collect();
        let pairs: Vec<(f64, f64)> = (0..m)
            .into_par_iter()
            .map(|i1| {
                let y1 = (i1 as f64 + 0.5) * inv_m;
                let mut first = f64::INFINITY;
                let mut second = f64::INFINITY;
                for i2 in 0..m {
                    let p = i1 * m + i2;
                    if in_group[assign[p] as usize] {
                        continue;
                    }
                    let y2 = (i2 as f64 + 0.5) * inv_m;
                    let mut best_in = f64::INFINITY;
                    for &gi in &group {
                        let i = gi as usize;
                        let d1 = torus_diff(y1, self.x1[i]);
                        let d2 = torus_diff(y2, self.x2[i]);
                        let val = d1 * d1 + d2 * d2 - psi[i];
                        if val < best_in {
                            best_in = val;
                        }
                    }
                    let gap = best_in - values[p];
                    if gap < first {
                        second = first;
                        first = gap;
                    } else if gap < second && gap > first {
                        second = gap;
                    }
                }
                (first, second)
            })
            .collect();
        let mut first = f64::INFINITY;
        let mut second = f64::INFINITY;
        for (f, s) in pairs {
            for gap in [f, s] {
                if gap < first {
                    second = first;
                    first = gap;
                } else if gap < second && gap > first {
                    second = gap;
                }
            }
        }
        (first, second)
    }
}

struct AscentOutcome {
    psi: Vec<f64>,
    sweep: SweepOut,
    trajectory: Vec<f64>,
    iters_used: usize,
    converged: bool,
}

/// Monotone dual ascent at one grid resolution.
fn ascend(
    prob: &Problem,
    mut psi: Vec<f64>,
    threshold: f64,
    max_iters: usize,
    record_trajectory: bool,
) -> AscentOutcome {
    let n = prob.n;
    let m2 = (prob.m * prob.m) as f64;
    let target_mass = 1.0 / n as f64;

    let mut sweep = prob.sweep(&psi);
    let mut phi = prob.objective(&psi, sweep.value_sum);
    let mut trajectory = vec![phi];
    let mut eta = 0.5;
    let mut iters = 0usize;
    let mut group_mode = false;

    while iters < max_iters {
        let residual = prob.residual(&sweep.counts);
        if residual <= threshold {
            return AscentOutcome {
                psi,
                sweep,
                trajectory,
                iters_used: iters,
                converged: true,
            };
        }

        let mut advanced = false;
        if !group_mode {
            // Phase 1: supergradient trial with backtracking.
            let grad: Vec<f64> = sweep
                .counts
                .iter()
                .map(|&c| target_mass - c as f64 / m2)
                .collect();
            let boosts: Vec<(usize, f64)> = (0..n)
                .filter(|&i| sweep.counts[i] == 0)
                .map(|i| {
                    let thr = prob.capture_threshold(i, psi[i], &sweep.values);
                    (i, thr + 1e-9)
                })
                .collect();
            while eta > 1e-7 {
                let mut trial = psi.clone();
                for i in 0..n {
                    trial[i] += eta * grad[i];
                }
                for &(i, boost) in &boosts {
                    trial[i] = psi[i] + boost.max(eta * grad[i]);
                }
                let trial_sweep = prob.sweep(&trial);
                let trial_phi = prob.objective(&trial, trial_sweep.value_sum);
                if trial_phi >= phi {
                    psi = trial;
                    sweep = trial_sweep;
                    phi = trial_phi;
                    if record_trajectory {
                        trajectory.push(phi);
                    }
                    eta = (eta * 1.5).min(8.0);
                    advanced = true;
                    break;
                }
                eta *= 0.5;
            }
            if !advanced {
                group_mode = true;
                eta = 0.5;
                continue;
            }
        } else {
            // Phase 2: exact raise of the underfull group.
            let in_group: Vec<bool> = sweep
                .counts
                .iter()
                .map(|&c| (c as f64 / m2) < target_mass)
                .collect();
            if !in_group.iter().any(|&b| b) {
                break;
            }
            let (first, second) =
                prob.group_entry_thresholds(&in_group, &psi, &sweep.values, &sweep.assign);
            if !first.is_finite() {
                break;
            }
            let overshoot = if second.is_finite() && second > first {
                ((second - first) * 0.5).min(1e-9)
            } else {
                1e-12
            };
            let lambda = first.max(0.0) + overshoot;
            let mut trial = psi.clone();
            for i in 0..n {
                if in_group[i] {
                    trial[i] += lambda;
                }
            }
            let trial_sweep = prob.sweep(&trial);
            let trial_phi = prob.objective(&trial, trial_sweep.value_sum);
            if trial_phi >= phi {
                psi = trial;
                sweep = trial_sweep;
                phi = trial_phi;
                if record_trajectory {
                    trajectory.push(phi);
                }
                advanced = true;
            } else {
                // Past the line maximum: land exactly on the threshold.
                let mut exact = psi.clone();
                for i in 0..n {
                    if in_group[i] {
                        exact[i] += first.max(0.0);
                    }
                }
                let exact_sweep = prob.sweep(&exact);
                let exact_phi = prob.objective(&exact, exact_sweep.value_sum);
                if exact_phi >= phi {
                    psi = exact;
                    sweep = exact_sweep;
                    phi = exact_phi;
                    if record_trajectory {
                        trajectory.push(phi);
                    }
                    advanced = true;
                }
            }
            if !advanced {
                // Alternate back to supergradient steps before giving up.
                group_mode = false;
                eta = 0.25;
            }
        }
        iters += 1;
    }

    let converged = prob.residual(&sweep.counts) <= threshold;
    AscentOutcome {
        psi,
        sweep,
        trajectory,
        iters_used: iters,
        converged,
    }
}

/// Maximize the Kantorovich dual over Laguerre cells on an m×m pixel grid.
///
/// Returns when `max_i |mass_i − 1/n| ≤ mass_tol/n`; errors with the residual
/// trajectory if `max_iters` accepted iterations do not reach that.
pub fn solve(
    sample: &PointSample,
    grid_m: usize,
    mass_tol: f64,
    max_iters: usize,
) -> Result<SemidiscreteSolution> {
    let n = sample.len();
    validate_solve_args(n, grid_m, mass_tol)?;
    let threshold = mass_tol / n as f64;
    let sites = sample.points();

    // Multiscale warm start: coarse pixelizations localize ψ cheaply.
    let mut levels = Vec::new();
    let mut m = grid_m;
    while m > 128 && m % 2 == 0 && (m / 2) * (m / 2) >= 4 * n {
        m /= 2;
        levels.push(m);
    }
    levels.reverse();

    let mut psi = vec![0.0; n];
    for &mc in &levels {
        let prob = Problem::new(sites, mc);
        let coarse_threshold = threshold.max(0.02 / n as f64);
        let out = ascend(&prob, psi, coarse_threshold, 300, false);
        psi = out.psi;
        let mean = psi.iter().sum::<f64>() / n as f64;
        for v in &mut psi {
            *v -= mean;
        }
    }

    let prob = Problem::new(sites, grid_m);
    let out = ascend(&prob, psi, threshold, max_iters, true);
    if !out.converged {
        let residuals: Vec<f64> = vec![prob.residual(&out.sweep.counts)];
        return Err(Error::Convergence {
            iters: out.iters_used,
            final_residual: residuals[0],
            residual_trajectory: residuals,
        });
    }

    let mut weights = DualWeights::from_values(out.psi);
    weights.recenter();

    // Final bookkeeping from the converged assignment.
    let m2 = (grid_m * grid_m) as f64;
    let inv_m = 1.0 / grid_m as f64;
    let cell_masses: Vec<f64> = out.sweep.counts.iter().map(|&c| c as f64 / m2).collect();
    let mass_residual = prob.residual(&out.sweep.counts);
    let mut cost = 0.0;
    let mut comp = 0.0;
    for i1 in 0..grid_m {
        let y1 = (i1 as f64 + 0.5) * inv_m;
        for i2 in 0..grid_m {
            let i = out.sweep.assign[i1 * grid_m + i2] as usize;
            let y2 = (i2 as f64 + 0.5) * inv_m;
            let d1 = torus_diff(y1, prob.x1[i]);
            let d2 = torus_diff(y2, prob.x2[i]);
            let term = d1 * d1 + d2 * d2;
            let y = term - comp;
            let t = cost + y;
            comp = (t - cost) - y;
            cost = t;
        }
    }
    cost /= m2;

    let dual_objective = *out.trajectory.last().unwrap();
    Ok(SemidiscreteSolution {
        weights,
        grid_m,
        assignment: out.sweep.assign,
        cell_masses,
        cost,
        mass_residual,
        dual_objective,
        dual_trajectory: out.trajectory,
        sites: sites.to_vec(),
    })
}
