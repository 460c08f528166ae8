//! Exact small-instance oracle: transportation simplex on the discrete
//! problem between n sources of mass 1/n and m² pixel sinks of mass 1/m².
//!
//! Supplies are scaled to integers (source m², sink n), so flows stay exact;
//! costs are the torus squared distances in f64. Entering arcs use the most
//! negative reduced cost, switching to Bland's rule after a run of degenerate
//! pivots so the method terminates despite the inherent degeneracy of equal
//! supplies. Optimality is certified by complementary slackness on the final
//! basis before returning.

use crate::error::{Error, Result};
use crate::field::PointSample;
use crate::torus::{dist_sq, TorusPoint};

struct Arc {
    src: u32,
    sink: u32,
    flow: u64,
}

/// Exact optimum of the pixel transportation problem.
///
/// Returns the optimal cost and, for reporting, the dominant site per pixel
/// (the full plan may split a few boundary pixels when `n ∤ m²`).
pub fn exact_oracle(sample: &PointSample, grid_m: usize) -> Result<(f64, Vec<u32>)> {
    let n = sample.len();
    if n > 16 {
        return Err(Error::invalid(format!(
            "exact oracle limited to n ≤ 16, got {n}"
        )));
    }
    if !(1..=32).contains(&grid_m) {
        return Err(Error::invalid(format!(
            "exact oracle limited to grid_m ≤ 32, got {grid_m}"
        )));
    }
    let m2 = grid_m * grid_m;
    if n > m2 {
        return Err(Error::invalid(format!("n = {n} exceeds {m2} pixels")));
    }

    // Cost matrix, sources × sinks.
    let mut cost = vec![0.0f64; n * m2];
    for (i, site) in sample.points().iter().enumerate() {
        for p in 0..m2 {
            let y = pixel_center(p, grid_m);
            cost[i * m2 + p] = dist_sq(y, *site);
        }
    }

    let supply_unit = m2 as u64; // per source
    let demand_unit = n as u64; // per sink

    // Northwest-corner initial basis: exactly n + m² − 1 arcs, a spanning tree.
    let mut arcs: Vec<Arc> = Vec::with_capacity(n + m2 - 1);
    {
        let mut s = vec![supply_unit; n];
        let mut d = vec![demand_unit; m2];
        let (mut i, mut p) = (0usize, 0usize);
        loop {
            let f = s[i].min(d[p]);
            arcs.push(Arc {
                src: i as u32,
                sink: p as u32,
                flow: f,
            });
            s[i] -= f;
            d[p] -= f;
            if i == n - 1 && p == m2 - 1 {
                break;
            }
            if s[i] == 0 && i < n - 1 {
                i += 1;
            } else {
                p += 1;
            }
        }
    }

    let nodes = n + m2;
    let mut degenerate_run = 0usize;
    let max_pivots = 400_000usize;
    for _pivot in 0..max_pivots {
        // Duals from the basis tree: u_i + v_p = c_ip on basic arcs.
        let (u, v) = compute_duals(&arcs, n, m2, &cost);

        // Entering arc.
        let mut enter: Option<(usize, usize, f64)> = None;
        let bland = degenerate_run > 60;
        'scan: for i in 0..n {
            for p in 0..m2 {
                let rc = cost[i * m2 + p] - u[i] - v[p];
                if rc < -1e-12 {
                    if bland {
                        enter = Some((i, p, rc));
                        break 'scan;
                    }
                    match enter {
                        Some((_, _, best)) if rc >= best => {}
                        _ => enter = Some((i, p, rc)),
                    }
                }
            }
        }
        let Some((ei, ep, _)) = enter else {
            // Optimal: certify and return.
            return finish(arcs, &cost, n, m2, grid_m, sample.points());
        };

        // Unique tree path from source ei to sink node (n + ep).
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
        for (idx, a) in arcs.iter().enumerate() {
            let s = a.src as usize;
            let t = n + a.sink as usize;
            adj[s].push((idx, t));
            adj[t].push((idx, s));
        }
        let path = tree_path(&adj, ei, n + ep, nodes);

        // Arcs at odd positions along the cycle (starting from the entering
        // arc) lose θ; θ = min of their flows, leaving arc the first minimum.
        let mut theta = u64::MAX;
        let mut leaving = usize::MAX;
        for (pos, &(arc_idx, _)) in path.iter().enumerate() {
            if pos % 2 == 0 {
                let f = arcs[arc_idx].flow;
                if f < theta {
                    theta = f;
                    leaving = arc_idx;
                }
            }
        }
        if theta == 0 {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
        for (pos, &(arc_idx, _)) in path.iter().enumerate() {
            if pos % 2 == 0 {
                arcs[arc_idx].flow -= theta;
            } else {
                arcs[arc_idx].flow += theta;
            }
        }
        arcs[leaving] = Arc {
            src: ei as u32,
            sink: ep as u32,
            flow: theta,
        };
    }
    Err(Error::Domain(
        "transportation simplex exceeded its pivot budget".to_string(),
    ))
}

fn pixel_center(p: usize, m: usize) -> TorusPoint {
    let i1 = p / m;
    let i2 = p % m;
    TorusPoint::wrap_unchecked((i1 as f64 + 0.5) / m as f64, (i2 as f64 + 0.5) / m as f64)
}

fn compute_duals(arcs: &[Arc], n: usize, m2: usize, cost: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let nodes = n + m2;
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
    for (idx, a) in arcs.iter().enumerate() {
        let s = a.src as usize;
        let t = n + a.sink as usize;
        adj[s].push((idx, t));
        adj[t].push((idx, s));
    }
    let mut u = vec![f64::NAN; n];
    let mut v = vec![f64::NAN; m2];
    let mut seen = vec![false; nodes];
    let mut stack = vec![0usize];
    u[0] = 0.0;
    seen[0] = true;
    while let Some(node) = stack.pop() {
        for &(arc_idx, other) in &adj[node] {
            if seen[other] {
                continue;
            }
            seen[other] = true;
            let a = &arcs[arc_idx];
            let c = cost[a.src as usize * m2 + a.sink as usize];
            if other >= n {
                v[other - n] = c - u[a.src as usize];
            } else {
                u[other] = c - v[a.sink as usize];
            }
            stack.push(other);
        }
    }
    (u, v)
}

/// Arc path between two nodes in the basis tree, as (arc index, child node)
/// from `from` to `to`.
fn tree_path(
    adj: &[Vec<(usize, usize)>],
    from: usize,
    to: usize,
    nodes: usize,
) -> Vec<(usize, usize)> {
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; nodes]; // (node, arc)
    let mut seen = vec![false; nodes];
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(from);
    seen[from] = true;
    while let Some(node) = queue.pop_front() {
        if node == to {
            break;
        }
        for &(arc_idx, other) in &adj[node] {
            if !seen[other] {
                seen[other] = true;
                parent[other] = Some((node, arc_idx));
                queue.push_back(other);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = to;
    while let Some((prev, arc_idx)) = parent[node] {
        path.push((arc_idx, node));
        node = prev;
    }
    path.reverse();
    path
}

fn finish(
    arcs: Vec<Arc>,
    cost: &[f64],
    n: usize,
    m2: usize,
    grid_m: usize,
    _sites: &[TorusPoint],
) -> Result<(f64, Vec<u32>)> {
    // Feasibility: integer flows conserve supplies and demands exactly.
    let mut row = vec![0u64; n];
    let mut col = vec![0u64; m2];
    for a in &arcs {
        row[a.src as usize] += a.flow;
        col[a.sink as usize] += a.flow;
    }
    if row.iter().any(|&r| r != m2 as u64) || col.iter().any(|&c| c != n as u64) {
        return Err(Error::Domain(
            "oracle flow conservation violated".to_string(),
        ));
    }
    // Complementary slackness on the final duals.
    let (u, v) = compute_duals(&arcs, n, m2, cost);
    for i in 0..n {
        for p in 0..m2 {
            let rc = cost[i * m2 + p] - u[i] - v[p];
            if rc < -1e-9 {
                return Err(Error::Domain(format!(
                    "oracle optimality certificate failed: reduced cost {rc} at ({i},{p})"
                )));
            }
        }
    }
    for a in &arcs {
        if a.flow > 0 {
            let rc = cost[a.src as usize * m2 + a.sink as usize]
                - u[a.src as usize]
                - v[a.sink as usize];
            if rc.abs() > 1e-9 {
                return Err(Error::Domain(format!(
                    "oracle certificate failed on a basic arc: {rc}"
                )));
            }
        }
    }

    let total_units = (n * m2) as f64;
    let mut total = 0.0;
    let mut dominant = vec![(0u64, 0u32); m2];
    for a in &arcs {
        total += a.flow as f64 * cost[a.src as usize * m2 + a.sink as usize];
        let d = &mut dominant[a.sink as usize];
        if a.flow > d.0 || (a.flow == d.0 && a.src < d.1) {
            *d = (a.flow, a.src);
        }
    }
    let assignment: Vec<u32> = dominant.into_iter().map(|(_, s)| s).collect();
    let _ = grid_m;
    Ok((total / total_units, assignment))
}
