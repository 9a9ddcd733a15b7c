//! Solver-agnostic quality metrics.

use crate::clustering::sync_sums;
use crate::error::{Error, Result};
use crate::model::{NetworkState, Point};
use crate::scalar::Scalar;

/// Largest size solved by exhaustive permutation search.
const BRUTE_FORCE_MAX: usize = 8;

/// Minimum-cost perfect matching on a square cost matrix; `result[i]` is the
/// column assigned to row `i`.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n <= BRUTE_FORCE_MAX {
        brute_force_assignment(cost)
    } else {
        hungarian(cost)
    }
}

fn brute_force_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_cost = f64::INFINITY;
    // Heap's algorithm
    let mut c = vec![0usize; n];
    let total = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>();
    best_cost = best_cost.min(total(&perm));
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let v = total(&perm);
            if v < best_cost {
                best_cost = v;
                best.copy_from_slice(&perm);
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// O(n^3) Hungarian algorithm with potentials.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1]; // column -> row (1-based, 0 = free)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

/// Mean distance between two controller sets under the best one-to-one matching.
pub fn tracking_error<S: Scalar>(placed: &[Point<S>], reference: &[Point<S>]) -> Result<S> {
    if placed.len() != reference.len() {
        return Err(Error::CountMismatch { left: placed.len(), right: reference.len() });
    }
    if placed.is_empty() {
        return Ok(S::zero());
    }
    let cost: Vec<Vec<f64>> = placed.iter().map(|a| reference.iter().map(|b| a.dist(b).as_f64()).collect()).collect();
    let matching = min_cost_assignment(&cost);
    let total = matching.iter().enumerate().fold(S::zero(), |acc, (i, &j)| acc + placed[i].dist(&reference[j]));
    Ok(total / S::from_usize_lossy(placed.len()))
}

/// `f64` convenience over raw coordinate rows, as stored in traces.
pub fn tracking_error_rows(placed: &[Vec<f64>], reference: &[Vec<f64>]) -> Result<f64> {
    let a: Vec<Point<f64>> = placed.iter().map(|c| Point::new(c.clone())).collect();
    let b: Vec<Point<f64>> = reference.iter().map(|c| Point::new(c.clone())).collect();
    tracking_error(&a, &b)
}

/// Index of the controller with the smallest distortion for every node.
pub fn hard_assignments<S: Scalar>(state: &NetworkState<S>, gamma: S) -> Vec<usize> {
    let sync = sync_sums(&state.controllers);
    state
        .nodes
        .iter()
        .map(|x| {
            let mut best = 0;
            let mut best_d = S::infinity();
            for (j, y) in state.controllers.iter().enumerate() {
                let d = x.sq_dist(y) + gamma * sync[j];
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// `D1 + gamma D2` with every node hard-assigned to its minimum-distortion controller.
pub fn total_delay<S: Scalar>(state: &NetworkState<S>, gamma: S) -> S {
    let labels = hard_assignments(state, gamma);
    let sync = sync_sums(&state.controllers);
    state
        .nodes
        .iter()
        .zip(&labels)
        .fold(S::zero(), |acc, (x, &j)| acc + x.sq_dist(&state.controllers[j]) + gamma * sync[j])
}

// keeps `distortion` and the inlined form above in lockstep
#[cfg(test)]
fn hard_assignments_reference(state: &NetworkState<f64>, gamma: f64) -> Vec<usize> {
    use crate::clustering::distortion;
    state
        .nodes
        .iter()
        .map(|x| {
            let d: Vec<f64> = state.controllers.iter().map(|y| distortion(x, y, &state.controllers, gamma)).collect();
            (0..d.len()).fold(0, |b, j| if d[j] < d[b] { j } else { b })
        })
        .collect()
}
