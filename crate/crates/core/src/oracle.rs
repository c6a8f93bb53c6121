//! Brute-force ground truth for the push engine.
//!
//! Exact PPR vectors come from dense fixed-point iteration on
//! `pi = alpha * 1_s + (1 - alpha) * pi * D^-1 A`, written entrywise as
//! `pi(u) <- alpha * [u == s] + (1 - alpha) * sum_{v ~ u} pi(v) / d(v)`.
//! The checks below turn the push invariant and the degree-symmetry and
//! mass properties of undirected PPR into measurable deviations.

use crate::error::{Error, Result};
use crate::graph::{GraphState, NodeId};
use crate::ppr::validate_alpha;
use crate::sparse::SparseVector;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 1_000_000;
/// Node cap for all-pairs checks.
pub const DEFAULT_ALL_PAIRS_CAP: usize = 200;
/// Node cap for single-source solves.
pub const SINGLE_SOURCE_CAP: usize = 2000;

/// Exact PPV over node ids `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPpv {
    pub source: NodeId,
    pub values: Vec<f64>,
    pub tolerance: f64,
}

impl ExactPpv {
    pub fn get(&self, u: NodeId) -> f64 {
        self.values.get(u.index()).copied().unwrap_or(0.0)
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|x| x.abs()).sum()
    }

    /// `||p - pi||_1`.
    pub fn l1_error(&self, p: &SparseVector) -> f64 {
        let mut err: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &x)| (p.get(NodeId(i as u32)) - x).abs())
            .sum();
        for (u, x) in p.iter() {
            if u.index() >= self.values.len() {
                err += x.abs();
            }
        }
        err
    }

    /// `max_v |p(v) - pi(v)| / d(v)` over nodes with `d(v) >= 1`.
    pub fn max_degree_scaled_error(&self, p: &SparseVector, g: &GraphState) -> f64 {
        g.nodes()
            .map(|v| (p.get(v) - self.get(v)).abs() / g.degree(v) as f64)
            .fold(0.0, f64::max)
    }
}

fn validate_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )))
    }
}

/// Fixed-point iteration for source `s` over ids `0..len`. Zero-degree
/// nodes have an all-zero transition row, which keeps the system well posed.
///
/// The map contracts by `1 - alpha` in l1, so the distance to the fixed point
/// is at most `(1 - alpha) / alpha` times the last step. Iteration stops once
/// that bound is `tol / 2`.
fn solve(g: &GraphState, s: NodeId, alpha: f64, tol: f64, len: usize) -> Result<Vec<f64>> {
    let len = len.max(g.id_bound()).max(s.index() + 1);
    let stop = if alpha < 1.0 {
        0.5 * tol * alpha / (1.0 - alpha)
    } else {
        tol
    };
    let mut x = vec![0.0; len];
    x[s.index()] = 1.0;
    let mut y = vec![0.0; len];
    for _ in 0..MAX_ITERATIONS {
        y.iter_mut().for_each(|v| *v = 0.0);
        y[s.index()] = alpha;
        for v in g.nodes() {
            let xv = x[v.index()];
            if xv == 0.0 {
                continue;
            }
            let share = (1.0 - alpha) * xv / g.degree(v) as f64;
            for &u in g.neighbors(v) {
                y[u.index()] += share;
            }
        }
        let change: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut y);
        if change <= stop {
            return Ok(x);
        }
    }
    Err(Error::Divergence(MAX_ITERATIONS))
}

/// Exact PPV for source `s`, which must have at least one edge.
pub fn exact_ppr(g: &GraphState, s: NodeId, alpha: f64, tol: f64) -> Result<ExactPpv> {
    validate_alpha(alpha)?;
    validate_tol(tol)?;
    if g.degree(s) == 0 {
        return Err(Error::UnsupportedTopology(format!(
            "source {s} has no edges"
        )));
    }
    if g.node_count() > SINGLE_SOURCE_CAP {
        return Err(Error::TooLarge {
            nodes: g.node_count(),
            cap: SINGLE_SOURCE_CAP,
        });
    }
    let values = solve(g, s, alpha, tol, g.id_bound())?;
    Ok(ExactPpv {
        source: s,
        values,
        tolerance: tol,
    })
}

fn check_cap(nodes: usize, cap: usize) -> Result<()> {
    if nodes > cap {
        Err(Error::TooLarge { nodes, cap })
    } else {
        Ok(())
    }
}

/// Exact PPVs for every node with at least one edge.
pub fn all_pairs(
    g: &GraphState,
    alpha: f64,
    tol: f64,
    cap: usize,
) -> Result<Vec<(NodeId, Vec<f64>)>> {
    validate_alpha(alpha)?;
    validate_tol(tol)?;
    check_cap(g.node_count(), cap)?;
    g.nodes()
        .map(|u| solve(g, u, alpha, tol, g.id_bound()).map(|pi| (u, pi)))
        .collect()
}

/// `max_u |pi_s(u) - p(u) - sum_v r(v) pi_v(u)|`.
pub fn check_invariant(
    g: &GraphState,
    s: NodeId,
    p: &SparseVector,
    r: &SparseVector,
    alpha: f64,
    tol: f64,
    cap: usize,
) -> Result<f64> {
    validate_alpha(alpha)?;
    validate_tol(tol)?;
    let len = p
        .iter()
        .chain(r.iter())
        .map(|(u, _)| u.index() + 1)
        .chain([g.id_bound(), s.index() + 1])
        .max()
        .unwrap_or(0);
    check_cap(len, cap)?;

    let mut rhs = p.to_dense(len);
    for (v, rv) in r.sorted_entries() {
        let pi_v = solve(g, v, alpha, tol, len)?;
        for (acc, x) in rhs.iter_mut().zip(&pi_v) {
            *acc += rv * x;
        }
    }
    let pi_s = solve(g, s, alpha, tol, len)?;
    Ok(pi_s
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// `max_{u,v} |d(u) pi_u(v) - d(v) pi_v(u)|` over nodes with edges.
pub fn check_symmetry(g: &GraphState, alpha: f64, tol: f64, cap: usize) -> Result<f64> {
    let pis = all_pairs(g, alpha, tol, cap)?;
    let mut worst = 0.0f64;
    for (u, pi_u) in &pis {
        for (v, pi_v) in &pis {
            if v <= u {
                continue;
            }
            let lhs = g.degree(*u) as f64 * pi_u[v.index()];
            let rhs = g.degree(*v) as f64 * pi_v[u.index()];
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

/// `sum_x pi_x(t) / d(t)` over nodes `x` with edges.
pub fn check_mass_bound(
    g: &GraphState,
    t: NodeId,
    alpha: f64,
    tol: f64,
    cap: usize,
) -> Result<f64> {
    let d = g.degree(t);
    if d == 0 {
        return Err(Error::UnsupportedTopology(format!("node {t} has no edges")));
    }
    let pis = all_pairs(g, alpha, tol, cap)?;
    Ok(pis.iter().map(|(_, pi)| pi[t.index()]).sum::<f64>() / d as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALPHA: f64 = 0.15;

    fn k3() -> GraphState {
        GraphState::from_edges([(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn teleport_only_limit() {
        let g = k3();
        let pi = exact_ppr(&g, NodeId(1), 1.0, DEFAULT_TOL).unwrap();
        assert_eq!(pi.values, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn single_edge_closed_form() {
        let g = GraphState::from_edges([(0, 1)]).unwrap();
        let pi = exact_ppr(&g, NodeId(0), ALPHA, DEFAULT_TOL).unwrap();
        let closed = ALPHA / (1.0 - (1.0 - ALPHA) * (1.0 - ALPHA));
        assert!((pi.values[0] - closed).abs() < 1e-10);
        assert!((pi.values[0] - 0.540541).abs() < 1e-6);
        assert!((pi.values[1] - 0.459459).abs() < 1e-6);
    }

    #[test]
    fn triangle_values() {
        let pi = exact_ppr(&k3(), NodeId(0), ALPHA, DEFAULT_TOL).unwrap();
        assert!((pi.values[0] - 0.403509).abs() < 1e-6);
        assert!((pi.values[1] - 0.298246).abs() < 1e-6);
        assert!((pi.values[2] - 0.298246).abs() < 1e-6);
        assert!((pi.l1_norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn isolated_source_rejected() {
        let g = GraphState::from_edges([(0, 1)]).unwrap();
        assert!(matches!(
            exact_ppr(&g, NodeId(4), ALPHA, DEFAULT_TOL),
            Err(Error::UnsupportedTopology(_))
        ));
    }

    #[test]
    fn invariant_of_exact_and_fresh_states() {
        let g = k3();
        let pi = exact_ppr(&g, NodeId(0), ALPHA, DEFAULT_TOL).unwrap();
        let p: SparseVector = pi
            .values
            .iter()
            .enumerate()
            .map(|(i, &x)| (NodeId(i as u32), x))
            .collect();
        let dev = check_invariant(&g, NodeId(0), &p, &SparseVector::new(), ALPHA, DEFAULT_TOL, 200)
            .unwrap();
        assert!(dev <= 1e-10, "{dev}");
        let dev = check_invariant(
            &g,
            NodeId(0),
            &SparseVector::new(),
            &SparseVector::unit(NodeId(0)),
            ALPHA,
            DEFAULT_TOL,
            200,
        )
        .unwrap();
        assert!(dev <= 1e-12, "{dev}");
    }

    #[test]
    fn symmetry_on_edge_and_star() {
        let g = GraphState::from_edges([(0, 1)]).unwrap();
        assert!(check_symmetry(&g, ALPHA, DEFAULT_TOL, 200).unwrap() < 1e-10);
        let star = GraphState::from_edges([(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let center = exact_ppr(&star, NodeId(0), ALPHA, DEFAULT_TOL).unwrap();
        let leaf = exact_ppr(&star, NodeId(1), ALPHA, DEFAULT_TOL).unwrap();
        assert!((4.0 * center.get(NodeId(1)) - leaf.get(NodeId(0))).abs() < 1e-10);
        assert!(check_symmetry(&star, ALPHA, DEFAULT_TOL, 200).unwrap() < 1e-10);
    }

    #[test]
    fn mass_bound_cases() {
        let g = GraphState::from_edges([(0, 1)]).unwrap();
        let m = check_mass_bound(&g, NodeId(0), ALPHA, DEFAULT_TOL, 200).unwrap();
        assert!((m - 1.0).abs() < 1e-10);
        let m = check_mass_bound(&k3(), NodeId(2), ALPHA, DEFAULT_TOL, 200).unwrap();
        assert!((m - 0.5).abs() < 1e-10);
        let star = GraphState::from_edges([(0, 1), (0, 2), (0, 3)]).unwrap();
        let m = check_mass_bound(&star, NodeId(0), 1.0, DEFAULT_TOL, 200).unwrap();
        assert!((m - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn caps_enforced() {
        let g = GraphState::from_edges((0..10).map(|i| (i, i + 1))).unwrap();
        assert!(matches!(
            check_symmetry(&g, ALPHA, DEFAULT_TOL, 5),
            Err(Error::TooLarge { nodes: 11, cap: 5 })
        ));
    }

    #[test]
    fn tolerance_self_consistency() {
        let g = GraphState::from_edges([(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (3, 4)]).unwrap();
        let a = exact_ppr(&g, NodeId(4), ALPHA, 1e-8).unwrap();
        let b = exact_ppr(&g, NodeId(4), ALPHA, 1e-9).unwrap();
        let diff: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum();
        assert!(diff <= 1e-8, "{diff}");
    }
}
