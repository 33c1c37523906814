//! Graph representation, generalized Laplacian normalization, and homophily
//! measurement.
//!
//! The central operator is the generalized Laplacian
//! `L = (p-1) I - (D+I)^{-eta} (A+I) (D+I)^{-eta}`, which reduces to the
//! standard symmetric normalized Laplacian at `eta = 0.5`, `p = 2`. The
//! self-loop measure `p` shifts the spectrum so that heat diffusion on the
//! complement-style operator stays well posed; [`psd_feasible_p`] reports the
//! admissible range of `p` for a given diffusion scale.

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

/// Undirected graph: a node count plus a deduplicated list of edges with
/// `u < v`. Self-loops are rejected at construction; they enter only through
/// the `A + I` term of normalization.
#[derive(Debug, Clone)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from an edge list. Reversed duplicates merge; self-loops
    /// and out-of-range endpoints are errors.
    pub fn new(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut canon: Vec<(usize, usize)> = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::invalid(format!("self-loop on node {u}")));
            }
            if u >= n_nodes || v >= n_nodes {
                return Err(Error::invalid(format!(
                    "edge ({u}, {v}) exceeds node count {n_nodes}"
                )));
            }
            canon.push((u.min(v), u.max(v)));
        }
        canon.sort_unstable();
        canon.dedup();
        Ok(Self {
            n_nodes,
            edges: canon,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as (u, v) pairs with u < v.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Degrees counted from stored edges only (no self-loop contribution).
    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0usize; self.n_nodes];
        for &(u, v) in &self.edges {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }
}

/// Normalization hyperparameters for the generalized Laplacian.
#[derive(Debug, Clone, Copy)]
pub struct NormalizationConfig {
    /// Degree exponent; 0.5 recovers symmetric normalization.
    pub eta: f64,
    /// Self-loop information measure; 2 is the lower feasibility endpoint.
    pub p: f64,
    /// Diffusion scale, used only for feasibility checks.
    pub t: f64,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self {
            eta: 0.5,
            p: 2.0,
            t: 0.5,
        }
    }
}

impl NormalizationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::invalid(format!("eta = {} outside [0, 1]", self.eta)));
        }
        if self.p < 2.0 {
            return Err(Error::invalid(format!("p = {} below 2", self.p)));
        }
        if self.t <= 0.0 {
            return Err(Error::invalid(format!("t = {} must be positive", self.t)));
        }
        Ok(())
    }
}

/// `(D+I)^{-eta} (A+I) (D+I)^{-eta}` as a symmetric CSR matrix.
pub fn normalized_adjacency(g: &Graph, eta: f64) -> SparseMatrix {
    let n = g.n_nodes();
    let scales: Vec<f64> = g
        .degrees()
        .iter()
        .map(|&d| ((d + 1) as f64).powf(-eta))
        .collect();
    let mut trips = Vec::with_capacity(n + 2 * g.n_edges());
    for (i, &s) in scales.iter().enumerate() {
        trips.push((i, i, s * s));
    }
    for &(u, v) in g.edges() {
        let w = scales[u] * scales[v];
        trips.push((u, v, w));
        trips.push((v, u, w));
    }
    SparseMatrix::from_triplets(n, n, &trips).expect("valid graph produces valid triplets")
}

/// Generalized Laplacian `(p-1) I - normalized_adjacency(g, eta)`.
///
/// The diagonal is assembled as `(p-2) + (1 - a_ii)` so that the identity
/// `pc_laplacian(g, eta, p) == pc_laplacian(g, eta, 2) + (p-2) I` holds
/// entrywise without rounding.
pub fn pc_laplacian(g: &Graph, cfg: &NormalizationConfig) -> Result<SparseMatrix> {
    cfg.validate()?;
    let n = g.n_nodes();
    let adj = normalized_adjacency(g, cfg.eta);
    let shift = cfg.p - 2.0;
    let mut trips = Vec::with_capacity(adj.nnz());
    for i in 0..n {
        let (cols, vals) = adj.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if i == j {
                trips.push((i, i, shift + (1.0 - v)));
            } else {
                trips.push((i, j, -v));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(n, n, &trips).expect("laplacian triplets are in range"))
}

/// Standard symmetric normalized Laplacian `I - (D+I)^{-1/2}(A+I)(D+I)^{-1/2}`.
pub fn standard_laplacian(g: &Graph) -> SparseMatrix {
    pc_laplacian(
        g,
        &NormalizationConfig {
            eta: 0.5,
            p: 2.0,
            t: 0.5,
        },
    )
    .expect("default config is valid")
}

/// Fraction of edges whose endpoints share a label.
pub fn edge_homophily(g: &Graph, labels: &[usize]) -> Result<f64> {
    if labels.len() != g.n_nodes() {
        return Err(Error::invalid(format!(
            "{} labels for {} nodes",
            labels.len(),
            g.n_nodes()
        )));
    }
    if g.n_edges() == 0 {
        return Err(Error::UndefinedRatio);
    }
    let same = g
        .edges()
        .iter()
        .filter(|&&(u, v)| labels[u] == labels[v])
        .count();
    Ok(same as f64 / g.n_edges() as f64)
}

/// Half-open interval of self-loop measures `p` keeping both aggregation
/// energies positive semi-definite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PFeasibility {
    /// Closed lower endpoint (always 2).
    pub lower: f64,
    /// Open upper endpoint `-ln(alpha1) / t`.
    pub upper: f64,
}

impl PFeasibility {
    pub fn is_empty(&self) -> bool {
        self.upper <= self.lower
    }

    pub fn contains(&self, p: f64) -> bool {
        p >= self.lower && p < self.upper
    }
}

/// The interval `[2, -ln(alpha1)/t)` of feasible self-loop measures.
pub fn psd_feasible_p(t: f64, alpha1: f64) -> Result<PFeasibility> {
    if t <= 0.0 {
        return Err(Error::invalid(format!("t = {t} must be positive")));
    }
    if alpha1 <= 0.0 || alpha1 >= 1.0 {
        return Err(Error::invalid(format!(
            "alpha1 = {alpha1} outside (0, 1): logarithm constraint fails"
        )));
    }
    Ok(PFeasibility {
        lower: 2.0,
        upper: -alpha1.ln() / t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eig;

    fn two_node_graph() -> Graph {
        Graph::new(2, [(0, 1)]).unwrap()
    }

    #[test]
    fn construction_dedups_and_rejects() {
        let g = Graph::new(3, [(0, 1), (1, 0), (1, 2)]).unwrap();
        assert_eq!(g.n_edges(), 2);
        assert!(Graph::new(2, [(0, 0)]).is_err());
        assert!(Graph::new(2, [(0, 5)]).is_err());
    }

    #[test]
    fn normalized_adjacency_single_node() {
        let g = Graph::new(1, []).unwrap();
        for eta in [0.0, 0.3, 1.0] {
            let a = normalized_adjacency(&g, eta);
            assert_eq!(a.get(0, 0), 1.0);
        }
    }

    #[test]
    fn normalized_adjacency_two_nodes() {
        let g = two_node_graph();
        let a = normalized_adjacency(&g, 0.5);
        for i in 0..2 {
            for j in 0..2 {
                assert!((a.get(i, j) - 0.5).abs() < 1e-15);
            }
        }
        let raw = normalized_adjacency(&g, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(raw.get(i, j), 1.0);
            }
        }
    }

    #[test]
    fn normalized_adjacency_is_symmetric() {
        let g = Graph::new(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)]).unwrap();
        for eta in [0.0, 0.25, 0.5, 0.75, 1.0] {
            assert!(normalized_adjacency(&g, eta).is_symmetric(0.0));
        }
    }

    #[test]
    fn pc_laplacian_two_nodes() {
        let g = two_node_graph();
        let cfg = NormalizationConfig {
            eta: 0.5,
            p: 2.0,
            t: 0.5,
        };
        let l = pc_laplacian(&g, &cfg).unwrap();
        assert!((l.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((l.get(0, 1) + 0.5).abs() < 1e-15);
        let eig = sym_eig(&l.to_dense()).unwrap();
        assert!((eig.eigenvalues[0] - 0.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-12);

        let shifted = pc_laplacian(
            &g,
            &NormalizationConfig {
                eta: 0.5,
                p: 3.0,
                t: 0.5,
            },
        )
        .unwrap();
        assert!((shifted.get(0, 0) - 1.5).abs() < 1e-15);
        assert!((shifted.get(0, 1) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn pc_laplacian_single_node_is_zero() {
        let g = Graph::new(1, []).unwrap();
        for eta in [0.0, 0.5, 1.0] {
            let l = pc_laplacian(
                &g,
                &NormalizationConfig {
                    eta,
                    p: 2.0,
                    t: 0.5,
                },
            )
            .unwrap();
            assert_eq!(l.get(0, 0), 0.0);
        }
    }

    #[test]
    fn pc_laplacian_shift_is_exact() {
        let g = Graph::new(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5), (1, 4)]).unwrap();
        for eta in [0.0, 0.4, 0.5, 0.9] {
            for p in [2.0, 2.5, 3.7] {
                let lp = pc_laplacian(&g, &NormalizationConfig { eta, p, t: 0.5 }).unwrap();
                let l2 = pc_laplacian(
                    &g,
                    &NormalizationConfig {
                        eta,
                        p: 2.0,
                        t: 0.5,
                    },
                )
                .unwrap();
                for i in 0..6 {
                    for j in 0..6 {
                        let expect = if i == j {
                            (p - 2.0) + l2.get(i, i)
                        } else {
                            l2.get(i, j)
                        };
                        assert_eq!(lp.get(i, j), expect, "entry ({i},{j}) eta={eta} p={p}");
                    }
                }
            }
        }
    }

    #[test]
    fn standard_laplacian_edge_cases() {
        let g = two_node_graph();
        let l = standard_laplacian(&g);
        assert!((l.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((l.get(1, 0) + 0.5).abs() < 1e-15);

        let edgeless = Graph::new(3, []).unwrap();
        let l0 = standard_laplacian(&edgeless);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(l0.get(i, j), 0.0);
            }
        }

        let triangle = Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let eig = sym_eig(&standard_laplacian(&triangle).to_dense()).unwrap();
        for lam in eig.eigenvalues {
            assert!((-1e-12..2.0).contains(&lam), "lambda = {lam}");
        }
    }

    #[test]
    fn laplacian_spectrum_in_unit_band() {
        // Connected graphs with self-loops added stay within [0, 2).
        let mut graphs = vec![
            Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap(),
            Graph::new(5, [(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap(),
            Graph::new(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 3)]).unwrap(),
        ];
        // A random connected graph at m = 50: a path plus random chords.
        let mut rng = crate::rng::SplitMix64::new(14);
        let mut edges: Vec<(usize, usize)> = (0..49).map(|i| (i, i + 1)).collect();
        for _ in 0..60 {
            let u = rng.next_below(50);
            let v = rng.next_below(50);
            if u != v {
                edges.push((u.min(v), u.max(v)));
            }
        }
        graphs.push(Graph::new(50, edges).unwrap());
        for g in &graphs {
            let eig = sym_eig(&standard_laplacian(g).to_dense()).unwrap();
            for lam in eig.eigenvalues {
                assert!((-1e-12..2.0).contains(&lam));
            }
        }
    }

    #[test]
    fn homophily_counts_matching_edges() {
        let triangle = Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(edge_homophily(&triangle, &[1, 1, 1]).unwrap(), 1.0);

        let single = Graph::new(2, [(0, 1)]).unwrap();
        assert_eq!(edge_homophily(&single, &[0, 1]).unwrap(), 0.0);

        let path = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(edge_homophily(&path, &[0, 0, 1]).unwrap(), 0.5);
    }

    #[test]
    fn homophily_errors() {
        let edgeless = Graph::new(2, []).unwrap();
        assert!(matches!(
            edge_homophily(&edgeless, &[0, 1]),
            Err(Error::UndefinedRatio)
        ));
        let g = Graph::new(2, [(0, 1)]).unwrap();
        assert!(edge_homophily(&g, &[0]).is_err());
    }

    #[test]
    fn homophily_invariant_under_label_permutation() {
        let g = Graph::new(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();
        let labels = [0usize, 1, 0, 2, 1];
        // Relabel classes with the bijection 0->2, 1->0, 2->1.
        let relabeled: Vec<usize> = labels.iter().map(|&c| (c + 2) % 3).collect();
        assert_eq!(
            edge_homophily(&g, &labels).unwrap(),
            edge_homophily(&g, &relabeled).unwrap()
        );
    }

    #[test]
    fn feasible_p_interval() {
        let iv = psd_feasible_p(1.0, (-3.0f64).exp()).unwrap();
        assert!((iv.upper - 3.0).abs() < 1e-12);
        assert!(!iv.is_empty());
        assert!(iv.contains(2.0));
        assert!(!iv.contains(3.0));

        let empty = psd_feasible_p(0.5, (-1.0f64).exp()).unwrap();
        assert!((empty.upper - 2.0).abs() < 1e-12);
        assert!(empty.is_empty());

        let boundary = psd_feasible_p(1.0, (-2.0f64).exp()).unwrap();
        assert!(boundary.is_empty());

        assert!(psd_feasible_p(1.0, 1.0).is_err());
        assert!(psd_feasible_p(1.0, 0.0).is_err());
    }
}
