//! Time partitions `0 = t_0 < t_1 < ... < t_n = T` and the left-endpoint map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    uniform: bool,
}

impl TimeGrid {
    /// Uniform grid with `t_k = k T / n`. Nodes are computed directly, not accumulated.
    pub fn uniform(n: usize, horizon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "a grid needs at least one step"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("horizon", format!("must be positive, got {horizon}")));
        }
        let nf = n as f64;
        let mut nodes: Vec<f64> = (0..=n).map(|k| k as f64 * horizon / nf).collect();
        nodes[n] = horizon;
        Ok(Self {
            nodes,
            uniform: true,
        })
    }

    /// Arbitrary partition; must start at 0 and be strictly increasing.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::invalid("nodes", "a grid needs at least two nodes"));
        }
        if nodes[0] != 0.0 {
            return Err(Error::invalid("nodes", "the first node must be 0"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::invalid("nodes", "nodes must be finite and strictly increasing"));
        }
        Ok(Self {
            nodes,
            uniform: false,
        })
    }

    /// Number of steps `n`.
    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.nodes[self.steps()]
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> f64 {
        self.nodes[k]
    }

    /// `Δt_k = t_k - t_{k-1}` for `k` in `1..=n`.
    pub fn step(&self, k: usize) -> f64 {
        self.nodes[k] - self.nodes[k - 1]
    }

    /// True when built by [`TimeGrid::uniform`].
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Largest step `δ_n`.
    pub fn mesh(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Index `k` with `t_k <= s < t_{k+1}`; the horizon maps to `n`.
    pub fn eta_index(&self, s: f64) -> usize {
        let n = self.steps();
        if s >= self.nodes[n] {
            return n;
        }
        if s <= 0.0 {
            return 0;
        }
        // partition_point gives the first node > s.
        self.nodes.partition_point(|&t| t <= s) - 1
    }

    /// Left-endpoint map `η_n(s)`.
    pub fn eta(&self, s: f64) -> f64 {
        self.nodes[self.eta_index(s)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_nodes_are_exact() {
        assert_eq!(TimeGrid::uniform(1, 1.0).unwrap().nodes(), &[0.0, 1.0]);
        assert_eq!(
            TimeGrid::uniform(4, 1.0).unwrap().nodes(),
            &[0.0, 0.25, 0.5, 0.75, 1.0]
        );
        let g = TimeGrid::uniform(3, 1.0).unwrap();
        assert_eq!(g.node(1), 1.0 / 3.0);
        assert_eq!(g.node(2), 2.0 / 3.0);
        assert_eq!(g.node(3), 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(TimeGrid::uniform(0, 1.0).is_err());
        assert!(TimeGrid::uniform(3, 0.0).is_err());
        assert!(TimeGrid::from_nodes(vec![0.0, 0.5, 0.5]).is_err());
        assert!(TimeGrid::from_nodes(vec![0.1, 0.5]).is_err());
    }

    #[test]
    fn eta_at_nodes_and_horizon() {
        let g = TimeGrid::uniform(4, 1.0).unwrap();
        assert_eq!(g.eta(0.0), 0.0);
        assert_eq!(g.eta(0.25), 0.25);
        assert_eq!(g.eta(0.3), 0.25);
        assert_eq!(g.eta(0.999), 0.75);
        assert_eq!(g.eta(1.0), 1.0);
    }

    proptest! {
        #[test]
        fn eta_brackets_its_argument(n in 1usize..200, horizon in 0.1f64..5.0, frac in 0.0f64..1.0) {
            let g = TimeGrid::uniform(n, horizon).unwrap();
            let s = frac * horizon;
            let k = g.eta_index(s);
            prop_assert!(g.node(k) <= s);
            if k < n {
                prop_assert!(s < g.node(k + 1));
            }
        }

        #[test]
        fn non_uniform_grids_keep_invariants(mut steps in proptest::collection::vec(0.01f64..1.0, 1..40)) {
            let mut t = 0.0;
            let mut nodes = vec![0.0];
            for s in steps.drain(..) {
                t += s;
                nodes.push(t);
            }
            let g = TimeGrid::from_nodes(nodes).unwrap();
            prop_assert!(g.mesh() > 0.0);
            prop_assert_eq!(g.eta(g.horizon()), g.horizon());
            for k in 1..=g.steps() {
                prop_assert!(g.step(k) > 0.0);
            }
        }
    }
}
