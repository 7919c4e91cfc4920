//! Directed network model.
//!
//! An edge `i → j` means `j` hears pulses emitted by `i`. Out-neighbour lists
//! are kept in ascending index order because the engine delivers pulses in
//! that order and cascades must be reproducible.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use thiserror::Error;

use crate::time::OscillatorId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("a network needs at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },
    #[error("self-edge at node {0}")]
    SelfEdge(usize),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(usize, usize),
    #[error("node index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("circle geometry must be positive and finite (diameter={diameter}, range={range})")]
    BadGeometry { diameter: f64, range: f64 },
}

/// How a topology is described in a scenario before it is built.
#[derive(Debug, Clone, PartialEq)]
pub enum TopologyDescription {
    /// Nodes on a circle, linked when their distance is strictly below `range`.
    Circle { n: usize, diameter: f64, range: f64 },
    /// Out-neighbour list per node.
    Explicit { adjacency: Vec<Vec<usize>> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    out: Vec<Vec<usize>>,
    in_degree: Vec<usize>,
}

impl Topology {
    /// Builds a topology from out-neighbour lists, rejecting self-edges,
    /// duplicates and dangling indices. Lists need not be sorted.
    pub fn from_adjacency(adjacency: Vec<Vec<usize>>) -> Result<Self, TopologyError> {
        let n = adjacency.len();
        if n == 0 {
            return Err(TopologyError::TooFewNodes { min: 1, got: 0 });
        }
        let mut in_degree = vec![0usize; n];
        let mut out = Vec::with_capacity(n);
        for (i, mut targets) in adjacency.into_iter().enumerate() {
            targets.sort_unstable();
            for (k, &j) in targets.iter().enumerate() {
                if j >= n {
                    return Err(TopologyError::IndexOutOfRange { index: j, n });
                }
                if j == i {
                    return Err(TopologyError::SelfEdge(i));
                }
                if k > 0 && targets[k - 1] == j {
                    return Err(TopologyError::DuplicateEdge(i, j));
                }
                in_degree[j] += 1;
            }
            out.push(targets);
        }
        Ok(Self { out, in_degree })
    }

    /// All-to-all digraph on `n` nodes.
    pub fn complete(n: usize) -> Result<Self, TopologyError> {
        let adjacency = (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect();
        Self::from_adjacency(adjacency)
    }

    /// Places `n` nodes at equal angular spacing on a circle (node 0 at
    /// angle 0, counter-clockwise) and links every pair whose Euclidean
    /// distance is strictly below `comm_range`. Links are bidirectional.
    pub fn circle_deployment(n: usize, diameter: f64, comm_range: f64) -> Result<Self, TopologyError> {
        if n < 2 {
            return Err(TopologyError::TooFewNodes { min: 2, got: n });
        }
        let geometry_ok = |v: f64| v.is_finite() && v > 0.0;
        if !geometry_ok(diameter) || !geometry_ok(comm_range) {
            return Err(TopologyError::BadGeometry {
                diameter,
                range: comm_range,
            });
        }
        let radius = diameter / 2.0;
        let points: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let theta = TAU * i as f64 / n as f64;
                (radius * libm::cos(theta), radius * libm::sin(theta))
            })
            .collect();
        let adjacency = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| {
                        let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
                        j != i && libm::sqrt(dx * dx + dy * dy) < comm_range
                    })
                    .collect()
            })
            .collect();
        Self::from_adjacency(adjacency)
    }

    pub fn from_description(desc: &TopologyDescription) -> Result<Self, TopologyError> {
        match desc {
            TopologyDescription::Circle { n, diameter, range } => Self::circle_deployment(*n, *diameter, *range),
            TopologyDescription::Explicit { adjacency } => Self::from_adjacency(adjacency.clone()),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.out.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.out.is_empty()
    }

    /// Out-neighbours in ascending index order.
    pub fn out_neighbors(&self, id: OscillatorId) -> Result<&[usize], TopologyError> {
        self.out
            .get(id.0)
            .map(Vec::as_slice)
            .ok_or(TopologyError::IndexOutOfRange {
                index: id.0,
                n: self.len(),
            })
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.out
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.in_degree[i]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.out[i].len()
    }

    /// `d_i = min(d⁻_i, d⁺_i)`.
    pub fn degree(&self, i: usize) -> usize {
        self.in_degree(i).min(self.out_degree(i))
    }

    /// `d = min_i d_i`.
    pub fn network_degree(&self) -> usize {
        (0..self.len()).map(|i| self.degree(i)).min().unwrap_or(0)
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.out.get(from).is_some_and(|t| t.binary_search(&to).is_ok())
    }

    /// Every node reaches every other node along directed edges.
    pub fn is_strongly_connected(&self) -> bool {
        let n = self.len();
        let mut reverse = vec![Vec::new(); n];
        for (i, targets) in self.out.iter().enumerate() {
            for &j in targets {
                reverse[j].push(i);
            }
        }
        reaches_all(&self.out, 0) && reaches_all(&reverse, 0)
    }

    pub fn validate_conditions(&self, mechanism: ResilientMechanism, attackers: usize) -> ConditionReport {
        ConditionReport::evaluate(mechanism, self.len(), self.network_degree(), attackers)
    }
}

fn reaches_all(adjacency: &[Vec<usize>], start: usize) -> bool {
    let mut seen = vec![false; adjacency.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(i) = queue.pop_front() {
        for &j in &adjacency[i] {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Chord length between nodes `Δ` positions apart on an `n`-node circle.
pub fn chord_length(n: usize, diameter: f64, delta: usize) -> f64 {
    diameter * libm::sin(PI * delta as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResilientMechanism {
    /// Network size known to every oscillator.
    Mechanism1,
    /// Only the oscillator's own degree is known.
    Mechanism2,
}

/// Degree and attacker-count conditions under which synchronization is
/// guaranteed.
///
/// Mechanism 1 needs `d > ⌊2N/3⌋` and `M < d − ⌊2N/3⌋`; Mechanism 2 needs
/// `d > ⌊3N/4⌋` and `M < ⌊d/6⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionReport {
    pub mechanism: ResilientMechanism,
    pub n: usize,
    pub d: usize,
    pub m: usize,
    /// `⌊2N/3⌋` or `⌊3N/4⌋`.
    pub degree_bound: usize,
    pub degree_ok: bool,
    pub attacker_bound_ok: bool,
    /// Largest `M` satisfying the strict attacker bound; negative when even
    /// an attack-free network fails it.
    pub max_allowed_attackers: i64,
}

impl ConditionReport {
    pub fn evaluate(mechanism: ResilientMechanism, n: usize, d: usize, m: usize) -> Self {
        let (degree_bound, max_allowed_attackers) = match mechanism {
            ResilientMechanism::Mechanism1 => {
                let bound = 2 * n / 3;
                (bound, d as i64 - bound as i64 - 1)
            }
            ResilientMechanism::Mechanism2 => (3 * n / 4, (d / 6) as i64 - 1),
        };
        Self {
            mechanism,
            n,
            d,
            m,
            degree_bound,
            degree_ok: d > degree_bound,
            attacker_bound_ok: (m as i64) <= max_allowed_attackers,
            max_allowed_attackers,
        }
    }

    pub fn is_satisfied(&self) -> bool {
        self.degree_ok && self.attacker_bound_ok
    }
}
