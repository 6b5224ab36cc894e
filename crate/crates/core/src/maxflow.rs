//! Maximum flow and minimum cuts on capacitated directed graphs.
//!
//! [`max_flow`] runs Dinic's method. Arithmetic is whatever the scalar type
//! provides; with exact rationals termination is guaranteed and every
//! returned quantity is exact. Augmentation order is fixed by edge insertion
//! order, so identical networks yield identical flows.

use std::collections::VecDeque;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("flow has {flow_edges} edge values but the network has {network_edges} edges")]
    SizeMismatch {
        flow_edges: usize,
        network_edges: usize,
    },
    #[error("edge {edge} violates its capacity constraint")]
    CapacityViolated { edge: usize },
    #[error("flow conservation fails at vertex {vertex}")]
    ConservationViolated { vertex: usize },
    #[error("flow of value {value} is not maximum (cut capacity {cut_capacity})")]
    NotMaximum { value: String, cut_capacity: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge<T> {
    pub tail: usize,
    pub head: usize,
    pub capacity: T,
}

/// A directed graph on vertices `0..vertex_count` with distinguished source
/// and sink and nonnegative edge capacities.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowNetwork<T> {
    vertex_count: usize,
    source: usize,
    sink: usize,
    edges: Vec<Edge<T>>,
}

impl<T: Scalar> FlowNetwork<T> {
    pub fn new(vertex_count: usize, source: usize, sink: usize) -> Self {
        assert!(source < vertex_count && sink < vertex_count, "terminal out of range");
        assert_ne!(source, sink, "source and sink must differ");
        FlowNetwork {
            vertex_count,
            source,
            sink,
            edges: Vec::new(),
        }
    }

    /// Adds `tail -> head` and returns its edge index.
    pub fn add_edge(&mut self, tail: usize, head: usize, capacity: T) -> usize {
        assert!(tail < self.vertex_count && head < self.vertex_count, "vertex out of range");
        assert!(capacity >= T::zero(), "capacities must be nonnegative");
        self.edges.push(Edge {
            tail,
            head,
            capacity,
        });
        self.edges.len() - 1
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    /// Total capacity of edges leaving `side` (given as a membership mask).
    pub fn cut_capacity(&self, side: &[bool]) -> T {
        self.edges
            .iter()
            .filter(|e| side[e.tail] && !side[e.head])
            .fold(T::zero(), |acc, e| acc + e.capacity.clone())
    }
}

/// Flow value per edge (indexed like [`FlowNetwork::edges`]) and the net
/// outflow of the source.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow<T> {
    pub edge_flow: Vec<T>,
    pub value: T,
}

impl<T: Scalar> Flow<T> {
    /// Checks capacity constraints and conservation exactly (up to the scalar tolerance).
    pub fn check(&self, network: &FlowNetwork<T>) -> Result<(), FlowError> {
        if self.edge_flow.len() != network.edges.len() {
            return Err(FlowError::SizeMismatch {
                flow_edges: self.edge_flow.len(),
                network_edges: network.edges.len(),
            });
        }
        let mut excess = vec![T::zero(); network.vertex_count];
        for (i, (e, f)) in network.edges.iter().zip(&self.edge_flow).enumerate() {
            if (-f.clone()).is_positive_tol() || (f.clone() - e.capacity.clone()).is_positive_tol() {
                return Err(FlowError::CapacityViolated { edge: i });
            }
            excess[e.head] = excess[e.head].clone() + f.clone();
            excess[e.tail] = excess[e.tail].clone() - f.clone();
        }
        for (v, x) in excess.iter().enumerate() {
            if v != network.source && v != network.sink && !x.approx_eq(&T::zero()) {
                return Err(FlowError::ConservationViolated { vertex: v });
            }
        }
        Ok(())
    }
}

/// A cut `(S, V \ S)`: the source side as a membership mask plus its capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct CutResult<T> {
    pub source_side: Vec<bool>,
    pub capacity: T,
}

impl<T> CutResult<T> {
    pub fn contains(&self, v: usize) -> bool {
        self.source_side[v]
    }

    pub fn source_vertices(&self) -> Vec<usize> {
        (0..self.source_side.len())
            .filter(|&v| self.source_side[v])
            .collect()
    }
}

struct Residual<T> {
    head: Vec<usize>,
    cap: Vec<T>,
    adj: Vec<Vec<usize>>,
}

impl<T: Scalar> Residual<T> {
    /// Arc `2i` is edge `i` forward, arc `2i + 1` its reverse.
    fn build(network: &FlowNetwork<T>, flow: Option<&Flow<T>>) -> Self {
        let m = network.edges.len();
        let mut head = Vec::with_capacity(2 * m);
        let mut cap = Vec::with_capacity(2 * m);
        let mut adj = vec![Vec::new(); network.vertex_count];
        for (i, e) in network.edges.iter().enumerate() {
            let f = flow.map_or_else(T::zero, |fl| fl.edge_flow[i].clone());
            adj[e.tail].push(2 * i);
            head.push(e.head);
            cap.push(e.capacity.clone() - f.clone());
            adj[e.head].push(2 * i + 1);
            head.push(e.tail);
            cap.push(f);
        }
        Residual { head, cap, adj }
    }

    fn levels(&self, source: usize) -> Vec<Option<usize>> {
        let mut level = vec![None; self.adj.len()];
        level[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let next = level[v].map(|l| l + 1);
            for &arc in &self.adj[v] {
                let u = self.head[arc];
                if level[u].is_none() && self.cap[arc].is_positive_tol() {
                    level[u] = next;
                    queue.push_back(u);
                }
            }
        }
        level
    }

    fn augment(
        &mut self,
        v: usize,
        sink: usize,
        limit: Option<T>,
        level: &[Option<usize>],
        cursor: &mut [usize],
    ) -> Option<T> {
        if v == sink {
            return limit;
        }
        while cursor[v] < self.adj[v].len() {
            let arc = self.adj[v][cursor[v]];
            let u = self.head[arc];
            let forward = level[u].is_some() && level[u] == level[v].map(|l| l + 1);
            if forward && self.cap[arc].is_positive_tol() {
                let bound = match &limit {
                    Some(l) => T::min_of(l, &self.cap[arc]),
                    None => self.cap[arc].clone(),
                };
                if let Some(pushed) = self.augment(u, sink, Some(bound), level, cursor) {
                    if pushed.is_positive_tol() {
                        self.cap[arc] = self.cap[arc].clone() - pushed.clone();
                        self.cap[arc ^ 1] = self.cap[arc ^ 1].clone() + pushed.clone();
                        return Some(pushed);
                    }
                }
            }
            cursor[v] += 1;
        }
        None
    }

    /// Vertices reachable from `start` along positive residual arcs.
    fn reachable_from(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &arc in &self.adj[v] {
                let u = self.head[arc];
                if !seen[u] && self.cap[arc].is_positive_tol() {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }

    /// Vertices that can reach `target` along positive residual arcs.
    fn reaching(&self, target: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[target] = true;
        let mut stack = vec![target];
        while let Some(v) = stack.pop() {
            // u reaches v through the partner of each arc v -> u.
            for &out in &self.adj[v] {
                let into = out ^ 1;
                let u = self.head[out];
                if !seen[u] && self.cap[into].is_positive_tol() {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }
}

/// Computes a maximum flow with Dinic's method.
pub fn max_flow<T: Scalar>(network: &FlowNetwork<T>) -> Flow<T> {
    let mut res = Residual::build(network, None);
    let (s, t) = (network.source, network.sink);
    loop {
        let level = res.levels(s);
        if level[t].is_none() {
            break;
        }
        let mut cursor = vec![0; network.vertex_count];
        while let Some(pushed) = res.augment(s, t, None, &level, &mut cursor) {
            if !pushed.is_positive_tol() {
                break;
            }
        }
    }
    let edge_flow: Vec<T> = (0..network.edges.len())
        .map(|i| res.cap[2 * i + 1].clone())
        .collect();
    let value = network
        .edges
        .iter()
        .zip(&edge_flow)
        .fold(T::zero(), |acc, (e, f)| {
            if e.tail == s {
                acc + f.clone()
            } else if e.head == s {
                acc - f.clone()
            } else {
                acc
            }
        });
    Flow { edge_flow, value }
}

fn finish_cut<T: Scalar>(network: &FlowNetwork<T>, flow: &Flow<T>, side: Vec<bool>) -> Result<CutResult<T>, FlowError> {
    if side[network.sink] {
        return Err(FlowError::NotMaximum {
            value: flow.value.to_string(),
            cut_capacity: "unbounded: sink reachable in residual graph".into(),
        });
    }
    let capacity = network.cut_capacity(&side);
    if !capacity.approx_eq(&flow.value) {
        return Err(FlowError::NotMaximum {
            value: flow.value.to_string(),
            cut_capacity: capacity.to_string(),
        });
    }
    Ok(CutResult {
        source_side: side,
        capacity,
    })
}

/// The source-minimal minimum cut: vertices reachable from the source in the
/// residual graph of a maximum flow.
pub fn min_cut<T: Scalar>(network: &FlowNetwork<T>, flow: &Flow<T>) -> Result<CutResult<T>, FlowError> {
    flow.check(network)?;
    let side = Residual::build(network, Some(flow)).reachable_from(network.source);
    finish_cut(network, flow, side)
}

/// The source-heavy minimum cut, whose source side contains the source side
/// of every minimum cut: everything that cannot reach the sink in the
/// residual graph.
pub fn source_heavy_min_cut<T: Scalar>(
    network: &FlowNetwork<T>,
    flow: &Flow<T>,
) -> Result<CutResult<T>, FlowError> {
    flow.check(network)?;
    let reach_sink = Residual::build(network, Some(flow)).reaching(network.sink);
    if reach_sink[network.source] {
        return Err(FlowError::NotMaximum {
            value: flow.value.to_string(),
            cut_capacity: "unbounded: source reaches sink in residual graph".into(),
        });
    }
    let side: Vec<bool> = reach_sink.iter().map(|r| !r).collect();
    finish_cut(network, flow, side)
}
