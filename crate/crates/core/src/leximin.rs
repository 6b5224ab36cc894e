//! The frugal leximin mechanism.
//!
//! Agents are peeled off in tiers. Each tier's normalized utility is the
//! minimum ratio C_i(S)/e(S) over subsets S of the remaining agents, found by
//! a Dinkelbach-style iteration of max-flow solves on the tier network; the
//! tier itself is the maximal minimizing subset, read off the source-heavy
//! minimum cut. Once every agent has a breakpoint Λ(a), a single max flow with
//! source capacities e(a)·Λ(a) yields the allocation.

use std::fmt;

use thiserror::Error;

use crate::instance::{Allocation, Instance, InstanceError};
use crate::maxflow::{max_flow, source_heavy_min_cut, Flow, FlowError, FlowNetwork};
use crate::scalar::{sum, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("no agents to allocate to")]
    NoAgents,
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("min-ratio iteration exceeded its bound of {bound} max-flow solves")]
    IterationBound { bound: usize },
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),
}

/// Tier structure of an instance: breakpoints λ_1 < … < λ_k, the agents and
/// objects that enter at each tier, and the residual object capacities c_i.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakpointProfile<T> {
    pub(crate) lambdas: Vec<T>,
    pub(crate) agent_tiers: Vec<Vec<usize>>,
    pub(crate) object_tiers: Vec<Vec<usize>>,
    pub(crate) residual_caps: Vec<Vec<(usize, T)>>,
    pub(crate) tier_of: Vec<usize>,
}

impl<T: Scalar> BreakpointProfile<T> {
    /// Assembles a profile from per-tier parts. `agent_tiers[i]` and
    /// `object_tiers[i]` hold A_{i+1} \ A_i and B_{i+1} \ B_i.
    pub fn from_parts(
        num_agents: usize,
        lambdas: Vec<T>,
        agent_tiers: Vec<Vec<usize>>,
        object_tiers: Vec<Vec<usize>>,
        residual_caps: Vec<Vec<(usize, T)>>,
    ) -> Self {
        let mut tier_of = vec![usize::MAX; num_agents];
        for (i, tier) in agent_tiers.iter().enumerate() {
            for &a in tier {
                tier_of[a] = i;
            }
        }
        BreakpointProfile {
            lambdas,
            agent_tiers,
            object_tiers,
            residual_caps,
            tier_of,
        }
    }

    /// num(I), the number of distinct breakpoints.
    pub fn k(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[T] {
        &self.lambdas
    }

    /// Agents whose breakpoint is λ_{i+1} (0-based tier index).
    pub fn tier_agents(&self, i: usize) -> &[usize] {
        &self.agent_tiers[i]
    }

    /// Objects that enter B at tier i+1.
    pub fn tier_objects(&self, i: usize) -> &[usize] {
        &self.object_tiers[i]
    }

    /// A_{i+1}: agents with breakpoint at most λ_{i+1}.
    pub fn agents_through(&self, i: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.agent_tiers[..=i].iter().flatten().copied().collect();
        v.sort_unstable();
        v
    }

    /// B_{i+1}.
    pub fn objects_through(&self, i: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.object_tiers[..=i].iter().flatten().copied().collect();
        v.sort_unstable();
        v
    }

    /// c_{i+1}(b) for every object not yet in B_i.
    pub fn residual_caps(&self, i: usize) -> &[(usize, T)] {
        &self.residual_caps[i]
    }

    /// 0-based tier index of agent `a`.
    pub fn tier_of(&self, a: usize) -> usize {
        self.tier_of[a]
    }

    /// Λ(a).
    pub fn breakpoint(&self, a: usize) -> &T {
        &self.lambdas[self.tier_of[a]]
    }

    pub fn per_agent(&self) -> Vec<T> {
        (0..self.tier_of.len())
            .map(|a| self.breakpoint(a).clone())
            .collect()
    }

    /// Checks the profile invariants against `instance`; returns a
    /// description of the first failure.
    pub fn check_invariants(&self, instance: &Instance<T>) -> Result<(), String> {
        let n = instance.num_agents();
        if self.tier_of.len() != n || self.tier_of.iter().any(|&t| t >= self.k()) {
            return Err("tiers do not cover every agent exactly once".into());
        }
        let covered: usize = self.agent_tiers.iter().map(Vec::len).sum();
        if covered != n {
            return Err("tiers do not cover every agent exactly once".into());
        }
        if self.agent_tiers.iter().any(Vec::is_empty) {
            return Err("empty agent tier".into());
        }
        if let Some(first) = self.lambdas.first() {
            if *first < T::zero() {
                return Err("negative first breakpoint".into());
            }
        }
        if self.lambdas.windows(2).any(|w| w[0] >= w[1]) {
            return Err("breakpoints not strictly increasing".into());
        }
        let capped = instance.capped_supply();
        let mut frozen: Vec<usize> = Vec::new();
        let mut exhausted = vec![false; instance.num_objects()];
        for i in 0..self.k() {
            let before = instance.column_demands(&frozen);
            let caps = &self.residual_caps[i];
            let expected: Vec<usize> = (0..instance.num_objects()).filter(|&b| !exhausted[b]).collect();
            if caps.iter().map(|(b, _)| *b).collect::<Vec<_>>() != expected {
                return Err(format!("tier {}: residual capacities cover the wrong objects", i + 1));
            }
            for (b, c) in caps {
                if *c < T::zero() {
                    return Err(format!("tier {}: negative residual capacity", i + 1));
                }
                if !c.approx_eq(&(capped[*b].clone() - before[*b].clone())) {
                    return Err(format!("tier {}: residual capacity mismatch", i + 1));
                }
            }
            let entering = instance.column_demands(&self.agent_tiers[i]);
            let mut new_objects: Vec<usize> = caps
                .iter()
                .filter(|(b, c)| entering[*b] > *c)
                .map(|(b, _)| *b)
                .collect();
            new_objects.sort_unstable();
            if new_objects != self.object_tiers[i] {
                return Err(format!("tier {}: object tier mismatch", i + 1));
            }
            for &b in &new_objects {
                exhausted[b] = true;
            }
            frozen.extend(&self.agent_tiers[i]);
        }
        Ok(())
    }
}

/// The residual problem seen by one tier: remaining agents A \ A_{i-1},
/// remaining objects B \ B_{i-1} and their capacities c_i(b).
#[derive(Debug, Clone)]
pub struct TierView<'a, T> {
    pub instance: &'a Instance<T>,
    pub agents: Vec<usize>,
    pub objects: Vec<usize>,
    pub caps: Vec<T>,
}

impl<'a, T: Scalar> TierView<'a, T> {
    /// The first tier: every agent, every object, capacities s_I(b).
    pub fn initial(instance: &'a Instance<T>) -> Self {
        TierView {
            instance,
            agents: (0..instance.num_agents()).collect(),
            objects: (0..instance.num_objects()).collect(),
            caps: instance.capped_supply(),
        }
    }

    /// C_i(S) = Σ_{b remaining} min(c_i(b), d(S, b)).
    pub fn capacity(&self, subset: &[usize]) -> T {
        let cols = self.instance.column_demands(subset);
        self.objects
            .iter()
            .zip(&self.caps)
            .fold(T::zero(), |acc, (&b, c)| acc + T::min_of(c, &cols[b]))
    }

    fn network(&self, lambda: &T) -> BipartiteNetwork<T> {
        let source_caps: Vec<T> = self
            .agents
            .iter()
            .map(|&a| self.instance.endowment(a).clone() * lambda.clone())
            .collect();
        BipartiteNetwork::build(self.instance, &self.agents, &source_caps, &self.objects, &self.caps)
    }
}

/// A bipartite agent/object network: source → agent → object → sink.
/// Vertex 0 is the source, vertex 1 the sink.
#[derive(Debug, Clone)]
pub struct BipartiteNetwork<T> {
    pub network: FlowNetwork<T>,
    agents: Vec<usize>,
    objects: Vec<usize>,
    /// (agent, object, edge index) for every positive-demand edge.
    demand_edges: Vec<(usize, usize, usize)>,
}

impl<T: Scalar> BipartiteNetwork<T> {
    pub const SOURCE: usize = 0;
    pub const SINK: usize = 1;

    fn build(
        instance: &Instance<T>,
        agents: &[usize],
        source_caps: &[T],
        objects: &[usize],
        sink_caps: &[T],
    ) -> Self {
        let mut object_slot = vec![None; instance.num_objects()];
        for (j, &b) in objects.iter().enumerate() {
            object_slot[b] = Some(j);
        }
        let offset = 2 + agents.len();
        let mut network = FlowNetwork::new(offset + objects.len(), Self::SOURCE, Self::SINK);
        for (i, cap) in source_caps.iter().enumerate() {
            network.add_edge(Self::SOURCE, 2 + i, cap.clone());
        }
        let mut demand_edges = Vec::new();
        for (i, &a) in agents.iter().enumerate() {
            for (b, d) in instance.demand_row(a) {
                if let Some(j) = object_slot[*b] {
                    if !d.is_zero() {
                        let e = network.add_edge(2 + i, offset + j, d.clone());
                        demand_edges.push((a, *b, e));
                    }
                }
            }
        }
        for (j, cap) in sink_caps.iter().enumerate() {
            network.add_edge(offset + j, Self::SINK, cap.clone());
        }
        BipartiteNetwork {
            network,
            agents: agents.to_vec(),
            objects: objects.to_vec(),
            demand_edges,
        }
    }

    pub fn agent_vertex(&self, position: usize) -> usize {
        2 + position
    }

    pub fn object_vertex(&self, position: usize) -> usize {
        2 + self.agents.len() + position
    }

    /// Agents (instance indices) on the source side of a vertex mask.
    pub fn agents_in(&self, side: &[bool]) -> Vec<usize> {
        self.agents
            .iter()
            .enumerate()
            .filter(|(i, _)| side[self.agent_vertex(*i)])
            .map(|(_, &a)| a)
            .collect()
    }

    pub fn objects(&self) -> &[usize] {
        &self.objects
    }

    /// Reads μ(a, b) = f(a, b) off a flow.
    pub fn allocation(&self, instance: &Instance<T>, flow: &Flow<T>) -> Allocation<T> {
        let mut alloc = Allocation::zeros(instance.num_agents(), instance.num_objects());
        for &(a, b, e) in &self.demand_edges {
            alloc.set(a, b, flow.edge_flow[e].clone());
        }
        alloc
    }
}

/// G_I with the given source capacities: s → a with `source_caps[a]`,
/// a → b with d(a, b) (zero demands omitted), b → t with s_I(b).
pub fn build_network<T: Scalar>(instance: &Instance<T>, source_caps: &[T]) -> BipartiteNetwork<T> {
    assert_eq!(source_caps.len(), instance.num_agents(), "one source capacity per agent");
    let agents: Vec<usize> = (0..instance.num_agents()).collect();
    let objects: Vec<usize> = (0..instance.num_objects()).collect();
    BipartiteNetwork::build(instance, &agents, source_caps, &objects, &instance.capped_supply())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinRatio<T> {
    pub lambda: T,
    /// Union of all subsets attaining the minimum, sorted.
    pub tight_set: Vec<usize>,
    /// Max-flow solves performed.
    pub iterations: usize,
}

/// Minimum over nonempty subsets S of the view's agents of C_i(S)/e(S),
/// together with the maximal minimizing subset.
pub fn min_ratio<T: Scalar>(view: &TierView<'_, T>) -> Result<MinRatio<T>, SolveError> {
    if view.agents.is_empty() {
        return Err(SolveError::NoAgents);
    }
    let total_endowment = view.instance.endowment_of(&view.agents);
    let mut lambda = view.capacity(&view.agents) / total_endowment.clone();
    let bound = view.agents.len() + 1;
    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > bound {
            return Err(SolveError::IterationBound { bound });
        }
        let net = view.network(&lambda);
        let flow = max_flow(&net.network);
        let cut = source_heavy_min_cut(&net.network, &flow)?;
        let side = net.agents_in(&cut.source_side);
        if cut.capacity.approx_eq(&(total_endowment.clone() * lambda.clone())) {
            return Ok(MinRatio {
                lambda,
                tight_set: side,
                iterations,
            });
        }
        if side.is_empty() {
            return Err(SolveError::Inconsistent(
                "cut below e(R)·λ with no agent on the source side".into(),
            ));
        }
        let next = view.capacity(&side) / view.instance.endowment_of(&side);
        if next >= lambda {
            return Err(SolveError::Inconsistent(format!(
                "min-ratio iteration did not decrease ({lambda} -> {next})"
            )));
        }
        lambda = next;
    }
}

/// Computes the full tier structure by repeated [`min_ratio`] peeling.
pub fn breakpoints<T: Scalar>(instance: &Instance<T>) -> Result<BreakpointProfile<T>, SolveError> {
    instance.ensure_valid()?;
    let mut view = TierView::initial(instance);
    let mut lambdas = Vec::new();
    let mut agent_tiers = Vec::new();
    let mut object_tiers = Vec::new();
    let mut residual_caps = Vec::new();
    while !view.agents.is_empty() {
        residual_caps.push(
            view.objects
                .iter()
                .copied()
                .zip(view.caps.iter().cloned())
                .collect(),
        );
        let MinRatio {
            lambda, tight_set, ..
        } = min_ratio(&view)?;
        let entering = instance.column_demands(&tight_set);
        let mut new_objects = Vec::new();
        let mut objects = Vec::new();
        let mut caps = Vec::new();
        for (&b, c) in view.objects.iter().zip(&view.caps) {
            if entering[b] > *c {
                new_objects.push(b);
            } else {
                objects.push(b);
                caps.push(c.clone() - entering[b].clone());
            }
        }
        view.agents.retain(|a| tight_set.binary_search(a).is_err());
        view.objects = objects;
        view.caps = caps;
        lambdas.push(lambda);
        agent_tiers.push(tight_set);
        object_tiers.push(new_objects);
    }
    Ok(BreakpointProfile::from_parts(
        instance.num_agents(),
        lambdas,
        agent_tiers,
        object_tiers,
        residual_caps,
    ))
}

/// Output of [`lexicographic_allocation`].
#[derive(Debug, Clone, PartialEq)]
pub struct LexicographicAllocation<T> {
    pub allocation: Allocation<T>,
    pub profile: BreakpointProfile<T>,
    /// Value of the final max flow; equals Σ_b s_I(b).
    pub flow_value: T,
}

/// Runs the mechanism: breakpoints, then one max flow on G_I with source
/// capacities e(a)·Λ(a). The result is frugal, leximin-optimal, and gives
/// every agent utility exactly e(a)·Λ(a).
pub fn lexicographic_allocation<T: Scalar>(
    instance: &Instance<T>,
) -> Result<LexicographicAllocation<T>, SolveError> {
    let profile = breakpoints(instance)?;
    let source_caps: Vec<T> = (0..instance.num_agents())
        .map(|a| instance.endowment(a).clone() * profile.breakpoint(a).clone())
        .collect();
    let net = build_network(instance, &source_caps);
    let flow = max_flow(&net.network);
    let expected = sum(&source_caps);
    let capped_total = sum(&instance.capped_supply());
    if !flow.value.approx_eq(&expected) || !flow.value.approx_eq(&capped_total) {
        return Err(SolveError::Inconsistent(format!(
            "flow value {} differs from Σ e·Λ = {} or Σ s_I = {}",
            flow.value, expected, capped_total
        )));
    }
    let allocation = net.allocation(instance, &flow);
    Ok(LexicographicAllocation {
        allocation,
        profile,
        flow_value: flow.value,
    })
}

/// The first structural identity an allocation fails.
#[derive(Debug, Clone, PartialEq)]
pub enum StructureViolation<T> {
    /// An agent of tier i is short of its demand on an object outside B_i.
    UnmetDemand {
        tier: usize,
        agent: usize,
        object: usize,
        amount: T,
        demand: T,
    },
    /// An agent outside A_i holds part of an object exhausted at tier i.
    LateShare {
        tier: usize,
        agent: usize,
        object: usize,
        amount: T,
    },
    /// An object of B_i is not fully consumed by A_i.
    NotExhausted {
        tier: usize,
        object: usize,
        allocated: T,
        capped_supply: T,
    },
    /// Σ_{j≤i} e(A_j \ A_{j-1})·λ_j ≠ s(B_i) + d(A_i, B \ B_i).
    TierBalance { tier: usize, lhs: T, rhs: T },
    /// u(a) ≠ e(a)·Λ(a).
    Utility { agent: usize, utility: T, expected: T },
    Shape,
}

impl<T: fmt::Display> fmt::Display for StructureViolation<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructureViolation::UnmetDemand {
                tier,
                agent,
                object,
                amount,
                demand,
            } => write!(
                f,
                "tier {tier}: agent {agent} gets {amount} of object {object} but demands {demand}"
            ),
            StructureViolation::LateShare {
                tier,
                agent,
                object,
                amount,
            } => write!(
                f,
                "tier {tier}: agent {agent} outside the tier holds {amount} of exhausted object {object}"
            ),
            StructureViolation::NotExhausted {
                tier,
                object,
                allocated,
                capped_supply,
            } => write!(
                f,
                "tier {tier}: object {object} allocated {allocated} of capped supply {capped_supply}"
            ),
            StructureViolation::TierBalance { tier, lhs, rhs } => {
                write!(f, "tier {tier}: tier balance {lhs} != {rhs}")
            }
            StructureViolation::Utility {
                agent,
                utility,
                expected,
            } => write!(f, "agent {agent}: utility {utility} != e·Λ = {expected}"),
            StructureViolation::Shape => write!(f, "allocation shape does not match instance"),
        }
    }
}

/// Verifies the tier identities an allocation of the mechanism must satisfy
/// (tiers reported 1-based).
pub fn structure_check<T: Scalar>(
    instance: &Instance<T>,
    allocation: &Allocation<T>,
    profile: &BreakpointProfile<T>,
) -> Result<(), StructureViolation<T>> {
    if instance.check_shape(allocation).is_err() || profile.tier_of.len() != instance.num_agents() {
        return Err(StructureViolation::Shape);
    }
    let m = instance.num_objects();
    let capped = instance.capped_supply();
    let mut in_b = vec![false; m];
    let mut balance = T::zero();
    for i in 0..profile.k() {
        let tier = i + 1;
        for &b in profile.tier_objects(i) {
            in_b[b] = true;
        }
        let through = profile.agents_through(i);
        let mut in_a = vec![false; instance.num_agents()];
        for &a in &through {
            in_a[a] = true;
        }
        for &a in profile.tier_agents(i) {
            for b in (0..m).filter(|&b| !in_b[b]) {
                let amount = allocation.get(a, b);
                let demand = instance.demand(a, b);
                if !amount.approx_eq(&demand) {
                    return Err(StructureViolation::UnmetDemand {
                        tier,
                        agent: a,
                        object: b,
                        amount: amount.clone(),
                        demand,
                    });
                }
            }
        }
        for &b in profile.tier_objects(i) {
            for a in (0..instance.num_agents()).filter(|&a| !in_a[a]) {
                let amount = allocation.get(a, b);
                if !amount.approx_eq(&T::zero()) {
                    return Err(StructureViolation::LateShare {
                        tier,
                        agent: a,
                        object: b,
                        amount: amount.clone(),
                    });
                }
            }
        }
        for b in (0..m).filter(|&b| in_b[b]) {
            let allocated = allocation.column_total_over(&through, b);
            if !allocated.approx_eq(&capped[b]) {
                return Err(StructureViolation::NotExhausted {
                    tier,
                    object: b,
                    allocated,
                    capped_supply: capped[b].clone(),
                });
            }
        }
        balance = balance
            + instance.endowment_of(profile.tier_agents(i)) * profile.lambdas[i].clone();
        let cols = instance.column_demands(&through);
        let rhs = (0..m).fold(T::zero(), |acc, b| {
            if in_b[b] {
                acc + instance.supply(b).clone()
            } else {
                acc + cols[b].clone()
            }
        });
        if !balance.approx_eq(&rhs) {
            return Err(StructureViolation::TierBalance {
                tier,
                lhs: balance,
                rhs,
            });
        }
    }
    for a in 0..instance.num_agents() {
        let utility = instance.utility(allocation, a);
        let expected = instance.endowment(a).clone() * profile.breakpoint(a).clone();
        if !utility.approx_eq(&expected) {
            return Err(StructureViolation::Utility {
                agent: a,
                utility,
                expected,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use crate::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn build_network_single_pair() {
        let mut inst = Instance::new(vec![("a", r(1, 1))], vec![("b", r(5, 1))]);
        inst.set_demand(0, 0, r(2, 1));
        let net = build_network(&inst, &[r(10, 1)]);
        assert_eq!(net.network.vertex_count(), 4);
        let caps: Vec<_> = net.network.edges().iter().map(|e| e.capacity.clone()).collect();
        assert_eq!(caps, vec![r(10, 1), r(2, 1), r(2, 1)]);
    }

    #[test]
    fn build_network_omits_zero_demands() {
        let inst = families::half_sharing::<Rational>(2);
        let net = build_network(&inst, &[r(1, 1), r(1, 1)]);
        assert_eq!(net.network.vertex_count(), 6);
        let edges = net.network.edges();
        let demand_edges = edges
            .iter()
            .filter(|e| e.tail != 0 && e.head != 1)
            .count();
        assert_eq!(demand_edges, 3);
        let sink_caps: Vec<_> = edges
            .iter()
            .filter(|e| e.head == 1)
            .map(|e| e.capacity.clone())
            .collect();
        assert_eq!(sink_caps, vec![r(2, 1), r(1, 1)]);
    }

    #[test]
    fn build_network_empty_instance() {
        let inst = Instance::<Rational>::new(Vec::<(String, _)>::new(), Vec::<(String, _)>::new());
        let net = build_network(&inst, &[]);
        assert_eq!(net.network.vertex_count(), 2);
        assert!(net.network.edges().is_empty());
    }

    #[test]
    fn surrogate_network_max_flow_is_capped_supply() {
        let inst = families::half_sharing::<Rational>(2);
        let caps: Vec<_> = (0..2).map(|a| inst.total_demand(a)).collect();
        let net = build_network(&inst, &caps);
        assert_eq!(max_flow(&net.network).value, r(3, 1));
    }

    #[test]
    fn breakpoint_network_source_heavy_cut() {
        let inst = families::breakpoint_example::<Rational>();
        let net = build_network(&inst, &[r(1, 1), r(1, 1)]);
        let flow = max_flow(&net.network);
        let cut = source_heavy_min_cut(&net.network, &flow).unwrap();
        assert_eq!(net.agents_in(&cut.source_side), vec![0]);
    }

    #[test]
    fn min_ratio_examples() {
        let mut single = Instance::new(vec![("a", r(1, 1))], vec![("b", r(3, 1))]);
        single.set_demand(0, 0, r(1, 1));
        let mr = min_ratio(&TierView::initial(&single)).unwrap();
        assert_eq!((mr.lambda, mr.tight_set), (r(1, 1), vec![0]));

        let bp = families::breakpoint_example::<Rational>();
        let mr = min_ratio(&TierView::initial(&bp)).unwrap();
        assert_eq!((mr.lambda, mr.tight_set), (r(1, 1), vec![0]));

        let l6 = families::maximin_si_manipulation::<Rational>();
        let mr = min_ratio(&TierView::initial(&l6)).unwrap();
        assert_eq!((mr.lambda, mr.tight_set), (r(3, 1), vec![0, 1, 2]));
        assert!(mr.iterations <= 4);
    }

    #[test]
    fn min_ratio_rejects_empty_view() {
        let inst = families::maximin_si_manipulation::<Rational>();
        let mut view = TierView::initial(&inst);
        view.agents.clear();
        assert_eq!(min_ratio(&view), Err(SolveError::NoAgents));
    }

    #[test]
    fn breakpoints_examples() {
        let p = breakpoints(&families::breakpoint_example::<Rational>()).unwrap();
        assert_eq!(p.lambdas(), &[r(1, 1), r(2, 1)]);
        assert_eq!(p.tier_agents(0), &[0]);
        assert_eq!(p.breakpoint(1), &r(2, 1));

        let p = breakpoints(&families::half_sharing::<Rational>(2)).unwrap();
        assert_eq!(p.lambdas(), &[r(3, 2)]);
        assert_eq!(p.tier_agents(0), &[0, 1]);

        let zero = Instance::from_dense(
            vec![("a1", r(1, 1)), ("a2", r(2, 1))],
            vec![("b1", r(4, 1))],
            vec![vec![r(0, 1)], vec![r(0, 1)]],
        );
        let p = breakpoints(&zero).unwrap();
        assert_eq!(p.lambdas(), &[r(0, 1)]);
        assert_eq!(p.tier_agents(0), &[0, 1]);
    }

    #[test]
    fn breakpoints_reject_invalid_instance() {
        let inst = Instance::new(vec![("a", r(0, 1))], vec![("b", r(1, 1))]);
        assert!(matches!(breakpoints(&inst), Err(SolveError::Instance(_))));
    }

    #[test]
    fn allocation_half_sharing() {
        let inst = families::half_sharing::<Rational>(2);
        let out = lexicographic_allocation(&inst).unwrap();
        let expected = Allocation::from_rows(vec![vec![r(1, 2), r(1, 1)], vec![r(3, 2), r(0, 1)]]);
        assert_eq!(out.allocation, expected);
        assert_eq!(inst.utility(&out.allocation, 0), r(3, 2));
        assert_eq!(inst.utility(&out.allocation, 1), r(3, 2));
        assert_eq!(out.flow_value, r(3, 1));
    }

    #[test]
    fn allocation_contribution_rounds_three() {
        let inst = families::contribution_rounds::<Rational>(3);
        let out = lexicographic_allocation(&inst).unwrap();
        for a in 0..3 {
            assert_eq!(inst.utility(&out.allocation, a), r(3, 1));
        }
    }

    #[test]
    fn allocation_single_agent_is_frugal() {
        let mut inst = Instance::new(vec![("a", r(1, 1))], vec![("b", r(10, 1))]);
        inst.set_demand(0, 0, r(4, 1));
        let out = lexicographic_allocation(&inst).unwrap();
        assert_eq!(out.allocation.get(0, 0), &r(4, 1));
    }

    #[test]
    fn structure_check_passes_on_mechanism_output() {
        for inst in [
            families::breakpoint_example::<Rational>(),
            families::half_sharing(3),
            families::maximin_si_manipulation(),
            families::contribution_rounds(4),
        ] {
            let out = lexicographic_allocation(&inst).unwrap();
            assert_eq!(structure_check(&inst, &out.allocation, &out.profile), Ok(()));
            out.profile.check_invariants(&inst).unwrap();
        }
    }

    #[test]
    fn structure_check_flags_cross_tier_shift() {
        let inst = families::breakpoint_example::<Rational>();
        let out = lexicographic_allocation(&inst).unwrap();
        let mut bad = out.allocation.clone();
        bad.set(0, 0, r(1, 2));
        bad.set(1, 0, r(5, 2));
        assert!(matches!(
            structure_check(&inst, &bad, &out.profile),
            Err(StructureViolation::UnmetDemand {
                tier: 1,
                agent: 0,
                ..
            })
        ));
    }

    #[test]
    fn tier_balance_first_tier() {
        // e·λ_1 = 1 = s(B_1) + d(A_1, B \ B_1) = 0 + 1
        let inst = families::breakpoint_example::<Rational>();
        let p = breakpoints(&inst).unwrap();
        assert!(p.tier_objects(0).is_empty());
        assert_eq!(instance_rhs(&inst, &p, 0), r(1, 1));
    }

    fn instance_rhs(inst: &Instance<Rational>, p: &BreakpointProfile<Rational>, i: usize) -> Rational {
        let bs = p.objects_through(i);
        let cols = inst.column_demands(&p.agents_through(i));
        (0..inst.num_objects()).fold(r(0, 1), |acc, b| {
            if bs.contains(&b) {
                acc + inst.supply(b).clone()
            } else {
                acc + cols[b].clone()
            }
        })
    }

    #[test]
    fn float_scalar_matches_on_dyadic_instance() {
        let inst = families::breakpoint_example::<f64>();
        let p = breakpoints(&inst).unwrap();
        assert_eq!(p.k(), 2);
        assert!((p.lambdas()[0] - 1.0).abs() < 1e-12);
        assert!((p.lambdas()[1] - 2.0).abs() < 1e-12);
    }
}
