//! Instance model: agents with endowments, objects with supplies, and a
//! sparse demand matrix, together with the allocation and utility types that
//! every other module consumes.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::scalar::{sum, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("unknown agent id `{0}`")]
    UnknownAgent(String),
    #[error("unknown object id `{0}`")]
    UnknownObject(String),
    #[error("residual supply of object `{object}` would be negative ({residual})")]
    NegativeResidual { object: String, residual: String },
    #[error("allocation shape {got:?} does not match instance shape {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("invalid instance: {0}")]
    Invalid(ValidationReport),
}

/// One violated instance invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NonPositiveEndowment { agent: String },
    NegativeSupply { object: String },
    NegativeDemand { agent: String, object: String },
    DuplicateAgent { id: String },
    DuplicateObject { id: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveEndowment { agent } => {
                write!(f, "agent `{agent}`: endowment must be strictly positive")
            }
            Violation::NegativeSupply { object } => {
                write!(f, "object `{object}`: supply must be nonnegative")
            }
            Violation::NegativeDemand { agent, object } => {
                write!(f, "demand ({agent}, {object}): demand must be nonnegative")
            }
            Violation::DuplicateAgent { id } => write!(f, "duplicate agent id `{id}`"),
            Violation::DuplicateObject { id } => write!(f, "duplicate object id `{id}`"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

/// An allocation problem with fractional demands.
///
/// Agents and objects are addressed by their position in input order; ids are
/// opaque strings kept for reporting. Demands are stored per agent as sorted
/// `(object, demand)` pairs; absent pairs demand zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<T> {
    agents: Vec<String>,
    endowments: Vec<T>,
    objects: Vec<String>,
    supplies: Vec<T>,
    demands: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> Instance<T> {
    pub fn new<A, O>(agents: Vec<(A, T)>, objects: Vec<(O, T)>) -> Self
    where
        A: Into<String>,
        O: Into<String>,
    {
        let (agents, endowments): (Vec<String>, Vec<T>) =
            agents.into_iter().map(|(id, e)| (id.into(), e)).unzip();
        let (objects, supplies): (Vec<String>, Vec<T>) =
            objects.into_iter().map(|(id, s)| (id.into(), s)).unzip();
        let demands = vec![Vec::new(); agents.len()];
        Instance {
            agents,
            endowments,
            objects,
            supplies,
            demands,
        }
    }

    /// Builds an instance from a dense `agents x objects` demand matrix.
    pub fn from_dense<A, O>(agents: Vec<(A, T)>, objects: Vec<(O, T)>, demand: Vec<Vec<T>>) -> Self
    where
        A: Into<String>,
        O: Into<String>,
    {
        let mut inst = Self::new(agents, objects);
        assert_eq!(demand.len(), inst.num_agents(), "demand rows");
        for (a, row) in demand.into_iter().enumerate() {
            assert_eq!(row.len(), inst.num_objects(), "demand columns");
            for (b, d) in row.into_iter().enumerate() {
                inst.set_demand(a, b, d);
            }
        }
        inst
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn num_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn agent_ids(&self) -> &[String] {
        &self.agents
    }

    pub fn object_ids(&self) -> &[String] {
        &self.objects
    }

    pub fn agent_id(&self, a: usize) -> &str {
        &self.agents[a]
    }

    pub fn object_id(&self, b: usize) -> &str {
        &self.objects[b]
    }

    pub fn agent_index(&self, id: &str) -> Option<usize> {
        self.agents.iter().position(|x| x == id)
    }

    pub fn object_index(&self, id: &str) -> Option<usize> {
        self.objects.iter().position(|x| x == id)
    }

    pub fn endowment(&self, a: usize) -> &T {
        &self.endowments[a]
    }

    pub fn endowments(&self) -> &[T] {
        &self.endowments
    }

    pub fn supply(&self, b: usize) -> &T {
        &self.supplies[b]
    }

    pub fn supplies(&self) -> &[T] {
        &self.supplies
    }

    pub fn set_supply(&mut self, b: usize, value: T) {
        self.supplies[b] = value;
    }

    pub fn set_endowment(&mut self, a: usize, value: T) {
        self.endowments[a] = value;
    }

    /// d(a, b); zero when the pair is absent.
    pub fn demand(&self, a: usize, b: usize) -> T {
        match self.demands[a].binary_search_by_key(&b, |(o, _)| *o) {
            Ok(i) => self.demands[a][i].1.clone(),
            Err(_) => T::zero(),
        }
    }

    /// Nonzero demands of agent `a`, sorted by object index.
    pub fn demand_row(&self, a: usize) -> &[(usize, T)] {
        &self.demands[a]
    }

    /// Sets d(a, b). Zero removes the entry.
    pub fn set_demand(&mut self, a: usize, b: usize, value: T) {
        assert!(b < self.objects.len(), "object index out of range");
        let row = &mut self.demands[a];
        match row.binary_search_by_key(&b, |(o, _)| *o) {
            Ok(i) => {
                if value.is_zero() {
                    row.remove(i);
                } else {
                    row[i].1 = value;
                }
            }
            Err(i) => {
                if !value.is_zero() {
                    row.insert(i, (b, value));
                }
            }
        }
    }

    pub fn set_demand_by_id(&mut self, agent: &str, object: &str, value: T) -> Result<(), InstanceError> {
        let a = self
            .agent_index(agent)
            .ok_or_else(|| InstanceError::UnknownAgent(agent.to_string()))?;
        let b = self
            .object_index(object)
            .ok_or_else(|| InstanceError::UnknownObject(object.to_string()))?;
        self.set_demand(a, b, value);
        Ok(())
    }

    /// Σ_b d(a, b).
    pub fn total_demand(&self, a: usize) -> T {
        sum(self.demands[a].iter().map(|(_, d)| d))
    }

    /// d(A', b) for every object b.
    pub fn column_demands(&self, agents: &[usize]) -> Vec<T> {
        let mut out = vec![T::zero(); self.num_objects()];
        for &a in agents {
            for (b, d) in &self.demands[a] {
                out[*b] = out[*b].clone() + d.clone();
            }
        }
        out
    }

    /// e(A').
    pub fn endowment_of(&self, agents: &[usize]) -> T {
        sum(agents.iter().map(|&a| &self.endowments[a]))
    }

    /// Lists every violated invariant; empty iff the instance is valid.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut seen = HashSet::new();
        for id in &self.agents {
            if !seen.insert(id.as_str()) {
                violations.push(Violation::DuplicateAgent { id: id.clone() });
            }
        }
        seen.clear();
        for id in &self.objects {
            if !seen.insert(id.as_str()) {
                violations.push(Violation::DuplicateObject { id: id.clone() });
            }
        }
        for (a, e) in self.endowments.iter().enumerate() {
            if *e <= T::zero() {
                violations.push(Violation::NonPositiveEndowment {
                    agent: self.agents[a].clone(),
                });
            }
        }
        for (b, s) in self.supplies.iter().enumerate() {
            if *s < T::zero() {
                violations.push(Violation::NegativeSupply {
                    object: self.objects[b].clone(),
                });
            }
        }
        for (a, row) in self.demands.iter().enumerate() {
            for (b, d) in row {
                if *d < T::zero() {
                    violations.push(Violation::NegativeDemand {
                        agent: self.agents[a].clone(),
                        object: self.objects[*b].clone(),
                    });
                }
            }
        }
        ValidationReport { violations }
    }

    pub fn ensure_valid(&self) -> Result<(), InstanceError> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(InstanceError::Invalid(report))
        }
    }

    /// s_I(b) = min(s(b), d(A, b)) for every object.
    pub fn capped_supply(&self) -> Vec<T> {
        let all: Vec<usize> = (0..self.num_agents()).collect();
        self.column_demands(&all)
            .iter()
            .zip(&self.supplies)
            .map(|(d, s)| T::min_of(s, d))
            .collect()
    }

    /// C(I, A') = Σ_b min(s_I(b), d(A', b)).
    pub fn capacity(&self, agents: &[usize]) -> T {
        let capped = self.capped_supply();
        let cols = self.column_demands(agents);
        capped
            .iter()
            .zip(&cols)
            .fold(T::zero(), |acc, (c, d)| acc + T::min_of(c, d))
    }

    /// u(μ, d, a) = Σ_b min(μ(a, b), d(a, b)).
    pub fn utility(&self, allocation: &Allocation<T>, a: usize) -> T {
        self.demands[a].iter().fold(T::zero(), |acc, (b, d)| {
            acc + T::min_of(allocation.get(a, *b), d)
        })
    }

    pub fn utility_vector(&self, allocation: &Allocation<T>) -> UtilityVector<T> {
        let entries = (0..self.num_agents())
            .map(|a| {
                let utility = self.utility(allocation, a);
                let normalized = utility.clone() / self.endowments[a].clone();
                UtilityEntry {
                    agent: a,
                    utility,
                    normalized,
                }
            })
            .collect();
        UtilityVector::new(entries)
    }

    /// The residual instance left after the agents in `removed` leave with
    /// their share of `allocation`.
    pub fn sub_instance(&self, allocation: &Allocation<T>, removed: &[usize]) -> Result<Self, InstanceError> {
        self.check_shape(allocation)?;
        let gone: HashSet<usize> = removed.iter().copied().collect();
        let mut supplies = self.supplies.clone();
        for &a in &gone {
            for (b, s) in supplies.iter_mut().enumerate() {
                *s = s.clone() - allocation.get(a, b).clone();
            }
        }
        for (b, s) in supplies.iter().enumerate() {
            if *s < T::zero() {
                return Err(InstanceError::NegativeResidual {
                    object: self.objects[b].clone(),
                    residual: s.to_string(),
                });
            }
        }
        let mut out = self.retain_agents(|a| !gone.contains(&a));
        out.supplies = supplies;
        Ok(out)
    }

    /// Copy of the instance restricted to agents satisfying `keep`, supplies unchanged.
    pub fn retain_agents(&self, keep: impl Fn(usize) -> bool) -> Self {
        let kept: Vec<usize> = (0..self.num_agents()).filter(|&a| keep(a)).collect();
        Instance {
            agents: kept.iter().map(|&a| self.agents[a].clone()).collect(),
            endowments: kept.iter().map(|&a| self.endowments[a].clone()).collect(),
            objects: self.objects.clone(),
            supplies: self.supplies.clone(),
            demands: kept.iter().map(|&a| self.demands[a].clone()).collect(),
        }
    }

    pub fn check_shape(&self, allocation: &Allocation<T>) -> Result<(), InstanceError> {
        let expected = (self.num_agents(), self.num_objects());
        let got = (allocation.num_agents(), allocation.num_objects());
        if expected == got {
            Ok(())
        } else {
            Err(InstanceError::ShapeMismatch { expected, got })
        }
    }
}

/// μ: nonnegative amounts per (agent, object), stored densely in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation<T> {
    agents: usize,
    objects: usize,
    amounts: Vec<T>,
}

impl<T: Scalar> Allocation<T> {
    pub fn zeros(agents: usize, objects: usize) -> Self {
        Allocation {
            agents,
            objects,
            amounts: vec![T::zero(); agents * objects],
        }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let agents = rows.len();
        let objects = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == objects), "ragged allocation rows");
        Allocation {
            agents,
            objects,
            amounts: rows.into_iter().flatten().collect(),
        }
    }

    pub fn num_agents(&self) -> usize {
        self.agents
    }

    pub fn num_objects(&self) -> usize {
        self.objects
    }

    pub fn get(&self, a: usize, b: usize) -> &T {
        &self.amounts[a * self.objects + b]
    }

    pub fn set(&mut self, a: usize, b: usize, value: T) {
        self.amounts[a * self.objects + b] = value;
    }

    pub fn row(&self, a: usize) -> &[T] {
        &self.amounts[a * self.objects..(a + 1) * self.objects]
    }

    /// μ(a, B).
    pub fn row_total(&self, a: usize) -> T {
        sum(self.row(a))
    }

    /// μ(A, b).
    pub fn column_total(&self, b: usize) -> T {
        sum((0..self.agents).map(|a| self.get(a, b)))
    }

    /// μ(A', b) for the given agents.
    pub fn column_total_over(&self, agents: &[usize], b: usize) -> T {
        sum(agents.iter().map(|&a| self.get(a, b)))
    }

    /// Restriction of the allocation to the listed agents, in the given order.
    pub fn restrict(&self, agents: &[usize]) -> Self {
        Allocation {
            agents: agents.len(),
            objects: self.objects,
            amounts: agents
                .iter()
                .flat_map(|&a| self.row(a).iter().cloned())
                .collect(),
        }
    }

    /// Nonnegative everywhere and within every object's supply.
    pub fn is_feasible(&self, instance: &Instance<T>) -> bool {
        self.amounts.iter().all(|x| *x >= T::zero())
            && (0..self.objects).all(|b| self.column_total(b) <= *instance.supply(b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilityEntry<T> {
    pub agent: usize,
    pub utility: T,
    pub normalized: T,
}

/// Per-agent utilities together with the nondecreasing view of normalized
/// utilities u/e that fairness comparisons act on.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityVector<T> {
    entries: Vec<UtilityEntry<T>>,
    sorted: Vec<T>,
}

impl<T: Scalar> UtilityVector<T> {
    pub fn new(entries: Vec<UtilityEntry<T>>) -> Self {
        let mut sorted: Vec<T> = entries.iter().map(|e| e.normalized.clone()).collect();
        sorted.sort_by(|x, y| x.partial_cmp(y).expect("utilities are comparable"));
        UtilityVector { entries, sorted }
    }

    /// Vector of normalized values for unit-endowment agents `0..n`.
    pub fn from_normalized(values: Vec<T>) -> Self {
        Self::new(
            values
                .into_iter()
                .enumerate()
                .map(|(agent, v)| UtilityEntry {
                    agent,
                    utility: v.clone(),
                    normalized: v,
                })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[UtilityEntry<T>] {
        &self.entries
    }

    pub fn sorted(&self) -> &[T] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
