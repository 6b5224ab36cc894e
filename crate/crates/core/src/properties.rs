//! Exact checkers for per-allocation properties: frugality, non-wastefulness,
//! envy-freeness, sharing incentives, Lorenz dominance and leximin order.
//!
//! Pareto efficiency is certified through non-wastefulness: every frugal
//! non-wasteful allocation is Pareto efficient.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::instance::{Allocation, Instance, UtilityVector};
use crate::leximin::{breakpoints, SolveError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PropertyError {
    #[error("non-wastefulness is only defined for frugal allocations")]
    NotFrugal,
    #[error("utility vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("allocation shape does not match the instance")]
    Shape,
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// The two sides of a violated inequality `lhs <relation> rhs` together with
/// the agents and objects involved.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness<T> {
    pub agents: Vec<usize>,
    pub objects: Vec<usize>,
    pub lhs: T,
    pub rhs: T,
    /// The relation that should have held, e.g. `"<="`.
    pub relation: &'static str,
    pub note: String,
}

impl<T: Scalar> Witness<T> {
    /// Re-evaluates `lhs <relation> rhs`; true means the witness is a genuine violation.
    pub fn is_violation(&self) -> bool {
        let holds = match self.relation {
            "<=" => self.lhs <= self.rhs,
            ">=" => self.lhs >= self.rhs,
            "==" => self.lhs == self.rhs,
            _ => return false,
        };
        !holds
    }
}

impl<T: fmt::Display> fmt::Display for Witness<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (expected {} {} {}; agents {:?}, objects {:?})",
            self.note, self.lhs, self.relation, self.rhs, self.agents, self.objects
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport<T> {
    pub property: &'static str,
    /// Present iff the property fails.
    pub witness: Option<Witness<T>>,
    /// Individual inequalities evaluated.
    pub checks: usize,
    /// Seed of any randomness used to produce the report.
    pub seed: Option<u64>,
}

impl<T> PropertyReport<T> {
    pub fn pass(property: &'static str, checks: usize) -> Self {
        PropertyReport {
            property,
            witness: None,
            checks,
            seed: None,
        }
    }

    pub fn fail(property: &'static str, checks: usize, witness: Witness<T>) -> Self {
        PropertyReport {
            property,
            witness: Some(witness),
            checks,
            seed: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

impl<T: fmt::Display> fmt::Display for PropertyReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.witness {
            None => write!(f, "{}: pass ({} checks)", self.property, self.checks),
            Some(w) => write!(f, "{}: FAIL: {}", self.property, w),
        }
    }
}

/// μ(a, b) ≤ d(a, b) for every pair.
pub fn is_frugal<T: Scalar>(instance: &Instance<T>, allocation: &Allocation<T>) -> PropertyReport<T> {
    let mut checks = 0;
    for a in 0..instance.num_agents() {
        for b in 0..instance.num_objects() {
            checks += 1;
            let amount = allocation.get(a, b);
            let demand = instance.demand(a, b);
            if (amount.clone() - demand.clone()).is_positive_tol() {
                return PropertyReport::fail(
                    "frugal",
                    checks,
                    Witness {
                        agents: vec![a],
                        objects: vec![b],
                        lhs: amount.clone(),
                        rhs: demand,
                        relation: "<=",
                        note: "allocation exceeds demand".into(),
                    },
                );
            }
        }
    }
    PropertyReport::pass("frugal", checks)
}

/// Every object is either fully allocated or meets every agent's demand.
pub fn is_nw<T: Scalar>(instance: &Instance<T>, allocation: &Allocation<T>) -> Result<PropertyReport<T>, PropertyError> {
    instance.check_shape(allocation).map_err(|_| PropertyError::Shape)?;
    if !is_frugal(instance, allocation).passed() {
        return Err(PropertyError::NotFrugal);
    }
    let mut checks = 0;
    for b in 0..instance.num_objects() {
        checks += 1;
        let allocated = allocation.column_total(b);
        if allocated.approx_eq(instance.supply(b)) {
            continue;
        }
        for a in 0..instance.num_agents() {
            let amount = allocation.get(a, b);
            let demand = instance.demand(a, b);
            if !amount.approx_eq(&demand) {
                return Ok(PropertyReport::fail(
                    "nw",
                    checks,
                    Witness {
                        agents: vec![a],
                        objects: vec![b],
                        lhs: amount.clone(),
                        rhs: demand,
                        relation: "==",
                        note: format!(
                            "object partly unallocated ({allocated} of {}) while demand is unmet",
                            instance.supply(b)
                        ),
                    },
                ));
            }
        }
    }
    Ok(PropertyReport::pass("nw", checks))
}

/// u(a) ≥ Σ_b min(e(a)/e(a')·μ(a', b), d(a, b)) for every ordered pair.
pub fn envy_report<T: Scalar>(instance: &Instance<T>, allocation: &Allocation<T>) -> PropertyReport<T> {
    let n = instance.num_agents();
    let utilities: Vec<T> = (0..n).map(|a| instance.utility(allocation, a)).collect();
    let mut checks = 0;
    for (a, mine) in utilities.iter().enumerate() {
        for other in (0..n).filter(|&x| x != a) {
            checks += 1;
            let scale = instance.endowment(a).clone() / instance.endowment(other).clone();
            let envied = instance.demand_row(a).iter().fold(T::zero(), |acc, (b, d)| {
                acc + T::min_of(&(scale.clone() * allocation.get(other, *b).clone()), d)
            });
            if (envied.clone() - mine.clone()).is_positive_tol() {
                return PropertyReport::fail(
                    "ef",
                    checks,
                    Witness {
                        agents: vec![a, other],
                        objects: Vec::new(),
                        lhs: mine.clone(),
                        rhs: envied,
                        relation: ">=",
                        note: "agent prefers the other agent's scaled bundle".into(),
                    },
                );
            }
        }
    }
    PropertyReport::pass("ef", checks)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiRow<T> {
    pub agent: usize,
    pub utility: T,
    /// Σ_b min(e(a)/e(A)·s(b), d(a, b)).
    pub share: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiReport<T> {
    pub rows: Vec<SiRow<T>>,
    /// min over agents with positive share of utility/share; `None` when
    /// every share is zero.
    pub ratio: Option<T>,
}

impl<T: Scalar> SiReport<T> {
    /// Whether the allocation is α-SI.
    pub fn satisfies(&self, alpha: &T) -> bool {
        self.rows
            .iter()
            .all(|row| row.utility >= alpha.clone() * row.share.clone())
    }
}

/// Sharing-incentive table and the largest α for which the allocation is α-SI.
pub fn si_ratio<T: Scalar>(instance: &Instance<T>, allocation: &Allocation<T>) -> SiReport<T> {
    let n = instance.num_agents();
    let total = instance.endowment_of(&(0..n).collect::<Vec<_>>());
    let mut ratio: Option<T> = None;
    let rows = (0..n)
        .map(|a| {
            let frac = instance.endowment(a).clone() / total.clone();
            let share = instance.demand_row(a).iter().fold(T::zero(), |acc, (b, d)| {
                acc + T::min_of(&(frac.clone() * instance.supply(*b).clone()), d)
            });
            let utility = instance.utility(allocation, a);
            if share.is_positive_tol() {
                let x = utility.clone() / share.clone();
                if ratio.as_ref().is_none_or(|r| x < *r) {
                    ratio = Some(x);
                }
            }
            SiRow {
                agent: a,
                utility,
                share,
            }
        })
        .collect();
    SiReport { rows, ratio }
}

/// Every prefix sum of `v`'s sorted view is at least that of `w`.
pub fn lorenz_dominates<T: Scalar>(v: &UtilityVector<T>, w: &UtilityVector<T>) -> Result<bool, PropertyError> {
    Ok(lorenz_witness(v, w)?.is_none())
}

/// First prefix at which `v` fails to Lorenz-dominate `w`.
pub fn lorenz_witness<T: Scalar>(
    v: &UtilityVector<T>,
    w: &UtilityVector<T>,
) -> Result<Option<Witness<T>>, PropertyError> {
    if v.len() != w.len() {
        return Err(PropertyError::LengthMismatch(v.len(), w.len()));
    }
    let (mut sv, mut sw) = (T::zero(), T::zero());
    for (i, (x, y)) in v.sorted().iter().zip(w.sorted()).enumerate() {
        sv = sv + x.clone();
        sw = sw + y.clone();
        if (sw.clone() - sv.clone()).is_positive_tol() {
            return Ok(Some(Witness {
                agents: Vec::new(),
                objects: Vec::new(),
                lhs: sv,
                rhs: sw,
                relation: ">=",
                note: format!("prefix sum of length {} is smaller", i + 1),
            }));
        }
    }
    Ok(None)
}

/// Lexicographic comparison of the sorted normalized views.
pub fn leximin_cmp<T: Scalar>(v: &UtilityVector<T>, w: &UtilityVector<T>) -> Result<Ordering, PropertyError> {
    if v.len() != w.len() {
        return Err(PropertyError::LengthMismatch(v.len(), w.len()));
    }
    for (x, y) in v.sorted().iter().zip(w.sorted()) {
        if !x.approx_eq(y) {
            return Ok(if x < y { Ordering::Less } else { Ordering::Greater });
        }
    }
    Ok(Ordering::Equal)
}

/// The best achievable minimum normalized utility, i.e. λ_1.
pub fn mmf_value<T: Scalar>(instance: &Instance<T>) -> Result<T, PropertyError> {
    if instance.num_agents() == 0 {
        return Err(SolveError::NoAgents.into());
    }
    let profile = breakpoints(instance)?;
    Ok(profile.lambdas()[0].clone())
}
