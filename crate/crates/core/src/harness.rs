//! Cross-instance property testing of mechanisms: resource and population
//! monotonicity, optimal substructure, and coalition manipulation search.
//!
//! Every randomized routine takes an explicit seed and records it in its
//! report. Manipulation search covers a finite grid of misreports; finding
//! nothing is evidence of group strategyproofness, not proof.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::instance::{Allocation, Instance, InstanceError};
use crate::leximin::{lexicographic_allocation, structure_check, SolveError};
use crate::oracle::{oracle_breakpoints, oracle_mmf_si, OracleError};
use crate::properties::{PropertyReport, Witness};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("perturbation kind {got:?} not accepted here (expected {expected})")]
    WrongKind {
        got: PerturbationKind,
        expected: &'static str,
    },
    #[error("coalition size {size} exceeds the {agents} agents of the instance")]
    CoalitionTooLarge { size: usize, agents: usize },
    #[error("coalition size must be at least 1")]
    EmptyCoalition,
    #[error("search budget must be positive")]
    ZeroBudget,
    #[error("grid multipliers must be nonnegative")]
    NegativeMultiplier,
    #[error("perturbation magnitudes are invalid: {0}")]
    BadMagnitudes(&'static str),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// A way of turning an instance into one allocation.
pub trait Mechanism<T: Scalar> {
    fn name(&self) -> &'static str;

    fn allocate(&self, instance: &Instance<T>) -> Result<Allocation<T>, HarnessError>;

    /// Confirms that `allocation` is a legitimate output for `instance`, so a
    /// manipulation found through it does not hinge on tie-breaking.
    fn certify(&self, _instance: &Instance<T>, _allocation: &Allocation<T>) -> bool {
        true
    }
}

/// The frugal leximin mechanism.
#[derive(Debug, Clone, Copy, Default)]
pub struct Lmmf;

impl<T: Scalar> Mechanism<T> for Lmmf {
    fn name(&self) -> &'static str {
        "lmmf"
    }

    fn allocate(&self, instance: &Instance<T>) -> Result<Allocation<T>, HarnessError> {
        Ok(lexicographic_allocation(instance)?.allocation)
    }

    fn certify(&self, instance: &Instance<T>, allocation: &Allocation<T>) -> bool {
        match crate::leximin::breakpoints(instance) {
            Ok(profile) => structure_check(instance, allocation, &profile).is_ok(),
            Err(_) => false,
        }
    }
}

/// Maximin subject to sharing incentives, by grid search (tiny instances only).
#[derive(Debug, Clone)]
pub struct MmfSi<T> {
    pub resolution: T,
}

impl<T: Scalar> Mechanism<T> for MmfSi<T> {
    fn name(&self) -> &'static str {
        "mmf-si"
    }

    fn allocate(&self, instance: &Instance<T>) -> Result<Allocation<T>, HarnessError> {
        Ok(oracle_mmf_si(instance, &self.resolution)?.allocation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationKind {
    SupplyIncrease,
    EndowmentDecrease,
    AgentRemoval,
}

/// How to perturb an instance. `magnitudes` are supply increments for
/// [`PerturbationKind::SupplyIncrease`] and endowment scale factors in (0, 1]
/// for [`PerturbationKind::EndowmentDecrease`]; ignored for removals.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec<T> {
    pub kind: PerturbationKind,
    pub magnitudes: Vec<T>,
    pub seed: u64,
}

impl<T: Scalar> PerturbationSpec<T> {
    /// Default grids: increments {0, 1/2, 1, 2, 3}; factors {1/4, 1/2, 3/4, 1}.
    pub fn new(kind: PerturbationKind, seed: u64) -> Self {
        let magnitudes = match kind {
            PerturbationKind::SupplyIncrease => [(0, 1), (1, 2), (1, 1), (2, 1), (3, 1)]
                .iter()
                .map(|&(n, d)| T::from_ratio(n, d))
                .collect(),
            PerturbationKind::EndowmentDecrease => [(1, 4), (1, 2), (3, 4), (1, 1)]
                .iter()
                .map(|&(n, d)| T::from_ratio(n, d))
                .collect(),
            PerturbationKind::AgentRemoval => Vec::new(),
        };
        PerturbationSpec {
            kind,
            magnitudes,
            seed,
        }
    }

    fn pick(&self, rng: &mut impl Rng) -> T {
        self.magnitudes[rng.gen_range(0..self.magnitudes.len())].clone()
    }

    fn validate(&self) -> Result<(), HarnessError> {
        match self.kind {
            PerturbationKind::SupplyIncrease => {
                if self.magnitudes.is_empty() || self.magnitudes.iter().any(|x| *x < T::zero()) {
                    return Err(HarnessError::BadMagnitudes("supply increments must be nonnegative"));
                }
            }
            PerturbationKind::EndowmentDecrease => {
                if self.magnitudes.is_empty()
                    || self
                        .magnitudes
                        .iter()
                        .any(|x| *x <= T::zero() || *x > T::one())
                {
                    return Err(HarnessError::BadMagnitudes("endowment factors must lie in (0, 1]"));
                }
            }
            PerturbationKind::AgentRemoval => {}
        }
        Ok(())
    }
}

fn utilities<T: Scalar>(instance: &Instance<T>, allocation: &Allocation<T>) -> Vec<T> {
    (0..instance.num_agents())
        .map(|a| instance.utility(allocation, a))
        .collect()
}

/// Raises supplies at random and checks that no agent's utility drops.
pub fn check_rm<T: Scalar>(
    instance: &Instance<T>,
    spec: &PerturbationSpec<T>,
    trials: usize,
) -> Result<PropertyReport<T>, HarnessError> {
    if spec.kind != PerturbationKind::SupplyIncrease {
        return Err(HarnessError::WrongKind {
            got: spec.kind,
            expected: "supply-increase",
        });
    }
    spec.validate()?;
    let base = utilities(instance, &lexicographic_allocation(instance)?.allocation);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut checks = 0;
    for trial in 0..trials {
        let mut richer = instance.clone();
        for b in 0..instance.num_objects() {
            let s = instance.supply(b).clone() + spec.pick(&mut rng);
            richer.set_supply(b, s);
        }
        let after = utilities(&richer, &lexicographic_allocation(&richer)?.allocation);
        for a in 0..instance.num_agents() {
            checks += 1;
            if after[a] < base[a] {
                return Ok(PropertyReport::fail(
                    "rm",
                    checks,
                    Witness {
                        agents: vec![a],
                        objects: Vec::new(),
                        lhs: after[a].clone(),
                        rhs: base[a].clone(),
                        relation: ">=",
                        note: format!("utility fell after supply increase (trial {trial})"),
                    },
                )
                .with_seed(spec.seed));
            }
        }
    }
    Ok(PropertyReport::pass("rm", checks).with_seed(spec.seed))
}

/// Shrinks the population (lower endowments or removed agents) and checks
/// that every untouched agent is no worse off.
pub fn check_pm<T: Scalar>(
    instance: &Instance<T>,
    spec: &PerturbationSpec<T>,
    trials: usize,
) -> Result<PropertyReport<T>, HarnessError> {
    if spec.kind == PerturbationKind::SupplyIncrease {
        return Err(HarnessError::WrongKind {
            got: spec.kind,
            expected: "endowment-decrease or agent-removal",
        });
    }
    spec.validate()?;
    let n = instance.num_agents();
    let base = utilities(instance, &lexicographic_allocation(instance)?.allocation);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut checks = 0;
    for trial in 0..trials {
        let (shrunk, kept, unchanged) = match spec.kind {
            PerturbationKind::AgentRemoval => {
                let keep: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
                let kept: Vec<usize> = (0..n).filter(|&a| keep[a]).collect();
                let unchanged = vec![true; kept.len()];
                (instance.retain_agents(|a| keep[a]), kept, unchanged)
            }
            _ => {
                let mut shrunk = instance.clone();
                let mut unchanged = vec![true; n];
                for (a, same) in unchanged.iter_mut().enumerate() {
                    if rng.gen_bool(0.5) {
                        let factor = spec.pick(&mut rng);
                        if factor != T::one() {
                            *same = false;
                        }
                        shrunk.set_endowment(a, instance.endowment(a).clone() * factor);
                    }
                }
                (shrunk, (0..n).collect(), unchanged)
            }
        };
        let after = utilities(&shrunk, &lexicographic_allocation(&shrunk)?.allocation);
        for (i, &a) in kept.iter().enumerate() {
            if !unchanged[i] {
                continue;
            }
            checks += 1;
            if after[i] < base[a] {
                return Ok(PropertyReport::fail(
                    "pm",
                    checks,
                    Witness {
                        agents: vec![a],
                        objects: Vec::new(),
                        lhs: after[i].clone(),
                        rhs: base[a].clone(),
                        relation: ">=",
                        note: format!("utility fell after the population shrank (trial {trial})"),
                    },
                )
                .with_seed(spec.seed));
            }
        }
    }
    Ok(PropertyReport::pass("pm", checks).with_seed(spec.seed))
}

/// Removes `removed` with their share of `allocation` and checks that the
/// rest of the allocation gives every remaining agent its oracle leximin
/// utility in the residual instance. Returns the first mismatch.
pub fn substructure_witness<T: Scalar>(
    instance: &Instance<T>,
    allocation: &Allocation<T>,
    removed: &[usize],
) -> Result<Option<Witness<T>>, HarnessError> {
    let rest = instance.sub_instance(allocation, removed)?;
    let kept: Vec<usize> = (0..instance.num_agents())
        .filter(|a| !removed.contains(a))
        .collect();
    if kept.is_empty() {
        return Ok(None);
    }
    let restricted = allocation.restrict(&kept);
    let profile = oracle_breakpoints(&rest)?;
    for (i, &a) in kept.iter().enumerate() {
        let got = rest.utility(&restricted, i);
        let want = rest.endowment(i).clone() * profile.breakpoint(i).clone();
        if !got.approx_eq(&want) {
            return Ok(Some(Witness {
                agents: vec![a],
                objects: Vec::new(),
                lhs: got,
                rhs: want,
                relation: "==",
                note: format!("restriction is not leximin after removing {removed:?}"),
            }));
        }
    }
    Ok(None)
}

/// Random-subset version of [`substructure_witness`] on the mechanism's allocation.
pub fn check_substructure<T: Scalar>(
    instance: &Instance<T>,
    trials: usize,
    seed: u64,
) -> Result<PropertyReport<T>, HarnessError> {
    let allocation = lexicographic_allocation(instance)?.allocation;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let removed: Vec<usize> = (0..instance.num_agents())
            .filter(|_| rng.gen_bool(0.5))
            .collect();
        if let Some(w) = substructure_witness(instance, &allocation, &removed)? {
            return Ok(PropertyReport::fail("substructure", trial + 1, w).with_seed(seed));
        }
    }
    Ok(PropertyReport::pass("substructure", trials).with_seed(seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Winner,
    Loser,
    Neutral,
}

/// A coalition misreport and its effect, measured with true demands.
#[derive(Debug, Clone, PartialEq)]
pub struct ManipulationReport<T> {
    pub coalition: Vec<usize>,
    /// Per coalition member, demand per object.
    pub true_demands: Vec<Vec<T>>,
    pub reported_demands: Vec<Vec<T>>,
    pub truthful_utilities: Vec<T>,
    pub misreport_utilities: Vec<T>,
    pub outcomes: Vec<Outcome>,
}

impl<T: Scalar> ManipulationReport<T> {
    /// At least one member strictly gains and none strictly loses.
    pub fn is_counterexample(&self) -> bool {
        self.outcomes.contains(&Outcome::Winner) && !self.outcomes.contains(&Outcome::Loser)
    }
}

/// Result of [`search_manipulation`], including coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct ManipulationSearch<T> {
    pub mechanism: &'static str,
    pub coalition_size: usize,
    pub counterexample: Option<ManipulationReport<T>>,
    /// Misreports evaluated.
    pub runs: usize,
    /// Misreports on which the mechanism failed to produce an allocation.
    pub skipped: usize,
    /// Size of the full misreport space (saturating).
    pub space: u128,
    /// Whether the whole space was covered.
    pub complete: bool,
    pub budget: usize,
}

impl<T: fmt::Display> fmt::Display for ManipulationSearch<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "mechanism {}: coalition size {}, {} misreports evaluated of {} ({}), {} skipped, budget {}",
            self.mechanism,
            self.coalition_size,
            self.runs,
            self.space,
            coverage(self.complete, self.counterexample.is_some()),
            self.skipped,
            self.budget
        )?;
        match &self.counterexample {
            None => write!(
                f,
                "no counterexample found; a finite grid search is evidence of group strategyproofness, not proof"
            ),
            Some(rep) => {
                write!(f, "counterexample: coalition {:?}", rep.coalition)?;
                for (i, a) in rep.coalition.iter().enumerate() {
                    write!(
                        f,
                        "\n  agent {a}: reported {:?} for true {:?}, utility {} -> {} ({:?})",
                        rep.reported_demands[i].iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                        rep.true_demands[i].iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                        rep.truthful_utilities[i],
                        rep.misreport_utilities[i],
                        rep.outcomes[i]
                    )?;
                }
                Ok(())
            }
        }
    }
}

/// Coverage label for reports.
pub fn coverage(complete: bool, found: bool) -> &'static str {
    match (complete, found) {
        (true, _) => "complete",
        (false, true) => "stopped at first counterexample",
        (false, false) => "partial, budget exhausted",
    }
}

/// Default multipliers {0, 1/2, 1, 2}.
pub fn default_grid<T: Scalar>() -> Vec<T> {
    [(0, 1), (1, 2), (1, 1), (2, 1)]
        .iter()
        .map(|&(n, d)| T::from_ratio(n, d))
        .collect()
}

/// Default cap on mechanism runs per search.
pub const DEFAULT_BUDGET: usize = 100_000;

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Candidate misreports for one demand entry: m·d for each multiplier plus
/// the absolute values 0 and s(b), without duplicates or the true value.
fn candidates<T: Scalar>(instance: &Instance<T>, a: usize, b: usize, grid: &[T]) -> Vec<T> {
    let truth = instance.demand(a, b);
    let mut out: Vec<T> = Vec::new();
    let pool = grid
        .iter()
        .map(|m| m.clone() * truth.clone())
        .chain([T::zero(), instance.supply(b).clone()]);
    for v in pool {
        if v != truth && !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

struct Entry<T> {
    agent: usize,
    object: usize,
    values: Vec<T>,
}

/// Searches coalitions of `coalition_size` agents for a demand misreport
/// that makes some member strictly better off (by true demands) while no
/// member is worse off.
///
/// Misreports change each coalition entry d(a, b) to a value from
/// [`candidates`]. They are enumerated deterministically by the number of
/// changed entries (all single-entry deviations of every coalition first),
/// stopping after `budget` mechanism runs.
pub fn search_manipulation<T: Scalar, M: Mechanism<T>>(
    instance: &Instance<T>,
    mechanism: &M,
    coalition_size: usize,
    grid: &[T],
    budget: usize,
) -> Result<ManipulationSearch<T>, HarnessError> {
    instance.ensure_valid()?;
    let n = instance.num_agents();
    if coalition_size == 0 {
        return Err(HarnessError::EmptyCoalition);
    }
    if coalition_size > n {
        return Err(HarnessError::CoalitionTooLarge {
            size: coalition_size,
            agents: n,
        });
    }
    if budget == 0 {
        return Err(HarnessError::ZeroBudget);
    }
    if grid.iter().any(|m| *m < T::zero()) {
        return Err(HarnessError::NegativeMultiplier);
    }
    let truthful = mechanism.allocate(instance)?;
    let base = utilities(instance, &truthful);
    let coalitions = combinations(n, coalition_size);
    let entries_of = |coalition: &[usize]| -> Vec<Entry<T>> {
        coalition
            .iter()
            .flat_map(|&a| {
                (0..instance.num_objects()).map(move |b| Entry {
                    agent: a,
                    object: b,
                    values: candidates(instance, a, b, grid),
                })
            })
            .filter(|e| !e.values.is_empty())
            .collect()
    };
    let mut space: u128 = 0;
    let mut widest = 0;
    for c in &coalitions {
        let entries = entries_of(c);
        widest = widest.max(entries.len());
        let size = entries
            .iter()
            .fold(1u128, |acc, e| acc.saturating_mul(e.values.len() as u128 + 1));
        space = space.saturating_add(size - 1);
    }

    let mut search = ManipulationSearch {
        mechanism: mechanism.name(),
        coalition_size,
        counterexample: None,
        runs: 0,
        skipped: 0,
        space,
        complete: false,
        budget,
    };
    for changed in 1..=widest {
        for coalition in &coalitions {
            let entries = entries_of(coalition);
            if entries.len() < changed {
                continue;
            }
            for chosen in combinations(entries.len(), changed) {
                let mut digits = vec![0usize; changed];
                loop {
                    if search.runs == budget {
                        return Ok(search);
                    }
                    search.runs += 1;
                    let mut report = instance.clone();
                    for (slot, &e) in chosen.iter().enumerate() {
                        let entry = &entries[e];
                        report.set_demand(entry.agent, entry.object, entry.values[digits[slot]].clone());
                    }
                    match mechanism.allocate(&report) {
                        Ok(alloc) => {
                            let found = classify(instance, &report, coalition, &base, &alloc);
                            if found.is_counterexample() && mechanism.certify(&report, &alloc) {
                                search.counterexample = Some(found);
                                return Ok(search);
                            }
                        }
                        Err(_) => search.skipped += 1,
                    }
                    // Advance the mixed-radix counter over the chosen entries.
                    let mut slot = 0;
                    while slot < changed {
                        digits[slot] += 1;
                        if digits[slot] < entries[chosen[slot]].values.len() {
                            break;
                        }
                        digits[slot] = 0;
                        slot += 1;
                    }
                    if slot == changed {
                        break;
                    }
                }
            }
        }
    }
    search.complete = true;
    Ok(search)
}

fn classify<T: Scalar>(
    truth: &Instance<T>,
    report: &Instance<T>,
    coalition: &[usize],
    base: &[T],
    allocation: &Allocation<T>,
) -> ManipulationReport<T> {
    let m = truth.num_objects();
    let row = |inst: &Instance<T>, a: usize| (0..m).map(|b| inst.demand(a, b)).collect::<Vec<_>>();
    let mut misreport_utilities = Vec::new();
    let mut outcomes = Vec::new();
    for &a in coalition {
        let u = truth.utility(allocation, a);
        outcomes.push(if u > base[a] {
            Outcome::Winner
        } else if u < base[a] {
            Outcome::Loser
        } else {
            Outcome::Neutral
        });
        misreport_utilities.push(u);
    }
    ManipulationReport {
        coalition: coalition.to_vec(),
        true_demands: coalition.iter().map(|&a| row(truth, a)).collect(),
        reported_demands: coalition.iter().map(|&a| row(report, a)).collect(),
        truthful_utilities: coalition.iter().map(|&a| base[a].clone()).collect(),
        misreport_utilities,
        outcomes,
    }
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
    fn rm_zero_increase_is_identity() {
        let inst = families::maximin_si_manipulation::<Rational>();
        let spec = PerturbationSpec {
            kind: PerturbationKind::SupplyIncrease,
            magnitudes: vec![r(0, 1)],
            seed: 1,
        };
        let rep = check_rm(&inst, &spec, 3).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.seed, Some(1));
    }

    #[test]
    fn rm_breakpoint_example() {
        let inst = families::breakpoint_example::<Rational>();
        let mut richer = inst.clone();
        richer.set_supply(0, r(6, 1));
        let before = lexicographic_allocation(&inst).unwrap();
        let after = lexicographic_allocation(&richer).unwrap();
        assert_eq!(utilities(&inst, &before.allocation), vec![r(1, 1), r(2, 1)]);
        assert_eq!(utilities(&richer, &after.allocation), vec![r(1, 1), r(5, 1)]);
        let spec = PerturbationSpec {
            kind: PerturbationKind::SupplyIncrease,
            magnitudes: vec![r(3, 1)],
            seed: 0,
        };
        assert!(check_rm(&inst, &spec, 1).unwrap().passed());
    }

    #[test]
    fn rm_rejects_wrong_kind() {
        let inst = families::maximin_si_manipulation::<Rational>();
        let spec = PerturbationSpec::new(PerturbationKind::AgentRemoval, 0);
        assert!(matches!(check_rm(&inst, &spec, 1), Err(HarnessError::WrongKind { .. })));
        let spec = PerturbationSpec::new(PerturbationKind::SupplyIncrease, 0);
        assert!(matches!(check_pm(&inst, &spec, 1), Err(HarnessError::WrongKind { .. })));
    }

    #[test]
    fn pm_removing_idle_agent_changes_nothing() {
        let mut inst = families::half_sharing::<Rational>(2);
        let mut with_idle = Instance::new(
            vec![("a1", r(1, 1)), ("a2", r(1, 1)), ("idle", r(3, 1))],
            vec![("b1", r(2, 1)), ("b2", r(2, 1))],
        );
        for a in 0..2 {
            for b in 0..2 {
                with_idle.set_demand(a, b, inst.demand(a, b));
            }
        }
        let full = utilities(&with_idle, &lexicographic_allocation(&with_idle).unwrap().allocation);
        let without = with_idle.retain_agents(|a| a != 2);
        let less = utilities(&without, &lexicographic_allocation(&without).unwrap().allocation);
        assert_eq!(&full[..2], &less[..]);
        inst.set_demand(0, 0, r(1, 1));
        assert!(check_pm(&with_idle, &PerturbationSpec::new(PerturbationKind::AgentRemoval, 4), 8)
            .unwrap()
            .passed());
    }

    #[test]
    fn pm_half_sharing_remove_second_agent() {
        let inst = families::half_sharing::<Rational>(2);
        let alone = inst.retain_agents(|a| a == 0);
        let out = lexicographic_allocation(&alone).unwrap();
        assert_eq!(alone.utility(&out.allocation, 0), r(2, 1));
        for kind in [PerturbationKind::AgentRemoval, PerturbationKind::EndowmentDecrease] {
            assert!(check_pm(&inst, &PerturbationSpec::new(kind, 9), 10).unwrap().passed());
        }
    }

    #[test]
    fn pm_rejects_bad_factors() {
        let inst = families::maximin_si_manipulation::<Rational>();
        let spec = PerturbationSpec {
            kind: PerturbationKind::EndowmentDecrease,
            magnitudes: vec![r(0, 1)],
            seed: 0,
        };
        assert!(matches!(check_pm(&inst, &spec, 1), Err(HarnessError::BadMagnitudes(_))));
    }

    #[test]
    fn substructure_examples() {
        let inst = families::breakpoint_example::<Rational>();
        let alloc = lexicographic_allocation(&inst).unwrap().allocation;
        assert_eq!(substructure_witness(&inst, &alloc, &[]).unwrap(), None);
        assert_eq!(substructure_witness(&inst, &alloc, &[0]).unwrap(), None);
        assert_eq!(substructure_witness(&inst, &alloc, &[0, 1]).unwrap(), None);
        let rest = inst.sub_instance(&alloc, &[0]).unwrap();
        assert_eq!(rest.utility(&alloc.restrict(&[1]), 0), r(2, 1));
        assert!(check_substructure(&inst, 5, 3).unwrap().passed());
    }

    #[test]
    fn substructure_detects_non_leximin_allocation() {
        let inst = families::breakpoint_example::<Rational>();
        // Feasible but not leximin: a2 takes everything.
        let alloc = Allocation::from_rows(vec![vec![r(0, 1)], vec![r(3, 1)]]);
        let w = substructure_witness(&inst, &alloc, &[]).unwrap().unwrap();
        assert!(w.is_violation());
    }

    #[test]
    fn identity_grid_finds_nothing() {
        let inst = families::maximin_si_manipulation::<Rational>();
        // With multiplier 1 only, the candidates are the absolute values {0, s(b)}.
        let out = search_manipulation(&inst, &Lmmf, 1, &[r(1, 1)], 1000).unwrap();
        assert!(out.counterexample.is_none());
        assert!(out.complete);
    }

    #[test]
    fn lmmf_resists_overstated_demand_misreport() {
        let truth = families::maximin_si_manipulation::<Rational>();
        let lie = crate::oracle::overstated_demand_misreport(&truth);
        let honest = lexicographic_allocation(&truth).unwrap().allocation;
        let gamed = lexicographic_allocation(&lie).unwrap().allocation;
        assert_eq!(truth.utility(&honest, 0), r(3, 1));
        assert_eq!(truth.utility(&gamed, 0), r(3, 1));
        let out = search_manipulation(&truth, &Lmmf, 1, &default_grid(), DEFAULT_BUDGET).unwrap();
        assert!(out.counterexample.is_none());
        assert!(out.complete);
        assert_eq!(out.runs as u128, out.space);
    }

    #[test]
    fn mmf_si_is_manipulable() {
        let truth = families::maximin_si_manipulation::<Rational>();
        let mech = MmfSi {
            resolution: r(1, 4),
        };
        let out = search_manipulation(&truth, &mech, 1, &default_grid(), DEFAULT_BUDGET).unwrap();
        let rep = out.counterexample.expect("MMF-SI should be manipulable");
        assert_eq!(rep.coalition, vec![0]);
        assert_eq!(rep.reported_demands[0], vec![r(3, 1), r(2, 1)]);
        assert_eq!(rep.truthful_utilities[0], r(3, 1));
        assert_eq!(rep.misreport_utilities[0], r(4, 1));
        assert_eq!(rep.outcomes, vec![Outcome::Winner]);
    }

    #[test]
    fn search_argument_errors() {
        let inst = families::maximin_si_manipulation::<Rational>();
        let g = default_grid::<Rational>();
        assert_eq!(
            search_manipulation(&inst, &Lmmf, 4, &g, 10).unwrap_err(),
            HarnessError::CoalitionTooLarge { size: 4, agents: 3 }
        );
        assert_eq!(search_manipulation(&inst, &Lmmf, 1, &g, 0).unwrap_err(), HarnessError::ZeroBudget);
        assert_eq!(
            search_manipulation(&inst, &Lmmf, 1, &[r(-1, 1)], 10).unwrap_err(),
            HarnessError::NegativeMultiplier
        );
    }

    #[test]
    fn budget_yields_partial_coverage() {
        let inst = families::maximin_si_manipulation::<Rational>();
        let out = search_manipulation(&inst, &Lmmf, 2, &default_grid(), 7).unwrap();
        assert_eq!(out.runs, 7);
        assert!(!out.complete);
        assert!(out.space > 7);
        assert!(out.to_string().contains("partial"));
    }

    #[test]
    fn candidate_values() {
        let inst = families::maximin_si_manipulation::<Rational>();
        let c = candidates(&inst, 0, 1, &default_grid());
        assert_eq!(c, vec![r(0, 1), r(1, 2), r(2, 1), r(6, 1)]);
        let zero = candidates(&inst, 1, 0, &default_grid());
        assert_eq!(zero, vec![r(6, 1)]);
    }

    #[test]
    fn combinations_enumerate_in_order() {
        assert_eq!(combinations(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(combinations(2, 0), vec![Vec::<usize>::new()]);
    }
}
