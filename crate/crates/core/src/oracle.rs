//! Brute-force references for validating the flow-based solver.
//!
//! Nothing here calls into the max-flow engine: breakpoints come from
//! enumerating every agent subset, and the MMF-SI reference searches a
//! rational grid of allocations.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::families;
use crate::instance::{Allocation, Instance, InstanceError};
use crate::leximin::{lexicographic_allocation, BreakpointProfile, SolveError};
use crate::properties::si_ratio;
use crate::scalar::Scalar;

/// Largest agent count [`oracle_breakpoints`] will enumerate.
pub const MAX_ORACLE_AGENTS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{what} has {got} entries, oracle limit is {limit}")]
    TooLarge {
        what: &'static str,
        got: usize,
        limit: usize,
    },
    #[error("no SI-feasible allocation on the grid at this resolution")]
    Infeasible,
    #[error("grid resolution must be positive")]
    BadResolution,
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Breakpoint profile by exhaustive subset enumeration. Each tier takes the
/// minimum of C_i(S)/e(S) over all nonempty subsets S of the remaining agents
/// and the union of every subset attaining it.
pub fn oracle_breakpoints<T: Scalar>(instance: &Instance<T>) -> Result<BreakpointProfile<T>, OracleError> {
    instance.ensure_valid()?;
    let n = instance.num_agents();
    let m = instance.num_objects();
    if n > MAX_ORACLE_AGENTS {
        return Err(OracleError::TooLarge {
            what: "agent set",
            got: n,
            limit: MAX_ORACLE_AGENTS,
        });
    }
    let capped: Vec<T> = (0..m)
        .map(|b| {
            let total = (0..n).fold(T::zero(), |acc, a| acc + instance.demand(a, b));
            T::min_of(instance.supply(b), &total)
        })
        .collect();

    let mut frozen: Vec<usize> = Vec::new();
    let mut exhausted = vec![false; m];
    let mut lambdas = Vec::new();
    let mut agent_tiers = Vec::new();
    let mut object_tiers = Vec::new();
    let mut residual_caps = Vec::new();

    while frozen.len() < n {
        let remaining: Vec<usize> = (0..n).filter(|a| !frozen.contains(a)).collect();
        let live: Vec<usize> = (0..m).filter(|&b| !exhausted[b]).collect();
        let caps: Vec<T> = live
            .iter()
            .map(|&b| {
                let used = frozen
                    .iter()
                    .fold(T::zero(), |acc, &a| acc + instance.demand(a, b));
                capped[b].clone() - used
            })
            .collect();

        // Column sums d(S, b) and e(S) for every subset, built from the lowest set bit.
        let r = remaining.len();
        let subsets = 1usize << r;
        let mut cols: Vec<Vec<T>> = vec![vec![T::zero(); live.len()]; subsets];
        let mut endow: Vec<T> = vec![T::zero(); subsets];
        let mut best: Option<T> = None;
        let mut ratios: Vec<Option<T>> = vec![None; subsets];
        for mask in 1..subsets {
            let bit = mask.trailing_zeros() as usize;
            let rest = mask & (mask - 1);
            let a = remaining[bit];
            cols[mask] = cols[rest]
                .iter()
                .zip(&live)
                .map(|(c, &b)| c.clone() + instance.demand(a, b))
                .collect();
            endow[mask] = endow[rest].clone() + instance.endowment(a).clone();
            let capacity = cols[mask]
                .iter()
                .zip(&caps)
                .fold(T::zero(), |acc, (d, c)| acc + T::min_of(c, d));
            let ratio = capacity / endow[mask].clone();
            if best.as_ref().is_none_or(|b| ratio < *b) {
                best = Some(ratio.clone());
            }
            ratios[mask] = Some(ratio);
        }
        let lambda = best.expect("at least one remaining agent");
        let tight = (1..subsets)
            .filter(|&mask| ratios[mask].as_ref().is_some_and(|x| x.approx_eq(&lambda)))
            .fold(0usize, |acc, mask| acc | mask);
        let tier: Vec<usize> = (0..r)
            .filter(|i| tight & (1 << i) != 0)
            .map(|i| remaining[i])
            .collect();

        let new_objects: Vec<usize> = live
            .iter()
            .zip(&caps)
            .filter(|(&b, c)| {
                let d = tier
                    .iter()
                    .fold(T::zero(), |acc, &a| acc + instance.demand(a, b));
                d > **c
            })
            .map(|(&b, _)| b)
            .collect();
        for &b in &new_objects {
            exhausted[b] = true;
        }
        residual_caps.push(live.iter().copied().zip(caps).collect());
        frozen.extend(&tier);
        lambdas.push(lambda);
        agent_tiers.push(tier);
        object_tiers.push(new_objects);
    }
    Ok(BreakpointProfile::from_parts(
        n,
        lambdas,
        agent_tiers,
        object_tiers,
        residual_caps,
    ))
}

/// Seeded feasible frugal allocation: pairs are visited in random order and
/// each receives a random fraction of min(remaining supply, demand).
pub fn random_frugal_allocation<T: Scalar>(instance: &Instance<T>, seed: u64) -> Allocation<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_frugal_allocation(instance, &mut rng, None)
}

/// Like [`random_frugal_allocation`]; a fixed `fraction` replaces the random one.
pub fn sample_frugal_allocation<T: Scalar>(
    instance: &Instance<T>,
    rng: &mut impl Rng,
    fraction: Option<T>,
) -> Allocation<T> {
    let mut pairs: Vec<(usize, usize)> = (0..instance.num_agents())
        .flat_map(|a| instance.demand_row(a).iter().map(move |(b, _)| (a, *b)))
        .collect();
    pairs.shuffle(rng);
    let mut left: Vec<T> = instance.supplies().to_vec();
    let mut alloc = Allocation::zeros(instance.num_agents(), instance.num_objects());
    for (a, b) in pairs {
        let room = T::min_of(&left[b], &instance.demand(a, b));
        let share = match &fraction {
            Some(f) => f.clone(),
            None if rng.gen_bool(0.5) => T::one(),
            None => {
                let q = rng.gen_range(1..=8i64);
                T::from_ratio(rng.gen_range(0..=q), q)
            }
        };
        let amount = room * share;
        left[b] = left[b].clone() - amount.clone();
        alloc.set(a, b, amount);
    }
    alloc
}

/// Result of [`oracle_mmf_si`].
#[derive(Debug, Clone, PartialEq)]
pub struct MmfSiOutcome<T> {
    pub allocation: Allocation<T>,
    /// min_a u(a)/e(a) of `allocation`.
    pub min_normalized_utility: T,
    /// Grid points satisfying supply and SI constraints.
    pub feasible_points: usize,
}

/// Maximin allocation subject to every agent receiving at least its sharing
/// incentive utility Σ_b min(e(a)/e(A)·s(b), d(a, b)), by grid search over
/// frugal allocations with step `resolution`. Ties keep the first grid point
/// found in enumeration order.
pub fn oracle_mmf_si<T: Scalar>(instance: &Instance<T>, resolution: &T) -> Result<MmfSiOutcome<T>, OracleError> {
    instance.ensure_valid()?;
    if instance.num_agents() > 3 {
        return Err(OracleError::TooLarge {
            what: "agent set",
            got: instance.num_agents(),
            limit: 3,
        });
    }
    if instance.num_objects() > 2 {
        return Err(OracleError::TooLarge {
            what: "object set",
            got: instance.num_objects(),
            limit: 2,
        });
    }
    if *resolution <= T::zero() {
        return Err(OracleError::BadResolution);
    }
    let cells: Vec<(usize, usize, Vec<T>)> = (0..instance.num_agents())
        .flat_map(|a| {
            instance.demand_row(a).iter().map(move |(b, d)| {
                let mut values = Vec::new();
                let mut x = T::zero();
                while x < *d {
                    values.push(x.clone());
                    x = x + resolution.clone();
                }
                values.push(d.clone());
                (a, *b, values)
            })
        })
        .collect();
    let shares = sharing_shares(instance);
    let mut search = GridSearch {
        instance,
        cells: &cells,
        shares: &shares,
        current: Allocation::zeros(instance.num_agents(), instance.num_objects()),
        used: vec![T::zero(); instance.num_objects()],
        best: None,
        feasible: 0,
    };
    search.walk(0);
    let feasible_points = search.feasible;
    let (allocation, min_normalized_utility) = search.best.ok_or(OracleError::Infeasible)?;
    Ok(MmfSiOutcome {
        allocation,
        min_normalized_utility,
        feasible_points,
    })
}

fn sharing_shares<T: Scalar>(instance: &Instance<T>) -> Vec<T> {
    let total = instance.endowment_of(&(0..instance.num_agents()).collect::<Vec<_>>());
    (0..instance.num_agents())
        .map(|a| {
            let frac = instance.endowment(a).clone() / total.clone();
            (0..instance.num_objects()).fold(T::zero(), |acc, b| {
                acc + T::min_of(&(frac.clone() * instance.supply(b).clone()), &instance.demand(a, b))
            })
        })
        .collect()
}

struct GridSearch<'a, T> {
    instance: &'a Instance<T>,
    cells: &'a [(usize, usize, Vec<T>)],
    shares: &'a [T],
    current: Allocation<T>,
    used: Vec<T>,
    best: Option<(Allocation<T>, T)>,
    feasible: usize,
}

impl<T: Scalar> GridSearch<'_, T> {
    fn walk(&mut self, depth: usize) {
        if depth == self.cells.len() {
            self.score();
            return;
        }
        let (a, b, ref values) = self.cells[depth];
        for v in values {
            let total = self.used[b].clone() + v.clone();
            if total > *self.instance.supply(b) {
                break;
            }
            let prev = std::mem::replace(&mut self.used[b], total);
            self.current.set(a, b, v.clone());
            self.walk(depth + 1);
            self.used[b] = prev;
        }
        self.current.set(a, b, T::zero());
    }

    fn score(&mut self) {
        let inst = self.instance;
        let mut worst: Option<T> = None;
        for a in 0..inst.num_agents() {
            let u = inst.utility(&self.current, a);
            if u < self.shares[a] {
                return;
            }
            let x = u / inst.endowment(a).clone();
            if worst.as_ref().is_none_or(|w| x < *w) {
                worst = Some(x);
            }
        }
        self.feasible += 1;
        let worst = worst.unwrap_or_else(T::zero);
        if self.best.as_ref().is_none_or(|(_, v)| worst > *v) {
            self.best = Some((self.current.clone(), worst));
        }
    }
}

/// Which impossibility construction to reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpossibilityFamily {
    /// n-agent family on which any maximin mechanism is at most ½(1 + 1/n)-SI.
    HalfSharing { n: usize },
    /// Three-agent instance on which MMF-SI rewards a demand misreport.
    MmfSiManipulation,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ImpossibilityReport<T> {
    HalfSharing {
        n: usize,
        /// SI ratio achieved by the mechanism.
        ratio: T,
        /// (1 + 1/n) / 2.
        bound: T,
    },
    MmfSiManipulation {
        truthful_utility: T,
        misreport_true_utility: T,
        mechanism_truthful_utility: T,
        mechanism_misreport_true_utility: T,
    },
}

impl<T: Scalar> ImpossibilityReport<T> {
    /// Whether the report exhibits the expected phenomenon.
    pub fn demonstrated(&self) -> bool {
        match self {
            ImpossibilityReport::HalfSharing { ratio, bound, .. } => ratio.approx_eq(bound),
            ImpossibilityReport::MmfSiManipulation {
                truthful_utility,
                misreport_true_utility,
                mechanism_truthful_utility,
                mechanism_misreport_true_utility,
            } => {
                misreport_true_utility > truthful_utility
                    && mechanism_misreport_true_utility <= mechanism_truthful_utility
            }
        }
    }
}

/// Default grid step for the MMF-SI reference.
pub fn default_resolution<T: Scalar>() -> T {
    T::from_ratio(1, 4)
}

pub fn reproduce_impossibility<T: Scalar>(family: ImpossibilityFamily) -> Result<ImpossibilityReport<T>, OracleError> {
    match family {
        ImpossibilityFamily::HalfSharing { n } => {
            let inst = families::half_sharing::<T>(n);
            let out = lexicographic_allocation(&inst)?;
            let ratio = si_ratio(&inst, &out.allocation)
                .ratio
                .expect("half-sharing family has positive sharing shares");
            let bound = (T::one() + T::one() / T::from_usize(n)) / T::from_ratio(2, 1);
            Ok(ImpossibilityReport::HalfSharing { n, ratio, bound })
        }
        ImpossibilityFamily::MmfSiManipulation => {
            let truth = families::maximin_si_manipulation::<T>();
            let lie = overstated_demand_misreport(&truth);
            let res = default_resolution::<T>();
            let honest = oracle_mmf_si(&truth, &res)?;
            let gamed = oracle_mmf_si(&lie, &res)?;
            let m_honest = lexicographic_allocation(&truth)?;
            let m_gamed = lexicographic_allocation(&lie)?;
            Ok(ImpossibilityReport::MmfSiManipulation {
                truthful_utility: truth.utility(&honest.allocation, 0),
                misreport_true_utility: truth.utility(&gamed.allocation, 0),
                mechanism_truthful_utility: truth.utility(&m_honest.allocation, 0),
                mechanism_misreport_true_utility: truth.utility(&m_gamed.allocation, 0),
            })
        }
    }
}

/// Agent 1 of the three-agent instance overstates its demand for the second
/// object from 1 to 2.
pub fn overstated_demand_misreport<T: Scalar>(truth: &Instance<T>) -> Instance<T> {
    let mut lie = truth.clone();
    lie.set_demand(0, 1, T::from_ratio(2, 1));
    lie
}
