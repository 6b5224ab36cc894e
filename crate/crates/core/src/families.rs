//! Instance generators: the worked families used throughout the docs and
//! tests, plus seeded random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::Instance;
use crate::scalar::Scalar;

fn int<T: Scalar>(n: i64) -> T {
    T::from_ratio(n, 1)
}

fn agent_ids(n: usize) -> impl Iterator<Item = String> {
    (1..=n).map(|i| format!("a{i}"))
}

fn object_ids(n: usize) -> impl Iterator<Item = String> {
    (1..=n).map(|i| format!("b{i}"))
}

/// n unit-endowment agents, two objects of supply n. Agent 1 demands one unit
/// of each object; everyone else demands two units of the first object only.
pub fn half_sharing<T: Scalar>(n: usize) -> Instance<T> {
    assert!(n >= 2, "half-sharing family needs n >= 2");
    let supply = int::<T>(n as i64);
    let mut inst = Instance::new(
        agent_ids(n).map(|a| (a, T::one())).collect(),
        object_ids(2).map(|b| (b, supply.clone())).collect(),
    );
    inst.set_demand(0, 0, T::one());
    inst.set_demand(0, 1, T::one());
    for a in 1..n {
        inst.set_demand(a, 0, int(2));
    }
    inst
}

/// Three unit-endowment agents, two objects of supply 6; demands (3, 1),
/// (0, 3), (0, 3).
pub fn maximin_si_manipulation<T: Scalar>() -> Instance<T> {
    Instance::from_dense(
        agent_ids(3).map(|a| (a, T::one())).collect(),
        object_ids(2).map(|b| (b, int::<T>(6))).collect(),
        vec![
            vec![int(3), int(1)],
            vec![int(0), int(3)],
            vec![int(0), int(3)],
        ],
    )
}

/// n agents sharing n rounds, each contributing one unit per round. Agent 1
/// wants n units in the first round only; the others want two units every round.
pub fn contribution_rounds<T: Scalar>(n: usize) -> Instance<T> {
    assert!(n >= 2, "contribution-rounds family needs n >= 2");
    let mut inst = Instance::new(
        agent_ids(n).map(|a| (a, T::one())).collect(),
        object_ids(n).map(|b| (b, int::<T>(n as i64))).collect(),
    );
    inst.set_demand(0, 0, int(n as i64));
    for a in 1..n {
        for b in 0..n {
            inst.set_demand(a, b, int(2));
        }
    }
    inst
}

/// Two unit-endowment agents and one object of supply 3, demanded 1 and 5.
/// Breakpoints are 1 and 2.
pub fn breakpoint_example<T: Scalar>() -> Instance<T> {
    Instance::from_dense(
        vec![("a1", T::one()), ("a2", T::one())],
        vec![("b1", int::<T>(3))],
        vec![vec![int(1)], vec![int(5)]],
    )
}

/// Parameters for [`random`].
#[derive(Debug, Clone, PartialEq)]
pub struct RandomParams {
    pub agents: usize,
    pub objects: usize,
    /// Probability that a demand entry is nonzero.
    pub density: f64,
    /// Denominators are drawn from `1..=max_denominator`.
    pub max_denominator: u32,
    /// Numerators are bounded so every value lies in `[0, max_value]`.
    pub max_value: u32,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            agents: 4,
            objects: 3,
            density: 0.7,
            max_denominator: 8,
            max_value: 6,
        }
    }
}

fn random_value<T: Scalar>(rng: &mut impl Rng, params: &RandomParams, positive: bool) -> T {
    let den = rng.gen_range(1..=params.max_denominator.max(1)) as i64;
    let lo = if positive { 1 } else { 0 };
    let hi = (params.max_value.max(1) as i64) * den;
    let num = rng.gen_range(lo..=hi);
    T::from_ratio(num, den)
}

/// Seeded random instance. Endowments are strictly positive; supplies and
/// demands are nonnegative rationals.
pub fn random<T: Scalar>(params: &RandomParams, seed: u64) -> Instance<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_with(params, &mut rng)
}

pub fn random_with<T: Scalar>(params: &RandomParams, rng: &mut impl Rng) -> Instance<T> {
    let agents: Vec<(String, T)> = agent_ids(params.agents)
        .map(|a| (a, random_value(rng, params, true)))
        .collect();
    let objects: Vec<(String, T)> = object_ids(params.objects)
        .map(|b| (b, random_value(rng, params, false)))
        .collect();
    let mut inst = Instance::new(agents, objects);
    for a in 0..params.agents {
        for b in 0..params.objects {
            if rng.gen_bool(params.density.clamp(0.0, 1.0)) {
                let d = random_value(rng, params, false);
                inst.set_demand(a, b, d);
            }
        }
    }
    inst
}

/// A seeded corpus of `count` random instances with 1..=max_agents agents
/// and 1..=max_objects objects, denominators at most `max_denominator`.
pub fn corpus<T: Scalar>(
    count: usize,
    seed: u64,
    max_agents: usize,
    max_objects: usize,
    max_denominator: u32,
) -> Vec<Instance<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let params = RandomParams {
                agents: rng.gen_range(1..=max_agents),
                objects: rng.gen_range(1..=max_objects),
                density: rng.gen_range(0.3..=1.0),
                max_denominator,
                max_value: rng.gen_range(1..=6),
            };
            random_with(&params, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn half_sharing_shape() {
        let inst = half_sharing::<Rational>(4);
        assert_eq!(inst.num_agents(), 4);
        assert_eq!(inst.supply(1), &Rational::from_ratio(4, 1));
        assert_eq!(inst.demand(3, 0), Rational::from_ratio(2, 1));
        assert_eq!(inst.demand(3, 1), Rational::from_ratio(0, 1));
    }

    #[test]
    fn contribution_rounds_shape() {
        let inst = contribution_rounds::<Rational>(3);
        assert_eq!(inst.num_objects(), 3);
        assert_eq!(inst.demand(0, 0), Rational::from_ratio(3, 1));
        assert_eq!(inst.demand(0, 2), Rational::from_ratio(0, 1));
        assert_eq!(inst.demand(2, 2), Rational::from_ratio(2, 1));
    }

    #[test]
    fn random_is_deterministic_and_valid() {
        let p = RandomParams::default();
        let x = random::<Rational>(&p, 7);
        assert_eq!(x, random::<Rational>(&p, 7));
        assert!(x.validate().is_valid());
        for inst in corpus::<Rational>(50, 3, 8, 6, 8) {
            assert!(inst.validate().is_valid());
            assert!(inst.num_agents() >= 1 && inst.num_agents() <= 8);
            assert!(inst.num_objects() >= 1 && inst.num_objects() <= 6);
        }
    }
}
