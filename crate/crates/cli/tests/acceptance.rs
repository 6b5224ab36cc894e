//! Acceptance suite. Prints one line per criterion and exits nonzero when a
//! criterion fails for any reason other than the documented Lorenz conflict.
//!
//! Run with `cargo test -p lmmf-cli --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use lmmf::families::{self, RandomParams};
use lmmf::harness::{
    check_pm, check_rm, check_substructure, default_grid, search_manipulation, HarnessError, Lmmf,
    PerturbationKind, PerturbationSpec,
};
use lmmf::oracle::{oracle_mmf_si, random_frugal_allocation, reproduce_impossibility, ImpossibilityFamily, ImpossibilityReport};
use lmmf::properties::{envy_report, is_frugal, is_nw, lorenz_witness, si_ratio};
use lmmf::{
    lexicographic_allocation, oracle_breakpoints, structure_check, Allocation, Instance, Rational, Scalar,
};
use lmmf_cli::{cmd_allocate, serialize_instance};

const CORPUS_SEED: u64 = 20_240_601;
const CORPUS_SIZE: usize = 500;
const LORENZ_SAMPLES: u64 = 1000;
const GSP_INSTANCES: usize = 100;
/// Mechanism runs per instance and coalition size. The full grid for a pair
/// of agents with six objects has billions of points, so the search covers
/// every single-entry deviation first and then as many two-entry ones as fit.
const GSP_BUDGET: usize = 1000;

fn r(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

struct Line {
    id: u32,
    name: &'static str,
    passed: bool,
    detail: String,
    elapsed: Duration,
    /// A failure explained by a documented conflict in the source claims.
    known: bool,
}

fn run(id: u32, name: &'static str, f: impl FnOnce() -> (bool, String)) -> Line {
    let start = Instant::now();
    let (passed, detail) = f();
    Line {
        id,
        name,
        passed,
        detail,
        elapsed: start.elapsed(),
        known: false,
    }
}

fn sum(xs: &[Rational]) -> Rational {
    xs.iter().fold(r(0, 1), |a, x| a + x.clone())
}

fn guarantee_suite(inst: &Instance<Rational>, alloc: &Allocation<Rational>) -> Option<String> {
    if let Some(w) = is_frugal(inst, alloc).witness {
        return Some(format!("frugal: {w}"));
    }
    match is_nw(inst, alloc) {
        Ok(rep) if rep.passed() => {}
        Ok(rep) => return Some(format!("nw: {}", rep.witness.unwrap())),
        Err(e) => return Some(format!("nw: {e}")),
    }
    if let Some(w) = envy_report(inst, alloc).witness {
        return Some(format!("ef: {w}"));
    }
    if !si_ratio(inst, alloc).satisfies(&r(1, 2)) {
        return Some("si: ratio below 1/2".into());
    }
    None
}

fn lorenz_failures(corpus: &[Instance<Rational>]) -> Vec<usize> {
    let mut bad = Vec::new();
    for (i, inst) in corpus.iter().enumerate() {
        let out = lexicographic_allocation(inst).unwrap();
        let mine = inst.utility_vector(&out.allocation);
        for k in 0..LORENZ_SAMPLES {
            let other = random_frugal_allocation(inst, CORPUS_SEED ^ (i as u64) << 20 ^ k);
            if lorenz_witness(&mine, &inst.utility_vector(&other)).unwrap().is_some() {
                bad.push(i);
                break;
            }
        }
    }
    bad
}

fn main() -> ExitCode {
    let corpus: Vec<Instance<Rational>> = families::corpus(CORPUS_SIZE, CORPUS_SEED, 8, 6, 8);
    let solved: Vec<_> = corpus.iter().map(|i| lexicographic_allocation(i).unwrap()).collect();
    let mut lines = Vec::new();

    lines.push(run(1, "oracle equivalence", || {
        for (i, (inst, out)) in corpus.iter().zip(&solved).enumerate() {
            let oracle = oracle_breakpoints(inst).unwrap();
            let p = &out.profile;
            let same = p.lambdas() == oracle.lambdas()
                && p.per_agent() == oracle.per_agent()
                && (0..p.k()).all(|t| p.tier_agents(t) == oracle.tier_agents(t) && p.tier_objects(t) == oracle.tier_objects(t));
            if !same {
                return (false, format!("instance {i} differs from the oracle"));
            }
        }
        (true, format!("{} instances, exact", corpus.len()))
    }));

    lines.push(run(2, "utility identity and flow value", || {
        for (i, (inst, out)) in corpus.iter().zip(&solved).enumerate() {
            for a in 0..inst.num_agents() {
                if inst.utility(&out.allocation, a) != inst.endowment(a).clone() * out.profile.breakpoint(a).clone() {
                    return (false, format!("instance {i}, agent {a}"));
                }
            }
            if out.flow_value != sum(&inst.capped_supply()) {
                return (false, format!("instance {i}: flow value"));
            }
        }
        (true, format!("{} instances, exact", corpus.len()))
    }));

    lines.push(run(3, "frugal, NW, EF, 1/2-SI", || {
        for (i, (inst, out)) in corpus.iter().zip(&solved).enumerate() {
            if let Some(why) = guarantee_suite(inst, &out.allocation) {
                return (false, format!("instance {i}: {why}"));
            }
        }
        (true, format!("{} instances, zero violations", corpus.len()))
    }));

    let mut lorenz = run(4, "Lorenz dominance", || {
        let bad = lorenz_failures(&corpus);
        if bad.is_empty() {
            return (true, format!("{} instances x {LORENZ_SAMPLES} samples", corpus.len()));
        }
        (
            false,
            format!("{} of {} instances have a sample the mechanism does not Lorenz-dominate", bad.len(), corpus.len()),
        )
    });
    if !lorenz.passed {
        // Expected with unequal endowments: the normalized total differs
        // across maximum flows. Confirm the failure is exactly that.
        let bad = lorenz_failures(&corpus);
        let all_unequal = bad
            .iter()
            .all(|&i| corpus[i].endowments().windows(2).any(|w| w[0] != w[1]));
        let equalized: Vec<Instance<Rational>> = corpus
            .iter()
            .map(|inst| {
                let mut inst = inst.clone();
                for a in 0..inst.num_agents() {
                    inst.set_endowment(a, r(1, 1));
                }
                inst
            })
            .collect();
        let equal_bad = lorenz_failures(&equalized);
        lorenz.known = all_unequal && equal_bad.is_empty();
        lorenz.detail = format!(
            "{}; all failing instances have unequal endowments: {}; equal-endowment corpus: {} failures",
            lorenz.detail,
            if all_unequal { "yes" } else { "no" },
            equal_bad.len()
        );
    }
    lines.push(lorenz);

    lines.push(run(5, "structural identities", || {
        for (i, (inst, out)) in corpus.iter().zip(&solved).enumerate() {
            if let Err(v) = structure_check(inst, &out.allocation, &out.profile) {
                return (false, format!("instance {i}: {v}"));
            }
        }
        (true, format!("{} instances, every tier", corpus.len()))
    }));

    lines.push(run(6, "resource and population monotonicity", || {
        for (i, inst) in corpus.iter().enumerate() {
            let seed = CORPUS_SEED + i as u64;
            let rm = check_rm(inst, &PerturbationSpec::new(PerturbationKind::SupplyIncrease, seed), 10).unwrap();
            if !rm.passed() {
                return (false, format!("instance {i}: {rm}"));
            }
            for kind in [PerturbationKind::EndowmentDecrease, PerturbationKind::AgentRemoval] {
                let pm = check_pm(inst, &PerturbationSpec::new(kind, seed), 5).unwrap();
                if !pm.passed() {
                    return (false, format!("instance {i}: {pm}"));
                }
            }
        }
        (true, format!("{} instances, 10 supply increases and 10 shrinks each", corpus.len()))
    }));

    lines.push(run(7, "optimal substructure", || {
        for (i, inst) in corpus.iter().enumerate() {
            let rep = check_substructure(inst, 5, CORPUS_SEED + i as u64).unwrap();
            if !rep.passed() {
                return (false, format!("instance {i}: {rep}"));
            }
        }
        (true, format!("{} instances, 5 subsets each", corpus.len()))
    }));

    lines.push(run(8, "coalition manipulation search", || {
        let grid = default_grid::<Rational>();
        let (mut runs, mut complete, mut searches) = (0usize, 0usize, 0usize);
        for (i, inst) in corpus.iter().take(GSP_INSTANCES).enumerate() {
            for k in [1, 2] {
                match search_manipulation(inst, &Lmmf, k, &grid, GSP_BUDGET) {
                    Ok(s) => {
                        if let Some(rep) = s.counterexample {
                            return (false, format!("instance {i}, coalition {:?}", rep.coalition));
                        }
                        runs += s.runs;
                        searches += 1;
                        complete += s.complete as usize;
                    }
                    Err(HarnessError::CoalitionTooLarge { .. }) => {}
                    Err(e) => return (false, format!("instance {i}: {e}")),
                }
            }
        }
        (
            true,
            format!(
                "no counterexample in {searches} searches ({runs} misreports, {complete} complete, budget {GSP_BUDGET}); evidence of group strategyproofness, not proof"
            ),
        )
    }));

    lines.push(run(9, "reproduced exact values", || {
        for n in [3usize, 5] {
            let inst = families::contribution_rounds::<Rational>(n);
            let out = lexicographic_allocation(&inst).unwrap();
            let want = Rational::from_usize(n);
            if (0..n).any(|a| inst.utility(&out.allocation, a) != want) {
                return (false, format!("contribution rounds n={n}: utilities differ from {n}"));
            }
        }
        for (n, num, den) in [(2usize, 3, 4), (10, 11, 20), (100, 101, 200)] {
            match reproduce_impossibility::<Rational>(ImpossibilityFamily::HalfSharing { n }) {
                Ok(ImpossibilityReport::HalfSharing { ratio, .. }) if ratio == r(num, den) => {}
                other => return (false, format!("half-sharing n={n}: {other:?}")),
            }
        }
        let truth = families::maximin_si_manipulation::<Rational>();
        let lie = lmmf::oracle::overstated_demand_misreport(&truth);
        let res = r(1, 4);
        let honest = oracle_mmf_si(&truth, &res).unwrap();
        let gamed = oracle_mmf_si(&lie, &res).unwrap();
        let m_honest = lexicographic_allocation(&truth).unwrap();
        let m_gamed = lexicographic_allocation(&lie).unwrap();
        let values = (
            truth.utility(&honest.allocation, 0),
            truth.utility(&gamed.allocation, 0),
            truth.utility(&m_honest.allocation, 0),
            truth.utility(&m_gamed.allocation, 0),
        );
        if values != (r(3, 1), r(4, 1), r(3, 1), r(3, 1)) {
            return (false, format!("MMF-SI manipulation values {values:?}"));
        }
        (true, "contribution rounds n=3,5: utility n; SI ratios 3/4, 11/20, 101/200; MMF-SI 3 -> 4, mechanism 3 -> 3".into())
    }));

    lines.push(run(10, "50 x 50 scale", || {
        let params = RandomParams {
            agents: 50,
            objects: 50,
            density: 1.0,
            max_denominator: 8,
            max_value: 6,
        };
        let inst: Instance<Rational> = families::random(&params, CORPUS_SEED);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scale.json");
        std::fs::write(&path, serialize_instance(&inst)).unwrap();
        let start = Instant::now();
        let report = cmd_allocate(&path).unwrap();
        let took = start.elapsed();
        if took >= Duration::from_secs(10) {
            return (false, format!("allocate took {took:.2?}"));
        }
        // Rebuild the allocation from the report and check it independently.
        let rows = report.agents.iter().map(|a| a.allocation.iter().map(|x| x.0.clone()).collect()).collect();
        let alloc = Allocation::from_rows(rows);
        for (a, row) in report.agents.iter().enumerate() {
            if inst.utility(&alloc, a) != row.utility.0 || row.utility.0 != inst.endowment(a).clone() * row.breakpoint.0.clone() {
                return (false, format!("agent {a}: utility identity"));
            }
        }
        if report.flow_value.0 != sum(&inst.capped_supply()) {
            return (false, "flow value".into());
        }
        if let Some(why) = guarantee_suite(&inst, &alloc) {
            return (false, why);
        }
        (true, format!("allocate in {took:.2?}, criteria 2-3 hold on the output"))
    }));

    let mut failed = false;
    for l in &lines {
        let status = match (l.passed, l.known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known conflict)",
            (false, false) => "FAIL",
        };
        println!("criterion {:>2} {:<38} {status}  [{:.1?}] {}", l.id, l.name, l.elapsed, l.detail);
        failed |= !l.passed && !l.known;
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
