use std::fmt::Write as _;
use std::path::Path;

use lmmf::families::{self, RandomParams};
use lmmf::harness::{search_manipulation, substructure_witness, Lmmf, ManipulationSearch, MmfSi, Outcome};
use lmmf::oracle::{sample_frugal_allocation, MAX_ORACLE_AGENTS};
use lmmf::properties::{envy_report, is_frugal, is_nw, lorenz_witness, si_ratio};
use lmmf::{
    lexicographic_allocation, structure_check, Allocation, BreakpointProfile, Instance, Rational,
    Scalar,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::format::{parse_rational, read_instance, serialize_instance};
use crate::report::{build_report, AllocationReport};
use crate::CliError;

/// Runs the mechanism on the instance at `path`.
pub fn cmd_allocate(path: &Path) -> Result<AllocationReport, CliError> {
    let instance = read_instance(path)?;
    let result = lexicographic_allocation(&instance)?;
    build_report(&instance, &result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    Frugal,
    Nw,
    Ef,
    Si,
    Lorenz,
    Structure,
    Substructure,
}

impl Property {
    pub const ALL: [Property; 7] = [
        Property::Frugal,
        Property::Nw,
        Property::Ef,
        Property::Si,
        Property::Lorenz,
        Property::Structure,
        Property::Substructure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Frugal => "frugal",
            Property::Nw => "nw",
            Property::Ef => "ef",
            Property::Si => "si",
            Property::Lorenz => "lorenz",
            Property::Structure => "structure",
            Property::Substructure => "substructure",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AuditOptions {
    pub properties: Vec<Property>,
    /// Random frugal allocations compared against for Lorenz dominance.
    pub samples: usize,
    /// Random agent subsets removed for the substructure check.
    pub subsets: usize,
    pub seed: u64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            properties: Property::ALL.to_vec(),
            samples: 1000,
            subsets: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditEntry {
    pub property: Property,
    pub status: AuditStatus,
    pub checks: usize,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub seed: u64,
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    /// No selected property failed (skipped ones do not count).
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.status != AuditStatus::Fail)
    }

    pub fn entry(&self, property: Property) -> Option<&AuditEntry> {
        self.entries.iter().find(|e| e.property == property)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let status = match e.status {
                AuditStatus::Pass => "pass",
                AuditStatus::Fail => "FAIL",
                AuditStatus::Skipped => "skipped",
            };
            write!(out, "{}: {status} ({} checks)", e.property.name(), e.checks).unwrap();
            if let Some(d) = &e.detail {
                write!(out, ": {d}").unwrap();
            }
            out.push('\n');
        }
        writeln!(out, "seed: {}", self.seed).unwrap();
        out
    }
}

fn entry(property: Property, checks: usize, failure: Option<String>) -> AuditEntry {
    AuditEntry {
        property,
        status: if failure.is_some() {
            AuditStatus::Fail
        } else {
            AuditStatus::Pass
        },
        checks,
        detail: failure,
    }
}

fn skipped(property: Property, why: &str) -> AuditEntry {
    AuditEntry {
        property,
        status: AuditStatus::Skipped,
        checks: 0,
        detail: Some(why.to_string()),
    }
}

/// Runs the selected checks against a given allocation and profile. Exposed
/// separately from [`cmd_audit`] so a deliberately corrupted allocation can be
/// audited.
pub fn audit(
    instance: &Instance<Rational>,
    allocation: &Allocation<Rational>,
    profile: &BreakpointProfile<Rational>,
    options: &AuditOptions,
) -> Result<AuditReport, CliError> {
    instance
        .check_shape(allocation)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let mut entries = Vec::new();
    for &property in &options.properties {
        let e = match property {
            Property::Frugal => {
                let r = is_frugal(instance, allocation);
                entry(property, r.checks, r.witness.map(|w| w.to_string()))
            }
            Property::Nw => match is_nw(instance, allocation) {
                Ok(r) => entry(property, r.checks, r.witness.map(|w| w.to_string())),
                Err(e) => entry(property, 0, Some(e.to_string())),
            },
            Property::Ef => {
                let r = envy_report(instance, allocation);
                entry(property, r.checks, r.witness.map(|w| w.to_string()))
            }
            Property::Si => {
                let si = si_ratio(instance, allocation);
                let half = Rational::from_ratio(1, 2);
                let failure = si.rows.iter().find(|r| r.utility < half.clone() * r.share.clone()).map(|r| {
                    format!(
                        "agent {} has utility {} below half its sharing share {}",
                        instance.agent_id(r.agent),
                        r.utility,
                        r.share
                    )
                });
                let mut e = entry(property, si.rows.len(), failure);
                if e.detail.is_none() {
                    e.detail = si.ratio.map(|r| format!("ratio {r}"));
                }
                e
            }
            Property::Lorenz => {
                if options.samples == 0 {
                    skipped(property, "0 samples requested")
                } else {
                    let mine = instance.utility_vector(allocation);
                    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
                    let mut failure = None;
                    for i in 0..options.samples {
                        let other = sample_frugal_allocation(instance, &mut rng, None);
                        let theirs = instance.utility_vector(&other);
                        if let Some(w) = lorenz_witness(&mine, &theirs).map_err(|e| CliError::Internal(e.to_string()))? {
                            failure = Some(format!("sample {i}: {w}"));
                            break;
                        }
                    }
                    entry(property, options.samples, failure)
                }
            }
            Property::Structure => {
                let r = structure_check(instance, allocation, profile);
                entry(property, profile.k(), r.err().map(|v| v.to_string()))
            }
            Property::Substructure => {
                if options.subsets == 0 {
                    skipped(property, "0 subsets requested")
                } else if instance.num_agents() > MAX_ORACLE_AGENTS {
                    skipped(property, "too many agents for the exhaustive oracle")
                } else {
                    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
                    let mut failure = None;
                    for _ in 0..options.subsets {
                        let removed: Vec<usize> = (0..instance.num_agents()).filter(|_| rng.gen_bool(0.5)).collect();
                        match substructure_witness(instance, allocation, &removed) {
                            Ok(None) => {}
                            Ok(Some(w)) => {
                                failure = Some(w.to_string());
                                break;
                            }
                            // Removing agents with more than their share leaves a negative residual.
                            Err(e) => {
                                failure = Some(e.to_string());
                                break;
                            }
                        }
                    }
                    entry(property, options.subsets, failure)
                }
            }
        };
        entries.push(e);
    }
    Ok(AuditReport {
        seed: options.seed,
        entries,
    })
}

/// Runs the mechanism on the file and audits its output.
pub fn cmd_audit(path: &Path, options: &AuditOptions) -> Result<AuditReport, CliError> {
    let instance = read_instance(path)?;
    let result = lexicographic_allocation(&instance)?;
    audit(&instance, &result.allocation, &result.profile, options)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MechanismChoice {
    Lmmf,
    MmfSi,
}

#[derive(Debug, Clone)]
pub struct ManipulateOptions {
    pub coalition: usize,
    pub grid: Vec<Rational>,
    pub budget: usize,
    pub mechanism: MechanismChoice,
    /// Grid step of the MMF-SI reference mechanism.
    pub resolution: Rational,
    pub seed: u64,
}

impl Default for ManipulateOptions {
    fn default() -> Self {
        ManipulateOptions {
            coalition: 1,
            grid: lmmf::harness::default_grid(),
            budget: lmmf::harness::DEFAULT_BUDGET,
            mechanism: MechanismChoice::Lmmf,
            resolution: Rational::from_ratio(1, 4),
            seed: 0,
        }
    }
}

/// Comma-separated multipliers, e.g. `0,1/2,1,2`.
pub fn parse_grid(text: &str) -> Result<Vec<Rational>, CliError> {
    let grid = text
        .split(',')
        .map(|s| parse_rational(s).map_err(|m| CliError::Argument(format!("--grid: {m}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if grid.is_empty() {
        return Err(CliError::Argument("--grid: empty".into()));
    }
    Ok(grid)
}

#[derive(Debug, Clone)]
pub struct ManipulateReport {
    pub agent_ids: Vec<String>,
    pub object_ids: Vec<String>,
    pub search: ManipulationSearch<Rational>,
    pub seed: u64,
}

impl ManipulateReport {
    pub fn found(&self) -> bool {
        self.search.counterexample.is_some()
    }

    pub fn to_text(&self) -> String {
        let s = &self.search;
        let mut out = String::new();
        writeln!(out, "mechanism: {}", s.mechanism).unwrap();
        writeln!(out, "coalition size: {}", s.coalition_size).unwrap();
        writeln!(
            out,
            "coverage: {} of {} misreports evaluated ({}), {} skipped, budget {}",
            s.runs,
            s.space,
            lmmf::harness::coverage(s.complete, s.counterexample.is_some()),
            s.skipped,
            s.budget
        )
        .unwrap();
        writeln!(out, "seed: {} (enumeration order is deterministic)", self.seed).unwrap();
        match &s.counterexample {
            None => writeln!(
                out,
                "no counterexample found; a finite grid search is evidence of group strategyproofness, not proof"
            )
            .unwrap(),
            Some(rep) => {
                writeln!(out, "counterexample found:").unwrap();
                for (i, &a) in rep.coalition.iter().enumerate() {
                    let show = |row: &[Rational]| {
                        row.iter()
                            .zip(&self.object_ids)
                            .map(|(x, b)| format!("{b}={x}"))
                            .collect::<Vec<_>>()
                            .join(" ")
                    };
                    let outcome = match rep.outcomes[i] {
                        Outcome::Winner => "gains",
                        Outcome::Loser => "loses",
                        Outcome::Neutral => "unchanged",
                    };
                    writeln!(
                        out,
                        "  {}: true [{}] reported [{}]; true utility {} -> {} ({outcome})",
                        self.agent_ids[a],
                        show(&rep.true_demands[i]),
                        show(&rep.reported_demands[i]),
                        rep.truthful_utilities[i],
                        rep.misreport_utilities[i]
                    )
                    .unwrap();
                }
            }
        }
        out
    }
}

pub fn cmd_manipulate(path: &Path, options: &ManipulateOptions) -> Result<ManipulateReport, CliError> {
    let instance = read_instance(path)?;
    let search = match options.mechanism {
        MechanismChoice::Lmmf => search_manipulation(&instance, &Lmmf, options.coalition, &options.grid, options.budget)?,
        MechanismChoice::MmfSi => {
            let mech = MmfSi {
                resolution: options.resolution.clone(),
            };
            search_manipulation(&instance, &mech, options.coalition, &options.grid, options.budget)?
        }
    };
    Ok(ManipulateReport {
        agent_ids: instance.agent_ids().to_vec(),
        object_ids: instance.object_ids().to_vec(),
        search,
        seed: options.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Family {
    /// Half-sharing family: `--n` agents, two objects of supply n.
    Lemma5,
    /// Three agents where maximin with sharing incentives is manipulable.
    Lemma6,
    /// `--n` agents contributing one unit per round over n rounds.
    Intro,
    /// Seeded random instance shaped by the size, density and value flags.
    Random,
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub family: Family,
    /// Agent count for lemma5 and intro.
    pub n: usize,
    pub random: RandomParams,
    pub seed: u64,
}

/// Produces the instance file text for a family.
pub fn cmd_generate(options: &GenerateOptions) -> Result<String, CliError> {
    let instance: Instance<Rational> = match options.family {
        Family::Lemma5 | Family::Intro if options.n < 2 => {
            return Err(CliError::Argument(format!("--n must be at least 2, got {}", options.n)));
        }
        Family::Lemma5 => families::half_sharing(options.n),
        Family::Intro => families::contribution_rounds(options.n),
        Family::Lemma6 => families::maximin_si_manipulation(),
        Family::Random => {
            let p = &options.random;
            if !(p.density > 0.0 && p.density <= 1.0) {
                return Err(CliError::Argument(format!("--density must lie in (0, 1], got {}", p.density)));
            }
            if p.max_denominator == 0 || p.max_value == 0 {
                return Err(CliError::Argument("--max-denominator and --max-value must be positive".into()));
            }
            families::random(p, options.seed)
        }
    };
    Ok(serialize_instance(&instance))
}
