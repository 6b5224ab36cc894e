//! The allocation report: everything `allocate` prints, in a form that
//! survives a JSON round trip exactly.

use std::fmt::Write as _;

use lmmf::properties::{envy_report, is_frugal, is_nw, si_ratio};
use lmmf::{structure_check, Instance, LexicographicAllocation, PropertyReport, Rational, Scalar};
use serde::{Deserialize, Serialize};

use crate::format::Frac;
use crate::CliError;

pub const REPORT_FORMAT: &str = "lmmf-allocation";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRow {
    pub id: String,
    pub supply: Frac,
    /// min(s(b), d(A, b)).
    pub capped_supply: Frac,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRow {
    pub id: String,
    pub endowment: Frac,
    /// Amount of each object, in object order.
    pub allocation: Vec<Frac>,
    pub utility: Frac,
    pub normalized_utility: Frac,
    pub breakpoint: Frac,
    /// 1-based tier index.
    pub tier: usize,
    /// Σ_b min(e(a)/e(A)·s(b), d(a, b)).
    pub sharing_share: Frac,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyLine {
    pub property: String,
    pub passed: bool,
    pub checks: usize,
    pub detail: Option<String>,
}

impl PropertyLine {
    fn from_report(report: &PropertyReport<Rational>) -> Self {
        PropertyLine {
            property: report.property.to_string(),
            passed: report.passed(),
            checks: report.checks,
            detail: report.witness.as_ref().map(|w| w.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationReport {
    pub format: String,
    pub objects: Vec<ObjectRow>,
    pub agents: Vec<AgentRow>,
    /// λ_1 < … < λ_k.
    pub breakpoints: Vec<Frac>,
    pub flow_value: Frac,
    /// Largest α for which the allocation is α-SI; absent when every share is zero.
    pub si_ratio: Option<Frac>,
    pub properties: Vec<PropertyLine>,
}

impl AllocationReport {
    pub fn all_properties_pass(&self) -> bool {
        self.properties.iter().all(|p| p.passed)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report always serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse {
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        if self.agents.is_empty() {
            out.push_str("no agents; empty allocation\n");
        } else {
            let mut header = vec!["agent".to_string()];
            header.extend(self.objects.iter().map(|o| o.id.clone()));
            header.extend(["utility", "normalized", "tier", "SI share"].map(String::from));
            let mut rows = vec![header];
            for a in &self.agents {
                let mut row = vec![a.id.clone()];
                row.extend(a.allocation.iter().map(|x| x.to_string()));
                row.push(a.utility.to_string());
                row.push(a.normalized_utility.to_string());
                row.push(a.tier.to_string());
                row.push(a.sharing_share.to_string());
                rows.push(row);
            }
            let widths: Vec<usize> = (0..rows[0].len())
                .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
                .collect();
            for row in &rows {
                let cells: Vec<String> = row
                    .iter()
                    .zip(&widths)
                    .map(|(cell, w)| format!("{cell:>w$}"))
                    .collect();
                writeln!(out, "{}", cells.join("  ").trim_end()).unwrap();
            }
        }
        let lambdas: Vec<String> = self.breakpoints.iter().map(|x| x.to_string()).collect();
        writeln!(out, "breakpoints: [{}]", lambdas.join(", ")).unwrap();
        writeln!(out, "flow value: {}", self.flow_value).unwrap();
        match &self.si_ratio {
            Some(r) => writeln!(out, "SI ratio: {r}").unwrap(),
            None => writeln!(out, "SI ratio: n/a (all shares zero)").unwrap(),
        }
        for p in &self.properties {
            match &p.detail {
                None => writeln!(out, "{}: pass ({} checks)", p.property, p.checks).unwrap(),
                Some(d) => writeln!(out, "{}: FAIL: {d}", p.property).unwrap(),
            }
        }
        out
    }
}

/// Assembles the report and runs the cheap property checks on the output.
/// A utility that differs from e(a)·Λ(a) is an internal error.
pub fn build_report(
    instance: &Instance<Rational>,
    result: &LexicographicAllocation<Rational>,
) -> Result<AllocationReport, CliError> {
    let alloc = &result.allocation;
    let profile = &result.profile;
    let si = si_ratio(instance, alloc);
    let capped = instance.capped_supply();
    let objects = (0..instance.num_objects())
        .map(|b| ObjectRow {
            id: instance.object_id(b).to_string(),
            supply: instance.supply(b).clone().into(),
            capped_supply: capped[b].clone().into(),
        })
        .collect();
    let mut agents = Vec::new();
    for a in 0..instance.num_agents() {
        let utility = instance.utility(alloc, a);
        let lambda = profile.breakpoint(a).clone();
        let expected = instance.endowment(a).clone() * lambda.clone();
        if utility != expected {
            return Err(CliError::Internal(format!(
                "agent {}: utility {utility} differs from e·Λ = {expected}",
                instance.agent_id(a)
            )));
        }
        agents.push(AgentRow {
            id: instance.agent_id(a).to_string(),
            endowment: instance.endowment(a).clone().into(),
            allocation: alloc.row(a).iter().cloned().map(Frac).collect(),
            normalized_utility: (utility.clone() / instance.endowment(a).clone()).into(),
            utility: utility.into(),
            breakpoint: lambda.into(),
            tier: profile.tier_of(a) + 1,
            sharing_share: si.rows[a].share.clone().into(),
        });
    }

    let mut properties = vec![PropertyLine::from_report(&is_frugal(instance, alloc))];
    match is_nw(instance, alloc) {
        Ok(r) => properties.push(PropertyLine::from_report(&r)),
        Err(e) => properties.push(PropertyLine {
            property: "nw".into(),
            passed: false,
            checks: 0,
            detail: Some(e.to_string()),
        }),
    }
    properties.push(PropertyLine::from_report(&envy_report(instance, alloc)));
    let half = Rational::from_ratio(1, 2);
    properties.push(PropertyLine {
        property: "si".into(),
        passed: si.satisfies(&half),
        checks: si.rows.len(),
        detail: (!si.satisfies(&half)).then(|| "some agent gets less than half its sharing share".into()),
    });
    let structure = structure_check(instance, alloc, profile);
    properties.push(PropertyLine {
        property: "structure".into(),
        passed: structure.is_ok(),
        checks: profile.k(),
        detail: structure.err().map(|v| v.to_string()),
    });

    Ok(AllocationReport {
        format: REPORT_FORMAT.into(),
        objects,
        agents,
        breakpoints: profile.lambdas().iter().cloned().map(Frac).collect(),
        flow_value: result.flow_value.clone().into(),
        si_ratio: si.ratio.map(Frac),
        properties,
    })
}
