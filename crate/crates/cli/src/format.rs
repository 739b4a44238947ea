//! Scenario file format: a versioned JSON document with 1-based agent
//! indices (matching the usual labeling of agents in reports), converted to
//! the core model's 0-based representation at this boundary.
//!
//! Parsing is two-phase: serde handles syntax (errors carry line/column),
//! then semantic validation collects *every* problem with its field path
//! before the core-level graph checks run.

use serde::{Deserialize, Serialize};

use swarmform::constraints::{AgentConstraintSet, Anchor, ConstraintAtom, Sense};
use swarmform::optimizer::NuBetaRamp;
use swarmform::scenario::{BoxBounds, Scenario};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub format_version: u32,
    pub agents: AgentsSection,
    pub constraints: Vec<ConstraintRecord>,
    pub communication: CommunicationSection,
    pub gains: GainsSection,
    pub smoothing: SmoothingSection,
    pub integration: IntegrationSection,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auxiliary: Option<AuxiliarySection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsSection {
    pub count: usize,
    pub dim: usize,
    /// One position (length `dim`) per agent; random inside the init box
    /// when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_positions: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate_box: Option<BoxSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSection {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintRecord {
    /// 1-based agent index.
    pub owner: usize,
    pub sense: SenseField,
    pub radius: f64,
    pub anchor: AnchorField,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SenseField {
    Inside,
    Outside,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum AnchorField {
    #[serde(rename = "point")]
    Point(Vec<f64>),
    /// 1-based agent index.
    #[serde(rename = "agent")]
    Agent(usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommunicationSection {
    /// Undirected edges as 1-based agent pairs.
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    pub k1: f64,
    pub k2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingSection {
    pub nu_alpha: f64,
    pub nu_beta: RampSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampSection {
    pub initial: f64,
    pub slope: f64,
    pub nominal: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationSection {
    pub dt: f64,
    pub horizon: f64,
    pub sample_every: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxiliarySection {
    pub enabled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_aux: Option<f64>,
}

/// Why a scenario file was rejected.
#[derive(Debug)]
pub enum ParseError {
    /// Malformed JSON or a type mismatch; line/column point at the problem.
    Syntax { line: usize, column: usize, message: String },
    /// Structurally valid document with semantic problems; every issue is
    /// listed with its field path.
    Semantic(Vec<String>),
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParseError::Syntax { line, column, message } => {
                write!(f, "syntax error at line {line}, column {column}: {message}")
            }
            ParseError::Semantic(issues) => {
                write!(f, "scenario rejected with {} issue(s):", issues.len())?;
                for issue in issues {
                    write!(f, "\n  - {issue}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ParseError {}

/// Parses and fully validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ParseError> {
    let doc: ScenarioFile = serde_json::from_str(text).map_err(|e| ParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    scenario_from_file(&doc)
}

/// Converts the document into the core model, collecting every semantic
/// issue (1-based index violations, range problems, then the core's own
/// validation including graph connectivity).
pub fn scenario_from_file(doc: &ScenarioFile) -> Result<Scenario, ParseError> {
    let mut issues: Vec<String> = Vec::new();
    if doc.format_version != FORMAT_VERSION {
        issues.push(format!(
            "format_version: expected {FORMAT_VERSION}, got {}",
            doc.format_version
        ));
    }
    let count = doc.agents.count;
    if count == 0 {
        issues.push("agents.count: must be at least 1".into());
    }
    if doc.agents.dim == 0 {
        issues.push("agents.dim: must be at least 1".into());
    }

    // 1-based → 0-based; an index of 0 or > count is a file-level error.
    let map_agent = |idx: usize, path: &str, issues: &mut Vec<String>| -> usize {
        if idx == 0 {
            issues.push(format!("{path}: agent indices are 1-based, got 0"));
            0
        } else if idx > count {
            issues.push(format!("{path}: agent {idx} out of range (count = {count})"));
            0
        } else {
            idx - 1
        }
    };

    let mut sets: Vec<Vec<ConstraintAtom>> = vec![Vec::new(); count];
    for (k, record) in doc.constraints.iter().enumerate() {
        let owner = map_agent(record.owner, &format!("constraints[{k}].owner"), &mut issues);
        if record.radius < 0.0 {
            issues.push(format!(
                "constraints[{k}].radius: must be nonnegative, got {}",
                record.radius
            ));
        }
        let anchor = match &record.anchor {
            AnchorField::Point(p) => {
                if p.len() != doc.agents.dim {
                    issues.push(format!(
                        "constraints[{k}].anchor.point: has {} coordinates, expected {}",
                        p.len(),
                        doc.agents.dim
                    ));
                }
                Anchor::Fixed(p.clone())
            }
            AnchorField::Agent(j) => {
                let j0 = map_agent(*j, &format!("constraints[{k}].anchor.agent"), &mut issues);
                if *j == record.owner {
                    issues.push(format!(
                        "constraints[{k}].anchor.agent: an atom cannot anchor at its own agent"
                    ));
                }
                Anchor::Agent(j0)
            }
        };
        let sense = match record.sense {
            SenseField::Inside => Sense::Inside,
            SenseField::Outside => Sense::Outside,
        };
        if owner < count {
            sets[owner].push(ConstraintAtom { owner, anchor, radius: record.radius, sense });
        }
    }
    for (i, atoms) in sets.iter().enumerate() {
        if atoms.is_empty() {
            issues.push(format!(
                "constraints: agent {} has no constraints (every agent needs at least one)",
                i + 1
            ));
        }
    }

    let mut comm_edges = Vec::with_capacity(doc.communication.edges.len());
    for (k, (a, b)) in doc.communication.edges.iter().enumerate() {
        let a0 = map_agent(*a, &format!("communication.edges[{k}][0]"), &mut issues);
        let b0 = map_agent(*b, &format!("communication.edges[{k}][1]"), &mut issues);
        if a == b {
            issues.push(format!("communication.edges[{k}]: self-loop on agent {a}"));
        }
        comm_edges.push((a0, b0));
    }

    let initial_positions = match &doc.agents.initial_positions {
        None => None,
        Some(rows) => {
            if rows.len() != count {
                issues.push(format!(
                    "agents.initial_positions: {} rows for {count} agents",
                    rows.len()
                ));
            }
            let mut flat = Vec::with_capacity(count * doc.agents.dim);
            for (i, row) in rows.iter().enumerate() {
                if row.len() != doc.agents.dim {
                    issues.push(format!(
                        "agents.initial_positions[{i}]: has {} coordinates, expected {}",
                        row.len(),
                        doc.agents.dim
                    ));
                }
                flat.extend_from_slice(row);
            }
            Some(flat)
        }
    };

    let scenario = Scenario {
        agents: count,
        dim: doc.agents.dim,
        constraint_sets: sets
            .into_iter()
            .enumerate()
            .map(|(i, atoms)| AgentConstraintSet::new(i, atoms))
            .collect(),
        comm_edges,
        k1: doc.gains.k1,
        k2: doc.gains.k2,
        nu_alpha: doc.smoothing.nu_alpha,
        nu_beta: NuBetaRamp::new(
            doc.smoothing.nu_beta.initial,
            doc.smoothing.nu_beta.slope,
            doc.smoothing.nu_beta.nominal,
        ),
        dt: doc.integration.dt,
        horizon: doc.integration.horizon,
        sample_every: doc.integration.sample_every,
        initial_positions,
        estimate_box: doc.agents.estimate_box.as_ref().map(|b| BoxBounds {
            lo: b.lo.clone(),
            hi: b.hi.clone(),
        }),
        seed: doc.seed,
        auxiliary: doc.auxiliary.as_ref().map(|a| a.enabled).unwrap_or(false),
        c_aux: doc.auxiliary.as_ref().and_then(|a| a.c_aux),
    };

    if issues.is_empty() {
        // Full semantic + graph validation (multi-cluster scenarios are
        // admitted here; the runner decides whether splitting is allowed).
        if let Err(core_issues) = scenario.validate(true) {
            issues.extend(core_issues.iter().map(|i| i.to_string()));
        }
    }

    if issues.is_empty() {
        Ok(scenario)
    } else {
        Err(ParseError::Semantic(issues))
    }
}

/// Serializes a scenario back into the document form (1-based indices).
pub fn scenario_to_file(s: &Scenario) -> ScenarioFile {
    let constraints = s
        .constraint_sets
        .iter()
        .flat_map(|set| {
            set.atoms.iter().map(|atom| ConstraintRecord {
                owner: atom.owner + 1,
                sense: match atom.sense {
                    Sense::Inside => SenseField::Inside,
                    Sense::Outside => SenseField::Outside,
                },
                radius: atom.radius,
                anchor: match &atom.anchor {
                    Anchor::Fixed(p) => AnchorField::Point(p.clone()),
                    Anchor::Agent(j) => AnchorField::Agent(j + 1),
                },
            })
        })
        .collect();
    ScenarioFile {
        format_version: FORMAT_VERSION,
        agents: AgentsSection {
            count: s.agents,
            dim: s.dim,
            initial_positions: s
                .initial_positions
                .as_ref()
                .map(|flat| flat.chunks(s.dim).map(|c| c.to_vec()).collect()),
            estimate_box: s.estimate_box.as_ref().map(|b| BoxSection {
                lo: b.lo.clone(),
                hi: b.hi.clone(),
            }),
        },
        constraints,
        communication: CommunicationSection {
            edges: s.comm_edges.iter().map(|&(a, b)| (a + 1, b + 1)).collect(),
        },
        gains: GainsSection { k1: s.k1, k2: s.k2 },
        smoothing: SmoothingSection {
            nu_alpha: s.nu_alpha,
            nu_beta: RampSection {
                initial: s.nu_beta.initial,
                slope: s.nu_beta.slope,
                nominal: s.nu_beta.nominal,
            },
        },
        integration: IntegrationSection {
            dt: s.dt,
            horizon: s.horizon,
            sample_every: s.sample_every,
        },
        seed: s.seed,
        auxiliary: if s.auxiliary || s.c_aux.is_some() {
            Some(AuxiliarySection { enabled: s.auxiliary, c_aux: s.c_aux })
        } else {
            None
        },
    }
}

pub fn serialize_scenario(s: &Scenario) -> String {
    let mut out = serde_json::to_string_pretty(&scenario_to_file(s))
        .expect("scenario documents always serialize");
    out.push('\n');
    out
}
