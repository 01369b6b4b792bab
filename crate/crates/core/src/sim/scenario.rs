//! Scenario files: a code, a seeded payload, and an ordered event list.
//!
//! ```toml
//! mode = "msr"
//! n = 7
//! k = 3
//! beta = 1
//! seed = 42
//! blocks = 4
//!
//! [[events]]
//! kind = "fail"
//! node = 2
//!
//! [[events]]
//! kind = "repair"
//! node = 2
//! t = 1
//! corrupt = [3]
//!
//! [[events]]
//! kind = "reconstruct"
//! s = 1
//! erase = [1]
//! ```

use serde::{Deserialize, Serialize};

use super::{AdversaryPlan, Cluster, EventKind, EventReport, Outcome, Selection};
use crate::code::PmCode;
use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::params::{Mode, SystemParams};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub mode: Mode,
    pub n: usize,
    pub k: usize,
    /// Required for MBR; must be 2k − 2 (or omitted) for MSR.
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default = "one")]
    pub beta: usize,
    /// Field modulus; defaults to the smallest prime ≥ max(4n, 257).
    #[serde(default)]
    pub q: Option<u32>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub blocks: usize,
    /// Pick helpers and data-collector nodes at random (seeded) rather
    /// than lowest ids first.
    #[serde(default)]
    pub permute_selection: bool,
    #[serde(default)]
    pub events: Vec<ScenarioEvent>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioEvent {
    Fail {
        node: usize,
    },
    Repair {
        node: usize,
        #[serde(default)]
        s: usize,
        #[serde(default)]
        t: usize,
        #[serde(default)]
        erase: Vec<usize>,
        #[serde(default)]
        corrupt: Vec<usize>,
        #[serde(default)]
        seed: Option<u64>,
    },
    Reconstruct {
        #[serde(default)]
        s: usize,
        #[serde(default)]
        t: usize,
        #[serde(default)]
        erase: Vec<usize>,
        #[serde(default)]
        corrupt: Vec<usize>,
        #[serde(default)]
        seed: Option<u64>,
    },
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn params(&self) -> Result<SystemParams> {
        let p = match self.mode {
            Mode::Msr => SystemParams::msr(self.k, self.beta, self.n)?,
            Mode::Mbr => {
                let d = self
                    .d
                    .ok_or_else(|| Error::Scenario("MBR scenarios must set d".into()))?;
                SystemParams::mbr(self.k, d, self.beta, self.n)?
            }
        };
        if let Some(d) = self.d {
            if d != p.d {
                return Err(Error::Scenario(format!(
                    "MSR requires d = 2k-2 = {}, got {d}",
                    p.d
                )));
            }
        }
        Ok(p)
    }

    pub fn field(&self) -> Result<PrimeField> {
        match self.q {
            Some(q) => PrimeField::new(q),
            None => Ok(PrimeField::for_nodes(self.n)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimSummary {
    pub reports: Vec<EventReport>,
    /// Repair and reconstruction events attempted.
    pub coded_events: usize,
    pub successes: usize,
    pub total_symbols_downloaded: usize,
}

impl SimSummary {
    /// Successes over repair and reconstruction events; 1.0 when there
    /// were none.
    pub fn success_rate(&self) -> f64 {
        if self.coded_events == 0 {
            1.0
        } else {
            self.successes as f64 / self.coded_events as f64
        }
    }
}

fn event_seed(base: u64, index: usize) -> u64 {
    base ^ (index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Replays `scenario` deterministically.
///
/// Events whose (s, t) is infeasible, or that find too few live nodes, are
/// reported with [`Outcome::Infeasible`]. Events that make no sense for
/// the cluster (failing a failed node, repairing a live one, unknown ids)
/// make the whole scenario malformed.
pub fn run_scenario(scenario: &Scenario) -> Result<SimSummary> {
    let params = scenario
        .params()
        .map_err(|e| Error::Scenario(e.to_string()))?;
    let field = scenario
        .field()
        .map_err(|e| Error::Scenario(e.to_string()))?;
    let code = PmCode::new(&params, field).map_err(|e| Error::Scenario(e.to_string()))?;
    let mut cluster = Cluster::random(code, scenario.blocks, scenario.seed)?;
    if scenario.permute_selection {
        cluster = cluster.with_selection(Selection::Seeded(scenario.seed));
    }

    let check_ids = |ids: &[usize]| -> Result<()> {
        match ids.iter().find(|&&i| i == 0 || i > params.n) {
            Some(&bad) => Err(Error::Scenario(format!("unknown node id {bad}"))),
            None => Ok(()),
        }
    };
    let plan = |erase: &[usize],
                corrupt: &[usize],
                seed: Option<u64>,
                index: usize|
     -> Result<AdversaryPlan> {
        check_ids(erase)?;
        check_ids(corrupt)?;
        AdversaryPlan::new(
            erase.iter().copied(),
            corrupt.iter().copied(),
            seed.unwrap_or_else(|| event_seed(scenario.seed, index)),
        )
        .map_err(|e| Error::Scenario(format!("event {index}: {e}")))
    };
    let malformed = |index: usize, e: Error| Error::Scenario(format!("event {index}: {e}"));

    let mut reports = Vec::with_capacity(scenario.events.len());
    for (index, event) in scenario.events.iter().enumerate() {
        let report = match event {
            ScenarioEvent::Fail { node } => cluster.fail(*node).map_err(|e| malformed(index, e))?,
            ScenarioEvent::Repair {
                node,
                s,
                t,
                erase,
                corrupt,
                seed,
            } => {
                let plan = plan(erase, corrupt, *seed, index)?;
                match cluster.repair(*node, *s, *t, &plan) {
                    Ok(r) => r,
                    Err(Error::Infeasible { reason, .. }) => {
                        EventReport::infeasible(EventKind::Repair, Some(*node), *s, *t, reason)
                    }
                    Err(e) => return Err(malformed(index, e)),
                }
            }
            ScenarioEvent::Reconstruct {
                s,
                t,
                erase,
                corrupt,
                seed,
            } => {
                let plan = plan(erase, corrupt, *seed, index)?;
                match cluster.reconstruct(*s, *t, &plan) {
                    Ok((r, _)) => r,
                    Err(Error::Infeasible { reason, .. }) => {
                        EventReport::infeasible(EventKind::Reconstruct, None, *s, *t, reason)
                    }
                    Err(e) => return Err(malformed(index, e)),
                }
            }
        };
        reports.push(report);
    }

    let coded: Vec<&EventReport> = reports
        .iter()
        .filter(|r| r.kind != EventKind::Fail)
        .collect();
    Ok(SimSummary {
        coded_events: coded.len(),
        successes: coded
            .iter()
            .filter(|r| r.outcome == Outcome::Success)
            .count(),
        total_symbols_downloaded: reports.iter().map(|r| r.symbols_downloaded).sum(),
        reports,
    })
}
