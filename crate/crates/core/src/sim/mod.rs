//! Block-granular storage cluster simulator.
//!
//! The cluster keeps ground truth (original payload and shares) so every
//! repair and reconstruction can be checked. The codes never see it.

pub mod scenario;

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::code::{NodeShare, PmCode, RegeneratingCode, Response};
use crate::error::{Error, Result};
use crate::matrix::combinations;
use crate::params::SystemParams;

pub use scenario::{run_scenario, Scenario, ScenarioEvent, SimSummary};

/// Which nodes misbehave during one event. A node in `erase` sends
/// nothing; a node in `corrupt` sends seeded-random symbols in place of
/// every symbol of its response. Listed nodes that do not take part in the
/// event have no effect.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryPlan {
    pub erase: BTreeSet<usize>,
    pub corrupt: BTreeSet<usize>,
    pub seed: u64,
}

impl AdversaryPlan {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(
        erase: impl IntoIterator<Item = usize>,
        corrupt: impl IntoIterator<Item = usize>,
        seed: u64,
    ) -> Result<Self> {
        let plan = Self {
            erase: erase.into_iter().collect(),
            corrupt: corrupt.into_iter().collect(),
            seed,
        };
        if let Some(&n) = plan.erase.intersection(&plan.corrupt).next() {
            return Err(Error::InvalidParams(format!(
                "node {n} is both erased and corrupted"
            )));
        }
        Ok(plan)
    }

    fn apply(&self, node: usize, truth: Vec<u32>, q: u32, rng: &mut ChaCha8Rng) -> Response {
        if self.erase.contains(&node) {
            return Response::erased(node);
        }
        if self.corrupt.contains(&node) && q > 1 && !truth.is_empty() {
            loop {
                let forged: Vec<u32> = truth.iter().map(|_| rng.gen_range(0..q)).collect();
                if forged != truth {
                    return Response::received(node, forged);
                }
            }
        }
        Response::received(node, truth)
    }
}

/// Every (erase, corrupt) pair of disjoint subsets of `participants` with
/// at most `s` erased and at most `t` corrupted nodes.
pub fn patterns_within_budget(
    participants: &[usize],
    s: usize,
    t: usize,
) -> Vec<(Vec<usize>, Vec<usize>)> {
    let n = participants.len();
    let mut out = Vec::new();
    for e in 0..=s.min(n) {
        for erase in combinations(n, e) {
            let rest: Vec<usize> = (0..n).filter(|i| !erase.contains(i)).collect();
            for c in 0..=t.min(rest.len()) {
                for corrupt in combinations(rest.len(), c) {
                    out.push((
                        erase.iter().map(|&i| participants[i]).collect(),
                        corrupt.iter().map(|&i| participants[rest[i]]).collect(),
                    ));
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Fail,
    Repair,
    Reconstruct,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    /// The decoder reported failure; cluster state is unchanged.
    DetectedFailure,
    /// The decoder returned data that differs from ground truth.
    Mismatch,
    /// (s, t) violates the connectivity limits, or too few nodes are alive.
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventReport {
    pub kind: EventKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
    pub s: usize,
    pub t: usize,
    /// Δ for repair, κ for reconstruction, 0 for failures.
    pub connectivity: usize,
    /// Nodes contacted, ascending.
    pub contacted: Vec<usize>,
    pub symbols_downloaded: usize,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl EventReport {
    fn infeasible(
        kind: EventKind,
        node: Option<usize>,
        s: usize,
        t: usize,
        detail: String,
    ) -> Self {
        Self {
            kind,
            node,
            s,
            t,
            connectivity: 0,
            contacted: Vec::new(),
            symbols_downloaded: 0,
            outcome: Outcome::Infeasible,
            detail: Some(detail),
        }
    }
}

/// How repair helpers and reconstruction nodes are picked among live nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Lowest ids first.
    #[default]
    Lowest,
    /// A seeded random subset, drawn afresh for every event.
    Seeded(u64),
}

#[derive(Clone, Debug)]
pub struct Cluster {
    code: PmCode,
    /// `stored[node - 1]` is `None` while the node is failed, otherwise its
    /// share for every block.
    stored: Vec<Option<Vec<Vec<u32>>>>,
    truth_payload: Vec<Vec<u32>>,
    /// `truth_shares[node - 1][block]`.
    truth_shares: Vec<Vec<Vec<u32>>>,
    selection: Selection,
    events: u64,
}

impl Cluster {
    /// Encodes each payload block and places one share per node.
    pub fn new(code: PmCode, blocks: Vec<Vec<u32>>) -> Result<Self> {
        let n = code.params().n;
        let mut truth_shares = vec![Vec::with_capacity(blocks.len()); n];
        for block in &blocks {
            for share in code.encode(block)? {
                truth_shares[share.node - 1].push(share.symbols);
            }
        }
        Ok(Self {
            stored: truth_shares.iter().cloned().map(Some).collect(),
            code,
            truth_payload: blocks,
            truth_shares,
            selection: Selection::Lowest,
            events: 0,
        })
    }

    /// A cluster holding `blocks` blocks of seeded-random payload.
    pub fn random(code: PmCode, blocks: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = code.field().modulus();
        let b = code.params().b;
        let payload = (0..blocks)
            .map(|_| (0..b).map(|_| rng.gen_range(0..q)).collect())
            .collect();
        Self::new(code, payload)
    }

    pub fn with_selection(mut self, selection: Selection) -> Self {
        self.selection = selection;
        self
    }

    pub fn code(&self) -> &PmCode {
        &self.code
    }

    pub fn params(&self) -> &SystemParams {
        self.code.params()
    }

    pub fn block_count(&self) -> usize {
        self.truth_payload.len()
    }

    pub fn payload(&self) -> &[Vec<u32>] {
        &self.truth_payload
    }

    pub fn is_alive(&self, node: usize) -> bool {
        node >= 1 && node <= self.stored.len() && self.stored[node - 1].is_some()
    }

    pub fn alive_nodes(&self) -> Vec<usize> {
        (1..=self.stored.len())
            .filter(|&i| self.is_alive(i))
            .collect()
    }

    /// Share currently held by `node` for `block`, if alive.
    pub fn share(&self, node: usize, block: usize) -> Option<NodeShare> {
        self.stored
            .get(node.checked_sub(1)?)?
            .as_ref()
            .map(|blocks| NodeShare {
                node,
                symbols: blocks[block].clone(),
            })
    }

    pub fn original_share(&self, node: usize, block: usize) -> &[u32] {
        &self.truth_shares[node - 1][block]
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node == 0 || node > self.stored.len() {
            return Err(Error::InvalidNode(node));
        }
        Ok(())
    }

    /// Marks `node` failed and discards its data.
    pub fn fail(&mut self, node: usize) -> Result<EventReport> {
        self.check_node(node)?;
        if self.stored[node - 1].take().is_none() {
            return Err(Error::AlreadyFailed(node));
        }
        self.events += 1;
        Ok(EventReport {
            kind: EventKind::Fail,
            node: Some(node),
            s: 0,
            t: 0,
            connectivity: 0,
            contacted: Vec::new(),
            symbols_downloaded: 0,
            outcome: Outcome::Success,
            detail: None,
        })
    }

    fn select(&self, mut candidates: Vec<usize>, count: usize) -> Vec<usize> {
        if let Selection::Seeded(seed) = self.selection {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed ^ self.events.wrapping_mul(0x9e37_79b9_7f4a_7c15));
            candidates.shuffle(&mut rng);
        }
        candidates.truncate(count);
        candidates.sort_unstable();
        candidates
    }

    /// What `helper` sends toward repairing `failed` for `block`: a pure
    /// function of the helper's own share and `failed`.
    pub fn helper_response(&self, helper: usize, failed: usize, block: usize) -> Result<Vec<u32>> {
        let share = self
            .share(helper, block)
            .ok_or_else(|| Error::InvalidParams(format!("helper {helper} is not alive")))?;
        self.code.helper_symbols(&share, failed)
    }

    /// Repairs `failed` from Δ = d + s + 2t live helpers chosen by the
    /// cluster's selection rule.
    pub fn repair(
        &mut self,
        failed: usize,
        s: usize,
        t: usize,
        plan: &AdversaryPlan,
    ) -> Result<EventReport> {
        self.check_node(failed)?;
        if self.is_alive(failed) {
            return Err(Error::NotFailed(failed));
        }
        let p = *self.params();
        p.check_repair(s, t)?;
        let delta = p.repair_connectivity(s, t);
        let alive = self.alive_nodes();
        if alive.len() < delta {
            return Err(Error::Infeasible {
                s,
                t,
                reason: format!("repair needs {delta} live helpers, {} alive", alive.len()),
            });
        }
        let helpers = self.select(alive, delta);
        self.repair_with_helpers(failed, &helpers, s, t, plan)
    }

    /// Repairs `failed` from an explicit helper set.
    pub fn repair_with_helpers(
        &mut self,
        failed: usize,
        helpers: &[usize],
        s: usize,
        t: usize,
        plan: &AdversaryPlan,
    ) -> Result<EventReport> {
        self.check_node(failed)?;
        if self.is_alive(failed) {
            return Err(Error::NotFailed(failed));
        }
        let p = *self.params();
        p.check_repair(s, t)?;
        if let Some(&h) = helpers.iter().find(|&&h| !self.is_alive(h)) {
            return Err(Error::InvalidParams(format!("helper {h} is not alive")));
        }
        self.events += 1;
        let q = self.code.field().modulus();
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
        let mut repaired = Vec::with_capacity(self.block_count());
        let mut report = EventReport {
            kind: EventKind::Repair,
            node: Some(failed),
            s,
            t,
            connectivity: helpers.len(),
            contacted: helpers.to_vec(),
            symbols_downloaded: helpers.len() * p.beta * self.block_count(),
            outcome: Outcome::Success,
            detail: None,
        };
        for block in 0..self.block_count() {
            let mut responses = Vec::with_capacity(helpers.len());
            for &h in helpers {
                let truth = self.helper_response(h, failed, block)?;
                responses.push(plan.apply(h, truth, q, &mut rng));
            }
            match self.code.repair(&responses, failed, s, t) {
                Ok(share) if share.symbols == self.truth_shares[failed - 1][block] => {
                    repaired.push(share.symbols)
                }
                Ok(_) => {
                    report.outcome = Outcome::Mismatch;
                    report.detail = Some(format!(
                        "block {block}: regenerated share differs from original"
                    ));
                    return Ok(report);
                }
                Err(
                    e @ (Error::ConnectivityMismatch { .. }
                    | Error::DuplicateNode(_)
                    | Error::InvalidNode(_)),
                ) => return Err(e),
                Err(e) => {
                    report.outcome = Outcome::DetectedFailure;
                    report.detail = Some(format!("block {block}: {e}"));
                    return Ok(report);
                }
            }
        }
        self.stored[failed - 1] = Some(repaired);
        Ok(report)
    }

    /// Reconstructs every block from κ = k + s + 2t live nodes and checks
    /// the result against ground truth. Returns the payload on success.
    pub fn reconstruct(
        &mut self,
        s: usize,
        t: usize,
        plan: &AdversaryPlan,
    ) -> Result<(EventReport, Option<Vec<Vec<u32>>>)> {
        let p = *self.params();
        p.check_reconstruct(s, t)?;
        let kappa = p.reconstruct_connectivity(s, t);
        let alive = self.alive_nodes();
        if alive.len() < kappa {
            return Err(Error::Infeasible {
                s,
                t,
                reason: format!(
                    "reconstruction needs {kappa} live nodes, {} alive",
                    alive.len()
                ),
            });
        }
        let nodes = self.select(alive, kappa);
        self.reconstruct_from(&nodes, s, t, plan)
    }

    /// Reconstructs from an explicit node set.
    pub fn reconstruct_from(
        &mut self,
        nodes: &[usize],
        s: usize,
        t: usize,
        plan: &AdversaryPlan,
    ) -> Result<(EventReport, Option<Vec<Vec<u32>>>)> {
        let p = *self.params();
        p.check_reconstruct(s, t)?;
        if let Some(&h) = nodes.iter().find(|&&h| !self.is_alive(h)) {
            return Err(Error::InvalidParams(format!("node {h} is not alive")));
        }
        self.events += 1;
        let q = self.code.field().modulus();
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
        let mut report = EventReport {
            kind: EventKind::Reconstruct,
            node: None,
            s,
            t,
            connectivity: nodes.len(),
            contacted: nodes.to_vec(),
            symbols_downloaded: nodes.len() * p.alpha * self.block_count(),
            outcome: Outcome::Success,
            detail: None,
        };
        let mut payload = Vec::with_capacity(self.block_count());
        for block in 0..self.block_count() {
            let responses: Vec<Response> = nodes
                .iter()
                .map(|&i| {
                    let truth = self.stored[i - 1].as_ref().unwrap()[block].clone();
                    plan.apply(i, truth, q, &mut rng)
                })
                .collect();
            match self.code.reconstruct(&responses, s, t) {
                Ok(data) if data == self.truth_payload[block] => payload.push(data),
                Ok(_) => {
                    report.outcome = Outcome::Mismatch;
                    report.detail = Some(format!("block {block}: reconstructed payload differs"));
                    return Ok((report, None));
                }
                Err(
                    e @ (Error::ConnectivityMismatch { .. }
                    | Error::DuplicateNode(_)
                    | Error::InvalidNode(_)),
                ) => return Err(e),
                Err(e) => {
                    report.outcome = Outcome::DetectedFailure;
                    report.detail = Some(format!("block {block}: {e}"));
                    return Ok((report, None));
                }
            }
        }
        Ok((report, Some(payload)))
    }

    /// Checks every live node still holds its original shares.
    pub fn verify_consistency(&self) -> Result<()> {
        for (i, stored) in self.stored.iter().enumerate() {
            if let Some(blocks) = stored {
                if *blocks != self.truth_shares[i] {
                    return Err(Error::InvalidParams(format!(
                        "node {} holds data inconsistent with the stored message",
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }
}
