//! Machinery shared by the MSR and MBR codes: shares, responses, and the
//! generic resilient repair and reconstruction paths.
//!
//! A block of B = β·B′ message symbols is cut into β independent slices.
//! Each node stores α = β·α′ symbols, slice after slice, and each helper
//! sends β symbols, one per slice.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::decoder::{
    consistency_reconstruct, rs_decode_ee, subset_decode_oracle, ReceivedWord, ShareCodec,
};
use crate::encoding::EncodingMatrix;
use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::matrix::Matrix;
use crate::mbr::MbrCode;
use crate::msr::MsrCode;
use crate::params::{Mode, SystemParams};

/// What one node stores for one block.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeShare {
    /// 1-based node id.
    pub node: usize,
    pub symbols: Vec<u32>,
}

/// A node's answer during repair (β symbols) or reconstruction (α symbols).
/// `symbols` is `None` when the response was erased; received symbols may be
/// silently corrupted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub node: usize,
    pub symbols: Option<Vec<u32>>,
}

impl Response {
    pub fn received(node: usize, symbols: Vec<u32>) -> Self {
        Self {
            node,
            symbols: Some(symbols),
        }
    }

    pub fn erased(node: usize) -> Self {
        Self {
            node,
            symbols: None,
        }
    }

    pub fn is_erased(&self) -> bool {
        self.symbols.is_none()
    }
}

/// Decoder used to recover m_f during repair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RepairDecoder {
    /// Berlekamp-Welch on the Reed-Solomon structure of Ψ.
    #[default]
    Algebraic,
    /// Exhaustive subset search; the reference decoder.
    Exhaustive,
}

/// Operations every product-matrix code offers.
pub trait RegeneratingCode {
    fn params(&self) -> &SystemParams;

    fn encoding(&self) -> &EncodingMatrix;

    fn field(&self) -> PrimeField {
        self.encoding().field()
    }

    /// Encodes one block of B symbols into n shares (node ids 1..=n).
    fn encode(&self, payload: &[u32]) -> Result<Vec<NodeShare>>;

    /// The β symbols `helper_share`'s node sends to help repair `failed`.
    /// Depends only on that share and `failed`.
    fn helper_symbols(&self, helper_share: &NodeShare, failed: usize) -> Result<Vec<u32>>;

    /// Regenerates `failed`'s share from Δ = d + s + 2t helper responses
    /// holding at most `s` erasures and `t` corruptions.
    fn repair(
        &self,
        responses: &[Response],
        failed: usize,
        s: usize,
        t: usize,
    ) -> Result<NodeShare>;

    /// Recovers the B message symbols from κ = k + s + 2t share responses
    /// holding at most `s` erasures and `t` corruptions.
    fn reconstruct(&self, responses: &[Response], s: usize, t: usize) -> Result<Vec<u32>>;
}

/// Per-node linear maps from a slice payload to that node's slice share,
/// plus cached left inverses for k-node subsets.
pub(crate) struct CodeCore {
    pub(crate) enc: EncodingMatrix,
    /// `generators[i]` is α′ × B′ for node i + 1.
    generators: Vec<Matrix>,
    solvers: Mutex<HashMap<Vec<usize>, Arc<Matrix>>>,
    pub(crate) repair_decoder: RepairDecoder,
}

impl Clone for CodeCore {
    fn clone(&self) -> Self {
        Self {
            enc: self.enc.clone(),
            generators: self.generators.clone(),
            solvers: Mutex::new(HashMap::new()),
            repair_decoder: self.repair_decoder,
        }
    }
}

impl std::fmt::Debug for CodeCore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CodeCore")
            .field("params", self.enc.params())
            .field("field", &self.enc.field())
            .field("repair_decoder", &self.repair_decoder)
            .finish()
    }
}

impl CodeCore {
    /// `encode_slice` maps one slice payload to the n slice shares.
    pub(crate) fn new(enc: EncodingMatrix, encode_slice: impl Fn(&[u32]) -> Vec<Vec<u32>>) -> Self {
        let p = *enc.params();
        let (a, b) = (p.slice_alpha(), p.slice_b());
        let field = enc.field();
        let mut generators = vec![Matrix::zeros(a, b, field); p.n];
        let mut unit = vec![0u32; b];
        for j in 0..b {
            unit[j] = 1;
            for (node, share) in encode_slice(&unit).into_iter().enumerate() {
                for (r, v) in share.into_iter().enumerate() {
                    generators[node].set(r, j, v);
                }
            }
            unit[j] = 0;
        }
        Self {
            enc,
            generators,
            solvers: Mutex::new(HashMap::new()),
            repair_decoder: RepairDecoder::default(),
        }
    }

    pub(crate) fn params(&self) -> &SystemParams {
        self.enc.params()
    }

    pub(crate) fn field(&self) -> PrimeField {
        self.enc.field()
    }

    /// α′ × B′ map for 1-based `node`.
    pub(crate) fn generator(&self, node: usize) -> &Matrix {
        &self.generators[node - 1]
    }

    pub(crate) fn check_payload(&self, payload: &[u32]) -> Result<()> {
        let b = self.params().b;
        if payload.len() != b {
            return Err(Error::WrongLength {
                expected: b,
                got: payload.len(),
            });
        }
        Ok(())
    }

    /// Left inverse of the stacked generators of `nodes` (sorted ids).
    fn solver(&self, nodes: &[usize]) -> Result<Arc<Matrix>> {
        if let Some(m) = self.solvers.lock().unwrap().get(nodes) {
            return Ok(Arc::clone(m));
        }
        let mut stacked = self.generator(nodes[0]).clone();
        for &n in &nodes[1..] {
            stacked = stacked.vstack(self.generator(n))?;
        }
        let left = Arc::new(stacked.left_inverse()?);
        self.solvers
            .lock()
            .unwrap()
            .insert(nodes.to_vec(), Arc::clone(&left));
        Ok(left)
    }

    pub(crate) fn share_from_generators(&self, message: &[u32], node: usize) -> Vec<u32> {
        let p = self.params();
        let (a, b) = (p.slice_alpha(), p.slice_b());
        let g = self.generator(node);
        let mut out = Vec::with_capacity(p.alpha);
        for slice in message.chunks(b) {
            out.extend(g.mul_vec(slice).expect("slice length is B'"));
        }
        debug_assert_eq!(out.len(), a * p.beta);
        out
    }

    /// Generic error-free solve from k shares: per slice, apply the left
    /// inverse of the k stacked generator blocks.
    pub(crate) fn solve_from_shares(&self, shares: &[(usize, &[u32])]) -> Result<Vec<u32>> {
        let p = self.params();
        if shares.len() != p.k {
            return Err(Error::ConnectivityMismatch {
                expected: p.k,
                got: shares.len(),
            });
        }
        let mut order: Vec<usize> = (0..shares.len()).collect();
        order.sort_by_key(|&i| shares[i].0);
        let nodes: Vec<usize> = order.iter().map(|&i| shares[i].0).collect();
        let left = self.solver(&nodes)?;
        let a = p.slice_alpha();
        let mut message = Vec::with_capacity(p.b);
        let mut stacked = Vec::with_capacity(p.k * a);
        for slice in 0..p.beta {
            stacked.clear();
            for &i in &order {
                stacked.extend_from_slice(&shares[i].1[slice * a..(slice + 1) * a]);
            }
            message.extend(left.mul_vec(&stacked)?);
        }
        Ok(message)
    }

    pub(crate) fn check_share(&self, share: &NodeShare) -> Result<()> {
        self.enc.check_node(share.node)?;
        if share.symbols.len() != self.params().alpha {
            return Err(Error::WrongLength {
                expected: self.params().alpha,
                got: share.symbols.len(),
            });
        }
        Ok(())
    }

    /// Per slice, the inner product of the helper's stored row with `vector`.
    pub(crate) fn project_share(
        &self,
        share: &NodeShare,
        failed: usize,
        vector: &[u32],
    ) -> Result<Vec<u32>> {
        self.check_share(share)?;
        self.enc.check_node(failed)?;
        if failed == share.node {
            return Err(Error::InvalidParams(format!(
                "node {failed} cannot help repair itself"
            )));
        }
        let f = self.field();
        Ok(share
            .symbols
            .chunks(self.params().slice_alpha())
            .map(|slice| f.dot(slice, vector))
            .collect())
    }

    fn check_responses(
        &self,
        responses: &[Response],
        expected: usize,
        symbol_len: usize,
    ) -> Result<()> {
        if responses.len() != expected {
            return Err(Error::ConnectivityMismatch {
                expected,
                got: responses.len(),
            });
        }
        let mut seen = HashSet::new();
        for r in responses {
            self.enc.check_node(r.node)?;
            if !seen.insert(r.node) {
                return Err(Error::DuplicateNode(r.node));
            }
            if let Some(sym) = &r.symbols {
                if sym.len() != symbol_len {
                    return Err(Error::WrongLength {
                        expected: symbol_len,
                        got: sym.len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Decodes m_f for every slice from the helpers' responses, then maps
    /// each slice's m_f to the failed node's slice share with `finish`.
    pub(crate) fn repair(
        &self,
        responses: &[Response],
        failed: usize,
        s: usize,
        t: usize,
        finish: impl Fn(&[u32]) -> Vec<u32>,
    ) -> Result<NodeShare> {
        let p = *self.params();
        self.enc.check_node(failed)?;
        p.check_repair(s, t)?;
        self.check_responses(responses, p.repair_connectivity(s, t), p.beta)?;
        if responses.iter().any(|r| r.node == failed) {
            return Err(Error::InvalidParams(format!(
                "node {failed} cannot help repair itself"
            )));
        }
        let field = self.field();
        let points: Vec<u32> = responses.iter().map(|r| self.enc.point(r.node)).collect();
        let rows = match self.repair_decoder {
            RepairDecoder::Exhaustive => Some(
                self.enc
                    .psi()
                    .select_rows(&responses.iter().map(|r| r.node - 1).collect::<Vec<_>>()),
            ),
            RepairDecoder::Algebraic => None,
        };
        let mut symbols = Vec::with_capacity(p.alpha);
        for slice in 0..p.beta {
            let word = ReceivedWord::from_options(
                responses
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (i, r.symbols.as_ref().map(|v| v[slice]))),
            )?;
            let m_f = match &rows {
                None => rs_decode_ee(&word, &points, p.d, t, field),
                Some(rows) => subset_decode_oracle(&word, rows, p.d, t),
            }
            .map_err(|e| Error::RepairFailed {
                node: failed,
                reason: e.to_string(),
            })?;
            symbols.extend(finish(&m_f));
        }
        Ok(NodeShare {
            node: failed,
            symbols,
        })
    }

    pub(crate) fn reconstruct<C: ShareCodec + ?Sized>(
        &self,
        codec: &C,
        responses: &[Response],
        s: usize,
        t: usize,
    ) -> Result<Vec<u32>> {
        let p = *self.params();
        p.check_reconstruct(s, t)?;
        self.check_responses(responses, p.reconstruct_connectivity(s, t), p.alpha)?;
        let word =
            ReceivedWord::from_options(responses.iter().map(|r| (r.node, r.symbols.clone())))?;
        consistency_reconstruct(&word, codec, t)
            .map_err(|e| Error::ReconstructionFailed(e.to_string()))
    }
}

/// Either product-matrix code, selected at run time.
#[derive(Clone, Debug)]
pub enum PmCode {
    Msr(MsrCode),
    Mbr(MbrCode),
}

impl PmCode {
    pub fn new(params: &SystemParams, field: PrimeField) -> Result<Self> {
        Ok(match params.mode {
            Mode::Msr => PmCode::Msr(MsrCode::new(params, field)?),
            Mode::Mbr => PmCode::Mbr(MbrCode::new(params, field)?),
        })
    }

    pub fn with_repair_decoder(self, decoder: RepairDecoder) -> Self {
        match self {
            PmCode::Msr(c) => PmCode::Msr(c.with_repair_decoder(decoder)),
            PmCode::Mbr(c) => PmCode::Mbr(c.with_repair_decoder(decoder)),
        }
    }

    fn inner(&self) -> &dyn RegeneratingCode {
        match self {
            PmCode::Msr(c) => c,
            PmCode::Mbr(c) => c,
        }
    }
}

impl RegeneratingCode for PmCode {
    fn params(&self) -> &SystemParams {
        self.inner().params()
    }

    fn encoding(&self) -> &EncodingMatrix {
        self.inner().encoding()
    }

    fn encode(&self, payload: &[u32]) -> Result<Vec<NodeShare>> {
        self.inner().encode(payload)
    }

    fn helper_symbols(&self, helper_share: &NodeShare, failed: usize) -> Result<Vec<u32>> {
        self.inner().helper_symbols(helper_share, failed)
    }

    fn repair(
        &self,
        responses: &[Response],
        failed: usize,
        s: usize,
        t: usize,
    ) -> Result<NodeShare> {
        self.inner().repair(responses, failed, s, t)
    }

    fn reconstruct(&self, responses: &[Response], s: usize, t: usize) -> Result<Vec<u32>> {
        self.inner().reconstruct(responses, s, t)
    }
}

/// Fills a symmetric `size × size` matrix from its upper triangle, row-major.
pub(crate) fn symmetric_from_triangle(values: &[u32], size: usize, field: PrimeField) -> Matrix {
    debug_assert_eq!(values.len(), size * (size + 1) / 2);
    let mut m = Matrix::zeros(size, size, field);
    let mut it = values.iter();
    for r in 0..size {
        for c in r..size {
            let v = *it.next().unwrap();
            m.set(r, c, v);
            m.set(c, r, v);
        }
    }
    m
}

pub(crate) fn triangle_of(m: &Matrix) -> Vec<u32> {
    let size = m.rows();
    let mut out = Vec::with_capacity(size * (size + 1) / 2);
    for r in 0..size {
        for c in r..size {
            out.push(m.get(r, c));
        }
    }
    out
}
