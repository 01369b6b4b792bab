//! Product-matrix MBR code for any [n, k, d].
//!
//! Per slice the message matrix is the symmetric d × d
//!
//! ```text
//!     M = | S   T^t |
//!         | T   0   |
//! ```
//!
//! with S symmetric k × k and T of shape (d − k) × k. Node i stores
//! ψ_i^t M; helper h sends ψ_h^t M ψ_f, and decoding m_f = M ψ_f from Δ of
//! those gives the lost share directly because M is symmetric.

use crate::code::{
    symmetric_from_triangle, triangle_of, CodeCore, NodeShare, RegeneratingCode, RepairDecoder,
    Response,
};
use crate::decoder::ShareCodec;
use crate::encoding::EncodingMatrix;
use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::matrix::Matrix;
use crate::params::SystemParams;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MbrMessage {
    /// Symmetric k × k block.
    pub s: Matrix,
    /// (d − k) × k block.
    pub t: Matrix,
}

impl MbrMessage {
    /// Layout: the first k(k+1)/2 symbols fill S's upper triangle
    /// row-major, the remaining k(d−k) fill T row-major.
    pub fn from_payload(payload: &[u32], k: usize, d: usize, field: PrimeField) -> Result<Self> {
        let tri = k * (k + 1) / 2;
        let expected = tri + k * (d - k);
        if payload.len() != expected {
            return Err(Error::WrongLength {
                expected,
                got: payload.len(),
            });
        }
        Ok(Self {
            s: symmetric_from_triangle(&payload[..tri], k, field),
            t: Matrix::from_vec(d - k, k, payload[tri..].to_vec(), field)?,
        })
    }

    pub fn to_payload(&self) -> Vec<u32> {
        let mut out = triangle_of(&self.s);
        out.extend_from_slice(self.t.as_slice());
        out
    }

    /// The assembled symmetric d × d matrix.
    pub fn matrix(&self) -> Matrix {
        let field = self.s.field();
        let k = self.s.rows();
        let extra = self.t.rows();
        let top = self.s.hstack(&self.t.transpose()).expect("shapes agree");
        let bottom = self
            .t
            .hstack(&Matrix::zeros(extra, extra, field))
            .expect("shapes agree");
        let m = top.vstack(&bottom).expect("shapes agree");
        debug_assert_eq!(m.rows(), k + extra);
        m
    }
}

#[derive(Clone, Debug)]
pub struct MbrCode {
    core: CodeCore,
    fast_reconstruct: bool,
}

impl MbrCode {
    pub fn new(params: &SystemParams, field: PrimeField) -> Result<Self> {
        let enc = EncodingMatrix::mbr(params, field)?;
        Ok(Self::from_encoding(enc))
    }

    pub fn from_encoding(enc: EncodingMatrix) -> Self {
        let (k, d) = (enc.params().k, enc.params().d);
        let field = enc.field();
        let psi = enc.psi().clone();
        let core = CodeCore::new(enc, |slice| {
            let msg = MbrMessage::from_payload(slice, k, d, field).expect("unit payload");
            let c = psi.mul(&msg.matrix()).expect("Psi is n x d");
            (0..c.rows()).map(|r| c.row(r).to_vec()).collect()
        });
        Self {
            core,
            fast_reconstruct: false,
        }
    }

    pub fn with_repair_decoder(mut self, decoder: RepairDecoder) -> Self {
        self.core.repair_decoder = decoder;
        self
    }

    /// Use the structured T-then-S solve instead of the generic linear solve
    /// for error-free k-node reconstruction. Off by default.
    pub fn with_fast_reconstruct(mut self, on: bool) -> Self {
        self.fast_reconstruct = on;
        self
    }

    pub fn fill_message(&self, payload: &[u32]) -> Result<Vec<MbrMessage>> {
        self.core.check_payload(payload)?;
        let p = self.core.params();
        payload
            .chunks(p.slice_b())
            .map(|s| MbrMessage::from_payload(s, p.k, p.d, self.core.field()))
            .collect()
    }

    pub fn encode_messages(&self, messages: &[MbrMessage]) -> Result<Vec<NodeShare>> {
        let p = self.core.params();
        if messages.len() != p.beta {
            return Err(Error::WrongLength {
                expected: p.beta,
                got: messages.len(),
            });
        }
        let mut shares: Vec<NodeShare> = (1..=p.n)
            .map(|node| NodeShare {
                node,
                symbols: Vec::with_capacity(p.alpha),
            })
            .collect();
        for msg in messages {
            let m = msg.matrix();
            if m.rows() != p.d || m.cols() != p.d {
                return Err(Error::DimensionMismatch(format!(
                    "message matrix is {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    p.d,
                    p.d
                )));
            }
            let c = self.core.enc.psi().mul(&m)?;
            for (i, share) in shares.iter_mut().enumerate() {
                share.symbols.extend_from_slice(c.row(i));
            }
        }
        Ok(shares)
    }

    /// Error-free reconstruction that exploits the block structure of M:
    /// the last d − k columns of k shares give Φ_DC T^t, then the first k
    /// give Φ_DC S + Σ_DC T.
    pub fn structured_solve(&self, shares: &[(usize, &[u32])]) -> Result<Vec<u32>> {
        let p = *self.core.params();
        if shares.len() != p.k {
            return Err(Error::ConnectivityMismatch {
                expected: p.k,
                got: shares.len(),
            });
        }
        let field = self.core.field();
        let enc = &self.core.enc;
        let rows: Vec<usize> = shares.iter().map(|(n, _)| n - 1).collect();
        let phi_dc = enc.phi().select_rows(&rows);
        let sigma_dc = enc.sigma().expect("MBR encoding").select_rows(&rows);
        let mut payload = Vec::with_capacity(p.b);
        for slice in 0..p.beta {
            let c = Matrix::from_rows(
                &shares
                    .iter()
                    .map(|(_, s)| s[slice * p.d..(slice + 1) * p.d].to_vec())
                    .collect::<Vec<_>>(),
                field,
            )?;
            let t_transposed = phi_dc.solve(&c.column_range(p.k, p.d))?;
            let t = t_transposed.transpose();
            let left = c.column_range(0, p.k);
            let st = sigma_dc.mul(&t)?;
            let mut diff = left.clone();
            for r in 0..p.k {
                for col in 0..p.k {
                    diff.set(r, col, field.sub(left.get(r, col), st.get(r, col)));
                }
            }
            let s = phi_dc.solve(&diff)?;
            payload.extend(MbrMessage { s, t }.to_payload());
        }
        Ok(payload)
    }
}

impl ShareCodec for MbrCode {
    fn k(&self) -> usize {
        self.core.params().k
    }

    fn solve_k(&self, shares: &[(usize, &[u32])]) -> Result<Vec<u32>> {
        if self.fast_reconstruct {
            self.structured_solve(shares)
        } else {
            self.core.solve_from_shares(shares)
        }
    }

    fn share_of(&self, message: &[u32], node: usize) -> Vec<u32> {
        self.core.share_from_generators(message, node)
    }
}

impl RegeneratingCode for MbrCode {
    fn params(&self) -> &SystemParams {
        self.core.params()
    }

    fn encoding(&self) -> &EncodingMatrix {
        &self.core.enc
    }

    fn encode(&self, payload: &[u32]) -> Result<Vec<NodeShare>> {
        let messages = self.fill_message(payload)?;
        self.encode_messages(&messages)
    }

    /// ψ_h^t M ψ_f per slice: the stored row dotted with ψ_f.
    fn helper_symbols(&self, helper_share: &NodeShare, failed: usize) -> Result<Vec<u32>> {
        self.core.enc.check_node(failed)?;
        let psi_f = self.core.enc.psi_row(failed).to_vec();
        self.core.project_share(helper_share, failed, &psi_f)
    }

    /// m_f = M ψ_f is the lost slice share itself.
    fn repair(
        &self,
        responses: &[Response],
        failed: usize,
        s: usize,
        t: usize,
    ) -> Result<NodeShare> {
        self.core
            .repair(responses, failed, s, t, |m_f| m_f.to_vec())
    }

    fn reconstruct(&self, responses: &[Response], s: usize, t: usize) -> Result<Vec<u32>> {
        self.core.reconstruct(self, responses, s, t)
    }
}
