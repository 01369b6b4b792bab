//! Product-matrix MSR code at d = 2k − 2.
//!
//! Per slice the message matrix is M = [S1; S2] (d × α′) with S1, S2
//! symmetric α′ × α′, and node i stores ψ_i^t M = φ_i^t S1 + λ_i φ_i^t S2.
//! Helper h sends ψ_h^t M φ_f; any Δ of those form a Reed-Solomon codeword
//! of m_f = M φ_f = [S1 φ_f; S2 φ_f], from which the lost share is
//! (S1 φ_f)^t + λ_f (S2 φ_f)^t.

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

/// One slice's message: two symmetric α′ × α′ matrices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MsrMessage {
    pub s1: Matrix,
    pub s2: Matrix,
}

impl MsrMessage {
    /// Layout: the first α′(α′+1)/2 symbols fill S1's upper triangle
    /// row-major, the rest fill S2's the same way.
    pub fn from_payload(payload: &[u32], slice_alpha: usize, field: PrimeField) -> Result<Self> {
        let tri = slice_alpha * (slice_alpha + 1) / 2;
        if payload.len() != 2 * tri {
            return Err(Error::WrongLength {
                expected: 2 * tri,
                got: payload.len(),
            });
        }
        Ok(Self {
            s1: symmetric_from_triangle(&payload[..tri], slice_alpha, field),
            s2: symmetric_from_triangle(&payload[tri..], slice_alpha, field),
        })
    }

    pub fn to_payload(&self) -> Vec<u32> {
        let mut out = triangle_of(&self.s1);
        out.extend(triangle_of(&self.s2));
        out
    }

    /// M = [S1; S2].
    pub fn matrix(&self) -> Matrix {
        self.s1.vstack(&self.s2).expect("S1 and S2 share a shape")
    }
}

#[derive(Clone, Debug)]
pub struct MsrCode {
    core: CodeCore,
}

impl MsrCode {
    pub fn new(params: &SystemParams, field: PrimeField) -> Result<Self> {
        let enc = EncodingMatrix::msr(params, field)?;
        Ok(Self::from_encoding(enc))
    }

    pub fn from_encoding(enc: EncodingMatrix) -> Self {
        let slice_alpha = enc.params().slice_alpha();
        let field = enc.field();
        let psi = enc.psi().clone();
        let core = CodeCore::new(enc, |slice| {
            let msg = MsrMessage::from_payload(slice, slice_alpha, field).expect("unit payload");
            let c = psi.mul(&msg.matrix()).expect("Psi is n x d");
            (0..c.rows()).map(|r| c.row(r).to_vec()).collect()
        });
        Self { core }
    }

    pub fn with_repair_decoder(mut self, decoder: RepairDecoder) -> Self {
        self.core.repair_decoder = decoder;
        self
    }

    /// Splits a B-symbol block into β slice messages.
    pub fn fill_message(&self, payload: &[u32]) -> Result<Vec<MsrMessage>> {
        self.core.check_payload(payload)?;
        let p = self.core.params();
        payload
            .chunks(p.slice_b())
            .map(|s| MsrMessage::from_payload(s, p.slice_alpha(), self.core.field()))
            .collect()
    }

    /// Share of every node: row i of Ψ·M for each slice, slices concatenated.
    pub fn encode_messages(&self, messages: &[MsrMessage]) -> Result<Vec<NodeShare>> {
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
            if m.rows() != p.d || m.cols() != p.slice_alpha() {
                return Err(Error::DimensionMismatch(format!(
                    "message matrix is {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    p.d,
                    p.slice_alpha()
                )));
            }
            let c = self.core.enc.psi().mul(&m)?;
            for (i, share) in shares.iter_mut().enumerate() {
                share.symbols.extend_from_slice(c.row(i));
            }
        }
        Ok(shares)
    }

    /// Message whose encoding stores `payload` verbatim on `sys_nodes`:
    /// node `sys_nodes[i]` holds `payload[iα..(i+1)α]`.
    pub fn systematic_messages(
        &self,
        payload: &[u32],
        sys_nodes: &[usize],
    ) -> Result<Vec<MsrMessage>> {
        self.core.check_payload(payload)?;
        let p = *self.core.params();
        self.check_systematic_nodes(sys_nodes)?;
        let a = p.slice_alpha();
        let mut stacked = self.core.generator(sys_nodes[0]).clone();
        for &n in &sys_nodes[1..] {
            stacked = stacked.vstack(self.core.generator(n))?;
        }
        let mut messages = Vec::with_capacity(p.beta);
        for slice in 0..p.beta {
            let target: Vec<u32> = (0..p.k)
                .flat_map(|i| {
                    let start = i * p.alpha + slice * a;
                    payload[start..start + a].iter().copied()
                })
                .collect();
            let u = stacked
                .solve(&Matrix::column(&target, self.core.field()))
                .map_err(|_| Error::ConstructionInfeasible("systematic map is singular".into()))?;
            messages.push(MsrMessage::from_payload(
                u.as_slice(),
                a,
                self.core.field(),
            )?);
        }
        Ok(messages)
    }

    /// Inverse of [`Self::systematic_messages`]: the systematic payload held
    /// by `sys_nodes` for a block whose message symbols are `message`.
    pub fn systematic_payload(&self, message: &[u32], sys_nodes: &[usize]) -> Result<Vec<u32>> {
        self.core.check_payload(message)?;
        self.check_systematic_nodes(sys_nodes)?;
        Ok(sys_nodes
            .iter()
            .flat_map(|&n| self.core.share_from_generators(message, n))
            .collect())
    }

    fn check_systematic_nodes(&self, sys_nodes: &[usize]) -> Result<()> {
        let k = self.core.params().k;
        if sys_nodes.len() != k {
            return Err(Error::WrongLength {
                expected: k,
                got: sys_nodes.len(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for &n in sys_nodes {
            self.core.enc.check_node(n)?;
            if !seen.insert(n) {
                return Err(Error::DuplicateNode(n));
            }
        }
        Ok(())
    }

    /// (S1 φ_f)^t + λ_f (S2 φ_f)^t from m_f = [S1 φ_f; S2 φ_f].
    fn finish_repair(&self, failed: usize, m_f: &[u32]) -> Vec<u32> {
        let a = self.core.params().slice_alpha();
        let f = self.core.field();
        let lambda = self.core.enc.lambda().expect("MSR encoding")[failed - 1];
        (0..a)
            .map(|i| f.add(m_f[i], f.mul(lambda, m_f[a + i])))
            .collect()
    }
}

impl ShareCodec for MsrCode {
    fn k(&self) -> usize {
        self.core.params().k
    }

    fn solve_k(&self, shares: &[(usize, &[u32])]) -> Result<Vec<u32>> {
        self.core.solve_from_shares(shares)
    }

    fn share_of(&self, message: &[u32], node: usize) -> Vec<u32> {
        self.core.share_from_generators(message, node)
    }
}

impl RegeneratingCode for MsrCode {
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

    /// ψ_h^t M φ_f per slice: the stored row dotted with φ_f.
    fn helper_symbols(&self, helper_share: &NodeShare, failed: usize) -> Result<Vec<u32>> {
        self.core.enc.check_node(failed)?;
        let phi_f = self.core.enc.phi_row(failed).to_vec();
        self.core.project_share(helper_share, failed, &phi_f)
    }

    fn repair(
        &self,
        responses: &[Response],
        failed: usize,
        s: usize,
        t: usize,
    ) -> Result<NodeShare> {
        self.core.repair(responses, failed, s, t, |m_f| {
            self.finish_repair(failed, m_f)
        })
    }

    fn reconstruct(&self, responses: &[Response], s: usize, t: usize) -> Result<Vec<u32>> {
        self.core.reconstruct(self, responses, s, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::combinations;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn code(k: usize, beta: usize, n: usize, q: u32) -> MsrCode {
        let p = SystemParams::msr(k, beta, n).unwrap();
        MsrCode::new(&p, PrimeField::new(q).unwrap()).unwrap()
    }

    fn random_payload(c: &MsrCode, rng: &mut ChaCha8Rng) -> Vec<u32> {
        let q = c.field().modulus();
        (0..c.params().b).map(|_| rng.gen_range(0..q)).collect()
    }

    fn unit_payload(len: usize) -> Vec<u32> {
        let mut v = vec![0; len];
        v[0] = 1;
        v
    }

    #[test]
    fn fill_layout() {
        let f = PrimeField::new(29).unwrap();
        let m = MsrMessage::from_payload(&[1, 2, 3, 4, 5, 6], 2, f).unwrap();
        assert_eq!(
            m.s1,
            Matrix::from_rows(&[vec![1, 2], vec![2, 3]], f).unwrap()
        );
        assert_eq!(
            m.s2,
            Matrix::from_rows(&[vec![4, 5], vec![5, 6]], f).unwrap()
        );
        assert!(m.s1.is_symmetric() && m.s2.is_symmetric());
        assert_eq!(m.to_payload(), vec![1, 2, 3, 4, 5, 6]);

        let zero = MsrMessage::from_payload(&[0; 6], 2, f).unwrap();
        assert!(zero.s1.is_zero() && zero.s2.is_zero());
        assert!(MsrMessage::from_payload(&[0; 5], 2, f).is_err());
        assert_eq!(
            MsrMessage::from_payload(&[0; 12], 3, f)
                .unwrap()
                .matrix()
                .rows(),
            6
        );
    }

    #[test]
    fn encode_examples() {
        let c = code(3, 1, 7, 29);
        let shares = c.encode(&[0; 6]).unwrap();
        assert!(shares.iter().all(|s| s.symbols == vec![0, 0]));

        let shares = c.encode(&unit_payload(6)).unwrap();
        assert_eq!(shares.len(), 7);
        for (i, s) in shares.iter().enumerate() {
            assert_eq!(s.node, i + 1);
            assert_eq!(s.symbols, vec![1, 0]);
        }
        // Cross-check one node against a hand-rolled ψ_i^t M.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let payload = random_payload(&c, &mut rng);
        let m = MsrMessage::from_payload(&payload, 2, c.field())
            .unwrap()
            .matrix();
        let shares = c.encode(&payload).unwrap();
        let row = c.encoding().psi_row(5).to_vec();
        assert_eq!(m.vec_mul(&row).unwrap(), shares[4].symbols);
        assert!(c.encode(&[0; 5]).is_err());
    }

    #[test]
    fn generator_matches_direct_encoding() {
        let c = code(3, 2, 7, 257);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let payload = random_payload(&c, &mut rng);
        for share in c.encode(&payload).unwrap() {
            assert_eq!(c.share_of(&payload, share.node), share.symbols);
        }
    }

    #[test]
    fn helper_symbol_examples() {
        let c = code(3, 1, 7, 29);
        let shares = c.encode(&unit_payload(6)).unwrap();
        for f in 1..=7 {
            for h in (1..=7).filter(|&h| h != f) {
                assert_eq!(c.helper_symbols(&shares[h - 1], f).unwrap(), vec![1]);
            }
        }
        let zero = NodeShare {
            node: 2,
            symbols: vec![0, 0],
        };
        assert_eq!(c.helper_symbols(&zero, 1).unwrap(), vec![0]);
        assert!(c.helper_symbols(&zero, 2).is_err());
        assert!(c.helper_symbols(&zero, 8).is_err());
        assert!(c.helper_symbols(&zero, 0).is_err());
    }

    #[test]
    fn helper_symbol_is_psi_m_phi() {
        let c = code(3, 1, 7, 29);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let payload = random_payload(&c, &mut rng);
        let m = MsrMessage::from_payload(&payload, 2, c.field())
            .unwrap()
            .matrix();
        let shares = c.encode(&payload).unwrap();
        for f in 1..=7 {
            let m_phi = m.mul_vec(c.encoding().phi_row(f)).unwrap();
            for h in (1..=7).filter(|&h| h != f) {
                let expected = c.field().dot(c.encoding().psi_row(h), &m_phi);
                assert_eq!(c.helper_symbols(&shares[h - 1], f).unwrap(), vec![expected]);
            }
        }
    }

    fn repair_responses(
        c: &MsrCode,
        shares: &[NodeShare],
        failed: usize,
        helpers: &[usize],
    ) -> Vec<Response> {
        helpers
            .iter()
            .map(|&h| Response::received(h, c.helper_symbols(&shares[h - 1], failed).unwrap()))
            .collect()
    }

    #[test]
    fn error_free_repair_every_node_every_helper_set() {
        let c = code(3, 2, 7, 29);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let payload = random_payload(&c, &mut rng);
        let shares = c.encode(&payload).unwrap();
        for failed in 1..=7 {
            let others: Vec<usize> = (1..=7).filter(|&h| h != failed).collect();
            for subset in combinations(others.len(), 4) {
                let helpers: Vec<usize> = subset.iter().map(|&i| others[i]).collect();
                let resp = repair_responses(&c, &shares, failed, &helpers);
                assert_eq!(c.repair(&resp, failed, 0, 0).unwrap(), shares[failed - 1]);
            }
        }
    }

    #[test]
    fn repair_corrects_one_corrupt_helper() {
        let c = code(3, 1, 7, 29);
        let shares = c.encode(&unit_payload(6)).unwrap();
        let helpers = [2, 3, 4, 5, 6, 7];
        let mut resp = repair_responses(&c, &shares, 1, &helpers);
        resp[0].symbols = Some(vec![5]);
        let repaired = c.repair(&resp, 1, 0, 1).unwrap();
        assert_eq!(repaired.symbols, vec![1, 0]);

        let exhaustive = c.clone().with_repair_decoder(RepairDecoder::Exhaustive);
        assert_eq!(
            exhaustive.repair(&resp, 1, 0, 1).unwrap().symbols,
            vec![1, 0]
        );
    }

    #[test]
    fn repair_preconditions() {
        let c = code(3, 1, 7, 29);
        let shares = c.encode(&unit_payload(6)).unwrap();
        let resp = repair_responses(&c, &shares, 1, &[2, 3, 4, 5]);
        assert!(matches!(
            c.repair(&resp, 1, 0, 1),
            Err(Error::ConnectivityMismatch {
                expected: 6,
                got: 4
            })
        ));
        let mut dup = resp.clone();
        dup[1].node = 2;
        assert_eq!(c.repair(&dup, 1, 0, 0), Err(Error::DuplicateNode(2)));
        let selfhelp = repair_responses(&c, &shares, 2, &[1, 3, 4, 5]);
        let mut selfhelp = selfhelp;
        selfhelp[0].node = 2;
        assert!(c.repair(&selfhelp, 2, 0, 0).is_err());
        assert!(matches!(
            c.repair(&resp, 1, 2, 1),
            Err(Error::Infeasible { .. })
        ));
        assert_eq!(c.repair(&resp, 9, 0, 0), Err(Error::InvalidNode(9)));
    }

    #[test]
    fn too_many_erasures_is_detected() {
        let c = code(3, 1, 7, 29);
        let shares = c.encode(&unit_payload(6)).unwrap();
        let mut resp = repair_responses(&c, &shares, 1, &[2, 3, 4, 5, 6]);
        resp[0].symbols = None;
        resp[1].symbols = None;
        assert!(matches!(
            c.repair(&resp, 1, 1, 0),
            Err(Error::RepairFailed { .. })
        ));
    }

    #[test]
    fn reconstruct_examples() {
        let c = code(3, 1, 7, 29);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let payload = random_payload(&c, &mut rng);
        let shares = c.encode(&payload).unwrap();
        let resp = |nodes: &[usize]| -> Vec<Response> {
            nodes
                .iter()
                .map(|&i| Response::received(i, shares[i - 1].symbols.clone()))
                .collect()
        };

        for subset in combinations(7, 3) {
            let nodes: Vec<usize> = subset.iter().map(|i| i + 1).collect();
            assert_eq!(c.reconstruct(&resp(&nodes), 0, 0).unwrap(), payload);
        }

        let mut r = resp(&[1, 2, 3, 4, 5]);
        r[2].symbols = Some(vec![0, 0]);
        assert_eq!(c.reconstruct(&r, 0, 1).unwrap(), payload);

        let mut r = resp(&[2, 4, 6, 7]);
        r[1] = Response::erased(4);
        assert_eq!(c.reconstruct(&r, 1, 0).unwrap(), payload);

        assert!(matches!(
            c.reconstruct(&resp(&[1, 2, 3]), 0, 1),
            Err(Error::ConnectivityMismatch { .. })
        ));
    }

    #[test]
    fn systematic_remap() {
        let c = code(3, 2, 7, 257);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let payload = random_payload(&c, &mut rng);
        let sys = [2, 5, 7];
        let msgs = c.systematic_messages(&payload, &sys).unwrap();
        let shares = c.encode_messages(&msgs).unwrap();
        let a = c.params().alpha;
        for (i, &n) in sys.iter().enumerate() {
            assert_eq!(shares[n - 1].symbols, payload[i * a..(i + 1) * a]);
        }
        // Reconstruct from non-systematic nodes and map back.
        let resp: Vec<Response> = [1, 3, 4]
            .iter()
            .map(|&i| Response::received(i, shares[i - 1].symbols.clone()))
            .collect();
        let message = c.reconstruct(&resp, 0, 0).unwrap();
        assert_eq!(c.systematic_payload(&message, &sys).unwrap(), payload);

        let zero = c.systematic_messages(&vec![0; c.params().b], &sys).unwrap();
        assert!(zero.iter().all(|m| m.s1.is_zero() && m.s2.is_zero()));
        assert_eq!(
            c.systematic_messages(&payload, &[1, 1, 2]),
            Err(Error::DuplicateNode(1))
        );
    }

    #[test]
    fn beta_slices_are_independent() {
        let c3 = code(3, 3, 7, 29);
        let c1 = code(3, 1, 7, 29);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let payload = random_payload(&c3, &mut rng);
        let whole = c3.encode(&payload).unwrap();
        let parts: Vec<Vec<NodeShare>> = payload.chunks(6).map(|p| c1.encode(p).unwrap()).collect();
        for node in 0..7 {
            let concat: Vec<u32> = parts.iter().flat_map(|p| p[node].symbols.clone()).collect();
            assert_eq!(whole[node].symbols, concat);
        }
    }
}
