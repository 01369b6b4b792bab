//! Encoding matrices Ψ for the product-matrix constructions.
//!
//! Both constructions take Ψ to be an n × d Vandermonde matrix on points
//! x_1, …, x_n. For MSR the columns split as Ψ = [Φ | ΛΦ] with Φ the first
//! α′ = d/2 powers and Λ = diag(x_i^α′); for MBR they split as Ψ = [Φ | Σ]
//! with Φ the first k columns.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::matrix::{combinations, Matrix};
use crate::params::{Mode, SystemParams};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Split {
    /// Ψ = [Φ | ΛΦ], Φ is n × α′.
    Msr { phi: Matrix, lambda: Vec<u32> },
    /// Ψ = [Φ | Σ], Φ is n × k and Σ is n × (d − k).
    Mbr { phi: Matrix, sigma: Matrix },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodingMatrix {
    params: SystemParams,
    psi: Matrix,
    points: Vec<u32>,
    split: Split,
}

impl EncodingMatrix {
    pub fn build(params: &SystemParams, field: PrimeField) -> Result<Self> {
        match params.mode {
            Mode::Msr => Self::msr(params, field),
            Mode::Mbr => Self::mbr(params, field),
        }
    }

    /// Points are taken greedily from x = 1, 2, … keeping x only if x^α′
    /// differs from every previously kept point's, so the λ_i are distinct.
    pub fn msr(params: &SystemParams, field: PrimeField) -> Result<Self> {
        if params.mode != Mode::Msr || params.d != 2 * params.k - 2 {
            return Err(Error::InvalidParams(format!(
                "not an MSR parameter set with d = 2k-2: {params}"
            )));
        }
        let slice_alpha = params.slice_alpha();
        let q = field.modulus();
        let mut points = Vec::with_capacity(params.n);
        let mut lambdas = HashSet::with_capacity(params.n);
        for x in 1..q {
            if points.len() == params.n {
                break;
            }
            if lambdas.insert(field.pow(x, slice_alpha as u64)) {
                points.push(x);
            }
        }
        if points.len() < params.n {
            return Err(Error::ConstructionInfeasible(format!(
                "only {} of {} points with distinct {}-th powers exist in {field}",
                points.len(),
                params.n,
                slice_alpha
            )));
        }
        Self::from_points(params, field, points)
    }

    /// Points are 1, 2, …, n.
    pub fn mbr(params: &SystemParams, field: PrimeField) -> Result<Self> {
        if params.mode != Mode::Mbr {
            return Err(Error::InvalidParams(format!(
                "not an MBR parameter set: {params}"
            )));
        }
        if (field.modulus() as usize) <= params.n {
            return Err(Error::ConstructionInfeasible(format!(
                "{field} has fewer than n={} nonzero points",
                params.n
            )));
        }
        let points = (1..=params.n as u32).collect();
        Self::from_points(params, field, points)
    }

    /// Builds Ψ on explicit points and checks the construction conditions
    /// that a Vandermonde Ψ does not give for free.
    pub fn from_points(params: &SystemParams, field: PrimeField, points: Vec<u32>) -> Result<Self> {
        if points.len() != params.n {
            return Err(Error::InvalidParams(format!(
                "{} points for n={}",
                points.len(),
                params.n
            )));
        }
        let psi = Matrix::vandermonde(&points, params.d, field)?;
        let split = match params.mode {
            Mode::Msr => {
                let a = params.slice_alpha();
                let phi = psi.column_range(0, a);
                let lambda: Vec<u32> = points.iter().map(|&x| field.pow(x, a as u64)).collect();
                let distinct: HashSet<_> = lambda.iter().collect();
                if distinct.len() != lambda.len() {
                    return Err(Error::ConstructionInfeasible(
                        "diagonal entries of Lambda are not distinct".into(),
                    ));
                }
                Split::Msr { phi, lambda }
            }
            Mode::Mbr => Split::Mbr {
                phi: psi.column_range(0, params.k),
                sigma: psi.column_range(params.k, params.d),
            },
        };
        Ok(Self {
            params: *params,
            psi,
            points,
            split,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn field(&self) -> PrimeField {
        self.psi.field()
    }

    pub fn psi(&self) -> &Matrix {
        &self.psi
    }

    pub fn points(&self) -> &[u32] {
        &self.points
    }

    pub fn split(&self) -> &Split {
        &self.split
    }

    pub fn phi(&self) -> &Matrix {
        match &self.split {
            Split::Msr { phi, .. } | Split::Mbr { phi, .. } => phi,
        }
    }

    /// Diagonal of Λ (MSR only).
    pub fn lambda(&self) -> Option<&[u32]> {
        match &self.split {
            Split::Msr { lambda, .. } => Some(lambda),
            Split::Mbr { .. } => None,
        }
    }

    /// Σ (MBR only).
    pub fn sigma(&self) -> Option<&Matrix> {
        match &self.split {
            Split::Mbr { sigma, .. } => Some(sigma),
            Split::Msr { .. } => None,
        }
    }

    /// Row ψ_i for 1-based node id `node`.
    pub fn psi_row(&self, node: usize) -> &[u32] {
        self.psi.row(node - 1)
    }

    /// Row φ_i for 1-based node id `node`.
    pub fn phi_row(&self, node: usize) -> &[u32] {
        self.phi().row(node - 1)
    }

    pub fn point(&self, node: usize) -> u32 {
        self.points[node - 1]
    }

    pub(crate) fn check_node(&self, node: usize) -> Result<()> {
        if node == 0 || node > self.params.n {
            return Err(Error::InvalidNode(node));
        }
        Ok(())
    }

    /// Exhaustively checks the construction conditions over every row
    /// subset: any `rank_phi` rows of Φ and any d rows of Ψ independent,
    /// plus distinct λ for MSR. Cost grows as C(n, d); meant for small n.
    pub fn verify_conditions(&self) -> Result<()> {
        let n = self.params.n;
        let d = self.params.d;
        let phi = self.phi();
        let phi_width = phi.cols();
        for rows in combinations(n, phi_width) {
            if phi.select_rows(&rows).rank() != phi_width {
                return Err(Error::ConstructionInfeasible(format!(
                    "rows {rows:?} of Phi are dependent"
                )));
            }
        }
        for rows in combinations(n, d) {
            if self.psi.select_rows(&rows).rank() != d {
                return Err(Error::ConstructionInfeasible(format!(
                    "rows {rows:?} of Psi are dependent"
                )));
            }
        }
        if let Split::Msr { phi, lambda } = &self.split {
            let distinct: HashSet<_> = lambda.iter().collect();
            if distinct.len() != lambda.len() {
                return Err(Error::ConstructionInfeasible("Lambda has repeats".into()));
            }
            // Ψ = [Φ | ΛΦ]
            let f = self.field();
            for (i, &l) in lambda.iter().enumerate() {
                let scaled: Vec<u32> = phi.row(i).iter().map(|&v| f.mul(v, l)).collect();
                if self.psi.row(i)[phi_width..] != scaled[..] {
                    return Err(Error::ConstructionInfeasible(format!(
                        "row {i} of Psi is not [phi | lambda*phi]"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(q: u32) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    #[test]
    fn msr_points_and_lambda() {
        let p = SystemParams::msr(3, 1, 7).unwrap();
        let enc = EncodingMatrix::msr(&p, f(29)).unwrap();
        assert_eq!(enc.points(), &[1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(enc.lambda().unwrap(), &[1, 4, 9, 16, 25, 7, 20]);
        assert_eq!(enc.psi().rows(), 7);
        assert_eq!(enc.psi().cols(), 4);
        enc.verify_conditions().unwrap();
    }

    #[test]
    fn msr_greedy_skips_colliding_powers() {
        // Over F_13 the squares of 1..6 are 1,4,9,3,12,10 and 7 collides with 6.
        let p = SystemParams::msr(3, 1, 6).unwrap();
        let enc = EncodingMatrix::msr(&p, f(13)).unwrap();
        assert_eq!(enc.points(), &[1, 2, 3, 4, 5, 6]);
        enc.verify_conditions().unwrap();
        let p = SystemParams::msr(3, 1, 7).unwrap();
        assert!(matches!(
            EncodingMatrix::msr(&p, f(13)),
            Err(Error::ConstructionInfeasible(_))
        ));
    }

    #[test]
    fn msr_beta_does_not_change_psi() {
        let a = EncodingMatrix::msr(&SystemParams::msr(3, 1, 7).unwrap(), f(29)).unwrap();
        let b = EncodingMatrix::msr(&SystemParams::msr(3, 3, 7).unwrap(), f(29)).unwrap();
        assert_eq!(a.psi(), b.psi());
    }

    #[test]
    fn mbr_split() {
        let p = SystemParams::mbr(2, 3, 1, 5).unwrap();
        let enc = EncodingMatrix::mbr(&p, f(23)).unwrap();
        assert_eq!(enc.phi().cols(), 2);
        assert_eq!(enc.sigma().unwrap().cols(), 1);
        for rows in combinations(5, 2) {
            assert_eq!(enc.phi().select_rows(&rows).rank(), 2);
        }
        enc.verify_conditions().unwrap();

        let p = SystemParams::mbr(3, 3, 1, 5).unwrap();
        let enc = EncodingMatrix::mbr(&p, f(23)).unwrap();
        assert_eq!(enc.sigma().unwrap().cols(), 0);
        assert_eq!(enc.phi(), enc.psi());
    }

    #[test]
    fn mbr_needs_enough_points() {
        let p = SystemParams::mbr(2, 3, 1, 5).unwrap();
        assert!(EncodingMatrix::mbr(&p, f(5)).is_err());
        assert!(EncodingMatrix::mbr(&p, f(7)).is_ok());
    }

    #[test]
    fn conditions_hold_exhaustively_for_small_n() {
        for q in [29u32, 257] {
            for k in 2..=4 {
                for n in (2 * k - 1)..=10 {
                    let p = SystemParams::msr(k, 1, n).unwrap();
                    EncodingMatrix::msr(&p, f(q))
                        .unwrap()
                        .verify_conditions()
                        .unwrap();
                }
            }
            for k in 1..=4 {
                for d in k..=6 {
                    for n in (d + 1)..=10 {
                        let p = SystemParams::mbr(k, d, 1, n).unwrap();
                        EncodingMatrix::mbr(&p, f(q))
                            .unwrap()
                            .verify_conditions()
                            .unwrap();
                    }
                }
            }
        }
    }

    #[test]
    fn mode_mismatch_rejected() {
        let p = SystemParams::mbr(2, 3, 1, 5).unwrap();
        assert!(EncodingMatrix::msr(&p, f(29)).is_err());
        let p = SystemParams::msr(2, 1, 5).unwrap();
        assert!(EncodingMatrix::mbr(&p, f(29)).is_err());
    }
}
