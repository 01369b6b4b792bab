//! Code parameters, the storage/bandwidth bound, and (s, t) feasibility.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Msr,
    Mbr,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Msr => "MSR",
            Mode::Mbr => "MBR",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "msr" => Ok(Mode::Msr),
            "mbr" => Ok(Mode::Mbr),
            other => Err(Error::InvalidParams(format!("unknown mode {other:?}"))),
        }
    }
}

/// `[n, k, d]` with per-block sizes `(B, α, β)`.
///
/// `b` and `alpha` count symbols for the whole β-fold concatenation; the
/// single-slice code underneath has `alpha / beta` and `b / beta`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemParams {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub b: usize,
    pub alpha: usize,
    pub beta: usize,
    pub mode: Mode,
}

impl SystemParams {
    /// MSR at d = 2k − 2: α = (k−1)β, B = k(k−1)β.
    pub fn msr(k: usize, beta: usize, n: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParams(format!("MSR needs k >= 2, got k={k}")));
        }
        if beta == 0 {
            return Err(Error::InvalidParams("beta must be at least 1".into()));
        }
        let d = 2 * k - 2;
        if n < d + 1 {
            return Err(Error::InvalidParams(format!(
                "MSR with k={k} has d={d} and needs n >= {}, got n={n}",
                d + 1
            )));
        }
        Ok(Self {
            n,
            k,
            d,
            b: k * (k - 1) * beta,
            alpha: (k - 1) * beta,
            beta,
            mode: Mode::Msr,
        })
    }

    /// MBR: α = dβ, B = (kd − k(k−1)/2)β.
    pub fn mbr(k: usize, d: usize, beta: usize, n: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        if beta == 0 {
            return Err(Error::InvalidParams("beta must be at least 1".into()));
        }
        if k > d || d + 1 > n {
            return Err(Error::InvalidParams(format!(
                "need k <= d <= n-1, got n={n} k={k} d={d}"
            )));
        }
        Ok(Self {
            n,
            k,
            d,
            b: (k * d - k * (k - 1) / 2) * beta,
            alpha: d * beta,
            beta,
            mode: Mode::Mbr,
        })
    }

    /// Dispatches on `mode`. For MSR, `d` must equal 2k − 2.
    pub fn new(mode: Mode, n: usize, k: usize, d: usize, beta: usize) -> Result<Self> {
        match mode {
            Mode::Msr => {
                let p = Self::msr(k, beta, n)?;
                if d != p.d {
                    return Err(Error::InvalidParams(format!(
                        "MSR is built only for d = 2k-2 = {}, got d={d}",
                        p.d
                    )));
                }
                Ok(p)
            }
            Mode::Mbr => Self::mbr(k, d, beta, n),
        }
    }

    /// Symbols per node in one slice (α′).
    pub fn slice_alpha(&self) -> usize {
        self.alpha / self.beta
    }

    /// Message symbols in one slice (B′).
    pub fn slice_b(&self) -> usize {
        self.b / self.beta
    }

    pub fn capacity_bound(&self) -> usize {
        capacity_bound(self.k, self.d, self.alpha, self.beta)
    }

    /// Repair connectivity Δ = d + s + 2t.
    pub fn repair_connectivity(&self, s: usize, t: usize) -> usize {
        self.d + s + 2 * t
    }

    /// Reconstruction connectivity κ = k + s + 2t.
    pub fn reconstruct_connectivity(&self, s: usize, t: usize) -> usize {
        self.k + s + 2 * t
    }

    /// d + s + 2t ≤ n − 1.
    pub fn repair_feasible(&self, s: usize, t: usize) -> bool {
        self.repair_connectivity(s, t) < self.n
    }

    /// k + s + 2t ≤ n.
    pub fn reconstruct_feasible(&self, s: usize, t: usize) -> bool {
        self.reconstruct_connectivity(s, t) <= self.n
    }

    /// Both repair and reconstruction can tolerate `s` erasures and `t` errors.
    pub fn resilience_feasible(&self, s: usize, t: usize) -> bool {
        self.repair_feasible(s, t) && self.reconstruct_feasible(s, t)
    }

    /// Every (s, t) for which [`Self::resilience_feasible`] holds, ordered by
    /// t then s.
    pub fn feasible_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for t in 0..=self.n {
            for s in 0..=self.n {
                if self.resilience_feasible(s, t) {
                    out.push((s, t));
                }
            }
        }
        out
    }

    pub(crate) fn check_repair(&self, s: usize, t: usize) -> Result<()> {
        if !self.repair_feasible(s, t) {
            return Err(Error::Infeasible {
                s,
                t,
                reason: format!(
                    "repair needs d+s+2t = {} <= n-1 = {}",
                    self.repair_connectivity(s, t),
                    self.n - 1
                ),
            });
        }
        Ok(())
    }

    pub(crate) fn check_reconstruct(&self, s: usize, t: usize) -> Result<()> {
        if !self.reconstruct_feasible(s, t) {
            return Err(Error::Infeasible {
                s,
                t,
                reason: format!(
                    "reconstruction needs k+s+2t = {} <= n = {}",
                    self.reconstruct_connectivity(s, t),
                    self.n
                ),
            });
        }
        Ok(())
    }
}

impl fmt::Display for SystemParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [n={}, k={}, d={}] (B={}, alpha={}, beta={})",
            self.mode, self.n, self.k, self.d, self.b, self.alpha, self.beta
        )
    }
}

/// Σ_{i=0}^{k−1} min(α, (d − i)β): the most message symbols a regenerating
/// code with these sizes can hold.
pub fn capacity_bound(k: usize, d: usize, alpha: usize, beta: usize) -> usize {
    (0..k).map(|i| alpha.min(d.saturating_sub(i) * beta)).sum()
}

/// The bound for a code that connects to Δ nodes for repair and κ for
/// reconstruction while correcting `s` erasures and `t` errors: the
/// effective degrees are d = Δ − s − 2t and k = κ − s − 2t.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResilientBound {
    pub d: usize,
    pub k: usize,
    pub bound: usize,
}

pub fn resilient_bound(
    alpha: usize,
    beta: usize,
    delta: usize,
    kappa: usize,
    s: usize,
    t: usize,
) -> Result<ResilientBound> {
    let overhead = s + 2 * t;
    if delta < overhead || kappa < overhead {
        return Err(Error::InvalidParams(format!(
            "connectivity (delta={delta}, kappa={kappa}) below s+2t = {overhead}"
        )));
    }
    let d = delta - overhead;
    let k = kappa - overhead;
    if k > d {
        return Err(Error::InvalidParams(format!(
            "effective k={k} exceeds effective d={d}"
        )));
    }
    Ok(ResilientBound {
        d,
        k,
        bound: capacity_bound(k, d, alpha, beta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msr_examples() {
        let p = SystemParams::msr(3, 1, 5).unwrap();
        assert_eq!((p.d, p.alpha, p.b), (4, 2, 6));
        let p = SystemParams::msr(2, 1, 3).unwrap();
        assert_eq!((p.d, p.alpha, p.b), (2, 1, 2));
        let p = SystemParams::msr(3, 2, 7).unwrap();
        assert_eq!((p.alpha, p.b, p.slice_alpha(), p.slice_b()), (4, 12, 2, 6));
        assert!(SystemParams::msr(3, 1, 4).is_err());
        assert!(SystemParams::msr(1, 1, 4).is_err());
        assert!(SystemParams::msr(3, 0, 7).is_err());
        // d·β = α + (k−1)β
        assert_eq!(p.d * p.beta, p.alpha + (p.k - 1) * p.beta);
    }

    #[test]
    fn mbr_examples() {
        let p = SystemParams::mbr(2, 3, 1, 5).unwrap();
        assert_eq!((p.b, p.alpha), (5, 3));
        let p = SystemParams::mbr(3, 3, 1, 4).unwrap();
        assert_eq!(p.b, 6);
        let p = SystemParams::mbr(2, 3, 2, 5).unwrap();
        assert_eq!((p.b, p.alpha), (10, 6));
        assert!(SystemParams::mbr(4, 3, 1, 6).is_err());
        assert!(SystemParams::mbr(2, 5, 1, 5).is_err());
    }

    #[test]
    fn new_rejects_msr_with_other_d() {
        assert!(SystemParams::new(Mode::Msr, 7, 3, 5, 1).is_err());
        assert_eq!(
            SystemParams::new(Mode::Msr, 7, 3, 4, 1).unwrap(),
            SystemParams::msr(3, 1, 7).unwrap()
        );
    }

    #[test]
    fn bound_examples() {
        assert_eq!(capacity_bound(2, 3, 2, 1), 4);
        assert_eq!(capacity_bound(2, 3, 3, 1), 5);
        assert_eq!(capacity_bound(2, 3, 0, 1), 0);
    }

    #[test]
    fn constructed_params_meet_bound() {
        for k in 2..=6 {
            for beta in 1..=3 {
                let p = SystemParams::msr(k, beta, 2 * k + 3).unwrap();
                assert_eq!(p.b, p.capacity_bound(), "{p}");
            }
        }
        for k in 1..=5 {
            for d in k..=8 {
                for beta in 1..=3 {
                    let p = SystemParams::mbr(k, d, beta, d + 2).unwrap();
                    assert_eq!(p.b, p.capacity_bound(), "{p}");
                }
            }
        }
    }

    #[test]
    fn feasibility() {
        let p = SystemParams::mbr(2, 3, 1, 6).unwrap();
        assert!(p.resilience_feasible(0, 0));
        assert!(p.resilience_feasible(0, 1));
        assert!(!p.resilience_feasible(2, 1));
        assert_eq!(p.repair_connectivity(0, 1), 5);
        assert_eq!(p.reconstruct_connectivity(0, 1), 4);
        assert_eq!(p.feasible_pairs(), vec![(0, 0), (1, 0), (2, 0), (0, 1)]);
    }

    #[test]
    fn no_resilience_when_n_is_d_plus_one() {
        for (k, d) in [(1, 1), (2, 3), (3, 4), (3, 6)] {
            let p = SystemParams::mbr(k, d, 1, d + 1).unwrap();
            assert_eq!(p.feasible_pairs(), vec![(0, 0)]);
        }
        let p = SystemParams::msr(3, 1, 5).unwrap();
        assert_eq!(p.feasible_pairs(), vec![(0, 0)]);
    }

    #[test]
    fn resilient_bound_recovers_degrees() {
        let r = resilient_bound(2, 1, 5, 4, 0, 1).unwrap();
        assert_eq!(
            r,
            ResilientBound {
                d: 3,
                k: 2,
                bound: 4
            }
        );
        assert!(resilient_bound(2, 1, 1, 4, 0, 1).is_err());
        assert!(resilient_bound(2, 1, 3, 6, 0, 1).is_err());
    }

    #[test]
    fn mode_parses() {
        assert_eq!("MSR".parse::<Mode>().unwrap(), Mode::Msr);
        assert_eq!("mbr".parse::<Mode>().unwrap(), Mode::Mbr);
        assert!("xyz".parse::<Mode>().is_err());
    }
}
