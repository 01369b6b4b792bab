//! Errors-and-erasures decoding.
//!
//! Every response a node contributes is either received (possibly
//! corrupted) or erased as a whole. Repair sees scalar symbols that form a
//! Reed-Solomon codeword of the d-vector m_f, since Ψ is Vandermonde.
//! Reconstruction sees whole shares that form an MDS code over vectors.
//!
//! All decoders need `R ≥ msg_len + 2·t_max` received entries. A candidate
//! is accepted when it agrees with at least `R − t_max` of them; two
//! accepted candidates would agree on `R − 2·t_max ≥ msg_len` positions and
//! so coincide.

use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::matrix::{combinations, Matrix};

/// One position of a received word. `value` is `None` when erased.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordEntry<T> {
    pub position: usize,
    pub value: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReceivedWord<T> {
    entries: Vec<WordEntry<T>>,
}

impl<T> ReceivedWord<T> {
    pub fn new(entries: Vec<WordEntry<T>>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            if !seen.insert(e.position) {
                return Err(Error::DuplicateNode(e.position));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_options(values: impl IntoIterator<Item = (usize, Option<T>)>) -> Result<Self> {
        Self::new(
            values
                .into_iter()
                .map(|(position, value)| WordEntry { position, value })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[WordEntry<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn received_count(&self) -> usize {
        self.entries.iter().filter(|e| e.value.is_some()).count()
    }

    pub fn erased_count(&self) -> usize {
        self.len() - self.received_count()
    }

    /// Indices (into `entries`) of the received positions.
    fn received_indices(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.value.as_ref().map(|_| i))
            .collect()
    }
}

fn check_budget(received: usize, msg_len: usize, t_max: usize) -> Result<()> {
    if received < msg_len + 2 * t_max {
        return Err(Error::DecodeFailure(format!(
            "{received} received entries cannot correct {t_max} errors in a length-{msg_len} message \
             (need {})",
            msg_len + 2 * t_max
        )));
    }
    Ok(())
}

/// Reference decoder: tries every `msg_len`-subset of the received entries,
/// solves against the matching rows of `rows`, and accepts a candidate that
/// agrees with at least `R − t_max` received entries.
///
/// `rows` holds one encoding row per word entry, in entry order. Scans every
/// subset and reports [`Error::AmbiguousDecode`] if two different candidates
/// pass, which cannot happen within budget.
pub fn subset_decode_oracle(
    word: &ReceivedWord<u32>,
    rows: &Matrix,
    msg_len: usize,
    t_max: usize,
) -> Result<Vec<u32>> {
    if rows.rows() != word.len() || rows.cols() != msg_len {
        return Err(Error::DimensionMismatch(format!(
            "{} encoding rows of width {} for a word of length {} and message length {msg_len}",
            rows.rows(),
            rows.cols(),
            word.len()
        )));
    }
    let field = rows.field();
    let received = word.received_indices();
    let r = received.len();
    check_budget(r, msg_len, t_max)?;
    let values: Vec<u32> = received
        .iter()
        .map(|&i| word.entries[i].value.unwrap() % field.modulus())
        .collect();

    let threshold = r - t_max;
    let mut accepted: Option<Vec<u32>> = None;
    for subset in combinations(r, msg_len) {
        let idx: Vec<usize> = subset.iter().map(|&j| received[j]).collect();
        let a = rows.select_rows(&idx);
        let y = Matrix::column(
            &subset.iter().map(|&j| values[j]).collect::<Vec<_>>(),
            field,
        );
        let Ok(candidate) = a.solve(&y) else {
            continue;
        };
        let candidate = candidate.into_vec();
        if accepted.as_ref() == Some(&candidate) {
            continue;
        }
        let agree = received
            .iter()
            .zip(&values)
            .filter(|(&i, &v)| field.dot(rows.row(i), &candidate) == v)
            .count();
        if agree >= threshold {
            if accepted.is_some() {
                return Err(Error::AmbiguousDecode);
            }
            accepted = Some(candidate);
        }
    }
    accepted.ok_or_else(|| Error::DecodeFailure("no candidate within the error budget".into()))
}

/// Reed-Solomon errors-and-erasures decoding by the Berlekamp-Welch method.
///
/// The word holds evaluations of a polynomial of degree < `msg_len` at
/// `points` (one point per entry); the returned vector is its coefficient
/// list, lowest degree first. Erased positions are dropped, which fixes
/// their locators; the error locator E (monic, degree `t_max`) and Q = P·E
/// come from one linear solve.
pub fn rs_decode_ee(
    word: &ReceivedWord<u32>,
    points: &[u32],
    msg_len: usize,
    t_max: usize,
    field: PrimeField,
) -> Result<Vec<u32>> {
    if points.len() != word.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} points for a word of length {}",
            points.len(),
            word.len()
        )));
    }
    let received = word.received_indices();
    let r = received.len();
    check_budget(r, msg_len, t_max)?;
    if msg_len == 0 {
        return Ok(Vec::new());
    }

    let q_len = msg_len + t_max;
    let unknowns = q_len + t_max;
    let mut system = Matrix::zeros(r, unknowns, field);
    let mut rhs = Matrix::zeros(r, 1, field);
    for (row, &i) in received.iter().enumerate() {
        let x = points[i] % field.modulus();
        let y = word.entries[i].value.unwrap() % field.modulus();
        // Q(x) − y·(e_0 + e_1 x + … + e_{t−1} x^{t−1}) = y·x^t
        let mut xp = 1;
        for c in 0..q_len {
            system.set(row, c, xp);
            if c < t_max {
                system.set(row, q_len + c, field.neg(field.mul(y, xp)));
            }
            xp = field.mul(xp, x);
        }
        rhs.set(row, 0, field.mul(y, field.pow(x, t_max as u64)));
    }
    let sol = system
        .solve_any(&rhs)
        .map_err(|_| Error::DecodeFailure("key equation has no solution".into()))?
        .into_vec();
    let q_poly = &sol[..q_len];
    let mut e_poly = sol[q_len..].to_vec();
    e_poly.push(1);

    let (quot, rem) = poly_divmod(q_poly, &e_poly, field);
    if rem.iter().any(|&c| c != 0) {
        return Err(Error::DecodeFailure(
            "error locator does not divide Q".into(),
        ));
    }
    let mut message = quot;
    message.resize(msg_len.max(message.len()), 0);
    if message[msg_len..].iter().any(|&c| c != 0) {
        return Err(Error::DecodeFailure(
            "decoded polynomial degree too high".into(),
        ));
    }
    message.truncate(msg_len);

    let agree = received
        .iter()
        .filter(|&&i| {
            poly_eval(&message, points[i] % field.modulus(), field)
                == word.entries[i].value.unwrap() % field.modulus()
        })
        .count();
    if agree < r - t_max {
        return Err(Error::DecodeFailure(format!(
            "decoded polynomial agrees with {agree} of {r} received symbols"
        )));
    }
    Ok(message)
}

/// Horner evaluation; coefficients lowest degree first.
pub fn poly_eval(coeffs: &[u32], x: u32, field: PrimeField) -> u32 {
    coeffs
        .iter()
        .rev()
        .fold(0, |acc, &c| field.add(field.mul(acc, x), c))
}

/// Division by a monic polynomial; coefficients lowest degree first.
fn poly_divmod(num: &[u32], monic: &[u32], field: PrimeField) -> (Vec<u32>, Vec<u32>) {
    let dlen = monic.len();
    debug_assert_eq!(monic.last(), Some(&1));
    if num.len() < dlen {
        return (Vec::new(), num.to_vec());
    }
    let mut rem = num.to_vec();
    let mut quot = vec![0; num.len() - dlen + 1];
    for i in (0..quot.len()).rev() {
        let coef = rem[i + dlen - 1];
        quot[i] = coef;
        if coef != 0 {
            for (j, &m) in monic.iter().enumerate() {
                rem[i + j] = field.sub(rem[i + j], field.mul(coef, m));
            }
        }
    }
    rem.truncate(dlen - 1);
    (quot, rem)
}

/// Linear map between a message and node shares, as seen by
/// [`consistency_reconstruct`].
pub trait ShareCodec {
    /// Number of shares that determine the message (k).
    fn k(&self) -> usize;

    /// Recovers the message from exactly k shares assumed error-free.
    /// `shares` pairs 1-based node ids with share contents.
    fn solve_k(&self, shares: &[(usize, &[u32])]) -> Result<Vec<u32>>;

    /// The share node `node` stores under `message`.
    fn share_of(&self, message: &[u32], node: usize) -> Vec<u32>;
}

/// Consistency-search reconstruction over whole-share symbols.
///
/// For each k-subset of received shares in lexicographic order, solves for a
/// candidate message, re-encodes it at every received position, and returns
/// the first candidate matching at least `R − t_max` received shares.
pub fn consistency_reconstruct<C: ShareCodec + ?Sized>(
    word: &ReceivedWord<Vec<u32>>,
    codec: &C,
    t_max: usize,
) -> Result<Vec<u32>> {
    let k = codec.k();
    let received = word.received_indices();
    let r = received.len();
    check_budget(r, k, t_max)?;
    let threshold = r - t_max;
    let entries = &word.entries;

    for subset in combinations(r, k) {
        let shares: Vec<(usize, &[u32])> = subset
            .iter()
            .map(|&j| {
                let e = &entries[received[j]];
                (e.position, e.value.as_deref().unwrap())
            })
            .collect();
        let Ok(candidate) = codec.solve_k(&shares) else {
            continue;
        };
        let mut agree = 0;
        let mut disagree = 0;
        for &i in &received {
            let e = &entries[i];
            if codec.share_of(&candidate, e.position) == *e.value.as_ref().unwrap() {
                agree += 1;
            } else {
                disagree += 1;
                if disagree > t_max {
                    break;
                }
            }
        }
        if agree >= threshold {
            return Ok(candidate);
        }
    }
    Err(Error::DecodeFailure(
        "no candidate message is consistent with enough received shares".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f29() -> PrimeField {
        PrimeField::new(29).unwrap()
    }

    fn word(values: &[Option<u32>]) -> ReceivedWord<u32> {
        ReceivedWord::from_options(values.iter().copied().enumerate()).unwrap()
    }

    #[test]
    fn oracle_and_rs_fix_single_error() {
        let f = f29();
        let points: Vec<u32> = (1..=6).collect();
        let rows = Matrix::vandermonde(&points, 4, f).unwrap();
        // m = (1,0,0,0): every evaluation is 1; corrupt point 3.
        let w = word(&[Some(1), Some(1), Some(5), Some(1), Some(1), Some(1)]);
        assert_eq!(
            subset_decode_oracle(&w, &rows, 4, 1).unwrap(),
            vec![1, 0, 0, 0]
        );
        assert_eq!(
            rs_decode_ee(&w, &points, 4, 1, f).unwrap(),
            vec![1, 0, 0, 0]
        );

        let zero = word(&[Some(0), Some(0), Some(0), Some(0), Some(9), Some(0)]);
        assert_eq!(
            subset_decode_oracle(&zero, &rows, 4, 1).unwrap(),
            vec![0; 4]
        );
        assert_eq!(rs_decode_ee(&zero, &points, 4, 1, f).unwrap(), vec![0; 4]);
    }

    #[test]
    fn plain_interpolation_and_erasures() {
        let f = f29();
        let points: Vec<u32> = (1..=6).collect();
        let rows = Matrix::vandermonde(&points, 4, f).unwrap();
        let m = [3u32, 1, 4, 1];
        let cw = rows.mul_vec(&m).unwrap();

        let clean = word(&cw[..4].iter().map(|&v| Some(v)).collect::<Vec<_>>());
        assert_eq!(
            subset_decode_oracle(&clean, &rows.select_rows(&[0, 1, 2, 3]), 4, 0).unwrap(),
            m
        );
        assert_eq!(rs_decode_ee(&clean, &points[..4], 4, 0, f).unwrap(), m);

        let mut erased: Vec<Option<u32>> = cw.iter().map(|&v| Some(v)).collect();
        erased[1] = None;
        erased[4] = None;
        let w = word(&erased);
        assert_eq!(subset_decode_oracle(&w, &rows, 4, 0).unwrap(), m);
        assert_eq!(rs_decode_ee(&w, &points, 4, 0, f).unwrap(), m);
    }

    #[test]
    fn insufficient_entries_rejected() {
        let f = f29();
        let points: Vec<u32> = (1..=5).collect();
        let rows = Matrix::vandermonde(&points, 4, f).unwrap();
        let w = word(&[Some(1); 5]);
        assert!(matches!(
            subset_decode_oracle(&w, &rows, 4, 1),
            Err(Error::DecodeFailure(_))
        ));
        assert!(matches!(
            rs_decode_ee(&w, &points, 4, 1, f),
            Err(Error::DecodeFailure(_))
        ));
    }

    #[test]
    fn inconsistent_erasure_only_word_fails() {
        let f = f29();
        let points: Vec<u32> = (1..=5).collect();
        let rows = Matrix::vandermonde(&points, 4, f).unwrap();
        let w = word(&[Some(1), Some(1), Some(1), Some(1), Some(2)]);
        assert!(subset_decode_oracle(&w, &rows, 4, 0).is_err());
        assert!(rs_decode_ee(&w, &points, 4, 0, f).is_err());
    }

    #[test]
    fn duplicate_positions_rejected() {
        let e = ReceivedWord::from_options([(1, Some(1u32)), (1, None)]);
        assert_eq!(e, Err(Error::DuplicateNode(1)));
    }

    #[test]
    fn poly_helpers() {
        let f = f29();
        // (x + 2)(x + 3) = x^2 + 5x + 6
        let (q, r) = poly_divmod(&[6, 5, 1], &[2, 1], f);
        assert_eq!(q, vec![3, 1]);
        assert_eq!(r, vec![0]);
        assert_eq!(poly_eval(&[6, 5, 1], 1, f), 12);
        let (q, r) = poly_divmod(&[7, 5, 1], &[2, 1], f);
        assert_eq!(q, vec![3, 1]);
        assert_eq!(r, vec![1]);
    }

    #[test]
    fn beyond_budget_never_panics() {
        let f = f29();
        let points: Vec<u32> = (1..=6).collect();
        let rows = Matrix::vandermonde(&points, 4, f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let w = word(
                &(0..6)
                    .map(|_| Some(rng.gen_range(0..29)))
                    .collect::<Vec<_>>(),
            );
            let _ = subset_decode_oracle(&w, &rows, 4, 1);
            let _ = rs_decode_ee(&w, &points, 4, 1, f);
        }
    }

    /// Toy [n, 2] code over vectors: message (a, b), node i stores
    /// (a + i·b, 2a) so any two shares determine the message.
    struct Toy(PrimeField);

    impl ShareCodec for Toy {
        fn k(&self) -> usize {
            2
        }
        fn solve_k(&self, shares: &[(usize, &[u32])]) -> Result<Vec<u32>> {
            let f = self.0;
            let a = Matrix::from_rows(
                &shares
                    .iter()
                    .map(|(i, _)| vec![1, *i as u32])
                    .collect::<Vec<_>>(),
                f,
            )?;
            let y = Matrix::column(&shares.iter().map(|(_, s)| s[0]).collect::<Vec<_>>(), f);
            Ok(a.solve(&y)?.into_vec())
        }
        fn share_of(&self, m: &[u32], node: usize) -> Vec<u32> {
            let f = self.0;
            vec![f.add(m[0], f.mul(node as u32, m[1])), f.mul(2, m[0])]
        }
    }

    #[test]
    fn consistency_search_finds_unique_candidate() {
        let f = f29();
        let toy = Toy(f);
        let msg = vec![7, 3];
        let mut entries: Vec<(usize, Option<Vec<u32>>)> =
            (1..=4).map(|i| (i, Some(toy.share_of(&msg, i)))).collect();
        entries[0].1 = Some(vec![0, 0]);
        let w = ReceivedWord::from_options(entries.clone()).unwrap();
        assert_eq!(consistency_reconstruct(&w, &toy, 1).unwrap(), msg);

        entries[1].1 = Some(vec![1, 1]);
        let w = ReceivedWord::from_options(entries).unwrap();
        assert!(consistency_reconstruct(&w, &toy, 1).is_err());
    }
}
