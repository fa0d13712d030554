//! Superimposed pilot codes.
//!
//! A code of order `t` is a B x C binary matrix whose columns serve as
//! subcarrier activation patterns (SAPs): the bitwise OR of any up to `t`
//! distinct columns identifies exactly the columns that formed it, and all
//! such sums are pairwise distinct. Columns are built by concatenating
//! one-hot blocks driven by Reed-Solomon evaluation codewords over GF(q):
//! column weight is constant L = 1 + t(k-1), any two columns agree in at
//! most k-1 blocks, hence no column is covered by the OR of `t` others.
//!
//! Columns are split into per-user clusters; a user's randomized pilot
//! phase indexes a column of its cluster, so the observed Boolean sum of
//! active users' SAPs can be decomposed back into (user, phase) pairs.

use std::collections::BTreeSet;
use std::io::{self, Write};

use thiserror::Error;

use crate::bits::BitVector;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("modulus {0} is not prime")]
    NonPrimeModulus(u64),
    #[error("field size {q} too small: construction needs q + 1 >= {required} block symbols")]
    FieldTooSmall { q: u64, required: u64 },
    #[error("invalid dimension k={0}: need k >= 2")]
    InvalidDimension(u32),
    #[error("invalid order t={0}: need t >= 2")]
    InvalidOrder(u32),
    #[error("cannot split {size} columns among {users} users")]
    TooManyUsers { size: usize, users: usize },
    #[error("phase index {index} outside cluster of size {cluster_size}")]
    PhaseOutOfRange { index: usize, cluster_size: usize },
    #[error("column {0} is not assigned to any cluster")]
    UnassignedColumn(usize),
    #[error("no clusters assigned")]
    NoClusters,
    #[error("user {user} outside {users} assigned clusters")]
    UnknownUser { user: usize, users: usize },
    #[error("vector length {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("code size q^k = {q}^{k} does not fit in memory")]
    SizeOverflow { q: u64, k: u32 },
    #[error("requested decomposition order {requested} exceeds code order {order}")]
    OrderExceedsCode { requested: usize, order: usize },
    #[error("observed vector is not a sum of codewords")]
    NotDecomposable,
    #[error("cover set of size {cover} exceeds the requested order {max_order}")]
    AmbiguousDecomposition { cover: usize, max_order: usize },
}

/// Prime-field parameters of the outer MDS code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldParams {
    /// Prime modulus (alphabet size of the outer code, block width).
    pub q: u64,
    /// Outer code dimension; codewords are evaluations of polynomials of
    /// degree < k.
    pub k: u32,
}

/// Cluster assignment: contiguous ranges of `cluster_size` columns per
/// user, in column order; trailing columns stay unassigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Clusters {
    pub num_users: usize,
    pub cluster_size: usize,
}

/// One randomized pilot phase out of the C-ary alphabet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotPhase {
    /// Index m into the phase alphabet.
    pub index: usize,
    /// Phase value 2*m*pi/C in radians.
    pub value: f64,
}

impl PilotPhase {
    pub fn new(index: usize, alphabet_size: usize) -> Self {
        assert!(index < alphabet_size);
        Self {
            index,
            value: 2.0 * std::f64::consts::PI * index as f64 / alphabet_size as f64,
        }
    }

    /// Recover the alphabet index from a phase value.
    pub fn index_of(value: f64, alphabet_size: usize) -> usize {
        let c = alphabet_size as f64;
        let m = (value * c / (2.0 * std::f64::consts::PI)).round() as i64;
        m.rem_euclid(alphabet_size as i64) as usize
    }
}

/// A user's encoded subcarrier activation pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sap {
    pub bits: BitVector,
    pub owner: usize,
    pub phase_index: usize,
}

/// Superimposed code with per-user column clusters.
#[derive(Debug, Clone)]
pub struct SuperimposedCode {
    params: FieldParams,
    order: u32,
    /// Blocks per column: L = 1 + t(k-1).
    num_blocks: usize,
    /// Rows: B = q * L.
    length: usize,
    /// Columns: C = q^k.
    size: usize,
    /// Per-column block symbols (the outer codeword); bit row of block b
    /// is b*q + symbol.
    columns: Vec<Vec<u16>>,
    clusters: Option<Clusters>,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Largest prime <= n, if any.
pub fn largest_prime_at_most(n: u64) -> Option<u64> {
    (2..=n).rev().find(|&p| is_prime(p))
}

impl SuperimposedCode {
    /// Build the order-`t` code over GF(`q`) with dimension `k`.
    ///
    /// Columns enumerate all q^k polynomials in lexicographic coefficient
    /// order (constant term least significant) and evaluate them at the
    /// field elements 0..q-1 plus, when L = q+1, the point at infinity
    /// (the leading coefficient).
    pub fn build(q: u64, k: u32, t: u32) -> Result<Self, CodeError> {
        if k < 2 {
            return Err(CodeError::InvalidDimension(k));
        }
        if t < 2 {
            return Err(CodeError::InvalidOrder(t));
        }
        if !is_prime(q) {
            return Err(CodeError::NonPrimeModulus(q));
        }
        let l = 1 + t as u64 * (k as u64 - 1);
        if l > q + 1 {
            return Err(CodeError::FieldTooSmall { q, required: l });
        }
        let size = usize::try_from(q)
            .ok()
            .and_then(|q| q.checked_pow(k))
            .filter(|&c| c <= 1 << 28)
            .ok_or(CodeError::SizeOverflow { q, k })?;
        let num_blocks = l as usize;
        let mut columns = Vec::with_capacity(size);
        let mut coeffs = vec![0u64; k as usize];
        for m in 0..size {
            // Digits of m in base q, constant term first.
            let mut v = m as u64;
            for c in coeffs.iter_mut() {
                *c = v % q;
                v /= q;
            }
            let mut word = Vec::with_capacity(num_blocks);
            for b in 0..num_blocks {
                let sym = if (b as u64) < q {
                    eval_poly(&coeffs, b as u64, q)
                } else {
                    // Point at infinity: leading coefficient.
                    coeffs[k as usize - 1]
                };
                word.push(sym as u16);
            }
            columns.push(word);
        }
        Ok(Self {
            params: FieldParams { q, k },
            order: t,
            num_blocks,
            length: (q * l) as usize,
            size,
            columns,
            clusters: None,
        })
    }

    pub fn params(&self) -> FieldParams {
        self.params
    }

    /// Decomposition order t.
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Code length B (rows, i.e. coding subcarriers).
    pub fn length(&self) -> usize {
        self.length
    }

    /// Code size C (number of codewords).
    pub fn size(&self) -> usize {
        self.size
    }

    /// Column weight L (blocks per column).
    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn clusters(&self) -> Option<Clusters> {
        self.clusters
    }

    /// Split columns into `num_users` equal contiguous clusters of
    /// floor(C / num_users) columns; leftover columns stay unassigned.
    pub fn assign_clusters(mut self, num_users: usize) -> Result<Self, CodeError> {
        if num_users == 0 || num_users > self.size {
            return Err(CodeError::TooManyUsers {
                size: self.size,
                users: num_users,
            });
        }
        self.clusters = Some(Clusters {
            num_users,
            cluster_size: self.size / num_users,
        });
        Ok(self)
    }

    /// Column index range owned by `user`.
    pub fn cluster_range(&self, user: usize) -> Result<std::ops::Range<usize>, CodeError> {
        let cl = self.clusters.ok_or(CodeError::NoClusters)?;
        if user >= cl.num_users {
            return Err(CodeError::UnknownUser {
                user,
                users: cl.num_users,
            });
        }
        let start = user * cl.cluster_size;
        Ok(start..start + cl.cluster_size)
    }

    /// Encode a user's randomized phase as its SAP: the phase-index-th
    /// column of the user's cluster.
    pub fn encode_pilot(&self, user: usize, phase_index: usize) -> Result<Sap, CodeError> {
        let range = self.cluster_range(user)?;
        if phase_index >= range.len() {
            return Err(CodeError::PhaseOutOfRange {
                index: phase_index,
                cluster_size: range.len(),
            });
        }
        Ok(Sap {
            bits: self.column_bits(range.start + phase_index),
            owner: user,
            phase_index,
        })
    }

    /// Global pilot phase carried by (user, phase_index): the phase
    /// alphabet has C entries, one per column.
    pub fn pilot_phase(&self, user: usize, phase_index: usize) -> Result<PilotPhase, CodeError> {
        let range = self.cluster_range(user)?;
        if phase_index >= range.len() {
            return Err(CodeError::PhaseOutOfRange {
                index: phase_index,
                cluster_size: range.len(),
            });
        }
        Ok(PilotPhase::new(range.start + phase_index, self.size))
    }

    /// Global column index carried by (user, phase_index).
    pub fn column_of(&self, user: usize, phase_index: usize) -> Result<usize, CodeError> {
        let range = self.cluster_range(user)?;
        if phase_index >= range.len() {
            return Err(CodeError::PhaseOutOfRange {
                index: phase_index,
                cluster_size: range.len(),
            });
        }
        Ok(range.start + phase_index)
    }

    /// Inverse of [`encode_pilot`](Self::encode_pilot): which user owns
    /// `column`, and at which in-cluster phase index.
    pub fn phase_of(&self, column: usize) -> Result<(usize, usize), CodeError> {
        let cl = self.clusters.ok_or(CodeError::NoClusters)?;
        assert!(column < self.size, "column {column} out of range");
        let user = column / cl.cluster_size;
        if user >= cl.num_users {
            return Err(CodeError::UnassignedColumn(column));
        }
        Ok((user, column % cl.cluster_size))
    }

    /// The column as a bit vector (one set bit per block).
    pub fn column_bits(&self, column: usize) -> BitVector {
        let q = self.params.q as usize;
        let mut bits = BitVector::zeros(self.length);
        for (b, &sym) in self.columns[column].iter().enumerate() {
            bits.set(b * q + sym as usize, true);
        }
        bits
    }

    /// Block symbols of a column (the outer codeword).
    pub fn column_symbols(&self, column: usize) -> &[u16] {
        &self.columns[column]
    }

    /// Whether `column` is covered by `observed` (every set bit of the
    /// column is set in the observation).
    pub fn column_covered_by(&self, column: usize, observed: &BitVector) -> bool {
        let q = self.params.q as usize;
        self.columns[column]
            .iter()
            .enumerate()
            .all(|(b, &sym)| observed.get(b * q + sym as usize))
    }

    /// Decompose an observed Boolean sum into the unique set of at most
    /// `max_order` columns that formed it.
    pub fn decompose(
        &self,
        observed: &BitVector,
        max_order: usize,
    ) -> Result<BTreeSet<usize>, CodeError> {
        if observed.len() != self.length {
            return Err(CodeError::LengthMismatch {
                got: observed.len(),
                expected: self.length,
            });
        }
        if max_order > self.order as usize {
            return Err(CodeError::OrderExceedsCode {
                requested: max_order,
                order: self.order as usize,
            });
        }
        let cover: BTreeSet<usize> = (0..self.size)
            .filter(|&c| self.column_covered_by(c, observed))
            .collect();
        let mut union = BitVector::zeros(self.length);
        for &c in &cover {
            union.or_assign(&self.column_bits(c));
        }
        if &union != observed {
            return Err(CodeError::NotDecomposable);
        }
        if cover.len() > max_order {
            return Err(CodeError::AmbiguousDecomposition {
                cover: cover.len(),
                max_order,
            });
        }
        Ok(cover)
    }

    /// Plain-text export: header `q k t B C`, then B rows of C '0'/'1'
    /// characters. Byte-exact for fixed parameters.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "{} {} {} {} {}",
            self.params.q, self.params.k, self.order, self.length, self.size
        )?;
        let q = self.params.q as usize;
        let mut row = vec![b'0'; self.size];
        for r in 0..self.length {
            let (block, sym) = (r / q, (r % q) as u16);
            for (c, col) in self.columns.iter().enumerate() {
                row[c] = if col[block] == sym { b'1' } else { b'0' };
            }
            w.write_all(&row)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Bitwise OR of SAP vectors; the empty sum is the zero vector.
pub fn boolean_sum(width: usize, vectors: &[BitVector]) -> Result<BitVector, CodeError> {
    let mut acc = BitVector::zeros(width);
    for v in vectors {
        if v.len() != width {
            return Err(CodeError::LengthMismatch {
                got: v.len(),
                expected: width,
            });
        }
        acc.or_assign(v);
    }
    Ok(acc)
}

fn eval_poly(coeffs: &[u64], x: u64, q: u64) -> u64 {
    let mut acc = 0u64;
    for &c in coeffs.iter().rev() {
        acc = (acc * x + c) % q;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn subsets_le(n: usize, t: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for mask in 0u32..(1 << n) {
            if (mask.count_ones() as usize) <= t {
                out.push((0..n).filter(|&i| mask >> i & 1 == 1).collect());
            }
        }
        out
    }

    #[test]
    fn build_parameters_3_2_3() {
        let code = SuperimposedCode::build(3, 2, 3).unwrap();
        assert_eq!(code.length(), 12);
        assert_eq!(code.size(), 9);
        assert_eq!(code.num_blocks(), 4);
        // Constant weight, one-hot per block.
        for c in 0..code.size() {
            let bits = code.column_bits(c);
            assert_eq!(bits.count_ones(), 4);
            for b in 0..4 {
                let ones = (0..3).filter(|&r| bits.get(b * 3 + r)).count();
                assert_eq!(ones, 1);
            }
        }
    }

    #[test]
    fn build_rejects_bad_parameters() {
        assert_eq!(
            SuperimposedCode::build(2, 2, 3).unwrap_err(),
            CodeError::FieldTooSmall { q: 2, required: 4 }
        );
        assert_eq!(
            SuperimposedCode::build(4, 2, 2).unwrap_err(),
            CodeError::NonPrimeModulus(4)
        );
        assert!(matches!(
            SuperimposedCode::build(5, 1, 2),
            Err(CodeError::InvalidDimension(1))
        ));
        assert!(matches!(
            SuperimposedCode::build(5, 2, 1),
            Err(CodeError::InvalidOrder(1))
        ));
    }

    #[test]
    fn build_parameters_5_3_2() {
        let code = SuperimposedCode::build(5, 3, 2).unwrap();
        assert_eq!(code.length(), 25);
        assert_eq!(code.size(), 125);
        assert_eq!(code.num_blocks(), 5);
    }

    #[test]
    fn pairwise_block_agreement_at_most_k_minus_1() {
        for (q, k, t) in [(3u64, 2u32, 3u32), (5, 3, 2), (5, 2, 5)] {
            let code = SuperimposedCode::build(q, k, t).unwrap();
            for a in 0..code.size() {
                for b in a + 1..code.size() {
                    let agree = code
                        .column_symbols(a)
                        .iter()
                        .zip(code.column_symbols(b))
                        .filter(|(x, y)| x == y)
                        .count();
                    assert!(
                        agree < k as usize,
                        "columns {a},{b} agree in {agree} blocks (q={q},k={k},t={t})"
                    );
                }
            }
        }
    }

    #[test]
    fn exhaustive_disjunct_5_3_2() {
        // 2-disjunctness: no column is covered by the OR of any two others.
        let code = SuperimposedCode::build(5, 3, 2).unwrap();
        let cols: Vec<_> = (0..code.size()).map(|c| code.column_bits(c)).collect();
        for a in 0..code.size() {
            for b in a + 1..code.size() {
                let mut or = cols[a].clone();
                or.or_assign(&cols[b]);
                for (c, col) in cols.iter().enumerate() {
                    if c != a && c != b {
                        assert!(!col.covered_by(&or), "column {c} covered by {{{a},{b}}}");
                    }
                }
            }
        }
    }

    #[test]
    fn decompose_round_trip_exhaustive_3_2_3() {
        // Every OR of <= t columns decomposes to exactly its source set.
        let code = SuperimposedCode::build(3, 2, 3).unwrap();
        for subset in subsets_le(code.size(), 3) {
            let vectors: Vec<_> = subset.iter().map(|&c| code.column_bits(c)).collect();
            let sum = boolean_sum(code.length(), &vectors).unwrap();
            let got = code.decompose(&sum, 3).unwrap();
            let want: BTreeSet<usize> = subset.iter().copied().collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn decompose_edge_cases() {
        let code = SuperimposedCode::build(3, 2, 3).unwrap();
        // Single codeword identity.
        let got = code.decompose(&code.column_bits(5), 3).unwrap();
        assert_eq!(got, BTreeSet::from([5]));
        // All-zero observation.
        assert!(code.decompose(&BitVector::zeros(12), 3).unwrap().is_empty());
        // Non-sum observation.
        let mut junk = BitVector::zeros(12);
        junk.set(0, true);
        assert_eq!(code.decompose(&junk, 3).unwrap_err(), CodeError::NotDecomposable);
        // A valid 3-sum requested at order 2 exceeds the cover budget.
        let three = boolean_sum(
            12,
            &[code.column_bits(0), code.column_bits(4), code.column_bits(8)],
        )
        .unwrap();
        assert_eq!(
            code.decompose(&three, 2).unwrap_err(),
            CodeError::AmbiguousDecomposition { cover: 3, max_order: 2 }
        );
        // Length and order validation.
        assert!(matches!(
            code.decompose(&BitVector::zeros(11), 3),
            Err(CodeError::LengthMismatch { .. })
        ));
        assert!(matches!(
            code.decompose(&BitVector::zeros(12), 4),
            Err(CodeError::OrderExceedsCode { .. })
        ));
    }

    #[test]
    fn boolean_sum_examples() {
        let code = SuperimposedCode::build(3, 2, 3).unwrap();
        let b = code.length();
        assert!(boolean_sum(b, &[]).unwrap().is_zero());
        let c1 = code.column_bits(1);
        assert_eq!(boolean_sum(b, std::slice::from_ref(&c1)).unwrap(), c1);
        // Per-bit max oracle.
        let c2 = code.column_bits(7);
        let sum = boolean_sum(b, &[c1.clone(), c2.clone()]).unwrap();
        for i in 0..b {
            let expect = u8::from(c1.get(i)).max(u8::from(c2.get(i))) == 1;
            assert_eq!(sum.get(i), expect);
        }
        assert!(matches!(
            boolean_sum(b, &[BitVector::zeros(5)]),
            Err(CodeError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn cluster_sizes() {
        let code = SuperimposedCode::build(3, 2, 3).unwrap();
        let c3 = code.clone().assign_clusters(3).unwrap();
        assert_eq!(c3.clusters().unwrap().cluster_size, 3);
        let c2 = code.clone().assign_clusters(2).unwrap();
        assert_eq!(c2.clusters().unwrap().cluster_size, 4);
        // Column 8 is the leftover of the 2-user split.
        assert_eq!(c2.phase_of(8).unwrap_err(), CodeError::UnassignedColumn(8));
        assert!(matches!(
            code.clone().assign_clusters(10),
            Err(CodeError::TooManyUsers { .. })
        ));
    }

    #[test]
    fn encode_phase_round_trip() {
        let code = SuperimposedCode::build(3, 2, 3).unwrap().assign_clusters(3).unwrap();
        for user in 0..3 {
            for phase in 0..3 {
                let sap = code.encode_pilot(user, phase).unwrap();
                assert_eq!(sap.owner, user);
                let range = code.cluster_range(user).unwrap();
                assert_eq!(sap.bits, code.column_bits(range.start + phase));
                assert_eq!(code.phase_of(range.start + phase).unwrap(), (user, phase));
            }
        }
        // Deterministic partition: the fourth column belongs to the second
        // user at its first phase.
        assert_eq!(code.phase_of(3).unwrap(), (1, 0));
        assert!(matches!(
            code.encode_pilot(1, 3),
            Err(CodeError::PhaseOutOfRange { .. })
        ));
    }

    #[test]
    fn pilot_phase_value_round_trip() {
        let code = SuperimposedCode::build(3, 2, 3).unwrap().assign_clusters(3).unwrap();
        for user in 0..3 {
            for phase in 0..3 {
                let p = code.pilot_phase(user, phase).unwrap();
                assert_eq!(PilotPhase::index_of(p.value, code.size()), p.index);
            }
        }
    }

    #[test]
    fn export_is_byte_exact_and_well_formed() {
        let code = SuperimposedCode::build(3, 2, 3).unwrap();
        let mut a = Vec::new();
        code.write_text(&mut a).unwrap();
        let mut b = Vec::new();
        code.write_text(&mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "3 2 3 12 9");
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 12);
        assert!(rows.iter().all(|r| r.len() == 9));
        // Column weights readable back from the rows.
        for c in 0..9 {
            let w = rows.iter().filter(|r| r.as_bytes()[c] == b'1').count();
            assert_eq!(w, 4);
        }
    }

    #[test]
    fn decompose_round_trip_randomized_7_3_3() {
        use rand::seq::SliceRandom;
        use rand::Rng;
        let code = SuperimposedCode::build(7, 3, 3).unwrap();
        assert_eq!((code.length(), code.size()), (49, 343));
        let mut rng = crate::rng::stream_rng(17, 0);
        for _ in 0..500 {
            let size = rng.gen_range(1..=3usize);
            let mut cols: Vec<usize> = (0..code.size()).collect();
            cols.shuffle(&mut rng);
            cols.truncate(size);
            cols.sort_unstable();
            let vectors: Vec<_> = cols.iter().map(|&c| code.column_bits(c)).collect();
            let sum = boolean_sum(code.length(), &vectors).unwrap();
            let got = code.decompose(&sum, 3).unwrap();
            assert_eq!(got.into_iter().collect::<Vec<_>>(), cols);
        }
    }

    #[test]
    fn build_rejects_oversized_codes() {
        assert!(matches!(
            SuperimposedCode::build(1009, 4, 2),
            Err(CodeError::SizeOverflow { .. })
        ));
    }

    #[test]
    fn primes() {
        assert!(is_prime(2) && is_prime(101) && !is_prime(1) && !is_prime(91));
        assert_eq!(largest_prime_at_most(102), Some(101));
        assert_eq!(largest_prime_at_most(1), None);
    }

    #[test]
    fn subset_helper_counts() {
        assert_eq!(subsets_le(5, 2).len(), 1 + 5 + 10);
    }
}
