//! Finitely supported multi-indices and monotone (downward closed) index sets.
//!
//! A multi-index assigns a nonnegative exponent to each dimension `m >= 1`,
//! with only finitely many nonzero entries. Monotone sets of such indices
//! drive both the sparse collocation grid and the polynomial chaos basis.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};

/// Error raised by [`MultiIndexSet::generate`] on invalid parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum SetError {
    /// Threshold must satisfy `0 < eps < 1`.
    ThresholdOutOfRange(f64),
    /// A weight left `(0, 1)` at the given dimension.
    WeightOutOfRange { dim: usize, value: f64 },
    /// The weight sequence failed to be strictly decreasing at the given dimension.
    NonDecreasingWeights { dim: usize },
    /// The weights do not decay below the threshold within the supported
    /// dimension range, so the generated set would not be finite.
    NotFinite { dim_cap: usize },
}

impl fmt::Display for SetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetError::ThresholdOutOfRange(e) => {
                write!(f, "threshold must lie in (0, 1), got {e}")
            }
            SetError::WeightOutOfRange { dim, value } => {
                write!(f, "weight at dimension {dim} must lie in (0, 1), got {value}")
            }
            SetError::NonDecreasingWeights { dim } => {
                write!(f, "weight sequence is not strictly decreasing at dimension {dim}")
            }
            SetError::NotFinite { dim_cap } => {
                write!(
                    f,
                    "weights stay above the threshold beyond dimension {dim_cap}; the index set is not finite"
                )
            }
        }
    }
}

impl std::error::Error for SetError {}

/// A finitely supported multi-index: a sparse map `dimension -> exponent`.
///
/// Dimensions are 1-based. Stored entries always have exponent `>= 1`; absent
/// dimensions carry exponent zero. Two values compare equal iff their sparse
/// maps are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex {
    // Sorted by dimension, exponents >= 1.
    entries: Vec<(u32, u32)>,
}

impl MultiIndex {
    /// The zero index (empty support).
    pub fn zero() -> Self {
        MultiIndex::default()
    }

    /// The unit index `e_m` with a single entry of exponent 1 at `dim`.
    pub fn unit(dim: usize) -> Self {
        MultiIndex {
            entries: vec![(dim as u32, 1)],
        }
    }

    /// Build from `(dimension, exponent)` pairs; zero exponents are dropped,
    /// repeated dimensions are summed.
    pub fn from_pairs(pairs: &[(usize, u32)]) -> Self {
        let mut entries: Vec<(u32, u32)> = Vec::with_capacity(pairs.len());
        for &(d, e) in pairs {
            assert!(d >= 1, "dimensions are 1-based");
            if e == 0 {
                continue;
            }
            entries.push((d as u32, e));
        }
        entries.sort_unstable_by_key(|&(d, _)| d);
        let mut merged: Vec<(u32, u32)> = Vec::with_capacity(entries.len());
        for (d, e) in entries {
            match merged.last_mut() {
                Some((ld, le)) if *ld == d => *le += e,
                _ => merged.push((d, e)),
            }
        }
        MultiIndex { entries: merged }
    }

    /// Exponent at `dim` (zero if absent).
    pub fn get(&self, dim: usize) -> u32 {
        self.entries
            .binary_search_by_key(&(dim as u32), |&(d, _)| d)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    /// Sparse `(dimension, exponent)` entries in increasing dimension order.
    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    /// Support: dimensions with nonzero exponent.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(d, _)| d as usize)
    }

    /// Total degree `sum_m alpha_m`.
    pub fn degree(&self) -> u32 {
        self.entries.iter().map(|&(_, e)| e).sum()
    }

    /// Largest dimension with nonzero exponent (0 for the zero index).
    pub fn max_dim(&self) -> usize {
        self.entries.last().map_or(0, |&(d, _)| d as usize)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Componentwise partial order: `self <= other` iff every exponent of
    /// `self` is bounded by the matching exponent of `other`.
    pub fn leq(&self, other: &MultiIndex) -> bool {
        self.entries.iter().all(|&(d, e)| e <= other.get(d as usize))
    }

    /// `self + e_dim`.
    pub fn plus_unit(&self, dim: usize) -> MultiIndex {
        let mut out = self.clone();
        match out.entries.binary_search_by_key(&(dim as u32), |&(d, _)| d) {
            Ok(i) => out.entries[i].1 += 1,
            Err(i) => out.entries.insert(i, (dim as u32, 1)),
        }
        out
    }

    /// `self - e_dim`, or `None` if the exponent at `dim` is zero.
    pub fn minus_unit(&self, dim: usize) -> Option<MultiIndex> {
        let mut out = self.clone();
        match out.entries.binary_search_by_key(&(dim as u32), |&(d, _)| d) {
            Ok(i) => {
                if out.entries[i].1 == 1 {
                    out.entries.remove(i);
                } else {
                    out.entries[i].1 -= 1;
                }
                Some(out)
            }
            Err(_) => None,
        }
    }

    /// Graded lexicographic comparison: ascending total degree, ties broken at
    /// the smallest differing dimension with the larger exponent first.
    fn grlex_cmp(&self, other: &MultiIndex) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let mut i = 0;
        let mut j = 0;
        loop {
            match (self.entries.get(i), other.entries.get(j)) {
                (Some(&(da, ea)), Some(&(db, eb))) => {
                    if da < db {
                        // self has a nonzero exponent where other has zero.
                        return Ordering::Less;
                    }
                    if db < da {
                        return Ordering::Greater;
                    }
                    if ea != eb {
                        // Larger exponent at the earliest dimension first.
                        return eb.cmp(&ea);
                    }
                    i += 1;
                    j += 1;
                }
                (Some(_), None) => return Ordering::Less,
                (None, Some(_)) => return Ordering::Greater,
                (None, None) => return Ordering::Equal,
            }
        }
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return Ok(());
        }
        let mut first = true;
        for &(d, e) in &self.entries {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{d}:{e}")?;
            first = false;
        }
        Ok(())
    }
}

/// Relative slack applied to the inclusive threshold comparison so that
/// products representable only up to round-off still land on the correct side
/// of the boundary.
const THRESHOLD_SLACK: f64 = 1e-12;

/// Dimension cap protecting against weight sequences that never decay below
/// the threshold.
const DIM_CAP: usize = 1_000_000;

/// A finite set of multi-indices in a deterministic canonical order
/// (graded lexicographic), with constant-time membership lookup.
#[derive(Debug, Clone)]
pub struct MultiIndexSet {
    members: Vec<MultiIndex>,
    position: HashMap<MultiIndex, usize>,
    max_active_dim: usize,
}

impl MultiIndexSet {
    /// Build a set from arbitrary members. Duplicates are dropped and the
    /// members are put into canonical order; the zero index is *not* added
    /// implicitly. Monotonicity is not required (see [`Self::is_monotone`]).
    pub fn from_members(members: Vec<MultiIndex>) -> Self {
        let mut members = members;
        members.sort_unstable_by(|a, b| a.grlex_cmp(b));
        members.dedup();
        let position = members
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let max_active_dim = members.iter().map(|a| a.max_dim()).max().unwrap_or(0);
        MultiIndexSet {
            members,
            position,
            max_active_dim,
        }
    }

    /// Generate the set of all indices `alpha` with
    /// `prod_{m in supp alpha} eta(m)^{alpha_m} >= eps` (inclusive comparison,
    /// with a tiny relative slack to absorb round-off at the boundary).
    ///
    /// `eta(m)` must be strictly decreasing with values in `(0, 1)`; this is
    /// validated on the dimensions actually visited. The zero index is always
    /// a member (empty product equals one).
    ///
    /// The search extends monotone index sets depth first: exponents grow at a
    /// dimension while the product stays above the threshold, and dimensions
    /// advance while the weight itself does, so no superset is materialized.
    pub fn generate(eta: impl Fn(usize) -> f64, eps: f64) -> Result<Self, SetError> {
        if !(eps > 0.0 && eps < 1.0) || !eps.is_finite() {
            return Err(SetError::ThresholdOutOfRange(eps));
        }
        let floor = eps * (1.0 - THRESHOLD_SLACK);

        // Validate the visited prefix of the weight sequence on the fly.
        let mut checked: Vec<f64> = Vec::new();
        let weight = |m: usize, checked: &mut Vec<f64>| -> Result<f64, SetError> {
            while checked.len() < m {
                let dim = checked.len() + 1;
                let v = eta(dim);
                if !(v > 0.0 && v < 1.0) || !v.is_finite() {
                    return Err(SetError::WeightOutOfRange { dim, value: v });
                }
                if let Some(&prev) = checked.last() {
                    if v >= prev {
                        return Err(SetError::NonDecreasingWeights { dim });
                    }
                }
                checked.push(v);
            }
            Ok(checked[m - 1])
        };

        let mut members = Vec::new();
        // Work stack of (next dimension to try, current index, current product).
        let mut stack: Vec<(usize, MultiIndex, f64)> = vec![(1, MultiIndex::zero(), 1.0)];
        while let Some((m_start, alpha, prod)) = stack.pop() {
            members.push(alpha.clone());
            let mut m = m_start;
            loop {
                if m > DIM_CAP {
                    return Err(SetError::NotFinite { dim_cap: DIM_CAP });
                }
                let eta_m = weight(m, &mut checked)?;
                if prod * eta_m < floor {
                    break;
                }
                let mut extended = alpha.plus_unit(m);
                let mut p = prod * eta_m;
                while p >= floor {
                    stack.push((m + 1, extended.clone(), p));
                    p *= eta_m;
                    extended = extended.plus_unit(m);
                }
                m += 1;
            }
        }
        Ok(Self::from_members(members))
    }

    /// Members in canonical (graded lexicographic) order.
    pub fn members(&self) -> &[MultiIndex] {
        &self.members
    }

    /// Number of members `P`.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Largest dimension active in any member.
    pub fn max_active_dim(&self) -> usize {
        self.max_active_dim
    }

    /// Position of `alpha` in the canonical order, if present.
    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.position.get(alpha).copied()
    }

    pub fn contains(&self, alpha: &MultiIndex) -> bool {
        self.position.contains_key(alpha)
    }

    /// True iff the set is downward closed: every componentwise-smaller index
    /// of a member is also a member. Checked through immediate predecessors.
    pub fn is_monotone(&self) -> bool {
        self.members.iter().all(|alpha| {
            alpha
                .support()
                .all(|m| self.contains(&alpha.minus_unit(m).expect("support entry")))
        })
    }

    /// Downward closure: the smallest monotone set containing all `seeds`.
    pub fn downward_closure(seeds: &[MultiIndex]) -> Self {
        let mut seen: HashMap<MultiIndex, ()> = HashMap::new();
        let mut stack: Vec<MultiIndex> = seeds.to_vec();
        while let Some(alpha) = stack.pop() {
            if seen.contains_key(&alpha) {
                continue;
            }
            for m in alpha.support().collect::<Vec<_>>() {
                stack.push(alpha.minus_unit(m).expect("support entry"));
            }
            seen.insert(alpha, ());
        }
        if seen.is_empty() {
            seen.insert(MultiIndex::zero(), ());
        }
        Self::from_members(seen.into_keys().collect())
    }

    /// Write the set as text: a header line carrying the generation
    /// parameters, then one line per index with `dim:exp` pairs separated by
    /// spaces (the zero index is an empty line).
    pub fn write_text(
        &self,
        mut out: impl Write,
        eps: f64,
        eta_description: &str,
    ) -> io::Result<()> {
        writeln!(
            out,
            "# eps={:e} eta={} P={} M_A={}",
            eps,
            eta_description,
            self.len(),
            self.max_active_dim
        )?;
        for alpha in &self.members {
            writeln!(out, "{alpha}")?;
        }
        Ok(())
    }

    /// Parse the output of [`Self::write_text`]; the header line is skipped.
    pub fn parse_text(text: &str) -> Result<Self, String> {
        let mut members = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.starts_with('#') {
                continue;
            }
            let mut pairs = Vec::new();
            for tok in line.split_whitespace() {
                let (d, e) = tok
                    .split_once(':')
                    .ok_or_else(|| format!("line {}: malformed pair {tok:?}", lineno + 1))?;
                let d: usize = d
                    .parse()
                    .map_err(|e| format!("line {}: bad dimension: {e}", lineno + 1))?;
                let e: u32 = e
                    .parse()
                    .map_err(|e| format!("line {}: bad exponent: {e}", lineno + 1))?;
                pairs.push((d, e));
            }
            members.push(MultiIndex::from_pairs(&pairs));
        }
        Ok(Self::from_members(members))
    }

    /// Stable fingerprint of the canonical text form (without header).
    pub fn fingerprint(&self) -> u64 {
        let mut buf = String::new();
        for alpha in &self.members {
            buf.push_str(&alpha.to_string());
            buf.push('\n');
        }
        crate::util::fnv1a(buf.as_bytes())
    }
}

/// Default weight sequence `eta(m) = (m+1)^-2`, mirroring the quadratic decay
/// of the material coefficient amplitudes.
pub fn inverse_square_weights(m: usize) -> f64 {
    let b = (m + 1) as f64;
    (b * b).recip()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(pairs: &[(usize, u32)]) -> MultiIndex {
        MultiIndex::from_pairs(pairs)
    }

    #[test]
    fn leq_zero_is_minimal() {
        let beta = idx(&[(1, 3), (7, 2)]);
        assert!(MultiIndex::zero().leq(&beta));
        assert!(MultiIndex::zero().leq(&MultiIndex::zero()));
    }

    #[test]
    fn leq_componentwise() {
        let a = idx(&[(1, 2), (3, 1)]);
        let b = idx(&[(1, 2), (2, 1), (3, 1)]);
        assert!(a.leq(&b));
        assert!(!b.leq(&a));
    }

    #[test]
    fn leq_incomparable_pair() {
        let a = idx(&[(1, 1), (2, 2)]);
        let b = idx(&[(1, 2), (2, 1)]);
        assert!(!a.leq(&b));
        assert!(!b.leq(&a));
    }

    #[test]
    fn monotone_examples() {
        let zero_only = MultiIndexSet::from_members(vec![MultiIndex::zero()]);
        assert!(zero_only.is_monotone());

        let full_box = MultiIndexSet::from_members(vec![
            MultiIndex::zero(),
            idx(&[(1, 1)]),
            idx(&[(2, 1)]),
            idx(&[(1, 1), (2, 1)]),
        ]);
        assert!(full_box.is_monotone());

        let gap = MultiIndexSet::from_members(vec![MultiIndex::zero(), idx(&[(1, 1), (2, 1)])]);
        assert!(!gap.is_monotone());
    }

    #[test]
    fn generate_trivial_threshold() {
        let set = MultiIndexSet::generate(inverse_square_weights, 0.9).unwrap();
        assert_eq!(set.len(), 1);
        assert!(set.members()[0].is_zero());
    }

    #[test]
    fn generate_validates_parameters() {
        assert!(matches!(
            MultiIndexSet::generate(inverse_square_weights, 0.0),
            Err(SetError::ThresholdOutOfRange(_))
        ));
        assert!(matches!(
            MultiIndexSet::generate(|_| 1.5, 0.1),
            Err(SetError::WeightOutOfRange { .. })
        ));
        assert!(matches!(
            MultiIndexSet::generate(|_| 0.5, 0.1),
            Err(SetError::NonDecreasingWeights { .. })
        ));
    }

    #[test]
    fn generate_small_set_matches_hand_enumeration() {
        // eta_m = (m+1)^-2, eps = 0.05: products are 1/prod (m+1)^(2 a_m),
        // so membership means prod (m+1)^(a_m) <= sqrt(20) = 4.47, i.e. the
        // admissible indices are 0, e1, 2e1, e2, e3.
        let set = MultiIndexSet::generate(inverse_square_weights, 0.05).unwrap();
        let expect = vec![
            MultiIndex::zero(),
            idx(&[(1, 1)]),
            idx(&[(2, 1)]),
            idx(&[(3, 1)]),
            idx(&[(1, 2)]),
        ];
        let expect = MultiIndexSet::from_members(expect);
        assert_eq!(set.members(), expect.members());
        assert_eq!(set.max_active_dim(), 3);
        assert!(set.is_monotone());
    }

    #[test]
    fn generated_sets_are_monotone_and_nested() {
        let coarse = MultiIndexSet::generate(inverse_square_weights, 1e-2).unwrap();
        let fine = MultiIndexSet::generate(inverse_square_weights, 1e-3).unwrap();
        assert!(coarse.is_monotone());
        assert!(fine.is_monotone());
        assert!(coarse.len() < fine.len());
        for alpha in coarse.members() {
            assert!(fine.contains(alpha));
        }
    }

    #[test]
    fn canonical_order_is_graded_lexicographic() {
        let set = MultiIndexSet::from_members(vec![
            idx(&[(2, 1)]),
            idx(&[(1, 1), (2, 1)]),
            MultiIndex::zero(),
            idx(&[(1, 2)]),
            idx(&[(1, 1)]),
            idx(&[(2, 2)]),
        ]);
        let shown: Vec<String> = set.members().iter().map(|a| a.to_string()).collect();
        assert_eq!(shown, vec!["", "1:1", "2:1", "1:2", "1:1 2:1", "2:2"]);
        // The zero index is always first: position 0 anchors mean values.
        assert_eq!(set.position(&MultiIndex::zero()), Some(0));
    }

    #[test]
    fn text_round_trip() {
        let set = MultiIndexSet::generate(inverse_square_weights, 5e-3).unwrap();
        let mut buf = Vec::new();
        set.write_text(&mut buf, 5e-3, "inverse-square").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back = MultiIndexSet::parse_text(&text).unwrap();
        assert_eq!(back.members(), set.members());
        assert_eq!(back.fingerprint(), set.fingerprint());
    }

    #[test]
    fn downward_closure_contains_predecessors() {
        let closure = MultiIndexSet::downward_closure(&[idx(&[(1, 2), (3, 1)])]);
        assert!(closure.is_monotone());
        assert_eq!(closure.len(), 6);
        assert!(closure.contains(&idx(&[(1, 1), (3, 1)])));
        assert!(closure.contains(&MultiIndex::zero()));
    }
}
