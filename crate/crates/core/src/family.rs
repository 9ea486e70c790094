//! Set families over `[n]`, product (biased) measures, and the intersecting predicates.
//!
//! Subsets of `[n]` are `n`-bit masks: coordinate `i` (0-based) is bit `i`.
//! A family is a bit vector of length `2^n` indexed by mask.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{out_of_range, Error, Result};
use crate::scalar::Scalar;

pub type SetMask = u32;

/// Largest ground set for which families are materialized.
pub const MAX_FAMILY_N: usize = 20;

/// Bias vector `p = (p_1, ..., p_n)` with every entry in `(0, 1)`.
///
/// Sortedness is not enforced; `q_i = 1 - p_i` is always derived.
#[derive(Clone, Debug, PartialEq)]
pub struct BiasVector<S = f64> {
    p: Vec<S>,
}

impl<S: Scalar> BiasVector<S> {
    pub fn new(p: Vec<S>) -> Result<Self> {
        if p.is_empty() {
            return Err(out_of_range("n", 0, "n >= 1"));
        }
        for (index, v) in p.iter().enumerate() {
            if !(*v > S::zero() && *v < S::one()) {
                return Err(Error::InvalidBias {
                    index,
                    value: v.to_string(),
                });
            }
        }
        Ok(BiasVector { p })
    }

    pub fn uniform(n: usize, p: S) -> Result<Self> {
        Self::new(vec![p; n])
    }

    /// Parses a comma separated list. A single entry together with `n` gives a uniform vector.
    pub fn parse_list(s: &str, n: Option<usize>) -> Result<Self> {
        let p: Vec<S> = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(S::parse)
            .collect::<Result<_>>()?;
        match (p.len(), n) {
            (1, Some(n)) => Self::uniform(n, p[0].clone()),
            (k, Some(n)) if k != n => Err(Error::DimensionMismatch {
                expected: n,
                found: k,
            }),
            _ => Self::new(p),
        }
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self, i: usize) -> &S {
        &self.p[i]
    }

    pub fn q(&self, i: usize) -> S {
        S::one() - self.p[i].clone()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.p
    }

    pub fn is_non_increasing(&self) -> bool {
        self.p.windows(2).all(|w| w[0] >= w[1])
    }

    pub fn is_uniform(&self) -> bool {
        self.p.windows(2).all(|w| w[0] == w[1])
    }

    pub fn max(&self) -> S {
        self.p.iter().cloned().reduce(S::max_of).expect("non-empty")
    }

    /// Coordinates attaining the maximum bias.
    pub fn argmax(&self) -> Vec<usize> {
        let m = self.max();
        (0..self.n()).filter(|&i| self.p[i].ties(&m)).collect()
    }

    /// Copy with entries sorted into non-increasing order.
    pub fn sorted_desc(&self) -> Self {
        let mut p = self.p.clone();
        p.sort_by(|a, b| crate::scalar::cmp_scalar(b, a));
        BiasVector { p }
    }

    pub fn with_entry(&self, i: usize, v: S) -> Result<Self> {
        let mut p = self.p.clone();
        p[i] = v;
        Self::new(p)
    }

    pub fn to_f64(&self) -> BiasVector<f64> {
        BiasVector {
            p: self.p.iter().map(Scalar::to_f64).collect(),
        }
    }

    /// `mu_p(A)` for every mask `A`, indexed by mask.
    pub fn set_measures(&self) -> Vec<S> {
        let mut table = vec![S::one()];
        for i in 0..self.n() {
            let (p, q) = (self.p[i].clone(), self.q(i));
            let lower: Vec<S> = table.iter().map(|t| t.clone() * q.clone()).collect();
            let upper: Vec<S> = table.iter().map(|t| t.clone() * p.clone()).collect();
            table = lower;
            table.extend(upper);
        }
        table
    }
}

#[derive(Serialize, Deserialize)]
struct BiasRepr<S> {
    n: usize,
    p: Vec<S>,
}

impl<S: Scalar> Serialize for BiasVector<S> {
    fn serialize<Se: Serializer>(&self, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
        BiasRepr {
            n: self.n(),
            p: self.p.clone(),
        }
        .serialize(s)
    }
}

impl<'de, S: Scalar + DeserializeOwned> Deserialize<'de> for BiasVector<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = BiasRepr::<S>::deserialize(d)?;
        if repr.n != repr.p.len() {
            return Err(serde::de::Error::custom(format!(
                "n = {} but {} biases given",
                repr.n,
                repr.p.len()
            )));
        }
        BiasVector::new(repr.p).map_err(serde::de::Error::custom)
    }
}

/// `mu_p(A) = prod_{i in A} p_i * prod_{j not in A} q_j`.
pub fn mu_of_set<S: Scalar>(p: &BiasVector<S>, a: SetMask) -> S {
    (0..p.n()).fold(S::one(), |acc, i| {
        if a >> i & 1 == 1 {
            acc * p.p(i).clone()
        } else {
            acc * p.q(i)
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyMeasureResult<S> {
    pub value: S,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_set_terms: Option<BTreeMap<SetMask, S>>,
}

pub fn mu_of_family<S: Scalar>(
    p: &BiasVector<S>,
    f: &SubsetFamily,
    with_terms: bool,
) -> Result<FamilyMeasureResult<S>> {
    check_dims(p.n(), f.n())?;
    let mut value = S::zero();
    let mut terms = with_terms.then(BTreeMap::new);
    for a in f.members() {
        let t = mu_of_set(p, a);
        value = value + t.clone();
        if let Some(m) = terms.as_mut() {
            m.insert(a, t);
        }
    }
    Ok(FamilyMeasureResult {
        value,
        per_set_terms: terms,
    })
}

/// Shorthand for `mu_of_family(..).value`.
pub fn measure<S: Scalar>(p: &BiasVector<S>, f: &SubsetFamily) -> Result<S> {
    Ok(mu_of_family(p, f, false)?.value)
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// A family of subsets of `[n]`, stored as a `2^n`-bit membership vector.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetFamily {
    n: usize,
    words: Vec<u64>,
}

impl SubsetFamily {
    pub fn empty(n: usize) -> Result<Self> {
        if n > MAX_FAMILY_N {
            return Err(Error::OverCap {
                n,
                cap: MAX_FAMILY_N,
                context: "set families",
            });
        }
        let bits = 1usize << n;
        Ok(SubsetFamily {
            n,
            words: vec![0; bits.div_ceil(64)],
        })
    }

    pub fn full(n: usize) -> Result<Self> {
        let mut f = Self::empty(n)?;
        for a in 0..f.universe_size() as SetMask {
            f.insert(a);
        }
        Ok(f)
    }

    pub fn from_members(n: usize, members: impl IntoIterator<Item = SetMask>) -> Result<Self> {
        let mut f = Self::empty(n)?;
        for a in members {
            if (a as usize) >= f.universe_size() {
                return Err(out_of_range("set mask", a, format!("subset of [{n}]")));
            }
            f.insert(a);
        }
        Ok(f)
    }

    pub fn from_predicate(n: usize, pred: impl Fn(SetMask) -> bool) -> Result<Self> {
        let mut f = Self::empty(n)?;
        for a in 0..f.universe_size() as SetMask {
            if pred(a) {
                f.insert(a);
            }
        }
        Ok(f)
    }

    /// Family from a membership bitmap for `n <= 6` (bit `A` set iff `A` is a member).
    pub fn from_bitmap(n: usize, bits: u64) -> Self {
        assert!(n <= 6, "bitmap families need n <= 6");
        let mask = if n == 6 {
            u64::MAX
        } else {
            (1u64 << (1 << n)) - 1
        };
        SubsetFamily {
            n,
            words: vec![bits & mask],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `2^n`.
    pub fn universe_size(&self) -> usize {
        1 << self.n
    }

    pub fn full_set(&self) -> SetMask {
        (self.universe_size() - 1) as SetMask
    }

    pub fn contains(&self, a: SetMask) -> bool {
        let a = a as usize;
        a < self.universe_size() && self.words[a / 64] >> (a % 64) & 1 == 1
    }

    pub fn insert(&mut self, a: SetMask) {
        let a = a as usize;
        self.words[a / 64] |= 1 << (a % 64);
    }

    pub fn remove(&mut self, a: SetMask) {
        let a = a as usize;
        self.words[a / 64] &= !(1 << (a % 64));
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Members in increasing mask order.
    pub fn members(&self) -> impl Iterator<Item = SetMask> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros();
                w &= w - 1;
                Some((wi * 64) as SetMask + b)
            })
        })
    }

    /// 0/1 indicator as a real vector indexed by mask.
    pub fn indicator<S: Scalar>(&self) -> Vec<S> {
        (0..self.universe_size() as SetMask)
            .map(|a| {
                if self.contains(a) {
                    S::one()
                } else {
                    S::zero()
                }
            })
            .collect()
    }

    /// Members with no proper subset in the family.
    pub fn minimal_members(&self) -> Vec<SetMask> {
        let members: Vec<SetMask> = self.members().collect();
        members
            .iter()
            .copied()
            .filter(|&a| !members.iter().any(|&b| b != a && b & a == b))
            .collect()
    }

    pub fn is_up_closed(&self) -> bool {
        self.members()
            .all(|a| (0..self.n).all(|i| self.contains(a | 1 << i)))
    }

    pub fn is_subfamily_of(&self, other: &SubsetFamily) -> bool {
        self.n == other.n
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }

    pub fn symmetric_difference(&self, other: &SubsetFamily) -> Result<SubsetFamily> {
        check_dims(self.n, other.n)?;
        Ok(SubsetFamily {
            n: self.n,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
        })
    }

    pub fn complement(&self) -> SubsetFamily {
        let mut f = self.clone();
        for a in 0..self.universe_size() as SetMask {
            if self.contains(a) {
                f.remove(a);
            } else {
                f.insert(a);
            }
        }
        f
    }

    /// Big-endian hex of the integer `sum_{A in F} 2^A`, padded to `2^n / 4` digits.
    pub fn to_hex(&self) -> String {
        let digits = (self.universe_size() / 4).max(1);
        (0..digits)
            .rev()
            .map(|d| {
                let nibble = (0..4).fold(0u32, |acc, b| {
                    acc | (self.contains((d * 4 + b) as SetMask) as u32) << b
                });
                char::from_digit(nibble, 16).expect("nibble")
            })
            .collect()
    }

    pub fn from_hex(n: usize, hex: &str) -> Result<Self> {
        let mut f = Self::empty(n)?;
        let hex = hex.trim().trim_start_matches("0x");
        for (d, c) in hex.chars().rev().enumerate() {
            let nibble = c
                .to_digit(16)
                .ok_or_else(|| Error::Parse(format!("bad hex digit {c:?}")))?;
            for b in 0..4 {
                if nibble >> b & 1 == 1 {
                    let a = d * 4 + b;
                    if a >= f.universe_size() {
                        return Err(Error::Parse(format!(
                            "hex family has a member outside 2^[{n}]"
                        )));
                    }
                    f.insert(a as SetMask);
                }
            }
        }
        Ok(f)
    }
}

impl fmt::Debug for SubsetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SubsetFamily(n={}, ", self.n)?;
        f.debug_set()
            .entries(self.members().map(|a| SetDisplay(a, self.n)))
            .finish()?;
        write!(f, ")")
    }
}

/// Prints a mask as a 1-based set, e.g. `{1,3}`.
pub struct SetDisplay(pub SetMask, pub usize);

impl fmt::Debug for SetDisplay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for SetDisplay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let elems: Vec<String> = (0..self.1)
            .filter(|i| self.0 >> i & 1 == 1)
            .map(|i| (i + 1).to_string())
            .collect();
        write!(f, "{{{}}}", elems.join(","))
    }
}

#[derive(Serialize, Deserialize)]
struct FamilyRepr {
    n: usize,
    members: String,
}

impl Serialize for SubsetFamily {
    fn serialize<Se: Serializer>(&self, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
        FamilyRepr {
            n: self.n,
            members: self.to_hex(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SubsetFamily {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = FamilyRepr::deserialize(d)?;
        SubsetFamily::from_hex(repr.n, &repr.members).map_err(serde::de::Error::custom)
    }
}

/// True iff every `r` members (repetition allowed) share an element.
///
/// Only minimal members are examined: supersets cannot shrink an intersection.
/// Intersections of at most `r` minimal members are accumulated level by level.
pub fn is_r_wise_intersecting(f: &SubsetFamily, r: usize) -> bool {
    assert!(r >= 1, "r must be positive");
    let minimal = f.minimal_members();
    if minimal.is_empty() {
        return true;
    }
    let mut reach: BTreeSet<SetMask> = minimal.iter().copied().collect();
    if reach.contains(&0) {
        return false;
    }
    for _ in 1..r {
        let mut next = reach.clone();
        for &x in &reach {
            for &m in &minimal {
                let y = x & m;
                if y == 0 {
                    return false;
                }
                next.insert(y);
            }
        }
        if next.len() == reach.len() {
            break;
        }
        reach = next;
    }
    true
}

/// True iff `|A ∩ B| >= t` for all members `A, B` (including `A = B`).
pub fn is_t_intersecting(f: &SubsetFamily, t: u32) -> bool {
    let minimal = f.minimal_members();
    minimal
        .iter()
        .all(|&a| minimal.iter().all(|&b| (a & b).count_ones() >= t))
}

/// True iff `A_1 ∩ ... ∩ A_r` is non-empty whenever `A_k` is drawn from `families[k]`.
pub fn is_cross_intersecting(families: &[&SubsetFamily]) -> bool {
    let minimal: Vec<Vec<SetMask>> = families.iter().map(|f| f.minimal_members()).collect();
    if minimal.iter().any(|m| m.is_empty()) {
        return true;
    }
    fn rec(minimal: &[Vec<SetMask>], acc: SetMask) -> bool {
        match minimal.split_first() {
            None => acc != 0,
            Some((head, tail)) => head.iter().all(|&a| {
                let x = acc & a;
                x != 0 && rec(tail, x)
            }),
        }
    }
    rec(&minimal, SetMask::MAX)
}

/// Smallest up-closed family containing `f`.
pub fn up_closure(f: &SubsetFamily) -> SubsetFamily {
    let mut g = f.clone();
    for i in 0..f.n() {
        let bit = 1 << i;
        for a in 0..g.universe_size() as SetMask {
            if a & bit != 0 && g.contains(a ^ bit) {
                g.insert(a);
            }
        }
    }
    g
}

/// The named constructions used throughout. Coordinates are 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NamedFamily {
    /// All sets containing `i`.
    Star { i: usize },
    /// All sets avoiding `i`.
    ComplementOfStar { i: usize },
    /// `{A : |A ∩ [m]| >= k}`.
    Majority { k: usize, m: usize },
    /// `Majority { k: 3, m: 4 }`.
    BraceDaykin,
    /// `{G : |G ∩ [2i+2]| >= i+2}`; extremal 2-wise 2-intersecting family for the `i`-th band.
    Ak { i: usize },
    /// Sets containing coordinate 0 with more than `n/2` elements, other than `{0}`,
    /// together with `[n] \ {0}`. Not contained in any star.
    NearStarThreeWise,
    /// Sets containing coordinate 0 other than `{0}`, together with `[n] \ {0}`.
    NearStarTwoWise,
}

impl NamedFamily {
    pub fn build(self, n: usize) -> Result<SubsetFamily> {
        let coord = |i: usize| {
            if i < n {
                Ok(())
            } else {
                Err(out_of_range("coordinate", i, format!("0 <= i < {n}")))
            }
        };
        let full = ((1u64 << n) - 1) as SetMask;
        match self {
            NamedFamily::Star { i } => {
                coord(i)?;
                SubsetFamily::from_predicate(n, |a| a >> i & 1 == 1)
            }
            NamedFamily::ComplementOfStar { i } => {
                coord(i)?;
                SubsetFamily::from_predicate(n, |a| a >> i & 1 == 0)
            }
            NamedFamily::Majority { k, m } => {
                if m > n || m == 0 {
                    return Err(out_of_range("m", m, format!("1 <= m <= n = {n}")));
                }
                let window = ((1u64 << m) - 1) as SetMask;
                SubsetFamily::from_predicate(n, |a| (a & window).count_ones() as usize >= k)
            }
            NamedFamily::BraceDaykin => NamedFamily::Majority { k: 3, m: 4 }.build(n),
            NamedFamily::Ak { i } => NamedFamily::Majority {
                k: i + 2,
                m: 2 * i + 2,
            }
            .build(n),
            NamedFamily::NearStarThreeWise => {
                if n < 2 {
                    return Err(out_of_range("n", n, "n >= 2"));
                }
                SubsetFamily::from_predicate(n, |a| {
                    let big = a & 1 == 1 && 2 * a.count_ones() as usize > n && a != 1;
                    big || a == full ^ 1
                })
            }
            NamedFamily::NearStarTwoWise => {
                if n < 2 {
                    return Err(out_of_range("n", n, "n >= 2"));
                }
                SubsetFamily::from_predicate(n, |a| (a & 1 == 1 && a != 1) || a == full ^ 1)
            }
        }
    }
}

pub fn star(n: usize, i: usize) -> Result<SubsetFamily> {
    NamedFamily::Star { i }.build(n)
}

/// The star centre if `f` is exactly a star.
pub fn star_center(f: &SubsetFamily) -> Option<usize> {
    (0..f.n()).find(|&i| star(f.n(), i).map(|s| &s == f).unwrap_or(false))
}

/// Centres of all stars containing `f` (every member contains the centre).
pub fn containing_stars(f: &SubsetFamily) -> Vec<usize> {
    (0..f.n())
        .filter(|&i| f.members().all(|a| a >> i & 1 == 1))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use proptest::prelude::*;

    fn r(s: &str) -> Rational {
        Rational::parse(s).unwrap()
    }

    #[test]
    fn mu_of_set_examples() {
        let p = BiasVector::new(vec![0.5, 0.5, 0.5]).unwrap();
        assert_eq!(mu_of_set(&p, 0b001), 0.125);
        let p = BiasVector::new(vec![r("0.4"), r("0.3"), r("0.2")]).unwrap();
        assert_eq!(mu_of_set(&p, 0), r("0.336"));
        assert_eq!(mu_of_set(&p, 0b111), r("0.024"));
    }

    #[test]
    fn bias_vector_rejects_boundary_values() {
        assert!(matches!(
            BiasVector::new(vec![0.3, 1.0]),
            Err(Error::InvalidBias { index: 1, .. })
        ));
        assert!(BiasVector::new(vec![0.0]).is_err());
        assert!(BiasVector::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn family_measure_examples() {
        let p = BiasVector::new(vec![r("0.4"), r("0.3"), r("0.2")]).unwrap();
        let s = star(3, 0).unwrap();
        assert_eq!(measure(&p, &s).unwrap(), r("0.4"));
        assert_eq!(
            measure(&p, &SubsetFamily::full(3).unwrap()).unwrap(),
            Rational::one()
        );
        assert_eq!(
            measure(&p, &SubsetFamily::empty(3).unwrap()).unwrap(),
            Rational::zero()
        );

        // {A : |A ∩ [3]| >= 2} at n = 4
        let p = BiasVector::new(vec![r("0.7"), r("0.4"), r("0.3"), r("0.9")]).unwrap();
        let maj = NamedFamily::Majority { k: 2, m: 3 }.build(4).unwrap();
        let (p1, p2, p3) = (r("0.7"), r("0.4"), r("0.3"));
        let expected = p1.clone() * p2.clone() + p1.clone() * p3.clone() + p2.clone() * p3.clone()
            - Rational::from_usize(2) * p1 * p2 * p3;
        assert_eq!(measure(&p, &maj).unwrap(), expected);

        let p = BiasVector::uniform(3, r("0.5")).unwrap();
        let maj = NamedFamily::Majority { k: 2, m: 3 }.build(3).unwrap();
        assert_eq!(measure(&p, &maj).unwrap(), r("1/2"));
    }

    #[test]
    fn per_set_terms_sum_to_value() {
        let p = BiasVector::new(vec![0.4, 0.3, 0.2]).unwrap();
        let f = NamedFamily::Majority { k: 2, m: 3 }.build(3).unwrap();
        let res = mu_of_family(&p, &f, true).unwrap();
        let terms = res.per_set_terms.unwrap();
        assert_eq!(terms.len(), 4);
        let sum: f64 = terms.values().sum();
        assert!((sum - res.value).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = BiasVector::new(vec![0.4, 0.3]).unwrap();
        let f = SubsetFamily::full(3).unwrap();
        assert_eq!(
            measure(&p, &f),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 3
            })
        );
    }

    #[test]
    fn intersecting_examples() {
        let s = star(3, 1).unwrap();
        for r in 2..6 {
            assert!(is_r_wise_intersecting(&s, r));
        }
        let maj = NamedFamily::Majority { k: 2, m: 3 }.build(3).unwrap();
        assert!(is_r_wise_intersecting(&maj, 2));
        assert!(!is_r_wise_intersecting(&maj, 3));
        let empty = SubsetFamily::empty(3).unwrap();
        assert!(is_r_wise_intersecting(&empty, 2));
        assert!(is_r_wise_intersecting(&empty, 7));
        let with_empty_set = SubsetFamily::from_members(3, [0]).unwrap();
        assert!(!is_r_wise_intersecting(&with_empty_set, 2));
    }

    #[test]
    fn up_closure_examples() {
        let f = SubsetFamily::from_members(2, [0b01]).unwrap();
        assert_eq!(
            up_closure(&f),
            SubsetFamily::from_members(2, [0b01, 0b11]).unwrap()
        );
        let s = star(4, 2).unwrap();
        assert_eq!(up_closure(&s), s);
        let f = SubsetFamily::from_members(1, [0]).unwrap();
        assert_eq!(
            up_closure(&f),
            SubsetFamily::from_members(1, [0, 1]).unwrap()
        );
    }

    #[test]
    fn named_family_examples() {
        let p = BiasVector::uniform(4, r("0.3")).unwrap();
        let g0 = NamedFamily::Ak { i: 0 }.build(4).unwrap();
        assert_eq!(
            g0,
            SubsetFamily::from_predicate(4, |a| a & 0b11 == 0b11).unwrap()
        );
        assert_eq!(measure(&p, &g0).unwrap(), r("0.09"));

        let half = BiasVector::uniform(4, r("1/2")).unwrap();
        let bd = NamedFamily::BraceDaykin.build(4).unwrap();
        assert_eq!(measure(&half, &bd).unwrap(), r("5/16"));

        for rr in 2..5usize {
            let pv = r("0.7");
            let q = Rational::one() - pv.clone();
            let f = NamedFamily::Majority { k: rr, m: rr + 1 }
                .build(rr + 1)
                .unwrap();
            let bias = BiasVector::uniform(rr + 1, pv.clone()).unwrap();
            let expected =
                Rational::from_usize(rr + 1) * pv.powi(rr as u32) * q + pv.powi(rr as u32 + 1);
            assert_eq!(measure(&bias, &f).unwrap(), expected);
            assert!(is_r_wise_intersecting(&f, rr));
            assert!(!is_r_wise_intersecting(&f, rr + 1));
        }

        assert!(NamedFamily::Star { i: 3 }.build(3).is_err());
        assert!(NamedFamily::BraceDaykin.build(3).is_err());
    }

    #[test]
    fn near_star_families() {
        for n in 3..=8 {
            let a = NamedFamily::NearStarThreeWise.build(n).unwrap();
            // three-wise intersecting exactly for even n
            assert_eq!(is_r_wise_intersecting(&a, 3), n % 2 == 0, "n = {n}");
            assert!(containing_stars(&a).is_empty());
            let b = NamedFamily::NearStarTwoWise.build(n).unwrap();
            assert!(is_r_wise_intersecting(&b, 2));
            assert!(containing_stars(&b).is_empty());
        }
    }

    #[test]
    fn near_star_deficit_positive_for_even_n() {
        for p in [0.55, 0.6, 0.65] {
            for n in (4..=12).step_by(2) {
                let bias = BiasVector::uniform(n, p).unwrap();
                let a = NamedFamily::NearStarThreeWise.build(n).unwrap();
                let deficit = p - measure(&bias, &a).unwrap();
                assert!(deficit > 0.0, "p = {p}, n = {n}");
            }
        }
    }

    #[test]
    fn near_star_two_wise_converges() {
        // n = 3 and n = 4 tie exactly: p q^2 - q p^2 = p q^3 - q p^3 = pq(q - p)
        let p = 0.3;
        let mut prev = f64::INFINITY;
        for n in 4..=12 {
            let bias = BiasVector::uniform(n, p).unwrap();
            let a = NamedFamily::NearStarTwoWise.build(n).unwrap();
            let deficit = p - measure(&bias, &a).unwrap();
            assert!(deficit > 0.0 && deficit < prev);
            prev = deficit;
        }
    }

    #[test]
    fn hex_round_trip_and_layout() {
        let f = SubsetFamily::from_members(2, [0b01, 0b11]).unwrap();
        assert_eq!(f.to_hex(), "a");
        let s = star(3, 0).unwrap();
        assert_eq!(s.to_hex(), "aa");
        assert_eq!(SubsetFamily::from_hex(3, "aa").unwrap(), s);
        assert!(SubsetFamily::from_hex(2, "1a").is_err());
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"n":3,"members":"aa"}"#);
        let back: SubsetFamily = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn bias_vector_json_omits_q() {
        let p = BiasVector::new(vec![r("0.6"), r("1/3")]).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"n":2,"p":["3/5","1/3"]}"#);
        let back: BiasVector<Rational> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<BiasVector<f64>>(r#"{"n":2,"p":[0.5]}"#).is_err());
        assert!(serde_json::from_str::<BiasVector<f64>>(r#"{"n":1,"p":[1.5]}"#).is_err());
    }

    #[test]
    fn parse_list_uniform_fill() {
        let p = BiasVector::<f64>::parse_list("0.6", Some(4)).unwrap();
        assert_eq!(p.as_slice(), &[0.6; 4]);
        assert!(BiasVector::<f64>::parse_list("0.6,0.5", Some(3)).is_err());
    }

    fn arb_family(n: usize) -> impl Strategy<Value = SubsetFamily> {
        prop::collection::vec(any::<bool>(), 1 << n)
            .prop_map(move |bits| SubsetFamily::from_predicate(n, |a| bits[a as usize]).unwrap())
    }

    proptest! {
        #[test]
        fn measure_bounds_and_monotonicity(
            f in arb_family(4),
            g in arb_family(4),
            p in prop::collection::vec(0.01f64..0.99, 4),
        ) {
            let p = BiasVector::new(p).unwrap();
            let mf = measure(&p, &f).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&mf));
            let total = measure(&p, &SubsetFamily::full(4).unwrap()).unwrap();
            prop_assert!((total - 1.0).abs() < 1e-12);
            let mut union = f.clone();
            for a in g.members() { union.insert(a); }
            prop_assert!(mf <= measure(&p, &union).unwrap() + 1e-15);
            let up = up_closure(&f);
            prop_assert!(up.is_up_closed());
            prop_assert!(f.is_subfamily_of(&up));
            prop_assert!(mf <= measure(&p, &up).unwrap() + 1e-15);
        }

        #[test]
        fn star_measure_is_bias(p in prop::collection::vec(0.01f64..0.99, 1..=10), i in 0usize..10) {
            let n = p.len();
            let i = i % n;
            let bias = BiasVector::new(p.clone()).unwrap();
            let s = star(n, i).unwrap();
            prop_assert!((measure(&bias, &s).unwrap() - p[i]).abs() < 1e-12);
        }
    }

    /// Brute force over all r-tuples of members, independent of the minimal-member shortcut.
    fn brute_r_wise(f: &SubsetFamily, r: usize) -> bool {
        let members: Vec<SetMask> = f.members().collect();
        let k = members.len();
        if k == 0 {
            return true;
        }
        let mut idx = vec![0usize; r];
        loop {
            let x = idx.iter().fold(SetMask::MAX, |acc, &j| acc & members[j]);
            if x == 0 {
                return false;
            }
            let mut pos = 0;
            loop {
                if pos == r {
                    return true;
                }
                idx[pos] += 1;
                if idx[pos] < k {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn intersecting_check_matches_brute_force_and_survives_up_closure() {
        for n in 1..=3usize {
            let count = 1u64 << (1 << n);
            for bits in 0..count {
                let f = SubsetFamily::from_bitmap(n, bits);
                let up = up_closure(&f);
                for r in 2..=4 {
                    let fast = is_r_wise_intersecting(&f, r);
                    assert_eq!(fast, brute_r_wise(&f, r), "n={n} bits={bits:x} r={r}");
                    if fast {
                        assert!(is_r_wise_intersecting(&up, r));
                    }
                }
            }
        }
    }

    #[test]
    fn intersecting_preserved_by_up_closure_n4() {
        let mut rng = 0x9e3779b97f4a7c15u64;
        for _ in 0..3000 {
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            // sparse random families so that intersecting ones actually occur
            let bits = rng & (rng >> 16) & (rng >> 32) & 0xffff;
            let f = SubsetFamily::from_bitmap(4, bits);
            let up = up_closure(&f);
            for r in 2..=4 {
                assert_eq!(is_r_wise_intersecting(&f, r), brute_r_wise(&f, r));
                if is_r_wise_intersecting(&f, r) {
                    assert!(is_r_wise_intersecting(&up, r));
                }
            }
        }
    }
}
