//! Exhaustive ground truth over monotone families at small `n`.
//!
//! A monotone family is determined by its antichain of minimal members. The
//! enumerator walks antichains by a depth-first search over masks in increasing
//! order; a mask can only be added if it is not already in the up-closure of the
//! chosen ones (a proper subset of a chosen mask is numerically smaller, so it
//! was already passed over). Up-closure never breaks the intersecting
//! properties and never lowers a product measure, so maximizing over monotone
//! families is the same as maximizing over all families.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{star, star_center, BiasVector, SetMask, SubsetFamily};
use crate::fourier::{expand, high_degree_mass};
use crate::scalar::{cmp_scalar, Scalar};
use crate::stability;

/// Largest `n` the single-family enumerator accepts. Families are `u64` bitmaps, so 6 is a hard limit.
pub const ORACLE_MAX_N: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Constraint {
    /// Every monotone family.
    None,
    /// Every `r` members share an element.
    RWise { r: usize },
    /// Every two members share at least `t` elements.
    TIntersecting { t: u32 },
}

struct Enumerator {
    size: usize,
    up: Vec<u64>,
    constraint: Constraint,
}

impl Enumerator {
    fn new(n: usize, constraint: Constraint) -> Result<Self> {
        if n > ORACLE_MAX_N {
            return Err(Error::OverCap {
                n,
                cap: ORACLE_MAX_N,
                context: "exhaustive enumeration",
            });
        }
        if let Constraint::RWise { r } = constraint {
            if r < 2 {
                return Err(crate::error::out_of_range("r", r, "r >= 2"));
            }
        }
        let size = 1usize << n;
        let up = (0..size)
            .map(|e| {
                (0..size)
                    .filter(|&a| a & e == e)
                    .fold(0u64, |acc, a| acc | 1 << a)
            })
            .collect();
        Ok(Enumerator {
            size,
            up,
            constraint,
        })
    }

    fn run(&self, visit: &mut dyn FnMut(u64)) -> u64 {
        let mut count = 0;
        let levels = match self.constraint {
            Constraint::RWise { r } => vec![0u64; r - 1],
            _ => Vec::new(),
        };
        self.dfs(0, 0, &mut Vec::new(), &levels, &mut count, visit);
        count
    }

    /// `levels[k - 1]` is the bitmap of intersections of at most `k` chosen masks.
    fn dfs(
        &self,
        start: usize,
        family: u64,
        chosen: &mut Vec<usize>,
        levels: &[u64],
        count: &mut u64,
        visit: &mut dyn FnMut(u64),
    ) {
        *count += 1;
        visit(family);
        for e in start..self.size {
            if family >> e & 1 == 1 {
                continue;
            }
            let next_levels = match self.constraint {
                Constraint::None => Vec::new(),
                Constraint::TIntersecting { t } => {
                    if (e as u32).count_ones() < t
                        || chosen.iter().any(|&c| ((c & e) as u32).count_ones() < t)
                    {
                        continue;
                    }
                    Vec::new()
                }
                Constraint::RWise { .. } => {
                    if e == 0 || bits(*levels.last().expect("r >= 2")).any(|x| x & e == 0) {
                        continue;
                    }
                    let mut next = Vec::with_capacity(levels.len());
                    for k in 0..levels.len() {
                        let mut l = levels[k] | 1 << e;
                        if k > 0 {
                            for x in bits(levels[k - 1]) {
                                l |= 1 << (x & e);
                            }
                        }
                        next.push(l);
                    }
                    next
                }
            };
            chosen.push(e);
            self.dfs(
                e + 1,
                family | self.up[e],
                chosen,
                &next_levels,
                count,
                visit,
            );
            chosen.pop();
        }
    }
}

fn bits(mut w: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if w == 0 {
            return None;
        }
        let b = w.trailing_zeros() as usize;
        w &= w - 1;
        Some(b)
    })
}

/// Visits every monotone family satisfying `constraint`, as a membership bitmap. Returns the count.
pub fn for_each_monotone(
    n: usize,
    constraint: Constraint,
    mut visit: impl FnMut(u64),
) -> Result<u64> {
    Ok(Enumerator::new(n, constraint)?.run(&mut visit))
}

/// Every up-closed `r`-wise intersecting family on `[n]`, in enumeration order.
pub fn enumerate_monotone_r_wise(n: usize, r: usize) -> Result<Vec<SubsetFamily>> {
    let mut out = Vec::new();
    for_each_monotone(n, Constraint::RWise { r }, |b| {
        out.push(SubsetFamily::from_bitmap(n, b))
    })?;
    Ok(out)
}

fn family_measure<S: Scalar>(table: &[S], family: u64) -> S {
    bits(family).fold(S::zero(), |acc, a| acc + table[a].clone())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct OracleResult<S> {
    pub n: usize,
    pub constraint: Constraint,
    pub p: BiasVector<S>,
    pub max_value: S,
    /// Sorted by membership bitmap.
    pub maximizers: Vec<SubsetFamily>,
    pub all_maximizers_are_stars: bool,
    /// Centres of the maximizers that are stars.
    pub star_centers: Vec<usize>,
    pub families_enumerated: u64,
}

/// Maximum of `mu_p` over monotone families satisfying `constraint`, with every maximizer.
pub fn max_measure_with<S: Scalar>(
    p: &BiasVector<S>,
    constraint: Constraint,
) -> Result<OracleResult<S>> {
    let n = p.n();
    let table = p.set_measures();
    let mut best: Option<S> = None;
    let mut maximizers: Vec<u64> = Vec::new();
    let count = for_each_monotone(n, constraint, |fam| {
        let v = family_measure(&table, fam);
        match &best {
            Some(b) if v.ties(b) => maximizers.push(fam),
            Some(b) if v < *b => {}
            _ => {
                best = Some(v);
                maximizers.clear();
                maximizers.push(fam);
            }
        }
    })?;
    maximizers.sort_unstable();
    let families: Vec<SubsetFamily> = maximizers
        .iter()
        .map(|&b| SubsetFamily::from_bitmap(n, b))
        .collect();
    let centers: Vec<usize> = families.iter().filter_map(star_center).collect();
    Ok(OracleResult {
        n,
        constraint,
        p: p.clone(),
        max_value: best.expect("the empty family is always enumerated"),
        all_maximizers_are_stars: centers.len() == families.len(),
        star_centers: centers,
        maximizers: families,
        families_enumerated: count,
    })
}

pub fn max_measure<S: Scalar>(r: usize, p: &BiasVector<S>) -> Result<OracleResult<S>> {
    max_measure_with(p, Constraint::RWise { r })
}

pub fn max_measure_t_intersecting<S: Scalar>(t: u32, p: &BiasVector<S>) -> Result<OracleResult<S>> {
    max_measure_with(p, Constraint::TIntersecting { t })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct CrossResult<S> {
    pub n: usize,
    pub r: usize,
    pub ps: Vec<BiasVector<S>>,
    pub max_value: S,
    /// Every maximizing tuple, in enumeration order.
    pub maximizers: Vec<Vec<SubsetFamily>>,
    /// Whether some maximizer is `r` copies of one star.
    pub identical_stars_attain: bool,
    pub all_maximizers_identical_stars: bool,
    pub tuples_examined: u64,
}

/// Largest `n` for cross-intersecting searches at each `r`.
pub fn cross_cap(r: usize) -> usize {
    match r {
        2 => 4,
        _ => 3,
    }
}

/// Maximum of `prod_k mu_{p_k}(F_k)` over `r`-tuples of monotone families that are
/// `r`-cross intersecting (`A_1 ∩ ... ∩ A_r` non-empty for `A_k` in `F_k`).
pub fn cross_max<S: Scalar>(ps: &[BiasVector<S>]) -> Result<CrossResult<S>> {
    let r = ps.len();
    if r < 2 {
        return Err(crate::error::out_of_range("r", r, "r >= 2"));
    }
    let n = ps[0].n();
    if let Some(bad) = ps.iter().find(|p| p.n() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.n(),
        });
    }
    if n > cross_cap(r) {
        return Err(Error::OverCap {
            n,
            cap: cross_cap(r),
            context: "cross-intersecting enumeration",
        });
    }
    let mut monotone = Vec::new();
    for_each_monotone(n, Constraint::None, |b| monotone.push(b))?;
    let minimal: Vec<Vec<SetMask>> = monotone
        .iter()
        .map(|&b| SubsetFamily::from_bitmap(n, b).minimal_members())
        .collect();
    let tables: Vec<Vec<S>> = ps.iter().map(|p| p.set_measures()).collect();
    let values: Vec<Vec<S>> = tables
        .iter()
        .map(|t| monotone.iter().map(|&b| family_measure(t, b)).collect())
        .collect();

    struct Search<'a, S> {
        minimal: &'a [Vec<SetMask>],
        values: &'a [Vec<S>],
        r: usize,
        best: Option<S>,
        maximizers: Vec<Vec<usize>>,
        examined: u64,
    }

    impl<S: Scalar> Search<'_, S> {
        /// `reach` holds the intersections of minimal members chosen so far; `None`
        /// once an empty family has been picked, which makes the condition vacuous.
        fn go(&mut self, picked: &mut Vec<usize>, reach: Option<Vec<SetMask>>, value: S) {
            if picked.len() == self.r {
                if reach.is_some_and(|x| x.contains(&0)) {
                    return;
                }
                self.examined += 1;
                match &self.best {
                    Some(b) if value.ties(b) => self.maximizers.push(picked.clone()),
                    Some(b) if value < *b => {}
                    _ => {
                        self.best = Some(value);
                        self.maximizers = vec![picked.clone()];
                    }
                }
                return;
            }
            let k = picked.len();
            for f in 0..self.minimal.len() {
                let mins = &self.minimal[f];
                let next = match &reach {
                    Some(xs) if !mins.is_empty() => {
                        let mut out: Vec<SetMask> = xs
                            .iter()
                            .flat_map(|&x| mins.iter().map(move |&a| x & a))
                            .collect();
                        out.sort_unstable();
                        out.dedup();
                        Some(out)
                    }
                    _ => None,
                };
                picked.push(f);
                let v = value.clone() * self.values[k][f].clone();
                self.go(picked, next, v);
                picked.pop();
            }
        }
    }

    let mut search = Search {
        minimal: &minimal,
        values: &values,
        r,
        best: None,
        maximizers: Vec::new(),
        examined: 0,
    };
    search.go(&mut Vec::new(), Some(vec![SetMask::MAX]), S::one());
    let fams: Vec<Vec<SubsetFamily>> = search
        .maximizers
        .iter()
        .map(|t| {
            t.iter()
                .map(|&f| SubsetFamily::from_bitmap(n, monotone[f]))
                .collect()
        })
        .collect();
    let identical_star =
        |t: &Vec<SubsetFamily>| star_center(&t[0]).is_some() && t.iter().all(|f| *f == t[0]);
    Ok(CrossResult {
        n,
        r,
        ps: ps.to_vec(),
        max_value: search.best.expect("at least one tuple"),
        identical_stars_attain: fams.iter().any(identical_star),
        all_maximizers_identical_stars: fams.iter().all(identical_star),
        maximizers: fams,
        tuples_examined: search.examined,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CensusRecord<S> {
    pub family: SubsetFamily,
    pub measure: S,
    /// `p - mu_p(F)`.
    pub eps: S,
    pub star_center: usize,
    /// `min_i mu_p(F △ star_i)`.
    pub star_distance: S,
    /// `sum_{|S|>1} phi_S^2 / phi_0` (zero for the empty family).
    pub tau: f64,
    /// The spectral bound on `tau`, when `p` is in the stability regime.
    pub tau_bound: Option<f64>,
    /// `C_p * eps`, when `p` is in the stability regime.
    pub cp_eps: Option<f64>,
}

/// Every monotone `r`-wise intersecting family with `mu_p >= p - eps_max`, sorted by `eps`.
pub fn stability_census<S: Scalar>(
    r: usize,
    p: &BiasVector<S>,
    eps_max: &S,
) -> Result<Vec<CensusRecord<S>>> {
    if !p.is_uniform() {
        return Err(Error::Regime(
            "the stability census needs a uniform bias".into(),
        ));
    }
    let n = p.n();
    let p0 = p.p(0).clone();
    let table = p.set_measures();
    let pf = p.to_f64();
    let stars: Vec<u64> = (0..n)
        .map(|i| star(n, i).map(|s| s.members().fold(0u64, |acc, a| acc | 1 << a)))
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    let mut failure = None;
    for_each_monotone(n, Constraint::RWise { r }, |fam| {
        if failure.is_some() {
            return;
        }
        let m = family_measure(&table, fam);
        let eps = p0.clone() - m.clone();
        if eps > *eps_max {
            return;
        }
        let (star_center, star_distance) = stars
            .iter()
            .enumerate()
            .map(|(i, &s)| (i, family_measure(&table, fam ^ s)))
            .reduce(|a, b| if b.1 < a.1 && !b.1.ties(&a.1) { b } else { a })
            .expect("n >= 1");
        let family = SubsetFamily::from_bitmap(n, fam);
        let tau = match expand(&family, &pf) {
            Ok(e) if e.mean() > 0.0 => high_degree_mass(&e) / e.mean(),
            Ok(_) => 0.0,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        let eps_f = eps.to_f64();
        let tau_bound = stability::tau_bound(r, &p0, &eps).ok().map(|t| t.to_f64());
        let cp_eps = stability::c_p(r, &p0).ok().map(|c| c.to_f64() * eps_f);
        records.push(CensusRecord {
            family,
            measure: m,
            eps,
            star_center,
            star_distance,
            tau,
            tau_bound,
            cp_eps,
        });
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    records.sort_by(|a, b| cmp_scalar(&a.eps, &b.eps));
    Ok(records)
}
