//! Hoffman-type bounds and the dispatcher that decides which construction applies to a bias vector.

use serde::Serialize;

use crate::error::{out_of_range, Result};
use crate::family::{is_r_wise_intersecting, measure, star_center, BiasVector, SubsetFamily};
use crate::measure::{Construction, LimitMeasure, LinkStructure};
use crate::oracle::enumerate_monotone_r_wise;
use crate::scalar::Scalar;
use crate::spectral::link_lambda_min;

/// `1 - prod_s 1/(1 - lambda_s)`; every `lambda_s` must be below 1.
pub fn fgl_bound<S: Scalar>(lambdas: &[S]) -> Result<S> {
    let mut prod = S::one();
    for l in lambdas {
        if *l >= S::one() {
            return Err(out_of_range("lambda_s", l, "lambda_s < 1"));
        }
        prod = prod / (S::one() - l.clone());
    }
    Ok(S::one() - prod)
}

/// `-lambda / (1 - lambda)`.
pub fn hoffman_2graph<S: Scalar>(lambda_min: &S) -> Result<S> {
    fgl_bound(std::slice::from_ref(lambda_min))
}

/// `1 - 1/((1 - lambda_0)(1 - lambda_1))`, with `lambda_1` the smallest link eigenvalue.
pub fn hoffman_3graph<S: Scalar>(lambda_min_t: &S, max_link_lambda_min: &S) -> Result<S> {
    fgl_bound(&[lambda_min_t.clone(), max_link_lambda_min.clone()])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EpsMode {
    /// The construction has no perturbation parameter (`r <= 3`).
    Exact,
    /// Closed-form factors of the `eps -> 0` limit.
    Limit,
    Finite {
        eps: f64,
    },
}

/// Which spectral argument produced the bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Regime {
    /// `p_3 < 1/2` and (`p_1 <= 1/2` or `1 - p_2 > p_3`), via the 2-wise construction.
    TwoWise,
    /// `(r-2)/(r-1) <= p_1 < (r-1)/r`, via the `r`-wise construction and its links.
    RWise { r: usize },
    /// No hypothesis holds; the reported bound is the 2-wise spectral fallback.
    None,
}

/// A step taken before the spectral bound applies.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Reduction<S> {
    /// An `r`-wise intersecting family is also `(r-1)`-wise intersecting.
    LowerArity { from: usize, to: usize },
    /// `mu_p(F) <= (p_1/p_2) mu_{p'}(F)` where `p'` has `p_1` replaced by `p_2`.
    ShiftTopBias { from: S, to: S },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct BoundReport<S> {
    pub r: usize,
    pub p: BiasVector<S>,
    /// Arity of the construction that was evaluated.
    pub construction_r: usize,
    /// Sorted and possibly shifted bias the construction was built on.
    pub construction_p: BiasVector<S>,
    pub eps_mode: EpsMode,
    pub lambda_0: S,
    /// `lambda_s` for `s = 1..construction_r - 2`.
    pub link_minima: Vec<S>,
    /// `fgl_bound` of the construction.
    pub spectral_bound: S,
    /// `spectral_bound` scaled back through any bias shifts.
    pub bound_value: S,
    pub regime: Regime,
    pub reductions: Vec<Reduction<S>>,
    /// `p_1` when a regime applies.
    pub proven_maximum: Option<S>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violated: Option<String>,
    /// Whether `p_{r+1} < (r-1)/r`, the weaker hypothesis under which stars are conjectured optimal.
    pub conjectured_regime: bool,
}

impl<S: Scalar> BoundReport<S> {
    pub fn claims(&self) -> bool {
        self.proven_maximum.is_some()
    }
}

struct Spectral<S> {
    r: usize,
    p: BiasVector<S>,
    eps_mode: EpsMode,
    lambda_0: S,
    link_minima: Vec<S>,
    bound: S,
}

fn spectral_bound<S: Scalar, L: LinkStructure<S>>(
    m: &L,
    p: &BiasVector<S>,
    eps_mode: EpsMode,
) -> Result<Spectral<S>> {
    let lambda_0 = link_lambda_min(m, 0)?;
    let link_minima = (1..m.r() - 1)
        .map(|s| link_lambda_min(m, s))
        .collect::<Result<Vec<_>>>()?;
    let mut all = vec![lambda_0.clone()];
    all.extend(link_minima.iter().cloned());
    Ok(Spectral {
        r: m.r(),
        p: p.clone(),
        eps_mode,
        lambda_0,
        link_minima,
        bound: fgl_bound(&all)?,
    })
}

fn rwise_spectral<S: Scalar>(p: &BiasVector<S>, r: usize, eps: Option<f64>) -> Result<Spectral<S>> {
    match (r, eps) {
        (2 | 3, _) => spectral_bound(&LimitMeasure::new(p.clone(), r)?, p, EpsMode::Exact),
        (_, None) => spectral_bound(&LimitMeasure::new(p.clone(), r)?, p, EpsMode::Limit),
        (_, Some(e)) => {
            let m = Construction::RWise { r, eps: Some(e) }.build(p)?;
            spectral_bound(&m, p, EpsMode::Finite { eps: e })
        }
    }
}

fn entry<S: Scalar>(p: &BiasVector<S>, k: usize) -> S {
    if k < p.n() {
        p.p(k).clone()
    } else {
        S::zero()
    }
}

enum Outcome<S> {
    Claim {
        regime: Regime,
        spectral: Spectral<S>,
        scale: S,
    },
    NoClaim {
        violated: String,
    },
}

/// `p` is sorted in non-increasing order.
fn dispatch_sorted<S: Scalar>(
    p: &BiasVector<S>,
    r: usize,
    eps: Option<f64>,
    reductions: &mut Vec<Reduction<S>>,
) -> Result<Outcome<S>> {
    let (p1, p2, p3) = (entry(p, 0), entry(p, 1), entry(p, 2));
    let half = S::from_ratio(1, 2);
    if r == 2 {
        if p3 >= half {
            return Ok(Outcome::NoClaim {
                violated: format!("p3 < 1/2 fails (p3 = {p3})"),
            });
        }
        if p1 > half && S::one() - p2.clone() <= p3 {
            return Ok(Outcome::NoClaim {
                violated: format!(
                    "p1 <= 1/2 or 1 - p2 > p3 fails (p1 = {p1}, p2 = {p2}, p3 = {p3})"
                ),
            });
        }
        return Ok(Outcome::Claim {
            regime: Regime::TwoWise,
            spectral: rwise_spectral(p, 2, None)?,
            scale: S::one(),
        });
    }
    let hi = S::from_ratio(r as i64 - 1, r as i64);
    let lo = S::from_ratio(r as i64 - 2, r as i64 - 1);
    if p2 >= hi {
        return Ok(Outcome::NoClaim {
            violated: format!("p2 < (r-1)/r = {hi} fails (p2 = {p2})"),
        });
    }
    if p1 >= hi {
        let shifted = p.with_entry(0, p2.clone())?;
        reductions.push(Reduction::ShiftTopBias {
            from: p1.clone(),
            to: p2.clone(),
        });
        return Ok(match dispatch_sorted(&shifted, r, eps, reductions)? {
            Outcome::Claim {
                regime,
                spectral,
                scale,
            } => Outcome::Claim {
                regime,
                spectral,
                scale: scale * p1 / p2,
            },
            none => none,
        });
    }
    if p1 >= lo {
        return Ok(Outcome::Claim {
            regime: Regime::RWise { r },
            spectral: rwise_spectral(p, r, eps)?,
            scale: S::one(),
        });
    }
    reductions.push(Reduction::LowerArity { from: r, to: r - 1 });
    dispatch_sorted(p, r - 1, eps, reductions)
}

/// Decides which hypothesis applies to `p` (in any order; missing entries count as 0),
/// evaluates the matching construction, and reports `p_1` as the maximum when one does.
pub fn theorem_dispatch<S: Scalar>(p: &BiasVector<S>, r: usize) -> Result<BoundReport<S>> {
    theorem_dispatch_with(p, r, None)
}

/// As [`theorem_dispatch`], with the `r`-wise construction (`r >= 4`) built at a fixed `eps`.
pub fn theorem_dispatch_with<S: Scalar>(
    p: &BiasVector<S>,
    r: usize,
    eps: Option<f64>,
) -> Result<BoundReport<S>> {
    if r < 2 {
        return Err(out_of_range("r", r, "r >= 2"));
    }
    let sorted = p.sorted_desc();
    let mut reductions = Vec::new();
    let outcome = dispatch_sorted(&sorted, r, eps, &mut reductions)?;
    let conjectured_regime = entry(&sorted, r) < S::from_ratio(r as i64 - 1, r as i64);
    let (regime, spectral, scale, violated) = match outcome {
        Outcome::Claim {
            regime,
            spectral,
            scale,
        } => (regime, spectral, scale, None),
        Outcome::NoClaim { violated } => {
            reductions.clear();
            (
                Regime::None,
                rwise_spectral(&sorted, 2, None)?,
                S::one(),
                Some(violated),
            )
        }
    };
    let claims = violated.is_none();
    Ok(BoundReport {
        r,
        p: p.clone(),
        construction_r: spectral.r,
        construction_p: spectral.p,
        eps_mode: spectral.eps_mode,
        lambda_0: spectral.lambda_0,
        link_minima: spectral.link_minima,
        bound_value: spectral.bound.clone() * scale,
        spectral_bound: spectral.bound,
        regime,
        reductions,
        proven_maximum: claims.then(|| sorted.p(0).clone()),
        violated,
        conjectured_regime,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct ShiftingCheck<S> {
    pub p: BiasVector<S>,
    pub shifted: BiasVector<S>,
    pub r: usize,
    /// Inclusion-maximal `r`-wise intersecting families that are not stars.
    pub families_checked: usize,
    /// Smallest `(p_1/p_2) mu_{p'}(B) - mu_p(B)` seen.
    pub min_gap: Option<S>,
    pub violations: Vec<SubsetFamily>,
}

fn is_maximal(f: &SubsetFamily, r: usize) -> bool {
    (0..f.universe_size() as u32)
        .filter(|&a| !f.contains(a))
        .all(|a| {
            let mut g = f.clone();
            for b in 0..f.universe_size() as u32 {
                if b & a == a {
                    g.insert(b);
                }
            }
            !is_r_wise_intersecting(&g, r)
        })
}

/// Checks `mu_p(B) < (p_1/p_2) mu_{p'}(B)` for every maximal non-star `r`-wise
/// intersecting `B`, where `p'` replaces the largest bias by the second largest.
pub fn shifting_comparison<S: Scalar>(p: &BiasVector<S>, r: usize) -> Result<ShiftingCheck<S>> {
    let sorted = p.sorted_desc();
    if sorted.n() < 2 {
        return Err(out_of_range("n", sorted.n(), "n >= 2"));
    }
    let (p1, p2) = (sorted.p(0).clone(), sorted.p(1).clone());
    if p1 <= p2 {
        return Err(crate::Error::Regime(format!(
            "shifting needs p1 > p2 (p1 = {p1}, p2 = {p2})"
        )));
    }
    let shifted = sorted.with_entry(0, p2.clone())?;
    let scale = p1 / p2;
    let mut check = ShiftingCheck {
        p: sorted.clone(),
        shifted: shifted.clone(),
        r,
        families_checked: 0,
        min_gap: None,
        violations: Vec::new(),
    };
    for b in enumerate_monotone_r_wise(sorted.n(), r)? {
        if star_center(&b).is_some() || !is_maximal(&b, r) {
            continue;
        }
        check.families_checked += 1;
        let gap = scale.clone() * measure(&shifted, &b)? - measure(&sorted, &b)?;
        if gap <= S::zero() {
            check.violations.push(b);
        }
        check.min_gap = Some(match check.min_gap.take() {
            Some(m) => S::min_of(m, gap),
            None => gap,
        });
    }
    Ok(check)
}
