//! Stability: how far a nearly extremal intersecting family can be from a star.
//!
//! The spectral argument bounds the high-degree Fourier weight of `phi = 1_F`.
//! Writing `sum_{|S|>1} phi_S^2 = tau phi_0`, the quadratic form of the
//! construction gives `tau <= eps (1 - lambda_1) / (lambda_3 - lambda_1)`, with
//! `lambda_1` the single-coordinate eigenvalue and `lambda_3 = lambda_1^3` the
//! most negative eigenvalue above degree one. A Kindler–Safra type theorem then
//! turns the weight bound `delta` into a one-coordinate function within
//! `(4 + o(1)) delta`. The `o(1)` and the threshold `eps_p` are not effective;
//! here they are the configurable `ks_slack` and `eps_p`.

use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Error, Result};
use crate::family::{is_r_wise_intersecting, measure, star, BiasVector, SubsetFamily};
use crate::fourier::{expand, high_degree_mass, nearest_one_coordinate, OneCoordinateClass};
use crate::measure::binom;
use crate::scalar::Scalar;
use crate::spectral::coordinate_eig;

pub const DEFAULT_KS_SLACK: f64 = 4.5;
/// Largest `n` for the all-boolean-functions check (`2^(2^n)` functions).
pub const KS_MAX_N: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub ks_slack: f64,
    /// Overrides [`default_eps_p`].
    pub eps_p: Option<f64>,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            ks_slack: DEFAULT_KS_SLACK,
            eps_p: None,
        }
    }
}

fn check_regime<S: Scalar>(r: usize, p: &S) -> Result<()> {
    let ok = match r {
        0 | 1 => return Err(out_of_range("r", r, "r >= 2")),
        2 => *p > S::zero() && *p < S::from_ratio(1, 2),
        _ => {
            *p > S::from_ratio(r as i64 - 2, r as i64 - 1)
                && *p < S::from_ratio(r as i64 - 1, r as i64)
        }
    };
    if ok {
        Ok(())
    } else if r == 2 {
        Err(Error::Regime(format!(
            "r = 2 needs 0 < p < 1/2, got p = {p}"
        )))
    } else {
        Err(Error::Regime(format!(
            "r = {r} needs {}/{} < p < {}/{r}, got p = {p}",
            r - 2,
            r - 1,
            r - 1
        )))
    }
}

/// The stability constant: `4q²/(1-2p)` for `r = 2`, and
/// `4(r-1)² p q² / (((r-1)p - (r-2))((2r-3) - 2(r-1)p))` for `r >= 3`.
pub fn c_p<S: Scalar>(r: usize, p: &S) -> Result<S> {
    check_regime(r, p)?;
    let q = S::one() - p.clone();
    let four = S::from_usize(4);
    if r == 2 {
        return Ok(four * q.clone() * q / (S::one() - S::from_usize(2) * p.clone()));
    }
    let rm1 = S::from_usize(r - 1);
    let a = rm1.clone() * p.clone() - S::from_usize(r - 2);
    let b = S::from_usize(2 * r - 3) - S::from_usize(2) * rm1.clone() * p.clone();
    Ok(four * rm1.clone() * rm1 * p.clone() * q.clone() * q / (a * b))
}

/// `tau <= eps (1 - lambda_1)/(lambda_3 - lambda_1)` from the coordinate eigenvalue.
pub fn tau_bound<S: Scalar>(r: usize, p: &S, eps: &S) -> Result<S> {
    check_regime(r, p)?;
    if *eps < S::zero() {
        return Err(out_of_range("eps", eps, "eps >= 0"));
    }
    let l1 = coordinate_eig(p, r).lambda;
    let l3 = l1.powi(3);
    Ok(eps.clone() * (S::one() - l1.clone()) / (l3 - l1))
}

/// The same bound in closed form, `C_p eps / (4p)`.
pub fn tau_bound_closed_form<S: Scalar>(r: usize, p: &S, eps: &S) -> Result<S> {
    if *eps < S::zero() {
        return Err(out_of_range("eps", eps, "eps >= 0"));
    }
    Ok(c_p(r, p)? * eps.clone() / (S::from_usize(4) * p.clone()))
}

fn ks_margin(r: usize, p: f64, eps: f64, slack: f64) -> Result<f64> {
    let delta = tau_bound(r, &p, &eps)? * (p - eps);
    let g2 = ((p - eps).sqrt() - (1.0 - p).sqrt()).powi(2);
    let room = g2.min(p - eps).min(1.0 - p + eps);
    Ok(room - slack * delta)
}

/// Largest `eps` (to bisection precision) for which `slack * delta` stays below
/// the distance from `phi` to every complemented star and both constants, so
/// that the nearest one-coordinate function must be a star. Needs `p > 1/2`.
pub fn default_eps_p(r: usize, p: f64, slack: f64) -> Result<f64> {
    check_regime(r, &p)?;
    if p <= 0.5 {
        return Err(Error::Regime(format!(
            "the star threshold is defined for p > 1/2, got p = {p}"
        )));
    }
    // the margin is decreasing on [0, p - q], positive at 0 and negative at p - q
    let (mut lo, mut hi) = (0.0, 2.0 * p - 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ks_margin(r, p, mid, slack)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Verdict {
    /// `tau <= tau_bound`, and the nearest one-coordinate function is a star when `eps < eps_p`.
    WithinBound,
    /// `tau <= tau_bound` but `eps >= eps_p`, so nothing is claimed about the nearest function.
    HypothesisViolated,
    Failed {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport<S> {
    pub p: S,
    pub r: usize,
    pub config: StabilityConfig,
    pub measure: S,
    pub eps: S,
    pub tau: f64,
    pub tau_bound: S,
    /// `tau_bound * phi_0`, the bound on `‖phi^{>1}‖²`.
    pub delta: S,
    pub c_p: S,
    pub cp_eps: S,
    pub nearest_class: OneCoordinateClass,
    pub nearest_index: usize,
    pub nearest_distance: S,
    pub nearest_star_center: usize,
    pub nearest_star_distance: S,
    /// `nearest_star_distance / eps`, absent at `eps = 0`.
    pub distance_ratio: Option<f64>,
    pub eps_p: f64,
    pub ks_bound: f64,
    pub verdict: Verdict,
}

/// Runs the stability pipeline on one `r`-wise intersecting family under a uniform bias.
pub fn verify_stability<S: Scalar>(
    f: &SubsetFamily,
    p: &BiasVector<S>,
    r: usize,
    config: &StabilityConfig,
) -> Result<StabilityReport<S>> {
    if !p.is_uniform() {
        return Err(Error::Regime("stability needs a uniform bias".into()));
    }
    let p0 = p.p(0).clone();
    check_regime(r, &p0)?;
    if !is_r_wise_intersecting(f, r) {
        return Err(Error::NotIntersecting { r });
    }
    let mu = measure(p, f)?;
    let eps = p0.clone() - mu.clone();
    let e = expand(f, &p.to_f64())?;
    let tau = if e.mean() > 0.0 {
        high_degree_mass(&e) / e.mean()
    } else {
        0.0
    };
    let tau_b = tau_bound(r, &p0, &eps)?;
    let delta = tau_b.clone() * mu.clone();
    let cp = c_p(r, &p0)?;
    let near = nearest_one_coordinate(f, p)?;
    let mut star_best: Option<(usize, S)> = None;
    for i in 0..f.n() {
        let d = measure(p, &f.symmetric_difference(&star(f.n(), i)?)?)?;
        if star_best.as_ref().is_none_or(|(_, b)| d < *b && !d.ties(b)) {
            star_best = Some((i, d));
        }
    }
    let (star_center, star_distance) = star_best.ok_or_else(|| out_of_range("n", 0, "n >= 1"))?;
    let eps_p = match config.eps_p {
        Some(e) => e,
        None if p0.to_f64() > 0.5 => default_eps_p(r, p0.to_f64(), config.ks_slack)?,
        None => 0.0,
    };
    let eps_f = eps.to_f64();
    let tb = tau_b.to_f64();
    let verdict = if tau > tb + 1e-9 * tb.max(1.0) {
        Verdict::Failed {
            reason: format!("tau = {tau:e} exceeds the bound {tb:e}"),
        }
    } else if eps_f >= eps_p {
        Verdict::HypothesisViolated
    } else if near.class != OneCoordinateClass::G1 {
        Verdict::Failed {
            reason: format!(
                "eps = {eps_f:e} < eps_p = {eps_p:e} but the nearest function is {:?}",
                near.class
            ),
        }
    } else {
        Verdict::WithinBound
    };
    Ok(StabilityReport {
        p: p0,
        r,
        config: config.clone(),
        measure: mu,
        distance_ratio: (eps_f > 0.0).then(|| star_distance.to_f64() / eps_f),
        cp_eps: cp.clone() * eps.clone(),
        eps,
        tau,
        ks_bound: config.ks_slack * delta.to_f64(),
        tau_bound: tau_b,
        delta,
        c_p: cp,
        nearest_class: near.class,
        nearest_index: near.index,
        nearest_distance: near.distance2,
        nearest_star_center: star_center,
        nearest_star_distance: star_distance,
        eps_p,
        verdict,
    })
}

/// `mu_p(G_i) = sum_{j<=i} C(2i+2, j) p^{2i+2-j} q^j`, where `G_i` asks for at least
/// `i + 2` elements of `[2i+2]`.
pub fn ak_measure<S: Scalar>(i: usize, p: &S) -> S {
    let q = S::one() - p.clone();
    let m = 2 * i + 2;
    (0..=i).fold(S::zero(), |acc, j| {
        acc + S::from_usize(binom(m, j)) * p.powi((m - j) as u32) * q.powi(j as u32)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StabilityCase<S> {
    /// `p < 1/2`: reduce to 2-wise 2-intersecting families, whose maximum on the band
    /// `i/(2i+1) <= p <= (i+1)/(2i+3)` is `mu_p(G_i)`.
    AkBand { i: usize, g_measure: S },
    /// `p = 1/2`: a 3-wise intersecting family outside every star has measure at most `5/16`.
    BraceDaykin { extremal: S },
    /// `1/2 < p < 2/3`: the spectral argument with constant `C_p`.
    Spectral { c_p: S },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseAnalysis<S> {
    pub p: S,
    pub case: StabilityCase<S>,
    /// Families with `p - mu_p < eps_p` lie in a star (exactly for `p <= 1/2`; by the
    /// configured slack for `p > 1/2`).
    pub eps_p: S,
}

/// Which argument governs 3-wise stability at a uniform `p` in `(0, 2/3)`.
pub fn case_analysis<S: Scalar>(p: &S, config: &StabilityConfig) -> Result<CaseAnalysis<S>> {
    if *p <= S::zero() || *p >= S::from_ratio(2, 3) {
        return Err(out_of_range("p", p, "0 < p < 2/3"));
    }
    let half = S::from_ratio(1, 2);
    let (case, eps_p) = if *p < half {
        let mut i = 0;
        while *p > S::from_ratio(i as i64 + 1, 2 * i as i64 + 3) {
            i += 1;
        }
        let g = ak_measure(i, p);
        (
            StabilityCase::AkBand {
                i,
                g_measure: g.clone(),
            },
            p.clone() - g,
        )
    } else if *p == half {
        let extremal = S::from_ratio(5, 16);
        (
            StabilityCase::BraceDaykin {
                extremal: extremal.clone(),
            },
            half - extremal,
        )
    } else {
        let eps = match config.eps_p {
            Some(e) => e,
            None => default_eps_p(3, p.to_f64(), config.ks_slack)?,
        };
        (
            StabilityCase::Spectral { c_p: c_p(3, p)? },
            S::from_f64(eps),
        )
    };
    Ok(CaseAnalysis {
        p: p.clone(),
        case,
        eps_p,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KsWitness {
    pub family: SubsetFamily,
    pub delta: f64,
    pub distance2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KsReport {
    pub n: usize,
    pub p: f64,
    pub delta_max: f64,
    pub slack: f64,
    pub functions_checked: u64,
    /// Functions with `‖f^{>1}‖² <= delta_max`.
    pub qualifying: u64,
    /// Qualifying functions with `delta > 0`.
    pub qualifying_positive: u64,
    /// Largest `distance / delta` over qualifying functions with `delta > 0`.
    pub max_ratio: Option<f64>,
    pub violations: Vec<KsWitness>,
}

/// Over every boolean function on `[n]`, checks that `‖f^{>1}‖² = delta <= delta_max`
/// implies a one-coordinate `g` with `‖f - g‖² <= slack * delta + 1e-9`.
pub fn kindler_safra_check(n: usize, p: f64, delta_max: f64, slack: f64) -> Result<KsReport> {
    if n > KS_MAX_N {
        return Err(Error::OverCap {
            n,
            cap: KS_MAX_N,
            context: "all boolean functions",
        });
    }
    let bias = BiasVector::uniform(n, p)?;
    let mut report = KsReport {
        n,
        p,
        delta_max,
        slack,
        functions_checked: 0,
        qualifying: 0,
        qualifying_positive: 0,
        max_ratio: None,
        violations: Vec::new(),
    };
    let count = 1u64 << (1u32 << n);
    for bits in 0..count {
        let f = SubsetFamily::from_bitmap(n, bits);
        report.functions_checked += 1;
        let delta = high_degree_mass(&expand(&f, &bias)?);
        if delta > delta_max {
            continue;
        }
        report.qualifying += 1;
        let d = nearest_one_coordinate(&f, &bias)?.distance2;
        if delta > 1e-12 {
            report.qualifying_positive += 1;
            let ratio = d / delta;
            report.max_ratio = Some(report.max_ratio.map_or(ratio, |m| m.max(ratio)));
        }
        if d > slack * delta + 1e-9 {
            report.violations.push(KsWitness {
                family: f,
                delta,
                distance2: d,
            });
        }
    }
    Ok(report)
}
