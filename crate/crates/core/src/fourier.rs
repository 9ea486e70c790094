//! Biased Fourier expansion of family indicators in the basis `{v_S}`.
//!
//! `‖·‖` is always the `mu_p`-weighted 2-norm, so a star has `‖f‖² = p`.

use serde::Serialize;

use crate::error::{out_of_range, Error, Result};
use crate::family::{check_dims, measure, star, BiasVector, NamedFamily, SetMask, SubsetFamily};
use crate::scalar::Scalar;
use crate::spectral::{OnbVector, SpectrumReport};

pub const MAX_FOURIER_N: usize = 16;

/// Coefficients below this are treated as zero by the support checks.
pub const SUPPORT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourierExpansion {
    pub n: usize,
    pub p: BiasVector<f64>,
    /// `coeffs[S]` is the coefficient of `v_S`.
    pub coeffs: Vec<f64>,
    /// `degree_profile[d] = sum_{|S| = d} coeffs[S]^2`.
    pub degree_profile: Vec<f64>,
}

fn check_n(n: usize) -> Result<()> {
    if n > MAX_FOURIER_N {
        return Err(Error::OverCap {
            n,
            cap: MAX_FOURIER_N,
            context: "Fourier expansion",
        });
    }
    Ok(())
}

impl FourierExpansion {
    /// Builds the expansion from given coefficients; the function itself need not be boolean.
    pub fn from_coeffs(p: &BiasVector<f64>, coeffs: Vec<f64>) -> Result<Self> {
        check_n(p.n())?;
        if coeffs.len() != 1 << p.n() {
            return Err(Error::DimensionMismatch {
                expected: 1 << p.n(),
                found: coeffs.len(),
            });
        }
        let mut degree_profile = vec![0.0; p.n() + 1];
        for (s, c) in coeffs.iter().enumerate() {
            degree_profile[s.count_ones() as usize] += c * c;
        }
        Ok(FourierExpansion {
            n: p.n(),
            p: p.clone(),
            coeffs,
            degree_profile,
        })
    }

    /// Expands an arbitrary real function given by its values in mask order.
    pub fn from_function(p: &BiasVector<f64>, values: &[f64]) -> Result<Self> {
        check_n(p.n())?;
        if values.len() != 1 << p.n() {
            return Err(Error::DimensionMismatch {
                expected: 1 << p.n(),
                found: values.len(),
            });
        }
        let mut a = values.to_vec();
        for i in 0..p.n() {
            let (pi, qi) = (*p.p(i), p.q(i));
            let s = (pi * qi).sqrt();
            let bit = 1 << i;
            for x in 0..a.len() {
                if x & bit == 0 {
                    let (a0, a1) = (a[x], a[x | bit]);
                    a[x] = qi * a0 + pi * a1;
                    a[x | bit] = s * (a0 - a1);
                }
            }
        }
        Self::from_coeffs(p, a)
    }

    pub fn coeff(&self, s: SetMask) -> f64 {
        self.coeffs[s as usize]
    }

    /// `E_{mu_1}[phi]`.
    pub fn mean(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn parseval_sum(&self) -> f64 {
        self.degree_profile.iter().sum()
    }

    /// Function values at every mask.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut b = self.coeffs.clone();
        for i in 0..self.n {
            let c = (self.p.p(i) / self.p.q(i)).sqrt();
            let bit = 1 << i;
            for x in 0..b.len() {
                if x & bit == 0 {
                    let (b0, b1) = (b[x], b[x | bit]);
                    b[x] = b0 + c * b1;
                    b[x | bit] = b0 - b1 / c;
                }
            }
        }
        b
    }
}

/// Fourier expansion of the indicator of `f`.
pub fn expand(f: &SubsetFamily, p: &BiasVector<f64>) -> Result<FourierExpansion> {
    check_dims(p.n(), f.n())?;
    FourierExpansion::from_function(p, &f.indicator())
}

/// Same coefficients computed as explicit inner products `<phi, v_S>`. Quadratic in `2^n`.
pub fn expand_dense(f: &SubsetFamily, p: &BiasVector<f64>) -> Result<FourierExpansion> {
    check_dims(p.n(), f.n())?;
    check_n(p.n())?;
    let mu = p.set_measures();
    let coeffs = (0..1u32 << p.n())
        .map(|s| {
            let v = OnbVector::new(s, p);
            f.members().map(|x| mu[x as usize] * v.value(x)).sum()
        })
        .collect();
    FourierExpansion::from_coeffs(p, coeffs)
}

/// `E_{mu_2}[phi, phi] = sum_S lambda_S phi_S^2`.
pub fn quadratic_form(e: &FourierExpansion, spectrum: &SpectrumReport<f64>) -> Result<f64> {
    check_dims(e.n, spectrum.n())?;
    let table = spectrum.table();
    Ok(e.coeffs.iter().zip(&table).map(|(c, l)| l * c * c).sum())
}

/// `‖phi^{>1}‖² = sum_{|S| > 1} phi_S^2`.
pub fn high_degree_mass(e: &FourierExpansion) -> f64 {
    e.degree_profile.iter().skip(2).sum()
}

/// Slack in `E_{mu_2}[phi,phi] >= E[phi] (1 - (1 - lambda_min)(1 - E[phi]))`; never negative for boolean `phi`.
pub fn hoffman_deficit(e: &FourierExpansion, spectrum: &SpectrumReport<f64>) -> Result<f64> {
    let e2 = quadratic_form(e, spectrum)?;
    let e1 = e.mean();
    Ok(e2 - e1 * (1.0 - (1.0 - spectrum.lambda_min) * (1.0 - e1)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum SupportVerdict {
    /// `E_{mu_2}[phi,phi] > phi_0^2 + lambda_min (phi_0 - phi_0^2)`: nothing is claimed.
    HypothesisNotMet { lhs: f64, rhs: f64 },
    /// Every coefficient outside `{∅}` and the minimal eigenspace vanishes.
    Supported { support: Vec<SetMask> },
    /// The hypothesis holds but mass sits elsewhere; `offending` lists those sets.
    Violated { offending: Vec<SetMask>, mass: f64 },
}

/// If `E_{mu_2}[phi,phi] <= phi_0^2 + lambda_min (phi_0 - phi_0^2)`, the expansion must be
/// supported on `∅` and the sets attaining `lambda_min`.
pub fn low_degree_support_check(
    e: &FourierExpansion,
    spectrum: &SpectrumReport<f64>,
) -> Result<SupportVerdict> {
    if !spectrum.exhaustive {
        return Err(Error::Regime(
            "the minimal eigenspace is not known exactly (restricted spectrum search)".into(),
        ));
    }
    let lhs = quadratic_form(e, spectrum)?;
    let c0 = e.mean();
    let rhs = c0 * c0 + spectrum.lambda_min * (c0 - c0 * c0);
    if lhs > rhs + SUPPORT_TOL {
        return Ok(SupportVerdict::HypothesisNotMet { lhs, rhs });
    }
    let allowed = |s: SetMask| s == 0 || spectrum.argmin_sets.binary_search(&s).is_ok();
    let mut support = Vec::new();
    let mut offending = Vec::new();
    let mut mass = 0.0;
    for (s, c) in e.coeffs.iter().enumerate() {
        let s = s as SetMask;
        if c.abs() <= SUPPORT_TOL {
            continue;
        }
        if allowed(s) {
            support.push(s);
        } else {
            offending.push(s);
            mass += c * c;
        }
    }
    Ok(if offending.is_empty() {
        SupportVerdict::Supported { support }
    } else {
        SupportVerdict::Violated { offending, mass }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum StarVerdict {
    Star {
        center: usize,
        candidates: Vec<usize>,
    },
    /// `phi(∅) = 0` or `phi([n]) = 1` fails.
    PreconditionFailed {
        reason: String,
    },
    NotBoolean {
        mask: SetMask,
        value: f64,
    },
    /// Coefficients outside `phi_0 = p_1` and the singletons of the top-bias coordinates.
    WrongForm {
        reason: String,
    },
}

/// Certifies that an expansion `p_1 1 + sum_{k in L} phi_{k} v_{k}` is a star,
/// where `L` holds the coordinates of maximal bias.
pub fn star_detector(e: &FourierExpansion) -> StarVerdict {
    let values = e.reconstruct();
    let full = values.len() - 1;
    if values[0].abs() > SUPPORT_TOL {
        return StarVerdict::PreconditionFailed {
            reason: format!("phi(empty set) = {} is not 0", values[0]),
        };
    }
    if (values[full] - 1.0).abs() > SUPPORT_TOL {
        return StarVerdict::PreconditionFailed {
            reason: format!("phi([n]) = {} is not 1", values[full]),
        };
    }
    if let Some((x, v)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| v.abs() > SUPPORT_TOL && (*v - 1.0).abs() > SUPPORT_TOL)
    {
        return StarVerdict::NotBoolean {
            mask: x as SetMask,
            value: *v,
        };
    }
    let candidates = e.p.argmax();
    let p1 = e.p.max();
    if (e.mean() - p1).abs() > SUPPORT_TOL {
        return StarVerdict::WrongForm {
            reason: format!("phi_0 = {} differs from p_1 = {p1}", e.mean()),
        };
    }
    let singleton_ok =
        |s: usize| s.count_ones() == 1 && candidates.contains(&(s.trailing_zeros() as usize));
    if let Some(s) =
        (1..e.coeffs.len()).find(|&s| e.coeffs[s].abs() > SUPPORT_TOL && !singleton_ok(s))
    {
        return StarVerdict::WrongForm {
            reason: format!("coefficient at mask {s:#x} is {}", e.coeffs[s]),
        };
    }
    let target = -(p1 * (1.0 - p1)).sqrt();
    let carriers: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&k| e.coeffs[1 << k].abs() > SUPPORT_TOL)
        .collect();
    match carriers.as_slice() {
        [k] if (e.coeffs[1 << k] - target).abs() <= SUPPORT_TOL => {
            let s = star(e.n, *k).expect("candidate in range");
            let matches = values
                .iter()
                .enumerate()
                .all(|(x, v)| (v - s.contains(x as SetMask) as u8 as f64).abs() <= SUPPORT_TOL);
            if matches {
                StarVerdict::Star {
                    center: *k,
                    candidates,
                }
            } else {
                StarVerdict::WrongForm {
                    reason: "reconstruction differs from the star".into(),
                }
            }
        }
        other => StarVerdict::WrongForm {
            reason: format!("{} singleton coefficients are non-zero", other.len()),
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum OneCoordinateClass {
    /// A star.
    G1,
    /// The complement of a star.
    G2,
    /// A constant.
    G3,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NearestOneCoordinate<S> {
    pub class: OneCoordinateClass,
    /// Star centre for `G1`/`G2`; `0` or `1` (the constant) for `G3`.
    pub index: usize,
    pub family: SubsetFamily,
    /// `‖phi - g‖² = mu_p(F △ G)`.
    pub distance2: S,
}

/// The closest of the `2n + 2` functions depending on at most one coordinate.
/// Ties go to the earlier class, then the smaller index.
pub fn nearest_one_coordinate<S: Scalar>(
    f: &SubsetFamily,
    p: &BiasVector<S>,
) -> Result<NearestOneCoordinate<S>> {
    check_dims(p.n(), f.n())?;
    let n = f.n();
    if n > MAX_FOURIER_N {
        return Err(out_of_range("n", n, format!("n <= {MAX_FOURIER_N}")));
    }
    let mut candidates = Vec::with_capacity(2 * n + 2);
    for i in 0..n {
        candidates.push((OneCoordinateClass::G1, i, NamedFamily::Star { i }.build(n)?));
    }
    for i in 0..n {
        candidates.push((
            OneCoordinateClass::G2,
            i,
            NamedFamily::ComplementOfStar { i }.build(n)?,
        ));
    }
    candidates.push((OneCoordinateClass::G3, 0, SubsetFamily::empty(n)?));
    candidates.push((OneCoordinateClass::G3, 1, SubsetFamily::full(n)?));

    let mut best: Option<NearestOneCoordinate<S>> = None;
    for (class, index, g) in candidates {
        let d = measure(p, &f.symmetric_difference(&g)?)?;
        let better = match &best {
            None => true,
            Some(b) => d < b.distance2 && !d.ties(&b.distance2),
        };
        if better {
            best = Some(NearestOneCoordinate {
                class,
                index,
                family: g,
                distance2: d,
            });
        }
    }
    Ok(best.expect("at least two candidates"))
}
