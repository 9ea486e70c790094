//! Spectra of Kronecker-factored operators, the orthonormal basis `{v_S}`, and a dense cross-check.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{out_of_range, Error, Result};
use crate::family::{BiasVector, SetMask};
use crate::measure::{LinkStructure, MAX_DENSE_N};
use crate::scalar::{cmp_scalar, Scalar};

/// Above this `n` the spectrum is searched over the most extreme coordinates only.
pub const FULL_ENUMERATION_N: usize = 20;
/// Number of extreme coordinates kept by the restricted search.
pub const RESTRICTED_K: usize = 12;

pub const EIGEN_TOL: f64 = 1e-11;
pub const EIGEN_MAX_ITER: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoordinateEig<S> {
    pub lambda: S,
    /// Whether `p > (r-2)/(r-1)`, where the eigenvalue is negative.
    pub in_regime: bool,
}

/// Non-trivial eigenvalue `1 - 1/((r-1) q)` of one coordinate factor.
/// For `r = 2` this is `-p/q`.
pub fn coordinate_eig<S: Scalar>(p: &S, r: usize) -> CoordinateEig<S> {
    let q = S::one() - p.clone();
    let rm1 = S::from_usize(r - 1);
    let lambda = S::one() - S::one() / (rm1.clone() * q);
    let threshold = S::from_usize(r - 2) / rm1;
    CoordinateEig {
        lambda,
        in_regime: *p > threshold,
    }
}

pub fn coordinate_eigs<S: Scalar>(p: &BiasVector<S>, r: usize) -> Vec<CoordinateEig<S>> {
    p.as_slice()
        .iter()
        .map(|pi| coordinate_eig(pi, r))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumReport<S> {
    pub coordinate: Vec<S>,
    pub lambda_min: S,
    pub argmin_sets: Vec<SetMask>,
    pub second_min: Option<S>,
    pub second_argmin_sets: Vec<SetMask>,
    /// False when the restricted search could not certify that it saw every minimizer.
    pub exhaustive: bool,
}

impl<S: Scalar> SpectrumReport<S> {
    pub fn n(&self) -> usize {
        self.coordinate.len()
    }

    /// `lambda_S = prod_{j in S} lambda_j`.
    pub fn lambda(&self, s: SetMask) -> S {
        self.coordinate
            .iter()
            .enumerate()
            .filter(|(j, _)| s >> j & 1 == 1)
            .fold(S::one(), |acc, (_, l)| acc * l.clone())
    }

    /// All `2^n` eigenvalues indexed by mask.
    pub fn table(&self) -> Vec<S> {
        product_table(&self.coordinate)
    }
}

fn product_table<S: Scalar>(lambdas: &[S]) -> Vec<S> {
    let mut table = vec![S::one()];
    for l in lambdas {
        let upper: Vec<S> = table.iter().map(|t| t.clone() * l.clone()).collect();
        table.extend(upper);
    }
    table
}

/// Smallest and second smallest distinct values with all attaining masks.
fn two_smallest<S: Scalar>(
    values: impl Iterator<Item = (SetMask, S)>,
) -> (Vec<(S, Vec<SetMask>)>, usize) {
    let mut best: Vec<(S, Vec<SetMask>)> = Vec::with_capacity(2);
    let mut count = 0;
    for (s, v) in values {
        count += 1;
        if let Some(slot) = best.iter_mut().find(|(b, _)| b.ties(&v)) {
            slot.1.push(s);
            continue;
        }
        let pos = best.iter().position(|(b, _)| v < *b).unwrap_or(best.len());
        if pos < 2 {
            best.insert(pos, (v, vec![s]));
            best.truncate(2);
        }
    }
    (best, count)
}

/// Assembles the spectrum of `T = T^(1) x ... x T^(n)` from the coordinate eigenvalues.
pub fn product_spectrum<S: Scalar>(lambdas: &[S]) -> Result<SpectrumReport<S>> {
    let n = lambdas.len();
    if n == 0 {
        return Err(out_of_range("n", 0, "n >= 1"));
    }
    if n <= FULL_ENUMERATION_N {
        let table = product_table(lambdas);
        let (best, _) = two_smallest(
            table
                .into_iter()
                .enumerate()
                .map(|(s, v)| (s as SetMask, v)),
        );
        return Ok(report(lambdas, best, true));
    }
    restricted_spectrum(lambdas)
}

fn report<S: Scalar>(
    lambdas: &[S],
    mut best: Vec<(S, Vec<SetMask>)>,
    exhaustive: bool,
) -> SpectrumReport<S> {
    for (_, sets) in best.iter_mut() {
        sets.sort_unstable();
    }
    let mut it = best.into_iter();
    let (lambda_min, argmin_sets) = it.next().expect("at least the empty set");
    let (second_min, second_argmin_sets) = match it.next() {
        Some((v, s)) => (Some(v), s),
        None => (None, Vec::new()),
    };
    SpectrumReport {
        coordinate: lambdas.to_vec(),
        lambda_min,
        argmin_sets,
        second_min,
        second_argmin_sets,
        exhaustive,
    }
}

/// Enumerates subsets of the `RESTRICTED_K` coordinates with largest `|lambda_j|`.
///
/// Any set using another coordinate `j` has `|lambda_S| <= m * P`, where `m` is the
/// largest left-out `|lambda_j|` and `P` the product of all `|lambda_i| > 1`. If the
/// second smallest value found is below `-m * P`, no left-out set can reach or tie
/// either reported value and the search is exact.
fn restricted_spectrum<S: Scalar>(lambdas: &[S]) -> Result<SpectrumReport<S>> {
    let n = lambdas.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cmp_scalar(&lambdas[b].abs(), &lambdas[a].abs()).then(a.cmp(&b)));
    let kept = &order[..RESTRICTED_K];
    let left_out = &order[RESTRICTED_K..];
    let sub: Vec<S> = kept.iter().map(|&j| lambdas[j].clone()).collect();
    let table = product_table(&sub);
    let lift = |s: usize| -> SetMask {
        kept.iter()
            .enumerate()
            .filter(|(b, _)| s >> b & 1 == 1)
            .fold(0, |acc, (_, &j)| acc | 1 << j)
    };
    let (best, _) = two_smallest(table.into_iter().enumerate().map(|(s, v)| (lift(s), v)));

    let m = left_out
        .iter()
        .map(|&j| lambdas[j].abs())
        .fold(S::zero(), S::max_of);
    let big = lambdas
        .iter()
        .map(Scalar::abs)
        .filter(|a| *a > S::one())
        .fold(S::one(), |acc, a| acc * a);
    let all_big_kept = left_out.iter().all(|&j| lambdas[j].abs() <= S::one());
    let threshold = -(m * big);
    let certified = all_big_kept
        && best
            .get(1)
            .map(|(v, _)| *v < threshold && !v.ties(&threshold))
            .unwrap_or(false);
    Ok(report(lambdas, best, certified))
}

/// `lambda_s = min over link tuples of size s of lambda_min(T_S)`.
///
/// A tuple fixes, independently per coordinate, how many of its vertices miss
/// that coordinate, so the minimum is over per-coordinate choices from
/// `{1} ∪ {lambda_i(z) : 0 <= z <= s}`. Tracking the smallest and largest
/// reachable product is exact because multiplying by a scalar maps the
/// extremes of a set of reals to the extremes of its image.
pub fn link_lambda_min<S: Scalar, L: LinkStructure<S>>(m: &L, s: usize) -> Result<S> {
    if s + 2 > m.r() {
        return Err(out_of_range(
            "link size",
            s,
            format!("s <= r - 2 = {}", m.r() - 2),
        ));
    }
    let mut lo = S::one();
    let mut hi = S::one();
    for i in 0..m.n() {
        let mut choices = vec![S::one()];
        for zeros in 0..=s {
            let f = m.link_factor(i, zeros, s - zeros)?;
            choices.push(f[0][0].clone() + f[1][1].clone() - S::one());
        }
        let products: Vec<S> = choices
            .iter()
            .flat_map(|c| [lo.clone() * c.clone(), hi.clone() * c.clone()])
            .collect();
        lo = products
            .iter()
            .cloned()
            .reduce(S::min_of)
            .expect("non-empty");
        hi = products.into_iter().reduce(S::max_of).expect("non-empty");
    }
    Ok(lo)
}

/// Basis vector `v_S`: at mask `x` it is `prod_{i in S}` of `c_i` (if `i` not in `x`)
/// or `-1/c_i` (if `i` in `x`), with `c_i = sqrt(p_i / q_i)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OnbVector {
    pub set: SetMask,
    pub c: Vec<f64>,
}

impl OnbVector {
    pub fn new(set: SetMask, p: &BiasVector<f64>) -> Self {
        OnbVector {
            set,
            c: (0..p.n()).map(|i| (p.p(i) / p.q(i)).sqrt()).collect(),
        }
    }

    pub fn value(&self, x: SetMask) -> f64 {
        self.c
            .iter()
            .enumerate()
            .filter(|(i, _)| self.set >> i & 1 == 1)
            .map(|(i, &c)| if x >> i & 1 == 1 { -1.0 / c } else { c })
            .product()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        (0..1u32 << self.c.len()).map(|x| self.value(x)).collect()
    }
}

/// The matrix whose column `S` is `v_S` (rows and columns in mask order).
pub fn onb_matrix(p: &BiasVector<f64>) -> Result<Vec<Vec<f64>>> {
    let n = p.n();
    if n > MAX_DENSE_N {
        return Err(Error::OverCap {
            n,
            cap: MAX_DENSE_N,
            context: "dense basis matrix",
        });
    }
    let cols: Vec<OnbVector> = (0..1u32 << n).map(|s| OnbVector::new(s, p)).collect();
    Ok((0..1u32 << n)
        .map(|x| cols.iter().map(|v| v.value(x)).collect())
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StarDecomposition {
    pub center: usize,
    pub coeff_empty: f64,
    pub coeff_center: f64,
    pub max_reconstruction_error: f64,
}

/// The star at `i` is `p_i 1 - sqrt(p_i q_i) v_{i}`; the reconstruction is checked pointwise.
pub fn star_decomposition(i: usize, p: &BiasVector<f64>) -> Result<StarDecomposition> {
    if i >= p.n() {
        return Err(out_of_range("coordinate", i, format!("0 <= i < {}", p.n())));
    }
    let a = *p.p(i);
    let b = -(a * p.q(i)).sqrt();
    let v = OnbVector::new(1 << i, p);
    let err = (0..1u32 << p.n())
        .map(|x| {
            let target = if x >> i & 1 == 1 { 1.0 } else { 0.0 };
            (a + b * v.value(x) - target).abs()
        })
        .fold(0.0, f64::max);
    Ok(StarDecomposition {
        center: i,
        coeff_empty: a,
        coeff_center: b,
        max_reconstruction_error: err,
    })
}

/// Smallest eigenvalue of a dense operator that is self-adjoint for `<.,.>_{mu_1}`.
///
/// Conjugating by `diag(sqrt(mu_1))` makes the matrix symmetric; the symmetric
/// eigensolver does the rest.
pub fn dense_lambda_min(t: &[Vec<f64>], mu1: &[f64]) -> Result<f64> {
    let dim = t.len();
    if dim > 1 << MAX_DENSE_N {
        return Err(Error::OverCap {
            n: dim.ilog2() as usize,
            cap: MAX_DENSE_N,
            context: "dense eigensolver",
        });
    }
    if mu1.len() != dim || t.iter().any(|row| row.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: mu1.len(),
        });
    }
    if let Some(v) = mu1.iter().find(|&&m| m <= 0.0) {
        return Err(Error::NonPositiveMarginal {
            context: "mu_1 weighting".into(),
            value: v.to_string(),
        });
    }
    let root: Vec<f64> = mu1.iter().map(|m| m.sqrt()).collect();
    let a = DMatrix::from_fn(dim, dim, |x, y| root[x] * t[x][y] / root[y]);
    let scale = a.amax().max(1.0);
    let mut defect: f64 = 0.0;
    for x in 0..dim {
        for y in 0..x {
            defect = defect.max((a[(x, y)] - a[(y, x)]).abs());
        }
    }
    if defect > 1e-9 * scale {
        return Err(Error::NotSelfAdjoint { defect });
    }
    let sym = (&a + a.transpose()) * 0.5;
    let eig =
        SymmetricEigen::try_new(sym, EIGEN_TOL, EIGEN_MAX_ITER).ok_or(Error::NonConvergence {
            max_iter: EIGEN_MAX_ITER,
        })?;
    Ok(eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{inner, link_operator, Construction, LimitMeasure};
    use crate::scalar::Rational;
    use proptest::prelude::*;

    fn q(s: &str) -> Rational {
        Rational::parse(s).unwrap()
    }

    #[test]
    fn coordinate_eig_examples() {
        assert_eq!(coordinate_eig(&q("0.4"), 2).lambda, q("-2/3"));
        assert_eq!(coordinate_eig(&q("0.6"), 3).lambda, q("-1/4"));
        let e = coordinate_eig(&q("0.7"), 4);
        assert_eq!(e.lambda, q("-1/9"));
        assert!(e.in_regime);
        assert!(!coordinate_eig(&q("0.4"), 3).in_regime);
    }

    #[test]
    fn factor_eigenvalues_match_closed_form() {
        for (c, r) in [(Construction::TwoWise, 2), (Construction::ThreeWise, 3)] {
            let p = BiasVector::new(vec![q("0.6"), q("0.45"), q("0.3")]).unwrap();
            let t = c.build(&p).unwrap().adjacency().unwrap();
            let from_factors = t.coordinate_eigenvalues();
            for (i, l) in from_factors.iter().enumerate() {
                assert_eq!(*l, coordinate_eig(p.p(i), r).lambda);
            }
        }
    }

    #[test]
    fn two_wise_spectrum_examples() {
        let p = BiasVector::new(vec![q("0.4"), q("0.3"), q("0.2")]).unwrap();
        let lambdas: Vec<Rational> = coordinate_eigs(&p, 2)
            .into_iter()
            .map(|e| e.lambda)
            .collect();
        let s = product_spectrum(&lambdas).unwrap();
        assert_eq!(s.lambda_min, q("-2/3"));
        assert_eq!(s.argmin_sets, vec![0b001]);
        assert_eq!(s.lambda(0), Rational::one());

        let p = BiasVector::new(vec![q("0.6"), q("0.55"), q("0.5")]).unwrap();
        let lambdas: Vec<Rational> = coordinate_eigs(&p, 2)
            .into_iter()
            .map(|e| e.lambda)
            .collect();
        let s = product_spectrum(&lambdas).unwrap();
        assert_eq!(s.lambda(0b001), q("-3/2"));
        assert_eq!(s.lambda(0b111), q("-11/6"));
        assert_eq!(s.lambda_min, q("-11/6"));
        assert_eq!(s.argmin_sets, vec![0b111]);
    }

    #[test]
    fn three_wise_spectrum_in_regime() {
        for p1 in ["0.5", "0.55", "0.6", "0.65"] {
            let p = BiasVector::new(vec![q(p1), q("0.5"), q("0.4"), q("0.3")]).unwrap();
            let lambdas: Vec<Rational> = coordinate_eigs(&p, 3)
                .into_iter()
                .map(|e| e.lambda)
                .collect();
            for l in &lambdas {
                assert!(*l > q("-1/2") && *l <= Rational::zero() || *l > Rational::zero());
            }
            let s = product_spectrum(&lambdas).unwrap();
            assert_eq!(s.lambda_min, lambdas[0]);
            assert!(s.argmin_sets.contains(&0b0001));
        }
    }

    #[test]
    fn ties_are_all_reported() {
        let lambdas = vec![q("-1/4"); 3];
        let s = product_spectrum(&lambdas).unwrap();
        assert_eq!(s.argmin_sets, vec![0b001, 0b010, 0b100]);
        assert_eq!(s.second_min, Some(q("-1/64")));
        assert_eq!(s.second_argmin_sets, vec![0b111]);
    }

    #[test]
    fn restricted_search_certifies_when_it_can() {
        let mut lambdas = vec![-0.25; 3];
        lambdas.extend(vec![0.01; 22]);
        let s = product_spectrum(&lambdas).unwrap();
        assert!(s.exhaustive);
        assert_eq!(s.argmin_sets, vec![0b001, 0b010, 0b100]);
        assert!((s.lambda_min + 0.25).abs() < 1e-15);

        // many equal coordinates: the left-out ones can tie, so no certificate
        let lambdas = vec![-0.25; 25];
        let s = product_spectrum(&lambdas).unwrap();
        assert!(!s.exhaustive);
        assert!((s.lambda_min + 0.25).abs() < 1e-15);
    }

    #[test]
    fn restricted_matches_full_enumeration_value() {
        let lambdas: Vec<f64> = (0..21).map(|i| -0.9 + 0.08 * i as f64).collect();
        let s = product_spectrum(&lambdas).unwrap();
        let table = product_table(&lambdas);
        let min = table.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((s.lambda_min - min).abs() < 1e-15);
    }

    #[test]
    fn link_minima_three_wise_and_limit() {
        let p = BiasVector::uniform(3, q("0.6")).unwrap();
        let m = Construction::ThreeWise.build(&p).unwrap();
        assert_eq!(link_lambda_min(&m, 1).unwrap(), -Rational::one());
        assert!(link_lambda_min(&m, 2).is_err());

        for r in 3..=6 {
            let lim = LimitMeasure::new(BiasVector::uniform(3, q("0.7")).unwrap(), r).unwrap();
            for s in 1..=r - 2 {
                let expected = -Rational::one() / Rational::from_usize(r - s - 1);
                assert_eq!(link_lambda_min(&lim, s).unwrap(), expected, "r={r} s={s}");
            }
        }
    }

    /// Exhaustive minimum over actual link tuples, n = 2, for comparison with the DP.
    #[test]
    fn link_dp_matches_tuple_enumeration() {
        let p = BiasVector::new(vec![0.72, 0.65]).unwrap();
        let m = Construction::RWise {
            r: 4,
            eps: Some(1e-3),
        }
        .build(&p)
        .unwrap();
        for s in 1..=2usize {
            let mut best = f64::INFINITY;
            let tuples = 4u32.pow(s as u32);
            for t in 0..tuples {
                let link: Vec<SetMask> = (0..s).map(|k| t >> (2 * k) & 3).collect();
                let op = link_operator(&m, &link).unwrap();
                let s_rep = product_spectrum(&op.coordinate_eigenvalues()).unwrap();
                best = best.min(s_rep.lambda_min);
            }
            assert!((best - link_lambda_min(&m, s).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn onb_examples() {
        let p = BiasVector::new(vec![0.5]).unwrap();
        assert_eq!(OnbVector::new(1, &p).to_vec(), vec![1.0, -1.0]);
        assert_eq!(OnbVector::new(0, &p).to_vec(), vec![1.0, 1.0]);
        let d = star_decomposition(0, &p).unwrap();
        assert_eq!((d.coeff_empty, d.coeff_center), (0.5, -0.5));
        assert_eq!(d.max_reconstruction_error, 0.0);
    }

    #[test]
    fn c3_matches_displayed_matrix() {
        let p = BiasVector::new(vec![0.4, 0.3, 0.2]).unwrap();
        let c: Vec<f64> = (0..3).map(|i| (p.p(i) / p.q(i)).sqrt()).collect();
        let (c1, c2, c3) = (c[0], c[1], c[2]);
        let expected = [
            [1.0, c1, c2, c1 * c2, c3, c1 * c3, c2 * c3, c1 * c2 * c3],
            [
                1.0,
                -1.0 / c1,
                c2,
                -c2 / c1,
                c3,
                -c3 / c1,
                c2 * c3,
                -c2 * c3 / c1,
            ],
            [
                1.0,
                c1,
                -1.0 / c2,
                -c1 / c2,
                c3,
                c1 * c3,
                -c3 / c2,
                -c1 * c3 / c2,
            ],
            [
                1.0,
                -1.0 / c1,
                -1.0 / c2,
                1.0 / (c1 * c2),
                c3,
                -c3 / c1,
                -c3 / c2,
                c3 / (c1 * c2),
            ],
            [
                1.0,
                c1,
                c2,
                c1 * c2,
                -1.0 / c3,
                -c1 / c3,
                -c2 / c3,
                -c1 * c2 / c3,
            ],
            [
                1.0,
                -1.0 / c1,
                c2,
                -c2 / c1,
                -1.0 / c3,
                1.0 / (c1 * c3),
                -c2 / c3,
                c2 / (c1 * c3),
            ],
            [
                1.0,
                c1,
                -1.0 / c2,
                -c1 / c2,
                -1.0 / c3,
                -c1 / c3,
                1.0 / (c2 * c3),
                c1 / (c2 * c3),
            ],
            [
                1.0,
                -1.0 / c1,
                -1.0 / c2,
                1.0 / (c1 * c2),
                -1.0 / c3,
                1.0 / (c1 * c3),
                1.0 / (c2 * c3),
                -1.0 / (c1 * c2 * c3),
            ],
        ];
        let m = onb_matrix(&p).unwrap();
        for x in 0..8 {
            for s in 0..8 {
                assert!((m[x][s] - expected[x][s]).abs() < 1e-12, "row {x} col {s}");
            }
        }
    }

    #[test]
    fn dense_examples() {
        let p = BiasVector::new(vec![0.4]).unwrap();
        let m = Construction::TwoWise.build(&p).unwrap();
        let t = m.adjacency().unwrap().dense().unwrap();
        let l = dense_lambda_min(&t, &m.mu1_table()).unwrap();
        assert!((l + 2.0 / 3.0).abs() < 1e-10);

        let p = BiasVector::uniform(2, 0.6).unwrap();
        let m = Construction::ThreeWise.build(&p).unwrap();
        let t = m.adjacency().unwrap().dense().unwrap();
        assert!((dense_lambda_min(&t, &m.mu1_table()).unwrap() + 0.25).abs() < 1e-10);

        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!((dense_lambda_min(&id, &[0.3, 0.7]).unwrap() - 1.0).abs() < 1e-12);

        let skew = vec![vec![0.5, 0.5], vec![0.1, 0.9]];
        assert!(matches!(
            dense_lambda_min(&skew, &[0.5, 0.5]),
            Err(Error::NotSelfAdjoint { .. })
        ));
        assert!(matches!(
            dense_lambda_min(&id, &[0.0, 1.0]),
            Err(Error::NonPositiveMarginal { .. })
        ));
    }

    fn arb_bias(max_n: usize) -> impl Strategy<Value = BiasVector<f64>> {
        prop::collection::vec(0.05f64..0.95, 1..=max_n).prop_map(|p| BiasVector::new(p).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn basis_is_orthonormal(p in arb_bias(4)) {
            let mu1 = p.set_measures();
            let size = 1u32 << p.n();
            let vs: Vec<Vec<f64>> = (0..size).map(|s| OnbVector::new(s, &p).to_vec()).collect();
            for s in 0..size as usize {
                for r in 0..size as usize {
                    let ip = inner(&mu1, &vs[s], &vs[r]);
                    let expected = if s == r { 1.0 } else { 0.0 };
                    prop_assert!((ip - expected).abs() < 1e-10);
                }
            }
            // v_S is the pointwise product of the singletons
            for s in 0..size {
                let v = OnbVector::new(s, &p).to_vec();
                for x in 0..size {
                    let prod: f64 = (0..p.n())
                        .filter(|i| s >> i & 1 == 1)
                        .map(|i| OnbVector::new(1 << i, &p).value(x))
                        .product();
                    prop_assert!((v[x as usize] - prod).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn basis_vectors_are_eigenvectors(p in arb_bias(4), kind in 0usize..2) {
            let (c, r) = if kind == 0 { (Construction::TwoWise, 2) } else { (Construction::ThreeWise, 3) };
            let p = if r == 3 {
                BiasVector::new(p.as_slice().iter().map(|x| x.min(0.66)).collect()).unwrap()
            } else { p };
            let t = c.build(&p).unwrap().adjacency().unwrap();
            let lambdas: Vec<f64> = coordinate_eigs(&p, r).into_iter().map(|e| e.lambda).collect();
            let spec = product_spectrum(&lambdas).unwrap();
            for s in 0..1u32 << p.n() {
                let v = OnbVector::new(s, &p).to_vec();
                let tv = t.apply(&v);
                let l = spec.lambda(s);
                for (a, b) in tv.iter().zip(&v) {
                    prop_assert!((a - l * b).abs() < 1e-10 * (1.0 + l.abs()) * (1.0 + b.abs()));
                }
            }
        }

        #[test]
        fn dense_agrees_with_product_spectrum(p in arb_bias(6), kind in 0usize..3) {
            let (c, r) = match kind {
                0 => (Construction::TwoWise, 2),
                1 => (Construction::ThreeWise, 3),
                _ => (Construction::RWise { r: 4, eps: Some(1e-6) }, 4),
            };
            let cap = match r { 2 => 0.95, 3 => 0.66, _ => 0.74 };
            let p = BiasVector::new(p.as_slice().iter().map(|x| x.min(cap)).collect()).unwrap();
            let m = c.build(&p).unwrap();
            let t = m.adjacency().unwrap();
            let spec = product_spectrum(&t.coordinate_eigenvalues()).unwrap();
            let dense = dense_lambda_min(&t.dense().unwrap(), &m.mu1_table()).unwrap();
            prop_assert!((dense - spec.lambda_min).abs() < 1e-8, "{} vs {}", dense, spec.lambda_min);
        }
    }

    #[test]
    fn dense_agrees_at_n10() {
        let p = BiasVector::new((0..10).map(|i| 0.62 - 0.03 * i as f64).collect()).unwrap();
        let m = Construction::ThreeWise.build(&p).unwrap();
        let t = m.adjacency().unwrap();
        let spec = product_spectrum(&t.coordinate_eigenvalues()).unwrap();
        let dense = dense_lambda_min(&t.dense().unwrap(), &m.mu1_table()).unwrap();
        assert!((dense - spec.lambda_min).abs() < 1e-8);
    }
}
