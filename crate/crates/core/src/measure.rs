//! Symmetric signed product measures on `V^r`, `V = 2^[n]`, and their adjacency operators.
//!
//! Each coordinate carries a [`BaseTensor`]: a symmetric function on `{0,1}^r`
//! stored by weight class, where class `i` is the value at any tuple with
//! exactly `i` zero slots. Class `0` is therefore the all-ones tuple, which
//! every construction here sends to zero; that is what makes intersecting
//! families independent.

use serde::Serialize;

use crate::error::{out_of_range, Error, Result};
use crate::family::{BiasVector, SetMask, SubsetFamily};
use crate::scalar::Scalar;

pub(crate) fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// One coordinate of a product measure, stored by weight class.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaseTensor<S> {
    r: usize,
    classes: Vec<S>,
}

impl<S: Scalar> BaseTensor<S> {
    /// `classes[i]` is the value at tuples with `i` zero slots; the arity is `classes.len() - 1`.
    pub fn from_classes(classes: Vec<S>) -> Result<Self> {
        if classes.len() < 2 {
            return Err(out_of_range(
                "arity",
                classes.len().saturating_sub(1),
                "r >= 1",
            ));
        }
        Ok(BaseTensor {
            r: classes.len() - 1,
            classes,
        })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn class(&self, zeros: usize) -> &S {
        &self.classes[zeros]
    }

    pub fn classes(&self) -> &[S] {
        &self.classes
    }

    /// Value at a tuple given as bits (`true` = the coordinate is in the set).
    pub fn value(&self, bits: &[bool]) -> &S {
        debug_assert_eq!(bits.len(), self.r);
        &self.classes[bits.iter().filter(|b| !**b).count()]
    }

    /// The `k`-ary marginal: `class'_i = sum_j C(r-k, j) class_{i+j}`.
    pub fn marginal(&self, k: usize) -> BaseTensor<S> {
        assert!(k >= 1 && k <= self.r, "marginal arity out of range");
        let free = self.r - k;
        let classes = (0..=k)
            .map(|i| {
                (0..=free).fold(S::zero(), |acc, j| {
                    acc + S::from_usize(binom(free, j)) * self.classes[i + j].clone()
                })
            })
            .collect();
        BaseTensor { r: k, classes }
    }

    /// Marginal by summing out one slot at a time. Used to cross-check [`Self::marginal`].
    pub fn marginal_by_summation(&self, k: usize) -> BaseTensor<S> {
        let mut t = self.clone();
        while t.r > k {
            // fixing the summed slot to 1 keeps the zero count, fixing it to 0 adds one
            let classes = (0..t.r)
                .map(|i| t.classes[i].clone() + t.classes[i + 1].clone())
                .collect();
            t = BaseTensor {
                r: t.r - 1,
                classes,
            };
        }
        t
    }

    /// Total mass `sum_i C(r, i) class_i`.
    pub fn mass(&self) -> S {
        self.classes
            .iter()
            .enumerate()
            .fold(S::zero(), |acc, (i, c)| {
                acc + S::from_usize(binom(self.r, i)) * c.clone()
            })
    }

    /// `mu_1({1})`, the bias this coordinate induces.
    pub fn bias(&self) -> S {
        self.marginal(1).classes[0].clone()
    }

    /// Checks unit mass and that the `(r-1)`-marginal is strictly positive.
    /// The error names the first failing class.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let mass = self.mass();
        if !crate::scalar::close(&mass, &S::one(), tol) {
            return Err(Error::Validity {
                class: "total mass".into(),
                value: mass.to_string(),
            });
        }
        let k = self.r.saturating_sub(1).max(1);
        let m = self.marginal(k);
        for (i, c) in m.classes.iter().enumerate() {
            if *c <= S::zero() {
                return Err(Error::Validity {
                    class: format!("mu_{k} class with {i} zero slots"),
                    value: c.to_string(),
                });
            }
        }
        Ok(())
    }
}

fn check_bias<S: Scalar>(p: &S) -> Result<()> {
    if *p > S::zero() && *p < S::one() {
        Ok(())
    } else {
        Err(Error::InvalidBias {
            index: 0,
            value: p.to_string(),
        })
    }
}

/// 2-wise base: `(1,1) -> 0`, mixed `-> p`, `(0,0) -> 1 - 2p`. Signed when `p > 1/2`.
pub fn base_2wise<S: Scalar>(p: S) -> Result<BaseTensor<S>> {
    check_bias(&p)?;
    let two = S::from_usize(2);
    BaseTensor::from_classes(vec![S::zero(), p.clone(), S::one() - two * p])
}

/// 3-wise base: one zero slot `-> p/2`, all zeros `-> 1 - 3p/2`, everything else `0`.
pub fn base_3wise<S: Scalar>(p: S) -> Result<BaseTensor<S>> {
    check_bias(&p)?;
    let half = S::from_ratio(1, 2);
    let t = BaseTensor::from_classes(vec![
        S::zero(),
        half * p.clone(),
        S::zero(),
        S::one() - S::from_ratio(3, 2) * p,
    ])?;
    t.validate(1e-12)?;
    Ok(t)
}

/// Perturbation sizes `(delta_1, delta_2)` that restore unit mass and the bias.
pub fn rwise_deltas<S: Scalar>(r: usize, eps: &S) -> (S, S) {
    let pow = S::from_usize(1 << (r - 1));
    let rm1 = S::from_usize(r - 1);
    let d1 = (pow.clone() - S::from_usize(r)) / rm1.clone() * eps.clone();
    let d2 = (pow - S::one()) * S::from_usize(r - 2) / rm1 * eps.clone();
    (d1, d2)
}

/// Default perturbation: `1e-6` times the smaller of `p/(r-1)` and `1 - rp/(r-1)`.
pub fn default_eps<S: Scalar>(p: &S, r: usize) -> S {
    let rm1 = S::from_usize(r - 1);
    let a = p.clone() / rm1.clone();
    let b = S::one() - S::from_usize(r) * p.clone() / rm1;
    S::from_ratio(1, 1_000_000) * S::min_of(a, b)
}

/// `r`-wise base with perturbation `eps`: classes `0, p/(r-1) - d1, eps, ..., eps, 1 - rp/(r-1) - d2`.
pub fn base_rwise<S: Scalar>(p: S, r: usize, eps: S) -> Result<BaseTensor<S>> {
    check_bias(&p)?;
    if r < 3 {
        return Err(out_of_range("r", r, "r >= 3"));
    }
    if eps <= S::zero() {
        return Err(out_of_range("eps", eps, "eps > 0"));
    }
    let (d1, d2) = rwise_deltas(r, &eps);
    let rm1 = S::from_usize(r - 1);
    let mut classes = vec![S::zero(); r + 1];
    classes[1] = p.clone() / rm1.clone() - d1;
    for c in classes.iter_mut().take(r).skip(2) {
        *c = eps.clone();
    }
    classes[r] = S::one() - S::from_usize(r) * p / rm1 - d2;
    for i in [1, r] {
        if classes[i] <= S::zero() {
            return Err(Error::Validity {
                class: format!("mu_{r} class with {i} zero slots"),
                value: classes[i].to_string(),
            });
        }
    }
    let t = BaseTensor::from_classes(classes)?;
    t.validate(1e-12)?;
    Ok(t)
}

/// The constructions used by the bound evaluators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Construction {
    TwoWise,
    ThreeWise,
    /// `eps = None` selects [`default_eps`] per coordinate.
    RWise {
        r: usize,
        eps: Option<f64>,
    },
}

impl Construction {
    pub fn r(&self) -> usize {
        match self {
            Construction::TwoWise => 2,
            Construction::ThreeWise => 3,
            Construction::RWise { r, .. } => *r,
        }
    }

    pub fn build<S: Scalar>(&self, p: &BiasVector<S>) -> Result<ProductMeasure<S>> {
        let bases = p
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, pi)| {
                let base = match *self {
                    Construction::TwoWise => base_2wise(pi.clone()),
                    Construction::ThreeWise => base_3wise(pi.clone()),
                    Construction::RWise { r, eps } => {
                        let e = eps.map(S::from_f64).unwrap_or_else(|| default_eps(pi, r));
                        base_rwise(pi.clone(), r, e)
                    }
                };
                base.map_err(|e| at_coordinate(e, i))
            })
            .collect::<Result<Vec<_>>>()?;
        ProductMeasure::assemble(bases)
    }
}

fn at_coordinate(e: Error, i: usize) -> Error {
    match e {
        Error::InvalidBias { value, .. } => Error::InvalidBias { index: i, value },
        Error::Validity { class, value } => Error::Validity {
            class: format!("coordinate {}: {class}", i + 1),
            value,
        },
        other => other,
    }
}

/// `mu_r = base_1 x ... x base_n` on `V^r`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductMeasure<S> {
    r: usize,
    bases: Vec<BaseTensor<S>>,
    /// `marginals[i][k - 1]` is the `k`-ary marginal of coordinate `i`.
    marginals: Vec<Vec<BaseTensor<S>>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureSummary<S> {
    pub n: usize,
    pub r: usize,
    pub bases: Vec<BaseTensor<S>>,
    pub bias: Vec<S>,
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validity_error: Option<String>,
}

impl<S: Scalar> ProductMeasure<S> {
    pub fn assemble(bases: Vec<BaseTensor<S>>) -> Result<Self> {
        let first = bases
            .first()
            .ok_or_else(|| out_of_range("n", 0, "at least one coordinate"))?
            .r;
        if let Some(b) = bases.iter().find(|b| b.r != first) {
            return Err(Error::MixedArity { first, other: b.r });
        }
        let marginals = bases
            .iter()
            .map(|b| (1..=first).map(|k| b.marginal(k)).collect())
            .collect();
        Ok(ProductMeasure {
            r: first,
            bases,
            marginals,
        })
    }

    pub fn n(&self) -> usize {
        self.bases.len()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn bases(&self) -> &[BaseTensor<S>] {
        &self.bases
    }

    pub fn coordinate_marginal(&self, i: usize, k: usize) -> &BaseTensor<S> {
        &self.marginals[i][k - 1]
    }

    /// `mu_k(S_1, ..., S_k)` for `k = sets.len() <= r`.
    pub fn eval(&self, sets: &[SetMask]) -> S {
        let k = sets.len();
        assert!(k >= 1 && k <= self.r, "tuple length out of range");
        (0..self.n()).fold(S::one(), |acc, i| {
            let zeros = sets.iter().filter(|&&s| s >> i & 1 == 0).count();
            acc * self.marginals[i][k - 1].classes[zeros].clone()
        })
    }

    /// The induced bias vector; equals the `p` the measure was built from.
    pub fn mu1(&self) -> Result<BiasVector<S>> {
        BiasVector::new(self.bases.iter().map(BaseTensor::bias).collect())
    }

    /// `mu_1` as a table indexed by mask.
    pub fn mu1_table(&self) -> Vec<S> {
        let mut table = vec![S::one()];
        for m in &self.marginals {
            let c = &m[0].classes;
            let lower: Vec<S> = table.iter().map(|t| t.clone() * c[1].clone()).collect();
            let upper: Vec<S> = table.iter().map(|t| t.clone() * c[0].clone()).collect();
            table = lower;
            table.extend(upper);
        }
        table
    }

    pub fn validate(&self) -> Result<()> {
        for (i, b) in self.bases.iter().enumerate() {
            b.validate(1e-12).map_err(|e| at_coordinate(e, i))?;
        }
        Ok(())
    }

    pub fn summary(&self) -> MeasureSummary<S> {
        let validity = self.validate();
        MeasureSummary {
            n: self.n(),
            r: self.r,
            bases: self.bases.clone(),
            bias: self.bases.iter().map(BaseTensor::bias).collect(),
            valid: validity.is_ok(),
            validity_error: validity.err().map(|e| e.to_string()),
        }
    }

    /// The adjacency operator `T_{x,y} = mu_2(x,y) / mu_1(x)`.
    pub fn adjacency(&self) -> Result<AdjacencyOperator<S>> {
        link_operator(self, &[])
    }

    /// `E_{mu_2}[f, g] = sum_{x,y} mu_2(x,y) f(x) g(y)`, applied coordinate-wise.
    pub fn expect2(&self, f: &[S], g: &[S]) -> S {
        assert!(self.r >= 2);
        let factors: Vec<Factor<S>> = self
            .marginals
            .iter()
            .map(|m| {
                let c = &m[1].classes;
                [[c[2].clone(), c[1].clone()], [c[1].clone(), c[0].clone()]]
            })
            .collect();
        let mg = kron_apply(&factors, g);
        dot(f, &mg)
    }

    /// `sum_{x_1..x_r in F} mu_r(x_1, ..., x_r)`, i.e. `E_{mu_r}[phi, ..., phi]` for the indicator of `F`.
    pub fn expect_top(&self, f: &SubsetFamily) -> S {
        let members: Vec<SetMask> = f.members().collect();
        let mut total = S::zero();
        let mut tuple = vec![0usize; self.r];
        if members.is_empty() {
            return total;
        }
        loop {
            let sets: Vec<SetMask> = tuple.iter().map(|&j| members[j]).collect();
            total = total + self.eval(&sets);
            let mut pos = 0;
            loop {
                if pos == self.r {
                    return total;
                }
                tuple[pos] += 1;
                if tuple[pos] < members.len() {
                    break;
                }
                tuple[pos] = 0;
                pos += 1;
            }
        }
    }
}

/// True iff `mu_r` vanishes on every `r`-tuple of members of `f`.
///
/// Symmetry lets us visit only non-decreasing index tuples. A product vanishes
/// exactly when some coordinate's class value is zero.
pub fn is_independent<S: Scalar>(f: &SubsetFamily, m: &ProductMeasure<S>) -> bool {
    let members: Vec<SetMask> = f.members().collect();
    if members.is_empty() {
        return true;
    }
    let r = m.r();
    fn rec<S: Scalar>(
        m: &ProductMeasure<S>,
        members: &[SetMask],
        start: usize,
        chosen: &mut Vec<SetMask>,
        r: usize,
    ) -> bool {
        if chosen.len() == r {
            return m.eval(chosen).is_zero();
        }
        for j in start..members.len() {
            chosen.push(members[j]);
            let ok = rec(m, members, j, chosen, r);
            chosen.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    rec(m, &members, 0, &mut Vec::with_capacity(r), r)
}

pub type Factor<S> = [[S; 2]; 2];

/// Kronecker-factored operator; factor `i` acts on bit `i` of the mask.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdjacencyOperator<S> {
    factors: Vec<Factor<S>>,
    /// True when the factors are the exact `eps -> 0` limit matrices.
    closed_form: bool,
}

/// Largest `n` for which operators are materialized densely.
pub const MAX_DENSE_N: usize = 12;

impl<S: Scalar> AdjacencyOperator<S> {
    pub fn from_factors(factors: Vec<Factor<S>>, closed_form: bool) -> Self {
        AdjacencyOperator {
            factors,
            closed_form,
        }
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Factor<S>] {
        &self.factors
    }

    pub fn is_closed_form(&self) -> bool {
        self.closed_form
    }

    pub fn entry(&self, x: SetMask, y: SetMask) -> S {
        self.factors
            .iter()
            .enumerate()
            .fold(S::one(), |acc, (i, f)| {
                acc * f[(x >> i & 1) as usize][(y >> i & 1) as usize].clone()
            })
    }

    pub fn apply(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), 1 << self.n(), "vector length must be 2^n");
        kron_apply(&self.factors, v)
    }

    pub fn dense(&self) -> Result<Vec<Vec<S>>> {
        let n = self.n();
        if n > MAX_DENSE_N {
            return Err(Error::OverCap {
                n,
                cap: MAX_DENSE_N,
                context: "dense operators",
            });
        }
        let size = 1u32 << n;
        Ok((0..size)
            .map(|x| (0..size).map(|y| self.entry(x, y)).collect())
            .collect())
    }

    /// Non-trivial eigenvalue of each factor. Each factor is row-stochastic, so
    /// its eigenvalues are `1` and `trace - 1`.
    pub fn coordinate_eigenvalues(&self) -> Vec<S> {
        self.factors
            .iter()
            .map(|f| f[0][0].clone() + f[1][1].clone() - S::one())
            .collect()
    }

    pub fn max_row_sum_defect(&self) -> f64 {
        self.factors
            .iter()
            .flat_map(|f| f.iter())
            .map(|row| (row[0].clone() + row[1].clone() - S::one()).to_f64().abs())
            .fold(0.0, f64::max)
    }
}

fn kron_apply<S: Scalar>(factors: &[Factor<S>], v: &[S]) -> Vec<S> {
    let mut out = v.to_vec();
    for (i, f) in factors.iter().enumerate() {
        let bit = 1usize << i;
        for a in 0..out.len() {
            if a & bit != 0 {
                continue;
            }
            let (v0, v1) = (out[a].clone(), out[a | bit].clone());
            out[a] = f[0][0].clone() * v0.clone() + f[0][1].clone() * v1.clone();
            out[a | bit] = f[1][0].clone() * v0 + f[1][1].clone() * v1;
        }
    }
    out
}

pub(crate) fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// `<f, g>_{mu_1} = sum_x mu_1(x) f(x) g(x)`.
pub fn inner<S: Scalar>(mu1: &[S], f: &[S], g: &[S]) -> S {
    mu1.iter()
        .zip(f)
        .zip(g)
        .fold(S::zero(), |acc, ((m, x), y)| {
            acc + m.clone() * x.clone() * y.clone()
        })
}

pub fn expect1<S: Scalar>(mu1: &[S], f: &[S]) -> S {
    dot(mu1, f)
}

/// Anything that can produce per-coordinate link factors.
///
/// A link tuple `(v_1, ..., v_s)` enters a coordinate only through how many of
/// the `v_k` miss it (`zeros`) and how many contain it (`ones`).
pub trait LinkStructure<S: Scalar> {
    fn n(&self) -> usize;
    fn r(&self) -> usize;
    fn link_factor(&self, i: usize, zeros: usize, ones: usize) -> Result<Factor<S>>;
    fn closed_form(&self) -> bool;
}

impl<S: Scalar> LinkStructure<S> for ProductMeasure<S> {
    fn n(&self) -> usize {
        self.bases.len()
    }

    fn r(&self) -> usize {
        self.r
    }

    /// `[x][y] = mu_{s+2}(.., x, y) / mu_{s+1}(.., x)` restricted to coordinate `i`.
    #[allow(clippy::needless_range_loop)]
    fn link_factor(&self, i: usize, zeros: usize, ones: usize) -> Result<Factor<S>> {
        let s = zeros + ones;
        let top = &self.marginals[i][s + 1].classes;
        let bottom = &self.marginals[i][s].classes;
        let mut f: Factor<S> = [[S::zero(), S::zero()], [S::zero(), S::zero()]];
        for x in 0..2 {
            let zx = zeros + (x == 0) as usize;
            let den = bottom[zx].clone();
            if den <= S::zero() {
                return Err(Error::NonPositiveMarginal {
                    context: format!(
                        "coordinate {}, mu_{} class with {zx} zero slots",
                        i + 1,
                        s + 1
                    ),
                    value: den.to_string(),
                });
            }
            for y in 0..2 {
                let z = zx + (y == 0) as usize;
                f[x][y] = top[z].clone() / den.clone();
            }
        }
        Ok(f)
    }

    fn closed_form(&self) -> bool {
        false
    }
}

/// The `eps -> 0` limit of the `r`-wise construction, given by closed-form factors.
#[derive(Clone, Debug)]
pub struct LimitMeasure<S> {
    r: usize,
    p: BiasVector<S>,
}

impl<S: Scalar> LimitMeasure<S> {
    pub fn new(p: BiasVector<S>, r: usize) -> Result<Self> {
        if r < 2 {
            return Err(out_of_range("r", r, "r >= 2"));
        }
        Ok(LimitMeasure { r, p })
    }

    pub fn bias(&self) -> &BiasVector<S> {
        &self.p
    }
}

impl<S: Scalar> LinkStructure<S> for LimitMeasure<S> {
    fn n(&self) -> usize {
        self.p.n()
    }

    fn r(&self) -> usize {
        self.r
    }

    fn link_factor(&self, i: usize, zeros: usize, ones: usize) -> Result<Factor<S>> {
        let (o, l) = (S::zero(), S::one());
        let h = S::from_ratio(1, 2);
        let f = match (zeros, ones) {
            (0, 0) => {
                let rm1 = S::from_usize(self.r - 1);
                let a = self.p.p(i).clone() / (rm1.clone() * self.p.q(i));
                let b = l.clone() / rm1;
                [[l.clone() - a.clone(), a], [b.clone(), l - b]]
            }
            (1, 0) => [[l.clone(), o.clone()], [o, l]],
            (0, j) => {
                let d = S::from_usize(self.r - j - 1);
                let b = l.clone() / d.clone();
                [[o, l], [b, S::from_usize(self.r - j - 2) / d]]
            }
            (_, 0) => [[l, o], [h.clone(), h]],
            (1, _) => [[h.clone(), h], [o, l]],
            _ => [[h.clone(), h.clone()], [h.clone(), h]],
        };
        Ok(f)
    }

    fn closed_form(&self) -> bool {
        true
    }
}

/// `T_S` for the link tuple `link = (v_1, ..., v_s)`, `s <= r - 2`. `s = 0` gives `T`.
pub fn link_operator<S: Scalar, L: LinkStructure<S>>(
    m: &L,
    link: &[SetMask],
) -> Result<AdjacencyOperator<S>> {
    let s = link.len();
    if s + 2 > m.r() {
        return Err(out_of_range(
            "link size",
            s,
            format!("s <= r - 2 = {}", m.r() - 2),
        ));
    }
    let factors = (0..m.n())
        .map(|i| {
            let ones = link.iter().filter(|&&v| v >> i & 1 == 1).count();
            m.link_factor(i, s - ones, ones)
        })
        .collect::<Result<_>>()?;
    Ok(AdjacencyOperator::from_factors(factors, m.closed_form()))
}

/// `E_{mu_{1,x}}[phi] = (T phi)(x)` for every `x`.
pub fn link_expectations<S: Scalar>(t: &AdjacencyOperator<S>, phi: &[S]) -> Vec<S> {
    t.apply(phi)
}
