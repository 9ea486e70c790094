//! Executable forms of the inner-product identities and the two quadratic-form
//! inequalities behind the Hoffman bounds, checked family by family.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Result;
use crate::family::{BiasVector, SubsetFamily};
use crate::fourier::{expand, hoffman_deficit, quadratic_form};
use crate::measure::{expect1, inner, is_independent, ProductMeasure};
use crate::scalar::Scalar;
use crate::spectral::product_spectrum;

/// Equalities whose two sides are computed independently.
pub const IDENTITIES: [&str; 8] = [
    "inner_product_is_expectation",
    "self_adjoint",
    "constant_eigenvector",
    "unit_mass",
    "indicator_mean",
    "indicator_norm",
    "parseval",
    "quadratic_form",
];

/// Inequalities reported as `rhs - lhs`, which must be non-negative.
pub const INEQUALITIES: [&str; 3] = ["hoffman_lemma", "link_lemma", "independent_link_half"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityWitness {
    pub check: &'static str,
    pub family: SubsetFamily,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub n: usize,
    pub r: usize,
    pub families: usize,
    /// Largest `|lhs - rhs|` per identity.
    pub max_defect: BTreeMap<&'static str, f64>,
    /// Smallest `rhs - lhs` per inequality; absent when no family qualified.
    pub min_slack: BTreeMap<&'static str, f64>,
    pub violations: Vec<IdentityWitness>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Recorder {
    tol: f64,
    report: IdentityReport,
}

impl Recorder {
    fn equal<S: Scalar>(&mut self, check: &'static str, f: &SubsetFamily, lhs: &S, rhs: &S) {
        let exact = lhs.ties(rhs);
        let (l, r) = (lhs.to_f64(), rhs.to_f64());
        let d = if exact { 0.0 } else { (l - r).abs() };
        let slot = self.report.max_defect.entry(check).or_insert(0.0);
        *slot = slot.max(d);
        if d > self.tol {
            self.report.violations.push(IdentityWitness {
                check,
                family: f.clone(),
                lhs: l,
                rhs: r,
            });
        }
    }

    fn at_most(&mut self, check: &'static str, f: &SubsetFamily, lhs: f64, rhs: f64) {
        let slack = rhs - lhs;
        let slot = self.report.min_slack.entry(check).or_insert(f64::INFINITY);
        *slot = slot.min(slack);
        if slack < -self.tol {
            self.report.violations.push(IdentityWitness {
                check,
                family: f.clone(),
                lhs,
                rhs,
            });
        }
    }
}

/// Runs every identity and inequality on each family under the measure `m`.
/// `independent_link_half` is only evaluated for families independent in a 3-graph.
pub fn identity_suite<S: Scalar>(
    m: &ProductMeasure<S>,
    families: impl IntoIterator<Item = SubsetFamily>,
    tol: f64,
) -> Result<IdentityReport> {
    let n = m.n();
    let t = m.adjacency()?;
    let mu1 = m.mu1_table();
    let bias: BiasVector<f64> = m.mu1()?.to_f64();
    let lambdas: Vec<f64> = t
        .coordinate_eigenvalues()
        .iter()
        .map(Scalar::to_f64)
        .collect();
    let spectrum = product_spectrum(&lambdas)?;
    let size = 1usize << n;
    let ones = vec![S::one(); size];
    let ramp: Vec<S> = (0..size)
        .map(|x| S::from_ratio(x as i64 + 1, size as i64))
        .collect();

    let mut rec = Recorder {
        tol,
        report: IdentityReport {
            n,
            r: m.r(),
            families: 0,
            max_defect: BTreeMap::new(),
            min_slack: BTreeMap::new(),
            violations: Vec::new(),
        },
    };
    let empty = SubsetFamily::empty(n)?;
    let t_one = t.apply(&ones);
    let row_defect = t_one.iter().fold(S::zero(), |acc, v| {
        S::max_of(acc, (v.clone() - S::one()).abs())
    });
    rec.equal("constant_eigenvector", &empty, &row_defect, &S::zero());
    rec.equal("unit_mass", &empty, &inner(&mu1, &ones, &ones), &S::one());

    for f in families {
        rec.report.families += 1;
        let phi: Vec<S> = f.indicator();
        let comp: Vec<S> = f.complement().indicator();
        let mean = expect1(&mu1, &phi);
        let t_phi = t.apply(&phi);
        for g in [&phi, &comp, &ramp] {
            let tg = t.apply(g);
            let lhs = inner(&mu1, &phi, &tg);
            rec.equal(
                "inner_product_is_expectation",
                &f,
                &lhs,
                &m.expect2(&phi, g),
            );
            rec.equal("self_adjoint", &f, &lhs, &inner(&mu1, &t_phi, g));
        }
        rec.equal("indicator_mean", &f, &inner(&mu1, &phi, &ones), &mean);
        rec.equal("indicator_norm", &f, &inner(&mu1, &phi, &phi), &mean);

        let e = expand(&f, &bias)?;
        let mean_f = mean.to_f64();
        let e2 = m.expect2(&phi, &phi);
        rec.equal("parseval", &f, &e.mean(), &mean_f);
        rec.equal("parseval", &f, &e.parseval_sum(), &mean_f);
        rec.equal(
            "quadratic_form",
            &f,
            &quadratic_form(&e, &spectrum)?,
            &e2.to_f64(),
        );
        rec.at_most("hoffman_lemma", &f, 0.0, hoffman_deficit(&e, &spectrum)?);

        if f.is_empty() {
            continue;
        }
        let worst = f
            .members()
            .map(|x| t_phi[x as usize].clone())
            .reduce(S::max_of)
            .expect("non-empty");
        rec.at_most(
            "link_lemma",
            &f,
            e2.to_f64(),
            (mean * worst.clone()).to_f64(),
        );
        if m.r() == 3 && is_independent(&f, m) {
            rec.at_most("independent_link_half", &f, worst.to_f64(), 0.5);
        }
    }
    Ok(rec.report)
}

/// Every family on `[n]` for `n <= 4`, in bitmap order.
pub fn all_families(n: usize) -> impl Iterator<Item = SubsetFamily> {
    assert!(n <= 4, "all families only for n <= 4");
    (0..1u64 << (1u32 << n)).map(move |b| SubsetFamily::from_bitmap(n, b))
}
