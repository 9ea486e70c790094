//! The nine acceptance criteria, each at its pinned tolerance. Prints one line per
//! criterion and exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use multisect_core::bounds::{fgl_bound, hoffman_3graph, theorem_dispatch_with, EpsMode};
use multisect_core::family::{is_r_wise_intersecting, star};
use multisect_core::identities::{all_families, identity_suite, IDENTITIES, INEQUALITIES};
use multisect_core::oracle::{
    cross_max, enumerate_monotone_r_wise, for_each_monotone, max_measure,
    max_measure_t_intersecting, stability_census, Constraint,
};
use multisect_core::spectral::{link_lambda_min, product_spectrum};
use multisect_core::stability::{ak_measure, case_analysis, kindler_safra_check, StabilityCase};
use multisect_core::{
    BiasVector, Construction, NamedFamily, Rational, Scalar, StabilityConfig, SubsetFamily,
};
use rand::{Rng, SeedableRng};

type Outcome = Result<String, Box<dyn std::error::Error>>;
type Criterion = (&'static str, fn() -> Outcome);

fn q(s: &str) -> Rational {
    Rational::parse(s).unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:?}, limit {limit:?}"))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    for list in ["3/5,3/10,1/5", "9/20,9/20,2/5,3/10"] {
        let p: BiasVector<Rational> = BiasVector::parse_list(list, None)?;
        let n = p.n();
        let p1 = p.max();
        let oracle = max_measure(2, &p).map_err(|e| e.to_string())?;
        ensure(oracle.max_value == p1, || {
            format!("p={list}: oracle max {} != p1 {p1}", oracle.max_value)
        })?;
        let expected: Vec<SubsetFamily> = (0..n)
            .filter(|&i| *p.p(i) == p1)
            .map(|i| star(n, i).unwrap())
            .collect();
        let same = oracle.maximizers.len() == expected.len()
            && expected.iter().all(|f| oracle.maximizers.contains(f));
        ensure(same, || {
            format!("p={list}: maximizers are not exactly the top stars")
        })?;

        let pf = p.to_f64();
        let rep = theorem_dispatch_with(&pf, 2, None).map_err(|e| e.to_string())?;
        let gap = (rep.spectral_bound - pf.max()).abs();
        ensure(gap <= 1e-9, || {
            format!("p={list}: spectral bound off by {gap:e}")
        })?;
    }
    within(start, Duration::from_secs(5))?;
    Ok(format!(
        "oracle max = p1 exactly, maximizers = top stars ({:?})",
        start.elapsed()
    ))
}

fn criterion_2() -> Outcome {
    let p: BiasVector<Rational> = BiasVector::uniform(3, q("3/5"))?;
    let oracle = max_measure(2, &p)?;
    let pq = q("3/5");
    let closed = pq.clone() * pq.clone() * (q("3") - q("2") * pq.clone());
    ensure(
        oracle.max_value == q("81/125") && closed == q("81/125"),
        || format!("oracle max {} vs 0.648", oracle.max_value),
    )?;
    ensure(oracle.max_value > pq, || "does not exceed p1".into())?;
    let maj = NamedFamily::Majority { k: 2, m: 3 }.build(3)?;
    ensure(oracle.maximizers.contains(&maj), || {
        "majority(2,3) is not a maximizer".into()
    })?;

    let half: BiasVector<Rational> = BiasVector::uniform(3, q("1/2"))?;
    let oracle = max_measure(2, &half)?;
    ensure(oracle.max_value == q("1/2"), || {
        format!("max at 1/2 is {}", oracle.max_value)
    })?;
    let non_star = oracle
        .maximizers
        .iter()
        .find(|f| (0..3).all(|i| **f != star(3, i).unwrap()))
        .ok_or("no non-star maximizer at p = 1/2")?;
    Ok(format!(
        "0.648 via majority(2,3) > 0.6; non-star maximizer {} attains 1/2",
        non_star.to_hex()
    ))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    for s in ["11/20", "3/5", "13/20"] {
        let p: BiasVector<Rational> = BiasVector::uniform(4, q(s))?;
        let oracle = max_measure(3, &p)?;
        ensure(oracle.max_value == q(s), || {
            format!("p={s}: oracle max {}", oracle.max_value)
        })?;
        ensure(oracle.all_maximizers_are_stars, || {
            format!("p={s}: a maximizer is not a star")
        })?;

        let pf = p.to_f64();
        let m = Construction::ThreeWise.build(&pf)?;
        let lambdas = m.adjacency()?.coordinate_eigenvalues();
        let lambda_t = product_spectrum(&lambdas)?.lambda_min;
        let lambda_link = link_lambda_min(&m, 1)?;
        let bound = hoffman_3graph(&lambda_t, &lambda_link)?;
        ensure((bound - pf.max()).abs() <= 1e-9, || {
            format!("p={s}: Hoffman bound {bound}")
        })?;
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "max = p, all maximizers stars, 3-graph Hoffman = p ({:?})",
        start.elapsed()
    ))
}

fn criterion_4() -> Outcome {
    let mut lines = Vec::new();
    for (r, list) in [(4, "0.7,0.6,0.5"), (5, "0.78,0.6,0.5")] {
        let p: BiasVector<f64> = BiasVector::parse_list(list, None)?;
        let p1 = p.max();
        let q1 = 1.0 - p1;
        let mut closed = vec![1.0 - 1.0 / ((r as f64 - 1.0) * q1)];
        closed.extend((1..=r - 2).map(|s| -1.0 / (r - s - 1) as f64));
        let fgl = fgl_bound(&closed)?;
        ensure((fgl - p1).abs() <= 1e-12, || {
            format!("r={r}: closed-form bound {fgl} vs {p1}")
        })?;

        let limit = theorem_dispatch_with(&p, r, None)?;
        ensure(limit.eps_mode == EpsMode::Limit, || {
            format!("r={r}: not in limit mode")
        })?;
        let mut from_limit = vec![limit.lambda_0];
        from_limit.extend(limit.link_minima.iter().copied());
        let limit_err = max_err(&from_limit, &closed);
        ensure(limit_err <= 1e-12, || {
            format!("r={r}: limit spectra off by {limit_err:e}")
        })?;

        let mut errs = Vec::new();
        for eps in [1e-3, 1e-6] {
            let rep = theorem_dispatch_with(&p, r, Some(eps))?;
            let mut got = vec![rep.lambda_0];
            got.extend(rep.link_minima.iter().copied());
            errs.push(max_err(&got, &closed));
        }
        ensure(errs[1] < errs[0], || {
            format!("r={r}: errors {errs:?} do not decrease")
        })?;
        lines.push(format!("r={r} err {:.1e} -> {:.1e}", errs[0], errs[1]));
    }
    Ok(format!("fgl = p1 within 1e-12; {}", lines.join(", ")))
}

fn max_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut biases: Vec<BiasVector<f64>> = vec![BiasVector::new(vec![0.6, 0.55, 0.35])?];
    for _ in 0..3 {
        biases.push(BiasVector::new(
            (0..3).map(|_| rng.gen_range(0.05..0.64)).collect(),
        )?);
    }
    let mut runs = 0;
    for p in &biases {
        for c in [Construction::TwoWise, Construction::ThreeWise] {
            let m = c.build(p)?;
            let rep = identity_suite(&m, all_families(3), 1e-10)?;
            ensure(rep.passed(), || {
                format!("{c:?} at {:?}: {:?}", p.as_slice(), rep.violations.first())
            })?;
            ensure(rep.families == 256, || "not 256 families".into())?;
            for id in IDENTITIES {
                ensure(rep.max_defect.get(id).is_some_and(|d| *d <= 1e-10), || {
                    format!("{id} missing")
                })?;
            }
            for id in &INEQUALITIES[..2] {
                ensure(rep.min_slack.get(id).is_some_and(|d| *d >= -1e-10), || {
                    format!("{id} missing")
                })?;
            }
            if matches!(c, Construction::ThreeWise) {
                ensure(rep.min_slack.contains_key(INEQUALITIES[2]), || {
                    "link bound not exercised".into()
                })?;
            }
            runs += 1;
        }
    }
    for list in ["3/5,1/2,2/5", "1/3,1/4,3/5"] {
        let p: BiasVector<Rational> = BiasVector::parse_list(list, None)?;
        for c in [Construction::TwoWise, Construction::ThreeWise] {
            let m = c.build(&p)?;
            let rep = identity_suite(&m, all_families(3).step_by(17), 0.0)?;
            ensure(rep.passed(), || {
                format!("rational {list}: {:?}", rep.violations.first())
            })?;
            for id in &IDENTITIES[..6] {
                ensure(rep.max_defect[id] == 0.0, || {
                    format!("rational {list}: {id} not exact")
                })?;
            }
        }
    }
    within(start, Duration::from_secs(30))?;
    Ok(format!(
        "{runs} float runs x 256 families, rational spot-checks exact ({:?})",
        start.elapsed()
    ))
}

fn criterion_6() -> Outcome {
    let total = enumerate_monotone_r_wise(4, 3)?.len();
    let mut worst = 0.0f64;
    for p in [0.55, 0.6] {
        let bias = BiasVector::uniform(4, p)?;
        let records = stability_census(3, &bias, &p)?;
        ensure(records.len() == total, || {
            format!("census has {} of {total} families", records.len())
        })?;
        let q = 1.0 - p;
        for rec in &records {
            let bound = 4.0 * q * q * rec.eps / ((2.0 * p - 1.0) * (3.0 - 4.0 * p));
            ensure(rec.tau <= bound + 1e-12, || {
                format!(
                    "p={p}: {} has tau {} > {bound}",
                    rec.family.to_hex(),
                    rec.tau
                )
            })?;
            if bound > 0.0 {
                worst = worst.max(rec.tau / bound);
            }
        }
    }
    Ok(format!(
        "{total} families per p, zero violations, max tau/bound {worst:.3}"
    ))
}

fn criterion_7() -> Outcome {
    let mut top = Rational::zero();
    for n in 3..=5 {
        let full: u64 = (1u64 << n) - 1;
        let mut bad = None;
        for_each_monotone(n, Constraint::RWise { r: 3 }, |bitmap| {
            let in_star =
                (0..n).any(|i| (0..=full).all(|x| bitmap >> x & 1 == 0 || x >> i & 1 == 1));
            if !in_star && bitmap != 0 {
                let mu = Rational::new(bitmap.count_ones() as i64, 1i64 << n);
                if mu > q("5/16") {
                    bad.get_or_insert(bitmap);
                }
                if mu > top {
                    top = mu;
                }
            }
        })?;
        if let Some(b) = bad {
            return Err(format!("n={n}: non-star family {b:x} exceeds 5/16").into());
        }
    }
    ensure(top == q("5/16"), || {
        format!("largest non-star measure {top}, expected 5/16")
    })?;
    let bd = NamedFamily::BraceDaykin.build(4)?;
    ensure(is_r_wise_intersecting(&bd, 3), || {
        "Brace-Daykin family is not 3-wise intersecting".into()
    })?;

    let config = StabilityConfig::default();
    let mut parts = Vec::new();
    for (s, band, expected) in [("3/10", 0, "21/100"), ("2/5", 1, "138/625")] {
        let p = q(s);
        let case = case_analysis(&p, &config)?;
        ensure(case.eps_p == q(expected), || {
            format!("p={s}: eps_p {}", case.eps_p)
        })?;
        ensure(
            matches!(case.case, StabilityCase::AkBand { i, .. } if i == band),
            || format!("p={s}: not band {band}"),
        )?;
        let g = ak_measure(band, &p);
        let oracle = max_measure_t_intersecting(2, &BiasVector::uniform(4, p.clone())?)?;
        ensure(oracle.max_value <= g, || {
            format!("p={s}: 2-intersecting max {} > {g}", oracle.max_value)
        })?;
        parts.push(format!(
            "p={s} eps_p={} oracle {} <= {g}",
            case.eps_p, oracle.max_value
        ));
    }
    Ok(format!(
        "non-star max at 1/2 is 5/16 for n<=5; {}",
        parts.join("; ")
    ))
}

fn criterion_8() -> Outcome {
    let mut parts = Vec::new();
    for p in [0.55, 0.6] {
        let rep = kindler_safra_check(3, p, 0.01, 4.5)?;
        ensure(rep.functions_checked == 256, || {
            format!("checked {}", rep.functions_checked)
        })?;
        ensure(rep.violations.is_empty(), || {
            let w = &rep.violations[0];
            format!(
                "p={p}: {} delta {} distance {}",
                w.family.to_hex(),
                w.delta,
                w.distance2
            )
        })?;
        parts.push(format!(
            "p={p}: {} qualify ({} with delta > 0)",
            rep.qualifying, rep.qualifying_positive
        ));
    }
    Ok(format!(
        "256 functions, no violations; {}",
        parts.join(", ")
    ))
}

fn criterion_9() -> Outcome {
    for s in ["3/10", "2/5", "1/2"] {
        let p: BiasVector<Rational> = BiasVector::uniform(3, q(s))?;
        let res = cross_max(&[p.clone(), p])?;
        let sq = q(s) * q(s);
        ensure(res.max_value == sq, || {
            format!("p={s}: cross max {} != p^2", res.max_value)
        })?;
        ensure(res.identical_stars_attain, || {
            format!("p={s}: identical stars do not attain")
        })?;
    }
    let half: BiasVector<Rational> = BiasVector::uniform(3, q("1/2"))?;
    let res = cross_max(&[half.clone(), half.clone(), half])?;
    let cube = q("1/8");
    let relation = if res.max_value <= cube { "<=" } else { ">" };
    Ok(format!(
        "r=2 max = p^2 by identical stars; r=3 at 1/2: max {} {relation} 1/8 over {} tuples",
        res.max_value, res.tuples_examined
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("2-wise maximum equals p1", criterion_1),
        ("sharpness of the 1/2 threshold", criterion_2),
        ("3-wise maximum at uniform p", criterion_3),
        ("r-wise spectral pipeline", criterion_4),
        ("identity suites", criterion_5),
        ("tau-inequality census", criterion_6),
        ("case analysis below and at 1/2", criterion_7),
        ("one-coordinate approximation", criterion_8),
        ("cross-intersecting families", criterion_9),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", k + 1);
            }
        }
    }
    println!("acceptance: {} of 9 passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
