//! Run configuration, the command runners behind the CLI, the verification
//! suite, and the JSON/CSV writers.
//!
//! Every report embeds the resolved configuration so that a run can be repeated
//! from its own output. Floats are written with 17 significant digits; in
//! rational mode every value is an exact `a/b` string, so identical configs give
//! byte-identical files.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bounds::{shifting_comparison, theorem_dispatch_with, BoundReport};
use crate::error::{Error, Result};
use crate::family::{BiasVector, NamedFamily, SubsetFamily};
use crate::fourier::{expand, high_degree_mass, nearest_one_coordinate, star_detector};
use crate::identities::{all_families, identity_suite};
use crate::measure::{BaseTensor, Construction, ProductMeasure};
use crate::oracle::{cross_max, max_measure, stability_census, CensusRecord, ORACLE_MAX_N};
use crate::scalar::{Rational, Scalar};
use crate::spectral::{coordinate_eig, dense_lambda_min, product_spectrum};
use crate::stability::{
    c_p, case_analysis, kindler_safra_check, tau_bound, verify_stability, StabilityConfig,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Bound,
    Oracle,
    Fourier,
    Stability,
    #[default]
    Verify,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Every field optional; used for the config file and for command-line overrides.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub command: Option<Command>,
    pub n: Option<usize>,
    pub r: Option<usize>,
    /// One value (uniform) or a comma-separated list.
    pub p: Option<String>,
    pub rational: Option<bool>,
    /// `eps` of the `r`-wise construction for `r >= 4`; the closed-form limit when absent.
    pub eps: Option<f64>,
    pub ks_slack: Option<f64>,
    pub eps_p: Option<f64>,
    pub eps_max: Option<String>,
    pub cross: Option<bool>,
    pub family: Option<String>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    /// Weight classes used for every coordinate in place of the construction.
    pub base_override: Option<Vec<String>>,
}

impl PartialConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    /// Fields set in `self` win over `other`.
    pub fn or(self, other: PartialConfig) -> PartialConfig {
        PartialConfig {
            command: self.command.or(other.command),
            n: self.n.or(other.n),
            r: self.r.or(other.r),
            p: self.p.or(other.p),
            rational: self.rational.or(other.rational),
            eps: self.eps.or(other.eps),
            ks_slack: self.ks_slack.or(other.ks_slack),
            eps_p: self.eps_p.or(other.eps_p),
            eps_max: self.eps_max.or(other.eps_max),
            cross: self.cross.or(other.cross),
            family: self.family.or(other.family),
            format: self.format.or(other.format),
            out: self.out.or(other.out),
            base_override: self.base_override.or(other.base_override),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub n: usize,
    pub r: usize,
    pub p: String,
    pub rational: bool,
    pub eps: Option<f64>,
    #[serde(flatten)]
    pub stability: StabilityConfig,
    pub eps_max: Option<String>,
    pub cross: bool,
    pub family: Option<String>,
    pub format: Format,
    /// Not embedded, so that the same run written to two paths is byte-identical.
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_override: Option<Vec<String>>,
}

pub const DEFAULT_N: usize = 4;
pub const DEFAULT_R: usize = 3;
pub const DEFAULT_P: &str = "0.6";

impl RunConfig {
    /// Fills unset fields with defaults and checks what can be checked without running.
    pub fn resolve(c: PartialConfig) -> Result<Self> {
        let p = c.p.unwrap_or_else(|| DEFAULT_P.to_string());
        let listed = p.split(',').filter(|t| !t.trim().is_empty()).count();
        let n = match c.n {
            Some(n) => n,
            None if listed > 1 => listed,
            None => DEFAULT_N,
        };
        let r = c.r.unwrap_or(DEFAULT_R);
        if n == 0 {
            return Err(crate::error::out_of_range("n", n, "n >= 1"));
        }
        if r < 2 {
            return Err(crate::error::out_of_range("r", r, "r >= 2"));
        }
        let defaults = StabilityConfig::default();
        let config = RunConfig {
            command: c.command.unwrap_or_default(),
            n,
            r,
            p,
            rational: c.rational.unwrap_or(false),
            eps: c.eps,
            stability: StabilityConfig {
                ks_slack: c.ks_slack.unwrap_or(defaults.ks_slack),
                eps_p: c.eps_p.or(defaults.eps_p),
            },
            eps_max: c.eps_max,
            cross: c.cross.unwrap_or(false),
            family: c.family,
            format: c.format.unwrap_or_default(),
            out: c.out,
            base_override: c.base_override,
        };
        // surface bias errors before any work starts
        config.bias::<f64>()?;
        Ok(config)
    }

    pub fn bias<S: Scalar>(&self) -> Result<BiasVector<S>> {
        BiasVector::parse_list(&self.p, Some(self.n))
    }
}

/// Parses `star:I`, `co-star:I`, `majority:K:M`, `brace-daykin`, `ak:I`,
/// `near-star-3`, `near-star-2`, `empty`, `full` or `hex:DIGITS`. Elements are 1-based.
pub fn parse_family(spec: &str, n: usize) -> Result<SubsetFamily> {
    let parts: Vec<&str> = spec.trim().split(':').collect();
    let num = |k: usize| -> Result<usize> {
        parts
            .get(k)
            .ok_or_else(|| Error::Parse(format!("family '{spec}' is missing a parameter")))?
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("family '{spec}': {e}")))
    };
    let element = |k: usize| -> Result<usize> {
        match num(k)? {
            0 => Err(Error::Parse(format!(
                "family '{spec}': elements are numbered from 1"
            ))),
            i => Ok(i - 1),
        }
    };
    let named = match parts[0] {
        "star" => NamedFamily::Star { i: element(1)? },
        "co-star" => NamedFamily::ComplementOfStar { i: element(1)? },
        "majority" => NamedFamily::Majority {
            k: num(1)?,
            m: num(2)?,
        },
        "brace-daykin" => NamedFamily::BraceDaykin,
        "ak" => NamedFamily::Ak { i: num(1)? },
        "near-star-3" => NamedFamily::NearStarThreeWise,
        "near-star-2" => NamedFamily::NearStarTwoWise,
        "empty" => return SubsetFamily::empty(n),
        "full" => return SubsetFamily::full(n),
        "hex" => {
            let digits = parts
                .get(1)
                .ok_or_else(|| Error::Parse("hex family needs digits".into()))?;
            return SubsetFamily::from_hex(n, digits);
        }
        other => return Err(Error::Parse(format!("unknown family kind '{other}'"))),
    };
    named.build(n)
}

/// The product of a run: a JSON document, an optional CSV table, and the witnesses of failed checks.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub json: Value,
    pub csv: Option<String>,
    pub failures: Vec<Value>,
}

impl RunOutput {
    /// 0 when every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            1
        }
    }

    /// The text for `format`; CSV is only available for tables.
    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => Ok(to_json_string(&self.json)),
            Format::Csv => self.csv.clone().ok_or_else(|| {
                Error::Parse("this command has no CSV output; use --format json".into())
            }),
        }
    }
}

/// Writes the report to `config.out`, or returns it for standard output when unset.
pub fn emit_report(output: &RunOutput, config: &RunConfig) -> Result<Option<String>> {
    let text = output.render(config.format)?;
    match &config.out {
        Some(path) => {
            std::fs::write(path, text)?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

pub fn run(config: &RunConfig) -> Result<RunOutput> {
    if config.rational {
        run_typed::<Rational>(config)
    } else {
        run_typed::<f64>(config)
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize to JSON")
}

fn run_typed<S: Scalar>(config: &RunConfig) -> Result<RunOutput> {
    let p: BiasVector<S> = config.bias()?;
    let cfg = to_value(config);
    let plain = |result: Value| RunOutput {
        json: json!({ "config": cfg.clone(), "result": result }),
        csv: None,
        failures: Vec::new(),
    };
    match config.command {
        Command::Bound => {
            let report: BoundReport<S> = theorem_dispatch_with(&p, config.r, config.eps)?;
            let oracle = if !report.claims() && config.n <= ORACLE_MAX_N {
                Some(to_value(&max_measure(config.r, &p)?))
            } else {
                None
            };
            Ok(plain(
                json!({ "bound": to_value(&report), "oracle_comparison": oracle }),
            ))
        }
        Command::Oracle => {
            if config.cross {
                let ps = vec![p.clone(); config.r];
                return Ok(plain(to_value(&cross_max(&ps)?)));
            }
            if let Some(e) = &config.eps_max {
                let records = stability_census(config.r, &p, &S::parse(e)?)?;
                return Ok(census_output(cfg, None, &records));
            }
            Ok(plain(to_value(&max_measure(config.r, &p)?)))
        }
        Command::Fourier => fourier_output::<S>(config, &p, cfg),
        Command::Stability => {
            if let Some(spec) = &config.family {
                let f = parse_family(spec, config.n)?;
                return Ok(plain(to_value(&verify_stability(
                    &f,
                    &p,
                    config.r,
                    &config.stability,
                )?)));
            }
            let eps_max = match &config.eps_max {
                Some(e) => S::parse(e)?,
                None => p.p(0).clone(),
            };
            let records = stability_census(config.r, &p, &eps_max)?;
            let cases = if config.r == 3 {
                case_analysis(p.p(0), &config.stability)
                    .ok()
                    .map(|c| to_value(&c))
            } else {
                None
            };
            Ok(census_output(cfg, cases, &records))
        }
        Command::Verify => {
            let suite = run_verify_typed::<S>(config, &p)?;
            let failures = suite
                .checks
                .iter()
                .filter(|c| c.status == Status::Fail)
                .map(to_value)
                .collect();
            Ok(RunOutput {
                json: json!({ "config": cfg, "result": to_value(&suite) }),
                csv: None,
                failures,
            })
        }
    }
}

fn census_output<S: Scalar>(
    cfg: Value,
    cases: Option<Value>,
    records: &[CensusRecord<S>],
) -> RunOutput {
    let mut csv = String::from("family,eps,tau,tau_bound,star_distance,cp_eps\n");
    let mut worst_tau: Option<f64> = None;
    let mut worst_ratio: Option<f64> = None;
    let mut tau_violations = 0;
    for rec in records {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            rec.family.to_hex(),
            cell(&rec.eps),
            cell(&rec.tau),
            cell(&rec.tau_bound),
            cell(&rec.star_distance),
            cell(&rec.cp_eps)
        );
        if let Some(tb) = rec.tau_bound {
            if tb > 0.0 {
                let ratio = rec.tau / tb;
                worst_tau = Some(worst_tau.map_or(ratio, |w| w.max(ratio)));
            }
            if rec.tau > tb + 1e-9 * tb.max(1.0) {
                tau_violations += 1;
            }
        }
        let eps = rec.eps.to_f64();
        if eps > 0.0 {
            let ratio = rec.star_distance.to_f64() / eps;
            worst_ratio = Some(worst_ratio.map_or(ratio, |w| w.max(ratio)));
        }
    }
    let summary = json!({
        "records": records.len(),
        "tau_violations": tau_violations,
        "max_tau_over_bound": worst_tau,
        "max_distance_over_eps": worst_ratio,
        "case_analysis": cases,
    });
    RunOutput {
        json: json!({ "config": cfg, "result": { "summary": summary, "records": to_value(&records) } }),
        csv: Some(csv),
        failures: Vec::new(),
    }
}

fn fourier_output<S: Scalar>(
    config: &RunConfig,
    p: &BiasVector<S>,
    cfg: Value,
) -> Result<RunOutput> {
    let spec = config.family.clone().unwrap_or_else(|| "star:1".into());
    let f = parse_family(&spec, config.n)?;
    let pf = p.to_f64();
    let e = expand(&f, &pf)?;
    let lambdas: Vec<f64> = pf
        .as_slice()
        .iter()
        .map(|pi| coordinate_eig(pi, config.r).lambda)
        .collect();
    let spectrum = product_spectrum(&lambdas)?;
    let table = spectrum.table();
    let mut csv = String::from("mask,coefficient,lambda\n");
    let mut rows = Vec::with_capacity(e.coeffs.len());
    for (s, (c, l)) in e.coeffs.iter().zip(&table).enumerate() {
        let _ = writeln!(csv, "{s},{},{}", cell(c), cell(l));
        rows.push(json!({ "mask": s, "coefficient": c, "lambda": l }));
    }
    let result = json!({
        "family": to_value(&f),
        "mean": e.mean(),
        "degree_profile": e.degree_profile,
        "high_degree_mass": high_degree_mass(&e),
        "coefficients": rows,
        "star_verdict": to_value(&star_detector(&e)),
        "nearest_one_coordinate": to_value(&nearest_one_coordinate(&f, p)?),
    });
    Ok(RunOutput {
        json: json!({ "config": cfg, "result": result }),
        csv: Some(csv),
        failures: Vec::new(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Not applicable to this configuration, or reported without a claim.
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: &'static str,
    pub name: &'static str,
    pub status: Status,
    pub detail: Value,
    /// Present on failure: the family or parameters together with both sides.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifySuiteResult {
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

pub fn run_verify(config: &RunConfig) -> Result<VerifySuiteResult> {
    if config.rational {
        run_verify_typed::<Rational>(config, &config.bias()?)
    } else {
        run_verify_typed::<f64>(config, &config.bias()?)
    }
}

struct Suite {
    checks: Vec<CheckResult>,
}

impl Suite {
    fn push(
        &mut self,
        id: &'static str,
        name: &'static str,
        status: Status,
        detail: Value,
        witness: Option<Value>,
    ) {
        self.checks.push(CheckResult {
            id,
            name,
            status,
            detail,
            witness,
        });
    }
}

fn run_verify_typed<S: Scalar>(config: &RunConfig, p: &BiasVector<S>) -> Result<VerifySuiteResult> {
    let mut suite = Suite { checks: Vec::new() };
    let r = config.r;
    let dispatch: BoundReport<S> = theorem_dispatch_with(p, r, config.eps)?;

    // V01: the measure the bound is read from is a weighted hypergraph
    let built: Result<ProductMeasure<S>> = match &config.base_override {
        Some(classes) => classes
            .iter()
            .map(|c| S::parse(c))
            .collect::<Result<Vec<S>>>()
            .and_then(BaseTensor::from_classes)
            .and_then(|b| ProductMeasure::assemble(vec![b; config.n])),
        None => {
            construction_for(dispatch.construction_r, config.eps).build(&dispatch.construction_p)
        }
    };
    let measure = match built.and_then(|m| m.validate().map(|_| m)) {
        Ok(m) => {
            suite.push(
                "V01",
                "construction validity",
                Status::Pass,
                to_value(&m.summary()),
                None,
            );
            Some(m)
        }
        Err(e) => {
            suite.push(
                "V01",
                "construction validity",
                Status::Fail,
                json!({ "error": e.to_string() }),
                Some(json!({ "p": to_value(&dispatch.construction_p), "error": e.to_string() })),
            );
            None
        }
    };

    // V02, V03: identities on the first three coordinates, spectrum against a dense solver
    match &measure {
        Some(m) => {
            let k = m.n().min(3);
            let sub = ProductMeasure::assemble(m.bases()[..k].to_vec())?;
            let rep = identity_suite(&sub, all_families(k), 1e-10)?;
            let status = if rep.passed() {
                Status::Pass
            } else {
                Status::Fail
            };
            let witness = rep.violations.first().map(to_value);
            suite.push(
                "V02",
                "identities and quadratic-form inequalities",
                status,
                to_value(&rep),
                witness,
            );

            let t = m.adjacency()?;
            let lambdas: Vec<f64> = t
                .coordinate_eigenvalues()
                .iter()
                .map(Scalar::to_f64)
                .collect();
            let product = product_spectrum(&lambdas)?.lambda_min;
            if m.n() <= 8 {
                let dense: Vec<Vec<f64>> = t
                    .dense()?
                    .into_iter()
                    .map(|row| row.iter().map(Scalar::to_f64).collect())
                    .collect();
                let mu1: Vec<f64> = m.mu1_table().iter().map(Scalar::to_f64).collect();
                let direct = dense_lambda_min(&dense, &mu1)?;
                let ok = (direct - product).abs() <= 1e-9;
                let detail = json!({ "product": product, "dense": direct });
                suite.push(
                    "V03",
                    "product spectrum against dense eigensolver",
                    if ok { Status::Pass } else { Status::Fail },
                    detail.clone(),
                    (!ok).then_some(detail),
                );
            } else {
                suite.push(
                    "V03",
                    "product spectrum against dense eigensolver",
                    Status::Info,
                    json!({ "skipped": "n > 8", "product": product }),
                    None,
                );
            }
        }
        None => {
            for (id, name) in [
                ("V02", "identities and quadratic-form inequalities"),
                ("V03", "product spectrum against dense eigensolver"),
            ] {
                suite.push(
                    id,
                    name,
                    Status::Info,
                    json!({ "skipped": "no valid construction" }),
                    None,
                );
            }
        }
    }

    // V04: the dispatcher's bound
    let p1 = p.max();
    let detail = to_value(&dispatch);
    if dispatch.claims() {
        let ok = crate::scalar::close(&dispatch.bound_value, &p1, 1e-9);
        suite.push(
            "V04",
            "spectral bound equals the largest bias",
            if ok { Status::Pass } else { Status::Fail },
            detail,
            (!ok).then(|| json!({ "p": to_value(p), "bound": to_value(&dispatch.bound_value), "p1": to_value(&p1) })),
        );
    } else {
        suite.push(
            "V04",
            "spectral bound equals the largest bias",
            Status::Info,
            json!({ "regime violated": dispatch.violated, "report": detail }),
            None,
        );
    }

    // V05: the exhaustive oracle against the claim
    if config.n <= ORACLE_MAX_N {
        let oracle = max_measure(r, p)?;
        let detail = to_value(&oracle);
        if dispatch.claims() {
            let ok = oracle.max_value.ties(&p1) && !oracle.star_centers.is_empty();
            let witness = (!ok).then(|| {
                json!({ "p": to_value(p), "oracle_max": to_value(&oracle.max_value), "bound": to_value(&p1),
                        "maximizers": to_value(&oracle.maximizers) })
            });
            suite.push(
                "V05",
                "oracle maximum equals the bound, attained by a star",
                if ok { Status::Pass } else { Status::Fail },
                detail,
                witness,
            );
        } else {
            suite.push(
                "V05",
                "oracle maximum equals the bound, attained by a star",
                Status::Info,
                json!({ "exceeds_p1": oracle.max_value > p1, "conjectured_regime": dispatch.conjectured_regime,
                        "oracle": detail }),
                None,
            );
        }
    } else {
        suite.push(
            "V05",
            "oracle maximum equals the bound, attained by a star",
            Status::Info,
            json!({ "skipped": format!("n > {ORACLE_MAX_N}") }),
            None,
        );
    }

    // V06: the tau-inequality over every near-extremal family
    let p0 = p.p(0).clone();
    if p.is_uniform() && c_p(r, &p0).is_ok() && config.n <= ORACLE_MAX_N {
        let records = stability_census(r, p, &p0)?;
        let bad = records.iter().find(|rec| {
            rec.tau_bound
                .is_some_and(|tb| rec.tau > tb + 1e-9 * tb.max(1.0))
        });
        let detail = json!({ "families": records.len() });
        match bad {
            None => suite.push("V06", "tau-inequality over the census", Status::Pass, detail, None),
            Some(rec) => suite.push(
                "V06",
                "tau-inequality over the census",
                Status::Fail,
                detail,
                Some(json!({ "family": to_value(&rec.family), "eps": to_value(&rec.eps), "tau": rec.tau,
                             "tau_bound": tau_bound(r, &p0, &rec.eps).ok().map(|t| to_value(&t)) })),
            ),
        }
    } else {
        suite.push(
            "V06",
            "tau-inequality over the census",
            Status::Info,
            json!({ "skipped": "needs a uniform bias inside the stability regime" }),
            None,
        );
    }

    // V07: the shifting comparison
    let sorted = p.sorted_desc();
    let hi = S::from_ratio(r as i64 - 1, r as i64);
    let applies =
        r >= 3 && sorted.n() >= 2 && *sorted.p(0) >= hi && *sorted.p(1) < hi && config.n <= 4;
    if applies {
        let check = shifting_comparison(p, r)?;
        let ok = check.violations.is_empty();
        let witness = check
            .violations
            .first()
            .map(|b| json!({ "family": to_value(b), "p": to_value(p) }));
        suite.push(
            "V07",
            "shifting the largest bias is a strict comparison",
            if ok { Status::Pass } else { Status::Fail },
            to_value(&check),
            witness,
        );
    } else {
        suite.push(
            "V07",
            "shifting the largest bias is a strict comparison",
            Status::Info,
            json!({ "skipped": "needs r >= 3, p1 >= (r-1)/r > p2 and n <= 4" }),
            None,
        );
    }

    // V08: the one-coordinate approximation at n = 3
    let pf = p0.to_f64();
    if p.is_uniform() && pf > 0.5 {
        let ks = kindler_safra_check(3, pf, 0.01, config.stability.ks_slack)?;
        let ok = ks.violations.is_empty();
        let witness = ks.violations.first().map(to_value);
        suite.push(
            "V08",
            "small high-degree weight implies a nearby one-coordinate function",
            if ok { Status::Pass } else { Status::Fail },
            to_value(&ks),
            witness,
        );
    } else {
        suite.push(
            "V08",
            "small high-degree weight implies a nearby one-coordinate function",
            Status::Info,
            json!({ "skipped": "needs a uniform bias above 1/2" }),
            None,
        );
    }

    let passed = suite.checks.iter().all(|c| c.status != Status::Fail);
    Ok(VerifySuiteResult {
        checks: suite.checks,
        passed,
    })
}

fn construction_for(r: usize, eps: Option<f64>) -> Construction {
    match r {
        2 => Construction::TwoWise,
        3 => Construction::ThreeWise,
        r => Construction::RWise { r, eps },
    }
}

fn format_number(n: &serde_json::Number) -> String {
    match n.as_f64() {
        Some(f) if !(n.is_i64() || n.is_u64()) => format!("{f:.16e}"),
        _ => n.to_string(),
    }
}

/// One CSV cell; floats get 17 significant digits, missing values are empty.
fn cell<T: Serialize>(x: &T) -> String {
    match to_value(x) {
        Value::Null => String::new(),
        Value::Number(n) => format_number(&n),
        Value::String(s) => s,
        other => other.to_string(),
    }
}

/// Pretty JSON (two-space indent, sorted keys) with floats written to 17 significant digits.
pub fn to_json_string(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.extend(std::iter::repeat_n("  ", d));
    match v {
        Value::Number(n) => out.push_str(&format_number(n)),
        Value::Array(items) if !items.is_empty() => {
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, item, depth + 1);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (k, (key, item)) in map.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, depth + 1);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}
