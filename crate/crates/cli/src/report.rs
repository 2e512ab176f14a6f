//! Result records and their text rendering.

use crate::dataset::Dataset;
use crate::error::CliError;
use crate::MethodArg;
use pairperm::harness::{StudyGrid, StudyTable};
use pairperm::randomization::{exact_permutation_distribution, mc_permutation_distribution, DegeneracyPolicy};
use pairperm::statistics::{asymptotic_test, complete_weight, kim_t3_test, lin_stivers_test, TestOutcome};
use pairperm::{ConfidenceInterval, PermutationConfig, Reference, Side, TostResult};
use serde::Serialize;
use std::fmt::Write;
use std::path::Path;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct DataInfo {
    pub file: String,
    pub header: Option<[String; 2]>,
    pub rows: usize,
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
}

fn data_info(file: &Path, data: &Dataset) -> DataInfo {
    DataInfo {
        file: file.display().to_string(),
        header: data.header.clone(),
        rows: data.rows,
        n1: data.sample.n1(),
        n2: data.sample.n2(),
        n3: data.sample.n3(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodReport {
    pub method: &'static str,
    pub label: &'static str,
    pub statistic: Option<f64>,
    /// `permutation`, `normal` or `student_t`
    pub reference: &'static str,
    pub df: Option<f64>,
    pub p_one_sided: Option<f64>,
    pub p_two_sided: Option<f64>,
    pub p_value: Option<f64>,
    pub reject: Option<bool>,
    pub replicates: Option<usize>,
    pub exact: Option<bool>,
    pub c_p_alpha: Option<f64>,
    pub gamma_p: Option<f64>,
    pub error: Option<String>,
}

impl MethodReport {
    fn empty(method: MethodArg) -> Self {
        let (name, label, reference) = match method {
            MethodArg::Perm => ("perm", "Tp", "permutation"),
            MethodArg::Asymptotic => ("asymptotic", "T", "normal"),
            MethodArg::LinStivers => ("lin-stivers", "T_LS", "student_t"),
            MethodArg::Kim | MethodArg::All => ("kim", "t3", "normal"),
        };
        Self {
            method: name,
            label,
            statistic: None,
            reference,
            df: None,
            p_one_sided: None,
            p_two_sided: None,
            p_value: None,
            reject: None,
            replicates: None,
            exact: None,
            c_p_alpha: None,
            gamma_p: None,
            error: None,
        }
    }

    fn closed_form(mut self, o: TestOutcome) -> Self {
        self.statistic = Some(o.statistic.value);
        self.df = match o.statistic.reference {
            Reference::StudentT { df } => Some(df),
            Reference::StandardNormal => None,
        };
        self.p_one_sided = Some(o.p_one_sided);
        self.p_two_sided = Some(o.p_two_sided);
        self.p_value = Some(o.p_value);
        self.reject = Some(o.reject);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TestRecord {
    pub command: &'static str,
    pub version: &'static str,
    pub data: DataInfo,
    pub alpha: f64,
    pub side: &'static str,
    pub alternative: &'static str,
    pub weight_rule: String,
    pub weight: f64,
    pub replicates: usize,
    pub seed: u64,
    pub two_sided_method: &'static str,
    pub results: Vec<MethodReport>,
}

fn side_name(side: Side) -> (&'static str, &'static str) {
    match side {
        Side::Greater => ("one", "mu1 > mu2"),
        Side::Less => ("one-less", "mu1 < mu2"),
        Side::TwoSided => ("two", "mu1 != mu2"),
    }
}

fn run_method(
    method: MethodArg,
    data: &Dataset,
    config: &PermutationConfig,
    exact_limit: Option<u64>,
) -> pairperm::Result<MethodReport> {
    let s = &data.sample;
    let r = MethodReport::empty(method);
    match method {
        MethodArg::Perm => {
            let dist = match exact_limit {
                Some(limit) => exact_permutation_distribution(s, config.rule, DegeneracyPolicy::Floor, limit)?,
                None => mc_permutation_distribution(s, config)?,
            };
            let p = dist.p_value(config.side, config.two_sided, config.estimator);
            Ok(MethodReport {
                statistic: Some(dist.t_obs),
                p_one_sided: Some(dist.p_greater(config.estimator)),
                p_two_sided: Some(dist.p_two_sided(config.two_sided, config.estimator)),
                p_value: Some(p),
                reject: Some(p <= config.alpha),
                replicates: Some(dist.len()),
                exact: Some(dist.exact),
                c_p_alpha: Some(dist.critical_value(config.alpha)),
                gamma_p: dist.exact.then(|| dist.gamma(config.alpha)),
                ..r
            })
        }
        MethodArg::Asymptotic => Ok(r.closed_form(asymptotic_test(s, config.rule, config.alpha, config.side)?)),
        MethodArg::LinStivers => Ok(r.closed_form(lin_stivers_test(s, config.alpha, config.side)?)),
        MethodArg::Kim | MethodArg::All => Ok(r.closed_form(kim_t3_test(s, config.alpha, config.side)?)),
    }
}

pub fn test_record(
    file: &Path,
    data: &Dataset,
    methods: &[MethodArg],
    config: &PermutationConfig,
    weight_rule: &str,
    exact_limit: Option<u64>,
) -> Result<TestRecord, CliError> {
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(CliError::Precondition(format!(
            "alpha = {} outside (0, 1)",
            config.alpha
        )));
    }
    if config.replicates == 0 {
        return Err(CliError::Precondition("B must be >= 1".into()));
    }
    let s = &data.sample;
    let results = methods
        .iter()
        .map(|&m| {
            run_method(m, data, config, exact_limit).unwrap_or_else(|e| MethodReport {
                error: Some(CliError::from(e).to_string()),
                ..MethodReport::empty(m)
            })
        })
        .collect();
    let (side, alternative) = side_name(config.side);
    Ok(TestRecord {
        command: "test",
        version: VERSION,
        data: data_info(file, data),
        alpha: config.alpha,
        side,
        alternative,
        weight_rule: weight_rule.to_string(),
        weight: complete_weight(s.n1(), s.n2(), s.n3(), config.rule),
        replicates: config.replicates,
        seed: config.seed,
        two_sided_method: match config.two_sided {
            pairperm::randomization::TwoSidedMethod::DoubledTail => "doubled",
            pairperm::randomization::TwoSidedMethod::Absolute => "absolute",
        },
        results,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CiRecord {
    pub command: &'static str,
    pub version: &'static str,
    pub data: DataInfo,
    pub alpha: f64,
    pub confidence: f64,
    pub weight_rule: String,
    pub weight: f64,
    pub replicates: usize,
    pub seed: u64,
    pub lo: f64,
    pub hi: f64,
    pub t_obs: f64,
    pub sw: f64,
    pub critical: f64,
}

pub fn ci_record(
    file: &Path,
    data: &Dataset,
    config: &PermutationConfig,
    rule: &str,
    ci: &ConfidenceInterval,
) -> CiRecord {
    let s = &data.sample;
    CiRecord {
        command: "ci",
        version: VERSION,
        data: data_info(file, data),
        alpha: ci.alpha,
        confidence: 1.0 - ci.alpha,
        weight_rule: rule.to_string(),
        weight: complete_weight(s.n1(), s.n2(), s.n3(), config.rule),
        replicates: config.replicates,
        seed: config.seed,
        lo: ci.lo,
        hi: ci.hi,
        t_obs: ci.t_obs,
        sw: ci.sw,
        critical: ci.critical,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TostRecord {
    pub command: &'static str,
    pub version: &'static str,
    pub data: DataInfo,
    pub epsilon: f64,
    pub alpha: f64,
    pub weight_rule: String,
    pub replicates: usize,
    pub seed: u64,
    pub p_below_upper: f64,
    pub p_above_lower: f64,
    pub p_value: f64,
    pub equivalent: bool,
}

pub fn tost_record(file: &Path, data: &Dataset, config: &PermutationConfig, rule: &str, t: &TostResult) -> TostRecord {
    TostRecord {
        command: "tost",
        version: VERSION,
        data: data_info(file, data),
        epsilon: t.epsilon,
        alpha: t.alpha,
        weight_rule: rule.to_string(),
        replicates: config.replicates,
        seed: config.seed,
        p_below_upper: t.p_below_upper,
        p_above_lower: t.p_above_lower,
        p_value: t.p_value(),
        equivalent: t.equivalent,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyMeta {
    pub command: &'static str,
    pub version: &'static str,
    pub config: String,
    pub plot_data: String,
    pub timing: String,
    pub seed: u64,
    pub alpha: f64,
    pub nsim: usize,
    pub replicates: usize,
    pub methods: Vec<&'static str>,
    pub weight_rule: String,
    pub scenarios: usize,
    pub cells: usize,
    pub failed_cells: usize,
    pub covariance_root: &'static str,
    pub threads: usize,
}

pub fn study_meta(
    config: &Path,
    out: &Path,
    timing: &Path,
    grid: &StudyGrid,
    table: &StudyTable,
    threads: usize,
) -> StudyMeta {
    StudyMeta {
        command: "simulate",
        version: VERSION,
        config: config.display().to_string(),
        plot_data: out.display().to_string(),
        timing: timing.display().to_string(),
        seed: grid.seed,
        alpha: grid.alpha,
        nsim: grid.nsim,
        replicates: grid.replicates,
        methods: grid.methods.iter().map(|m| m.label()).collect(),
        weight_rule: format!("{:?}", grid.rule),
        scenarios: grid.scenarios.len(),
        cells: table.rows.len(),
        failed_cells: table.cells().filter(|c| c.rejections().is_none()).count(),
        covariance_root: "symmetric",
        threads,
    }
}

pub fn to_record<T: Serialize>(rec: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string(rec).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into())
}

fn data_lines(out: &mut String, d: &DataInfo) {
    let _ = writeln!(out, "data: {} ({} rows)", d.file, d.rows);
    if let Some([a, b]) = &d.header {
        let _ = writeln!(out, "arms: {a} | {b}");
    }
    let _ = writeln!(
        out,
        "complete pairs n1 = {}, first only n2 = {}, second only n3 = {}",
        d.n1, d.n2, d.n3
    );
}

pub fn test_text(r: &TestRecord) -> String {
    let mut out = String::new();
    data_lines(&mut out, &r.data);
    let _ = writeln!(
        out,
        "H1: {} (side {}), alpha = {}, weight {} (a = {:.4}), B = {}, seed = {}",
        r.alternative, r.side, r.alpha, r.weight_rule, r.weight, r.replicates, r.seed
    );
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<6} {:>12} {:<16} {:>10} {:>10} {:>7}",
        "test", "statistic", "reference", "p(one)", "p(two)", "reject"
    );
    for m in &r.results {
        if let Some(e) = &m.error {
            let _ = writeln!(out, "{:<6} error: {e}", m.label);
            continue;
        }
        let reference = match (m.reference, m.df, m.replicates, m.exact) {
            ("permutation", _, Some(b), Some(true)) => format!("exact N={b}"),
            ("permutation", _, Some(b), _) => format!("perm B={b}"),
            ("student_t", Some(df), _, _) => format!("t({df})"),
            (other, _, _, _) => other.to_string(),
        };
        let _ = writeln!(
            out,
            "{:<6} {:>12} {:<16} {:>10} {:>10} {:>7}",
            m.label,
            opt(m.statistic),
            reference,
            opt(m.p_one_sided),
            opt(m.p_two_sided),
            if m.reject == Some(true) { "yes" } else { "no" }
        );
    }
    out
}

pub fn ci_text(r: &CiRecord) -> String {
    let mut out = String::new();
    data_lines(&mut out, &r.data);
    let _ = writeln!(
        out,
        "{:.1}% permutation interval for mu1 - mu2: [{:.6}, {:.6}]",
        100.0 * r.confidence,
        r.lo,
        r.hi
    );
    let _ = writeln!(
        out,
        "T = {:.6}, S_w = {:.6}, c_p(alpha/2) = {:.6}, weight {} (a = {:.4}), B = {}, seed = {}",
        r.t_obs, r.sw, r.critical, r.weight_rule, r.weight, r.replicates, r.seed
    );
    out
}

pub fn tost_text(r: &TostRecord) -> String {
    let mut out = String::new();
    data_lines(&mut out, &r.data);
    let _ = writeln!(
        out,
        "H0: |mu1 - mu2| >= {}, alpha = {}, B = {}, seed = {}",
        r.epsilon, r.alpha, r.replicates, r.seed
    );
    let _ = writeln!(out, "p (mu1 - mu2 < epsilon)  = {:.6}", r.p_below_upper);
    let _ = writeln!(out, "p (mu1 - mu2 > -epsilon) = {:.6}", r.p_above_lower);
    let _ = writeln!(
        out,
        "equivalence {}",
        if r.equivalent { "declared" } else { "not declared" }
    );
    out
}

pub fn study_text(m: &StudyMeta) -> String {
    format!(
        "{} cells ({} scenarios x {} methods, {} failed), nsim = {}, B = {}, seed = {}\nwrote {}, {}\n",
        m.cells,
        m.scenarios,
        m.methods.len(),
        m.failed_cells,
        m.nsim,
        m.replicates,
        m.seed,
        m.plot_data,
        m.timing
    )
}
