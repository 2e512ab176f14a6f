//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p pairperm-cli --test acceptance`.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use common::{parts, XorShift};
use pairperm::harness::{run_study, CellResult, Method, StudyGrid};
use pairperm::randomization::{
    apply_draw, exact_permutation_distribution, mc_permutation_distribution, DegeneracyPolicy, DEFAULT_GROUP_LIMIT,
};
use pairperm::rng::stream;
use pairperm::statistics::{
    kim_t3_statistic, lin_stivers_statistic, paired_t_statistic, weighted_statistic, welch_statistic,
};
use pairperm::{
    exact_permutation_test, generate_sample, mc_permutation_test, CovarianceSpec, Marginal, PartiallyPairedSample,
    PermutationConfig, RandomizationDraw, ScenarioConfig, Side, WeightRule,
};
use std::process::{Command, ExitCode};
use std::time::Instant;

const SEED: u64 = 20_170_101;

// pinned tolerances
const EXACTNESS_TOL: f64 = 1e-12;
const PERM_SUP_TOL: f64 = 0.03;
const KS_T_TOL: f64 = 0.05;
const LEVEL_BAND: (f64, f64) = (0.04, 0.06);
const LS_EXCESS_SE: f64 = 3.0;
const LS_MIN_LEVEL: f64 = 0.065;
const T_EXCESS_SE: f64 = 2.0;
const POWER_SLACK_SE: f64 = 2.0;
const ORACLE_REL_TOL: f64 = 1e-9;
const INVARIANCE_REL_TOL: f64 = 1e-9;
const MC_BAND_SE: f64 = 3.0;
const MC_MIN_HITS: usize = 19;

/// Criterion 9's T_LS antisymmetry check is unattainable with the printed
/// T_LS: its S2² uses only the second-only values, so swapping arms changes
/// the denominator. It is run and reported, and must be the only failure.
const EXPECTED_FAILURES: &[&str] = &["9: T_LS antisymmetry"];

struct Verdict {
    pass: bool,
    detail: String,
    /// Names of failing sub-checks.
    failed: Vec<String>,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Self {
            pass,
            detail,
            failed: Vec::new(),
        }
    }
}

fn combined_se(a: &CellResult, b: &CellResult) -> f64 {
    (a.mc_stderr().unwrap().powi(2) + b.mc_stderr().unwrap().powi(2)).sqrt()
}

fn scenario(marginal: Marginal, cov: CovarianceSpec, sizes: (usize, usize, usize), delta: f64) -> ScenarioConfig {
    ScenarioConfig {
        marginal,
        covariance: cov,
        n1: sizes.0,
        n2: sizes.1,
        n3: sizes.2,
        mu1: 0.0,
        delta,
    }
}

fn study(scenarios: Vec<ScenarioConfig>, methods: Vec<Method>) -> Vec<CellResult> {
    let grid = StudyGrid {
        scenarios,
        methods,
        alpha: 0.05,
        nsim: 5000,
        replicates: 1000,
        seed: SEED,
        rule: WeightRule::default(),
    };
    let table = run_study(&grid).expect("valid grid");
    table.cells().cloned().collect()
}

fn rate(c: &CellResult) -> f64 {
    c.rejection_rate()
        .unwrap_or_else(|| panic!("cell failed: {:?}", c.outcome))
}

fn all_perms(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in all_perms(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out
}

fn c1_exactness() -> Verdict {
    let mut g = XorShift(0xC1);
    let mut fixtures: Vec<PartiallyPairedSample> = (0..4).map(|_| g.sample(3, 2, 2, 0.3)).collect();
    // integer data with many tied replicate values
    fixtures.push(
        PartiallyPairedSample::new(vec![(1.0, 0.0), (2.0, 1.0), (0.0, 2.0)], vec![1.0, 3.0], vec![0.0, 2.0]).unwrap(),
    );
    let perms = all_perms(4);
    let rule = WeightRule::default();
    let mut worst: f64 = 0.0;
    for s in &fixtures {
        for alpha in [0.05, 0.1] {
            let mut mass = 0.0;
            let mut count = 0usize;
            for mask in 0..8u32 {
                for p in &perms {
                    let flips = (0..3).map(|k| (mask >> k) & 1 == 1).collect();
                    let gx = apply_draw(s, &RandomizationDraw::new(flips, p.clone()).unwrap()).unwrap();
                    let dist = exact_permutation_distribution(&gx, rule, DegeneracyPolicy::Floor, DEFAULT_GROUP_LIMIT)
                        .unwrap();
                    assert_eq!(dist.len(), 192);
                    mass += dist.randomized_rejection(dist.t_obs, alpha);
                    count += 1;
                }
            }
            assert_eq!(count, 192);
            worst = worst.max((mass / count as f64 - alpha).abs());
        }
    }
    Verdict::new(
        worst <= EXACTNESS_TOL,
        format!(
            "max |E phi_p - alpha| = {worst:.2e} over {} fixtures x 2 levels (tol {EXACTNESS_TOL:.0e})",
            fixtures.len()
        ),
    )
}

fn c2_permutation_normality() -> Verdict {
    let cfg = scenario(
        Marginal::Normal,
        CovarianceSpec::homoscedastic(0.5).unwrap(),
        (200, 200, 200),
        0.0,
    );
    let s = generate_sample(&cfg, &mut stream(SEED, 2)).unwrap();
    let dist = mc_permutation_distribution(
        &s,
        &PermutationConfig {
            replicates: 10_000,
            seed: SEED,
            ..PermutationConfig::default()
        },
    )
    .unwrap();
    let d = common::ks_to_normal(&dist.values);
    Verdict::new(
        d < PERM_SUP_TOL,
        format!("sup |F_B - Phi| = {d:.4} (tol {PERM_SUP_TOL})"),
    )
}

fn c3_asymptotic_normality() -> Verdict {
    use rayon::prelude::*;
    let cfg = scenario(
        Marginal::Normal,
        CovarianceSpec::homoscedastic(0.0).unwrap(),
        (200, 200, 200),
        0.0,
    );
    let ts: Vec<f64> = (0..2000u64)
        .into_par_iter()
        .map(|i| {
            let s = generate_sample(&cfg, &mut stream(SEED ^ 3, i)).unwrap();
            weighted_statistic(&s, WeightRule::default()).unwrap()
        })
        .collect();
    let d = common::ks_to_normal(&ts);
    Verdict::new(
        d < KS_T_TOL,
        format!("KS(T, N(0,1)) = {d:.4} over 2000 datasets (tol {KS_T_TOL})"),
    )
}

fn c4_level_homoscedastic() -> Verdict {
    let scenarios = [-0.5, 0.0, 0.5, 0.9]
        .iter()
        .map(|&rho| {
            scenario(
                Marginal::Normal,
                CovarianceSpec::homoscedastic(rho).unwrap(),
                (10, 10, 10),
                0.0,
            )
        })
        .collect();
    let cells = study(scenarios, vec![Method::Tp]);
    let rates: Vec<f64> = cells.iter().map(rate).collect();
    let pass = rates.iter().all(|r| (LEVEL_BAND.0..=LEVEL_BAND.1).contains(r));
    Verdict::new(
        pass,
        format!(
            "Tp levels at rho = -0.5, 0, 0.5, 0.9: {rates:.4?} (band [{}, {}])",
            LEVEL_BAND.0, LEVEL_BAND.1
        ),
    )
}

fn c5_lin_stivers_liberal() -> Verdict {
    let s = scenario(
        Marginal::Normal,
        CovarianceSpec::heteroscedastic(0.5).unwrap(),
        (30, 10, 10),
        0.0,
    );
    let cells = study(vec![s], vec![Method::Tp, Method::TLinStivers]);
    let (tp, ls) = (&cells[0], &cells[1]);
    let se = combined_se(tp, ls);
    let excess = (rate(ls) - rate(tp)) / se;
    Verdict::new(
        excess > LS_EXCESS_SE && rate(ls) > LS_MIN_LEVEL,
        format!(
            "level T_LS = {:.4}, Tp = {:.4}, difference = {excess:.1} SE (need > {LS_EXCESS_SE} SE and T_LS > {LS_MIN_LEVEL})",
            rate(ls),
            rate(tp)
        ),
    )
}

fn c6_asymptotic_liberal() -> Verdict {
    let s = scenario(
        Marginal::Normal,
        CovarianceSpec::homoscedastic(0.0).unwrap(),
        (10, 10, 10),
        0.0,
    );
    let cells = study(vec![s], vec![Method::Tp, Method::TAsymptotic]);
    let (tp, t) = (&cells[0], &cells[1]);
    let excess = (rate(t) - rate(tp)) / combined_se(tp, t);
    Verdict::new(
        excess > T_EXCESS_SE,
        format!(
            "level T = {:.4}, Tp = {:.4}, difference = {excess:.1} SE (need > {T_EXCESS_SE} SE)",
            rate(t),
            rate(tp)
        ),
    )
}

fn c7_power() -> Verdict {
    let cov = CovarianceSpec::heteroscedastic(0.9).unwrap();
    let scenarios = vec![
        scenario(Marginal::asymmetric_laplace(), cov, (30, 10, 10), 0.5),
        scenario(Marginal::asymmetric_laplace(), cov, (30, 10, 10), 1.0),
    ];
    let cells = study(scenarios, vec![Method::Tp, Method::KimT3]);
    let (tp05, t305, tp1, t31) = (&cells[0], &cells[1], &cells[2], &cells[3]);
    let not_worse = rate(tp1) >= rate(t31) - POWER_SLACK_SE * combined_se(tp1, t31);
    let strictly = rate(tp05) > rate(t305) || rate(tp1) > rate(t31);
    Verdict::new(
        not_worse && strictly,
        format!(
            "power delta=0.5: Tp {:.4} vs t3 {:.4}; delta=1: Tp {:.4} vs t3 {:.4} (slack {POWER_SLACK_SE} SE)",
            rate(tp05),
            rate(t305),
            rate(tp1),
            rate(t31)
        ),
    )
}

fn c8_cli_matches_oracle() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut g = XorShift(0xC8);
    let mut worst: f64 = 0.0;
    let mut complete = true;
    for k in 0..5 {
        let s = g.sample(9, 28, 23, 0.4 * k as f64);
        let mut text = String::from("day_before,last_day\n");
        for &(a, b) in s.complete() {
            text.push_str(&format!("{a:?},{b:?}\n"));
        }
        for a in s.first_only() {
            text.push_str(&format!("{a:?},NA\n"));
        }
        for b in s.second_only() {
            text.push_str(&format!(",{b:?}\n"));
        }
        let path = dir.path().join(format!("synthetic{k}.csv"));
        std::fs::write(&path, text).unwrap();
        let p = parts(&s);
        let a = common::default_weight(&p);
        let t = common::weighted(&p, a);
        let ls = common::lin_stivers(&p);
        let t3 = common::kim_t3(&p);
        // one-sided (upper tail) and two-sided oracle p-values
        let oracle = [
            ("T", common::normal_sf(t), 2.0 * common::normal_sf(t.abs())),
            ("T_LS", common::t_sf(ls, 56), 2.0 * common::t_sf(ls.abs(), 56)),
            ("t3", common::normal_sf(t3), 2.0 * common::normal_sf(t3.abs())),
        ];
        let out = Command::new(env!("CARGO_BIN_EXE_pairperm"))
            .args([
                "test",
                path.to_str().unwrap(),
                "--method",
                "all",
                "--format",
                "record",
                "--seed",
                "8",
            ])
            .output()
            .unwrap();
        if !out.status.success() {
            return Verdict::new(false, format!("CLI failed: {}", String::from_utf8_lossy(&out.stderr)));
        }
        let rec: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        let results = rec["results"].as_array().unwrap();
        complete &= results.len() == 4 && results.iter().all(|r| r["error"].is_null());
        complete &= ["n1", "n2", "n3"].map(|k| rec["data"][k].as_u64()) == [Some(9), Some(28), Some(23)];
        for (label, one, two) in oracle {
            let r = results.iter().find(|r| r["label"] == label).unwrap();
            let got1 = r["p_one_sided"].as_f64().unwrap();
            let got2 = r["p_two_sided"].as_f64().unwrap();
            worst = worst.max((got1 - one).abs() / one).max((got2 - two).abs() / two);
        }
        let perm = results.iter().find(|r| r["label"] == "Tp").unwrap();
        let lib = mc_permutation_test(
            &s,
            &PermutationConfig {
                seed: 8,
                ..PermutationConfig::default()
            },
        )
        .unwrap();
        complete &= perm["p_one_sided"].as_f64() == Some(lib.p_one_sided);
    }
    Verdict::new(
        worst <= ORACLE_REL_TOL && complete,
        format!("5 synthetic 9/28/23 files, all four tests reported; max relative p-value error {worst:.2e} (tol {ORACLE_REL_TOL:.0e})"),
    )
}

fn c9_invariance() -> Verdict {
    type Stat = fn(&PartiallyPairedSample) -> f64;
    let stats: [(&str, Stat); 5] = [
        ("T1", |s| paired_t_statistic(s).unwrap()),
        ("T2", |s| welch_statistic(s).unwrap()),
        ("T", |s| weighted_statistic(s, WeightRule::default()).unwrap()),
        ("T_LS", |s| lin_stivers_statistic(s).unwrap().value),
        ("t3", |s| kim_t3_statistic(s).unwrap().value),
    ];
    let close = |a: f64, b: f64| (a - b).abs() <= INVARIANCE_REL_TOL * a.abs().max(b.abs()).max(1.0);
    let mut g = XorShift(0xC9);
    let mut hits = vec![[0usize; 3]; stats.len()];
    for _ in 0..100 {
        let (n1, n2, n3) = (
            2 + g.next_u64() as usize % 15,
            2 + g.next_u64() as usize % 15,
            2 + g.next_u64() as usize % 15,
        );
        let shift0 = g.uniform() - 0.5;
        let s = g.sample(n1, n2, n3, shift0);
        let shift = 200.0 * g.uniform() - 100.0;
        let scale = 10f64.powf(4.0 * g.uniform() - 2.0);
        let moved = s.map_all(|x| x + shift);
        let scaled = s.map_all(|x| x * scale);
        let swapped = s.swap_arms();
        for (k, (_, f)) in stats.iter().enumerate() {
            let v = f(&s);
            hits[k][0] += close(v, f(&moved)) as usize;
            hits[k][1] += close(v, f(&scaled)) as usize;
            hits[k][2] += close(v, -f(&swapped)) as usize;
        }
    }
    let mut failed = Vec::new();
    let mut detail = Vec::new();
    for (k, (name, _)) in stats.iter().enumerate() {
        for (j, check) in ["location", "scale", "antisymmetry"].iter().enumerate() {
            if hits[k][j] < 100 {
                failed.push(format!("9: {name} {check}"));
                detail.push(format!("{name} {check} {}/100", hits[k][j]));
            }
        }
    }
    let summary = if detail.is_empty() {
        "all 15 checks hold on 100/100 fixtures".to_string()
    } else {
        format!("15 checks on 100 fixtures; failing: {}", detail.join(", "))
    };
    Verdict {
        pass: failed.is_empty(),
        detail: format!("{summary} (tol {INVARIANCE_REL_TOL:.0e} relative)"),
        failed,
    }
}

fn c10_mc_vs_exact() -> Verdict {
    let mut g = XorShift(0xC10);
    let mut hits = 0;
    let mut fixtures = 0;
    let mut misses = Vec::new();
    while fixtures < 20 {
        let n1 = 2 + g.next_u64() as usize % 5;
        let n2 = 2 + g.next_u64() as usize % 3;
        let n3 = 2 + g.next_u64() as usize % 3;
        if pairperm::randomization::group_size(n1, n2 + n3) > 1e5 {
            continue;
        }
        let delta = 0.8 * g.uniform();
        let s = g.sample(n1, n2, n3, delta);
        let exact = exact_permutation_test(&s, WeightRule::default(), 0.05, Side::Greater, 100_000).unwrap();
        let mc = mc_permutation_test(
            &s,
            &PermutationConfig {
                replicates: 20_000,
                seed: SEED + fixtures as u64,
                side: Side::Greater,
                ..PermutationConfig::default()
            },
        )
        .unwrap();
        let p = exact.p_one_sided;
        let band = MC_BAND_SE * (p * (1.0 - p) / 20_000.0).sqrt();
        if (mc.p_one_sided - p).abs() <= band {
            hits += 1;
        } else {
            misses.push(format!("({n1},{n2},{n3}) exact {p:.4} mc {:.4}", mc.p_one_sided));
        }
        fixtures += 1;
    }
    Verdict::new(
        hits >= MC_MIN_HITS,
        format!(
            "{hits}/20 fixtures within {MC_BAND_SE} SE of the exact p (need {MC_MIN_HITS}){}",
            if misses.is_empty() {
                String::new()
            } else {
                format!("; misses: {}", misses.join(", "))
            }
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "finite exactness", c1_exactness),
        (2, "permutation distribution normality", c2_permutation_normality),
        (3, "asymptotic normality of T", c3_asymptotic_normality),
        (4, "Tp level, homoscedastic", c4_level_homoscedastic),
        (5, "T_LS liberal under heteroscedasticity", c5_lin_stivers_liberal),
        (6, "asymptotic T liberal at (10,10,10)", c6_asymptotic_liberal),
        (7, "power of Tp vs t3", c7_power),
        (8, "CLI p-values vs independent oracle", c8_cli_matches_oracle),
        (9, "invariance suite", c9_invariance),
        (10, "Monte Carlo vs exact p-values", c10_mc_vs_exact),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:>2} [{status}] {name}: {} ({:.1}s)",
            v.detail,
            start.elapsed().as_secs_f64()
        );
        if !v.pass {
            let subs = if v.failed.is_empty() {
                vec![format!("{id}")]
            } else {
                v.failed
            };
            unexpected.extend(subs.into_iter().filter(|s| !EXPECTED_FAILURES.contains(&s.as_str())));
        }
    }
    if unexpected.is_empty() {
        if !EXPECTED_FAILURES.is_empty() {
            println!("known unattainable sub-checks: {}", EXPECTED_FAILURES.join(", "));
        }
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {}", unexpected.join(", "));
        ExitCode::FAILURE
    }
}
