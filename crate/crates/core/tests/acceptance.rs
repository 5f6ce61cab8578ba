//! Acceptance criteria 1-10. Each test writes one `criterion N: PASS|FAIL`
//! line straight to stderr (visible without `--nocapture`) and then asserts.
//!
//! Tolerances, seeds and sample sizes are pinned below.

use std::io::Write;
use std::process::Command;
use std::sync::OnceLock;

use mwcusum::baseline_charts::{
    bakir_reynolds_cusum, bakir_reynolds_sr, bakir_reynolds_trace, mcdonald_step, zhou_smw_stat,
    SequentialRankState, TiePolicy,
};
use mwcusum::chart_engine::{ChartConfig, DecisionValueTable};
use mwcusum::cli_io::{files, PettittTest};
use mwcusum::mc_harness::{
    calibrate, estimate_arl, substream, ArlReport, CalibrationSpec, Dist, RunLengthConvention,
    ShiftScenario,
};
use mwcusum::rank_core::{
    mann_whitney, pettitt, smw_profile, wilcoxon_rank_sum, ObservationSequence, RankEngine,
};
use rand::Rng;

const M: usize = 10;
const M0: usize = 4;
const ALPHA: f64 = 0.005;

// criterion 3
const C3_SEQUENCES: u64 = 100_000;
const C3_TOL: f64 = 0.06;
// criterion 4
const C4_SEQUENCES: u64 = 200_000;
const C4_LENGTH: usize = 260;
const C4_SEED: u64 = 42;
const C4_TARGETS: [(usize, f64); 4] = [(1, 1.185), (9, 1.845), (50, 2.292), (240, 2.413)];
const C4_TOL: f64 = 0.08;
// criteria 5-7
const ARL_REPLICATIONS: u64 = 10_000;
const ARL_MAX_N: usize = 2000;
const ARL_SEED: u64 = 7;
const C5_TARGET: f64 = 200.0;
const C5_REL_TOL: f64 = 0.10;
const C6_TARGETS: [(usize, f64, f64); 2] = [(50, 1.0, 8.7), (250, 3.0, 2.6)];
const C6_REL_TOL: f64 = 0.20;
const C7_TAU: usize = 50;
const C7_DELTAS: [f64; 6] = [0.0, 0.25, 0.5, 1.0, 2.0, 3.0];
const Z95: f64 = 1.959963984540054;
// criterion 8
const C8_L: usize = 100;
const C8_ALPHA: f64 = 0.05;
const C8_RUNS: u64 = 10_000;
const C8_CRITICAL_SEQUENCES: u64 = 100_000;

fn report(n: u32, pass: bool, detail: &str) {
    let mut err = std::io::stderr();
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(err, "criterion {n}: {verdict} - {detail}");
}

fn normal_vec(seed: u64, rep: u64, len: usize) -> Vec<f64> {
    let mut rng = substream(seed, rep);
    (0..len).map(|_| Dist::Normal.draw_standard(&mut rng)).collect()
}

fn c4_spec() -> CalibrationSpec {
    CalibrationSpec {
        n_grid: (1..=C4_LENGTH - M).collect(),
        length: C4_LENGTH,
        sequences: C4_SEQUENCES,
        ..CalibrationSpec::new(M, vec![ALPHA], C4_SEED)
    }
}

/// The desk-scale table shared by criteria 4-7.
fn c4_table() -> &'static DecisionValueTable {
    static T: OnceLock<DecisionValueTable> = OnceLock::new();
    T.get_or_init(|| calibrate(&c4_spec()).expect("calibration").table)
}

fn arl(tau: usize, delta: f64) -> ArlReport {
    let cfg = ChartConfig::standard(M, ALPHA).unwrap();
    let scn = ShiftScenario::in_control(M, ARL_MAX_N, ARL_REPLICATIONS, ARL_SEED).with_shift(tau, delta);
    estimate_arl(&scn, c4_table(), &cfg, RunLengthConvention::ConditionalDelay).unwrap()
}

#[test]
fn criterion_01_oracle_equivalence() {
    let mut mismatches = 0u64;
    let mut checked = 0u64;
    for rep in 0..1000 {
        let mut rng = substream(101, rep);
        let l = rng.random_range(2..=100);
        let x = normal_vec(102, rep, l);
        let seq = ObservationSequence::from_values(x.clone()).unwrap();
        assert_eq!(seq.tie_count(), 0);
        for t in 1..l {
            let brute = (0..t)
                .map(|i| (t..l).filter(|&j| x[j] < x[i]).count() as u64)
                .sum::<u64>();
            let mw = mann_whitney(&seq, t).unwrap();
            let w = wilcoxon_rank_sum(&seq, t).unwrap();
            if mw != brute || mw + (t * (t + 1) / 2) as u64 != w {
                mismatches += 1;
            }
            checked += 1;
        }
    }
    let pass = mismatches == 0;
    report(1, pass, &format!("{checked} splits over 1000 sequences, {mismatches} mismatches"));
    assert!(pass);
}

#[test]
fn criterion_02_incremental_batch_equivalence() {
    let x = normal_vec(202, 0, 1000);
    let mut engine = RankEngine::new();
    let mut mismatches = 0;
    for (i, &v) in x.iter().enumerate() {
        engine.append(v).unwrap();
        if i >= 1 {
            let batch = smw_profile(&ObservationSequence::from_values(x[..=i].to_vec()).unwrap()).unwrap();
            if engine.profile().unwrap() != batch {
                mismatches += 1;
            }
        }
    }
    let pass = mismatches == 0;
    report(2, pass, &format!("1000 appends, {mismatches} profiles differ from batch"));
    assert!(pass);
}

#[test]
fn criterion_03_distribution_freeness() {
    let grid = vec![1, 9, 50];
    let table = |dist: Dist, seed: u64| {
        let spec = CalibrationSpec {
            n_grid: grid.clone(),
            length: M + 50,
            sequences: C3_SEQUENCES,
            dist,
            ..CalibrationSpec::new(M, vec![ALPHA], seed)
        };
        calibrate(&spec).unwrap().table
    };
    let normal = table(Dist::Normal, 301);
    let expo = table(Dist::Exponential, 302);
    let mut pass = true;
    let mut parts = Vec::new();
    for &n in &grid {
        let a = normal.lookup_h(M, M0, ALPHA, n).unwrap();
        let b = expo.lookup_h(M, M0, ALPHA, n).unwrap();
        pass &= (a - b).abs() <= C3_TOL;
        parts.push(format!("n={n}: normal {a:.4} exponential {b:.4} diff {:.4}", (a - b).abs()));
    }
    report(3, pass, &format!("tolerance {C3_TOL}; {}", parts.join("; ")));
    assert!(pass);
}

#[test]
fn criterion_04_decision_values() {
    let t = c4_table();
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, target) in C4_TARGETS {
        let h = t.lookup_h(M, M0, ALPHA, n).unwrap();
        pass &= (h - target).abs() <= C4_TOL;
        parts.push(format!("n={n}: h={h:.4} target {target}"));
    }
    report(4, pass, &format!("tolerance {C4_TOL}; {}", parts.join("; ")));
    assert!(pass);
}

#[test]
fn criterion_05_in_control_arl() {
    let r = arl(0, 0.0);
    let pass = (r.arl - C5_TARGET).abs() <= C5_REL_TOL * C5_TARGET;
    report(
        5,
        pass,
        &format!(
            "ARL0={:.2} (se {:.2}, censored {}), target {C5_TARGET} +/- {}%",
            r.arl,
            r.stderr,
            r.censored,
            C5_REL_TOL * 100.0
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_shifted_arl_soft_targets() {
    let mut pass = true;
    let mut parts = Vec::new();
    for (tau, delta, target) in C6_TARGETS {
        let r = arl(tau, delta);
        pass &= (r.arl - target).abs() <= C6_REL_TOL * target;
        parts.push(format!(
            "tau={tau} delta={delta}: ARL={:.3} (se {:.3}, false alarms {}) target {target}",
            r.arl, r.stderr, r.false_alarms
        ));
    }
    report(6, pass, &format!("+/- {}%; {}", C6_REL_TOL * 100.0, parts.join("; ")));
    assert!(pass);
}

#[test]
fn criterion_07_monotone_detection() {
    let reports: Vec<ArlReport> = C7_DELTAS.iter().map(|&d| arl(C7_TAU, d)).collect();
    let pass = reports.windows(2).all(|w| {
        let (lo_prev, _) = w[0].interval(Z95);
        let (_, hi_next) = w[1].interval(Z95);
        w[1].arl < w[0].arl && hi_next < lo_prev
    });
    let parts: Vec<String> = reports
        .iter()
        .map(|r| {
            let (lo, hi) = r.interval(Z95);
            format!("delta={}: {:.2} [{lo:.2}, {hi:.2}]", r.scenario.delta, r.arl)
        })
        .collect();
    report(7, pass, &parts.join("; "));
    assert!(pass);
}

#[test]
fn criterion_08_pettitt_level() {
    let test = PettittTest::new(C8_L, C8_ALPHA, C8_CRITICAL_SEQUENCES, 801).unwrap();
    let rejections = (0..C8_RUNS)
        .filter(|&r| test.decide(&normal_vec(802, r, C8_L)).unwrap().reject)
        .count();
    let rate = rejections as f64 / C8_RUNS as f64;
    let band = 2.0 * (C8_ALPHA * (1.0 - C8_ALPHA) / C8_RUNS as f64).sqrt();
    let pass = (rate - C8_ALPHA).abs() <= band;
    report(
        8,
        pass,
        &format!(
            "rejection rate {rate:.4} over {C8_RUNS} runs (critical {:.4}), allowed {C8_ALPHA} +/- {band:.4}",
            test.critical
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_determinism_across_workers() {
    let bin = env!("CARGO_BIN_EXE_mwcusum");
    let dir = tempfile::tempdir().unwrap();
    let seed = C4_SEED.to_string();
    let arl_seed = ARL_SEED.to_string();
    let run = |workers: &str| -> Vec<Vec<u8>> {
        let path = |name: &str| dir.path().join(format!("{name}-{workers}.csv"));
        let table = path("table");
        let status = Command::new(bin)
            .args(["calibrate", "--alpha", "0.005", "--m", "10", "--m0", "4"])
            .args(["--sequences", &C4_SEQUENCES.to_string(), "--length", &C4_LENGTH.to_string()])
            .args(["--n-grid", &format!("1..{}", C4_LENGTH - M), "--seed", &seed])
            .args(["--workers", workers, "--out"])
            .arg(&table)
            .env_remove("MWCUSUM_CONFIG")
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        let mut files = vec![std::fs::read(&table).unwrap()];
        for (name, taus, deltas) in [("arl0", "0", "0"), ("shifted", "50,250", "1,3")] {
            let out = path(name);
            let status = Command::new(bin)
                .args(["arl", "--alpha", "0.005", "--table"])
                .arg(&table)
                .args(["--taus", taus, "--deltas", deltas, "--seed", &arl_seed])
                .args(["--replications", &ARL_REPLICATIONS.to_string()])
                .args(["--max-n", &ARL_MAX_N.to_string(), "--workers", workers, "--out"])
                .arg(&out)
                .env_remove("MWCUSUM_CONFIG")
                .output()
                .unwrap();
            assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
            files.push(std::fs::read(&out).unwrap());
        }
        files
    };
    let one = run("1");
    let two = run("2");
    let mut in_process = Vec::new();
    files::write_table(c4_table(), &mut in_process).unwrap();
    let identical = one == two;
    let same_as_library = one[0] == in_process;
    let pass = identical && same_as_library;
    report(
        9,
        pass,
        &format!(
            "table + 2 ARL reports with --workers 1 vs 2: {}; CLI table equals in-process table: {same_as_library}",
            if identical { "byte-identical" } else { "differ" }
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_comparator_oracles() {
    let mut failures: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            failures.push(what.to_string());
        }
    };

    check(bakir_reynolds_sr(&[1.2, -0.5, 0.3, -2.0]).unwrap() == -2, "SR hand oracle");
    check(bakir_reynolds_sr(&[0.1, 0.4, 0.2, 0.3]).unwrap() == 10, "SR all positive");
    check(bakir_reynolds_sr(&[-1.2, 0.5, -0.3, 2.0]).unwrap() == 2, "SR negation");

    let s = SequentialRankState::new(TiePolicy::Strict);
    let s = mcdonald_step(s, 5.0, 0.5).unwrap();
    let s1 = mcdonald_step(s.clone(), 3.0, 0.5).unwrap();
    check(s1.last_r == 1.0 && s1.last_u == 1.0 / 3.0, "McDonald history [5], x=3");
    let s2 = mcdonald_step(s1, 7.0, 0.5).unwrap();
    check(s2.last_r == 3.0 && s2.last_u == 0.75, "McDonald history [5,3], x=7");
    let mut inc = SequentialRankState::new(TiePolicy::Strict);
    for i in 1..=50 {
        inc = mcdonald_step(inc, i as f64, 0.5).unwrap();
        check(
            inc.last_r == i as f64 && inc.last_u == i as f64 / (i as f64 + 1.0),
            "McDonald increasing stream",
        );
    }

    check(bakir_reynolds_cusum(&[3.0, 3.0, 3.0], 3.0).unwrap().upper == 0.0, "BR centered stream");
    check(bakir_reynolds_cusum(&[5.0], 3.0).unwrap().upper == 2.0, "BR single element");
    for rep in 0..1000 {
        let mut rng = substream(1001, rep);
        let len = rng.random_range(1..=80);
        let k = rng.random_range(0.0..5.0);
        let sr: Vec<f64> = (0..len).map(|_| rng.random_range(-10i64..=10) as f64).collect();
        let trace = bakir_reynolds_trace(&sr, k).unwrap();
        let mut up = 0.0f64;
        for (v, c) in sr.iter().zip(&trace) {
            up = (up + v - k).max(0.0);
            if (c.upper - up).abs() > 1e-9 {
                failures.push(format!("BR partial sum vs recursion, stream {rep}"));
                break;
            }
        }
    }

    for rep in 0..1000 {
        let x = normal_vec(1002, rep, 30);
        let seq = ObservationSequence::new(x, M).unwrap();
        let z = zhou_smw_stat(&seq, M, 30 - M).unwrap();
        if z > pettitt(&seq).unwrap().t_l {
            failures.push(format!("Zhou > Pettitt, sequence {rep}"));
        }
    }
    let sorted: Vec<f64> = (0..30).map(|i| i as f64).collect();
    let seq = ObservationSequence::new(sorted, M).unwrap();
    let restricted = smw_profile(&seq).unwrap()[M - 1..]
        .iter()
        .map(|s| s.smw.abs())
        .fold(0.0, f64::max);
    if zhou_smw_stat(&seq, M, 20).unwrap() != restricted {
        failures.push("Zhou on sorted input".into());
    }

    let pass = failures.is_empty();
    report(
        10,
        pass,
        &if pass {
            "SR, McDonald, Bakir-Reynolds and Zhou oracles all exact".to_string()
        } else {
            failures.join(", ")
        },
    );
    assert!(pass);
}
