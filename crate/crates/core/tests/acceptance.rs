//! Acceptance suite: every release-gating criterion as one test with a
//! printed pass/fail line. Tolerances and thresholds are pinned here, in
//! code. Run with `cargo test --test acceptance -- --nocapture` to see the
//! per-criterion lines.

use std::time::Instant;

use l1h::bench::{
    run_experiment, table_one_config, table_three_config, table_two_config, Scale,
};
use l1h::bpdn::{bpdn_kkt, solve_bpdn};
use l1h::dantzig::{ds_kkt, solve_ds};
use l1h::decode::{decode_add_measurements, decode_init, decode_kkt, recovery_check};
use l1h::dynamic_seq::{bpdn_add_measurement, ds_add_measurement};
use l1h::dynamic_x::{update_bpdn_signal, update_ds_signal};
use l1h::linalg::{dot, ls_init, norm2, norm_inf, rls_append, DenseMatrix};
use l1h::oracle::{bpdn_brute, ds_brute, l1_regression_brute};
use l1h::problems::{
    corrupt_codeword, gaussian_matrix, perturb_spikes, spike_signal, wavelet_analysis,
    CorruptionMode, Rng, WaveletFamily,
};
use l1h::robust_decode::{null_projector, robust_add_measurements, robust_init};

fn jobs() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion}: {detail}");
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn noisy_measurement(a: &DenseMatrix, x: &[f64], sigma: f64, rng: &mut Rng) -> Vec<f64> {
    let mut y = a.apply(x);
    for v in y.iter_mut() {
        *v += rng.normal(0.0, sigma);
    }
    y
}

/// Criterion 1: warm-started final solutions match from-scratch homotopy
/// solutions at 1e-7 in max norm, 200 random desk-scale instances per update
/// operation, under 60 seconds per operation.
#[test]
fn criterion_1_warm_cold_equivalence() {
    const TRIALS: u64 = 200;
    const TOL: f64 = 1e-7;

    let mut lines = Vec::new();
    let mut run = |name: &str, f: &mut dyn FnMut(u64) -> f64| {
        let started = Instant::now();
        let mut worst: f64 = 0.0;
        for t in 0..TRIALS {
            worst = worst.max(f(t));
        }
        let secs = started.elapsed().as_secs_f64();
        lines.push(format!("{name}: worst {worst:.2e} in {secs:.1}s"));
        (worst, secs)
    };

    let (e1, t1) = run("update_bpdn_signal", &mut |t| {
        let (m, n, k) = (24, 48, 6);
        let a = gaussian_matrix(m, n, 10_000 + t);
        let x = spike_signal(n, k, 20_000 + t);
        let mut rng = Rng::derive(1, t);
        let y = noisy_measurement(&a, &x, 0.01, &mut rng);
        let tau = 0.1 * norm_inf(&a.apply_t(&y));
        let s = solve_bpdn(&a, &y, tau).unwrap();
        let xb = perturb_spikes(&x, 2, 30_000 + t);
        let yb = noisy_measurement(&a, &xb, 0.01, &mut rng);
        let (warm, _) = update_bpdn_signal(&s, &a, &y, &yb).unwrap();
        let cold = solve_bpdn(&a, &yb, tau).unwrap();
        max_diff(warm.x(), cold.x())
    });
    let (e2, t2) = run("update_ds_signal", &mut |t| {
        let (m, n, k) = (14, 10, 2);
        let a = gaussian_matrix(m, n, 40_000 + t);
        let x = spike_signal(n, k, 50_000 + t);
        let mut rng = Rng::derive(2, t);
        let y = noisy_measurement(&a, &x, 0.01, &mut rng);
        let tau = 0.25 * norm_inf(&a.apply_t(&y));
        let s = solve_ds(&a, &y, tau).unwrap();
        let xb = perturb_spikes(&x, 1, 60_000 + t);
        let yb = noisy_measurement(&a, &xb, 0.01, &mut rng);
        let (warm, _) = update_ds_signal(&s, &a, &y, &yb).unwrap();
        let cold = solve_ds(&a, &yb, tau).unwrap();
        max_diff(warm.x(), cold.x())
    });
    let (e3, t3) = run("bpdn_add_measurement", &mut |t| {
        let (m, n, k) = (20, 40, 6);
        let a = gaussian_matrix(m, n, 70_000 + t);
        let x = spike_signal(n, k, 80_000 + t);
        let mut rng = Rng::derive(3, t);
        let y = noisy_measurement(&a, &x, 0.01, &mut rng);
        let tau = 0.12 * norm_inf(&a.apply_t(&y));
        let s = solve_bpdn(&a, &y, tau).unwrap();
        let sd = 1.0 / (m as f64).sqrt();
        let b: Vec<f64> = (0..n).map(|_| rng.normal(0.0, sd)).collect();
        let w = dot(&b, &x) + rng.normal(0.0, 0.01);
        let (warm, _) = bpdn_add_measurement(&s, &a, &y, &b, w).unwrap();
        let stacked = a
            .vstack(&DenseMatrix::new(1, n, b).unwrap())
            .unwrap();
        let mut ys = y.clone();
        ys.push(w);
        let cold = solve_bpdn(&stacked, &ys, tau).unwrap();
        max_diff(warm.x(), cold.x())
    });
    let (e4, t4) = run("ds_add_measurement", &mut |t| {
        let (m, n, k) = (12, 8, 2);
        let a = gaussian_matrix(m, n, 90_000 + t);
        let x = spike_signal(n, k, 100_000 + t);
        let mut rng = Rng::derive(4, t);
        let y = noisy_measurement(&a, &x, 0.01, &mut rng);
        let tau = 0.25 * norm_inf(&a.apply_t(&y));
        let s = solve_ds(&a, &y, tau).unwrap();
        let sd = 1.0 / (m as f64).sqrt();
        let b: Vec<f64> = (0..n).map(|_| rng.normal(0.0, sd)).collect();
        let w = dot(&b, &x) + rng.normal(0.0, 0.01);
        let (warm, _) = ds_add_measurement(&s, &a, &y, &b, w).unwrap();
        let stacked = a
            .vstack(&DenseMatrix::new(1, n, b).unwrap())
            .unwrap();
        let mut ys = y.clone();
        ys.push(w);
        let cold = solve_ds(&stacked, &ys, tau).unwrap();
        max_diff(warm.x(), cold.x())
    });
    let (e5, t5) = run("decode_add_measurements", &mut |t| {
        let (n, m, p) = (10, 36, 4);
        let a = gaussian_matrix(m, n, 110_000 + t);
        let mut rng = Rng::derive(5, t);
        let x: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0)).collect();
        let (y, _) = corrupt_codeword(&a.apply(&x), CorruptionMode::ZeroK(4), 120_000 + t);
        let m0 = m - p;
        let head = DenseMatrix::from_fn(m0, n, |i, j| a.get(i, j));
        let tail = DenseMatrix::from_fn(p, n, |i, j| a.get(m0 + i, j));
        let (state, _) = decode_init(&head, &y[..m0]).unwrap();
        let (warm, _) = decode_add_measurements(&state, &tail, &y[m0..]).unwrap();
        let (cold, _) = decode_init(&a, &y).unwrap();
        max_diff(warm.x(), cold.x())
    });
    let (e6, t6) = run("robust_add_measurements", &mut |t| {
        let (m, n, k) = (48, 16, 5);
        let p = if t % 2 == 0 { 1 } else { 5 };
        let mut a = gaussian_matrix(m + p, n, 130_000 + t);
        a.orthonormalize_columns().unwrap();
        let head = DenseMatrix::from_fn(m, n, |i, j| a.get(i, j));
        let tail = DenseMatrix::from_fn(p, n, |i, j| a.get(m + i, j));
        let mut rng = Rng::derive(6, t);
        let x: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0)).collect();
        let mut y = head.apply(&x);
        for loc in rng.distinct_indices(m, k) {
            y[loc] = 0.0;
        }
        for v in y.iter_mut() {
            *v += rng.normal(0.0, 0.01);
        }
        let tau = 0.05;
        let state = robust_init(&head, &y, tau).unwrap();
        let mut w = tail.apply(&x);
        for v in w.iter_mut() {
            if rng.uniform() < 0.1 {
                *v = 0.0;
            }
            *v += rng.normal(0.0, 0.01);
        }
        let (warm, _) = robust_add_measurements(&state, &tail, &w).unwrap();
        let stacked = head.vstack(&tail).unwrap();
        let mut ys = y.clone();
        ys.extend_from_slice(&w);
        let cold = robust_init(&stacked, &ys, tau).unwrap();
        max_diff(warm.error_estimate(), cold.error_estimate())
    });

    let worst = [e1, e2, e3, e4, e5, e6]
        .into_iter()
        .fold(0.0f64, f64::max);
    let slowest = [t1, t2, t3, t4, t5, t6].into_iter().fold(0.0f64, f64::max);
    report(
        "criterion 1 (warm/cold equivalence, 6 ops x 200 instances)",
        worst <= TOL && slowest < 60.0,
        &format!("worst error {worst:.2e}, slowest op {slowest:.1}s; {}", lines.join("; ")),
    );
}

/// Criterion 2: every returned solution passes its optimality-condition
/// certificate at 1e-8, 500 mixed random instances.
#[test]
fn criterion_2_kkt_certificates() {
    let mut passes = 0usize;
    let mut total = 0usize;
    for t in 0..170u64 {
        let a = gaussian_matrix(14, 24, 200_000 + t);
        let mut rng = Rng::derive(7, t);
        let y: Vec<f64> = (0..14).map(|_| rng.normal(0.0, 1.0)).collect();
        let lambda = [0.5, 0.2, 0.05][t as usize % 3];
        let tau = lambda * norm_inf(&a.apply_t(&y));
        let s = solve_bpdn(&a, &y, tau).unwrap();
        total += 1;
        passes += bpdn_kkt(&a, &y, tau, s.x()).pass as usize;
    }
    for t in 0..110u64 {
        let a = gaussian_matrix(10, 7, 300_000 + t);
        let mut rng = Rng::derive(8, t);
        let y: Vec<f64> = (0..10).map(|_| rng.normal(0.0, 1.0)).collect();
        let tau = 0.2 * norm_inf(&a.apply_t(&y));
        let s = solve_ds(&a, &y, tau).unwrap();
        total += 1;
        passes += ds_kkt(&a, &y, tau, s.x(), s.lambda()).pass as usize;
    }
    for t in 0..110u64 {
        let (n, m) = (8, 28);
        let a = gaussian_matrix(m, n, 400_000 + t);
        let mut rng = Rng::derive(9, t);
        let x: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0)).collect();
        let (y, _) = corrupt_codeword(&a.apply(&x), CorruptionMode::ZeroK(3), 500_000 + t);
        let (state, _) = decode_init(&a, &y).unwrap();
        total += 1;
        passes += decode_kkt(&state).pass as usize;
    }
    for t in 0..110u64 {
        let (m, n) = (36, 12);
        let mut a = gaussian_matrix(m, n, 600_000 + t);
        a.orthonormalize_columns().unwrap();
        let mut rng = Rng::derive(10, t);
        let x: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0)).collect();
        let mut y = a.apply(&x);
        for loc in rng.distinct_indices(m, 4) {
            y[loc] = 0.0;
        }
        for v in y.iter_mut() {
            *v += rng.normal(0.0, 0.01);
        }
        let state = robust_init(&a, &y, 0.05).unwrap();
        total += 1;
        passes += l1h::robust_decode::robust_kkt(&state).pass as usize;
    }
    report(
        "criterion 2 (certificate suite, 500 mixed instances)",
        passes == total && total == 500,
        &format!("{passes}/{total} certified"),
    );
}

/// Criterion 3: homotopy solvers match the brute-force enumeration oracles.
#[test]
fn criterion_3_oracle_equivalence() {
    let mut worst_bpdn: f64 = 0.0;
    for t in 0..200u64 {
        let a = gaussian_matrix(6, 8, 700_000 + t);
        let mut rng = Rng::derive(11, t);
        let y: Vec<f64> = (0..6).map(|_| rng.normal(0.0, 1.0)).collect();
        let lambda = [0.5, 0.2, 0.1][t as usize % 3];
        let tau = lambda * norm_inf(&a.apply_t(&y));
        let s = solve_bpdn(&a, &y, tau).unwrap();
        let b = bpdn_brute(&a, &y, tau).unwrap();
        worst_bpdn = worst_bpdn.max(max_diff(s.x(), &b));
    }
    let mut worst_ds: f64 = 0.0;
    for t in 0..100u64 {
        let a = gaussian_matrix(8, 6, 800_000 + t);
        let mut rng = Rng::derive(12, t);
        let y: Vec<f64> = (0..8).map(|_| rng.normal(0.0, 1.0)).collect();
        let lambda = [0.4, 0.15][t as usize % 2];
        let tau = lambda * norm_inf(&a.apply_t(&y));
        let s = solve_ds(&a, &y, tau).unwrap();
        let (xb, _) = ds_brute(&a, &y, tau).unwrap();
        worst_ds = worst_ds.max(max_diff(s.x(), &xb));
    }
    let mut worst_decode: f64 = 0.0;
    for t in 0..100u64 {
        let (m, n) = (12, 4);
        let a = gaussian_matrix(m, n, 900_000 + t);
        let mut rng = Rng::derive(13, t);
        let x: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0)).collect();
        let mut y = a.apply(&x);
        for loc in rng.distinct_indices(m, 2) {
            y[loc] += 2.0 + rng.normal(0.0, 2.0);
        }
        let (state, _) = decode_init(&a, &y).unwrap();
        let b = l1_regression_brute(&a, &y).unwrap();
        worst_decode = worst_decode.max(max_diff(state.x(), &b));
    }
    report(
        "criterion 3 (oracle equivalence: 200 BPDN, 100 DS, 100 decode)",
        worst_bpdn <= 1e-7 && worst_ds <= 1e-7 && worst_decode <= 1e-7,
        &format!("bpdn {worst_bpdn:.2e}, ds {worst_ds:.2e}, decode {worst_decode:.2e}"),
    );
}

/// Criterion 4: time-varying-signal table at paper scale, 500 trials per
/// row: warm operation counts within 30% of the published means and
/// strictly below the cold homotopy means.
#[test]
fn criterion_4_table_one() {
    let rows = [(0.5, 11.84), (0.1, 12.9), (0.05, 14.56), (0.01, 23.72)];
    let mut pass = true;
    let mut details = Vec::new();
    for (lambda, published) in rows {
        let mut config = table_one_config(Scale::Full, lambda, 500, 42);
        config.jobs = jobs();
        let r = run_experiment(&config).unwrap();
        let in_window = r.mean_warm_products >= 0.7 * published
            && r.mean_warm_products <= 1.3 * published;
        let ordered = r.mean_warm_products < r.mean_cold_products;
        pass &= in_window && ordered && r.all_ok;
        details.push(format!(
            "l={lambda}: warm {:.2} (published {published}), cold {:.2}, agree {}",
            r.mean_warm_products, r.mean_cold_products, r.all_ok
        ));
    }
    report(
        "criterion 4 (time-varying table, paper scale, 500 trials)",
        pass,
        &details.join("; "),
    );
}

/// Criterion 5: sequential-measurement table at paper scale, 500 trials per
/// row, same windows and ordering requirement.
#[test]
fn criterion_5_table_two() {
    let rows = [(0.5, 2.43), (0.1, 4.27), (0.05, 5.57), (0.01, 8.3)];
    let mut pass = true;
    let mut details = Vec::new();
    for (lambda, published) in rows {
        let mut config = table_two_config(Scale::Full, lambda, 500, 43);
        config.jobs = jobs();
        let r = run_experiment(&config).unwrap();
        let in_window = r.mean_warm_products >= 0.7 * published
            && r.mean_warm_products <= 1.3 * published;
        let ordered = r.mean_warm_products < r.mean_cold_products;
        pass &= in_window && ordered && r.all_ok;
        details.push(format!(
            "l={lambda}: warm {:.2} (published {published}), cold {:.2}, agree {}",
            r.mean_warm_products, r.mean_cold_products, r.all_ok
        ));
    }
    report(
        "criterion 5 (sequential table, paper scale, 500 trials)",
        pass,
        &details.join("; "),
    );
}

/// Criterion 6: robust-decoding block-size trend at desk scale: adding the
/// rows in one block of 10 costs strictly less than ten single-row updates,
/// and every warm mean stays below its cold mean.
#[test]
fn criterion_6_table_three_trend() {
    let mut means = Vec::new();
    let mut pass = true;
    let mut details = Vec::new();
    for block in [1usize, 2, 5, 10] {
        let mut config = table_three_config(Scale::Desk, block, 50, 77);
        config.jobs = jobs();
        let r = run_experiment(&config).unwrap();
        pass &= r.mean_warm_steps < r.mean_cold_steps && r.all_ok;
        details.push(format!(
            "p={block}: warm {:.2}, cold {:.2}",
            r.mean_warm_steps, r.mean_cold_steps
        ));
        means.push(r.mean_warm_steps);
    }
    let sublinear = means[3] < 10.0 * means[0];
    pass &= sublinear;
    report(
        "criterion 6 (robust decoding block trend, 50 repetitions)",
        pass,
        &format!(
            "{}; p=10 mean {:.2} vs 10x p=1 mean {:.2}",
            details.join("; "),
            means[3],
            10.0 * means[0]
        ),
    );
}

/// Criterion 7: exact decoding with a fifth of the codeword zeroed out,
/// 100 trials, at least 99 exact recoveries required.
///
/// As specified this sits above the l1-decoding phase transition
/// (K/(m-n) = 0.4 against a threshold near 0.39), so the required rate is
/// not reachable by any exact solver of the stated program; the companion
/// line reports the same protocol at a 10% corruption rate, where exact
/// recovery is essentially certain. See the solver notes for measurements.
#[test]
fn criterion_7_exact_decoding() {
    let n = 64usize;
    let m = 2 * n;
    let run_rate = |k: usize| -> usize {
        let mut exact = 0usize;
        for t in 0..100u64 {
            let a = gaussian_matrix(m, n, 1_000_000 + t);
            let mut rng = Rng::derive(14, t);
            let x: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0)).collect();
            let (y, _) =
                corrupt_codeword(&a.apply(&x), CorruptionMode::ZeroK(k), 1_100_000 + t);
            let (state, _) = decode_init(&a, &y).unwrap();
            if max_diff(state.x(), &x) <= 1e-6 && recovery_check(&state) {
                exact += 1;
            }
        }
        exact
    };
    let k_stated = (0.2 * m as f64) as usize;
    let stated = run_rate(k_stated);
    let k_ten_percent = m / 10;
    let informative = run_rate(k_ten_percent);
    println!(
        "ACCEPTANCE criterion 7 note: K={k_ten_percent} (10% corruption) recovers {informative}/100"
    );
    report(
        "criterion 7 (exact decoding, K = 0.2m, 100 trials)",
        stated >= 99,
        &format!("{stated}/100 exact at K={k_stated} (requirement: >= 99)"),
    );
}

/// Criterion 8: the cross-cutting property suite.
#[test]
fn criterion_8_property_suite() {
    let mut pass = true;
    let mut details = Vec::new();

    // Homotopy parameter strictly increases and support changes one element
    // per recorded step.
    {
        let mut ok = true;
        for t in 0..20u64 {
            let (m, n, k) = (20, 40, 6);
            let a = gaussian_matrix(m, n, 1_200_000 + t);
            let x = spike_signal(n, k, 1_300_000 + t);
            let mut rng = Rng::derive(15, t);
            let y = noisy_measurement(&a, &x, 0.01, &mut rng);
            let tau = 0.1 * norm_inf(&a.apply_t(&y));
            let s = solve_bpdn(&a, &y, tau).unwrap();
            let xb = perturb_spikes(&x, 2, 1_400_000 + t);
            let yb = noisy_measurement(&a, &xb, 0.01, &mut rng);
            let (_, trace) = update_bpdn_signal(&s, &a, &y, &yb).unwrap();
            ok &= trace
                .epsilons
                .windows(2)
                .all(|w| w[1] > w[0]);
            ok &= trace.epsilons.iter().all(|&e| e <= 1.0);
            ok &= trace.steps.iter().all(|e| e.gamma.is_some());
            ok &= trace.final_epsilon == 1.0;
        }
        pass &= ok;
        details.push(format!("epsilon monotone + single support change: {ok}"));
    }

    // Dual feasibility of the decoder.
    {
        let mut ok = true;
        for t in 0..20u64 {
            let (n, m) = (8, 28);
            let a = gaussian_matrix(m, n, 1_500_000 + t);
            let mut rng = Rng::derive(16, t);
            let x: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0)).collect();
            let (y, _) =
                corrupt_codeword(&a.apply(&x), CorruptionMode::ZeroK(3), 1_600_000 + t);
            let (state, _) = decode_init(&a, &y).unwrap();
            ok &= norm_inf(state.dual()) <= 1.0 + 1e-9;
        }
        pass &= ok;
        details.push(format!("decoder dual feasibility: {ok}"));
    }

    // Projector identities P F = 0 and P^2 = P.
    {
        let f = gaussian_matrix(30, 12, 99);
        let p = null_projector(&f).unwrap();
        let mut worst: f64 = 0.0;
        for j in 0..12 {
            worst = worst.max(norm_inf(&p.apply(&f.col(j))));
        }
        let pp = p.matmul(&p);
        for i in 0..30 {
            for j in 0..30 {
                worst = worst.max((pp.get(i, j) - p.get(i, j)).abs());
            }
        }
        let ok = worst <= 1e-9;
        pass &= ok;
        details.push(format!("projector identities at {worst:.2e}: {ok}"));
    }

    // Wavelet orthonormality at 1e-12.
    {
        let mut worst: f64 = 0.0;
        for family in [WaveletFamily::Haar, WaveletFamily::Daub8] {
            let n = 128;
            for j in 0..n {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                let c = wavelet_analysis(&e, family).unwrap();
                worst = worst.max((norm2(&c) - 1.0).abs());
            }
        }
        let ok = worst <= 1e-12;
        pass &= ok;
        details.push(format!("wavelet orthonormality at {worst:.2e}: {ok}"));
    }

    // Sequential least squares equals the one-shot solution.
    {
        let mut worst: f64 = 0.0;
        for t in 0..20u64 {
            let (m, n) = (30, 8);
            let full = gaussian_matrix(m, n, 1_700_000 + t);
            let mut rng = Rng::derive(17, t);
            let y: Vec<f64> = (0..m).map(|_| rng.normal(0.0, 1.0)).collect();
            let base = DenseMatrix::from_fn(n, n, |i, j| full.get(i, j));
            let mut s = ls_init(&base, &y[..n]).unwrap();
            for r in n..m {
                s = rls_append(&s, full.row(r), y[r]).unwrap();
            }
            let direct = ls_init(&full, &y).unwrap();
            worst = worst.max(max_diff(s.estimate(), direct.estimate()));
        }
        let ok = worst <= 1e-8;
        pass &= ok;
        details.push(format!("sequential least squares at {worst:.2e}: {ok}"));
    }

    report("criterion 8 (property suite)", pass, &details.join("; "));
}
