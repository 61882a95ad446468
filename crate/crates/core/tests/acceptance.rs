//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero when any criterion fails.
//!
//! The EDM criteria share one batch of 20 instances (50 points, 150 sampled
//! distances, dimension 3) generated from `ACCEPTANCE_SEED`.

mod common;

use std::time::{Duration, Instant};

use common::*;
use nalgebra::DVector;
use rand::Rng;
use sdcmpcc::baseline::{baseline_report, DEFAULT_MU};
use sdcmpcc::diagnostics::{certificate_u, eigenpair_property_check};
use sdcmpcc::palm::{default_start, objective, palm_step, solve, Continuation, PalmConfig, PalmState, SolveReport, SolveStatus};
use sdcmpcc::problems::{counterexample_instances, derive_seed, gen_edm_instance, Instance};
use sdcmpcc::prox_u::prox_u_solve;
use sdcmpcc::prox_x::{prox_x_solve, vy_apply, DualState, ProxXStats};
use sdcmpcc::symmat::eig_sym;
use sdcmpcc::{AffineOperator, SparseSym, SymmetricMatrix};

const ACCEPTANCE_SEED: u64 = 2015;
const EDM_INSTANCES: u64 = 20;
const MONOTONE_INSTANCES: usize = 5;
const ITERATION_CAP: usize = 200;
const EIGENPAIR_TOL: f64 = 1e-4;

/// Newton work of every projection solved by the suite.
#[derive(Debug, Default)]
struct NewtonLedger {
    solves: usize,
    newton_iters: usize,
    max_grad: f64,
    failures: Vec<String>,
}

impl NewtonLedger {
    fn record(&mut self, stats: &ProxXStats) {
        self.solves += 1;
        self.newton_iters += stats.newton_iters;
        self.max_grad = self.max_grad.max(stats.grad_norm);
    }

    /// Every row of a PALM trace stands for one projection; the baseline
    /// trace holds its single solve.
    fn record_report(&mut self, label: &str, report: &SolveReport) {
        self.solves += report.trace.len();
        self.newton_iters += report.total_newton_iters();
        self.max_grad = self.max_grad.max(report.max_prox_grad_norm);
        if let Some(f) = &report.failure {
            self.failures.push(format!("{label}: {f}"));
        }
    }

    fn mean(&self) -> f64 {
        self.newton_iters as f64 / self.solves.max(1) as f64
    }
}

struct Verdict {
    pass: bool,
    detail: String,
}

/// Penalty schedule used for rank recovery: start small and raise the
/// penalty geometrically every step up to the default value.
fn recovery_config() -> PalmConfig {
    let base = PalmConfig::fast();
    PalmConfig {
        rho: 0.05,
        continuation: Some(Continuation::every_iteration(base.rho, 1.05)),
        ..base
    }
}

/// Objective after each of exactly `steps` PALM steps from the default start.
fn fixed_length_run(op: &AffineOperator, cfg: &PalmConfig, steps: usize, ledger: &mut NewtonLedger) -> Vec<f64> {
    let (x0, y0) = default_start(op, cfg).expect("feasible");
    let mut state = PalmState::new(x0, SymmetricMatrix::zeros(op.n()), y0, cfg);
    let mut values = vec![state.objective(cfg.rho_x)];
    for _ in 0..steps {
        state = match palm_step(&state, op, cfg) {
            Ok(s) => s,
            Err(e) => {
                ledger.failures.push(format!("fixed-length run: {e}"));
                break;
            }
        };
        ledger.record(&state.last_prox);
        values.push(state.objective(cfg.rho_x));
    }
    values
}

struct EdmRecord {
    recovery: SolveReport,
    recovery_time: Duration,
    baseline: SolveReport,
    palm_values: Vec<f64>,
    fast_values: Vec<f64>,
}

fn edm_batch(ledger: &mut NewtonLedger) -> Vec<EdmRecord> {
    let fixed = PalmConfig::default();
    let fixed_fast = PalmConfig::fast();
    let recovery = recovery_config();
    (0..EDM_INSTANCES)
        .map(|i| {
            let (inst, _) = gen_edm_instance(50, 150, 3, derive_seed(ACCEPTANCE_SEED, i)).unwrap();
            let started = Instant::now();
            let rec = solve(&inst.op, &recovery, None, None).unwrap();
            let recovery_time = started.elapsed();
            ledger.record_report("recovery", &rec);
            let base = baseline_report(&inst.op, DEFAULT_MU, &fixed.prox_params, fixed.rank_threshold).unwrap();
            ledger.record_report("baseline", &base);
            EdmRecord {
                recovery: rec,
                recovery_time,
                baseline: base,
                palm_values: fixed_length_run(&inst.op, &fixed, ITERATION_CAP, ledger),
                fast_values: fixed_length_run(&inst.op, &fixed_fast, ITERATION_CAP, ledger),
            }
        })
        .collect()
}

fn criterion_1(ledger: &mut NewtonLedger) -> Verdict {
    let mut rng = rng(1);
    let cfg = PalmConfig::default();
    let c = cfg.gamma1 * cfg.rho;
    let (mut worst, mut solver_time) = (0.0f64, Duration::ZERO);
    let started = Instant::now();
    for _ in 0..50 {
        let (op, _) = random_feasible_op(&mut rng, 5, 3);
        let xt = random_sym(&mut rng, 5, 3.0);
        let t = Instant::now();
        let sol = prox_x_solve(&xt, &op, c, cfg.rho_x, &cfg.prox_params, None).unwrap();
        solver_time += t.elapsed();
        ledger.record(&sol.stats);
        let target = xt.as_matrix() * (c / (c + cfg.rho_x));
        let (oracle, _) = dykstra_projection(&target, &op, 1e-10, 10_000_000);
        worst = worst.max(frob_dist(&sol.x, &oracle));
    }
    let total = started.elapsed();
    Verdict {
        pass: worst <= 1e-6 && total < Duration::from_secs(5),
        detail: format!("max distance {worst:.2e}, total {total:.2?} (projections {solver_time:.2?})"),
    }
}

fn criterion_2() -> Verdict {
    let mut rng = rng(2);
    let mut worst = 0.0f64;
    let started = Instant::now();
    for _ in 0..50 {
        let ut = random_dense_sym(&mut rng, 4, 2.0);
        let d = rng.random_range(0.2..20.0);
        let got = prox_u_solve(&SymmetricMatrix::from_matrix(ut.clone()).unwrap(), d).unwrap();
        worst = worst.max(frob_dist(&got, &box_prox_oracle(&ut, d, 1e-12)));
    }
    let total = started.elapsed();
    Verdict {
        pass: worst <= 1e-6 && total < Duration::from_secs(2),
        detail: format!("max distance {worst:.2e}, total {total:.2?}"),
    }
}

fn criterion_3(batch: &[EdmRecord]) -> Verdict {
    let worst = batch[..MONOTONE_INSTANCES]
        .iter()
        .flat_map(|r| r.palm_values.windows(2).map(|w| w[1] - w[0]))
        .fold(f64::NEG_INFINITY, f64::max);
    let steps: usize = batch[..MONOTONE_INSTANCES].iter().map(|r| r.palm_values.len() - 1).sum();
    Verdict {
        pass: worst <= 1e-10 && steps == MONOTONE_INSTANCES * ITERATION_CAP,
        detail: format!("largest increase {worst:.2e} over {steps} steps"),
    }
}

fn criterion_4() -> Verdict {
    let inst: Instance = counterexample_instances().into_iter().nth(1).unwrap();
    let opt = inst.optimum.as_ref().unwrap();
    let u = opt.u.as_ref().unwrap();
    let rho = opt.rho.unwrap();
    let value = objective(&opt.x, u, rho, 0.0);
    let feasible = inst.op.residual_inf(&opt.x).unwrap();
    let checks = eigenpair_property_check(&opt.x, u, rho, EIGENPAIR_TOL).unwrap();
    let all = checks.iter().all(|c| c.satisfied);
    Verdict {
        pass: value == 1.5 && feasible == 0.0 && all && 1.0 / rho == 2.0,
        detail: format!("objective {value}, residual {feasible:e}, eigenpairs satisfied {all}"),
    }
}

fn criterion_5(batch: &[EdmRecord]) -> Verdict {
    let ranks: Vec<usize> = batch.iter().map(|r| r.recovery.final_row().rank_x).collect();
    let at_most_4 = ranks.iter().filter(|&&r| r <= 4).count();
    let exact = ranks.iter().filter(|&&r| r == 3).count();
    let slowest = batch.iter().map(|r| r.recovery_time).max().unwrap();
    let capped = batch.iter().all(|r| r.recovery.iterations() <= ITERATION_CAP);
    Verdict {
        pass: at_most_4 >= 15 && exact >= 12 && slowest <= Duration::from_secs(60) && capped,
        detail: format!("rank<=4 on {at_most_4}/20, rank 3 on {exact}/20, slowest {slowest:.2?}, ranks {ranks:?}"),
    }
}

fn criterion_6(batch: &[EdmRecord]) -> Verdict {
    let mean = |f: &dyn Fn(&EdmRecord) -> usize| batch.iter().map(f).sum::<usize>() as f64 / batch.len() as f64;
    let base = mean(&|r| r.baseline.final_row().rank_x);
    let fast = mean(&|r| r.recovery.final_row().rank_x);
    let lowest = batch.iter().map(|r| r.baseline.final_row().rank_x).min().unwrap();
    Verdict {
        pass: base > fast,
        detail: format!("mean rank baseline {base:.2} vs fast {fast:.2}, lowest baseline rank {lowest}"),
    }
}

fn criterion_7(batch: &[EdmRecord]) -> Verdict {
    let mut wins = 0;
    for r in batch {
        let target = *r.palm_values.last().unwrap() + 1e-3;
        let hit = |v: &[f64]| v.iter().position(|&f| f <= target);
        if let (Some(p), Some(f)) = (hit(&r.palm_values), hit(&r.fast_values)) {
            if f < p {
                wins += 1;
            }
        }
    }
    Verdict {
        pass: wins >= 14,
        detail: format!("momentum reaches the target first on {wins}/20"),
    }
}

fn criterion_8(ledger: &mut NewtonLedger) -> Verdict {
    let mut rng = rng(8);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let n = rng.random_range(4..8);
        let r = rng.random_range(1..n);
        let xbar = SymmetricMatrix::from_matrix(random_psd(&mut rng, n, r)).unwrap();
        let m = rng.random_range(1..n);
        let coeffs: Vec<SparseSym> = (0..m)
            .map(|_| {
                let a = random_dense_sym(&mut rng, n, 1.0);
                SparseSym::new(n, (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).map(|(i, j)| (i, j, a[(i, j)])).collect())
                    .unwrap()
            })
            .collect();
        let rhs = coeffs.iter().map(|a| a.inner(xbar.as_matrix())).collect();
        let op = AffineOperator::new(n, coeffs, rhs).unwrap();

        let eig = eig_sym(&xbar).unwrap();
        let scale = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let lambda_min = eig.eigenvalues.iter().copied().filter(|&v| v > 1e-10 * scale).fold(f64::INFINITY, f64::min);
        let ubar = certificate_u(&xbar, 1e-10 * scale).unwrap();
        let cfg = PalmConfig {
            rho: 2.0 / lambda_min,
            rho_x: 0.0,
            ..PalmConfig::default()
        };
        let state = PalmState::new(xbar.clone(), ubar, DVector::zeros(m), &cfg);
        let before = state.objective(cfg.rho_x);
        let next = palm_step(&state, &op, &cfg).unwrap();
        ledger.record(&next.last_prox);
        worst = worst.max((next.objective(cfg.rho_x) - before).abs());
    }
    Verdict {
        pass: worst <= 1e-8,
        detail: format!("largest objective change {worst:.2e}"),
    }
}

fn vy_draws() -> (usize, f64, f64) {
    let mut rng = rng(9);
    let (mut asym, mut neg) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.random_range(2..8);
        let m = rng.random_range(1..6);
        let (op, _) = random_feasible_op(&mut rng, n, m);
        let g = random_sym(&mut rng, n, 3.0);
        let y = DVector::from_fn(m, |_, _| rng.random_range(-2.0..2.0));
        let state = DualState::new(&g, &op, y).unwrap();
        let h = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        let k = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        let vh = vy_apply(&state, &op, &h, 0.0).unwrap();
        let vk = vy_apply(&state, &op, &k, 0.0).unwrap();
        asym = asym.max((k.dot(&vh) - h.dot(&vk)).abs());
        neg = neg.min(h.dot(&vh));
    }
    (100, asym, neg)
}

fn criterion_9(ledger: &NewtonLedger) -> Verdict {
    let (draws, asym, neg) = vy_draws();
    let mean = ledger.mean();
    let pass = ledger.failures.is_empty() && ledger.max_grad <= 1e-8 && mean <= 25.0 && asym <= 1e-10 && neg >= -1e-10;
    let mut detail = format!(
        "{} projections, max |grad| {:.2e}, mean Newton {mean:.2}, V_y over {draws} draws: asymmetry {asym:.1e}, min h'Vh {neg:.1e}",
        ledger.solves, ledger.max_grad
    );
    if let Some(f) = ledger.failures.first() {
        detail.push_str(&format!(", {} failures (first: {f})", ledger.failures.len()));
    }
    Verdict { pass, detail }
}

/// Converged recovery runs satisfy the spectral stationarity conditions.
fn eigenpair_invariant(batch: &[EdmRecord]) -> Verdict {
    let converged: Vec<&SolveReport> =
        batch.iter().map(|r| &r.recovery).filter(|r| r.status == SolveStatus::Converged).collect();
    let ok = converged
        .iter()
        .filter(|r| {
            eigenpair_property_check(&r.x_final, &r.u_final, r.rho_final, EIGENPAIR_TOL)
                .unwrap()
                .iter()
                .all(|c| c.satisfied)
        })
        .count();
    Verdict {
        pass: ok == converged.len(),
        detail: format!("{ok}/{} converged runs", converged.len()),
    }
}

fn main() {
    let mut ledger = NewtonLedger::default();
    let mut results: Vec<(&str, Verdict)> = Vec::new();
    let report = |name: &'static str, v: Verdict, results: &mut Vec<(&str, Verdict)>| {
        println!("{} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((name, v));
    };

    report("criterion 1 projection oracle", criterion_1(&mut ledger), &mut results);
    report("criterion 2 box prox oracle", criterion_2(), &mut results);
    let started = Instant::now();
    let batch = edm_batch(&mut ledger);
    println!("     EDM batch solved in {:.1?}", started.elapsed());
    report("criterion 3 monotone decrease", criterion_3(&batch), &mut results);
    report("criterion 4 counterexample optimum", criterion_4(), &mut results);
    report("criterion 5 rank recovery", criterion_5(&batch), &mut results);
    report("criterion 6 baseline dominance", criterion_6(&batch), &mut results);
    report("criterion 7 momentum acceleration", criterion_7(&batch), &mut results);
    report("criterion 8 exact-penalty fixed point", criterion_8(&mut ledger), &mut results);
    report("criterion 9 semismooth Newton quality", criterion_9(&ledger), &mut results);
    report("invariant eigenpair conditions", eigenpair_invariant(&batch), &mut results);

    let failed: Vec<&str> = results.iter().filter(|(_, v)| !v.pass).map(|(n, _)| *n).collect();
    println!("acceptance: {}/{} passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
