//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::process::Command;
use std::time::{Duration, Instant};

use nonlocality_core::chains::{closure_sweep, Chain, ChainFamily, CorrelationSet};
use nonlocality_core::correlation::{check, dual, holds, partner, DEFAULT_TOL};
use nonlocality_core::hardy::{
    build_hardy, log_grid, loglog_slope, max_hardy_probability, perturbation_axis, rotate_direction,
    schmidt_state, sensitivity, OptimizerConfig, FIT_WINDOW,
};
use nonlocality_core::random::{random_direction, random_observable, random_projector, random_state, trial_rng};
use nonlocality_core::reality::{
    derive_contradiction, exclusion_probability, ghsz_correlations, lhv_search, propagate, ConstraintSystem,
    Literal, Propagation, RealityLedger,
};
use nonlocality_core::spin::observable;
use nonlocality_core::{CMatrix, CVector, Complex64, Correlation, Direction, LocalObservable, StateVector};
use rand::Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Criterion = (&'static str, fn() -> Outcome);

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

/// Random `(ψ, S₁, S₂)` in four flavours: unrelated target, exact partner,
/// partner tilted by a log-uniform angle, and a source that annihilates ψ.
fn random_instance(seed: u64, i: u64) -> (StateVector, Correlation) {
    let mut rng = trial_rng(seed, i);
    match i % 4 {
        0 => {
            let psi = random_state(&mut rng, 2);
            let (s, t) = (random_observable(&mut rng, 1, 2), random_observable(&mut rng, 2, 2));
            (psi, Correlation::new(s, t).unwrap())
        }
        1 | 2 => {
            let psi = random_state(&mut rng, 2);
            let party = rng.random_range(1..=2);
            let s = random_observable(&mut rng, party, 2);
            let a = nonlocality_core::correlation::partner_observable(&psi, &s).unwrap();
            let t = if i % 4 == 1 {
                a
            } else {
                let d = a.resolved_direction().unwrap();
                let eps = 10f64.powf(rng.random_range(-9.0..-2.0));
                let axis = perturbation_axis(&d, &random_direction(&mut rng));
                observable(rotate_direction(&d, axis, eps).unwrap(), 3 - party, 2).unwrap()
            };
            (psi, Correlation::new(s, t).unwrap())
        }
        _ => {
            let u = random_direction(&mut rng);
            let ket = nonlocality_core::spin::projector_from_direction(&u.antipode()).spin_ket().unwrap();
            let other = random_state(&mut rng, 1);
            let psi = StateVector::normalize(ket.tensor(other.amplitudes())).unwrap();
            let s = observable(u, 1, 2).unwrap();
            (psi, Correlation::new(s, random_observable(&mut rng, 2, 2)).unwrap())
        }
    }
}

fn c1_dual_forms() -> Outcome {
    let t = Instant::now();
    let n = 10_000u64;
    let bad: Vec<u64> = (0..n)
        .into_par_iter()
        .filter(|&i| {
            let (psi, c) = random_instance(1, i);
            let chk = check(&c, &psi).unwrap();
            !(chk.forms_agree() && chk.decisions_agree(DEFAULT_TOL) && holds(&c, &psi, DEFAULT_TOL).is_ok())
        })
        .collect();
    let el = t.elapsed();
    outcome(
        bad.is_empty() && within(el, 10.0),
        format!("{n} instances, {} disagreements, {:.2} s (limit 10 s)", bad.len(), el.as_secs_f64()),
    )
}

/// Conditional vector `(⟨u|⊗1)ψ` written out entrywise.
fn conditional_oracle(psi: &StateVector, u: &CVector) -> [Complex64; 2] {
    let p = psi.amplitudes();
    let (u0, u1) = (u[0].conj(), u[1].conj());
    [u0 * p[0] + u1 * p[2], u0 * p[1] + u1 * p[3]]
}

fn c2_partner_uniqueness() -> Outcome {
    let t = Instant::now();
    let results: Vec<(bool, bool, usize)> = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(2, i);
            let psi = random_state(&mut rng, 2);
            let s = random_observable(&mut rng, 1, 2);
            let a = partner(&psi, &s).unwrap();
            let [x, y] = conditional_oracle(&psi, &s.projector().spin_ket().unwrap());
            let w = CVector::new(vec![x, y]).unwrap();
            let oracle = nonlocality_core::Projector::from_ket(&w).unwrap();
            let formula_ok = a.distance(&oracle) <= 1e-10;
            let t_obs = nonlocality_core::spin::embed(&a, 2, 2).unwrap();
            let partner_ok = holds(&Correlation::new(s.clone(), t_obs).unwrap(), &psi, DEFAULT_TOL).unwrap();
            let passing_alternatives = (0..500)
                .filter(|_| {
                    let alt = random_observable(&mut rng, 2, 2);
                    holds(&Correlation::new(s.clone(), alt).unwrap(), &psi, DEFAULT_TOL).unwrap()
                })
                .count();
            (formula_ok, partner_ok, passing_alternatives)
        })
        .collect();
    let el = t.elapsed();
    let formula = results.iter().filter(|r| r.0).count();
    let partner_pass = results.iter().filter(|r| r.1).count();
    let alt_pass: usize = results.iter().map(|r| r.2).sum();
    outcome(
        formula == 1000 && partner_pass == 1000 && alt_pass == 0 && within(el, 60.0),
        format!(
            "1000 instances: partner holds {partner_pass}/1000, matches closed form {formula}/1000, \
             {alt_pass} of 500000 alternatives hold, {:.2} s (limit 60 s)",
            el.as_secs_f64()
        ),
    )
}

fn c3_duality() -> Outcome {
    let tol = 1e-12;
    let n = 10_000u64;
    let (mismatch, holding): (usize, usize) = (0..n)
        .into_par_iter()
        .map(|i| {
            let (psi, c) = random_instance(3, i);
            let a = holds(&c, &psi, tol).unwrap();
            let b = holds(&dual(&c), &psi, tol).unwrap();
            (usize::from(a != b), usize::from(a))
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    outcome(
        mismatch == 0,
        format!("{n} correlations at tol 1e-12 ({holding} holding), {mismatch} mismatches"),
    )
}

/// Hardy probability for the real state `√λ|00⟩ + √(1−λ)|11⟩` and a head at
/// polar angle `t` in the x–z plane, with partners computed by hand.
fn hardy_oracle(lambda: f64, t: f64) -> f64 {
    let (a, b) = (lambda.sqrt(), (1.0 - lambda).sqrt());
    let unit = |v: [f64; 2]| {
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        [v[0] / n, v[1] / n]
    };
    // ψ has coefficient matrix diag(a, b); conditioning on either side
    // multiplies entrywise by (a, b)
    let step = |v: [f64; 2]| unit([a * v[0], b * v[1]]);
    let n1 = [(t / 2.0).cos(), (t / 2.0).sin()];
    let n4 = step(step(step(n1)));
    let n4_perp = [-n4[1], n4[0]];
    let amp = a * n1[0] * n4_perp[0] + b * n1[1] * n4_perp[1];
    amp * amp
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let (x1, x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if f(x1) < f(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    f(0.5 * (lo + hi))
}

fn c4_hardy_maximum() -> Outcome {
    let t = Instant::now();
    let exact = (5.0 * 5f64.sqrt() - 11.0) / 2.0;
    let opt = max_hardy_probability(&OptimizerConfig::default());
    let grid: Vec<f64> = (1..5000).map(|i| 0.5 + i as f64 * 1e-4).collect();
    let best = grid
        .par_iter()
        .map(|&lambda| {
            let coarse = (0..400).map(|j| j as f64 * 2.0 * PI / 400.0);
            let t0 = coarse
                .map(|t| (t, hardy_oracle(lambda, t)))
                .fold((0.0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc })
                .0;
            let step = 2.0 * PI / 400.0;
            (lambda, golden_max(|t| hardy_oracle(lambda, t), t0 - step, t0 + step))
        })
        .reduce(|| (0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
    let el = t.elapsed();
    let lib_err = (opt.p_max - exact).abs();
    let grid_err = (best.1 - exact).abs();
    outcome(
        lib_err <= 1e-6 && grid_err <= 1e-6 && within(el, 120.0),
        format!(
            "p_max = {:.12} (|Δ| = {lib_err:.1e}), grid oracle {:.12} at λ = {:.4} (|Δ| = {grid_err:.1e}), \
             target {exact:.12}, {:.2} s (limit 120 s)",
            opt.p_max,
            best.1,
            best.0,
            el.as_secs_f64()
        ),
    )
}

fn c5_singlet() -> Outcome {
    let singlet = StateVector::new(CVector::from_real(&[0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0])).unwrap();
    let mut rng = trial_rng(5, 0);
    let (mut worst_p, mut worst_angle): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let cfg = build_hardy(&singlet, random_direction(&mut rng)).unwrap();
        let d = cfg.directions();
        worst_p = worst_p.max(cfg.p_violation());
        worst_angle = worst_angle.max(d[2].angle_to(&d[0]));
    }
    outcome(
        worst_p <= 1e-12 && worst_angle <= 1e-8,
        format!("100 heads: max p_violation {worst_p:.1e} (≤ 1e-12), max ∠(n₃, n₁) {worst_angle:.1e} rad (≤ 1e-8)"),
    )
}

fn c6_sensitivity() -> Outcome {
    let psi = schmidt_state(0.8).unwrap();
    let cfg = build_hardy(&psi, Direction::new(1.1, 0.7).unwrap()).unwrap();
    let eps = log_grid(1e-6, 1e-1, 51);
    let r = sensitivity(&cfg, &eps).unwrap();
    let all_positive = r.leak_probabilities.iter().all(|&p| p > 0.0);
    let slope = r.fitted_exponent;

    // second-order coefficient of the leak by central differences
    let d = cfg.directions();
    let axis = perturbation_axis(&d[3], &d[1]);
    let leak = |e: f64| {
        let n4 = rotate_direction(&d[3], axis, e).unwrap();
        let c = Correlation::new(cfg.observables()[2].clone(), observable(n4, 2, 2).unwrap()).unwrap();
        check(&c, &psi).unwrap().vector_residual.powi(2)
    };
    let h = 1e-3;
    let coeff = (leak(h) + leak(-h) - 2.0 * leak(0.0)) / (2.0 * h * h);
    let worst_rel = eps
        .iter()
        .zip(&r.leak_probabilities)
        .filter(|(&e, _)| e >= FIT_WINDOW.0 && e <= FIT_WINDOW.1)
        .map(|(&e, &p)| (p / (coeff * e * e) - 1.0).abs())
        .fold(0.0, f64::max);
    let oracle_slope = loglog_slope(&eps, &eps.iter().map(|e| coeff * e * e).collect::<Vec<_>>(), FIT_WINDOW);
    outcome(
        all_positive && (slope - 2.0).abs() <= 0.1 && worst_rel <= 0.01,
        format!(
            "leak > 0 at all {} ε in [1e-6, 1e-1]: {all_positive}; exponent {slope:.4} (2 ± 0.1); \
             second-order oracle c = {coeff:.6} (slope {oracle_slope:.4}), max rel. deviation {worst_rel:.1e}",
            eps.len()
        ),
    )
}

fn c7_closed_chains() -> Outcome {
    let t = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for family in [ChainFamily::Generic, ChainFamily::AdmissibleProduct] {
        for k in 1..=5 {
            let s = closure_sweep(k, 200, 7, DEFAULT_TOL, family).unwrap();
            ok &= s.all_annihilated() && s.max_head_norm <= 1e-10;
            lines.push(format!(
                "{family:?} k={k}: {}/200, max {:.1e}, dims {:?}",
                s.annihilated_trials, s.max_head_norm, s.solution_dim_counts
            ));
        }
    }
    let el = t.elapsed();
    ok &= within(el, 300.0);
    outcome(ok, format!("{}; {:.2} s (limit 300 s)", lines.join("; "), el.as_secs_f64()))
}

fn c8_middle_residual() -> Outcome {
    let mut rng = trial_rng(8, 0);
    let id = CMatrix::identity(2);
    let worst = (0..1000)
        .map(|_| {
            let p = random_projector(&mut rng);
            let r = (&p.matrix().scale(Complex64::new(2.0, 0.0)) - &id).frobenius_norm();
            (r - SQRT_2).abs()
        })
        .fold(0.0, f64::max);
    outcome(worst <= 1e-12, format!("1000 projectors: max |‖2P − 1‖_F − √2| = {worst:.1e} (≤ 1e-12)"))
}

fn c9_ghsz() -> Outcome {
    let t = Instant::now();
    let g = ghsz_correlations().unwrap();
    let sys = g.system();
    let max_p = g
        .exclusions
        .iter()
        .map(|e| exclusion_probability(&g.state, &g.observables, e).unwrap())
        .fold(0.0, f64::max);
    let models = lhv_search(&sys).unwrap();
    let c = derive_contradiction(&sys, 0);
    let replay = c.as_ref().map(|c| c.replay(&sys).is_ok()).unwrap_or(false);
    let shapes = c.as_ref().is_some_and(|c| {
        let s = Literal::new(0, true);
        c.derived[0].source == s && c.derived[0].target == s.negated() && c.derived[1].source == s.negated()
            && c.derived[1].target == s
    });
    let el = t.elapsed();
    outcome(
        !g.exclusions.is_empty() && max_p <= 1e-12 && models.is_empty() && replay && shapes && within(el, 5.0),
        format!(
            "{} exclusions over {} observables, max probability {max_p:.1e}, {} local models of 256, \
             both derivations present {shapes} and replay {replay}, {:.2} s (limit 5 s)",
            g.exclusions.len(),
            g.observables.len(),
            models.len(),
            el.as_secs_f64()
        ),
    )
}

fn c10_two_particles() -> Outcome {
    let results: Vec<(bool, usize)> = (0..500u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(10, i);
            let (psi, head) = loop {
                let psi = random_state(&mut rng, 2);
                let head = random_observable(&mut rng, 1, 2);
                let v = head.matrix().apply(psi.amplitudes()).unwrap();
                if v.norm() > 1e-6 && (&v - psi.amplitudes()).norm() > 1e-6 {
                    break (psi, head);
                }
            };
            let mut set = CorrelationSet::new();
            let chains = rng.random_range(1..=3);
            for c in 0..chains {
                let start: LocalObservable = if c == 0 {
                    head.clone()
                } else {
                    let party = rng.random_range(1..=2);
                    random_observable(&mut rng, party, 2)
                };
                let len = rng.random_range(2..=6);
                set.add_chain(&Chain::from_partners(&psi, &start, len).unwrap()).unwrap();
            }
            let sys = ConstraintSystem::from_correlations(&set.dual_closed()).unwrap();
            let target = sys.literal_of(&head).unwrap().observable;
            let none_anywhere = (0..sys.observables().len()).all(|o| derive_contradiction(&sys, o).is_none());
            (derive_contradiction(&sys, target).is_none() && none_anywhere, sys.observables().len())
        })
        .collect();
    let clean = results.iter().filter(|r| r.0).count();
    let largest = results.iter().map(|r| r.1).max().unwrap_or(0);
    outcome(
        clean == 500,
        format!("500 partner-chain sets (up to {largest} observables): {clean} without contradiction"),
    )
}

fn c11_hardy_closure() -> Outcome {
    let mut rng = trial_rng(11, 0);
    let mut ok = 0;
    let total = 50;
    for _ in 0..total {
        let cfg = loop {
            let psi = schmidt_state(rng.random_range(0.55..0.95)).unwrap();
            if let Ok(cfg) = build_hardy(&psi, random_direction(&mut rng)) {
                if cfg.is_nondegenerate() {
                    break cfg;
                }
            }
        };
        let mut set = CorrelationSet::new();
        for c in cfg.correlations() {
            set.add_correlation(&c).unwrap();
        }
        let sys = ConstraintSystem::from_correlations(&set.dual_closed()).unwrap();
        let lits: Vec<Literal> = cfg.observables().iter().map(|o| sys.literal_of(o).unwrap()).collect();
        if let Propagation::Consistent(l) = propagate(RealityLedger::seeded(lits[0]), &sys) {
            let mut got: Vec<Literal> = l.values().iter().map(|(&o, &v)| Literal::new(o, v)).collect();
            let mut want = lits.clone();
            got.sort();
            want.sort();
            ok += usize::from(got == want);
        }
    }
    outcome(
        ok == total,
        format!("{ok}/{total} nondegenerate configs: seed S₁(n₁)=1 yields exactly S₂(n₂)=S₁(n₃)=S₂(n₄)=1"),
    )
}

fn run_cli(args: &[&str], threads: &str) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_nonlocality-lab"))
        .args(args)
        .env("NONLOCALITY_LAB_THREADS", threads)
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn c12_cli_determinism() -> Outcome {
    let runs: [&[&str]; 5] = [
        &["--seed", "3", "hardy-optimize", "--starts", "8"],
        &["--seed", "3", "prop2-check", "--k", "2", "--trials", "40"],
        &["ghsz"],
        &["--format", "csv", "sensitivity"],
        &["lhv-closure"],
    ];
    let mut same = 0;
    for args in runs {
        let a = run_cli(args, "1");
        let b = run_cli(args, "4");
        let c = run_cli(args, "4");
        same += usize::from(a == b && b == c && !a.is_empty());
    }
    outcome(
        same == runs.len(),
        format!("{same}/{} commands byte-identical across three runs (1 and 4 threads)", runs.len()),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("dual-form agreement", c1_dual_forms),
        ("partner uniqueness", c2_partner_uniqueness),
        ("duality", c3_duality),
        ("Hardy maximum", c4_hardy_maximum),
        ("maximal-entanglement degeneracy", c5_singlet),
        ("equal-correlation fragility", c6_sensitivity),
        ("closed-chain sweep", c7_closed_chains),
        ("‖2P − 1‖ residual", c8_middle_residual),
        ("GHSZ mechanization", c9_ghsz),
        ("two-particle negative result", c10_two_particles),
        ("Hardy logic closure", c11_hardy_closure),
        ("CLI determinism", c12_cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        failed += usize::from(!o.pass);
        println!("{} [{:>2}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
