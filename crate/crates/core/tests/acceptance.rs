//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so every line is printed even when a criterion
//! fails; the process exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use pascal_bilateral::bilateral::{verify_bilateral_binomial, VerificationVerdict};
use pascal_bilateral::lattice::{
    generate_layer, point_value, recurrence_residual, region_component_count, LatticePoint, RegularizedValue,
};
use pascal_bilateral::multinomial::{
    chain_from_angles, evaluate_multinomial, nested_reduction, symmetric_form, symmetric_substitution, unit_sum_probe,
    TheoremInstance, DEFAULT_SCHEDULE,
};
use pascal_bilateral::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Coefficients of `(y₀ + y₁ + … + y_{dim−1})^n` by repeated multiplication.
fn expand(dim: usize, n: u32) -> BTreeMap<Vec<u32>, i128> {
    let mut poly = BTreeMap::from([(vec![0u32; dim], 1i128)]);
    for _ in 0..n {
        let mut next = BTreeMap::new();
        for (exps, c) in &poly {
            for axis in 0..dim {
                let mut e = exps.clone();
                e[axis] += 1;
                *next.entry(e).or_insert(0) += c;
            }
        }
        poly = next;
    }
    poly
}

/// `(1 + Σ vars)^n` through the expansion of `(y₀ + y₁ + …)^n` with `y₀ = 1`.
fn expand_value(n: u32, vars: &[i64]) -> i128 {
    expand(vars.len() + 1, n)
        .iter()
        .map(|(exps, c)| c * exps[1..].iter().zip(vars).map(|(&e, &x)| i128::from(x).pow(e)).product::<i128>())
        .sum()
}

/// `ln|Γ(x)|` and its sign, by shifting to a positive argument for statrs.
fn log_gamma_oracle(x: f64) -> (f64, f64) {
    let mut shifted = x;
    let mut log = 0.0;
    let mut sign = 1.0;
    while shifted < 1.0 {
        log -= shifted.abs().ln();
        if shifted < 0.0 {
            sign = -sign;
        }
        shifted += 1.0;
    }
    (log + statrs::function::gamma::ln_gamma(shifted), sign)
}

fn small_h_oracle(coords: &[f64], h: f64) -> f64 {
    let total: f64 = coords.iter().sum();
    let (mut log, mut sign) = log_gamma_oracle(total + 1.0 + h);
    for &c in coords {
        let (l, s) = log_gamma_oracle(c + 1.0 + h);
        log -= l;
        sign *= s;
    }
    sign * log.exp()
}

fn recurrence_suite() -> Outcome {
    let mut checked = 0;
    let mut failures = Vec::new();
    for a in -8i64..=8 {
        for b in -8i64..=8 {
            for c in -8i64..=8 {
                let p = LatticePoint::from_integers(&[a, b, c]).unwrap();
                let Ok(residual) = recurrence_residual(&p) else { continue };
                checked += 1;
                let value = point_value(&p).value().unwrap_or(0.0);
                if residual.abs() > 1e-9 * (1.0 + value.abs()) {
                    failures.push(format!("({a},{b},{c}) residual {residual:e}"));
                }
            }
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!("{} of {checked} points violate the construction law: {}", failures.len(), failures.join(", ")),
    )
}

fn region_counts() -> Outcome {
    let cases = [(2, 10, 3), (3, 10, 4), (4, 8, 5)];
    let mut detail = Vec::new();
    let mut passed = true;
    for (dim, window, expected) in cases {
        let got = region_component_count(dim, window).unwrap();
        passed &= got == expected;
        detail.push(format!("dim {dim} W {window}: {got} (expected {expected})"));
    }
    Outcome::new(passed, detail.join("; "))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut tested = 0;
    let mut worst = 0.0f64;
    let mut attempts = 0;
    while tested < 1000 && attempts < 100_000 {
        attempts += 1;
        let dim = rng.gen_range(2..=4);
        let half = rng.gen_bool(0.5);
        let coords: Vec<f64> = (0..dim)
            .map(|_| f64::from(rng.gen_range(-6i32..=6)) + if half && rng.gen_bool(0.5) { 0.5 } else { 0.0 })
            .collect();
        let value = match point_value(&LatticePoint::new(coords.clone()).unwrap()) {
            RegularizedValue::Finite(v) if v != 0.0 => v,
            _ => continue,
        };
        let estimate = small_h_oracle(&coords, 1e-6);
        worst = worst.max(((estimate - value) / value).abs());
        tested += 1;
    }
    Outcome::new(tested == 1000 && worst <= 1e-4, format!("{tested} points, worst relative deviation {worst:.3e}"))
}

fn midpoint_identity() -> Outcome {
    let third = 1.0 / 3.0;
    let lhs = point_value(&LatticePoint::new(vec![2.0 * third; 3]).unwrap()).value().unwrap();
    let rhs = 3.0 * point_value(&LatticePoint::new(vec![-third, 2.0 * third, 2.0 * third]).unwrap()).value().unwrap();
    let err = ((lhs - rhs) / rhs).abs();
    Outcome::new(err <= 1e-12, format!("{lhs:.17e} vs {rhs:.17e}, relative {err:.3e}"))
}

fn layer_oracle() -> Outcome {
    let mut mismatches = 0;
    let mut bad_sums = 0;
    for n in 0..=8u32 {
        let table = generate_layer(3, n).unwrap();
        let oracle = expand(3, n);
        if table.len() != oracle.len() {
            mismatches += 1;
        }
        for (exps, c) in &oracle {
            if table.get(exps) != Some(*c as f64) {
                mismatches += 1;
            }
        }
        if table.sum() != 3f64.powi(n as i32) {
            bad_sums += 1;
        }
    }
    Outcome::new(mismatches == 0 && bad_sums == 0, format!("{mismatches} coefficient mismatches, {bad_sums} bad sums"))
}

fn bilateral_binomial() -> Outcome {
    let zs = [re(1.0), Complex64::i(), Complex64::from_polar(1.0, PI / 3.0)];
    let mut failures = Vec::new();
    for x in 0..=8 {
        for y in 0..=x {
            for z in zs {
                let r = verify_bilateral_binomial(f64::from(x), f64::from(y), z, 1e-10).unwrap();
                if r.verdict != VerificationVerdict::Pass {
                    failures.push(format!("x={x} y={y} z={z}: {:?}", r.verdict));
                }
            }
        }
    }
    let (report, rhs) = pascal_bilateral::bilateral::check_bilateral_binomial(
        2.5,
        0.7,
        Complex64::from_polar(1.0, PI / 3.0),
        1e-5,
        None,
    )
    .unwrap();
    let general_ok = report.verdict == VerificationVerdict::Pass && rhs.series.window <= 20_000;
    Outcome::new(
        failures.is_empty() && general_ok,
        format!(
            "{} terminating failures; x=2.5 case {:?} at K={} (rel {:.3e}, decay {:.2})",
            failures.len(),
            report.verdict,
            rhs.series.window,
            report.rel_error,
            rhs.series.decay_exponent_estimate
        ),
    )
}

fn trinomial_pipeline() -> Outcome {
    let window = 64;
    let x = chain_from_angles(&[PI / 3.0, PI / 5.0]);
    let inst = TheoremInstance::new(2.5, x, vec![0.5, 0.5]).unwrap();
    let target = inst.target().unwrap();
    let nested = nested_reduction(&inst, window).unwrap().value;
    let direct = evaluate_multinomial(&inst, window).unwrap();
    let vs_power = rel(nested, target);
    let vs_direct = rel(direct.value, nested);
    Outcome::new(
        vs_power <= 1e-4 && vs_direct <= 1e-2,
        format!(
            "K={window}: nested vs power {vs_power:.3e}; direct double sum {:.6e}{:+.6e}i ({:?}) vs nested {vs_direct:.3e}",
            direct.value.re, direct.value.im, direct.verdict
        ),
    )
}

fn degenerate_exactness() -> Outcome {
    let mut cases = 0;
    let mut failures = Vec::new();
    for k in 1..=3usize {
        let side: Vec<i64> = if k < 3 { (-2..=3).collect() } else { (-1..=2).collect() };
        let mut tuples: Vec<Vec<i64>> = vec![vec![]];
        for _ in 0..k {
            tuples =
                tuples.into_iter().flat_map(|t| side.iter().map(move |&v| [t.clone(), vec![v]].concat())).collect();
        }
        for n in 0..=6u32 {
            for vars in &tuples {
                let inst =
                    TheoremInstance::integral(f64::from(n), vars.iter().map(|&v| re(v as f64)).collect()).unwrap();
                let value = evaluate_multinomial(&inst, 8).unwrap().value;
                let expected = expand_value(n, vars) as f64;
                cases += 1;
                if value != re(expected) {
                    failures.push(format!("n={n} x={vars:?}: {value}"));
                }
            }
        }
    }
    Outcome::new(failures.is_empty(), format!("{cases} cases, {} inexact {}", failures.len(), failures.join(", ")))
}

fn symmetric_equivalence() -> Outcome {
    let cases: Vec<(f64, Vec<Complex64>)> = vec![
        (2.0, vec![re(1.0), re(1.0)]),
        (3.0, vec![re(1.0), re(1.0), re(2.0)]),
        (4.0, vec![re(0.5), Complex64::new(1.0, -2.0), re(3.0)]),
        (5.0, vec![Complex64::new(0.25, 0.5), re(-1.0), re(2.0), Complex64::new(0.0, 1.0)]),
    ];
    let mut worst = 0.0f64;
    for (n, vars) in &cases {
        let anchors = vec![0.0; vars.len()];
        let symmetric = symmetric_form(*n, vars, &anchors, 8).unwrap().value;
        let shifted = TheoremInstance::new(*n, symmetric_substitution(vars), anchors).unwrap();
        let direct = evaluate_multinomial(&shifted, 8).unwrap().value;
        let power = vars.iter().sum::<Complex64>().powf(*n);
        worst = worst.max(rel(symmetric, direct)).max(rel(symmetric, power));
    }
    Outcome::new(worst <= 1e-10, format!("{} cases, worst relative deviation {worst:.3e}", cases.len()))
}

fn unit_sum_probe_check() -> Outcome {
    let mut exact = true;
    for n in 0..=5 {
        let r = unit_sum_probe(f64::from(n), 2, &[0.0, 0.0], &DEFAULT_SCHEDULE).unwrap();
        exact &= r.value == re(3f64.powi(n));
    }
    let r = unit_sum_probe(2.0, 2, &[0.5, 0.5], &DEFAULT_SCHEDULE).unwrap();
    let diverging = r.verdict == pascal_bilateral::bilateral::Verdict::NotConverging;
    Outcome::new(
        exact && diverging,
        format!("integer anchors exact: {exact}; half-integer anchors verdict {:?}", r.verdict),
    )
}

fn cli_determinism() -> Outcome {
    let commands: &[&[&str]] = &[
        &["coeff", "2", "1"],
        &["coeff", "-3", "1"],
        &["coeff", "0.6666666667", "0.6666666667", "0.6666666667"],
        &["layer", "--dim", "3", "--n", "2", "--format", "csv"],
        &["layer", "--dim", "4", "--n", "1"],
        &["layer", "--dim", "3", "--n", "8"],
        &["region-map", "--dim", "2", "--window", "6"],
        &["region-map", "--dim", "3", "--window", "6"],
        &["region-map", "--dim", "4", "--window", "5"],
        &["verify", "binomial", "--x", "3", "--y", "1", "--z", "1+0i", "--tol", "1e-10"],
        &["verify", "trinomial", "--n", "2.5", "--theta1", "1.0472", "--theta2", "0.6283", "--tol", "1e-3"],
        &["verify", "binomial", "--x", "-0.5", "--y", "0.25", "--z", "0+1i"],
        &["probe", "--n", "2", "--dim", "2", "--anchors", "0", "0"],
        &["probe", "--n", "2", "--dim", "2", "--anchors", "0.5", "0.5"],
        &["probe", "--n", "2.5", "--dim", "1", "--anchors", "0.5"],
    ];
    let bin = env!("CARGO_BIN_EXE_pascal-bilateral");
    let mut differing = Vec::new();
    for args in commands {
        let run = || Command::new(bin).args(*args).output().expect("binary runs");
        let (first, second) = (run(), run());
        if first.stdout != second.stdout || first.status != second.status || first.stdout.is_empty() {
            differing.push(args.join(" "));
        }
    }
    Outcome::new(
        differing.is_empty(),
        format!("{} commands run twice, {} differ {}", commands.len(), differing.len(), differing.join("; ")),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("recurrence suite", Some(Duration::from_secs(10)), recurrence_suite),
        ("region counts", Some(Duration::from_secs(30)), region_counts),
        ("small-h oracle equivalence", Some(Duration::from_secs(5)), oracle_equivalence),
        ("midpoint identity", None, midpoint_identity),
        ("layer oracle", None, layer_oracle),
        ("bilateral binomial", Some(Duration::from_secs(5)), bilateral_binomial),
        ("trinomial pipeline", Some(Duration::from_secs(60)), trinomial_pipeline),
        ("degenerate multinomial exactness", None, degenerate_exactness),
        ("symmetric form equivalence", None, symmetric_equivalence),
        ("unit-sum probe", Some(Duration::from_secs(30)), unit_sum_probe_check),
        ("CLI determinism", None, cli_determinism),
    ];
    let mut failed = 0;
    for (index, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let passed = outcome.passed && in_time;
        if !passed {
            failed += 1;
        }
        let budget_note = budget.map_or(String::new(), |b| format!(" / budget {:.0}s", b.as_secs_f64()));
        println!(
            "criterion {:>2} {:<34} {} [{:.2}s{}] {}",
            index + 1,
            name,
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget_note,
            outcome.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
