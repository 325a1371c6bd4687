//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the lines always appear in `cargo test` output.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use crackbeam::beam_model::{flexibility_double_sided, flexibility_single_sided};
use crackbeam::eigen::{PiecewiseFn, Spectrum};
use crackbeam::spectral::{gram_matrix, rayleigh_quotient, residual_report, rule_for};
use crackbeam::{shifrin, transition, BeamProblem};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};

struct Outcome {
    pass: bool,
    soft: bool,
    detail: String,
}

fn hard(pass: bool, detail: String) -> Outcome {
    Outcome {
        pass,
        soft: false,
        detail,
    }
}

fn max_dist<A: PiecewiseFn, B: PiecewiseFn>(a: &A, b: &B, p: &BeamProblem, points: usize) -> f64 {
    (0..points)
        .map(|j| {
            let x = PI * j as f64 / (points - 1) as f64;
            let k = p.interval_of(x);
            (a.eval(k, x, 0) - b.eval(k, x, 0)).abs()
        })
        .fold(0.0, f64::max)
}

fn random_problems(seed: u64, count: usize) -> Vec<BeamProblem> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let m = 1 + out.len() % 2;
        let cracks: Vec<(f64, f64)> = (0..m)
            .map(|_| (rng.gen_range(0.15..PI - 0.15), rng.gen_range(0.01..5.0)))
            .collect();
        if m == 2 && (cracks[0].0 - cracks[1].0).abs() < 0.1 {
            continue;
        }
        out.push(BeamProblem::new(cracks).unwrap());
    }
    out
}

fn both(p: &BeamProblem, n: usize) -> (Spectrum, Spectrum) {
    (
        shifrin::eigenpairs(p, n, None).unwrap(),
        transition::oracle_eigenpairs(p, n, None).unwrap(),
    )
}

fn uniform_spectrum() -> Outcome {
    let p = BeamProblem::uniform();
    let (s, t) = both(&p, 10);
    let err = s
        .lambdas()
        .iter()
        .chain(t.lambdas().iter())
        .enumerate()
        .map(|(j, l)| (l - (j % 10 + 1) as f64).abs())
        .fold(0.0, f64::max);
    hard(err <= 1e-9, format!("max |lambda_k - k| = {err:.2e} over both solvers, k = 1..10"))
}

fn node_crack() -> Outcome {
    let amp = (2.0 / PI).sqrt();
    let mut worst_l: f64 = 0.0;
    let mut worst_m: f64 = 0.0;
    let mut found = true;
    for theta in [0.1, 1.0, 10.0] {
        let p = BeamProblem::new([(FRAC_PI_2, theta)]).unwrap();
        let (s, t) = both(&p, 5);
        for spec in [&s, &t] {
            for target in [2.0, 4.0] {
                let pair = spec.pairs.iter().min_by(|a, b| {
                    (a.lambda - target).abs().total_cmp(&(b.lambda - target).abs())
                });
                let Some(pair) = pair else {
                    found = false;
                    continue;
                };
                worst_l = worst_l.max((pair.lambda - target).abs());
                let exact = crackbeam::eigen::Smooth(move |x: f64, _n: usize| amp * (target * x).sin());
                worst_m = worst_m.max(max_dist(pair, &exact, &p, 401));
            }
        }
    }
    hard(
        found && worst_l <= 1e-9 && worst_m <= 1e-8,
        format!("theta in {{0.1, 1, 10}}: |lambda - {{2, 4}}| <= {worst_l:.2e}, mode error {worst_m:.2e}"),
    )
}

fn cross_method() -> Outcome {
    let mut worst_l: f64 = 0.0;
    let mut worst_m: f64 = 0.0;
    let problems = random_problems(20240611, 12);
    for p in &problems {
        let (s, t) = both(p, 5);
        for (a, b) in s.pairs.iter().zip(&t.pairs) {
            worst_l = worst_l.max((a.lambda - b.lambda).abs());
            worst_m = worst_m.max(max_dist(a, b, p, 200));
        }
    }
    hard(
        worst_l <= 1e-8 && worst_m <= 1e-7,
        format!(
            "{} random problems (m = 1, 2), 5 modes: |dlambda| <= {worst_l:.2e}, |dphi| <= {worst_m:.2e}",
            problems.len()
        ),
    )
}

fn test_problems() -> Vec<BeamProblem> {
    let mut out = vec![
        BeamProblem::uniform(),
        BeamProblem::new([(FRAC_PI_2, 0.5)]).unwrap(),
        BeamProblem::new([(1.0, 0.3)]).unwrap(),
        BeamProblem::new([(1.0, 0.3), (2.2, 0.7)]).unwrap(),
        BeamProblem::new([(0.4, 5.0), (1.9, 0.05), (2.8, 1.0)]).unwrap(),
    ];
    out.extend(random_problems(99, 6));
    out
}

fn residuals() -> Outcome {
    let mut junction: f64 = 0.0;
    let mut ode: f64 = 0.0;
    let mut modes = 0;
    for p in test_problems() {
        let (s, t) = both(&p, 6);
        for pair in s.pairs.iter().chain(&t.pairs) {
            let r = residual_report(pair, &p);
            junction = junction.max(r.max_junction());
            ode = ode.max(r.ode_residual);
            modes += 1;
        }
    }
    hard(
        junction <= 1e-8 && ode <= 1e-7,
        format!("{modes} modes: scaled boundary/junction residual {junction:.2e}, ODE residual / lambda^4 {ode:.2e}"),
    )
}

fn spectral_structure() -> Outcome {
    let p = BeamProblem::new([(1.0, 0.3), (2.2, 0.7)]).unwrap();
    let s = shifrin::eigenpairs(&p, 8, None).unwrap();
    let rule = rule_for(&p, &s.pairs);
    let gram = gram_matrix(&s.pairs, &rule);
    let dev = (gram - DMatrix::<f64>::identity(8, 8)).amax();
    let rq = s
        .pairs
        .iter()
        .map(|q| (rayleigh_quotient(q, &p, &rule) / q.lambda4() - 1.0).abs())
        .fold(0.0, f64::max);
    hard(
        dev <= 1e-6 && rq <= 1e-5,
        format!("8 modes, 2 cracks: |G - I| = {dev:.2e}, Rayleigh relative error {rq:.2e}"),
    )
}

fn theta_limit() -> Outcome {
    let p = BeamProblem::new([(1.0, 1e-8)]).unwrap();
    let ls = shifrin::find_eigenvalues(&p, 5, None).unwrap().roots;
    let dev = ls
        .iter()
        .enumerate()
        .map(|(k, l)| (l - (k + 1) as f64).abs())
        .fold(0.0, f64::max);
    let firsts: Vec<f64> = [0.01, 0.1, 0.5, 1.0, 5.0]
        .iter()
        .map(|&t| {
            shifrin::find_eigenvalues(&BeamProblem::new([(1.0, t)]).unwrap(), 1, None)
                .unwrap()
                .roots[0]
        })
        .collect();
    let monotone = firsts.windows(2).all(|w| w[1] <= w[0]);
    hard(
        dev <= 1e-4 && monotone,
        format!(
            "theta = 1e-8: max deviation {dev:.2e}; lambda_1 over theta = 0.01..5: {}",
            firsts.iter().map(|l| format!("{l:.6}")).collect::<Vec<_>>().join(" > ")
        ),
    )
}

/// Adaptive Simpson quadrature, used as an independent oracle.
fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

fn kernels() -> Outcome {
    let configs: [(&[(f64, f64)], usize); 5] = [
        (&[(FRAC_PI_2, 0.5)], 0),
        (&[(0.3, 1.0)], 0),
        (&[(2.9, 1.0)], 0),
        (&[(1.0, 0.3), (2.2, 0.7)], 0),
        (&[(1.0, 0.3), (2.2, 0.7)], 1),
    ];
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (cracks, i) in configs {
        let p = BeamProblem::new(cracks.iter().copied()).unwrap();
        let xi = p.positions()[i];
        let w = |s: f64| {
            let a = (xi - PI) / PI;
            if s <= xi {
                a * s
            } else {
                xi / PI * (s - PI)
            }
        };
        for x in [0.25, 1.2, 2.0, 2.6, PI] {
            for lam in [0.4, 1.3, 2.5, 5.0, 9.0] {
                let k0 = |s: f64| ((lam * (x - s)).sinh() - (lam * (x - s)).sin()) * w(s);
                let k2 = |s: f64| lam * lam * ((lam * (x - s)).sinh() + (lam * (x - s)).sin()) * w(s);
                for (order, kernel) in [(0u32, &k0 as &dyn Fn(f64) -> f64), (2, &k2)] {
                    let split = xi.min(x);
                    let scale = 1e-15 * (lam * x).cosh() * PI;
                    let quad = adaptive_simpson(&kernel, 0.0, split, scale) + adaptive_simpson(&kernel, split, x, scale);
                    let closed = shifrin::kernel_m(&p, i, x, lam, order).unwrap();
                    worst = worst.max((closed - quad).abs() / quad.abs().max(1.0));
                    count += 1;
                }
            }
        }
    }
    hard(
        worst <= 1e-10,
        format!("{count} evaluations of M_i and M_i'' against adaptive quadrature: relative error {worst:.2e}"),
    )
}

fn flexibility_polynomials() -> Outcome {
    // Expanded power form, evaluated independently of the library's nested form.
    let double = |mu: f64, h: f64| {
        6.0 * PI * h * mu.powi(2) * (0.535 - 0.929 * mu + 3.5 * mu.powi(2) - 3.181 * mu.powi(3) + 5.793 * mu.powi(4))
    };
    let single = |mu: f64, h: f64| {
        6.0 * PI
            * h
            * mu.powi(2)
            * (0.6384 - 1.035 * mu + 3.7201 * mu.powi(2) - 5.1773 * mu.powi(3) + 7.553 * mu.powi(4)
                - 7.332 * mu.powi(5))
    };
    let zero = flexibility_double_sided(0.0, 0.1).unwrap() == 0.0 && flexibility_single_sided(0.0, 0.2).unwrap() == 0.0;
    let mut rel: f64 = 0.0;
    for mu in [0.1, 0.2, 0.3, 0.5] {
        for h in [0.05, 1.0] {
            let d = flexibility_double_sided(mu, h).unwrap();
            let s = flexibility_single_sided(mu, h).unwrap();
            rel = rel.max((d / double(mu, h) - 1.0).abs()).max((s / single(mu, h) - 1.0).abs());
        }
    }
    let grid: Vec<f64> = (0..=60).map(|j| j as f64 * 0.01).collect();
    let nondecreasing = |f: &dyn Fn(f64) -> f64| grid.windows(2).all(|w| f(w[1]) >= f(w[0]));
    let mono = nondecreasing(&|m| flexibility_double_sided(m, 1.0).unwrap())
        && nondecreasing(&|m| flexibility_single_sided(m, 1.0).unwrap());
    hard(
        zero && rel <= 1e-12 && mono,
        format!("theta(0) = 0: {zero}; relative mismatch {rel:.2e}; nondecreasing on [0, 0.6]: {mono}"),
    )
}

fn time_it<F: Fn()>(f: F, reps: u32) -> Duration {
    f();
    let start = Instant::now();
    for _ in 0..reps {
        f();
    }
    start.elapsed()
}

fn performance() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for cracks in [vec![(1.0, 0.3)], vec![(1.0, 0.3), (2.2, 0.7)]] {
        let p = BeamProblem::new(cracks).unwrap();
        let ts = time_it(|| drop(shifrin::find_eigenvalues(&p, 3, None).unwrap()), 20);
        let tt = time_it(|| drop(transition::find_eigenvalues(&p, 3, None).unwrap()), 20);
        let ratio = ts.as_secs_f64() / tt.as_secs_f64();
        ok &= ratio <= 1.0;
        lines.push(format!("m = {}: shifrin/transition time ratio {ratio:.2}", p.crack_count()));
    }
    Outcome {
        pass: ok,
        soft: true,
        detail: lines.join("; "),
    }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_crackbeam"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn cli_contract() -> Outcome {
    let mut problems = Vec::new();
    let commands = ["spectrum", "modes", "frequencies", "validate", "det-scan"];
    for fx in ["uniform.json", "one_crack.json"] {
        let path = fixture(fx);
        let path = path.to_str().unwrap();
        for cmd in commands {
            for format in ["csv", "json"] {
                let args = [cmd, path, "--format", format, "--lambda-max", "6"];
                let first = run_cli(&args);
                let second = run_cli(&args);
                if first != second {
                    problems.push(format!("{cmd} {fx} {format}: output differs between runs"));
                }
                let expected = if cmd == "frequencies" { 2 } else { 0 };
                if first.0 != expected {
                    problems.push(format!("{cmd} {fx}: exit {} (expected {expected})", first.0));
                }
            }
        }
    }
    for fx in [
        "uniform.json",
        "one_crack.json",
        "node_crack.json",
        "two_cracks.json",
        "unit_beam.json",
        "steel_beam.json",
    ] {
        let (code, _, err) = run_cli(&["validate", fixture(fx).to_str().unwrap()]);
        if code != 0 {
            problems.push(format!("validate {fx}: exit {code} {err}"));
        }
    }
    let (code, out, err) = run_cli(&["validate", fixture("fault_injected.json").to_str().unwrap()]);
    if code != 4 || !err.contains("crack_law") || !out.contains("\"crack_law\"") {
        problems.push(format!("fault-injected validate: exit {code}"));
    }
    let (code, _, _) = run_cli(&["spectrum", fixture("uniform.json").to_str().unwrap(), "--modes", "9", "--lambda-max", "4"]);
    if code != 3 {
        problems.push(format!("shortfall exit {code}"));
    }
    let (code, _, _) = run_cli(&["spectrum", "/nonexistent/problem.json"]);
    if code != 2 {
        problems.push(format!("missing file exit {code}"));
    }
    hard(
        problems.is_empty(),
        if problems.is_empty() {
            "5 commands x 2 fixtures x 2 formats byte-stable; validate passes on 6 fixtures, fault injection exits 4 naming crack_law; exit codes 2 and 3 observed".into()
        } else {
            problems.join("; ")
        },
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("uniform-beam spectrum", uniform_spectrum),
        ("node-crack exactness", node_crack),
        ("cross-method agreement", cross_method),
        ("boundary and junction residuals", residuals),
        ("spectral structure", spectral_structure),
        ("flexibility-limit continuity", theta_limit),
        ("kernel correctness", kernels),
        ("flexibility polynomials", flexibility_polynomials),
        ("performance (soft)", performance),
        ("CLI contract", cli_contract),
    ];
    let mut hard_failures = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let tag = match (o.pass, o.soft) {
            (true, _) => "PASS",
            (false, true) => "SOFT-FAIL",
            (false, false) => "FAIL",
        };
        if !o.pass && !o.soft {
            hard_failures += 1;
        }
        println!(
            "criterion {:>2} {tag:<9} {name}: {} [{:.2}s]",
            n + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if hard_failures > 0 {
        eprintln!("{hard_failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
