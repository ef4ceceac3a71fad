//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test --release -p qmetro-core --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use qmetro_core::bounds::{
    self, alpha_beta, analytic, extended_channel_qfi, finite_n_bound_adaptive, finite_n_bound_parallel, minimize_beta0,
    minimize_finite_adaptive, rotated_kraus, KrausGenerator, SolverOptions,
};
use qmetro_core::channels::{tensor, tensor_power, ChannelFamily, ChannelModel};
use qmetro_core::qfi::{optimize_input, qfi_value, seesaw_from, SeesawOptions, StateFamily};
use qmetro_core::strategies::{
    self, default_eta_grid, knysh_bound, parallel_qfi, ratio_curve, sequential_closed_form, sequential_numeric,
    universal_bound, Method, StrategyOptions,
};
use qmetro_core::{Complex64, ComplexMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn ok<T>(r: qmetro_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn single_probe() -> Outcome {
    let opts = SeesawOptions::default();
    let mut worst: f64 = 0.0;
    for model in ChannelModel::ALL {
        for eta in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let f = ok(optimize_input(&ok(model.build(eta))?, 1, &opts))?.qfi;
            worst = worst.max((f - eta).abs());
            ensure((f - eta).abs() < 1e-6, || format!("{model} eta={eta}: F={f}"))?;
        }
    }
    Ok(format!("max |F - eta| = {worst:.2e}"))
}

fn optimal_kraus() -> Outcome {
    let opts = SolverOptions::default();
    let mut worst_value: f64 = 0.0;
    let mut worst_gen: f64 = 0.0;
    for model in ChannelModel::ALL {
        for eta in [0.2, 0.5, 0.8] {
            let ch = ok(model.build(eta))?;
            let rep = ok(minimize_beta0(&ch, 0, &opts))?;
            let want = ok(analytic::beta0_value(model, eta))?;
            let e = rel(rep.value, want);
            worst_value = worst_value.max(e);
            ensure(e < 1e-5, || format!("{model} eta={eta}: {} vs {want}", rep.value))?;
            ensure(
                rep.residual_beta_norm.is_some_and(|r| r < bounds::CONSTRAINT_TOL),
                || format!("{model} eta={eta}: residual beta {:?}", rep.residual_beta_norm),
            )?;
            let g = ok(analytic::beta0_generator(model, eta))?;
            let analytic_value = 4.0 * ok(alpha_beta(&ch, &g))?.alpha_norm();
            let found = 4.0 * ok(alpha_beta(&ch, rep.generator.as_ref().unwrap()))?.alpha_norm();
            let d = (analytic_value - found).abs();
            worst_gen = worst_gen.max(d);
            ensure(d < 1e-4, || {
                format!("{model} eta={eta}: generator values {found} vs {analytic_value}")
            })?;
        }
    }
    Ok(format!(
        "max rel err {worst_value:.2e}; generator 4|a| gap {worst_gen:.2e}"
    ))
}

fn equality_at_one_probe() -> Outcome {
    let eta = 0.5;
    let mut detail = Vec::new();
    for model in ChannelModel::ALL {
        let ch = ok(model.build(eta))?;
        let exact = ok(extended_channel_qfi(&ch, 0, &SolverOptions::default()))?.value;
        let seesaw = ok(optimize_input(&ch, ch.dim_in, &SeesawOptions::default()))?.qfi;
        ensure(rel(exact, seesaw) < 2e-3, || {
            format!("{model}: kraus-min {exact} vs see-saw {seesaw}")
        })?;
        detail.push(format!("{model} {exact:.6}"));
    }
    let ad = ok(extended_channel_qfi(
        &ok(ChannelModel::AmplitudeDamping.build(eta))?,
        0,
        &SolverOptions::default(),
    ))?
    .value;
    let want = 4.0 * eta / (1.0 + eta.sqrt()).powi(2);
    ensure((ad - want).abs() < 1e-5, || format!("amplitude damping {ad} vs {want}"))?;
    Ok(detail.join(", "))
}

fn ancilla_threshold() -> Outcome {
    let opts = StrategyOptions::default();
    let mut detail = Vec::new();
    for (eta, expect) in [(0.30, true), (0.40, false)] {
        let bound = eta / (1.0 - eta);
        for method in [Method::KrausMin, Method::Seesaw] {
            let f = ok(parallel_qfi(
                ChannelModel::AmplitudeDamping,
                eta,
                1,
                true,
                method,
                &opts,
            ))?
            .value;
            ensure((f > bound) == expect, || {
                format!("eta={eta} {method}: F={f} vs {bound}")
            })?;
        }
        let f = ok(parallel_qfi(
            ChannelModel::AmplitudeDamping,
            eta,
            1,
            true,
            Method::KrausMin,
            &opts,
        ))?
        .value;
        detail.push(format!("eta={eta}: F={f:.4} vs {bound:.4}"));
    }
    Ok(detail.join("; "))
}

fn figure4() -> Outcome {
    let opts = StrategyOptions::default();
    let eta = 0.5;
    let model = ChannelModel::AmplitudeDamping;
    let f3 = ok(parallel_qfi(model, eta, 4, true, Method::KrausMin, &opts))?.value;
    let f2 = ok(parallel_qfi(model, eta, 4, false, Method::Seesaw, &opts))?.value;
    let k = ok(knysh_bound(eta, 4))?;
    ensure(k == 4.0, || format!("knysh {k}"))?;
    ensure(f3 > k, || format!("F(iii)(4) = {f3} not above {k}"))?;
    ensure(f2 <= k + 2e-3, || format!("F(ii)(4) = {f2} above {k} + 2e-3"))?;
    Ok(format!("F(ii)(4) = {f2:.6}, F(iii)(4) = {f3:.6}, knysh = {k}"))
}

fn figure3() -> Outcome {
    let grid = default_eta_grid();
    let mut worst: f64 = 0.0;
    for model in ChannelModel::ALL {
        for p in ok(ratio_curve(model, &grid))? {
            let direct = std::f64::consts::E * p.eta * (1.0 / p.eta).ln() / (1.0 - p.eta);
            worst = worst.max((p.ratio - direct).abs());
            ensure((p.ratio - direct).abs() < 1e-12, || {
                format!("eta={}: {} vs {direct}", p.eta, p.ratio)
            })?;
        }
    }
    let last = ok(strategies::ratio(0.999))?;
    ensure(rel(last, std::f64::consts::E) < 0.01, || {
        format!("ratio(0.999) = {last}")
    })?;
    Ok(format!("max deviation {worst:.1e}; ratio(0.999) = {last:.6}"))
}

fn sequential() -> Outcome {
    let ch = ok(ChannelModel::Dephasing.build(0.9))?;
    let (v, b) = ok(sequential_numeric(&ch, 20, &SeesawOptions::default()))?;
    let closed = ok(sequential_closed_form(0.9, 20))?;
    ensure(rel(v, closed) < 0.05, || format!("numeric {v} vs closed form {closed}"))?;
    let low = ok(sequential_closed_form(0.2, 10))?;
    ensure(low == 10.0 * 0.2, || format!("eta=0.2 N=10 gives {low}"))?;
    let high = ok(sequential_closed_form(0.99, 3))?;
    ensure(high == 9.0 * 0.99f64.powf(3.0), || format!("eta=0.99 N=3 gives {high}"))?;
    Ok(format!("numeric {v:.4} (block {b}) vs closed form {closed:.4}"))
}

fn random_density(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let rho = g.matmul(&g.adjoint());
    let t = rho.trace().re;
    rho.scale_real(1.0 / t)
}

fn random_generator(rng: &mut ChaCha8Rng, r: usize) -> KrausGenerator {
    let a = ComplexMatrix::from_fn(r, r, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    KrausGenerator::new(a.hermitian_part()).unwrap()
}

fn output(kraus: &[ComplexMatrix], rho: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(kraus[0].rows(), kraus[0].rows());
    for k in kraus {
        out = &out + &k.matmul(rho).matmul(&k.adjoint());
    }
    out
}

fn properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let families: Vec<ChannelFamily> = ChannelModel::ALL
        .iter()
        .flat_map(|m| [0.25, 0.7].map(|eta| m.build(eta).unwrap()))
        .chain([tensor_power(&ChannelModel::AmplitudeDamping.build(0.5).unwrap(), 2).unwrap()])
        .collect();

    for ch in &families {
        let rho = random_density(&mut rng, ch.dim_in);
        let g = random_generator(&mut rng, ch.kraus_count());
        let d = output(&ok(rotated_kraus(ch, &g, 0.77))?, &rho).max_abs_diff(&output(&ch.kraus, &rho));
        ensure(d < 1e-10, || format!("{}: rotated action differs by {d:.1e}", ch.label))?;
    }

    for ch in &families {
        let b = ch.beta();
        let d = (&b + &b.adjoint()).max_abs();
        ensure(d < 1e-10, || format!("{}: beta + beta^dag = {d:.1e}", ch.label))?;
    }

    for i in 0..100 {
        let ch = &families[i % families.len()];
        let g = random_generator(&mut rng, ch.kraus_count());
        let n = rng.random_range(1..40);
        let p = ok(finite_n_bound_parallel(ch, &g, n))?;
        let a = ok(finite_n_bound_adaptive(ch, &g, n))?;
        ensure(a >= p, || format!("adaptive {a} below parallel {p}"))?;
    }

    let opts = SeesawOptions::default();
    for ch in &families {
        let start = {
            let v: Vec<Complex64> = (0..ch.dim_in)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.into_iter().map(|z| z / n).collect()
        };
        let run = ok(seesaw_from(ch, start, &opts))?;
        let bad = run
            .history
            .windows(2)
            .find(|w| w[1] < w[0] - 1e-12 * w[0].abs().max(1.0));
        ensure(bad.is_none(), || {
            format!("{}: see-saw objective decreased {bad:?}", ch.label)
        })?;
    }

    for (a, b) in [(0, 2), (1, 4), (3, 5)] {
        let (ca, cb) = (&families[a], &families[b]);
        let (ra, rb) = (random_density(&mut rng, ca.dim_in), random_density(&mut rng, cb.dim_in));
        let fa = ok(StateFamily::from_channel(ca, &ra))?;
        let fb = ok(StateFamily::from_channel(cb, &rb))?;
        let joint = ok(StateFamily::from_channel(
            &tensor(ca, cb),
            &qmetro_core::linalg::tensor_product(&ra, &rb),
        ))?;
        let (qa, qb, qj) = (ok(qfi_value(&fa))?, ok(qfi_value(&fb))?, ok(qfi_value(&joint))?);
        ensure((qj - qa - qb).abs() < 1e-8 * qj.max(1.0), || {
            format!("additivity: {qj} vs {qa} + {qb}")
        })?;
    }

    let step = 1e-5;
    for model in ChannelModel::ALL {
        let eta = 0.6;
        let ch = ok(model.build(eta))?;
        let (plus, minus) = (ok(model.kraus_at(eta, step))?, ok(model.kraus_at(eta, -step))?);
        for k in 0..ch.kraus_count() {
            let fd = (&plus[k] - &minus[k]).scale_real(0.5 / step);
            let d = fd.max_abs_diff(&ch.kraus_dot[k]);
            ensure(d < 1e-8, || format!("{model}: derivative of K_{k} off by {d:.1e}"))?;
        }
    }
    Ok("rotation invariance, beta anti-Hermiticity, adaptive >= parallel (100), see-saw monotone, additivity, finite differences".into())
}

fn hierarchy() -> Outcome {
    let opts = StrategyOptions::default();
    let quick = SeesawOptions {
        restarts: 8,
        ..Default::default()
    };
    let eta = 0.5;
    let mut checked = 0;
    for model in ChannelModel::ALL {
        let n_max = if model == ChannelModel::AmplitudeDamping { 4 } else { 3 };
        for n in 1..=n_max {
            let ch = ok(model.build(eta))?;
            let f1 = ok(sequential_numeric(&ch, n, &quick))?.0;
            let f2 = ok(parallel_qfi(model, eta, n, false, Method::Seesaw, &opts))?.value;
            let f3 = ok(parallel_qfi(model, eta, n, true, Method::KrausMin, &opts))?.value;
            let f4 = ok(minimize_finite_adaptive(&ch, n, 0, &SolverOptions::default()))?.value;
            let u = ok(universal_bound(model, eta, n))?;
            ensure(f1 <= f2 + 2e-3, || format!("{model} N={n}: F(i) {f1} > F(ii) {f2}"))?;
            ensure(f2 <= f3 + 2e-3, || format!("{model} N={n}: F(ii) {f2} > F(iii) {f3}"))?;
            ensure(f3 <= f4 * (1.0 + 1e-6), || {
                format!("{model} N={n}: F(iii) {f3} > adaptive bound {f4}")
            })?;
            ensure(f3 <= u * (1.0 + 1e-6), || {
                format!("{model} N={n}: F(iii) {f3} > universal {u}")
            })?;
            if model.dim().pow(n as u32) <= 8 {
                let seesaw = ok(parallel_qfi(model, eta, n, true, Method::Seesaw, &opts))?.value;
                ensure(seesaw <= f3 * (1.0 + 1e-6) && rel(seesaw, f3) < 2e-3, || {
                    format!("{model} N={n}: ancilla see-saw {seesaw} vs Kraus minimum {f3}")
                })?;
            }
            if model != ChannelModel::AmplitudeDamping {
                ensure(rel(f3, f2) < 2e-3, || {
                    format!("{model} N={n}: ancilla changes QFI {f2} -> {f3}")
                })?;
            }
            checked += 1;
        }
    }
    Ok(format!(
        "F(i) <= F(ii) <= F(iii) <= bounds at {checked} points; see-saw and Kraus minimum agree on F(iii)"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("single-probe QFI equals eta", single_probe),
        ("optimal Kraus representations (beta = 0)", optimal_kraus),
        ("extended-channel equality at N=1", equality_at_one_probe),
        ("ancilla-advantage threshold", ancilla_threshold),
        ("amplitude damping N=4 ancilla gap", figure4),
        ("ratio curve", figure3),
        ("sequential consistency", sequential),
        ("property suites", properties),
        ("strategy hierarchy chain", hierarchy),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} ({secs:.1}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.1}s): {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
