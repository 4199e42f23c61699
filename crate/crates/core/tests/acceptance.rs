//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thorpe_lab::curvature::random_symmetric_11;
use thorpe_lab::identities::{derive_c_constant_with, hyper_lambda, identity_names, CProbe};
use thorpe_lab::mutation::{with_mutation, Mutation};
use thorpe_lab::{
    binomial, check, check_variation_lemma, classify, conf_flat_equivalences, corpus, decompose, factorial,
    gauss_bonnet, lovelock, metric_power, realize, run_suite, sectional_curvature, CaseSpec, CurvatureModel,
    DoubleForm, IndexSet, SuiteConfig,
};

struct Fail(String);

impl From<thorpe_lab::Error> for Fail {
    fn from(e: thorpe_lab::Error) -> Self {
        Fail(e.to_string())
    }
}

impl From<String> for Fail {
    fn from(s: String) -> Self {
        Fail(s)
    }
}

type Outcome = Result<String, Fail>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), Fail> {
    if ok {
        Ok(())
    } else {
        Err(Fail(msg()))
    }
}

fn e2s<T>(r: thorpe_lab::Result<T>) -> Result<T, Fail> {
    Ok(r?)
}

fn identity_suite() -> Outcome {
    let start = Instant::now();
    let report = e2s(run_suite(&SuiteConfig::default()))?;
    let elapsed = start.elapsed().as_secs_f64();
    let failed: Vec<_> = report.cases.iter().filter(|c| !c.pass).collect();
    ensure(failed.is_empty(), || format!("{} failing cases, first {:?}", failed.len(), failed[0]))?;
    let ran: BTreeSet<&str> = report.cases.iter().map(|c| c.name.as_str()).collect();
    let missing: Vec<_> = identity_names().into_iter().filter(|n| !ran.contains(n)).collect();
    ensure(missing.is_empty(), || format!("never exercised: {missing:?}"))?;
    let max_seeds = report.cases.iter().filter(|c| c.name == "gen_lanczos" && c.n == 4).count();
    ensure(max_seeds >= 10, || format!("only {max_seeds} seeds"))?;
    ensure(elapsed < 60.0, || format!("took {elapsed:.1} s"))?;
    let algebraic = report.cases.iter().filter(|c| c.name != "variation_lemma").map(|c| c.residual_or_inf());
    Ok(format!(
        "{} cases over {} identities, max residual {:.2e} (finite differences excluded), {elapsed:.1} s",
        report.cases.len(),
        ran.len(),
        algebraic.fold(0.0, f64::max)
    ))
}

fn variation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let m = binomial(4, 2);
    let mut worst: f64 = 0.0;
    let mut over = 0;
    let mut orders = Vec::new();
    for _ in 0..50 {
        let mut gen = || DoubleForm::from_coeffs(4, 2, 2, (0..m * m).map(|_| rng.random_range(-1.0..=1.0)).collect());
        let (w1, w2) = (e2s(gen())?, e2s(gen())?);
        let h = e2s(random_symmetric_11(4, &mut rng))?;
        let fine = e2s(check_variation_lemma(&w1, &w2, &h, 1e-4))?;
        let coarse = e2s(check_variation_lemma(&w1, &w2, &h, 1e-3))?;
        worst = worst.max(fine.residual);
        over += (fine.residual >= 1e-6) as usize;
        if coarse.residual > 1e-11 {
            orders.push((coarse.residual / fine.residual).log10());
        }
    }
    orders.sort_by(f64::total_cmp);
    ensure(orders.len() >= 25, || format!("only {} triples above rounding level", orders.len()))?;
    let median = orders[orders.len() / 2];
    let summary = format!("max residual {worst:.2e}, {over} of 50 triples ≥ 1e-6, observed order {median:.2}");
    ensure((1.7..=2.3).contains(&median), || format!("{summary}, expected order 2"))?;
    ensure(over == 0, || summary.clone())?;
    Ok(summary)
}

fn product_parity() -> Outcome {
    let mut detail = Vec::new();
    for k in 1..=2usize {
        let r = e2s(realize(&CurvatureModel::sphere_times_hyperbolic(2 * k, 1.0)))?;
        let plane = e2s(IndexSet::new(&(1..=2 * k).collect::<Vec<_>>()))?;
        let value = e2s(sectional_curvature(&r, plane))?;
        let expected = factorial(2 * k) / 2f64.powi(k as i32);
        ensure((value - expected).abs() < 1e-12, || format!("k = {k}: {value} vs {expected}"))?;
        let report = e2s(classify(&r, 1e-8))?;
        let kr = &report.reports[k - 1];
        if k == 1 {
            ensure(kr.flags.anti_thorpe_2k && !kr.flags.thorpe_2k, || "n = 4 is not anti-Thorpe".into())?;
        } else {
            ensure(kr.flags.thorpe_2k && !kr.flags.anti_thorpe_2k, || "n = 8 is not 4-Thorpe".into())?;
        }
        detail.push(format!("K_{} = {value}", 2 * k));
    }
    Ok(format!("{}, S2xH2 anti-Thorpe, S4xH4 4-Thorpe", detail.join(", ")))
}

fn product_battery() -> Outcome {
    for r in 4..=6usize {
        for c in [1.0, 2.0] {
            let n = 2 * r;
            let curv = e2s(realize(&CurvatureModel::sphere_times_hyperbolic(r, c)))?;
            let a = e2s(DoubleForm::from_matrix(
                n,
                &(0..n)
                    .map(|i| (0..n).map(|j| if i != j { 0.0 } else if i < r { c / 2.0 } else { -c / 2.0 }).collect())
                    .collect::<Vec<_>>(),
            ))?;
            let g = e2s(metric_power(n, 1))?;
            let tag = format!("r = {r}, c = {c}");
            ensure(e2s(g.wedge(&a)?.try_sub(&curv))?.max_abs() < 1e-12, || format!("{tag}: R ≠ gA"))?;
            let ca = e2s(a.contract())?.as_scalar().unwrap();
            ensure(ca.abs() < 1e-12, || format!("{tag}: cA = {ca}"))?;
            let aa = e2s(a.compose(&a))?;
            ensure(e2s(aa.try_sub(&g.scaled(c * c / 4.0)))?.max_abs() < 1e-12, || format!("{tag}: A∘A"))?;
            let na = a.norm_sq();
            ensure((na - r as f64 * c * c / 2.0).abs() < 1e-12, || format!("{tag}: ‖A‖² = {na}"))?;
            let h2 = e2s(gauss_bonnet(&curv, 1))?;
            ensure(h2.abs() < 1e-12, || format!("{tag}: h_2 = {h2}"))?;
            let report = e2s(classify(&curv, 1e-8))?;
            let k2 = &report.reports[1];
            ensure(k2.flags.thorpe_2k && !k2.flags.anti_thorpe_2k, || format!("{tag}: not strictly 4-Thorpe"))?;
            if r == 6 {
                ensure(report.reports[2].flags.anti_thorpe_2k, || format!("{tag}: not 6-anti-Thorpe"))?;
            }
        }
    }
    Ok("r = 4, 5, 6 and c = 1, 2".into())
}

fn dimension_four() -> Outcome {
    let r = e2s(realize(&CurvatureModel::ConstantCurvature { n: 4, c: 1.0 }))?;
    let t4 = e2s(lovelock(&r, 2))?.norm();
    ensure(t4 < 1e-10, || format!("‖T_4‖ = {t4}"))?;
    for n in 4..=8 {
        let half = e2s(metric_power(n, 2))?.scaled(0.5);
        let ip = e2s(half.inner(&half))?;
        ensure((ip - binomial(n, 2) as f64).abs() < 1e-10, || format!("⟨g²/2, g²/2⟩ = {ip} at n = {n}"))?;
    }
    let lhs = e2s(r.wedge(&r)?.contract_times(4))?.as_scalar().unwrap() / 24.0;
    let ric = e2s(r.contract())?;
    let scal = e2s(ric.contract())?.as_scalar().unwrap();
    let rhs = r.norm_sq() + 0.25 * scal * scal - ric.norm_sq();
    ensure((lhs - 6.0).abs() < 1e-10 && (rhs - 6.0).abs() < 1e-10, || format!("Avez sides {lhs}, {rhs}"))?;
    Ok(format!("‖T_4‖ = {t4:.1e}, Avez sides {lhs} and {rhs}"))
}

fn decomposition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut round, mut trace, mut ortho) = (0f64, 0f64, 0f64);
    for case in 0..100 {
        let n = 2 + case % 5;
        let p = 1 + (case / 5) % 3.min(n);
        let m = binomial(n, p);
        let raw = e2s(DoubleForm::from_coeffs(n, p, p, (0..m * m).map(|_| rng.random_range(-1.0..=1.0)).collect()))?;
        let w = e2s(raw.symmetrized())?;
        let d = e2s(decompose(&w))?;
        let scale = w.norm().max(1.0);
        round = round.max(e2s(d.reconstruct()?.try_sub(&w))?.norm() / scale);
        let summands: Vec<DoubleForm> = e2s((0..d.components().len()).map(|i| d.summand(i)).collect())?;
        for (i, c) in d.components().iter().enumerate() {
            if i > 0 {
                trace = trace.max(e2s(c.contract())?.norm() / scale);
            }
            for s in &summands[i + 1..] {
                ortho = ortho.max(e2s(summands[i].inner(s))?.abs() / (scale * scale));
            }
        }
    }
    ensure(round < 1e-9 && trace < 1e-9 && ortho < 1e-9, || {
        format!("round trip {round:.2e}, trace {trace:.2e}, orthogonality {ortho:.2e}")
    })?;
    let mut cf = 0f64;
    for n in 4..=8 {
        let a = e2s(random_symmetric_11(n, &mut rng))?;
        let r = e2s(metric_power(n, 1)?.wedge(&a))?;
        let d = e2s(decompose(&r))?;
        cf = cf.max(d.components()[2].norm() / r.norm());
    }
    ensure(cf < 1e-9, || format!("conformally flat ω_2 share {cf:.2e}"))?;
    Ok(format!(
        "100 cases: round trip {round:.1e}, trace {trace:.1e}, orthogonality {ortho:.1e}; conformally flat ω_2 {cf:.1e}"
    ))
}

/// A random orthogonal conjugate of `diag(a × m, b × (n − m))`.
fn rotated_two_eigenvalue(n: usize, m: usize, a: f64, b: f64, rng: &mut impl Rng) -> Result<DoubleForm, Fail> {
    let q = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0)).qr().q();
    let d = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| if i < m { a } else { b }));
    let s = &q * d * q.transpose();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| 0.5 * (s[(i, j)] + s[(j, i)])).collect()).collect();
    e2s(DoubleForm::from_matrix(n, &rows))
}

fn equivalences() -> Outcome {
    let tol = 1e-8;
    let mut checked = 0;
    for (name, model) in corpus() {
        let r = e2s(realize(&model))?;
        let report = classify(&r, tol).map_err(|e| Fail(format!("{name}: {e}")))?;
        for kr in &report.reports {
            if kr.flags.vacuous || kr.flags.degenerate {
                continue;
            }
            let res = &kr.residuals;
            for (label, crit) in [("star", res.star), ("contraction", res.contraction)] {
                let Some(crit) = crit else { continue };
                let agree = (crit.thorpe <= tol) == (res.components.thorpe <= tol)
                    && (crit.anti_thorpe <= tol) == (res.components.anti_thorpe <= tol);
                ensure(agree, || format!("{name}, k = {}: {label} criterion disagrees", kr.k))?;
                checked += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut holds = 0;
    for i in 0..100 {
        let a = if i % 2 == 0 {
            e2s(random_symmetric_11(8, &mut rng))?
        } else {
            let m = 1 + (i / 2) % 7;
            let b: f64 = rng.random_range(0.5..=2.0);
            let a = if m == 1 { rng.random_range(0.5..=2.0) } else { -((7 - m) as f64) * b / (m - 1) as f64 };
            let b = if m == 1 { 0.0 } else { b };
            rotated_two_eigenvalue(8, m, a, b, &mut rng)?
        };
        let e = e2s(conf_flat_equivalences(&a, tol))?;
        let flags = [e.thorpe4, e.einstein4, e.iota_ric, e.schouten];
        ensure(flags.iter().all(|&f| f == flags[0]), || format!("Schouten input {i}: {e:?}"))?;
        holds += flags[0] as usize;
    }
    ensure(holds >= 40, || format!("only {holds} of the structured inputs satisfy the criteria"))?;
    Ok(format!("{checked} criterion pairs over the corpus; 100 Schouten inputs, {holds} 4-Thorpe"))
}

fn constants() -> Outcome {
    let mut detail = Vec::new();
    for (n, p) in [(5, 2), (6, 2), (8, 2), (7, 3), (8, 3)] {
        let base = e2s(derive_c_constant_with(n, p, CProbe::MetricPower { mu: 1.0 }))?;
        let (other, label) = if p % 2 == 0 {
            (e2s(derive_c_constant_with(n, p, CProbe::ConstantCurvature))?, "constant curvature")
        } else {
            // R^k has even degree, so odd p is probed with W + μ g^p / p!.
            (e2s(derive_c_constant_with(n, p, CProbe::TraceFreePlusMetric { seed: 11, mu: 0.8 }))?, "trace-free")
        };
        ensure((base - other).abs() <= 1e-9 * base.abs().max(1.0), || {
            format!("c({n},{p}): g^p probe {base} vs {label} probe {other}")
        })?;
        for seed in 0..10 {
            let case = e2s(check("hyper_identity", &CaseSpec { n, p, seed, inputs: None }))?;
            ensure(case.pass, || format!("hyper_identity fails: {case:?}"))?;
        }
        let mut explicit = vec![e2s(metric_power(n, p))?.scaled(1.7 / factorial(p))];
        if p % 2 == 0 {
            explicit.push(e2s(realize(&CurvatureModel::ConstantCurvature { n, c: -0.6 })?.power(p / 2))?);
        }
        for w in explicit {
            e2s(hyper_lambda(&w))?;
            let case = e2s(check("hyper_identity", &CaseSpec { n, p, seed: 0, inputs: Some(vec![w]) }))?;
            ensure(case.pass, || format!("hyper_identity fails on an explicit input: {case:?}"))?;
        }
        detail.push(format!("c({n},{p}) = {base:.6}"));
    }
    Ok(detail.join(", "))
}

fn implications() -> Outcome {
    let tol = 1e-8;
    let mut counted = 0;
    for (name, model) in corpus() {
        let r = e2s(realize(&model))?;
        let report = e2s(classify(&r, tol))?;
        for kr in &report.reports {
            let f = &kr.flags;
            let tag = format!("{name}, k = {}", kr.k);
            if f.thorpe_2k {
                ensure(f.einstein_2k != Some(false), || format!("{tag}: Thorpe but not Einstein"))?;
            }
            if f.anti_thorpe_2k {
                let scale = r.norm().powi(kr.k as i32).max(1.0);
                ensure(kr.h_2k.abs() < 1e-9 * scale, || format!("{tag}: anti-Thorpe with h = {}", kr.h_2k))?;
            }
            if f.hyper_einstein_2k == Some(true) {
                ensure(f.thorpe_2k && f.einstein_2k == Some(true), || format!("{tag}: hyper but not Thorpe/Einstein"))?;
            }
            counted += 1;
        }
    }
    Ok(format!("{counted} (model, k) reports, no violations"))
}

fn mutation_sensitivity() -> Outcome {
    let cfg = SuiteConfig { n_max: 6, seeds: vec![0, 1], ..SuiteConfig::default() };
    let mut detail = Vec::new();
    for (m, label) in [(Mutation::MergeSignParityDropped, "sign"), (Mutation::ComposeSwapped, "compose order")] {
        let report = e2s(with_mutation(m, || run_suite(&cfg)))?;
        let broken: BTreeSet<&str> =
            report.cases.iter().filter(|c| c.residual_or_inf() > 1e-2).map(|c| c.name.as_str()).collect();
        ensure(broken.len() >= 3, || format!("{label} fault breaks only {broken:?}"))?;
        detail.push(format!("{label} fault breaks {}", broken.len()));
    }
    let clean = e2s(run_suite(&cfg))?;
    ensure(clean.pass, || "suite fails after the faults were lifted".into())?;
    Ok(detail.join(", "))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("identity suite", identity_suite),
        ("variation lemma", variation),
        ("sphere-hyperbolic parity", product_parity),
        ("S^r x H^r battery", product_battery),
        ("dimension four", dimension_four),
        ("decomposition", decomposition),
        ("equivalence agreement", equivalences),
        ("constant derivation", constants),
        ("implications", implications),
        ("mutation sensitivity", mutation_sensitivity),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err(Fail("panicked".into())));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} [{secs:.1} s]", i + 1),
            Err(Fail(msg)) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {msg} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
