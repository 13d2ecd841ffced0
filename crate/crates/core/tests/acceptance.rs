//! Acceptance checks, one line per criterion. Runs as a plain binary so the
//! lines are printed even when everything passes.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_traits::One;

use freeprob::cumulants::{
    cumulants_to_moments, lattice_cumulants, moments_to_cumulants, CumulantSequence, Lattice, MomentSequence,
};
use freeprob::freeconv::{
    free_convolve_analytic, free_convolve_moments, free_poisson, select_flow_parametrization,
    semicircle_flow_residual, AnalyticOptions,
};
use freeprob::measures::NamedLaw;
use freeprob::models::{coloured_nc_pairings, fock_field_moment, generator_sum_power_expectation};
use freeprob::partitions::Permutation;
use freeprob::rmt::{
    cue_weingarten_correlator, freeness_experiment, genus_profile, mc_word_moment, parse_word, rotation_leading_moment,
    weingarten_series, wick_trace_moment, EnsembleKind, EnsembleSpec, ExperimentKind,
};
use freeprob::walks::{kesten_loops, polya_diagnostic, tree_loops_dp};
use freeprob::Rational;

type Outcome = Result<String, String>;

fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn graph_counts() -> Outcome {
    let m: Vec<Rational> = (1..=7u32)
        .map(|n| Rational::from_integer(BigInt::one() << (n * (n - 1) / 2)))
        .collect();
    let m = MomentSequence::new(m).map_err(|e| e.to_string())?;
    let classical = moments_to_cumulants(&m, Lattice::Classical);
    let free = moments_to_cumulants(&m, Lattice::Free);
    let want_c = [1i64, 1, 4, 38, 728, 26704, 1866256];
    let want_f = [1i64, 1, 4, 39, 748, 27162, 1880872];
    check(classical.values() == want_c.map(int), format!("classical {:?}", classical.values()))?;
    check(free.values() == want_f.map(int), format!("free {:?}", free.values()))?;
    Ok("classical and free sequences exact through n = 7".into())
}

fn kesten() -> Outcome {
    let arcsine = MomentSequence::from_integers(&[0, 2, 0, 6, 0, 20, 0, 70]).map_err(|e| e.to_string())?;
    let f = free_convolve_moments(&arcsine, &arcsine).map_err(|e| e.to_string())?;
    let got: Vec<Rational> = (1..=4).map(|k| f.get(2 * k)).collect();
    check(got == [4, 28, 232, 2092].map(int), format!("free convolution gave {got:?}"))?;

    let loops = kesten_loops(2, 16).map_err(|e| e.to_string())?;
    let tree = tree_loops_dp(2, 16).map_err(|e| e.to_string())?;
    check(loops.values == tree, "radial tree DP disagrees")?;
    for n in 0..=16 {
        let word = generator_sum_power_expectation(2, n).map_err(|e| e.to_string())?;
        check(word == Rational::from_integer(BigInt::from(loops.values[n].clone())), format!("word reduction n = {n}"))?;
    }
    Ok(format!("λ(16) = {} by all three routes", loops.values[16]))
}

fn bernoulli_sum() -> Outcome {
    let b = NamedLaw::Bernoulli;
    let res = free_convolve_analytic(&b, &b, &AnalyticOptions::default()).map_err(|e| e.to_string())?;
    let m = res.measure.as_ref().ok_or("no measure recovered")?;
    let worst = (0..=380)
        .map(|i| {
            let t = -1.9 + 0.01 * i as f64;
            (m.density_at(t) - 1.0 / (PI * (4.0 - t * t).sqrt())).abs()
        })
        .fold(0.0, f64::max);
    check(worst <= 2e-2, format!("sup density error {worst:.3e}"))?;
    let exact = b.exact_moments(10).map_err(|e| e.to_string())?.ok_or("no exact moments")?;
    let f = free_convolve_moments(&exact, &exact).map_err(|e| e.to_string())?;
    check(f.values() == [0, 2, 0, 6, 0, 20, 0, 70, 0, 252].map(int), format!("moment route {:?}", f.values()))?;
    Ok(format!("sup density error {worst:.3e}; moments are central binomials"))
}

fn free_poisson_check() -> Outcome {
    let mut mp_err: f64 = 0.0;
    for (lambda, alpha) in [(1.0, 1.0), (2.0, 0.5), (0.5, 1.0), (3.0, 1.5)] {
        let kappa = CumulantSequence::new(
            (1..=6)
                .map(|n| Rational::from_float(lambda * f64::powi(alpha, n)).unwrap())
                .collect(),
            Lattice::Free,
        )
        .map_err(|e| e.to_string())?;
        let exact = cumulants_to_moments(&kappa).to_f64();
        let measure = NamedLaw::MarchenkoPastur { lambda, alpha }.make(4001).map_err(|e| e.to_string())?;
        let numeric = measure.moments(6).map_err(|e| e.to_string())?;
        for (x, y) in numeric.iter().zip(&exact) {
            mp_err = mp_err.max((x - y).abs() / y.abs().max(1.0));
        }
    }
    let m = free_poisson(1.0, 1.0, 1_000_000, 4).map_err(|e| e.to_string())?.to_f64();
    let dev: Vec<f64> = m.iter().zip([1.0, 2.0, 5.0, 14.0]).map(|(x, c)| (x - c).abs()).collect();
    let worst = dev.iter().cloned().fold(0.0, f64::max);
    let detail = format!(
        "N = 10^6 deviations from Catalan {:?} (tolerance 1e-5); MP law vs κ_n = λα^n route {mp_err:.1e}",
        dev.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>()
    );
    check(mp_err <= 1e-3, detail.clone())?;
    // the finite-N moments are Cat_n − c_n/N + O(N⁻²) with c = (0, 1, 6, 28)
    check(worst <= 1e-5, detail.clone())?;
    Ok(detail)
}

fn wick() -> Outcome {
    let w4 = wick_trace_moment(4).map_err(|e| e.to_string())?;
    check(w4.coefficients == [BigUint::from(2u32), BigUint::one()], format!("{w4}"))?;
    check(w4.to_string() == "2 + N^-2", format!("display {w4}"))?;
    let mut cat = 1u64;
    let mut dfact = 1u64;
    for k in 1..=6u64 {
        cat = cat * 2 * (2 * k - 1) / (k + 1);
        dfact *= 2 * k - 1;
        let g = genus_profile(k as usize).map_err(|e| e.to_string())?;
        check(g[0] == BigUint::from(cat), format!("ε₀({}) = {}", 2 * k, g[0]))?;
        check(g.iter().sum::<BigUint>() == BigUint::from(dfact), format!("Σε({})", 2 * k))?;
    }
    Ok("2 + N^-2; profiles sum to (2k−1)!! with ε₀ = Cat_k for k ≤ 6".into())
}

fn weingarten() -> Outcome {
    let swap = Permutation::from_cycles(2, &[&[1, 2]]).map_err(|e| e.to_string())?;
    let w = weingarten_series(&swap, 11).map_err(|e| e.to_string())?;
    for n in [4i64, 10, 50] {
        let v = w.evaluate(n as u64).map_err(|e| e.to_string())?;
        let exact = -1.0 / (n * (n * n - 1)) as f64;
        let resummed = v.resummed.ok_or("coefficient tail not recognised as constant")?;
        let err = (freeprob_f64(&resummed) - exact).abs();
        check(err <= 1e-12, format!("N = {n}: resummed error {err:.1e}"))?;
    }
    let est = cue_weingarten_correlator(&swap, 10, 100_000, 0x5eed, 1).map_err(|e| e.to_string())?;
    let z = est.z_score(-1.0 / 990.0);
    check(z.abs() <= 4.0, format!("CUE Monte Carlo z = {z:.2}"))?;
    let id = cue_weingarten_correlator(&Permutation::identity(1), 10, 100_000, 0x5eed, 1).map_err(|e| e.to_string())?;
    let z1 = id.z_score(0.1);
    check(z1.abs() <= 4.0, format!("CUE Monte Carlo for id, z = {z1:.2}"))?;
    Ok(format!("exact resummation at N ∈ {{4, 10, 50}}; CUE z = {z:.2} (swap), {z1:.2} (id)"))
}

fn freeprob_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

fn asymptotic_freeness() -> Outcome {
    let specs = [
        EnsembleSpec::new(EnsembleKind::Gue, 200, 1).map_err(|e| e.to_string())?,
        EnsembleSpec::new(EnsembleKind::Gue, 200, 2).map_err(|e| e.to_string())?,
    ];
    let word = parse_word("1212").map_err(|e| e.to_string())?;
    let e = mc_word_moment(&specs, &word, 2000, 1).map_err(|e| e.to_string())?;
    check(e.mean.re.abs() <= 4.0 * e.stderr, format!("word 1212: {:.2e} ± {:.2e}", e.mean.re, e.stderr))?;
    let rd = freeness_experiment(&ExperimentKind::RotatedDiagonal, 300, 100, 4, 3, 1).map_err(|e| e.to_string())?;
    let (m2, m4) = (&rd.rows[1], &rd.rows[3]);
    check(m2.predicted == 2.0 && m4.predicted == 6.0, "arcsine predictions")?;
    check(m2.z_score.abs() <= 4.0 && m4.z_score.abs() <= 4.0, format!("rotated diagonal z = {:.2}, {:.2}", m2.z_score, m4.z_score))?;
    Ok(format!(
        "1212: {:.1e} ± {:.1e}; rotated diagonal m2 = {:.5}, m4 = {:.5} (z = {:.2}, {:.2})",
        e.mean.re, e.stderr, m2.empirical.mean.re, m4.empirical.mean.re, m2.z_score, m4.z_score
    ))
}

fn polya() -> Outcome {
    let mut parts = Vec::new();
    for (d, target, tol) in [(1, -0.5, 0.05), (2, -1.0, 0.1), (3, -1.5, 0.1)] {
        let p = polya_diagnostic(d, 2000).map_err(|e| e.to_string())?;
        check((p.fitted_exponent - target).abs() <= tol, format!("d = {d}: exponent {:.4}", p.fitted_exponent))?;
        parts.push(format!("d={d}: {:.4}", p.fitted_exponent));
        if d == 3 {
            check(
                (0.32..=0.35).contains(&p.return_probability),
                format!("d = 3 return probability {:.4}", p.return_probability),
            )?;
            parts.push(format!("F₃ ≈ {:.4}", p.return_probability));
        }
    }
    Ok(parts.join(", "))
}

fn burgers() -> Outcome {
    let z = Complex64::new(0.0, 2.0);
    let sel = select_flow_parametrization(1.0, z, 0.01).map_err(|e| e.to_string())?;
    let point = NamedLaw::Point(0.0);
    let r1 = semicircle_flow_residual(&point, 1.0, z, 0.02, sel.chosen).map_err(|e| e.to_string())?.norm();
    let r2 = semicircle_flow_residual(&point, 1.0, z, 0.01, sel.chosen).map_err(|e| e.to_string())?.norm();
    check(r1 / r2 >= 3.5, format!("ratio {:.3}", r1 / r2))?;
    Ok(format!("{:?} parametrization, residual ratio {:.3}", sel.chosen, r1 / r2))
}

fn invariants() -> Outcome {
    // exact round trips and lattice-sum equivalence
    let m = MomentSequence::from_integers(&[1, 3, -2, 7, 5, 11, 0, 4]).map_err(|e| e.to_string())?;
    for lattice in [Lattice::Classical, Lattice::Free] {
        let k = moments_to_cumulants(&m, lattice);
        check(cumulants_to_moments(&k) == m, format!("{lattice:?} round trip"))?;
        check(lattice_cumulants(&m, lattice).map_err(|e| e.to_string())? == k, format!("{lattice:?} lattice sum"))?;
    }
    // group algebra, tree, Fock oracles
    for d in 1..=3 {
        let loops = kesten_loops(d, 12).map_err(|e| e.to_string())?;
        for n in 0..=12 {
            let w = generator_sum_power_expectation(d, n).map_err(|e| e.to_string())?;
            check(w == Rational::from_integer(BigInt::from(loops.values[n].clone())), format!("d = {d}, n = {n}"))?;
        }
    }
    for len in 0..=8usize {
        for code in 0..1u32 << len {
            let w: Vec<usize> = (0..len).map(|i| (code >> i & 1) as usize).collect();
            let fock = fock_field_moment(&w, 2).map_err(|e| e.to_string())?;
            let count = coloured_nc_pairings(&w).map_err(|e| e.to_string())? as f64;
            check(fock == count, format!("Fock word {w:?}"))?;
        }
    }
    // geodesic dominance at degree 4
    let bern = MomentSequence::from_integers(&[0, 1, 0, 1]).map_err(|e| e.to_string())?;
    let all = rotation_leading_moment(4, &bern, &bern, false).map_err(|e| e.to_string())?;
    let geo = rotation_leading_moment(4, &bern, &bern, true).map_err(|e| e.to_string())?;
    check(all == geo && geo == int(6), format!("order-N⁰ sums {all} vs {geo}"))?;
    // bit-exact parallel reproducibility
    let spec = EnsembleSpec::new(EnsembleKind::Gue, 40, 99).map_err(|e| e.to_string())?;
    let specs = [spec.clone(), EnsembleSpec { seed: 100, ..spec }];
    let word = parse_word("1212").map_err(|e| e.to_string())?;
    let runs = [1, 2, 8]
        .iter()
        .map(|&k| mc_word_moment(&specs, &word, 200, k).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    check(
        runs.iter().all(|r| r.mean.re.to_bits() == runs[0].mean.re.to_bits() && r.stderr.to_bits() == runs[0].stderr.to_bits()),
        "worker counts changed the estimate",
    )?;
    Ok("round trips, lattice sums, oracles, geodesic dominance, reproducibility".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Duration); 10] = [
        ("graph-count recursions", graph_counts, Duration::from_secs(1)),
        ("Kesten d = 2", kesten, Duration::from_secs(10)),
        ("Bernoulli ⊞ Bernoulli", bernoulli_sum, Duration::from_secs(30)),
        ("free Poisson", free_poisson_check, Duration::from_secs(5)),
        ("Wick / genus", wick, Duration::from_secs(5)),
        ("Weingarten", weingarten, Duration::from_secs(120)),
        ("asymptotic freeness", asymptotic_freeness, Duration::from_secs(300)),
        ("Pólya diagnostics", polya, Duration::from_secs(30)),
        ("Burgers residual", burgers, Duration::from_secs(120)),
        ("invariant suites", invariants, Duration::from_secs(300)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > *budget => Err(format!("{msg}; took {elapsed:.1?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} [{elapsed:.2?}]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} [{elapsed:.2?}]", i + 1);
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
