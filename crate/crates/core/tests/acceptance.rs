//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::{LN_10, PI};
use std::time::{Duration, Instant};

use aloha_core::ideal::{
    cdf_interference_lattice, lattice_levels, LatticeLadder, RationalPowerFactor,
};
use aloha_core::numerics::{
    compound_poisson_log_transform, lambert_w0, trapezoid_uniform, QuadratureSpec,
};
use aloha_core::simulator::{confidence_interval, run_experiment, SimConfig, SimMetric};
use aloha_core::steady_state::{solve_with_model, FailureModel};
use aloha_core::wideband::{lognormal_laplace, WidebandKernel, WidebandParams};
use aloha_core::{
    analyze, AnalysisOptions, CaptureRatio, InversionDiagnostics, ProbabilityVector, Scenario,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

const POWER_FACTORS: [f64; 3] = [1.0, 2.0, 0.5];
const CAPTURES_DB: [f64; 3] = [3.0, 0.0, -3.0];
const SIGMAS_DB: [f64; 3] = [0.0, 1.0, 3.0];

struct Verdict {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Verdict {
    fn new(pass: bool, summary: String) -> Self {
        Self {
            pass,
            summary,
            details: Vec::new(),
        }
    }
}

fn alpha_grid() -> Vec<f64> {
    (1..=15).map(|i| i as f64 / 10.0).collect()
}

fn rational(v: f64) -> RationalPowerFactor {
    RationalPowerFactor::from_f64(v).unwrap()
}

fn scenario(alpha: f64, k: usize, v: f64, capture_db: f64, sigma_db: f64) -> Scenario {
    let capture = CaptureRatio::from_db(capture_db).unwrap();
    if sigma_db == 0.0 {
        Scenario::ideal(alpha, k, rational(v), capture).unwrap()
    } else {
        Scenario::wideband(alpha, k, v, capture, sigma_db).unwrap()
    }
}

fn classic(alpha: f64, k: usize) -> Scenario {
    Scenario::ideal(alpha, k, rational(1.0), CaptureRatio::from_linear(2.0).unwrap()).unwrap()
}

fn plr_curve(v: f64, capture_db: f64, sigma_db: f64, alphas: &[f64]) -> Vec<f64> {
    let opts = AnalysisOptions::default();
    let model = FailureModel::for_scenario(&scenario(0.0, 4, v, capture_db, sigma_db), &opts).unwrap();
    alphas
        .iter()
        .map(|&a| solve_with_model(&model, a, 4, &opts).unwrap().p.loss())
        .collect()
}

fn classic_closed_form() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for alpha in [0.1, 0.5, 1.0, 1.5] {
        let m = analyze(&classic(alpha, 0), &AnalysisOptions::default()).unwrap().metrics;
        worst = worst
            .max((m.packet_loss_rate - (1.0 - (-alpha).exp())).abs())
            .max((m.throughput - alpha * (-alpha).exp()).abs());
    }
    let at_half = analyze(&classic(0.5, 0), &AnalysisOptions::default())
        .unwrap()
        .metrics
        .packet_loss_rate;
    let elapsed = start.elapsed();
    Verdict::new(
        worst < 1e-6 && (at_half - 0.393469).abs() < 1e-6 && elapsed < Duration::from_secs(1),
        format!("max error {worst:.2e}, PLR(0.5) = {at_half:.6}, {elapsed:.2?}"),
    )
}

fn scalar_root(alpha: f64) -> f64 {
    let g = |q: f64| q - (1.0 - (-alpha * (0..=4).map(|j| q.powi(j)).sum::<f64>()).exp());
    let (mut lo, mut hi) = (0.0, 1e-3);
    while g(hi) < 0.0 {
        lo = hi;
        hi += 1e-3;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn scalar_oracle() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for alpha in [0.2, 0.6, 1.0] {
        let sol = analyze(&classic(alpha, 4), &AnalysisOptions::default()).unwrap().solution;
        let q = scalar_root(alpha);
        for (k, pk) in sol.p.values().iter().enumerate() {
            worst = worst.max((pk - q.powi(k as i32)).abs());
        }
    }
    let elapsed = start.elapsed();
    Verdict::new(
        worst < 1e-6 && elapsed < Duration::from_secs(1),
        format!("max |P_k - q^k| = {worst:.2e}, {elapsed:.2?}"),
    )
}

fn convergence_grid() -> Verdict {
    let opts = AnalysisOptions::default();
    let start = Instant::now();
    let mut worst = (0, String::new());
    let mut points = 0;
    let mut diag = InversionDiagnostics::default();
    for v in POWER_FACTORS {
        for capture in CAPTURES_DB {
            for sigma in SIGMAS_DB {
                let model =
                    FailureModel::for_scenario(&scenario(0.0, 4, v, capture, sigma), &opts).unwrap();
                for alpha in alpha_grid() {
                    let sol = solve_with_model(&model, alpha, 4, &opts).unwrap();
                    diag.merge(&sol.diagnostics);
                    points += 1;
                    if sol.iterations > worst.0 {
                        worst = (
                            sol.iterations,
                            format!("v={v} T={capture} dB sigma={sigma} dB alpha={alpha}"),
                        );
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let mut verdict = Verdict::new(
        worst.0 <= 30 && elapsed <= Duration::from_secs(60),
        format!(
            "{points} points, max {} iterations ({}), {elapsed:.2?}",
            worst.0, worst.1
        ),
    );
    verdict.details.push(format!(
        "inversion diagnostics: {} truncated integrals (max tail {:.1e}), max clamp drift {:.1e}",
        diag.truncated, diag.max_tail, diag.max_drift
    ));
    verdict
}

fn simulation_agreement() -> Verdict {
    let opts = AnalysisOptions::default();
    let start = Instant::now();
    let mut details = Vec::new();
    let (mut in_band, mut covered_in_band, mut covered_all, mut total) = (0usize, 0usize, 0usize, 0usize);
    let mut q_check = String::new();
    let mut overlap_check = String::new();
    for (i, v) in POWER_FACTORS.into_iter().enumerate() {
        for (j, alpha) in [0.6, 0.8, 1.0].into_iter().enumerate() {
            let s = scenario(alpha, 4, v, 3.0, 1.0);
            let analysis = analyze(&s, &opts).unwrap();
            let plr = analysis.metrics.packet_loss_rate;
            let exp = run_experiment(&SimConfig::new(s, 7_000 + (3 * i + j) as u64)).unwrap();
            let est = exp.estimate(SimMetric::Plr);
            let inside = est.contains(plr);
            let band = (1e-3..=0.5).contains(&plr);
            total += 1;
            covered_all += inside as usize;
            if band {
                in_band += 1;
                covered_in_band += inside as usize;
            }
            details.push(format!(
                "v={v} alpha={alpha}: analytical {plr:.5}, sim {:.5} [{:.5}, {:.5}] {}{}",
                est.mean,
                est.ci_low,
                est.ci_high,
                if inside { "inside" } else { "outside" },
                if band { "" } else { " (outside PLR band)" }
            ));
            if v == 2.0 && alpha == 0.6 {
                q_check = failure_vector_check(&exp.outcomes, analysis.solution.q.values());
            }
            if v == 2.0 && alpha == 0.8 {
                overlap_check = format!(
                    "v=2 alpha=0.8 sim CI overlaps analytical: {}",
                    if inside { "yes" } else { "no" }
                );
            }
        }
    }
    details.push(q_check);
    details.push(overlap_check);
    let elapsed = start.elapsed();
    let required = (8 * in_band).div_ceil(9);
    let mut verdict = Verdict::new(
        covered_in_band >= required && elapsed <= Duration::from_secs(600),
        format!(
            "{covered_in_band}/{in_band} in-band points covered (need {required}), \
             {covered_all}/{total} overall, {elapsed:.2?}"
        ),
    );
    verdict.details = details;
    verdict
}

fn failure_vector_check(
    outcomes: &[aloha_core::simulator::ReplicationOutcome],
    analytical: &[f64],
) -> String {
    let mut parts = Vec::new();
    let mut covered = 0;
    for (k, &qk) in analytical.iter().enumerate() {
        let samples: Option<Vec<f64>> = outcomes.iter().map(|o| o.failure_rates()[k]).collect();
        match samples.map(|s| confidence_interval(&s, 0.95)) {
            Some(Ok((lo, hi))) => {
                let inside = lo <= qk && qk <= hi;
                covered += inside as usize;
                parts.push(format!("Q{k} {qk:.4} in [{lo:.4}, {hi:.4}] {}", if inside { "y" } else { "n" }));
            }
            _ => parts.push(format!("Q{k} {qk:.4} not observed")),
        }
    }
    format!(
        "v=2 alpha=0.6 Q vector inside per-class CI: {covered}/{}: {}",
        analytical.len(),
        parts.join("; ")
    )
}

fn lognormal_quadrature(s: Complex64, var: f64) -> Complex64 {
    let sd = var.sqrt();
    let n = 40_000;
    let h = 28.0 * sd / n as f64;
    let values = (0..=n).map(|i| {
        let x = -14.0 * sd + i as f64 * h;
        (-s * x.exp()).exp() * (-x * x / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
    });
    trapezoid_uniform(h, values).unwrap()
}

fn transform_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2012);
    let mut lambert_worst: f64 = 0.0;
    for _ in 0..1000 {
        let r = 10f64.powf(rng.random_range(-6.0..6.0));
        let z = Complex64::from_polar(r, rng.random_range(-0.499..0.499) * PI);
        let w = lambert_w0(z).unwrap();
        lambert_worst = lambert_worst.max((w * w.exp() - z).norm() / r.max(1.0));
    }

    let one_db = 2.0 * (LN_10 / 10.0).powi(2);
    let mut laplace_ok = true;
    let mut laplace_parts = Vec::new();
    for var in [0.01, one_db, 0.95] {
        let mut worst: f64 = 0.0;
        for s in [0.1, 1.0, 10.0] {
            for dir in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                let arg = dir * s;
                let exact = lognormal_quadrature(arg, var);
                let approx = lognormal_laplace(arg, 0.0, var).unwrap();
                worst = worst.max(((approx - exact) / exact).norm());
            }
        }
        laplace_ok &= worst < 1e-3;
        laplace_parts.push(format!("var {var:.4}: {worst:.2e}"));
    }

    let rate = 0.5;
    let law = Poisson::new(rate).unwrap();
    let counts: Vec<f64> = (0..1_000_000).map(|_| law.sample(&mut rng)).collect();
    let mut compound_worst: f64 = 0.0;
    for s in [0.5, 1.0, 2.0] {
        let empirical = counts.iter().map(|c| (-s * c).exp()).sum::<f64>() / counts.len() as f64;
        let model = compound_poisson_log_transform(rate, Complex64::new((-s).exp(), 0.0))
            .unwrap()
            .exp()
            .re;
        compound_worst = compound_worst.max(((model - empirical) / empirical).abs());
    }

    let mut verdict = Verdict::new(
        lambert_worst <= 1e-10 && laplace_ok && compound_worst < 0.01,
        format!(
            "Lambert residual {lambert_worst:.2e}; lognormal Laplace rel. error {}; \
             compound Poisson rel. error {compound_worst:.2e}",
            laplace_parts.join(", ")
        ),
    );
    verdict.details.push(format!(
        "Lambert-W {}, lognormal Laplace {}, compound Poisson {}",
        pass_word(lambert_worst <= 1e-10),
        pass_word(laplace_ok),
        pass_word(compound_worst < 0.01)
    ));
    verdict
}

fn poisson_pmf(rate: f64, n: usize) -> f64 {
    (1..=n).fold((-rate).exp(), |p, i| p * rate / i as f64)
}

fn enumerated_cdf(x: u64, alpha: f64, p: &ProbabilityVector, ladder: &LatticeLadder) -> f64 {
    let x = x as usize;
    let mut pmf = vec![0.0; x + 1];
    pmf[0] = 1.0;
    for (&pk, &level) in p.transmitting().iter().zip(ladder.levels()) {
        let level = level as usize;
        let next: Vec<f64> = (0..=x)
            .map(|y| {
                (0..=y / level)
                    .map(|n| poisson_pmf(alpha * pk, n) * pmf[y - n * level])
                    .sum()
            })
            .collect();
        pmf = next;
    }
    pmf.iter().sum()
}

fn inversion_robustness() -> Verdict {
    let opts = AnalysisOptions::default();
    let mut eta_worst: f64 = 0.0;
    let mut wide_monotone = true;
    for sigma in [1.0, 3.0] {
        for v in POWER_FACTORS {
            for capture in CAPTURES_DB {
                let model = FailureModel::for_scenario(&scenario(0.0, 4, v, capture, sigma), &opts)
                    .unwrap();
                let points: Vec<ProbabilityVector> = [0.4, 0.8, 1.2]
                    .iter()
                    .map(|&a| solve_with_model(&model, a, 4, &opts).unwrap().p)
                    .collect();
                let x = 1.0 / CaptureRatio::from_db(capture).unwrap().linear();
                let kernels: Vec<WidebandKernel> = [0.5, 1.0, 2.0]
                    .iter()
                    .map(|&eta| {
                        let prm =
                            WidebandParams::new(sigma, eta, QuadratureSpec::wideband_default()).unwrap();
                        WidebandKernel::new(4, v, &prm, x).unwrap()
                    })
                    .collect();
                for (p, alpha) in points.iter().zip([0.4, 0.8, 1.2]) {
                    for k in 0..=4 {
                        let f: Vec<f64> = kernels
                            .iter()
                            .map(|kern| {
                                let mut d = InversionDiagnostics::default();
                                kern.cdf(k, alpha, p.transmitting(), &mut d).unwrap().raw
                            })
                            .collect();
                        let spread = f.iter().cloned().fold(f64::MIN, f64::max)
                            - f.iter().cloned().fold(f64::MAX, f64::min);
                        eta_worst = eta_worst.max(spread);
                    }
                }
                if capture == 0.0 {
                    let prm = WidebandParams::with_sigma(sigma).unwrap();
                    let p = &points[1];
                    for k in [0, 4] {
                        let mut prev = 0.0;
                        for i in 0..50 {
                            let xi = 0.05 * 200f64.powf(i as f64 / 49.0);
                            let kern = WidebandKernel::new(4, v, &prm, xi).unwrap();
                            let mut d = InversionDiagnostics::default();
                            let f = kern.cdf(k, 0.8, p.transmitting(), &mut d).unwrap().probability;
                            wide_monotone &= (0.0..=1.0).contains(&f) && prev <= f + 1e-6;
                            prev = f;
                        }
                    }
                }
            }
        }
    }

    let quad = QuadratureSpec::lattice_default();
    let mut lattice_worst: f64 = 0.0;
    let mut lattice_monotone = true;
    let shapes = [
        vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        vec![1.0, 0.7, 0.42, 0.21, 0.084, 0.0252],
        vec![1.0, 0.9, 0.72, 0.504, 0.3024, 0.1512],
    ];
    for (l, m) in [(1, 1), (2, 1), (1, 2)] {
        let ladder = lattice_levels(RationalPowerFactor::new(l, m).unwrap(), 4).unwrap();
        for values in &shapes {
            let p = ProbabilityVector::new(values.clone()).unwrap();
            for alpha in [0.3, 0.8, 1.4] {
                let mut prev = 0.0;
                for x in 0..=64u64 {
                    let f = cdf_interference_lattice(x, alpha, &p, &ladder, &quad).unwrap().probability;
                    lattice_monotone &= (0.0..=1.0).contains(&f) && prev <= f + 1e-9;
                    prev = f;
                    if x <= 40 {
                        lattice_worst = lattice_worst.max((f - enumerated_cdf(x, alpha, &p, &ladder)).abs());
                    }
                }
            }
        }
    }
    Verdict::new(
        eta_worst <= 1e-4 && lattice_worst <= 1e-8 && wide_monotone && lattice_monotone,
        format!(
            "damping spread {eta_worst:.2e}; lattice vs enumeration {lattice_worst:.2e}; \
             monotone and bounded: wide-band {wide_monotone}, lattice {lattice_monotone}"
        ),
    )
}

fn qualitative_findings() -> Verdict {
    let alphas = alpha_grid();
    let ideal = plr_curve(1.0, 3.0, 0.0, &alphas);
    let one_db = plr_curve(1.0, 3.0, 1.0, &alphas);
    let (worst, at) = ideal
        .iter()
        .zip(&one_db)
        .zip(&alphas)
        .map(|((a, b), &al)| ((a - b).abs(), al))
        .fold((0.0, 0.0), |acc, x| if x.0 > acc.0 { x } else { acc });
    let superposed = worst <= 5e-3;

    let mut ordered = true;
    let mut parts = Vec::new();
    for v in POWER_FACTORS {
        let precise = plr_curve(v, -3.0, 1.0, &[0.8])[0];
        let coarse = plr_curve(v, -3.0, 3.0, &[0.8])[0];
        ordered &= precise < coarse;
        parts.push(format!("v={v}: {precise:.3e} < {coarse:.3e}"));
    }
    let mut verdict = Verdict::new(
        superposed && ordered,
        format!(
            "3 dB, v=1: max |PLR(1 dB) - PLR(0 dB)| = {worst:.2e} at alpha={at}; \
             -3 dB, alpha=0.8: {}",
            parts.join(", ")
        ),
    );
    verdict.details.push(format!(
        "superposition {}, precise control better {}",
        pass_word(superposed),
        pass_word(ordered)
    ));
    for ((a, b), al) in ideal.iter().zip(&one_db).zip(&alphas) {
        if (a - b).abs() > 5e-3 {
            verdict
                .details
                .push(format!("alpha={al}: sigma 0 dB {a:.4}, sigma 1 dB {b:.4}"));
        }
    }
    verdict
}

fn pass_word(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 7] = [
        ("classic slotted ALOHA closed form", classic_closed_form),
        ("multi-retransmission scalar oracle", scalar_oracle),
        ("convergence over the full grid", convergence_grid),
        ("analytical/simulation agreement", simulation_agreement),
        ("transform correctness", transform_correctness),
        ("inversion robustness", inversion_robustness),
        ("qualitative findings", qualitative_findings),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let verdict = run();
        println!("[{}] {}. {name}: {}", pass_word(verdict.pass), i + 1, verdict.summary);
        for line in &verdict.details {
            println!("       {line}");
        }
        if !verdict.pass {
            failed.push(i + 1);
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed.len(),
        criteria.len()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
