//! Acceptance checks, one line per criterion. Exits non-zero if any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fairalloc::certificates::ThresholdFamily;
use fairalloc::{
    availability, chernoff_delta, estimate_expected_min, exact_lower_deviation, fairness,
    max_utilization, mc_check, mean_weighted, min_parameter_threshold, pof, scenario_certificate,
    theoretical_bounds, utilization, Allocation, CertificateMethod, DemandDistribution,
    OptimizerSettings, Scenario,
};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

type Check = fn() -> Result<Outcome, String>;

fn scenario(r: f64, dists: Vec<DemandDistribution>) -> Scenario {
    Scenario::from_distributions(r, dists).expect("valid scenario")
}

fn constants(r: f64) -> Scenario {
    scenario(
        r,
        vec![
            DemandDistribution::constant(10.0).unwrap(),
            DemandDistribution::constant(30.0).unwrap(),
        ],
    )
}

fn bound_suite() -> Vec<(&'static str, Vec<DemandDistribution>)> {
    vec![
        (
            "poisson(200,400,400)",
            [200.0, 400.0, 400.0]
                .map(|l| DemandDistribution::poisson(l).unwrap())
                .to_vec(),
        ),
        (
            "binomial((1000,.3),(2000,.5),(1500,.4))",
            vec![
                DemandDistribution::binomial(1000, 0.3).unwrap(),
                DemandDistribution::binomial(2000, 0.5).unwrap(),
                DemandDistribution::binomial(1500, 0.4).unwrap(),
            ],
        ),
    ]
}

const RATIOS: [f64; 5] = [0.5, 0.85, 0.9, 1.0, 1.2];
const EPSILON: f64 = 0.1;

fn timed(limit: Option<Duration>, elapsed: Duration, mut out: Outcome) -> Outcome {
    if let Some(limit) = limit {
        out.detail = format!(
            "{}; {:.3}s (limit {}s)",
            out.detail,
            elapsed.as_secs_f64(),
            limit.as_secs_f64()
        );
        out.pass &= elapsed < limit;
    } else {
        out.detail = format!("{}; {:.3}s", out.detail, elapsed.as_secs_f64());
    }
    out
}

fn ac1() -> Result<Outcome, String> {
    let settings = OptimizerSettings::default();
    let mut worst_pof = 0.0f64;
    let mut worst_q = 0.0f64;
    for r in [20.0, 40.0, 60.0] {
        let s = constants(r);
        let res = pof(&s, 0.0, &settings, None).map_err(|e| e.to_string())?;
        worst_pof = worst_pof.max((res.pof - 1.0).abs());
        worst_q = worst_q.max(
            fairness(&s, &mean_weighted(&s))
                .map_err(|e| e.to_string())?
                .abs(),
        );
    }
    Ok(Outcome::new(
        worst_pof <= 1e-9 && worst_q <= 1e-12,
        format!("max |pof-1| = {worst_pof:.3e} (tol 1e-9), max Q(mean_weighted) = {worst_q:.3e} (tol 1e-12)"),
    ))
}

fn ac2() -> Result<Outcome, String> {
    let d = DemandDistribution::two_point(10.0).unwrap();
    let q = availability(&d, 5.0).map_err(|e| e.to_string())?;
    let s = scenario(5.0, vec![d]);
    let u = utilization(&s, &mean_weighted(&s)).map_err(|e| e.to_string())?;
    Ok(Outcome::new(
        q == 0.5 && u == 0.5,
        format!("availability = {q}, utilization = {u} (exact 0.5)"),
    ))
}

struct SuitePoint {
    label: String,
    q: f64,
    u: f64,
    bounds: fairalloc::TheoreticalBounds,
}

fn suite_points() -> Result<Vec<SuitePoint>, String> {
    let mut out = Vec::new();
    for (name, dists) in bound_suite() {
        let base = scenario(1.0, dists);
        let z = base.total_mean();
        for ratio in RATIOS {
            let s = base.with_resource(ratio * z).map_err(|e| e.to_string())?;
            let cert = scenario_certificate(&s, EPSILON, CertificateMethod::ExactCdf)
                .map_err(|e| e.to_string())?;
            let a = mean_weighted(&s);
            out.push(SuitePoint {
                label: format!("{name} R/Z={ratio}"),
                q: fairness(&s, &a).map_err(|e| e.to_string())?,
                u: utilization(&s, &a).map_err(|e| e.to_string())?,
                bounds: theoretical_bounds(&cert, &s, None),
            });
        }
    }
    Ok(out)
}

fn ac3() -> Result<Outcome, String> {
    let points = suite_points()?;
    let mut failures = Vec::new();
    let mut low = 0;
    let mut min_margin = f64::INFINITY;
    for p in &points {
        min_margin = min_margin.min(p.bounds.fairness_bound - p.q);
        if p.q > p.bounds.fairness_bound {
            failures.push(format!(
                "{}: Q={} > {}",
                p.label, p.q, p.bounds.fairness_bound
            ));
        }
        if let Some(b) = p.bounds.fairness_bound_low_resource {
            low += 1;
            min_margin = min_margin.min(b - p.q);
            if p.q > b {
                failures.push(format!("{}: Q={} > (1-eps)delta={}", p.label, p.q, b));
            }
        }
    }
    Ok(Outcome::new(
        failures.is_empty() && low == 6,
        if failures.is_empty() {
            format!(
                "{} points, {low} low-resource; smallest margin {min_margin:.3e}",
                points.len()
            )
        } else {
            failures.join("; ")
        },
    ))
}

fn ac4() -> Result<Outcome, String> {
    let points = suite_points()?;
    let mut failures = Vec::new();
    let mut min_margin = f64::INFINITY;
    for p in &points {
        min_margin = min_margin.min(p.u - p.bounds.utilization_bound);
        if p.u < p.bounds.utilization_bound {
            failures.push(format!(
                "{}: U={} < {}",
                p.label, p.u, p.bounds.utilization_bound
            ));
        }
        if let Some(b) = p.bounds.utilization_bound_low_resource {
            min_margin = min_margin.min(p.u - b);
            if p.u < b {
                failures.push(format!("{}: U={} < (1-delta)R={}", p.label, p.u, b));
            }
        }
    }
    Ok(Outcome::new(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} points; smallest margin {min_margin:.3e}", points.len())
        } else {
            failures.join("; ")
        },
    ))
}

fn ac5() -> Result<Outcome, String> {
    const ALPHA: f64 = 0.25;
    const SLACK: f64 = 1e-3;
    let settings = OptimizerSettings::default();
    let (_, dists) = bound_suite().remove(0);
    let base = scenario(1.0, dists);
    let z = base.total_mean();
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let mut max_delta = 0.0f64;
    for ratio in RATIOS {
        let s = base.with_resource(ratio * z).map_err(|e| e.to_string())?;
        let cert = scenario_certificate(&s, EPSILON, CertificateMethod::ExactCdf)
            .map_err(|e| e.to_string())?;
        max_delta = max_delta.max(cert.delta);
        let res = pof(&s, ALPHA, &settings, Some(&cert)).map_err(|e| e.to_string())?;
        worst = worst.max(res.pof);
        let small = res.bound_1_plus_2alpha.unwrap_or(f64::NAN);
        if !(res.pof <= 1.0 / (1.0 - ALPHA) + SLACK && res.pof <= small + SLACK) {
            failures.push(format!("R/Z={ratio}: pof={}", res.pof));
        }
    }
    let premise = EPSILON + max_delta <= ALPHA && max_delta < 0.15;
    Ok(Outcome::new(
        failures.is_empty() && premise,
        format!(
            "max pof = {worst:.6} vs 1/(1-a) = {:.6}, 1+2a = {:.6} (slack 1e-3); exact delta = {max_delta:.4}{}",
            1.0 / (1.0 - ALPHA),
            1.0 + 2.0 * ALPHA,
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    ))
}

fn ac6() -> Result<Outcome, String> {
    let t = min_parameter_threshold(ThresholdFamily::Binomial { p: 0.5 }, 0.1, 0.01)
        .map_err(|e| e.to_string())?;
    let at = chernoff_delta(&DemandDistribution::binomial(1843, 0.5).unwrap(), 0.1)
        .map_err(|e| e.to_string())?;
    let below = chernoff_delta(&DemandDistribution::binomial(1842, 0.5).unwrap(), 0.1)
        .map_err(|e| e.to_string())?;
    let families: [(&str, DemandDistribution); 3] = [
        (
            "binomial(1000,0.3)",
            DemandDistribution::binomial(1000, 0.3).unwrap(),
        ),
        ("poisson(200)", DemandDistribution::poisson(200.0).unwrap()),
        (
            "normal(100,10)",
            DemandDistribution::normal(100.0, 10.0).unwrap(),
        ),
    ];
    let mut violations = Vec::new();
    let mut points = 0;
    for (name, d) in &families {
        for i in 0..30 {
            let eps = 0.01 + 0.03 * i as f64;
            let exact = exact_lower_deviation(d, eps).map_err(|e| e.to_string())?;
            let bound = chernoff_delta(d, eps).map_err(|e| e.to_string())?;
            points += 1;
            if bound < exact {
                violations.push(format!("{name} eps={eps:.2}: {bound:e} < {exact:e}"));
            }
        }
    }
    Ok(Outcome::new(
        t == 1843.0 && at <= 0.01 && below > 0.01 && violations.is_empty(),
        format!(
            "threshold = {t}; delta(1843) = {at:.6}, delta(1842) = {below:.6}; chernoff >= exact on {points} grid points{}",
            if violations.is_empty() { String::new() } else { format!("; {}", violations.join("; ")) }
        ),
    ))
}

fn ac7() -> Result<Outcome, String> {
    const SAMPLES: u64 = 1_000_000;
    let laws = [
        (
            "binomial(1000,0.5)",
            DemandDistribution::binomial(1000, 0.5).unwrap(),
        ),
        ("poisson(400)", DemandDistribution::poisson(400.0).unwrap()),
        (
            "normal(100,10)",
            DemandDistribution::normal(100.0, 10.0).unwrap(),
        ),
    ];
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let mut exact_se = 0;
    for (name, d) in &laws {
        for f in [0.5, 0.9, 1.0, 1.1] {
            let v = f * d.mean();
            let s = scenario(v, vec![d.clone()]);
            let a = Allocation::new(&s, vec![v]).map_err(|e| e.to_string())?;
            let est = estimate_expected_min(d, v, SAMPLES, 42).map_err(|e| e.to_string())?;
            if est.standard_error == 0.0 {
                exact_se += 1;
            }
            for row in mc_check(&s, &a, SAMPLES, 42).map_err(|e| e.to_string())? {
                if row.quantity == "utilization" {
                    continue;
                }
                worst = worst.max(row.z_score.abs());
                if !row.pass {
                    failures.push(format!("{name} v={v}: {} z={}", row.quantity, row.z_score));
                }
            }
        }
    }
    Ok(Outcome::new(
        failures.is_empty(),
        format!(
            "24 comparisons, max |z| = {worst:.3} (limit 4); {exact_se} with zero sample spread used the exact SE{}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    ))
}

fn ac8() -> Result<Outcome, String> {
    let settings = OptimizerSettings::default();
    let s = scenario(
        500.0,
        [200.0, 400.0, 400.0]
            .map(|l| DemandDistribution::poisson(l).unwrap())
            .to_vec(),
    );
    let best = max_utilization(&s, &settings).map_err(|e| e.to_string())?;
    let survivals: Vec<f64> = s
        .distributions()
        .zip(best.values())
        .map(|(d, &v)| d.survival(v))
        .collect();
    let spread = survivals.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - survivals.iter().copied().fold(f64::INFINITY, f64::min);
    let u_best = utilization(&s, &best).map_err(|e| e.to_string())?;
    let u_mw = utilization(&s, &mean_weighted(&s)).map_err(|e| e.to_string())?;

    let e = scenario(
        21.0,
        vec![
            DemandDistribution::exponential(10.0).unwrap(),
            DemandDistribution::exponential(25.0).unwrap(),
        ],
    );
    let ea = max_utilization(&e, &settings).map_err(|e| e.to_string())?;
    let ev = ea.values();
    let err = (ev[0] - 6.0).abs().max((ev[1] - 15.0).abs());
    let es: Vec<f64> = e
        .distributions()
        .zip(ev)
        .map(|(d, &v)| d.survival(v))
        .collect();
    let surv_gap = (es[0] - es[1]).abs();
    Ok(Outcome::new(
        spread <= 1e-3 && u_best >= u_mw && err <= 1e-6 && surv_gap <= 1e-9,
        format!(
            "poisson survival spread = {spread:.3e} (tol 1e-3), U_max = {u_best:.6} >= U_mw = {u_mw:.6}; \
             exponential allocation = ({:.9}, {:.9}) err {err:.2e} (tol 1e-6), survival gap {surv_gap:.2e}",
            ev[0], ev[1]
        ),
    ))
}

fn ac9() -> Result<Outcome, String> {
    let settings = OptimizerSettings::default();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for r in [10.0, 21.0, 35.0] {
        let s = scenario(
            r,
            vec![
                DemandDistribution::exponential(10.0).unwrap(),
                DemandDistribution::exponential(25.0).unwrap(),
            ],
        );
        let a = max_utilization(&s, &settings).map_err(|e| e.to_string())?;
        let q = fairness(&s, &a).map_err(|e| e.to_string())?;
        worst = worst.max(q);
        parts.push(format!("R={r}: Q={q:.2e}"));
    }
    Ok(Outcome::new(
        worst <= 1e-6,
        format!("{} (tol 1e-6)", parts.join(", ")),
    ))
}

fn ac10() -> Result<Outcome, String> {
    let settings = OptimizerSettings::default();
    let s = scenario(
        200.0,
        vec![
            DemandDistribution::poisson(50.0).unwrap(),
            DemandDistribution::poisson(200.0).unwrap(),
        ],
    );
    let (d1, d2) = (&s.groups()[0].distribution, &s.groups()[1].distribution);
    let r = s.resource();
    // Brute force over v1 on a 1e-3 grid.
    let steps = (r / 1e-3).round() as usize;
    let grid: Vec<(f64, f64)> = (0..=steps)
        .map(|i| {
            let v1 = i as f64 * 1e-3;
            let v2 = r - v1;
            let m1 = d1.expected_min(v1).unwrap();
            let m2 = d2.expected_min(v2).unwrap();
            ((m1 / d1.mean() - m2 / d2.mean()).abs(), m1 + m2)
        })
        .collect();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for alpha in [0.01, 0.05, 0.2] {
        let brute = grid
            .iter()
            .filter(|(q, _)| *q <= alpha)
            .map(|&(_, u)| u)
            .fold(f64::NEG_INFINITY, f64::max);
        let got = fairalloc::alpha_fair_optimal(&s, alpha, &settings).map_err(|e| e.to_string())?;
        let u = utilization(&s, &got).map_err(|e| e.to_string())?;
        let q = fairness(&s, &got).map_err(|e| e.to_string())?;
        worst = worst.max((u - brute).abs());
        parts.push(format!("a={alpha}: U={u:.6} brute={brute:.6} Q={q:.4}"));
    }
    Ok(Outcome::new(
        worst <= 1e-3,
        format!("{}; max |diff| = {worst:.2e} (tol 1e-3)", parts.join(", ")),
    ))
}

fn ac11() -> Result<Outcome, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("curve.json");
    std::fs::write(
        &path,
        r#"{"resource": 200, "groups": [
            {"name": "constant", "distribution": {"kind": "constant", "value": 100}},
            {"name": "normal", "distribution": {"kind": "normal", "mu": 100, "sigma": 10}}
        ]}"#,
    )
    .map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_fairalloc"))
        .args(["curve", "--v-max", "200", "--steps", "201", "--scenario"])
        .arg(&path)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Ok(Outcome::new(
            false,
            format!(
                "curve exited with {}: {}",
                out.status,
                String::from_utf8_lossy(&out.stderr)
            ),
        ));
    }
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(format!("no {name} column"))
    };
    let (gc, vc, qc) = (col("group")?, col("v")?, col("availability")?);
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let g = rec[gc].to_string();
        let point = (
            rec[vc].parse::<f64>().map_err(|e| e.to_string())?,
            rec[qc].parse::<f64>().map_err(|e| e.to_string())?,
        );
        match series.iter_mut().find(|(name, _)| *name == g) {
            Some((_, pts)) => pts.push(point),
            None => series.push((g, vec![point])),
        }
    }
    let mut ok = series.len() == 2;
    let mut parts = Vec::new();
    for (name, pts) in &series {
        let monotone = pts.windows(2).all(|w| w[1].1 >= w[0].1);
        let last = pts.last().map(|p| p.1).unwrap_or(f64::NAN);
        let end_ok = match name.as_str() {
            "constant" => (last - 1.0).abs() <= 1e-9,
            _ => last >= 0.999,
        };
        ok &= monotone
            && end_ok
            && pts.len() == 201
            && pts.first().map(|p| p.0) == Some(0.0)
            && pts.last().map(|p| p.0) == Some(200.0);
        parts.push(format!(
            "{name}: {} rows, nondecreasing={monotone}, q(200)={last:.12}",
            pts.len()
        ));
    }
    Ok(Outcome::new(ok, parts.join("; ")))
}

fn main() -> ExitCode {
    let checks: [(&str, &str, Check, Option<f64>); 11] = [
        ("AC1", "constant-demand PoF", ac1, Some(0.1)),
        ("AC2", "two-point availability", ac2, None),
        ("AC3", "fairness bound suite", ac3, Some(1.0)),
        ("AC4", "utilization bound suite", ac4, None),
        ("AC5", "PoF bounds", ac5, Some(5.0)),
        ("AC6", "Chernoff thresholds", ac6, None),
        ("AC7", "Monte Carlo oracle", ac7, Some(10.0)),
        ("AC8", "water-filling KKT", ac8, None),
        ("AC9", "exponential max-utilization is 0-fair", ac9, None),
        ("AC10", "alpha-fair optimizer oracle", ac10, Some(30.0)),
        ("AC11", "curve emission", ac11, None),
    ];
    let mut failed = 0;
    for (id, name, check, limit) in checks {
        let start = Instant::now();
        let outcome = check().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        let outcome = timed(limit.map(Duration::from_secs_f64), start.elapsed(), outcome);
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "{} {id} {name}: {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
