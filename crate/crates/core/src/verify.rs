//! Cross-oracle invariant suite behind the CLI `verify` subcommand.
//!
//! Every module's documented invariants run against the supplied spec and
//! holding function, plus a structurally different reference spec where a
//! comparison is needed. All randomness derives from the given master
//! seed, so a report is reproducible byte for byte.

use crate::area;
use crate::error::Result;
use crate::exponent::{JumpDistribution, LaplaceExponent, ProcessSpec};
use crate::holding::HoldingFunction;
use crate::inventory::{multiclass_cost, multiclass_linear, CostModel, OrderDecision};
use crate::inversion::{inverse_derivs_at_zero, SeriesCoeffs};
use crate::sim::{self, EstimateRequest};
use crate::stats;

/// Outcome of one invariant check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    fn push(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(CheckResult { name: name.to_string(), pass, detail });
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }
}

/// A fixed spec that differs structurally from most user configs, for the
/// process-independence comparisons.
fn reference_spec(avoid: &ProcessSpec) -> ProcessSpec {
    let det = ProcessSpec::new(-1.0, 0.0, 0.5, Some(JumpDistribution::Deterministic { size: 1.0 }));
    if *avoid == det {
        ProcessSpec::new(-1.0, 0.0, 1.0, Some(JumpDistribution::Exponential { rate: 2.0 }))
    } else {
        det
    }
}

/// Run the whole suite. Errors surface only for an unusable config; every
/// invariant failure is reported as a failing check instead.
pub fn run_all(spec: &ProcessSpec, h: &HoldingFunction, seed: u64) -> Result<VerifyReport> {
    spec.validate()?;
    h.validate()?;
    let exp = LaplaceExponent::build(spec.clone(), 12)?;
    let mut rep = VerifyReport::default();

    check_exponent(&mut rep, &exp)?;
    check_inversion(&mut rep, &exp)?;
    check_area(&mut rep, &exp, h)?;
    check_sim(&mut rep, &exp, h, seed)?;
    check_inventory(&mut rep, &exp, h)?;
    Ok(rep)
}

fn check_exponent(rep: &mut VerifyReport, exp: &LaplaceExponent) -> Result<()> {
    let scale = exp.phi_prime0();

    let mut worst = 0.0f64;
    let mut monotone = true;
    let mut prev = -1.0;
    for k in -6..=6 {
        let theta = 10f64.powi(k) * scale;
        let a = exp.phi_inverse(theta)?;
        worst = worst.max((exp.phi(a)? - theta).abs() / theta.max(1.0));
        monotone &= a > prev;
        prev = a;
    }
    rep.push("exponent/inverse_round_trip", worst <= 1e-9, format!("max rel residual {worst:.3e}"));
    rep.push("exponent/inverse_monotone", monotone, "strictly increasing on log grid".into());

    // derivative table against central finite differences at zero (the
    // catalog transforms extend analytically across the origin); orders
    // whose exact value is zero (pure Brownian specs) check absolutely
    // against the table's overall scale instead
    let table_scale = exp.deriv0()[..4].iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let mut worst = 0.0f64;
    for n in 1..=4u32 {
        let fd = stats::cd_derivative_at_zero(|a| exp.phi_any(a), n, scale.min(1.0));
        let exact = exp.deriv0()[n as usize - 1];
        let denom = if exact.abs() > 1e-8 * table_scale { exact.abs() } else { table_scale };
        worst = worst.max((fd - exact).abs() / denom);
    }
    rep.push("exponent/deriv0_finite_difference", worst <= 1e-5, format!("max rel error {worst:.3e} (orders 1-4)"));

    let mut convex = true;
    let grid: Vec<f64> = (0..=60).map(|k| 1000.0 * k as f64 / 60.0).collect();
    for w in grid.windows(3) {
        let (p1, p2, p3) = (exp.phi(w[0])?, exp.phi(w[1])?, exp.phi(w[2])?);
        let chord = p1 + (p3 - p1) * (w[1] - w[0]) / (w[2] - w[0]);
        convex &= p2 <= chord + 1e-9 * chord.abs().max(1.0);
    }
    rep.push("exponent/convexity_chord", convex, "phi convex on [0, 1000]".into());

    // complete monotonicity of the T_x transform exp(-phi^{-1}(theta) x)
    let x = 1.0;
    let f = |theta: f64| (-exp.phi_inverse(theta).unwrap() * x).exp();
    let step = 0.2 * scale;
    let mut cm_ok = true;
    for order in 1..=4u32 {
        for base in 0..6 {
            let t0 = base as f64 * step;
            let mut acc = 0.0;
            let mut binom = 1.0f64;
            for k in 0..=order {
                let sign = if (order - k) % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * binom * f(t0 + k as f64 * step);
                binom *= (order - k) as f64 / (k + 1) as f64;
            }
            // (-1)^order * forward difference must be non-negative
            let signed = if order % 2 == 0 { acc } else { -acc };
            cm_ok &= signed >= -1e-10;
        }
    }
    rep.push("exponent/hitting_lst_completely_monotone", cm_ok, "alternating differences to order 4".into());
    Ok(())
}

fn check_inversion(rep: &mut VerifyReport, exp: &LaplaceExponent) -> Result<()> {
    let sc = SeriesCoeffs::from_exponent(exp, 12)?;
    let resid = sc.composition_residual();
    rep.push("inversion/composition_identity", resid <= 1e-9, format!("residual {resid:.3e} at order 12"));

    let back = crate::inversion::revert_series(&sc.b, 12)?;
    let mut worst = 0.0f64;
    for (orig, rec) in sc.a.iter().zip(back) {
        worst = worst.max((orig - rec).abs() / orig.abs().max(1.0));
    }
    rep.push("inversion/round_trip", worst <= 1e-9, format!("max rel drift {worst:.3e}"));

    let derivs = inverse_derivs_at_zero(exp, 12)?;
    let signs_ok = derivs
        .iter()
        .enumerate()
        .all(|(i, &d)| (if i % 2 == 0 { d } else { -d }) >= -1e-9 * d.abs().max(1.0));
    rep.push("inversion/subordinator_sign_pattern", signs_ok, "(-1)^{k-1} derivs non-negative".into());

    // numerical differentiation of the inverse at zero, orders 1..4; the
    // local inverse continues analytically through the origin
    let dscale = derivs[..4].iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let mut worst = 0.0f64;
    for n in 1..=4u32 {
        let fd = stats::cd_derivative_at_zero(
            |t| exp.phi_inverse_any(t),
            n,
            0.5 * exp.phi_prime0(),
        );
        let exact = derivs[n as usize - 1];
        let denom = if exact.abs() > 1e-8 * dscale { exact.abs() } else { dscale };
        worst = worst.max((fd - exact).abs() / denom);
    }
    rep.push("inversion/matches_numeric_inverse_derivs", worst <= 1e-4, format!("max rel error {worst:.3e} (orders 1-4)"));
    Ok(())
}

fn check_area(rep: &mut VerifyReport, exp: &LaplaceExponent, h: &HoldingFunction) -> Result<()> {
    let x = 1.0;

    let mut valid = true;
    let mut prev = 1.0 + 1e-15;
    for k in 0..=20 {
        let a = k as f64 * 0.4;
        let v = area::lst_area(exp, h, x, a)?;
        valid &= v > 0.0 && v <= 1.0 && v <= prev + 1e-12;
        prev = v;
    }
    rep.push("area/lst_valid_and_monotone", valid, "values in (0,1], nonincreasing".into());

    let table = area::moments_area(exp, h, x, 2)?;
    let mean = area::mean_area(exp, h, x)?;
    let var = area::var_area(exp, h, x)?;
    let mean_ok = (table.mean() - mean).abs() <= 1e-10 * mean.abs().max(1.0);
    let var_ok = (table.variance() - var).abs() <= 1e-10 * var.abs().max(1.0);
    rep.push("area/moments_match_closed_forms", mean_ok && var_ok, format!("mu1 {:.6e} vs {:.6e}; var {:.6e} vs {:.6e}", table.mean(), mean, table.variance(), var));

    // transform derivative consistency at 0 (forward differences, one
    // Richardson level)
    let f = |a: f64| area::lst_area(exp, h, x, a).unwrap();
    let s = 2e-3 / mean.max(0.1);
    let d1 = |s: f64| (f(s) - f(0.0)) / s;
    let r1 = -(2.0 * d1(s / 2.0) - d1(s));
    let d2 = |s: f64| (f(2.0 * s) - 2.0 * f(s) + f(0.0)) / (s * s);
    let r2 = 2.0 * d2(s / 2.0) - d2(s);
    let d1_ok = (r1 - mean).abs() <= 1e-4 * mean.abs().max(1e-12);
    let d2_ok = (r2 - table.mu[2]).abs() <= 1e-3 * table.mu[2].abs().max(1e-12);
    rep.push("area/transform_derivative_consistency", d1_ok && d2_ok, format!("-f'(0) -> {r1:.6e} (mean {mean:.6e}); f''(0) -> {r2:.6e} (mu2 {:.6e})", table.mu[2]));

    // process independence of the correlation
    let other = LaplaceExponent::build(reference_spec(exp.spec()), 4)?;
    let one = HoldingFunction::one();
    let hh = h.integral_pow(x, 2);
    if hh > 0.0 {
        let ratio = |e: &LaplaceExponent| -> Result<f64> {
            Ok(area::cov_area(e, h, &one, x)?
                / (area::var_area(e, h, x)? * area::var_area(e, &one, x)?).sqrt())
        };
        let structural = area::corr_area(h, &one, x)?;
        let (ra, rb) = (ratio(exp)?, ratio(&other)?);
        // the per-spec ratios are defined only when phi''(0) > 0
        let pass = if exp.phi_second0() > 0.0 && other.phi_second0() > 0.0 {
            (ra - rb).abs() <= 1e-9 && (ra - structural).abs() <= 1e-9
        } else {
            true
        };
        rep.push("area/correlation_process_independent", pass, format!("per-spec ratios {ra:.9e} / {rb:.9e}, structural {structural:.9e}"));
    } else {
        rep.push("area/correlation_process_independent", true, "skipped: holding function vanishes on [0, x]".into());
    }

    // scaling of mean and variance across specs
    let mean_other = area::mean_area(&other, h, x)?;
    let scale_ok = (mean * exp.phi_prime0() - mean_other * other.phi_prime0()).abs()
        <= 1e-10 * (mean * exp.phi_prime0()).abs().max(1.0);
    let var_other = area::var_area(&other, h, x)?;
    let var_scale_ok = if exp.phi_second0() > 0.0 && other.phi_second0() > 0.0 {
        (var / exp.var_t1() - var_other / other.var_t1()).abs()
            <= 1e-10 * (var / exp.var_t1()).abs().max(1.0)
    } else {
        true
    };
    rep.push("area/mean_var_scaling", scale_ok && var_scale_ok, "mean ~ 1/phi'(0), var ~ phi''(0)/phi'(0)^3".into());

    // two-level law: mean/variance displays against transform derivatives
    let (lx, ly) = (1.0, 2.0);
    let m2 = area::mean_two_level(exp, h, lx, ly)?;
    let g = |a: f64| area::lst_two_level(exp, h, lx, ly, a).unwrap();
    let s = 2e-3 / m2.max(0.1);
    let d1 = |s: f64| (g(s) - g(0.0)) / s;
    let fd_mean = -(2.0 * d1(s / 2.0) - d1(s));
    let additive = h.eval(ly - lx) * lx / exp.phi_prime0() + area::mean_area(exp, h, ly - lx)?;
    let pass = (m2 - additive).abs() <= 1e-12 * additive.abs().max(1.0)
        && (fd_mean - m2).abs() <= 1e-4 * m2.abs().max(1e-9);
    rep.push("area/two_level_additivity", pass, format!("mean {m2:.6e}, transform derivative {fd_mean:.6e}"));

    // finite-dimensional law reduces to the bivariate one at n = 1
    let fidi = area::joint_lst_fidi(exp, h, &[x], &[0.7], Some(&[0.3]))?;
    let joint = area::joint_lst(exp, h, &one, x, 0.7, 0.3)?;
    rep.push("area/fidi_reduction", (fidi - joint).abs() <= 1e-9, format!("{fidi:.9e} vs {joint:.9e}"));
    Ok(())
}

fn check_sim(
    rep: &mut VerifyReport,
    exp: &LaplaceExponent,
    h: &HoldingFunction,
    seed: u64,
) -> Result<()> {
    let spec = exp.spec();
    if spec.sigma2 > 0.0 {
        rep.push("sim/skipped", true, "spec has a Brownian component; exact-path checks need sigma2 = 0".into());
        return Ok(());
    }
    let x = 1.0;

    // pathwise identity and boundary values
    let mut worst = 0.0f64;
    let mut boundary_ok = true;
    for r in 0..500 {
        let mut rng = sim::rep_rng(seed, r);
        let rec = sim::sample_excursion(spec, h, x, &mut rng)?;
        worst = worst.max((rec.area - rec.stieltjes_area(h)).abs());
        boundary_ok &= (rec.local_time_at(rec.t_x) - x).abs() <= 1e-9;
        boundary_ok &= (rec.level_at(rec.t_x) + x).abs() <= 1e-9;
    }
    rep.push("sim/stieltjes_identity", worst <= 1e-9, format!("max |time - stieltjes| = {worst:.3e} over 500 paths"));
    rep.push("sim/excursion_boundary", boundary_ok, "L_Tx = x and W_Tx = 0 on every path".into());

    // local-time / hitting-time duality and ordering of the two workload
    // processes
    let mut duality_ok = true;
    for r in 0..50 {
        let mut rng = sim::rep_rng(seed ^ 0x9e37, r);
        let rec = sim::sample_excursion(spec, h, x, &mut rng)?;
        for k in 0..=100 {
            let t = rec.t_x * k as f64 / 100.0;
            let lt = rec.local_time_at(t);
            duality_ok &= lt <= x + 1e-12; // T_x >= t  <=>  L_t <= x
            duality_ok &= x - lt >= -1e-12; // W^x - W = x - L_t >= 0
            duality_ok &= rec.level_at(t) + lt >= -1e-9; // W_t >= 0
        }
    }
    rep.push("sim/local_time_duality", duality_ok, "grid equivalences on 100-point grids, 50 paths".into());

    // subordinator additivity via two-sample KS
    let n = 10_000u64;
    let one = HoldingFunction::one();
    let direct: Vec<f64> = (0..n)
        .map(|r| {
            let mut rng = sim::rep_rng(seed ^ 0xadd1, r);
            sim::sample_excursion(spec, &one, 1.7, &mut rng).map(|p| p.t_x)
        })
        .collect::<Result<_>>()?;
    let summed: Vec<f64> = (0..n)
        .map(|r| {
            let mut rng = sim::rep_rng(seed ^ 0xadd2, r);
            let a = sim::sample_excursion(spec, &one, 1.0, &mut rng)?.t_x;
            let b = sim::sample_excursion(spec, &one, 0.7, &mut rng)?.t_x;
            Ok(a + b)
        })
        .collect::<Result<_>>()?;
    // snap to a fine grid first: deterministic jump sizes make the law
    // lattice-valued and the two constructions round atoms differently
    let d = stats::ks_two_sample_snapped(&direct, &summed, 1e-9);
    let p = stats::ks_two_sample_pvalue(d, direct.len(), summed.len());
    rep.push("sim/subordinator_additivity", p > 0.01, format!("two-sample KS d = {d:.4}, p = {p:.4}"));

    // determinism across worker counts
    let req = EstimateRequest { n_reps: 1000, seed, alpha_grid: vec![1.0], ..Default::default() };
    let runs: Vec<_> = [1usize, 2, 8]
        .iter()
        .map(|&workers| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
            pool.install(|| sim::estimate(exp, h, x, &req))
        })
        .collect::<Result<Vec<_>>>()?;
    let det_ok = runs[0] == runs[1] && runs[0] == runs[2];
    rep.push("sim/worker_count_determinism", det_ok, "identical estimates with 1, 2, 8 workers".into());

    // Monte Carlo against the analytic formulas
    let req = EstimateRequest { n_reps: 10_000, seed: seed ^ 0x5eed, alpha_grid: vec![1.0], ..Default::default() };
    let set = sim::estimate(exp, h, x, &req)?;
    let mean = area::mean_area(exp, h, x)?;
    let var = area::var_area(exp, h, x)?;
    let lst = area::lst_area(exp, h, x, 1.0)?;
    // four standard errors: the suite runs on arbitrary user seeds, so
    // leave less room for false alarms than the pinned-seed release gate
    let within = |est: &sim::SimEstimate, truth: f64| {
        (est.value - truth).abs() <= 4.0 * est.std_error + 1e-9 * truth.abs().max(1e-9)
    };
    let mc_ok = within(&set.mean_area, mean)
        && within(&set.var_area, var)
        && within(&set.lst[0].estimate, lst)
        && within(&set.mean_hitting, exp.hitting_time_mean(x)?);
    rep.push("sim/oracle_three_sigma", mc_ok, format!("mean {:.4e}~{mean:.4e}, var {:.4e}~{var:.4e}, lst {:.4e}~{lst:.4e}", set.mean_area.value, set.var_area.value, set.lst[0].estimate.value));

    // regenerative long-run average against (1/x) int_0^x h
    let lx = 2.0;
    let horizon = 3200.0 * exp.hitting_time_mean(lx)?;
    let lr = sim::longrun_experiment(exp, h, lx, horizon, seed ^ 0x10e6)?;
    let lr_band = (0.02 * lr.limit.abs()).max(3.5 * lr.estimate.std_error).max(1e-9);
    let lr_ok = (lr.estimate.value - lr.limit).abs() <= lr_band;
    rep.push("sim/longrun_average", lr_ok, format!("estimate {:.5e} vs limit {:.5e} over {} cycles", lr.estimate.value, lr.limit, lr.cycles));

    // light Gaussian-limit check when the holding function is in the
    // nondecreasing regularly-varying class the limit law needs
    if h.is_nondecreasing() && h.eval(50.0) > 0.0 {
        let n_scale = 50u64;
        let reps = 2000u64;
        let clt = sim::clt_experiment(exp, h, x, n_scale, reps, seed ^ 0xc17)?;
        let clt_ok = if clt.limit_var > 0.0 {
            // the finite-scale KS distance is dominated by the skewness of
            // A at this level (Edgeworth term ~ 0.4 skew / 6), which the
            // cumulants c_2, c_3 give exactly; allow that plus noise
            let table = area::moments_area(exp, h, n_scale as f64 * x, 3)?;
            let skew = table.c[2] / table.c[1].powf(1.5);
            let allow = 0.08 * skew.abs() + 3.0 * 0.86 / (reps as f64).sqrt() + 0.005;
            (clt.sample_var - clt.limit_var).abs() <= 6.0 * clt.sample_var_se
                && clt.ks_distance < allow
        } else {
            clt.samples.iter().all(|&s| s.abs() < 1e-9)
        };
        rep.push("sim/gaussian_limit_smoke", clt_ok, format!("sample var {:.4e} vs limit {:.4e}, ks {:.4}", clt.sample_var, clt.limit_var, clt.ks_distance));
    } else {
        rep.push("sim/gaussian_limit_smoke", true, "skipped: holding function outside the Gaussian-limit class".into());
    }
    Ok(())
}

fn check_inventory(rep: &mut VerifyReport, exp: &LaplaceExponent, h: &HoldingFunction) -> Result<()> {
    // g properties for the config holding function when it qualifies
    if h.is_nondecreasing() {
        let cm = CostModel::new(1.0, h.clone(), exp, 0.0)?;
        let mut nondec = cm.g_function(0.0).abs() <= 1e-12;
        let mut prev = 0.0f64;
        for k in 1..=200 {
            let x = k as f64 * 0.05;
            let g = cm.g_function(x);
            nondec &= g >= prev - 1e-11 * prev.abs().max(1.0);
            prev = g;
        }
        rep.push("inventory/g_nondecreasing", nondec, "g(0) = 0 and g nondecreasing on (0, 10]".into());

        match cm.optimal_order()? {
            OrderDecision::Bounded { x_star, cost } => {
                let unimodal = cm.unimodality_certificate(x_star, 1000)?;
                let mut inverse_ok = true;
                for k in 1..=100 {
                    let x = x_star * k as f64 / 50.0;
                    if (x - x_star).abs() > 1e-9 * x_star {
                        inverse_ok &= (cm.g_function(x) >= cm.k_prime()) == (x >= x_star);
                    }
                }
                rep.push("inventory/order_unimodal_and_inverse", unimodal && inverse_ok, format!("x* = {x_star:.6e}, cost = {cost:.6e}"));
            }
            OrderDecision::Unbounded { cap } => {
                rep.push("inventory/order_unimodal_and_inverse", true, format!("unbounded (cost decreasing up to cap {cap:.1e})"));
            }
        }
    } else {
        rep.push("inventory/g_nondecreasing", true, "skipped: holding function not nondecreasing".into());
    }

    // EOQ consistency on a synthetic linear model with this process
    let lin = HoldingFunction::Linear { c: 1.0 };
    let cm = CostModel::new(4.0, lin.clone(), exp, 0.0)?;
    let expect_x = (2.0 * exp.phi_prime0() * 4.0).sqrt();
    let eoq_ok = match cm.optimal_order()? {
        OrderDecision::Bounded { x_star, cost } => {
            (x_star - expect_x).abs() <= 1e-10 * expect_x
                && (cost - expect_x).abs() <= 1e-10 * expect_x
        }
        OrderDecision::Unbounded { .. } => false,
    };
    rep.push("inventory/eoq_closed_form", eoq_ok, format!("x* ~ {expect_x:.6e}"));

    // multi-class: mass on the argmin class reproduces the single class
    let sol = multiclass_linear(&[1.0, 3.0], 4.0, exp.phi_prime0())?;
    let at_x = multiclass_cost(
        &[lin.clone(), HoldingFunction::Linear { c: 3.0 }],
        &sol.proportions,
        sol.x,
        4.0,
        exp.phi_prime0(),
    )?;
    let mc_ok = (at_x - sol.objective).abs() <= 1e-10 * sol.objective
        && (sol.x - expect_x).abs() <= 1e-10 * expect_x;
    rep.push("inventory/multiclass_argmin", mc_ok, format!("objective {:.6e} at x = {:.6e}", sol.objective, sol.x));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{bm_spec, mm1_spec};

    #[test]
    fn full_suite_passes_on_mm1() {
        let rep = run_all(&mm1_spec(), &HoldingFunction::Linear { c: 1.0 }, 12345).unwrap();
        let failed: Vec<_> = rep.checks.iter().filter(|c| !c.pass).collect();
        assert!(failed.is_empty(), "failing checks: {failed:?}");
    }

    #[test]
    fn brownian_spec_skips_path_checks() {
        let rep = run_all(&bm_spec(), &HoldingFunction::Linear { c: 1.0 }, 7).unwrap();
        assert!(rep.all_pass(), "failures: {:?}", rep.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
        assert!(rep.checks.iter().any(|c| c.name == "sim/skipped"));
    }
}
