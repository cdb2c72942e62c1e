//! Simulation-oracle cross-checks for the transform formulas that have no
//! closed-form oracle: joint laws, two-level areas, finite-dimensional
//! transforms, random order sizes, and process-independence of long-run
//! averages.

use levyarea::area;
use levyarea::holding::HoldingFunction;
use levyarea::sim::{self, EstimateRequest};
use levyarea::stats;
use levyarea::{JumpDistribution, LaplaceExponent, ProcessSpec};

use rand_distr::{Distribution, Exp};

fn mm1() -> LaplaceExponent {
    let spec =
        ProcessSpec::new(-1.0, 0.0, 1.0, Some(JumpDistribution::Exponential { rate: 2.0 }));
    LaplaceExponent::build(spec, 12).unwrap()
}

fn det() -> LaplaceExponent {
    let spec =
        ProcessSpec::new(-1.0, 0.0, 0.5, Some(JumpDistribution::Deterministic { size: 1.0 }));
    LaplaceExponent::build(spec, 12).unwrap()
}

fn linear() -> HoldingFunction {
    HoldingFunction::Linear { c: 1.0 }
}

#[test]
fn joint_lst_with_hitting_time_oracle() {
    let exp = mm1();
    let h = linear();
    let req = EstimateRequest {
        n_reps: 40_000,
        seed: 101,
        joint: vec![(0.8, 0.4), (0.3, 1.2)],
        ..Default::default()
    };
    let set = sim::estimate(&exp, &h, 1.0, &req).unwrap();
    let one = HoldingFunction::one();
    for j in &set.joint {
        let analytic = area::joint_lst(&exp, &h, &one, 1.0, j.alpha, j.beta).unwrap();
        let dev = (j.estimate.value - analytic).abs();
        assert!(
            dev <= 3.0 * j.estimate.std_error,
            "(alpha, beta) = ({}, {}): {} vs {analytic}",
            j.alpha,
            j.beta,
            j.estimate.value
        );
    }
}

#[test]
fn joint_lst_with_secondary_area_oracle() {
    let exp = mm1();
    let h = linear();
    let g = HoldingFunction::Power { c: 1.0, gamma: 2.0 };
    let req = EstimateRequest {
        n_reps: 40_000,
        seed: 103,
        aux: Some(g.clone()),
        joint: vec![(0.7, 0.5)],
        ..Default::default()
    };
    let set = sim::estimate(&exp, &h, 1.0, &req).unwrap();
    let analytic = area::joint_lst(&exp, &h, &g, 1.0, 0.7, 0.5).unwrap();
    let j = &set.joint[0];
    assert!((j.estimate.value - analytic).abs() <= 3.0 * j.estimate.std_error);
    // and the secondary mean
    let mean_g = area::mean_area(&exp, &g, 1.0).unwrap();
    let aux = set.aux_mean.unwrap();
    assert!((aux.value - mean_g).abs() <= 3.0 * aux.std_error);
}

#[test]
fn two_level_law_oracle() {
    // A_{x,y} = h(y-x) T_x + A_{y-x} with independent pieces
    let exp = mm1();
    let h = linear();
    let (x, y, alpha) = (1.0, 2.0, 1.0);
    let n = 40_000u64;
    let mut transformed = Vec::with_capacity(n as usize);
    let mut values = Vec::with_capacity(n as usize);
    let hyx = h.eval(y - x);
    for rep in 0..n {
        let mut rng = sim::rep_rng(211, rep);
        let t_x = sim::sample_excursion(exp.spec(), &h, x, &mut rng).unwrap().t_x;
        let a = sim::sample_excursion(exp.spec(), &h, y - x, &mut rng).unwrap().area;
        let v = hyx * t_x + a;
        values.push(v);
        transformed.push((-alpha * v).exp());
    }
    let analytic = area::lst_two_level(&exp, &h, x, y, alpha).unwrap();
    let (m, se) = stats::mean_se(&transformed);
    assert!((m - analytic).abs() <= 3.0 * se, "{m} vs {analytic}");
    let (mv, sev) = stats::mean_se(&values);
    let mean2 = area::mean_two_level(&exp, &h, x, y).unwrap();
    assert!((mv - mean2).abs() <= 3.0 * sev);
    let (vv, sevv) = stats::var_se(&values);
    let var2 = area::var_two_level(&exp, &h, x, y).unwrap();
    assert!((vv - var2).abs() <= 3.0 * sevv);
}

#[test]
fn finite_dimensional_lst_oracle() {
    // two levels read off a single excursion via the recorded hitting
    // measure
    let exp = mm1();
    let h = linear();
    let (s1, s2) = (0.6, 1.3);
    let (a1, a2) = (0.8, 0.5);
    let n = 40_000u64;
    let mut transformed = Vec::with_capacity(n as usize);
    for rep in 0..n {
        let mut rng = sim::rep_rng(307, rep);
        let rec = sim::sample_excursion(exp.spec(), &h, s2, &mut rng).unwrap();
        let area1 = rec.area_at(s1, &h);
        let area2 = rec.area;
        transformed.push((-a1 * area1 - a2 * area2).exp());
    }
    let analytic = area::joint_lst_fidi(&exp, &h, &[s1, s2], &[a1, a2], None).unwrap();
    let (m, se) = stats::mean_se(&transformed);
    assert!((m - analytic).abs() <= 3.0 * se, "{m} vs {analytic} (se {se})");
}

#[test]
fn random_order_size_first_moment_oracle() {
    // order size xi ~ exp(rate), independent of the path
    let exp = mm1();
    let h = linear();
    let rate = 1.0;
    let n = 30_000u64;
    let xi_law = Exp::new(rate).unwrap();
    let mut areas = Vec::with_capacity(n as usize);
    for rep in 0..n {
        let mut rng = sim::rep_rng(401, rep);
        let xi: f64 = xi_law.sample(&mut rng);
        if xi <= 0.0 {
            areas.push(0.0);
            continue;
        }
        areas.push(sim::sample_excursion(exp.spec(), &h, xi, &mut rng).unwrap().area);
    }
    let mu = area::moments_random_order(&exp, rate, 1).unwrap();
    let (m, se) = stats::mean_se(&areas);
    assert!((m - mu[0]).abs() <= 3.0 * se, "{m} vs {} (se {se})", mu[0]);
    // tower-property value for the first moment
    let direct = (2.0 / (rate * rate)) / 2.0 / exp.phi_prime0();
    assert!((mu[0] - direct).abs() <= 1e-12);
}

#[test]
fn longrun_average_is_process_independent() {
    let h = linear();
    let a = sim::longrun_experiment(&mm1(), &h, 2.0, 16_000.0, 55).unwrap();
    let b = sim::longrun_experiment(&det(), &h, 2.0, 16_000.0, 56).unwrap();
    let joint = (a.estimate.std_error.powi(2) + b.estimate.std_error.powi(2)).sqrt();
    assert!(
        (a.estimate.value - b.estimate.value).abs() <= 3.0 * joint,
        "{} vs {}",
        a.estimate.value,
        b.estimate.value
    );
}

#[test]
fn transform_oracle_for_kinked_and_graded_holding() {
    // piecewise-linear h exercises the knot splits, the sqrt power the
    // graded panels near zero
    let exp = mm1();
    for (h, x) in [
        (
            HoldingFunction::PiecewiseLinear {
                knots: vec![(0.0, 0.5), (0.4, 0.5), (0.9, 2.0)],
            },
            1.3,
        ),
        (HoldingFunction::Power { c: 1.0, gamma: 0.5 }, 1.0),
    ] {
        let req = EstimateRequest {
            n_reps: 40_000,
            seed: 509,
            alpha_grid: vec![1.0],
            ..Default::default()
        };
        let set = sim::estimate(&exp, &h, x, &req).unwrap();
        let analytic = area::lst_area(&exp, &h, x, 1.0).unwrap();
        let mc = &set.lst[0].estimate;
        assert!(
            (mc.value - analytic).abs() <= 3.0 * mc.std_error,
            "{h:?}: {} vs {analytic}",
            mc.value
        );
        // mean via the exact product integrals too
        let mean = area::mean_area(&exp, &h, x).unwrap();
        assert!((set.mean_area.value - mean).abs() <= 3.0 * set.mean_area.std_error);
    }
}

#[test]
fn uniform_and_gamma_jump_specs_match_analytics() {
    let h = linear();
    for spec in [
        ProcessSpec::new(-1.0, 0.0, 0.4, Some(JumpDistribution::Gamma { shape: 2.0, scale: 0.5 })),
        ProcessSpec::new(-1.0, 0.0, 0.6, Some(JumpDistribution::Uniform { b: 2.0 })),
    ] {
        let exp = LaplaceExponent::build(spec, 4).unwrap();
        let req = EstimateRequest { n_reps: 30_000, seed: 613, alpha_grid: vec![0.7], ..Default::default() };
        let set = sim::estimate(&exp, &h, 1.0, &req).unwrap();
        let mean = area::mean_area(&exp, &h, 1.0).unwrap();
        let lst = area::lst_area(&exp, &h, 1.0, 0.7).unwrap();
        assert!((set.mean_area.value - mean).abs() <= 3.0 * set.mean_area.std_error);
        assert!(
            (set.lst[0].estimate.value - lst).abs() <= 3.0 * set.lst[0].estimate.std_error
        );
    }
}
