//! Catalog of non-negative holding functions `h` with closed-form
//! integrals of `h^k` and of products `h*g` on `[0, x]`.
//!
//! The transform and moment formulas only ever need `h` through these
//! integrals, so keeping them exact removes one source of quadrature error.
//! Piecewise-linear functions are defined by knots `(t_i, v_i)` starting at
//! `t_0 = 0`, interpolate linearly between knots, and extend at the last
//! value beyond the final knot.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HoldingFunction {
    /// `h(t) = c`, `c >= 0`.
    Constant { c: f64 },
    /// `h(t) = c t`, `c > 0`.
    Linear { c: f64 },
    /// `h(t) = c t^gamma`, `c > 0`, `gamma > 0`.
    Power { c: f64, gamma: f64 },
    /// Linear interpolation of `knots = [(t_0=0, v_0), (t_1, v_1), ...]`,
    /// constant after the last knot. All `v_i >= 0`, `t_i` strictly
    /// increasing.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

/// One affine piece `v0 + slope (t - a)` on `[a, b]`.
#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    v0: f64,
    slope: f64,
}

impl Piece {
    fn value_at(&self, t: f64) -> f64 {
        self.v0 + self.slope * (t - self.a)
    }

    /// Integral of the k-th power of the affine function over `[a, b]`.
    fn integral_pow(&self, k: u32) -> f64 {
        let dt = self.b - self.a;
        if dt <= 0.0 {
            return 0.0;
        }
        if self.slope == 0.0 {
            return self.v0.powi(k as i32) * dt;
        }
        let vb = self.value_at(self.b);
        let kk = k as i32 + 1;
        (vb.powi(kk) - self.v0.powi(kk)) / (self.slope * kk as f64)
    }
}

impl HoldingFunction {
    /// Constant-one function, the `g` that couples `A_x` with `T_x`.
    pub fn one() -> Self {
        HoldingFunction::Constant { c: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            HoldingFunction::Constant { c } => {
                if !(c.is_finite() && *c >= 0.0) {
                    return bad(format!("constant holding needs c >= 0, got {c}"));
                }
            }
            HoldingFunction::Linear { c } => {
                if !(c.is_finite() && *c > 0.0) {
                    return bad(format!("linear holding needs c > 0, got {c}"));
                }
            }
            HoldingFunction::Power { c, gamma } => {
                if !(c.is_finite() && *c > 0.0 && gamma.is_finite() && *gamma > 0.0) {
                    return bad(format!("power holding needs c > 0, gamma > 0, got c={c}, gamma={gamma}"));
                }
            }
            HoldingFunction::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return bad("piecewise_linear holding needs at least one knot".into());
                }
                if knots[0].0 != 0.0 {
                    return bad(format!("first knot must sit at t = 0, got {}", knots[0].0));
                }
                for w in knots.windows(2) {
                    if w[1].0 <= w[0].0 || w[1].0.is_nan() {
                        return bad("knot abscissae must be strictly increasing".into());
                    }
                }
                for &(t, v) in knots {
                    if !(t.is_finite() && v.is_finite() && v >= 0.0) {
                        return bad(format!("knot ({t}, {v}) must be finite with v >= 0"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match self {
            HoldingFunction::Constant { c } => *c,
            HoldingFunction::Linear { c } => c * t,
            HoldingFunction::Power { c, gamma } => {
                if t == 0.0 {
                    0.0
                } else {
                    c * t.powf(*gamma)
                }
            }
            HoldingFunction::PiecewiseLinear { knots } => {
                let last = knots.len() - 1;
                if t >= knots[last].0 {
                    return knots[last].1;
                }
                let i = knots.partition_point(|&(tk, _)| tk <= t) - 1;
                let (t0, v0) = knots[i];
                let (t1, v1) = knots[i + 1];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// `(c, gamma)` when the function is a pure power `c t^gamma`
    /// (constants count with `gamma = 0`).
    fn as_power(&self) -> Option<(f64, f64)> {
        match *self {
            HoldingFunction::Constant { c } => Some((c, 0.0)),
            HoldingFunction::Linear { c } => Some((c, 1.0)),
            HoldingFunction::Power { c, gamma } => Some((c, gamma)),
            HoldingFunction::PiecewiseLinear { .. } => None,
        }
    }

    /// Affine pieces covering `[0, x]` for the piecewise-linear kind.
    fn pieces_to(&self, x: f64) -> Vec<Piece> {
        let knots = match self {
            HoldingFunction::PiecewiseLinear { knots } => knots,
            _ => unreachable!("pieces_to is only used for piecewise-linear holding"),
        };
        let mut out = Vec::new();
        for w in knots.windows(2) {
            let (t0, v0) = w[0];
            let (t1, v1) = w[1];
            if t0 >= x {
                break;
            }
            let b = t1.min(x);
            out.push(Piece { a: t0, b, v0, slope: (v1 - v0) / (t1 - t0) });
        }
        let (tl, vl) = *knots.last().unwrap();
        if x > tl {
            out.push(Piece { a: tl, b: x, v0: vl, slope: 0.0 });
        }
        out
    }

    /// `int_0^x h(y) dy`, exact.
    pub fn integral(&self, x: f64) -> f64 {
        self.integral_pow(x, 1)
    }

    /// `int_0^x h(y)^k dy`, exact for every catalog kind.
    pub fn integral_pow(&self, x: f64, k: u32) -> f64 {
        debug_assert!(x >= 0.0);
        if x == 0.0 || k == 0 {
            return if k == 0 { x } else { 0.0 };
        }
        if let Some((c, gamma)) = self.as_power() {
            let p = k as f64 * gamma + 1.0;
            return c.powi(k as i32) * x.powf(p) / p;
        }
        self.pieces_to(x).iter().map(|p| p.integral_pow(k)).sum()
    }

    /// `int_0^x h(y) g(y) dy`, exact for every catalog pair.
    pub fn integral_prod(&self, g: &HoldingFunction, x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        if x == 0.0 {
            return 0.0;
        }
        match (self.as_power(), g.as_power()) {
            (Some((c1, g1)), Some((c2, g2))) => {
                let p = g1 + g2 + 1.0;
                c1 * c2 * x.powf(p) / p
            }
            (Some((c, gamma)), None) => power_times_pieces(c, gamma, &g.pieces_to(x)),
            (None, Some((c, gamma))) => power_times_pieces(c, gamma, &self.pieces_to(x)),
            (None, None) => {
                // merge breakpoints so both factors are affine per interval
                let mut cuts: Vec<f64> = self
                    .pieces_to(x)
                    .iter()
                    .chain(g.pieces_to(x).iter())
                    .flat_map(|p| [p.a, p.b])
                    .collect();
                cuts.push(0.0);
                cuts.push(x);
                cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                cuts.dedup();
                let mut acc = 0.0;
                for w in cuts.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    if b <= a {
                        continue;
                    }
                    // both affine on [a, b]: write as (va + s1 u)(vb + s2 u), u = t - a
                    let mid = 0.5 * (a + b);
                    let s1 = (self.eval(b) - self.eval(a)) / (b - a);
                    let s2 = (g.eval(b) - g.eval(a)) / (b - a);
                    let va = self.eval(a);
                    let vb = g.eval(a);
                    debug_assert!(
                        (self.eval(mid) - (va + s1 * (mid - a))).abs() <= 1e-9 * va.abs().max(1.0)
                    );
                    let d = b - a;
                    acc += va * vb * d
                        + (va * s2 + vb * s1) * d * d / 2.0
                        + s1 * s2 * d * d * d / 3.0;
                }
                acc
            }
        }
    }

    /// Interior breakpoints in `(0, x)` where the function loses smoothness;
    /// quadrature splits integration domains here.
    pub fn breakpoints(&self, x: f64) -> Vec<f64> {
        match self {
            HoldingFunction::PiecewiseLinear { knots } => knots
                .iter()
                .map(|&(t, _)| t)
                .filter(|&t| t > 0.0 && t < x)
                .collect(),
            _ => Vec::new(),
        }
    }

    /// True when the derivative of `h` is unbounded at the origin
    /// (`gamma < 1` powers); integrators lay graded panels there.
    pub fn grades_at_origin(&self) -> bool {
        matches!(self, HoldingFunction::Power { gamma, .. } if *gamma < 1.0)
    }

    /// Monotonicity check used by the inventory module.
    pub fn is_nondecreasing(&self) -> bool {
        match self {
            HoldingFunction::Constant { .. }
            | HoldingFunction::Linear { .. }
            | HoldingFunction::Power { .. } => true,
            HoldingFunction::PiecewiseLinear { knots } => {
                knots.windows(2).all(|w| w[1].1 >= w[0].1)
            }
        }
    }

    /// Regular-variation index at infinity: `gamma` for powers, 0 for
    /// constants and (eventually constant) piecewise-linear functions.
    pub fn rv_index(&self) -> f64 {
        match self {
            HoldingFunction::Constant { .. } | HoldingFunction::PiecewiseLinear { .. } => 0.0,
            HoldingFunction::Linear { .. } => 1.0,
            HoldingFunction::Power { gamma, .. } => *gamma,
        }
    }
}

fn power_times_pieces(c: f64, gamma: f64, pieces: &[Piece]) -> f64 {
    // int c t^gamma (A + s t) dt with A = v0 - s a on each piece
    let mut acc = 0.0;
    for p in pieces {
        let s = p.slope;
        let aa = p.v0 - s * p.a;
        let g1 = gamma + 1.0;
        let g2 = gamma + 2.0;
        acc += c * (aa * (p.b.powf(g1) - p.a.powf(g1)) / g1 + s * (p.b.powf(g2) - p.a.powf(g2)) / g2);
    }
    acc
}
