//! Adaptive integration of singular kernel densities: L(r, R), m(r), L(r),
//! j-tails and total-variation estimates.
//!
//! Radial integrals run in the logarithmic variable `u = ln t`, which turns the
//! power-type singularities at 0 and ∞ into exponentials. Contributions beyond
//! the integrated range are bounded by the family's power envelope; exact
//! envelopes are added analytically, others only enter the error estimate.

pub mod gk;

use std::cell::RefCell;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Family, KernelSpec, PowerEnvelope, ProfileShape, TailBehavior, CustomDensity};

/// Quadrature tolerances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Radius below which panel integrals switch to the logarithmic variable.
    pub split_radius: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { rel_tol: 1e-8, abs_tol: 1e-12, max_subdivisions: 1 << 20, split_radius: 1e-3 }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::validation("quadrature", "tolerances must be > 0"));
        }
        if self.max_subdivisions < 64 {
            return Err(Error::validation("quadrature.max_subdivisions", "must be ≥ 64"));
        }
        if !(self.split_radius > 0.0) {
            return Err(Error::validation("quadrature.split_radius", "must be > 0"));
        }
        Ok(())
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub(crate) fn tolerance(&self) -> gk::Tolerance {
        gk::Tolerance { rel: self.rel_tol, abs: self.abs_tol, max_subdivisions: self.max_subdivisions }
    }
}

/// Outcome of one integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
    pub evaluations: usize,
}

impl IntegralResult {
    pub fn zero() -> Self {
        IntegralResult { value: 0.0, error_estimate: 0.0, converged: true, evaluations: 0 }
    }

    fn plus(self, o: IntegralResult) -> Self {
        IntegralResult {
            value: self.value + o.value,
            error_estimate: self.error_estimate + o.error_estimate,
            converged: self.converged && o.converged,
            evaluations: self.evaluations + o.evaluations,
        }
    }

    fn recheck(mut self, cfg: &QuadConfig) -> Self {
        self.converged = self.converged
            && self.value.is_finite()
            && self.error_estimate <= cfg.abs_tol.max(cfg.rel_tol * self.value.abs());
        self
    }
}

/// Wraps a fallible integrand for the infallible GK driver, keeping the first error.
struct Guarded<'a> {
    f: &'a dyn Fn(f64) -> Result<f64>,
    err: RefCell<Option<Error>>,
}

impl<'a> Guarded<'a> {
    fn new(f: &'a dyn Fn(f64) -> Result<f64>) -> Self {
        Guarded { f, err: RefCell::new(None) }
    }
    fn call(&self, t: f64) -> f64 {
        match (self.f)(t) {
            Ok(v) => v,
            Err(e) => {
                self.err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    }
    fn finish(self, r: IntegralResult) -> Result<IntegralResult> {
        match self.err.into_inner() {
            Some(e) => Err(e),
            None => Ok(r),
        }
    }
}

/// ∫_lo^hi F(t) dt for 0 < lo < hi < ∞ in the variable u = ln t, split at `breaks`.
pub(crate) fn log_integral(f: &dyn Fn(f64) -> Result<f64>, lo: f64, hi: f64, breaks: &[f64], cfg: &QuadConfig) -> Result<IntegralResult> {
    if hi <= lo {
        return Ok(IntegralResult::zero());
    }
    let (ul, uh) = (lo.ln(), hi.ln());
    let step = ((uh - ul) / 2000.0).max(2.0);
    let mut br: Vec<f64> = breaks.iter().filter(|&&b| b > lo && b < hi).map(|b| b.ln()).collect();
    let mut u = ul + step;
    while u < uh {
        br.push(u);
        u += step;
    }
    let g = Guarded::new(f);
    let r = gk::integrate(|u: f64| { let t = u.exp(); g.call(t) * t }, ul, uh, &br, cfg.tolerance());
    g.finish(r)
}

/// Maximum number of π-panels for integrands oscillating like cos(1/t).
const MAX_OSC_PANELS: f64 = 400_000.0;

/// ∫_lo^hi F(t) dt in w = 1/t with panels of width π, resolving cos(1/t).
fn reciprocal_integral(f: &dyn Fn(f64) -> Result<f64>, lo: f64, hi: f64, breaks: &[f64], cfg: &QuadConfig) -> Result<IntegralResult> {
    if hi <= lo {
        return Ok(IntegralResult::zero());
    }
    let (wl, wh) = (1.0 / hi, 1.0 / lo);
    let panels = ((wh - wl) / PI).ceil();
    if panels > MAX_OSC_PANELS {
        return Err(Error::Quadrature(format!("oscillation below t = {lo:e} needs {panels:e} panels")));
    }
    let mut br: Vec<f64> = breaks.iter().filter(|&&b| b > lo && b < hi).map(|b| 1.0 / b).collect();
    let mut w = (wl / PI).floor() * PI + PI;
    while w < wh {
        br.push(w);
        w += PI;
    }
    let mut tol = cfg.tolerance();
    tol.max_subdivisions = tol.max_subdivisions.max(4 * panels as usize);
    let g = Guarded::new(f);
    let r = gk::integrate(|w: f64| g.call(1.0 / w) / (w * w), wl, wh, &br, tol);
    g.finish(r)
}

/// Description of a one-dimensional radial integrand t ↦ F(t) on (0, ∞).
pub(crate) struct RadialIntegrand<'a> {
    pub f: &'a dyn Fn(f64) -> Result<f64>,
    pub near: Option<PowerEnvelope>,
    pub tail: TailBehavior,
    pub breaks: Vec<f64>,
    pub oscillation_radius: Option<f64>,
}

impl<'a> RadialIntegrand<'a> {
    fn density(spec: &KernelSpec, f: &'a dyn Fn(f64) -> Result<f64>) -> Self {
        RadialIntegrand {
            f,
            near: spec.near_envelope(),
            tail: spec.tail_behavior(),
            breaks: spec.radial_breakpoints(),
            oscillation_radius: spec.oscillation_radius(),
        }
    }

    fn piece(&self, weight: f64, lo: f64, hi: f64, cfg: &QuadConfig) -> Result<IntegralResult> {
        let g = |t: f64| -> Result<f64> { Ok(t.powf(weight) * (self.f)(t)?) };
        match self.oscillation_radius {
            Some(ro) if lo < ro => {
                let mid = hi.min(ro);
                let a = reciprocal_integral(&g, lo, mid, &self.breaks, cfg)?;
                let b = log_integral(&g, mid, hi, &self.breaks, cfg)?;
                Ok(a.plus(b))
            }
            _ => log_integral(&g, lo, hi, &self.breaks, cfg),
        }
    }

    /// ∫_lo^hi t^weight F(t) dt with 0 ≤ lo ≤ hi ≤ ∞.
    pub fn integrate(&self, weight: f64, lo: f64, hi: f64, cfg: &QuadConfig) -> Result<IntegralResult> {
        if !(lo >= 0.0) || hi < lo || lo.is_nan() || hi.is_nan() {
            return Err(Error::Argument(format!("invalid radial range [{lo}, {hi}]")));
        }
        let hi = match self.tail {
            TailBehavior::Compact(c) => hi.min(c),
            _ => hi,
        };
        if hi <= lo {
            return Ok(IntegralResult::zero());
        }
        let mut total = IntegralResult::zero();
        let mut inexact_rem = 0.0;
        // Lower end.
        let mut start = lo;
        if lo == 0.0 {
            let env = self
                .near
                .as_ref()
                .ok_or_else(|| Error::Quadrature("no near-zero envelope to integrate down to 0".into()))?;
            let top = hi.min(env.threshold).min(1.0);
            let mut delta = top * 1e-3;
            total = total.plus(self.piece(weight, delta, hi.min(1.0).max(delta), cfg)?);
            if hi > 1.0 && delta < 1.0 {
                // piece above already covered [delta, 1]; rest handled by the upper part.
            }
            let rem_of = |d: f64| {
                env.integral_below(weight, d).ok_or_else(|| Error::DivergingMoment {
                    r: hi,
                    detail: format!("t^{weight}·ρ(t) is not integrable at 0"),
                })
            };
            if env.exact {
                total.value += rem_of(delta)?;
            } else {
                let mut rem = rem_of(delta)?;
                while rem > 0.1 * cfg.rel_tol * total.value.abs().max(cfg.abs_tol / cfg.rel_tol) && delta > 1e-280 {
                    let next = delta * 1e-4;
                    match self.piece(weight, next, delta, cfg) {
                        Ok(p) => total = total.plus(p),
                        Err(Error::Quadrature(_)) => break,
                        Err(e) => return Err(e),
                    }
                    delta = next;
                    rem = rem_of(delta)?;
                }
                inexact_rem += rem;
            }
            start = hi.min(1.0).max(delta);
            if start >= hi {
                total.error_estimate += inexact_rem;
                return Ok(total.recheck(cfg));
            }
        }
        // Upper end.
        if hi.is_infinite() {
            let env = match &self.tail {
                TailBehavior::Power(env) => env,
                TailBehavior::Compact(_) => unreachable!("compact tail already clipped"),
                TailBehavior::Unknown => return Err(Error::Quadrature("no tail envelope for an infinite range".into())),
            };
            let diverge = || Error::DivergingMoment { r: lo, detail: format!("t^{weight}·ρ(t) is not integrable at ∞") };
            let mut cut = 1e6f64.max(env.threshold).max(2.0 * start);
            total = total.plus(self.piece(weight, start, cut, cfg)?);
            if env.exact {
                total.value += env.integral_above(weight, cut).ok_or_else(diverge)?;
            } else {
                let mut rem = env.integral_above(weight, cut).ok_or_else(diverge)?;
                while rem > 0.1 * cfg.rel_tol * total.value.abs().max(cfg.abs_tol / cfg.rel_tol) && cut < 1e280 {
                    let next = cut * 1e4;
                    total = total.plus(self.piece(weight, cut, next, cfg)?);
                    cut = next;
                    rem = env.integral_above(weight, cut).ok_or_else(diverge)?;
                }
                inexact_rem += rem;
            }
        } else {
            total = total.plus(self.piece(weight, start, hi, cfg)?);
        }
        total.error_estimate += inexact_rem;
        Ok(total.recheck(cfg))
    }
}

/// ∫_lo^hi t^weight ρ(t) dt for the kernel's radial density ρ.
pub fn radial_moment(spec: &KernelSpec, weight: f64, lo: f64, hi: f64, cfg: &QuadConfig) -> Result<IntegralResult> {
    let f = |t: f64| spec.radial_density(t);
    RadialIntegrand::density(spec, &f).integrate(weight, lo, hi, cfg)
}

/// L(r, R) = ∫_{B_R ∖ B_r} j.
pub fn annulus_integral(spec: &KernelSpec, r: f64, big_r: f64, cfg: &QuadConfig) -> Result<IntegralResult> {
    if !(r > 0.0) || !(big_r >= r) {
        return Err(Error::Argument(format!("annulus needs 0 < r ≤ R, got r = {r}, R = {big_r}")));
    }
    if r == big_r {
        return Ok(IntegralResult::zero());
    }
    radial_moment(spec, 0.0, r, big_r, cfg)
}

/// m(r) = ∫_{B_r} |z| j(z) dz.
pub fn first_moment(spec: &KernelSpec, r: f64, cfg: &QuadConfig) -> Result<IntegralResult> {
    if !(r > 0.0) {
        return Err(Error::Argument(format!("first moment needs r > 0, got {r}")));
    }
    radial_moment(spec, 1.0, 0.0, r, cfg)
}

/// L(r) = m(r)/r + L(r, ∞).
pub fn l_total(spec: &KernelSpec, r: f64, cfg: &QuadConfig) -> Result<IntegralResult> {
    let m = first_moment(spec, r, cfg)?;
    let tail = annulus_integral(spec, r, f64::INFINITY, cfg)?;
    let scaled = IntegralResult { value: m.value / r, error_estimate: m.error_estimate / r, ..m };
    Ok(scaled.plus(tail).recheck(cfg))
}

/// One-sided tail ∫_d^∞ j(sign·t) dt for N = 1.
pub fn half_line_integral(spec: &KernelSpec, sign: f64, d: f64, cfg: &QuadConfig) -> Result<IntegralResult> {
    if spec.dimension() != 1 {
        return Err(Error::Argument("half-line integrals need dimension 1".into()));
    }
    if !(d > 0.0) {
        return Err(Error::Argument(format!("half-line start must be > 0, got {d}")));
    }
    let f = |t: f64| spec.eval_1d(sign * t);
    let integrand = RadialIntegrand {
        f: &f,
        near: None,
        tail: spec.side_tail(sign),
        breaks: spec.radial_breakpoints(),
        oscillation_radius: spec.oscillation_radius(),
    };
    integrand.integrate(0.0, d, f64::INFINITY, cfg)
}

/// Bounded function of one variable: piecewise-linear table with a constant
/// far-field value outside the table range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundedFunction {
    Zero,
    Constant { value: f64 },
    Tabulated { xs: Vec<f64>, values: Vec<f64>, far: f64 },
}

impl BoundedFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            BoundedFunction::Zero => Ok(()),
            BoundedFunction::Constant { value } if value.is_finite() => Ok(()),
            BoundedFunction::Constant { .. } => Err(Error::Argument("constant must be finite".into())),
            BoundedFunction::Tabulated { xs, values, far } => {
                if xs.len() < 2 || xs.len() != values.len() {
                    return Err(Error::Argument("table needs ≥ 2 points and matching values".into()));
                }
                if xs.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Argument("table abscissae must increase".into()));
                }
                if !far.is_finite() || values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Argument("table values and far-field bound must be finite".into()));
                }
                Ok(())
            }
        }
    }

    pub fn far(&self) -> f64 {
        match self {
            BoundedFunction::Zero => 0.0,
            BoundedFunction::Constant { value } => *value,
            BoundedFunction::Tabulated { far, .. } => *far,
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        match self {
            BoundedFunction::Zero => 0.0,
            BoundedFunction::Constant { value } => *value,
            BoundedFunction::Tabulated { xs, values, far } => {
                if y < xs[0] || y > xs[xs.len() - 1] {
                    return *far;
                }
                let k = xs.partition_point(|&x| x <= y).clamp(1, xs.len() - 1);
                let s = (y - xs[k - 1]) / (xs[k] - xs[k - 1]);
                values[k - 1] + s * (values[k] - values[k - 1])
            }
        }
    }

    /// sup |g|.
    pub fn sup_abs(&self) -> f64 {
        match self {
            BoundedFunction::Tabulated { values, far, .. } => values.iter().fold(far.abs(), |m, v| m.max(v.abs())),
            other => other.far().abs(),
        }
    }
}

/// ∫_{|y−x|>ρ} |g(y)| j(y − x) dy.
pub fn tail_integral(g: &BoundedFunction, x: &[f64], rho: f64, spec: &KernelSpec, cfg: &QuadConfig) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::Argument(format!("tail radius must be > 0, got {rho}")));
    }
    if spec.dimension() == 1 {
        return tail_integral_outside(g, x[0], x[0] - rho, x[0] + rho, spec, cfg);
    }
    match g {
        BoundedFunction::Zero => Ok(0.0),
        BoundedFunction::Constant { value } => Ok(value.abs() * annulus_integral(spec, rho, f64::INFINITY, cfg)?.value),
        BoundedFunction::Tabulated { .. } => Err(Error::Argument("tabulated tails are one-dimensional".into())),
    }
}

/// ∫_{y ∉ (lo, hi)} |g(y)| j(y − x) dy for N = 1 and lo < x < hi.
pub fn tail_integral_outside(g: &BoundedFunction, x: f64, lo: f64, hi: f64, spec: &KernelSpec, cfg: &QuadConfig) -> Result<f64> {
    g.validate()?;
    if !(lo < x && x < hi) {
        return Err(Error::Argument(format!("tail point {x} must lie inside ({lo}, {hi})")));
    }
    if matches!(g, BoundedFunction::Zero) {
        return Ok(0.0);
    }
    let far = g.far().abs();
    let mut total = 0.0;
    if far > 0.0 {
        total += far * half_line_integral(spec, 1.0, hi - x, cfg)?.value;
        total += far * half_line_integral(spec, -1.0, x - lo, cfg)?.value;
    }
    if let BoundedFunction::Tabulated { xs, values, .. } = g {
        // Correction (|g| − |far|)·j over the parts of the table outside (lo, hi).
        let mut breaks: Vec<f64> = xs.clone();
        for k in 1..xs.len() {
            let (v0, v1) = (values[k - 1], values[k]);
            if v0 * v1 < 0.0 {
                breaks.push(xs[k - 1] + (xs[k] - xs[k - 1]) * v0 / (v0 - v1));
            }
        }
        let (t0, t1) = (xs[0], xs[xs.len() - 1]);
        let f = |y: f64| -> Result<f64> { Ok((g.eval(y).abs() - far) * spec.eval_1d(y - x)?) };
        for (a, b) in [(t0, t1.min(lo)), (t0.max(hi), t1)] {
            if b > a {
                let guard = Guarded::new(&f);
                let r = gk::integrate(|y| guard.call(y), a, b, &breaks, cfg.tolerance());
                total += guard.finish(r)?.value;
            }
        }
    }
    Ok(total)
}

/// Result of a total-variation estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BvEstimate {
    pub value: f64,
    /// Set for sampled (finite-difference) estimates, which only bound the variation from below.
    pub lower_bound: bool,
    pub converged: bool,
}

/// ‖Dj‖(B_R ∖ B̄_r).
pub fn bv_estimate(spec: &KernelSpec, r: f64, big_r: f64, cfg: &QuadConfig) -> Result<BvEstimate> {
    if !(r > 0.0 && big_r > r && big_r.is_finite()) {
        return Err(Error::Argument(format!("BV estimate needs 0 < r < R < ∞, got r = {r}, R = {big_r}")));
    }
    let n = spec.dimension();
    let nf = n as f64;
    let sphere = if n == 1 { 2.0 } else { 2.0 * PI };
    // Variation of a ray profile g on (r, R): ∫|g'| t^{N−1} dt plus jumps.
    let ray = |deriv: &dyn Fn(f64) -> Result<f64>, jumps: &[(f64, f64)], weight: f64| -> Result<IntegralResult> {
        let f = |t: f64| -> Result<f64> { Ok(deriv(t)?.abs()) };
        let integrand = RadialIntegrand {
            f: &f,
            near: None,
            tail: TailBehavior::Unknown,
            breaks: spec.radial_breakpoints(),
            oscillation_radius: spec.oscillation_radius(),
        };
        let mut res = integrand.integrate(weight, r, big_r, cfg)?;
        for &(t, size) in jumps {
            if t > r && t < big_r {
                res.value += size.abs() * t.powf(weight);
            }
        }
        Ok(res)
    };
    match spec.family() {
        Family::Fractional { s } => {
            let e = nf + 2.0 * s;
            let d = |t: f64| Ok(-e * t.powf(-e - 1.0));
            let v = ray(&d, &[], nf - 1.0)?;
            Ok(BvEstimate { value: sphere * v.value, lower_bound: false, converged: v.converged })
        }
        Family::Radial { profile } | Family::Cone { profile, .. } => {
            if matches!(profile.shape, ProfileShape::Tabulated(_)) {
                let g = |t: f64| spec.radial_density(t).map(|rho| rho / (sphere * t.powf(nf - 1.0)));
                let scale = match spec.family() {
                    Family::Cone { .. } => None,
                    _ => Some(sphere),
                };
                return match scale {
                    Some(sc) => sampled_variation(&g, r, big_r, nf - 1.0).map(|v| BvEstimate { value: sc * v, lower_bound: true, converged: true }),
                    None => Err(Error::Unsupported("tabulated cone profiles have no BV estimate".into())),
                };
            }
            let d = |t: f64| -> Result<f64> {
                let l = profile.eval(t)?;
                let dl = profile.derivative(t).expect("closed-form profile");
                Ok(dl * t.powf(-nf) - nf * l * t.powf(-nf - 1.0))
            };
            let c = profile.cutoff;
            let jump = if c.is_finite() { vec![(c, profile.eval(c)? * c.powf(-nf))] } else { vec![] };
            let grad = ray(&d, &jump, nf - 1.0)?;
            match spec.family() {
                Family::Cone { .. } => {
                    let arcs = spec.arcs().expect("cone arcs");
                    let f = |t: f64| -> Result<f64> { Ok(profile.eval(t)? * t.powi(-2)) };
                    let boundary = log_integral(&f, r, big_r.min(c), &[c], cfg)?;
                    let value = arcs.boundary_points() as f64 * boundary.value + arcs.measure() * grad.value;
                    Ok(BvEstimate { value, lower_bound: false, converged: grad.converged && boundary.converged })
                }
                _ => Ok(BvEstimate { value: sphere * grad.value, lower_bound: false, converged: grad.converged }),
            }
        }
        Family::Custom { density } => match density {
            CustomDensity::IndicatorBall { radius } => {
                let v = if *radius > r && *radius < big_r { sphere * radius.powf(nf - 1.0) } else { 0.0 };
                Ok(BvEstimate { value: v, lower_bound: false, converged: true })
            }
            CustomDensity::Tabulated(tab) => {
                let g = |t: f64| tab.eval(t);
                let v = sampled_variation(&g, r, big_r, nf - 1.0)?;
                Ok(BvEstimate { value: sphere * v, lower_bound: true, converged: true })
            }
            CustomDensity::OscillatingOrder { odd_amplitude } => {
                let a = *odd_amplitude;
                let even_d = |t: f64| {
                    let e = crate::kernel::osc_order(t);
                    let de = (1.0 / t).sin() / (6.0 * t * t);
                    t.powf(-1.0 - e) * (-(1.0 + e) / t - de * t.ln())
                };
                let odd_d = |t: f64| if t <= 1.0 { -7.0 / 6.0 * a * t.powf(-13.0 / 6.0) } else { 0.0 };
                let plus = |t: f64| Ok(even_d(t) + odd_d(t));
                let minus = |t: f64| Ok(even_d(t) - odd_d(t));
                let p = ray(&plus, &[(1.0, a)], 0.0)?;
                let m = ray(&minus, &[(1.0, a)], 0.0)?;
                Ok(BvEstimate { value: p.value + m.value, lower_bound: false, converged: p.converged && m.converged })
            }
        },
        Family::AsymmetricPair { positive, negative } => {
            let mut total = 0.0;
            let mut conv = true;
            for b in [positive, negative] {
                let d = |t: f64| Ok(-b.exponent * b.coefficient * t.powf(-b.exponent - 1.0));
                let v = ray(&d, &[], 0.0)?;
                total += v.value;
                conv &= v.converged;
            }
            Ok(BvEstimate { value: total, lower_bound: false, converged: conv })
        }
    }
}

/// Summed finite differences of g on log-uniform grids, refined until stable.
/// Each difference is weighted by t^weight at the cell midpoint.
fn sampled_variation(g: &dyn Fn(f64) -> Result<f64>, r: f64, big_r: f64, weight: f64) -> Result<f64> {
    let mut history: Vec<f64> = Vec::new();
    let mut n = 256usize;
    loop {
        let ratio = (big_r / r).ln();
        let mut prev = g(r * (1.0 + 1e-12))?;
        let mut tv = 0.0;
        for i in 1..=n {
            let t = if i == n { big_r * (1.0 - 1e-12) } else { r * (ratio * i as f64 / n as f64).exp() };
            let v = g(t)?;
            let tm = r * (ratio * (i as f64 - 0.5) / n as f64).exp();
            tv += (v - prev).abs() * tm.powf(weight);
            prev = v;
        }
        history.push(tv);
        let k = history.len();
        if k >= 4 && history[k - 1] > 2.0 * history[k - 4] {
            return Err(Error::UnboundedVariation(format!("sampled variation grew from {} to {}", history[k - 4], history[k - 1])));
        }
        if k >= 2 && (history[k - 1] - history[k - 2]).abs() <= 1e-9 * history[k - 1].abs() {
            return Ok(tv);
        }
        if n >= 1 << 18 {
            return Ok(tv);
        }
        n *= 2;
    }
}
