//! The explicit modulus of continuity ω obtained by iterating the oscillation
//! decay O(r') ≤ max{κ O(R), 2K̃ c(f,u)/h(R)}, κ = (2−θ)/2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::growth::{csv_err, pick_r, GrowthParams};
use crate::kernel::KernelSpec;
use crate::quadrature::QuadConfig;

/// Nondecreasing continuous piecewise-linear ω with ω(0) = 0, constant after the last breakpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Modulus {
    breakpoints: Vec<(f64, f64)>,
}

impl Modulus {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.first() != Some(&(0.0, 0.0)) {
            return Err(Error::Argument("a modulus starts at (0, 0)".into()));
        }
        for w in breakpoints.windows(2) {
            if !(w[1].0 > w[0].0) || !(w[1].1 >= w[0].1) || !w[1].1.is_finite() {
                return Err(Error::Argument(format!("breakpoints must increase in t and be nondecreasing in ω: {:?} → {:?}", w[0], w[1])));
            }
        }
        Ok(Modulus { breakpoints })
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Argument(format!("ω is defined for t ≥ 0, got {t}")));
        }
        let bp = &self.breakpoints;
        let i = bp.partition_point(|p| p.0 <= t);
        if i == bp.len() {
            return Ok(bp[bp.len() - 1].1);
        }
        let (t0, v0) = bp[i - 1];
        let (t1, v1) = bp[i];
        Ok(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
    }

    /// Two-column CSV (t, omega).
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["t", "omega"]).map_err(csv_err)?;
        for (t, v) in &self.breakpoints {
            w.write_record([format!("{t:e}"), format!("{v:e}")]).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }
}

pub fn eval_modulus(omega: &Modulus, t: f64) -> Result<f64> {
    omega.eval(t)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationSchedule {
    /// r_0 = R_*, r_1, …
    pub radii: Vec<f64>,
    /// h(r_n).
    pub h: Vec<f64>,
    pub kappa: f64,
    pub k_tilde: f64,
    /// g_0 = 0 by convention (empty max).
    pub g: Vec<f64>,
    /// max{κⁿ, g_n}.
    pub g_tilde_raw: Vec<f64>,
    /// Running max of tails of `g_tilde_raw` (nonincreasing).
    pub g_tilde: Vec<f64>,
    /// Set when the radius recursion stopped early.
    pub error: Option<String>,
}

impl OscillationSchedule {
    /// CSV (n, r_n, g_n, g̃_n).
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["n", "r_n", "g_n", "g_tilde_n"]).map_err(csv_err)?;
        for n in 0..self.g.len() {
            w.write_record([n.to_string(), format!("{:e}", self.radii[n]), format!("{:e}", self.g[n]), format!("{:e}", self.g_tilde[n])])
                .map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }
}

/// g_n = 2K̃ max_{i=1..n} κ^{i−1}/h(r_{n−i}) for n ≥ 1.
pub fn g_term(n: usize, kappa: f64, k_tilde: f64, h: &[f64]) -> f64 {
    (1..=n).map(|i| kappa.powi(i as i32 - 1) / h[n - i]).fold(0.0, f64::max) * 2.0 * k_tilde
}

/// One step of the recursion: r' = η·pick_r(R, 2h(R)/K̃) and the bound max{κ O_R, 2K̃ c/h(R)}.
pub fn oscillation_step(
    o_r: f64,
    big_r: f64,
    params: &GrowthParams,
    k_tilde: f64,
    c_fu: f64,
    spec: &KernelSpec,
    cfg: &QuadConfig,
) -> Result<(f64, f64)> {
    if !(o_r >= 0.0) || !(c_fu > 0.0) {
        return Err(Error::Argument(format!("need O(R) ≥ 0 and c(f,u) > 0, got {o_r}, {c_fu}")));
    }
    let h = params.h(spec, big_r, cfg)?;
    let r = pick_r(big_r, 2.0 * h / k_tilde, params, spec, cfg)?;
    let kappa = (2.0 - params.theta) / 2.0;
    Ok((params.eta * r, (kappa * o_r).max(2.0 * k_tilde * c_fu / h)))
}

/// Radii requested per extension when the growth radii run out.
const RADII_EXTENSION: usize = 16;
/// Upper bound on the radii sequence length during extension.
const MAX_RADII: usize = 4096;

fn next_radius(r: f64, v_inf: f64, params: &mut GrowthParams, spec: &KernelSpec, cfg: &QuadConfig) -> Result<f64> {
    loop {
        match pick_r(r, v_inf, params, spec, cfg) {
            Err(Error::NeedsMoreRadii(why)) => {
                if params.radii.len() >= MAX_RADII {
                    return Err(Error::NeedsMoreRadii(why));
                }
                params.extend_radii(spec, RADII_EXTENSION, cfg)?;
            }
            other => return other,
        }
    }
}

/// Builds the schedule r_0 = R_*, r_{n+1} = η·pick_r(r_n, 2h(r_n)/K̃) up to n_max and the modulus ω.
///
/// `params.radii` is extended in place when the selection needs smaller radii.
/// A failing radius search truncates the schedule and records the error in it.
pub fn build_modulus(
    params: &mut GrowthParams,
    k_tilde: f64,
    r_star: f64,
    n_max: usize,
    spec: &KernelSpec,
    cfg: &QuadConfig,
) -> Result<(Modulus, OscillationSchedule)> {
    if n_max < 1 {
        return Err(Error::Argument("n_max must be at least 1".into()));
    }
    if !(r_star > 0.0 && r_star <= 0.5 * params.r0) {
        return Err(Error::Argument(format!("R_* = {r_star} must lie in (0, R₀/2 = {}]", 0.5 * params.r0)));
    }
    if !(k_tilde >= params.lambda.max(1.0)) {
        return Err(Error::Argument(format!("K̃ = {k_tilde} must be ≥ max{{1, Λ}}")));
    }
    let kappa = (2.0 - params.theta) / 2.0;
    let mut radii = vec![r_star];
    let mut h = vec![params.h(spec, r_star, cfg)?];
    let mut error = None;
    while radii.len() <= n_max {
        let r = *radii.last().expect("non-empty");
        let step = next_radius(r, 2.0 * h[h.len() - 1] / k_tilde, params, spec, cfg)
            .map(|rk| params.eta * rk)
            .and_then(|next| params.h(spec, next, cfg).map(|hn| (next, hn)));
        match step {
            Ok((next, hn)) if next > 0.0 && hn.is_finite() => {
                radii.push(next);
                h.push(hn);
            }
            Ok((next, hn)) => {
                error = Some(format!("radius recursion left floating-point range at r = {next:e} (h = {hn:e})"));
                break;
            }
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
    }
    let n_eff = radii.len() - 1;
    if n_eff == 0 {
        return Err(Error::SearchFailure(error.unwrap_or_default()));
    }
    let g: Vec<f64> = (0..=n_eff).map(|n| if n == 0 { 0.0 } else { g_term(n, kappa, k_tilde, &h) }).collect();
    let g_tilde_raw: Vec<f64> = g.iter().enumerate().map(|(n, &gn)| kappa.powi(n as i32).max(gn)).collect();
    let mut g_tilde = g_tilde_raw.clone();
    for n in (0..n_eff).rev() {
        g_tilde[n] = g_tilde[n].max(g_tilde[n + 1]);
    }
    // ω̃ = g̃_{n−1} on (r_{n+1}, r_n] for n ≥ 1 and max{2, g̃_0} beyond r_1; ω interpolates
    // linearly through (r_{n+1}, g̃_{n−1}), which dominates ω̃ on every interval.
    let mut bp = vec![(0.0, 0.0)];
    for n in (1..n_eff).rev() {
        bp.push((radii[n + 1], g_tilde[n - 1]));
    }
    bp.push((radii[1], g_tilde[0].max(2.0)));
    let modulus = Modulus::new(bp)?;
    let schedule = OscillationSchedule { radii, h, kappa, k_tilde, g, g_tilde_raw, g_tilde, error };
    Ok((modulus, schedule))
}

/// Worst ratio |u_i − u_j| / (ω(|x_i − x_j|)·c) over all pairs, with the attaining pair.
/// A ratio ≤ 1 means the continuity estimate holds on the sample.
pub fn check_pairs(xs: &[f64], us: &[f64], omega: &Modulus, c_fu: f64) -> Result<(f64, Option<(usize, usize)>)> {
    if xs.len() != us.len() {
        return Err(Error::Argument("positions and values differ in length".into()));
    }
    let mut worst = (0.0, None);
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let diff = (us[i] - us[j]).abs();
            if diff == 0.0 {
                continue;
            }
            let bound = omega.eval((xs[i] - xs[j]).abs())? * c_fu;
            let ratio = if bound > 0.0 { diff / bound } else { f64::INFINITY };
            if ratio > worst.0 {
                worst = (ratio, Some((i, j)));
            }
        }
    }
    Ok(worst)
}
