//! Constants of the growth lemma: the bump β, the radii sequence r_k with
//! m(r_k) ≤ K₀ r_k L(r_k, 2r_k), ϑ₀, and the threshold function h.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::{self, Condition, ConditionReport, Verdict};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::quadrature::{annulus_integral, first_moment, l_total, QuadConfig};

/// β(s) = 1/(1+s²).
pub fn beta(s: f64) -> f64 {
    1.0 / (1.0 + s * s)
}

/// The fixed bump β(s) = (1+s²)⁻¹ and its constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpConstants {
    pub beta_half: f64,
    pub beta_one: f64,
    /// sup |∇b| = 3√3/8, attained at |x| = 1/√3.
    pub grad_sup: f64,
    /// c_b = 2·max(sup|b|, sup|∇b|).
    pub c_b: f64,
}

pub fn bump_constants() -> BumpConstants {
    let grad_sup = 3.0 * 3f64.sqrt() / 8.0;
    BumpConstants { beta_half: beta(0.5), beta_one: beta(1.0), grad_sup, c_b: 2.0 * grad_sup.max(1.0) }
}

/// Which (A3) alternative the constants were derived from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum GrowthCase {
    Doubling { c0: f64, sigma: f64 },
    BoundedVariation { m: f64, theta0: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthParams {
    pub alpha: f64,
    pub k0: f64,
    pub vartheta: f64,
    pub eta: f64,
    pub a: f64,
    pub theta: f64,
    pub d_a: f64,
    pub c_b: f64,
    pub case: GrowthCase,
    pub lambda: f64,
    pub r0: f64,
    /// Gårding constant used in the radius selection (0 for symmetric kernels).
    pub garding_c: f64,
    /// h(r) = h_constant · L(r).
    pub h_constant: f64,
    pub radii: Vec<f64>,
    /// (r, h(r)) on R₀·2^{-k/4}, decreasing r.
    pub h_table: Vec<(f64, f64)>,
}

impl GrowthParams {
    /// h(r) = C·L(r), with L nonincreasing so inf_{s≤r} L(s) = L(r).
    pub fn h(&self, spec: &KernelSpec, r: f64, cfg: &QuadConfig) -> Result<f64> {
        Ok(self.h_constant * l_total(spec, r, cfg)?.value)
    }

    /// Appends `extra` further radii below the current last one.
    pub fn extend_radii(&mut self, spec: &KernelSpec, extra: usize, cfg: &QuadConfig) -> Result<()> {
        let start = self.radii.last().copied().unwrap_or(1.0);
        let more = search_radii(spec, self.k0, start, extra, cfg)?;
        self.radii.extend(more);
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("growth parameters serialize")
    }

    /// Two-column CSV (r, h).
    pub fn h_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["r", "h"]).map_err(csv_err)?;
        for (r, h) in &self.h_table {
            w.write_record([format!("{r:e}"), format!("{h:e}")]).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }

    /// CSV (k, r_k).
    pub fn radii_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["k", "r_k"]).map_err(csv_err)?;
        for (k, r) in self.radii.iter().enumerate() {
            w.write_record([(k + 1).to_string(), format!("{r:e}")]).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Relative safety margin applied to measured values in the radius test.
pub const RADIUS_MARGIN: f64 = 1e-7;
/// Dyadic levels without any admissible radius before the search gives up.
pub const SEARCH_FLOOR_LEVELS: usize = 40;

/// m(r) ≤ K₀ r L(r, 2r), evaluated with a relative margin.
pub fn radius_admissible(spec: &KernelSpec, k0: f64, r: f64, cfg: &QuadConfig) -> Result<bool> {
    let m = first_moment(spec, r, cfg)?.value;
    let l = annulus_integral(spec, r, 2.0 * r, cfg)?.value;
    Ok(m <= k0 * r * l * (1.0 - RADIUS_MARGIN))
}

/// Largest admissible radius in [c/2, c] on the grid c·2^{-i/8}, if any.
fn admissible_in_octave(spec: &KernelSpec, k0: f64, c: f64, cfg: &QuadConfig) -> Result<Option<f64>> {
    for i in 0..8 {
        let r = c * 2f64.powf(-(i as f64) / 8.0);
        if radius_admissible(spec, k0, r, cfg)? {
            return Ok(Some(r));
        }
    }
    Ok(None)
}

fn search_radii(spec: &KernelSpec, k0: f64, start: f64, count: usize, cfg: &QuadConfig) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut top = start;
    let mut misses = 0usize;
    const BATCH: usize = 8;
    while out.len() < count {
        // Octaves top/2^{b+1} .. top/2^{b}, probed in parallel, consumed in order.
        let found: Vec<Result<Option<f64>>> = (0..BATCH)
            .into_par_iter()
            .map(|b| admissible_in_octave(spec, k0, top * 2f64.powi(-(b as i32) - 1), cfg))
            .collect();
        let mut last = top * 2f64.powi(-(BATCH as i32));
        for (b, res) in found.into_iter().enumerate() {
            match res? {
                Some(r) => {
                    out.push(r);
                    misses = 0;
                    if out.len() == count {
                        return Ok(out);
                    }
                }
                None => {
                    misses += 1;
                    if misses >= SEARCH_FLOOR_LEVELS {
                        return Err(Error::SearchFailure(format!(
                            "no radius with m(r) ≤ K₀ r L(r,2r) in {SEARCH_FLOOR_LEVELS} dyadic levels below {:e}",
                            top * 2f64.powi(-(b as i32))
                        )));
                    }
                }
            }
            last = top * 2f64.powi(-(b as i32) - 1);
        }
        top = last;
    }
    Ok(out)
}

/// Strictly decreasing radii r_1 > r_2 > … (starting below 1) with m(r_k) ≤ K₀ r_k L(r_k, 2r_k).
pub fn find_radii(spec: &KernelSpec, k0: f64, count: usize, cfg: &QuadConfig) -> Result<Vec<f64>> {
    if !(k0 > 0.0 && k0.is_finite()) {
        return Err(Error::Argument(format!("K₀ must be positive, got {k0}")));
    }
    if count == 0 {
        return Ok(vec![]);
    }
    let a2 = conditions::check_a2(spec, cfg)?;
    if a2.verdict != Verdict::Pass {
        return Err(Error::Precondition(format!("radii need a non-integrable density (A2 verdict: {})", a2.verdict)));
    }
    search_radii(spec, k0, 1.0, count, cfg)
}

/// Smallest 1-based k with r_k < R and L(ϑ r_k) ≤ 2(K₀/ϑ + 1) L(r_k, R) for ϑ ∈ {1, ½, ¼, ϑ_min}.
pub fn k0_for(big_r: f64, k0: f64, radii: &[f64], theta_min: f64, spec: &KernelSpec, cfg: &QuadConfig) -> Result<usize> {
    let grid = [1.0, 0.5, 0.25, theta_min];
    for (i, &r) in radii.iter().enumerate() {
        if r >= big_r {
            continue;
        }
        let rhs = annulus_integral(spec, r, big_r, cfg)?.value;
        let mut ok = true;
        for &t in &grid {
            if l_total(spec, t * r, cfg)?.value > 2.0 * (k0 / t + 1.0) * rhs {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(i + 1);
        }
    }
    Err(Error::NeedsMoreRadii(format!("no radius below R = {big_r} satisfies the L(ϑ r_k) bound")))
}

/// (ϑM/(1−ϑ))(2K₀/(1−ϑ) + 2).
pub fn theta0_lhs(theta: f64, k0: f64, m: f64) -> f64 {
    theta * m / (1.0 - theta) * (2.0 * k0 / (1.0 - theta) + 2.0)
}

/// Largest ϑ ≤ ½ with theta0_lhs(ϑ) ≤ ¼, by bisection to 1e-10.
pub fn theta0_for(k0: f64, m: f64) -> Result<f64> {
    if !(k0 > 0.0) || !(m >= 0.0) {
        return Err(Error::Argument(format!("need K₀ > 0 and M ≥ 0, got {k0}, {m}")));
    }
    if theta0_lhs(0.5, k0, m) <= 0.25 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0, 0.5);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if theta0_lhs(mid, k0, m) <= 0.25 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// K₀ = 2·8/(2^α − 1).
pub fn default_k0(alpha: f64) -> f64 {
    16.0 / (2f64.powf(alpha) - 1.0)
}

/// Options for [`growth_params`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrowthOptions {
    pub radii_count: usize,
    pub garding_c: f64,
    /// Overrides the default K₀.
    pub k0: Option<f64>,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        GrowthOptions { radii_count: 24, garding_c: 0.0, k0: None }
    }
}

/// Strictness factor for the open inequality on a in the bounded-variation case.
pub const STRICT_A: f64 = 1.0 + 1e-9;

/// Assembles all constants of the growth lemma from certified condition reports.
pub fn growth_params(spec: &KernelSpec, reports: &[ConditionReport], r0: f64, opts: GrowthOptions, cfg: &QuadConfig) -> Result<GrowthParams> {
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::Argument(format!("R₀ must be positive and finite, got {r0}")));
    }
    let passed = |c: Condition| conditions::find(reports, c).filter(|r| r.passed());
    let a1 = passed(Condition::A1 { gamma: 0.0 }).ok_or_else(|| Error::Precondition("(A1) not certified".into()))?;
    passed(Condition::A2).ok_or_else(|| Error::Precondition("(A2) not certified".into()))?;
    let gamma = a1.constant("gamma").expect("A1 reports carry γ");
    let alpha = match passed(Condition::B).and_then(|r| r.constant("alpha")) {
        Some(a) => a,
        None if gamma < 1.0 => 1.0 - gamma,
        None => return Err(Error::Precondition("no growth exponent α available (B not certified and γ = 1)".into())),
    };
    if !(alpha > 0.0) {
        return Err(Error::Precondition(format!("α must be positive, got {alpha}")));
    }
    let k0 = opts.k0.unwrap_or_else(|| default_k0(alpha));
    if !(k0 > 8.0 / (2f64.powf(alpha) - 1.0)) {
        return Err(Error::Argument(format!("K₀ = {k0} must exceed 8/(2^α − 1)")));
    }
    let bump = bump_constants();
    let lambda = spec.lambda();
    let (case, vartheta, a, h_constant) = if let Some(rep) = passed(Condition::A31) {
        let (c0, sigma) = (rep.constant("c0").expect("c0"), rep.constant("sigma").expect("σ"));
        let factor = k0 / sigma + 1.0;
        let a = (16.0 * lambda * lambda * bump.c_b / c0 * factor).max(1.0);
        (GrowthCase::Doubling { c0, sigma }, sigma, a, c0 / (lambda * 33.0 * factor))
    } else if let Some(rep) = passed(Condition::A32) {
        let m = rep.constant("M").expect("M");
        let theta0 = theta0_for(k0, m)?;
        let factor = k0 / theta0 + 1.0;
        let a = (32.0 * lambda * lambda * bump.c_b * factor).max(1.0) * STRICT_A;
        (GrowthCase::BoundedVariation { m, theta0 }, theta0, a, 1.0 / (lambda * 33.0 * factor))
    } else {
        return Err(Error::Unsupported("neither (A3_1) nor (A3_2) is certified".into()));
    };
    let radii = search_radii(spec, k0, 1.0, opts.radii_count, cfg)?;
    let mut h_table = Vec::new();
    for k in 0..=160 {
        let r = r0 * 2f64.powf(-(k as f64) / 4.0);
        match l_total(spec, r, cfg) {
            Ok(l) if l.converged => h_table.push((r, h_constant * l.value)),
            _ => break,
        }
    }
    Ok(GrowthParams {
        alpha,
        k0,
        vartheta,
        eta: vartheta / 2.0,
        a,
        theta: (bump.beta_half - bump.beta_one) / a,
        d_a: 1.0 + bump.beta_one / a,
        c_b: bump.c_b,
        case,
        lambda,
        r0,
        garding_c: opts.garding_c,
        h_constant,
        radii,
        h_table,
    })
}

/// Right-hand coefficient of the radius-selection inequality.
fn selection_coefficient(params: &GrowthParams, v_inf: f64) -> f64 {
    match params.case {
        GrowthCase::Doubling { c0, .. } => c0 / (params.lambda * params.lambda * 4.0 * (v_inf + 2.0)),
        GrowthCase::BoundedVariation { .. } => 1.0 / (8.0 * (v_inf + 2.0)),
    }
}

/// r = r_k for the smallest k ≥ k₀ with c/Λ + L(R − r_k, ∞) < coef·L(r_k, R).
pub fn pick_r(big_r: f64, v_inf: f64, params: &GrowthParams, spec: &KernelSpec, cfg: &QuadConfig) -> Result<f64> {
    if !(big_r > 0.0 && big_r < params.r0) {
        return Err(Error::Argument(format!("R = {big_r} must lie in (0, R₀ = {})", params.r0)));
    }
    if !(v_inf > 0.0) {
        return Err(Error::Argument(format!("v_∞ must be positive, got {v_inf}")));
    }
    let start = k0_for(big_r, params.k0, &params.radii, params.vartheta, spec, cfg)?;
    let coef = selection_coefficient(params, v_inf);
    let cap = match params.case {
        GrowthCase::BoundedVariation { .. } => big_r.min(params.r0 - big_r),
        GrowthCase::Doubling { .. } => big_r,
    };
    for &r in &params.radii[start - 1..] {
        if r > cap || r >= big_r {
            continue;
        }
        let lhs = params.garding_c / params.lambda + annulus_integral(spec, big_r - r, f64::INFINITY, cfg)?.value;
        let rhs = coef * annulus_integral(spec, r, big_r, cfg)?.value;
        if lhs < rhs {
            return Ok(r);
        }
    }
    Err(Error::NeedsMoreRadii(format!("radii exhausted selecting r for R = {big_r}, v_∞ = {v_inf}")))
}
