//! End-to-end checks of the boundedness, growth and continuity estimates on solver output.

use std::collections::BTreeMap;
use std::fmt;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuity::{build_modulus, check_pairs, Modulus, OscillationSchedule};
use crate::error::{Error, Result};
use crate::growth::{csv_err, pick_r, GrowthParams};
use crate::kernel::{KernelSpec, TwoPointKernel};
use crate::quadrature::gk;
use crate::quadrature::{tail_integral_outside, BoundedFunction, QuadConfig};
use crate::solver::{
    assemble, build_mesh, check_solvability, lambda1_from, residual, solve, weak_action, AssembledSystem, DiscreteFunction, Mesh1D,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    /// A hypothesis of the theorem was not met; nothing was asserted.
    Refused,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::Refused => "refused",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub theorem: String,
    pub inputs_digest: String,
    /// Key of the quantity the verdict is based on.
    pub primary: String,
    pub measured: BTreeMap<String, f64>,
    pub predicted: BTreeMap<String, f64>,
    /// Relative slack: pass iff measured ≤ predicted·(1 + slack).
    pub slack: f64,
    /// 1 − measured / (predicted·(1 + slack)).
    pub margin: f64,
    pub verdict: Outcome,
    pub note: String,
}

impl VerificationReport {
    fn judged(theorem: &str, digest: String, primary: &str, measured: BTreeMap<String, f64>, predicted: BTreeMap<String, f64>, slack: f64) -> Self {
        let m = measured[primary];
        let p = predicted[primary] * (1.0 + slack);
        let verdict = if m <= p { Outcome::Pass } else { Outcome::Fail };
        let margin = if p.is_infinite() { 1.0 } else if p > 0.0 { 1.0 - m / p } else if m <= 0.0 { 0.0 } else { f64::NEG_INFINITY };
        VerificationReport { theorem: theorem.into(), inputs_digest: digest, primary: primary.into(), measured, predicted, slack, margin, verdict, note: String::new() }
    }

    fn refused(theorem: &str, digest: String, measured: BTreeMap<String, f64>, note: String) -> Self {
        VerificationReport {
            theorem: theorem.into(),
            inputs_digest: digest,
            primary: String::new(),
            measured,
            predicted: BTreeMap::new(),
            slack: 0.0,
            margin: 0.0,
            verdict: Outcome::Refused,
            note,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Outcome::Pass
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("reports serialize")
    }

    /// One row per measured quantity: theorem, quantity, measured, predicted, verdict.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["theorem", "quantity", "measured", "predicted", "verdict"]).map_err(csv_err)?;
        for (k, v) in &self.measured {
            let p = self.predicted.get(k).map(|p| format!("{p:e}")).unwrap_or_default();
            w.write_record([self.theorem.clone(), k.clone(), format!("{v:e}"), p, self.verdict.to_string()]).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }
}

/// FNV-1a digest of a canonical description of the inputs.
pub fn digest(text: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// sup |f| over [lo, hi].
pub fn sup_abs_on(f: &BoundedFunction, lo: f64, hi: f64) -> f64 {
    match f {
        BoundedFunction::Tabulated { xs, values, far } => {
            let mut m = f.eval(lo).abs().max(f.eval(hi).abs());
            for (x, v) in xs.iter().zip(values) {
                if *x > lo && *x < hi {
                    m = m.max(v.abs());
                }
            }
            if lo < xs[0] || hi > xs[xs.len() - 1] {
                m = m.max(far.abs());
            }
            m
        }
        other => other.sup_abs(),
    }
}

// ---------------------------------------------------------------- boundedness

/// ‖u‖_{L∞(Ω)} / (‖f‖_{L∞(Ω)} + ‖u‖_{L∞(Ω^c)} + ‖u‖_{L²(Ω)}), and the same without the L² term.
fn boundedness_ratios(u: &DiscreteFunction, f: &BoundedFunction) -> (f64, f64, f64) {
    let m = &u.mesh;
    let fs = sup_abs_on(f, m.a, m.b);
    let sup = u.sup_interior();
    let ext = u.sup_collar();
    let l2 = u.l2_domain();
    let ratio = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    (ratio(sup, fs + ext + l2), ratio(sup, fs + ext), l2)
}

/// Measured boundedness ratio of one solution; `bound` is a reference constant (∞ when none).
pub fn verify_boundedness(system: &AssembledSystem, u: &DiscreteFunction, f: &BoundedFunction, bound: Option<f64>) -> Result<VerificationReport> {
    let dig = digest(&format!("{:?}|{:?}|{:?}|{:?}", system.kernel, system.mesh, system.w, f));
    if let Err(e) = check_solvability(&system.kernel, &system.w, &system.cfg) {
        return Ok(VerificationReport::refused("boundedness", dig, BTreeMap::new(), e.to_string()));
    }
    let (ratio, reduced, l2) = boundedness_ratios(u, f);
    let mut measured = map(&[("ratio", ratio), ("sup_u", u.sup_interior()), ("l2_u", l2)]);
    let symmetric_nonpositive = system.kernel.is_symmetric() && sup_nonneg(&system.w) == 0.0;
    if symmetric_nonpositive {
        measured.insert("reduced_ratio".into(), reduced);
    }
    let predicted = map(&[("ratio", bound.unwrap_or(f64::INFINITY))]);
    let mut rep = VerificationReport::judged("boundedness", dig, "ratio", measured, predicted, 0.0);
    rep.note = if symmetric_nonpositive { "symmetric kernel with W ≤ 0: reduced ratio without the L² term reported".into() } else { String::new() };
    Ok(rep)
}

fn sup_nonneg(w: &BoundedFunction) -> f64 {
    match w {
        BoundedFunction::Zero => 0.0,
        BoundedFunction::Constant { value } => value.max(0.0),
        BoundedFunction::Tabulated { values, far, .. } => values.iter().fold(far.max(0.0), |m, v| m.max(*v)),
    }
}

/// Seeded smooth random right-hand side on [a, b]: c + Σ_{m≤4} a_m sin(mπ(x − a)/(b − a) + φ_m).
pub fn random_rhs(a: f64, b: f64, rng: &mut ChaCha8Rng) -> BoundedFunction {
    let c: f64 = rng.random::<f64>() * 2.0 - 1.0;
    let modes: Vec<(f64, f64)> = (0..4).map(|_| (rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * std::f64::consts::TAU)).collect();
    let xs: Vec<f64> = (0..=128).map(|i| a + (b - a) * i as f64 / 128.0).collect();
    let values = xs
        .iter()
        .map(|&x| c + modes.iter().enumerate().map(|(m, (am, ph))| am * ((m + 1) as f64 * std::f64::consts::PI * (x - a) / (b - a) + ph).sin()).sum::<f64>())
        .collect();
    BoundedFunction::Tabulated { xs, values, far: 0.0 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundednessStudy {
    pub hs: Vec<f64>,
    /// ratios[h][f].
    pub ratios: Vec<Vec<f64>>,
    /// Empirical constant per mesh: sup over the right-hand sides.
    pub constants: Vec<f64>,
    /// max/min of the per-mesh constants.
    pub spread: f64,
    pub report: VerificationReport,
}

impl BoundednessStudy {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["h", "rhs", "ratio"]).map_err(csv_err)?;
        for (h, row) in self.hs.iter().zip(&self.ratios) {
            for (i, r) in row.iter().enumerate() {
                w.write_record([format!("{h:e}"), i.to_string(), format!("{r:e}")]).map_err(csv_err)?;
            }
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }
}

/// Solves with W ≡ 0, g ≡ 0 for `n_rhs` seeded right-hand sides on each mesh width and
/// checks that the empirical constant varies by at most `tolerance` (relative) across meshes.
pub fn boundedness_study(
    k: &TwoPointKernel,
    domain: (f64, f64),
    collar: f64,
    hs: &[f64],
    n_rhs: usize,
    seed: u64,
    tolerance: f64,
    cfg: &QuadConfig,
) -> Result<BoundednessStudy> {
    if hs.is_empty() || n_rhs == 0 {
        return Err(Error::Argument("need at least one mesh width and one right-hand side".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rhs: Vec<BoundedFunction> = (0..n_rhs).map(|_| random_rhs(domain.0, domain.1, &mut rng)).collect();
    let g = BoundedFunction::Zero;
    let ratios: Vec<Vec<f64>> = hs
        .iter()
        .map(|&h| {
            let mesh = build_mesh(domain.0, domain.1, collar, h)?;
            let sys = assemble(k, &mesh, &BoundedFunction::Zero, cfg)?;
            rhs.par_iter().map(|f| Ok(boundedness_ratios(&solve(&sys, f, &g)?, f).0)).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let constants: Vec<f64> = ratios.iter().map(|r| r.iter().copied().fold(0.0, f64::max)).collect();
    let (lo, hi) = constants.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &c| (l.min(c), h.max(c)));
    let spread = hi / lo;
    let dig = digest(&format!("{k:?}|{domain:?}|{collar}|{hs:?}|{n_rhs}|{seed}"));
    let mut measured = map(&[("spread", spread), ("c_min", lo), ("c_max", hi)]);
    for (h, c) in hs.iter().zip(&constants) {
        measured.insert(format!("c_h{:e}", h), *c);
    }
    let mut report = VerificationReport::judged("boundedness", dig, "spread", measured, map(&[("spread", 1.0)]), tolerance);
    report.note = format!("empirical constant over {n_rhs} seeded right-hand sides per mesh");
    Ok(BoundednessStudy { hs: hs.to_vec(), ratios, constants, spread, report })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSweep {
    /// Discrete first eigenvalue of the symmetric form (∬(u(x)−u(y))²K_s vs ‖u‖²).
    pub lambda1: f64,
    /// W ≡ λ_res = λ₁/2 makes E(u,u) − ∫Wu² degenerate.
    pub resonance: f64,
    pub lambdas: Vec<f64>,
    pub ratios: Vec<f64>,
    pub reduced_ratios: Vec<f64>,
    pub monotone: bool,
    pub report: VerificationReport,
}

impl LambdaSweep {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["lambda", "ratio", "reduced_ratio"]).map_err(csv_err)?;
        for i in 0..self.lambdas.len() {
            w.write_record([format!("{:e}", self.lambdas[i]), format!("{:e}", self.ratios[i]), format!("{:e}", self.reduced_ratios[i])]).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }
}

/// Solves with f ≡ 0, g ≡ 1 and W ≡ λ_res(1 − 4^{−k}), k = 1..=steps: the estimate without the
/// L² term must blow up as W approaches the resonance.
pub fn lambda_sweep(k: &TwoPointKernel, mesh: &Mesh1D, steps: usize, cfg: &QuadConfig) -> Result<LambdaSweep> {
    if steps < 2 {
        return Err(Error::Argument("a sweep needs at least two steps".into()));
    }
    let base = assemble(k, mesh, &BoundedFunction::Zero, cfg)?;
    let lambda1 = lambda1_from(&base)?;
    let resonance = 0.5 * lambda1;
    let lambdas: Vec<f64> = (1..=steps).map(|i| resonance * (1.0 - 0.25f64.powi(i as i32))).collect();
    let g = BoundedFunction::Constant { value: 1.0 };
    let f = BoundedFunction::Zero;
    let mut ratios = Vec::new();
    let mut reduced = Vec::new();
    for &l in &lambdas {
        let mut sys = base.clone();
        let w = BoundedFunction::Constant { value: l };
        let scaled = assemble_w_only(&base, &w);
        sys.w = w;
        sys.mass_w = scaled;
        let u = solve(&sys, &f, &g)?;
        let (r, rr, _) = boundedness_ratios(&u, &f);
        ratios.push(r);
        reduced.push(rr);
    }
    let monotone = reduced.windows(2).all(|w| w[1] > w[0]);
    let growth = reduced[reduced.len() - 1] / reduced[0];
    let dig = digest(&format!("{k:?}|{mesh:?}|{steps}"));
    let measured = map(&[("lambda1", lambda1), ("blowup_factor", growth), ("monotone", if monotone { 1.0 } else { 0.0 }), ("full_ratio_max", ratios.iter().copied().fold(0.0, f64::max))]);
    // pass iff the reduced ratio increases monotonically and by at least a factor 10
    let inv = if monotone { 10.0 / growth } else { f64::INFINITY };
    let mut m2 = measured.clone();
    m2.insert("inverse_blowup".into(), inv);
    let mut report = VerificationReport::judged("boundedness-resonance", dig, "inverse_blowup", m2, map(&[("inverse_blowup", 1.0)]), 0.0);
    report.note = "reduced ratio (no L² term) must grow monotonically by ≥ 10× as W → λ₁/2".into();
    Ok(LambdaSweep { lambda1, resonance, lambdas, ratios, reduced_ratios: reduced, monotone, report })
}

/// W-mass for a constant weight, reusing the geometry of an assembled system.
fn assemble_w_only(base: &AssembledSystem, w: &BoundedFunction) -> crate::solver::Tridiagonal {
    let value = w.far();
    let m = &base.mesh;
    let n = m.len();
    let r = m.interior();
    let h = m.h;
    let mut t = crate::solver::Tridiagonal { diag: vec![0.0; n], off: vec![0.0; n - 1] };
    for c in r.start - 1..r.end {
        t.diag[c] += value * h / 3.0;
        t.diag[c + 1] += value * h / 3.0;
        t.off[c] += value * h / 6.0;
    }
    t
}

// ---------------------------------------------------------------- oscillation

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationTrace {
    pub center: f64,
    /// (r, O(r)) with O(r) = ½(max − min) of the nodal values in B_r(x₀).
    pub pairs: Vec<(f64, f64)>,
}

impl OscillationTrace {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["r", "oscillation"]).map_err(csv_err)?;
        for (r, o) in &self.pairs {
            w.write_record([format!("{r:e}"), format!("{o:e}")]).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }
}

pub fn measure_oscillation(u: &DiscreteFunction, x0: f64, radii: &[f64]) -> Result<OscillationTrace> {
    let m = &u.mesh;
    let (lo, hi) = m.outer();
    let mut pairs = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r >= 0.0) || x0 - r < lo || x0 + r > hi {
            return Err(Error::Argument(format!("B_{r}({x0}) leaves the meshed region [{lo}, {hi}]")));
        }
        let tol = 1e-12 * m.h;
        let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
        for (i, &v) in u.values.iter().enumerate() {
            if (m.x(i) - x0).abs() <= r + tol {
                mn = mn.min(v);
                mx = mx.max(v);
            }
        }
        pairs.push((r, if mx >= mn { 0.5 * (mx - mn) } else { 0.0 }));
    }
    Ok(OscillationTrace { center: x0, pairs })
}

// ---------------------------------------------------------------- continuity

/// Open interval (lo, hi).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::Argument(format!("empty interval ({lo}, {hi})")));
        }
        Ok(Interval { lo, hi })
    }

    /// Whether the closure of self lies in other.
    fn compactly_in(&self, other: &Interval) -> bool {
        other.lo < self.lo && self.hi < other.hi
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuityOutcome {
    pub report: VerificationReport,
    pub modulus: Modulus,
    pub schedule: OscillationSchedule,
    pub c_fu: f64,
    /// Worst |u_i − u_j| / (ω(|x_i − x_j|)c(f, u)) and its pair of node indices.
    pub worst: (f64, Option<(usize, usize)>),
}

/// u as a bounded function on the real line (P1 on the mesh, ramp, then its exterior data).
fn as_bounded(u: &DiscreteFunction) -> BoundedFunction {
    let m = &u.mesh;
    let (lo, hi) = m.outer();
    let mut xs = m.nodes();
    xs.insert(0, lo - m.h);
    xs.push(hi + m.h);
    if let BoundedFunction::Tabulated { xs: gx, .. } = &u.far {
        xs.extend(gx.iter().copied().filter(|&x| x < lo - m.h || x > hi + m.h));
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let values = xs.iter().map(|&x| u.eval(x)).collect();
    BoundedFunction::Tabulated { xs, values, far: u.far.far() }
}

fn sample_points(m: &Mesh1D, set: &Interval) -> Vec<f64> {
    let mut xs: Vec<f64> = m.nodes().into_iter().filter(|&x| x > set.lo && x < set.hi).collect();
    let eps = 1e-9 * (set.hi - set.lo);
    xs.push(set.lo + eps);
    xs.push(set.hi - eps);
    xs
}

pub struct ContinuitySetup<'a> {
    pub kernel: &'a TwoPointKernel,
    pub w: &'a BoundedFunction,
    pub a: Interval,
    pub b_star: Interval,
    pub b: Interval,
    pub n_max: usize,
}

/// Checks |u(x_i) − u(x_j)| ≤ ω(|x_i − x_j|)·c(f, u) over all node pairs in A.
pub fn verify_continuity(
    u: &DiscreteFunction,
    f: &BoundedFunction,
    setup: &ContinuitySetup<'_>,
    params: &mut GrowthParams,
    cfg: &QuadConfig,
) -> Result<ContinuityOutcome> {
    let m = &u.mesh;
    let omega_set = Interval { lo: m.a, hi: m.b };
    let (a, bs, b) = (setup.a, setup.b_star, setup.b);
    if !(a.compactly_in(&bs) && bs.compactly_in(&b) && b.lo >= omega_set.lo && b.hi <= omega_set.hi) {
        return Err(Error::Argument("need A ⋐ B_* ⋐ B ⊂ Ω".into()));
    }
    let spec = &setup.kernel.base;
    let sup_u_b = sample_points(m, &b).iter().map(|&x| u.eval(x).abs()).fold(0.0, f64::max);
    let sup_f = sup_abs_on(f, bs.lo, bs.hi);
    let pts = sample_points(m, &bs);
    let ub = as_bounded(u);
    let tails: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|&x| {
            Ok((
                tail_integral_outside(&ub, x, b.lo, b.hi, spec, cfg)?,
                tail_integral_outside(&BoundedFunction::Constant { value: 1.0 }, x, b.lo, b.hi, spec, cfg)?,
            ))
        })
        .collect::<Result<_>>()?;
    let t_u = tails.iter().map(|t| t.0).fold(0.0, f64::max);
    let c_tilde = tails.iter().map(|t| t.1).fold(0.0, f64::max);
    let lambda = spec.lambda();
    let k_tilde = 1f64.max(lambda).max(lambda * c_tilde).max(sup_abs_on(setup.w, b.lo, b.hi));
    let dist = (a.lo - bs.lo).min(bs.hi - a.hi);
    let r_star = 0.5 * params.r0.min(dist);
    let (modulus, schedule) = build_modulus(params, k_tilde, r_star, setup.n_max, spec, cfg)?;
    let c_fu = sup_u_b + sup_f + t_u;
    let idx: Vec<usize> = (0..m.len()).filter(|&i| m.x(i) > a.lo && m.x(i) < a.hi).collect();
    let xs: Vec<f64> = idx.iter().map(|&i| m.x(i)).collect();
    let us: Vec<f64> = idx.iter().map(|&i| u.values[i]).collect();
    let worst = if c_fu > 0.0 && xs.len() >= 2 {
        let (r, p) = check_pairs(&xs, &us, &modulus, c_fu)?;
        (r, p.map(|(i, j)| (idx[i], idx[j])))
    } else {
        (0.0, None)
    };
    let dig = digest(&format!("{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{}", setup.kernel, m, u.values, f, setup.w, (a, bs, b), setup.n_max));
    let measured = map(&[
        ("worst_ratio", worst.0),
        ("c_fu", c_fu),
        ("sup_u_B", sup_u_b),
        ("sup_f_Bstar", sup_f),
        ("tail_u", t_u),
        ("c_tilde", c_tilde),
        ("k_tilde", k_tilde),
        ("r_star", r_star),
        ("schedule_steps", (schedule.radii.len() - 1) as f64),
        ("omega_at_h", modulus.eval(m.h)?),
    ]);
    let mut report = VerificationReport::judged("continuity", dig, "worst_ratio", measured, map(&[("worst_ratio", 1.0)]), 0.0);
    report.note = match (&schedule.error, worst.1) {
        (Some(e), _) => format!("schedule truncated: {e}"),
        (None, Some((i, j))) => format!("worst pair: nodes {i} and {j}"),
        _ => "fewer than two nodes in A or c(f,u) = 0: vacuous".into(),
    };
    Ok(ContinuityOutcome { report, modulus, schedule, c_fu, worst })
}

// ---------------------------------------------------------------- growth

/// v solves ℒv = f in Ω = B_{factor·r}; v = `low` on B_R ∖ Ω and `high` beyond R.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrowthScenario {
    pub big_r: f64,
    pub v_inf: f64,
    /// Ω = B_{factor·r} for the r selected by the growth lemma.
    pub inner_factor: f64,
    /// Nodes per radius of Ω.
    pub cells_per_radius: usize,
    pub collar_cells: usize,
    pub low: f64,
    pub high: f64,
    pub f: f64,
}

impl Default for GrowthScenario {
    fn default() -> Self {
        GrowthScenario { big_r: 0.25, v_inf: 1.0, inner_factor: 2.0, cells_per_radius: 32, collar_cells: 8, low: -1.0, high: 1.0, f: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthOutcome {
    pub report: VerificationReport,
    pub v: DiscreteFunction,
    pub r: f64,
    pub h_r: f64,
}

fn mu_j(spec: &KernelSpec, lo: f64, hi: f64, cfg: &QuadConfig) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let err = std::cell::RefCell::new(None);
    let f = |z: f64| match spec.eval_1d(z) {
        Ok(v) => v,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let r = gk::integrate(f, lo, hi, &[], cfg.tolerance());
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    if !r.converged {
        return Err(Error::Quadrature(format!("μ_j on [{lo}, {hi}] did not converge")));
    }
    Ok(r.value)
}

fn pick_r_extending(big_r: f64, v_inf: f64, params: &mut GrowthParams, spec: &KernelSpec, cfg: &QuadConfig) -> Result<f64> {
    for _ in 0..64 {
        match pick_r(big_r, v_inf, params, spec, cfg) {
            Err(Error::NeedsMoreRadii(_)) => params.extend_radii(spec, 16, cfg)?,
            other => return other,
        }
    }
    pick_r(big_r, v_inf, params, spec, cfg)
}

/// Builds the scenario, measures the three hypotheses of the growth lemma and, only if all
/// hold, checks max_{B_{ηr}} v ≤ 1 − θ + slack (slack = 5 × the measured P1 interpolation error of v).
pub fn verify_growth(kernel: &TwoPointKernel, params: &mut GrowthParams, scenario: &GrowthScenario, cfg: &QuadConfig) -> Result<GrowthOutcome> {
    let spec = &kernel.base;
    let sc = scenario;
    if !(sc.inner_factor > 1.0 && sc.cells_per_radius >= 2 && sc.collar_cells >= 1 && sc.v_inf > 0.0) {
        return Err(Error::Argument("scenario needs inner_factor > 1, ≥ 2 cells per radius, a collar and v_∞ > 0".into()));
    }
    let r = pick_r_extending(sc.big_r, sc.v_inf, params, spec, cfg)?;
    let rho = sc.inner_factor * r;
    if rho >= sc.big_r {
        return Err(Error::Argument(format!("Ω = B_{rho} must lie inside B_R = B_{}", sc.big_r)));
    }
    let h = rho / sc.cells_per_radius as f64;
    let collar = h * sc.collar_cells as f64;
    if rho + collar >= sc.big_r {
        return Err(Error::Argument("collar reaches beyond R".into()));
    }
    let mesh = build_mesh(-rho, rho, collar, h)?;
    let g = BoundedFunction::Tabulated { xs: vec![-sc.big_r, sc.big_r], values: vec![sc.low, sc.low], far: sc.high };
    let f = BoundedFunction::Constant { value: sc.f };
    let sys = assemble(kernel, &mesh, &BoundedFunction::Zero, cfg)?;
    let v = solve(&sys, &f, &g)?;
    let h_r = params.h(spec, sc.big_r, cfg)?;
    let dig = digest(&format!("{kernel:?}|{sc:?}|{}|{}", params.theta, params.eta));

    // Gate 1: |v| ≤ v_∞ everywhere and v ≤ 1 in B_R.
    let sup_all = v.values.iter().fold(v.far.sup_abs(), |m, x| m.max(x.abs()));
    let max_in_ball = v.values.iter().copied().fold(sc.low, f64::max);
    // Gate 2: E(v, φ_i) ≤ h(R)∫φ_i on every hat in B_R; outside the mesh v sits at its minimum.
    let e = weak_action(&sys, &v)?;
    let n = mesh.len();
    let super_excess = (1..n - 1).map(|i| e[i] / h - h_r).fold(f64::NEG_INFINITY, f64::max);
    let min_v = v.values.iter().copied().fold(f64::INFINITY, f64::min);
    // Gate 3: μ_j((B_R ∖ B_r) ∩ {v ≤ 0}) ≥ ½ μ_j(B_R ∖ B_r), cell-wise attribution on the mesh.
    let total = mu_j(spec, r, sc.big_r, cfg)? + mu_j(spec, -sc.big_r, -r, cfg)?;
    let (lo_out, hi_out) = mesh.outer();
    let mut nonpos = 0.0;
    if sc.low <= 0.0 {
        nonpos += mu_j(spec, hi_out.max(r), sc.big_r, cfg)? + mu_j(spec, -sc.big_r, lo_out.min(-r), cfg)?;
    }
    for c in 0..n - 1 {
        let (x0, x1) = (mesh.x(c), mesh.x(c + 1));
        let (v0, v1) = (v.values[c], v.values[c + 1]);
        // part of [x0, x1] where the linear interpolant is ≤ 0
        let piece = if v0 <= 0.0 && v1 <= 0.0 {
            Some((x0, x1))
        } else if v0 > 0.0 && v1 > 0.0 {
            None
        } else {
            let xz = x0 + (x1 - x0) * v0 / (v0 - v1);
            Some(if v0 <= 0.0 { (x0, xz) } else { (xz, x1) })
        };
        if let Some((p, q)) = piece {
            // intersect with the annulus r < |x| < R
            for (lo, hi) in [(r, sc.big_r), (-sc.big_r, -r)] {
                let (a, b) = (p.max(lo), q.min(hi));
                if b > a {
                    nonpos += mu_j(spec, a, b, cfg)?;
                }
            }
        }
    }
    let share = nonpos / total;
    let tol = 1e-9;
    let mut measured = map(&[
        ("r", r),
        ("h_R", h_r),
        ("sup_abs_v", sup_all),
        ("max_v_B_R", max_in_ball),
        ("min_v", min_v),
        ("supersolution_excess", super_excess),
        ("mu_share_nonpositive", share),
    ]);
    let failed = if sup_all > sc.v_inf + tol || max_in_ball > 1.0 + tol {
        Some(format!("bound hypothesis failed: sup|v| = {sup_all}, max_(B_R) v = {max_in_ball}"))
    } else if super_excess > tol || min_v < sc.low - tol {
        Some(format!("supersolution hypothesis ℒv ≤ h(R) failed: excess {super_excess:e}, min v = {min_v}"))
    } else if share < 0.5 {
        Some(format!("measure hypothesis failed: μ_j share of {{v ≤ 0}} is {share}"))
    } else {
        None
    };
    if let Some(why) = failed {
        return Ok(GrowthOutcome { report: VerificationReport::refused("growth", dig, measured, why), v, r, h_r });
    }
    let er = params.eta * r;
    let near: Vec<usize> = (0..n).filter(|&i| mesh.x(i).abs() <= er).collect();
    let max_v = near.iter().map(|&i| v.values[i]).chain([v.eval(-er), v.eval(er)]).fold(f64::NEG_INFINITY, f64::max);
    // max cell-wise P1 interpolation error h²|v''|/8, measured by second differences on the mesh
    let interp = (1..n - 1).map(|i| (v.values[i + 1] - 2.0 * v.values[i] + v.values[i - 1]).abs() / 8.0).fold(0.0, f64::max);
    let slack_abs = 5.0 * interp;
    let bound = 1.0 - params.theta;
    measured.insert("max_v_B_eta_r".into(), max_v);
    measured.insert("interpolation_error".into(), interp);
    // conservative margin: the continuum maximum may exceed the discrete one by the slack
    measured.insert("conclusion_margin".into(), bound - slack_abs - max_v);
    let mut pred = map(&[("max_v_B_eta_r", bound)]);
    pred.insert("theta".into(), params.theta);
    let mut report = VerificationReport::judged("growth", dig, "max_v_B_eta_r", measured, pred, slack_abs / bound);
    report.note = format!("η r = {er:e}, h = {h:e}");
    Ok(GrowthOutcome { report, v, r, h_r })
}

/// Runs the scenario at cells_per_radius·2^k, k = 0..levels, and checks that the conclusion
/// margin does not decrease under refinement.
pub fn growth_refinement(
    kernel: &TwoPointKernel,
    params: &mut GrowthParams,
    scenario: &GrowthScenario,
    levels: usize,
    cfg: &QuadConfig,
) -> Result<(Vec<GrowthOutcome>, bool)> {
    let mut out = Vec::new();
    for k in 0..levels {
        let sc = GrowthScenario { cells_per_radius: scenario.cells_per_radius << k, collar_cells: scenario.collar_cells << k, ..scenario.clone() };
        out.push(verify_growth(kernel, params, &sc, cfg)?);
    }
    let margins: Vec<f64> = out.iter().filter_map(|o| o.report.measured.get("conclusion_margin").copied()).collect();
    let monotone = margins.len() == out.len() && margins.windows(2).all(|w| w[1] >= w[0]);
    Ok((out, monotone))
}

/// Solution residual of a solve, for reports.
pub fn solve_residual(system: &AssembledSystem, u: &DiscreteFunction, f: &BoundedFunction) -> Result<f64> {
    Ok(residual(system, u, f)?.max_abs)
}
