//! Kernel densities `j` and two-point kernels `K(x, y)`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A positive radial table interpolated linearly in log–log coordinates
/// (linearly in value where an endpoint vanishes).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl Table {
    fn validate(&self, path: &str) -> Result<()> {
        if self.radii.len() < 2 || self.radii.len() != self.values.len() {
            return Err(Error::validation(path, "table needs ≥ 2 radii and one value per radius"));
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::validation(format!("{path}.radii"), "radii must be positive and finite"));
        }
        if self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation(format!("{path}.radii"), "radii must be strictly increasing"));
        }
        if self.values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::validation(format!("{path}.values"), "values must be finite and ≥ 0"));
        }
        Ok(())
    }

    pub fn lo(&self) -> f64 {
        self.radii[0]
    }

    pub fn hi(&self) -> f64 {
        *self.radii.last().expect("validated table")
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let (lo, hi) = (self.lo(), self.hi());
        if !(t >= lo && t <= hi) {
            return Err(Error::Extrapolation { radius: t, lo, hi });
        }
        let k = self.radii.partition_point(|&r| r <= t).clamp(1, self.radii.len() - 1);
        let (r0, r1) = (self.radii[k - 1], self.radii[k]);
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        if v0 > 0.0 && v1 > 0.0 {
            let s = (t / r0).ln() / (r1 / r0).ln();
            Ok((v0.ln() + s * (v1 / v0).ln()).exp())
        } else {
            Ok(v0 + (v1 - v0) * (t - r0) / (r1 - r0))
        }
    }
}

/// Shape of the radial profile ℓ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileShape {
    /// ℓ ≡ 1 up to the cutoff.
    Constant,
    /// ℓ(r) = 1 − sin(ln r).
    OneMinusSinLog,
    /// ℓ(r) = r^{−rho}.
    Power { rho: f64 },
    Tabulated(Table),
}

fn infinite() -> f64 {
    f64::INFINITY
}

fn is_infinite(x: &f64) -> bool {
    x.is_infinite()
}

/// Radial profile ℓ, vanishing beyond `cutoff`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    #[serde(flatten)]
    pub shape: ProfileShape,
    #[serde(default = "infinite", skip_serializing_if = "is_infinite")]
    pub cutoff: f64,
}

impl Profile {
    pub fn new(shape: ProfileShape, cutoff: f64) -> Self {
        Profile { shape, cutoff }
    }

    fn validate(&self, path: &str) -> Result<()> {
        if !(self.cutoff > 0.0) {
            return Err(Error::validation(format!("{path}.cutoff"), "cutoff must be > 0"));
        }
        match &self.shape {
            ProfileShape::Power { rho } if !rho.is_finite() => {
                Err(Error::validation(format!("{path}.rho"), "rho must be finite"))
            }
            ProfileShape::Tabulated(t) => t.validate(path),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if t > self.cutoff {
            return Ok(0.0);
        }
        Ok(match &self.shape {
            ProfileShape::Constant => 1.0,
            ProfileShape::OneMinusSinLog => 1.0 - t.ln().sin(),
            ProfileShape::Power { rho } => t.powf(-rho),
            ProfileShape::Tabulated(tab) => tab.eval(t)?,
        })
    }

    /// ℓ'(t) for closed-form shapes; `None` for tabulated profiles.
    pub fn derivative(&self, t: f64) -> Option<f64> {
        if t > self.cutoff {
            return Some(0.0);
        }
        match &self.shape {
            ProfileShape::Constant => Some(0.0),
            ProfileShape::OneMinusSinLog => Some(-t.ln().cos() / t),
            ProfileShape::Power { rho } => Some(-rho * t.powf(-rho - 1.0)),
            ProfileShape::Tabulated(_) => None,
        }
    }

    /// Upper bound of ℓ near 0 as `(c, q)` with ℓ(t) ≤ c·t^{−q}; exactness flag.
    fn near_bound(&self) -> Option<(f64, f64, bool)> {
        match &self.shape {
            ProfileShape::Constant => Some((1.0, 0.0, true)),
            ProfileShape::OneMinusSinLog => Some((2.0, 0.0, false)),
            ProfileShape::Power { rho } => Some((1.0, *rho, true)),
            ProfileShape::Tabulated(_) => None,
        }
    }
}

/// One side of the asymmetric pair: `coefficient · |h|^{−exponent}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerBranch {
    pub coefficient: f64,
    pub exponent: f64,
}

/// Densities outside the radial/cone families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CustomDensity {
    /// Radially symmetric tabulated j(|z|).
    Tabulated(Table),
    /// j = 1 on B_radius.
    IndicatorBall { radius: f64 },
    /// N = 1 only: j(h) = |h|^{−1−(cos(1/h)+4)/6} + odd_amplitude·h|h|^{−2−1/6}·1_{|h|≤1}.
    OscillatingOrder { odd_amplitude: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Family {
    /// j(z) = |z|^{−N−2s}.
    Fractional { s: f64 },
    /// j(z) = ℓ(|z|)|z|^{−N}.
    Radial { profile: Profile },
    /// N = 2: j(z) = ℓ(|z|)|z|^{−2}·1_A(z/|z|); arcs are `[start, end]` angles in radians.
    Cone { arcs: Vec<[f64; 2]>, profile: Profile },
    Custom { density: CustomDensity },
    /// N = 1: j(h) = j⁺(h) for h > 0 and j⁻(−h) for h < 0.
    AsymmetricPair { positive: PowerBranch, negative: PowerBranch },
}

/// Raw, unvalidated kernel description as read from a configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: Family,
    #[serde(default = "one_u8")]
    pub dimension: u8,
    #[serde(default = "one_f64")]
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_hint: Option<f64>,
}

fn one_u8() -> u8 {
    1
}
fn one_f64() -> f64 {
    1.0
}

/// Merged arc set on the unit circle, stored as disjoint `[start, end]` intervals in `[0, 2π]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcSet {
    pieces: Vec<(f64, f64)>,
}

const ARC_EPS: f64 = 1e-12;

impl ArcSet {
    pub fn new(arcs: &[[f64; 2]]) -> Result<Self> {
        if arcs.is_empty() {
            return Err(Error::validation("family.arcs", "arc set is empty"));
        }
        let mut raw = Vec::new();
        for (i, [s, e]) in arcs.iter().copied().enumerate() {
            if !(s.is_finite() && e.is_finite() && e > s) {
                return Err(Error::validation(format!("family.arcs[{i}]"), "arc needs finite start < end"));
            }
            let len = e - s;
            if len >= TAU - ARC_EPS {
                raw.push((0.0, TAU));
                continue;
            }
            let s0 = s.rem_euclid(TAU);
            if s0 + len <= TAU {
                raw.push((s0, s0 + len));
            } else {
                raw.push((s0, TAU));
                raw.push((0.0, s0 + len - TAU));
            }
        }
        Ok(ArcSet { pieces: merge(raw) })
    }

    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.pieces
    }

    /// One-dimensional measure H¹(A).
    pub fn measure(&self) -> f64 {
        self.pieces.iter().map(|(s, e)| e - s).sum()
    }

    /// Number of boundary points H⁰(∂A) on the circle.
    pub fn boundary_points(&self) -> usize {
        let k = self.pieces.len();
        if k == 1 && self.pieces[0].1 - self.pieces[0].0 >= TAU - ARC_EPS {
            return 0;
        }
        let wraps = k >= 2 && self.pieces[0].0 <= ARC_EPS && self.pieces[k - 1].1 >= TAU - ARC_EPS;
        if wraps {
            2 * (k - 1)
        } else {
            2 * k
        }
    }

    pub fn contains(&self, angle: f64) -> bool {
        let a = angle.rem_euclid(TAU);
        self.pieces.iter().any(|&(s, e)| a >= s - ARC_EPS && a <= e + ARC_EPS)
    }

    /// Whether A = −A.
    pub fn is_symmetric(&self) -> bool {
        let shifted: Vec<[f64; 2]> = self.pieces.iter().map(|&(s, e)| [s + PI, e + PI]).collect();
        match ArcSet::new(&shifted) {
            Ok(other) => {
                other.pieces.len() == self.pieces.len()
                    && other
                        .pieces
                        .iter()
                        .zip(&self.pieces)
                        .all(|(a, b)| (a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9)
            }
            Err(_) => false,
        }
    }
}

fn merge(mut raw: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (s, e) in raw {
        match out.last_mut() {
            Some(last) if s <= last.1 + ARC_EPS => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

/// `ρ(t) ≤ Σ c·t^{−1−q}` on one side of `threshold`; `exact` when equality holds there.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerEnvelope {
    pub terms: Vec<(f64, f64)>,
    pub threshold: f64,
    pub exact: bool,
}

impl PowerEnvelope {
    /// ∫_0^δ t^a·envelope dt, or `None` when not integrable at 0.
    pub fn integral_below(&self, a: f64, delta: f64) -> Option<f64> {
        let mut s = 0.0;
        for &(c, q) in &self.terms {
            let k = a - q;
            if k <= 0.0 {
                return None;
            }
            s += c * delta.powf(k) / k;
        }
        Some(s)
    }

    /// ∫_T^∞ t^a·envelope dt, or `None` when not integrable at ∞.
    pub fn integral_above(&self, a: f64, big_t: f64) -> Option<f64> {
        let mut s = 0.0;
        for &(c, p) in &self.terms {
            let k = p - a;
            if k <= 0.0 {
                return None;
            }
            s += c * big_t.powf(-k) / k;
        }
        Some(s)
    }

    pub fn scaled(&self, f: f64) -> Self {
        PowerEnvelope { terms: self.terms.iter().map(|&(c, q)| (c * f, q)).collect(), ..self.clone() }
    }
}

/// Behaviour of the radial density at infinity.
#[derive(Clone, Debug, PartialEq)]
pub enum TailBehavior {
    /// ρ vanishes beyond the given radius.
    Compact(f64),
    Power(PowerEnvelope),
    Unknown,
}

/// Validated kernel description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelConfig", into = "KernelConfig")]
pub struct KernelSpec {
    family: Family,
    dimension: u8,
    lambda: f64,
    gamma_hint: Option<f64>,
    arcs: Option<ArcSet>,
}

impl From<KernelSpec> for KernelConfig {
    fn from(k: KernelSpec) -> Self {
        KernelConfig { family: k.family, dimension: k.dimension, lambda: k.lambda, gamma_hint: k.gamma_hint }
    }
}

impl TryFrom<KernelConfig> for KernelSpec {
    type Error = Error;
    fn try_from(c: KernelConfig) -> Result<Self> {
        build_kernel(c)
    }
}

/// Validates a configuration record and produces a [`KernelSpec`].
pub fn build_kernel(cfg: KernelConfig) -> Result<KernelSpec> {
    let n = cfg.dimension;
    if !(n == 1 || n == 2) {
        return Err(Error::validation("dimension", "dimension must be 1 or 2"));
    }
    if !(cfg.lambda.is_finite() && cfg.lambda >= 1.0) {
        return Err(Error::validation("lambda", "Λ must be finite and ≥ 1"));
    }
    if let Some(g) = cfg.gamma_hint {
        if !(g > 0.0 && g <= 1.0) {
            return Err(Error::validation("gamma_hint", "γ must lie in (0, 1]"));
        }
    }
    let mut arcs = None;
    match &cfg.family {
        Family::Fractional { s } => {
            if !(*s > 0.0 && *s < 1.0) {
                return Err(Error::validation("family.s", "s must lie in (0, 1)"));
            }
        }
        Family::Radial { profile } => profile.validate("family.profile")?,
        Family::Cone { arcs: a, profile } => {
            if n != 2 {
                return Err(Error::validation("dimension", "cone kernels require dimension 2"));
            }
            profile.validate("family.profile")?;
            let set = ArcSet::new(a)?;
            if !(set.measure() > 0.0) {
                return Err(Error::validation("family.arcs", "arc set has zero measure"));
            }
            if !set.is_symmetric() {
                return Err(Error::validation("family.arcs", "arc set must satisfy A = −A"));
            }
            arcs = Some(set);
        }
        Family::Custom { density } => match density {
            CustomDensity::Tabulated(t) => t.validate("family.density")?,
            CustomDensity::IndicatorBall { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::validation("family.density.radius", "radius must be positive"));
                }
            }
            CustomDensity::OscillatingOrder { odd_amplitude } => {
                if n != 1 {
                    return Err(Error::validation("dimension", "oscillating-order density requires dimension 1"));
                }
                if !(*odd_amplitude >= 0.0 && *odd_amplitude <= 1.0) {
                    return Err(Error::validation(
                        "family.density.odd_amplitude",
                        "amplitude must lie in [0, 1] to keep j ≥ 0",
                    ));
                }
            }
        },
        Family::AsymmetricPair { positive, negative } => {
            if n != 1 {
                return Err(Error::validation("dimension", "asymmetric pairs require dimension 1"));
            }
            for (name, b) in [("positive", positive), ("negative", negative)] {
                if !(b.coefficient.is_finite() && b.coefficient > 0.0) {
                    return Err(Error::validation(format!("family.{name}.coefficient"), "coefficient must be > 0"));
                }
                if !(b.exponent.is_finite() && b.exponent > 0.0) {
                    return Err(Error::validation(format!("family.{name}.exponent"), "exponent must be > 0"));
                }
            }
        }
    }
    let mut spec = KernelSpec { family: cfg.family, dimension: n, lambda: cfg.lambda, gamma_hint: cfg.gamma_hint, arcs };
    if spec.gamma_hint.is_none() {
        spec.gamma_hint = spec.analytic_gamma();
    }
    Ok(spec)
}

impl KernelSpec {
    pub fn family(&self) -> &Family {
        &self.family
    }
    pub fn dimension(&self) -> usize {
        self.dimension as usize
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn gamma_hint(&self) -> Option<f64> {
        self.gamma_hint
    }
    pub fn arcs(&self) -> Option<&ArcSet> {
        self.arcs.as_ref()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str::<KernelSpec>(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("kernel spec serializes")
    }

    /// Midpoint of the admissible γ range when the family pins down the
    /// near-zero exponent.
    fn analytic_gamma(&self) -> Option<f64> {
        let q = self.near_envelope()?.terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
        if q < 0.0 {
            Some(0.5)
        } else if q < 1.0 {
            Some(0.5 * (q + 1.0))
        } else {
            None
        }
    }

    fn sphere(&self) -> f64 {
        if self.dimension == 1 {
            2.0
        } else {
            TAU
        }
    }

    /// Whether j(−z) = j(z) for all z.
    pub fn is_even(&self) -> bool {
        match &self.family {
            Family::AsymmetricPair { positive, negative } => positive == negative,
            Family::Custom { density: CustomDensity::OscillatingOrder { odd_amplitude } } => *odd_amplitude == 0.0,
            _ => true,
        }
    }

    /// j(z) for a point with `dimension` coordinates.
    pub fn eval(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.dimension() {
            return Err(Error::Argument(format!("point has {} coordinates, kernel dimension is {}", z.len(), self.dimension)));
        }
        let t = z.iter().map(|c| c * c).sum::<f64>().sqrt();
        if t == 0.0 {
            return Err(Error::SingularPoint);
        }
        if !t.is_finite() {
            return Err(Error::Argument("point has non-finite coordinates".into()));
        }
        match &self.family {
            Family::Cone { profile, .. } => {
                let angle = z[1].atan2(z[0]);
                if !self.arcs.as_ref().expect("cone arcs").contains(angle) {
                    return Ok(0.0);
                }
                Ok(profile.eval(t)? * t.powi(-2))
            }
            Family::AsymmetricPair { positive, negative } => {
                let b = if z[0] > 0.0 { positive } else { negative };
                Ok(b.coefficient * t.powf(-b.exponent))
            }
            Family::Custom { density: CustomDensity::OscillatingOrder { odd_amplitude } } => {
                let even = t.powf(-1.0 - osc_order(t));
                let odd = if t <= 1.0 { odd_amplitude * z[0].signum() * t.powf(-7.0 / 6.0) } else { 0.0 };
                Ok((even + odd).max(0.0))
            }
            _ => self.radial_profile_density(t),
        }
    }

    /// Convenience for N = 1.
    pub fn eval_1d(&self, h: f64) -> Result<f64> {
        self.eval(&[h])
    }

    fn radial_profile_density(&self, t: f64) -> Result<f64> {
        let n = self.dimension as i32;
        match &self.family {
            Family::Fractional { s } => Ok(t.powf(-(n as f64) - 2.0 * s)),
            Family::Radial { profile } => Ok(profile.eval(t)? * t.powi(-n)),
            Family::Custom { density: CustomDensity::Tabulated(tab) } => tab.eval(t),
            Family::Custom { density: CustomDensity::IndicatorBall { radius } } => Ok(if t < *radius { 1.0 } else { 0.0 }),
            _ => unreachable!("non-radial family"),
        }
    }

    /// Angular integral ρ(t) = ∫_{|z|=t} j dσ, so that ∫_{B_R∖B_r} j = ∫_r^R ρ.
    pub fn radial_density(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::SingularPoint);
        }
        match &self.family {
            Family::Cone { profile, .. } => {
                Ok(self.arcs.as_ref().expect("cone arcs").measure() * profile.eval(t)? / t)
            }
            Family::AsymmetricPair { .. } => Ok(self.eval_1d(t)? + self.eval_1d(-t)?),
            Family::Custom { density: CustomDensity::OscillatingOrder { .. } } => Ok(2.0 * t.powf(-1.0 - osc_order(t))),
            _ => Ok(self.sphere() * t.powi(self.dimension as i32 - 1) * self.radial_profile_density(t)?),
        }
    }

    /// Envelope of ρ near the origin.
    pub fn near_envelope(&self) -> Option<PowerEnvelope> {
        let c = self.sphere();
        match &self.family {
            Family::Fractional { s } => {
                Some(PowerEnvelope { terms: vec![(c, 2.0 * s)], threshold: f64::INFINITY, exact: true })
            }
            Family::Radial { profile } => profile
                .near_bound()
                .map(|(b, q, exact)| PowerEnvelope { terms: vec![(c * b, q)], threshold: profile.cutoff, exact }),
            Family::Cone { profile, .. } => {
                let h = self.arcs.as_ref().expect("cone arcs").measure();
                profile
                    .near_bound()
                    .map(|(b, q, exact)| PowerEnvelope { terms: vec![(h * b, q)], threshold: profile.cutoff, exact })
            }
            Family::Custom { density } => match density {
                CustomDensity::Tabulated(_) => None,
                CustomDensity::IndicatorBall { radius } => Some(PowerEnvelope {
                    terms: vec![(c, -(self.dimension as f64))],
                    threshold: *radius,
                    exact: true,
                }),
                CustomDensity::OscillatingOrder { .. } => {
                    Some(PowerEnvelope { terms: vec![(2.0, 5.0 / 6.0)], threshold: 1.0, exact: false })
                }
            },
            Family::AsymmetricPair { positive, negative } => Some(PowerEnvelope {
                terms: vec![
                    (positive.coefficient, positive.exponent - 1.0),
                    (negative.coefficient, negative.exponent - 1.0),
                ],
                threshold: f64::INFINITY,
                exact: true,
            }),
        }
    }

    /// Behaviour of ρ at infinity.
    pub fn tail_behavior(&self) -> TailBehavior {
        let c = self.sphere();
        let profile_tail = |p: &Profile, scale: f64| -> TailBehavior {
            if p.cutoff.is_finite() {
                return TailBehavior::Compact(p.cutoff);
            }
            match p.near_bound() {
                Some((b, q, exact)) => TailBehavior::Power(PowerEnvelope { terms: vec![(scale * b, q)], threshold: 0.0, exact }),
                None => TailBehavior::Unknown,
            }
        };
        match &self.family {
            Family::Fractional { s } => {
                TailBehavior::Power(PowerEnvelope { terms: vec![(c, 2.0 * s)], threshold: 0.0, exact: true })
            }
            Family::Radial { profile } => profile_tail(profile, c),
            Family::Cone { profile, .. } => profile_tail(profile, self.arcs.as_ref().expect("cone arcs").measure()),
            Family::Custom { density } => match density {
                CustomDensity::Tabulated(_) => TailBehavior::Unknown,
                CustomDensity::IndicatorBall { radius } => TailBehavior::Compact(*radius),
                CustomDensity::OscillatingOrder { .. } => {
                    let t0 = 10.0;
                    TailBehavior::Power(PowerEnvelope { terms: vec![(2.0, osc_order_floor(t0))], threshold: t0, exact: false })
                }
            },
            Family::AsymmetricPair { positive, negative } => TailBehavior::Power(PowerEnvelope {
                terms: vec![
                    (positive.coefficient, positive.exponent - 1.0),
                    (negative.coefficient, negative.exponent - 1.0),
                ],
                threshold: 0.0,
                exact: true,
            }),
        }
    }

    /// Tail envelope of the one-sided density t ↦ j(sign·t) (N = 1).
    pub fn side_tail(&self, sign: f64) -> TailBehavior {
        match &self.family {
            Family::AsymmetricPair { positive, negative } => {
                let b = if sign > 0.0 { positive } else { negative };
                TailBehavior::Power(PowerEnvelope {
                    terms: vec![(b.coefficient, b.exponent - 1.0)],
                    threshold: 0.0,
                    exact: true,
                })
            }
            _ => match self.tail_behavior() {
                TailBehavior::Power(env) => TailBehavior::Power(PowerEnvelope {
                    threshold: env.threshold.max(1.0),
                    ..env.scaled(0.5)
                }),
                other => other,
            },
        }
    }

    /// Radii where ρ or its derivative may jump.
    pub fn radial_breakpoints(&self) -> Vec<f64> {
        let mut v = Vec::new();
        match &self.family {
            Family::Radial { profile } | Family::Cone { profile, .. } => {
                if profile.cutoff.is_finite() {
                    v.push(profile.cutoff);
                }
                if let ProfileShape::Tabulated(t) = &profile.shape {
                    v.extend([t.lo(), t.hi()]);
                }
            }
            Family::Custom { density } => match density {
                CustomDensity::Tabulated(t) => v.extend([t.lo(), t.hi()]),
                CustomDensity::IndicatorBall { radius } => v.push(*radius),
                CustomDensity::OscillatingOrder { .. } => v.push(1.0),
            },
            _ => {}
        }
        v
    }

    /// Radius below which the density oscillates like cos(1/t), if any.
    pub fn oscillation_radius(&self) -> Option<f64> {
        match &self.family {
            Family::Custom { density: CustomDensity::OscillatingOrder { .. } } => Some(1.0),
            _ => None,
        }
    }

    /// Support radius of ρ: densities vanish beyond it.
    pub fn support_radius(&self) -> f64 {
        match self.tail_behavior() {
            TailBehavior::Compact(r) => r,
            _ => f64::INFINITY,
        }
    }
}

/// Order exponent e(t) = (cos(1/t) + 4)/6 of the oscillating-order density.
pub fn osc_order(t: f64) -> f64 {
    ((1.0 / t).cos() + 4.0) / 6.0
}

/// Lower bound of e(t) for t ≥ t0 ≥ 1/π.
fn osc_order_floor(t0: f64) -> f64 {
    ((1.0 / t0).cos() + 4.0) / 6.0
}

/// Weight functions for the user-weighted two-point mode (N = 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Weight {
    Constant { value: f64 },
    /// w(x, y) = 1 + (a/2)(tanh x − tanh y): smooth, nonsymmetric, K_s = j_s for even j.
    TanhDrift { amplitude: f64 },
}

impl Weight {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Weight::Constant { value } => *value,
            Weight::TanhDrift { amplitude } => 1.0 + 0.5 * amplitude * (x.tanh() - y.tanh()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Mode {
    /// K(x, y) = j(y − x).
    TranslationInvariant,
    /// K(x, y) = ½(j(y − x) + j(x − y)).
    Symmetrized,
    /// K(x, y) = w(x, y)·j(y − x).
    Weighted { weight: Weight },
}

/// Two-point kernel built on a density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPointKernel {
    pub base: KernelSpec,
    pub mode: Mode,
}

impl TwoPointKernel {
    pub fn new(base: KernelSpec, mode: Mode) -> Result<Self> {
        if let Mode::Weighted { weight } = &mode {
            let l = base.lambda();
            match weight {
                Weight::Constant { value } => {
                    if !(*value >= 1.0 / l && *value <= l) {
                        return Err(Error::validation("mode.weight.value", "weight must lie in [1/Λ, Λ]"));
                    }
                }
                Weight::TanhDrift { amplitude } => {
                    if base.dimension() != 1 {
                        return Err(Error::validation("mode.weight", "tanh drift weights require dimension 1"));
                    }
                    if !(*amplitude >= 0.0 && 1.0 + amplitude <= l && 1.0 - amplitude >= 1.0 / l) {
                        return Err(Error::validation(
                            "mode.weight.amplitude",
                            "1 ± amplitude must lie in [1/Λ, Λ]",
                        ));
                    }
                }
            }
        }
        Ok(TwoPointKernel { base, mode })
    }

    pub fn translation_invariant(base: KernelSpec) -> Self {
        TwoPointKernel { base, mode: Mode::TranslationInvariant }
    }

    /// Whether K depends on x, y only through y − x.
    pub fn is_translation_invariant(&self) -> bool {
        !matches!(self.mode, Mode::Weighted { weight: Weight::TanhDrift { .. } })
    }

    /// Whether K(x, y) = K(y, x).
    pub fn is_symmetric(&self) -> bool {
        match &self.mode {
            Mode::Symmetrized => true,
            Mode::TranslationInvariant | Mode::Weighted { weight: Weight::Constant { .. } } => self.base.is_even(),
            Mode::Weighted { weight: Weight::TanhDrift { amplitude } } => *amplitude == 0.0 && self.base.is_even(),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let z: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
        match &self.mode {
            Mode::TranslationInvariant => self.base.eval(&z),
            Mode::Symmetrized => {
                let mz: Vec<f64> = z.iter().map(|c| -c).collect();
                Ok(0.5 * (self.base.eval(&z)? + self.base.eval(&mz)?))
            }
            Mode::Weighted { weight } => Ok(weight.eval(x[0], y[0]) * self.base.eval(&z)?),
        }
    }

    /// Reference density for the comparability condition (K): the base density
    /// for translation-invariant and weighted modes, its even part when symmetrized.
    pub fn reference_density(&self, z: &[f64]) -> Result<f64> {
        match &self.mode {
            Mode::Symmetrized => {
                let mz: Vec<f64> = z.iter().map(|c| -c).collect();
                Ok(0.5 * (self.base.eval(z)? + self.base.eval(&mz)?))
            }
            _ => self.base.eval(z),
        }
    }
}

/// Symmetric and antisymmetric parts (K_s, K_a) of K at (x, y).
pub fn decompose(k: &TwoPointKernel, x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x == y {
        return Err(Error::SingularPoint);
    }
    let kxy = k.eval(x, y)?;
    let kyx = k.eval(y, x)?;
    Ok((0.5 * (kxy + kyx), 0.5 * (kxy - kyx)))
}

/// Density j(z); alias kept for API symmetry with the other operations.
pub fn eval_density(spec: &KernelSpec, z: &[f64]) -> Result<f64> {
    spec.eval(z)
}

/// Ready-made kernels used throughout the tests, examples and CLI.
pub mod presets {
    use super::*;

    pub fn fractional(s: f64, dimension: u8) -> KernelSpec {
        build_kernel(KernelConfig { family: Family::Fractional { s }, dimension, lambda: 1.0, gamma_hint: None })
            .expect("valid fractional kernel")
    }

    /// j(h) = h^{−3/2} for h > 0 and 2(−h)^{−3/2} for h < 0.
    pub fn asymmetric_example() -> KernelSpec {
        build_kernel(KernelConfig {
            family: Family::AsymmetricPair {
                positive: PowerBranch { coefficient: 1.0, exponent: 1.5 },
                negative: PowerBranch { coefficient: 2.0, exponent: 1.5 },
            },
            dimension: 1,
            lambda: 1.0,
            gamma_hint: Some(0.75),
        })
        .expect("valid asymmetric pair")
    }

    /// j(h) = |h|^{−1−(cos(1/h)+4)/6} + h|h|^{−2−1/6}·1_{|h|≤1}.
    pub fn oscillating_example() -> KernelSpec {
        build_kernel(KernelConfig {
            family: Family::Custom { density: CustomDensity::OscillatingOrder { odd_amplitude: 1.0 } },
            dimension: 1,
            lambda: 1.0,
            gamma_hint: Some(0.99),
        })
        .expect("valid oscillating kernel")
    }

    /// ℓ(r) = 1 − sin(ln r) on (0, 1].
    pub fn one_minus_sin_log(dimension: u8) -> KernelSpec {
        build_kernel(KernelConfig {
            family: Family::Radial { profile: Profile::new(ProfileShape::OneMinusSinLog, 1.0) },
            dimension,
            lambda: 1.0,
            gamma_hint: None,
        })
        .expect("valid radial kernel")
    }

    /// Two opposite arcs of length π/4 with ℓ ≡ 1 on (0, 1].
    pub fn cone_quarter_pi() -> KernelSpec {
        build_kernel(KernelConfig {
            family: Family::Cone {
                arcs: vec![[0.0, PI / 4.0], [PI, 1.25 * PI]],
                profile: Profile::new(ProfileShape::Constant, 1.0),
            },
            dimension: 2,
            lambda: 1.0,
            gamma_hint: None,
        })
        .expect("valid cone kernel")
    }

    pub fn indicator_ball(radius: f64, dimension: u8) -> KernelSpec {
        build_kernel(KernelConfig {
            family: Family::Custom { density: CustomDensity::IndicatorBall { radius } },
            dimension,
            lambda: 1.0,
            gamma_hint: None,
        })
        .expect("valid indicator kernel")
    }
}
