//! `nlreg` command line: reproducible runs driven by a TOML configuration.
//!
//! Exit codes: 0 success, 2 configuration error, 3 unsupported kernel, 4 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::conditions::{run_suite, ConditionReport, SuiteOptions};
use crate::continuity::build_modulus;
use crate::error::{Error, Result};
use crate::experiments::{
    boundedness_study, growth_refinement, lambda_sweep, measure_oscillation, sup_abs_on, verify_boundedness, verify_continuity, ContinuitySetup,
    GrowthScenario, Interval, VerificationReport,
};
use crate::growth::{csv_err, growth_params, pick_r, GrowthOptions, GrowthParams};
use crate::kernel::{build_kernel, Family, KernelConfig, Mode, TwoPointKernel};
use crate::quadrature::{tail_integral_outside, BoundedFunction, QuadConfig};
use crate::solver::{assemble, build_mesh, garding_check, residual, solve, AssembledSystem, DiscreteFunction, Mesh1D};
use crate::svg::{line_chart, Series};

#[derive(Parser, Debug)]
#[command(name = "nlreg", version, about = "Regularity toolkit for weakly singular nonlocal operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `output` in the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for all sampling (overrides `seed` in the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative quadrature tolerance override.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Certify the kernel conditions.
    Check(Common),
    /// Growth-lemma constants, h table and radii.
    Growth(Common),
    /// Modulus of continuity for the configured sets.
    Modulus(Common),
    /// Solve the configured Dirichlet-type problem.
    Solve(Common),
    /// Run the configured verification experiments.
    Verify(Common),
}

/// `[kernel]`: the density fields plus an optional two-point `mode`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "toml::Table")]
pub struct KernelSection {
    #[serde(flatten)]
    pub config: KernelConfig,
    #[serde(default)]
    pub mode: Option<Mode>,
}

impl KernelSection {
    /// Parses a standalone kernel table (`family = …`, optional `mode = …`).
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<TwoPointKernel> {
        let spec = build_kernel(self.config.clone())?;
        TwoPointKernel::new(spec, self.mode.clone().unwrap_or(Mode::TranslationInvariant))
    }
}

impl TryFrom<toml::Table> for KernelSection {
    type Error = toml::de::Error;

    fn try_from(mut t: toml::Table) -> std::result::Result<Self, Self::Error> {
        let mode = t.remove("mode").map(|m| m.try_into()).transpose()?;
        Ok(KernelSection { config: toml::Value::Table(t).try_into()?, mode })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionsSection {
    #[serde(default = "default_r0")]
    pub r0: f64,
}

fn default_r0() -> f64 {
    0.5
}

impl Default for ConditionsSection {
    fn default() -> Self {
        ConditionsSection { r0: default_r0() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthSection {
    pub radii_count: usize,
    pub k0: Option<f64>,
    /// Gårding constant; estimated on the mesh for nonsymmetric kernels when absent.
    pub garding_c: Option<f64>,
    pub garding_trials: usize,
    /// Radii R for which the selected r (with v_∞ = 1) is tabulated.
    pub select_for: Vec<f64>,
}

impl Default for GrowthSection {
    fn default() -> Self {
        GrowthSection { radii_count: 24, k0: None, garding_c: None, garding_trials: 200, select_for: Vec::new() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub a: f64,
    pub b: f64,
    pub collar: f64,
    pub h: f64,
}

/// Closed-form reference solutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exact {
    /// j = |z|^{-2}, f ≡ c, u = 0 outside (a, b): u = (c/π)√(ρ² − (x − m)²).
    FractionalPoisson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(default = "zero")]
    pub f: BoundedFunction,
    #[serde(default = "zero")]
    pub w: BoundedFunction,
    #[serde(default = "zero")]
    pub g: BoundedFunction,
    #[serde(default)]
    pub exact: Option<Exact>,
}

fn zero() -> BoundedFunction {
    BoundedFunction::Zero
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection { f: zero(), w: zero(), g: zero(), exact: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetsSection {
    pub a: [f64; 2],
    pub b_star: [f64; 2],
    pub b: [f64; 2],
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

fn default_n_max() -> usize {
    24
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theorem {
    Boundedness,
    Continuity,
    Growth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundednessSection {
    pub hs: Vec<f64>,
    pub n_rhs: usize,
    pub tolerance: f64,
    pub sweep_steps: usize,
}

impl Default for BoundednessSection {
    fn default() -> Self {
        BoundednessSection { hs: vec![1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0], n_rhs: 20, tolerance: 0.1, sweep_steps: 6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub theorems: Vec<Theorem>,
    pub boundedness: BoundednessSection,
    pub growth: GrowthScenario,
    pub growth_levels: usize,
    pub oscillation_center: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            theorems: vec![Theorem::Boundedness, Theorem::Continuity, Theorem::Growth],
            boundedness: BoundednessSection::default(),
            growth: GrowthScenario::default(),
            growth_levels: 3,
            oscillation_center: 0.0,
        }
    }
}

/// Complete run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: KernelSection,
    #[serde(default)]
    pub quadrature: QuadConfig,
    #[serde(default)]
    pub conditions: ConditionsSection,
    #[serde(default)]
    pub growth: GrowthSection,
    #[serde(default)]
    pub mesh: Option<MeshSection>,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub sets: Option<SetsSection>,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Resolved configuration with flag overrides applied.
pub struct Context {
    pub config: RunConfig,
    pub kernel: TwoPointKernel,
    pub quad: QuadConfig,
    pub seed: u64,
    pub out: PathBuf,
}

impl Context {
    pub fn load(c: &Common) -> Result<Self> {
        let text = fs::read_to_string(&c.config).map_err(|e| Error::Config(format!("{}: {e}", c.config.display())))?;
        let config: RunConfig = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", c.config.display())))?;
        let mut quad = config.quadrature;
        if let Some(t) = c.tol {
            quad.rel_tol = t;
        }
        quad.validate()?;
        let kernel = config.kernel.build()?;
        for (name, f) in [("data.f", &config.data.f), ("data.w", &config.data.w), ("data.g", &config.data.g)] {
            f.validate().map_err(|e| Error::validation(name, e.to_string()))?;
        }
        let seed = c.seed.or(config.seed).unwrap_or(0);
        let out = c.out.clone().or_else(|| config.output.clone()).unwrap_or_else(|| PathBuf::from("nlreg-out"));
        Ok(Context { config, kernel, quad, seed, out })
    }

    fn mesh(&self) -> Result<Mesh1D> {
        let m = self.config.mesh.ok_or_else(|| Error::validation("mesh", "section required by this subcommand"))?;
        build_mesh(m.a, m.b, m.collar, m.h)
    }

    fn sets(&self) -> Result<(Interval, Interval, Interval, usize)> {
        let s = self.config.sets.as_ref().ok_or_else(|| Error::validation("sets", "section required by this subcommand"))?;
        let iv = |p: [f64; 2], name: &str| Interval::new(p[0], p[1]).map_err(|e| Error::validation(format!("sets.{name}"), e.to_string()));
        Ok((iv(s.a, "a")?, iv(s.b_star, "b_star")?, iv(s.b, "b")?, s.n_max))
    }

    fn write(&self, name: &str, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
        fs::create_dir_all(&self.out)?;
        let p = self.out.join(name);
        fs::write(&p, bytes)?;
        written.push(p);
        Ok(())
    }

    fn reports(&self) -> Result<Vec<ConditionReport>> {
        run_suite(&self.kernel, SuiteOptions { r0: self.config.conditions.r0, seed: self.seed }, &self.quad)
    }

    /// Growth constants; the Gårding constant is estimated on the mesh for nonsymmetric kernels.
    fn params(&self, reports: &[ConditionReport]) -> Result<(GrowthParams, String)> {
        let g = &self.config.growth;
        let (garding_c, source) = match g.garding_c {
            Some(c) => (c, "configured".to_string()),
            None if self.kernel.is_symmetric() => (0.0, "symmetric kernel".to_string()),
            None => match self.config.mesh {
                Some(_) => {
                    let est = garding_check(&self.kernel, &self.mesh()?, g.garding_trials.max(100), self.seed, &self.quad)?;
                    (est.c_hat, format!("empirical estimate over {} trials (eigen bound {:e})", est.trials, est.eigen_bound))
                }
                None => (0.0, "no mesh: 0 assumed".to_string()),
            },
        };
        let opts = GrowthOptions { radii_count: g.radii_count, garding_c, k0: g.k0 };
        Ok((growth_params(&self.kernel.base, reports, self.config.conditions.r0, opts, &self.quad)?, source))
    }
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

#[derive(Serialize)]
struct ReportFile<'a, T: Serialize> {
    report: &'a [T],
}

fn reports_toml<T: Serialize>(reports: &[T]) -> String {
    toml::to_string(&ReportFile { report: reports }).expect("reports serialize")
}

pub fn cmd_check(ctx: &Context) -> Result<Vec<PathBuf>> {
    let reports = ctx.reports()?;
    let mut written = Vec::new();
    let rows = reports.iter().map(|r| r.csv_row().to_vec());
    ctx.write("conditions.csv", &csv_table(&["condition", "verdict", "constants"], rows)?, &mut written)?;
    ctx.write("conditions.toml", reports_toml(&reports).as_bytes(), &mut written)?;
    for r in &reports {
        println!("{:<6} {}", r.condition.to_string(), r.verdict);
    }
    Ok(written)
}

pub fn cmd_growth(ctx: &Context) -> Result<Vec<PathBuf>> {
    let reports = ctx.reports()?;
    let (params, source) = ctx.params(&reports)?;
    let mut written = Vec::new();
    let text = format!("# garding_c: {source}\n{}", params.to_toml());
    ctx.write("growth.toml", text.as_bytes(), &mut written)?;
    ctx.write("h_table.csv", &params.h_csv()?, &mut written)?;
    ctx.write("radii.csv", &params.radii_csv()?, &mut written)?;
    if !ctx.config.growth.select_for.is_empty() {
        let mut rows = Vec::new();
        for &big_r in &ctx.config.growth.select_for {
            let h_r = format!("{:e}", params.h(&ctx.kernel.base, big_r, &ctx.quad)?);
            match pick_r(big_r, 1.0, &params, &ctx.kernel.base, &ctx.quad) {
                Ok(r) => rows.push(vec![format!("{big_r:e}"), format!("{r:e}"), h_r]),
                Err(Error::NeedsMoreRadii(m)) => {
                    eprintln!("warning: {m}");
                    rows.push(vec![format!("{big_r:e}"), "exhausted".into(), h_r]);
                }
                Err(e) => return Err(e),
            }
        }
        ctx.write("selection.csv", &csv_table(&["R", "r", "h_R"], rows)?, &mut written)?;
    }
    println!("theta = {:e}, eta = {}, a = {:e}, radii = {}", params.theta, params.eta, params.a, params.radii.len());
    Ok(written)
}

/// (C̃, K̃) for the nested sets, with C̃ sampled on 65 points of B_*.
fn k_tilde(ctx: &Context, b_star: Interval, b: Interval) -> Result<(f64, f64)> {
    let spec = &ctx.kernel.base;
    let one = BoundedFunction::Constant { value: 1.0 };
    let mut c_tilde: f64 = 0.0;
    for i in 0..=64 {
        let x = b_star.lo + (b_star.hi - b_star.lo) * (1e-9 + (1.0 - 2e-9) * i as f64 / 64.0);
        c_tilde = c_tilde.max(tail_integral_outside(&one, x, b.lo, b.hi, spec, &ctx.quad)?);
    }
    let lambda = spec.lambda();
    Ok((c_tilde, 1f64.max(lambda).max(lambda * c_tilde).max(sup_abs_on(&ctx.config.data.w, b.lo, b.hi))))
}

pub fn cmd_modulus(ctx: &Context) -> Result<Vec<PathBuf>> {
    let (a, b_star, b, n_max) = ctx.sets()?;
    let reports = ctx.reports()?;
    let (mut params, _) = ctx.params(&reports)?;
    let (c_tilde, kt) = k_tilde(ctx, b_star, b)?;
    let r_star = 0.5 * params.r0.min((a.lo - b_star.lo).min(b_star.hi - a.hi));
    let (omega, schedule) = build_modulus(&mut params, kt, r_star, n_max, &ctx.kernel.base, &ctx.quad)?;
    let mut written = Vec::new();
    ctx.write("modulus.csv", &omega.to_csv()?, &mut written)?;
    ctx.write("schedule.csv", &schedule.to_csv()?, &mut written)?;
    let summary = format!(
        "c_tilde = {c_tilde:e}\nk_tilde = {kt:e}\nr_star = {r_star:e}\nsteps = {}\nerror = {:?}\n",
        schedule.radii.len() - 1,
        schedule.error.clone().unwrap_or_default()
    );
    ctx.write("modulus.toml", summary.as_bytes(), &mut written)?;
    let pts: Vec<(f64, f64)> = omega.breakpoints().iter().copied().filter(|p| p.0 > 0.0).collect();
    let svg = line_chart("modulus of continuity", "t", "ω(t)", &[Series { label: "ω", points: &pts }], true);
    ctx.write("modulus.svg", svg.as_bytes(), &mut written)?;
    println!("K̃ = {kt:e}, R_* = {r_star}, steps = {}", schedule.radii.len() - 1);
    Ok(written)
}

fn exact_solution(ctx: &Context, mesh: &Mesh1D) -> Result<Option<Box<dyn Fn(f64) -> f64>>> {
    let d = &ctx.config.data;
    let Some(Exact::FractionalPoisson) = d.exact else { return Ok(None) };
    let ok_kernel = matches!(ctx.kernel.base.family(), Family::Fractional { s } if (*s - 0.5).abs() < 1e-15)
        && ctx.kernel.base.dimension() == 1
        && ctx.kernel.is_translation_invariant()
        && matches!(ctx.kernel.mode, Mode::TranslationInvariant | Mode::Symmetrized);
    let c = match (&d.f, &d.g, &d.w) {
        (BoundedFunction::Constant { value }, BoundedFunction::Zero, BoundedFunction::Zero) if ok_kernel => *value,
        _ => return Err(Error::validation("data.exact", "fractional-poisson needs s = 1/2, constant f, g = 0, W = 0")),
    };
    let (m, rho) = (0.5 * (mesh.a + mesh.b), 0.5 * (mesh.b - mesh.a));
    Ok(Some(Box::new(move |x: f64| c / std::f64::consts::PI * (rho * rho - (x - m) * (x - m)).max(0.0).sqrt())))
}

/// Relative L² error over Ω with 8-point Gauss per cell.
fn rel_l2(u: &DiscreteFunction, exact: &dyn Fn(f64) -> f64) -> f64 {
    const G: [(f64, f64); 4] = [
        (0.183_434_642_495_649_8, 0.362_683_783_378_362),
        (0.525_532_409_916_329, 0.313_706_645_877_887_3),
        (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
        (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    ];
    let m = &u.mesh;
    let (mut num, mut den) = (0.0, 0.0);
    let cells = ((m.b - m.a) / m.h).round() as usize;
    for c in 0..cells {
        let mid = m.a + (c as f64 + 0.5) * m.h;
        for (x, w) in G {
            for y in [mid - 0.5 * m.h * x, mid + 0.5 * m.h * x] {
                let e = exact(y);
                num += w * (u.eval(y) - e).powi(2);
                den += w * e * e;
            }
        }
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

fn solve_configured(ctx: &Context) -> Result<(AssembledSystem, DiscreteFunction)> {
    let mesh = ctx.mesh()?;
    let d = &ctx.config.data;
    let sys = assemble(&ctx.kernel, &mesh, &d.w, &ctx.quad)?;
    let u = solve(&sys, &d.f, &d.g)?;
    Ok((sys, u))
}

fn profile_svg(u: &DiscreteFunction) -> String {
    let pts: Vec<(f64, f64)> = u.values.iter().enumerate().map(|(i, &v)| (u.mesh.x(i), v)).collect();
    line_chart("solution", "x", "u", &[Series { label: "u_h", points: &pts }], false)
}

pub fn cmd_solve(ctx: &Context) -> Result<Vec<PathBuf>> {
    let (sys, u) = solve_configured(ctx)?;
    let d = &ctx.config.data;
    let mut written = Vec::new();
    ctx.write("solution.csv", &u.to_csv()?, &mut written)?;
    ctx.write("solution.bin", &u.to_binary(), &mut written)?;
    ctx.write("mesh.csv", &u.mesh.to_csv()?, &mut written)?;
    let res = residual(&sys, &u, &d.f)?;
    let mut rows = vec![
        ("nodes", u.mesh.len() as f64),
        ("h", u.mesh.h),
        ("residual", res.max_abs),
        ("sup_u", u.sup_interior()),
        ("l2_u", u.l2_domain()),
        ("min_u", u.values.iter().copied().fold(f64::INFINITY, f64::min)),
    ];
    if let Some(exact) = exact_solution(ctx, &u.mesh)? {
        rows.push(("rel_l2_error_vs_exact", rel_l2(&u, exact.as_ref())));
    }
    let table = csv_table(&["quantity", "value"], rows.iter().map(|(k, v)| vec![k.to_string(), format!("{v:e}")]))?;
    ctx.write("summary.csv", &table, &mut written)?;
    ctx.write("solution.svg", profile_svg(&u).as_bytes(), &mut written)?;
    for (k, v) in &rows {
        println!("{k} = {v:e}");
    }
    Ok(written)
}

pub fn cmd_verify(ctx: &Context) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut all: Vec<VerificationReport> = Vec::new();
    let exp = &ctx.config.experiment;
    let d = &ctx.config.data;
    for th in &exp.theorems {
        match th {
            Theorem::Boundedness => {
                let (sys, u) = solve_configured(ctx)?;
                all.push(verify_boundedness(&sys, &u, &d.f, None)?);
                let b = &exp.boundedness;
                let study = boundedness_study(&ctx.kernel, (u.mesh.a, u.mesh.b), u.mesh.collar, &b.hs, b.n_rhs, ctx.seed, b.tolerance, &ctx.quad)?;
                ctx.write("boundedness_study.csv", &study.to_csv()?, &mut written)?;
                all.push(study.report);
                let sweep = lambda_sweep(&ctx.kernel, &u.mesh, b.sweep_steps, &ctx.quad)?;
                ctx.write("lambda_sweep.csv", &sweep.to_csv()?, &mut written)?;
                all.push(sweep.report);
            }
            Theorem::Continuity => {
                let (a, b_star, b, n_max) = ctx.sets()?;
                let (_, u) = solve_configured(ctx)?;
                let reports = ctx.reports()?;
                let (mut params, _) = ctx.params(&reports)?;
                let setup = ContinuitySetup { kernel: &ctx.kernel, w: &d.w, a, b_star, b, n_max };
                let out = verify_continuity(&u, &d.f, &setup, &mut params, &ctx.quad)?;
                ctx.write("modulus.csv", &out.modulus.to_csv()?, &mut written)?;
                ctx.write("schedule.csv", &out.schedule.to_csv()?, &mut written)?;
                ctx.write("solution.csv", &u.to_csv()?, &mut written)?;
                let x0 = exp.oscillation_center;
                let (lo, hi) = u.mesh.outer();
                let reach = (x0 - lo).min(hi - x0);
                let radii: Vec<f64> = (0..).map(|k| u.mesh.h * 2f64.powi(k)).take_while(|&r| r <= reach).collect();
                let trace = measure_oscillation(&u, x0, &radii)?;
                ctx.write("oscillation.csv", &trace.to_csv()?, &mut written)?;
                ctx.write("solution.svg", profile_svg(&u).as_bytes(), &mut written)?;
                let osc = line_chart("oscillation", "r", "O(r)", &[Series { label: "O", points: &trace.pairs }], true);
                ctx.write("oscillation.svg", osc.as_bytes(), &mut written)?;
                let pts: Vec<(f64, f64)> = out.modulus.breakpoints().iter().copied().filter(|p| p.0 > 0.0).collect();
                let svg = line_chart("modulus of continuity", "t", "ω(t)", &[Series { label: "ω", points: &pts }], true);
                ctx.write("modulus.svg", svg.as_bytes(), &mut written)?;
                all.push(out.report);
            }
            Theorem::Growth => {
                let reports = ctx.reports()?;
                let (mut params, _) = ctx.params(&reports)?;
                let (outs, monotone) = growth_refinement(&ctx.kernel, &mut params, &exp.growth, exp.growth_levels.max(1), &ctx.quad)?;
                let rows = outs.iter().enumerate().map(|(k, o)| {
                    let m = |key: &str| o.report.measured.get(key).map(|v| format!("{v:e}")).unwrap_or_default();
                    vec![k.to_string(), format!("{:e}", o.v.mesh.h), m("max_v_B_eta_r"), m("interpolation_error"), m("conclusion_margin"), o.report.verdict.to_string()]
                });
                ctx.write("growth_refinement.csv", &csv_table(&["level", "h", "max_v", "interpolation_error", "margin", "verdict"], rows)?, &mut written)?;
                if let Some(last) = outs.last() {
                    ctx.write("growth_solution.csv", &last.v.to_csv()?, &mut written)?;
                }
                for o in outs {
                    let mut r = o.report;
                    r.note = format!("{}; margins monotone under refinement: {monotone}", r.note);
                    all.push(r);
                }
            }
        }
    }
    ctx.write("verify.toml", reports_toml(&all).as_bytes(), &mut written)?;
    let mut rows = Vec::new();
    for r in &all {
        for (k, v) in &r.measured {
            let p = r.predicted.get(k).map(|p| format!("{p:e}")).unwrap_or_default();
            rows.push(vec![r.theorem.clone(), k.clone(), format!("{v:e}"), p, r.verdict.to_string()]);
        }
    }
    ctx.write("verify.csv", &csv_table(&["theorem", "quantity", "measured", "predicted", "verdict"], rows)?, &mut written)?;
    for r in &all {
        println!("{:<22} {:<8} margin {:.3e}", r.theorem, r.verdict.to_string(), r.margin);
    }
    Ok(written)
}

/// Exit code for an error: 2 configuration, 3 unsupported kernel, 4 numerical failure.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Validation { .. } | Error::Argument(_) => 2,
        Error::Unsupported(_) => 3,
        _ => 4,
    }
}

pub fn dispatch(cmd: &Command) -> Result<Vec<PathBuf>> {
    let (common, f): (&Common, fn(&Context) -> Result<Vec<PathBuf>>) = match cmd {
        Command::Check(c) => (c, cmd_check),
        Command::Growth(c) => (c, cmd_growth),
        Command::Modulus(c) => (c, cmd_modulus),
        Command::Solve(c) => (c, cmd_solve),
        Command::Verify(c) => (c, cmd_verify),
    };
    let ctx = Context::load(common)?;
    f(&ctx)
}

/// Parses arguments, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli.command) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
