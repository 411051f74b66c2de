use std::cell::RefCell;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, Mode, PowerEnvelope, TailBehavior, TwoPointKernel, Weight};
use crate::quadrature::gk;
use crate::quadrature::{annulus_integral, BoundedFunction, IntegralResult, QuadConfig, RadialIntegrand};
use crate::solver::mesh::Mesh1D;

/// Autocorrelation of the unit hat: the centred cubic B-spline.
pub fn bspline(d: f64) -> f64 {
    let d = d.abs();
    if d <= 1.0 {
        2.0 / 3.0 - d * d + 0.5 * d * d * d
    } else if d < 2.0 {
        (2.0 - d).powi(3) / 6.0
    } else {
        0.0
    }
}

/// Symmetric tridiagonal matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.abs_diff(j) {
            0 => self.diag[i],
            1 => self.off[i.min(j)],
            _ => 0.0,
        }
    }

    pub fn mul(&self, u: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * u[i];
                if i > 0 {
                    s += self.off[i - 1] * u[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * u[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.diag.len();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }
}

/// Discretized bilinear form on all hats of the mesh.
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub kernel: TwoPointKernel,
    pub mesh: Mesh1D,
    pub w: BoundedFunction,
    /// E_s(φ_j, φ_i) at (i, j).
    pub s_sym: DMatrix<f64>,
    /// E_a(φ_j, φ_i) at (i, j).
    pub s_anti: DMatrix<f64>,
    pub mass: Tridiagonal,
    /// ∫_Ω W φ_i φ_j.
    pub mass_w: Tridiagonal,
    /// (D_k, A_k), k = 0..n, when the stiffness is Toeplitz.
    pub toeplitz: Option<(Vec<f64>, Vec<f64>)>,
    pub cfg: QuadConfig,
}

impl AssembledSystem {
    pub fn stiffness(&self) -> DMatrix<f64> {
        &self.s_sym + &self.s_anti
    }

    /// Interior block of the stiffness matrix.
    pub fn interior_stiffness(&self) -> DMatrix<f64> {
        let r = self.mesh.interior();
        self.stiffness().view((r.start, r.start), (r.len(), r.len())).into_owned()
    }

    /// ∫_Ω f φ_i for every node.
    pub fn load(&self, f: &BoundedFunction) -> Vec<f64> {
        let mut out = vec![0.0; self.mesh.len()];
        for_domain_cells(&self.mesh, |c, x0, h| {
            for (gx, gw) in GAUSS4 {
                let tau = 0.5 * (gx + 1.0);
                let v = f.eval(x0 + tau * h) * 0.5 * gw * h;
                out[c] += v * (1.0 - tau);
                out[c + 1] += v * tau;
            }
        });
        out
    }

    /// −E(G, φ_i) for the exterior part G of a function with data `g`:
    /// the constant far value via Σ_j S_ij, plus the tabulated residual by quadrature.
    /// The two end hats reach into the ramp cells and only carry the constant part.
    pub fn tail_load(&self, g: &BoundedFunction) -> Result<Vec<f64>> {
        g.validate()?;
        let c = g.far();
        let s = self.stiffness();
        let n = self.mesh.len();
        let mut out: Vec<f64> = (0..n).map(|i| c * s.row(i).sum()).collect();
        if let BoundedFunction::Tabulated { xs, .. } = g {
            let (lo, hi) = self.mesh.outer();
            let (tlo, thi) = (xs[0], xs[xs.len() - 1]);
            if tlo < lo || thi > hi {
                let hats = 1..n - 1;
                let extra: Vec<Result<f64>> = hats.clone().into_par_iter().map(|i| self.residual_tail(i, g, c)).collect();
                for (i, e) in hats.zip(extra) {
                    out[i] += e?;
                }
            }
        }
        Ok(out)
    }

    /// ∫ φ_i(x) ∫_{y ∉ Ω'} (g(y) − c)·ramp(y) K(x, y) dy dx.
    fn residual_tail(&self, i: usize, g: &BoundedFunction, c: f64) -> Result<f64> {
        let BoundedFunction::Tabulated { xs, .. } = g else { return Ok(0.0) };
        let (lo, hi) = self.mesh.outer();
        let h = self.mesh.h;
        let ramp = |y: f64| (if y < lo { lo - y } else { y - hi } / h).min(1.0);
        let mut total = 0.0;
        let xi = self.mesh.x(i);
        for (x0, side) in [(xi - h, 0), (xi, 1)] {
            for (gx, gw) in GAUSS8 {
                let tau = 0.5 * (gx + 1.0);
                let x = x0 + tau * h;
                let phi = if side == 0 { tau } else { 1.0 - tau };
                let err = RefCell::new(None);
                let f = |y: f64| match self.kernel.eval(&[x], &[y]) {
                    Ok(k) => (g.eval(y) - c) * ramp(y) * k,
                    Err(e) => {
                        err.borrow_mut().get_or_insert(e);
                        0.0
                    }
                };
                let mut inner = 0.0;
                let breaks: Vec<f64> = xs.iter().copied().chain([lo - h, hi + h]).collect();
                for (a, b) in [(xs[0], lo), (hi, xs[xs.len() - 1])] {
                    if b > a {
                        let br: Vec<f64> = breaks.iter().copied().filter(|&t| t > a && t < b).collect();
                        let r = gk::integrate(&f, a, b, &br, self.cfg.tolerance());
                        check(&r, i, i, "exterior data tail")?;
                        inner += r.value;
                    }
                }
                if let Some(e) = err.into_inner() {
                    return Err(e);
                }
                total += 0.5 * gw * h * phi * inner;
            }
        }
        Ok(total)
    }
}

pub(crate) const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
    (-0.339_981_043_584_856_26, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_26, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
];

pub(crate) const GAUSS8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// Calls `f(c, x_c, h)` for each cell [x_c, x_c + h] ⊂ Ω (c = index of its left node).
fn for_domain_cells(mesh: &Mesh1D, mut f: impl FnMut(usize, f64, f64)) {
    let r = mesh.interior();
    for c in r.start - 1..r.end {
        f(c, mesh.x(c), mesh.h);
    }
}

fn check(r: &IntegralResult, i: usize, j: usize, what: &str) -> Result<()> {
    if r.converged && r.value.is_finite() {
        Ok(())
    } else {
        Err(Error::Assembly { i, j, message: format!("{what}: quadrature did not converge (value {:e}, error {:e})", r.value, r.error_estimate) })
    }
}

fn radial<'a>(spec: &KernelSpec, f: &'a dyn Fn(f64) -> Result<f64>, near: Option<PowerEnvelope>, tail: TailBehavior) -> RadialIntegrand<'a> {
    RadialIntegrand { f, near, tail, breaks: spec.radial_breakpoints(), oscillation_radius: spec.oscillation_radius() }
}

fn inexact(env: Option<PowerEnvelope>, factor: f64) -> Option<PowerEnvelope> {
    env.map(|e| PowerEnvelope { exact: false, ..e.scaled(factor) })
}

/// D_k = (h/2)∫_0^∞ ρ(z)[2a(k) − a(k + z/h) − a(k − z/h)] dz.
fn sym_entry(spec: &KernelSpec, k: usize, h: f64, cfg: &QuadConfig) -> Result<f64> {
    let rho = |t: f64| spec.radial_density(t);
    let integrand = radial(spec, &rho, spec.near_envelope(), spec.tail_behavior());
    // On the first cell the weight is c2 t² + c3 t³ (t = z/h).
    let (c2, c3) = match k {
        0 => (2.0, -1.0),
        1 => (-1.0, 2.0 / 3.0),
        2 => (0.0, -1.0 / 6.0),
        _ => (0.0, 0.0),
    };
    let mut s = 0.0;
    for (c, p) in [(c2, 2.0), (c3, 3.0)] {
        if c != 0.0 {
            let r = integrand.integrate(p, 0.0, h, cfg)?;
            check(&r, 0, k, "near-diagonal moment")?;
            s += c * h.powf(-p) * r.value;
        }
    }
    let kf = k as f64;
    let w = |t: f64| 2.0 * bspline(kf) - bspline(kf + t) - bspline(kf - t);
    let f = |z: f64| -> Result<f64> { Ok(spec.radial_density(z)? * w(z / h)) };
    let cells = radial(spec, &f, None, TailBehavior::Unknown);
    for m in k.saturating_sub(2).max(1)..=k + 1 {
        let r = cells.integrate(0.0, m as f64 * h, (m + 1) as f64 * h, cfg)?;
        check(&r, 0, k, "stiffness cell")?;
        s += r.value;
    }
    if k <= 1 {
        let r = annulus_integral(spec, (kf + 2.0) * h, f64::INFINITY, cfg)?;
        check(&r, 0, k, "stiffness tail")?;
        s += 2.0 * bspline(kf) * r.value;
    }
    Ok(0.5 * h * s)
}

/// A_k = −h∫_0^∞ j_a(z)[a(k − z/h) − a(k + z/h)] dz with j_a the odd part of j.
fn anti_entry(spec: &KernelSpec, k: usize, h: f64, cfg: &QuadConfig) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    let ja = |t: f64| -> Result<f64> { Ok(0.5 * (spec.eval_1d(t)? - spec.eval_1d(-t)?)) };
    let integrand = radial(spec, &ja, inexact(spec.near_envelope(), 0.5), TailBehavior::Unknown);
    let (c1, c3) = match k {
        1 => (1.0, -1.0 / 3.0),
        2 => (0.0, 1.0 / 6.0),
        _ => (0.0, 0.0),
    };
    let mut s = 0.0;
    for (c, p) in [(c1, 1.0), (c3, 3.0)] {
        if c != 0.0 {
            let r = integrand.integrate(p, 0.0, h, cfg)?;
            if !r.value.is_finite() {
                return Err(Error::Assembly { i: 0, j: k, message: "odd-part moment is not finite".into() });
            }
            s += c * h.powf(-p) * r.value;
        }
    }
    let kf = k as f64;
    let q = |t: f64| bspline(kf - t) - bspline(kf + t);
    let f = |z: f64| -> Result<f64> { Ok(ja(z)? * q(z / h)) };
    let cells = radial(spec, &f, None, TailBehavior::Unknown);
    for m in k.saturating_sub(2).max(1)..=k + 1 {
        let r = cells.integrate(0.0, m as f64 * h, (m + 1) as f64 * h, cfg)?;
        if !r.value.is_finite() {
            return Err(Error::Assembly { i: 0, j: k, message: "antisymmetric stiffness cell is not finite".into() });
        }
        s += r.value;
    }
    Ok(-h * s)
}

fn toeplitz(d: &[f64], a: &[f64], n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let s = DMatrix::from_fn(n, n, |i, j| d[i.abs_diff(j)]);
    let an = DMatrix::from_fn(n, n, |i, j| if j >= i { a[j - i] } else { -a[i - j] });
    (s, an)
}

/// Assembles E(φ_j, φ_i) for all hats of the mesh, the mass matrices and the
/// exterior-data machinery.
pub fn assemble(k: &TwoPointKernel, mesh: &Mesh1D, w: &BoundedFunction, cfg: &QuadConfig) -> Result<AssembledSystem> {
    cfg.validate()?;
    w.validate()?;
    let spec = &k.base;
    if spec.dimension() != 1 {
        return Err(Error::Unsupported("the Galerkin solver is one-dimensional".into()));
    }
    let n = mesh.len();
    let h = mesh.h;
    let (scale, odd, drift) = match &k.mode {
        Mode::TranslationInvariant => (1.0, !spec.is_even(), None),
        Mode::Symmetrized => (1.0, false, None),
        Mode::Weighted { weight: Weight::Constant { value } } => (*value, !spec.is_even(), None),
        Mode::Weighted { weight: Weight::TanhDrift { amplitude } } => {
            if !spec.is_even() {
                return Err(Error::Unsupported("tanh-drift weights are assembled for even base densities only".into()));
            }
            (1.0, false, Some(*amplitude))
        }
    };
    let ks: Vec<usize> = (0..n).collect();
    let d: Vec<f64> = ks.par_iter().map(|&kk| sym_entry(spec, kk, h, cfg).map(|v| scale * v)).collect::<Result<_>>()?;
    let a: Vec<f64> = if odd {
        ks.par_iter().map(|&kk| anti_entry(spec, kk, h, cfg).map(|v| scale * v)).collect::<Result<_>>()?
    } else {
        vec![0.0; n]
    };
    let (s_sym, mut s_anti) = toeplitz(&d, &a, n);
    let mut toep = Some((d, a));
    if let Some(amp) = drift {
        if amp != 0.0 {
            s_anti = drift_matrix(spec, mesh, amp, cfg)?;
            toep = None;
        }
    }
    let mass = Tridiagonal { diag: vec![2.0 * h / 3.0; n], off: vec![h / 6.0; n - 1] };
    let mut mass_w = Tridiagonal { diag: vec![0.0; n], off: vec![0.0; n - 1] };
    for_domain_cells(mesh, |c, x0, h| {
        for (gx, gw) in GAUSS4 {
            let tau = 0.5 * (gx + 1.0);
            let v = w.eval(x0 + tau * h) * 0.5 * gw * h;
            mass_w.diag[c] += v * (1.0 - tau) * (1.0 - tau);
            mass_w.diag[c + 1] += v * tau * tau;
            mass_w.off[c] += v * tau * (1.0 - tau);
        }
    });
    Ok(AssembledSystem {
        kernel: k.clone(),
        mesh: mesh.clone(),
        w: w.clone(),
        s_sym,
        s_anti,
        mass,
        mass_w,
        toeplitz: toep,
        cfg: *cfg,
    })
}

/// sup |tanh''|.
const TANH2_SUP: f64 = 0.769_800_358_919_501;

/// E_a(φ_j, φ_i) for K_a(x, y) = (amp/2)(tanh x − tanh y) j(y − x), j even:
/// ∫φ_iφ_j I − ∬φ_i(x)φ_j(y)K_a, with I(x) = ∫K_a(x, y) dy.
fn drift_matrix(spec: &KernelSpec, mesh: &Mesh1D, amp: f64, cfg: &QuadConfig) -> Result<DMatrix<f64>> {
    let n = mesh.len();
    let h = mesh.h;
    let x0 = mesh.x(0);
    let cells: Vec<i64> = (-1..n as i64).collect();
    let cell_x = |c: i64| x0 + c as f64 * h;
    let ka = |x: f64, y: f64| -> Result<f64> {
        // a null set for the pair integrals; rounding in nested panels can land on it
        if y == x {
            return Ok(0.0);
        }
        Ok(0.5 * amp * (x.tanh() - y.tanh()) * spec.eval_1d(y - x)?)
    };
    let drift_integral = |x: f64| -> Result<f64> {
        let b = |z: f64| 2.0 * x.tanh() - (x + z).tanh() - (x - z).tanh();
        let near_f = |z: f64| -> Result<f64> { Ok(0.5 * spec.radial_density(z)? * b(z) / (z * z)) };
        let far_f = |z: f64| -> Result<f64> { Ok(0.5 * spec.radial_density(z)? * b(z)) };
        let tail = match spec.tail_behavior() {
            TailBehavior::Power(e) => TailBehavior::Power(PowerEnvelope { exact: false, ..e.scaled(2.0) }),
            other => other,
        };
        let near = radial(spec, &near_f, inexact(spec.near_envelope(), 0.5 * TANH2_SUP), TailBehavior::Unknown);
        let far = radial(spec, &far_f, None, tail);
        let r1 = near.integrate(2.0, 0.0, 1.0, cfg)?;
        let r2 = far.integrate(0.0, 1.0, f64::INFINITY, cfg)?;
        Ok(0.5 * amp * (r1.value + r2.value))
    };
    // Diagonal-type term ∫ ψ_α ψ_β I per cell.
    let diag_blocks: Vec<Result<[f64; 3]>> = cells
        .par_iter()
        .map(|&c| {
            let mut blk = [0.0; 3];
            for (gx, gw) in GAUSS8 {
                let tau = 0.5 * (gx + 1.0);
                let v = drift_integral(cell_x(c) + tau * h)? * 0.5 * gw * h;
                blk[0] += v * (1.0 - tau) * (1.0 - tau);
                blk[1] += v * tau * (1.0 - tau);
                blk[2] += v * tau * tau;
            }
            Ok(blk)
        })
        .collect();
    // Pair term ∬ ψ_α(x) ψ_β(y) K_a(x, y) per cell pair.
    let pairs: Vec<(i64, i64)> = cells.iter().flat_map(|&c| cells.iter().map(move |&e| (c, e))).collect();
    let pair_blocks: Vec<Result<[[f64; 2]; 2]>> = pairs
        .par_iter()
        .map(|&(c, e)| {
            let mut blk = [[0.0; 2]; 2];
            let (xc, xe) = (cell_x(c), cell_x(e));
            for (gx, gw) in GAUSS8 {
                let tau = 0.5 * (gx + 1.0);
                let x = xc + tau * h;
                let wx = 0.5 * gw * h;
                if c.abs_diff(e) >= 2 {
                    for (gy, gv) in GAUSS8 {
                        let s = 0.5 * (gy + 1.0);
                        let v = ka(x, xe + s * h)? * wx * 0.5 * gv * h;
                        blk[0][0] += v * (1.0 - tau) * (1.0 - s);
                        blk[0][1] += v * (1.0 - tau) * s;
                        blk[1][0] += v * tau * (1.0 - s);
                        blk[1][1] += v * tau * s;
                    }
                } else {
                    for beta in 0..2 {
                        let err = RefCell::new(None);
                        let f = |y: f64| {
                            let s = (y - xe) / h;
                            let psi = if beta == 0 { 1.0 - s } else { s };
                            match ka(x, y) {
                                Ok(v) => v * psi,
                                Err(er) => {
                                    err.borrow_mut().get_or_insert(er);
                                    0.0
                                }
                            }
                        };
                        let br: Vec<f64> = if x > xe && x < xe + h { vec![x] } else { vec![] };
                        let r = gk::integrate(&f, xe, xe + h, &br, cfg.tolerance());
                        if let Some(er) = err.into_inner() {
                            return Err(er);
                        }
                        if !r.value.is_finite() {
                            return Err(Error::Assembly { i: c.max(0) as usize, j: e.max(0) as usize, message: "drift cell pair diverged".into() });
                        }
                        blk[0][beta] += wx * (1.0 - tau) * r.value;
                        blk[1][beta] += wx * tau * r.value;
                    }
                }
            }
            Ok(blk)
        })
        .collect();
    let mut m = DMatrix::<f64>::zeros(n, n);
    let idx = |c: i64, off: i64| -> Option<usize> {
        let k = c + off;
        (k >= 0 && k < n as i64).then_some(k as usize)
    };
    for (&c, blk) in cells.iter().zip(diag_blocks) {
        let blk = blk?;
        let (l, r) = (idx(c, 0), idx(c, 1));
        if let Some(l) = l {
            m[(l, l)] += blk[0];
        }
        if let Some(r) = r {
            m[(r, r)] += blk[2];
        }
        if let (Some(l), Some(r)) = (l, r) {
            m[(l, r)] += blk[1];
            m[(r, l)] += blk[1];
        }
    }
    let mut j = DMatrix::<f64>::zeros(n, n);
    for (&(c, e), blk) in pairs.iter().zip(pair_blocks) {
        let blk = blk?;
        for al in 0..2 {
            for be in 0..2 {
                if let (Some(i), Some(k)) = (idx(c, al as i64), idx(e, be as i64)) {
                    j[(i, k)] += blk[al][be];
                }
            }
        }
    }
    // ∬φ_i(x)φ_j(y)K_a is antisymmetric in (i, j); remove quadrature asymmetry.
    let j = (&j - j.transpose()) * 0.5;
    Ok(m - j)
}
