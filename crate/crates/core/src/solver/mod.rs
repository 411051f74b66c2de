//! One-dimensional P1 Galerkin discretization of E(u, φ) = ∫(Wu + f)φ with
//! exterior data, and empirical Gårding and Poincaré constants.

mod assembly;
mod mesh;

pub use assembly::{assemble, bspline, AssembledSystem, Tridiagonal};
pub use mesh::{read_matrix, write_matrix, DiscreteFunction, Mesh1D, NodeClass, BINARY_MAGIC, BINARY_VERSION};

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::TwoPointKernel;
use crate::quadrature::{radial_moment, BoundedFunction, QuadConfig};

/// Uniform mesh on Ω = (a, b) with a collar of width `collar` on each side.
pub fn build_mesh(a: f64, b: f64, collar: f64, h: f64) -> Result<Mesh1D> {
    Mesh1D::new(a, b, collar, h)
}

fn sup_positive(w: &BoundedFunction) -> f64 {
    match w {
        BoundedFunction::Zero => 0.0,
        BoundedFunction::Constant { value } => value.max(0.0),
        BoundedFunction::Tabulated { values, far, .. } => values.iter().copied().fold(far.max(0.0), f64::max),
    }
}

/// Checks Λ‖W⁺‖_∞ < ∫ j (vacuous when W ≤ 0 or ∫ j = ∞).
pub fn check_solvability(k: &TwoPointKernel, w: &BoundedFunction, cfg: &QuadConfig) -> Result<()> {
    let wp = sup_positive(w);
    if wp == 0.0 {
        return Ok(());
    }
    let total = match radial_moment(&k.base, 0.0, 0.0, f64::INFINITY, cfg) {
        Ok(r) if r.value.is_finite() => r.value,
        _ => f64::INFINITY,
    };
    let lhs = k.base.lambda() * wp;
    if lhs < total {
        Ok(())
    } else {
        Err(Error::Precondition(format!("Λ‖W⁺‖∞ = {lhs:e} is not below ∫j = {total:e}")))
    }
}

/// Solves (S − M_W)u = ∫fφ + tail(g) on the interior nodes; collar nodes carry g.
pub fn solve(system: &AssembledSystem, f: &BoundedFunction, g: &BoundedFunction) -> Result<DiscreteFunction> {
    f.validate()?;
    g.validate()?;
    check_solvability(&system.kernel, &system.w, &system.cfg)?;
    let mesh = &system.mesh;
    let n = mesh.len();
    let int = mesh.interior();
    let m = int.len();
    let s = system.stiffness();
    let load = system.load(f);
    let tail = system.tail_load(g)?;
    let gv: Vec<f64> = (0..n).map(|j| if int.contains(&j) { 0.0 } else { g.eval(mesh.x(j)) }).collect();
    let a = DMatrix::from_fn(m, m, |p, q| {
        let (i, j) = (int.start + p, int.start + q);
        s[(i, j)] - system.mass_w.get(i, j)
    });
    let rhs = DVector::from_fn(m, |p, _| {
        let i = int.start + p;
        let coupling: f64 = (0..n).filter(|j| !int.contains(j)).map(|j| (s[(i, j)] - system.mass_w.get(i, j)) * gv[j]).sum();
        load[i] + tail[i] - coupling
    });
    let lu = a.lu();
    let piv: Vec<f64> = lu.u().diagonal().iter().map(|v| v.abs()).collect();
    let (lo, hi) = piv.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    if !(lo > 1e-13 * hi) {
        return Err(Error::NearResonance(format!("pivot ratio {:e}", lo / hi)));
    }
    let x = lu.solve(&rhs).ok_or_else(|| Error::NearResonance("LU solve failed".into()))?;
    let mut values = gv;
    for p in 0..m {
        values[int.start + p] = x[p];
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite solution".into()));
    }
    DiscreteFunction::new(mesh.clone(), values, g.clone())
}

/// Weak residual E(u, φ_i) − ∫(Wu + f)φ_i over interior hats, divided by ‖φ_i‖_{L¹} = h.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub per_node: Vec<f64>,
    pub max_abs: f64,
    /// max_i of the signed residual (≤ 0: subsolution test passes).
    pub max_signed: f64,
    /// min_i of the signed residual (≥ 0: supersolution test passes).
    pub min_signed: f64,
}

/// E(u, φ_i) for every hat; the two end hats (which reach into the ramp cells) are NaN.
pub fn weak_action(system: &AssembledSystem, u: &DiscreteFunction) -> Result<Vec<f64>> {
    if u.mesh != system.mesh {
        return Err(Error::Argument("function and system live on different meshes".into()));
    }
    let tail = system.tail_load(&u.far)?;
    let su = system.stiffness() * DVector::from_column_slice(&u.values);
    let n = u.values.len();
    Ok((0..n).map(|i| if i == 0 || i + 1 == n { f64::NAN } else { su[i] - tail[i] }).collect())
}

pub fn residual(system: &AssembledSystem, u: &DiscreteFunction, f: &BoundedFunction) -> Result<Residual> {
    let e = weak_action(system, u)?;
    let load = system.load(f);
    let wu = system.mass_w.mul(&u.values);
    let h = system.mesh.h;
    let per_node: Vec<f64> = system.mesh.interior().map(|i| (e[i] - wu[i] - load[i]) / h).collect();
    let max_abs = per_node.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let max_signed = per_node.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_signed = per_node.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Residual { per_node, max_abs, max_signed, min_signed })
}

/// Empirical Gårding constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GardingEstimate {
    /// max over trials of (¼D_s(u,u) − E(u,u))/‖u‖², floored at 0.
    pub c_hat: f64,
    /// Largest generalized eigenvalue of the same quotient (an upper bound for every discrete u).
    pub eigen_bound: f64,
    pub trials: usize,
}

/// (¼D_s(u,u) − E(u,u))/‖u‖² for nodal values u.
pub fn garding_quotient(system: &AssembledSystem, u: &[f64]) -> f64 {
    let v = DVector::from_column_slice(u);
    let num = -0.5 * v.dot(&(&system.s_sym * &v)) - v.dot(&(&system.s_anti * &v));
    let den = v.dot(&DVector::from_vec(system.mass.mul(u)));
    num / den
}

/// Largest λ with Qu = λMu for symmetric Q and SPD M.
fn generalized_extreme(q: &DMatrix<f64>, m: &DMatrix<f64>, largest: bool) -> Result<f64> {
    let chol = m.clone().cholesky().ok_or_else(|| Error::Numerical("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let c = &linv * q * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.try_symmetric_eigen(1e-14, 10_000).ok_or_else(|| Error::Numerical("symmetric eigen-solver did not converge".into()))?;
    let ev = eig.eigenvalues.iter().copied();
    Ok(if largest { ev.fold(f64::NEG_INFINITY, f64::max) } else { ev.fold(f64::INFINITY, f64::min) })
}

pub fn garding_from(system: &AssembledSystem, trials: usize, seed: u64) -> Result<GardingEstimate> {
    if trials < 100 {
        return Err(Error::Argument(format!("garding_check needs at least 100 trials, got {trials}")));
    }
    let n = system.mesh.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = system.mesh.outer();
    let mut best = 0.0f64;
    for t in 0..trials {
        let u: Vec<f64> = if t % 2 == 0 {
            (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
        } else {
            let amps: Vec<f64> = (0..4).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            (0..n)
                .map(|i| {
                    let s = (system.mesh.x(i) - lo) / (hi - lo);
                    amps.iter().enumerate().map(|(m, a)| a * ((m + 1) as f64 * std::f64::consts::PI * s).sin()).sum()
                })
                .collect()
        };
        let q = garding_quotient(system, &u);
        if q.is_finite() {
            best = best.max(q);
        }
    }
    let q = -(&system.s_sym * 0.5) - (&system.s_anti + system.s_anti.transpose()) * 0.5;
    let eigen_bound = generalized_extreme(&q, &system.mass.dense(), true)?.max(0.0);
    Ok(GardingEstimate { c_hat: best, eigen_bound, trials })
}

pub fn garding_check(k: &TwoPointKernel, mesh: &Mesh1D, trials: usize, seed: u64, cfg: &QuadConfig) -> Result<GardingEstimate> {
    if trials < 100 {
        return Err(Error::Argument(format!("garding_check needs at least 100 trials, got {trials}")));
    }
    let system = assemble(k, mesh, &BoundedFunction::Zero, cfg)?;
    garding_from(&system, trials, seed)
}

/// Smallest λ with D_s u = λ M u over functions vanishing outside Ω (D_s = 2 S_sym).
pub fn lambda1_from(system: &AssembledSystem) -> Result<f64> {
    let r = system.mesh.interior();
    let m = r.len();
    let d = DMatrix::from_fn(m, m, |p, q| 2.0 * system.s_sym[(r.start + p, r.start + q)]);
    let mm = DMatrix::from_fn(m, m, |p, q| system.mass.get(r.start + p, r.start + q));
    generalized_extreme(&d, &mm, false)
}

pub fn poincare_lambda1(k: &TwoPointKernel, mesh: &Mesh1D, cfg: &QuadConfig) -> Result<f64> {
    let system = assemble(k, mesh, &BoundedFunction::Zero, cfg)?;
    lambda1_from(&system)
}

impl AssembledSystem {
    /// Full stiffness matrix in the flat binary layout.
    pub fn stiffness_binary(&self) -> Vec<u8> {
        let s = self.stiffness();
        let n = s.nrows();
        let data: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| s[(i, j)]).collect();
        write_matrix(n, n, &data)
    }

    /// Stiffness entries as `i,j,value` rows (nonzero entries only).
    pub fn stiffness_csv(&self) -> Result<Vec<u8>> {
        let s = self.stiffness();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["i", "j", "value"]).map_err(crate::growth::csv_err)?;
        for i in 0..s.nrows() {
            for j in 0..s.ncols() {
                if s[(i, j)] != 0.0 {
                    w.write_record([i.to_string(), j.to_string(), format!("{:e}", s[(i, j)])]).map_err(crate::growth::csv_err)?;
                }
            }
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }
}
