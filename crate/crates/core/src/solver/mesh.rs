use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::growth::csv_err;
use crate::quadrature::BoundedFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeClass {
    Interior,
    Collar,
}

/// Uniform mesh of Ω' = [a − collar, b + collar] ⊃ Ω = (a, b).
///
/// Every node carries a P1 hat; the hats of the two end nodes reach one cell
/// into the far field, where u ramps linearly to the exterior data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh1D {
    pub a: f64,
    pub b: f64,
    pub collar: f64,
    pub h: f64,
    collar_cells: usize,
    domain_cells: usize,
}

fn cells(len: f64, h: f64, what: &str) -> Result<usize> {
    let q = len / h;
    let n = q.round();
    if n < 1.0 || (q - n).abs() > 1e-9 * q.max(1.0) {
        return Err(Error::Argument(format!("{what} length {len} is not a positive multiple of h = {h}")));
    }
    Ok(n as usize)
}

impl Mesh1D {
    pub fn new(a: f64, b: f64, collar: f64, h: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Argument(format!("domain ({a}, {b}) is empty or unbounded")));
        }
        if !(collar > 0.0) || !(h > 0.0) {
            return Err(Error::Argument("collar width and h must be positive".into()));
        }
        if h > b - a {
            return Err(Error::Argument(format!("h = {h} exceeds the domain length")));
        }
        let domain_cells = cells(b - a, h, "domain")?;
        let collar_cells = cells(collar, h, "collar")?;
        Ok(Mesh1D { a, b, collar, h, collar_cells, domain_cells })
    }

    pub fn len(&self) -> usize {
        self.domain_cells + 2 * self.collar_cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, i: usize) -> f64 {
        self.a - self.collar + i as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    pub fn class(&self, i: usize) -> NodeClass {
        if i > self.collar_cells && i < self.collar_cells + self.domain_cells {
            NodeClass::Interior
        } else {
            NodeClass::Collar
        }
    }

    /// Indices of the nodes inside Ω, increasing.
    pub fn interior(&self) -> std::ops::Range<usize> {
        self.collar_cells + 1..self.collar_cells + self.domain_cells
    }

    /// Ω' as a closed interval.
    pub fn outer(&self) -> (f64, f64) {
        (self.a - self.collar, self.b + self.collar)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["i", "x", "class"]).map_err(csv_err)?;
        for i in 0..self.len() {
            let c = match self.class(i) {
                NodeClass::Interior => "interior",
                NodeClass::Collar => "collar",
            };
            w.write_record([i.to_string(), format!("{:e}", self.x(i)), c.to_string()]).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }

    /// Rows (x, class) with class 0 = interior, 1 = collar.
    pub fn to_binary(&self) -> Vec<u8> {
        let data: Vec<f64> = (0..self.len())
            .flat_map(|i| [self.x(i), if self.class(i) == NodeClass::Interior { 0.0 } else { 1.0 }])
            .collect();
        write_matrix(self.len(), 2, &data)
    }
}

/// Nodal values on Ω' plus the exterior data beyond it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteFunction {
    pub mesh: Mesh1D,
    pub values: Vec<f64>,
    pub far: BoundedFunction,
}

impl DiscreteFunction {
    pub fn new(mesh: Mesh1D, values: Vec<f64>, far: BoundedFunction) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::Argument(format!("{} values for {} nodes", values.len(), mesh.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite nodal value".into()));
        }
        far.validate()?;
        Ok(DiscreteFunction { mesh, values, far })
    }

    /// Nodal interpolant of `g` on all nodes, with `g` as exterior data.
    pub fn interpolate(mesh: &Mesh1D, g: &BoundedFunction) -> Result<Self> {
        let values = mesh.nodes().iter().map(|&x| g.eval(x)).collect();
        DiscreteFunction::new(mesh.clone(), values, g.clone())
    }

    /// Point value (piecewise linear on Ω', ramp to the far data on the end cells).
    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.mesh.outer();
        let h = self.mesh.h;
        let n = self.values.len();
        if x < lo {
            let w = ((lo - x) / h).min(1.0);
            return (1.0 - w) * self.values[0] + w * self.far.eval(x);
        }
        if x > hi {
            let w = ((x - hi) / h).min(1.0);
            return (1.0 - w) * self.values[n - 1] + w * self.far.eval(x);
        }
        let s = (x - lo) / h;
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        (1.0 - t) * self.values[i] + t * self.values[i + 1]
    }

    pub fn sup_interior(&self) -> f64 {
        self.mesh.interior().map(|i| self.values[i].abs()).fold(0.0, f64::max)
    }

    pub fn sup_collar(&self) -> f64 {
        (0..self.mesh.len())
            .filter(|&i| self.mesh.class(i) == NodeClass::Collar)
            .map(|i| self.values[i].abs())
            .fold(self.far.sup_abs(), f64::max)
    }

    /// ‖u‖_{L²(Ω)} of the P1 interpolant (exact for piecewise linears).
    pub fn l2_domain(&self) -> f64 {
        let h = self.mesh.h;
        let first = self.mesh.interior().start - 1;
        let last = self.mesh.interior().end;
        let mut s = 0.0;
        for i in first..last {
            let (u0, u1) = (self.values[i], self.values[i + 1]);
            s += h * (u0 * u0 + u0 * u1 + u1 * u1) / 3.0;
        }
        s.sqrt()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["x", "u", "class"]).map_err(csv_err)?;
        for (i, v) in self.values.iter().enumerate() {
            let c = match self.mesh.class(i) {
                NodeClass::Interior => "interior",
                NodeClass::Collar => "collar",
            };
            w.write_record([format!("{:e}", self.mesh.x(i)), format!("{v:e}"), c.to_string()]).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }

    /// Rows (x, u).
    pub fn to_binary(&self) -> Vec<u8> {
        let data: Vec<f64> = self.values.iter().enumerate().flat_map(|(i, &v)| [self.mesh.x(i), v]).collect();
        write_matrix(self.values.len(), 2, &data)
    }
}

/// Magic bytes of the flat binary matrix format.
pub const BINARY_MAGIC: &[u8; 4] = b"NLRG";
pub const BINARY_VERSION: u32 = 1;

/// `NLRG`, u32 version, u64 rows, u64 cols, then rows·cols little-endian f64 in row-major order.
pub fn write_matrix(rows: usize, cols: usize, data: &[f64]) -> Vec<u8> {
    assert_eq!(rows * cols, data.len(), "matrix shape mismatch");
    let mut out = Vec::with_capacity(24 + 8 * data.len());
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Inverse of [`write_matrix`]: (rows, cols, data).
pub fn read_matrix(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    let bad = |m: &str| Error::Io(format!("malformed matrix file: {m}"));
    if bytes.len() < 24 || &bytes[..4] != BINARY_MAGIC {
        return Err(bad("missing header"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != BINARY_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let cols = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes")) as usize;
    let body = &bytes[24..];
    if rows.checked_mul(cols).and_then(|n| n.checked_mul(8)) != Some(body.len()) {
        return Err(bad("length does not match shape"));
    }
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((rows, cols, data))
}
