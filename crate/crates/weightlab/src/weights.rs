//! Weight representations behind a single average/integral oracle, plus the
//! gallery of example weights.
//!
//! Four backends: a global constant, a global power |x|^a (L∞ norm of x in
//! dimension 2), a compactly supported grid weight (piecewise constant on
//! cells, zero outside its box), and a product of a power with a bounded
//! grid bump (zero outside the bump box). Averages are exact for grid and
//! 1-D power backends; 2-D power integrals use adaptive quadrature with a
//! declared tolerance.

use crate::error::{Error, Result};
use crate::geometry::{Cube, GridSet};
use crate::quad;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Relative tolerance target for quadrature-backed averages.
pub const QUAD_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// GridWeight
// ---------------------------------------------------------------------------

/// Piecewise-constant weight on a uniform grid over a box, zero outside.
#[derive(Debug, Clone, Serialize)]
pub struct GridWeight {
    boxc: Cube,
    cells_per_axis: usize,
    values: Vec<f64>,
    #[serde(skip)]
    prefix: Vec<f64>,
    #[serde(skip)]
    mass: f64,
}

impl<'de> Deserialize<'de> for GridWeight {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            boxc: Cube,
            cells_per_axis: usize,
            values: Vec<f64>,
        }
        let raw = Raw::deserialize(de)?;
        GridWeight::new(raw.boxc, raw.cells_per_axis, raw.values).map_err(serde::de::Error::custom)
    }
}

impl GridWeight {
    pub fn new(boxc: Cube, cells_per_axis: usize, values: Vec<f64>) -> Result<Self> {
        let dim = boxc.dim();
        let want = if dim == 1 { cells_per_axis } else { cells_per_axis * cells_per_axis };
        if cells_per_axis == 0 || values.len() != want {
            return Err(Error::InvalidWeight(format!(
                "expected {want} cell values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidWeight("grid values must be finite and >= 0".into()));
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidWeight("weight must not be identically zero".into()));
        }
        let mut w = GridWeight { boxc, cells_per_axis, values, prefix: Vec::new(), mass: 0.0 };
        w.rebuild_prefix();
        let d = w.cell_side();
        let cv = if w.boxc.dim() == 1 { d } else { d * d };
        w.mass = w.values.iter().sum::<f64>() * cv;
        Ok(w)
    }

    fn rebuild_prefix(&mut self) {
        let n = self.cells_per_axis;
        if self.boxc.dim() == 1 {
            let mut p = vec![0.0; n + 1];
            for i in 0..n {
                p[i + 1] = p[i] + self.values[i];
            }
            self.prefix = p;
        } else {
            let mut p = vec![0.0; (n + 1) * (n + 1)];
            for j in 0..n {
                for i in 0..n {
                    p[(j + 1) * (n + 1) + i + 1] = self.values[j * n + i]
                        + p[j * (n + 1) + i + 1]
                        + p[(j + 1) * (n + 1) + i]
                        - p[j * (n + 1) + i];
                }
            }
            self.prefix = p;
        }
    }

    pub fn boxc(&self) -> &Cube {
        &self.boxc
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn cell_side(&self) -> f64 {
        self.boxc.side() / self.cells_per_axis as f64
    }

    fn locate(&self, axis: usize, x: f64) -> (usize, f64) {
        // clamp to the box, return (cell index, intra-cell offset length)
        let lo = self.boxc.low(axis);
        let hi = self.boxc.high(axis);
        let d = self.cell_side();
        let xc = x.clamp(lo, hi);
        let raw = ((xc - lo) / d).floor();
        let i = (raw.max(0.0) as usize).min(self.cells_per_axis - 1);
        let frac = (xc - (lo + i as f64 * d)).clamp(0.0, d);
        (i, frac)
    }

    /// Exact ∫ over the box [lo0,hi0)×[lo1,hi1) of the extension-by-zero.
    pub fn box_integral(&self, lo: [f64; 2], hi: [f64; 2]) -> f64 {
        let dim = self.boxc.dim();
        if dim == 1 {
            self.cum_1d(hi[0]) - self.cum_1d(lo[0])
        } else {
            self.cum_2d(hi[0], hi[1]) - self.cum_2d(lo[0], hi[1]) - self.cum_2d(hi[0], lo[1])
                + self.cum_2d(lo[0], lo[1])
        }
    }

    fn cum_1d(&self, x: f64) -> f64 {
        let d = self.cell_side();
        let (i, frac) = self.locate(0, x);
        self.prefix[i] * d + self.values[i] * frac
    }

    fn cum_2d(&self, x: f64, y: f64) -> f64 {
        let n = self.cells_per_axis;
        let d = self.cell_side();
        let (i, fx) = self.locate(0, x);
        let (j, fy) = self.locate(1, y);
        let p = |jj: usize, ii: usize| self.prefix[jj * (n + 1) + ii];
        let block = p(j, i) * d * d;
        let col = (p(j, i + 1) - p(j, i)) * d * fx;
        let row = (p(j + 1, i) - p(j, i)) * d * fy;
        let corner = self.values[j * n + i] * fx * fy;
        block + col + row + corner
    }

    /// ∫ w^r over a box, by direct scan of intersecting cells (exact).
    pub fn pow_box_integral(&self, r: f64, lo: [f64; 2], hi: [f64; 2]) -> f64 {
        let n = self.cells_per_axis;
        let d = self.cell_side();
        let dim = self.boxc.dim();
        let clamp_axis = |axis: usize, a: f64, b: f64| -> (usize, usize, f64, f64) {
            let bl = self.boxc.low(axis);
            let bh = self.boxc.high(axis);
            let a = a.max(bl);
            let b = b.min(bh);
            if a >= b {
                return (0, 0, a, b);
            }
            let i0 = (((a - bl) / d).floor().max(0.0) as usize).min(n - 1);
            let i1 = (((b - bl) / d).ceil() as usize).clamp(i0 + 1, n);
            (i0, i1, a, b)
        };
        let overlap = |i: usize, axis: usize, a: f64, b: f64| -> f64 {
            let clo = self.boxc.low(axis) + i as f64 * d;
            let chi = clo + d;
            (b.min(chi) - a.max(clo)).max(0.0)
        };
        let (x0, x1, ax, bx) = clamp_axis(0, lo[0], hi[0]);
        if ax >= bx {
            return 0.0;
        }
        if dim == 1 {
            let mut acc = 0.0;
            for i in x0..x1 {
                let len = overlap(i, 0, ax, bx);
                if len > 0.0 && self.values[i] > 0.0 {
                    acc += self.values[i].powf(r) * len;
                }
            }
            acc
        } else {
            let (y0, y1, ay, by) = clamp_axis(1, lo[1], hi[1]);
            if ay >= by {
                return 0.0;
            }
            let mut acc = 0.0;
            for j in y0..y1 {
                let ly = overlap(j, 1, ay, by);
                if ly <= 0.0 {
                    continue;
                }
                for i in x0..x1 {
                    let lx = overlap(i, 0, ax, bx);
                    if lx > 0.0 && self.values[j * n + i] > 0.0 {
                        acc += self.values[j * n + i].powf(r) * lx * ly;
                    }
                }
            }
            acc
        }
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
}

// ---------------------------------------------------------------------------
// Weight
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Backend {
    /// w ≡ value on all of ℝⁿ.
    Constant(f64),
    /// w(x) = |x|^a with |·| the L∞ norm (absolute value in 1-D); a > -n.
    Power { exponent: f64 },
    /// Compactly supported grid weight.
    Grid(GridWeight),
    /// g(x)·|x|^a with g a bounded non-negative grid multiplier, zero
    /// outside the bump box.
    Product { exponent: f64, bump: GridWeight },
}

/// A non-negative, not identically zero, locally integrable weight exposed
/// through average/integral oracles. Immutable after construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Weight {
    id: String,
    dim: usize,
    scale: f64,
    backend: Backend,
}

impl Weight {
    pub fn constant(dim: usize, value: f64) -> Result<Weight> {
        if !(value > 0.0) {
            return Err(Error::InvalidWeight("constant weight must be positive".into()));
        }
        Ok(Weight {
            id: format!("constant({value})"),
            dim,
            scale: 1.0,
            backend: Backend::Constant(value),
        })
    }

    pub fn power(dim: usize, exponent: f64) -> Result<Weight> {
        if exponent <= -(dim as f64) {
            return Err(Error::InvalidWeight(format!(
                "power exponent {exponent} <= -n breaks local integrability"
            )));
        }
        Ok(Weight {
            id: format!("power(a={exponent})"),
            dim,
            scale: 1.0,
            backend: Backend::Power { exponent },
        })
    }

    pub fn grid(gw: GridWeight) -> Weight {
        let dim = gw.boxc().dim();
        Weight {
            id: format!("grid(n={},N={})", dim, gw.cells_per_axis()),
            dim,
            scale: 1.0,
            backend: Backend::Grid(gw),
        }
    }

    pub fn product(exponent: f64, bump: GridWeight) -> Result<Weight> {
        let dim = bump.boxc().dim();
        if exponent <= -(dim as f64) {
            return Err(Error::InvalidWeight(format!(
                "power exponent {exponent} <= -n breaks local integrability"
            )));
        }
        Ok(Weight {
            id: format!("product(a={exponent},N={})", bump.cells_per_axis()),
            dim,
            scale: 1.0,
            backend: Backend::Product { exponent, bump },
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Weight {
        self.id = id.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    /// Global multiplier applied on top of the backend (1 by default).
    pub fn scale_factor(&self) -> f64 {
        self.scale
    }

    /// The same weight multiplied by c > 0.
    pub fn scaled(&self, c: f64) -> Weight {
        let mut w = self.clone();
        w.scale *= c;
        w.id = format!("{}*{}", c, w.id);
        w
    }

    /// Exponent of the power backend, when there is one.
    pub fn power_exponent(&self) -> Option<f64> {
        match &self.backend {
            Backend::Power { exponent } => Some(*exponent),
            _ => None,
        }
    }

    /// Total mass and support box for compactly supported backends.
    pub fn mass_and_support(&self) -> Option<(f64, Cube)> {
        match &self.backend {
            Backend::Grid(g) => Some((self.scale * g.mass(), *g.boxc())),
            Backend::Product { bump, .. } => {
                let b = *bump.boxc();
                Some((self.integral(&b), b))
            }
            _ => None,
        }
    }

    /// ∫_Q w; exact for constant/grid/1-D power, quadrature otherwise.
    pub fn integral(&self, q: &Cube) -> f64 {
        self.scale * self.integral_unscaled(q)
    }

    fn integral_unscaled(&self, q: &Cube) -> f64 {
        match &self.backend {
            Backend::Constant(c) => c * q.volume(),
            Backend::Power { exponent } => {
                if self.dim == 1 {
                    quad::integral_abs_pow(*exponent, q.low(0), q.high(0))
                } else {
                    linf_pow_box_integral(*exponent, q.low(0), q.high(0), q.low(1), q.high(1))
                }
            }
            Backend::Grid(g) => g.box_integral([q.low(0), q.low(1)], [q.high(0), q.high(1)]),
            Backend::Product { exponent, bump } => {
                product_scan(self.dim, bump, q, |v, x0, x1, y0, y1| {
                    v * if self.dim == 1 {
                        quad::integral_abs_pow(*exponent, x0, x1)
                    } else {
                        linf_pow_box_integral(*exponent, x0, x1, y0, y1)
                    }
                })
            }
        }
    }

    /// (1/|Q|)∫_Q w. Zero outside the support is a value, not an error.
    pub fn avg(&self, q: &Cube) -> f64 {
        self.integral(q) / q.volume()
    }

    /// ∫_Q w^r for r > 0; errors when the powered exponent loses local
    /// integrability.
    pub fn pow_integral(&self, r: f64, q: &Cube) -> Result<f64> {
        let v = match &self.backend {
            Backend::Constant(c) => c.powf(r) * q.volume(),
            Backend::Power { exponent } => {
                let ar = exponent * r;
                if ar <= -(self.dim as f64) {
                    return Err(Error::InvalidWeight(format!(
                        "w^{r} with base exponent {exponent} is not locally integrable"
                    )));
                }
                if self.dim == 1 {
                    quad::integral_abs_pow(ar, q.low(0), q.high(0))
                } else {
                    linf_pow_box_integral(ar, q.low(0), q.high(0), q.low(1), q.high(1))
                }
            }
            Backend::Grid(g) => g.pow_box_integral(r, [q.low(0), q.low(1)], [q.high(0), q.high(1)]),
            Backend::Product { exponent, bump } => {
                let ar = exponent * r;
                if ar <= -(self.dim as f64) {
                    return Err(Error::InvalidWeight(format!(
                        "w^{r} with base exponent {exponent} is not locally integrable"
                    )));
                }
                product_scan(self.dim, bump, q, |v, x0, x1, y0, y1| {
                    if v == 0.0 {
                        0.0
                    } else {
                        v.powf(r)
                            * if self.dim == 1 {
                                quad::integral_abs_pow(ar, x0, x1)
                            } else {
                                linf_pow_box_integral(ar, x0, x1, y0, y1)
                            }
                    }
                })
            }
        };
        Ok(self.scale.powf(r) * v)
    }

    /// (1/|Q|)∫_Q w^r.
    pub fn pow_avg(&self, r: f64, q: &Cube) -> Result<f64> {
        Ok(self.pow_integral(r, q)? / q.volume())
    }

    /// ∫ over a union of grid cells; additive over disjoint sets.
    pub fn integral_over(&self, set: &GridSet) -> f64 {
        let mut acc = 0.0;
        for (ix, iy) in set.cells() {
            acc += self.integral(&set.cell_cube(ix, iy));
        }
        acc
    }

    /// True when the C_p tails diverge for this weight (power backend with
    /// exponent at or above n(p-1)).
    pub fn tail_divergent(&self, p: f64) -> bool {
        match &self.backend {
            Backend::Power { exponent } => *exponent >= self.dim as f64 * (p - 1.0),
            _ => false,
        }
    }
}

fn product_scan(
    dim: usize,
    bump: &GridWeight,
    q: &Cube,
    cell_term: impl Fn(f64, f64, f64, f64, f64) -> f64,
) -> f64 {
    let n = bump.cells_per_axis();
    let d = bump.cell_side();
    let b = bump.boxc();
    let mut acc = 0.0;
    let x_range = cell_range(b.low(0), d, n, q.low(0), q.high(0));
    if dim == 1 {
        for ix in x_range.0..x_range.1 {
            let v = bump.values()[ix];
            if v == 0.0 {
                continue;
            }
            let c0 = b.low(0) + ix as f64 * d;
            let (x0, x1) = (q.low(0).max(c0), q.high(0).min(c0 + d));
            if x0 < x1 {
                acc += cell_term(v, x0, x1, 0.0, 0.0);
            }
        }
    } else {
        let y_range = cell_range(b.low(1), d, n, q.low(1), q.high(1));
        for iy in y_range.0..y_range.1 {
            let r0 = b.low(1) + iy as f64 * d;
            let (y0, y1) = (q.low(1).max(r0), q.high(1).min(r0 + d));
            if y0 >= y1 {
                continue;
            }
            for ix in x_range.0..x_range.1 {
                let v = bump.values()[iy * n + ix];
                if v == 0.0 {
                    continue;
                }
                let c0 = b.low(0) + ix as f64 * d;
                let (x0, x1) = (q.low(0).max(c0), q.high(0).min(c0 + d));
                if x0 < x1 {
                    acc += cell_term(v, x0, x1, y0, y1);
                }
            }
        }
    }
    acc
}

fn cell_range(box_lo: f64, d: f64, n: usize, lo: f64, hi: f64) -> (usize, usize) {
    if hi <= box_lo || lo >= box_lo + d * n as f64 {
        return (0, 0);
    }
    let i0 = (((lo - box_lo) / d).floor().max(0.0) as usize).min(n - 1);
    let i1 = (((hi - box_lo) / d).ceil() as usize).clamp(i0 + 1, n);
    (i0, i1)
}

/// ∫∫ over [x0,x1]×[y0,y1] of max(|x|,|y|)^a, a > -2. The inner integral in
/// y is in closed form; the outer integral is adaptive with splits at the
/// breakpoints of the piecewise structure.
pub fn linf_pow_box_integral(a: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let inner = |x: f64| -> f64 {
        let ax = x.abs();
        let olo = y0.max(-ax);
        let ohi = y1.min(ax);
        let olen = (ohi - olo).max(0.0);
        let mut acc = if olen > 0.0 && ax > 0.0 { ax.powf(a) * olen } else { 0.0 };
        if y0 < -ax {
            acc += quad::integral_abs_pow(a, y0, y1.min(-ax));
        }
        if y1 > ax {
            acc += quad::integral_abs_pow(a, y0.max(ax), y1);
        }
        acc
    };
    let breaks = [0.0, y0.abs(), -y0.abs(), y1.abs(), -y1.abs()];
    let scale_guess = (x1 - x0).abs().max(1.0);
    quad::adaptive_with_breaks(&inner, x0, x1, &breaks, QUAD_TOL * scale_guess).value
}

// ---------------------------------------------------------------------------
// Gallery
// ---------------------------------------------------------------------------

/// Parameters for the gallery weights that need them.
#[derive(Debug, Clone, Copy)]
pub struct GalleryParams {
    pub p: f64,
    pub eps: f64,
}

impl Default for GalleryParams {
    fn default() -> Self {
        GalleryParams { p: 2.0, eps: 0.5 }
    }
}

/// Named example weights: constant, power_eps (w_ε = |x|^{n(p-1-ε)}),
/// ap_times_bump, vanishing_patch.
pub fn gallery(name: &str, dim: usize, params: GalleryParams) -> Result<Weight> {
    match name {
        "constant" => Weight::constant(dim, 1.0).map(|w| w.with_id("constant")),
        "power_eps" => {
            let a = dim as f64 * (params.p - 1.0 - params.eps);
            Weight::power(dim, a)
                .map(|w| w.with_id(format!("power_eps(p={},eps={})", params.p, params.eps)))
        }
        "ap_times_bump" => {
            let a = dim as f64 * (params.p - 1.0) / 2.0;
            let bump = bump_multiplier(dim)?;
            Weight::product(a, bump).map(|w| w.with_id(format!("ap_times_bump(a={a})")))
        }
        "vanishing_patch" => {
            let n = 64usize;
            let boxc =
                if dim == 1 { Cube::interval(-1.0, 1.0)? } else { Cube::square(0.0, 0.0, 1.0)? };
            let total = if dim == 1 { n } else { n * n };
            let d = boxc.side() / n as f64;
            let mut values = vec![1.0; total];
            for (ci, v) in values.iter_mut().enumerate() {
                let (ix, iy) = if dim == 1 { (ci, 0) } else { (ci % n, ci / n) };
                let cx = boxc.low(0) + (ix as f64 + 0.5) * d;
                let cy = if dim == 2 { boxc.low(1) + (iy as f64 + 0.5) * d } else { 0.0 };
                let in_patch = (0.0..0.5).contains(&cx) && (dim == 1 || (0.0..0.5).contains(&cy));
                if in_patch {
                    *v = 0.0;
                }
            }
            Ok(Weight::grid(GridWeight::new(boxc, n, values)?).with_id("vanishing_patch"))
        }
        other => Err(Error::UnknownGallery(other.to_string())),
    }
}

/// The four gallery weights under one parameter set.
pub fn gallery_all(dim: usize, params: GalleryParams) -> Result<Vec<Weight>> {
    ["constant", "power_eps", "ap_times_bump", "vanishing_patch"]
        .iter()
        .map(|n| gallery(n, dim, params))
        .collect()
}

fn bump_multiplier(dim: usize) -> Result<GridWeight> {
    let n = 64usize;
    let boxc = if dim == 1 { Cube::interval(-1.0, 1.0)? } else { Cube::square(0.0, 0.0, 1.0)? };
    let d = boxc.side() / n as f64;
    let total = if dim == 1 { n } else { n * n };
    let mut values = vec![0.0; total];
    for (ci, v) in values.iter_mut().enumerate() {
        let (ix, iy) = if dim == 1 { (ci, 0) } else { (ci % n, ci / n) };
        let cx = boxc.low(0) + (ix as f64 + 0.5) * d;
        let cy = if dim == 2 { boxc.low(1) + (iy as f64 + 0.5) * d } else { 0.0 };
        let mut g = 1.0 + 3.0 * (std::f64::consts::FRAC_PI_2 * cx).cos().powi(2);
        if dim == 2 {
            g *= 1.0 + (std::f64::consts::FRAC_PI_2 * cy).cos().powi(2);
        }
        *v = g;
    }
    GridWeight::new(boxc, n, values)
}

// ---------------------------------------------------------------------------
// Weight spec files
// ---------------------------------------------------------------------------

/// Structured weight description, loadable from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WeightSpec {
    Constant {
        #[serde(default = "default_one")]
        value: f64,
    },
    Power {
        exponent: f64,
    },
    Grid {
        file: String,
        #[serde(rename = "box")]
        box_range: [f64; 2],
        resolution: usize,
    },
    Product {
        exponent: f64,
        bump_file: String,
        #[serde(rename = "box")]
        box_range: [f64; 2],
        resolution: usize,
    },
    Gallery {
        name: String,
        #[serde(default = "default_two")]
        p: f64,
        #[serde(default = "default_half")]
        eps: f64,
    },
}

fn default_one() -> f64 {
    1.0
}
fn default_two() -> f64 {
    2.0
}
fn default_half() -> f64 {
    0.5
}

impl WeightSpec {
    pub fn from_json(json: &str) -> Result<WeightSpec> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn from_file(path: &Path) -> Result<WeightSpec> {
        let text = std::fs::read_to_string(path)?;
        WeightSpec::from_json(&text)
    }

    /// Build the weight. Grid files: plain text, one non-negative decimal
    /// per line, row-major for n=2. Relative paths resolve against
    /// `base_dir`.
    pub fn build(&self, dim: usize, base_dir: &Path) -> Result<Weight> {
        match self {
            WeightSpec::Constant { value } => Weight::constant(dim, *value),
            WeightSpec::Power { exponent } => Weight::power(dim, *exponent),
            WeightSpec::Grid { file, box_range, resolution } => {
                let values = read_grid_file(&base_dir.join(file))?;
                let boxc = box_from_range(dim, *box_range)?;
                Ok(Weight::grid(GridWeight::new(boxc, *resolution, values)?))
            }
            WeightSpec::Product { exponent, bump_file, box_range, resolution } => {
                let values = read_grid_file(&base_dir.join(bump_file))?;
                let boxc = box_from_range(dim, *box_range)?;
                Weight::product(*exponent, GridWeight::new(boxc, *resolution, values)?)
            }
            WeightSpec::Gallery { name, p, eps } => {
                gallery(name, dim, GalleryParams { p: *p, eps: *eps })
            }
        }
    }
}

fn box_from_range(dim: usize, range: [f64; 2]) -> Result<Cube> {
    let c = (range[0] + range[1]) / 2.0;
    if dim == 1 {
        Cube::interval(range[0], range[1])
    } else {
        Cube::square(c, c, (range[1] - range[0]) / 2.0)
    }
}

/// Grid file format: one non-negative decimal per line, row-major for n=2.
pub fn read_grid_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t.parse().map_err(|e| {
            Error::InvalidWeight(format!("{}:{}: bad number: {e}", path.display(), lineno + 1))
        })?;
        out.push(v);
    }
    Ok(out)
}

pub fn write_grid_file(path: &Path, values: &[f64]) -> Result<()> {
    use std::io::Write;
    let mut f = std::fs::File::create(path)?;
    for v in values {
        writeln!(f, "{v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(lo: f64, hi: f64) -> Cube {
        Cube::interval(lo, hi).unwrap()
    }

    #[test]
    fn constant_weight_averages_to_itself() {
        let w = Weight::constant(1, 1.0).unwrap();
        assert_eq!(w.avg(&q(0.0, 1.0)), 1.0);
        assert_eq!(w.avg(&q(-3.0, 5.0)), 1.0);
    }

    #[test]
    fn power_weight_closed_form_averages() {
        let w = Weight::power(1, 1.0).unwrap();
        // avg over [0,1] of x is 1/2
        assert!((w.avg(&q(0.0, 1.0)) - 0.5).abs() < 1e-15);
        // avg over [-1,1] of |x| is 1/2
        assert!((w.avg(&q(-1.0, 1.0)) - 0.5).abs() < 1e-15);
        // ∫_1^2 x dx = 3/2
        assert!((w.integral(&q(1.0, 2.0)) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn grid_weight_prefix_integrals_are_exact() {
        let boxc = q(0.0, 1.0);
        let gw = GridWeight::new(boxc, 4, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let w = Weight::grid(gw);
        // whole box: avg 2.5
        assert!((w.integral(&q(0.0, 1.0)) - 2.5).abs() < 1e-15);
        // partial cells: ∫_{1/8}^{3/8} = 1/8 + 2/8
        assert!((w.integral(&q(0.125, 0.375)) - 0.375).abs() < 1e-15);
        // escaping the support contributes zero
        assert!((w.integral(&q(-1.0, 0.25)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn grid_weight_2d_partial_boxes() {
        let boxc = Cube::square(0.5, 0.5, 0.5).unwrap(); // [0,1)^2
        let vals = vec![1.0, 2.0, 3.0, 4.0]; // rows: [1,2] then [3,4]
        let gw = GridWeight::new(boxc, 2, vals).unwrap();
        let w = Weight::grid(gw);
        let total = w.integral(&Cube::square(0.5, 0.5, 0.5).unwrap());
        assert!((total - 10.0 * 0.25).abs() < 1e-15);
        // quarter box [0,0.5)^2 picks value 1
        assert!((w.integral(&Cube::square(0.25, 0.25, 0.25).unwrap()) - 0.25).abs() < 1e-15);
        // centered box [0.25,0.75)^2 overlaps all four cells equally
        let mid = w.integral(&Cube::square(0.5, 0.5, 0.25).unwrap());
        assert!((mid - 0.0625 * 10.0).abs() < 1e-15);
    }

    #[test]
    fn monotone_refinement_of_grid_averages() {
        // avg over a cube equals the volume-weighted mean of child averages
        let boxc = q(0.0, 1.0);
        let gw = GridWeight::new(boxc, 8, (1..=8).map(|i| i as f64).collect()).unwrap();
        let w = Weight::grid(gw);
        let parent = q(0.0, 0.5);
        let l = q(0.0, 0.25);
        let r = q(0.25, 0.5);
        let combined = 0.5 * (w.avg(&l) + w.avg(&r));
        assert!((w.avg(&parent) - combined).abs() < 1e-15);
    }

    #[test]
    fn linf_power_integral_against_polar_closed_form() {
        // ∫ over [-H,H]^2 of max(|x|,|y|)^a = 8 H^{a+2}/(a+2)
        for &(a, h) in &[(1.0, 1.0), (2.0, 0.5), (-0.5, 2.0), (0.0, 1.5)] {
            let got = linf_pow_box_integral(a, -h, h, -h, h);
            let want = 8.0 * h.powf(a + 2.0) / (a + 2.0);
            assert!(
                (got - want).abs() < 1e-7 * want.abs().max(1.0),
                "a={a} h={h}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn product_agrees_with_direct_quadrature() {
        let bump = bump_multiplier(1).unwrap();
        let w = Weight::product(0.5, bump.clone()).unwrap();
        let qq = q(-0.5, 0.75);
        let direct = quad::adaptive_with_breaks(
            &|x: f64| {
                let n = bump.cells_per_axis();
                let d = bump.boxc().side() / n as f64;
                let i = (((x - bump.boxc().low(0)) / d).floor().max(0.0) as usize).min(n - 1);
                bump.values()[i] * x.abs().powf(0.5)
            },
            -0.5,
            0.75,
            &[0.0],
            1e-10,
        );
        assert!((w.integral(&qq) - direct.value).abs() < 1e-5);
    }

    #[test]
    fn gallery_names_and_errors() {
        let p = GalleryParams { p: 2.0, eps: 0.5 };
        // power_eps(p=2, eps=0.5) in 1-D has exponent 0.5
        let w = gallery("power_eps", 1, p).unwrap();
        assert_eq!(w.power_exponent(), Some(0.5));
        // eps = 1 at p = 2 gives |x|^0, which must match the constant backend
        let w0 = gallery("power_eps", 1, GalleryParams { p: 2.0, eps: 1.0 }).unwrap();
        let c = gallery("constant", 1, p).unwrap();
        for cube in [q(0.0, 1.0), q(-2.0, 3.0), q(5.0, 9.0)] {
            assert!((w0.avg(&cube) - c.avg(&cube)).abs() < 1e-12);
        }
        // vanishing_patch has a genuine zero block but positive mass
        let vp = gallery("vanishing_patch", 1, p).unwrap();
        assert_eq!(vp.integral(&q(0.0, 0.5)), 0.0);
        assert!(vp.integral(&q(-1.0, 1.0)) > 0.0);
        assert!(matches!(gallery("nope", 1, p), Err(Error::UnknownGallery(_))));
    }

    #[test]
    fn scaling_is_linear_in_the_weight() {
        let w = Weight::power(1, 0.5).unwrap();
        let w4 = w.scaled(4.0);
        let cube = q(-1.0, 3.0);
        assert_eq!(w4.avg(&cube), 4.0 * w.avg(&cube));
    }

    #[test]
    fn weight_spec_round_trip() {
        let spec = WeightSpec::from_json(r#"{"type":"power","exponent":0.5}"#).unwrap();
        let w = spec.build(1, Path::new(".")).unwrap();
        assert_eq!(w.power_exponent(), Some(0.5));
        let spec = WeightSpec::from_json(r#"{"type":"constant"}"#).unwrap();
        let w = spec.build(1, Path::new(".")).unwrap();
        assert_eq!(w.avg(&q(0.0, 2.0)), 1.0);
    }

    #[test]
    fn divergent_tail_detection() {
        // n=1, p=2: threshold is a >= 1
        let w = Weight::power(1, 1.0).unwrap();
        assert!(w.tail_divergent(2.0));
        assert!(!w.tail_divergent(3.0));
        let w = Weight::power(1, 0.9).unwrap();
        assert!(!w.tail_divergent(2.0));
    }

    #[test]
    fn integral_over_cell_union_is_additive() {
        let boxc = q(0.0, 1.0);
        let gw = GridWeight::new(boxc, 8, (1..=8).map(|i| i as f64).collect()).unwrap();
        let w = Weight::grid(gw);
        let empty = GridSet::from_fn(boxc, 8, |_| false).unwrap();
        assert_eq!(w.integral_over(&empty), 0.0);
        let all = GridSet::from_fn(boxc, 8, |_| true).unwrap();
        assert!((w.integral_over(&all) - w.integral(&q(0.0, 1.0))).abs() < 1e-14);
    }
}
