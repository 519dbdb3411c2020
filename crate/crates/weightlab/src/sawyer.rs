//! Singular-integral machinery: the maximally truncated Hilbert transform,
//! the Marcinkiewicz-type operator built from Whitney cubes of dyadic level
//! sets, exponential level-set profiles, good-λ measurements, and the
//! Coifman–Fefferman ratio experiment.
//!
//! The truncated singular integral is fixed to the Hilbert kernel
//! K(x,y) = 1/(x-y) in dimension 1; truncation radii are grid multiples,
//! the principal-value self-cell is excluded, and the sup over radii is
//! exact for the discretized integral.

use crate::error::{Error, Result};
use crate::geometry::{whitney_decompose, Cube, CubeFamily, GridSet};
use crate::maximal::{hl_maximal, m_chi_cube, GridFunction};
use crate::tails::{cp_constant, EstimatorConfig};
use crate::util::{line_fit, LineFit};
use crate::weights::Weight;
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Test signals
// ---------------------------------------------------------------------------

/// Structured test-signal description, loadable from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SignalSpec {
    /// Smooth compactly supported bump height·(1 - ((x-center)/width)²)₊²
    Bump { center: f64, width: f64, height: f64 },
    /// height·χ_{[lo, hi)}
    Step { lo: f64, hi: f64, height: f64 },
    /// Antisymmetric multiscale staircase: the superposition of `scales`
    /// odd steps of widths width·2^{-m} about the center. Signed, with a
    /// logarithmic spike of T* at the center; M acts on |f|.
    Chirp { center: f64, width: f64, scales: u32 },
}

impl SignalSpec {
    pub fn from_json(json: &str) -> Result<SignalSpec> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn id(&self) -> String {
        match self {
            SignalSpec::Bump { center, width, height } => {
                format!("bump(c={center},w={width},h={height})")
            }
            SignalSpec::Step { lo, hi, height } => format!("step([{lo},{hi}),h={height})"),
            SignalSpec::Chirp { center, width, scales } => {
                format!("chirp(c={center},w={width},m={scales})")
            }
        }
    }

    /// Sample on a 1-D grid (cell centers).
    pub fn sample(&self, boxc: &Cube, cells_per_axis: usize) -> Result<GridFunction> {
        if boxc.dim() != 1 {
            return Err(Error::BadDimension(boxc.dim()));
        }
        let eval = |x: f64| -> f64 {
            match self {
                SignalSpec::Bump { center, width, height } => {
                    let t = (x - center) / width;
                    let u = 1.0 - t * t;
                    if u > 0.0 {
                        height * u * u
                    } else {
                        0.0
                    }
                }
                SignalSpec::Step { lo, hi, height } => {
                    if x >= *lo && x < *hi {
                        *height
                    } else {
                        0.0
                    }
                }
                SignalSpec::Chirp { center, width, scales } => {
                    let d = x - center;
                    if d == 0.0 || d.abs() >= *width {
                        0.0
                    } else {
                        let covering = (0..*scales)
                            .filter(|&m| d.abs() < width * 2f64.powi(-(m as i32)))
                            .count() as f64;
                        -d.signum() * covering
                    }
                }
            }
        };
        GridFunction::from_fn(*boxc, cells_per_axis, move |p| eval(p[0]))
    }
}

// ---------------------------------------------------------------------------
// Maximally truncated Hilbert transform
// ---------------------------------------------------------------------------

/// T*f(x) = sup_ε |∫_{|x-y|>ε} f(y)/(x-y) dy| on the grid, radii at grid
/// multiples, self-cell excluded. O(N²) by accumulating rings inward.
pub fn truncated_hilbert_maximal(f: &GridFunction) -> Result<GridFunction> {
    if f.dim() != 1 {
        return Err(Error::BadDimension(f.dim()));
    }
    let n = f.cells_per_axis();
    let d = f.cell_side();
    let vals = f.values();
    let mut out = vec![0.0f64; n];
    for i in 0..n {
        let xi = f.cell_center(i, 0)[0];
        let mut acc = 0.0f64;
        let mut best = 0.0f64;
        for m in (1..n).rev() {
            if i >= m {
                let j = i - m;
                acc += vals[j] * d / (xi - f.cell_center(j, 0)[0]);
            }
            if i + m < n {
                let j = i + m;
                acc += vals[j] * d / (xi - f.cell_center(j, 0)[0]);
            }
            let a = acc.abs();
            if a > best {
                best = a;
            }
        }
        out[i] = best;
    }
    GridFunction::new(*f.boxc(), n, out)
}

/// |f| as a grid function; the Hardy-Littlewood maximal function acts on
/// the absolute value of a signed signal.
pub fn abs_field(f: &GridFunction) -> GridFunction {
    GridFunction::new(
        *f.boxc(),
        f.cells_per_axis(),
        f.values().iter().map(|v| v.abs()).collect(),
    )
    .expect("same geometry")
}

// ---------------------------------------------------------------------------
// Marcinkiewicz-type operator M_{p,q}
// ---------------------------------------------------------------------------

/// M_{p,q}h(x)^p = Σ_k Σ_{Q ∈ W(k)} 2^{kp} (Mχ_Q(x))^q over the Whitney
/// decompositions of the dyadic level sets {h > 2^k}; returns the p-th
/// root. The level range must cover [floor log₂(min positive h),
/// ceil log₂(max h)] and is capped at 64 dyadic levels.
pub fn marcinkiewicz_mpq(
    h: &GridFunction,
    p: f64,
    q: f64,
    k_range: (i32, i32),
) -> Result<GridFunction> {
    let n = h.cells_per_axis();
    if h.max_value() == 0.0 {
        return GridFunction::zeros(*h.boxc(), n);
    }
    let (k_lo, k_hi) = k_range;
    if k_hi < k_lo {
        return Err(Error::InvalidConfig(format!("empty level range {k_lo}..={k_hi}")));
    }
    if (k_hi - k_lo) as u32 >= 64 {
        return Err(Error::InvalidConfig(format!(
            "level range {k_lo}..={k_hi} exceeds the 64-level cap"
        )));
    }
    let need_lo = h.min_positive().expect("nonzero").log2().floor() as i32;
    let need_hi = h.max_value().log2().ceil() as i32;
    if k_lo > need_lo || k_hi < need_hi {
        return Err(Error::LevelRangeTooSmall {
            given_lo: k_lo,
            given_hi: k_hi,
            need_lo,
            need_hi,
        });
    }
    let total = h.values().len();
    let mut acc = vec![0.0f64; total];
    let centers: Vec<[f64; 2]> = (0..total)
        .map(|ci| {
            let (ix, iy) = if h.dim() == 1 { (ci, 0) } else { (ci % n, ci / n) };
            h.cell_center(ix, iy)
        })
        .collect();
    for k in k_lo..=k_hi {
        let omega = h.level_set(2f64.powi(k));
        if omega.is_empty() {
            continue;
        }
        let cubes = whitney_decompose(&omega, 1.0, None)?;
        let weight_k = 2f64.powf(k as f64 * p);
        for wq in &cubes {
            let cube = wq.cube.realize(h.boxc());
            for (ci, x) in centers.iter().enumerate() {
                acc[ci] += weight_k * m_chi_cube(&cube, *x).powf(q);
            }
        }
    }
    let values = acc.into_iter().map(|v| v.powf(1.0 / p)).collect();
    GridFunction::new(*h.boxc(), n, values)
}

// ---------------------------------------------------------------------------
// Exponential level-set profile (Fefferman–Stein style)
// ---------------------------------------------------------------------------

/// λ ↦ |E_λ| for E_λ = {x ∈ RQ : Σ_j (Mχ_{Q_j}(x))^q > λ}, with the
/// log-linear fit of ln|E_λ| against λ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSetProfile {
    pub lambdas: Vec<f64>,
    pub measures: Vec<f64>,
    pub fit: Option<LineFit>,
}

pub fn fefferman_stein_profile(
    q: &Cube,
    subcubes: &[Cube],
    q_exp: f64,
    r_factor: f64,
    resolution: usize,
) -> Result<LevelSetProfile> {
    // subcubes must be pairwise disjoint inside Q
    for (i, a) in subcubes.iter().enumerate() {
        if !q.contains_cube(a) {
            return Err(Error::InvalidConfig(format!("subcube {i} escapes Q")));
        }
        for b in subcubes.iter().skip(i + 1) {
            let overlap = (0..q.dim()).all(|ax| {
                a.low(ax) < b.high(ax) - 1e-15 && b.low(ax) < a.high(ax) - 1e-15
            });
            if overlap {
                return Err(Error::InvalidConfig("subcubes overlap".into()));
            }
        }
    }
    let ambient = q.dilate(r_factor);
    let field = GridFunction::from_fn(ambient, resolution, |x| {
        subcubes.iter().map(|sq| m_chi_cube(sq, x).powf(q_exp)).sum()
    })?;
    let top = field.max_value();
    let lambdas: Vec<f64> = (1..=16).map(|i| top * i as f64 / 16.0).collect();
    let cv = field.cell_volume();
    let measures: Vec<f64> = lambdas
        .iter()
        .map(|&lam| field.values().iter().filter(|&&v| v > lam).count() as f64 * cv)
        .collect();
    let pts: Vec<(f64, f64)> = lambdas
        .iter()
        .zip(&measures)
        .filter(|(_, &m)| m > 0.0)
        .map(|(&l, &m)| (l, m.ln()))
        .collect();
    Ok(LevelSetProfile { lambdas, measures, fit: line_fit(&pts) })
}

// ---------------------------------------------------------------------------
// Good-λ measurements
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoodLambdaConfig {
    /// γ grid, positive and sorted decreasing (1/2, 1/4, ...)
    pub gammas: Vec<f64>,
    /// dyadic levels λ = 2^k; None = automatic from the observed range
    pub k_range: Option<(i32, i32)>,
    pub whitney_r: f64,
}

impl Default for GoodLambdaConfig {
    fn default() -> Self {
        GoodLambdaConfig {
            gammas: vec![0.5, 0.25, 0.125, 0.0625, 0.03125],
            k_range: None,
            whitney_r: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GoodLambdaRow {
    pub k: i32,
    pub gamma: f64,
    /// max over Whitney cubes of |{T*f > 2λ, Mf <= γλ} ∩ Q_j|/|Q_j|
    pub fraction: f64,
    /// same with w-measure in place of Lebesgue measure
    pub weighted_fraction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoodLambdaTable {
    pub rows: Vec<GoodLambdaRow>,
    pub signal_id: String,
    pub weight_id: String,
}

/// For each dyadic level λ = 2^k, Whitney-decompose {T*f > λ} and measure
/// per cube the worst fraction where T*f > 2λ while Mf <= γλ.
pub fn good_lambda_measure(
    f: &GridFunction,
    w: &Weight,
    config: &GoodLambdaConfig,
    signal_id: &str,
) -> Result<GoodLambdaTable> {
    if f.dim() != 1 {
        return Err(Error::BadDimension(f.dim()));
    }
    let tstar = truncated_hilbert_maximal(f)?;
    let mf = hl_maximal(&abs_field(f));
    let n = f.cells_per_axis();
    let top = tstar.max_value();
    if top <= 0.0 {
        return Ok(GoodLambdaTable {
            rows: Vec::new(),
            signal_id: signal_id.to_string(),
            weight_id: w.id().to_string(),
        });
    }
    let (k_lo, k_hi) = config.k_range.unwrap_or_else(|| {
        let hi = (top / 2.0).log2().floor() as i32;
        (hi - 9, hi)
    });
    // per-cell weight masses for the weighted variant
    let cell_mass: Vec<f64> = (0..n)
        .map(|i| {
            let c = f.cell_center(i, 0)[0];
            let d = f.cell_side();
            w.integral(&Cube::interval(c - d / 2.0, c + d / 2.0).expect("cell"))
        })
        .collect();
    let d = f.cell_side();
    let mut rows = Vec::new();
    for k in k_lo..=k_hi {
        let lambda = 2f64.powi(k);
        let omega = tstar.level_set(lambda);
        if omega.is_empty() {
            continue;
        }
        let cubes = whitney_decompose(&omega, config.whitney_r, None)?;
        for &gamma in &config.gammas {
            let mut best = 0.0f64;
            let mut best_weighted = 0.0f64;
            for wq in &cubes {
                let cube = wq.cube.realize(f.boxc());
                let (clo, chi) = (cube.low(0), cube.high(0));
                let i0 = (((clo - f.boxc().low(0)) / d).floor().max(0.0) as usize).min(n - 1);
                let i1 = ((((chi - f.boxc().low(0)) / d).ceil()) as usize).clamp(i0 + 1, n);
                let mut num = 0.0;
                let mut num_w = 0.0;
                let mut den = 0.0;
                let mut den_w = 0.0;
                for i in i0..i1 {
                    let cell_lo = f.boxc().low(0) + i as f64 * d;
                    let cell_hi = cell_lo + d;
                    let overlap = (chi.min(cell_hi) - clo.max(cell_lo)).max(0.0);
                    if overlap <= 0.0 {
                        continue;
                    }
                    let frac_of_cell = overlap / d;
                    den += overlap;
                    den_w += cell_mass[i] * frac_of_cell;
                    let bad = tstar.values()[i] > 2.0 * lambda && mf.values()[i] <= gamma * lambda;
                    if bad {
                        num += overlap;
                        num_w += cell_mass[i] * frac_of_cell;
                    }
                }
                if den > 0.0 {
                    best = best.max(num / den);
                }
                if den_w > 0.0 {
                    best_weighted = best_weighted.max(num_w / den_w);
                }
            }
            rows.push(GoodLambdaRow { k, gamma, fraction: best, weighted_fraction: best_weighted });
        }
    }
    Ok(GoodLambdaTable {
        rows,
        signal_id: signal_id.to_string(),
        weight_id: w.id().to_string(),
    })
}

/// Fit ln(max over k of fraction) against 1/γ; rows with zero fraction are
/// dropped (they witness decay faster than the grid can resolve).
pub fn buckley_decay_fit(table: &GoodLambdaTable) -> Option<LineFit> {
    let mut per_gamma: std::collections::BTreeMap<u64, (f64, f64)> = Default::default();
    for row in &table.rows {
        let key = row.gamma.to_bits();
        let e = per_gamma.entry(key).or_insert((row.gamma, 0.0));
        e.1 = e.1.max(row.fraction);
    }
    let pts: Vec<(f64, f64)> = per_gamma
        .values()
        .filter(|(_, frac)| *frac > 0.0)
        .map(|(gamma, frac)| (1.0 / gamma, frac.ln()))
        .collect();
    line_fit(&pts)
}

// ---------------------------------------------------------------------------
// Coifman–Fefferman ratio experiment
// ---------------------------------------------------------------------------

/// Φ(t) = t·log(e + t), the quantification factor of the weighted norm
/// inequality between T* and M.
pub fn phi(t: f64) -> f64 {
    t * (std::f64::consts::E + t).ln()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CfiRow {
    pub weight_id: String,
    pub signal_id: String,
    pub p: f64,
    pub q: f64,
    /// ‖T*f‖_{L^p(w)} / ‖Mf‖_{L^p(w)} on the grid
    pub ratio: f64,
    /// Φ(max([w]_{C_q}, 1)) at the estimated constant
    pub phi_bound: f64,
    /// the explicit exponent factor q + q·p²/(q-p)
    pub exponent_factor: f64,
    pub cq_estimate: f64,
    pub degenerate: bool,
}

/// Weighted-norm ratio of T*f against Mf, with the Φ bound at the measured
/// C_q constant. Requires q > p > 1.
pub fn cfi_ratio(
    f: &GridFunction,
    signal_id: &str,
    w: &Weight,
    p: f64,
    q: f64,
    family: &CubeFamily,
    cfg: &EstimatorConfig,
) -> Result<CfiRow> {
    if !(q > p && p > 1.0) {
        return Err(Error::InvalidConfig(format!("need q > p > 1, got p={p}, q={q}")));
    }
    let tstar = truncated_hilbert_maximal(f)?;
    let mf = hl_maximal(&abs_field(f));
    let n = f.cells_per_axis();
    let d = f.cell_side();
    let mut tnorm_p = 0.0;
    let mut mnorm_p = 0.0;
    for i in 0..n {
        let c = f.cell_center(i, 0)[0];
        let mass = w.integral(&Cube::interval(c - d / 2.0, c + d / 2.0)?);
        tnorm_p += tstar.values()[i].powf(p) * mass;
        mnorm_p += mf.values()[i].powf(p) * mass;
    }
    let degenerate = mnorm_p <= 0.0;
    let ratio = if degenerate { 0.0 } else { (tnorm_p / mnorm_p).powf(1.0 / p) };
    let est = cp_constant(w, q, family, cfg)?;
    Ok(CfiRow {
        weight_id: w.id().to_string(),
        signal_id: signal_id.to_string(),
        p,
        q,
        ratio,
        phi_bound: phi(est.value.max(1.0)),
        exponent_factor: q + q * p * p / (q - p),
        cq_estimate: est.value,
        degenerate,
    })
}

// ---------------------------------------------------------------------------

/// Convenience: sample the level set of a grid function as a GridSet (used
/// by callers driving whitney_decompose directly).
pub fn level_set_of(f: &GridFunction, threshold: f64) -> GridSet {
    f.level_set(threshold)
}
