//! Cube arithmetic, dyadic cube enumeration and the two decomposition
//! algorithms (Whitney and Calderón–Zygmund).
//!
//! Conventions. All cubes are axis-parallel with half-open faces, in
//! dimension 1 or 2. A `DyadicCube` is combinatorial: level `k` and integer
//! index `m` describe the cell ∏ᵢ [2⁻ᵏ·mᵢ, 2⁻ᵏ(mᵢ+1)) of the unit cube and
//! are realized against a concrete root cube on demand. Open sets are unions
//! of grid cells at a power-of-two resolution; their complement is sampled
//! at cell centers (plus phantom exterior cells), which keeps every Whitney
//! postcondition exactly checkable in dyadic floating point.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Hard cap on dyadic descent inside `whitney_decompose`.
const MAX_WHITNEY_LEVEL: u32 = 48;

/// Default maximum for `enumerate_dyadic`.
pub const DEFAULT_MAX_ENUM_DEPTH: u32 = 14;

// ---------------------------------------------------------------------------
// Cube
// ---------------------------------------------------------------------------

/// An axis-parallel cube: center plus positive half-side, dimension 1 or 2.
/// Realized as the half-open box ∏ᵢ [cᵢ - h, cᵢ + h).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    dim: usize,
    center: [f64; 2],
    half_side: f64,
}

impl Cube {
    pub fn new(dim: usize, center: [f64; 2], half_side: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::BadDimension(dim));
        }
        if !(half_side > 0.0) || !half_side.is_finite() {
            return Err(Error::BadHalfSide(half_side));
        }
        let mut center = center;
        if dim == 1 {
            center[1] = 0.0;
        }
        Ok(Cube { dim, center, half_side })
    }

    /// 1-D cube (interval) from endpoints, lo < hi.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Cube::new(1, [(lo + hi) / 2.0, 0.0], (hi - lo) / 2.0)
    }

    /// 2-D cube from center and half-side.
    pub fn square(cx: f64, cy: f64, half_side: f64) -> Result<Self> {
        Cube::new(2, [cx, cy], half_side)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    pub fn half_side(&self) -> f64 {
        self.half_side
    }

    /// Full side length 2h.
    pub fn side(&self) -> f64 {
        2.0 * self.half_side
    }

    pub fn volume(&self) -> f64 {
        let s = self.side();
        if self.dim == 1 {
            s
        } else {
            s * s
        }
    }

    pub fn low(&self, axis: usize) -> f64 {
        self.center[axis] - self.half_side
    }

    pub fn high(&self, axis: usize) -> f64 {
        self.center[axis] + self.half_side
    }

    /// Concentric dilation by t > 0: same center, half-side h·t.
    pub fn dilate(&self, t: f64) -> Cube {
        debug_assert!(t > 0.0);
        Cube { dim: self.dim, center: self.center, half_side: self.half_side * t }
    }

    pub fn translate(&self, delta: [f64; 2]) -> Cube {
        let mut c = self.center;
        c[0] += delta[0];
        if self.dim == 2 {
            c[1] += delta[1];
        }
        Cube { dim: self.dim, center: c, half_side: self.half_side }
    }

    /// Half-open membership test.
    pub fn contains_point(&self, p: [f64; 2]) -> bool {
        for axis in 0..self.dim {
            if p[axis] < self.low(axis) || p[axis] >= self.high(axis) {
                return false;
            }
        }
        true
    }

    /// Closed containment of another cube (allows touching faces).
    pub fn contains_cube(&self, other: &Cube) -> bool {
        for axis in 0..self.dim {
            if other.low(axis) < self.low(axis) - 1e-12 * self.half_side
                || other.high(axis) > self.high(axis) + 1e-12 * self.half_side
            {
                return false;
            }
        }
        true
    }

    /// L∞ distance from a point to this cube (0 inside).
    pub fn linf_dist_point(&self, p: [f64; 2]) -> f64 {
        let mut d = 0.0f64;
        for axis in 0..self.dim {
            let lo = self.low(axis) - p[axis];
            let hi = p[axis] - self.high(axis);
            d = d.max(lo).max(hi);
        }
        d.max(0.0)
    }
}

// ---------------------------------------------------------------------------
// DyadicCube
// ---------------------------------------------------------------------------

/// A dyadic subcube of the unit cube: level k and index m per axis,
/// representing ∏ᵢ [2⁻ᵏ·mᵢ, 2⁻ᵏ(mᵢ+1)).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: u32,
    pub index: [u64; 2],
    pub dim: usize,
}

impl DyadicCube {
    pub fn root(dim: usize) -> Self {
        DyadicCube { level: 0, index: [0, 0], dim }
    }

    pub fn children(&self) -> Vec<DyadicCube> {
        let l = self.level + 1;
        let base = [self.index[0] * 2, self.index[1] * 2];
        if self.dim == 1 {
            vec![
                DyadicCube { level: l, index: [base[0], 0], dim: 1 },
                DyadicCube { level: l, index: [base[0] + 1, 0], dim: 1 },
            ]
        } else {
            let mut out = Vec::with_capacity(4);
            for dy in 0..2u64 {
                for dx in 0..2u64 {
                    out.push(DyadicCube { level: l, index: [base[0] + dx, base[1] + dy], dim: 2 });
                }
            }
            out
        }
    }

    pub fn parent(&self) -> Option<DyadicCube> {
        if self.level == 0 {
            None
        } else {
            Some(DyadicCube {
                level: self.level - 1,
                index: [self.index[0] / 2, self.index[1] / 2],
                dim: self.dim,
            })
        }
    }

    /// True when `self` is contained in `anc` (or equal to it).
    pub fn is_descendant_of(&self, anc: &DyadicCube) -> bool {
        if anc.level > self.level {
            return false;
        }
        let shift = self.level - anc.level;
        (0..self.dim).all(|a| self.index[a] >> shift == anc.index[a])
    }

    /// Dyadic cubes are either disjoint or nested.
    pub fn disjoint_from(&self, other: &DyadicCube) -> bool {
        !self.is_descendant_of(other) && !other.is_descendant_of(self)
    }

    /// Map the unit-cube cell onto a concrete root cube.
    pub fn realize(&self, root: &Cube) -> Cube {
        let side = root.side() / (1u64 << self.level.min(52)) as f64;
        let side = if self.level > 52 { root.side() * 2f64.powi(-(self.level as i32)) } else { side };
        let mut center = [0.0; 2];
        for axis in 0..self.dim {
            center[axis] = root.low(axis) + (self.index[axis] as f64 + 0.5) * side;
        }
        Cube { dim: self.dim, center, half_side: side / 2.0 }
    }

    fn low_unit(&self, axis: usize) -> f64 {
        self.index[axis] as f64 * 2f64.powi(-(self.level as i32))
    }

    fn high_unit(&self, axis: usize) -> f64 {
        (self.index[axis] as f64 + 1.0) * 2f64.powi(-(self.level as i32))
    }
}

// ---------------------------------------------------------------------------
// CubeFamily
// ---------------------------------------------------------------------------

/// How a finite cube family was generated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyPolicy {
    /// All dyadic subcubes of the ambient box up to a depth.
    DyadicToDepth(u32),
    /// Dyadic subcubes plus all half-side translates at every level.
    DyadicShiftedToDepth(u32),
}

/// A finite family of cubes standing in for "sup over all cubes".
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubeFamily {
    pub ambient: Cube,
    pub policy: FamilyPolicy,
    pub cubes: Vec<Cube>,
    depth_ranges: Vec<(usize, usize)>,
}

impl CubeFamily {
    fn with_ranges(ambient: Cube, policy: FamilyPolicy, per_depth: Vec<Vec<Cube>>) -> CubeFamily {
        let mut cubes = Vec::new();
        let mut ranges = Vec::new();
        for level in per_depth {
            let lo = cubes.len();
            cubes.extend(level);
            ranges.push((lo, cubes.len()));
        }
        CubeFamily { ambient, policy, cubes, depth_ranges: ranges }
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Cubes generated at exactly this depth, in generation order.
    pub fn at_depth(&self, depth: u32) -> &[Cube] {
        let (lo, hi) = self.depth_ranges[depth as usize];
        &self.cubes[lo..hi]
    }

    pub fn max_depth(&self) -> u32 {
        self.depth_ranges.len() as u32 - 1
    }
}

// ---------------------------------------------------------------------------
// enumerate_dyadic
// ---------------------------------------------------------------------------

/// All dyadic subcubes of `boxc` of levels 0..=depth, ordered by level then
/// index. Count is Σ_{k≤depth} 2^{nk}.
pub fn enumerate_dyadic(boxc: &Cube, depth: u32) -> Result<CubeFamily> {
    enumerate_dyadic_with_max(boxc, depth, DEFAULT_MAX_ENUM_DEPTH)
}

pub fn enumerate_dyadic_with_max(boxc: &Cube, depth: u32, max: u32) -> Result<CubeFamily> {
    if depth > max {
        return Err(Error::DepthOverMax { depth, max });
    }
    let mut per_depth = Vec::new();
    for k in 0..=depth {
        let count = 1u64 << k;
        let mut level = Vec::new();
        if boxc.dim() == 1 {
            for ix in 0..count {
                level.push(DyadicCube { level: k, index: [ix, 0], dim: 1 }.realize(boxc));
            }
        } else {
            for iy in 0..count {
                for ix in 0..count {
                    level.push(DyadicCube { level: k, index: [ix, iy], dim: 2 }.realize(boxc));
                }
            }
        }
        per_depth.push(level);
    }
    Ok(CubeFamily::with_ranges(*boxc, FamilyPolicy::DyadicToDepth(depth), per_depth))
}

/// Dyadic subcubes plus every half-side translate at each level; translates
/// stay inside the ambient box. Better saturation of "sup over all cubes"
/// around interior points (in particular the origin of a centered box).
pub fn enumerate_dyadic_shifted(boxc: &Cube, depth: u32) -> Result<CubeFamily> {
    if depth > DEFAULT_MAX_ENUM_DEPTH {
        return Err(Error::DepthOverMax { depth, max: DEFAULT_MAX_ENUM_DEPTH });
    }
    let mut per_depth = Vec::new();
    for k in 0..=depth {
        let side = boxc.side() * 2f64.powi(-(k as i32));
        let positions = 2 * (1u64 << k) - 1; // half-steps that keep the cube inside
        let mut level = Vec::new();
        if boxc.dim() == 1 {
            for m in 0..positions {
                let lo = boxc.low(0) + m as f64 * side / 2.0;
                level.push(Cube {
                    dim: 1,
                    center: [lo + side / 2.0, 0.0],
                    half_side: side / 2.0,
                });
            }
        } else {
            for my in 0..positions {
                for mx in 0..positions {
                    let lox = boxc.low(0) + mx as f64 * side / 2.0;
                    let loy = boxc.low(1) + my as f64 * side / 2.0;
                    level.push(Cube {
                        dim: 2,
                        center: [lox + side / 2.0, loy + side / 2.0],
                        half_side: side / 2.0,
                    });
                }
            }
        }
        per_depth.push(level);
    }
    Ok(CubeFamily::with_ranges(*boxc, FamilyPolicy::DyadicShiftedToDepth(depth), per_depth))
}

// ---------------------------------------------------------------------------
// GridSet
// ---------------------------------------------------------------------------

/// A finite union of half-open grid cells inside a box, the crate's stand-in
/// for a bounded open set. `cells_per_axis` is a power of two.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSet {
    boxc: Cube,
    cells_per_axis: usize,
    mask: Vec<bool>,
}

impl GridSet {
    pub fn new(boxc: Cube, cells_per_axis: usize, mask: Vec<bool>) -> Result<Self> {
        if !cells_per_axis.is_power_of_two() || cells_per_axis < 2 {
            return Err(Error::InvalidConfig(format!(
                "cells_per_axis must be a power of two >= 2, got {cells_per_axis}"
            )));
        }
        let want = if boxc.dim() == 1 { cells_per_axis } else { cells_per_axis * cells_per_axis };
        if mask.len() != want {
            return Err(Error::InvalidConfig(format!(
                "mask length {} does not match {} cells",
                mask.len(),
                want
            )));
        }
        Ok(GridSet { boxc, cells_per_axis, mask })
    }

    pub fn from_fn(boxc: Cube, cells_per_axis: usize, f: impl Fn([f64; 2]) -> bool) -> Result<Self> {
        let n = cells_per_axis;
        let dim = boxc.dim();
        let cell = boxc.side() / n as f64;
        let total = if dim == 1 { n } else { n * n };
        let mut mask = vec![false; total];
        for i in 0..total {
            let (ix, iy) = if dim == 1 { (i, 0) } else { (i % n, i / n) };
            let cx = boxc.low(0) + (ix as f64 + 0.5) * cell;
            let cy = if dim == 2 { boxc.low(1) + (iy as f64 + 0.5) * cell } else { 0.0 };
            mask[i] = f([cx, cy]);
        }
        GridSet::new(boxc, n, mask)
    }

    pub fn boxc(&self) -> &Cube {
        &self.boxc
    }

    pub fn dim(&self) -> usize {
        self.boxc.dim()
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn depth(&self) -> u32 {
        self.cells_per_axis.trailing_zeros()
    }

    fn idx(&self, ix: usize, iy: usize) -> usize {
        if self.dim() == 1 {
            ix
        } else {
            iy * self.cells_per_axis + ix
        }
    }

    pub fn cell(&self, ix: usize, iy: usize) -> bool {
        self.mask[self.idx(ix, iy)]
    }

    pub fn set_cell(&mut self, ix: usize, iy: usize, v: bool) {
        let i = self.idx(ix, iy);
        self.mask[i] = v;
    }

    pub fn cell_count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.iter().all(|&b| !b)
    }

    /// Lebesgue measure of the union.
    pub fn measure(&self) -> f64 {
        let cell = self.boxc.side() / self.cells_per_axis as f64;
        let cv = if self.dim() == 1 { cell } else { cell * cell };
        self.cell_count() as f64 * cv
    }

    /// Set cells as (ix, iy) pairs, iy = 0 in dimension 1.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        let n = self.cells_per_axis;
        let mut out = Vec::new();
        if self.dim() == 1 {
            for ix in 0..n {
                if self.mask[ix] {
                    out.push((ix, 0));
                }
            }
        } else {
            for iy in 0..n {
                for ix in 0..n {
                    if self.mask[iy * n + ix] {
                        out.push((ix, iy));
                    }
                }
            }
        }
        out
    }

    /// The realized cube of a single grid cell.
    pub fn cell_cube(&self, ix: usize, iy: usize) -> Cube {
        DyadicCube { level: self.depth(), index: [ix as u64, iy as u64], dim: self.dim() }
            .realize(&self.boxc)
    }
}

// ---------------------------------------------------------------------------
// Whitney decomposition
// ---------------------------------------------------------------------------

/// One Whitney cube together with its achieved distance/diameter ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhitneyCube {
    pub cube: DyadicCube,
    pub ratio: f64,
}

/// Whitney decomposition of a grid-cell open set.
///
/// The returned dyadic cubes are pairwise disjoint, their union is exactly
/// `omega`, and each cube satisfies `gap_band.0 <= dist/diam <= gap_band.1`
/// where dist is the L∞ distance to the sampled complement (cell centers of
/// complement cells plus phantom exterior cells) and diam is the L∞
/// diameter, i.e. the side. Default band: (5R, 15R).
pub fn whitney_decompose(
    omega: &GridSet,
    r_param: f64,
    gap_band: Option<(f64, f64)>,
) -> Result<Vec<WhitneyCube>> {
    if !(r_param >= 1.0) {
        return Err(Error::InvalidConfig(format!("whitney R must be >= 1, got {r_param}")));
    }
    let (band_lo, band_hi) = gap_band.unwrap_or((5.0 * r_param, 15.0 * r_param));
    if !(band_lo > 0.0) || band_hi < band_lo {
        return Err(Error::InvalidConfig(format!("bad gap band [{band_lo}, {band_hi}]")));
    }
    if omega.is_empty() {
        return Ok(Vec::new());
    }

    let helper = WhitneyGrid::build(omega);
    let mut out = Vec::new();
    let mut stack = vec![DyadicCube::root(omega.dim())];
    while let Some(q) = stack.pop() {
        match helper.status(&q) {
            CellStatus::Empty => {}
            CellStatus::Mixed => {
                for c in q.children() {
                    stack.push(c);
                }
            }
            CellStatus::Full => {
                let dist = helper.dist_to_complement(&q);
                let side = 2f64.powi(-(q.level as i32));
                let ratio = dist / side;
                if ratio >= band_lo {
                    if ratio > band_hi {
                        return Err(Error::GapBandUnachievable {
                            lo: band_lo,
                            hi: band_hi,
                            level: q.level,
                            ix: q.index[0],
                            iy: q.index[1],
                            ratio,
                        });
                    }
                    out.push(WhitneyCube { cube: q, ratio });
                } else if q.level >= MAX_WHITNEY_LEVEL {
                    return Err(Error::GapBandUnachievable {
                        lo: band_lo,
                        hi: band_hi,
                        level: q.level,
                        ix: q.index[0],
                        iy: q.index[1],
                        ratio,
                    });
                } else {
                    for c in q.children() {
                        stack.push(c);
                    }
                }
            }
        }
    }
    out.sort_by_key(|w| (w.cube.level, w.cube.index[1], w.cube.index[0]));
    Ok(out)
}

enum CellStatus {
    Empty,
    Mixed,
    Full,
}

const DT_INF: u32 = u32::MAX / 4;

/// Precomputed pyramids over the grid: per-block cell counts and minimum
/// chessboard distance to the complement.
struct WhitneyGrid<'a> {
    omega: &'a GridSet,
    depth: u32,
    // counts[k] and min_dt[k] are indexed like level-k dyadic cubes.
    counts: Vec<Vec<u32>>,
    min_dt: Vec<Vec<u32>>,
    dt: Vec<u32>,
    has_complement: bool,
}

impl<'a> WhitneyGrid<'a> {
    fn build(omega: &'a GridSet) -> Self {
        let n = omega.cells_per_axis();
        let dim = omega.dim();
        let depth = omega.depth();
        let total = if dim == 1 { n } else { n * n };

        // Chessboard distance transform from complement cells (two-pass).
        let mut dt = vec![DT_INF; total];
        let mut has_complement = false;
        for i in 0..total {
            if !omega.mask[i] {
                dt[i] = 0;
                has_complement = true;
            }
        }
        if has_complement {
            let (nx, ny) = if dim == 1 { (n, 1) } else { (n, n) };
            let at = |ix: usize, iy: usize| iy * nx + ix;
            // forward
            for iy in 0..ny {
                for ix in 0..nx {
                    let mut best = dt[at(ix, iy)];
                    if ix > 0 {
                        best = best.min(dt[at(ix - 1, iy)] + 1);
                    }
                    if iy > 0 {
                        best = best.min(dt[at(ix, iy - 1)] + 1);
                        if ix > 0 {
                            best = best.min(dt[at(ix - 1, iy - 1)] + 1);
                        }
                        if ix + 1 < nx {
                            best = best.min(dt[at(ix + 1, iy - 1)] + 1);
                        }
                    }
                    dt[at(ix, iy)] = best;
                }
            }
            // backward
            for iy in (0..ny).rev() {
                for ix in (0..nx).rev() {
                    let mut best = dt[at(ix, iy)];
                    if ix + 1 < nx {
                        best = best.min(dt[at(ix + 1, iy)] + 1);
                    }
                    if iy + 1 < ny {
                        best = best.min(dt[at(ix, iy + 1)] + 1);
                        if ix > 0 {
                            best = best.min(dt[at(ix - 1, iy + 1)] + 1);
                        }
                        if ix + 1 < nx {
                            best = best.min(dt[at(ix + 1, iy + 1)] + 1);
                        }
                    }
                    dt[at(ix, iy)] = best;
                }
            }
        }

        // Pyramids from level `depth` (cells) up to level 0 (whole box).
        let per_level_len = |k: u32| -> usize {
            let c = 1usize << k;
            if dim == 1 {
                c
            } else {
                c * c
            }
        };
        let mut counts: Vec<Vec<u32>> = vec![Vec::new(); depth as usize + 1];
        let mut min_dt: Vec<Vec<u32>> = vec![Vec::new(); depth as usize + 1];
        counts[depth as usize] = omega.mask.iter().map(|&b| b as u32).collect();
        min_dt[depth as usize] = dt.clone();
        for k in (0..depth).rev() {
            let child = 1usize << (k + 1);
            let len = per_level_len(k);
            let mut c_lvl = vec![0u32; len];
            let mut m_lvl = vec![DT_INF; len];
            let cnt = 1usize << k;
            for i in 0..len {
                let (ix, iy) = if dim == 1 { (i, 0) } else { (i % cnt, i / cnt) };
                let kids: &[(usize, usize)] = &if dim == 1 {
                    vec![(2 * ix, 0), (2 * ix + 1, 0)]
                } else {
                    vec![
                        (2 * ix, 2 * iy),
                        (2 * ix + 1, 2 * iy),
                        (2 * ix, 2 * iy + 1),
                        (2 * ix + 1, 2 * iy + 1),
                    ]
                };
                for &(cx, cy) in kids {
                    let ci = if dim == 1 { cx } else { cy * child + cx };
                    c_lvl[i] += counts[k as usize + 1][ci];
                    m_lvl[i] = m_lvl[i].min(min_dt[k as usize + 1][ci]);
                }
            }
            counts[k as usize] = c_lvl;
            min_dt[k as usize] = m_lvl;
        }

        WhitneyGrid { omega, depth, counts, min_dt, dt, has_complement }
    }

    fn block_index(&self, q: &DyadicCube) -> usize {
        let c = 1usize << q.level;
        if self.omega.dim() == 1 {
            q.index[0] as usize
        } else {
            q.index[1] as usize * c + q.index[0] as usize
        }
    }

    fn status(&self, q: &DyadicCube) -> CellStatus {
        if q.level <= self.depth {
            let count = self.counts[q.level as usize][self.block_index(q)];
            let cells_in_block = {
                let side = 1u64 << (self.depth - q.level);
                if self.omega.dim() == 1 {
                    side
                } else {
                    side * side
                }
            };
            if count == 0 {
                CellStatus::Empty
            } else if count as u64 == cells_in_block {
                CellStatus::Full
            } else {
                CellStatus::Mixed
            }
        } else {
            // Below cell level: inherits the host cell.
            let host = self.host_cell(q);
            let n = self.omega.cells_per_axis();
            let i = if self.omega.dim() == 1 { host.0 } else { host.1 * n + host.0 };
            if self.omega.mask[i] {
                CellStatus::Full
            } else {
                CellStatus::Empty
            }
        }
    }

    fn host_cell(&self, q: &DyadicCube) -> (usize, usize) {
        let shift = q.level - self.depth;
        ((q.index[0] >> shift) as usize, if self.omega.dim() == 2 { (q.index[1] >> shift) as usize } else { 0 })
    }

    /// Exact L∞ distance from the cube to the sampled complement, in unit-box
    /// coordinates. Samples: centers of complement cells and phantom exterior
    /// cells tiling the outside of the box.
    fn dist_to_complement(&self, q: &DyadicCube) -> f64 {
        let h = 2f64.powi(-(self.depth as i32));
        let dim = self.omega.dim();
        // Exterior: nearest phantom center sits half a cell beyond the wall.
        let mut ext = f64::INFINITY;
        for axis in 0..dim {
            ext = ext.min(q.low_unit(axis)).min(1.0 - q.high_unit(axis));
        }
        let ext = ext + h / 2.0;

        if !self.has_complement {
            return ext;
        }

        let interior = if q.level <= self.depth {
            let m = self.min_dt[q.level as usize][self.block_index(q)];
            if m >= DT_INF {
                f64::INFINITY
            } else {
                debug_assert!(m >= 1, "full cube touching complement cell");
                (m as f64 - 0.5) * h
            }
        } else {
            // Sub-cell cube: scan complement cells near the host cell.
            let n = self.omega.cells_per_axis();
            let host = self.host_cell(q);
            let hi_dt = self.dt[if dim == 1 { host.0 } else { host.1 * n + host.0 }];
            if hi_dt >= DT_INF {
                f64::INFINITY
            } else {
                let rad = (hi_dt + 2) as usize;
                let x0 = host.0.saturating_sub(rad);
                let x1 = (host.0 + rad).min(n - 1);
                let (y0, y1) = if dim == 2 {
                    (host.1.saturating_sub(rad), (host.1 + rad).min(n - 1))
                } else {
                    (0, 0)
                };
                let mut best = f64::INFINITY;
                for vy in y0..=y1 {
                    for vx in x0..=x1 {
                        let vi = if dim == 1 { vx } else { vy * n + vx };
                        if self.omega.mask[vi] {
                            continue;
                        }
                        let mut d = 0.0f64;
                        for axis in 0..dim {
                            let c = ((if axis == 0 { vx } else { vy }) as f64 + 0.5) * h;
                            let lo = q.low_unit(axis) - c;
                            let hi = c - q.high_unit(axis);
                            d = d.max(lo).max(hi);
                        }
                        best = best.min(d.max(0.0));
                    }
                }
                best
            }
        };
        interior.min(ext)
    }
}

/// Exact-cover audit for a Whitney output: pairwise disjoint, every cube
/// inside omega, and total volume equal to the measure of omega (integer
/// arithmetic in units of the finest returned level).
pub fn is_exact_disjoint_cover(cubes: &[WhitneyCube], omega: &GridSet) -> bool {
    if cubes.is_empty() {
        return omega.is_empty();
    }
    let dim = omega.dim();
    let helper = WhitneyGrid::build(omega);
    // Containment in omega.
    for w in cubes {
        match helper.status(&w.cube) {
            CellStatus::Full => {}
            _ => return false,
        }
    }
    // Pairwise disjoint: no cube may be (a descendant of) another.
    let set: std::collections::HashSet<(u32, u64, u64)> =
        cubes.iter().map(|w| (w.cube.level, w.cube.index[0], w.cube.index[1])).collect();
    if set.len() != cubes.len() {
        return false;
    }
    for w in cubes {
        let mut q = w.cube;
        while let Some(p) = q.parent() {
            if set.contains(&(p.level, p.index[0], p.index[1])) {
                return false;
            }
            q = p;
        }
    }
    // Exact volume in integer units of the finest level.
    let finest = cubes.iter().map(|w| w.cube.level).max().unwrap().max(omega.depth());
    let mut total: u128 = 0;
    for w in cubes {
        let shift = (finest - w.cube.level) as u128;
        total += 1u128 << (dim as u128 * shift);
    }
    let cell_units = 1u128 << (dim as u128 * (finest - omega.depth()) as u128);
    total == omega.cell_count() as u128 * cell_units
}

/// Pointwise count of Σ_j χ_{R·Q_j} over the cell centers of omega's grid.
pub fn dilated_overlap_counts(cubes: &[WhitneyCube], omega: &GridSet, r: f64) -> Vec<u32> {
    let n = omega.cells_per_axis();
    let dim = omega.dim();
    let total = if dim == 1 { n } else { n * n };
    let realized: Vec<Cube> = cubes.iter().map(|w| w.cube.realize(omega.boxc()).dilate(r)).collect();
    let mut counts = vec![0u32; total];
    let cell = omega.boxc().side() / n as f64;
    for i in 0..total {
        let (ix, iy) = if dim == 1 { (i, 0) } else { (i % n, i / n) };
        let cx = omega.boxc().low(0) + (ix as f64 + 0.5) * cell;
        let cy = if dim == 2 { omega.boxc().low(1) + (iy as f64 + 0.5) * cell } else { 0.0 };
        for q in &realized {
            if q.contains_point([cx, cy]) {
                counts[i] += 1;
            }
        }
    }
    counts
}

// ---------------------------------------------------------------------------
// Calderón–Zygmund decomposition
// ---------------------------------------------------------------------------

/// Maximal dyadic subcubes of `root` (relative dyadic grid) on which the
/// average exceeds `lambda`. Each selected cube Q satisfies
/// lambda < avg(Q) <= 2^n lambda because its parent was not selected.
///
/// `avg` must be the exact average functional of a non-negative weight.
/// Descent stops at `max_depth`; cubes below that level are never selected,
/// matching "union = {M_{d,Q} w > lambda} up to grid cells".
pub fn cz_decompose(
    avg: &dyn Fn(&Cube) -> f64,
    root: &Cube,
    lambda: f64,
    max_depth: u32,
) -> Result<Vec<DyadicCube>> {
    let root_avg = avg(root);
    if lambda < root_avg {
        return Err(Error::LevelBelowRootAverage { lambda, root_avg });
    }
    let mut out = Vec::new();
    let mut stack = vec![DyadicCube::root(root.dim())];
    while let Some(q) = stack.pop() {
        if q.level >= max_depth {
            continue;
        }
        for child in q.children() {
            let a = avg(&child.realize(root));
            if a > lambda {
                out.push(child);
            } else {
                stack.push(child);
            }
        }
    }
    out.sort_by_key(|q| (q.level, q.index[1], q.index[0]));
    Ok(out)
}
