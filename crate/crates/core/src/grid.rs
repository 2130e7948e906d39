//! Rectilinear grids, level-set fields and reach tubes.
//!
//! Nodes are stored in row-major order with the last axis fastest, so a
//! joint `[h_x, h_y, p_1]` grid keeps each belief column contiguous.
//!
//! Membership convention: a node is inside a set iff its value is `<= 0`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of axes a [`Grid`] may carry.
pub const MAX_DIMS: usize = 4;

/// Uniform rectilinear discretization of a box in up to [`MAX_DIMS`] dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    mins: Vec<f64>,
    maxs: Vec<f64>,
    counts: Vec<usize>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
}

/// Serialized form of a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    pub counts: Vec<usize>,
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        Grid::new(spec.mins, spec.maxs, spec.counts)
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> Self {
        GridSpec {
            mins: g.mins,
            maxs: g.maxs,
            counts: g.counts,
        }
    }
}

impl Grid {
    pub fn new(mins: Vec<f64>, maxs: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        let n = counts.len();
        if n == 0 || n > MAX_DIMS {
            return Err(Error::input(format!("grid needs 1..={MAX_DIMS} axes, got {n}")));
        }
        if mins.len() != n || maxs.len() != n {
            return Err(Error::input("grid mins/maxs/counts length mismatch"));
        }
        let mut spacing = Vec::with_capacity(n);
        for d in 0..n {
            if counts[d] < 3 {
                return Err(Error::input(format!("axis {d}: need at least 3 nodes, got {}", counts[d])));
            }
            if !(mins[d].is_finite() && maxs[d].is_finite()) || maxs[d] <= mins[d] {
                return Err(Error::input(format!(
                    "axis {d}: bounds [{}, {}] are not an increasing finite interval",
                    mins[d], maxs[d]
                )));
            }
            spacing.push((maxs[d] - mins[d]) / (counts[d] - 1) as f64);
        }
        let mut strides = vec![1usize; n];
        for d in (0..n - 1).rev() {
            strides[d] = strides[d + 1] * counts[d + 1];
        }
        Ok(Grid {
            mins,
            maxs,
            counts,
            spacing,
            strides,
        })
    }

    /// Square 2-D grid over `[lo, hi]^2`.
    pub fn square(lo: f64, hi: f64, count: usize) -> Result<Self> {
        Grid::new(vec![lo, lo], vec![hi, hi], vec![count, count])
    }

    pub fn ndim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mins(&self) -> &[f64] {
        &self.mins
    }

    pub fn maxs(&self) -> &[f64] {
        &self.maxs
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    /// Volume (area in 2-D) attributed to one node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.counts[axis] {
            self.maxs[axis]
        } else {
            self.mins[axis] + i as f64 * self.spacing[axis]
        }
    }

    /// Per-axis node index of flat index `idx`.
    pub fn multi_index(&self, mut idx: usize, out: &mut [usize]) {
        for d in 0..self.ndim() {
            out[d] = idx / self.strides[d];
            idx %= self.strides[d];
        }
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Coordinates of node `idx`.
    pub fn node_coords(&self, idx: usize, out: &mut [f64]) {
        let mut rem = idx;
        for d in 0..self.ndim() {
            let i = rem / self.strides[d];
            rem %= self.strides[d];
            out[d] = self.coord(d, i);
        }
    }

    pub fn node_point(&self, idx: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.ndim()];
        self.node_coords(idx, &mut p);
        p
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.ndim()
            && point
                .iter()
                .enumerate()
                .all(|(d, &x)| x >= self.mins[d] - 1e-12 && x <= self.maxs[d] + 1e-12)
    }

    fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.ndim() {
            return Err(Error::input(format!(
                "point has {} coordinates, grid has {} axes",
                point.len(),
                self.ndim()
            )));
        }
        if !self.contains(point) {
            return Err(Error::input(format!("point {point:?} outside grid bounds")));
        }
        Ok(())
    }

    /// Multilinear interpolation of node `values` at `point`, which is first
    /// clamped into the grid box.
    pub fn interpolate_clamped(&self, values: &[f64], point: &[f64]) -> f64 {
        let n = self.ndim();
        let mut base = 0usize;
        let mut frac = [0.0f64; MAX_DIMS];
        for d in 0..n {
            let t = ((point[d] - self.mins[d]) / self.spacing[d]).clamp(0.0, (self.counts[d] - 1) as f64);
            let i = (t.floor() as usize).min(self.counts[d] - 2);
            base += i * self.strides[d];
            frac[d] = t - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = base;
            for d in 0..n {
                if (corner >> d) & 1 == 1 {
                    w *= frac[d];
                    idx += self.strides[d];
                } else {
                    w *= 1.0 - frac[d];
                }
            }
            if w != 0.0 {
                acc += w * values[idx];
            }
        }
        acc
    }

    /// Flat index of the node nearest to `point`, or `None` outside the grid.
    pub fn nearest_node(&self, point: &[f64]) -> Option<usize> {
        if !self.contains(point) {
            return None;
        }
        let mut idx = 0;
        for d in 0..self.ndim() {
            let t = ((point[d] - self.mins[d]) / self.spacing[d]).round();
            let i = (t.max(0.0) as usize).min(self.counts[d] - 1);
            idx += i * self.strides[d];
        }
        Some(idx)
    }

    /// Nearest node with the point clamped into the box first.
    pub fn nearest_node_clamped(&self, point: &[f64]) -> usize {
        let mut idx = 0;
        for d in 0..self.ndim() {
            let t = ((point[d] - self.mins[d]) / self.spacing[d]).round();
            let i = (t.max(0.0) as usize).min(self.counts[d] - 1);
            idx += i * self.strides[d];
        }
        idx
    }

    /// Grid restricted to `axes` (kept in the given order).
    pub fn sub_grid(&self, axes: &[usize]) -> Result<Grid> {
        Grid::new(
            axes.iter().map(|&a| self.mins[a]).collect(),
            axes.iter().map(|&a| self.maxs[a]).collect(),
            axes.iter().map(|&a| self.counts[a]).collect(),
        )
    }

    /// Append one axis to this grid.
    pub fn extend(&self, min: f64, max: f64, count: usize) -> Result<Grid> {
        let mut mins = self.mins.clone();
        let mut maxs = self.maxs.clone();
        let mut counts = self.counts.clone();
        mins.push(min);
        maxs.push(max);
        counts.push(count);
        Grid::new(mins, maxs, counts)
    }

    /// Same grid translated by `offset`.
    pub fn translated(&self, offset: &[f64]) -> Result<Grid> {
        Grid::new(
            self.mins.iter().zip(offset).map(|(m, o)| m + o).collect(),
            self.maxs.iter().zip(offset).map(|(m, o)| m + o).collect(),
            self.counts.clone(),
        )
    }
}

/// Scalar value per grid node at one time stamp.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetField {
    grid: Grid,
    values: Vec<f64>,
    time: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldSidecar {
    grid: Grid,
    time: f64,
}

impl LevelSetField {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::input(format!(
                "field has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!("non-finite value at node {i}")));
        }
        Ok(LevelSetField { grid, values, time })
    }

    /// Skips validation; callers guarantee finiteness and length.
    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>, time: f64) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        LevelSetField { grid, values, time }
    }

    pub fn from_fn(grid: Grid, time: f64, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let mut p = vec![0.0; grid.ndim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.node_coords(i, &mut p);
                f(&p)
            })
            .collect();
        LevelSetField::new(grid, values, time)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn is_inside_node(&self, idx: usize) -> bool {
        self.values[idx] <= 0.0
    }

    pub fn inside_mask(&self) -> Vec<bool> {
        self.values.iter().map(|&v| v <= 0.0).collect()
    }

    pub fn inside_count(&self) -> usize {
        self.values.iter().filter(|&&v| v <= 0.0).count()
    }

    /// Node-exact set measure: inside count times cell volume.
    pub fn inside_volume(&self) -> f64 {
        self.inside_count() as f64 * self.grid.cell_volume()
    }

    /// Multilinear interpolation of the field at `point`.
    pub fn interpolate(&self, point: &[f64]) -> Result<f64> {
        self.grid.check_point(point)?;
        let g = &self.grid;
        let n = g.ndim();
        let mut base = [0usize; MAX_DIMS];
        let mut frac = [0.0f64; MAX_DIMS];
        for d in 0..n {
            let t = ((point[d] - g.mins[d]) / g.spacing[d]).clamp(0.0, (g.counts[d] - 1) as f64);
            let i = (t.floor() as usize).min(g.counts[d] - 2);
            base[d] = i;
            frac[d] = t - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = 0;
            for d in 0..n {
                let bit = (corner >> d) & 1;
                w *= if bit == 1 { frac[d] } else { 1.0 - frac[d] };
                idx += (base[d] + bit) * g.strides[d];
            }
            if w != 0.0 {
                acc += w * self.values[idx];
            }
        }
        Ok(acc)
    }

    /// Membership of a continuous point: interpolated value `<= 0`.
    pub fn contains_point(&self, point: &[f64]) -> Result<bool> {
        Ok(self.interpolate(point)? <= 0.0)
    }

    fn zip_with(&self, other: &LevelSetField, f: impl Fn(f64, f64) -> f64) -> Result<LevelSetField> {
        if self.grid != other.grid {
            return Err(Error::input("fields live on different grids"));
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(LevelSetField::from_parts(self.grid.clone(), values, self.time))
    }

    /// Pointwise minimum: set union.
    pub fn union(&self, other: &LevelSetField) -> Result<LevelSetField> {
        self.zip_with(other, f64::min)
    }

    /// Pointwise maximum: set intersection.
    pub fn intersection(&self, other: &LevelSetField) -> Result<LevelSetField> {
        self.zip_with(other, f64::max)
    }

    /// Number of nodes inside `self` but outside `other`.
    pub fn count_not_in(&self, other: &LevelSetField) -> Result<usize> {
        if self.grid != other.grid {
            return Err(Error::input("fields live on different grids"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .filter(|(&a, &b)| a <= 0.0 && b > 0.0)
            .count())
    }

    /// Keeps `axes` and takes the minimum over all others.
    pub fn project(&self, axes: &[usize]) -> Result<LevelSetField> {
        let n = self.grid.ndim();
        let mut seen = [false; MAX_DIMS];
        for &a in axes {
            if a >= n || seen[a] {
                return Err(Error::input(format!("bad projection axis list {axes:?}")));
            }
            seen[a] = true;
        }
        if axes.is_empty() || axes.len() >= n {
            return Err(Error::input(format!(
                "projection axes {axes:?} must be a strict nonempty subset of {n} axes"
            )));
        }
        let sub = self.grid.sub_grid(axes)?;
        let mut out = vec![f64::INFINITY; sub.len()];
        let mut multi = [0usize; MAX_DIMS];
        for (i, &v) in self.values.iter().enumerate() {
            self.grid.multi_index(i, &mut multi);
            let j: usize = axes.iter().zip(sub.strides()).map(|(&a, s)| multi[a] * s).sum();
            if v < out[j] {
                out[j] = v;
            }
        }
        Ok(LevelSetField::from_parts(sub, out, self.time))
    }

    /// One row per node: coordinates then value.
    pub fn to_csv(&self) -> String {
        let n = self.grid.ndim();
        let mut s = String::with_capacity(self.values.len() * 32);
        for d in 0..n {
            let _ = write!(s, "x{d},");
        }
        s.push_str("value\n");
        let mut p = vec![0.0; n];
        for (i, v) in self.values.iter().enumerate() {
            self.grid.node_coords(i, &mut p);
            for c in &p {
                let _ = write!(s, "{c},");
            }
            let _ = writeln!(s, "{v}");
        }
        s
    }

    pub fn from_csv(grid: Grid, time: f64, text: &str) -> Result<Self> {
        let n = grid.ndim();
        let mut values = Vec::with_capacity(grid.len());
        for (line_no, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let last = line
                .split(',')
                .nth(n)
                .ok_or_else(|| Error::input(format!("csv line {}: expected {} columns", line_no + 1, n + 1)))?;
            let v: f64 = last
                .trim()
                .parse()
                .map_err(|e| Error::input(format!("csv line {}: {e}", line_no + 1)))?;
            values.push(v);
        }
        LevelSetField::new(grid, values, time)
    }

    /// Writes `<stem>.csv` and the `<stem>.json` sidecar.
    pub fn save(&self, stem: &Path) -> Result<()> {
        fs::write(stem.with_extension("csv"), self.to_csv())?;
        let side = FieldSidecar {
            grid: self.grid.clone(),
            time: self.time,
        };
        fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&side)?)?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let side: FieldSidecar = serde_json::from_str(&fs::read_to_string(stem.with_extension("json"))?)?;
        let text = fs::read_to_string(stem.with_extension("csv"))?;
        LevelSetField::from_csv(side.grid, side.time, &text)
    }
}

/// Signed distance to a ball, sampled at the nodes (negative inside).
pub fn make_ball_field(grid: &Grid, center: &[f64], radius: f64) -> Result<LevelSetField> {
    grid.check_point(center)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::input(format!("ball radius must be positive, got {radius}")));
    }
    LevelSetField::from_fn(grid.clone(), 0.0, |p| {
        let d2: f64 = p.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
        d2.sqrt() - radius
    })
}

/// Time-ordered level-set snapshots on one grid at a constant interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachTube {
    slices: Vec<LevelSetField>,
    dt: f64,
}

impl ReachTube {
    pub fn new(slices: Vec<LevelSetField>, dt: f64) -> Result<Self> {
        let first = slices.first().ok_or_else(|| Error::input("reach tube needs at least one slice"))?;
        if slices.len() > 1 && !(dt > 0.0) {
            return Err(Error::input("reach tube interval must be positive"));
        }
        let t0 = first.time;
        for (k, s) in slices.iter().enumerate() {
            if s.grid != first.grid {
                return Err(Error::input(format!("slice {k} has a different grid")));
            }
            let expected = t0 + k as f64 * dt;
            if (s.time - expected).abs() > 1e-9 * (1.0 + expected.abs()) {
                return Err(Error::input(format!(
                    "slice {k} time {} breaks uniform spacing (expected {expected})",
                    s.time
                )));
            }
        }
        Ok(ReachTube { slices, dt })
    }

    pub fn slices(&self) -> &[LevelSetField] {
        &self.slices
    }

    pub fn into_slices(self) -> Vec<LevelSetField> {
        self.slices
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        &self.slices[0].grid
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn last(&self) -> &LevelSetField {
        self.slices.last().expect("tube is never empty")
    }

    pub fn times(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.time).collect()
    }

    /// Slice whose time is nearest `t` (clamped to the tube's span).
    pub fn slice_at(&self, t: f64) -> &LevelSetField {
        let t0 = self.slices[0].time;
        if self.slices.len() == 1 {
            return &self.slices[0];
        }
        let k = ((t - t0) / self.dt).round().max(0.0) as usize;
        &self.slices[k.min(self.slices.len() - 1)]
    }
}

/// Projects every slice of `tube` onto `human_axes` by minimizing over the rest.
pub fn project_to_human_space(tube: &ReachTube, human_axes: &[usize]) -> Result<ReachTube> {
    let slices = tube
        .slices
        .iter()
        .map(|s| s.project(human_axes))
        .collect::<Result<Vec<_>>>()?;
    ReachTube::new(slices, tube.dt)
}

/// Probability mass per node of a 2-D human-space grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancySlice {
    grid: Grid,
    mass: Vec<f64>,
    time: f64,
}

impl OccupancySlice {
    pub fn new(grid: Grid, mass: Vec<f64>, time: f64) -> Result<Self> {
        if mass.len() != grid.len() {
            return Err(Error::input("occupancy mass length does not match grid"));
        }
        if mass.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::input("occupancy mass must be finite and nonnegative"));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::input(format!("occupancy mass sums to {total}, expected 1")));
        }
        Ok(OccupancySlice { grid, mass, time })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Membership field of `{mass > epsilon}`: `-1` inside, `+1` outside.
    pub fn superlevel_field(&self, epsilon: f64) -> LevelSetField {
        let values = self.mass.iter().map(|&m| if m > epsilon { -1.0 } else { 1.0 }).collect();
        LevelSetField::from_parts(self.grid.clone(), values, self.time)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x0,x1,mass\n");
        let mut p = vec![0.0; self.grid.ndim()];
        for (i, m) in self.mass.iter().enumerate() {
            self.grid.node_coords(i, &mut p);
            for c in &p {
                let _ = write!(s, "{c},");
            }
            let _ = writeln!(s, "{m}");
        }
        s
    }

    pub fn from_csv(grid: Grid, time: f64, text: &str) -> Result<Self> {
        let n = grid.ndim();
        let mut mass = Vec::with_capacity(grid.len());
        for (line_no, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let v: f64 = line
                .split(',')
                .nth(n)
                .ok_or_else(|| Error::input(format!("csv line {}: missing mass column", line_no + 1)))?
                .trim()
                .parse()
                .map_err(|e| Error::input(format!("csv line {}: {e}", line_no + 1)))?;
            mass.push(v);
        }
        OccupancySlice::new(grid, mass, time)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g2() -> Grid {
        Grid::square(-2.0, 2.0, 101).unwrap()
    }

    #[test]
    fn grid_rejects_bad_axes() {
        assert!(Grid::new(vec![0.0], vec![1.0], vec![2]).is_err());
        assert!(Grid::new(vec![1.0], vec![0.0], vec![5]).is_err());
        assert!(Grid::new(vec![0.0; 5], vec![1.0; 5], vec![3; 5]).is_err());
        let g = Grid::new(vec![0.0, -1.0], vec![1.0, 1.0], vec![11, 5]).unwrap();
        assert_eq!(g.spacing(), &[0.1, 0.5]);
        assert_eq!(g.strides(), &[5, 1]);
    }

    #[test]
    fn ball_center_value_is_minus_radius() {
        let g = g2();
        let r = 2.0 * g.spacing()[0];
        let f = make_ball_field(&g, &[0.0, 0.0], r).unwrap();
        let c = g.nearest_node(&[0.0, 0.0]).unwrap();
        assert!((f.values()[c] + r).abs() < 1e-15);
        // a node two cells to the right lies exactly on the surface
        let e = g.nearest_node(&[r, 0.0]).unwrap();
        assert!(f.values()[e].abs() < 1e-12);
    }

    #[test]
    fn ball_count_matches_brute_force() {
        let g = g2();
        let f = make_ball_field(&g, &[0.0, 0.0], 0.1).unwrap();
        let mut brute = 0;
        for i in 0..101 {
            for j in 0..101 {
                let (x, y) = (g.coord(0, i), g.coord(1, j));
                if (x * x + y * y).sqrt() <= 0.1 {
                    brute += 1;
                }
            }
        }
        assert!(brute > 1);
        assert_eq!(f.inside_count(), brute);
    }

    #[test]
    fn ball_center_out_of_bounds() {
        assert!(make_ball_field(&g2(), &[3.0, 0.0], 0.1).is_err());
        assert!(make_ball_field(&g2(), &[0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn membership_and_interpolation() {
        let g = Grid::new(vec![0.0, 0.0], vec![2.0, 2.0], vec![3, 3]).unwrap();
        let mut v = vec![1.0; 9];
        v[0] = -1.0;
        v[3] = 3.0; // node (1, 0)
        let f = LevelSetField::new(g, v, 0.0).unwrap();
        assert!(f.contains_point(&[0.0, 0.0]).unwrap());
        assert!(!f.contains_point(&[2.0, 2.0]).unwrap());
        let mid = f.interpolate(&[0.5, 0.0]).unwrap();
        assert!((mid - 1.0).abs() < 1e-15);
        assert!(!f.contains_point(&[0.5, 0.0]).unwrap());
        assert!(f.contains_point(&[5.0, 0.0]).is_err());
    }

    #[test]
    fn projection_takes_column_minimum() {
        let g = Grid::new(vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0], vec![3, 3, 4]).unwrap();
        let mut v = vec![1.0; g.len()];
        v[g.flat_index(&[1, 2, 3])] = -0.5;
        let f = LevelSetField::new(g, v, 0.0).unwrap();
        let p = f.project(&[0, 1]).unwrap();
        assert_eq!(p.inside_count(), 1);
        assert!(p.values()[p.grid().flat_index(&[1, 2])] < 0.0);
        assert!(f.project(&[0, 1, 2]).is_err());
        assert!(f.project(&[]).is_err());
        assert!(f.project(&[0, 0]).is_err());
    }

    #[test]
    fn positive_field_projects_to_empty_set() {
        let g = Grid::new(vec![0.0; 3], vec![1.0; 3], vec![4, 4, 4]).unwrap();
        let f = LevelSetField::from_fn(g, 0.0, |p| 1.0 + p[0]).unwrap();
        assert_eq!(f.project(&[0, 1]).unwrap().inside_count(), 0);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let g = g2();
        let f = make_ball_field(&g, &[0.3, -0.7], 0.25).unwrap().with_time(1.7);
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("field");
        f.save(&stem).unwrap();
        let back = LevelSetField::load(&stem).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn tube_rejects_irregular_times() {
        let g = g2();
        let a = make_ball_field(&g, &[0.0, 0.0], 0.1).unwrap();
        let b = a.clone().with_time(0.1);
        let c = a.clone().with_time(0.3);
        assert!(ReachTube::new(vec![a.clone(), b.clone()], 0.1).is_ok());
        assert!(ReachTube::new(vec![a, b, c], 0.1).is_err());
    }

    #[test]
    fn occupancy_validates_mass() {
        let g = Grid::square(0.0, 1.0, 3).unwrap();
        let mut m = vec![0.0; 9];
        m[4] = 1.0;
        assert!(OccupancySlice::new(g.clone(), m.clone(), 0.0).is_ok());
        m[4] = 0.5;
        assert!(OccupancySlice::new(g.clone(), m.clone(), 0.0).is_err());
        m[3] = 0.5;
        m[2] = -0.0 - 1e-3;
        assert!(OccupancySlice::new(g, m, 0.0).is_err());
    }
}
