//! Uniformly sampled vector-valued paths.
//!
//! `Path` lives on `{0, dt, …, T}`; `PastPath` lives on `{−T_past, …, −dt, 0}`
//! and is stored newest-first, so index `k` is time `−k·dt`.

use std::io::Write;

use crate::error::{grid_index, Error, Result};

fn check_layout(dt: f64, dim: usize, len: usize, min_nodes: usize) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("grid step must be positive, got {dt}")));
    }
    if dim == 0 || !len.is_multiple_of(dim) {
        return Err(Error::InvalidArgument(format!("{len} values do not form rows of dimension {dim}")));
    }
    let nodes = len / dim;
    if nodes < min_nodes {
        return Err(Error::InvalidArgument(format!("path needs at least {min_nodes} nodes, got {nodes}")));
    }
    Ok(nodes)
}

fn write_rows<W: Write>(mut w: W, dim: usize, rows: impl Iterator<Item = (f64, Vec<f64>)>) -> std::io::Result<()> {
    let mut header = String::from("t");
    for j in 1..=dim {
        header.push_str(&format!(",x{j}"));
    }
    writeln!(w, "{header}")?;
    for (t, x) in rows {
        write!(w, "{t:.16e}")?;
        for v in x {
            write!(w, ",{v:.16e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    dt: f64,
    dim: usize,
    data: Vec<f64>,
}

impl Path {
    /// Row-major values, one row of `dim` entries per node starting at t = 0.
    pub fn new(dt: f64, dim: usize, data: Vec<f64>) -> Result<Self> {
        check_layout(dt, dim, data.len(), 2)?;
        Ok(Self { dt, dim, data })
    }

    pub fn zeros(dt: f64, dim: usize, steps: usize) -> Self {
        Self { dt, dim, data: vec![0.0; dim * (steps + 1)] }
    }

    pub fn from_fn(dt: f64, dim: usize, steps: usize, f: impl Fn(f64) -> Vec<f64>) -> Self {
        let mut p = Self::zeros(dt, dim, steps);
        for k in 0..=steps {
            let v = f(k as f64 * dt);
            p.row_mut(k).copy_from_slice(&v);
        }
        p
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    /// Number of grid nodes.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
    pub fn steps(&self) -> usize {
        self.len() - 1
    }
    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.dt
    }
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }
    pub fn row_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.dim..(k + 1) * self.dim]
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn component(&self, j: usize) -> Vec<f64> {
        self.data.iter().skip(j).step_by(self.dim).copied().collect()
    }

    /// Value at grid time `t`, rejecting off-grid times.
    pub fn at(&self, t: f64) -> Result<&[f64]> {
        let k = grid_index(t, self.dt)?;
        if k >= self.len() {
            return Err(Error::Horizon { requested: t, available: self.horizon() });
        }
        Ok(self.row(k))
    }

    /// Restriction to the first `steps` steps.
    pub fn truncate(&self, steps: usize) -> Path {
        Path { dt: self.dt, dim: self.dim, data: self.data[..(steps + 1) * self.dim].to_vec() }
    }

    /// Every `factor`-th node.
    pub fn subsample(&self, factor: usize) -> Result<Path> {
        if factor == 0 || !self.steps().is_multiple_of(factor) {
            return Err(Error::GridMismatch(format!("{} steps not divisible by {factor}", self.steps())));
        }
        let mut data = Vec::with_capacity(self.data.len() / factor + self.dim);
        for k in (0..self.len()).step_by(factor) {
            data.extend_from_slice(self.row(k));
        }
        Path::new(self.dt * factor as f64, self.dim, data)
    }

    /// Sup-norm distance between two paths on the same grid.
    pub fn sup_distance(&self, other: &Path) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_rows(w, self.dim, (0..self.len()).map(|k| (self.time(k), self.row(k).to_vec())))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PastPath {
    dt: f64,
    dim: usize,
    data: Vec<f64>,
}

impl PastPath {
    /// Rows ordered newest first: row `k` is the value at time `−k·dt`.
    /// The row at time 0 must be the zero vector.
    pub fn new(dt: f64, dim: usize, data: Vec<f64>) -> Result<Self> {
        check_layout(dt, dim, data.len(), 2)?;
        if data[..dim].iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidArgument("past path must vanish at time 0".into()));
        }
        Ok(Self { dt, dim, data })
    }

    pub fn zeros(dt: f64, dim: usize, steps: usize) -> Self {
        Self { dt, dim, data: vec![0.0; dim * (steps + 1)] }
    }

    /// Samples `f` at times `0, −dt, …, −steps·dt` and re-anchors at 0.
    pub fn from_fn(dt: f64, dim: usize, steps: usize, f: impl Fn(f64) -> Vec<f64>) -> Self {
        let f0 = f(0.0);
        let mut p = Self::zeros(dt, dim, steps);
        for k in 1..=steps {
            let v = f(-(k as f64) * dt);
            for (j, x) in p.row_mut(k).iter_mut().enumerate() {
                *x = v[j] - f0[j];
            }
        }
        p
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
    pub fn steps(&self) -> usize {
        self.len() - 1
    }
    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.dt
    }
    /// Row at time `−k·dt`.
    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }
    pub(crate) fn row_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.dim..(k + 1) * self.dim]
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn component(&self, j: usize) -> Vec<f64> {
        self.data.iter().skip(j).step_by(self.dim).copied().collect()
    }

    /// Scales every value by `a` (stays anchored).
    pub fn scaled(&self, a: f64) -> PastPath {
        PastPath { dt: self.dt, dim: self.dim, data: self.data.iter().map(|v| a * v).collect() }
    }

    /// `a·self + b·other` on a common grid.
    pub fn combine(&self, a: f64, other: &PastPath, b: f64) -> Result<PastPath> {
        if self.dt != other.dt || self.dim != other.dim || self.len() != other.len() {
            return Err(Error::GridMismatch("past paths differ in grid".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect();
        Ok(PastPath { dt: self.dt, dim: self.dim, data })
    }

    /// Restriction to the most recent `steps` steps.
    pub fn truncate(&self, steps: usize) -> PastPath {
        PastPath { dt: self.dt, dim: self.dim, data: self.data[..(steps + 1) * self.dim].to_vec() }
    }

    pub fn sup_distance(&self, other: &PastPath) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// CSV rows in increasing time, from `−T_past` to 0.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let n = self.steps();
        write_rows(w, self.dim, (0..=n).rev().map(|k| (-(k as f64) * self.dt, self.row(k).to_vec())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn past_path_must_be_anchored() {
        assert!(PastPath::new(0.1, 1, vec![1.0, 2.0]).is_err());
        assert!(PastPath::new(0.1, 1, vec![0.0, 2.0]).is_ok());
    }

    #[test]
    fn path_lookup_rejects_off_grid() {
        let p = Path::zeros(0.25, 1, 4);
        assert!(p.at(0.5).is_ok());
        assert!(matches!(p.at(0.3), Err(Error::OffGrid(_))));
        assert!(p.at(1.25).is_err());
    }

    #[test]
    fn csv_has_header_and_full_precision() {
        let p = Path::from_fn(0.5, 2, 2, |t| vec![t, 1.0 / 3.0]);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("t,x1,x2"));
        let row: Vec<f64> = lines.nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row, vec![0.5, 0.5, 1.0 / 3.0]);
    }

    #[test]
    fn past_csv_runs_forward_in_time() {
        let p = PastPath::from_fn(1.0, 1, 2, |t| vec![t]);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.lines().nth(1).unwrap().starts_with("-2.0"));
    }
}
