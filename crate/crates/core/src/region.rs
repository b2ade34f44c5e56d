//! Trade-off curves and their per-point diagnostics.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    HOma,
    HNomaSic,
    HNomaPuncture,
    AppendixALb,
    AppendixBUb,
    AppendixBLb,
}

impl Scheme {
    pub fn tag(&self) -> &'static str {
        match self {
            Scheme::HOma => "H-OMA",
            Scheme::HNomaSic => "H-NOMA-SIC",
            Scheme::HNomaPuncture => "H-NOMA-PUNCTURE",
            Scheme::AppendixALb => "APPENDIX-A-LB",
            Scheme::AppendixBUb => "APPENDIX-B-UB",
            Scheme::AppendixBLb => "APPENDIX-B-LB",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionPoint {
    pub x: f64,
    pub y: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

impl RegionPoint {
    pub fn new(x: f64, y: f64) -> Self {
        RegionPoint { x, y, diagnostics: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }

    pub fn diag(&self, key: &str) -> Option<f64> {
        self.diagnostics.get(key).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionCurve {
    pub scheme: Scheme,
    /// What `x` and `y` measure, e.g. `("r_b_sum", "r_u")`.
    pub axes: (&'static str, &'static str),
    pub points: Vec<RegionPoint>,
    /// Free-form remarks emitted alongside the curve.
    pub notes: Vec<String>,
}

impl RegionCurve {
    pub fn new(scheme: Scheme, axes: (&'static str, &'static str)) -> Self {
        RegionCurve { scheme, axes, points: Vec::new(), notes: Vec::new() }
    }

    /// Appends points and restores the sort order by `x` (ties by `y`).
    pub fn extend(&mut self, pts: impl IntoIterator<Item = RegionPoint>) {
        self.points.extend(pts);
        self.points.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest `x` among points with `y ≥ y0`, the frontier value at `y0`.
    pub fn best_x_at_least(&self, y0: f64) -> Option<f64> {
        self.points.iter().filter(|p| p.y >= y0).map(|p| p.x).reduce(f64::max)
    }

    /// Point whose `y` equals `y0` (exact match on the shared grid).
    pub fn at_y(&self, y0: f64) -> Option<&RegionPoint> {
        self.points.iter().find(|p| p.y == y0)
    }

    /// Point whose `x` equals `x0`.
    pub fn at_x(&self, x0: f64) -> Option<&RegionPoint> {
        self.points.iter().find(|p| p.x == x0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_stay_sorted() {
        let mut c = RegionCurve::new(Scheme::HOma, ("r_b", "r_u"));
        c.extend([RegionPoint::new(2.0, 0.0), RegionPoint::new(0.0, 3.0), RegionPoint::new(1.0, 1.0)]);
        let xs: Vec<f64> = c.points.iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![0.0, 1.0, 2.0]);
        assert_eq!(c.best_x_at_least(0.5), Some(1.0));
        assert_eq!(c.best_x_at_least(9.0), None);
        assert_eq!(Scheme::AppendixBUb.to_string(), "APPENDIX-B-UB");
    }
}
