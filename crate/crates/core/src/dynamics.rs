//! Reduced linear model of a single bat coordinate.
//!
//! With the best position `p` frozen and the frequency replaced by a constant
//! `m`, one coordinate evolves as
//!
//! ```text
//! v[k+1] = l v[k] + m (p - x[k])
//! x[k+1] = c x[k] + u v[k+1]
//! ```
//!
//! Only the product `m u` matters and `c = 1` is forced by requiring `p` to be
//! the limit, so the analysis uses `c = u = 1`. The state `(x, v)` then obeys
//! `Y[k+1] = C Y[k] + (m, m) p` with the dynamic matrix `C = [[1-m, l], [-m, l]]`,
//! whose characteristic polynomial is `λ² + (m - l - 1) λ + l`. The system is
//! stable inside the triangle `-1 <= l <= 1`, `m >= 0`, `2l - m + 2 >= 0`.
//!
//! Loudness and pulse rate are not part of this model.

use std::fmt;
use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{read_records, write_records};
use crate::error::{Error, Result};
use crate::parallel;

/// Absolute tolerance for boundary and Vieta comparisons.
pub const TOL: f64 = 1e-9;

/// A trajectory counts as converged once `|x - p|` and `|v|` are both below this.
pub const CONVERGENCE_TOL: f64 = 1e-6;

/// A trajectory counts as divergent once `|x|` exceeds this.
pub const DIVERGENCE_BOUND: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicParams {
    /// Velocity weight (inertia).
    pub l: f64,
    /// Constant frequency.
    pub m: f64,
    /// Position self-weight; 1 in the reduced model.
    pub c: f64,
    /// Velocity coupling weight; 1 in the reduced model.
    pub u: f64,
    /// Attraction point.
    pub p: f64,
}

impl DynamicParams {
    pub fn reduced(l: f64, m: f64, p: f64) -> Self {
        Self {
            l,
            m,
            c: 1.0,
            u: 1.0,
            p,
        }
    }

    pub fn is_reduced(&self) -> bool {
        self.c == 1.0 && self.u == 1.0
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("l", self.l),
            ("m", self.m),
            ("c", self.c),
            ("u", self.u),
            ("p", self.p),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, format!("must be finite, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for DynamicParams {
    fn default() -> Self {
        Self::reduced(0.5, 2.0, 1.0)
    }
}

/// `[[1 - m, l], [-m, l]]`.
pub fn dynamic_matrix(l: f64, m: f64) -> [[f64; 2]; 2] {
    [[1.0 - m, l], [-m, l]]
}

/// Roots of `λ² + (m - l - 1) λ + l`.
///
/// Real roots are ordered `λ1 >= λ2`; complex roots are returned as a
/// conjugate pair with `Im λ1 > 0`.
pub fn eigenvalues(l: f64, m: f64) -> [Complex64; 2] {
    let b = m - l - 1.0;
    let disc = b * b - 4.0 * l;
    if disc >= 0.0 {
        // Cancellation-free form: q carries the larger-magnitude root.
        let sq = disc.sqrt();
        let q = -0.5 * (b + b.signum() * sq);
        let (r1, r2) = if q == 0.0 {
            // b == 0 and l == 0
            (0.0, 0.0)
        } else {
            (q, l / q)
        };
        let (hi, lo) = if r1 >= r2 { (r1, r2) } else { (r2, r1) };
        [Complex64::new(hi, 0.0), Complex64::new(lo, 0.0)]
    } else {
        let re = -0.5 * b;
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

pub fn spectral_radius(l: f64, m: f64) -> f64 {
    let [a, b] = eigenvalues(l, m);
    a.norm().max(b.norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Marginal,
    Unstable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Marginal => "marginal",
            Verdict::Unstable => "unstable",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub l: f64,
    pub m: f64,
    pub eigenvalues: [Complex64; 2],
    pub spectral_radius: f64,
    pub verdict: Verdict,
    /// `-1 <= l <= 1`, `m >= 0`, `2l - m + 2 >= 0`.
    pub conditions: [bool; 3],
}

/// Signed slacks of the three triangle inequalities; all nonnegative inside.
fn slacks(l: f64, m: f64) -> [f64; 3] {
    [1.0 - l.abs(), m, 2.0 * l - m + 2.0]
}

pub fn region_verdict(l: f64, m: f64) -> StabilityReport {
    let eigenvalues = eigenvalues(l, m);
    let spectral_radius = eigenvalues[0].norm().max(eigenvalues[1].norm());
    let s = slacks(l, m);
    let conditions = s.map(|v| v >= -TOL);
    let on_edge = s.iter().any(|v| v.abs() <= TOL);
    let unit_radius = (spectral_radius - 1.0).abs() <= TOL;
    let verdict = if !conditions.iter().all(|&c| c) {
        Verdict::Unstable
    } else if on_edge || unit_radius {
        Verdict::Marginal
    } else {
        Verdict::Stable
    };
    StabilityReport {
        l,
        m,
        eigenvalues,
        spectral_radius,
        verdict,
        conditions,
    }
}

/// Euclidean distance from `(l, m)` to the edge of the stability triangle
/// with corners `(-1, 0)`, `(1, 0)`, `(1, 4)`.
pub fn distance_to_region_boundary(l: f64, m: f64) -> f64 {
    const CORNERS: [(f64, f64); 3] = [(-1.0, 0.0), (1.0, 0.0), (1.0, 4.0)];
    (0..3)
        .map(|i| segment_distance((l, m), CORNERS[i], CORNERS[(i + 1) % 3]))
        .fold(f64::INFINITY, f64::min)
}

fn segment_distance(pt: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let t = (((pt.0 - a.0) * dx + (pt.1 - a.1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((pt.0 - cx).powi(2) + (pt.1 - cy).powi(2)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryState {
    pub k: u64,
    pub x: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: DynamicParams,
    pub states: Vec<TrajectoryState>,
    /// Set when iteration stopped early on a non-finite state.
    pub diverged: bool,
}

pub const TRAJECTORY_HEADER: &str = "k,x,v";

impl Trajectory {
    /// First `k` with `|x - p| < tol` and `|v| < tol`.
    pub fn convergence_index(&self, tol: f64) -> Option<u64> {
        let p = self.params.p;
        self.states
            .iter()
            .find(|s| (s.x - p).abs() < tol && s.v.abs() < tol)
            .map(|s| s.k)
    }

    /// First `k` with `|x| > bound`.
    pub fn escape_index(&self, bound: f64) -> Option<u64> {
        self.states.iter().find(|s| s.x.abs() > bound).map(|s| s.k)
    }

    /// Overflowed, or left `[-bound, bound]`.
    pub fn diverges(&self, bound: f64) -> bool {
        self.diverged || self.escape_index(bound).is_some()
    }

    pub fn max_abs_x(&self) -> f64 {
        self.states.iter().map(|s| s.x.abs()).fold(0.0, f64::max)
    }

    /// Consecutive position triples `(x[k-1], x[k], x[k+1])`.
    pub fn triples(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.states.windows(3).map(|w| (w[0].x, w[1].x, w[2].x))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_records(&self.states, writer)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Vec<TrajectoryState>> {
        read_records(reader, TRAJECTORY_HEADER)
    }
}

/// Iterates the `(c, u)`-general system from `(x0, v0)` for up to `k_max`
/// steps, returning `k_max + 1` states unless a state becomes non-finite.
pub fn iterate_trajectory(
    params: &DynamicParams,
    x0: f64,
    v0: f64,
    k_max: usize,
) -> Result<Trajectory> {
    params.validate()?;
    if !x0.is_finite() || !v0.is_finite() {
        return Err(Error::invalid("x0/v0", "initial state must be finite"));
    }
    let DynamicParams { l, m, c, u, p } = *params;
    let mut states = Vec::with_capacity(k_max + 1);
    let (mut x, mut v) = (x0, v0);
    states.push(TrajectoryState { k: 0, x, v });
    let mut diverged = false;
    for k in 1..=k_max as u64 {
        v = l * v + m * (p - x);
        x = c * x + u * v;
        if !x.is_finite() || !v.is_finite() {
            diverged = true;
            break;
        }
        states.push(TrajectoryState { k, x, v });
    }
    Ok(Trajectory {
        params: *params,
        states,
        diverged,
    })
}

/// `|x[k+1] + (m u - c - l) x[k] + l c x[k-1] - m u p|`, zero along any
/// trajectory of the general system.
pub fn recursion_residual(params: &DynamicParams, triple: (f64, f64, f64)) -> f64 {
    let DynamicParams { l, m, c, u, p } = *params;
    let (prev, cur, next) = triple;
    (next + (m * u - c - l) * cur + l * c * prev - m * u * p).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterRow {
    pub l: f64,
    pub m: f64,
    pub verdict: Verdict,
    pub spectral_radius: f64,
}

pub const RASTER_HEADER: &str = "l,m,verdict,spectral_radius";

/// Verdicts over a rectangular `(l, m)` grid, stored row-major with `l` as
/// the row index.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionRaster {
    pub l_values: Vec<f64>,
    pub m_values: Vec<f64>,
    pub cells: Vec<StabilityReport>,
}

impl RegionRaster {
    pub fn get(&self, li: usize, mi: usize) -> &StabilityReport {
        &self.cells[li * self.m_values.len() + mi]
    }

    pub fn rows(&self) -> Vec<RasterRow> {
        self.cells
            .iter()
            .map(|r| RasterRow {
                l: r.l,
                m: r.m,
                verdict: r.verdict,
                spectral_radius: r.spectral_radius,
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_records(&self.rows(), writer)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Vec<RasterRow>> {
        read_records(reader, RASTER_HEADER)
    }
}

fn grid_axis(name: &'static str, range: (f64, f64), step: f64) -> Result<Vec<f64>> {
    let (lo, hi) = range;
    if !lo.is_finite() || !hi.is_finite() || !(hi > lo) {
        return Err(Error::invalid(
            name,
            format!("degenerate range [{lo}, {hi}]"),
        ));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| lo + step * i as f64).collect())
}

/// Evaluates [`region_verdict`] on every grid point of `l_range × m_range`.
pub fn rasterize_region(
    l_range: (f64, f64),
    m_range: (f64, f64),
    step: f64,
) -> Result<RegionRaster> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::invalid(
            "step",
            format!("must be positive, got {step}"),
        ));
    }
    let l_values = grid_axis("l_range", l_range, step)?;
    let m_values = grid_axis("m_range", m_range, step)?;
    let rows = parallel::map_indexed(l_values.len(), |i| {
        let l = l_values[i];
        m_values
            .iter()
            .map(|&m| region_verdict(l, m))
            .collect::<Vec<_>>()
    });
    Ok(RegionRaster {
        cells: rows.into_iter().flatten().collect(),
        l_values,
        m_values,
    })
}
