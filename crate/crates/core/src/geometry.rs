//! Array geometry: tilt rotation, local/global transforms and the placement
//! constraints every movable-antenna configuration must satisfy.
//!
//! The local coordinate system (LCS) has its origin at the array centroid and
//! the nominal planar array lying in the y-z plane, so the boresight of an
//! untilted array points along +x. Mechanical tilt rotates the LCS about the
//! y axis; positive angles tilt the boresight toward the ground.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Largest mechanical tilt magnitude supported by the array mount (20 degrees).
pub const MAX_TILT: f64 = std::f64::consts::PI / 9.0;

/// Mechanical tilt in radians. Positive is downward, negative is upward.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct TiltAngle(f64);

impl TiltAngle {
    pub const ZERO: TiltAngle = TiltAngle(0.0);

    pub fn from_radians(beta: f64) -> Result<Self> {
        // Allow a few ulps of slack so that converted degree values land inside.
        if !beta.is_finite() || beta.abs() > MAX_TILT * (1.0 + 1e-12) {
            return Err(Error::Input(format!(
                "tilt {beta} rad outside [-{MAX_TILT}, {MAX_TILT}]"
            )));
        }
        Ok(TiltAngle(beta.clamp(-MAX_TILT, MAX_TILT)))
    }

    pub fn from_degrees(deg: f64) -> Result<Self> {
        Self::from_radians(deg.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }

    pub fn matrix(self) -> Matrix3<f64> {
        rotation_matrix(self.0)
    }
}

/// Rotation about the y axis by `beta` radians.
pub fn rotation_matrix(beta: f64) -> Matrix3<f64> {
    let (s, c) = beta.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Axis-aligned box in the LCS bounding where one element may move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovementRegion {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl MovementRegion {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        for axis in 0..3 {
            if !(min[axis].is_finite() && max[axis].is_finite()) || min[axis] > max[axis] {
                return Err(Error::Input(format!(
                    "movement region axis {axis}: [{}, {}] is not a valid interval",
                    min[axis], max[axis]
                )));
            }
        }
        Ok(Self { min, max })
    }

    /// Cube of edge `side` centred on `center`.
    pub fn cube(center: &Vec3, side: f64) -> Self {
        let h = side / 2.0;
        Self {
            min: [center.x - h, center.y - h, center.z - h],
            max: [center.x + h, center.y + h, center.z + h],
        }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.max[axis] - self.min[axis]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    OutsideRegion { element: usize },
    TooClose { first: usize, second: usize },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintReport {
    pub violations: Vec<Violation>,
}

impl ConstraintReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A movable-antenna array: nominal element positions, their movement
/// regions, the collision distance and the mechanical tilt of the mount.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayConfig {
    pub base_position: Vec3,
    pub local_positions: Vec<Vec3>,
    pub movement_regions: Vec<MovementRegion>,
    pub min_spacing: f64,
    pub tilt: TiltAngle,
}

impl ArrayConfig {
    pub fn new(
        base_position: Vec3,
        local_positions: Vec<Vec3>,
        movement_regions: Vec<MovementRegion>,
        min_spacing: f64,
        tilt: TiltAngle,
    ) -> Result<Self> {
        if local_positions.is_empty() {
            return Err(Error::Config("array needs at least one element".into()));
        }
        if !(min_spacing >= 0.0 && min_spacing.is_finite()) {
            return Err(Error::Config(format!(
                "min_spacing {min_spacing} must be >= 0"
            )));
        }
        if base_position.iter().any(|v| !v.is_finite())
            || local_positions
                .iter()
                .flat_map(|p| p.iter())
                .any(|v| !v.is_finite())
        {
            return Err(Error::Config("positions must be finite".into()));
        }
        let cfg = Self {
            base_position,
            local_positions,
            movement_regions,
            min_spacing,
            tilt,
        };
        let report = check_constraints(&cfg, &cfg.local_positions)?;
        if !report.is_feasible() {
            return Err(Error::Config(format!(
                "nominal placement violates constraints: {:?}",
                report.violations
            )));
        }
        Ok(cfg)
    }

    /// `rows` x `cols` uniform planar array in the LCS y-z plane, centred on
    /// the origin, each element free to move inside a cube of edge `movement`
    /// around its nominal slot.
    pub fn planar_grid(
        rows: usize,
        cols: usize,
        spacing: f64,
        movement: f64,
        min_spacing: f64,
        tilt: TiltAngle,
        base_position: Vec3,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Config("planar grid needs rows, cols >= 1".into()));
        }
        if !(spacing > 0.0 && movement >= 0.0) {
            return Err(Error::Config(format!(
                "spacing {spacing} must be > 0 and movement {movement} >= 0"
            )));
        }
        let y0 = (cols as f64 - 1.0) / 2.0;
        let z0 = (rows as f64 - 1.0) / 2.0;
        let positions: Vec<Vec3> = (0..rows)
            .flat_map(|r| {
                (0..cols).map(move |c| {
                    Vec3::new(0.0, (c as f64 - y0) * spacing, (r as f64 - z0) * spacing)
                })
            })
            .collect();
        let regions = positions
            .iter()
            .map(|p| MovementRegion::cube(p, movement))
            .collect();
        Self::new(base_position, positions, regions, min_spacing, tilt)
    }

    pub fn element_count(&self) -> usize {
        self.local_positions.len()
    }

    pub fn with_tilt(&self, tilt: TiltAngle) -> Self {
        Self {
            tilt,
            ..self.clone()
        }
    }

    /// GCS positions of `local` placed on this mount with the given tilt.
    pub fn globals_with_tilt(&self, local: &[Vec3], tilt: TiltAngle) -> Vec<Vec3> {
        let r = tilt.matrix();
        local.iter().map(|q| r * q + self.base_position).collect()
    }

    pub fn global_positions(&self) -> Vec<Vec3> {
        self.globals_with_tilt(&self.local_positions, self.tilt)
    }
}

pub fn to_global(cfg: &ArrayConfig, local: &Vec3) -> Vec3 {
    cfg.tilt.matrix() * local + cfg.base_position
}

pub fn to_local(cfg: &ArrayConfig, global: &Vec3) -> Vec3 {
    cfg.tilt.matrix().transpose() * (global - cfg.base_position)
}

/// Checks that every element of `candidate` is inside its movement region and
/// that all pairs keep at least `min_spacing` apart.
pub fn check_constraints(cfg: &ArrayConfig, candidate: &[Vec3]) -> Result<ConstraintReport> {
    if candidate.len() != cfg.movement_regions.len() {
        return Err(Error::Input(format!(
            "candidate has {} elements, array has {} movement regions",
            candidate.len(),
            cfg.movement_regions.len()
        )));
    }
    let mut violations = Vec::new();
    for (m, (p, region)) in candidate.iter().zip(&cfg.movement_regions).enumerate() {
        if !region.contains(p) {
            violations.push(Violation::OutsideRegion { element: m });
        }
    }
    for i in 0..candidate.len() {
        for j in i + 1..candidate.len() {
            if (candidate[i] - candidate[j]).norm() < cfg.min_spacing {
                violations.push(Violation::TooClose {
                    first: i,
                    second: j,
                });
            }
        }
    }
    Ok(ConstraintReport { violations })
}

/// Allocation-free pairwise spacing test used in the search hot loop.
pub fn spacing_ok(positions: &[Vec3], min_spacing: f64) -> bool {
    let d2 = min_spacing * min_spacing;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            if (positions[i] - positions[j]).norm_squared() < d2 {
                return false;
            }
        }
    }
    true
}
