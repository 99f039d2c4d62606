//! Colour functions with finite-width intermediate bands, mixture
//! properties, proper surface-tension coefficients and VOF wall fields.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::PhaseError;
use crate::lattice::{Axis, CellField, CellTag, FaceField, FaceTag, Grid};

/// Subcell samples per axis used for volume and face-area integration.
pub const SUBSAMPLES: usize = 4;

/// Analytic region descriptor; coordinates in μm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ShapeSpec {
    Box {
        min: [f64; 3],
        max: [f64; 3],
    },
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    /// Infinite circular cylinder whose axis passes through `center` along `axis`.
    Cylinder {
        center: [f64; 3],
        radius: f64,
        axis: AxisName,
    },
    /// Points with `(x - point)·normal < 0`.
    HalfSpace {
        point: [f64; 3],
        normal: [f64; 3],
    },
    Union {
        shapes: Vec<ShapeSpec>,
    },
    Intersection {
        shapes: Vec<ShapeSpec>,
    },
    Complement {
        shape: Box<ShapeSpec>,
    },
    Everywhere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisName {
    X,
    Y,
    Z,
}

impl From<AxisName> for Axis {
    fn from(a: AxisName) -> Axis {
        match a {
            AxisName::X => Axis::X,
            AxisName::Y => Axis::Y,
            AxisName::Z => Axis::Z,
        }
    }
}

impl ShapeSpec {
    /// Signed distance (negative inside). Exact for primitives; unions and
    /// intersections use min/max, which is exact near isolated surfaces.
    pub fn signed_distance(&self, p: [f64; 3]) -> f64 {
        match self {
            ShapeSpec::Box { min, max } => {
                let mut outside = 0.0;
                let mut inside = f64::NEG_INFINITY;
                for d in 0..3 {
                    let c = 0.5 * (min[d] + max[d]);
                    let h = 0.5 * (max[d] - min[d]);
                    let q = (p[d] - c).abs() - h;
                    outside += q.max(0.0).powi(2);
                    inside = inside.max(q);
                }
                outside.sqrt() + inside.min(0.0)
            }
            ShapeSpec::Sphere { center, radius } => {
                let r2: f64 = (0..3).map(|d| (p[d] - center[d]).powi(2)).sum();
                r2.sqrt() - radius
            }
            ShapeSpec::Cylinder {
                center,
                radius,
                axis,
            } => {
                let ax = Axis::from(*axis).index();
                let r2: f64 = (0..3)
                    .filter(|&d| d != ax)
                    .map(|d| (p[d] - center[d]).powi(2))
                    .sum();
                r2.sqrt() - radius
            }
            ShapeSpec::HalfSpace { point, normal } => {
                let len = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
                (0..3).map(|d| (p[d] - point[d]) * normal[d]).sum::<f64>() / len
            }
            ShapeSpec::Union { shapes } => shapes
                .iter()
                .map(|s| s.signed_distance(p))
                .fold(f64::INFINITY, f64::min),
            ShapeSpec::Intersection { shapes } => shapes
                .iter()
                .map(|s| s.signed_distance(p))
                .fold(f64::NEG_INFINITY, f64::max),
            ShapeSpec::Complement { shape } => -shape.signed_distance(p),
            ShapeSpec::Everywhere => f64::NEG_INFINITY,
        }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        self.signed_distance(p) < 0.0
    }
}

/// Monotone ramp from 1 (inside) to 0 (outside) across a band of `width`
/// centred on the surface.
#[inline]
fn ramp(distance: f64, width: f64) -> f64 {
    (0.5 - distance / width).clamp(0.0, 1.0)
}

fn check_band(width: f64, grid: &Grid) -> Result<(), PhaseError> {
    if width < grid.spacing() * (1.0 - 1e-12) {
        return Err(PhaseError::BandTooNarrow {
            width,
            spacing: grid.spacing(),
        });
    }
    Ok(())
}

fn sample_cell(grid: &Grid, c: [usize; 3], mut f: impl FnMut([f64; 3]) -> f64) -> f64 {
    let a = grid.spacing();
    let k = SUBSAMPLES;
    let base = [c[0] as f64 * a, c[1] as f64 * a, c[2] as f64 * a];
    let mut sum = 0.0;
    for sz in 0..k {
        for sy in 0..k {
            for sx in 0..k {
                let p = [
                    base[0] + (sx as f64 + 0.5) / k as f64 * a,
                    base[1] + (sy as f64 + 0.5) / k as f64 * a,
                    base[2] + (sz as f64 + 0.5) / k as f64 * a,
                ];
                sum += f(p);
            }
        }
    }
    sum / (k * k * k) as f64
}

fn sample_face(
    grid: &Grid,
    axis: Axis,
    face: [usize; 3],
    mut f: impl FnMut([f64; 3]) -> f64,
) -> f64 {
    let a = grid.spacing();
    let k = SUBSAMPLES;
    let ax = axis.index();
    let (t1, t2) = ((ax + 1) % 3, (ax + 2) % 3);
    let mut sum = 0.0;
    for s2 in 0..k {
        for s1 in 0..k {
            let mut p = [face[0] as f64 * a, face[1] as f64 * a, face[2] as f64 * a];
            p[t1] += (s1 as f64 + 0.5) / k as f64 * a;
            p[t2] += (s2 as f64 + 0.5) / k as f64 * a;
            sum += f(p);
        }
    }
    sum / (k * k) as f64
}

/// Colour function of `shape` with an intermediate band of width `width` (μm).
pub fn init_color_from_shape(
    shape: &ShapeSpec,
    grid: &Grid,
    width: f64,
) -> Result<CellField, PhaseError> {
    check_band(width, grid)?;
    Ok(CellField::from_fn(grid, CellTag::Color, |c| {
        sample_cell(grid, c, |p| ramp(shape.signed_distance(p), width))
    }))
}

/// N colour functions with their physical parameters.
///
/// Densities in pg/μm³, viscosities in cp (= pg/(μm·μs)), tensions in pg/μs².
#[derive(Debug, Clone)]
pub struct PhaseSet {
    pub colors: Vec<CellField>,
    pub densities: Vec<f64>,
    pub viscosities: Vec<f64>,
    pub tension: Vec<Vec<f64>>,
}

impl PhaseSet {
    pub fn new(
        colors: Vec<CellField>,
        densities: Vec<f64>,
        viscosities: Vec<f64>,
        tension: Vec<Vec<f64>>,
    ) -> Result<Self, PhaseError> {
        let n = colors.len();
        if n < 2 {
            return Err(PhaseError::TooFewPhases(n));
        }
        let len = colors[0].len();
        for c in &colors {
            if c.len() != len {
                return Err(PhaseError::LengthMismatch {
                    expected: len,
                    got: c.len(),
                });
            }
        }
        if densities.len() != n || viscosities.len() != n || tension.len() != n {
            return Err(PhaseError::LengthMismatch {
                expected: n,
                got: densities.len().min(viscosities.len()).min(tension.len()),
            });
        }
        for a in 0..n {
            if tension[a].len() != n {
                return Err(PhaseError::LengthMismatch {
                    expected: n,
                    got: tension[a].len(),
                });
            }
            for b in 0..n {
                if tension[a][b] != tension[b][a] {
                    return Err(PhaseError::AsymmetricTension(a, b));
                }
                if tension[a][b] < 0.0 {
                    return Err(PhaseError::NegativeTension(a, b));
                }
            }
        }
        Ok(PhaseSet {
            colors,
            densities,
            viscosities,
            tension,
        })
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }
}

/// Largest deviation of `Σ_a ξ_a` from one over all cells.
pub fn partition_residual(phases: &PhaseSet) -> f64 {
    let n = phases.colors.first().map_or(0, |c| c.len());
    (0..n)
        .map(|i| {
            let s: f64 = phases.colors.iter().map(|c| c.values[i]).sum();
            (s - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// `ρ = V(ρ₁ f + ρ₂ (1 − f))`; zero in solid cells.
pub fn mix_density(f: &CellField, volume: &CellField, rho1: f64, rho2: f64) -> CellField {
    CellField {
        values: f
            .values
            .iter()
            .zip(&volume.values)
            .map(|(&f, &v)| v * (rho1 * f + rho2 * (1.0 - f)))
            .collect(),
        tag: CellTag::Density,
    }
}

/// `η = η₁ ξ₁ + η₂ ξ₂`.
pub fn mix_viscosity(xi1: &CellField, xi2: &CellField, eta1: f64, eta2: f64) -> CellField {
    CellField {
        values: xi1
            .values
            .iter()
            .zip(&xi2.values)
            .map(|(&a, &b)| eta1 * a + eta2 * b)
            .collect(),
        tag: CellTag::Viscosity,
    }
}

/// Per-phase coefficients `σ_a` with `σ_ab = σ_a + σ_b` for three phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProperSigma {
    pub sigma: [f64; 3],
}

impl ProperSigma {
    pub fn has_negative(&self) -> bool {
        self.sigma.iter().any(|&s| s < 0.0)
    }

    /// Pair coefficient reconstructed from the proper coefficients.
    pub fn pair(&self, a: usize, b: usize) -> f64 {
        self.sigma[a] + self.sigma[b]
    }

    /// Equilibrium contact angle of phase 1 on the phase-0 wall, in degrees.
    pub fn contact_angle_deg(&self) -> f64 {
        let (s1, s2) = (self.sigma[1], self.sigma[2]);
        ((s2 - s1) / (s2 + s1)).clamp(-1.0, 1.0).acos().to_degrees()
    }
}

/// Solve `σ_ab = σ_a + σ_b` for the three proper coefficients.
pub fn proper_sigma(s01: f64, s02: f64, s12: f64) -> ProperSigma {
    let p = ProperSigma {
        sigma: [
            0.5 * (s01 + s02 - s12),
            0.5 * (s01 + s12 - s02),
            0.5 * (s02 + s12 - s01),
        ],
    };
    if p.has_negative() {
        warn!(
            "negative proper surface tension coefficient: ({:.4}, {:.4}, {:.4})",
            p.sigma[0], p.sigma[1], p.sigma[2]
        );
    }
    p
}

/// Proper coefficients `(σ₁, σ₂)` that put the equilibrium contact angle of
/// phase 1 at `angle_deg`, with `σ₁` fixed.
pub fn sigma_pair_for_angle(sigma1: f64, angle_deg: f64) -> f64 {
    let c = angle_deg.to_radians().cos();
    sigma1 * (1.0 + c) / (1.0 - c)
}

/// Static wall described in VOF terms.
#[derive(Debug, Clone)]
pub struct WallGeometry {
    /// Wall colour function ξ₀.
    pub xi0: CellField,
    /// Fluid volume fraction `V = 1 − ξ₀`.
    pub volume: CellField,
    /// Open-area fraction of every face.
    pub area: FaceField,
    /// Signed distance to the wall surface (positive in the fluid), clamped to ±ε₀.
    pub q0: CellField,
    /// Unclamped signed wall distance; `+∞`-like when there is no wall.
    pub distance: CellField,
    /// Band width of the wall intermediate region (μm).
    pub eps0: f64,
    pub present: bool,
}

impl WallGeometry {
    /// No wall: `V ≡ 1`, `A ≡ 1`.
    pub fn none(grid: &Grid) -> Self {
        let far = 1e30;
        WallGeometry {
            xi0: CellField::zeros(grid, CellTag::Color),
            volume: CellField::constant(grid, 1.0, CellTag::Fraction),
            area: FaceField::constant(grid, [1.0; 3], FaceTag::AreaFraction),
            q0: CellField::constant(grid, grid.spacing(), CellTag::Other),
            distance: CellField::constant(grid, far, CellTag::Other),
            eps0: grid.spacing(),
            present: false,
        }
    }

    pub fn is_fluid(&self, idx: usize) -> bool {
        self.volume.values[idx] > 0.0
    }

    /// True when every cell touching a solid domain side is fully walled.
    pub fn covers_solid_sides(&self, grid: &Grid) -> bool {
        use crate::lattice::BoundaryKind;
        for axis in Axis::ALL {
            let b = grid.boundary(axis);
            for (hi, kind) in [(false, b.lo), (true, b.hi)] {
                if kind != BoundaryKind::Solid {
                    continue;
                }
                let layer = if hi { grid.dims()[axis.index()] - 1 } else { 0 };
                for idx in 0..grid.n_cells() {
                    let c = grid.cell_coords(idx);
                    if c[axis.index()] == layer && self.volume.values[idx] > 0.0 {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// VOF fields of a static wall with intermediate band width `eps0` (μm).
pub fn wall_fractions(
    wall: &ShapeSpec,
    grid: &Grid,
    eps0: f64,
) -> Result<WallGeometry, PhaseError> {
    check_band(eps0, grid)?;
    // fluid-side ramp: 1 in the fluid, 0 inside the wall
    let fluid = |p: [f64; 3]| 1.0 - ramp(wall.signed_distance(p), eps0);
    let volume = CellField::from_fn(grid, CellTag::Fraction, |c| sample_cell(grid, c, fluid));
    if volume.values.iter().all(|&v| v == 0.0) {
        return Err(PhaseError::WallCoversDomain);
    }
    let mut area = FaceField::from_fn(grid, FaceTag::AreaFraction, |axis, f| {
        sample_face(grid, axis, f, fluid)
    });
    for axis in Axis::ALL {
        let comp = area.get_mut(axis);
        for (idx, slot) in comp.iter_mut().enumerate() {
            let f = grid.face_coords(axis, idx);
            let (lo, hi) = grid.face_cells(axis, f);
            let vs: Vec<f64> = [lo, hi]
                .into_iter()
                .flatten()
                .map(|c| volume.at(grid, c))
                .collect();
            if vs.iter().any(|&v| v == 0.0) {
                *slot = 0.0;
            } else if vs.len() == 2 && vs.iter().all(|&v| v == 1.0) {
                *slot = 1.0;
            }
        }
    }
    let distance = CellField::from_fn(grid, CellTag::Other, |c| {
        wall.signed_distance(grid.cell_center(c)).min(1e30)
    });
    let q0 = CellField {
        values: distance
            .values
            .iter()
            .map(|d| d.clamp(-eps0, eps0))
            .collect(),
        tag: CellTag::Other,
    };
    let xi0 = CellField {
        values: volume.values.iter().map(|v| 1.0 - v).collect(),
        tag: CellTag::Color,
    };
    Ok(WallGeometry {
        xi0,
        volume,
        area,
        q0,
        distance,
        eps0,
        present: true,
    })
}

/// Colour functions of the wall-bounded two-fluid system, `ξ₀ = 1 − V`,
/// `ξ₁ = V f`, `ξ₂ = V(1 − f)`; the partition of unity holds by construction.
pub fn wall_phase_colors(f: &CellField, wall: &WallGeometry) -> [CellField; 3] {
    let xi1 = CellField {
        values: f
            .values
            .iter()
            .zip(&wall.volume.values)
            .map(|(f, v)| v * f)
            .collect(),
        tag: CellTag::Color,
    };
    let xi2 = CellField {
        values: f
            .values
            .iter()
            .zip(&wall.volume.values)
            .map(|(f, v)| v * (1.0 - f))
            .collect(),
        tag: CellTag::Color,
    };
    [wall.xi0.clone(), xi1, xi2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{AxisBoundary, BoundaryKind};
    use proptest::prelude::*;

    fn example1_grid() -> Grid {
        Grid::new(
            [96, 4, 128],
            0.125,
            [
                AxisBoundary::SOLID,
                AxisBoundary::PERIODIC,
                AxisBoundary {
                    lo: BoundaryKind::Solid,
                    hi: BoundaryKind::FixedPressure {
                        pressure_kpa: 100.0,
                    },
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn half_space_one_cell_ramp() {
        let g = example1_grid();
        let shape = ShapeSpec::HalfSpace {
            point: [0.0, 0.0, 7.0],
            normal: [0.0, 0.0, 1.0],
        };
        let xi = init_color_from_shape(&shape, &g, g.spacing()).unwrap();
        for k in 0..g.nz() {
            let v = xi.at(&g, [10, 1, k]);
            let z = (k as f64 + 0.5) * g.spacing();
            if z < 7.0 - g.spacing() {
                assert_eq!(v, 1.0);
            } else if z > 7.0 + g.spacing() {
                assert_eq!(v, 0.0);
            } else {
                assert!(v > 0.0 && v < 1.0);
            }
        }
        let band = (0..g.nz()).filter(|&k| {
            let v = xi.at(&g, [10, 1, k]);
            v > 0.05 && v < 0.95
        });
        assert!(band.count() <= 2);
    }

    #[test]
    fn narrow_band_is_rejected() {
        let g = Grid::periodic([4, 4, 4], 1.0).unwrap();
        assert!(matches!(
            init_color_from_shape(&ShapeSpec::Everywhere, &g, 0.5),
            Err(PhaseError::BandTooNarrow { .. })
        ));
        let all = init_color_from_shape(&ShapeSpec::Everywhere, &g, 1.0).unwrap();
        assert!(all.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn sphere_volume_within_one_percent() {
        let a = 0.125;
        let n = 40;
        let g = Grid::periodic([n, n, n], a).unwrap();
        let r = 16.0 * a;
        let c = 0.5 * n as f64 * a;
        let xi = init_color_from_shape(
            &ShapeSpec::Sphere {
                center: [c, c, c],
                radius: r,
            },
            &g,
            2.0 * a,
        )
        .unwrap();
        let vol: f64 = xi.values.iter().sum::<f64>() * g.cell_volume();
        let exact = 4.0 / 3.0 * std::f64::consts::PI * r.powi(3);
        assert!((vol - exact).abs() / exact < 0.01, "{vol} vs {exact}");
    }

    #[test]
    fn partition_residual_detects_corruption() {
        let g = Grid::periodic([4, 4, 4], 1.0).unwrap();
        let f = init_color_from_shape(
            &ShapeSpec::Sphere {
                center: [2.0; 3],
                radius: 1.3,
            },
            &g,
            1.0,
        )
        .unwrap();
        let wall = wall_fractions(
            &ShapeSpec::HalfSpace {
                point: [0.0, 0.0, 1.0],
                normal: [0.0, 0.0, -1.0],
            },
            &g,
            1.0,
        )
        .unwrap();
        let colors = wall_phase_colors(&f, &wall).to_vec();
        let mut set = PhaseSet::new(
            colors,
            vec![0.0, 1.0, 1.0],
            vec![0.0, 0.1, 0.1],
            vec![vec![0.0; 3]; 3],
        )
        .unwrap();
        assert!(partition_residual(&set) <= 1e-12);
        set.colors[1].values[5] += 0.25;
        assert!((partition_residual(&set) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn mixture_examples() {
        let g = Grid::periodic([2, 2, 2], 1.0).unwrap();
        let one = CellField::constant(&g, 1.0, CellTag::Fraction);
        let half = CellField::constant(&g, 0.5, CellTag::Fraction);
        let zero = CellField::zeros(&g, CellTag::Fraction);
        assert_eq!(mix_density(&one, &one, 2.0, 3.0).values[0], 2.0);
        assert_eq!(mix_density(&half, &one, 1.0, 1.0).values[0], 1.0);
        assert_eq!(mix_density(&half, &zero, 1.0, 1.0).values[0], 0.0);
        assert_eq!(mix_viscosity(&one, &zero, 0.3, 0.7).values[0], 0.3);
        assert!((mix_viscosity(&half, &half, 0.1, 0.1).values[0] - 0.1).abs() < 1e-15);
        assert_eq!(mix_viscosity(&zero, &zero, 0.1, 0.1).values[0], 0.0);
    }

    #[test]
    fn proper_sigma_examples() {
        assert_eq!(proper_sigma(4.0, 5.0, 3.0).sigma, [3.0, 1.0, 2.0]);
        let p = ProperSigma {
            sigma: [0.0, 3.349, 46.651],
        };
        assert!((p.pair(1, 2) - 50.0).abs() < 1e-12);
        assert!((p.contact_angle_deg() - 30.0).abs() < 0.01);
        let neg = proper_sigma(1.0, 1.0, 3.0);
        assert_eq!(neg.sigma[0], -0.5);
        assert!(neg.has_negative());
    }

    #[test]
    fn sigma_pairs_for_reference_angles() {
        for (angle, s2) in [
            (30.0, 13.9282),
            (45.0, 5.8284),
            (60.0, 3.0),
            (90.0, 1.0),
            (120.0, 0.3333),
        ] {
            assert!(
                (sigma_pair_for_angle(1.0, angle) - s2).abs() < 1e-4,
                "{angle}"
            );
        }
    }

    #[test]
    fn flat_wall_layer() {
        let g = Grid::new(
            [8, 4, 40],
            0.125,
            [
                AxisBoundary::PERIODIC,
                AxisBoundary::PERIODIC,
                AxisBoundary::SOLID,
            ],
        )
        .unwrap();
        let wall = ShapeSpec::HalfSpace {
            point: [0.0, 0.0, 3.0],
            normal: [0.0, 0.0, 1.0],
        };
        let w = wall_fractions(&wall, &g, g.spacing()).unwrap();
        let a = g.spacing();
        for k in 0..g.nz() {
            let z = (k as f64 + 0.5) * a;
            let v = w.volume.at(&g, [0, 0, k]);
            if z < 3.0 - a {
                assert_eq!(v, 0.0);
            } else if z > 3.0 + a {
                assert_eq!(v, 1.0);
            }
        }
        let transitional = (0..g.nz())
            .filter(|&k| {
                let v = w.volume.at(&g, [0, 0, k]);
                v > 0.0 && v < 1.0
            })
            .count();
        assert!(transitional <= 2);
        // faces of closed cells are closed
        for idx in 0..g.n_cells() {
            if w.volume.values[idx] == 0.0 {
                let c = g.cell_coords(idx);
                for axis in Axis::ALL {
                    assert_eq!(w.area.at(&g, axis, g.lo_face(c, axis)), 0.0);
                    assert_eq!(w.area.at(&g, axis, g.hi_face(c, axis)), 0.0);
                }
            }
        }
        assert!(w.covers_solid_sides(&g) == false);
    }

    #[test]
    fn no_wall_and_full_wall() {
        let g = Grid::periodic([4, 4, 4], 1.0).unwrap();
        let w = WallGeometry::none(&g);
        assert!(w.volume.values.iter().all(|&v| v == 1.0));
        assert!(w.area.comp.iter().flatten().all(|&v| v == 1.0));
        assert!(matches!(
            wall_fractions(&ShapeSpec::Everywhere, &g, 1.0),
            Err(PhaseError::WallCoversDomain)
        ));
    }

    #[test]
    fn half_blocked_face_area() {
        // wall plane x < 2 cuts the y-faces through their centres
        let g = Grid::periodic([4, 4, 4], 1.0).unwrap();
        let wall = ShapeSpec::HalfSpace {
            point: [1.5, 0.0, 0.0],
            normal: [1.0, 0.0, 0.0],
        };
        let w = wall_fractions(&wall, &g, 1.0).unwrap();
        let a = w.area.at(&g, Axis::Y, [1, 2, 2]);
        assert!((a - 0.5).abs() < 1e-12, "{a}");
    }

    proptest! {
        #[test]
        fn proper_sigma_round_trip(s01 in 0.0..50.0f64, s02 in 0.0..50.0f64, s12 in 0.0..50.0f64) {
            let p = proper_sigma(s01, s02, s12);
            prop_assert!((p.pair(0, 1) - s01).abs() <= 1e-12 * (1.0 + s01.abs()));
            prop_assert!((p.pair(0, 2) - s02).abs() <= 1e-12 * (1.0 + s02.abs()));
            prop_assert!((p.pair(1, 2) - s12).abs() <= 1e-12 * (1.0 + s12.abs()));
        }

        #[test]
        fn color_is_monotone_across_a_tilted_plane(nx in -1.0..1.0f64, nz in 0.2..1.0f64, off in 1.5..2.5f64, width in 1.0..3.0f64) {
            let g = Grid::periodic([8, 2, 8], 0.5).unwrap();
            let normal = [nx, 0.0, nz];
            let shape = ShapeSpec::HalfSpace { point: [2.0, 0.0, off], normal };
            let xi = init_color_from_shape(&shape, &g, width * g.spacing()).unwrap();
            // walk along +z (which has a positive outward component): never increasing
            for i in 0..8 {
                for k in 1..8 {
                    prop_assert!(xi.at(&g, [i, 0, k]) <= xi.at(&g, [i, 0, k - 1]) + 1e-12);
                }
            }
        }

        #[test]
        fn band_spans_at_most_ceil_width_plus_one(off in 3.0..5.0f64, width_cells in 1.0..3.0f64) {
            let g = Grid::periodic([2, 2, 32], 0.25).unwrap();
            let width = width_cells * g.spacing();
            let shape = ShapeSpec::HalfSpace { point: [0.0, 0.0, off], normal: [0.0, 0.0, 1.0] };
            let xi = init_color_from_shape(&shape, &g, width).unwrap();
            let n = (0..32).filter(|&k| { let v = xi.at(&g, [0, 0, k]); v > 0.05 && v < 0.95 }).count();
            prop_assert!(n <= width_cells.ceil() as usize + 1, "n = {}", n);
        }

        #[test]
        fn complementary_shapes_partition_unity(r in 0.5..1.8f64) {
            let g = Grid::periodic([6, 6, 6], 1.0).unwrap();
            let s = ShapeSpec::Sphere { center: [3.0; 3], radius: r };
            let c = ShapeSpec::Complement { shape: Box::new(s.clone()) };
            let a = init_color_from_shape(&s, &g, 1.0).unwrap();
            let b = init_color_from_shape(&c, &g, 1.0).unwrap();
            let set = PhaseSet::new(vec![a, b], vec![1.0; 2], vec![0.1; 2], vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
            prop_assert!(partition_residual(&set) <= 1e-12);
        }
    }
}
