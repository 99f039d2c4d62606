//! Benchmark set-ups as ready-made configurations.

use crate::config::{
    BoundaryConfig, FluidConfig, FluidsConfig, GridConfig, NumericsConfig, OutputConfig,
    ScenarioConfig, ShapesConfig, TensionConfig,
};
use crate::lattice::{AxisBoundary, BoundaryKind};
use crate::phase::{sigma_pair_for_angle, AxisName, ShapeSpec};
use crate::solver::TimeStep;

/// Angles of the contact-angle sweep with σ₁ = 1.
pub const SWEEP_ANGLES: [f64; 5] = [30.0, 45.0, 60.0, 90.0, 120.0];

const WATER: FluidConfig = FluidConfig {
    density_pg_per_um3: 1.0,
    viscosity_cp: 0.1,
};
const ATMOSPHERE_KPA: f64 = 100.0;
/// Wall-shear coefficient of the wetting benchmarks. Large enough that the
/// slip at the contact line is confined to a fraction of the wall band.
pub const BENCH_WALL_SHEAR: f64 = 100.0;

fn half_space(point: [f64; 3], normal: [f64; 3]) -> ShapeSpec {
    ShapeSpec::HalfSpace { point, normal }
}

fn cells(len: f64, a: f64) -> usize {
    (len / a).round() as usize
}

/// Nearest cell-centre plane to `x`. Wall surfaces are placed there so the
/// one-cell wall band falls inside a single layer of half-open cells rather
/// than splitting into two layers, one of them a thin sliver.
pub fn snap_to_centre(x: f64, a: f64) -> f64 {
    ((x / a - 0.5).round() + 0.5) * a
}

/// Liquid column in a rectangular cup (12 × 0.5 × 16 μm, walls 1 μm thick),
/// filled to z = 8 μm and open to 100 kPa at the top. The wetting angle is
/// 30°, so the free surface climbs the side walls and rings down.
pub fn meniscus(spacing: f64) -> ScenarioConfig {
    let ny = cells(0.5, spacing).max(2);
    let (x0, x1) = (snap_to_centre(1.0, spacing), snap_to_centre(11.0, spacing));
    let z0 = snap_to_centre(1.0, spacing);
    let wall = ShapeSpec::Union {
        shapes: vec![
            half_space([x0, 0.0, 0.0], [1.0, 0.0, 0.0]),
            half_space([x1, 0.0, 0.0], [-1.0, 0.0, 0.0]),
            half_space([0.0, 0.0, z0], [0.0, 0.0, 1.0]),
        ],
    };
    ScenarioConfig {
        grid: GridConfig {
            dims: [cells(12.0, spacing), ny, cells(16.0, spacing)],
            spacing_um: spacing,
            boundary: BoundaryConfig {
                x: AxisBoundary::SOLID,
                y: AxisBoundary::PERIODIC,
                z: AxisBoundary {
                    lo: BoundaryKind::Solid,
                    hi: BoundaryKind::FixedPressure {
                        pressure_kpa: ATMOSPHERE_KPA,
                    },
                },
            },
        },
        fluids: FluidsConfig {
            phase1: WATER,
            phase2: WATER,
        },
        tension: TensionConfig {
            proper_sigma_pg_per_us2: Some([0.0, 3.349, 46.651]),
            pair_sigma_pg_per_us2: None,
        },
        shapes: ShapesConfig {
            phase1: half_space([0.0, 0.0, z0 + 7.0], [0.0, 0.0, 1.0]),
            wall: Some(wall),
        },
        numerics: NumericsConfig {
            time_step: TimeStep::Auto {
                safety: 0.5,
                max_us: 0.001,
            },
            end_time_us: 20.0,
            wall_shear_coef: BENCH_WALL_SHEAR,
            ..NumericsConfig::default()
        },
        output: OutputConfig {
            cadence_us: 0.1,
            ..OutputConfig::default()
        },
    }
}

/// Half-cylindrical drop (radius 5 μm) resting on a flat wall in a
/// 30 × 14 μm section; σ₁ = 1 and σ₂ is chosen for the requested angle.
/// The y extent is `ny` cells.
pub fn contact_angle(angle_deg: f64, spacing: f64, ny: usize) -> ScenarioConfig {
    let sigma1 = 1.0;
    let sigma2 = sigma_pair_for_angle(sigma1, angle_deg);
    let zw = snap_to_centre(3.0, spacing);
    ScenarioConfig {
        grid: GridConfig {
            dims: [cells(30.0, spacing), ny, cells(14.0, spacing)],
            spacing_um: spacing,
            boundary: BoundaryConfig {
                x: AxisBoundary::both(BoundaryKind::Symmetry),
                y: AxisBoundary::PERIODIC,
                z: AxisBoundary {
                    lo: BoundaryKind::Solid,
                    hi: BoundaryKind::FixedPressure {
                        pressure_kpa: ATMOSPHERE_KPA,
                    },
                },
            },
        },
        fluids: FluidsConfig {
            phase1: WATER,
            phase2: WATER,
        },
        tension: TensionConfig {
            proper_sigma_pg_per_us2: Some([0.0, sigma1, sigma2]),
            pair_sigma_pg_per_us2: None,
        },
        shapes: ShapesConfig {
            phase1: ShapeSpec::Cylinder {
                center: [15.0, 0.0, zw],
                radius: 5.0,
                axis: AxisName::Y,
            },
            wall: Some(half_space([0.0, 0.0, zw], [0.0, 0.0, 1.0])),
        },
        numerics: NumericsConfig {
            time_step: TimeStep::Auto {
                safety: 0.5,
                max_us: 0.02,
            },
            end_time_us: 40.0,
            wall_shear_coef: BENCH_WALL_SHEAR,
            ..NumericsConfig::default()
        },
        output: OutputConfig {
            cadence_us: 1.0,
            ..OutputConfig::default()
        },
    }
}

/// Wall-free cylindrical drop of radius `radius` (μm) centred in a periodic
/// square box of side `4·radius`; `ny` cells along the axis.
pub fn laplace_cylinder(radius: f64, spacing: f64, sigma: f64, ny: usize) -> ScenarioConfig {
    let n = cells(4.0 * radius, spacing);
    let c = 0.5 * n as f64 * spacing;
    ScenarioConfig {
        grid: GridConfig {
            dims: [n, ny, n],
            spacing_um: spacing,
            boundary: BoundaryConfig {
                x: AxisBoundary::PERIODIC,
                y: AxisBoundary::PERIODIC,
                z: AxisBoundary::PERIODIC,
            },
        },
        fluids: FluidsConfig {
            phase1: WATER,
            phase2: WATER,
        },
        tension: TensionConfig {
            proper_sigma_pg_per_us2: Some([0.0, 0.5 * sigma, 0.5 * sigma]),
            pair_sigma_pg_per_us2: None,
        },
        shapes: ShapesConfig {
            phase1: ShapeSpec::Cylinder {
                center: [c, 0.0, c],
                radius,
                axis: AxisName::Y,
            },
            wall: None,
        },
        numerics: NumericsConfig {
            time_step: TimeStep::Auto {
                safety: 0.5,
                max_us: 0.1,
            },
            end_time_us: 1.0,
            ..NumericsConfig::default()
        },
        output: OutputConfig::default(),
    }
}
