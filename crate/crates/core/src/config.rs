//! Scenario configuration: a TOML document with explicit units in the key
//! names (μm, μs, pg, cp, kPa).
//!
//! ```toml
//! [grid]
//! dims = [48, 4, 64]
//! spacing_um = 0.25
//! boundary.x = { lo = { kind = "solid" }, hi = { kind = "solid" } }
//! boundary.y = { lo = { kind = "periodic" }, hi = { kind = "periodic" } }
//! boundary.z = { lo = { kind = "solid" }, hi = { kind = "fixed-pressure", pressure_kpa = 100.0 } }
//!
//! [fluids]
//! phase1 = { density_pg_per_um3 = 1.0, viscosity_cp = 0.1 }
//! phase2 = { density_pg_per_um3 = 1.0, viscosity_cp = 0.1 }
//!
//! [tension]
//! proper_sigma_pg_per_us2 = [0.0, 3.349, 46.651]
//!
//! [shapes]
//! phase1 = { type = "box", min = [-1.0, -1.0, -1.0], max = [13.0, 2.0, 8.0] }
//! wall = { type = "half-space", point = [0.0, 0.0, 1.0], normal = [0.0, 0.0, 1.0] }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::capillary::{CapillaryParams, Formulation};
use crate::error::ConfigError;
use crate::forces::ForceParams;
use crate::lattice::{AxisBoundary, Grid};
use crate::phase::{init_color_from_shape, wall_fractions, ShapeSpec, WallGeometry};
use crate::pressure::{PcgConfig, Preconditioner};
use crate::solver::{Fluid, RunConfig, SimState, TimeStep};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridConfig,
    pub fluids: FluidsConfig,
    pub tension: TensionConfig,
    pub shapes: ShapesConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dims: [usize; 3],
    pub spacing_um: f64,
    pub boundary: BoundaryConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub x: AxisBoundary,
    pub y: AxisBoundary,
    pub z: AxisBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidConfig {
    pub density_pg_per_um3: f64,
    pub viscosity_cp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidsConfig {
    pub phase1: FluidConfig,
    pub phase2: FluidConfig,
}

/// Either the proper coefficients `[σ₀, σ₁, σ₂]` or the pair matrix over
/// `[wall, phase 1, phase 2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TensionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proper_sigma_pg_per_us2: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_sigma_pg_per_us2: Option<[[f64; 3]; 3]>,
}

impl TensionConfig {
    pub fn matrix(&self) -> Option<[[f64; 3]; 3]> {
        if let Some(m) = self.pair_sigma_pg_per_us2 {
            return Some(m);
        }
        let s = self.proper_sigma_pg_per_us2?;
        let mut m = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    m[a][b] = s[a] + s[b];
                }
            }
        }
        Some(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapesConfig {
    /// Region initially filled by phase 1; phase 2 fills the rest.
    pub phase1: ShapeSpec,
    /// Static wall (phase 0); omit for wall-free problems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall: Option<ShapeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub time_step: TimeStep,
    pub end_time_us: f64,
    pub pcg_tol: f64,
    pub pcg_max_iter: usize,
    pub preconditioner: Preconditioner,
    /// Fluid–fluid band width ε₁₂; defaults to one cell.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interface_width_um: Option<f64>,
    /// Wall band width ε₀; defaults to one cell.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_width_um: Option<f64>,
    pub wall_shear_coef: f64,
    pub formulation: Formulation,
    pub capillary: bool,
    pub viscous: bool,
    pub wall_shear: bool,
    pub energy_monitor: bool,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            time_step: TimeStep::Auto {
                safety: 0.5,
                max_us: 0.01,
            },
            end_time_us: 1.0,
            pcg_tol: 1e-8,
            pcg_max_iter: 5000,
            preconditioner: Preconditioner::Jacobi,
            interface_width_um: None,
            wall_width_um: None,
            wall_shear_coef: 1.0,
            formulation: Formulation::WallSymmetric,
            capillary: true,
            viscous: true,
            wall_shear: true,
            energy_monitor: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub cadence_us: f64,
    pub directory: PathBuf,
    /// Write a snapshot every n-th diagnostic row (0 = never).
    pub snapshot_every: u64,
    /// Write a checkpoint every n-th diagnostic row (0 = never).
    pub checkpoint_every: u64,
    pub reproducible: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            cadence_us: 0.1,
            directory: PathBuf::from("out"),
            snapshot_every: 10,
            checkpoint_every: 0,
            reproducible: false,
        }
    }
}

const REQUIRED: [&str; 4] = ["grid", "fluids", "tension", "shapes"];

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

impl ScenarioConfig {
    /// Parse and validate a TOML document.
    pub fn from_toml(src: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = src
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Parse {
                line: e.span().map(|s| line_of(src, s.start)),
                message: e.message().to_string(),
            })?;
        let missing: Vec<String> = REQUIRED
            .iter()
            .filter(|k| !table.contains_key(**k))
            .map(|k| format!("missing required block [{k}]"))
            .collect();
        if !missing.is_empty() {
            return Err(ConfigError::Invalid(missing));
        }
        let cfg: ScenarioConfig = toml::from_str(src).map_err(|e| ConfigError::Parse {
            line: e.span().map(|s| line_of(src, s.start)),
            message: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path)?;
        Self::from_toml(&src)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    /// SHA-256 of the canonical serialisation.
    pub fn hash(&self) -> [u8; 32] {
        Sha256::digest(self.to_toml().as_bytes()).into()
    }

    /// Every semantic problem, reported together.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let g = &self.grid;
        for (d, &n) in g.dims.iter().enumerate() {
            if n < 2 {
                errs.push(format!("grid.dims[{d}] = {n}: need at least 2 cells"));
            }
        }
        if !(g.spacing_um > 0.0 && g.spacing_um.is_finite()) {
            errs.push(format!(
                "grid.spacing_um = {} must be positive",
                g.spacing_um
            ));
        }
        for (name, b) in [
            ("x", g.boundary.x),
            ("y", g.boundary.y),
            ("z", g.boundary.z),
        ] {
            use crate::lattice::BoundaryKind::Periodic;
            if matches!(b.lo, Periodic) != matches!(b.hi, Periodic) {
                errs.push(format!(
                    "grid.boundary.{name}: periodic must be set on both sides"
                ));
            }
        }
        for (name, f) in [
            ("phase1", self.fluids.phase1),
            ("phase2", self.fluids.phase2),
        ] {
            if !(f.density_pg_per_um3 > 0.0) {
                errs.push(format!("fluids.{name}.density_pg_per_um3 must be positive"));
            }
            if !(f.viscosity_cp >= 0.0) {
                errs.push(format!("fluids.{name}.viscosity_cp must be non-negative"));
            }
        }
        let t = &self.tension;
        match (t.proper_sigma_pg_per_us2, t.pair_sigma_pg_per_us2) {
            (None, None) => {
                errs.push("tension: give proper_sigma_pg_per_us2 or pair_sigma_pg_per_us2".into())
            }
            (Some(_), Some(_)) => errs.push(
                "tension: give only one of proper_sigma_pg_per_us2 and pair_sigma_pg_per_us2"
                    .into(),
            ),
            (Some(s), None) => {
                if s.iter().any(|v| !(v.is_finite())) {
                    errs.push("tension.proper_sigma_pg_per_us2 must be finite".into());
                }
            }
            (None, Some(m)) => {
                for a in 0..3 {
                    for b in 0..3 {
                        if m[a][b] != m[b][a] {
                            errs.push(format!(
                                "tension.pair_sigma_pg_per_us2 is not symmetric at ({a}, {b})"
                            ));
                        }
                        if m[a][b] < 0.0 {
                            errs.push(format!(
                                "tension.pair_sigma_pg_per_us2[{a}][{b}] is negative"
                            ));
                        }
                    }
                }
            }
        }
        if let Some(m) = t.matrix() {
            for a in 0..3 {
                for b in a + 1..3 {
                    if m[a][b] < 0.0 {
                        errs.push(format!("pair tension σ{a}{b} = {} is negative", m[a][b]));
                    }
                }
            }
        }
        let n = &self.numerics;
        match n.time_step {
            TimeStep::Fixed { dt_us } if !(dt_us > 0.0) => {
                errs.push("numerics.time_step.dt_us must be positive".into())
            }
            TimeStep::Auto { safety, max_us }
                if !(safety > 0.0 && safety <= 1.0 && max_us > 0.0) =>
            {
                errs.push("numerics.time_step: need 0 < safety ≤ 1 and max_us > 0".into())
            }
            _ => {}
        }
        if !(n.end_time_us >= 0.0) {
            errs.push("numerics.end_time_us must be non-negative".into());
        }
        if !(n.pcg_tol > 0.0) {
            errs.push("numerics.pcg_tol must be positive".into());
        }
        if n.pcg_max_iter == 0 {
            errs.push("numerics.pcg_max_iter must be positive".into());
        }
        for (name, w) in [
            ("interface_width_um", n.interface_width_um),
            ("wall_width_um", n.wall_width_um),
        ] {
            if let Some(w) = w {
                if w < g.spacing_um * (1.0 - 1e-12) {
                    errs.push(format!("numerics.{name} = {w} is narrower than one cell"));
                }
            }
        }
        if !(n.wall_shear_coef >= 0.0) {
            errs.push("numerics.wall_shear_coef must be non-negative".into());
        }
        if !(self.output.cadence_us > 0.0) {
            errs.push("output.cadence_us must be positive".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    pub fn grid(&self) -> Result<Grid, ConfigError> {
        let b = &self.grid.boundary;
        Ok(Grid::new(
            self.grid.dims,
            self.grid.spacing_um,
            [b.x, b.y, b.z],
        )?)
    }

    pub fn run_config(&self) -> RunConfig {
        let n = &self.numerics;
        RunConfig {
            time_step: n.time_step,
            end_time: n.end_time_us,
            cadence: self.output.cadence_us,
            forces: ForceParams {
                wall_shear_coef: n.wall_shear_coef,
                capillary: n.capillary,
                viscous: n.viscous,
                wall_shear: n.wall_shear,
            },
            capillary: CapillaryParams {
                formulation: n.formulation,
                ..CapillaryParams::default()
            },
            pcg: PcgConfig {
                tol: n.pcg_tol,
                max_iter: n.pcg_max_iter,
                preconditioner: n.preconditioner,
            },
            reproducible: self.output.reproducible,
            max_steps: None,
            measure_angle: self.shapes.wall.is_some(),
            energy_monitor: n.energy_monitor,
        }
    }

    /// Initial state for this scenario.
    pub fn build_state(&self) -> Result<SimState, ConfigError> {
        self.validate()?;
        let grid = self.grid()?;
        let a = grid.spacing();
        let eps0 = self.numerics.wall_width_um.unwrap_or(a);
        let eps12 = self.numerics.interface_width_um.unwrap_or(a);
        let wall = match &self.shapes.wall {
            Some(shape) => wall_fractions(shape, &grid, eps0)?,
            None => WallGeometry::none(&grid),
        };
        let uncovered = !wall.covers_solid_sides(&grid);
        let has_solid_side = grid.bounds().iter().any(|b| {
            matches!(b.lo, crate::lattice::BoundaryKind::Solid)
                || matches!(b.hi, crate::lattice::BoundaryKind::Solid)
        });
        if has_solid_side && uncovered && wall.present {
            return Err(ConfigError::Invalid(vec![
                "shapes.wall must cover every cell layer touching a solid domain side".into(),
            ]));
        }
        let f = init_color_from_shape(&self.shapes.phase1, &grid, eps12)?;
        let fl = |c: FluidConfig| Fluid {
            density: c.density_pg_per_um3,
            viscosity: c.viscosity_cp,
        };
        let tension = self.tension.matrix().expect("validated");
        Ok(SimState::new(
            grid,
            wall,
            f,
            [fl(self.fluids.phase1), fl(self.fluids.phase2)],
            tension,
        )?)
    }
}
