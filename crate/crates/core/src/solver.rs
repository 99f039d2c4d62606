//! SMAC time loop: fraction and momentum advection, explicit forces,
//! pressure projection.

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::capillary::{surface_energy_n, surface_energy_sym3, CapillaryParams, Formulation};
use crate::diagnostics::{
    divergence_norm, interface_thickness, kinetic_energy, measure_contact_angle,
};
use crate::error::{PhaseError, SolverError};
use crate::forces::{apply_wall_shear, total_force, zero_closed_faces, ForceInputs, ForceParams};
use crate::lattice::{Axis, BoundaryKind, CellField, CellTag, FaceField, FaceTag, Grid};
use crate::phase::{
    mix_density, mix_viscosity, proper_sigma, wall_phase_colors, PhaseSet, ProperSigma,
    WallGeometry,
};
use crate::pressure::{face_density, pressure_step, PcgConfig};
use crate::transport::{advect_fraction, check_cfl, momentum_advect};

/// Density (pg/μm³) and viscosity (cp) of one fluid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fluid {
    pub density: f64,
    pub viscosity: f64,
}

/// Full solver state. Phase 1 is the fluid tracked by `f`; the colour
/// functions are `[ξ₀, ξ₁, ξ₂] = [1 − V, V f, V(1 − f)]`.
#[derive(Debug, Clone)]
pub struct SimState {
    pub grid: Grid,
    /// Simulated time (μs).
    pub time: f64,
    pub step: u64,
    pub u: FaceField,
    pub f: CellField,
    pub p: CellField,
    pub rho: CellField,
    pub eta: CellField,
    pub wall: WallGeometry,
    pub phases: PhaseSet,
    pub fluids: [Fluid; 2],
    /// Cumulative signed fraction volume added by clamping (μm³).
    pub clamp_mass: f64,
}

impl SimState {
    /// Quiescent state. `tension` is the symmetric pair matrix over
    /// `[wall, fluid 1, fluid 2]`.
    pub fn new(
        grid: Grid,
        wall: WallGeometry,
        f: CellField,
        fluids: [Fluid; 2],
        tension: [[f64; 3]; 3],
    ) -> Result<Self, PhaseError> {
        let colors = wall_phase_colors(&f, &wall).to_vec();
        let phases = PhaseSet::new(
            colors,
            vec![0.0, fluids[0].density, fluids[1].density],
            vec![0.0, fluids[0].viscosity, fluids[1].viscosity],
            tension.iter().map(|r| r.to_vec()).collect(),
        )?;
        let p0 = reference_pressure(&grid);
        let mut s = SimState {
            u: FaceField::zeros(&grid, FaceTag::Velocity),
            p: CellField::constant(&grid, p0, CellTag::Pressure),
            rho: CellField::zeros(&grid, CellTag::Density),
            eta: CellField::zeros(&grid, CellTag::Viscosity),
            f,
            wall,
            phases,
            fluids,
            grid,
            time: 0.0,
            step: 0,
            clamp_mass: 0.0,
        };
        s.f.tag = CellTag::Fraction;
        s.refresh_derived();
        Ok(s)
    }

    /// Recompute colours, density and viscosity from `f`.
    pub fn refresh_derived(&mut self) {
        let [x0, x1, x2] = wall_phase_colors(&self.f, &self.wall);
        self.rho = mix_density(
            &self.f,
            &self.wall.volume,
            self.fluids[0].density,
            self.fluids[1].density,
        );
        self.eta = mix_viscosity(&x1, &x2, self.fluids[0].viscosity, self.fluids[1].viscosity);
        self.phases.colors = vec![x0, x1, x2];
    }

    pub fn proper_sigma(&self) -> ProperSigma {
        let t = &self.phases.tension;
        proper_sigma(t[0][1], t[0][2], t[1][2])
    }

    pub fn kinetic_energy(&self) -> f64 {
        kinetic_energy(&self.rho, &self.u, &self.grid)
    }

    /// Interface energy: proper-coefficient form for three phases, the
    /// pairwise form when a proper coefficient is negative.
    pub fn surface_energy(&self) -> f64 {
        let ps = self.proper_sigma();
        if ps.has_negative() {
            return surface_energy_n(&self.phases, &self.grid);
        }
        let c = &self.phases.colors;
        surface_energy_sym3([&c[0], &c[1], &c[2]], ps.sigma, &self.grid)
    }

    /// `Σ f V a³`, the volume of fluid 1 (μm³).
    pub fn fluid_volume(&self) -> f64 {
        self.f
            .values
            .iter()
            .zip(&self.wall.volume.values)
            .map(|(f, v)| f * v)
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    pub fn max_velocity(&self) -> f64 {
        self.u.max_abs()
    }
}

/// Boundary pressure used to initialise `p` (mean of the fixed-pressure
/// sides, zero without any).
pub fn reference_pressure(grid: &Grid) -> f64 {
    let mut vals = Vec::new();
    for b in grid.bounds() {
        for k in [b.lo, b.hi] {
            if let BoundaryKind::FixedPressure { pressure_kpa } = k {
                vals.push(pressure_kpa);
            }
        }
    }
    if vals.is_empty() {
        0.0
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum TimeStep {
    /// Constant Δt (μs).
    Fixed { dt_us: f64 },
    /// `Δt = safety · stable_dt`, capped at `max_us`.
    Auto { safety: f64, max_us: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub time_step: TimeStep,
    /// Simulated end time (μs).
    pub end_time: f64,
    /// Diagnostics interval (μs).
    pub cadence: f64,
    pub forces: ForceParams,
    pub capillary: CapillaryParams,
    pub pcg: PcgConfig,
    pub reproducible: bool,
    pub max_steps: Option<u64>,
    /// Measure the contact angle in diagnostic rows.
    pub measure_angle: bool,
    /// Track kinetic + surface energy every step.
    pub energy_monitor: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            time_step: TimeStep::Auto {
                safety: 0.5,
                max_us: 0.01,
            },
            end_time: 1.0,
            cadence: 0.1,
            forces: ForceParams::default(),
            capillary: CapillaryParams::default(),
            pcg: PcgConfig::default(),
            reproducible: false,
            max_steps: None,
            measure_angle: true,
            energy_monitor: true,
        }
    }
}

/// Advective, viscous and capillary step limits (μs).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtLimits {
    pub advective: f64,
    pub viscous: f64,
    pub capillary: f64,
}

impl DtLimits {
    pub fn min(&self) -> f64 {
        self.advective.min(self.viscous).min(self.capillary)
    }
}

pub fn dt_limits(state: &SimState) -> DtLimits {
    let a = state.grid.spacing();
    let umax = state.u.max_abs();
    let advective = if umax > 0.0 {
        0.5 * a / umax
    } else {
        f64::INFINITY
    };
    let nu = state
        .fluids
        .iter()
        .map(|f| {
            if f.density > 0.0 {
                f.viscosity / f.density
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    let viscous = if nu > 0.0 {
        0.25 * a * a / nu
    } else {
        f64::INFINITY
    };
    let rho_bar = 0.5 * (state.fluids[0].density + state.fluids[1].density);
    let smax = state
        .phases
        .tension
        .iter()
        .flatten()
        .cloned()
        .fold(0.0, f64::max);
    let capillary = if smax > 0.0 {
        (rho_bar * a.powi(3) / (4.0 * std::f64::consts::PI * smax)).sqrt()
    } else {
        f64::INFINITY
    };
    DtLimits {
        advective,
        viscous,
        capillary,
    }
}

/// `min(0.5 a/max|u|, 0.25 ρ a²/η, √(ρ̄ a³ / (4π max σ)))`.
pub fn stable_dt(state: &SimState) -> f64 {
    dt_limits(state).min()
}

/// What one step did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub pcg_iterations: usize,
    pub pcg_residual: f64,
    /// `‖b‖₂` of the pressure system.
    pub rhs_norm: f64,
    /// `max |∇·(A u)|` after projection.
    pub max_divergence: f64,
    pub clamp_mass: f64,
}

impl StepReport {
    /// Divergence contract: residual within ten times the solver tolerance.
    pub fn divergence_ok(&self, tol: f64) -> bool {
        self.max_divergence <= 10.0 * tol * self.rhs_norm.max(f64::MIN_POSITIVE)
    }
}

fn choose_dt(state: &SimState, cfg: &RunConfig) -> f64 {
    let dt = match cfg.time_step {
        TimeStep::Fixed { dt_us } => {
            let lim = stable_dt(state);
            if dt_us > lim {
                debug!("Δt = {dt_us} μs exceeds stable limit {lim:.3e} μs");
            }
            dt_us
        }
        TimeStep::Auto { safety, max_us } => (safety * stable_dt(state)).min(max_us),
    };
    // a final step within round-off of Δt keeps Δt, so a run split at any
    // time retraces the same steps as an uninterrupted one
    let remaining = cfg.end_time - state.time;
    if remaining > 0.0 && remaining < dt * (1.0 - 1e-9) {
        remaining
    } else {
        dt
    }
}

/// One SMAC step with an explicit `Δt`.
pub fn step_with_dt(
    state: &mut SimState,
    cfg: &RunConfig,
    dt: f64,
) -> Result<StepReport, SolverError> {
    let grid = &state.grid.clone();
    check_cfl(&state.u, dt, grid)?;

    // forces on the old state
    let k = {
        let inputs = ForceInputs {
            grid,
            phases: &state.phases,
            wall: &state.wall,
            u: &state.u,
            eta: &state.eta,
            capillary: &cfg.capillary,
        };
        // wall shear is applied implicitly once u* is known
        let explicit = ForceParams {
            wall_shear: false,
            ..cfg.forces
        };
        total_force(&inputs, &explicit)
    };

    // I: fraction and momentum transport
    let adv = advect_fraction(
        &state.f,
        &state.u,
        &state.wall.area,
        &state.wall.volume,
        dt,
        grid,
    )?;
    let u_tilde = momentum_advect(
        &state.u,
        &state.f,
        &state.rho,
        &state.wall.area,
        (state.fluids[0].density, state.fluids[1].density),
        dt,
        grid,
    )?;
    state.f = adv.f;
    state.clamp_mass += adv.clamp_mass;
    state.refresh_derived();

    // II: guessed velocity and pressure projection
    let mut u_star = u_tilde;
    for axis in Axis::ALL {
        let ka = k.get(axis);
        let area = state.wall.area.get(axis);
        let us = u_star.get_mut(axis);
        for idx in 0..us.len() {
            if area[idx] == 0.0 {
                us[idx] = 0.0;
                continue;
            }
            let f = grid.face_coords(axis, idx);
            let r = face_density(&state.rho, grid, axis, f);
            if r > 0.0 {
                us[idx] += dt * ka[idx] / r;
            } else {
                us[idx] = 0.0;
            }
        }
    }
    apply_wall_shear(
        &mut u_star,
        &state.wall,
        &state.eta,
        &state.rho,
        dt,
        &cfg.forces,
        grid,
    );
    let proj = pressure_step(
        &u_star,
        &state.rho,
        &state.wall.area,
        &state.wall.volume,
        dt,
        grid,
        &cfg.pcg,
        Some(&state.p),
    )?;
    state.u = proj.u;
    state.p = proj.p;
    zero_closed_faces(&mut state.u, &state.wall);

    state.time += dt;
    state.step += 1;

    if state.u.has_non_finite() {
        return Err(SolverError::NonFinite {
            field: "velocity",
            step: state.step,
        });
    }
    if state.p.values.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::NonFinite {
            field: "pressure",
            step: state.step,
        });
    }
    if state.f.values.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::NonFinite {
            field: "fraction",
            step: state.step,
        });
    }
    Ok(StepReport {
        dt,
        pcg_iterations: proj.iterations,
        pcg_residual: proj.residual,
        rhs_norm: proj.rhs_norm,
        max_divergence: proj.max_divergence,
        clamp_mass: adv.clamp_mass,
    })
}

/// One SMAC step with `Δt` chosen from the configuration.
pub fn step(state: &mut SimState, cfg: &RunConfig) -> Result<StepReport, SolverError> {
    let dt = choose_dt(state, cfg);
    step_with_dt(state, cfg, dt)
}

/// One row of the diagnostic time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagRow {
    pub t: f64,
    pub kinetic_energy: f64,
    pub surface_energy: f64,
    pub max_divergence: f64,
    pub contact_angle_deg: Option<f64>,
    pub interface_thickness: Option<f64>,
    pub pcg_iterations: usize,
    pub clamp_mass: f64,
}

pub fn diagnose(state: &SimState, cfg: &RunConfig, last: Option<&StepReport>) -> DiagRow {
    let angle = if cfg.measure_angle && state.wall.present {
        measure_contact_angle(&state.phases.colors[1], &state.wall, &state.grid).ok()
    } else {
        None
    };
    let thickness = interface_thickness(&state.f, &state.grid).ok();
    let max_divergence = match last {
        Some(r) => r.max_divergence,
        None => divergence_norm(&state.u, &state.wall.area, &state.wall.volume, &state.grid).max,
    };
    DiagRow {
        t: state.time,
        kinetic_energy: state.kinetic_energy(),
        surface_energy: state.surface_energy(),
        max_divergence,
        contact_angle_deg: angle,
        interface_thickness: thickness,
        pcg_iterations: last.map_or(0, |r| r.pcg_iterations),
        clamp_mass: state.clamp_mass,
    }
}

/// Aggregate facts about a run.
#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub steps: u64,
    pub rows: Vec<DiagRow>,
    /// Steps whose divergence residual exceeded ten times the tolerance.
    pub divergence_violations: u64,
    pub worst_divergence_ratio: f64,
    /// 100-step windows where energy rose by more than 1%.
    pub energy_violations: u64,
    pub max_energy_rise: f64,
    pub total_pcg_iterations: u64,
}

/// Length of the energy monitoring window, in steps.
pub const ENERGY_WINDOW: usize = 100;
/// Relative rise allowed over one window.
pub const ENERGY_ALLOWANCE: f64 = 0.01;

/// Advance until `cfg.end_time` (or `cfg.max_steps`), emitting a diagnostic
/// row at `t = 0` and every `cadence`. `observer` sees each row together
/// with the state it describes.
pub fn run<F>(
    state: &mut SimState,
    cfg: &RunConfig,
    mut observer: F,
) -> Result<RunSummary, SolverError>
where
    F: FnMut(&SimState, &DiagRow) -> Result<(), SolverError>,
{
    let mut summary = RunSummary::default();
    if cfg.end_time <= state.time {
        return Ok(summary);
    }
    let cadence = if cfg.cadence > 0.0 {
        cfg.cadence
    } else {
        f64::INFINITY
    };
    let first = diagnose(state, cfg, None);
    observer(state, &first)?;
    summary.rows.push(first);
    let eps_t = 1e-9 * cadence.min(cfg.end_time.max(1e-300));
    // rows sit on absolute multiples of the cadence, so a resumed run keeps
    // the schedule of the original one
    let mut next_index = ((state.time + eps_t) / cadence).floor() + 1.0;
    let mut energies: std::collections::VecDeque<f64> = Default::default();
    if cfg.energy_monitor {
        energies.push_back(state.kinetic_energy() + state.surface_energy());
    }
    while state.time < cfg.end_time - eps_t {
        if cfg.max_steps.is_some_and(|m| summary.steps >= m) {
            break;
        }
        let report = step(state, cfg)?;
        summary.steps += 1;
        summary.total_pcg_iterations += report.pcg_iterations as u64;
        let ratio = report.max_divergence / (cfg.pcg.tol * report.rhs_norm).max(f64::MIN_POSITIVE);
        if report.rhs_norm > 0.0 {
            summary.worst_divergence_ratio = summary.worst_divergence_ratio.max(ratio);
        }
        if !report.divergence_ok(cfg.pcg.tol) {
            summary.divergence_violations += 1;
            warn!(
                "step {}: divergence {:.3e} above contract",
                state.step, report.max_divergence
            );
        }
        if cfg.energy_monitor {
            let e = state.kinetic_energy() + state.surface_energy();
            energies.push_back(e);
            if energies.len() > ENERGY_WINDOW + 1 {
                energies.pop_front();
            }
            if energies.len() == ENERGY_WINDOW + 1 {
                let e0 = energies[0];
                let rise = (e - e0) / e0.abs().max(f64::MIN_POSITIVE);
                summary.max_energy_rise = summary.max_energy_rise.max(rise);
                if rise > ENERGY_ALLOWANCE {
                    summary.energy_violations += 1;
                    debug!(
                        "step {}: energy rose by {:.2}% over {ENERGY_WINDOW} steps",
                        state.step,
                        100.0 * rise
                    );
                }
            }
        }
        if state.time >= next_index * cadence - eps_t {
            let row = diagnose(state, cfg, Some(&report));
            observer(state, &row)?;
            summary.rows.push(row);
            while next_index * cadence <= state.time + eps_t {
                next_index += 1.0;
            }
        }
    }
    Ok(summary)
}

/// Proper coefficients for the active formulation, for reporting.
pub fn designed_angle(state: &SimState, formulation: Formulation) -> Option<f64> {
    match formulation {
        Formulation::TwoPhase => None,
        _ => Some(state.proper_sigma().contact_angle_deg()),
    }
}
