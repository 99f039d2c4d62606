//! Donor-cell transport of the fraction field and mass-consistent momentum
//! advection for large density ratios.

use log::trace;

use crate::error::TransportError;
use crate::lattice::{Axis, CellField, CellTag, FaceField, FaceTag, Grid};

/// Largest admissible `max|u| Δt / a`.
pub const CFL_LIMIT: f64 = 0.5;

pub fn cfl_number(u: &FaceField, dt: f64, grid: &Grid) -> f64 {
    u.max_abs() * dt / grid.spacing()
}

pub fn check_cfl(u: &FaceField, dt: f64, grid: &Grid) -> Result<(), TransportError> {
    let cfl = cfl_number(u, dt, grid);
    if cfl > CFL_LIMIT || !cfl.is_finite() {
        return Err(TransportError::Cfl {
            cfl,
            limit: CFL_LIMIT,
        });
    }
    Ok(())
}

/// Upwind cell value across a face; boundary faces take the interior cell.
#[inline]
fn upwind(field: &CellField, grid: &Grid, axis: Axis, f: [usize; 3], vel: f64) -> f64 {
    match grid.face_cells(axis, f) {
        (Some(l), Some(h)) => field.at(grid, if vel >= 0.0 { l } else { h }),
        (Some(c), None) | (None, Some(c)) => field.at(grid, c),
        (None, None) => 0.0,
    }
}

/// Volume flux `A u` and fraction flux `A u f_up` through every face.
pub fn face_fluxes(
    f: &CellField,
    u: &FaceField,
    area: &FaceField,
    grid: &Grid,
) -> (FaceField, FaceField) {
    let mut vol = FaceField::zeros(grid, FaceTag::Other);
    let mut frac = FaceField::zeros(grid, FaceTag::Other);
    for axis in Axis::ALL {
        let ua = u.get(axis);
        let aa = area.get(axis);
        for idx in 0..grid.n_faces(axis) {
            let q = aa[idx] * ua[idx];
            if q == 0.0 {
                continue;
            }
            let fc = grid.face_coords(axis, idx);
            vol.get_mut(axis)[idx] = q;
            frac.get_mut(axis)[idx] = q * upwind(f, grid, axis, fc, ua[idx]);
        }
    }
    (vol, frac)
}

/// Flux divergence `Σ (F_hi − F_lo) / a` per cell.
fn flux_divergence(flux: &FaceField, grid: &Grid) -> Vec<f64> {
    let a = grid.spacing();
    (0..grid.n_cells())
        .map(|idx| {
            let c = grid.cell_coords(idx);
            let mut s = 0.0;
            for axis in Axis::ALL {
                let fl = flux.get(axis);
                s += fl[grid.face_index(axis, grid.hi_face(c, axis))]
                    - fl[grid.face_index(axis, grid.lo_face(c, axis))];
            }
            s / a
        })
        .collect()
}

/// Result of one fraction update.
#[derive(Debug, Clone)]
pub struct FractionUpdate {
    pub f: CellField,
    /// Signed `Σ Δf V a³` added by clamping to `[0,1]` (μm³).
    pub clamp_mass: f64,
}

/// `f V ← f V − Δt ∇·(A u f_up)`, clamped to `[0,1]`. Cells with `V = 0`
/// are left untouched.
pub fn advect_fraction(
    f: &CellField,
    u: &FaceField,
    area: &FaceField,
    volume: &CellField,
    dt: f64,
    grid: &Grid,
) -> Result<FractionUpdate, TransportError> {
    check_cfl(u, dt, grid)?;
    let (_, frac) = face_fluxes(f, u, area, grid);
    let div = flux_divergence(&frac, grid);
    let mut out = f.clone();
    out.tag = CellTag::Fraction;
    let mut clamp_mass = 0.0;
    for (idx, v) in out.values.iter_mut().enumerate() {
        let vol = volume.values[idx];
        if vol <= 0.0 {
            continue;
        }
        let raw = *v - dt * div[idx] / vol;
        let c = raw.clamp(0.0, 1.0);
        clamp_mass += (c - raw) * vol;
        *v = c;
    }
    let clamp_mass = clamp_mass * grid.cell_volume();
    if clamp_mass != 0.0 {
        trace!("fraction clamp added {clamp_mass:.3e} μm³");
    }
    Ok(FractionUpdate { f: out, clamp_mass })
}

/// Momentum advection on the face control volumes:
/// `ũ = (ρ u − Δt ∇·(M u_up)) / ρ*`.
///
/// `M` is the cell mass flux `A u ρ̂_up` with `ρ̂ = ρ₁ f + ρ₂ (1 − f)` the
/// intrinsic density, built from the same upwind choice as the fraction
/// update; `ρ*` is the face average of the cell densities advanced with `M`.
/// Since mass and momentum share fluxes, a uniform velocity is carried
/// exactly whatever the density field. Closed faces return zero and
/// non-periodic boundary faces keep their velocity.
pub fn momentum_advect(
    u: &FaceField,
    f: &CellField,
    rho: &CellField,
    area: &FaceField,
    densities: (f64, f64),
    dt: f64,
    grid: &Grid,
) -> Result<FaceField, TransportError> {
    let a = grid.spacing();
    let (rho1, rho2) = densities;
    let (vol, frac) = face_fluxes(f, u, area, grid);
    let mut mass = FaceField::zeros(grid, FaceTag::Other);
    for axis in Axis::ALL {
        for ((m, &q), &qf) in mass
            .get_mut(axis)
            .iter_mut()
            .zip(vol.get(axis))
            .zip(frac.get(axis))
        {
            *m = rho2 * q + (rho1 - rho2) * qf;
        }
    }
    let div_m = flux_divergence(&mass, grid);
    let rho_star: Vec<f64> = rho
        .values
        .iter()
        .zip(&div_m)
        .map(|(r, d)| r - dt * d)
        .collect();

    let mut out = FaceField::zeros(grid, FaceTag::Velocity);
    for axis in Axis::ALL {
        let ax = axis.index();
        let ui = u.get(axis);
        let aa = area.get(axis);
        let mi = mass.get(axis);
        for idx in 0..grid.n_faces(axis) {
            if aa[idx] == 0.0 {
                continue;
            }
            let fc = grid.face_coords(axis, idx);
            let (lo, hi) = match grid.face_cells(axis, fc) {
                (Some(l), Some(h)) => (l, h),
                _ => {
                    out.get_mut(axis)[idx] = ui[idx];
                    continue;
                }
            };
            let li = grid.cell_index(lo[0], lo[1], lo[2]);
            let hi_i = grid.cell_index(hi[0], hi[1], hi[2]);
            let rho_f = 0.5 * (rho.values[li] + rho.values[hi_i]);
            if rho_f <= 0.0 {
                return Err(TransportError::ZeroFaceDensity {
                    axis: ax,
                    face: idx,
                });
            }
            let here = ui[idx];
            let up_pick = |phi: f64, inner: f64, outer: f64| if phi >= 0.0 { inner } else { outer };
            let mut div = 0.0;

            // along the face normal: control-volume faces at the two cell centres
            {
                let f_lo = grid.face_index(axis, grid.lo_face(lo, axis));
                let f_hi = grid.face_index(axis, grid.hi_face(hi, axis));
                let phi_hi = 0.5 * (mi[idx] + mi[f_hi]);
                let phi_lo = 0.5 * (mi[f_lo] + mi[idx]);
                div += phi_hi * up_pick(phi_hi, here, ui[f_hi])
                    - phi_lo * up_pick(phi_lo, ui[f_lo], here);
            }
            // tangential control-volume faces
            for other in Axis::ALL {
                if other == axis {
                    continue;
                }
                let mo = mass.get(other);
                let phi_hi = 0.5
                    * (mo[grid.face_index(other, grid.hi_face(lo, other))]
                        + mo[grid.face_index(other, grid.hi_face(hi, other))]);
                let phi_lo = 0.5
                    * (mo[grid.face_index(other, grid.lo_face(lo, other))]
                        + mo[grid.face_index(other, grid.lo_face(hi, other))]);
                let nb = |d: isize| {
                    grid.shift(fc, other, d)
                        .map_or(here, |g| ui[grid.face_index(axis, g)])
                };
                div +=
                    phi_hi * up_pick(phi_hi, here, nb(1)) - phi_lo * up_pick(phi_lo, nb(-1), here);
            }
            let denom = 0.5 * (rho_star[li] + rho_star[hi_i]);
            out.get_mut(axis)[idx] = if denom > 0.0 {
                (rho_f * here - dt * div / a) / denom
            } else {
                here
            };
        }
    }
    Ok(out)
}
