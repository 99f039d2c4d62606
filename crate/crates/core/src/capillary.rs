//! Interface geometry and capillary stresses.
//!
//! Every stress here has the form `σ s (I − n⊗n)` with `n = ∇ξ/|∇ξ|` and a
//! scalar weight `s` that reduces to `|∇ξ|` for a clean two-phase band. The
//! force is the face-located divergence of the stress, so the total force on
//! a periodic domain vanishes identically.

use serde::{Deserialize, Serialize};

use crate::lattice::{
    apply_boundary, cell_gradient, tensor_divergence, Axis, CellField, CellTag, CellTensorField,
    FaceField, FaceTag, Grid,
};
use crate::phase::PhaseSet;

/// Which capillary stress drives the flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    /// `σ₁₂ (I − n⊗n)|∇ξ|` with ξ the phase-1 colour (walls ignored).
    TwoPhase,
    /// `Σ_{a=1,2} σ_a (I − n_a⊗n_a)|∇ξ_a|` with proper coefficients.
    #[default]
    WallSymmetric,
    /// Pairwise N-phase form.
    NPhase,
}

impl std::str::FromStr for Formulation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "two-phase" => Ok(Formulation::TwoPhase),
            "wall-symmetric" => Ok(Formulation::WallSymmetric),
            "n-phase" => Ok(Formulation::NPhase),
            other => Err(format!("unknown formulation '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapillaryParams {
    /// Threshold on `|∇ξ|·a` below which a cell counts as bulk.
    pub grad_floor: f64,
    pub formulation: Formulation,
}

impl Default for CapillaryParams {
    fn default() -> Self {
        CapillaryParams {
            grad_floor: 1e-8,
            formulation: Formulation::WallSymmetric,
        }
    }
}

/// Unit normals, gradient magnitudes and the band mask of one colour field.
#[derive(Debug, Clone)]
pub struct Normals {
    pub n: Vec<[f64; 3]>,
    pub magnitude: Vec<f64>,
    pub band: Vec<bool>,
}

pub fn interface_normal(xi: &CellField, grid: &Grid, params: &CapillaryParams) -> Normals {
    let g = cell_gradient(xi, grid);
    let a = grid.spacing();
    let len = xi.len();
    let mut n = vec![[0.0; 3]; len];
    let mut magnitude = vec![0.0; len];
    let mut band = vec![false; len];
    for i in 0..len {
        let v = [g[0].values[i], g[1].values[i], g[2].values[i]];
        let m = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        magnitude[i] = m;
        if m * a > params.grad_floor {
            band[i] = true;
            n[i] = [v[0] / m, v[1] / m, v[2] / m];
        }
    }
    Normals { n, magnitude, band }
}

/// `κ = −∇·n` on band cells, zero elsewhere.
///
/// Unit normals are formed at cell vertices from the surrounding 2×2×2
/// cells; each face takes the average of its four vertex normals and `κ` is
/// the negative difference of those face normals. Vertices without a
/// gradient borrow the cell's own normal. Domain boundaries use the
/// mirrored/wrapped ghost layer.
pub fn curvature(xi: &CellField, grid: &Grid, params: &CapillaryParams) -> CellField {
    let normals = interface_normal(xi, grid, params);
    let ghost = match apply_boundary(xi, grid) {
        Ok(g) => g,
        Err(_) => {
            let plain = CellField {
                values: xi.values.clone(),
                tag: CellTag::Color,
            };
            apply_boundary(&plain, grid).expect("colour fields have no restricted boundaries")
        }
    };
    let a = grid.spacing();
    let [nx, ny, nz] = grid.dims();
    let (vx, vy) = (nx + 1, ny + 1);
    let sign = |d: isize| if d == 1 { 1.0 } else { -1.0 };
    let mut vertex = vec![[0.0; 3]; vx * vy * (nz + 1)];
    for k in 0..=nz as isize {
        for j in 0..=ny as isize {
            for i in 0..=nx as isize {
                let mut g = [0.0; 3];
                for dz in 0..2 {
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let v = ghost.get(i - 1 + dx, j - 1 + dy, k - 1 + dz);
                            g[0] += sign(dx) * v;
                            g[1] += sign(dy) * v;
                            g[2] += sign(dz) * v;
                        }
                    }
                }
                let m = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt() / (4.0 * a);
                let slot = i as usize + vx * (j as usize + vy * k as usize);
                if m * a > params.grad_floor {
                    let len = m * 4.0 * a;
                    vertex[slot] = [g[0] / len, g[1] / len, g[2] / len];
                }
            }
        }
    }
    CellField::from_fn(grid, CellTag::Other, |c| {
        let idx = grid.cell_index(c[0], c[1], c[2]);
        if !normals.band[idx] {
            return 0.0;
        }
        let own = normals.n[idx];
        let mut div = 0.0;
        for dz in 0..2 {
            for dy in 0..2 {
                for dx in 0..2 {
                    let slot = (c[0] + dx as usize)
                        + vx * ((c[1] + dy as usize) + vy * (c[2] + dz as usize));
                    let n = if vertex[slot] == [0.0; 3] {
                        own
                    } else {
                        vertex[slot]
                    };
                    div += sign(dx) * n[0] + sign(dy) * n[1] + sign(dz) * n[2];
                }
            }
        }
        -div / (4.0 * a)
    })
}

/// Adds `coef · weight · (I − n⊗n)` to one packed tensor.
#[inline]
fn add_tangential(t: &mut [f64; 6], n: [f64; 3], weight: f64) {
    t[0] += weight * (1.0 - n[0] * n[0]);
    t[1] += weight * (1.0 - n[1] * n[1]);
    t[2] += weight * (1.0 - n[2] * n[2]);
    t[3] -= weight * n[0] * n[1];
    t[4] -= weight * n[0] * n[2];
    t[5] -= weight * n[1] * n[2];
}

/// `τ = σ (I − n⊗n)|∇ξ|`, zero on bulk cells.
pub fn capillary_stress_two(
    xi: &CellField,
    sigma: f64,
    grid: &Grid,
    params: &CapillaryParams,
) -> CellTensorField {
    let normals = interface_normal(xi, grid, params);
    let mut tau = CellTensorField::zeros(grid);
    for (i, t) in tau.values.iter_mut().enumerate() {
        if normals.band[i] {
            add_tangential(t, normals.n[i], sigma * normals.magnitude[i]);
        }
    }
    tau
}

/// Sum of the two fluid stresses with proper coefficients; the static wall
/// enters only through the gradients of `ξ₁ = Vf` and `ξ₂ = V(1−f)`.
pub fn capillary_stress_wall(
    xi1: &CellField,
    xi2: &CellField,
    sigma1: f64,
    sigma2: f64,
    grid: &Grid,
    params: &CapillaryParams,
) -> CellTensorField {
    let mut tau = capillary_stress_two(xi1, sigma1, grid, params);
    tau.add_assign(&capillary_stress_two(xi2, sigma2, grid, params));
    tau
}

/// Pair weight `√(|∇ξ_a||∇ξ_b|)(ξ_a+ξ_b)` and normal of `ξ_a`, for `a > b`.
struct PairTerm {
    sigma: f64,
    weight: Vec<f64>,
    normal: Vec<[f64; 3]>,
}

fn pair_terms(phases: &PhaseSet, grid: &Grid, params: &CapillaryParams) -> Vec<PairTerm> {
    let normals: Vec<Normals> = phases
        .colors
        .iter()
        .map(|c| interface_normal(c, grid, params))
        .collect();
    let mut out = Vec::new();
    for a in 0..phases.len() {
        for b in 0..a {
            let sigma = phases.tension[a][b];
            if sigma == 0.0 {
                continue;
            }
            let (na, nb) = (&normals[a], &normals[b]);
            let weight = (0..na.n.len())
                .map(|i| {
                    if !na.band[i] {
                        return 0.0;
                    }
                    (na.magnitude[i] * nb.magnitude[i]).sqrt()
                        * (phases.colors[a].values[i] + phases.colors[b].values[i])
                })
                .collect();
            out.push(PairTerm {
                sigma,
                weight,
                normal: na.n.clone(),
            });
        }
    }
    out
}

/// Pairwise N-phase capillary stress `Σ_{a>b} σ_ab s_ab (I − n_a⊗n_a)`.
pub fn capillary_stress_multi(
    phases: &PhaseSet,
    grid: &Grid,
    params: &CapillaryParams,
) -> CellTensorField {
    let mut tau = CellTensorField::zeros(grid);
    for term in pair_terms(phases, grid, params) {
        for (i, t) in tau.values.iter_mut().enumerate() {
            if term.weight[i] != 0.0 {
                add_tangential(t, term.normal[i], term.sigma * term.weight[i]);
            }
        }
    }
    tau
}

/// Face-located N-phase capillary force.
///
/// Assembled term by term: the gradient of `σ_ab s_ab` across each face
/// minus the divergence of `σ_ab s_ab n_a⊗n_a`. The sign is that of a
/// tension (it pulls a convex blob inwards), so for two phases it equals the
/// divergence of [`capillary_stress_two`].
pub fn capillary_force_multi(
    phases: &PhaseSet,
    grid: &Grid,
    params: &CapillaryParams,
) -> FaceField {
    let a = grid.spacing();
    let mut scalar = vec![0.0; grid.n_cells()];
    let mut dyad = CellTensorField::zeros(grid);
    for term in pair_terms(phases, grid, params) {
        for i in 0..scalar.len() {
            let w = term.sigma * term.weight[i];
            if w == 0.0 {
                continue;
            }
            scalar[i] += w;
            let n = term.normal[i];
            let t = &mut dyad.values[i];
            t[0] += w * n[0] * n[0];
            t[1] += w * n[1] * n[1];
            t[2] += w * n[2] * n[2];
            t[3] += w * n[0] * n[1];
            t[4] += w * n[0] * n[2];
            t[5] += w * n[1] * n[2];
        }
    }
    let div_dyad = tensor_divergence(&dyad, grid);
    let mut force = FaceField::zeros(grid, FaceTag::Force);
    for axis in Axis::ALL {
        let out = force.get_mut(axis);
        let dd = div_dyad.get(axis);
        for (idx, slot) in out.iter_mut().enumerate() {
            let f = grid.face_coords(axis, idx);
            let grad = match grid.face_cells(axis, f) {
                (Some(l), Some(h)) => {
                    (scalar[grid.cell_index(h[0], h[1], h[2])]
                        - scalar[grid.cell_index(l[0], l[1], l[2])])
                        / a
                }
                _ => 0.0,
            };
            *slot = grad - dd[idx];
        }
    }
    force
}

/// `Σ_{a>b} σ_ab Σ_cells √(|∇ξ_a||∇ξ_b|)(ξ_a+ξ_b) a³`.
pub fn surface_energy_n(phases: &PhaseSet, grid: &Grid) -> f64 {
    let mags: Vec<Vec<f64>> = phases
        .colors
        .iter()
        .map(|c| crate::lattice::gradient_magnitude(&cell_gradient(c, grid)))
        .collect();
    let mut e = 0.0;
    for a in 0..phases.len() {
        for b in 0..a {
            let s = phases.tension[a][b];
            if s == 0.0 {
                continue;
            }
            let sum: f64 = (0..mags[a].len())
                .map(|i| {
                    (mags[a][i] * mags[b][i]).sqrt()
                        * (phases.colors[a].values[i] + phases.colors[b].values[i])
                })
                .sum();
            e += s * sum;
        }
    }
    e * grid.cell_volume()
}

/// `Σ_a σ_a Σ_cells |∇ξ_a| a³` for three phases with proper coefficients.
pub fn surface_energy_sym3(colors: [&CellField; 3], sigma: [f64; 3], grid: &Grid) -> f64 {
    colors
        .iter()
        .zip(sigma)
        .filter(|(_, s)| *s != 0.0)
        .map(|(c, s)| s * area_estimate(c, grid))
        .sum()
}

/// `Σ_cells |∇ξ| a³`, the band approximation of interface area (μm²).
pub fn area_estimate(xi: &CellField, grid: &Grid) -> f64 {
    crate::lattice::gradient_magnitude(&cell_gradient(xi, grid))
        .iter()
        .sum::<f64>()
        * grid.cell_volume()
}
