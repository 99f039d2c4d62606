//! Volumetric force `K = ∇·τ̄ + ∇·τ + τ̂`: capillary stress, viscous
//! stress and the wall shear that damps slip inside the wall band.

use crate::capillary::{
    capillary_force_multi, capillary_stress_two, capillary_stress_wall, CapillaryParams,
    Formulation,
};
use crate::lattice::{
    cell_gradient, face_vector, tensor_divergence, Axis, CellField, CellTensorField, FaceField,
    FaceTag, Grid,
};
use crate::phase::{proper_sigma, PhaseSet, WallGeometry};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceParams {
    /// Dimensionless wall shear coefficient `c_w`.
    pub wall_shear_coef: f64,
    pub capillary: bool,
    pub viscous: bool,
    pub wall_shear: bool,
}

impl Default for ForceParams {
    fn default() -> Self {
        ForceParams {
            wall_shear_coef: 1.0,
            capillary: true,
            viscous: true,
            wall_shear: true,
        }
    }
}

/// Face index of the face `d` steps from `f` along `other` (≠ face axis).
#[inline]
fn face_shift(grid: &Grid, f: [usize; 3], other: Axis, d: isize) -> Option<[usize; 3]> {
    // along a tangential axis faces are laid out exactly like cells
    grid.shift(f, other, d)
}

/// Cell-centred strain rate `E_ij = ½(∂_j u_i + ∂_i u_j)`.
///
/// Diagonal entries difference the two faces of the cell; the cross
/// derivative `∂_j u_i` is the mean over the cell's two `i`-faces of the
/// central difference along `j`.
pub fn strain_rate(u: &FaceField, grid: &Grid) -> CellTensorField {
    let a = grid.spacing();
    let mut e = CellTensorField::zeros(grid);
    for idx in 0..grid.n_cells() {
        let c = grid.cell_coords(idx);
        let mut grad = [[0.0; 3]; 3]; // grad[i][j] = ∂_j u_i
        for ai in Axis::ALL {
            let i = ai.index();
            let lo = grid.lo_face(c, ai);
            let hi = grid.hi_face(c, ai);
            let ui = u.get(ai);
            grad[i][i] = (ui[grid.face_index(ai, hi)] - ui[grid.face_index(ai, lo)]) / a;
            for aj in Axis::ALL {
                if aj == ai {
                    continue;
                }
                let mut sum = 0.0;
                // the hi face of a non-periodic cell may sit on index n; it still
                // shifts along aj like a cell
                for f in [lo, hi] {
                    let up = face_shift(grid, f, aj, 1);
                    let dn = face_shift(grid, f, aj, -1);
                    let val = |g: Option<[usize; 3]>| ui[grid.face_index(ai, g.unwrap_or(f))];
                    sum += (val(up) - val(dn)) / (2.0 * a);
                }
                grad[i][aj.index()] = 0.5 * sum;
            }
        }
        let t = &mut e.values[idx];
        t[0] = grad[0][0];
        t[1] = grad[1][1];
        t[2] = grad[2][2];
        t[3] = 0.5 * (grad[0][1] + grad[1][0]);
        t[4] = 0.5 * (grad[0][2] + grad[2][0]);
        t[5] = 0.5 * (grad[1][2] + grad[2][1]);
    }
    e
}

/// `τ = 2η (E − ⅓ (∇·u) I)`.
pub fn viscous_stress(u: &FaceField, eta: &CellField, grid: &Grid) -> CellTensorField {
    let mut tau = strain_rate(u, grid);
    for (t, &eta) in tau.values.iter_mut().zip(&eta.values) {
        let third = (t[0] + t[1] + t[2]) / 3.0;
        t[0] -= third;
        t[1] -= third;
        t[2] -= third;
        for v in t.iter_mut() {
            *v *= 2.0 * eta;
        }
    }
    tau
}

/// Precomputed wall band data used by the shear term.
struct WallBand {
    grad: [CellField; 3],
}

impl WallBand {
    fn new(wall: &WallGeometry, grid: &Grid) -> Self {
        WallBand {
            grad: cell_gradient(&wall.xi0, grid),
        }
    }

    /// Face-averaged `ξ₀` and `∇ξ₀`.
    fn at_face(
        &self,
        wall: &WallGeometry,
        grid: &Grid,
        axis: Axis,
        f: [usize; 3],
    ) -> (f64, [f64; 3]) {
        let (lo, hi) = grid.face_cells(axis, f);
        let cells: Vec<usize> = [lo, hi]
            .into_iter()
            .flatten()
            .map(|c| grid.cell_index(c[0], c[1], c[2]))
            .collect();
        let w = 1.0 / cells.len() as f64;
        let mut xi = 0.0;
        let mut g = [0.0; 3];
        for &c in &cells {
            xi += w * wall.xi0.values[c];
            for d in 0..3 {
                g[d] += w * self.grad[d].values[c];
            }
        }
        (xi, g)
    }
}

fn face_eta(eta: &CellField, grid: &Grid, axis: Axis, f: [usize; 3]) -> f64 {
    let (lo, hi) = grid.face_cells(axis, f);
    let v: Vec<f64> = [lo, hi]
        .into_iter()
        .flatten()
        .map(|c| eta.at(grid, c))
        .collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn shear_vector(
    band: &WallBand,
    u: &FaceField,
    wall: &WallGeometry,
    eta: &CellField,
    params: &ForceParams,
    grid: &Grid,
    axis: Axis,
    f: [usize; 3],
) -> [f64; 3] {
    let (xi0, g) = band.at_face(wall, grid, axis, f);
    if !(xi0 > 0.0 && xi0 < 1.0) {
        return [0.0; 3];
    }
    let mag = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
    if mag == 0.0 {
        return [0.0; 3];
    }
    let n = [g[0] / mag, g[1] / mag, g[2] / mag];
    let v = face_vector(u, grid, axis, f);
    let vn = v[0] * n[0] + v[1] * n[1] + v[2] * n[2];
    let coef = -params.wall_shear_coef * face_eta(eta, grid, axis, f) * mag / wall.eps0;
    [
        coef * (v[0] - vn * n[0]),
        coef * (v[1] - vn * n[1]),
        coef * (v[2] - vn * n[2]),
    ]
}

/// Full wall shear vector at one face (the stored field keeps only the
/// component normal to the face).
pub fn wall_shear_vector(
    u: &FaceField,
    wall: &WallGeometry,
    eta: &CellField,
    params: &ForceParams,
    grid: &Grid,
    axis: Axis,
    f: [usize; 3],
) -> [f64; 3] {
    let band = WallBand::new(wall, grid);
    shear_vector(&band, u, wall, eta, params, grid, axis, f)
}

/// Tangential damping `−c_w η u∥ |∇ξ₀| / ε₀` on faces inside the wall band.
pub fn wall_shear(
    u: &FaceField,
    wall: &WallGeometry,
    eta: &CellField,
    params: &ForceParams,
    grid: &Grid,
) -> FaceField {
    if !wall.present {
        return FaceField::zeros(grid, FaceTag::Force);
    }
    let band = WallBand::new(wall, grid);
    FaceField::from_fn(grid, FaceTag::Force, |axis, f| {
        shear_vector(&band, u, wall, eta, params, grid, axis, f)[axis.index()]
    })
}

/// Wall shear applied to a provisional velocity with the face's own
/// component taken implicitly: `u += Δt τ̂(u) / (ρ_f (1 + Δt γ (1 − n_i²) / ρ_f))`
/// with `γ = c_w η |∇ξ₀| / ε₀`. Exact backward Euler for walls aligned with
/// the lattice and unconditionally damping otherwise.
pub fn apply_wall_shear(
    u: &mut FaceField,
    wall: &WallGeometry,
    eta: &CellField,
    rho: &CellField,
    dt: f64,
    params: &ForceParams,
    grid: &Grid,
) {
    if !wall.present || !params.wall_shear || params.wall_shear_coef <= 0.0 {
        return;
    }
    let band = WallBand::new(wall, grid);
    let mut delta = FaceField::zeros(grid, FaceTag::Velocity);
    for axis in Axis::ALL {
        let out = delta.get_mut(axis);
        for (idx, slot) in out.iter_mut().enumerate() {
            let f = grid.face_coords(axis, idx);
            let force = shear_vector(&band, u, wall, eta, params, grid, axis, f)[axis.index()];
            if force == 0.0 {
                continue;
            }
            let r = crate::pressure::face_density(rho, grid, axis, f);
            if !(r > 0.0) {
                continue;
            }
            let (_, g) = band.at_face(wall, grid, axis, f);
            let mag = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
            let ni = g[axis.index()] / mag;
            let gamma = params.wall_shear_coef * face_eta(eta, grid, axis, f) * mag / wall.eps0;
            *slot = dt * force / (r * (1.0 + dt * gamma * (1.0 - ni * ni) / r));
        }
    }
    for axis in Axis::ALL {
        for (v, d) in u.get_mut(axis).iter_mut().zip(delta.get(axis)) {
            *v += d;
        }
    }
}

/// Zero the velocity on closed faces (`A = 0`), which includes every face
/// touching a solid cell.
pub fn zero_closed_faces(u: &mut FaceField, wall: &WallGeometry) {
    for axis in Axis::ALL {
        let area = wall.area.get(axis);
        for (v, &a) in u.get_mut(axis).iter_mut().zip(area) {
            if a == 0.0 {
                *v = 0.0;
            }
        }
    }
}

/// Capillary force for the chosen formulation. `phases` holds
/// `[ξ₀ (wall), ξ₁, ξ₂]` with the pair tension matrix.
pub fn capillary_force(phases: &PhaseSet, grid: &Grid, params: &CapillaryParams) -> FaceField {
    let t = &phases.tension;
    match params.formulation {
        Formulation::TwoPhase => {
            let tau = capillary_stress_two(&phases.colors[1], t[1][2], grid, params);
            tensor_divergence(&tau, grid)
        }
        Formulation::WallSymmetric => {
            let p = proper_sigma(t[0][1], t[0][2], t[1][2]);
            let tau = capillary_stress_wall(
                &phases.colors[1],
                &phases.colors[2],
                p.sigma[1],
                p.sigma[2],
                grid,
                params,
            );
            tensor_divergence(&tau, grid)
        }
        Formulation::NPhase => capillary_force_multi(phases, grid, params),
    }
}

/// Everything `total_force` reads.
pub struct ForceInputs<'a> {
    pub grid: &'a Grid,
    pub phases: &'a PhaseSet,
    pub wall: &'a WallGeometry,
    pub u: &'a FaceField,
    pub eta: &'a CellField,
    pub capillary: &'a CapillaryParams,
}

/// `K = ∇·τ̄ + ∇·τ + τ̂`, face-located.
pub fn total_force(inputs: &ForceInputs<'_>, params: &ForceParams) -> FaceField {
    let grid = inputs.grid;
    let mut k = FaceField::zeros(grid, FaceTag::Force);
    let mut add = |other: &FaceField| {
        for axis in Axis::ALL {
            for (a, b) in k.get_mut(axis).iter_mut().zip(other.get(axis)) {
                *a += b;
            }
        }
    };
    if params.capillary {
        add(&capillary_force(inputs.phases, grid, inputs.capillary));
    }
    if params.viscous {
        add(&tensor_divergence(
            &viscous_stress(inputs.u, inputs.eta, grid),
            grid,
        ));
    }
    if params.wall_shear && params.wall_shear_coef > 0.0 {
        add(&wall_shear(inputs.u, inputs.wall, inputs.eta, params, grid));
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{face_divergence, AxisBoundary, BoundaryKind, CellTag};
    use crate::phase::{init_color_from_shape, wall_fractions, wall_phase_colors, ShapeSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_u(grid: &Grid, seed: u64) -> FaceField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FaceField::from_fn(grid, FaceTag::Velocity, |_, _| rng.gen_range(-1.0..1.0))
    }

    /// Brute-force strain: each derivative written out with explicit indices.
    fn strain_oracle(u: &FaceField, g: &Grid, c: [usize; 3]) -> [f64; 6] {
        let a = g.spacing();
        let [nx, ny, nz] = g.dims();
        let w = |v: isize, n: usize| v.rem_euclid(n as isize) as usize;
        let (i, j, k) = (c[0] as isize, c[1] as isize, c[2] as isize);
        let ux = |i: isize, j: isize, k: isize| u.at(g, Axis::X, [w(i, nx), w(j, ny), w(k, nz)]);
        let uy = |i: isize, j: isize, k: isize| u.at(g, Axis::Y, [w(i, nx), w(j, ny), w(k, nz)]);
        let uz = |i: isize, j: isize, k: isize| u.at(g, Axis::Z, [w(i, nx), w(j, ny), w(k, nz)]);
        let dux_dy = ((ux(i, j + 1, k) - ux(i, j - 1, k))
            + (ux(i + 1, j + 1, k) - ux(i + 1, j - 1, k)))
            / (4.0 * a);
        let dux_dz = ((ux(i, j, k + 1) - ux(i, j, k - 1))
            + (ux(i + 1, j, k + 1) - ux(i + 1, j, k - 1)))
            / (4.0 * a);
        let duy_dx = ((uy(i + 1, j, k) - uy(i - 1, j, k))
            + (uy(i + 1, j + 1, k) - uy(i - 1, j + 1, k)))
            / (4.0 * a);
        let duy_dz = ((uy(i, j, k + 1) - uy(i, j, k - 1))
            + (uy(i, j + 1, k + 1) - uy(i, j + 1, k - 1)))
            / (4.0 * a);
        let duz_dx = ((uz(i + 1, j, k) - uz(i - 1, j, k))
            + (uz(i + 1, j, k + 1) - uz(i - 1, j, k + 1)))
            / (4.0 * a);
        let duz_dy = ((uz(i, j + 1, k) - uz(i, j - 1, k))
            + (uz(i, j + 1, k + 1) - uz(i, j - 1, k + 1)))
            / (4.0 * a);
        [
            (ux(i + 1, j, k) - ux(i, j, k)) / a,
            (uy(i, j + 1, k) - uy(i, j, k)) / a,
            (uz(i, j, k + 1) - uz(i, j, k)) / a,
            0.5 * (dux_dy + duy_dx),
            0.5 * (dux_dz + duz_dx),
            0.5 * (duy_dz + duz_dy),
        ]
    }

    #[test]
    fn strain_matches_brute_force_stencil() {
        let g = Grid::periodic([5, 4, 6], 0.3).unwrap();
        let u = random_u(&g, 7);
        let e = strain_rate(&u, &g);
        for idx in 0..g.n_cells() {
            let o = strain_oracle(&u, &g, g.cell_coords(idx));
            for s in 0..6 {
                assert!((e.values[idx][s] - o[s]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rigid_translation_and_pure_shear() {
        let g = Grid::periodic([4, 4, 4], 0.5).unwrap();
        let u = FaceField::constant(&g, [0.3, -1.0, 2.0], FaceTag::Velocity);
        let e = strain_rate(&u, &g);
        assert!(e.values.iter().all(|t| t.iter().all(|v| v.abs() < 1e-14)));

        let g = Grid::new(
            [4, 4, 8],
            0.5,
            [
                AxisBoundary::PERIODIC,
                AxisBoundary::PERIODIC,
                AxisBoundary::SOLID,
            ],
        )
        .unwrap();
        let gamma = 0.8;
        let u = FaceField::from_fn(&g, FaceTag::Velocity, |axis, f| {
            if axis == Axis::X {
                gamma * g.face_center(axis, f)[2]
            } else {
                0.0
            }
        });
        let e = strain_rate(&u, &g);
        let eta = CellField::constant(&g, 0.1, CellTag::Viscosity);
        let tau = viscous_stress(&u, &eta, &g);
        for k in 1..7 {
            let idx = g.cell_index(1, 2, k);
            let t = e.values[idx];
            assert!((t[4] - gamma / 2.0).abs() < 1e-12);
            assert!(t[0].abs() + t[1].abs() + t[2].abs() + t[3].abs() + t[5].abs() < 1e-12);
            assert!((tau.values[idx][4] - 0.1 * gamma).abs() < 1e-12);
        }
    }

    #[test]
    fn viscous_stress_of_constant_field_is_zero_and_divergence_free_is_2_eta_e() {
        let g = Grid::periodic([6, 6, 6], 1.0).unwrap();
        let eta = CellField::constant(&g, 0.4, CellTag::Viscosity);
        let u = FaceField::constant(&g, [1.0, 2.0, 3.0], FaceTag::Velocity);
        assert!(viscous_stress(&u, &eta, &g)
            .values
            .iter()
            .all(|t| t.iter().all(|v| v.abs() < 1e-14)));
        // u_x = sin(2π z / L) is divergence free
        let u = FaceField::from_fn(&g, FaceTag::Velocity, |axis, f| {
            if axis == Axis::X {
                (2.0 * std::f64::consts::PI * (f[2] as f64 + 0.5) / 6.0).sin()
            } else {
                0.0
            }
        });
        let e = strain_rate(&u, &g);
        let tau = viscous_stress(&u, &eta, &g);
        for (t, e) in tau.values.iter().zip(&e.values) {
            for s in 0..6 {
                assert!((t[s] - 0.8 * e[s]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn viscous_force_dissipates() {
        let g = Grid::periodic([6, 5, 4], 0.5).unwrap();
        let one = FaceField::constant(&g, [1.0; 3], FaceTag::AreaFraction);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let eta = CellField::from_fn(&g, CellTag::Viscosity, |_| rng.gen_range(0.05..1.0));
        for seed in 0..5 {
            // divergence-free by construction: discrete curl of a random edge potential
            let psi = random_u(&g, 100 + seed);
            let u = discrete_curl(&psi, &g);
            assert!(face_divergence(&u, &one, &g).max_abs() < 1e-12);
            let k = tensor_divergence(&viscous_stress(&u, &eta, &g), &g);
            let dot: f64 = Axis::ALL
                .iter()
                .map(|&ax| {
                    u.get(ax)
                        .iter()
                        .zip(k.get(ax))
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                })
                .sum();
            assert!(dot <= 1e-12, "{dot}");
        }
    }

    /// Curl of an edge-located vector potential stored in a face-shaped container
    /// (component `d` of `psi` lives on edges parallel to axis `d`).
    fn discrete_curl(psi: &FaceField, g: &Grid) -> FaceField {
        let a = g.spacing();
        let p = |d: Axis, c: [usize; 3], sh: [isize; 3]| -> f64 {
            let mut q = c;
            for ax in Axis::ALL {
                q = g.shift(q, ax, sh[ax.index()]).unwrap();
            }
            psi.at(g, d, q)
        };
        FaceField::from_fn(g, FaceTag::Velocity, |axis, f| match axis {
            Axis::X => {
                (p(Axis::Z, f, [0, 1, 0]) - p(Axis::Z, f, [0, 0, 0])) / a
                    - (p(Axis::Y, f, [0, 0, 1]) - p(Axis::Y, f, [0, 0, 0])) / a
            }
            Axis::Y => {
                (p(Axis::X, f, [0, 0, 1]) - p(Axis::X, f, [0, 0, 0])) / a
                    - (p(Axis::Z, f, [1, 0, 0]) - p(Axis::Z, f, [0, 0, 0])) / a
            }
            Axis::Z => {
                (p(Axis::Y, f, [1, 0, 0]) - p(Axis::Y, f, [0, 0, 0])) / a
                    - (p(Axis::X, f, [0, 1, 0]) - p(Axis::X, f, [0, 0, 0])) / a
            }
        })
    }

    fn floor_wall(g: &Grid) -> WallGeometry {
        wall_fractions(
            &ShapeSpec::HalfSpace {
                point: [0.0, 0.0, 1.0],
                normal: [0.0, 0.0, 1.0],
            },
            g,
            g.spacing(),
        )
        .unwrap()
    }

    #[test]
    fn wall_shear_is_tangential() {
        let g = Grid::new(
            [6, 2, 10],
            0.25,
            [
                AxisBoundary::PERIODIC,
                AxisBoundary::PERIODIC,
                AxisBoundary::SOLID,
            ],
        )
        .unwrap();
        let wall = floor_wall(&g);
        let eta = CellField::constant(&g, 0.1, CellTag::Viscosity);
        let params = ForceParams::default();
        let u = random_u(&g, 11);
        let grad = cell_gradient(&wall.xi0, &g);
        let mut nonzero = 0;
        for axis in Axis::ALL {
            for idx in 0..g.n_faces(axis) {
                let f = g.face_coords(axis, idx);
                let v = wall_shear_vector(&u, &wall, &eta, &params, &g, axis, f);
                let (lo, hi) = g.face_cells(axis, f);
                let cells: Vec<usize> = [lo, hi]
                    .into_iter()
                    .flatten()
                    .map(|c| g.cell_index(c[0], c[1], c[2]))
                    .collect();
                let n: Vec<f64> = (0..3)
                    .map(|d| cells.iter().map(|&c| grad[d].values[c]).sum::<f64>())
                    .collect();
                let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                if len > 0.0 {
                    let dot = (v[0] * n[0] + v[1] * n[1] + v[2] * n[2]) / len;
                    assert!(dot.abs() < 1e-12);
                }
                if v != [0.0; 3] {
                    nonzero += 1;
                }
            }
        }
        assert!(nonzero > 0);
    }

    #[test]
    fn wall_shear_normal_flow_and_tangential_magnitude() {
        let g = Grid::new(
            [6, 2, 10],
            0.25,
            [
                AxisBoundary::PERIODIC,
                AxisBoundary::PERIODIC,
                AxisBoundary::SOLID,
            ],
        )
        .unwrap();
        let wall = floor_wall(&g);
        let eta = CellField::constant(&g, 0.1, CellTag::Viscosity);
        let params = ForceParams {
            wall_shear_coef: 2.0,
            ..ForceParams::default()
        };
        let normal_flow = FaceField::constant(&g, [0.0, 0.0, 1.0], FaceTag::Velocity);
        assert!(wall_shear(&normal_flow, &wall, &eta, &params, &g).max_abs() < 1e-15);

        let w = 0.7;
        let tangential = FaceField::constant(&g, [w, 0.0, 0.0], FaceTag::Velocity);
        let k = wall_shear(&tangential, &wall, &eta, &params, &g);
        let grad = cell_gradient(&wall.xi0, &g);
        // x-face at height k sits between two cells of the same layer
        for kk in 0..g.nz() {
            let idx = g.cell_index(2, 0, kk);
            let xi0 = wall.xi0.values[idx];
            let got = k.at(&g, Axis::X, [2, 0, kk]);
            if xi0 > 0.0 && xi0 < 1.0 {
                let expect = -2.0 * 0.1 * w * grad[2].values[idx].abs() / wall.eps0;
                assert!((got - expect).abs() < 1e-12, "{got} {expect}");
            } else {
                assert_eq!(got, 0.0);
            }
        }
    }

    #[test]
    fn damping_only_run_kills_tangential_band_velocity() {
        let g = Grid::new(
            [4, 2, 10],
            0.25,
            [
                AxisBoundary::PERIODIC,
                AxisBoundary::PERIODIC,
                AxisBoundary::SOLID,
            ],
        )
        .unwrap();
        let wall = floor_wall(&g);
        let eta = CellField::constant(&g, 0.1, CellTag::Viscosity);
        let params = ForceParams {
            wall_shear_coef: 1.0,
            capillary: false,
            viscous: false,
            wall_shear: true,
        };
        let rho = 1.0;
        let dt = 0.01;
        let mut u = FaceField::constant(&g, [1.0, 0.0, 0.0], FaceTag::Velocity);
        zero_closed_faces(&mut u, &wall);
        let band_faces: Vec<usize> = (0..g.n_faces(Axis::X))
            .filter(|&i| {
                let f = g.face_coords(Axis::X, i);
                let x = wall.xi0.at(&g, [f[0], f[1], f[2]]);
                x > 0.0 && x < 1.0 && wall.area.get(Axis::X)[i] > 0.0
            })
            .collect();
        assert!(!band_faces.is_empty());
        let initial = band_faces
            .iter()
            .map(|&i| u.get(Axis::X)[i].abs())
            .fold(0.0, f64::max);
        for _ in 0..10_000 {
            let k = wall_shear(&u, &wall, &eta, &params, &g);
            for (v, f) in u.get_mut(Axis::X).iter_mut().zip(k.get(Axis::X)) {
                *v += dt * f / rho;
            }
        }
        let last = band_faces
            .iter()
            .map(|&i| u.get(Axis::X)[i].abs())
            .fold(0.0, f64::max);
        assert!(last <= 1e-6 * initial, "{last}");
    }

    #[test]
    fn total_force_examples() {
        let g = Grid::periodic([4, 4, 16], 0.5).unwrap();
        let f = init_color_from_shape(
            &ShapeSpec::Box {
                min: [-1.0, -1.0, 2.0],
                max: [9.0, 9.0, 6.0],
            },
            &g,
            0.5,
        )
        .unwrap();
        let wall = WallGeometry::none(&g);
        let colors = wall_phase_colors(&f, &wall).to_vec();
        let mut t = vec![vec![0.0; 3]; 3];
        t[1][2] = 2.0;
        t[2][1] = 2.0;
        let phases =
            PhaseSet::new(colors.clone(), vec![0.0, 1.0, 1.0], vec![0.0, 0.1, 0.1], t).unwrap();
        let u = FaceField::zeros(&g, FaceTag::Velocity);
        let eta = CellField::constant(&g, 0.1, CellTag::Viscosity);
        let cap = CapillaryParams::default();
        let inputs = ForceInputs {
            grid: &g,
            phases: &phases,
            wall: &wall,
            u: &u,
            eta: &eta,
            capillary: &cap,
        };
        let k = total_force(&inputs, &ForceParams::default());
        // a flat film at rest is in equilibrium: τ_zz = τ_xz = 0
        assert!(k.max_abs() < 1e-12);

        let off = ForceParams {
            capillary: false,
            viscous: false,
            wall_shear: false,
            ..ForceParams::default()
        };
        assert_eq!(total_force(&inputs, &off).max_abs(), 0.0);

        // Couette profile in a periodic-x, walled-z channel: interior Laplacian is zero
        let g = Grid::new(
            [4, 2, 10],
            0.5,
            [
                AxisBoundary::PERIODIC,
                AxisBoundary::PERIODIC,
                AxisBoundary::both(BoundaryKind::Symmetry),
            ],
        )
        .unwrap();
        let u = FaceField::from_fn(&g, FaceTag::Velocity, |axis, f| {
            if axis == Axis::X {
                0.3 * g.face_center(axis, f)[2]
            } else {
                0.0
            }
        });
        let wall = WallGeometry::none(&g);
        let ones = CellField::constant(&g, 1.0, CellTag::Color);
        let zeros = CellField::zeros(&g, CellTag::Color);
        let phases = PhaseSet::new(
            vec![zeros.clone(), ones, zeros],
            vec![1.0; 3],
            vec![0.1; 3],
            vec![vec![0.0; 3]; 3],
        )
        .unwrap();
        let eta = CellField::constant(&g, 0.1, CellTag::Viscosity);
        let inputs = ForceInputs {
            grid: &g,
            phases: &phases,
            wall: &wall,
            u: &u,
            eta: &eta,
            capillary: &cap,
        };
        let visc = ForceParams {
            capillary: false,
            wall_shear: false,
            ..ForceParams::default()
        };
        let k = total_force(&inputs, &visc);
        for kk in 2..g.nz() - 2 {
            assert!(k.at(&g, Axis::X, [1, 0, kk]).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_total_force_sums_to_zero() {
        let g = Grid::periodic([12, 12, 12], 0.25).unwrap();
        let f = init_color_from_shape(
            &ShapeSpec::Sphere {
                center: [1.4, 1.5, 1.6],
                radius: 0.9,
            },
            &g,
            0.5,
        )
        .unwrap();
        let wall = WallGeometry::none(&g);
        let colors = wall_phase_colors(&f, &wall).to_vec();
        let mut t = vec![vec![0.0; 3]; 3];
        t[1][2] = 5.0;
        t[2][1] = 5.0;
        let phases = PhaseSet::new(colors, vec![0.0, 1.0, 2.0], vec![0.0, 0.1, 0.3], t).unwrap();
        let u = random_u(&g, 5);
        let eta = CellField::from_fn(&g, CellTag::Viscosity, |c| 0.1 + 0.01 * c[0] as f64);
        let cap = CapillaryParams::default();
        let inputs = ForceInputs {
            grid: &g,
            phases: &phases,
            wall: &wall,
            u: &u,
            eta: &eta,
            capillary: &cap,
        };
        let k = total_force(&inputs, &ForceParams::default());
        for axis in Axis::ALL {
            let s: f64 = k.get(axis).iter().sum();
            let l1: f64 = k.get(axis).iter().map(|v| v.abs()).sum();
            assert!(s.abs() <= 1e-8 * l1, "{axis:?}: {s} vs {l1}");
        }
    }
}
