//! Variable-coefficient pressure Poisson equation over open-area fractions,
//! preconditioned conjugate gradients and the projection step.

use serde::{Deserialize, Serialize};

use crate::error::PressureError;
use crate::lattice::{
    face_divergence, Axis, BoundaryKind, CellField, CellTag, FaceField, FaceTag, Grid,
};

const DIRICHLET: u32 = u32::MAX;

/// `L p = Σ_faces c_f (p_nb − p_c)` with `c_f = A Δt / (ρ_f a²)`.
///
/// Stored negated (`M = −L`, positive semi-definite) as six neighbour links
/// per cell. Dirichlet links point at [`DIRICHLET`] and carry the boundary
/// pressure in `bc`; rows of solid or fully enclosed cells are identity rows.
#[derive(Debug, Clone)]
pub struct PoissonOperator {
    n: usize,
    nb: Vec<[u32; 6]>,
    coef: Vec<[f64; 6]>,
    diag: Vec<f64>,
    /// `Σ c_f p₀` over Dirichlet links.
    bc: Vec<f64>,
    active: Vec<bool>,
    /// True when no Dirichlet link exists: constants are in the kernel.
    pub null_space: bool,
}

impl PoissonOperator {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.active[idx]
    }

    /// `y = M x`.
    pub fn apply_neg(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            if !self.active[i] {
                y[i] = x[i];
                continue;
            }
            let mut s = self.diag[i] * x[i];
            let nb = &self.nb[i];
            let cf = &self.coef[i];
            for k in 0..6 {
                let j = nb[k];
                if j != DIRICHLET && cf[k] != 0.0 {
                    s -= cf[k] * x[j as usize];
                }
            }
            y[i] = s;
        }
    }

    /// Physical operator `L p` including the boundary pressures.
    pub fn apply(&self, p: &CellField) -> CellField {
        let mut y = vec![0.0; self.n];
        self.apply_neg(&p.values, &mut y);
        let values = (0..self.n)
            .map(|i| {
                if self.active[i] {
                    self.bc[i] - y[i]
                } else {
                    p.values[i]
                }
            })
            .collect();
        CellField {
            values,
            tag: CellTag::Other,
        }
    }

    /// Dense `L` (homogeneous part) for small-grid checks.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        let mut e = vec![0.0; self.n];
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            e[j] = 1.0;
            self.apply_neg(&e, &mut y);
            for i in 0..self.n {
                m[i][j] = if self.active[i] { -y[i] } else { y[i] };
            }
            e[j] = 0.0;
        }
        m
    }

    /// Boundary contribution `Σ c_f p₀` per cell.
    pub fn boundary_term(&self) -> &[f64] {
        &self.bc
    }
}

/// Face density: arithmetic mean of the adjacent cells (the interior cell
/// on domain boundaries).
pub fn face_density(rho: &CellField, grid: &Grid, axis: Axis, f: [usize; 3]) -> f64 {
    match grid.face_cells(axis, f) {
        (Some(l), Some(h)) => 0.5 * (rho.at(grid, l) + rho.at(grid, h)),
        (Some(c), None) | (None, Some(c)) => rho.at(grid, c),
        (None, None) => 0.0,
    }
}

/// Face coefficients `A Δt / ρ_f` of the pressure gradient term; zero on
/// closed faces, faces touching a zero-density (solid) cell and on solid or
/// symmetry boundaries.
pub fn gradient_coefficients(rho: &CellField, area: &FaceField, dt: f64, grid: &Grid) -> FaceField {
    FaceField::from_fn(grid, FaceTag::Other, |axis, f| {
        let a = area.at(grid, axis, f);
        if a == 0.0 {
            return 0.0;
        }
        match grid.face_boundary(axis, f) {
            Some(BoundaryKind::FixedPressure { .. }) | None => {}
            _ => return 0.0,
        }
        let (l, h) = grid.face_cells(axis, f);
        if [l, h]
            .into_iter()
            .flatten()
            .any(|c| !(rho.at(grid, c) > 0.0))
        {
            return 0.0;
        }
        let r = face_density(rho, grid, axis, f);
        if r > 0.0 {
            a * dt / r
        } else {
            0.0
        }
    })
}

pub fn assemble_poisson(
    rho: &CellField,
    area: &FaceField,
    volume: &CellField,
    dt: f64,
    grid: &Grid,
) -> Result<PoissonOperator, PressureError> {
    let n = grid.n_cells();
    for i in 0..n {
        if volume.values[i] > 0.0 && !(rho.values[i] > 0.0) {
            return Err(PressureError::ZeroDensity(i));
        }
    }
    let a2 = grid.spacing() * grid.spacing();
    let gc = gradient_coefficients(rho, area, dt, grid);
    let mut op = PoissonOperator {
        n,
        nb: vec![[DIRICHLET; 6]; n],
        coef: vec![[0.0; 6]; n],
        diag: vec![0.0; n],
        bc: vec![0.0; n],
        active: vec![false; n],
        null_space: true,
    };
    for i in 0..n {
        if volume.values[i] <= 0.0 {
            continue;
        }
        let c = grid.cell_coords(i);
        let mut diag = 0.0;
        for axis in Axis::ALL {
            for (slot, hi) in [(2 * axis.index(), false), (2 * axis.index() + 1, true)] {
                let face = if hi {
                    grid.hi_face(c, axis)
                } else {
                    grid.lo_face(c, axis)
                };
                let k = gc.at(grid, axis, face) / a2;
                if k == 0.0 {
                    continue;
                }
                match grid.shift(c, axis, if hi { 1 } else { -1 }) {
                    Some(nc) => {
                        let j = grid.cell_index(nc[0], nc[1], nc[2]);
                        if volume.values[j] <= 0.0 {
                            continue;
                        }
                        op.nb[i][slot] = j as u32;
                    }
                    None => {
                        let BoundaryKind::FixedPressure { pressure_kpa } =
                            grid.boundary(axis).side(hi)
                        else {
                            continue;
                        };
                        op.bc[i] += k * pressure_kpa;
                        op.null_space = false;
                    }
                }
                op.coef[i][slot] = k;
                diag += k;
            }
        }
        op.diag[i] = diag;
        op.active[i] = diag > 0.0;
    }
    Ok(op)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Preconditioner {
    None,
    #[default]
    Jacobi,
    /// Incomplete factorisation keeping only the diagonal (`D-ILU`).
    Dilu,
}

impl std::str::FromStr for Preconditioner {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Preconditioner::None),
            "jacobi" | "diagonal" => Ok(Preconditioner::Jacobi),
            "dilu" => Ok(Preconditioner::Dilu),
            other => Err(format!("unknown preconditioner `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcgConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub preconditioner: Preconditioner,
}

impl Default for PcgConfig {
    fn default() -> Self {
        PcgConfig {
            tol: 1e-8,
            max_iter: 5000,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PcgResult {
    pub p: CellField,
    pub iterations: usize,
    /// `‖b − M p‖ / ‖b‖` on exit.
    pub residual: f64,
    /// `‖b‖₂` of the system actually solved.
    pub rhs_norm: f64,
}

enum Precond<'a> {
    None,
    Jacobi(Vec<f64>),
    Dilu {
        op: &'a PoissonOperator,
        d: Vec<f64>,
    },
}

impl<'a> Precond<'a> {
    fn new(op: &'a PoissonOperator, kind: Preconditioner) -> Self {
        match kind {
            Preconditioner::None => Precond::None,
            Preconditioner::Jacobi => Precond::Jacobi(
                (0..op.n)
                    .map(|i| if op.active[i] { 1.0 / op.diag[i] } else { 1.0 })
                    .collect(),
            ),
            Preconditioner::Dilu => {
                let mut d = vec![1.0; op.n];
                for i in 0..op.n {
                    if !op.active[i] {
                        continue;
                    }
                    let mut di = op.diag[i];
                    for k in 0..6 {
                        let j = op.nb[i][k];
                        if j != DIRICHLET && (j as usize) < i {
                            let a = op.coef[i][k];
                            di -= a * a / d[j as usize];
                        }
                    }
                    // guard against breakdown on badly scaled rows
                    d[i] = if di > 1e-3 * op.diag[i] {
                        di
                    } else {
                        op.diag[i]
                    };
                }
                Precond::Dilu { op, d }
            }
        }
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Precond::None => z.copy_from_slice(r),
            Precond::Jacobi(inv) => {
                for ((z, r), w) in z.iter_mut().zip(r).zip(inv) {
                    *z = r * w;
                }
            }
            Precond::Dilu { op, d } => {
                // (D + L) D⁻¹ (D + Lᵀ) z = r with L the strictly lower part of M
                let n = op.n;
                for i in 0..n {
                    let mut s = r[i];
                    if op.active[i] {
                        for k in 0..6 {
                            let j = op.nb[i][k];
                            if j != DIRICHLET && (j as usize) < i {
                                s += op.coef[i][k] * z[j as usize];
                            }
                        }
                    }
                    z[i] = s / d[i];
                }
                for i in 0..n {
                    z[i] *= d[i];
                }
                for i in (0..n).rev() {
                    let mut s = z[i];
                    if op.active[i] {
                        for k in 0..6 {
                            let j = op.nb[i][k];
                            if j != DIRICHLET && (j as usize) > i {
                                s += op.coef[i][k] * z[j as usize];
                            }
                        }
                    }
                    z[i] = s / d[i];
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn remove_mean(x: &mut [f64], active: &[bool]) {
    let (mut s, mut n) = (0.0, 0usize);
    for (v, &a) in x.iter().zip(active) {
        if a {
            s += v;
            n += 1;
        }
    }
    if n == 0 {
        return;
    }
    let m = s / n as f64;
    for (v, &a) in x.iter_mut().zip(active) {
        if a {
            *v -= m;
        }
    }
}

/// Solve `L p = rhs` (boundary pressures included through the operator).
///
/// `guess` warm-starts the iteration. When the operator has a constant
/// kernel the right-hand side is projected to zero mean over active cells
/// and the solution is mean-pinned to zero.
pub fn pcg_solve(
    op: &PoissonOperator,
    rhs: &CellField,
    cfg: &PcgConfig,
    guess: Option<&CellField>,
) -> Result<PcgResult, PressureError> {
    let n = op.n;
    // M p = bc − rhs on active rows; identity rows keep p = 0
    let mut b: Vec<f64> = (0..n)
        .map(|i| {
            if op.active[i] {
                op.bc[i] - rhs.values[i]
            } else {
                0.0
            }
        })
        .collect();
    if op.null_space {
        remove_mean(&mut b, &op.active);
    }
    let bnorm = dot(&b, &b).sqrt();
    let mut x: Vec<f64> = match guess {
        Some(g) => (0..n)
            .map(|i| if op.active[i] { g.values[i] } else { 0.0 })
            .collect(),
        None => vec![0.0; n],
    };
    let done = |x: Vec<f64>, iterations, residual| PcgResult {
        p: CellField {
            values: x,
            tag: CellTag::Pressure,
        },
        iterations,
        residual,
        rhs_norm: bnorm,
    };
    if bnorm == 0.0 {
        return Ok(done(vec![0.0; n], 0, 0.0));
    }
    let mut r = vec![0.0; n];
    op.apply_neg(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    if op.null_space {
        remove_mean(&mut r, &op.active);
    }
    let target = cfg.tol * bnorm;
    let mut rnorm = dot(&r, &r).sqrt();
    if rnorm <= target {
        if op.null_space {
            remove_mean(&mut x, &op.active);
        }
        return Ok(done(x, 0, rnorm / bnorm));
    }
    let pre = Precond::new(op, cfg.preconditioner);
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    let mut d = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    for it in 1..=cfg.max_iter {
        op.apply_neg(&d, &mut q);
        let dq = dot(&d, &q);
        if !(dq > 0.0) {
            break;
        }
        let alpha = rz / dq;
        for i in 0..n {
            x[i] += alpha * d[i];
            r[i] -= alpha * q[i];
        }
        rnorm = dot(&r, &r).sqrt();
        if rnorm <= target {
            if op.null_space {
                remove_mean(&mut x, &op.active);
            }
            return Ok(done(x, it, rnorm / bnorm));
        }
        pre.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            d[i] = z[i] + beta * d[i];
        }
    }
    Err(PressureError::NotConverged {
        iterations: cfg.max_iter,
        residual: rnorm / bnorm,
    })
}

/// `u = u* − (A Δt / ρ_f) ∇p` on open faces; closed faces and solid or
/// symmetry boundary faces are set to zero.
pub fn project(
    u_star: &FaceField,
    p: &CellField,
    rho: &CellField,
    area: &FaceField,
    dt: f64,
    grid: &Grid,
) -> FaceField {
    let a = grid.spacing();
    let gc = gradient_coefficients(rho, area, dt, grid);
    let mut out = FaceField::zeros(grid, FaceTag::Velocity);
    for axis in Axis::ALL {
        let k = gc.get(axis);
        let us = u_star.get(axis);
        let ar = area.get(axis);
        for idx in 0..grid.n_faces(axis) {
            if ar[idx] == 0.0 || k[idx] == 0.0 {
                continue;
            }
            let f = grid.face_coords(axis, idx);
            let ghost = || match grid.face_boundary(axis, f) {
                Some(BoundaryKind::FixedPressure { pressure_kpa }) => pressure_kpa,
                _ => unreachable!("open boundary face without fixed pressure"),
            };
            let (pl, ph) = match grid.face_cells(axis, f) {
                (Some(l), Some(h)) => (p.at(grid, l), p.at(grid, h)),
                (Some(l), None) => (p.at(grid, l), ghost()),
                (None, Some(h)) => (ghost(), p.at(grid, h)),
                (None, None) => continue,
            };
            // `k` is A Δt / ρ; velocity update divides out A
            out.get_mut(axis)[idx] = us[idx] - k[idx] / ar[idx] * (ph - pl) / a;
        }
    }
    out
}

/// Outcome of a full pressure step.
#[derive(Debug, Clone)]
pub struct Projection {
    pub u: FaceField,
    pub p: CellField,
    pub iterations: usize,
    pub residual: f64,
    pub rhs_norm: f64,
    /// `max |∇·(A u)|` after projection.
    pub max_divergence: f64,
}

/// Assemble, solve and project in one go.
#[allow(clippy::too_many_arguments)]
pub fn pressure_step(
    u_star: &FaceField,
    rho: &CellField,
    area: &FaceField,
    volume: &CellField,
    dt: f64,
    grid: &Grid,
    cfg: &PcgConfig,
    guess: Option<&CellField>,
) -> Result<Projection, PressureError> {
    let op = assemble_poisson(rho, area, volume, dt, grid)?;
    // faces the projection cannot act on carry no flux
    let gc = gradient_coefficients(rho, area, dt, grid);
    let mut masked = u_star.clone();
    for axis in Axis::ALL {
        for (v, &k) in masked.get_mut(axis).iter_mut().zip(gc.get(axis)) {
            if k == 0.0 {
                *v = 0.0;
            }
        }
    }
    let u_star = &masked;
    let mut rhs = face_divergence(u_star, area, grid);
    for (i, v) in rhs.values.iter_mut().enumerate() {
        if !op.is_active(i) {
            *v = 0.0;
        }
    }
    let sol = pcg_solve(&op, &rhs, cfg, guess)?;
    let u = project(u_star, &sol.p, rho, area, dt, grid);
    let div = face_divergence(&u, area, grid);
    let max_divergence = (0..grid.n_cells())
        .filter(|&i| op.is_active(i))
        .map(|i| div.values[i].abs())
        .fold(0.0, f64::max);
    let mut p = sol.p;
    fill_inactive(&mut p, &op, grid);
    Ok(Projection {
        u,
        p,
        iterations: sol.iterations,
        residual: sol.residual,
        rhs_norm: sol.rhs_norm,
        max_divergence,
    })
}

/// Give inactive (solid) cells the mean of their active neighbours so the
/// written pressure field is continuous across the wall.
fn fill_inactive(p: &mut CellField, op: &PoissonOperator, grid: &Grid) {
    let mut known: Vec<bool> = (0..grid.n_cells()).map(|i| op.is_active(i)).collect();
    for _ in 0..4 {
        let mut changed = false;
        let snapshot = p.values.clone();
        let prev = known.clone();
        for i in 0..grid.n_cells() {
            if prev[i] {
                continue;
            }
            let c = grid.cell_coords(i);
            let (mut s, mut m) = (0.0, 0);
            for axis in Axis::ALL {
                for d in [-1, 1] {
                    if let Some(nc) = grid.shift(c, axis, d) {
                        let j = grid.cell_index(nc[0], nc[1], nc[2]);
                        if prev[j] {
                            s += snapshot[j];
                            m += 1;
                        }
                    }
                }
            }
            if m > 0 {
                p.values[i] = s / m as f64;
                known[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}
