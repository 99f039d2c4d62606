//! Staggered (MAC) lattice: cell and face indexing, field containers,
//! discrete differential operators and boundary handling.
//!
//! Scalars live at cell centres, the three velocity components live on the
//! x-, y- and z-faces. Cells are cubes of side `spacing` (μm). Cell `(i,j,k)`
//! is stored at `i + nx*(j + ny*k)`; faces use the same layout with the face
//! count along their own axis (`n` if periodic, `n+1` otherwise).

use serde::{Deserialize, Serialize};

use crate::error::LatticeError;

/// One of the three lattice axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X = 0,
    Y = 1,
    Z = 2,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Boundary treatment on one side of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundaryKind {
    Periodic,
    /// Dirichlet pressure (kPa, i.e. pg/(μm·μs²)); velocity is left free.
    FixedPressure {
        pressure_kpa: f64,
    },
    /// Mirror: zero normal gradient for scalars, zero normal velocity.
    Symmetry,
    /// No-penetration wall at the domain edge.
    Solid,
}

/// Low/high boundary pair along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisBoundary {
    pub lo: BoundaryKind,
    pub hi: BoundaryKind,
}

impl AxisBoundary {
    pub const PERIODIC: AxisBoundary = AxisBoundary {
        lo: BoundaryKind::Periodic,
        hi: BoundaryKind::Periodic,
    };

    pub const SOLID: AxisBoundary = AxisBoundary {
        lo: BoundaryKind::Solid,
        hi: BoundaryKind::Solid,
    };

    pub fn both(kind: BoundaryKind) -> Self {
        AxisBoundary { lo: kind, hi: kind }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.lo, BoundaryKind::Periodic)
    }

    pub fn side(&self, hi: bool) -> BoundaryKind {
        if hi {
            self.hi
        } else {
            self.lo
        }
    }
}

/// Uniform cubic lattice with per-axis boundary specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dims: [usize; 3],
    spacing: f64,
    bounds: [AxisBoundary; 3],
}

impl Grid {
    /// Validates dimensions, spacing and boundary pairing.
    pub fn new(
        dims: [usize; 3],
        spacing: f64,
        bounds: [AxisBoundary; 3],
    ) -> Result<Self, LatticeError> {
        for (axis, &n) in dims.iter().enumerate() {
            if n < 2 {
                return Err(LatticeError::DimensionTooSmall { axis, n });
            }
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(LatticeError::BadSpacing(spacing));
        }
        for (axis, b) in bounds.iter().enumerate() {
            let lo_p = matches!(b.lo, BoundaryKind::Periodic);
            let hi_p = matches!(b.hi, BoundaryKind::Periodic);
            if lo_p != hi_p {
                return Err(LatticeError::HalfPeriodic { axis });
            }
            for kind in [b.lo, b.hi] {
                if let BoundaryKind::FixedPressure { pressure_kpa } = kind {
                    if !pressure_kpa.is_finite() {
                        return Err(LatticeError::BadBoundaryValue { axis });
                    }
                }
            }
        }
        Ok(Grid {
            dims,
            spacing,
            bounds,
        })
    }

    /// Fully periodic grid, convenient for tests and fuzzing.
    pub fn periodic(dims: [usize; 3], spacing: f64) -> Result<Self, LatticeError> {
        Grid::new(dims, spacing, [AxisBoundary::PERIODIC; 3])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn nx(&self) -> usize {
        self.dims[0]
    }

    pub fn ny(&self) -> usize {
        self.dims[1]
    }

    pub fn nz(&self) -> usize {
        self.dims[2]
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn bounds(&self) -> &[AxisBoundary; 3] {
        &self.bounds
    }

    pub fn boundary(&self, axis: Axis) -> AxisBoundary {
        self.bounds[axis.index()]
    }

    pub fn is_periodic(&self, axis: Axis) -> bool {
        self.bounds[axis.index()].is_periodic()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(3)
    }

    /// Physical extent of the domain in μm.
    pub fn extent(&self) -> [f64; 3] {
        [
            self.dims[0] as f64 * self.spacing,
            self.dims[1] as f64 * self.spacing,
            self.dims[2] as f64 * self.spacing,
        ]
    }

    pub fn n_cells(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn cell_coords(&self, idx: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    pub fn cell_center(&self, c: [usize; 3]) -> [f64; 3] {
        let a = self.spacing;
        [
            (c[0] as f64 + 0.5) * a,
            (c[1] as f64 + 0.5) * a,
            (c[2] as f64 + 0.5) * a,
        ]
    }

    /// Face dimensions for faces normal to `axis`.
    pub fn face_dims(&self, axis: Axis) -> [usize; 3] {
        let mut d = self.dims;
        if !self.is_periodic(axis) {
            d[axis.index()] += 1;
        }
        d
    }

    pub fn n_faces(&self, axis: Axis) -> usize {
        let d = self.face_dims(axis);
        d[0] * d[1] * d[2]
    }

    #[inline]
    pub fn face_index(&self, axis: Axis, f: [usize; 3]) -> usize {
        let d = self.face_dims(axis);
        f[0] + d[0] * (f[1] + d[1] * f[2])
    }

    #[inline]
    pub fn face_coords(&self, axis: Axis, idx: usize) -> [usize; 3] {
        let d = self.face_dims(axis);
        [idx % d[0], (idx / d[0]) % d[1], idx / (d[0] * d[1])]
    }

    /// Position of the centre of a face in μm.
    pub fn face_center(&self, axis: Axis, f: [usize; 3]) -> [f64; 3] {
        let a = self.spacing;
        let mut p = [
            (f[0] as f64 + 0.5) * a,
            (f[1] as f64 + 0.5) * a,
            (f[2] as f64 + 0.5) * a,
        ];
        p[axis.index()] -= 0.5 * a;
        p
    }

    /// Neighbouring cell `d` steps along `axis`; wraps on periodic axes,
    /// `None` when leaving the domain.
    #[inline]
    pub fn shift(&self, c: [usize; 3], axis: Axis, d: isize) -> Option<[usize; 3]> {
        let ax = axis.index();
        let n = self.dims[ax] as isize;
        let mut v = c[ax] as isize + d;
        if v < 0 || v >= n {
            if self.is_periodic(axis) {
                v = v.rem_euclid(n);
            } else {
                return None;
            }
        }
        let mut out = c;
        out[ax] = v as usize;
        Some(out)
    }

    /// Face below (lower side of) cell `c` along `axis`.
    #[inline]
    pub fn lo_face(&self, c: [usize; 3], _axis: Axis) -> [usize; 3] {
        c
    }

    /// Face above (upper side of) cell `c` along `axis`.
    #[inline]
    pub fn hi_face(&self, c: [usize; 3], axis: Axis) -> [usize; 3] {
        let ax = axis.index();
        let mut f = c;
        f[ax] += 1;
        if self.is_periodic(axis) && f[ax] == self.dims[ax] {
            f[ax] = 0;
        }
        f
    }

    /// The two cells sharing a face: `(lower, upper)`. A side is `None` on a
    /// non-periodic domain boundary.
    #[inline]
    pub fn face_cells(
        &self,
        axis: Axis,
        f: [usize; 3],
    ) -> (Option<[usize; 3]>, Option<[usize; 3]>) {
        let ax = axis.index();
        let n = self.dims[ax];
        let upper = if f[ax] < n { Some(f) } else { None };
        let lower = if f[ax] > 0 {
            let mut c = f;
            c[ax] -= 1;
            Some(c)
        } else if self.is_periodic(axis) {
            let mut c = f;
            c[ax] = n - 1;
            Some(c)
        } else {
            None
        };
        (lower, upper)
    }

    /// Boundary side hit by a face, if the face lies on a non-periodic edge.
    pub fn face_boundary(&self, axis: Axis, f: [usize; 3]) -> Option<BoundaryKind> {
        if self.is_periodic(axis) {
            return None;
        }
        let ax = axis.index();
        let b = self.bounds[ax];
        if f[ax] == 0 {
            Some(b.lo)
        } else if f[ax] == self.dims[ax] {
            Some(b.hi)
        } else {
            None
        }
    }

    pub fn has_fixed_pressure(&self) -> bool {
        self.bounds.iter().any(|b| {
            matches!(b.lo, BoundaryKind::FixedPressure { .. })
                || matches!(b.hi, BoundaryKind::FixedPressure { .. })
        })
    }
}

/// What a cell-centred scalar represents; drives boundary treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellTag {
    Fraction,
    Density,
    Viscosity,
    Pressure,
    Color,
    /// Cell-averaged velocity component (output only).
    Velocity,
    Other,
}

/// One scalar per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    pub values: Vec<f64>,
    pub tag: CellTag,
}

impl CellField {
    pub fn constant(grid: &Grid, value: f64, tag: CellTag) -> Self {
        CellField {
            values: vec![value; grid.n_cells()],
            tag,
        }
    }

    pub fn zeros(grid: &Grid, tag: CellTag) -> Self {
        Self::constant(grid, 0.0, tag)
    }

    pub fn from_fn(grid: &Grid, tag: CellTag, mut f: impl FnMut([usize; 3]) -> f64) -> Self {
        let values = (0..grid.n_cells())
            .map(|idx| f(grid.cell_coords(idx)))
            .collect();
        CellField { values, tag }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn at(&self, grid: &Grid, c: [usize; 3]) -> f64 {
        self.values[grid.cell_index(c[0], c[1], c[2])]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Clamp to `[0,1]`, returning the signed change summed over cells.
    pub fn clamp_unit(&mut self) -> f64 {
        let mut delta = 0.0;
        for v in &mut self.values {
            let c = v.clamp(0.0, 1.0);
            delta += c - *v;
            *v = c;
        }
        delta
    }
}

/// What a face field represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaceTag {
    Velocity,
    AreaFraction,
    Force,
    Other,
}

/// One value per x-, y- and z-face.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    pub comp: [Vec<f64>; 3],
    pub tag: FaceTag,
}

impl FaceField {
    pub fn constant(grid: &Grid, value: [f64; 3], tag: FaceTag) -> Self {
        FaceField {
            comp: [
                vec![value[0]; grid.n_faces(Axis::X)],
                vec![value[1]; grid.n_faces(Axis::Y)],
                vec![value[2]; grid.n_faces(Axis::Z)],
            ],
            tag,
        }
    }

    pub fn zeros(grid: &Grid, tag: FaceTag) -> Self {
        Self::constant(grid, [0.0; 3], tag)
    }

    pub fn from_fn(grid: &Grid, tag: FaceTag, mut f: impl FnMut(Axis, [usize; 3]) -> f64) -> Self {
        let comp = Axis::ALL.map(|axis| {
            (0..grid.n_faces(axis))
                .map(|idx| f(axis, grid.face_coords(axis, idx)))
                .collect()
        });
        FaceField { comp, tag }
    }

    #[inline]
    pub fn get(&self, axis: Axis) -> &[f64] {
        &self.comp[axis.index()]
    }

    #[inline]
    pub fn get_mut(&mut self, axis: Axis) -> &mut Vec<f64> {
        &mut self.comp[axis.index()]
    }

    #[inline]
    pub fn at(&self, grid: &Grid, axis: Axis, f: [usize; 3]) -> f64 {
        self.comp[axis.index()][grid.face_index(axis, f)]
    }

    pub fn max_abs(&self) -> f64 {
        self.comp
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn has_non_finite(&self) -> bool {
        self.comp
            .iter()
            .flat_map(|c| c.iter())
            .any(|v| !v.is_finite())
    }
}

/// Symmetric 3×3 tensor per cell, stored as `[xx, yy, zz, xy, xz, yz]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTensorField {
    pub values: Vec<[f64; 6]>,
}

/// Storage slot of component `(i, j)` in a packed symmetric tensor.
#[inline]
pub const fn sym_slot(i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (0, 1) | (1, 0) => 3,
        (0, 2) | (2, 0) => 4,
        _ => 5,
    }
}

impl CellTensorField {
    pub fn zeros(grid: &Grid) -> Self {
        CellTensorField {
            values: vec![[0.0; 6]; grid.n_cells()],
        }
    }

    #[inline]
    pub fn component(&self, idx: usize, i: usize, j: usize) -> f64 {
        self.values[idx][sym_slot(i, j)]
    }

    pub fn trace(&self, idx: usize) -> f64 {
        let t = &self.values[idx];
        t[0] + t[1] + t[2]
    }

    pub fn add_assign(&mut self, other: &CellTensorField) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            for s in 0..6 {
                a[s] += b[s];
            }
        }
    }
}

/// Cell field padded with one ghost layer on every side.
#[derive(Debug, Clone)]
pub struct Ghosted {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl Ghosted {
    #[inline]
    fn slot(&self, i: isize, j: isize, k: isize) -> usize {
        let px = self.dims[0] + 2;
        let py = self.dims[1] + 2;
        (i + 1) as usize + px * ((j + 1) as usize + py * (k + 1) as usize)
    }

    /// Value at cell `(i,j,k)`, each index allowed to range over `-1..=n`.
    #[inline]
    pub fn get(&self, i: isize, j: isize, k: isize) -> f64 {
        self.data[self.slot(i, j, k)]
    }
}

/// Fills the ghost layer of a cell field according to the grid boundaries.
///
/// Periodic axes wrap; symmetry and solid sides mirror the adjacent cell;
/// fixed-pressure sides hold the boundary pressure for pressure fields and
/// mirror everything else. Edge and corner ghosts are filled by applying the
/// axes in order, so they inherit the rules of both sides.
pub fn apply_boundary(field: &CellField, grid: &Grid) -> Result<Ghosted, LatticeError> {
    let [nx, ny, nz] = grid.dims();
    let (px, py, pz) = (nx + 2, ny + 2, nz + 2);
    let mut g = Ghosted {
        dims: grid.dims(),
        data: vec![0.0; px * py * pz],
    };
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let s = g.slot(i as isize, j as isize, k as isize);
                g.data[s] = field.values[grid.cell_index(i, j, k)];
            }
        }
    }
    for axis in Axis::ALL {
        let ax = axis.index();
        let n = grid.dims()[ax] as isize;
        let b = grid.boundary(axis);
        for hi in [false, true] {
            let kind = b.side(hi);
            if let (BoundaryKind::FixedPressure { .. }, CellTag::Velocity) = (kind, field.tag) {
                return Err(LatticeError::UnsupportedBoundary {
                    axis: ax,
                    what: "fixed-pressure boundary on a velocity field",
                });
            }
            let ghost = if hi { n } else { -1 };
            let inner = if hi { n - 1 } else { 0 };
            let wrap = if hi { 0 } else { n - 1 };
            // iterate over the full padded plane so edges/corners get filled
            let ranges: [(isize, isize); 3] = {
                let mut r = [
                    (-1, nx as isize + 1),
                    (-1, ny as isize + 1),
                    (-1, nz as isize + 1),
                ];
                r[ax] = (0, 1);
                r
            };
            for c in ranges[2].0..ranges[2].1 {
                for bb in ranges[1].0..ranges[1].1 {
                    for aa in ranges[0].0..ranges[0].1 {
                        let mut at = [aa, bb, c];
                        at[ax] = ghost;
                        let mut src = at;
                        let value = match kind {
                            BoundaryKind::Periodic => {
                                src[ax] = wrap;
                                g.get(src[0], src[1], src[2])
                            }
                            BoundaryKind::FixedPressure { pressure_kpa }
                                if field.tag == CellTag::Pressure =>
                            {
                                pressure_kpa
                            }
                            _ => {
                                src[ax] = inner;
                                g.get(src[0], src[1], src[2])
                            }
                        };
                        let s = g.slot(at[0], at[1], at[2]);
                        g.data[s] = value;
                    }
                }
            }
        }
    }
    Ok(g)
}

/// Cell-centred gradient: central differences in the interior and on
/// periodic axes, one-sided differences at non-periodic boundaries.
pub fn cell_gradient(field: &CellField, grid: &Grid) -> [CellField; 3] {
    let a = grid.spacing();
    let mut out = [
        CellField::zeros(grid, CellTag::Other),
        CellField::zeros(grid, CellTag::Other),
        CellField::zeros(grid, CellTag::Other),
    ];
    for idx in 0..grid.n_cells() {
        let c = grid.cell_coords(idx);
        let here = field.values[idx];
        for axis in Axis::ALL {
            let up = grid.shift(c, axis, 1);
            let down = grid.shift(c, axis, -1);
            let v = match (down, up) {
                (Some(d), Some(u)) => (field.at(grid, u) - field.at(grid, d)) / (2.0 * a),
                (None, Some(u)) => (field.at(grid, u) - here) / a,
                (Some(d), None) => (here - field.at(grid, d)) / a,
                (None, None) => 0.0,
            };
            out[axis.index()].values[idx] = v;
        }
    }
    out
}

/// Gradient magnitude per cell.
pub fn gradient_magnitude(grad: &[CellField; 3]) -> Vec<f64> {
    (0..grad[0].len())
        .map(|i| {
            let gx = grad[0].values[i];
            let gy = grad[1].values[i];
            let gz = grad[2].values[i];
            (gx * gx + gy * gy + gz * gz).sqrt()
        })
        .collect()
}

/// Discrete divergence of the open-area-weighted face field, `∇·(A∘u)`.
pub fn face_divergence(u: &FaceField, area: &FaceField, grid: &Grid) -> CellField {
    let a = grid.spacing();
    let mut out = CellField::zeros(grid, CellTag::Other);
    for idx in 0..grid.n_cells() {
        let c = grid.cell_coords(idx);
        let mut div = 0.0;
        for axis in Axis::ALL {
            let lo = grid.face_index(axis, grid.lo_face(c, axis));
            let hi = grid.face_index(axis, grid.hi_face(c, axis));
            let ua = u.get(axis);
            let aa = area.get(axis);
            div += aa[hi] * ua[hi] - aa[lo] * ua[lo];
        }
        out.values[idx] = div / a;
    }
    out
}

/// Two-point difference of a cell scalar across every face.
///
/// Faces on solid or symmetry boundaries get zero; fixed-pressure sides use
/// the boundary pressure as the ghost value when `field` is a pressure.
pub fn face_gradient(field: &CellField, grid: &Grid) -> FaceField {
    let a = grid.spacing();
    FaceField::from_fn(grid, FaceTag::Other, |axis, f| {
        let (lo, hi) = grid.face_cells(axis, f);
        match (lo, hi) {
            (Some(l), Some(h)) => (field.at(grid, h) - field.at(grid, l)) / a,
            (l, h) => {
                let ghost = match grid.face_boundary(axis, f) {
                    Some(BoundaryKind::FixedPressure { pressure_kpa })
                        if field.tag == CellTag::Pressure =>
                    {
                        pressure_kpa
                    }
                    _ => return 0.0,
                };
                match (l, h) {
                    (Some(l), None) => (ghost - field.at(grid, l)) / a,
                    (None, Some(h)) => (field.at(grid, h) - ghost) / a,
                    _ => 0.0,
                }
            }
        }
    })
}

/// Face-located divergence of a cell-centred symmetric tensor.
///
/// The normal derivative is the compact two-cell difference; tangential
/// derivatives difference the two-cell face averages of the neighbouring
/// rows. On periodic grids the sum over faces telescopes to zero, and the
/// operator is the negative adjoint of [`strain_rate`](crate::forces::strain_rate)'s
/// velocity gradient.
pub fn tensor_divergence(tau: &CellTensorField, grid: &Grid) -> FaceField {
    let a = grid.spacing();
    let g = |c: Option<[usize; 3]>, s: usize| -> Option<f64> {
        c.map(|c| tau.values[grid.cell_index(c[0], c[1], c[2])][s])
    };
    FaceField::from_fn(grid, FaceTag::Force, |axis, f| {
        let ax = axis.index();
        let (lo, hi) = grid.face_cells(axis, f);
        let (lo, hi) = match (lo, hi) {
            (Some(l), Some(h)) => (l, h),
            // boundary faces: mirrored ghosts make the normal term vanish
            (Some(c), None) | (None, Some(c)) => (c, c),
            (None, None) => return 0.0,
        };
        let mut sum =
            (g(Some(hi), sym_slot(ax, ax)).unwrap() - g(Some(lo), sym_slot(ax, ax)).unwrap()) / a;
        for other in Axis::ALL {
            if other == axis {
                continue;
            }
            let s = sym_slot(ax, other.index());
            let avg = |d: isize| -> f64 {
                let l = grid.shift(lo, other, d).or(Some(lo));
                let h = grid.shift(hi, other, d).or(Some(hi));
                0.5 * (g(l, s).unwrap() + g(h, s).unwrap())
            };
            let up = grid.shift(lo, other, 1).is_some();
            let down = grid.shift(lo, other, -1).is_some();
            let d = match (down, up) {
                (true, true) => (avg(1) - avg(-1)) / (2.0 * a),
                (false, true) => (avg(1) - avg(0)) / (2.0 * a),
                (true, false) => (avg(0) - avg(-1)) / (2.0 * a),
                _ => 0.0,
            };
            sum += d;
        }
        sum
    })
}

/// Interpolate a cell scalar to faces by the two-cell arithmetic mean.
pub fn cell_to_face(field: &CellField, grid: &Grid) -> FaceField {
    FaceField::from_fn(grid, FaceTag::Other, |axis, f| {
        match grid.face_cells(axis, f) {
            (Some(l), Some(h)) => 0.5 * (field.at(grid, l) + field.at(grid, h)),
            (Some(c), None) | (None, Some(c)) => field.at(grid, c),
            (None, None) => 0.0,
        }
    })
}

/// Average face velocities to cell centres.
pub fn face_to_cell(u: &FaceField, grid: &Grid) -> [CellField; 3] {
    Axis::ALL.map(|axis| {
        CellField::from_fn(grid, CellTag::Velocity, |c| {
            let lo = u.at(grid, axis, grid.lo_face(c, axis));
            let hi = u.at(grid, axis, grid.hi_face(c, axis));
            0.5 * (lo + hi)
        })
    })
}

/// Full velocity vector at the centre of a face: the stored normal
/// component plus four-point averages of the two tangential components.
pub fn face_vector(u: &FaceField, grid: &Grid, axis: Axis, f: [usize; 3]) -> [f64; 3] {
    let mut v = [0.0; 3];
    v[axis.index()] = u.at(grid, axis, f);
    let (lo, hi) = grid.face_cells(axis, f);
    let cells: Vec<[usize; 3]> = [lo, hi].into_iter().flatten().collect();
    for other in Axis::ALL {
        if other == axis {
            continue;
        }
        let mut sum = 0.0;
        let mut n = 0.0;
        for &c in &cells {
            sum += u.at(grid, other, grid.lo_face(c, other));
            sum += u.at(grid, other, grid.hi_face(c, other));
            n += 2.0;
        }
        v[other.index()] = if n > 0.0 { sum / n } else { 0.0 };
    }
    v
}
