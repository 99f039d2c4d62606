//! Measured quantities: contact angle, divergence, kinetic energy,
//! interface thickness and the Laplace-law residual.

use crate::capillary::{curvature, interface_normal, CapillaryParams};
use crate::error::DiagnosticsError;
use crate::lattice::{cell_gradient, face_divergence, Axis, CellField, CellTag, FaceField, Grid};
use crate::phase::WallGeometry;
use crate::pressure::face_density;

/// Fraction level tracked by the contact-angle estimator.
const ISO: f64 = 0.5;
/// Height of the fitting window above the wall band, in cells.
const WINDOW_CELLS: f64 = 12.0;
/// Straight-fit residual (cells) above which a contour counts as curved.
const CURVED_RMS: f64 = 0.1;

#[derive(Debug, Clone, Copy)]
struct ContourPoint {
    x: f64,
    z: f64,
    /// Wall distance at the point.
    d: f64,
    /// Wall distance gradient (x, z).
    n: [f64; 2],
}

/// Contact angle (degrees, measured through phase 1) from the `ξ₁/V = 0.5`
/// contour on the `y = j` slice.
///
/// Contour points at wall distance `[ε₀, ε₀ + 12a]` are grouped by
/// proximity into junctions. Per junction a circle is fitted in wall
/// coordinates (`t` along the wall, `d` away from it) when the contour is
/// visibly curved, otherwise a line `t = α + β d`; the angle follows from
/// the tangent where the fit meets the wall and the side of the wall that
/// phase 1 occupies. Junction angles are averaged.
pub fn measure_contact_angle(
    xi1: &CellField,
    wall: &WallGeometry,
    grid: &Grid,
) -> Result<f64, DiagnosticsError> {
    measure_contact_angle_at(xi1, wall, grid, grid.ny() / 2)
}

pub fn measure_contact_angle_at(
    xi1: &CellField,
    wall: &WallGeometry,
    grid: &Grid,
    j: usize,
) -> Result<f64, DiagnosticsError> {
    if !wall.present {
        return Err(DiagnosticsError::NoJunction);
    }
    let a = grid.spacing();
    let [nx, _, nz] = grid.dims();
    let frac = |i: usize, k: usize| -> Option<f64> {
        let idx = grid.cell_index(i, j, k);
        let v = wall.volume.values[idx];
        (v > 1e-6).then(|| (xi1.values[idx] / v).clamp(0.0, 1.0))
    };
    let grad = cell_gradient(&wall.distance, grid);
    let lo_d = wall.eps0;
    let hi_d = wall.eps0 + WINDOW_CELLS * a;

    let mut pts = Vec::new();
    for k in 0..nz {
        for i in 0..nx {
            let Some(f0) = frac(i, k) else { continue };
            let c0 = [i, j, k];
            for axis in [Axis::X, Axis::Z] {
                let Some(c1) = grid.shift(c0, axis, 1) else {
                    continue;
                };
                let Some(f1) = frac(c1[0], c1[2]) else {
                    continue;
                };
                if (f0 - ISO) * (f1 - ISO) > 0.0 || f0 == f1 {
                    continue;
                }
                let s = (ISO - f0) / (f1 - f0);
                if !(0.0..=1.0).contains(&s) || (s == 1.0) {
                    continue;
                }
                let i0 = grid.cell_index(c0[0], c0[1], c0[2]);
                let i1 = grid.cell_index(c1[0], c1[1], c1[2]);
                let d = wall.distance.values[i0] * (1.0 - s) + wall.distance.values[i1] * s;
                if d < lo_d || d > hi_d {
                    continue;
                }
                let p0 = grid.cell_center(c0);
                let mut x = p0[0];
                let mut z = p0[2];
                // periodic wrap: step forward by one cell from the lower centre
                if axis == Axis::X {
                    x += s * a;
                } else {
                    z += s * a;
                }
                let n = [
                    grad[0].values[i0] * (1.0 - s) + grad[0].values[i1] * s,
                    grad[2].values[i0] * (1.0 - s) + grad[2].values[i1] * s,
                ];
                pts.push(ContourPoint { x, z, d, n });
            }
        }
    }
    if pts.is_empty() {
        return Err(DiagnosticsError::NoJunction);
    }

    let clusters = cluster(&pts, 3.0 * a);
    let mut angles = Vec::new();
    let mut most = 0;
    for members in clusters {
        most = most.max(members.len());
        if members.len() < 3 {
            continue;
        }
        let mut n = [0.0, 0.0];
        for &m in &members {
            n[0] += pts[m].n[0];
            n[1] += pts[m].n[1];
        }
        let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
        if len == 0.0 {
            continue;
        }
        let n = [n[0] / len, n[1] / len];
        let t = [n[1], -n[0]];
        let m = members.len() as f64;
        // local frame: t along the wall, d = wall distance; d = n·p + offset
        let offset = members
            .iter()
            .map(|&i| pts[i].d - pts[i].x * n[0] - pts[i].z * n[1])
            .sum::<f64>()
            / m;
        let local: Vec<[f64; 2]> = members
            .iter()
            .map(|&i| [pts[i].x * t[0] + pts[i].z * t[1], pts[i].d])
            .collect();
        let to_xz = |tc: f64, d: f64| {
            let h = d - offset;
            [tc * t[0] + h * n[0], tc * t[1] + h * n[1]]
        };
        for (root, tangent) in contact_tangents(&local, a) {
            // phase-1 side, probed across the interface just above the band
            let q = to_xz(
                root[0] + tangent[0] / tangent[1] * (lo_d + 2.0 * a),
                lo_d + 2.0 * a,
            );
            let nu = [
                tangent[1] * t[0] - tangent[0] * n[0],
                tangent[1] * t[1] - tangent[0] * n[1],
            ];
            let probe = |sign: f64| {
                sample_slice(
                    xi1,
                    wall,
                    grid,
                    j,
                    q[0] + sign * 2.0 * a * nu[0],
                    q[1] + sign * 2.0 * a * nu[1],
                )
            };
            // ν in local coordinates is (τ_d, −τ_t); its t component is τ_d ≥ 0
            let side = match (probe(1.0), probe(-1.0)) {
                (Some(p), Some(q)) => {
                    if p >= q {
                        1.0
                    } else {
                        -1.0
                    }
                }
                (Some(p), None) => {
                    if p >= ISO {
                        1.0
                    } else {
                        -1.0
                    }
                }
                (None, Some(q)) => {
                    if q >= ISO {
                        -1.0
                    } else {
                        1.0
                    }
                }
                (None, None) => continue,
            };
            let cos = (side * tangent[0]).clamp(-1.0, 1.0);
            angles.push(cos.acos().to_degrees());
        }
    }
    if angles.is_empty() {
        return Err(DiagnosticsError::TooFewPoints(most));
    }
    Ok(angles.iter().sum::<f64>() / angles.len() as f64)
}

/// Contact points and unit tangents `(τ_t, τ_d)` (pointing away from the
/// wall) of a contour cluster given in wall coordinates `(t, d)`.
///
/// A circle is fitted and intersected with `d = 0`; a root counts when the
/// cluster reaches within three cells of it. Nearly straight clusters fall
/// back to a line fit.
fn contact_tangents(pts: &[[f64; 2]], a: f64) -> Vec<([f64; 2], [f64; 2])> {
    let m = pts.len() as f64;
    let mt = pts.iter().map(|p| p[0]).sum::<f64>() / m;
    let md = pts.iter().map(|p| p[1]).sum::<f64>() / m;
    let dmin = pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
    let span = pts
        .iter()
        .map(|p| ((p[0] - mt).powi(2) + (p[1] - md).powi(2)).sqrt())
        .fold(0.0, f64::max);
    let line = || {
        let (mut sdd, mut sdt) = (0.0, 0.0);
        for p in pts {
            sdd += (p[1] - md).powi(2);
            sdt += (p[1] - md) * (p[0] - mt);
        }
        let beta = if sdd > 1e-12 * a * a { sdt / sdd } else { 0.0 };
        let norm = (1.0 + beta * beta).sqrt();
        vec![([mt - beta * md, 0.0], [beta / norm, 1.0 / norm])]
    };
    // residual of the straight fit, perpendicular to the line
    let line_rms = {
        let l = line();
        let (t0, tau) = (l[0].0[0], l[0].1);
        let ss: f64 = pts
            .iter()
            .map(|p| ((p[0] - t0) * tau[1] - p[1] * tau[0]).powi(2))
            .sum();
        (ss / m).sqrt()
    };
    if let Some((c, r)) = fit_circle(pts, [mt, md], a) {
        let circle_rms = (pts
            .iter()
            .map(|p| (((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt() - r).powi(2))
            .sum::<f64>()
            / m)
            .sqrt();
        let curved = line_rms > (2.0 * circle_rms).max(CURVED_RMS * a);
        if curved && r < 50.0 * span.max(a) && r > c[1].abs() {
            let h = (r * r - c[1] * c[1]).sqrt();
            let mut out = Vec::new();
            for t0 in [c[0] - h, c[0] + h] {
                let near = pts
                    .iter()
                    .any(|p| ((p[0] - t0).powi(2) + p[1] * p[1]).sqrt() <= dmin + 3.0 * a);
                if !near {
                    continue;
                }
                // tangent ⟂ radius (t0 − c_t, −c_d), oriented into d > 0
                let (rt, rd) = (t0 - c[0], -c[1]);
                let mut tau = [rd, -rt];
                if tau[1] < 0.0 {
                    tau = [-tau[0], -tau[1]];
                }
                let l = (tau[0] * tau[0] + tau[1] * tau[1]).sqrt();
                if tau[1] / l < 1e-9 {
                    continue;
                }
                out.push(([t0, 0.0], [tau[0] / l, tau[1] / l]));
            }
            if !out.is_empty() {
                return out;
            }
        }
    }
    line()
}

/// Algebraic least-squares circle `x² + y² + D x + E y + F = 0`.
fn fit_circle(pts: &[[f64; 2]], origin: [f64; 2], scale: f64) -> Option<([f64; 2], f64)> {
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for p in pts {
        let x = (p[0] - origin[0]) / scale;
        let y = (p[1] - origin[1]) / scale;
        let row = [x, y, 1.0];
        let rhs = -(x * x + y * y);
        for i in 0..3 {
            atb[i] += row[i] * rhs;
            for k in 0..3 {
                ata[i][k] += row[i] * row[k];
            }
        }
    }
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d0 = det(&ata);
    if d0.abs()
        < 1e-12
            * det(&[
                [ata[0][0], 0.0, 0.0],
                [0.0, ata[1][1], 0.0],
                [0.0, 0.0, ata[2][2]],
            ])
            .abs()
    {
        return None;
    }
    let mut sol = [0.0; 3];
    for (c, s) in sol.iter_mut().enumerate() {
        let mut mc = ata;
        for r in 0..3 {
            mc[r][c] = atb[r];
        }
        *s = det(&mc) / d0;
    }
    let (cx, cy) = (-0.5 * sol[0], -0.5 * sol[1]);
    let r2 = cx * cx + cy * cy - sol[2];
    if !(r2 > 0.0) || !r2.is_finite() {
        return None;
    }
    Some((
        [origin[0] + cx * scale, origin[1] + cy * scale],
        r2.sqrt() * scale,
    ))
}

/// Single-linkage grouping of contour points.
fn cluster(pts: &[ContourPoint], reach: f64) -> Vec<Vec<usize>> {
    let n = pts.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let dx = pts[i].x - pts[j].x;
            let dz = pts[i].z - pts[j].z;
            if dx * dx + dz * dz <= reach * reach {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Bilinear sample of `ξ₁/V` on the slice; `None` outside the domain or in
/// solid cells.
fn sample_slice(
    xi1: &CellField,
    wall: &WallGeometry,
    grid: &Grid,
    j: usize,
    x: f64,
    z: f64,
) -> Option<f64> {
    let a = grid.spacing();
    let [nx, _, nz] = grid.dims();
    let fx = x / a - 0.5;
    let fz = z / a - 0.5;
    if fx < 0.0 || fz < 0.0 || fx > (nx - 1) as f64 || fz > (nz - 1) as f64 {
        return None;
    }
    let (i0, k0) = (fx.floor() as usize, fz.floor() as usize);
    let (i1, k1) = ((i0 + 1).min(nx - 1), (k0 + 1).min(nz - 1));
    let (sx, sz) = (fx - i0 as f64, fz - k0 as f64);
    let mut acc = 0.0;
    let mut w = 0.0;
    for (i, wx) in [(i0, 1.0 - sx), (i1, sx)] {
        for (k, wz) in [(k0, 1.0 - sz), (k1, sz)] {
            let idx = grid.cell_index(i, j, k);
            let v = wall.volume.values[idx];
            if v > 1e-6 && wx * wz > 0.0 {
                acc += wx * wz * xi1.values[idx] / v;
                w += wx * wz;
            }
        }
    }
    (w > 0.0).then(|| acc / w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceNorm {
    pub max: f64,
    pub l2: f64,
}

/// Max and L2 of `∇·(A u)` over fluid cells.
pub fn divergence_norm(
    u: &FaceField,
    area: &FaceField,
    volume: &CellField,
    grid: &Grid,
) -> DivergenceNorm {
    let div = face_divergence(u, area, grid);
    let mut max = 0.0_f64;
    let mut sum = 0.0;
    for (d, &v) in div.values.iter().zip(&volume.values) {
        if v > 0.0 {
            max = max.max(d.abs());
            sum += d * d;
        }
    }
    DivergenceNorm {
        max,
        l2: sum.sqrt(),
    }
}

/// `Σ ½ ρ_f u_f² a³` over faces; faces on non-periodic domain edges carry
/// half a control volume.
pub fn kinetic_energy(rho: &CellField, u: &FaceField, grid: &Grid) -> f64 {
    let vol = grid.cell_volume();
    let mut e = 0.0;
    for axis in Axis::ALL {
        let comp = u.get(axis);
        for (idx, &v) in comp.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let f = grid.face_coords(axis, idx);
            let w = if grid.face_boundary(axis, f).is_some() {
                0.5
            } else {
                1.0
            };
            e += w * 0.5 * face_density(rho, grid, axis, f) * v * v;
        }
    }
    e * vol
}

/// Mean height (z, μm) of the interface, weighted by `|∇f|` over cells
/// that lie entirely in fluid.
pub fn mean_interface_height(f: &CellField, volume: &CellField, grid: &Grid) -> Option<f64> {
    let grad = cell_gradient(f, grid);
    let mags = crate::lattice::gradient_magnitude(&grad);
    let [nx, ny, nz] = grid.dims();
    let (mut w, mut wz) = (0.0, 0.0);
    for k in 0..nz {
        let z = grid.cell_center([0, 0, k])[2];
        for j in 0..ny {
            for i in 0..nx {
                let idx = grid.cell_index(i, j, k);
                if volume.values[idx] < 0.99 {
                    continue;
                }
                w += mags[idx];
                wz += mags[idx] * z;
            }
        }
    }
    (w > 0.0).then(|| wz / w)
}

/// Interpolated position (in cells) where the sequence crosses `level`
/// between samples `i` and `i + 1`.
fn crossing(vals: &[f64], i: usize, level: f64) -> f64 {
    let (a, b) = (vals[i], vals[i + 1]);
    i as f64 + (level - a) / (b - a)
}

/// Mean width (μm) of the `[0.05, 0.95]` span around each 0.5 crossing,
/// over columns along the dominant gradient axis.
pub fn interface_thickness(xi: &CellField, grid: &Grid) -> Result<f64, DiagnosticsError> {
    let grad = cell_gradient(xi, grid);
    let weight: Vec<f64> = grad
        .iter()
        .map(|g| g.values.iter().map(|v| v.abs()).sum())
        .collect();
    let axis = Axis::ALL
        .into_iter()
        .max_by(|a, b| weight[a.index()].total_cmp(&weight[b.index()]))
        .unwrap();
    if weight[axis.index()] == 0.0 {
        return Err(DiagnosticsError::NoBand);
    }
    let ax = axis.index();
    let dims = grid.dims();
    let n = dims[ax];
    let (o1, o2) = match ax {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let mut total = 0.0;
    let mut count = 0usize;
    let mut col = vec![0.0; n];
    for b in 0..dims[o2] {
        for a in 0..dims[o1] {
            for (s, v) in col.iter_mut().enumerate() {
                let mut c = [0; 3];
                c[ax] = s;
                c[o1] = a;
                c[o2] = b;
                *v = xi.at(grid, c);
            }
            for i in 0..n - 1 {
                let (p, q) = (col[i], col[i + 1]);
                if (p - 0.5) * (q - 0.5) > 0.0 || p == q || q == 0.5 {
                    continue;
                }
                let rising = q > p;
                // walk outward to the low/high level crossings
                let lo_level = if rising { 0.05 } else { 0.95 };
                let hi_level = if rising { 0.95 } else { 0.05 };
                let mut start = None;
                let mut k = i as isize;
                while k >= 0 {
                    let ku = k as usize;
                    let (u, w) = (col[ku], col[ku + 1]);
                    if (u - lo_level) * (w - lo_level) <= 0.0 && u != w {
                        start = Some(crossing(&col, ku, lo_level));
                        break;
                    }
                    k -= 1;
                }
                let mut end = None;
                for k in i..n - 1 {
                    let (u, w) = (col[k], col[k + 1]);
                    if (u - hi_level) * (w - hi_level) <= 0.0 && u != w {
                        end = Some(crossing(&col, k, hi_level));
                        break;
                    }
                }
                if let (Some(s), Some(e)) = (start, end) {
                    total += (e - s).abs();
                    count += 1;
                }
            }
        }
    }
    if count == 0 {
        return Err(DiagnosticsError::NoBand);
    }
    Ok(total / count as f64 * grid.spacing())
}

/// Trilinear interpolation of a cell field at a point; periodic axes wrap,
/// other axes clamp to the outermost cell centres.
pub fn sample_cell(field: &CellField, grid: &Grid, p: [f64; 3]) -> f64 {
    let a = grid.spacing();
    let dims = grid.dims();
    let mut base = [0usize; 3];
    let mut next = [0usize; 3];
    let mut frac = [0.0; 3];
    for d in 0..3 {
        let n = dims[d];
        let s = p[d] / a - 0.5;
        if grid.is_periodic(Axis::ALL[d]) {
            let fl = s.floor();
            frac[d] = s - fl;
            let b = (fl as isize).rem_euclid(n as isize) as usize;
            base[d] = b;
            next[d] = (b + 1) % n;
        } else {
            let s = s.clamp(0.0, (n - 1) as f64);
            let b = (s.floor() as usize).min(n - 2);
            base[d] = b;
            next[d] = b + 1;
            frac[d] = s - b as f64;
        }
    }
    let mut v = 0.0;
    for corner in 0..8 {
        let mut c = [0; 3];
        let mut w = 1.0;
        for d in 0..3 {
            if corner >> d & 1 == 1 {
                c[d] = next[d];
                w *= frac[d];
            } else {
                c[d] = base[d];
                w *= 1.0 - frac[d];
            }
        }
        if w != 0.0 {
            v += w * field.at(grid, c);
        }
    }
    v
}

/// Per band cell `|(p_in − p_out) − σκ|`, pressures sampled `±2a` along the
/// interface normal; zero outside the band.
pub fn laplace_residual(
    xi: &CellField,
    p: &CellField,
    sigma: f64,
    params: &CapillaryParams,
    grid: &Grid,
) -> CellField {
    let normals = interface_normal(xi, grid, params);
    let kappa = curvature(xi, grid, params);
    let a = grid.spacing();
    let mut out = CellField::zeros(grid, CellTag::Other);
    for idx in 0..grid.n_cells() {
        if !normals.band[idx] {
            continue;
        }
        let n = normals.n[idx];
        let x = grid.cell_center(grid.cell_coords(idx));
        let at = |s: f64| [x[0] + s * n[0], x[1] + s * n[1], x[2] + s * n[2]];
        // ∇ξ points into the phase, so +n is inside
        let dp = sample_cell(p, grid, at(2.0 * a)) - sample_cell(p, grid, at(-2.0 * a));
        out.values[idx] = (dp - sigma * kappa.values[idx]).abs();
    }
    out
}

/// Mean pressure over `ξ > 0.99` minus mean over `ξ < 0.01`.
pub fn pressure_jump(xi: &CellField, p: &CellField, volume: &CellField) -> Option<f64> {
    let (mut si, mut ni, mut so, mut no) = (0.0, 0usize, 0.0, 0usize);
    for ((&x, &pv), &v) in xi.values.iter().zip(&p.values).zip(&volume.values) {
        if v <= 0.0 {
            continue;
        }
        if x > 0.99 {
            si += pv;
            ni += 1;
        } else if x < 0.01 {
            so += pv;
            no += 1;
        }
    }
    (ni > 0 && no > 0).then(|| si / ni as f64 - so / no as f64)
}
