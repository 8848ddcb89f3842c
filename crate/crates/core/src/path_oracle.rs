//! Broken-path lengths l_p(ξ, y) = |p − ξ| + |ξ − y| and their global minimum
//! over ∂D × ∂Ω: node brute force, then Newton refinement in local charts.

use nalgebra::{Matrix2, Matrix3, Matrix4, SymmetricEigen, Vector2, Vector3, Vector4};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{convexity_audit, LocalChart, Quadric, Scene};

/// Tolerances of the oracle. Defaults scale with the scene diameter.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PathTolerances {
    /// A refined point attains the minimum if its value is within this relative band.
    pub rel_tol: f64,
    /// Grazing band: |ν·(p−ξ)| ≤ tol_g·|p−ξ|.
    pub tol_g: f64,
    /// Refined points closer than this are merged.
    pub merge_dist: f64,
    /// Smallest Hessian eigenvalue that counts as non-degenerate.
    pub eig_tol: f64,
    /// More distinct minimizers than this flags a continuous family.
    pub max_isolated: usize,
    pub max_seeds: usize,
}

impl PathTolerances {
    pub fn for_diameter(diameter: f64) -> Self {
        Self {
            rel_tol: 1e-9,
            tol_g: 1e-6,
            merge_dist: 1e-6 * diameter,
            eig_tol: 1e-6 / diameter,
            max_isolated: 8,
            max_seeds: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MinimizerClass {
    M1,
    M2plus,
    M2minus,
    Mg,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathCriticalPoint {
    pub xi: [f64; 3],
    /// Cavity index of ξ.
    pub cavity: usize,
    pub y: [f64; 3],
    pub value: f64,
    pub class: Option<MinimizerClass>,
    /// Eigenvalues of the 4×4 chart Hessian, ascending.
    pub hessian_eigenvalues: [f64; 4],
    /// Chart-gradient norm at the refined point.
    pub grad_norm: f64,
    pub hplus: f64,
    #[serde(skip)]
    pub nu_xi: [f64; 3],
}

impl PathCriticalPoint {
    pub fn xi(&self) -> Vector3<f64> {
        Vector3::from(self.xi)
    }
    pub fn y(&self) -> Vector3<f64> {
        Vector3::from(self.y)
    }
    pub fn normal(&self) -> Vector3<f64> {
        Vector3::from(self.nu_xi)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PathReport {
    pub p: [f64; 3],
    pub l_min: f64,
    /// Node brute-force minimum before refinement.
    pub l_brute: f64,
    pub minimizers: Vec<PathCriticalPoint>,
    /// More than `max_isolated` distinct minimizers survived merging.
    pub degenerate_family: bool,
    pub assumption_i2_holds: bool,
    pub assumption_i3_holds: bool,
    pub tolerances: PathTolerances,
}

pub fn broken_path_length(p: &Vector3<f64>, xi: &Vector3<f64>, y: &Vector3<f64>) -> f64 {
    (p - xi).norm() + (xi - y).norm()
}

/// H⁺ = ν_ξ·((p−ξ)/|p−ξ| + (y−ξ)/|y−ξ|) / (|ξ−p||ξ−y|).
pub fn hplus(xi: &Vector3<f64>, y: &Vector3<f64>, p: &Vector3<f64>, nu_xi: &Vector3<f64>) -> Result<f64> {
    let a = p - xi;
    let b = y - xi;
    let (ra, rb) = (a.norm(), b.norm());
    if ra == 0.0 || rb == 0.0 {
        return Err(Error::Coincident);
    }
    Ok(nu_xi.dot(&(a / ra + b / rb)) / (ra * rb))
}

/// Class of a pair by the signs of ν_ξ·(p−ξ) and ν_ξ·(y−ξ).
pub fn classify(
    xi: &Vector3<f64>,
    y: &Vector3<f64>,
    p: &Vector3<f64>,
    nu_xi: &Vector3<f64>,
    tol_g: f64,
) -> MinimizerClass {
    let sp = nu_xi.dot(&(p - xi));
    if sp.abs() <= tol_g * (p - xi).norm() {
        return MinimizerClass::Mg;
    }
    if sp < 0.0 {
        return MinimizerClass::M2minus;
    }
    if nu_xi.dot(&(y - xi)) > 0.0 {
        MinimizerClass::M1
    } else {
        MinimizerClass::M2plus
    }
}

/// Gradient and Hessian of l_p in the charts (σ at ξ, τ at y), both at 0.
fn chart_derivatives(p: &Vector3<f64>, cx: &LocalChart, cy: &LocalChart) -> (Vector4<f64>, Matrix4<f64>) {
    let xi = cx.base;
    let y = cy.base;
    let u = xi - p;
    let v = xi - y;
    let (a, b) = (u.norm(), v.norm());
    let (uh, vh) = (u / a, v / b);
    let gx = uh + vh;
    let gy = -vh;
    let pu = (Matrix3::identity() - uh * uh.transpose()) / a;
    let pv = (Matrix3::identity() - vh * vh.transpose()) / b;
    let ex = nalgebra::Matrix3x2::from_columns(&[cx.e1, cx.e2]);
    let ey = nalgebra::Matrix3x2::from_columns(&[cy.e1, cy.e2]);
    let grad_x = ex.transpose() * gx;
    let grad_y = ey.transpose() * gy;
    let hxx: Matrix2<f64> = ex.transpose() * (pu + pv) * ex - cx.hessian_at_base() * cx.normal.dot(&gx);
    let hyy: Matrix2<f64> = ey.transpose() * pv * ey - cy.hessian_at_base() * cy.normal.dot(&gy);
    let hxy: Matrix2<f64> = -(ex.transpose() * pv * ey);
    let mut h = Matrix4::zeros();
    h.fixed_view_mut::<2, 2>(0, 0).copy_from(&hxx);
    h.fixed_view_mut::<2, 2>(2, 2).copy_from(&hyy);
    h.fixed_view_mut::<2, 2>(0, 2).copy_from(&hxy);
    h.fixed_view_mut::<2, 2>(2, 0).copy_from(&hxy.transpose());
    (Vector4::new(grad_x.x, grad_x.y, grad_y.x, grad_y.y), h)
}

/// Chart-coordinate Hessian of l_p by central differences, for cross-checks.
pub fn chart_hessian_fd(p: &Vector3<f64>, cx: &LocalChart, cy: &LocalChart) -> Option<Matrix4<f64>> {
    let f = |s: &Vector4<f64>| -> Option<f64> {
        let x = cx.point(&Vector2::new(s[0], s[1]))?;
        let y = cy.point(&Vector2::new(s[2], s[3]))?;
        Some(broken_path_length(p, &x, &y))
    };
    let h = cx.fd_step.max(cy.fd_step) * 10.0;
    let mut m = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            let mut ei = Vector4::zeros();
            let mut ej = Vector4::zeros();
            ei[i] = h;
            ej[j] = h;
            m[(i, j)] = (f(&(ei + ej))? - f(&(ei - ej))? - f(&(ej - ei))? + f(&(-ei - ej))?) / (4.0 * h * h);
        }
    }
    Some(m)
}

struct Refined {
    xi: Vector3<f64>,
    y: Vector3<f64>,
    value: f64,
    grad: f64,
    eig: [f64; 4],
}

/// Newton descent with line search; the charts are re-based at each iterate so
/// derivatives are always taken at σ = τ = 0.
fn refine(
    p: &Vector3<f64>,
    qx: &Quadric,
    r0x: f64,
    qy: &Quadric,
    r0y: f64,
    xi0: &Vector3<f64>,
    y0: &Vector3<f64>,
) -> Refined {
    let mut cx = LocalChart::at_point(qx, xi0, r0x);
    let mut cy = LocalChart::at_point(qy, y0, r0y);
    let mut val = broken_path_length(p, &cx.base, &cy.base);
    for _ in 0..200 {
        let (g, h) = chart_derivatives(p, &cx, &cy);
        if g.norm() <= 1e-15 {
            break;
        }
        let eig = SymmetricEigen::new(h);
        let scale = eig.eigenvalues.amax().max(1e-300);
        // Saddle-free Newton: invert |eigenvalues| with a floor.
        let mut s = Vector4::zeros();
        for k in 0..4 {
            let v = eig.eigenvectors.column(k);
            let lam = eig.eigenvalues[k].abs().max(1e-8 * scale);
            s -= v * (v.dot(&g) / lam);
        }
        let sx = Vector2::new(s[0], s[1]);
        let sy = Vector2::new(s[2], s[3]);
        // One common factor keeps each part inside its chart without rotating the step.
        let f = [1.0, 0.5 * r0x / sx.norm(), 0.5 * r0y / sy.norm()].into_iter().fold(f64::INFINITY, f64::min);
        let (sx, sy) = (sx * f, sy * f);
        let slope = g.dot(&Vector4::new(sx.x, sx.y, sy.x, sy.y));
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            if let (Some(x), Some(y)) = (cx.point(&(sx * t)), cy.point(&(sy * t))) {
                let v = broken_path_length(p, &x, &y);
                if v <= val + 1e-4 * t * slope || v < val {
                    accepted = Some((x, y, v));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((x, y, v)) = accepted else { break };
        let moved = (x - cx.base).norm() + (y - cy.base).norm();
        cx = LocalChart::at_point(qx, &x, r0x);
        cy = LocalChart::at_point(qy, &y, r0y);
        val = v;
        if moved <= 1e-16 * (1.0 + val) {
            break;
        }
    }
    let (g, h) = chart_derivatives(p, &cx, &cy);
    let ev = SymmetricEigen::new(h).eigenvalues;
    let mut eig = [ev[0], ev[1], ev[2], ev[3]];
    eig.sort_by(|a, b| a.total_cmp(b));
    Refined { xi: cx.base, y: cy.base, value: val, grad: g.norm(), eig }
}

/// Global minimum of l_p over ∂D × ∂Ω with the minimizer list classified.
pub fn min_broken_path(scene: &Scene, p: &Vector3<f64>) -> Result<PathReport> {
    min_broken_path_with(scene, p, PathTolerances::for_diameter(scene.diameter()))
}

pub fn min_broken_path_with(scene: &Scene, p: &Vector3<f64>, tol: PathTolerances) -> Result<PathReport> {
    scene.check_probe(p)?;
    if scene.cavities.is_empty() {
        return Err(Error::InvalidScene("no cavities: l(p, D) is undefined".into()));
    }
    let outer = &scene.outer;
    let qy = outer.shape.as_ref().expect("analytic outer boundary");
    // Brute force: for each cavity node, the nearest outer node.
    let mut cands: Vec<(f64, usize, usize, usize)> = Vec::new();
    for (j, c) in scene.cavities.iter().enumerate() {
        let part: Vec<_> = c
            .nodes
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let (mut best, mut arg) = (f64::INFINITY, 0);
                for (k, y) in outer.nodes.iter().enumerate() {
                    let d = (x - y).norm_squared();
                    if d < best {
                        best = d;
                        arg = k;
                    }
                }
                ((p - x).norm() + best.sqrt(), j, i, arg)
            })
            .collect();
        cands.extend(part);
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let l_brute = cands[0].0;
    // Any minimizer has a node within one spacing on each surface, and l_p is
    // 2-Lipschitz in ξ and 1-Lipschitz in y.
    let max_spacing = scene.cavities.iter().map(|c| c.spacing).fold(0.0, f64::max);
    let band = 2.0 * max_spacing + outer.spacing;
    let mut seeds: Vec<(usize, usize, usize)> = Vec::new();
    for &(v, j, i, k) in &cands {
        if v > l_brute + band || seeds.len() >= tol.max_seeds {
            break;
        }
        let x = scene.cavities[j].nodes[i];
        let sep = 2.0 * scene.cavities[j].spacing;
        if seeds.iter().all(|&(jj, ii, _)| jj != j || (scene.cavities[jj].nodes[ii] - x).norm() > sep) {
            seeds.push((j, i, k));
        }
    }
    let refined: Vec<(usize, Refined)> = seeds
        .par_iter()
        .map(|&(j, i, k)| {
            let c = &scene.cavities[j];
            let qx = c.shape.as_ref().expect("analytic cavity");
            (j, refine(p, qx, c.r0, qy, outer.r0, &c.nodes[i], &outer.nodes[k]))
        })
        .collect();
    let l_min = refined.iter().map(|(_, r)| r.value).fold(f64::INFINITY, f64::min).min(l_brute);
    let mut minimizers: Vec<PathCriticalPoint> = Vec::new();
    for (j, r) in refined {
        if r.value > l_min * (1.0 + tol.rel_tol) {
            continue;
        }
        if minimizers.iter().any(|m| {
            m.cavity == j && (m.xi() - r.xi).norm() <= tol.merge_dist && (m.y() - r.y).norm() <= tol.merge_dist
        }) {
            continue;
        }
        let qx = scene.cavities[j].shape.as_ref().expect("analytic cavity");
        let nu = (qx.form() * (r.xi - qx.center)).normalize();
        let class = classify(&r.xi, &r.y, p, &nu, tol.tol_g);
        minimizers.push(PathCriticalPoint {
            xi: r.xi.into(),
            cavity: j,
            y: r.y.into(),
            value: r.value,
            class: Some(class),
            hessian_eigenvalues: r.eig,
            grad_norm: r.grad,
            hplus: hplus(&r.xi, &r.y, p, &nu)?,
            nu_xi: nu.into(),
        });
    }
    let degenerate_family = minimizers.len() > tol.max_isolated;
    let i2 = minimizers_satisfy_i2(&minimizers);
    let i3 = !degenerate_family && minimizers.iter().all(|m| m.hessian_eigenvalues[0] >= tol.eig_tol);
    Ok(PathReport {
        p: [p.x, p.y, p.z],
        l_min,
        l_brute,
        minimizers,
        degenerate_family,
        assumption_i2_holds: i2,
        assumption_i3_holds: i3,
        tolerances: tol,
    })
}

/// Re-applies the class tests to every minimizer of a report.
pub fn classify_minimizers(mut report: PathReport, p: &Vector3<f64>) -> PathReport {
    for m in &mut report.minimizers {
        m.class = Some(classify(&m.xi(), &m.y(), p, &m.normal(), report.tolerances.tol_g));
    }
    report.assumption_i2_holds = minimizers_satisfy_i2(&report.minimizers);
    report
}

fn minimizers_satisfy_i2(ms: &[PathCriticalPoint]) -> bool {
    ms.iter().all(|m| !matches!(m.class, Some(MinimizerClass::Mg) | Some(MinimizerClass::M2minus)))
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub i1: bool,
    pub i2: bool,
    pub i3: bool,
    pub reasons: Vec<String>,
    pub d1: f64,
    /// (M0, M1) per cavity, when the audit succeeded.
    pub convexity: Vec<Option<(f64, f64)>>,
    pub path: Option<PathReport>,
}

pub fn check_assumptions(scene: &Scene, p: &Vector3<f64>) -> AssumptionReport {
    let mut reasons = Vec::new();
    let mut i1 = true;
    let mut convexity = Vec::new();
    for (j, c) in scene.cavities.iter().enumerate() {
        match convexity_audit(c) {
            Ok(r) => convexity.push(Some((r.m0, r.m1))),
            Err(e) => {
                i1 = false;
                reasons.push(format!("cavity {j}: {e}"));
                convexity.push(None);
            }
        }
    }
    let d1 = match crate::geometry::cavity_separation(scene) {
        Ok(d) => d,
        Err(e) => {
            i1 = false;
            reasons.push(e.to_string());
            0.0
        }
    };
    let (i2, i3, path) = match min_broken_path(scene, p) {
        Ok(r) => {
            let i2 = minimizers_satisfy_i2(&r.minimizers);
            if !i2 {
                reasons.push("a minimizer is grazing (Mg) or backward (M2minus)".into());
            }
            if r.degenerate_family {
                reasons.push(format!("{} distinct minimizers: continuous family", r.minimizers.len()));
            } else if !r.assumption_i3_holds {
                reasons.push("a minimizer has a chart Hessian eigenvalue below eig_tol".into());
            }
            (i2, r.assumption_i3_holds, Some(r))
        }
        Err(e) => {
            reasons.push(e.to_string());
            (false, false, None)
        }
    };
    AssumptionReport { i1, i2, i3, reasons, d1, convexity, path }
}
