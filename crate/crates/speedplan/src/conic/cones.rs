//! Cone-wise operations for the interior-point solver.
//!
//! Both supported cones are symmetric (self-dual), which is what makes the
//! Nesterov-Todd scaling work: for strictly interior `z`, `s` there is a
//! unique scaling point `W` with `W z = W^{-1} s =: lambda`, and the
//! Newton system can be written entirely in terms of `W` and `lambda`.
//!
//! Second-order-cone formulas use the standard hyperbolic ("arrow")
//! algebra: for `u = (u0, ub)`, `det u = u0^2 - |ub|^2`, the reflection
//! `J u = (u0, -ub)`, the quadratic representation
//! `P(u) x = 2 u (u.x) - det(u) J x`, and the Jordan product
//! `u o v = (u.v, u0 vb + v0 ub)`.

use super::ConeBlock;

/// Barrier degree of a block: each nonnegative coordinate counts 1, each
/// second-order cone counts 1 regardless of dimension.
pub(super) fn degree(block: &ConeBlock) -> usize {
    match block {
        ConeBlock::Nonneg(d) => *d,
        ConeBlock::SecondOrder(_) => 1,
    }
}

/// Writes the cone's unit element into `out` (all ones, or `(1, 0, ...)`).
pub(super) fn unit_e(block: &ConeBlock, out: &mut [f64]) {
    match block {
        ConeBlock::Nonneg(_) => out.fill(1.0),
        ConeBlock::SecondOrder(_) => {
            out.fill(0.0);
            out[0] = 1.0;
        }
    }
}

/// `det x` for a second-order-cone vector.
#[inline]
fn soc_det(x: &[f64]) -> f64 {
    let tail: f64 = x[1..].iter().map(|v| v * v).sum();
    x[0] * x[0] - tail
}

/// Nesterov-Todd scaling data for one block.
#[derive(Debug, Clone)]
pub(super) enum Scaling {
    /// `w[j] = sqrt(s_j / z_j)`, so `W = diag(w)`.
    Nonneg { w: Vec<f64> },
    /// `W = eta P(v)` with `det v = 1`; `wbar = v о v` is the hyperbolic
    /// unit scaling point, kept for assembling `W^2 = eta^2 P(wbar)`.
    Soc { eta: f64, wbar: Vec<f64>, v: Vec<f64> },
}

impl Scaling {
    /// Computes the NT scaling for strictly interior `z`, `s`.  Returns
    /// `None` when either vector has left the cone interior numerically.
    pub(super) fn compute(block: &ConeBlock, z: &[f64], s: &[f64]) -> Option<Scaling> {
        match block {
            ConeBlock::Nonneg(_) => {
                let mut w = Vec::with_capacity(z.len());
                for (&zj, &sj) in z.iter().zip(s) {
                    if !(zj > 0.0 && sj > 0.0) {
                        return None;
                    }
                    w.push((sj / zj).sqrt());
                }
                Some(Scaling::Nonneg { w })
            }
            ConeBlock::SecondOrder(d) => {
                let (dz, ds) = (soc_det(z), soc_det(s));
                if !(z[0] > 0.0 && s[0] > 0.0 && dz > 0.0 && ds > 0.0) {
                    return None;
                }
                let (rz, rs) = (dz.sqrt(), ds.sqrt());
                // Normalized points have det = 1; gamma^2 = (1 + zbar.sbar)/2.
                let zbar: Vec<f64> = z.iter().map(|v| v / rz).collect();
                let sbar: Vec<f64> = s.iter().map(|v| v / rs).collect();
                let dot: f64 = zbar.iter().zip(&sbar).map(|(a, b)| a * b).sum();
                let gamma = ((1.0 + dot) / 2.0).sqrt();
                if !(gamma > 0.0) {
                    return None;
                }
                // wbar = (sbar + J zbar) / (2 gamma), again with det = 1.
                let mut wbar = Vec::with_capacity(*d);
                wbar.push((sbar[0] + zbar[0]) / (2.0 * gamma));
                for k in 1..*d {
                    wbar.push((sbar[k] - zbar[k]) / (2.0 * gamma));
                }
                // v = sqrt(wbar) in the Jordan algebra: (wbar + e) rescaled
                // to det 1.
                let denom = (2.0 * (1.0 + wbar[0])).sqrt();
                let mut v = wbar.clone();
                v[0] += 1.0;
                for vk in &mut v {
                    *vk /= denom;
                }
                let eta = (ds / dz).powf(0.25);
                Some(Scaling::Soc { eta, wbar, v })
            }
        }
    }

    /// `out = W x`.
    pub(super) fn apply_w(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Nonneg { w } => {
                for ((o, &wj), &xj) in out.iter_mut().zip(w).zip(x) {
                    *o = wj * xj;
                }
            }
            Scaling::Soc { eta, v, .. } => {
                // W x = eta (2 v (v.x) - J x), using det v = 1.
                let dot: f64 = v.iter().zip(x).map(|(a, b)| a * b).sum();
                out[0] = eta * (2.0 * v[0] * dot - x[0]);
                for k in 1..x.len() {
                    out[k] = eta * (2.0 * v[k] * dot + x[k]);
                }
            }
        }
    }

    /// `out = W^{-1} x`.
    pub(super) fn apply_w_inv(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Nonneg { w } => {
                for ((o, &wj), &xj) in out.iter_mut().zip(w).zip(x) {
                    *o = xj / wj;
                }
            }
            Scaling::Soc { eta, v, .. } => {
                // P(v)^{-1} = P(J v) because det v = 1.
                let dot = v[0] * x[0] - v[1..].iter().zip(&x[1..]).map(|(a, b)| a * b).sum::<f64>();
                out[0] = (2.0 * v[0] * dot - x[0]) / eta;
                for k in 1..x.len() {
                    out[k] = (-2.0 * v[k] * dot + x[k]) / eta;
                }
            }
        }
    }

    /// `out = W^2 x`, used by the unregularized KKT residual in iterative
    /// refinement.
    pub(super) fn apply_w2(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Nonneg { w } => {
                for ((o, &wj), &xj) in out.iter_mut().zip(w).zip(x) {
                    *o = wj * wj * xj;
                }
            }
            Scaling::Soc { eta, wbar, .. } => {
                let e2 = eta * eta;
                let dot: f64 = wbar.iter().zip(x).map(|(a, b)| a * b).sum();
                out[0] = e2 * (2.0 * wbar[0] * dot - x[0]);
                for k in 1..x.len() {
                    out[k] = e2 * (2.0 * wbar[k] * dot + x[k]);
                }
            }
        }
    }

    /// Visits the lower triangle of the dense `W^2` block as
    /// `(local_row, local_col, value)` with `local_row >= local_col`.
    pub(super) fn for_each_w2_entry(&self, mut visit: impl FnMut(usize, usize, f64)) {
        match self {
            Scaling::Nonneg { w } => {
                for (j, &wj) in w.iter().enumerate() {
                    visit(j, j, wj * wj);
                }
            }
            Scaling::Soc { eta, wbar, .. } => {
                let e2 = eta * eta;
                let d = wbar.len();
                for p in 0..d {
                    for q in 0..=p {
                        let jordan = if p != q {
                            0.0
                        } else if p == 0 {
                            1.0
                        } else {
                            -1.0
                        };
                        visit(p, q, e2 * (2.0 * wbar[p] * wbar[q] - jordan));
                    }
                }
            }
        }
    }
}

/// Jordan product `out = u o v` for the block.
pub(super) fn jordan_mul(block: &ConeBlock, u: &[f64], v: &[f64], out: &mut [f64]) {
    match block {
        ConeBlock::Nonneg(_) => {
            for ((o, &uj), &vj) in out.iter_mut().zip(u).zip(v) {
                *o = uj * vj;
            }
        }
        ConeBlock::SecondOrder(_) => {
            let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
            out[0] = dot;
            for k in 1..u.len() {
                out[k] = u[0] * v[k] + v[0] * u[k];
            }
        }
    }
}

/// Solves `arw(lam) x = d` for the block (`arw` is the Jordan-product
/// matrix of `lam`).  `lam` must be strictly interior.
pub(super) fn arrow_solve(block: &ConeBlock, lam: &[f64], d: &[f64], out: &mut [f64]) {
    match block {
        ConeBlock::Nonneg(_) => {
            for ((o, &lj), &dj) in out.iter_mut().zip(lam).zip(d) {
                *o = dj / lj;
            }
        }
        ConeBlock::SecondOrder(_) => {
            // Block 2x2 elimination: x0 = (lam0 d0 - lamb.db) / det(lam),
            // xb = (db - x0 lamb) / lam0.
            let det = soc_det(lam);
            let dotb: f64 = lam[1..].iter().zip(&d[1..]).map(|(a, b)| a * b).sum();
            let x0 = (lam[0] * d[0] - dotb) / det;
            out[0] = x0;
            for k in 1..d.len() {
                out[k] = (d[k] - x0 * lam[k]) / lam[0];
            }
        }
    }
}

/// Largest step `alpha` with `x + alpha dx` still in the (closed) cone;
/// `f64::INFINITY` when the ray never leaves.
pub(super) fn max_step(block: &ConeBlock, x: &[f64], dx: &[f64]) -> f64 {
    match block {
        ConeBlock::Nonneg(_) => {
            let mut alpha = f64::INFINITY;
            for (&xj, &dj) in x.iter().zip(dx) {
                if dj < 0.0 {
                    alpha = alpha.min(-xj / dj);
                }
            }
            alpha
        }
        ConeBlock::SecondOrder(_) => {
            // The exit time is the smallest positive root of
            // det(x + alpha dx) = a alpha^2 + b alpha + c with c > 0.
            let a = soc_det(dx);
            let c = soc_det(x);
            if c <= 0.0 {
                return 0.0;
            }
            let dotb: f64 = x[1..].iter().zip(&dx[1..]).map(|(p, q)| p * q).sum();
            let b = 2.0 * (x[0] * dx[0] - dotb);
            let scale = a.abs().max(b.abs()).max(c.abs());
            if a.abs() <= 1e-14 * scale {
                if b >= 0.0 {
                    return f64::INFINITY;
                }
                return -c / b;
            }
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                // No real crossing; with c > 0 this requires a > 0.
                return f64::INFINITY;
            }
            let sq = disc.sqrt();
            let q = -0.5 * (b + b.signum() * sq);
            let (r1, r2) = (q / a, if q != 0.0 { c / q } else { 0.0 });
            let mut alpha = f64::INFINITY;
            for r in [r1, r2] {
                if r > 0.0 {
                    alpha = alpha.min(r);
                }
            }
            alpha
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol * (1.0 + y.abs()), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn nt_scaling_maps_both_points_to_the_same_lambda() {
        let block = ConeBlock::SecondOrder(4);
        let z = [2.0, 0.5, -0.7, 1.0];
        let s = [3.0, -1.0, 0.2, 0.4];
        let sc = Scaling::compute(&block, &z, &s).unwrap();
        let mut wz = [0.0; 4];
        let mut wis = [0.0; 4];
        sc.apply_w(&z, &mut wz);
        sc.apply_w_inv(&s, &mut wis);
        assert_close(&wz, &wis, 1e-12);

        // W^2 z = s, verified through both the operator and the dense
        // entries used for KKT assembly.
        let mut w2z = [0.0; 4];
        sc.apply_w2(&z, &mut w2z);
        assert_close(&w2z, &s, 1e-12);
        let mut dense = [[0.0f64; 4]; 4];
        sc.for_each_w2_entry(|p, q, v| {
            dense[p][q] = v;
            dense[q][p] = v;
        });
        let prod: Vec<f64> =
            (0..4).map(|p| (0..4).map(|q| dense[p][q] * z[q]).sum()).collect();
        assert_close(&prod, &s, 1e-12);
    }

    #[test]
    fn nonneg_scaling_is_the_diagonal_geometric_mean() {
        let block = ConeBlock::Nonneg(3);
        let z = [1.0, 4.0, 0.25];
        let s = [9.0, 1.0, 1.0];
        let sc = Scaling::compute(&block, &z, &s).unwrap();
        let mut lam = [0.0; 3];
        sc.apply_w(&z, &mut lam);
        assert_close(&lam, &[3.0, 2.0, 0.5], 1e-12);
        let mut lam2 = [0.0; 3];
        sc.apply_w_inv(&s, &mut lam2);
        assert_close(&lam, &lam2, 1e-12);
    }

    #[test]
    fn scaling_rejects_boundary_points() {
        let block = ConeBlock::SecondOrder(2);
        assert!(Scaling::compute(&block, &[1.0, 1.0], &[2.0, 1.0]).is_none());
        let block = ConeBlock::Nonneg(2);
        assert!(Scaling::compute(&block, &[1.0, 0.0], &[1.0, 1.0]).is_none());
    }

    #[test]
    fn arrow_solve_inverts_the_jordan_product() {
        let block = ConeBlock::SecondOrder(3);
        let lam = [2.0, 0.3, -0.8];
        let d = [0.7, -1.1, 0.4];
        let mut x = [0.0; 3];
        arrow_solve(&block, &lam, &d, &mut x);
        let mut back = [0.0; 3];
        jordan_mul(&block, &lam, &x, &mut back);
        assert_close(&back, &d, 1e-12);
    }

    #[test]
    fn max_step_agrees_with_bisection_on_soc() {
        let block = ConeBlock::SecondOrder(3);
        let x = [1.0, 0.3, -0.2];
        let cases = [
            [-1.0, 0.4, 0.1],
            [0.5, -2.0, 1.0],
            [1.0, 0.0, 0.0],   // deeper into the cone: no exit
            [-0.5, -0.5, 0.5],
        ];
        for dx in cases {
            let alpha = max_step(&block, &x, &dx);
            let inside = |t: f64| {
                let p: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + t * b).collect();
                p[0] >= 0.0 && soc_det(&p) >= 0.0
            };
            if alpha.is_infinite() {
                for t in [1.0, 10.0, 1e3, 1e6] {
                    assert!(inside(t), "claimed never-exit but left at t={t}");
                }
            } else {
                assert!(inside(alpha * (1.0 - 1e-9)), "exit too early at {alpha}");
                assert!(!inside(alpha * (1.0 + 1e-6)), "exit too late at {alpha}");
            }
        }
    }

    #[test]
    fn max_step_nonneg_matches_ratio_test() {
        let block = ConeBlock::Nonneg(3);
        let alpha = max_step(&block, &[1.0, 2.0, 3.0], &[-0.5, 1.0, -6.0]);
        assert!((alpha - 0.5).abs() < 1e-15);
        assert!(max_step(&block, &[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).is_infinite());
    }
}
