//! Embedded primal-dual conic interior-point solver.
//!
//! Solves programs in the standard equality form
//!
//! ```text
//! minimize    c . z
//! subject to  A_eq z = b_eq,
//!             z in K = K_1 x K_2 x ... (ordered blocks)
//! ```
//!
//! where each block is either a nonnegative orthant or a second-order
//! cone `{ u : u_0 >= |u_{1..}| }`.  The method is a Mehrotra
//! predictor-corrector with Nesterov-Todd scaling, an infeasible start
//! from unit interior points, and a banded quasidefinite KKT solve with
//! static regularization plus iterative refinement.  All arithmetic is
//! deterministic and single-threaded: identical inputs produce
//! bit-identical iterates.

mod cones;
mod ipm;
mod linalg;
pub mod sparse;

pub use sparse::CscMatrix;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One cone block; blocks partition the variable vector in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeBlock {
    /// `u >= 0` componentwise; dimension must be at least 1.
    Nonneg(usize),
    /// `u_0 >= |u_{1..}|_2`; dimension must be at least 2.
    SecondOrder(usize),
}

impl ConeBlock {
    pub fn dim(&self) -> usize {
        match self {
            ConeBlock::Nonneg(d) | ConeBlock::SecondOrder(d) => *d,
        }
    }
}

/// A conic program in equality standard form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicProgram {
    /// Objective coefficients, one per variable.
    pub c: Vec<f64>,
    /// Equality constraint matrix.
    pub a_eq: CscMatrix,
    /// Equality right-hand side.
    pub b_eq: Vec<f64>,
    /// Cone blocks covering the variables in order.
    pub cones: Vec<ConeBlock>,
}

impl ConicProgram {
    /// Total variable count implied by the cone blocks.
    pub fn num_vars(&self) -> usize {
        self.cones.iter().map(ConeBlock::dim).sum()
    }

    pub fn num_rows(&self) -> usize {
        self.b_eq.len()
    }

    /// Starting offset of each cone block.
    pub(crate) fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.cones.len());
        let mut acc = 0;
        for blk in &self.cones {
            off.push(acc);
            acc += blk.dim();
        }
        off
    }

    /// Validates dimensions and cone sizes.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if n == 0 {
            return Err(Error::invalid("conic: program has no variables"));
        }
        if self.c.len() != n {
            return Err(Error::invalid("conic: c length does not match cone dims"));
        }
        if self.a_eq.ncols != n {
            return Err(Error::invalid("conic: A_eq column count does not match cones"));
        }
        if self.a_eq.nrows != self.b_eq.len() {
            return Err(Error::invalid("conic: A_eq row count does not match b_eq"));
        }
        for blk in &self.cones {
            match blk {
                ConeBlock::Nonneg(d) if *d == 0 => {
                    return Err(Error::invalid("conic: empty nonnegative block"));
                }
                ConeBlock::SecondOrder(d) if *d < 2 => {
                    return Err(Error::invalid("conic: second-order block needs dim >= 2"));
                }
                _ => {}
            }
        }
        let finite = self.c.iter().chain(&self.b_eq).chain(&self.a_eq.values);
        if finite.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("conic: data must be finite"));
        }
        Ok(())
    }

    /// Human-readable listing of the whole program, intended for debugging
    /// small instances.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let n = self.num_vars();
        let m = self.num_rows();
        writeln!(out, "conic program: {n} vars, {m} rows, {} blocks", self.cones.len())
            .unwrap();
        writeln!(out, "min sum_j c_j z_j with c = {:?}", self.c).unwrap();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        for j in 0..self.a_eq.ncols {
            for (r, v) in self.a_eq.col(j) {
                rows[r].push((j, v));
            }
        }
        for (r, row) in rows.iter().enumerate() {
            let terms: Vec<String> =
                row.iter().map(|(j, v)| format!("{v}*z{j}")).collect();
            writeln!(out, "  row {r}: {} = {}", terms.join(" + "), self.b_eq[r]).unwrap();
        }
        let mut offset = 0;
        for blk in &self.cones {
            let d = blk.dim();
            let kind = match blk {
                ConeBlock::Nonneg(_) => "Nonneg",
                ConeBlock::SecondOrder(_) => "SecondOrder",
            };
            writeln!(out, "  z[{offset}..{}] in {kind}({d})", offset + d).unwrap();
            offset += d;
        }
        out
    }
}

/// Termination tolerances and limits for [`solve`].
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Relative primal and dual feasibility tolerance.
    pub feas_tol: f64,
    /// Relative objective-gap tolerance.
    pub gap_tol: f64,
    /// Hard iteration cap.
    pub max_iters: usize,
    /// Record a per-iteration trace in the solution.
    pub trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { feas_tol: 1e-8, gap_tol: 1e-8, max_iters: 200, trace: false }
    }
}

/// Solver outcome classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    /// All three relative residuals met their tolerances.
    Optimal,
    /// An approximate Farkas certificate of primal infeasibility was found.
    Infeasible,
    /// An approximate certificate of dual infeasibility (primal
    /// unboundedness) was found.
    Unbounded,
    /// Iteration cap reached or numerical stall; the returned iterate is
    /// the last one computed.
    IterLimit,
}

/// Per-iteration snapshot recorded when `SolveOptions::trace` is set.
#[derive(Debug, Clone)]
pub struct IterStat {
    pub mu: f64,
    pub primal_res: f64,
    pub dual_res: f64,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// `<z, s>`; nonnegative for cone-interior iterates.
    pub inner_zs: f64,
    /// Step length taken after this snapshot (0 for the final one).
    pub step: f64,
}

/// Solution returned by [`solve`]; iterates are in original coordinates.
#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub z_primal: Vec<f64>,
    pub y_dual: Vec<f64>,
    pub s_dual: Vec<f64>,
    pub status: Status,
    pub iters: usize,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// `|A z - b| / (1 + |b|)` at the final iterate.
    pub primal_res: f64,
    /// `|A^T y + s - c| / (1 + |c|)` at the final iterate.
    pub dual_res: f64,
    /// `|c.z - b.y| / (1 + |c.z|)` at the final iterate.
    pub gap_rel: f64,
    pub trace: Vec<IterStat>,
}

/// Solves the program; `Err` is reserved for structurally invalid inputs,
/// all numerical outcomes are reported through [`Status`].
pub fn solve(prog: &ConicProgram, opts: &SolveOptions) -> Result<ConicSolution> {
    prog.validate()?;
    if prog.cones.iter().any(|b| matches!(b, ConeBlock::SecondOrder(2))) {
        let rotated = rotate_plane_cones(prog);
        let mut sol = ipm::run(&rotated, opts);
        unrotate_plane_cones(prog, &mut sol);
        return Ok(sol);
    }
    Ok(ipm::run(prog, opts))
}

/// A two-dimensional second-order cone is the nonnegative quadrant rotated
/// by 45 degrees: `x_0 >= |x_1|` holds exactly when both `(x_0 + x_1)` and
/// `(x_0 - x_1)` are nonnegative.  Solving in quadrant coordinates avoids
/// the two-ray cone's degenerate boundary geometry, where a dual slack
/// approaching the apex along one ray collapses the scaling point and
/// stalls the step size.  The change of basis is the orthogonal involution
/// `R = (1/sqrt 2) [[1, 1], [1, -1]]` applied per block, so objectives,
/// residual norms, and cone membership are preserved exactly.
fn rotate_plane_cones(prog: &ConicProgram) -> ConicProgram {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let offsets = prog.offsets();
    let mut c = prog.c.clone();
    let mut cones = Vec::with_capacity(prog.cones.len());
    let mut pair_start = vec![false; prog.num_vars()];
    for (blk, &off) in prog.cones.iter().zip(&offsets) {
        if matches!(blk, ConeBlock::SecondOrder(2)) {
            cones.push(ConeBlock::Nonneg(2));
            pair_start[off] = true;
            let (c0, c1) = (c[off], c[off + 1]);
            c[off] = (c0 + c1) * r;
            c[off + 1] = (c0 - c1) * r;
        } else {
            cones.push(*blk);
        }
    }
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(prog.a_eq.nnz());
    let mut j = 0;
    while j < prog.num_vars() {
        if pair_start[j] {
            for (row, v) in prog.a_eq.col(j) {
                triplets.push((row, j, v * r));
                triplets.push((row, j + 1, v * r));
            }
            for (row, v) in prog.a_eq.col(j + 1) {
                triplets.push((row, j, v * r));
                triplets.push((row, j + 1, -v * r));
            }
            j += 2;
        } else {
            triplets.extend(prog.a_eq.col(j).map(|(row, v)| (row, j, v)));
            j += 1;
        }
    }
    let a_eq = CscMatrix::from_triplets(prog.num_rows(), prog.num_vars(), &triplets);
    ConicProgram { c, a_eq, b_eq: prog.b_eq.clone(), cones }
}

/// Maps a solution of the rotated program back to the original coordinates;
/// the basis change is its own inverse.
fn unrotate_plane_cones(prog: &ConicProgram, sol: &mut ConicSolution) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for (blk, off) in prog.cones.iter().zip(prog.offsets()) {
        if matches!(blk, ConeBlock::SecondOrder(2)) {
            for v in [&mut sol.z_primal, &mut sol.s_dual] {
                let (a, b) = (v[off], v[off + 1]);
                v[off] = (a + b) * r;
                v[off + 1] = (a - b) * r;
            }
        }
    }
}

/// Recomputes the three relative residuals `(primal, dual, gap)` of a
/// solution against its program.
pub fn residuals(prog: &ConicProgram, sol: &ConicSolution) -> Result<(f64, f64, f64)> {
    prog.validate()?;
    let n = prog.num_vars();
    let m = prog.num_rows();
    if sol.z_primal.len() != n || sol.s_dual.len() != n || sol.y_dual.len() != m {
        return Err(Error::invalid("residuals: solution dimensions mismatch program"));
    }
    let mut az = vec![0.0; m];
    prog.a_eq.mul(&sol.z_primal, &mut az);
    let mut aty = vec![0.0; n];
    prog.a_eq.mul_transpose(&sol.y_dual, &mut aty);
    let norm2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let pres: f64 = norm2(
        &az.iter().zip(&prog.b_eq).map(|(a, b)| a - b).collect::<Vec<_>>(),
    ) / (1.0 + norm2(&prog.b_eq));
    let dres: f64 = norm2(
        &aty.iter()
            .zip(&sol.s_dual)
            .zip(&prog.c)
            .map(|((a, s), c)| a + s - c)
            .collect::<Vec<_>>(),
    ) / (1.0 + norm2(&prog.c));
    let pobj: f64 = prog.c.iter().zip(&sol.z_primal).map(|(a, b)| a * b).sum();
    let dobj: f64 = prog.b_eq.iter().zip(&sol.y_dual).map(|(a, b)| a * b).sum();
    let gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
    Ok((pres, dres, gap))
}

#[cfg(test)]
mod tests;
