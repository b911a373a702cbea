//! Mehrotra predictor-corrector iteration with Nesterov-Todd scaling.
//!
//! Each iteration solves two Newton systems sharing one factorization of
//! the quasidefinite KKT matrix
//!
//! ```text
//! [ -W^2 - dI   A^T ] [dz]   [ r_d - W arw(lambda)^{-1} d_c ]
//! [  A          dI  ] [dy] = [ r_p                          ]
//! ```
//!
//! followed by `ds = r_d - A^T dy`.  The static regularization `d` keeps
//! the factorization stable; iterative refinement against the
//! *unregularized* matrix restores accuracy.  The affine (predictor) pass
//! uses the complementarity target `d_c = -lambda o lambda`, for which the
//! right-hand side simplifies to `r_d + s`; the combined pass adds the
//! centering term `sigma mu e` and Mehrotra's second-order correction.

use super::cones::{self, Scaling};
use super::linalg::BandedLdl;
use super::{ConeBlock, ConicProgram, ConicSolution, IterStat, SolveOptions, Status};

/// Static KKT regularization, relative to the largest `A` entry.
const STATIC_REG: f64 = 1e-9;
/// Maximum iterative-refinement rounds per Newton solve.
const REFINE_ROUNDS: usize = 5;
/// Refinement stops once the KKT residual is this small relative to the
/// right-hand side.
const REFINE_TOL: f64 = 1e-13;
/// Polish rounds against the unregularized KKT equations per solve.
const DEREG_ROUNDS: usize = 30;
/// A polish round is kept only if it shrinks the unregularized residual
/// by at least this factor; the first non-improving round reverts and
/// stops the polish.
const DEREG_ACCEPT: f64 = 0.9;
/// A Newton solve whose monitored-refinement residual exceeds this
/// fraction of the right-hand side signals a broken factorization
/// (element growth from pivots near the regularization floor); the
/// factorization is retried with boosted regularization.
const SOLVE_OK_REL: f64 = 1e-8;
/// Regularization multiplier per factorization retry.
const DELTA_BOOST: f64 = 1e3;
/// Regularization retries per iteration; caps the boost at 1e6 x base.
const MAX_DELTA_RETRIES: usize = 2;
/// Largest complementarity reduction allowed per iteration.
const MU_DROP_MIN: f64 = 1e-4;
/// Widest allowed decentering: after a step, every per-eigenvalue
/// complementarity product must stay above this fraction of their average.
const NEIGHBORHOOD: f64 = 1e-3;
/// Backtracking factor for steps that leave the neighborhood.
const NBHD_SHRINK: f64 = 0.8;
/// Fraction-to-boundary damping of the combined step.
const STEP_DAMP: f64 = 0.99;
/// Steps this short count as stalls; three in a row abort.
const STALL_STEP: f64 = 1e-10;
/// Residual floor (times problem scale) in the certificate quality tests.
/// A residual at rounding level would otherwise let a noise-magnitude
/// objective term pass the relative test and misreport a solvable problem.
const CERT_FLOOR: f64 = 1e-13;

pub(super) fn run(prog: &ConicProgram, opts: &SolveOptions) -> ConicSolution {
    Engine::new(prog, opts).run()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

struct Engine<'a> {
    prog: &'a ConicProgram,
    opts: &'a SolveOptions,
    n: usize,
    m: usize,
    nu: f64,
    /// (offset, block) pairs.
    blocks: Vec<(usize, ConeBlock)>,
    kkt: BandedLdl,
    delta: f64,
    norm_b: f64,
    norm_c: f64,
    /// Unregularized KKT residual of the most recent Newton direction.
    dir_err: f64,
    /// Whether the most recent Newton solve reached refinement accuracy
    /// against the regularized system; `false` marks a broken
    /// factorization.
    solve_ok: bool,

    z: Vec<f64>,
    y: Vec<f64>,
    s: Vec<f64>,

    // n-dimensional scratch.
    rd: Vec<f64>,
    aty: Vec<f64>,
    lambda: Vec<f64>,
    lam2: Vec<f64>,
    corr: Vec<f64>,
    dc: Vec<f64>,
    g: Vec<f64>,
    dz_a: Vec<f64>,
    ds_a: Vec<f64>,
    dz: Vec<f64>,
    ds: Vec<f64>,
    buf_n: Vec<f64>,
    buf2_n: Vec<f64>,
    /// Two max-block-dim halves used by the per-block corrector products.
    scratch: Vec<f64>,
    // m-dimensional scratch.
    rp: Vec<f64>,
    az: Vec<f64>,
    dy_a: Vec<f64>,
    dy: Vec<f64>,
    buf_m: Vec<f64>,
    // (n + m)-dimensional scratch for the KKT solves.
    big_rhs: Vec<f64>,
    big_sol: Vec<f64>,
    big_res: Vec<f64>,
    big_corr: Vec<f64>,
    big_best: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(prog: &'a ConicProgram, opts: &'a SolveOptions) -> Self {
        let n = prog.num_vars();
        let m = prog.num_rows();
        let offsets = prog.offsets();
        let blocks: Vec<(usize, ConeBlock)> =
            offsets.iter().copied().zip(prog.cones.iter().copied()).collect();
        let nu: f64 = prog.cones.iter().map(|b| cones::degree(b) as f64).sum();

        // KKT pattern: A couples variable j to row n + r; dense W^2 blocks
        // couple second-order-cone coordinates to each other.
        let mut edges = Vec::with_capacity(prog.a_eq.nnz() + 3 * blocks.len());
        for j in 0..n {
            for (r, _) in prog.a_eq.col(j) {
                edges.push((j, n + r));
            }
        }
        for &(off, blk) in &blocks {
            if let ConeBlock::SecondOrder(d) = blk {
                for p in 0..d {
                    for q in 0..p {
                        edges.push((off + p, off + q));
                    }
                }
            }
        }
        let mut sign = vec![-1.0; n];
        sign.extend(std::iter::repeat(1.0).take(m));
        let kkt = BandedLdl::new(n + m, &edges, &sign);

        let scale = prog.a_eq.max_abs().max(1.0);
        let max_block = prog.cones.iter().map(ConeBlock::dim).max().unwrap_or(1);
        let mut z = vec![0.0; n];
        for &(off, blk) in &blocks {
            cones::unit_e(&blk, &mut z[off..off + blk.dim()]);
        }
        let s = z.clone();

        Engine {
            prog,
            opts,
            n,
            m,
            nu,
            blocks,
            kkt,
            delta: STATIC_REG * scale,
            norm_b: norm2(&prog.b_eq),
            norm_c: norm2(&prog.c),
            dir_err: 0.0,
            solve_ok: true,
            z,
            y: vec![0.0; m],
            s,
            rd: vec![0.0; n],
            aty: vec![0.0; n],
            lambda: vec![0.0; n],
            lam2: vec![0.0; n],
            corr: vec![0.0; n],
            dc: vec![0.0; n],
            g: vec![0.0; n],
            dz_a: vec![0.0; n],
            ds_a: vec![0.0; n],
            dz: vec![0.0; n],
            ds: vec![0.0; n],
            buf_n: vec![0.0; n],
            buf2_n: vec![0.0; n],
            scratch: vec![0.0; 2 * max_block],
            rp: vec![0.0; m],
            az: vec![0.0; m],
            dy_a: vec![0.0; m],
            dy: vec![0.0; m],
            buf_m: vec![0.0; m],
            big_rhs: vec![0.0; n + m],
            big_sol: vec![0.0; n + m],
            big_res: vec![0.0; n + m],
            big_corr: vec![0.0; n + m],
            big_best: vec![0.0; n + m],
        }
    }

    /// Inf-norm of the residual of the candidate direction in `big_sol`
    /// against the *regularized* KKT matrix, left in `big_res`.
    fn direction_residual(&mut self, scalings: &[Scaling], delta: f64) -> f64 {
        let (n, m) = (self.n, self.m);
        let (dz, dy) = self.big_sol.split_at(n);
        apply_w2_all(&self.blocks, scalings, dz, &mut self.buf_n);
        self.prog.a_eq.mul_transpose(dy, &mut self.buf2_n);
        self.prog.a_eq.mul(dz, &mut self.buf_m);
        for j in 0..n {
            self.big_res[j] = self.g[j] + self.buf_n[j] + delta * dz[j] - self.buf2_n[j];
        }
        for r in 0..m {
            self.big_res[n + r] = self.rp[r] - self.buf_m[r] - delta * dy[r];
        }
        norm_inf(&self.big_res)
    }

    /// One Newton solve with the current factorization: finds `(dz, dy)`
    /// with `-W^2 dz + A^T dy = g`, `A dz = rp`, leaving `[dz; dy]` in
    /// `big_sol` for the caller to copy out and the achieved residual of
    /// those (unregularized) equations in `dir_err`.
    ///
    /// Two refinement phases.  The first targets the regularized matrix:
    /// the factorization approximates it to rounding error, so those
    /// corrections always contract, guarding against badly bumped pivots.
    /// The second polishes away the regularization bias, which reaches
    /// `delta * |direction|` and becomes fatal once directions grow large
    /// near a degenerate optimum.  Polishing against a near-singular
    /// matrix can silently grow a huge null-space component with no
    /// visible residual, so a polish round is kept only while the true
    /// residual strictly shrinks: a null-space contribution leaves the
    /// residual unchanged and ends the polish on the spot.
    fn newton(&mut self, scalings: &[Scaling], delta: f64) {
        let (n, m) = (self.n, self.m);
        self.big_rhs[..n].copy_from_slice(&self.g);
        self.big_rhs[n..].copy_from_slice(&self.rp);
        self.kkt.solve(&self.big_rhs, &mut self.big_sol);
        let rhs_scale = 1.0 + norm_inf(&self.big_rhs);
        let mut best = f64::INFINITY;
        for _ in 0..=REFINE_ROUNDS {
            let res = self.direction_residual(scalings, delta);
            if res >= best {
                self.big_sol.copy_from_slice(&self.big_best);
                break;
            }
            best = res;
            self.big_best.copy_from_slice(&self.big_sol);
            if best <= REFINE_TOL * rhs_scale {
                break;
            }
            self.kkt.solve(&self.big_res, &mut self.big_corr);
            for k in 0..n + m {
                self.big_sol[k] += self.big_corr[k];
            }
        }
        self.solve_ok = best <= SOLVE_OK_REL * rhs_scale;
        let mut best = self.direction_residual(scalings, 0.0);
        self.big_best.copy_from_slice(&self.big_sol);
        for _ in 0..DEREG_ROUNDS {
            if best <= REFINE_TOL * rhs_scale {
                break;
            }
            self.kkt.solve(&self.big_res, &mut self.big_corr);
            for k in 0..n + m {
                self.big_sol[k] += self.big_corr[k];
            }
            let res = self.direction_residual(scalings, 0.0);
            if res <= DEREG_ACCEPT * best {
                best = res;
                self.big_best.copy_from_slice(&self.big_sol);
            } else {
                self.big_sol.copy_from_slice(&self.big_best);
                break;
            }
        }
        self.dir_err = best;
    }

    /// Builds the combined search direction for centering weight `sigma`
    /// into `(dz, dy, ds)`: one Newton solve against the complementarity
    /// target `d_c = sigma mu e - lambda o lambda - (W dz_a) o (W^-1 ds_a)`.
    /// The second-order product is skipped for pure centering passes,
    /// which have no meaningful predictor.
    fn corrector_direction(
        &mut self,
        scalings: &[Scaling],
        delta: f64,
        sigma: f64,
        mu: f64,
        second_order: bool,
    ) {
        let n = self.n;
        if second_order {
            for (bi, &(off, blk)) in self.blocks.iter().enumerate() {
                let d = blk.dim();
                let r = off..off + d;
                let (wdz, wids) = self.scratch.split_at_mut(d);
                let wids = &mut wids[..d];
                scalings[bi].apply_w(&self.dz_a[r.clone()], wdz);
                scalings[bi].apply_w_inv(&self.ds_a[r.clone()], wids);
                cones::jordan_mul(&blk, wdz, wids, &mut self.corr[r]);
            }
        } else {
            self.corr.fill(0.0);
        }
        for (bi, &(off, blk)) in self.blocks.iter().enumerate() {
            let d = blk.dim();
            // sigma mu e has its first coordinate on SOC blocks and
            // every coordinate on nonnegative blocks.
            for k in 0..d {
                let e_k = match blk {
                    ConeBlock::Nonneg(_) => 1.0,
                    ConeBlock::SecondOrder(_) if k == 0 => 1.0,
                    ConeBlock::SecondOrder(_) => 0.0,
                };
                self.dc[off + k] =
                    sigma * mu * e_k - self.lam2[off + k] - self.corr[off + k];
            }
            let r = off..off + d;
            let (u, wu) = self.scratch.split_at_mut(d);
            let wu = &mut wu[..d];
            cones::arrow_solve(&blk, &self.lambda[r.clone()], &self.dc[r.clone()], u);
            scalings[bi].apply_w(u, wu);
            for k in 0..d {
                self.g[off + k] = self.rd[off + k] - wu[k];
            }
        }
        self.newton(scalings, delta);
        self.dz.copy_from_slice(&self.big_sol[..n]);
        self.dy.copy_from_slice(&self.big_sol[n..]);
        self.prog.a_eq.mul_transpose(&self.dy, &mut self.buf2_n);
        for j in 0..n {
            self.ds[j] = self.rd[j] - self.buf2_n[j];
        }
    }

    /// Step lengths for the direction in `(dz, dy, ds)`: separate primal
    /// and dual fractions to the boundary followed by three safety caps.
    /// The split matters when one cone pins its side of the step: a
    /// boundary-hugging primal block must not stop the dual side from
    /// recentering, and vice versa.  Returns the lengths and whether they
    /// respect the centrality neighborhood.
    fn select_step(&mut self, pres: f64, dres: f64, inner_zs: f64) -> ((f64, f64), bool) {
        let n = self.n;
        let ap = (STEP_DAMP * step_to_boundary(&self.blocks, &self.z, &self.dz)).min(1.0);
        let ad = (STEP_DAMP * step_to_boundary(&self.blocks, &self.s, &self.ds)).min(1.0);

        // A direction the polish could not make accurate (the KKT endgame
        // can be too ill-conditioned) is walked at most far enough to
        // roughly double the current feasibility residuals, never far
        // enough to destroy an almost-converged iterate.  The additive
        // slack shrinks with mu: residuals and complementarity have to
        // reach zero together, or the objective gap floors at the stray
        // residual times the multiplier norm.
        let (ap, ad) = if self.dir_err > 0.0 {
            let level = (pres * (1.0 + self.norm_b)).max(dres * (1.0 + self.norm_c));
            let mu_level = inner_zs / self.nu;
            let slack = 0.5
                * self.opts.feas_tol.min(mu_level)
                * (1.0 + self.norm_b.max(self.norm_c));
            let cap = (level + slack) / self.dir_err;
            (ap.min(cap), ad.min(cap))
        } else {
            (ap, ad)
        };

        // Unequal lengths help only if they beat the symmetric step they
        // dominate; the cross terms can otherwise leave complementarity
        // higher than the cautious choice and set up a two-cycle where
        // the sides alternately overshoot each other.
        let zds = dot(&self.z, &self.ds);
        let sdz = dot(&self.s, &self.dz);
        let dzds = dot(&self.dz, &self.ds);
        let mu_after = |p: f64, d: f64| inner_zs + p * sdz + d * zds + p * d * dzds;
        let (mut ap, mut ad) = {
            let a = ap.min(ad);
            if mu_after(ap, ad) <= mu_after(a, a) {
                (ap, ad)
            } else {
                (a, a)
            }
        };
        // Cap the per-iteration complementarity reduction.  A single huge
        // step can drop <z, s> many orders of magnitude below the
        // feasibility residuals; every later step is then truncated to
        // nothing before feasibility finishes repairing.  Walking the same
        // direction a shorter distance keeps the iterate alive.
        {
            let floor = MU_DROP_MIN * inner_zs;
            for _ in 0..60 {
                if mu_after(ap, ad) >= floor || !(ap.max(ad) > STALL_STEP) {
                    break;
                }
                ap *= 0.8;
                ad *= 0.8;
            }
        }

        // Keep every eigenvalue pair of the complementarity products in a
        // wide neighborhood of their average.  Aggressive steps can
        // otherwise slide one pair onto the cone boundary long before the
        // others converge; the scaling point then degenerates (condition
        // number ~ 1/min-ratio) and later steps truncate to nothing.
        // Inside the neighborhood the conditioning stays bounded all the
        // way down the path.  When no length fits, standing still feeds
        // the stall counter rather than giving up the invariant.
        let current = min_complementarity_ratio(&self.blocks, self.nu, &self.z, &self.s);
        let floor = NEIGHBORHOOD.min(current);
        for _ in 0..60 {
            if !(ap.max(ad) > STALL_STEP) {
                break;
            }
            for j in 0..n {
                self.buf_n[j] = self.z[j] + ap * self.dz[j];
                self.buf2_n[j] = self.s[j] + ad * self.ds[j];
            }
            let trial =
                min_complementarity_ratio(&self.blocks, self.nu, &self.buf_n, &self.buf2_n);
            if trial >= floor {
                return ((ap, ad), true);
            }
            ap *= NBHD_SHRINK;
            ad *= NBHD_SHRINK;
        }
        ((0.0, 0.0), false)
    }

    fn assemble_and_factor(&mut self, scalings: &[Scaling], delta: f64) {
        let kkt = &mut self.kkt;
        kkt.clear();
        for (bi, &(off, _)) in self.blocks.iter().enumerate() {
            scalings[bi].for_each_w2_entry(|p, q, v| kkt.add(off + p, off + q, -v));
        }
        for j in 0..self.n {
            kkt.add(j, j, -delta);
        }
        for r in 0..self.m {
            kkt.add(self.n + r, self.n + r, delta);
        }
        for j in 0..self.n {
            for (r, v) in self.prog.a_eq.col(j) {
                kkt.add(self.n + r, j, v);
            }
        }
        // Quasidefiniteness puts every exact pivot at magnitude `delta` or
        // more under any symmetric ordering, so anything smaller is
        // cancellation noise; restoring it to the guaranteed bound keeps
        // the factor close enough to the matrix for refinement to
        // contract.  A floor far below `delta` would instead inject a
        // near-singular spurious pivot that refinement cannot repair.
        kkt.factor(delta);
    }

    fn run(mut self) -> ConicSolution {
        let (n, m) = (self.n, self.m);
        let status;
        let mut iters = 0usize;
        let mut trace: Vec<IterStat> = Vec::new();
        let mut stalls = 0usize;
        let mut force_stop = false;

        let (mut pobj, mut dobj, mut pres, mut dres, mut gap);
        'iter: loop {
            // Residuals and objective statistics for the current iterate.
            self.prog.a_eq.mul(&self.z, &mut self.az);
            self.prog.a_eq.mul_transpose(&self.y, &mut self.aty);
            for r in 0..m {
                self.rp[r] = self.prog.b_eq[r] - self.az[r];
            }
            for j in 0..n {
                self.rd[j] = self.prog.c[j] - self.aty[j] - self.s[j];
            }
            pobj = dot(&self.prog.c, &self.z);
            dobj = dot(&self.prog.b_eq, &self.y);
            pres = norm2(&self.rp) / (1.0 + self.norm_b);
            dres = norm2(&self.rd) / (1.0 + self.norm_c);
            gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
            let inner_zs = dot(&self.z, &self.s);
            let mu = inner_zs / self.nu;
            if self.opts.trace {
                trace.push(IterStat {
                    mu,
                    primal_res: pres,
                    dual_res: dres,
                    primal_obj: pobj,
                    dual_obj: dobj,
                    inner_zs,
                    step: 0.0,
                });
            }

            // The gap test uses the objective difference, not <z, s>.
            // Complementarity can vanish while the objectives still
            // disagree: the difference carries a y . (Az - b) term, and on
            // dually degenerate problems |y| grows without bound as the
            // path descends, so tiny residuals times a huge multiplier
            // still poison the reported value.
            if pres <= self.opts.feas_tol
                && dres <= self.opts.feas_tol
                && gap <= self.opts.gap_tol
            {
                status = Status::Optimal;
                break;
            }
            // Approximate Farkas certificates.  `aty + s` is the dual
            // infeasibility direction residual; `az` the primal one.  The
            // floors keep a residual that has merely hit rounding level
            // from certifying against a noise-scale objective term.
            if dobj > 0.0 {
                for j in 0..n {
                    self.buf_n[j] = self.aty[j] + self.s[j];
                }
                let lhs = norm2(&self.buf_n).max(CERT_FLOOR * (1.0 + self.norm_c));
                if lhs <= self.opts.feas_tol * dobj {
                    status = Status::Infeasible;
                    break;
                }
            }
            if pobj < 0.0 {
                let lhs = norm2(&self.az).max(CERT_FLOOR * (1.0 + self.norm_b));
                if lhs <= self.opts.feas_tol * (-pobj) {
                    status = Status::Unbounded;
                    break;
                }
            }
            if force_stop || iters >= self.opts.max_iters || !mu.is_finite() || mu <= 0.0 {
                status = Status::IterLimit;
                break;
            }

            // Nesterov-Todd scaling of the current pair.
            let mut scalings = Vec::with_capacity(self.blocks.len());
            let mut broke = false;
            for &(off, blk) in &self.blocks {
                let r = off..off + blk.dim();
                match Scaling::compute(&blk, &self.z[r.clone()], &self.s[r]) {
                    Some(sc) => scalings.push(sc),
                    None => {
                        broke = true;
                        break;
                    }
                }
            }
            if broke {
                status = Status::IterLimit;
                break;
            }
            for (bi, &(off, blk)) in self.blocks.iter().enumerate() {
                let r = off..off + blk.dim();
                let (zs, ls) = (&self.z[r.clone()], &mut self.lambda[r]);
                scalings[bi].apply_w(zs, ls);
            }
            for &(off, blk) in &self.blocks {
                let r = off..off + blk.dim();
                let (lam, out) = (&self.lambda[r.clone()], &mut self.lam2[r]);
                cones::jordan_mul(&blk, lam, lam, out);
            }

            // Predictor-corrector step.  The endgame can break the
            // factorization outright: variables converging to zero put
            // near-floor pivots under columns with large off-diagonals,
            // and the resulting element growth makes refinement diverge.
            // Detected failures are retried with boosted regularization,
            // which caps the growth at the price of a bias the polish and
            // the step caps already manage.
            let mut delta = self.delta;
            let mut retries = 0;
            'step: loop {
                self.assemble_and_factor(&scalings, delta);

                // Predictor: d_c = -lambda o lambda, hence g = r_d + s.
                for j in 0..n {
                    self.g[j] = self.rd[j] + self.s[j];
                }
                self.newton(&scalings, delta);
                let predictor_ok = self.solve_ok;
                self.dz_a.copy_from_slice(&self.big_sol[..n]);
                self.dy_a.copy_from_slice(&self.big_sol[n..]);
                self.prog.a_eq.mul_transpose(&self.dy_a, &mut self.buf2_n);
                for j in 0..n {
                    self.ds_a[j] = self.rd[j] - self.buf2_n[j];
                }

                // Certificate checks on the pure Newton direction, which
                // aligns with the recession ray on pathological problems
                // while the regularization caps how fast the iterates
                // themselves can diverge.  A dual ray (b.dy > 0,
                // A^T dy + ds = 0, ds in K) proves primal infeasibility;
                // by construction A^T dy_a + ds_a = r_d.
                let bdy = dot(&self.prog.b_eq, &self.dy_a);
                if pres > self.opts.feas_tol && bdy > 0.0 {
                    let lhs = norm2(&self.rd).max(CERT_FLOOR * (1.0 + self.norm_c));
                    if lhs <= self.opts.feas_tol * bdy
                        && ray_in_cone(&self.blocks, &self.ds_a, self.opts.feas_tol)
                    {
                        status = Status::Infeasible;
                        break 'iter;
                    }
                }
                // A primal ray (c.dz < 0, A dz = 0, dz in K) proves the
                // objective unbounded below.
                let cdz = dot(&self.prog.c, &self.dz_a);
                if dres > self.opts.feas_tol && cdz < 0.0 {
                    self.prog.a_eq.mul(&self.dz_a, &mut self.buf_m);
                    let lhs = norm2(&self.buf_m).max(CERT_FLOOR * (1.0 + self.norm_b));
                    if lhs <= self.opts.feas_tol * (-cdz)
                        && ray_in_cone(&self.blocks, &self.dz_a, self.opts.feas_tol)
                    {
                        status = Status::Unbounded;
                        break 'iter;
                    }
                }

                let alpha_aff = step_to_boundary(&self.blocks, &self.z, &self.dz_a)
                    .min(step_to_boundary(&self.blocks, &self.s, &self.ds_a))
                    .min(1.0);
                let mu_aff = (inner_zs
                    + alpha_aff * (dot(&self.z, &self.ds_a) + dot(&self.s, &self.dz_a))
                    + alpha_aff * alpha_aff * dot(&self.dz_a, &self.ds_a))
                    / self.nu;
                let sigma = ((mu_aff / mu).clamp(0.0, 1.0)).powi(3);

                self.corrector_direction(&scalings, delta, sigma, mu, true);

                if (predictor_ok && self.solve_ok) || retries >= MAX_DELTA_RETRIES {
                    break 'step;
                }
                retries += 1;
                delta *= DELTA_BOOST;
            }
            let delta = delta;

            let ((ap, ad), inside) = self.select_step(pres, dres, inner_zs);
            // Pure centering fallback: when no length of the combined
            // direction stays in the neighborhood, retarget the same
            // factorization at the center of the current mu-level set
            // (sigma = 1, no second-order term).  From a boundary-hugging
            // iterate that direction improves the worst eigenvalue ratio,
            // so it admits a real step and unfreezes the next pass.
            let (ap, ad) = if inside {
                (ap, ad)
            } else {
                self.corrector_direction(&scalings, delta, 1.0, mu, false);
                self.select_step(pres, dres, inner_zs).0
            };
            let moved = ap.max(ad);
            if let Some(last) = trace.last_mut() {
                last.step = moved;
            }
            if !(moved > STALL_STEP) {
                stalls += 1;
            } else {
                stalls = 0;
            }
            if stalls >= 3 {
                force_stop = true;
            }

            // Take the step; revert and stop if it produced non-finite
            // values (extreme ill-conditioning at the end of the path).
            let mut ok = ap.is_finite() && ad.is_finite();
            for j in 0..n {
                let zj = self.z[j] + ap * self.dz[j];
                let sj = self.s[j] + ad * self.ds[j];
                if !(zj.is_finite() && sj.is_finite()) {
                    ok = false;
                }
            }
            if !ok {
                status = Status::IterLimit;
                break;
            }
            for j in 0..n {
                self.z[j] += ap * self.dz[j];
                self.s[j] += ad * self.ds[j];
            }
            for r in 0..m {
                self.y[r] += ad * self.dy[r];
            }
            iters += 1;
        }

        ConicSolution {
            z_primal: self.z,
            y_dual: self.y,
            s_dual: self.s,
            status,
            iters,
            primal_obj: pobj,
            dual_obj: dobj,
            primal_res: pres,
            dual_res: dres,
            gap_rel: gap,
            trace,
        }
    }
}

/// Componentwise `W^2 x` across all blocks.
fn apply_w2_all(
    blocks: &[(usize, ConeBlock)],
    scalings: &[Scaling],
    x: &[f64],
    out: &mut [f64],
) {
    for (bi, &(off, blk)) in blocks.iter().enumerate() {
        let d = blk.dim();
        scalings[bi].apply_w2(&x[off..off + d], &mut out[off..off + d]);
    }
}

/// Smallest per-eigenvalue complementarity product of `(z, s)` relative to
/// their average `mu = <z, s> / nu`; negative when the pair has left the
/// cone.  Nonnegative blocks contribute their coordinatewise products.  A
/// second-order pair contributes the two squared Jordan eigenvalues of its
/// scaled point, recovered without forming the scaling from
/// `e+^2 e-^2 = det z det s` and `e+^2 + e-^2 = 2 z.s`.
fn min_complementarity_ratio(
    blocks: &[(usize, ConeBlock)],
    nu: f64,
    z: &[f64],
    s: &[f64],
) -> f64 {
    let total = dot(z, s);
    if !(total > 0.0) {
        return -1.0;
    }
    let mu = total / nu;
    let mut worst = f64::INFINITY;
    for &(off, blk) in blocks {
        let d = blk.dim();
        match blk {
            ConeBlock::Nonneg(_) => {
                for k in off..off + d {
                    worst = worst.min(z[k] * s[k] / mu);
                }
            }
            ConeBlock::SecondOrder(_) => {
                let (zb, sb) = (&z[off..off + d], &s[off..off + d]);
                let det_z = zb[0] * zb[0] - dot(&zb[1..], &zb[1..]);
                let det_s = sb[0] * sb[0] - dot(&sb[1..], &sb[1..]);
                let t = dot(zb, sb);
                let p = det_z * det_s;
                if !(t > 0.0) || p < 0.0 {
                    return -1.0;
                }
                let emin2 = p / (t + (t * t - p).max(0.0).sqrt());
                worst = worst.min(emin2 / mu);
            }
        }
    }
    worst
}

/// Whether `x` lies in the cone up to a slack proportional to its size.
/// Approximate cone membership for a candidate recession ray.  Rays have
/// no absolute scale, so violations are judged against the ray's own
/// magnitude; an absolute slack would wave through noise-length vectors
/// whose components are structurally outside the cone.
fn ray_in_cone(blocks: &[(usize, ConeBlock)], x: &[f64], rel_tol: f64) -> bool {
    let slack = rel_tol * norm_inf(x);
    blocks.iter().all(|&(off, blk)| {
        let xs = &x[off..off + blk.dim()];
        match blk {
            ConeBlock::Nonneg(_) => xs.iter().all(|&v| v >= -slack),
            ConeBlock::SecondOrder(_) => xs[0] + slack >= norm2(&xs[1..]),
        }
    })
}

/// Largest cone-feasible step across all blocks.
fn step_to_boundary(blocks: &[(usize, ConeBlock)], x: &[f64], dx: &[f64]) -> f64 {
    let mut alpha = f64::INFINITY;
    for &(off, blk) in blocks {
        let d = blk.dim();
        alpha = alpha.min(cones::max_step(&blk, &x[off..off + d], &dx[off..off + d]));
    }
    alpha
}
