use super::sparse::CscMatrix;
use super::*;

fn prog(
    c: Vec<f64>,
    nrows: usize,
    triplets: &[(usize, usize, f64)],
    b: Vec<f64>,
    cones: Vec<ConeBlock>,
) -> ConicProgram {
    let ncols = c.len();
    ConicProgram { c, a_eq: CscMatrix::from_triplets(nrows, ncols, triplets), b_eq: b, cones }
}

fn solve_default(p: &ConicProgram) -> ConicSolution {
    solve(p, &SolveOptions::default()).expect("valid program")
}

#[test]
fn one_variable_equality() {
    // min x  s.t.  x = 5, x >= 0.
    let p = prog(vec![1.0], 1, &[(0, 0, 1.0)], vec![5.0], vec![ConeBlock::Nonneg(1)]);
    let sol = solve_default(&p);
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.z_primal[0] - 5.0).abs() < 1e-6);
    assert!((sol.primal_obj - 5.0).abs() < 1e-6);
    assert!((sol.dual_obj - 5.0).abs() < 1e-6);
}

#[test]
fn two_bound_lp() {
    // max x + y  s.t.  x <= 2, y <= 3  (as min -x - y with slacks).
    let p = prog(
        vec![-1.0, -1.0, 0.0, 0.0],
        2,
        &[(0, 0, 1.0), (0, 2, 1.0), (1, 1, 1.0), (1, 3, 1.0)],
        vec![2.0, 3.0],
        vec![ConeBlock::Nonneg(4)],
    );
    let sol = solve_default(&p);
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.primal_obj + 5.0).abs() < 1e-7);
    assert!((sol.z_primal[0] - 2.0).abs() < 1e-6);
    assert!((sol.z_primal[1] - 3.0).abs() < 1e-6);
    // Dual prices are -1 for both rows.
    assert!((sol.y_dual[0] + 1.0).abs() < 1e-6);
    assert!((sol.y_dual[1] + 1.0).abs() < 1e-6);
}

#[test]
fn euclidean_norm_minimization() {
    // min t  s.t.  (t, 3, 4) in SOC(3): t* = 5.
    let p = prog(
        vec![1.0, 0.0, 0.0],
        2,
        &[(0, 1, 1.0), (1, 2, 1.0)],
        vec![3.0, 4.0],
        vec![ConeBlock::SecondOrder(3)],
    );
    let sol = solve_default(&p);
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.primal_obj - 5.0).abs() < 1e-6, "pobj = {}", sol.primal_obj);
}

#[test]
fn hyperbolic_constraint_via_rotated_cone_identity() {
    // min t  s.t.  t * w >= 1 with w fixed at 4, via
    // |(2, t - 4)| <= t + 4  <=>  (t + 4, 2, t - 4) in SOC(3).
    // Variables z = (t, u0, u1, u2); rows pin u to the affine image of t.
    let p = prog(
        vec![1.0, 0.0, 0.0, 0.0],
        3,
        &[
            (0, 1, 1.0),
            (0, 0, -1.0),
            (1, 2, 1.0),
            (2, 3, 1.0),
            (2, 0, -1.0),
        ],
        vec![4.0, 2.0, -4.0],
        vec![ConeBlock::Nonneg(1), ConeBlock::SecondOrder(3)],
    );
    let sol = solve_default(&p);
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.z_primal[0] - 0.25).abs() < 1e-6, "t = {}", sol.z_primal[0]);
}

#[test]
fn detects_primal_infeasibility() {
    // x = -1 with x >= 0 has a one-line Farkas certificate.
    let p = prog(vec![1.0], 1, &[(0, 0, 1.0)], vec![-1.0], vec![ConeBlock::Nonneg(1)]);
    let sol = solve_default(&p);
    assert_eq!(sol.status, Status::Infeasible);
}

#[test]
fn detects_unboundedness() {
    // min -x1 on the ray x1 = x2 >= 0.
    let p = prog(
        vec![-1.0, 0.0],
        1,
        &[(0, 0, 1.0), (0, 1, -1.0)],
        vec![0.0],
        vec![ConeBlock::Nonneg(2)],
    );
    let sol = solve_default(&p);
    assert_eq!(sol.status, Status::Unbounded);
}

#[test]
fn respects_iteration_cap() {
    let p = prog(
        vec![1.0, 0.0, 0.0],
        2,
        &[(0, 1, 1.0), (1, 2, 1.0)],
        vec![3.0, 4.0],
        vec![ConeBlock::SecondOrder(3)],
    );
    let sol = solve(&p, &SolveOptions { max_iters: 1, ..Default::default() }).unwrap();
    assert_eq!(sol.status, Status::IterLimit);
    assert_eq!(sol.iters, 1);
}

#[test]
fn reported_residuals_match_recomputation() {
    let p = prog(
        vec![1.0, 0.0, 0.0],
        2,
        &[(0, 1, 1.0), (1, 2, 1.0)],
        vec![3.0, 4.0],
        vec![ConeBlock::SecondOrder(3)],
    );
    let sol = solve_default(&p);
    let (pres, dres, gap) = residuals(&p, &sol).unwrap();
    assert!(pres <= 1e-8 && dres <= 1e-8 && gap <= 1e-8);
    assert!((pres - sol.primal_res).abs() <= 1e-12);
    assert!((dres - sol.dual_res).abs() <= 1e-12);
    assert!((gap - sol.gap_rel).abs() <= 1e-12);
}

#[test]
fn iterates_stay_cone_consistent_and_gap_nearly_one_sided() {
    let p = prog(
        vec![-1.0, -1.0, 0.0, 0.0],
        2,
        &[(0, 0, 1.0), (0, 2, 1.0), (1, 1, 1.0), (1, 3, 1.0)],
        vec![2.0, 3.0],
        vec![ConeBlock::Nonneg(4)],
    );
    let sol = solve(&p, &SolveOptions { trace: true, ..Default::default() }).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!(!sol.trace.is_empty());
    for st in &sol.trace {
        // <z, s> >= 0 is the self-duality statement for interior iterates;
        // the raw objective gap additionally carries the infeasibility
        // residuals, so it is only one-sided up to those terms.
        assert!(st.inner_zs >= 0.0);
        let slack = (st.primal_res + st.dual_res) * 100.0 * (1.0 + st.primal_obj.abs());
        assert!(st.primal_obj - st.dual_obj >= -slack - 1e-9);
    }
}

#[test]
fn deterministic_bit_identical_reruns() {
    let p = prog(
        vec![1.0, 0.0, 0.0, 0.0],
        3,
        &[
            (0, 1, 1.0),
            (0, 0, -1.0),
            (1, 2, 1.0),
            (2, 3, 1.0),
            (2, 0, -1.0),
        ],
        vec![4.0, 2.0, -4.0],
        vec![ConeBlock::Nonneg(1), ConeBlock::SecondOrder(3)],
    );
    let a = solve_default(&p);
    let b = solve_default(&p);
    assert_eq!(a.iters, b.iters);
    assert_eq!(a.z_primal, b.z_primal);
    assert_eq!(a.y_dual, b.y_dual);
    assert_eq!(a.s_dual, b.s_dual);
}

#[test]
fn rejects_malformed_programs() {
    // c length disagrees with cone dims.
    let p = prog(vec![1.0, 2.0], 1, &[(0, 0, 1.0)], vec![1.0], vec![ConeBlock::Nonneg(1)]);
    assert!(solve(&p, &SolveOptions::default()).is_err());
    // SOC of dimension 1 is not a second-order cone.
    let p = prog(vec![1.0], 1, &[(0, 0, 1.0)], vec![1.0], vec![ConeBlock::SecondOrder(1)]);
    assert!(solve(&p, &SolveOptions::default()).is_err());
}

#[test]
fn dump_lists_rows_and_cones() {
    let p = prog(
        vec![1.0, 0.0],
        1,
        &[(0, 0, 2.0), (0, 1, -1.0)],
        vec![3.0],
        vec![ConeBlock::Nonneg(2)],
    );
    let text = p.dump();
    assert!(text.contains("2 vars, 1 rows"));
    assert!(text.contains("2*z0 + -1*z1 = 3"));
    assert!(text.contains("Nonneg(2)"));
}

mod random_programs {
    use super::*;
    use proptest::prelude::*;

    /// A program with a constructed primal-dual optimal pair: z* and s*
    /// complementary in the cone, y* arbitrary, with b := A z* and
    /// c := A^T y* + s*.  Any such triple satisfies the KKT conditions,
    /// so the optimal value is exactly c . z*.
    #[derive(Debug, Clone)]
    struct Planted {
        prog: ConicProgram,
        value: f64,
    }

    fn build_planted(
        cones: Vec<ConeBlock>,
        a_dense: Vec<f64>,
        y_star: Vec<f64>,
        mags: Vec<f64>,
        prim_side: Vec<bool>,
    ) -> Planted {
        let n: usize = cones.iter().map(ConeBlock::dim).sum();
        let m = y_star.len();
        let mut z_star = vec![0.0; n];
        let mut s_star = vec![0.0; n];
        let mut off = 0;
        for blk in &cones {
            let d = blk.dim();
            match blk {
                ConeBlock::Nonneg(_) => {
                    // Strict complementarity coordinate by coordinate.
                    for k in 0..d {
                        if prim_side[off + k] {
                            z_star[off + k] = mags[off + k];
                        } else {
                            s_star[off + k] = mags[off + k];
                        }
                    }
                }
                ConeBlock::SecondOrder(_) => {
                    if prim_side[off] {
                        // Primal strictly interior, dual slack zero.
                        let head = 1.0 + mags[off];
                        let tail = &mags[off + 1..off + d];
                        let norm = tail.iter().map(|t| t * t).sum::<f64>().sqrt();
                        let shrink = if norm >= head { 0.5 * head / norm } else { 1.0 };
                        z_star[off] = head;
                        for k in 1..d {
                            z_star[off + k] = mags[off + k] * shrink;
                        }
                    } else {
                        // Complementary boundary pair z = a(1, u),
                        // s = b(1, -u) with |u| = 1: <z, s> = ab(1 - u.u) = 0.
                        let tail = &mags[off + 1..off + d];
                        let norm = tail.iter().map(|t| t * t).sum::<f64>().sqrt();
                        let a = mags[off];
                        let b = 0.5 + mags[off + d - 1];
                        z_star[off] = a;
                        s_star[off] = b;
                        for k in 1..d {
                            let u_k = if norm > 1e-9 {
                                mags[off + k] / norm
                            } else if k == 1 {
                                1.0
                            } else {
                                0.0
                            };
                            z_star[off + k] = a * u_k;
                            s_star[off + k] = -b * u_k;
                        }
                    }
                }
            }
            off += d;
        }

        let mut triplets = Vec::with_capacity(m * n);
        for r in 0..m {
            for j in 0..n {
                triplets.push((r, j, a_dense[r * n + j]));
            }
        }
        let a = CscMatrix::from_triplets(m, n, &triplets);
        let mut b = vec![0.0; m];
        a.mul(&z_star, &mut b);
        let mut c = vec![0.0; n];
        a.mul_transpose(&y_star, &mut c);
        for j in 0..n {
            c[j] += s_star[j];
        }
        let value = c.iter().zip(&z_star).map(|(ci, zi)| ci * zi).sum();
        Planted { prog: ConicProgram { c, a_eq: a, b_eq: b, cones }, value }
    }

    fn planted_strategy() -> impl Strategy<Value = Planted> {
        proptest::collection::vec(
            prop_oneof![
                (1usize..4).prop_map(ConeBlock::Nonneg),
                (2usize..5).prop_map(ConeBlock::SecondOrder),
            ],
            1..4,
        )
        .prop_flat_map(|cones| {
            let n: usize = cones.iter().map(ConeBlock::dim).sum();
            // Strictly fewer rows than variables: a square system could pin
            // the feasible set to a single boundary point, where no central
            // path exists and an iteration-limit stop would be legitimate.
            let m = (n + 1) / 2;
            (
                Just(cones),
                proptest::collection::vec(-2.0f64..2.0, m * n),
                proptest::collection::vec(-1.0f64..1.0, m),
                proptest::collection::vec(0.1f64..2.0, n),
                proptest::collection::vec(proptest::bool::ANY, n),
            )
        })
        .prop_map(|(cones, a_dense, y_star, mags, prim_side)| {
            build_planted(cones, a_dense, y_star, mags, prim_side)
        })
    }

    proptest! {
        #[test]
        fn recovers_planted_optimum(planted in planted_strategy()) {
            let sol = solve(&planted.prog, &SolveOptions::default()).unwrap();
            prop_assert_eq!(sol.status, Status::Optimal);
            let scale = 1.0 + planted.value.abs();
            prop_assert!(
                (sol.primal_obj - planted.value).abs() <= 1e-5 * scale,
                "pobj {} vs planted {}", sol.primal_obj, planted.value
            );
            let (pres, dres, gap) = residuals(&planted.prog, &sol).unwrap();
            prop_assert!(pres <= 1e-6 && dres <= 1e-6 && gap <= 1e-6);
        }
    }
}
