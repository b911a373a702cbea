//! Path descriptions and pointwise speed ceilings.
//!
//! A path is given in arc-length parametrization: a total length `s_f` and
//! signed curvature samples `(s, k)` at monotonically increasing stations.
//! The planner never needs the full geometry — only the largest squared
//! speed that keeps the normal (centripetal) acceleration within its bound
//! at every grid point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arc-length description of a planar path.
///
/// `samples` holds `(s, curvature)` pairs with strictly increasing `s`.
/// Curvature between stations is interpolated linearly; outside the sampled
/// range the nearest sample is extended as a constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathSpec {
    /// Total arc length of the path.
    pub s_f: f64,
    /// Velocity magnitude bound along the whole path.
    pub v_max: f64,
    /// Normal (centripetal) acceleration bound.
    pub a_n_max: f64,
    /// Signed curvature samples `(s, k)` with strictly increasing `s`.
    pub samples: Vec<(f64, f64)>,
}

impl PathSpec {
    /// Validates positivity of the scalar fields and monotonicity of the
    /// curvature stations.
    pub fn validate(&self) -> Result<()> {
        if !(self.s_f > 0.0 && self.s_f.is_finite()) {
            return Err(Error::invalid("path: s_f must be positive and finite"));
        }
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return Err(Error::invalid("path: v_max must be positive and finite"));
        }
        if !(self.a_n_max > 0.0 && self.a_n_max.is_finite()) {
            return Err(Error::invalid("path: a_n_max must be positive and finite"));
        }
        if self.samples.is_empty() {
            return Err(Error::invalid("path: at least one curvature sample required"));
        }
        for pair in self.samples.windows(2) {
            if !(pair[1].0 > pair[0].0) {
                return Err(Error::invalid(
                    "path: curvature stations must be strictly increasing",
                ));
            }
        }
        if self.samples.iter().any(|(s, k)| !s.is_finite() || !k.is_finite()) {
            return Err(Error::invalid("path: curvature samples must be finite"));
        }
        Ok(())
    }

    /// Curvature at station `s`, linearly interpolated between samples and
    /// extended as a constant beyond the first/last station.
    pub fn curvature_at(&self, s: f64) -> f64 {
        let samples = &self.samples;
        if s <= samples[0].0 {
            return samples[0].1;
        }
        if s >= samples[samples.len() - 1].0 {
            return samples[samples.len() - 1].1;
        }
        // Index of the first station strictly beyond s; the partition point
        // is at least 1 and at most len-1 thanks to the guards above.
        let hi = samples.partition_point(|&(si, _)| si <= s);
        let (s0, k0) = samples[hi - 1];
        let (s1, k1) = samples[hi];
        let f = (s - s0) / (s1 - s0);
        k0 + f * (k1 - k0)
    }
}

/// Largest admissible squared speed at each of `n` uniform grid points.
///
/// Grid point `i` (0-based) sits at `s_i = i * s_f / (n - 1)`.  The ceiling
/// combines the global speed bound with the normal-acceleration bound
/// `v^2 |k| <= a_n_max`:
///
/// ```text
/// w_max_i = min(v_max^2, a_n_max / |k(s_i)|)
/// ```
///
/// On straight stretches (`k = 0`) the ceiling is `v_max^2`.  Note the
/// returned ceilings are purely geometric; planners typically re-pin the
/// endpoints (rest-to-rest motion) when building an instance.
pub fn speed_ceiling(path: &PathSpec, n: usize) -> Result<Vec<f64>> {
    path.validate()?;
    if n < 3 {
        return Err(Error::invalid("speed_ceiling: need at least 3 grid points"));
    }
    let v2 = path.v_max * path.v_max;
    let step = path.s_f / (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            let k = path.curvature_at(i as f64 * step).abs();
            if k > 0.0 {
                v2.min(path.a_n_max / k)
            } else {
                v2
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn path(s_f: f64, v_max: f64, a_n_max: f64, samples: &[(f64, f64)]) -> PathSpec {
        PathSpec { s_f, v_max, a_n_max, samples: samples.to_vec() }
    }

    #[test]
    fn straight_path_hits_global_speed_bound() {
        let p = path(10.0, 3.0, 1.0, &[(0.0, 0.0), (10.0, 0.0)]);
        let w = speed_ceiling(&p, 5).unwrap();
        assert_eq!(w, vec![9.0; 5]);
    }

    #[test]
    fn linear_curvature_ramp() {
        // k rises from 0.1 to 0.4 over a unit-length path; with v_max = 10
        // and a_n_max = 1 the ceilings at s = 0, 0.5, 1 come out as
        // min(100, 1/k) = 10, 4, 2.5.
        let p = path(1.0, 10.0, 1.0, &[(0.0, 0.1), (1.0, 0.4)]);
        let w = speed_ceiling(&p, 3).unwrap();
        assert_relative_eq!(w[0], 10.0, max_relative = 1e-12);
        assert_relative_eq!(w[1], 4.0, max_relative = 1e-12);
        assert_relative_eq!(w[2], 2.5, max_relative = 1e-12);
    }

    #[test]
    fn circular_arc_constant_ceiling() {
        let p = path(3.0, 3.0, 8.0, &[(0.0, 2.0), (3.0, 2.0)]);
        let w = speed_ceiling(&p, 7).unwrap();
        for wi in w {
            assert_relative_eq!(wi, 4.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn negative_curvature_uses_magnitude() {
        let p = path(1.0, 10.0, 1.0, &[(0.0, -0.5), (1.0, -0.5)]);
        let w = speed_ceiling(&p, 3).unwrap();
        assert_eq!(w, vec![2.0; 3]);
    }

    #[test]
    fn sparse_samples_extend_as_constants() {
        let p = path(4.0, 10.0, 2.0, &[(1.0, 1.0), (3.0, 2.0)]);
        // s = 0 clamps to k = 1; s = 4 clamps to k = 2; s = 2 interpolates
        // to k = 1.5.
        let w = speed_ceiling(&p, 5).unwrap();
        assert_relative_eq!(w[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(w[2], 2.0 / 1.5, max_relative = 1e-12);
        assert_relative_eq!(w[4], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn rejects_non_monotone_stations_and_tiny_grids() {
        let bad = path(1.0, 1.0, 1.0, &[(0.0, 0.0), (0.0, 1.0)]);
        assert!(matches!(speed_ceiling(&bad, 5), Err(Error::InvalidInput(_))));
        let ok = path(1.0, 1.0, 1.0, &[(0.0, 0.0)]);
        assert!(matches!(speed_ceiling(&ok, 2), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rejects_nonpositive_scalars() {
        for (s_f, v_max, a_n) in [(0.0, 1.0, 1.0), (1.0, -1.0, 1.0), (1.0, 1.0, 0.0)] {
            let p = path(s_f, v_max, a_n, &[(0.0, 0.0)]);
            assert!(speed_ceiling(&p, 3).is_err());
        }
    }

    #[test]
    fn json_round_trip() {
        let p = path(2.0, 5.0, 1.5, &[(0.0, 0.1), (2.0, 0.3)]);
        let text = serde_json::to_string(&p).unwrap();
        let back: PathSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back.samples, p.samples);
        assert_eq!(back.s_f, p.s_f);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_path() -> impl Strategy<Value = PathSpec> {
            (
                0.1f64..10.0,
                0.1f64..10.0,
                0.1f64..10.0,
                proptest::collection::vec(-2.0f64..2.0, 2..6),
            )
                .prop_map(|(s_f, v_max, a_n_max, ks)| {
                    let m = ks.len();
                    let samples = ks
                        .into_iter()
                        .enumerate()
                        .map(|(i, k)| (s_f * i as f64 / (m - 1) as f64, k))
                        .collect();
                    PathSpec { s_f, v_max, a_n_max, samples }
                })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            /// The ceiling never exceeds the global speed bound.
            #[test]
            fn ceiling_bounded_by_v_max_squared(p in arb_path()) {
                let w = speed_ceiling(&p, 17).unwrap();
                for wi in w {
                    prop_assert!(wi <= p.v_max * p.v_max + 1e-12);
                    prop_assert!(wi > 0.0);
                }
            }

            /// Scaling curvature up can only lower (or keep) the ceiling.
            #[test]
            fn ceiling_antitone_in_curvature(p in arb_path(), scale in 1.0f64..4.0) {
                let w0 = speed_ceiling(&p, 17).unwrap();
                let mut sharper = p.clone();
                for s in &mut sharper.samples {
                    s.1 *= scale;
                }
                let w1 = speed_ceiling(&sharper, 17).unwrap();
                for (a, b) in w0.iter().zip(&w1) {
                    prop_assert!(b <= &(a + 1e-12));
                }
            }
        }
    }
}
