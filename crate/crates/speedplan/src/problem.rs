//! Discretized minimum-time instances and squared-speed profiles.
//!
//! An [`Instance`] lives on a uniform arc-length grid `s_i = (i-1) h`,
//! `i = 1..n` (1-based in the math, 0-based in the code).  The decision
//! vector is the squared speed `w_i = v(s_i)^2`; traversal time is
//!
//! ```text
//! f(w) = sum_{i=2}^{n-1} h / sqrt(w_i)
//! ```
//!
//! subject to, for every interior index `i = 2..n-1`,
//!
//! * speed window:      `w_min_i <= w_i <= w_max_i`,
//! * acceleration:      `|w_{i+1} - w_i| <= A_i h`,
//! * jerk (nonconvex):  `|dw_i| <= h / sqrt(w_i)` where
//!   `dw_i = (w_{i-1} - (2+rho) w_i + w_{i+1}) / (h J_i)`,
//!
//! with the rest-to-rest endpoints pinned by `w_max_1 = w_max_n = 0`.
//! `rho >= 0` is a small regularizer added to the central second-difference
//! coefficient; solving uses `rho = 0` unless stated otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One planning instance on a uniform grid.
///
/// `accel` and `jerk` carry one bound per interior index (length `n - 2`);
/// entry `k` governs grid point `k + 1` (0-based).  Both bound vectors must
/// be strictly positive.  `w_max` and `w_min` have length `n` with the
/// endpoints pinned to zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Instance {
    /// Number of grid points (at least 3).
    pub n: usize,
    /// Grid step in arc length.
    pub h: f64,
    /// Acceleration bounds per interior index, length `n - 2`.
    #[serde(rename = "A")]
    pub accel: Vec<f64>,
    /// Jerk bounds per interior index, length `n - 2`.
    #[serde(rename = "J")]
    pub jerk: Vec<f64>,
    /// Squared-speed ceilings, length `n`, endpoints zero.
    pub w_max: Vec<f64>,
    /// Squared-speed floors, length `n`; defaults to all zeros.
    #[serde(default)]
    pub w_min: Vec<f64>,
    /// Regularizer on the central second-difference coefficient.
    #[serde(default)]
    pub rho: f64,
}

impl Instance {
    /// Builds and validates an instance.  `w_min = None` means all zeros.
    pub fn new(
        h: f64,
        accel: Vec<f64>,
        jerk: Vec<f64>,
        w_max: Vec<f64>,
        w_min: Option<Vec<f64>>,
        rho: f64,
    ) -> Result<Self> {
        let n = w_max.len();
        let w_min = w_min.unwrap_or_else(|| vec![0.0; n]);
        let inst = Instance { n, h, accel, jerk, w_max, w_min, rho };
        inst.validate()?;
        Ok(inst)
    }

    /// Convenience constructor with scalar acceleration/jerk bounds applied
    /// at every interior index, zero floors and no regularizer.
    pub fn uniform(h: f64, a: f64, j: f64, w_max: Vec<f64>) -> Result<Self> {
        let n = w_max.len();
        let m = n.saturating_sub(2);
        Instance::new(h, vec![a; m], vec![j; m], w_max, None, 0.0)
    }

    /// Checks every documented invariant, naming the first violation.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n < 3 {
            return Err(Error::invalid("instance: n must be at least 3"));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::invalid("instance: h must be positive and finite"));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::invalid("instance: rho must be nonnegative and finite"));
        }
        if self.w_max.len() != n || self.w_min.len() != n {
            return Err(Error::invalid("instance: w_max/w_min must have length n"));
        }
        if self.accel.len() != n - 2 || self.jerk.len() != n - 2 {
            return Err(Error::invalid("instance: A/J must have length n - 2"));
        }
        if self.accel.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::invalid("instance: acceleration bounds must be positive"));
        }
        if self.jerk.iter().any(|j| !(j.is_finite() && *j > 0.0)) {
            return Err(Error::invalid("instance: jerk bounds must be positive"));
        }
        for i in 0..n {
            let (lo, hi) = (self.w_min[i], self.w_max[i]);
            if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
                return Err(Error::invalid(format!(
                    "instance: need 0 <= w_min <= w_max at index {i}"
                )));
            }
        }
        if self.w_max[0] != 0.0 || self.w_max[n - 1] != 0.0 {
            return Err(Error::invalid("instance: endpoint ceilings must be zero"));
        }
        Ok(())
    }

    /// Parses an instance from JSON and validates it.
    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Instance = serde_json::from_str(text)?;
        if inst.w_min.is_empty() {
            let mut inst = inst;
            inst.w_min = vec![0.0; inst.w_max.len()];
            inst.validate()?;
            return Ok(inst);
        }
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }

    /// Grid coordinates `s_i = i * h` (0-based `i`).
    pub fn station(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    /// Equivalent instance on a grid stretched by `r > 0`.
    ///
    /// The feasible squared-speed profiles of `(h, A, J)` and
    /// `(r h, A / r, J / r^2)` coincide, and objectives scale by `r`:
    /// both the second-difference ratio `dw` and the time term `h/sqrt(w)`
    /// pick up exactly one factor of `r`, so every constraint is preserved.
    /// The regularizer `rho` is kept verbatim, which is what makes the
    /// correspondence exact rather than first-order.
    pub fn scaled(&self, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid("scale factor must be positive and finite"));
        }
        let mut out = self.clone();
        out.h = self.h * r;
        out.accel = self.accel.iter().map(|a| a / r).collect();
        out.jerk = self.jerk.iter().map(|j| j / (r * r)).collect();
        out.validate()?;
        Ok(out)
    }
}

/// A squared-speed profile on the instance grid (`w_i = v(s_i)^2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub w: Vec<f64>,
}

impl Profile {
    pub fn new(w: Vec<f64>) -> Self {
        Profile { w }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Speeds `v_i = sqrt(max(w_i, 0))`.
    pub fn speeds(&self) -> Vec<f64> {
        self.w.iter().map(|wi| wi.max(0.0).sqrt()).collect()
    }
}

/// Traversal-time term for one grid point: `h / sqrt(w)`, taken as `+inf`
/// when `w <= 0` (a stopped interior point never finishes the step).
#[inline]
pub(crate) fn time_term(h: f64, w: f64) -> f64 {
    if w > 0.0 {
        h / w.sqrt()
    } else {
        f64::INFINITY
    }
}

/// Total traversal time `sum_{interior} h / sqrt(w_i)`; `+inf` if any
/// interior squared speed is nonpositive.
pub fn objective(inst: &Instance, p: &Profile) -> f64 {
    p.w[1..inst.n - 1].iter().map(|&wi| time_term(inst.h, wi)).sum()
}

/// Scaled second difference at interior grid point `i` (0-based,
/// `1 <= i <= n-2`):
///
/// ```text
/// dw_i = (w_{i-1} - (2 + rho) w_i + w_{i+1}) / (h J_i)
/// ```
///
/// This is the discrete quantity the jerk bounds constrain on both sides.
pub fn delta_w(inst: &Instance, w: &[f64], i: usize) -> f64 {
    debug_assert!(i >= 1 && i + 1 < w.len());
    (w[i - 1] - (2.0 + inst.rho) * w[i] + w[i + 1]) / (inst.h * inst.jerk[i - 1])
}

/// Per-constraint violations of a profile, each as `lhs - rhs` of the
/// constraint in `lhs <= rhs` form (positive means violated).
///
/// Jerk entries use the capacity `h / sqrt(w_i)` on the right-hand side,
/// which is `+inf` for `w_i <= 0`; such rows report `-inf` (vacuous).
#[derive(Debug, Clone)]
pub struct ViolationReport {
    /// `dw_i - h/sqrt(w_i)` per interior index (positive-jerk side).
    pub pos_jerk: Vec<f64>,
    /// `-dw_i - h/sqrt(w_i)` per interior index (negative-jerk side).
    pub neg_jerk: Vec<f64>,
    /// `|w_{i+1} - w_i| - A_i h` per interior index.
    pub accel: Vec<f64>,
    /// `max(w_i - w_max_i, w_min_i - w_i)` per grid point.
    pub bounds: Vec<f64>,
    /// Tolerance the report was classified against.
    pub tol: f64,
}

impl ViolationReport {
    /// True when every violation is at most `tol`.
    pub fn feasible(&self) -> bool {
        self.max_violation() <= self.tol
    }

    /// Largest violation across all constraint families (`-inf` possible
    /// on degenerate inputs, never `NaN`).
    pub fn max_violation(&self) -> f64 {
        let fams = [&self.pos_jerk, &self.neg_jerk, &self.accel, &self.bounds];
        fams.iter().flat_map(|v| v.iter().copied()).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest violation on the positive-jerk side.
    pub fn max_pos_jerk(&self) -> f64 {
        self.pos_jerk.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest violation on the negative-jerk side.
    pub fn max_neg_jerk(&self) -> f64 {
        self.neg_jerk.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Grid points (0-based) whose jerk rows exceed the tolerance.
    pub fn jerk_violating_indices(&self) -> Vec<usize> {
        self.pos_jerk
            .iter()
            .zip(&self.neg_jerk)
            .enumerate()
            .filter(|(_, (p, n))| **p > self.tol || **n > self.tol)
            .map(|(k, _)| k + 1)
            .collect()
    }
}

/// Evaluates every constraint of the instance at `p` and classifies the
/// violations against `tol`.
pub fn check_feasible(inst: &Instance, p: &Profile, tol: f64) -> ViolationReport {
    let n = inst.n;
    let w = &p.w;
    assert_eq!(w.len(), n, "profile length must match instance grid");
    let m = n - 2;
    let mut pos_jerk = Vec::with_capacity(m);
    let mut neg_jerk = Vec::with_capacity(m);
    let mut accel = Vec::with_capacity(m);
    for i in 1..=m {
        let cap = time_term(inst.h, w[i]);
        let dw = delta_w(inst, w, i);
        // cap may be +inf; the subtraction then yields -inf, not NaN,
        // because dw is finite for finite profiles.
        pos_jerk.push(dw - cap);
        neg_jerk.push(-dw - cap);
        let budget = inst.accel[i - 1] * inst.h;
        accel.push((w[i + 1] - w[i]).abs() - budget);
    }
    let bounds = (0..n)
        .map(|i| (w[i] - inst.w_max[i]).max(inst.w_min[i] - w[i]))
        .collect();
    ViolationReport { pos_jerk, neg_jerk, accel, bounds, tol }
}

/// Writes the profile as CSV with columns `i, s_i, w_i, v_i` (1-based `i`).
pub fn write_profile_csv<W: std::io::Write>(
    inst: &Instance,
    p: &Profile,
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "i,s,w,v")?;
    for (idx, &wi) in p.w.iter().enumerate() {
        writeln!(out, "{},{},{},{}", idx + 1, inst.station(idx), wi, wi.max(0.0).sqrt())?;
    }
    Ok(())
}

/// Writes `s_i, w_i, w_max_i` rows for plotting a profile against its
/// ceiling.
pub fn write_plot_csv<W: std::io::Write>(
    inst: &Instance,
    p: &Profile,
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "s,w,w_max")?;
    for (idx, &wi) in p.w.iter().enumerate() {
        writeln!(out, "{},{},{}", inst.station(idx), wi, inst.w_max[idx])?;
    }
    Ok(())
}
