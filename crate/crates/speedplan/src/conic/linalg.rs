//! Banded LDL^T factorization for the quasidefinite KKT systems.
//!
//! The KKT matrices produced by the interior-point iteration have a fixed
//! sparsity pattern whose graph is (after a good symmetric permutation) a
//! narrow band: cone-program variables interact only with the equality
//! rows touching them, and the planner's programs chain consecutive grid
//! points.  We therefore compute one reverse Cuthill-McKee ordering per
//! program and refactor inside that fixed band every iteration.
//!
//! Quasidefinite systems (negative-definite top-left block, positive-
//! definite bottom-right block after regularization) admit an LDL^T
//! factorization with the identity permutation of any symmetric ordering,
//! so no numerical pivoting is needed; a signed pivot floor guards against
//! breakdown in the last interior-point iterations.

/// Reverse Cuthill-McKee ordering of an undirected graph given as
/// adjacency lists.  Returns `order` with `order[new] = old`.  Ties are
/// broken by (degree, index), which keeps the ordering deterministic.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let dim = adj.len();
    let mut visited = vec![false; dim];
    let mut order = Vec::with_capacity(dim);
    let degree = |v: usize| adj[v].len();

    let mut nodes: Vec<usize> = (0..dim).collect();
    nodes.sort_by_key(|&v| (degree(v), v));

    for &start in &nodes {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> =
                adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree(u), u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// Bandwidth of the permuted pattern: `max |pos[i] - pos[j]|` over edges.
fn bandwidth(pos: &[usize], edges: &[(usize, usize)]) -> usize {
    edges
        .iter()
        .map(|&(i, j)| pos[i].abs_diff(pos[j]))
        .max()
        .unwrap_or(0)
}

/// Symmetric banded LDL^T workspace with a fixed fill-reducing permutation.
///
/// Callers describe the pattern once (every potentially nonzero unordered
/// pair), then repeatedly `clear` / `add` numeric values in *original*
/// coordinates, `factor`, and `solve`.
pub struct BandedLdl {
    dim: usize,
    bw: usize,
    /// `pos[old] = new` position under the RCM permutation.
    pos: Vec<usize>,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    /// Lower band of the assembled matrix, permuted; slot `(i, j)` with
    /// `0 <= i - j <= bw` lives at `band[j * (bw + 1) + (i - j)]`.
    band: Vec<f64>,
    /// Factor storage, same layout; the diagonal slots hold `d`.
    ldl: Vec<f64>,
    /// Expected pivot sign per permuted index (+1/-1), used as a signed
    /// floor when a pivot collapses.
    sign: Vec<f64>,
    /// Scratch for permuted right-hand sides.
    work: Vec<f64>,
    /// Number of pivots clamped to the floor in the latest factorization.
    pub bumped_pivots: usize,
}

impl BandedLdl {
    /// Plans storage for a `dim x dim` symmetric matrix whose off-diagonal
    /// structural entries are `edges` (unordered pairs, no self loops
    /// required).  `expected_sign[old]` gives the pivot sign of each
    /// diagonal entry (+1.0 or -1.0).
    pub fn new(dim: usize, edges: &[(usize, usize)], expected_sign: &[f64]) -> Self {
        assert_eq!(expected_sign.len(), dim);
        let mut adj = vec![Vec::new(); dim];
        for &(i, j) in edges {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        let perm = reverse_cuthill_mckee(&adj);
        let mut pos = vec![0usize; dim];
        for (new, &old) in perm.iter().enumerate() {
            pos[old] = new;
        }
        let bw = bandwidth(&pos, edges);
        let sign = perm.iter().map(|&old| expected_sign[old]).collect();
        BandedLdl {
            dim,
            bw,
            pos,
            perm,
            band: vec![0.0; dim * (bw + 1)],
            ldl: vec![0.0; dim * (bw + 1)],
            sign,
            work: vec![0.0; dim],
            bumped_pivots: 0,
        }
    }

    /// Zeroes the assembled matrix.
    pub fn clear(&mut self) {
        self.band.fill(0.0);
    }

    /// Accumulates `v` into entry `(i, j)` (original coordinates).  Each
    /// unordered off-diagonal pair must be added once.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (mut p, mut q) = (self.pos[i], self.pos[j]);
        if p < q {
            std::mem::swap(&mut p, &mut q);
        }
        debug_assert!(p - q <= self.bw, "entry ({i},{j}) outside planned band");
        self.band[q * (self.bw + 1) + (p - q)] += v;
    }

    /// Factors the assembled matrix as `L D L^T`.  Pivots whose signed
    /// magnitude falls below `pivot_floor` are clamped; the count is
    /// reported in `bumped_pivots`.
    pub fn factor(&mut self, pivot_floor: f64) {
        let (dim, bw) = (self.dim, self.bw);
        let stride = bw + 1;
        self.ldl.copy_from_slice(&self.band);
        self.bumped_pivots = 0;
        for j in 0..dim {
            let lo = j.saturating_sub(bw);
            // d_j = K[j,j] - sum_k L[j,k]^2 d_k over the band.
            let mut d = self.ldl[j * stride];
            for k in lo..j {
                let ljk = self.ldl[k * stride + (j - k)];
                if ljk != 0.0 {
                    d -= ljk * ljk * self.ldl[k * stride];
                }
            }
            if self.sign[j] * d < pivot_floor {
                d = self.sign[j] * pivot_floor;
                self.bumped_pivots += 1;
            }
            self.ldl[j * stride] = d;
            let hi = (j + bw).min(dim - 1);
            for i in j + 1..=hi {
                let klo = i.saturating_sub(bw);
                let mut s = self.ldl[j * stride + (i - j)];
                for k in klo..j {
                    let lik = self.ldl[k * stride + (i - k)];
                    if lik != 0.0 {
                        s -= lik * self.ldl[k * stride + (j - k)] * self.ldl[k * stride];
                    }
                }
                self.ldl[j * stride + (i - j)] = s / d;
            }
        }
    }

    /// Solves `K x = rhs` using the latest factorization.
    pub fn solve(&mut self, rhs: &[f64], x: &mut [f64]) {
        let (dim, bw) = (self.dim, self.bw);
        let stride = bw + 1;
        debug_assert_eq!(rhs.len(), dim);
        debug_assert_eq!(x.len(), dim);
        let y = &mut self.work;
        for new in 0..dim {
            y[new] = rhs[self.perm[new]];
        }
        // Forward substitution with unit-diagonal L, column oriented.
        for j in 0..dim {
            let yj = y[j];
            if yj != 0.0 {
                let hi = (j + bw).min(dim - 1);
                for i in j + 1..=hi {
                    y[i] -= self.ldl[j * stride + (i - j)] * yj;
                }
            }
        }
        for j in 0..dim {
            y[j] /= self.ldl[j * stride];
        }
        // Backward substitution with L^T.
        for j in (0..dim).rev() {
            let hi = (j + bw).min(dim - 1);
            let mut acc = y[j];
            for i in j + 1..=hi {
                acc -= self.ldl[j * stride + (i - j)] * y[i];
            }
            y[j] = acc;
        }
        for new in 0..dim {
            x[self.perm[new]] = y[new];
        }
    }
}
