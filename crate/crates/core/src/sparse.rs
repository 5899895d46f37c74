//! Sparse least squares through normal equations and a Cholesky factorization
//! whose symbolic analysis is reused while the sparsity pattern is unchanged.

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat, Side};

/// Accumulates `Σ w (a·x − b)²` as `AᵀWA x = AᵀWb`, with any number of
/// right-hand sides sharing one matrix.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    n: usize,
    triplets: Vec<Triplet<usize, usize, f64>>,
    rhs: Vec<Vec<f64>>,
}

impl NormalEquations {
    pub fn new(n: usize, n_rhs: usize) -> Self {
        Self {
            n,
            triplets: Vec::new(),
            rhs: vec![vec![0.0; n]; n_rhs],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Adds one residual row. `b` holds one target per right-hand side.
    pub fn add_row(&mut self, coeffs: &[(usize, f64)], b: &[f64], w: f64) {
        debug_assert_eq!(b.len(), self.rhs.len());
        for &(i, ai) in coeffs {
            for &(j, aj) in coeffs {
                if j <= i {
                    self.triplets.push(Triplet::new(i, j, w * ai * aj));
                }
            }
            for (col, &bk) in self.rhs.iter_mut().zip(b) {
                col[i] += w * ai * bk;
            }
        }
    }

    /// Adds `w` to the diagonal entry `i` (Tikhonov or pin penalty).
    pub fn add_diagonal(&mut self, i: usize, w: f64, target: &[f64]) {
        self.add_row(&[(i, 1.0)], target, w);
    }

    pub fn add_matrix_entry(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if j <= i { (i, j) } else { (j, i) };
        self.triplets.push(Triplet::new(r, c, v));
    }

    pub fn add_rhs(&mut self, col: usize, i: usize, v: f64) {
        self.rhs[col][i] += v;
    }

    pub fn rhs(&self) -> &[Vec<f64>] {
        &self.rhs
    }

    /// `A x` for the accumulated symmetric matrix.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for t in &self.triplets {
            y[t.row] += t.val * x[t.col];
            if t.row != t.col {
                y[t.col] += t.val * x[t.row];
            }
        }
        y
    }

    fn matrix(&self) -> Result<SparseColMat<usize, f64>, String> {
        SparseColMat::try_new_from_triplets(self.n, self.n, &self.triplets).map_err(|e| format!("{e:?}"))
    }
}

/// Cholesky solver caching the symbolic factorization across solves.
#[derive(Default)]
pub struct CachedCholesky {
    symbolic: Option<(Vec<usize>, Vec<usize>, SymbolicLlt<usize>)>,
    pub symbolic_builds: usize,
}

impl CachedCholesky {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solve(&mut self, eq: &NormalEquations) -> Result<Vec<Vec<f64>>, String> {
        let rhs = eq.rhs.clone();
        self.solve_with(eq, rhs)
    }

    /// Solves with right-hand sides `rhs` in place of the accumulated ones.
    pub fn solve_with(&mut self, eq: &NormalEquations, mut rhs: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>, String> {
        let n = eq.n;
        if n == 0 {
            return Ok(rhs);
        }
        let a = eq.matrix()?;
        let sym = a.symbolic();
        let reuse = matches!(&self.symbolic, Some((cp, ri, _))
            if cp.as_slice() == sym.col_ptr() && ri.as_slice() == sym.row_idx());
        if !reuse {
            let s = SymbolicLlt::try_new(sym, Side::Lower).map_err(|e| format!("{e:?}"))?;
            self.symbolic = Some((sym.col_ptr().to_vec(), sym.row_idx().to_vec(), s));
            self.symbolic_builds += 1;
        }
        let s = self.symbolic.as_ref().unwrap().2.clone();
        let llt = Llt::try_new_with_symbolic(s, a.as_ref(), Side::Lower).map_err(|e| format!("{e:?}"))?;
        let mut b = Mat::<f64>::from_fn(n, rhs.len(), |i, j| rhs[j][i]);
        llt.solve_in_place_with_conj(Conj::No, b.as_mut());
        for (j, col) in rhs.iter_mut().enumerate() {
            for (i, x) in col.iter_mut().enumerate() {
                *x = b[(i, j)];
                if !x.is_finite() {
                    return Err("non-finite solution".into());
                }
            }
        }
        Ok(rhs)
    }
}

/// One-shot solve of accumulated normal equations.
pub fn solve(eq: &NormalEquations) -> Result<Vec<Vec<f64>>, String> {
    CachedCholesky::new().solve(eq)
}
