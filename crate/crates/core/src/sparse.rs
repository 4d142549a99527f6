//! Compressed-column sparsity patterns built from element DOF lists, and a
//! direct LU wrapper that keeps the symbolic factorization per pattern.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};

use crate::error::{Error, Result};

#[derive(Debug)]
pub struct SparsePattern {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    symbolic: SymbolicSparseColMat<usize>,
}

impl SparsePattern {
    /// Pattern coupling every pair of DOFs that share an element, plus the
    /// full diagonal. Returns per-element position maps: entry `i*m + j` is
    /// the value index of (dofs[i], dofs[j]).
    pub fn from_element_dofs(n: usize, elems: &[Vec<usize>]) -> (SparsePattern, Vec<Vec<u32>>) {
        let mut cols: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (c, col) in cols.iter_mut().enumerate() {
            col.push(c as u32);
        }
        for dofs in elems {
            for &c in dofs {
                cols[c].extend(dofs.iter().map(|&r| r as u32));
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        col_ptr.push(0);
        let mut row_idx = Vec::new();
        for col in cols.iter_mut() {
            col.sort_unstable();
            col.dedup();
            row_idx.extend(col.iter().map(|&r| r as usize));
            col_ptr.push(row_idx.len());
        }
        let symbolic =
            SymbolicSparseColMat::new_checked(n, n, col_ptr.clone(), None, row_idx.clone());
        let pattern = SparsePattern {
            n,
            col_ptr,
            row_idx,
            symbolic,
        };
        let maps = elems
            .iter()
            .map(|dofs| {
                let m = dofs.len();
                let mut map = vec![0u32; m * m];
                for (i, &r) in dofs.iter().enumerate() {
                    for (j, &c) in dofs.iter().enumerate() {
                        map[i * m + j] = pattern.position(r, c).unwrap() as u32;
                    }
                }
                map
            })
            .collect();
        (pattern, maps)
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        let (a, b) = (self.col_ptr[col], self.col_ptr[col + 1]);
        self.row_idx[a..b].binary_search(&row).ok().map(|k| a + k)
    }

    /// y = A x.
    pub fn mul(&self, values: &[f64], x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..self.n {
            let xc = x[c];
            if xc == 0.0 {
                continue;
            }
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[k]] += values[k] * xc;
            }
        }
    }

    /// Replaces constrained rows and columns by the identity.
    pub fn mask_identity(&self, values: &mut [f64], constrained: &[bool]) {
        for c in 0..self.n {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[k];
                if constrained[c] || constrained[r] {
                    values[k] = if r == c { 1.0 } else { 0.0 };
                }
            }
        }
    }

    pub fn to_dense(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n]; self.n];
        for c in 0..self.n {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                a[self.row_idx[k]][c] += values[k];
            }
        }
        a
    }
}

/// Sparse LU with a cached symbolic analysis.
#[derive(Default)]
pub struct SparseLu {
    symbolic: Option<SymbolicLu<usize>>,
    lu: Option<Lu<usize, f64>>,
}

impl SparseLu {
    pub fn new() -> SparseLu {
        SparseLu::default()
    }

    pub fn factor(&mut self, pattern: &SparsePattern, values: &[f64]) -> Result<()> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolver("non-finite matrix entry".into()));
        }
        if self.symbolic.is_none() {
            self.symbolic = Some(
                SymbolicLu::try_new(pattern.symbolic.as_ref())
                    .map_err(|e| Error::LinearSolver(format!("symbolic LU: {e:?}")))?,
            );
        }
        let mat = SparseColMatRef::new(pattern.symbolic.as_ref(), values);
        let lu = Lu::try_new_with_symbolic(self.symbolic.clone().unwrap(), mat)
            .map_err(|e| Error::LinearSolver(format!("numeric LU: {e:?}")))?;
        self.lu = Some(lu);
        Ok(())
    }

    pub fn is_factored(&self) -> bool {
        self.lu.is_some()
    }

    pub fn solve(&self, b: &mut [f64]) -> Result<()> {
        let lu = self
            .lu
            .as_ref()
            .ok_or_else(|| Error::LinearSolver("solve before factorization".into()))?;
        let mut m = faer::Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
        lu.solve_in_place(m.as_mut());
        for (i, v) in b.iter_mut().enumerate() {
            *v = m[(i, 0)];
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolver("singular system".into()));
        }
        Ok(())
    }
}

/// Assembled linear system A x = rhs on a shared pattern.
pub struct GlobalSystem {
    pub pattern: Arc<SparsePattern>,
    pub values: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl GlobalSystem {
    pub fn zeros(pattern: Arc<SparsePattern>) -> GlobalSystem {
        let n = pattern.n;
        let nnz = pattern.nnz();
        GlobalSystem {
            pattern,
            values: vec![0.0; nnz],
            rhs: vec![0.0; n],
        }
    }

    pub fn solve(&self) -> Result<Vec<f64>> {
        let mut lu = SparseLu::new();
        lu.factor(&self.pattern, &self.values)?;
        let mut x = self.rhs.clone();
        lu.solve(&mut x)?;
        Ok(x)
    }
}

/// Symmetric elimination of prescribed DOFs: the RHS is corrected by the
/// constrained columns, then rows and columns become identity.
pub fn apply_dirichlet(system: &mut GlobalSystem, constraints: &[(usize, f64)]) {
    let p = &system.pattern;
    let mut g = vec![0.0; p.n];
    let mut fixed = vec![false; p.n];
    for &(d, v) in constraints {
        g[d] = v;
        fixed[d] = true;
    }
    let mut ag = vec![0.0; p.n];
    p.mul(&system.values, &g, &mut ag);
    for i in 0..p.n {
        system.rhs[i] = if fixed[i] { g[i] } else { system.rhs[i] - ag[i] };
    }
    p.mask_identity(&mut system.values, &fixed);
}
