use super::dense::{null_space, symmetric_eigen};
use super::{induced_norm, Matrix, NormKind};
use crate::error::{Error, Result};

/// Singular values at or below this fraction of the largest are null.
const NULL_REL: f64 = 1e-10;
/// Singular values in `(NULL_REL, AMBIGUOUS_REL]` make the rank ambiguous.
const AMBIGUOUS_REL: f64 = 1e-8;
const RESIDUAL_REL: f64 = 1e-8;

/// A symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(Matrix);

impl SymmetricMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_symmetric(1e-12) {
            return Err(Error::InvalidInput("matrix is not symmetric".into()));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn min_max_eigenvalues(&self) -> (f64, f64) {
        let e = symmetric_eigen(self.0.as_slice(), self.0.dim());
        (e.values[0], *e.values.last().unwrap())
    }
}

/// Homogeneous condition `Aᵀ Q A = factor · Q` on an unknown symmetric `Q`.
#[derive(Debug, Clone)]
pub struct SpdConstraint {
    pub matrix: Matrix,
    pub factor: f64,
}

impl SpdConstraint {
    pub fn new(matrix: Matrix, factor: f64) -> Self {
        Self { matrix, factor }
    }

    fn residual(&self, q: &Matrix) -> Matrix {
        let a = &self.matrix;
        a.transpose().matmul(q).matmul(a).sub(&q.scaled(self.factor))
    }
}

fn upper_index(d: usize) -> Vec<(usize, usize)> {
    (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect()
}

fn sym_from_coords(coords: &[f64], pairs: &[(usize, usize)], d: usize) -> Matrix {
    let mut m = Matrix::zeros(d);
    for (&c, &(i, j)) in coords.iter().zip(pairs) {
        m[(i, j)] = c;
        m[(j, i)] = c;
    }
    m
}

/// Finds a symmetric positive-definite `Q` with `AᵀQA = c·Q` for every
/// constraint, or `None` when the solution space holds no SPD matrix.
///
/// The returned `Q` is normalized to unit spectral norm.
pub fn solve_spd_system(constraints: &[SpdConstraint]) -> Result<Option<SymmetricMatrix>> {
    let d = match constraints.first() {
        Some(c) => c.matrix.dim(),
        None => return Err(Error::InvalidInput("no constraints given".into())),
    };
    if let Some(bad) = constraints.iter().find(|c| c.matrix.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.matrix.dim(),
        });
    }
    if constraints
        .iter()
        .any(|c| !c.matrix.is_finite() || !c.factor.is_finite())
    {
        return Err(Error::NonFinite);
    }

    let pairs = upper_index(d);
    let s = pairs.len();
    let rows = constraints.len() * s;
    let mut l = vec![0.0; rows * s];
    for (ci, con) in constraints.iter().enumerate() {
        let weight = 1.0
            / induced_norm(&con.matrix, NormKind::Two)?
                .powi(2)
                .max(con.factor.abs())
                .max(f64::MIN_POSITIVE);
        for (col, &(i, j)) in pairs.iter().enumerate() {
            let mut e = Matrix::zeros(d);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            let r = con.residual(&e);
            for (row, &(a, b)) in pairs.iter().enumerate() {
                l[(ci * s + row) * s + col] = weight * r[(a, b)];
            }
        }
    }

    let (sigma, v) = null_space(&l, rows, s);
    // weighted rows have unit scale, so a tiny largest singular value means
    // the whole system is (numerically) zero rather than a scale to follow
    let smax = sigma[0].max(1.0);
    let mut basis = Vec::new();
    for (sv, vec) in sigma.iter().zip(&v) {
        if *sv <= NULL_REL * smax {
            basis.push(sym_from_coords(vec, &pairs, d));
        } else if *sv <= AMBIGUOUS_REL * smax {
            return Err(Error::IllConditioned(format!(
                "null-space rank is ambiguous: singular value {:e} relative to {:e}",
                sv, smax
            )));
        }
    }
    if basis.is_empty() {
        return Ok(None);
    }

    let Some(q) = maximize_min_eigenvalue(&basis, d) else {
        return Ok(None);
    };
    let (lo, hi) = {
        let e = symmetric_eigen(q.as_slice(), d);
        (e.values[0], *e.values.last().unwrap())
    };
    if hi <= 0.0 || lo <= 1e-10 * hi {
        return Ok(None);
    }
    let q = q.scaled(1.0 / hi);
    for con in constraints {
        let res = induced_norm(&con.residual(&q), NormKind::Two)?;
        if res > RESIDUAL_REL {
            return Err(Error::IllConditioned(format!(
                "SPD solution residual {res:e} exceeds tolerance"
            )));
        }
    }
    Ok(Some(SymmetricMatrix(q)))
}

/// Searches the span of `basis` for the element with the largest smallest
/// eigenvalue, normalized by trace. Returns `None` if every element of the
/// span has zero trace (no SPD element can exist then).
fn maximize_min_eigenvalue(basis: &[Matrix], d: usize) -> Option<Matrix> {
    let k = basis.len();
    let traces: Vec<f64> = basis.iter().map(|b| (0..d).map(|i| b[(i, i)]).sum()).collect();
    let tnorm_sq: f64 = traces.iter().map(|t| t * t).sum();
    if tnorm_sq.sqrt() <= 1e-12 {
        return None;
    }
    let combine = |c: &[f64]| {
        c.iter()
            .zip(basis)
            .fold(Matrix::zeros(d), |acc, (&w, b)| acc.add(&b.scaled(w)))
    };
    // trace-one point closest to the origin; this is the projection of the
    // identity when the basis is orthonormal
    let mut c: Vec<f64> = traces.iter().map(|t| t / tnorm_sq).collect();
    let eval = |c: &[f64]| {
        let q = combine(c);
        let e = symmetric_eigen(q.as_slice(), d);
        let v: Vec<f64> = (0..d).map(|r| e.vectors[r * d]).collect();
        (e.values[0], v, q)
    };
    let (mut best_val, mut cur_v, mut best_q) = eval(&c);
    if k == 1 || best_val > 1e-6 * best_q.max_abs() {
        return Some(best_q);
    }
    let step0 = c.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-3);
    for it in 0..4000 {
        let mut g: Vec<f64> = basis
            .iter()
            .map(|b| {
                let bv = b.mul_vec(&cur_v);
                bv.iter().zip(&cur_v).map(|(x, y)| x * y).sum()
            })
            .collect();
        let gt: f64 = g.iter().zip(&traces).map(|(a, b)| a * b).sum::<f64>() / tnorm_sq;
        for (gi, ti) in g.iter_mut().zip(&traces) {
            *gi -= gt * ti;
        }
        let gnorm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gnorm <= 1e-14 {
            break;
        }
        let step = step0 / (1.0 + it as f64).sqrt();
        for (ci, gi) in c.iter_mut().zip(&g) {
            *ci += step * gi / gnorm;
        }
        let (val, v, q) = eval(&c);
        cur_v = v;
        if val > best_val {
            best_val = val;
            best_q = q;
            if best_val > 1e-6 * best_q.max_abs() {
                break;
            }
        }
    }
    Some(best_q)
}

/// Symmetric square root `G` of an SPD matrix, with `G·G = Q`.
pub fn spd_sqrt(q: &SymmetricMatrix) -> Result<Matrix> {
    let m = q.matrix();
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let d = m.dim();
    let e = symmetric_eigen(m.as_slice(), d);
    let hi = e.values.last().copied().unwrap_or(0.0).max(0.0);
    let lo = e.values[0];
    if lo <= 1e-12 * hi || hi == 0.0 {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: lo });
    }
    let mut g = Matrix::zeros(d);
    for (k, &lam) in e.values.iter().enumerate() {
        let r = lam.sqrt();
        for i in 0..d {
            let vi = e.vectors[i * d + k] * r;
            for j in 0..d {
                g[(i, j)] += vi * e.vectors[j * d + k];
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot(theta: f64) -> Matrix {
        Matrix::from_rows(&[vec![theta.cos(), -theta.sin()], vec![theta.sin(), theta.cos()]]).unwrap()
    }

    #[test]
    fn rotation_preserves_euclidean_form() {
        let a2 = Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let q = solve_spd_system(&[SpdConstraint::new(a2, 1.0)]).unwrap().unwrap();
        assert!(q.matrix().sub(&Matrix::identity(2)).max_abs() < 1e-10);
    }

    #[test]
    fn non_orthogonalizable_has_no_solution() {
        let a3 = Matrix::from_rows(&[vec![0.0, -0.5], vec![1.0, 0.0]]).unwrap();
        assert!(solve_spd_system(&[SpdConstraint::new(a3, 1.0)]).unwrap().is_none());
    }

    #[test]
    fn conjugated_rotation_recovers_form() {
        let g0 = Matrix::from_rows(&[vec![2.0, 0.3], vec![-0.4, 1.1]]).unwrap();
        let g0inv = g0.inverse().unwrap();
        let a = g0inv.matmul(&rot(0.7)).matmul(&g0);
        let q = solve_spd_system(&[SpdConstraint::new(a.clone(), 1.0)])
            .unwrap()
            .unwrap();
        // expected Q ∝ G0ᵀG0 since (G0 A G0⁻¹) is orthogonal
        let expect = g0.transpose().matmul(&g0);
        let ratio = q.matrix()[(0, 0)] / expect[(0, 0)];
        assert!(q.matrix().sub(&expect.scaled(ratio)).max_abs() < 1e-9);
    }

    #[test]
    fn identity_constraint_has_full_solution_space() {
        // every symmetric Q works; the solver must still return an SPD one
        let q = solve_spd_system(&[SpdConstraint::new(Matrix::identity(3), 1.0)])
            .unwrap()
            .unwrap();
        let (lo, _) = q.min_max_eigenvalues();
        assert!(lo > 0.0);
    }

    #[test]
    fn sqrt_of_diagonal() {
        let q = SymmetricMatrix::new(Matrix::diag(&[4.0, 9.0])).unwrap();
        let g = spd_sqrt(&q).unwrap();
        assert!(g.sub(&Matrix::diag(&[2.0, 3.0])).max_abs() < 1e-14);
        let id = SymmetricMatrix::new(Matrix::identity(3)).unwrap();
        assert!(spd_sqrt(&id).unwrap().sub(&Matrix::identity(3)).max_abs() < 1e-14);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let q = SymmetricMatrix::new(Matrix::diag(&[1.0, -1.0])).unwrap();
        assert!(matches!(spd_sqrt(&q), Err(Error::NotPositiveDefinite { .. })));
        let q = SymmetricMatrix::new(Matrix::diag(&[1.0, 0.0])).unwrap();
        assert!(matches!(spd_sqrt(&q), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn asymmetric_rejected() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(SymmetricMatrix::new(m).is_err());
    }
}
