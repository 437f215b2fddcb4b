use alloc::vec::Vec;
use nalgebra::DMatrix;

/// Eigen-decomposition of a real symmetric matrix with eigenvalues sorted
/// ascending; eigenvectors are the matching columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn symmetric_eigen(matrix: DMatrix<f64>) -> SymmetricEigen {
    let n = matrix.nrows();
    let eig = nalgebra::SymmetricEigen::new(matrix);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    SymmetricEigen { values, vectors }
}

/// Solves the dense system `a · x = b`, returning `None` if `a` is singular.
pub fn solve(a: DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let rhs = nalgebra::DVector::from_column_slice(b);
    a.lu().solve(&rhs).map(|x| x.iter().copied().collect())
}

/// Inverse of a small symmetric positive (semi)definite matrix.
pub fn inverse(a: DMatrix<f64>) -> Option<DMatrix<f64>> {
    a.try_inverse()
}
