//! Dense reductions used for small systems and Rayleigh-Ritz steps.

use nalgebra::{DMatrix, SymmetricEigen};

/// Full solution of the generalized symmetric eigenproblem `K y = lambda M y`
/// with `M` positive definite, by reduction through the Cholesky factor of
/// `M`. Eigenvalues are returned ascending; the eigenvector columns are
/// `M`-orthonormal.
pub fn generalized_symmetric_eigen(k: &DMatrix<f64>, m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = k.nrows();
    assert_eq!(k.ncols(), n);
    assert_eq!(m.nrows(), n);
    assert_eq!(m.ncols(), n);
    let chol = m
        .clone()
        .cholesky()
        .expect("mass matrix must be positive definite");
    let l = chol.l();
    // C = L^-1 K L^-T, symmetric with the same eigenvalues.
    let a = l.solve_lower_triangular(k).expect("nonsingular factor");
    let c = l
        .solve_lower_triangular(&a.transpose())
        .expect("nonsingular factor");
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    let lt = l.transpose();
    for (col, &i) in order.iter().enumerate() {
        let q = eig.eigenvectors.column(i).into_owned();
        let y = lt.solve_upper_triangular(&q).expect("nonsingular factor");
        vectors.set_column(col, &y);
    }
    (values, vectors)
}
