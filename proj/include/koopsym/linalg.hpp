#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace koopsym {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Moore-Penrose pseudoinverse through the SVD. Singular values at or below
/// rcond * sigma_max are treated as zero; the zero matrix maps to zero.
CMatrix pinv(const CMatrix& a, double rcond = 1e-10);

/// Same as pinv, also reporting the number of retained singular values.
CMatrix pinv(const CMatrix& a, double rcond, int& rank);

/// Numerical rank with the relative threshold used across the library.
int numerical_rank(const CMatrix& a, double rel_tol = 1e-10);

/// Frobenius norm of the off-diagonal blocks of `m` for a square block
/// partition with the given sizes.
double offblock_norm(const CMatrix& m, const std::vector<int>& block_sizes);

/// Eigenvalue ordering used everywhere: descending modulus, then descending
/// real part, then descending imaginary part.
bool eigenvalue_order(const cplx& a, const cplx& b);

/// Largest distance in an optimal-ish matching between two eigenvalue lists
/// (greedy nearest match after sorting). Returns +inf on size mismatch.
double multiset_distance(std::vector<cplx> a, std::vector<cplx> b);

/// Unit 2-norm with the first component of modulus above `tol` rotated onto
/// the positive real axis.
void normalize_phase(CVector& v, double tol = 1e-12);

}  // namespace koopsym
