#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace qisdp {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using cplx = std::complex<double>;

// Column-major packing.
Vec vec(const Mat& m);
Mat mat(const Vec& v, int rows, int cols);

// [[Re B, -Im B], [Im B, Re B]]. Throws if B is not Hermitian within
// rel_tol * max(1, max|B|).
Mat embed_hermitian(const CMat& b, double rel_tol = 1e-12);

// Adjoint of embed_hermitian: (X11 + X22) + i (X21 - X12).
// recover_complex(embed_hermitian(B) / 2) == B.
CMat recover_complex(const Mat& x);

struct PsdCheck {
  bool psd = false;
  double min_eigenvalue = 0.0;
  Vec witness;  // unit vector with v^T M v = min_eigenvalue when !psd
};

PsdCheck is_psd(const Mat& m, double tol = 1e-9);
bool is_psd_hermitian(const CMat& m, double tol = 1e-9);

// Exhaustive principal-minor test, n <= 6.
bool sylvester_psd_oracle(const Mat& m, double tol = 1e-9);

// A - B D^{-1} B^T for M = [[A, B], [B^T, D]], D = M(split:, split:).
Mat schur_complement(const Mat& m, int split, double rcond_min = 1e-12);

Mat symmetrize(const Mat& m);
CMat hermitize(const CMat& m);

// Real symmetric square root and inverse square root of a PD matrix.
Mat sqrtm_psd(const Mat& m);
Mat inv_sqrtm_pd(const Mat& m);

CMat kron(const CMat& a, const CMat& b);

// Partial trace / transpose on a tensor product with local dims `dims`.
CMat partial_trace(const CMat& m, const std::vector<int>& dims,
                   const std::vector<int>& traced);
CMat partial_transpose(const CMat& m, const std::vector<int>& dims,
                       const std::vector<int>& transposed);

// Operator permuting tensor factors: |i_0 .. i_{k-1}> -> |i_{perm^-1}...>,
// i.e. factor j of the input lands at position perm[j].
CMat permutation_operator(const std::vector<int>& dims,
                          const std::vector<int>& perm);

}  // namespace qisdp
