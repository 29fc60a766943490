#include "qisdp/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "qisdp/error.hpp"

namespace qisdp {

Vec vec(const Mat& m) {
  return Eigen::Map<const Vec>(m.data(), m.size());
}

Mat mat(const Vec& v, int rows, int cols) {
  if (rows < 0 || cols < 0 || v.size() != static_cast<Eigen::Index>(rows) * cols)
    throw dimension_error("mat: vector of length " + std::to_string(v.size()) +
                          " cannot be reshaped to " + std::to_string(rows) + "x" +
                          std::to_string(cols));
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

Mat symmetrize(const Mat& m) {
  Mat s = 0.5 * (m + m.transpose());
  return s;
}

CMat hermitize(const CMat& m) { return 0.5 * (m + m.adjoint()); }

Mat embed_hermitian(const CMat& b, double rel_tol) {
  if (b.rows() != b.cols()) throw dimension_error("embed_hermitian: matrix is not square");
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  const double dev = b.size() ? (b - b.adjoint()).cwiseAbs().maxCoeff() : 0.0;
  if (dev > rel_tol * scale)
    throw invalid_argument("embed_hermitian: input is not Hermitian (deviation " +
                           std::to_string(dev) + ")");
  const Eigen::Index n = b.rows();
  const CMat h = hermitize(b);
  Mat out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = h.real();
  out.topRightCorner(n, n) = -h.imag();
  out.bottomLeftCorner(n, n) = h.imag();
  out.bottomRightCorner(n, n) = h.real();
  return symmetrize(out);
}

CMat recover_complex(const Mat& x) {
  if (x.rows() != x.cols() || x.rows() % 2 != 0)
    throw dimension_error("recover_complex: expected a square matrix of even size");
  const Eigen::Index n = x.rows() / 2;
  const Mat re = x.topLeftCorner(n, n) + x.bottomRightCorner(n, n);
  const Mat im = x.bottomLeftCorner(n, n) - x.topRightCorner(n, n);
  CMat out(n, n);
  out.real() = re;
  out.imag() = im;
  return out;
}

PsdCheck is_psd(const Mat& m, double tol) {
  if (m.rows() != m.cols()) throw dimension_error("is_psd: matrix is not square");
  PsdCheck r;
  if (m.rows() == 0) {
    r.psd = true;
    return r;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m));
  r.min_eigenvalue = es.eigenvalues()(0);
  r.psd = r.min_eigenvalue >= -tol;
  if (!r.psd) r.witness = es.eigenvectors().col(0);
  return r;
}

bool is_psd_hermitian(const CMat& m, double tol) {
  if (m.rows() == 0) return true;
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(m));
  return es.eigenvalues()(0) >= -tol;
}

bool sylvester_psd_oracle(const Mat& m, double tol) {
  const Eigen::Index n = m.rows();
  if (n != m.cols()) throw dimension_error("sylvester_psd_oracle: matrix is not square");
  if (n > 6) throw invalid_argument("sylvester_psd_oracle: size above 6 is not supported");
  const Mat s = symmetrize(m);
  const double scale = std::max(1.0, n ? s.cwiseAbs().maxCoeff() : 1.0);
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < n; ++i)
      if (mask & (1u << i)) idx.push_back(i);
    const auto k = static_cast<Eigen::Index>(idx.size());
    Mat sub(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = s(idx[a], idx[b]);
    if (sub.determinant() < -tol * std::pow(scale, static_cast<double>(k))) return false;
  }
  return true;
}

Mat schur_complement(const Mat& m, int split, double rcond_min) {
  const Eigen::Index n = m.rows();
  if (n != m.cols()) throw dimension_error("schur_complement: matrix is not square");
  if (split <= 0 || split >= n)
    throw dimension_error("schur_complement: split index out of range");
  const Mat s = symmetrize(m);
  const Eigen::Index k = n - split;
  const Mat a = s.topLeftCorner(split, split);
  const Mat b = s.topRightCorner(split, k);
  const Mat d = s.bottomRightCorner(k, k);
  Eigen::SelfAdjointEigenSolver<Mat> es(d);
  const Vec ev = es.eigenvalues().cwiseAbs();
  const double big = ev.maxCoeff();
  if (big == 0.0 || ev.minCoeff() / big < rcond_min)
    throw numerical_error("schur_complement: block D is singular or ill-conditioned");
  const Mat dinv_bt = es.eigenvectors() *
                      es.eigenvalues().cwiseInverse().asDiagonal() *
                      es.eigenvectors().transpose() * b.transpose();
  return symmetrize(a - b * dinv_bt);
}

Mat sqrtm_psd(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m));
  const Vec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return symmetrize(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
}

Mat inv_sqrtm_pd(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m));
  if (es.eigenvalues()(0) <= 0.0) throw numerical_error("inv_sqrtm_pd: matrix is not PD");
  const Vec ev = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return symmetrize(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
}

CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

namespace {

int product(const std::vector<int>& dims) {
  int p = 1;
  for (int d : dims) {
    if (d < 1) throw dimension_error("subsystem dimensions must be positive");
    p *= d;
  }
  return p;
}

std::vector<int> digits(int index, const std::vector<int>& dims) {
  std::vector<int> out(dims.size());
  for (int k = static_cast<int>(dims.size()) - 1; k >= 0; --k) {
    out[k] = index % dims[k];
    index /= dims[k];
  }
  return out;
}

int undigits(const std::vector<int>& dig, const std::vector<int>& dims) {
  int index = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) index = index * dims[k] + dig[k];
  return index;
}

}  // namespace

CMat partial_trace(const CMat& m, const std::vector<int>& dims,
                   const std::vector<int>& traced) {
  const int total = product(dims);
  if (m.rows() != total || m.cols() != total)
    throw dimension_error("partial_trace: matrix size does not match subsystem dims");
  std::vector<bool> is_traced(dims.size(), false);
  for (int t : traced) {
    if (t < 0 || t >= static_cast<int>(dims.size()))
      throw dimension_error("partial_trace: subsystem index out of range");
    is_traced[t] = true;
  }
  std::vector<int> kept_dims;
  for (std::size_t k = 0; k < dims.size(); ++k)
    if (!is_traced[k]) kept_dims.push_back(dims[k]);
  const int kept = product(kept_dims);
  CMat out = CMat::Zero(kept, kept);
  std::vector<std::vector<int>> dig(total);
  for (int i = 0; i < total; ++i) dig[i] = digits(i, dims);
  std::vector<int> kept_index(total);
  for (int i = 0; i < total; ++i) {
    std::vector<int> kd;
    for (std::size_t k = 0; k < dims.size(); ++k)
      if (!is_traced[k]) kd.push_back(dig[i][k]);
    kept_index[i] = undigits(kd, kept_dims);
  }
  for (int r = 0; r < total; ++r)
    for (int c = 0; c < total; ++c) {
      bool match = true;
      for (std::size_t k = 0; k < dims.size() && match; ++k)
        if (is_traced[k] && dig[r][k] != dig[c][k]) match = false;
      if (match) out(kept_index[r], kept_index[c]) += m(r, c);
    }
  return out;
}

CMat partial_transpose(const CMat& m, const std::vector<int>& dims,
                       const std::vector<int>& transposed) {
  const int total = product(dims);
  if (m.rows() != total || m.cols() != total)
    throw dimension_error("partial_transpose: matrix size does not match subsystem dims");
  CMat out(total, total);
  for (int r = 0; r < total; ++r) {
    const auto dr = digits(r, dims);
    for (int c = 0; c < total; ++c) {
      auto a = dr;
      auto b = digits(c, dims);
      for (int t : transposed) {
        if (t < 0 || t >= static_cast<int>(dims.size()))
          throw dimension_error("partial_transpose: subsystem index out of range");
        std::swap(a[t], b[t]);
      }
      out(undigits(a, dims), undigits(b, dims)) = m(r, c);
    }
  }
  return out;
}

CMat permutation_operator(const std::vector<int>& dims, const std::vector<int>& perm) {
  const std::size_t k = dims.size();
  if (perm.size() != k) throw dimension_error("permutation_operator: size mismatch");
  std::vector<int> out_dims(k);
  std::vector<bool> seen(k, false);
  for (std::size_t q = 0; q < k; ++q) {
    if (perm[q] < 0 || perm[q] >= static_cast<int>(k) || seen[perm[q]])
      throw invalid_argument("permutation_operator: not a permutation");
    seen[perm[q]] = true;
    out_dims[perm[q]] = dims[q];
  }
  const int total = product(dims);
  CMat p = CMat::Zero(total, total);
  for (int i = 0; i < total; ++i) {
    const auto d = digits(i, dims);
    std::vector<int> o(k);
    for (std::size_t q = 0; q < k; ++q) o[perm[q]] = d[q];
    p(undigits(o, out_dims), i) = 1.0;
  }
  return p;
}

}  // namespace qisdp
