#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "qisdp/modeling.hpp"

namespace fixtures {

using namespace qisdp;

// Fixed Hermitian 3x3 with spectrum {-0.086472, 0.68428, 3.227}.
inline CMat hermitian_x() {
  CMat g(3, 3);
  g << cplx(0.3, 0.1), cplx(-0.5, 0.7), cplx(0.2, -0.4),
       cplx(0.9, 0.0), cplx(0.1, 0.3), cplx(-0.6, 0.2),
       cplx(-0.2, 0.8), cplx(0.4, -0.1), cplx(0.5, 0.5);
  const CMat u = Eigen::HouseholderQR<CMat>(g).householderQ();
  Vec d(3);
  d << -0.086472, 0.68428, 3.227;
  CMat x = u * d.cast<cplx>().asDiagonal() * u.adjoint();
  return hermitize(x);
}

// maximize Re Tr(X S) s.t. S >= 0 Hermitian, Tr S = 1.
inline Model hermitian_model(const CMat& x) {
  Model m;
  auto s = m.declare("S", 3, 3, Structure::Hermitian, Field::Complex);
  m.add_psd(s);
  m.add_equality(m.expr(s).trace_re() - 1.0, "trace");
  m.maximize(re_trace_product(x, m.expr(s)));
  return m;
}

// 3x3 correlation matrix with corr12 = 0.7 +- 0.03, corr13 = 0.8 +- 0.01;
// optimizes corr23 in the requested direction.
inline Model correlation_model(bool maximize) {
  Model m;
  auto c = m.declare("C", 3, 3, Structure::Symmetric, Field::Real);
  const MatExpr e = m.expr(c);
  m.add_psd(c);
  for (int i = 0; i < 3; ++i) m.add_equality(e.entry_re(i, i) - 1.0);
  m.add_nonneg(e.entry_re(0, 1) - 0.67);
  m.add_nonneg(0.73 - e.entry_re(0, 1));
  m.add_nonneg(e.entry_re(0, 2) - 0.79);
  m.add_nonneg(0.81 - e.entry_re(0, 2));
  if (maximize) m.maximize(e.entry_re(1, 2));
  else m.minimize(e.entry_re(1, 2));
  return m;
}

}  // namespace fixtures
