#include "bayesid/postprocess.hpp"

#include <stdexcept>

namespace bayesid {

double mse(const Matrix& A, const Matrix& B) {
  require_same_shape(A, B, "mse");
  if (A.size() == 0) {
    throw std::invalid_argument("mse: empty matrices");
  }
  return (A - B).squaredNorm() / static_cast<double>(A.size());
}

IdFactors extract_cw(const Matrix& A, const StateVector& r, const Matrix& Y) {
  const Index n = A.cols();
  if (r.size() != n || Y.rows() != n || Y.cols() != n) {
    throw std::invalid_argument("extract_cw: r must have length N and Y must be N x N");
  }
  IdFactors f;
  f.basis = r.basis();
  if (f.basis.empty()) {
    throw std::invalid_argument("extract_cw: no basis columns selected");
  }
  const auto k = static_cast<Index>(f.basis.size());
  f.C.resize(A.rows(), k);
  f.W.resize(k, n);
  for (Index p = 0; p < k; ++p) {
    f.C.col(p) = A.col(f.basis[static_cast<std::size_t>(p)]);
    f.W.row(p) = Y.row(f.basis[static_cast<std::size_t>(p)]);
  }
  f.mse_before_identity = mse(A, f.C * f.W);
  for (Index p = 0; p < k; ++p) {
    for (Index q = 0; q < k; ++q) {
      f.W(p, f.basis[static_cast<std::size_t>(q)]) = (p == q) ? 1.0 : 0.0;
    }
  }
  f.mse_after_identity = mse(A, f.C * f.W);
  return f;
}

IdFactors extract_cw(const SamplerState& state) {
  return extract_cw(state.A(), state.r, state.Y);
}

}  // namespace bayesid
