#pragma once

#include "bayesid/matrix.hpp"
#include "bayesid/model_core.hpp"

#include <vector>

namespace bayesid {

/// Interpolative factors A ≈ C W.
struct IdFactors {
  Matrix C;                         // M x K, C[:, p] = A[:, basis[p]]
  Matrix W;                         // K x N, W[:, basis] = identity
  std::vector<Index> basis;         // J, ascending
  double mse_before_identity = 0.0;  // ||A - C Y[J,:]||² / MN
  double mse_after_identity = 0.0;   // ||A - C W||² / MN
};

/// Extracts C = A[:,J] and W = Y[J,:], then overwrites W[:,J] with the identity.
/// Throws std::invalid_argument when J is empty.
IdFactors extract_cw(const Matrix& A, const StateVector& r, const Matrix& Y);
IdFactors extract_cw(const SamplerState& state);

/// (1 / MN) Σ (a_mn - b_mn)².
double mse(const Matrix& A, const Matrix& B);

}  // namespace bayesid
