#pragma once

#include "spmlda/types.hpp"

namespace spmlda {

// Per-pixel endmember proportions, one simplex vector per row of P.
struct ProportionMaps {
  int rows = 0;
  int cols = 0;
  Matrix P;  // (rows*cols) x K, rows sum to 1, entries >= 0

  int pixels() const { return rows * cols; }
  int endmembers() const { return static_cast<int>(P.cols()); }
};

// Total proportion entropy H(P) = -sum_n sum_k p_nk ln p_nk, with 0 ln 0 = 0.
// Lower is sparser. Compensated summation keeps the result order-independent.
double proportion_entropy(const ProportionMaps& maps);

// Gaussian mixture-of-variants log likelihood: for each pixel the model is
// N(x_n | sum_k p_nk e_k, sum_k p_nk^2 sigma2_k I), summed over pixels.
double ncm_log_likelihood(const PixelMatrix& X, const Matrix& endmember_means,
                          const ProportionMaps& maps, const Vector& sigma2s);

// arccos of the normalized inner product, clamped to [0, pi].
double spectral_angle(const Vector& a, const Vector& b);

// Mean absolute difference between two proportion matrices of equal shape.
double proportion_mae(const Matrix& estimated, const Matrix& truth);

// Greedy-free optimal column matching by total spectral angle; returns the
// permutation mapping estimated row k to truth row perm[k].
std::vector<int> best_endmember_permutation(const Matrix& estimated_means,
                                            const Matrix& true_means);

}  // namespace spmlda
