#include "spmlda/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spmlda {

namespace {

// Kahan accumulator; summation order is fixed by the caller.
struct Compensated {
  double sum = 0.0;
  double carry = 0.0;

  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

double proportion_entropy(const ProportionMaps& maps) {
  Compensated acc;
  for (Eigen::Index n = 0; n < maps.P.rows(); ++n) {
    for (Eigen::Index k = 0; k < maps.P.cols(); ++k) {
      const double p = maps.P(n, k);
      if (p < 0.0)
        throw ModelError("negative proportion entry");
      if (p > 0.0)
        acc.add(-p * std::log(p));
    }
  }
  return acc.sum;
}

double ncm_log_likelihood(const PixelMatrix& X, const Matrix& endmember_means,
                          const ProportionMaps& maps, const Vector& sigma2s) {
  const Eigen::Index N = X.rows();
  const Eigen::Index B = X.cols();
  const Eigen::Index K = endmember_means.rows();
  if (maps.P.rows() != N || maps.P.cols() != K || endmember_means.cols() != B ||
      sigma2s.size() != K)
    throw ModelError("ncm_log_likelihood dimension mismatch");
  Compensated acc;
  for (Eigen::Index n = 0; n < N; ++n) {
    const Vector mean = endmember_means.transpose() * maps.P.row(n).transpose();
    const double var = maps.P.row(n).array().square().matrix() * sigma2s;
    if (!(var > 0.0))
      throw ModelError("effective covariance not positive definite");
    const double sq = (X.row(n).transpose() - mean).squaredNorm();
    acc.add(-0.5 * B * std::log(2.0 * M_PI * var) - 0.5 * sq / var);
  }
  return acc.sum;
}

double spectral_angle(const Vector& a, const Vector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0)
    throw ModelError("spectral angle of zero vector");
  const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  return std::acos(c);
}

double proportion_mae(const Matrix& estimated, const Matrix& truth) {
  if (estimated.rows() != truth.rows() || estimated.cols() != truth.cols())
    throw ModelError("proportion_mae shape mismatch");
  return (estimated - truth).array().abs().mean();
}

std::vector<int> best_endmember_permutation(const Matrix& estimated_means,
                                            const Matrix& true_means) {
  const int K = static_cast<int>(estimated_means.rows());
  if (true_means.rows() != K || true_means.cols() != estimated_means.cols())
    throw ModelError("permutation matching shape mismatch");
  std::vector<int> perm(K);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  // K is small (<= 10ish); exhaust all permutations.
  do {
    double cost = 0.0;
    for (int k = 0; k < K; ++k)
      cost += spectral_angle(estimated_means.row(k).transpose(),
                             true_means.row(perm[k]).transpose());
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace spmlda
