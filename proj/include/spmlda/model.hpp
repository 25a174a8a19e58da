#pragma once

#include <cstdint>
#include <vector>

#include "spmlda/types.hpp"

namespace spmlda {

struct Hyperparams {
  int K = 6;                      // endmember count
  double alpha = 0.3;             // symmetric Dirichlet concentration
  double lambda = 1.0;            // exponential rate for the mixing level
  int T = 200;                    // sampler iterations
  double burn_in_fraction = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

// Gaussian endmember distributions sharing one isotropic covariance sigma2*I.
struct EndmemberModel {
  Matrix means;         // K x B
  double sigma2 = 1.0;

  int endmembers() const { return static_cast<int>(means.rows()); }
  int bands() const { return static_cast<int>(means.cols()); }

  // Natural parameters of topic k: (precision matrix scale, precision*mean).
  double precision() const { return 1.0 / sigma2; }
  Vector precision_times_mean(int k) const { return means.row(k).transpose() / sigma2; }
};

// One sampler state over the whole corpus.
struct ModelState {
  Matrix Pi;       // D x K document proportions, rows on the simplex
  Vector S;        // D mixing levels, positive
  Matrix Z;        // N x K per-pixel memberships, rows on the simplex
  Matrix M;        // K x B endmember means
  double sigma2 = 1.0;

  EndmemberModel endmember_model() const { return {M, sigma2}; }
};

struct BlockAcceptance {
  double pi = 0.0, s = 0.0, z = 0.0, mu = 0.0, sigma2 = 0.0;
};

struct Chain {
  std::vector<ModelState> states;   // thinned snapshots
  std::vector<int> state_iterations;
  Vector log_density_trace;         // one entry per iteration, length T
  BlockAcceptance acceptance_rates;
  Matrix per_iteration_acceptance;  // T x 5: pi, s, z, mu, sigma2
  ModelState map_state;             // best post-burn-in joint density
  int map_iteration = -1;
  double map_log_density = 0.0;
};

// --- density primitives -----------------------------------------------------
//
// Masked Dirichlet semantics: densities are evaluated on the sub-simplex of
// the support indices; any mass outside the support makes the density zero
// (-inf in log space). A single-index support is a point mass contributing 0.

double log_dirichlet(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& conc,
                     const std::vector<int>& support);

double log_dirichlet_symmetric(const Eigen::Ref<const Vector>& x, double alpha,
                               const std::vector<int>& support);

double log_exponential(double x, double rate);

double log_gaussian_iso(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mean,
                        double sigma2);

// Multivariate normal with a precomputed Cholesky factor of the covariance.
double log_gaussian_chol(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mean,
                         const Eigen::LLT<Matrix>& chol);

// Normalized density of a pixel under blended topics: with shared isotropic
// covariance the exponential-family blend collapses to
// N(x | sum_k z_k mu_k, sigma2 I).
double word_log_density(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& z,
                        const EndmemberModel& model);

// Joint log density of one document:
//   log Dir(pi | alpha on support) + log Exp(s | lambda)
//   + sum_n [ log Dir(z_n | pi*s on support) + word_log_density(x_n, z_n) ].
// Z_doc rows pair with X_doc rows.
double joint_log_density(const Eigen::Ref<const Vector>& pi, double s, const Matrix& Z_doc,
                         const PixelMatrix& X_doc, const Hyperparams& hyper,
                         const EndmemberModel& model, const std::vector<int>& support);

}  // namespace spmlda
