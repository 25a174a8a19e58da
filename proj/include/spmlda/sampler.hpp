#pragma once

#include <cstdint>
#include <vector>

#include "spmlda/metrics.hpp"
#include "spmlda/model.hpp"
#include "spmlda/rng.hpp"
#include "spmlda/supervision.hpp"
#include "spmlda/types.hpp"

namespace spmlda {

inline constexpr double kSigma2Floor = 1e-12;

// Dirichlet(alpha * 1) restricted to the support; zeros elsewhere.
Vector propose_pi(double alpha, const std::vector<int>& support, int K, RngStream& rng);

// Uniform draw on the sub-simplex of the support (Dirichlet with unit
// concentrations); zeros elsewhere.
Vector propose_z_uniform(const std::vector<int>& support, int K, RngStream& rng);

// Metropolis-Hastings blocks. Each returns whether the candidate was
// accepted and mutates the corresponding slice of the state. word_sum is the
// document's current total word log density (unchanged by the pi and s
// blocks, so callers compute it once per document sweep).
bool mh_step_pi(ModelState& state, int d, const std::vector<int>& doc_pixels,
                const std::vector<int>& support, const Hyperparams& hyper, double word_sum,
                RngStream& rng);

bool mh_step_s(ModelState& state, int d, const std::vector<int>& doc_pixels,
               const std::vector<int>& support, const Hyperparams& hyper, double word_sum,
               RngStream& rng);

bool mh_step_z(ModelState& state, int d, int pixel, const std::vector<int>& support,
               const PixelMatrix& X, RngStream& rng);

// Independence proposal from N(data_mean, data_cov); data_cov_chol holds the
// Cholesky factor of the jittered data covariance. The joint term spans the
// whole corpus.
bool mh_step_mu(ModelState& state, int k, const PixelMatrix& X, const Vector& data_mean,
                const Eigen::LLT<Matrix>& data_cov_chol, RngStream& rng);

// sigma2 ~ Unif(0, u); u <= 0 skips the step (degenerate data).
bool mh_step_sigma2(ModelState& state, const PixelMatrix& X, double u, RngStream& rng);

// Half the spread of squared distances from the data mean (the uniform
// proposal width for the sigma2 block).
double sigma2_proposal_width(const PixelMatrix& X, const Vector& data_mean);

// Full-corpus joint log density under the masked model (no priors on M or
// sigma2; they enter through the word terms).
double corpus_log_joint(const ModelState& state, const PixelMatrix& X,
                        const std::vector<std::vector<int>>& docs, const Hyperparams& hyper,
                        const std::vector<std::vector<int>>& supports);

struct SamplerResult {
  Chain chain;
  ProportionMaps proportions;   // from the maximum-density post-burn-in state
  EndmemberModel endmembers;    // ditto
};

// Runs T iterations of the Metropolis-within-Gibbs sweep: per-document pi
// and s, per-pixel z, per-topic mu, then the shared sigma2. Bit-identical
// output for any worker count thanks to per-site counter RNG streams.
SamplerResult run_sampler(const HsiCube& cube, const Segmentation& seg, const LabelMatrix& tau,
                          const Hyperparams& hyper, const EndmemberModel& init, int threads = 1);

// Unsupervised path: an all-ones label matrix.
SamplerResult run_sampler(const HsiCube& cube, const Segmentation& seg, const Hyperparams& hyper,
                          const EndmemberModel& init, int threads = 1);

// Picks K pixel spectra by iterating extreme projections onto directions
// orthogonal (in lifted [x;1] coordinates) to the span of the picks so far.
// sigma2 is seeded from the average per-band data variance.
EndmemberModel vca_init(const HsiCube& cube, int K, std::uint64_t seed);

}  // namespace spmlda
