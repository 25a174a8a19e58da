#include "spmlda/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace spmlda {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double word_core(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                 const Eigen::Ref<const Eigen::RowVectorXd>& z, const Matrix& means,
                 double sigma2) {
  const double B = static_cast<double>(x.size());
  const double sq = (x - z * means).squaredNorm();
  return -0.5 * B * std::log(2.0 * M_PI * sigma2) - 0.5 * sq / sigma2;
}

// log Dir(pi | alpha) + log Exp(s | lambda) + sum_n log Dir(z_n | pi*s)
// + word_sum, with every Dirichlet on the support sub-simplex.
double doc_conditional(const ModelState& state, const std::vector<int>& doc_pixels,
                       const Eigen::Ref<const Vector>& pi, double s,
                       const std::vector<int>& support, const Hyperparams& hyper,
                       double word_sum) {
  double total = log_dirichlet_symmetric(pi, hyper.alpha, support);
  total += log_exponential(s, hyper.lambda);
  const Vector conc = pi * s;
  for (int n : doc_pixels) total += log_dirichlet(state.Z.row(n).transpose(), conc, support);
  return total + word_sum;
}

double doc_word_sum(const ModelState& state, const std::vector<int>& doc_pixels,
                    const PixelMatrix& X) {
  double sum = 0.0;
  for (int n : doc_pixels) sum += word_core(X.row(n), state.Z.row(n), state.M, state.sigma2);
  return sum;
}

// Accept when the log ratio is nonnegative; otherwise draw one uniform.
bool mh_accept(double log_ratio, RngStream& rng) {
  if (std::isnan(log_ratio))
    return false;
  if (log_ratio >= 0.0)
    return true;
  return std::log(rng.uniform_open()) < log_ratio;
}

// Corpus word-density total with row k of the means replaced by v.
double corpus_word_sum_with_mu(const ModelState& state, const PixelMatrix& X, int k,
                               const Vector& v) {
  Matrix means = state.M;
  means.row(k) = v.transpose();
  const PixelMatrix blended = state.Z * means;
  const double sq = (X - blended).squaredNorm();
  const double NB = static_cast<double>(X.rows()) * static_cast<double>(X.cols());
  return -0.5 * NB * std::log(2.0 * M_PI * state.sigma2) - 0.5 * sq / state.sigma2;
}

double corpus_word_sum_with_sigma2(const ModelState& state, const PixelMatrix& X,
                                   double sigma2) {
  const PixelMatrix blended = state.Z * state.M;
  const double sq = (X - blended).squaredNorm();
  const double NB = static_cast<double>(X.rows()) * static_cast<double>(X.cols());
  return -0.5 * NB * std::log(2.0 * M_PI * sigma2) - 0.5 * sq / sigma2;
}

struct AcceptCounts {
  long pi_acc = 0, pi_try = 0;
  long s_acc = 0, s_try = 0;
  long z_acc = 0, z_try = 0;
  long mu_acc = 0, mu_try = 0;
  long sig_acc = 0, sig_try = 0;

  void merge(const AcceptCounts& o) {
    pi_acc += o.pi_acc;
    pi_try += o.pi_try;
    s_acc += o.s_acc;
    s_try += o.s_try;
    z_acc += o.z_acc;
    z_try += o.z_try;
    mu_acc += o.mu_acc;
    mu_try += o.mu_try;
    sig_acc += o.sig_acc;
    sig_try += o.sig_try;
  }
};

double rate(long acc, long tries) { return tries > 0 ? static_cast<double>(acc) / tries : 0.0; }

}  // namespace

Vector propose_pi(double alpha, const std::vector<int>& support, int K, RngStream& rng) {
  if (support.empty())
    throw LabelSchemaError("proportion proposal has empty support");
  return rng.dirichlet_symmetric(alpha, support, K);
}

Vector propose_z_uniform(const std::vector<int>& support, int K, RngStream& rng) {
  if (support.empty())
    throw LabelSchemaError("membership proposal has empty support");
  return rng.dirichlet_symmetric(1.0, support, K);
}

bool mh_step_pi(ModelState& state, int d, const std::vector<int>& doc_pixels,
                const std::vector<int>& support, const Hyperparams& hyper, double word_sum,
                RngStream& rng) {
  const Vector current = state.Pi.row(d).transpose();
  const Vector candidate = propose_pi(hyper.alpha, support, hyper.K, rng);
  const double num = doc_conditional(state, doc_pixels, candidate, state.S[d], support, hyper,
                                     word_sum) +
                     log_dirichlet_symmetric(current, hyper.alpha, support);
  const double den = doc_conditional(state, doc_pixels, current, state.S[d], support, hyper,
                                     word_sum) +
                     log_dirichlet_symmetric(candidate, hyper.alpha, support);
  if (!mh_accept(num - den, rng))
    return false;
  state.Pi.row(d) = candidate.transpose();
  return true;
}

bool mh_step_s(ModelState& state, int d, const std::vector<int>& doc_pixels,
               const std::vector<int>& support, const Hyperparams& hyper, double word_sum,
               RngStream& rng) {
  const Vector pi = state.Pi.row(d).transpose();
  const double current = state.S[d];
  const double candidate = rng.exponential(hyper.lambda);
  const double num = doc_conditional(state, doc_pixels, pi, candidate, support, hyper,
                                     word_sum) +
                     log_exponential(current, hyper.lambda);
  const double den = doc_conditional(state, doc_pixels, pi, current, support, hyper,
                                     word_sum) +
                     log_exponential(candidate, hyper.lambda);
  if (!mh_accept(num - den, rng))
    return false;
  state.S[d] = candidate;
  return true;
}

bool mh_step_z(ModelState& state, int d, int pixel, const std::vector<int>& support,
               const PixelMatrix& X, RngStream& rng) {
  const Vector candidate = propose_z_uniform(support, static_cast<int>(state.Z.cols()), rng);
  const Vector conc = state.Pi.row(d).transpose() * state.S[d];
  const Vector current = state.Z.row(pixel).transpose();
  const double num = log_dirichlet(candidate, conc, support) +
                     word_core(X.row(pixel), candidate.transpose(), state.M, state.sigma2);
  const double den = log_dirichlet(current, conc, support) +
                     word_core(X.row(pixel), current.transpose(), state.M, state.sigma2);
  if (!mh_accept(num - den, rng))
    return false;
  state.Z.row(pixel) = candidate.transpose();
  return true;
}

bool mh_step_mu(ModelState& state, int k, const PixelMatrix& X, const Vector& data_mean,
                const Eigen::LLT<Matrix>& data_cov_chol, RngStream& rng) {
  const Eigen::Index B = data_mean.size();
  Vector noise(B);
  for (Eigen::Index b = 0; b < B; ++b) noise[b] = rng.normal();
  const Vector candidate = data_mean + Matrix(data_cov_chol.matrixL()) * noise;
  const Vector current = state.M.row(k).transpose();

  const double num = corpus_word_sum_with_mu(state, X, k, candidate) +
                     log_gaussian_chol(current, data_mean, data_cov_chol);
  const double den = corpus_word_sum_with_mu(state, X, k, current) +
                     log_gaussian_chol(candidate, data_mean, data_cov_chol);
  if (!mh_accept(num - den, rng))
    return false;
  state.M.row(k) = candidate.transpose();
  return true;
}

double sigma2_proposal_width(const PixelMatrix& X, const Vector& data_mean) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (Eigen::Index n = 0; n < X.rows(); ++n) {
    const double d2 = (X.row(n).transpose() - data_mean).squaredNorm();
    lo = std::min(lo, d2);
    hi = std::max(hi, d2);
  }
  if (!std::isfinite(lo) || !std::isfinite(hi))
    return 0.0;
  return 0.5 * (hi - lo);
}

bool mh_step_sigma2(ModelState& state, const PixelMatrix& X, double u, RngStream& rng) {
  if (!(u > 0.0))
    return false;  // degenerate data: hold sigma2 fixed
  const double candidate = std::max(kSigma2Floor, rng.uniform01() * u);
  const double num = corpus_word_sum_with_sigma2(state, X, candidate);
  const double den = corpus_word_sum_with_sigma2(state, X, state.sigma2);
  if (!mh_accept(num - den, rng))
    return false;
  state.sigma2 = candidate;
  return true;
}

double corpus_log_joint(const ModelState& state, const PixelMatrix& X,
                        const std::vector<std::vector<int>>& docs, const Hyperparams& hyper,
                        const std::vector<std::vector<int>>& supports) {
  double total = 0.0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const double wsum = doc_word_sum(state, docs[d], X);
    total += doc_conditional(state, docs[d], state.Pi.row(static_cast<int>(d)).transpose(),
                             state.S[static_cast<Eigen::Index>(d)], supports[d], hyper, wsum);
  }
  return total;
}

SamplerResult run_sampler(const HsiCube& cube, const Segmentation& seg, const LabelMatrix& tau,
                          const Hyperparams& hyper, const EndmemberModel& init, int threads) {
  hyper.validate();
  validate_tau(tau);
  const int D = seg.superpixel_count();
  const Eigen::Index N = cube.data.rows();
  const int B = cube.bands();
  if (seg.rows != cube.rows || seg.cols != cube.cols)
    throw ConsistencyError("segmentation geometry does not match the cube");
  if (tau.superpixels() != D)
    throw ConsistencyError("label matrix has " + std::to_string(tau.superpixels()) +
                           " columns but the segmentation has " + std::to_string(D) +
                           " superpixels");
  if (tau.endmembers() != hyper.K)
    throw ConsistencyError("label matrix row count does not match K");
  if (init.means.rows() != hyper.K || init.means.cols() != B)
    throw ConsistencyError("initial endmember means have the wrong shape");

  std::vector<std::vector<int>> supports(D);
  for (int d = 0; d < D; ++d) supports[d] = tau.support(d);

  const PixelMatrix& X = cube.data;

  // Deterministic initial state: memberships lean on the nearest admissible
  // initial endmember (kept interior so every density stays finite),
  // proportions blend the document average with uniform, and the mixing
  // level sits at the prior mean.
  ModelState state;
  state.Pi = Matrix::Zero(D, hyper.K);
  state.S = Vector::Constant(D, 1.0 / hyper.lambda);
  state.Z = Matrix::Zero(N, hyper.K);
  state.M = init.means;
  state.sigma2 = std::max(kSigma2Floor, init.sigma2);
  constexpr double kInitBlend = 0.05;
  for (int d = 0; d < D; ++d) {
    const auto& sup = supports[d];
    const double uniform = 1.0 / static_cast<double>(sup.size());
    Vector z_mean = Vector::Zero(hyper.K);
    for (int n : seg.members[d]) {
      int nearest = sup.front();
      double best = std::numeric_limits<double>::infinity();
      for (int k : sup) {
        const double dist = (X.row(n) - init.means.row(k)).squaredNorm();
        if (dist < best) {
          best = dist;
          nearest = k;
        }
      }
      for (int k : sup) state.Z(n, k) = kInitBlend * uniform;
      state.Z(n, nearest) += 1.0 - kInitBlend;
      z_mean += state.Z.row(n).transpose();
    }
    if (!seg.members[d].empty())
      z_mean /= static_cast<double>(seg.members[d].size());
    for (int k : sup) state.Pi(d, k) = 0.5 * uniform + 0.5 * z_mean[k];
    if (seg.members[d].empty())
      for (int k : sup) state.Pi(d, k) = uniform;
    state.Pi.row(d) /= state.Pi.row(d).sum();
  }

  // Data moments for the mu and sigma2 proposals.
  const Vector data_mean = X.colwise().mean().transpose();
  Matrix data_cov = Matrix::Zero(B, B);
  for (Eigen::Index n = 0; n < N; ++n) {
    const Vector c = X.row(n).transpose() - data_mean;
    data_cov.noalias() += c * c.transpose();
  }
  data_cov /= std::max<Eigen::Index>(1, N);
  const double jitter = 1e-6 * std::max(data_cov.trace() / B, 1e-30);
  data_cov.diagonal().array() += jitter;
  const Eigen::LLT<Matrix> cov_chol(data_cov);
  if (cov_chol.info() != Eigen::Success)
    throw ModelError("data covariance is not positive definite after jitter");
  const double u_width = sigma2_proposal_width(X, data_mean);

  const int T = hyper.T;
  const int thin = std::max(1, T / 100);
  const int burn = static_cast<int>(std::floor(hyper.burn_in_fraction * T));

  Chain chain;
  chain.log_density_trace = Vector::Zero(T);
  chain.per_iteration_acceptance = Matrix::Zero(T, 5);
  chain.map_log_density = kNegInf;

  AcceptCounts totals;
  const int workers = std::max(1, std::min(threads, D));

  for (int t = 1; t <= T; ++t) {
    // Document blocks are mutually independent given (M, sigma2); each
    // worker owns a contiguous range of documents.
    std::vector<AcceptCounts> counts(workers);
    auto sweep_docs = [&](int w, int d0, int d1) {
      AcceptCounts& c = counts[w];
      for (int d = d0; d < d1; ++d) {
        const auto& pix = seg.members[d];
        const double wsum = doc_word_sum(state, pix, X);
        {
          RngStream rng(hyper.seed, RngBlock::pi, static_cast<std::uint64_t>(t), d);
          c.pi_acc += mh_step_pi(state, d, pix, supports[d], hyper, wsum, rng);
          ++c.pi_try;
        }
        {
          RngStream rng(hyper.seed, RngBlock::s, static_cast<std::uint64_t>(t), d);
          c.s_acc += mh_step_s(state, d, pix, supports[d], hyper, wsum, rng);
          ++c.s_try;
        }
        for (int n : pix) {
          RngStream rng(hyper.seed, RngBlock::z, static_cast<std::uint64_t>(t), d,
                        static_cast<std::uint64_t>(n));
          c.z_acc += mh_step_z(state, d, n, supports[d], X, rng);
          ++c.z_try;
        }
      }
    };
    if (workers == 1) {
      sweep_docs(0, 0, D);
    } else {
      std::vector<std::thread> pool;
      const int chunk = (D + workers - 1) / workers;
      for (int w = 0; w < workers; ++w) {
        const int d0 = w * chunk;
        const int d1 = std::min(D, d0 + chunk);
        if (d0 < d1)
          pool.emplace_back(sweep_docs, w, d0, d1);
      }
      for (auto& th : pool) th.join();
    }
    AcceptCounts iter_counts;
    for (const auto& c : counts) iter_counts.merge(c);

    for (int k = 0; k < hyper.K; ++k) {
      RngStream rng(hyper.seed, RngBlock::mu, static_cast<std::uint64_t>(t), 0,
                    static_cast<std::uint64_t>(k));
      iter_counts.mu_acc += mh_step_mu(state, k, X, data_mean, cov_chol, rng);
      ++iter_counts.mu_try;
    }
    if (u_width > 0.0) {
      RngStream rng(hyper.seed, RngBlock::sigma2, static_cast<std::uint64_t>(t));
      iter_counts.sig_acc += mh_step_sigma2(state, X, u_width, rng);
      ++iter_counts.sig_try;
    }
    totals.merge(iter_counts);
    chain.per_iteration_acceptance(t - 1, 0) = rate(iter_counts.pi_acc, iter_counts.pi_try);
    chain.per_iteration_acceptance(t - 1, 1) = rate(iter_counts.s_acc, iter_counts.s_try);
    chain.per_iteration_acceptance(t - 1, 2) = rate(iter_counts.z_acc, iter_counts.z_try);
    chain.per_iteration_acceptance(t - 1, 3) = rate(iter_counts.mu_acc, iter_counts.mu_try);
    chain.per_iteration_acceptance(t - 1, 4) = rate(iter_counts.sig_acc, iter_counts.sig_try);

    const double density = corpus_log_joint(state, X, seg.members, hyper, supports);
    chain.log_density_trace[t - 1] = density;
    if (t > burn && density > chain.map_log_density) {
      chain.map_log_density = density;
      chain.map_iteration = t;
      chain.map_state = state;
    }
    if ((t - 1) % thin == 0) {
      chain.states.push_back(state);
      chain.state_iterations.push_back(t);
    }
  }

  chain.acceptance_rates.pi = rate(totals.pi_acc, totals.pi_try);
  chain.acceptance_rates.s = rate(totals.s_acc, totals.s_try);
  chain.acceptance_rates.z = rate(totals.z_acc, totals.z_try);
  chain.acceptance_rates.mu = rate(totals.mu_acc, totals.mu_try);
  chain.acceptance_rates.sigma2 = rate(totals.sig_acc, totals.sig_try);

  SamplerResult result;
  result.proportions.rows = seg.rows;
  result.proportions.cols = seg.cols;
  result.proportions.P = chain.map_state.Z;
  result.endmembers = chain.map_state.endmember_model();
  result.chain = std::move(chain);
  return result;
}

SamplerResult run_sampler(const HsiCube& cube, const Segmentation& seg, const Hyperparams& hyper,
                          const EndmemberModel& init, int threads) {
  return run_sampler(cube, seg, LabelMatrix::all_ones(hyper.K, seg.superpixel_count()), hyper,
                     init, threads);
}

EndmemberModel vca_init(const HsiCube& cube, int K, std::uint64_t seed) {
  const Eigen::Index N = cube.data.rows();
  const int B = cube.bands();
  if (K < 1)
    throw ModelError("K must be at least 1");
  if (static_cast<Eigen::Index>(K) > N)
    throw ModelError("more endmembers requested than pixels");
  if (K > B + 1)
    throw ModelError("endmember count exceeds bands + 1");

  // Lifted coordinates [x; 1] keep up to B+1 simplex vertices linearly
  // independent, so span-orthogonal directions stay informative.
  Matrix Y(N, B + 1);
  Y.leftCols(B) = cube.data;
  Y.col(B).setOnes();

  std::vector<int> chosen;
  Matrix basis(B + 1, K);  // orthonormal basis of the chosen lifted spectra
  int basis_size = 0;

  for (int i = 0; i < K; ++i) {
    RngStream rng(seed, RngBlock::vca, 0, 0, static_cast<std::uint64_t>(i));
    Vector w(B + 1);
    for (Eigen::Index b = 0; b < B + 1; ++b) w[b] = rng.normal();
    if (basis_size > 0) {
      const auto Q = basis.leftCols(basis_size);
      w -= Q * (Q.transpose() * w);
    }
    int pick = -1;
    if (w.norm() > 1e-12) {
      w /= w.norm();
      const Vector score = (Y * w).cwiseAbs();
      double best = -1.0;
      for (Eigen::Index n = 0; n < N; ++n) {
        const bool duplicate = std::any_of(chosen.begin(), chosen.end(), [&](int c) {
          return (Y.row(n).array() == Y.row(c).array()).all();
        });
        if (duplicate)
          continue;
        if (score[n] > best) {
          best = score[n];
          pick = static_cast<int>(n);
        }
      }
    }
    if (pick < 0) {
      // Degenerate data: fall back to the first unchosen pixel index.
      for (Eigen::Index n = 0; n < N; ++n) {
        if (std::find(chosen.begin(), chosen.end(), static_cast<int>(n)) == chosen.end()) {
          pick = static_cast<int>(n);
          break;
        }
      }
    }
    chosen.push_back(pick);
    Vector v = Y.row(pick).transpose();
    if (basis_size > 0) {
      const auto Q = basis.leftCols(basis_size);
      v -= Q * (Q.transpose() * v);
    }
    if (v.norm() > 1e-12)
      basis.col(basis_size++) = v / v.norm();
  }

  EndmemberModel model;
  model.means.resize(K, B);
  for (int i = 0; i < K; ++i) model.means.row(i) = cube.data.row(chosen[i]);
  const Vector data_mean = cube.data.colwise().mean().transpose();
  double var = 0.0;
  for (Eigen::Index n = 0; n < N; ++n)
    var += (cube.data.row(n).transpose() - data_mean).squaredNorm();
  var /= static_cast<double>(std::max<Eigen::Index>(1, N)) * B;
  model.sigma2 = std::max(kSigma2Floor, var);
  return model;
}

}  // namespace spmlda
