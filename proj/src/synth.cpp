#include "spmlda/synth.hpp"

#include <cmath>

#include "spmlda/rng.hpp"

namespace spmlda {

void SynthSpec::validate() const {
  if (rows < 1 || cols < 1 || bands < 1)
    throw ModelError("scene dimensions must be positive");
  if (K < 1)
    throw ModelError("K must be at least 1");
  if (tile < 1)
    throw ModelError("tile size must be positive");
  if (!(sigma2_true > 0.0))
    throw ModelError("sigma2_true must be positive");
  if (!(alpha_true > 0.0) || !(lambda_true > 0.0))
    throw ModelError("alpha_true and lambda_true must be positive");
  if (true_means.size() > 0 && (true_means.rows() != K || true_means.cols() != bands))
    throw ModelError("true_means must be K x bands");
  if (doc_masks) {
    if (doc_masks->rows() != K || doc_masks->cols() != documents())
      throw ModelError("doc_masks must be K x documents");
    for (int d = 0; d < documents(); ++d) {
      bool any = false;
      for (int k = 0; k < K; ++k) {
        if ((*doc_masks)(k, d) != 0 && (*doc_masks)(k, d) != 1)
          throw ModelError("doc_masks entries must be binary");
        any = any || (*doc_masks)(k, d) == 1;
      }
      if (!any)
        throw ModelError("doc_masks column " + std::to_string(d) + " admits no endmember");
    }
  }
}

Matrix default_true_means(int K, int B) {
  // A small simplex riding on a large common pedestal: endmembers stay
  // separable while the pixel cloud stays compact around its mean.
  Matrix means = Matrix::Constant(K, B, 3.0);
  for (int k = 0; k < K; ++k) means(k, k % B) += 1.0;
  return means;
}

SynthScene generate(const SynthSpec& spec) {
  spec.validate();
  const int D = spec.documents();
  const Eigen::Index N = static_cast<Eigen::Index>(spec.rows) * spec.cols;
  const int K = spec.K, B = spec.bands;

  SynthScene scene;
  scene.endmembers.means = spec.true_means.size() > 0 ? spec.true_means
                                                      : default_true_means(K, B);
  scene.endmembers.sigma2 = spec.sigma2_true;

  scene.tau.tau = spec.doc_masks ? *spec.doc_masks : Eigen::MatrixXi::Ones(K, D);
  for (int k = 0; k < K; ++k)
    for (int d = 0; d < D; ++d)
      if (scene.tau.tau(k, d) == 0) {
        scene.tau.supervised_endmembers.insert(k);
        break;
      }
  validate_tau(scene.tau);

  Eigen::VectorXi labels(N);
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c)
      labels[static_cast<Eigen::Index>(r) * spec.cols + c] = spec.document_of(r, c);
  scene.segmentation = Segmentation::from_labels(spec.rows, spec.cols, std::move(labels));

  ModelState& st = scene.latent;
  st.Pi = Matrix::Zero(D, K);
  st.S = Vector::Zero(D);
  st.Z = Matrix::Zero(N, K);
  st.M = scene.endmembers.means;
  st.sigma2 = spec.sigma2_true;

  scene.cube.rows = spec.rows;
  scene.cube.cols = spec.cols;
  scene.cube.data.resize(N, B);

  const double noise_sd = std::sqrt(spec.sigma2_true);
  for (int d = 0; d < D; ++d) {
    const std::vector<int> support = scene.tau.support(d);
    {
      RngStream rng(spec.seed, RngBlock::synth_pi, 0, static_cast<std::uint64_t>(d));
      st.Pi.row(d) =
          rng.dirichlet_symmetric(spec.alpha_true, support, K).transpose();
    }
    {
      RngStream rng(spec.seed, RngBlock::synth_s, 0, static_cast<std::uint64_t>(d));
      st.S[d] = rng.exponential(spec.lambda_true);
    }
    const Vector conc = st.Pi.row(d).transpose() * st.S[d];
    for (int n : scene.segmentation.members[d]) {
      {
        RngStream rng(spec.seed, RngBlock::synth_z, 0, static_cast<std::uint64_t>(d),
                      static_cast<std::uint64_t>(n));
        st.Z.row(n) = rng.dirichlet(conc, support, K).transpose();
      }
      {
        RngStream rng(spec.seed, RngBlock::synth_x, 0, static_cast<std::uint64_t>(d),
                      static_cast<std::uint64_t>(n));
        Vector x = st.M.transpose() * st.Z.row(n).transpose();
        for (int b = 0; b < B; ++b) x[b] += noise_sd * rng.normal();
        scene.cube.data.row(n) = x.transpose();
      }
    }
  }

  scene.truth.rows = spec.rows;
  scene.truth.cols = spec.cols;
  scene.truth.P = st.Z;
  return scene;
}

}  // namespace spmlda
