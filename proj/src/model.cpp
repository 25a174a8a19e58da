#include "spmlda/model.hpp"

#include <cmath>
#include <limits>

namespace spmlda {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPosInf = std::numeric_limits<double>::infinity();
}  // namespace

void Hyperparams::validate() const {
  if (K < 1)
    throw ModelError("K must be at least 1");
  if (!(alpha > 0.0))
    throw ModelError("alpha must be positive");
  if (!(lambda > 0.0))
    throw ModelError("lambda must be positive");
  if (T < 1)
    throw ModelError("T must be at least 1");
  if (!(burn_in_fraction > 0.0 && burn_in_fraction < 1.0))
    throw ModelError("burn_in_fraction must lie in (0,1)");
}

double log_dirichlet(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& conc,
                     const std::vector<int>& support) {
  if (x.size() != conc.size())
    throw ModelError("dirichlet dimension mismatch");
  // Mass outside the support kills the density.
  std::vector<bool> in_support(static_cast<std::size_t>(x.size()), false);
  for (int k : support) {
    if (k < 0 || k >= x.size())
      throw ModelError("support index out of range");
    in_support[static_cast<std::size_t>(k)] = true;
  }
  for (Eigen::Index k = 0; k < x.size(); ++k)
    if (!in_support[static_cast<std::size_t>(k)] && x[k] != 0.0)
      return kNegInf;
  if (support.size() <= 1)
    return 0.0;  // point mass on the single admitted vertex

  double conc_sum = 0.0;
  double result = 0.0;
  for (int k : support) {
    const double a = conc[k];
    if (!(a > 0.0))
      throw ModelError("dirichlet concentration must be positive on the support");
    conc_sum += a;
    result -= std::lgamma(a);
    const double xv = x[k];
    if (xv == 0.0) {
      if (a > 1.0)
        return kNegInf;
      if (a < 1.0)
        return kPosInf;  // boundary divergence; callers treat as accept-dominant
      // a == 1: x^0 contributes nothing
    } else {
      result += (a - 1.0) * std::log(xv);
    }
  }
  return result + std::lgamma(conc_sum);
}

double log_dirichlet_symmetric(const Eigen::Ref<const Vector>& x, double alpha,
                               const std::vector<int>& support) {
  Vector conc = Vector::Zero(x.size());
  for (int k : support) conc[k] = alpha;
  return log_dirichlet(x, conc, support);
}

double log_exponential(double x, double rate) {
  if (!(rate > 0.0))
    throw ModelError("exponential rate must be positive");
  if (x < 0.0)
    return kNegInf;
  return std::log(rate) - rate * x;
}

double log_gaussian_iso(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mean,
                        double sigma2) {
  if (!(sigma2 > 0.0))
    throw ModelError("sigma2 must be positive");
  if (x.size() != mean.size())
    throw ModelError("gaussian dimension mismatch");
  const double B = static_cast<double>(x.size());
  return -0.5 * B * std::log(2.0 * M_PI * sigma2) - 0.5 * (x - mean).squaredNorm() / sigma2;
}

double log_gaussian_chol(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mean,
                         const Eigen::LLT<Matrix>& chol) {
  const Eigen::Index B = x.size();
  const Matrix& L = chol.matrixLLT();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < B; ++i) logdet += 2.0 * std::log(L(i, i));
  const Vector y = chol.matrixL().solve(x - mean);
  return -0.5 * (B * std::log(2.0 * M_PI) + logdet + y.squaredNorm());
}

double word_log_density(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& z,
                        const EndmemberModel& model) {
  if (z.size() != model.means.rows() || x.size() != model.means.cols())
    throw ModelError("word density dimension mismatch");
  const Vector blended = model.means.transpose() * z;
  return log_gaussian_iso(x, blended, model.sigma2);
}

double joint_log_density(const Eigen::Ref<const Vector>& pi, double s, const Matrix& Z_doc,
                         const PixelMatrix& X_doc, const Hyperparams& hyper,
                         const EndmemberModel& model, const std::vector<int>& support) {
  if (pi.size() != hyper.K || Z_doc.cols() != hyper.K || Z_doc.rows() != X_doc.rows())
    throw ModelError("joint density dimension mismatch");
  double total = log_dirichlet_symmetric(pi, hyper.alpha, support);
  total += log_exponential(s, hyper.lambda);
  const Vector membership_conc = pi * s;
  for (Eigen::Index n = 0; n < Z_doc.rows(); ++n) {
    total += log_dirichlet(Z_doc.row(n).transpose(), membership_conc, support);
    total += word_log_density(X_doc.row(n).transpose(), Z_doc.row(n).transpose(), model);
  }
  return total;
}

}  // namespace spmlda
