#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "spmlda/types.hpp"

namespace spmlda {

// Counter-based generator (Threefry-2x64, 20 rounds). Every draw site in the
// sampler gets its own stream keyed by (seed, block, iteration, document,
// pixel), so draws are independent of evaluation order and worker count.
struct Threefry2x64 {
  static constexpr std::uint64_t kParity = 0x1BD11BDAA9FC1A22ull;
  static constexpr std::array<int, 8> kRot = {16, 42, 12, 31, 16, 32, 24, 21};

  static std::array<std::uint64_t, 2> encrypt(std::array<std::uint64_t, 2> x,
                                              const std::array<std::uint64_t, 2>& key) {
    const std::array<std::uint64_t, 3> ks = {key[0], key[1], key[0] ^ key[1] ^ kParity};
    x[0] += ks[0];
    x[1] += ks[1];
    for (int r = 0; r < 20; ++r) {
      x[0] += x[1];
      x[1] = rotl(x[1], kRot[r % 8]);
      x[1] ^= x[0];
      if (r % 4 == 3) {
        const int j = r / 4 + 1;
        x[0] += ks[j % 3];
        x[1] += ks[(j + 1) % 3] + static_cast<std::uint64_t>(j);
      }
    }
    return x;
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int n) { return (v << n) | (v >> (64 - n)); }
};

// Identifies the sampler block a stream belongs to.
enum class RngBlock : std::uint64_t {
  pi = 0,
  s = 1,
  z = 2,
  mu = 3,
  sigma2 = 4,
  init = 5,
  vca = 6,
  synth_pi = 7,
  synth_s = 8,
  synth_z = 9,
  synth_x = 10,
};

class RngStream {
 public:
  RngStream(std::uint64_t seed, RngBlock block, std::uint64_t iteration,
            std::uint64_t doc = 0, std::uint64_t pixel = 0)
      : key_{seed, (static_cast<std::uint64_t>(block) & 0xff) | (iteration << 8)},
        site_((doc << 40) | (pixel & 0xffffffffffull)) {}

  std::uint64_t next_u64() {
    if (have_spare_word_) {
      have_spare_word_ = false;
      return spare_word_;
    }
    const auto out = Threefry2x64::encrypt({counter_++, site_}, key_);
    spare_word_ = out[1];
    have_spare_word_ = true;
    return out[0];
  }

  // [0, 1)
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // (0, 1), safe under log()
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double exponential(double rate) { return -std::log(uniform_open()) / rate; }

  double normal() {
    if (have_spare_normal_) {
      have_spare_normal_ = false;
      return spare_normal_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_normal_ = r * std::sin(a);
    have_spare_normal_ = true;
    return r * std::cos(a);
  }

  // Gamma(shape, 1) via Marsaglia-Tsang, boosted for shape < 1.
  double gamma(double shape) {
    if (shape <= 0.0)
      throw ModelError("gamma shape must be positive");
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return g * std::pow(uniform_open(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double t = 1.0 + c * x;
      if (t <= 0.0)
        continue;
      const double v = t * t * t;
      const double u = uniform_open();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2)
        return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v)))
        return d * v;
    }
  }

  // Dirichlet with per-component concentrations, restricted to the given
  // support indices. Entries outside the support are exactly zero. A
  // single-index support is the deterministic one-hot vector.
  Vector dirichlet(const Eigen::Ref<const Vector>& conc, const std::vector<int>& support,
                   int dim) {
    if (support.empty())
      throw LabelSchemaError("dirichlet support is empty");
    Vector out = Vector::Zero(dim);
    if (support.size() == 1) {
      out[support.front()] = 1.0;
      return out;
    }
    double sum = 0.0;
    for (int k : support) {
      const double g = gamma(conc[k]);
      out[k] = g;
      sum += g;
    }
    if (sum <= 0.0) {  // total underflow: fall back to uniform on support
      for (int k : support) out[k] = 1.0 / static_cast<double>(support.size());
      return out;
    }
    for (int k : support) out[k] /= sum;
    return out;
  }

  Vector dirichlet_symmetric(double alpha, const std::vector<int>& support, int dim) {
    return dirichlet(Vector::Constant(dim, alpha), support, dim);
  }

 private:
  std::array<std::uint64_t, 2> key_;
  std::uint64_t site_ = 0;
  std::uint64_t counter_ = 0;
  std::uint64_t spare_word_ = 0;
  bool have_spare_word_ = false;
  double spare_normal_ = 0.0;
  bool have_spare_normal_ = false;
};

}  // namespace spmlda
