#pragma once

#include <cstdint>
#include <optional>

#include "spmlda/metrics.hpp"
#include "spmlda/model.hpp"
#include "spmlda/supervision.hpp"
#include "spmlda/types.hpp"

namespace spmlda {

// Scene generated from the full generative process, documents laid out as
// rectangular tiles so ground-truth document boundaries are exact.
struct SynthSpec {
  int rows = 64;
  int cols = 64;
  int bands = 8;
  int K = 3;
  Matrix true_means;          // K x bands; empty selects default_true_means
  double sigma2_true = 1e-4;
  double alpha_true = 0.3;
  double lambda_true = 1.0;
  int tile = 8;               // document tile side, pixels
  std::uint64_t seed = 0;
  std::optional<Eigen::MatrixXi> doc_masks;  // K x D ground-truth labels

  int docs_y() const { return (rows + tile - 1) / tile; }
  int docs_x() const { return (cols + tile - 1) / tile; }
  int documents() const { return docs_y() * docs_x(); }
  int document_of(int row, int col) const { return (row / tile) * docs_x() + col / tile; }

  void validate() const;
};

struct SynthScene {
  HsiCube cube;
  ProportionMaps truth;       // per-pixel memberships actually drawn
  EndmemberModel endmembers;  // true means and variance
  Segmentation segmentation;  // the tile layout
  LabelMatrix tau;            // ground-truth label matrix (all ones if unmasked)
  ModelState latent;          // every latent variable used
};

// Well-separated deterministic means: a pedestal plus one spiked band per
// endmember.
Matrix default_true_means(int K, int B);

SynthScene generate(const SynthSpec& spec);

}  // namespace spmlda
