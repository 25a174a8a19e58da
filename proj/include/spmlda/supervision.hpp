#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "spmlda/types.hpp"

namespace spmlda {

// K x C binary endmember label matrix. tau(i, j) = 0 forbids endmember i
// everywhere inside superpixel j; rows of unsupervised endmembers are all
// ones. Every column must admit at least one endmember.
struct LabelMatrix {
  Eigen::MatrixXi tau;                      // K x C, entries in {0,1}
  std::set<int> supervised_endmembers;      // rows that received explicit labels
  std::vector<std::string> endmember_names; // empty or size K

  int endmembers() const { return static_cast<int>(tau.rows()); }
  int superpixels() const { return static_cast<int>(tau.cols()); }

  // Column support as ascending endmember indices.
  std::vector<int> support(int column) const;

  static LabelMatrix all_ones(int K, int C);
};

// Builds tau from per-class superpixel region sets. Supervised endmember i
// gets ones exactly on its regions; unsupervised rows are all ones.
LabelMatrix build_tau(int C, int K,
                      const std::map<std::string, std::set<int>>& class_regions,
                      const std::map<std::string, int>& class_to_endmember,
                      const std::vector<std::string>& endmember_names = {});

// Checks all LabelMatrix invariants; throws LabelSchemaError naming the first
// violated row or column.
void validate_tau(const LabelMatrix& tau);

// CSV layout: one header line with K endmember names, then K rows of C
// comma-separated 0/1 entries (row i = endmember i).
void write_tau_csv(const std::string& path, const LabelMatrix& tau);
LabelMatrix load_tau_csv(const std::string& path);

}  // namespace spmlda
