#include "spmlda/supervision.hpp"

#include <fstream>
#include <sstream>

namespace spmlda {

namespace {

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  const auto a = s.find_first_not_of(ws);
  if (a == std::string::npos)
    return "";
  const auto b = s.find_last_not_of(ws);
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<int> LabelMatrix::support(int column) const {
  std::vector<int> out;
  for (int k = 0; k < endmembers(); ++k)
    if (tau(k, column) != 0)
      out.push_back(k);
  return out;
}

LabelMatrix LabelMatrix::all_ones(int K, int C) {
  LabelMatrix lm;
  lm.tau = Eigen::MatrixXi::Ones(K, C);
  return lm;
}

LabelMatrix build_tau(int C, int K,
                      const std::map<std::string, std::set<int>>& class_regions,
                      const std::map<std::string, int>& class_to_endmember,
                      const std::vector<std::string>& endmember_names) {
  LabelMatrix lm;
  lm.tau = Eigen::MatrixXi::Ones(K, C);
  lm.endmember_names = endmember_names;

  // Collect regions per supervised endmember; classes mapping to the same
  // endmember contribute the union of their regions.
  std::map<int, std::set<int>> regions_by_endmember;
  for (const auto& [tag, regions] : class_regions) {
    const auto it = class_to_endmember.find(tag);
    if (it == class_to_endmember.end())
      continue;  // unlabeled class: no supervision contributed
    const int k = it->second;
    if (k < 0 || k >= K)
      throw LabelSchemaError("endmember index " + std::to_string(k) + " out of range for class " + tag);
    auto& dst = regions_by_endmember[k];
    for (int j : regions) {
      if (j < 0 || j >= C)
        throw LabelSchemaError("superpixel id " + std::to_string(j) + " out of range for class " + tag);
      dst.insert(j);
    }
  }

  for (const auto& [k, regions] : regions_by_endmember) {
    lm.supervised_endmembers.insert(k);
    for (int j = 0; j < C; ++j) lm.tau(k, j) = regions.count(j) ? 1 : 0;
  }

  validate_tau(lm);
  return lm;
}

void validate_tau(const LabelMatrix& lm) {
  const int K = lm.endmembers();
  const int C = lm.superpixels();
  if (K <= 0 || C <= 0)
    throw LabelSchemaError("label matrix has empty dimensions");
  if (!lm.endmember_names.empty() && static_cast<int>(lm.endmember_names.size()) != K)
    throw LabelSchemaError("endmember name count does not match row count");
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < C; ++j)
      if (lm.tau(k, j) != 0 && lm.tau(k, j) != 1)
        throw LabelSchemaError("non-binary entry at row " + std::to_string(k) + ", column " +
                               std::to_string(j));
  for (int j = 0; j < C; ++j) {
    bool any = false;
    for (int k = 0; k < K; ++k) any = any || lm.tau(k, j) == 1;
    if (!any)
      throw LabelSchemaError("column " + std::to_string(j) + " admits no endmember");
  }
  for (int k = 0; k < K; ++k) {
    if (lm.supervised_endmembers.count(k))
      continue;
    for (int j = 0; j < C; ++j)
      if (lm.tau(k, j) != 1)
        throw LabelSchemaError("unsupervised row " + std::to_string(k) + " is not all ones");
  }
}

void write_tau_csv(const std::string& path, const LabelMatrix& lm) {
  std::ofstream out(path);
  if (!out)
    throw DataFormatError("cannot write: " + path);
  for (int k = 0; k < lm.endmembers(); ++k) {
    if (k)
      out << ",";
    if (!lm.endmember_names.empty())
      out << lm.endmember_names[k];
    else
      out << "endmember_" << k;
  }
  out << "\n";
  for (int k = 0; k < lm.endmembers(); ++k) {
    for (int j = 0; j < lm.superpixels(); ++j) {
      if (j)
        out << ",";
      out << lm.tau(k, j);
    }
    out << "\n";
  }
}

LabelMatrix load_tau_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw DataFormatError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!trim(line).empty())
      lines.push_back(line);
  if (lines.size() < 2)
    throw DataFormatError("tau csv needs a header and at least one row: " + path);

  LabelMatrix lm;
  for (const auto& name : split(trim(lines[0]), ',')) lm.endmember_names.push_back(trim(name));
  const int K = static_cast<int>(lines.size()) - 1;
  if (static_cast<int>(lm.endmember_names.size()) != K)
    throw LabelSchemaError("tau csv header names " + std::to_string(lm.endmember_names.size()) +
                           " endmembers but has " + std::to_string(K) + " rows: " + path);
  int C = -1;
  for (int k = 0; k < K; ++k) {
    const auto cells = split(trim(lines[k + 1]), ',');
    if (C < 0) {
      C = static_cast<int>(cells.size());
      lm.tau.resize(K, C);
    }
    if (static_cast<int>(cells.size()) != C)
      throw DataFormatError("ragged tau csv: " + path);
    for (int j = 0; j < C; ++j) {
      const auto cell = trim(cells[j]);
      if (cell == "0")
        lm.tau(k, j) = 0;
      else if (cell == "1")
        lm.tau(k, j) = 1;
      else
        throw LabelSchemaError("non-binary tau entry '" + cell + "' at row " + std::to_string(k) +
                               ", column " + std::to_string(j) + ": " + path);
    }
  }
  // Rows with any zero are, by construction, the supervised ones.
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < C; ++j)
      if (lm.tau(k, j) == 0) {
        lm.supervised_endmembers.insert(k);
        break;
      }
  validate_tau(lm);
  return lm;
}

}  // namespace spmlda
