#include "spmlda/slic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>

namespace spmlda {

namespace {

// Gradient at p: squared norms of the horizontal and vertical central
// differences, summed over bands. Undefined (infinite) at image borders.
double spectral_gradient(const HsiCube& cube, int row, int col) {
  if (row <= 0 || row >= cube.rows - 1 || col <= 0 || col >= cube.cols - 1)
    return std::numeric_limits<double>::infinity();
  const auto right = cube.spectrum(row, col + 1);
  const auto left = cube.spectrum(row, col - 1);
  const auto down = cube.spectrum(row + 1, col);
  const auto up = cube.spectrum(row - 1, col);
  return (right - left).squaredNorm() + (down - up).squaredNorm();
}

struct UnionFind {
  std::vector<int> parent;

  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

  int find(int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }

  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b)
      return;
    if (a > b)
      std::swap(a, b);  // keep the smaller id as root, for determinism
    parent[b] = a;
  }
};

Segmentation compact_labels(int rows, int cols, const Eigen::VectorXi& raw) {
  std::map<int, int> remap;
  for (Eigen::Index i = 0; i < raw.size(); ++i) remap.emplace(raw[i], 0);
  int next = 0;
  for (auto& [old_label, new_label] : remap) new_label = next++;
  Eigen::VectorXi labels(raw.size());
  for (Eigen::Index i = 0; i < raw.size(); ++i) labels[i] = remap.at(raw[i]);
  return Segmentation::from_labels(rows, cols, std::move(labels));
}

}  // namespace

int SlicParams::grid_step(int rows, int cols) const {
  if (K_target < 1)
    throw SegmentationError("K_target must be at least 1");
  const double pixels = static_cast<double>(rows) * cols;
  const int S = static_cast<int>(std::llround(std::sqrt(pixels / K_target)));
  if (S < 1)
    throw SegmentationError("image too small for requested superpixel count");
  if (K_target > rows * cols)
    throw SegmentationError("more superpixels requested than pixels");
  return S;
}

std::vector<SlicCenter> init_centers(const HsiCube& cube, const SlicParams& params) {
  params.grid_step(cube.rows, cube.cols);  // validates image vs K_target
  // Grid cell counts follow the image aspect so ny*nx lands near K_target.
  const double aspect = static_cast<double>(cube.rows) / cube.cols;
  int ny = static_cast<int>(std::llround(std::sqrt(params.K_target * aspect)));
  ny = std::min(cube.rows, std::max(1, ny));
  int nx = static_cast<int>(std::llround(static_cast<double>(params.K_target) / ny));
  nx = std::min(cube.cols, std::max(1, nx));
  const double step_y = static_cast<double>(cube.rows) / ny;
  const double step_x = static_cast<double>(cube.cols) / nx;

  const int half = std::max(0, params.perturb_window / 2);
  std::vector<SlicCenter> centers;
  centers.reserve(static_cast<std::size_t>(nx) * ny);
  for (int gy = 0; gy < ny; ++gy) {
    for (int gx = 0; gx < nx; ++gx) {
      int row = std::min(cube.rows - 1, static_cast<int>((gy + 0.5) * step_y));
      int col = std::min(cube.cols - 1, static_cast<int>((gx + 0.5) * step_x));
      // Snap to the lowest-gradient pixel nearby; strict < keeps the
      // original position on ties.
      double best = spectral_gradient(cube, row, col);
      int best_row = row, best_col = col;
      for (int dr = -half; dr <= half; ++dr) {
        for (int dc = -half; dc <= half; ++dc) {
          const int r = row + dr, c = col + dc;
          if (r < 0 || r >= cube.rows || c < 0 || c >= cube.cols)
            continue;
          const double g = spectral_gradient(cube, r, c);
          if (g < best) {
            best = g;
            best_row = r;
            best_col = c;
          }
        }
      }
      SlicCenter center;
      center.spectrum = cube.spectrum(best_row, best_col).transpose();
      center.row = best_row;
      center.col = best_col;
      centers.push_back(std::move(center));
    }
  }
  return centers;
}

double slic_distance(const Vector& pixel_spectrum, double pixel_row, double pixel_col,
                     const SlicCenter& center, const SlicParams& params, int grid_step) {
  if (pixel_spectrum.size() != center.spectrum.size())
    throw DataFormatError("band count mismatch in slic distance");
  const double d_spectral = (pixel_spectrum - center.spectrum).squaredNorm();
  const double dy = pixel_row - center.row;
  const double dx = pixel_col - center.col;
  const double d_spatial = std::sqrt(dy * dy + dx * dx);
  return d_spectral + (params.m / grid_step) * d_spatial;
}

Segmentation segment(const HsiCube& cube, const SlicParams& params) {
  const int S = params.grid_step(cube.rows, cube.cols);
  auto centers = init_centers(cube, params);
  const int C = static_cast<int>(centers.size());
  const Eigen::Index N = static_cast<Eigen::Index>(cube.rows) * cube.cols;

  Eigen::VectorXi labels = Eigen::VectorXi::Constant(N, -1);
  Vector best_dist(N);

  for (int iter = 0; iter < params.max_iters; ++iter) {
    // Seed every pixel with its previous center so a pass can only lower the
    // total objective under the current centers.
    best_dist.setConstant(std::numeric_limits<double>::infinity());
    if (iter > 0) {
      for (Eigen::Index p = 0; p < N; ++p) {
        const int r = static_cast<int>(p / cube.cols);
        const int c = static_cast<int>(p % cube.cols);
        best_dist[p] = slic_distance(cube.data.row(p).transpose(), r, c, centers[labels[p]],
                                     params, S);
      }
    } else {
      labels.setConstant(-1);
    }

    // Windowed assignment: each center claims pixels in its 2Sx2S square.
    // Iterating centers in index order makes the lowest index win ties.
    for (int k = 0; k < C; ++k) {
      const int r0 = std::max(0, static_cast<int>(std::floor(centers[k].row)) - S);
      const int r1 = std::min(cube.rows - 1, static_cast<int>(std::floor(centers[k].row)) + S);
      const int c0 = std::max(0, static_cast<int>(std::floor(centers[k].col)) - S);
      const int c1 = std::min(cube.cols - 1, static_cast<int>(std::floor(centers[k].col)) + S);
      for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
          const Eigen::Index p = static_cast<Eigen::Index>(r) * cube.cols + c;
          const double d = slic_distance(cube.data.row(p).transpose(), r, c, centers[k],
                                         params, S);
          if (d < best_dist[p]) {
            best_dist[p] = d;
            labels[p] = k;
          }
        }
      }
    }

    // Pixels outside every window fall back to the nearest center globally.
    for (Eigen::Index p = 0; p < N; ++p) {
      if (labels[p] >= 0)
        continue;
      const int r = static_cast<int>(p / cube.cols);
      const int c = static_cast<int>(p % cube.cols);
      for (int k = 0; k < C; ++k) {
        const double d = slic_distance(cube.data.row(p).transpose(), r, c, centers[k],
                                       params, S);
        if (d < best_dist[p]) {
          best_dist[p] = d;
          labels[p] = k;
        }
      }
    }

    // Recompute centers as the spectral and spatial means of their pixels.
    Matrix spec_sum = Matrix::Zero(C, cube.bands());
    Vector row_sum = Vector::Zero(C), col_sum = Vector::Zero(C);
    Eigen::VectorXi count = Eigen::VectorXi::Zero(C);
    for (Eigen::Index p = 0; p < N; ++p) {
      const int k = labels[p];
      spec_sum.row(k) += cube.data.row(p);
      row_sum[k] += static_cast<double>(p / cube.cols);
      col_sum[k] += static_cast<double>(p % cube.cols);
      ++count[k];
    }
    double max_move = 0.0;
    for (int k = 0; k < C; ++k) {
      if (count[k] == 0)
        continue;  // empty cluster keeps its previous center
      SlicCenter updated;
      updated.spectrum = (spec_sum.row(k) / count[k]).transpose();
      updated.row = row_sum[k] / count[k];
      updated.col = col_sum[k] / count[k];
      const double dy = updated.row - centers[k].row;
      const double dx = updated.col - centers[k].col;
      max_move = std::max(max_move, std::sqrt(dy * dy + dx * dx));
      centers[k] = std::move(updated);
    }
    if (max_move < params.move_tol)
      break;
  }

  return enforce_connectivity(compact_labels(cube.rows, cube.cols, labels));
}

Segmentation enforce_connectivity(const Segmentation& seg) {
  const int rows = seg.rows, cols = seg.cols;
  const Eigen::Index N = static_cast<Eigen::Index>(rows) * cols;
  Eigen::VectorXi labels = seg.labels;

  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};

  // One pass: flood-fill all components, pick each label's largest component
  // (ties by smallest first pixel), then relabel the component whose first
  // pixel comes earliest in scan order into its widest-border neighbor.
  // Every relabel merges components, so the loop terminates.
  for (;;) {
    Eigen::VectorXi comp = Eigen::VectorXi::Constant(N, -1);
    std::vector<int> comp_label, comp_size, comp_first;
    int n_comp = 0;
    for (Eigen::Index start = 0; start < N; ++start) {
      if (comp[start] >= 0)
        continue;
      const int id = n_comp++;
      comp_label.push_back(labels[start]);
      comp_size.push_back(0);
      comp_first.push_back(static_cast<int>(start));
      std::deque<Eigen::Index> queue{start};
      comp[start] = id;
      while (!queue.empty()) {
        const Eigen::Index p = queue.front();
        queue.pop_front();
        ++comp_size[id];
        const int r = static_cast<int>(p / cols), c = static_cast<int>(p % cols);
        for (int d = 0; d < 4; ++d) {
          const int rr = r + dr[d], cc = c + dc[d];
          if (rr < 0 || rr >= rows || cc < 0 || cc >= cols)
            continue;
          const Eigen::Index q = static_cast<Eigen::Index>(rr) * cols + cc;
          if (comp[q] < 0 && labels[q] == labels[start]) {
            comp[q] = id;
            queue.push_back(q);
          }
        }
      }
    }

    std::map<int, int> keeper;  // label -> component id of its largest piece
    for (int id = 0; id < n_comp; ++id) {
      const auto it = keeper.find(comp_label[id]);
      if (it == keeper.end() || comp_size[id] > comp_size[it->second] ||
          (comp_size[id] == comp_size[it->second] && comp_first[id] < comp_first[it->second]))
        keeper[comp_label[id]] = id;
    }

    int orphan = -1;
    for (int id = 0; id < n_comp; ++id) {
      if (keeper.at(comp_label[id]) == id)
        continue;
      if (orphan < 0 || comp_first[id] < comp_first[orphan])
        orphan = id;
    }
    if (orphan < 0)
      break;  // every superpixel is a single component

    // Count the shared border with each neighboring label.
    std::map<int, int> border;
    for (Eigen::Index p = 0; p < N; ++p) {
      if (comp[p] != orphan)
        continue;
      const int r = static_cast<int>(p / cols), c = static_cast<int>(p % cols);
      for (int d = 0; d < 4; ++d) {
        const int rr = r + dr[d], cc = c + dc[d];
        if (rr < 0 || rr >= rows || cc < 0 || cc >= cols)
          continue;
        const Eigen::Index q = static_cast<Eigen::Index>(rr) * cols + cc;
        if (comp[q] != orphan)
          ++border[labels[q]];
      }
    }
    int target = -1, best = -1;
    for (const auto& [label, count] : border) {
      if (count > best) {
        best = count;
        target = label;
      }
    }
    if (target < 0)
      break;  // single-component image; nothing to merge into
    for (Eigen::Index p = 0; p < N; ++p)
      if (comp[p] == orphan)
        labels[p] = target;
  }

  return compact_labels(rows, cols, labels);
}

bool point_in_polygon(const TaggedPolygon& poly, double x, double y) {
  bool inside = false;
  for (const auto& ring : poly.rings) {
    const auto& pts = ring.pts;
    for (std::size_t i = 0, j = pts.size() - 1; i < pts.size(); j = i++) {
      const double xi = pts[i][0], yi = pts[i][1];
      const double xj = pts[j][0], yj = pts[j][1];
      if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi)
        inside = !inside;
    }
  }
  return inside;
}

std::pair<Segmentation, MergeReport> merge_by_polygons(
    const Segmentation& seg, const PolygonSet& polys,
    const std::optional<Geotransform>& geo) {
  const int C = seg.superpixel_count();
  UnionFind uf(C);

  // Superpixels overlapped by each polygon, by pixel-center test.
  std::vector<std::vector<int>> overlaps(polys.polygons.size());
  for (std::size_t pi = 0; pi < polys.polygons.size(); ++pi) {
    std::vector<bool> hit(C, false);
    for (Eigen::Index p = 0; p < seg.labels.size(); ++p) {
      const double row = static_cast<double>(p / seg.cols);
      const double col = static_cast<double>(p % seg.cols);
      double x = col, y = row;
      if (geo)
        std::tie(x, y) = geo->pixel_to_world(col, row);
      if (point_in_polygon(polys.polygons[pi], x, y))
        hit[seg.labels[p]] = true;
    }
    for (int c = 0; c < C; ++c)
      if (hit[c])
        overlaps[pi].push_back(c);
    for (std::size_t i = 1; i < overlaps[pi].size(); ++i)
      uf.unite(overlaps[pi][0], overlaps[pi][i]);
  }

  // Compact merged roots to 0..C'-1 in order of smallest original label.
  std::map<int, int> root_to_new;
  for (int c = 0; c < C; ++c) root_to_new.emplace(uf.find(c), 0);
  int next = 0;
  for (auto& [root, fresh] : root_to_new) fresh = next++;

  Eigen::VectorXi labels(seg.labels.size());
  for (Eigen::Index p = 0; p < seg.labels.size(); ++p)
    labels[p] = root_to_new.at(uf.find(seg.labels[p]));
  auto merged = Segmentation::from_labels(seg.rows, seg.cols, std::move(labels));

  MergeReport report;
  auto entry_for = [&](const std::string& tag) -> std::vector<int>& {
    for (auto& [t, ids] : report.entries)
      if (t == tag)
        return ids;
    report.entries.emplace_back(tag, std::vector<int>{});
    return report.entries.back().second;
  };
  for (std::size_t pi = 0; pi < polys.polygons.size(); ++pi) {
    auto& ids = entry_for(polys.polygons[pi].class_tag);
    for (int old_label : overlaps[pi]) {
      const int fresh = root_to_new.at(uf.find(old_label));
      if (std::find(ids.begin(), ids.end(), fresh) == ids.end())
        ids.push_back(fresh);
    }
    std::sort(ids.begin(), ids.end());
  }
  return {std::move(merged), std::move(report)};
}

}  // namespace spmlda
