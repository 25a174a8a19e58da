#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spmlda {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Pixel spectra live in rows; keep each spectrum contiguous.
using PixelMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Error taxonomy. The CLI maps these onto exit codes (2 input/format,
// 3 consistency, 4 internal).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataFormatError : Error { using Error::Error; };
struct LabelSchemaError : Error { using Error::Error; };
struct GeoAlignError : Error { using Error::Error; };
struct SegmentationError : Error { using Error::Error; };
struct ModelError : Error { using Error::Error; };
struct ConsistencyError : Error { using Error::Error; };

// Affine map pixel (col,row) -> world (x,y):
//   x = g[0] + g[1]*col + g[2]*row
//   y = g[3] + g[4]*col + g[5]*row
// Stored on disk as six numbers, one per line, in this order.
struct Geotransform {
  std::array<double, 6> g{0.0, 1.0, 0.0, 0.0, 0.0, 1.0};

  double det() const { return g[1] * g[5] - g[2] * g[4]; }

  std::pair<double, double> pixel_to_world(double col, double row) const {
    return {g[0] + g[1] * col + g[2] * row, g[3] + g[4] * col + g[5] * row};
  }

  // Exact affine inverse of pixel_to_world.
  std::pair<double, double> world_to_pixel(double x, double y) const {
    const double d = det();
    if (d == 0.0)
      throw GeoAlignError("geotransform is singular; cannot invert");
    const double u = x - g[0];
    const double v = y - g[3];
    return {(g[5] * u - g[2] * v) / d, (g[1] * v - g[4] * u) / d};
  }
};

inline std::pair<double, double> world_to_pixel(const Geotransform& gt, double x, double y) {
  return gt.world_to_pixel(x, y);
}
inline std::pair<double, double> pixel_to_world(const Geotransform& gt, double col, double row) {
  return gt.pixel_to_world(col, row);
}

// A hyperspectral reflectance raster. data holds one spectrum per row in
// row-major pixel scan order (pixel n = row*cols + col).
struct HsiCube {
  int rows = 0;
  int cols = 0;
  PixelMatrix data;  // (rows*cols) x bands
  std::optional<Geotransform> geo;

  int bands() const { return static_cast<int>(data.cols()); }
  int pixels() const { return rows * cols; }
  int pixel_index(int row, int col) const { return row * cols + col; }

  auto spectrum(int n) const { return data.row(n); }
  auto spectrum(int row, int col) const { return data.row(pixel_index(row, col)); }
};

// A polygon ring is a closed loop: front() == back().
struct PolygonRing {
  std::vector<std::array<double, 2>> pts;
};

struct TaggedPolygon {
  std::string class_tag;
  std::vector<PolygonRing> rings;  // first ring outer, rest holes (even-odd rule)
};

struct PolygonSet {
  std::vector<TaggedPolygon> polygons;

  std::size_t size() const { return polygons.size(); }
};

// A pixel -> superpixel map. Superpixels play the role of documents.
struct Segmentation {
  int rows = 0;
  int cols = 0;
  Eigen::VectorXi labels;                 // rows*cols, values in [0, C)
  std::vector<std::vector<int>> members;  // per-superpixel pixel indices, ascending

  int superpixel_count() const { return static_cast<int>(members.size()); }

  // Rebuilds member lists from a label vector and checks the partition.
  static Segmentation from_labels(int rows, int cols, Eigen::VectorXi labels);
};

}  // namespace spmlda
