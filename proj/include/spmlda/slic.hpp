#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spmlda/io.hpp"
#include "spmlda/types.hpp"

namespace spmlda {

struct SlicParams {
  int K_target = 500;      // requested superpixel count
  double m = 20.0;         // spatial scaling factor
  int max_iters = 10;
  double move_tol = 1e-3;  // pixel units
  int perturb_window = 3;  // odd window for the low-gradient snap

  // Grid step; throws SegmentationError when the image cannot host the grid.
  int grid_step(int rows, int cols) const;
};

struct SlicCenter {
  Vector spectrum;
  double row = 0.0;
  double col = 0.0;
};

// Centers on a regular grid of step S, each snapped within the perturbation
// window to the pixel of lowest spectral gradient (ties keep the original).
std::vector<SlicCenter> init_centers(const HsiCube& cube, const SlicParams& params);

// Combined distance d_spectral + (m/S) * d_spatial, where d_spectral is the
// sum of squared band differences and d_spatial the Euclidean pixel distance.
double slic_distance(const Vector& pixel_spectrum, double pixel_row, double pixel_col,
                     const SlicCenter& center, const SlicParams& params, int grid_step);

// Local k-means over (spectrum, position): assign within each center's 2Sx2S
// window (global nearest as fallback), update centers, repeat until centers
// move less than move_tol or max_iters; then enforce connectivity.
Segmentation segment(const HsiCube& cube, const SlicParams& params);

// Relabels every connected component that is not its superpixel's largest one
// to the neighboring label with the longest shared border, until every
// superpixel is 4-connected.
Segmentation enforce_connectivity(const Segmentation& seg);

// Even-odd test against all rings of the polygon.
bool point_in_polygon(const TaggedPolygon& poly, double x, double y);

// Superpixels with at least one pixel center inside a polygon are merged,
// transitively across polygons; labels are re-compacted. The report lists,
// per class_tag, the post-merge superpixel ids touched.
std::pair<Segmentation, MergeReport> merge_by_polygons(
    const Segmentation& seg, const PolygonSet& polys,
    const std::optional<Geotransform>& geo);

}  // namespace spmlda
