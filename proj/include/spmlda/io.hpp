#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "spmlda/types.hpp"

namespace spmlda {

enum class CubeFormat { envi_like, csv };

// Raster IO. The envi-like layout is a raw little-endian float32 payload at
// `path` plus a text header at `path + ".hdr"` (samples / lines / bands /
// interleave / dtype). A world file at `path + ".wld"` (six numbers) supplies
// the geotransform when present. CSV is for tiny fixtures: first line
// "rows,cols,bands", then one line of B values per pixel in scan order.
HsiCube load_cube(const std::string& path, CubeFormat format);
void write_cube(const std::string& path, const HsiCube& cube, CubeFormat format);

// Guesses csv from a ".csv" suffix, envi-like otherwise.
CubeFormat guess_cube_format(const std::string& path);

struct NormalizeResult {
  HsiCube cube;
  int zero_pixels = 0;  // pixels left untouched because their norm was zero
};

// Scales every nonzero pixel spectrum to unit Euclidean norm. Idempotent.
NormalizeResult preprocess_unit_norm(const HsiCube& cube);

// GeoJSON subset: FeatureCollection of Polygon / MultiPolygon features, each
// carrying a "class_tag" property. MultiPolygon parts become separate entries
// sharing the tag.
PolygonSet load_polygons(const std::string& path);

Geotransform load_world_file(const std::string& path);
void write_world_file(const std::string& path, const Geotransform& gt);

// Segmentation label grid as CSV (one line per image row) and 16-bit PGM.
void write_label_grid_csv(const std::string& path, const Segmentation& seg);
Segmentation load_label_grid_csv(const std::string& path);
void write_label_grid_pgm(const std::string& path, const Segmentation& seg);

// Merge report rows (class_tag, superpixel_id).
struct MergeReport {
  // tag -> post-merge superpixel ids (empty when the polygon missed the image)
  std::vector<std::pair<std::string, std::vector<int>>> entries;
};
void write_merge_report_csv(const std::string& path, const MergeReport& report);
MergeReport load_merge_report_csv(const std::string& path);

// Proportion maps: header "rows,cols,K", then one line of K values per pixel.
struct ProportionMaps;
void write_proportions_csv(const std::string& path, const ProportionMaps& maps);
ProportionMaps load_proportions_csv(const std::string& path);

// Plain numeric matrix CSV (endmember means and friends).
void write_matrix_csv(const std::string& path, const Matrix& m);
Matrix load_matrix_csv(const std::string& path);

// 8-bit binary PGM, value = round(255 * p) half-up; p must lie in [0,1].
void write_pgm8(const std::string& path, int rows, int cols, const Vector& values);
// Reads 8- or 16-bit binary PGM into values scaled back to [0,1].
Vector read_pgm(const std::string& path, int& rows, int& cols);

// FNV-1a over file bytes, for run manifests.
std::uint64_t content_hash(const std::string& path);

}  // namespace spmlda
