#include "spmlda/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "spmlda/metrics.hpp"

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

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != trim(s).size() && pos != s.size())
      throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataFormatError("cannot parse number '" + s + "' in " + where);
  }
}

long parse_long(const std::string& s, const std::string& where) {
  try {
    return std::stol(s);
  } catch (const std::exception&) {
    throw DataFormatError("cannot parse integer '" + s + "' in " + where);
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw DataFormatError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

struct EnviHeader {
  int samples = 0;
  int lines = 0;
  int bands = 0;
  std::string interleave = "bsq";
  std::string dtype = "float32";
};

EnviHeader read_envi_header(const std::string& hdr_path) {
  EnviHeader h;
  bool have_samples = false, have_lines = false, have_bands = false;
  for (const auto& raw : read_lines(hdr_path)) {
    const auto line = trim(raw);
    if (line.empty() || line[0] == '#')
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      continue;
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "samples") {
      h.samples = static_cast<int>(parse_long(value, hdr_path));
      have_samples = true;
    } else if (key == "lines") {
      h.lines = static_cast<int>(parse_long(value, hdr_path));
      have_lines = true;
    } else if (key == "bands") {
      h.bands = static_cast<int>(parse_long(value, hdr_path));
      have_bands = true;
    } else if (key == "interleave") {
      h.interleave = value;
    } else if (key == "dtype") {
      h.dtype = value;
    }
  }
  if (!have_samples || !have_lines || !have_bands)
    throw DataFormatError("header missing samples/lines/bands: " + hdr_path);
  if (h.samples <= 0 || h.lines <= 0 || h.bands <= 0)
    throw DataFormatError("header declares non-positive dimensions: " + hdr_path);
  if (h.interleave != "bsq" && h.interleave != "bil" && h.interleave != "bip")
    throw DataFormatError("unsupported interleave '" + h.interleave + "' in " + hdr_path);
  if (h.dtype != "float32")
    throw DataFormatError("unsupported dtype '" + h.dtype + "' in " + hdr_path);
  return h;
}

void check_finite(const HsiCube& cube, const std::string& path) {
  if (!cube.data.allFinite())
    throw DataFormatError("non-finite value in cube: " + path);
}

HsiCube load_cube_envi(const std::string& path) {
  const auto h = read_envi_header(path + ".hdr");
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataFormatError("cannot open payload: " + path);
  in.seekg(0, std::ios::end);
  const auto payload_bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  const std::size_t n = static_cast<std::size_t>(h.samples) * h.lines * h.bands;
  if (payload_bytes != n * sizeof(float))
    throw DataFormatError("payload size does not match header dimensions: " + path);
  std::vector<float> raw(n);
  // payload is little-endian float32; a little-endian host is assumed
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (!in)
    throw DataFormatError("short read on payload: " + path);

  HsiCube cube;
  cube.rows = h.lines;
  cube.cols = h.samples;
  cube.data.resize(static_cast<Eigen::Index>(cube.rows) * cube.cols, h.bands);
  const int R = h.lines, C = h.samples, B = h.bands;
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      const Eigen::Index p = static_cast<Eigen::Index>(r) * C + c;
      for (int b = 0; b < B; ++b) {
        std::size_t idx;
        if (h.interleave == "bsq")
          idx = (static_cast<std::size_t>(b) * R + r) * C + c;
        else if (h.interleave == "bil")
          idx = (static_cast<std::size_t>(r) * B + b) * C + c;
        else  // bip
          idx = (static_cast<std::size_t>(r) * C + c) * B + b;
        cube.data(p, b) = static_cast<double>(raw[idx]);
      }
    }
  }
  check_finite(cube, path);

  std::ifstream wld(path + ".wld");
  if (wld)
    cube.geo = load_world_file(path + ".wld");
  return cube;
}

HsiCube load_cube_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty())
    throw DataFormatError("empty cube csv: " + path);
  const auto dims = split(trim(lines[0]), ',');
  if (dims.size() != 3)
    throw DataFormatError("cube csv first line must be rows,cols,bands: " + path);
  HsiCube cube;
  cube.rows = static_cast<int>(parse_long(dims[0], path));
  cube.cols = static_cast<int>(parse_long(dims[1], path));
  const int bands = static_cast<int>(parse_long(dims[2], path));
  if (cube.rows <= 0 || cube.cols <= 0 || bands <= 0)
    throw DataFormatError("cube csv declares non-positive dimensions: " + path);
  const int n = cube.rows * cube.cols;
  if (static_cast<int>(lines.size()) < n + 1)
    throw DataFormatError("cube csv has fewer pixel lines than rows*cols: " + path);
  cube.data.resize(n, bands);
  for (int p = 0; p < n; ++p) {
    const auto vals = split(trim(lines[p + 1]), ',');
    if (static_cast<int>(vals.size()) != bands)
      throw DataFormatError("cube csv pixel line has wrong band count: " + path);
    for (int b = 0; b < bands; ++b) cube.data(p, b) = parse_double(vals[b], path);
  }
  check_finite(cube, path);
  return cube;
}

}  // namespace

CubeFormat guess_cube_format(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv")
    return CubeFormat::csv;
  return CubeFormat::envi_like;
}

HsiCube load_cube(const std::string& path, CubeFormat format) {
  return format == CubeFormat::csv ? load_cube_csv(path) : load_cube_envi(path);
}

void write_cube(const std::string& path, const HsiCube& cube, CubeFormat format) {
  if (cube.data.rows() != static_cast<Eigen::Index>(cube.rows) * cube.cols)
    throw ConsistencyError("cube data length does not match rows*cols");
  if (format == CubeFormat::csv) {
    std::ofstream out(path);
    if (!out)
      throw DataFormatError("cannot write: " + path);
    out << cube.rows << "," << cube.cols << "," << cube.bands() << "\n";
    for (Eigen::Index p = 0; p < cube.data.rows(); ++p) {
      for (int b = 0; b < cube.bands(); ++b) {
        if (b)
          out << ",";
        out << format_double(cube.data(p, b));
      }
      out << "\n";
    }
    return;
  }
  // Canonical envi-like output: bsq float32 little-endian.
  {
    std::ofstream hdr(path + ".hdr");
    if (!hdr)
      throw DataFormatError("cannot write: " + path + ".hdr");
    hdr << "samples = " << cube.cols << "\n"
        << "lines = " << cube.rows << "\n"
        << "bands = " << cube.bands() << "\n"
        << "interleave = bsq\n"
        << "dtype = float32\n";
  }
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw DataFormatError("cannot write: " + path);
  const int R = cube.rows, C = cube.cols, B = cube.bands();
  std::vector<float> raw(static_cast<std::size_t>(R) * C * B);
  for (int b = 0; b < B; ++b)
    for (int r = 0; r < R; ++r)
      for (int c = 0; c < C; ++c)
        raw[(static_cast<std::size_t>(b) * R + r) * C + c] =
            static_cast<float>(cube.data(static_cast<Eigen::Index>(r) * C + c, b));
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (cube.geo)
    write_world_file(path + ".wld", *cube.geo);
}

NormalizeResult preprocess_unit_norm(const HsiCube& cube) {
  NormalizeResult res;
  res.cube = cube;
  for (Eigen::Index p = 0; p < res.cube.data.rows(); ++p) {
    const double norm = res.cube.data.row(p).norm();
    if (norm == 0.0)
      ++res.zero_pixels;
    else
      res.cube.data.row(p) /= norm;
  }
  return res;
}

PolygonSet load_polygons(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw DataFormatError("cannot open file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataFormatError("invalid GeoJSON in " + path + ": " + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array())
    throw DataFormatError("expected a GeoJSON FeatureCollection: " + path);

  auto parse_ring = [&](const nlohmann::json& jring) {
    PolygonRing ring;
    if (!jring.is_array() || jring.size() < 4)
      throw DataFormatError("polygon ring needs at least 3 vertices plus closure: " + path);
    for (const auto& pt : jring) {
      if (!pt.is_array() || pt.size() < 2)
        throw DataFormatError("malformed ring coordinate in " + path);
      ring.pts.push_back({pt[0].get<double>(), pt[1].get<double>()});
    }
    if (ring.pts.front() != ring.pts.back())
      throw DataFormatError("unclosed polygon ring in " + path);
    return ring;
  };

  PolygonSet set;
  for (const auto& feature : doc["features"]) {
    if (!feature.is_object() || !feature.contains("geometry") || !feature["geometry"].is_object())
      throw DataFormatError("feature without geometry in " + path);
    if (!feature.contains("properties") || !feature["properties"].is_object() ||
        !feature["properties"].contains("class_tag") ||
        !feature["properties"]["class_tag"].is_string())
      throw LabelSchemaError("feature missing class_tag property in " + path);
    const std::string tag = feature["properties"]["class_tag"].get<std::string>();
    const auto& geom = feature["geometry"];
    const std::string type = geom.value("type", "");
    if (!geom.contains("coordinates"))
      throw DataFormatError("geometry without coordinates in " + path);
    if (type == "Polygon") {
      TaggedPolygon poly;
      poly.class_tag = tag;
      for (const auto& jring : geom["coordinates"]) poly.rings.push_back(parse_ring(jring));
      if (poly.rings.empty())
        throw DataFormatError("Polygon with no rings in " + path);
      set.polygons.push_back(std::move(poly));
    } else if (type == "MultiPolygon") {
      for (const auto& part : geom["coordinates"]) {
        TaggedPolygon poly;
        poly.class_tag = tag;
        for (const auto& jring : part) poly.rings.push_back(parse_ring(jring));
        if (poly.rings.empty())
          throw DataFormatError("MultiPolygon part with no rings in " + path);
        set.polygons.push_back(std::move(poly));
      }
    } else {
      throw DataFormatError("unsupported geometry type '" + type + "' in " + path);
    }
  }
  return set;
}

Geotransform load_world_file(const std::string& path) {
  const auto lines = read_lines(path);
  std::vector<double> vals;
  for (const auto& line : lines) {
    const auto t = trim(line);
    if (!t.empty())
      vals.push_back(parse_double(t, path));
  }
  if (vals.size() != 6)
    throw DataFormatError("world file must contain exactly 6 numbers: " + path);
  Geotransform gt;
  std::copy(vals.begin(), vals.end(), gt.g.begin());
  return gt;
}

void write_world_file(const std::string& path, const Geotransform& gt) {
  std::ofstream out(path);
  if (!out)
    throw DataFormatError("cannot write: " + path);
  for (double v : gt.g) out << format_double(v) << "\n";
}

Segmentation Segmentation::from_labels(int rows, int cols, Eigen::VectorXi labels) {
  if (labels.size() != static_cast<Eigen::Index>(rows) * cols)
    throw ConsistencyError("label vector length does not match rows*cols");
  Segmentation seg;
  seg.rows = rows;
  seg.cols = cols;
  seg.labels = std::move(labels);
  int max_label = -1;
  for (Eigen::Index i = 0; i < seg.labels.size(); ++i) {
    if (seg.labels[i] < 0)
      throw ConsistencyError("negative superpixel label");
    max_label = std::max(max_label, seg.labels[i]);
  }
  seg.members.assign(max_label + 1, {});
  for (Eigen::Index i = 0; i < seg.labels.size(); ++i)
    seg.members[seg.labels[i]].push_back(static_cast<int>(i));
  return seg;
}

void write_label_grid_csv(const std::string& path, const Segmentation& seg) {
  std::ofstream out(path);
  if (!out)
    throw DataFormatError("cannot write: " + path);
  for (int r = 0; r < seg.rows; ++r) {
    for (int c = 0; c < seg.cols; ++c) {
      if (c)
        out << ",";
      out << seg.labels[static_cast<Eigen::Index>(r) * seg.cols + c];
    }
    out << "\n";
  }
}

Segmentation load_label_grid_csv(const std::string& path) {
  const auto lines = read_lines(path);
  std::vector<std::vector<int>> grid;
  for (const auto& line : lines) {
    if (trim(line).empty())
      continue;
    std::vector<int> row;
    for (const auto& cell : split(trim(line), ','))
      row.push_back(static_cast<int>(parse_long(cell, path)));
    grid.push_back(std::move(row));
  }
  if (grid.empty())
    throw DataFormatError("empty label grid: " + path);
  const int rows = static_cast<int>(grid.size());
  const int cols = static_cast<int>(grid[0].size());
  Eigen::VectorXi labels(static_cast<Eigen::Index>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(grid[r].size()) != cols)
      throw DataFormatError("ragged label grid: " + path);
    for (int c = 0; c < cols; ++c) labels[static_cast<Eigen::Index>(r) * cols + c] = grid[r][c];
  }
  return Segmentation::from_labels(rows, cols, std::move(labels));
}

void write_label_grid_pgm(const std::string& path, const Segmentation& seg) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw DataFormatError("cannot write: " + path);
  // 16-bit samples with labels stretched across the full range, so any
  // viewer shows distinct superpixels.
  const int top = std::max(1, seg.superpixel_count() - 1);
  out << "P5\n" << seg.cols << " " << seg.rows << "\n65535\n";
  for (Eigen::Index i = 0; i < seg.labels.size(); ++i) {
    const long v = static_cast<long>(seg.labels[i]) * 65535L / top;
    out.put(static_cast<char>((v >> 8) & 0xff));
    out.put(static_cast<char>(v & 0xff));
  }
}

void write_merge_report_csv(const std::string& path, const MergeReport& report) {
  std::ofstream out(path);
  if (!out)
    throw DataFormatError("cannot write: " + path);
  out << "class_tag,superpixel_id\n";
  for (const auto& [tag, ids] : report.entries) {
    if (ids.empty()) {
      out << tag << ",\n";
    } else {
      for (int id : ids) out << tag << "," << id << "\n";
    }
  }
}

MergeReport load_merge_report_csv(const std::string& path) {
  const auto lines = read_lines(path);
  MergeReport report;
  auto find_entry = [&](const std::string& tag) -> std::vector<int>& {
    for (auto& [t, ids] : report.entries)
      if (t == tag)
        return ids;
    report.entries.emplace_back(tag, std::vector<int>{});
    return report.entries.back().second;
  };
  for (std::size_t i = 1; i < lines.size(); ++i) {  // skip header
    const auto line = trim(lines[i]);
    if (line.empty())
      continue;
    const auto cells = split(line, ',');
    if (cells.size() != 2)
      throw DataFormatError("merge report row needs 2 columns: " + path);
    auto& ids = find_entry(trim(cells[0]));
    const auto id_str = trim(cells[1]);
    if (!id_str.empty())
      ids.push_back(static_cast<int>(parse_long(id_str, path)));
  }
  return report;
}

void write_proportions_csv(const std::string& path, const ProportionMaps& maps) {
  std::ofstream out(path);
  if (!out)
    throw DataFormatError("cannot write: " + path);
  out << maps.rows << "," << maps.cols << "," << maps.P.cols() << "\n";
  for (Eigen::Index n = 0; n < maps.P.rows(); ++n) {
    for (Eigen::Index k = 0; k < maps.P.cols(); ++k) {
      if (k)
        out << ",";
      out << format_double(maps.P(n, k));
    }
    out << "\n";
  }
}

ProportionMaps load_proportions_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty())
    throw DataFormatError("empty proportions csv: " + path);
  const auto dims = split(trim(lines[0]), ',');
  if (dims.size() != 3)
    throw DataFormatError("proportions csv first line must be rows,cols,K: " + path);
  ProportionMaps maps;
  maps.rows = static_cast<int>(parse_long(dims[0], path));
  maps.cols = static_cast<int>(parse_long(dims[1], path));
  const int K = static_cast<int>(parse_long(dims[2], path));
  const Eigen::Index n = static_cast<Eigen::Index>(maps.rows) * maps.cols;
  if (static_cast<Eigen::Index>(lines.size()) < n + 1)
    throw DataFormatError("proportions csv has fewer lines than rows*cols: " + path);
  maps.P.resize(n, K);
  for (Eigen::Index p = 0; p < n; ++p) {
    const auto vals = split(trim(lines[p + 1]), ',');
    if (static_cast<int>(vals.size()) != K)
      throw DataFormatError("proportions csv row has wrong width: " + path);
    for (int k = 0; k < K; ++k) maps.P(p, k) = parse_double(vals[k], path);
  }
  return maps;
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out)
    throw DataFormatError("cannot write: " + path);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c)
        out << ",";
      out << format_double(m(r, c));
    }
    out << "\n";
  }
}

Matrix load_matrix_csv(const std::string& path) {
  const auto lines = read_lines(path);
  std::vector<std::vector<double>> rows;
  for (const auto& line : lines) {
    const auto t = trim(line);
    if (t.empty())
      continue;
    std::vector<double> row;
    for (const auto& cell : split(t, ',')) row.push_back(parse_double(cell, path));
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw DataFormatError("empty matrix csv: " + path);
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size())
      throw DataFormatError("ragged matrix csv: " + path);
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

void write_pgm8(const std::string& path, int rows, int cols, const Vector& values) {
  if (values.size() != static_cast<Eigen::Index>(rows) * cols)
    throw ConsistencyError("pgm value count does not match rows*cols");
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw DataFormatError("cannot write: " + path);
  out << "P5\n" << cols << " " << rows << "\n255\n";
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!(v >= 0.0 && v <= 1.0))
      throw ModelError("pgm value outside [0,1]");
    out.put(static_cast<char>(static_cast<int>(std::floor(255.0 * v + 0.5))));
  }
}

Vector read_pgm(const std::string& path, int& rows, int& cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataFormatError("cannot open file: " + path);
  auto next_token = [&]() {
    std::string tok;
    for (;;) {
      int c = in.get();
      if (c == EOF)
        throw DataFormatError("truncated pgm header: " + path);
      if (c == '#') {
        while (c != EOF && c != '\n') c = in.get();
        continue;
      }
      if (std::isspace(c)) {
        if (!tok.empty())
          return tok;
        continue;
      }
      tok.push_back(static_cast<char>(c));
    }
  };
  if (next_token() != "P5")
    throw DataFormatError("expected binary pgm (P5): " + path);
  cols = static_cast<int>(parse_long(next_token(), path));
  rows = static_cast<int>(parse_long(next_token(), path));
  const int maxval = static_cast<int>(parse_long(next_token(), path));
  if (maxval <= 0 || maxval > 65535)
    throw DataFormatError("bad pgm maxval: " + path);
  const int bytes = maxval > 255 ? 2 : 1;
  Vector values(static_cast<Eigen::Index>(rows) * cols);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    int v = in.get();
    if (bytes == 2) {
      const int lo = in.get();
      v = (v << 8) | lo;
    }
    if (!in)
      throw DataFormatError("truncated pgm payload: " + path);
    values[i] = static_cast<double>(v) / maxval;
  }
  return values;
}

std::uint64_t content_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataFormatError("cannot open file: " + path);
  std::uint64_t h = 1469598103934665603ull;
  char buf[8192];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in)
      break;
  }
  return h;
}

}  // namespace spmlda
