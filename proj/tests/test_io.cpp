#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spmlda/io.hpp"
#include "spmlda/metrics.hpp"
#include "test_util.hpp"

using namespace spmlda;
using testutil::TempDir;

TEST_CASE("csv cube round-trips known values") {
  TempDir dir("io_csv");
  const std::string path = dir.file("tiny.csv");
  testutil::write_text(path,
                       "2,2,3\n"
                       "0.1,0.2,0.3\n"
                       "1,2,3\n"
                       "4,5,6\n"
                       "7,8,9.5\n");
  const HsiCube cube = load_cube(path, CubeFormat::csv);
  CHECK(cube.rows == 2);
  CHECK(cube.cols == 2);
  CHECK(cube.bands() == 3);
  CHECK(cube.data(0, 0) == 0.1);
  CHECK(cube.data(0, 2) == 0.3);
  CHECK(cube.data(3, 2) == 9.5);

  const std::string out = dir.file("tiny_out.csv");
  write_cube(out, cube, CubeFormat::csv);
  const HsiCube again = load_cube(out, CubeFormat::csv);
  CHECK((again.data.array() == cube.data.array()).all());
}

TEST_CASE("envi payload size mismatch is rejected") {
  TempDir dir("io_envi_bad");
  const std::string payload = dir.file("bad.raw");
  testutil::write_text(payload + ".hdr",
                       "samples = 2\nlines = 2\nbands = 1\ninterleave = bsq\ndtype = float32\n");
  // header declares 4 pixels, payload holds 3 floats
  std::ofstream out(payload, std::ios::binary);
  const float vals[3] = {1.f, 2.f, 3.f};
  out.write(reinterpret_cast<const char*>(vals), sizeof(vals));
  out.close();
  CHECK_THROWS_AS(load_cube(payload, CubeFormat::envi_like), DataFormatError);
}

TEST_CASE("non-finite cube values are rejected") {
  TempDir dir("io_nonfinite");
  const std::string path = dir.file("nan.csv");
  testutil::write_text(path, "1,1,2\nnan,1\n");
  CHECK_THROWS_AS(load_cube(path, CubeFormat::csv), DataFormatError);
}

TEST_CASE("envi write-load-write is byte-identical on random cubes") {
  TempDir dir("io_envi_rt");
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    HsiCube cube = testutil::random_cube(3 + seed % 4, 5, 4, seed);
    const std::string a = dir.file("a.raw");
    const std::string b = dir.file("b.raw");
    write_cube(a, cube, CubeFormat::envi_like);
    const HsiCube loaded = load_cube(a, CubeFormat::envi_like);
    write_cube(b, loaded, CubeFormat::envi_like);
    CHECK(testutil::read_bytes(a) == testutil::read_bytes(b));
    CHECK(testutil::read_bytes(a + ".hdr") == testutil::read_bytes(b + ".hdr"));
  }
}

TEST_CASE("envi interleaves agree") {
  TempDir dir("io_interleave");
  // One 2x2x2 cube, written by hand in bil and bip, must match the bsq read.
  const HsiCube cube = [] {
    HsiCube c;
    c.rows = 2;
    c.cols = 2;
    c.data.resize(4, 2);
    c.data << 1, 5, 2, 6, 3, 7, 4, 8;  // pixel p has bands (p+1, p+5)
    return c;
  }();
  const std::string bsq = dir.file("c.raw");
  write_cube(bsq, cube, CubeFormat::envi_like);

  auto write_hand = [&](const std::string& path, const std::string& interleave,
                        const std::vector<float>& vals) {
    testutil::write_text(path + ".hdr", "samples = 2\nlines = 2\nbands = 2\ninterleave = " +
                                            interleave + "\ndtype = float32\n");
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(vals.data()),
              static_cast<std::streamsize>(vals.size() * sizeof(float)));
  };
  // bil: row, band, col ; bip: row, col, band
  write_hand(dir.file("bil.raw"), "bil", {1, 2, 5, 6, 3, 4, 7, 8});
  write_hand(dir.file("bip.raw"), "bip", {1, 5, 2, 6, 3, 7, 4, 8});

  const HsiCube from_bsq = load_cube(bsq, CubeFormat::envi_like);
  const HsiCube from_bil = load_cube(dir.file("bil.raw"), CubeFormat::envi_like);
  const HsiCube from_bip = load_cube(dir.file("bip.raw"), CubeFormat::envi_like);
  CHECK((from_bsq.data.array() == cube.data.array()).all());
  CHECK((from_bil.data.array() == cube.data.array()).all());
  CHECK((from_bip.data.array() == cube.data.array()).all());
}

TEST_CASE("unit norm preprocessing") {
  HsiCube cube;
  cube.rows = 1;
  cube.cols = 3;
  cube.data.resize(3, 2);
  cube.data << 3, 4, 0.6, 0.8, 0, 0;

  const NormalizeResult res = preprocess_unit_norm(cube);
  CHECK(res.zero_pixels == 1);
  CHECK(res.cube.data(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(res.cube.data(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
  // already-unit pixel unchanged up to rounding
  CHECK(res.cube.data(1, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(res.cube.data(2, 0) == 0.0);
  CHECK(res.cube.data(2, 1) == 0.0);

  // idempotence within 1e-9
  const NormalizeResult twice = preprocess_unit_norm(res.cube);
  CHECK((twice.cube.data - res.cube.data).cwiseAbs().maxCoeff() < 1e-9);
  for (Eigen::Index p = 0; p < 2; ++p)
    CHECK(res.cube.data.row(p).norm() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("geojson polygons") {
  TempDir dir("io_geojson");
  const std::string path = dir.file("polys.json");

  SUBCASE("single tagged square") {
    testutil::write_text(path, R"({"type":"FeatureCollection","features":[
      {"type":"Feature","properties":{"class_tag":"blue_roof"},
       "geometry":{"type":"Polygon","coordinates":[[[0,0],[4,0],[4,4],[0,4],[0,0]]]}}]})");
    const PolygonSet set = load_polygons(path);
    REQUIRE(set.size() == 1);
    CHECK(set.polygons[0].class_tag == "blue_roof");
    CHECK(set.polygons[0].rings.size() == 1);
    CHECK(set.polygons[0].rings[0].pts.size() == 5);
  }

  SUBCASE("multipolygon parts share the tag") {
    testutil::write_text(path, R"({"type":"FeatureCollection","features":[
      {"type":"Feature","properties":{"class_tag":"red_roof"},
       "geometry":{"type":"MultiPolygon","coordinates":[
         [[[0,0],[1,0],[1,1],[0,1],[0,0]]],
         [[[5,5],[6,5],[6,6],[5,6],[5,5]]]]}}]})");
    const PolygonSet set = load_polygons(path);
    REQUIRE(set.size() == 2);
    CHECK(set.polygons[0].class_tag == "red_roof");
    CHECK(set.polygons[1].class_tag == "red_roof");
  }

  SUBCASE("missing class_tag") {
    testutil::write_text(path, R"({"type":"FeatureCollection","features":[
      {"type":"Feature","properties":{},
       "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}}]})");
    CHECK_THROWS_AS(load_polygons(path), LabelSchemaError);
  }

  SUBCASE("unclosed ring") {
    testutil::write_text(path, R"({"type":"FeatureCollection","features":[
      {"type":"Feature","properties":{"class_tag":"a"},
       "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1]]]}}]})");
    CHECK_THROWS_AS(load_polygons(path), DataFormatError);
  }
}

TEST_CASE("geotransform mapping and inversion") {
  Geotransform identity;
  auto [px, py] = identity.world_to_pixel(5.0, 7.0);
  CHECK(px == 5.0);
  CHECK(py == 7.0);

  Geotransform scale2;
  scale2.g = {0.0, 2.0, 0.0, 0.0, 0.0, 2.0};
  auto [cx, cy] = scale2.world_to_pixel(10.0, 4.0);
  CHECK(cx == 5.0);
  CHECK(cy == 2.0);

  Geotransform degenerate;
  degenerate.g = {0.0, 0.0, 0.0, 0.0, 0.0, 1.0};
  CHECK_THROWS_AS(degenerate.world_to_pixel(1.0, 1.0), GeoAlignError);

  // round-trip within 1e-9 on an affine with skew
  Geotransform skew;
  skew.g = {100.0, 1.5, 0.25, -40.0, -0.1, 2.0};
  RngStream rng(11, RngBlock::init, 0);
  for (int i = 0; i < 100; ++i) {
    const double col = rng.uniform01() * 100.0;
    const double row = rng.uniform01() * 100.0;
    auto [wx, wy] = skew.pixel_to_world(col, row);
    auto [bc, br] = skew.world_to_pixel(wx, wy);
    CHECK(std::abs(bc - col) < 1e-9);
    CHECK(std::abs(br - row) < 1e-9);
  }
}

TEST_CASE("geotransform sidecar travels with the cube") {
  TempDir dir("io_sidecar");
  HsiCube cube = testutil::random_cube(3, 3, 2, 17);
  Geotransform gt;
  gt.g = {100.0, 0.5, 0.0, 200.0, 0.0, -0.5};
  cube.geo = gt;
  write_cube(dir.file("c.raw"), cube, CubeFormat::envi_like);
  const HsiCube back = load_cube(dir.file("c.raw"), CubeFormat::envi_like);
  REQUIRE(back.geo.has_value());
  for (int i = 0; i < 6; ++i) CHECK(back.geo->g[i] == gt.g[i]);
}

TEST_CASE("world file round-trip") {
  TempDir dir("io_world");
  Geotransform gt;
  gt.g = {12.5, 0.5, 0.0, -3.0, 0.0, -0.5};
  write_world_file(dir.file("x.wld"), gt);
  const Geotransform back = load_world_file(dir.file("x.wld"));
  for (int i = 0; i < 6; ++i) CHECK(back.g[i] == gt.g[i]);
}

TEST_CASE("label grid csv round-trip") {
  TempDir dir("io_labels");
  Eigen::VectorXi labels(6);
  labels << 0, 0, 1, 1, 2, 2;
  const Segmentation seg = Segmentation::from_labels(2, 3, labels);
  write_label_grid_csv(dir.file("labels.csv"), seg);
  const Segmentation back = load_label_grid_csv(dir.file("labels.csv"));
  CHECK(back.rows == 2);
  CHECK(back.cols == 3);
  CHECK((back.labels.array() == seg.labels.array()).all());
  CHECK(back.superpixel_count() == 3);
}

TEST_CASE("proportions csv round-trip") {
  TempDir dir("io_props");
  ProportionMaps maps;
  maps.rows = 2;
  maps.cols = 2;
  maps.P.resize(4, 3);
  maps.P << 0.2, 0.3, 0.5, 1, 0, 0, 0.25, 0.25, 0.5, 1.0 / 3, 1.0 / 3, 1.0 / 3;
  write_proportions_csv(dir.file("p.csv"), maps);
  const ProportionMaps back = load_proportions_csv(dir.file("p.csv"));
  CHECK(back.rows == 2);
  CHECK(back.cols == 2);
  CHECK((back.P.array() == maps.P.array()).all());
}

TEST_CASE("pgm8 write and read quantization") {
  TempDir dir("io_pgm");
  Vector values(4);
  values << 0.0, 0.5, 1.0, 0.25;
  write_pgm8(dir.file("v.pgm"), 2, 2, values);
  int rows = 0, cols = 0;
  const Vector back = read_pgm(dir.file("v.pgm"), rows, cols);
  CHECK(rows == 2);
  CHECK(cols == 2);
  CHECK(back[0] == 0.0);
  CHECK(back[1] == doctest::Approx(128.0 / 255.0));  // round half up
  CHECK(back[2] == 1.0);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(back[i] - values[i]) <= 1.0 / 255.0);

  Vector bad(1);
  bad << 1.5;
  CHECK_THROWS_AS(write_pgm8(dir.file("bad.pgm"), 1, 1, bad), ModelError);
}

TEST_CASE("merge report csv round-trip") {
  TempDir dir("io_merge");
  MergeReport report;
  report.entries.emplace_back("blue_roof", std::vector<int>{3, 5});
  report.entries.emplace_back("offmap", std::vector<int>{});
  write_merge_report_csv(dir.file("m.csv"), report);
  const MergeReport back = load_merge_report_csv(dir.file("m.csv"));
  REQUIRE(back.entries.size() == 2);
  CHECK(back.entries[0].first == "blue_roof");
  CHECK(back.entries[0].second == std::vector<int>{3, 5});
  CHECK(back.entries[1].first == "offmap");
  CHECK(back.entries[1].second.empty());
}

TEST_CASE("content hash is stable and input-sensitive") {
  TempDir dir("io_hash");
  testutil::write_text(dir.file("a"), "hello");
  testutil::write_text(dir.file("b"), "hello");
  testutil::write_text(dir.file("c"), "hellp");
  CHECK(content_hash(dir.file("a")) == content_hash(dir.file("b")));
  CHECK(content_hash(dir.file("a")) != content_hash(dir.file("c")));
}
