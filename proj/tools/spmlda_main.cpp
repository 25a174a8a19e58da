// Command-line pipeline: synth / segment / label / unmix / eval / render.
// Exit codes: 0 success, 2 input or format error, 3 consistency error,
// 4 internal error.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "spmlda/io.hpp"
#include "spmlda/metrics.hpp"
#include "spmlda/sampler.hpp"
#include "spmlda/slic.hpp"
#include "spmlda/supervision.hpp"
#include "spmlda/synth.hpp"

namespace fs = std::filesystem;
using namespace spmlda;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path);
  if (!out)
    throw DataFormatError("cannot write: " + path);
  for (const auto& [key, value] : entries) out << key << " = " << value << "\n";
}

std::map<std::string, std::string> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw DataFormatError("cannot open manifest: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void ensure_output_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw DataFormatError("cannot create output directory: " + dir);
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void write_proportion_pgms(const std::string& dir, const std::string& prefix,
                           const ProportionMaps& maps) {
  for (int k = 0; k < maps.endmembers(); ++k) {
    Vector values = maps.P.col(k);
    // clip sub-epsilon float noise, keep genuine range errors loud
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      if (values[i] < 0.0 && values[i] > -1e-12)
        values[i] = 0.0;
      if (values[i] > 1.0 && values[i] < 1.0 + 1e-12)
        values[i] = 1.0;
    }
    write_pgm8(join_path(dir, prefix + "_k" + std::to_string(k) + ".pgm"), maps.rows,
               maps.cols, values);
  }
}

// Common per-subcommand options.
struct CommonOpts {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string output = ".";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--seed", opts.seed, "RNG seed");
  cmd->add_option("--threads", opts.threads, "worker threads (outputs are independent of it)");
  cmd->add_option("--output", opts.output, "output directory");
  // consumed before parsing; registered so it shows in --help
  cmd->add_option("--config", "flat key=value config file; explicit flags win");
}

// Expands `--config file` into per-subcommand options appended to the arg
// list. Keys already given on the command line (or negated) are skipped, and
// keys unknown to the subcommand are ignored so one config can serve several
// pipeline stages.
std::vector<std::string> expand_config(const CLI::App& app, std::vector<std::string> args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size();) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + i);
    } else {
      ++i;
    }
  }
  if (config_path.empty() || args.empty())
    return args;

  const CLI::App* sub = nullptr;
  for (const auto* candidate : app.get_subcommands([](const CLI::App*) { return true; }))
    if (candidate->get_name() == args.front())
      sub = candidate;
  if (sub == nullptr)
    return args;

  std::ifstream in(config_path);
  if (!in)
    throw DataFormatError("cannot open config file: " + config_path);
  std::string line;
  std::vector<std::string> extra;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos)
      line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      continue;
    if (sub->get_option_no_throw("--" + key) == nullptr)
      continue;
    bool overridden = false;
    for (const auto& arg : args)
      if (arg == "--" + key || arg.rfind("--" + key + "=", 0) == 0 || arg == "--no-" + key)
        overridden = true;
    if (!overridden)
      extra.push_back("--" + key + "=" + value);
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

// ---------------------------------------------------------------------------

struct SynthOpts {
  CommonOpts common;
  int rows = 64, cols = 64, bands = 8, endmembers = 3, tile = 8;
  double sigma2 = 1e-4, alpha = 0.3, lambda = 1.0;
  int mask_endmember = -1;
  double mask_fraction = 0.5;
};

int cmd_synth(const SynthOpts& o) {
  SynthSpec spec;
  spec.rows = o.rows;
  spec.cols = o.cols;
  spec.bands = o.bands;
  spec.K = o.endmembers;
  spec.tile = o.tile;
  spec.sigma2_true = o.sigma2;
  spec.alpha_true = o.alpha;
  spec.lambda_true = o.lambda;
  spec.seed = o.common.seed;
  if (o.mask_endmember >= 0) {
    if (o.mask_endmember >= spec.K)
      throw ConsistencyError("--mask-endmember out of range");
    Eigen::MatrixXi masks = Eigen::MatrixXi::Ones(spec.K, spec.documents());
    const int masked_docs =
        static_cast<int>(o.mask_fraction * static_cast<double>(spec.documents()));
    for (int d = 0; d < masked_docs; ++d) masks(o.mask_endmember, d) = 0;
    spec.doc_masks = masks;
  }

  const SynthScene scene = generate(spec);
  const std::string& dir = o.common.output;
  ensure_output_dir(dir);
  write_cube(join_path(dir, "cube"), scene.cube, CubeFormat::envi_like);
  write_proportions_csv(join_path(dir, "truth_proportions.csv"), scene.truth);
  write_matrix_csv(join_path(dir, "truth_means.csv"), scene.endmembers.means);
  write_tau_csv(join_path(dir, "truth_tau.csv"), scene.tau);
  write_label_grid_csv(join_path(dir, "labels.csv"), scene.segmentation);

  write_manifest(join_path(dir, "manifest.txt"),
                 {{"command", "synth"},
                  {"rows", std::to_string(o.rows)},
                  {"cols", std::to_string(o.cols)},
                  {"bands", std::to_string(o.bands)},
                  {"endmembers", std::to_string(o.endmembers)},
                  {"tile", std::to_string(o.tile)},
                  {"sigma2_true", fmt(o.sigma2)},
                  {"alpha", fmt(o.alpha)},
                  {"lambda", fmt(o.lambda)},
                  {"mask_endmember", std::to_string(o.mask_endmember)},
                  {"mask_fraction", fmt(o.mask_fraction)},
                  {"seed", std::to_string(o.common.seed)}});
  return 0;
}

// ---------------------------------------------------------------------------

struct SegmentOpts {
  CommonOpts common;
  std::string cube;
  std::string polygons;
  std::string geotransform;
  bool normalize = true;
  SlicParams slic;
};

int cmd_segment(const SegmentOpts& o) {
  HsiCube cube = load_cube(o.cube, guess_cube_format(o.cube));
  int zero_pixels = 0;
  if (o.normalize) {
    NormalizeResult norm = preprocess_unit_norm(cube);
    cube = std::move(norm.cube);
    zero_pixels = norm.zero_pixels;
    if (zero_pixels > 0)
      std::cerr << "warning: " << zero_pixels << " all-zero pixel(s) left unnormalized\n";
  }

  Segmentation seg = segment(cube, o.slic);

  const std::string& dir = o.common.output;
  ensure_output_dir(dir);
  std::vector<std::pair<std::string, std::string>> manifest = {
      {"command", "segment"},
      {"cube", o.cube},
      {"cube_hash", std::to_string(content_hash(o.cube))},
      {"normalize", o.normalize ? "1" : "0"},
      {"k_target", std::to_string(o.slic.K_target)},
      {"m", fmt(o.slic.m)},
      {"max_iters", std::to_string(o.slic.max_iters)},
      {"move_tol", fmt(o.slic.move_tol)},
      {"perturb_window", std::to_string(o.slic.perturb_window)},
      {"seed", std::to_string(o.common.seed)}};

  if (!o.polygons.empty()) {
    const PolygonSet polys = load_polygons(o.polygons);
    std::optional<Geotransform> geo = cube.geo;
    if (!o.geotransform.empty())
      geo = load_world_file(o.geotransform);
    auto [merged, report] = merge_by_polygons(seg, polys, geo);
    seg = std::move(merged);
    write_merge_report_csv(join_path(dir, "merge_report.csv"), report);
    manifest.emplace_back("polygons", o.polygons);
    manifest.emplace_back("polygons_hash", std::to_string(content_hash(o.polygons)));
  }

  write_label_grid_csv(join_path(dir, "labels.csv"), seg);
  write_label_grid_pgm(join_path(dir, "labels.pgm"), seg);
  manifest.emplace_back("superpixels", std::to_string(seg.superpixel_count()));
  write_manifest(join_path(dir, "manifest.txt"), manifest);
  return 0;
}

// ---------------------------------------------------------------------------

struct LabelOpts {
  CommonOpts common;
  std::string merge_report;
  std::string labels;
  std::vector<std::string> classes;  // tag=endmember_index
  int endmembers = 0;
  int superpixels = -1;
  std::string names;
};

int cmd_label(const LabelOpts& o) {
  const MergeReport report = load_merge_report_csv(o.merge_report);
  int C = o.superpixels;
  if (C < 0) {
    if (o.labels.empty())
      throw ConsistencyError("either --superpixels or --labels is required");
    C = load_label_grid_csv(o.labels).superpixel_count();
  }

  std::map<std::string, int> mapping;
  for (const auto& entry : o.classes) {
    const auto eq = entry.find('=');
    try {
      if (eq == std::string::npos)
        throw std::invalid_argument(entry);
      mapping[entry.substr(0, eq)] = std::stoi(entry.substr(eq + 1));
    } catch (const std::exception&) {
      throw DataFormatError("--classes entries must look like tag=endmember_index: " + entry);
    }
  }

  std::map<std::string, std::set<int>> regions;
  for (const auto& [tag, ids] : report.entries)
    regions[tag] = std::set<int>(ids.begin(), ids.end());

  std::vector<std::string> names;
  if (!o.names.empty()) {
    std::string cur;
    for (char c : o.names + ",") {
      if (c == ',') {
        names.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
  }

  const LabelMatrix lm = build_tau(C, o.endmembers, regions, mapping, names);
  const std::string& dir = o.common.output;
  ensure_output_dir(dir);
  write_tau_csv(join_path(dir, "tau.csv"), lm);
  write_manifest(join_path(dir, "manifest.txt"),
                 {{"command", "label"},
                  {"merge_report", o.merge_report},
                  {"merge_report_hash", std::to_string(content_hash(o.merge_report))},
                  {"endmembers", std::to_string(o.endmembers)},
                  {"superpixels", std::to_string(C)}});
  return 0;
}

// ---------------------------------------------------------------------------

struct UnmixOpts {
  CommonOpts common;
  std::string cube;
  std::string labels;
  std::string tau;
  bool normalize = true;
  Hyperparams hyper;
  double epsilon = -1.0;
};

int cmd_unmix(const UnmixOpts& o) {
  if (o.epsilon >= 0.0)
    std::cerr << "warning: --epsilon is accepted for compatibility and ignored\n";

  HsiCube cube = load_cube(o.cube, guess_cube_format(o.cube));
  if (o.normalize) {
    NormalizeResult norm = preprocess_unit_norm(cube);
    cube = std::move(norm.cube);
    if (norm.zero_pixels > 0)
      std::cerr << "warning: " << norm.zero_pixels << " all-zero pixel(s) left unnormalized\n";
  }
  const Segmentation seg = load_label_grid_csv(o.labels);
  if (seg.rows != cube.rows || seg.cols != cube.cols)
    throw ConsistencyError("segmentation grid does not match the cube dimensions");

  Hyperparams hyper = o.hyper;
  hyper.seed = o.common.seed;

  LabelMatrix tau = o.tau.empty()
                        ? LabelMatrix::all_ones(hyper.K, seg.superpixel_count())
                        : load_tau_csv(o.tau);
  if (tau.superpixels() != seg.superpixel_count() || tau.endmembers() != hyper.K)
    throw ConsistencyError("label matrix shape does not match the segmentation and K");

  const EndmemberModel init = vca_init(cube, hyper.K, hyper.seed);
  const SamplerResult result = run_sampler(cube, seg, tau, hyper, init, o.common.threads);

  const std::string& dir = o.common.output;
  ensure_output_dir(dir);
  write_proportions_csv(join_path(dir, "proportions.csv"), result.proportions);
  write_proportion_pgms(dir, "proportions", result.proportions);
  write_matrix_csv(join_path(dir, "endmember_means.csv"), result.endmembers.means);

  {
    std::ofstream out(join_path(dir, "chain_summary.csv"));
    out << "iteration,log_density,acc_pi,acc_s,acc_z,acc_mu,acc_sigma2\n";
    const Chain& chain = result.chain;
    for (int t = 0; t < chain.log_density_trace.size(); ++t) {
      out << (t + 1) << "," << fmt(chain.log_density_trace[t]);
      for (int b = 0; b < 5; ++b) out << "," << fmt(chain.per_iteration_acceptance(t, b));
      out << "\n";
    }
  }

  write_manifest(join_path(dir, "manifest.txt"),
                 {{"command", "unmix"},
                  {"cube", o.cube},
                  {"cube_hash", std::to_string(content_hash(o.cube))},
                  {"labels", o.labels},
                  {"labels_hash", std::to_string(content_hash(o.labels))},
                  {"tau", o.tau.empty() ? "(all ones)" : o.tau},
                  {"tau_hash", o.tau.empty() ? "0" : std::to_string(content_hash(o.tau))},
                  {"normalize", o.normalize ? "1" : "0"},
                  {"K", std::to_string(hyper.K)},
                  {"alpha", fmt(hyper.alpha)},
                  {"lambda", fmt(hyper.lambda)},
                  {"T", std::to_string(hyper.T)},
                  {"burn_in_fraction", fmt(hyper.burn_in_fraction)},
                  {"seed", std::to_string(hyper.seed)},
                  {"sigma2", fmt(result.endmembers.sigma2)},
                  {"map_iteration", std::to_string(result.chain.map_iteration)},
                  {"map_log_density", fmt(result.chain.map_log_density)},
                  {"acc_pi", fmt(result.chain.acceptance_rates.pi)},
                  {"acc_s", fmt(result.chain.acceptance_rates.s)},
                  {"acc_z", fmt(result.chain.acceptance_rates.z)},
                  {"acc_mu", fmt(result.chain.acceptance_rates.mu)},
                  {"acc_sigma2", fmt(result.chain.acceptance_rates.sigma2)}});
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalOpts {
  CommonOpts common;
  std::string cube;
  std::vector<std::string> runs;
  std::string truth;
  bool timing = false;
};

int cmd_eval(const EvalOpts& o) {
  const HsiCube raw = load_cube(o.cube, guess_cube_format(o.cube));
  std::optional<Matrix> truth;
  if (!o.truth.empty())
    truth = load_proportions_csv(o.truth).P;

  ensure_output_dir(o.common.output);
  std::ofstream out(join_path(o.common.output, "metrics.csv"));
  if (!out)
    throw DataFormatError("cannot write metrics.csv");
  out << "method,entropy_total,entropy_mean,log_likelihood,proportion_mae,runtime_seconds\n";

  for (const auto& run_dir : o.runs) {
    const auto started = std::chrono::steady_clock::now();
    const ProportionMaps maps = load_proportions_csv(join_path(run_dir, "proportions.csv"));
    const Matrix means = load_matrix_csv(join_path(run_dir, "endmember_means.csv"));
    const auto manifest = read_manifest(join_path(run_dir, "manifest.txt"));
    const auto sigma2_it = manifest.find("sigma2");
    if (sigma2_it == manifest.end())
      throw ConsistencyError("run manifest lacks sigma2: " + run_dir);
    const double sigma2 = std::stod(sigma2_it->second);
    const bool normalized = manifest.count("normalize") && manifest.at("normalize") == "1";

    HsiCube cube = raw;
    if (normalized)
      cube = preprocess_unit_norm(raw).cube;
    if (maps.P.rows() != cube.data.rows())
      throw ConsistencyError("proportions do not cover the cube pixels: " + run_dir);
    if (means.cols() != cube.bands() || means.rows() != maps.P.cols())
      throw ConsistencyError("endmember means shape mismatch: " + run_dir);

    const double entropy = proportion_entropy(maps);
    const Vector sigma2s = Vector::Constant(means.rows(), sigma2);
    const double ll = ncm_log_likelihood(cube.data, means, maps, sigma2s);
    double mae = std::numeric_limits<double>::quiet_NaN();
    if (truth) {
      if (truth->rows() != maps.P.rows() || truth->cols() != maps.P.cols())
        throw ConsistencyError("truth proportions shape mismatch");
      mae = proportion_mae(maps.P, *truth);
    }
    double runtime = 0.0;
    if (o.timing) {
      runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    out << fs::path(run_dir).filename().string() << "," << fmt(entropy) << ","
        << fmt(entropy / maps.P.rows()) << "," << fmt(ll) << "," << fmt(mae) << ","
        << fmt(runtime) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct RenderOpts {
  CommonOpts common;
  std::string proportions;
  std::string prefix = "proportions";
};

int cmd_render(const RenderOpts& o) {
  const ProportionMaps maps = load_proportions_csv(o.proportions);
  ensure_output_dir(o.common.output);
  for (int k = 0; k < maps.endmembers(); ++k) {
    write_pgm8(join_path(o.common.output, o.prefix + "_k" + std::to_string(k) + ".pgm"),
               maps.rows, maps.cols, maps.P.col(k));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semi-supervised partial-membership unmixing pipeline"};
  app.require_subcommand(1);

  SynthOpts synth_opts;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic scene with ground truth");
  add_common(synth_cmd, synth_opts.common);
  synth_cmd->add_option("--rows", synth_opts.rows);
  synth_cmd->add_option("--cols", synth_opts.cols);
  synth_cmd->add_option("--bands", synth_opts.bands);
  synth_cmd->add_option("--endmembers", synth_opts.endmembers);
  synth_cmd->add_option("--tile", synth_opts.tile, "document tile side in pixels");
  synth_cmd->add_option("--sigma2", synth_opts.sigma2);
  synth_cmd->add_option("--alpha", synth_opts.alpha);
  synth_cmd->add_option("--lambda", synth_opts.lambda);
  synth_cmd->add_option("--mask-endmember", synth_opts.mask_endmember,
                        "endmember to forbid in the first masked fraction of documents");
  synth_cmd->add_option("--mask-fraction", synth_opts.mask_fraction);

  SegmentOpts seg_opts;
  auto* seg_cmd = app.add_subcommand("segment", "superpixel segmentation with optional merging");
  add_common(seg_cmd, seg_opts.common);
  seg_cmd->add_option("--cube", seg_opts.cube)->required();
  seg_cmd->add_option("--polygons", seg_opts.polygons, "GeoJSON polygons for map-guided merging");
  seg_cmd->add_option("--geotransform", seg_opts.geotransform, "world file overriding the sidecar");
  seg_cmd->add_flag("--normalize,!--no-normalize", seg_opts.normalize,
                    "unit-norm pixels before segmenting");
  seg_cmd->add_option("--k-target", seg_opts.slic.K_target);
  seg_cmd->add_option("--m", seg_opts.slic.m);
  seg_cmd->add_option("--max-iters", seg_opts.slic.max_iters);
  seg_cmd->add_option("--move-tol", seg_opts.slic.move_tol);
  seg_cmd->add_option("--perturb-window", seg_opts.slic.perturb_window);

  LabelOpts label_opts;
  auto* label_cmd = app.add_subcommand("label", "build the endmember label matrix");
  add_common(label_cmd, label_opts.common);
  label_cmd->add_option("--merge-report", label_opts.merge_report)->required();
  label_cmd->add_option("--labels", label_opts.labels, "segmentation csv, to count superpixels");
  label_cmd->add_option("--superpixels", label_opts.superpixels);
  label_cmd->add_option("--endmembers", label_opts.endmembers)->required();
  label_cmd->add_option("--classes", label_opts.classes,
                        "tag=endmember_index pairs naming supervised endmembers");
  label_cmd->add_option("--names", label_opts.names, "comma-separated endmember names");

  UnmixOpts unmix_opts;
  auto* unmix_cmd = app.add_subcommand("unmix", "run the sampler and write proportion maps");
  add_common(unmix_cmd, unmix_opts.common);
  unmix_cmd->add_option("--cube", unmix_opts.cube)->required();
  unmix_cmd->add_option("--labels", unmix_opts.labels)->required();
  unmix_cmd->add_option("--tau", unmix_opts.tau, "label matrix csv; defaults to all ones");
  unmix_cmd->add_flag("--normalize,!--no-normalize", unmix_opts.normalize,
                      "unit-norm pixels before unmixing");
  unmix_cmd->add_option("--endmembers", unmix_opts.hyper.K);
  unmix_cmd->add_option("--alpha", unmix_opts.hyper.alpha);
  unmix_cmd->add_option("--lambda", unmix_opts.hyper.lambda);
  unmix_cmd->add_option("--iters", unmix_opts.hyper.T);
  unmix_cmd->add_option("--burn-in", unmix_opts.hyper.burn_in_fraction);
  unmix_cmd->add_option("--epsilon", unmix_opts.epsilon, "accepted for compatibility, ignored");

  EvalOpts eval_opts;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate proportion maps");
  add_common(eval_cmd, eval_opts.common);
  eval_cmd->add_option("--cube", eval_opts.cube)->required();
  eval_cmd->add_option("--runs", eval_opts.runs, "run directories to score")->required();
  eval_cmd->add_option("--truth", eval_opts.truth, "ground-truth proportions csv");
  eval_cmd->add_flag("--timing", eval_opts.timing, "report wall-clock runtimes");

  RenderOpts render_opts;
  auto* render_cmd = app.add_subcommand("render", "write one pgm per endmember");
  add_common(render_cmd, render_opts.common);
  render_cmd->add_option("--proportions", render_opts.proportions)->required();
  render_cmd->add_option("--prefix", render_opts.prefix);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(app, std::move(args));
    std::vector<const char*> argv2{argv[0]};
    for (const auto& a : args) argv2.push_back(a.c_str());
    app.parse(static_cast<int>(argv2.size()), argv2.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const DataFormatError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (synth_cmd->parsed())
      return cmd_synth(synth_opts);
    if (seg_cmd->parsed())
      return cmd_segment(seg_opts);
    if (label_cmd->parsed())
      return cmd_label(label_opts);
    if (unmix_cmd->parsed())
      return cmd_unmix(unmix_opts);
    if (eval_cmd->parsed())
      return cmd_eval(eval_opts);
    if (render_cmd->parsed())
      return cmd_render(render_opts);
  } catch (const DataFormatError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const LabelSchemaError& e) {
    std::cerr << "label error: " << e.what() << "\n";
    return 2;
  } catch (const GeoAlignError& e) {
    std::cerr << "geotransform error: " << e.what() << "\n";
    return 2;
  } catch (const SegmentationError& e) {
    std::cerr << "segmentation error: " << e.what() << "\n";
    return 2;
  } catch (const ConsistencyError& e) {
    std::cerr << "consistency error: " << e.what() << "\n";
    return 3;
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
  return 4;
}
