// waterx: threshold selection and water mapping for dB backscatter grids.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "waterx/waterx.hpp"

namespace {

using namespace waterx;
using nlohmann::ordered_json;

struct Common {
  std::string input;
  std::string output;
  std::string mask;
  std::string report;
  std::string curve;
  std::string histogram;
  double bin_width = 0.5;
  std::string method = "otsu";
  std::optional<double> threshold;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  bool linear = false;
  bool median = false;
  int valley_window = 5;
  int em_max_iter = 200;
  double em_tol = 1e-8;
  int kmeans_restarts = 0;
};

void emit(const ordered_json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(Errc::io, "cannot write '" + path + "'");
  os << j.dump(2) << '\n';
}

Method method_of(const std::string& s) {
  auto m = parse_method(s);
  if (!m) fail(Errc::argument, "unknown method '" + s + "' (otsu, otsu-quadratic, valley, gmm, kmeans)");
  return *m;
}

SelectorOptions selector_of(const Common& c) {
  SelectorOptions o;
  o.method = method_of(c.method);
  o.valley_window = c.valley_window;
  o.em_max_iter = c.em_max_iter;
  o.em_tol = c.em_tol;
  o.kmeans_restarts = c.kmeans_restarts;
  if (o.kmeans_restarts > 0 && !c.seed) fail(Errc::argument, "--kmeans-restarts needs --seed");
  o.seed = c.seed.value_or(0);
  return o;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) fail(Errc::argument, std::string(flag) + " is required");
}

/// Input raster after the optional dB conversion, mask and median filter.
Raster prepared_raster(const Common& c) {
  require(c.input, "--input");
  Raster r = read_grid(c.input);
  if (c.linear) r = linear_to_db(r, c.threads).raster;
  if (!c.mask.empty()) r = apply_mask(r, read_class_map(c.mask));
  if (c.median) r = median_filter3(r, c.threads);
  return r;
}

Histogram histogram_of(const Raster& r, const Common& c) {
  return build_histogram_parallel(std::span<const float>(r.values), c.bin_width, static_cast<double>(r.header.nodata_value),
                                  c.threads);
}

struct Chosen {
  ThresholdResult result;
  ordered_json report;
};

Chosen choose(const Raster& r, const Common& c) {
  const Histogram h = histogram_of(r, c);
  if (!c.histogram.empty()) write_histogram_csv(h, c.histogram);
  Chosen out;
  if (c.threshold) {
    out.result.threshold = *c.threshold;
    try {
      out.result.stats = class_statistics(h, *c.threshold);
      out.result.objective = out.result.stats->v_between;
    } catch (const Error&) {
    }
    out.report = report::threshold(out.result, &h);
    out.report["method"] = "fixed";
    return out;
  }
  const Selection s = select_threshold(h, selector_of(c));
  out.result = s.result;
  out.report = report::threshold(s.result, &h);
  if (s.em) out.report["em"] = report::em(*s.em);
  if (!c.curve.empty()) {
    std::ofstream os(c.curve, std::ios::binary);
    if (!os) fail(Errc::io, "cannot write '" + c.curve + "'");
    write_curve_csv(objective_curve(h), os);
  }
  return out;
}

void add_io(CLI::App* app, Common& c) {
  app->add_option("--input,-i", c.input, "input grid");
  app->add_option("--output,-o", c.output, "output file");
  app->add_option("--threads", c.threads, "worker threads (0 = all cores)");
}

void add_selection(CLI::App* app, Common& c) {
  app->add_option("--bin-width", c.bin_width, "histogram bin width in dB")->capture_default_str();
  app->add_option("--method", c.method, "otsu|otsu-quadratic|valley|gmm|kmeans")->capture_default_str();
  app->add_option("--threshold", c.threshold, "fixed threshold in dB (skips selection)");
  app->add_option("--mask", c.mask, "class map; cells coded 1 are kept");
  app->add_option("--seed", c.seed, "seed for randomized methods");
  app->add_option("--curve", c.curve, "write the Otsu objective curve CSV");
  app->add_option("--histogram", c.histogram, "write the histogram CSV");
  app->add_option("--valley-window", c.valley_window, "smoothing window for valley picking")->capture_default_str();
  app->add_option("--em-max-iter", c.em_max_iter)->capture_default_str();
  app->add_option("--em-tol", c.em_tol)->capture_default_str();
  app->add_option("--kmeans-restarts", c.kmeans_restarts)->capture_default_str();
  app->add_flag("--linear", c.linear, "input is linear power; convert to dB first");
  app->add_flag("--median", c.median, "apply a 3x3 median filter before thresholding");
}

void add_post(CLI::App* app, PostprocessOptions& p) {
  app->add_option("--majority", p.majority_kernel, "majority kernel size (0 disables)")->capture_default_str();
  app->add_option("--majority-iters", p.majority_iterations)->capture_default_str();
  app->add_option("--min-size", p.min_size, "smallest component kept (cells)")->capture_default_str();
  app->add_option("--connectivity", p.connectivity, "4 or 8")->capture_default_str();
  app->add_flag("--boundary-clean", p.boundary_clean, "closing then opening of the water class");
}

GmmParams parse_mixture(const std::string& s) {
  std::vector<double> v;
  for (auto tok : text::split(s, ',')) {
    auto x = text::parse<double>(tok);
    if (!x) fail(Errc::argument, "bad number '" + std::string(tok) + "' in --mixture");
    v.push_back(*x);
  }
  if (v.size() != 6) fail(Errc::argument, "--mixture needs w1,w2,mu1,mu2,sigma1,sigma2");
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

int run(int argc, char** argv) {
  CLI::App app{"Water extraction from dB backscatter grids"};
  app.require_subcommand(1);
  Common c;
  PostprocessOptions post;

  auto* threshold = app.add_subcommand("threshold", "select a threshold and print its report");
  add_io(threshold, c);
  add_selection(threshold, c);
  threshold->add_option("--report", c.report, "write the report JSON here instead of stdout");

  auto* classify_cmd = app.add_subcommand("classify", "threshold a grid into a class map");
  add_io(classify_cmd, c);
  add_selection(classify_cmd, c);
  classify_cmd->add_option("--report", c.report, "threshold report JSON");

  auto* post_cmd = app.add_subcommand("postprocess", "majority filter, small-component removal, boundary clean");
  add_io(post_cmd, c);
  add_post(post_cmd, post);

  auto* area_cmd = app.add_subcommand("area", "water area of a class map");
  add_io(area_cmd, c);
  area_cmd->add_option("--report", c.report, "write the area JSON here instead of stdout");

  std::size_t n_sites = 304;
  std::string truth_path;
  auto* sample_cmd = app.add_subcommand("sample", "draw test sites from a domain map");
  add_io(sample_cmd, c);
  sample_cmd->add_option("--n", n_sites, "number of sites")->capture_default_str();
  sample_cmd->add_option("--seed", c.seed, "sampling seed")->required();
  sample_cmd->add_option("--truth", truth_path, "label sites from this truth class map");

  std::string sites_path;
  auto* assess_cmd = app.add_subcommand("assess", "confusion matrix and accuracy of a class map");
  add_io(assess_cmd, c);
  assess_cmd->add_option("--sites", sites_path, "labeled sites CSV")->required();
  assess_cmd->add_option("--report", c.report, "write the assessment JSON here instead of stdout");

  auto* synth_cmd = app.add_subcommand("synth", "synthetic fixtures");
  synth_cmd->require_subcommand(1);
  std::string mixture = "0.4,0.6,-18,-11,1.2,1.8";
  std::size_t samples = 1000000;
  std::int64_t ncols = 200, nrows = 200;
  double cellsize = 10;
  std::string geometry = "disc:100,100,50";
  auto* hist_cmd = synth_cmd->add_subcommand("hist", "histogram of mixture samples (CSV)");
  hist_cmd->add_option("--mixture", mixture, "w1,w2,mu1,mu2,sigma1,sigma2")->capture_default_str();
  hist_cmd->add_option("--samples,-n", samples)->capture_default_str();
  hist_cmd->add_option("--bin-width", c.bin_width)->capture_default_str();
  hist_cmd->add_option("--seed", c.seed)->required();
  hist_cmd->add_option("--output,-o", c.output, "CSV path");
  auto* scene_cmd = synth_cmd->add_subcommand("scene", "raster plus truth map; writes NAME.grid and NAME.truth.grid");
  scene_cmd->add_option("--mixture", mixture, "w1,w2,mu1,mu2,sigma1,sigma2")->capture_default_str();
  scene_cmd->add_option("--ncols", ncols)->capture_default_str();
  scene_cmd->add_option("--nrows", nrows)->capture_default_str();
  scene_cmd->add_option("--cellsize", cellsize)->capture_default_str();
  scene_cmd->add_option("--geometry", geometry, "disc:cx,cy,r | half-plane:nx,ny,c | blobs:cx,cy,r;...")
      ->capture_default_str();
  scene_cmd->add_option("--seed", c.seed)->required();
  scene_cmd->add_option("--output,-o", c.output, "output name (without extension)")->required();
  scene_cmd->add_option("--threads", c.threads);

  std::string config_path;
  std::string sites_opt, out_dir;
  std::optional<std::string> method_opt;
  std::optional<double> bin_width_opt;
  std::optional<unsigned> threads_opt;
  std::optional<int> majority_opt, majority_iters_opt, connectivity_opt;
  std::optional<std::int64_t> min_size_opt;
  bool boundary_opt = false, linear_opt = false, median_opt = false;
  auto* pipe_cmd = app.add_subcommand("pipeline", "run every stage and write one report");
  pipe_cmd->add_option("--config", config_path, "JSON config; flags override its keys");
  pipe_cmd->add_option("--input,-i", c.input);
  pipe_cmd->add_option("--output,-o", out_dir, "output directory");
  pipe_cmd->add_option("--report", c.report);
  pipe_cmd->add_option("--mask", c.mask);
  pipe_cmd->add_option("--sites", sites_opt);
  pipe_cmd->add_option("--method", method_opt);
  pipe_cmd->add_option("--threshold", c.threshold);
  pipe_cmd->add_option("--bin-width", bin_width_opt);
  pipe_cmd->add_option("--seed", c.seed);
  pipe_cmd->add_option("--threads", threads_opt);
  pipe_cmd->add_option("--majority", majority_opt);
  pipe_cmd->add_option("--majority-iters", majority_iters_opt);
  pipe_cmd->add_option("--min-size", min_size_opt);
  pipe_cmd->add_option("--connectivity", connectivity_opt);
  pipe_cmd->add_flag("--boundary-clean", boundary_opt);
  pipe_cmd->add_flag("--linear", linear_opt);
  pipe_cmd->add_flag("--median", median_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*threshold) {
    const Chosen ch = choose(prepared_raster(c), c);
    emit(ch.report, c.report);
  } else if (*classify_cmd) {
    require(c.output, "--output");
    const Raster r = prepared_raster(c);
    const Chosen ch = choose(r, c);
    write_grid(classify(r, ch.result.threshold, c.threads), c.output);
    if (!c.report.empty()) emit(ch.report, c.report);
  } else if (*post_cmd) {
    require(c.input, "--input");
    require(c.output, "--output");
    write_grid(postprocess(read_class_map(c.input), post, c.threads), c.output);
  } else if (*area_cmd) {
    require(c.input, "--input");
    const ClassMap m = read_class_map(c.input);
    emit(report::area(water_area(m), m.header.cellsize), c.report);
  } else if (*sample_cmd) {
    require(c.input, "--input");
    require(c.output, "--output");
    const ClassMap domain = read_class_map(c.input);
    auto sites = sample_sites(domain, n_sites, *c.seed);
    if (!truth_path.empty()) {
      const ClassMap truth = read_class_map(truth_path);
      if (!truth.header.same_grid(domain.header)) fail(Errc::grid_mismatch, "truth map grid differs from the domain grid");
      for (auto& s : sites) {
        const auto v = truth.at(s.col, s.row);
        if (v == cls::nodata) fail(Errc::label, "truth map has nodata at a sampled site");
        s.truth = v == cls::water ? Label::water : Label::nonwater;
      }
    }
    write_sites_csv(sites, c.output);
  } else if (*assess_cmd) {
    require(c.input, "--input");
    const ClassMap m = read_class_map(c.input);
    auto sites = read_sites_csv(sites_path);
    const ordered_json j = report::assessment(sites, m);
    confusion_matrix(sites, m);
    if (!c.output.empty()) write_sites_csv(sites, c.output);
    emit(j, c.report);
  } else if (*hist_cmd) {
    const Histogram h = synth_histogram(parse_mixture(mixture), samples, c.bin_width, *c.seed);
    if (c.output.empty() || c.output == "-") write_histogram_csv(h, std::cout);
    else write_histogram_csv(h, c.output);
  } else if (*scene_cmd) {
    const Scene s = synth_scene(parse_mixture(mixture), ncols, nrows, parse_geometry(geometry), cellsize, *c.seed, c.threads);
    write_grid(s.raster, c.output + ".grid");
    write_grid(s.truth, c.output + ".truth.grid");
  } else if (*pipe_cmd) {
    nlohmann::json j = nlohmann::json::object();
    if (!config_path.empty()) {
      std::ifstream is(config_path, std::ios::binary);
      if (!is) fail(Errc::config, "cannot read config '" + config_path + "'");
      try {
        is >> j;
      } catch (const nlohmann::json::exception& e) {
        fail(Errc::config, "config '" + config_path + "' is not valid JSON: " + e.what());
      }
      if (!j.is_object()) fail(Errc::config, "config must be a JSON object");
    }
    auto set = [&](const char* key, const auto& v) {
      if (v) j[key] = *v;
    };
    if (!c.input.empty()) j["input"] = c.input;
    if (!out_dir.empty()) j["output_dir"] = out_dir;
    if (!c.report.empty()) j["report"] = c.report;
    if (!c.mask.empty()) j["mask"] = c.mask;
    if (!sites_opt.empty()) j["sites"] = sites_opt;
    set("method", method_opt);
    set("threshold", c.threshold);
    set("bin_width", bin_width_opt);
    set("seed", c.seed);
    set("threads", threads_opt);
    set("majority", majority_opt);
    set("majority_iters", majority_iters_opt);
    set("min_size", min_size_opt);
    set("connectivity", connectivity_opt);
    if (boundary_opt) j["boundary_clean"] = true;
    if (linear_opt) j["linear"] = true;
    if (median_opt) j["median_filter"] = true;
    run_pipeline(PipelineConfig::from_json(j));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const waterx::Error& e) {
    std::cerr << "waterx: " << waterx::errc_name(e.code()) << ": " << e.what() << '\n';
    return waterx::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "waterx: " << e.what() << '\n';
    return 3;
  }
}
