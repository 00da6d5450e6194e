#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "waterx/assess.hpp"
#include "waterx/baselines.hpp"
#include "waterx/error.hpp"
#include "waterx/histogram.hpp"
#include "waterx/otsu.hpp"
#include "waterx/postprocess.hpp"
#include "waterx/raster.hpp"
#include "waterx/report.hpp"

namespace waterx {

struct SelectorOptions {
  Method method = Method::otsu;
  int valley_window = 5;
  int em_max_iter = 200;
  double em_tol = 1e-8;
  int kmeans_restarts = 0;
  std::uint64_t seed = 0;
};

struct Selection {
  ThresholdResult result;
  std::optional<EmFit> em;
};

inline Selection select_threshold(const Histogram& h, const SelectorOptions& o) {
  Selection s;
  switch (o.method) {
    case Method::otsu: s.result = otsu_linear(h); break;
    case Method::otsu_quadratic: s.result = otsu_quadratic(h); break;
    case Method::valley: s.result = valley_threshold(h, o.valley_window); break;
    case Method::kmeans: s.result = kmeans2_threshold(h, o.seed, o.kmeans_restarts).result; break;
    case Method::gmm: {
      s.em = em_fit(h, o.em_max_iter, o.em_tol);
      s.result = gmm_bayes_threshold(s.em->params);
      try {
        s.result.stats = class_statistics(h, s.result.threshold);
      } catch (const Error&) {
      }
      break;
    }
  }
  return s;
}

/// One JSON document; CLI flags override its keys.
struct PipelineConfig {
  std::string input;
  std::string output_dir;
  std::optional<std::string> report;  // default <output_dir>/report.json
  std::optional<std::string> mask;
  std::optional<std::string> sites;
  bool linear = false;
  bool median_filter = false;
  double bin_width = 0.5;
  std::optional<double> threshold;  // fixed threshold, skips selection
  SelectorOptions selector;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  PostprocessOptions post;

  static PipelineConfig from_json(const nlohmann::json& j) {
    PipelineConfig c;
    if (!j.is_object()) fail(Errc::config, "pipeline config must be a JSON object");
    static const std::vector<std::string> known = {
        "input", "output_dir", "report", "mask", "sites", "linear", "median_filter", "bin_width", "threshold", "method",
        "valley_window", "em_max_iter", "em_tol", "kmeans_restarts", "seed", "threads", "majority", "majority_iters",
        "min_size", "connectivity", "boundary_clean"};
    for (const auto& [key, _] : j.items())
      if (std::find(known.begin(), known.end(), key) == known.end()) fail(Errc::config, "unknown config key '" + key + "'");
    try {
      auto str = [&](const char* k, auto& dst) {
        if (j.contains(k) && !j[k].is_null()) dst = j[k].get<std::string>();
      };
      str("input", c.input);
      str("output_dir", c.output_dir);
      str("report", c.report);
      str("mask", c.mask);
      str("sites", c.sites);
      auto get = [&](const char* k, auto& dst) {
        if (j.contains(k) && !j[k].is_null()) dst = j[k].get<std::decay_t<decltype(dst)>>();
      };
      get("linear", c.linear);
      get("median_filter", c.median_filter);
      get("bin_width", c.bin_width);
      if (j.contains("threshold") && !j["threshold"].is_null()) c.threshold = j["threshold"].get<double>();
      if (j.contains("method")) {
        auto m = parse_method(j["method"].get<std::string>());
        if (!m) fail(Errc::config, "unknown method '" + j["method"].get<std::string>() + "'");
        c.selector.method = *m;
      }
      get("valley_window", c.selector.valley_window);
      get("em_max_iter", c.selector.em_max_iter);
      get("em_tol", c.selector.em_tol);
      get("kmeans_restarts", c.selector.kmeans_restarts);
      if (j.contains("seed") && !j["seed"].is_null()) c.seed = j["seed"].get<std::uint64_t>();
      get("threads", c.threads);
      get("majority", c.post.majority_kernel);
      get("majority_iters", c.post.majority_iterations);
      get("min_size", c.post.min_size);
      get("connectivity", c.post.connectivity);
      get("boundary_clean", c.post.boundary_clean);
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::config, std::string("bad config value: ") + e.what());
    }
    return c;
  }

  void validate() const {
    if (input.empty()) fail(Errc::config, "pipeline config needs an input raster");
    if (output_dir.empty()) fail(Errc::config, "pipeline config needs an output directory");
    if (!(bin_width > 0)) fail(Errc::config, "bin_width must be positive");
    if (selector.kmeans_restarts > 0 && !seed) fail(Errc::config, "kmeans restarts need an explicit seed");
  }

  nlohmann::ordered_json to_json() const {
    auto opt = [](const auto& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr); };
    return {{"input", input},
            {"output_dir", output_dir},
            {"mask", opt(mask)},
            {"sites", opt(sites)},
            {"linear", linear},
            {"median_filter", median_filter},
            {"bin_width", bin_width},
            {"threshold", opt(threshold)},
            {"method", method_name(selector.method)},
            {"valley_window", selector.valley_window},
            {"em_max_iter", selector.em_max_iter},
            {"em_tol", selector.em_tol},
            {"kmeans_restarts", selector.kmeans_restarts},
            {"seed", opt(seed)},
            {"majority", post.majority_kernel},
            {"majority_iters", post.majority_iterations},
            {"min_size", post.min_size},
            {"connectivity", post.connectivity},
            {"boundary_clean", post.boundary_clean}};
  }
};

/// Error raised by run_pipeline; the message names the failing stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.code(), "stage '" + stage + "': " + cause.what()), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// read -> [linear-to-dB] -> [mask] -> [median] -> histogram -> threshold ->
/// classify -> postprocess -> area -> [assessment]. Every intermediate is
/// written to output_dir, and the aggregated report to config.report. On a
/// stage failure the report is still written, flagged partial, and a
/// StageError is thrown.
inline nlohmann::ordered_json run_pipeline(const PipelineConfig& config) {
  config.validate();
  namespace fs = std::filesystem;
  const fs::path out_dir(config.output_dir);
  const std::string report_path = config.report.value_or((out_dir / "report.json").string());
  const unsigned threads = config.threads;

  nlohmann::ordered_json rep;
  rep["status"] = "running";
  rep["config"] = config.to_json();
  std::vector<std::string> outputs;
  std::string stage = "setup";

  auto write_report = [&] {
    rep["outputs"] = outputs;
    std::ofstream os(report_path, std::ios::binary);
    if (!os) fail(Errc::io, "cannot write report '" + report_path + "'");
    os << rep.dump(2) << '\n';
  };
  auto artifact = [&](const std::string& name) {
    const std::string p = (out_dir / name).string();
    outputs.push_back(name);
    return p;
  };

  try {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) fail(Errc::io, "cannot create output directory '" + config.output_dir + "'");

    stage = "read";
    Raster raster = read_grid(config.input);
    raster.validate();
    rep["input"] = {{"ncols", raster.header.ncols}, {"nrows", raster.header.nrows}, {"cellsize", raster.header.cellsize}};

    if (config.linear) {
      stage = "linear-to-db";
      auto conv = linear_to_db(raster, threads);
      raster = std::move(conv.raster);
      rep["db_conversion"] = {{"nonpositive_cells", conv.nonpositive}, {"nodata_cells", conv.nodata}};
    }
    std::optional<ClassMap> mask;
    if (config.mask) {
      stage = "mask";
      mask = read_class_map(*config.mask);
      raster = apply_mask(raster, *mask);
    }
    if (config.median_filter) {
      stage = "median-filter";
      raster = median_filter3(raster, threads);
    }

    stage = "histogram";
    const Histogram hist = build_histogram_parallel(std::span<const float>(raster.values), config.bin_width,
                                                    static_cast<double>(raster.header.nodata_value), threads);
    write_histogram_csv(hist, artifact("histogram.csv"));

    stage = "threshold";
    ThresholdResult chosen;
    if (config.threshold) {
      chosen.threshold = *config.threshold;
      chosen.method = config.selector.method;
      try {
        chosen.stats = class_statistics(hist, chosen.threshold);
        chosen.objective = chosen.stats->v_between;
      } catch (const Error&) {
      }
      rep["threshold"] = report::threshold(chosen, &hist);
      rep["threshold"]["method"] = "fixed";
    } else {
      SelectorOptions sel = config.selector;
      sel.seed = config.seed.value_or(0);
      const Selection s = select_threshold(hist, sel);
      chosen = s.result;
      rep["threshold"] = report::threshold(chosen, &hist);
      if (s.em) rep["em"] = report::em(*s.em);
      if (chosen.method == Method::otsu || chosen.method == Method::otsu_quadratic) {
        std::ofstream os(artifact("curve.csv"), std::ios::binary);
        write_curve_csv(objective_curve(hist), os);
      }
    }

    stage = "classify";
    ClassMap map = classify(raster, chosen.threshold, threads);
    write_grid(map, artifact("classified.grid"));
    rep["area_before_postprocess"] = report::area(water_area(map), map.header.cellsize);

    stage = "postprocess";
    map = postprocess(map, config.post, threads);
    write_grid(map, artifact("final.grid"));

    stage = "area";
    rep["area"] = report::area(water_area(map), map.header.cellsize);

    if (config.sites) {
      stage = "assess";
      auto sites = read_sites_csv(*config.sites);
      rep["assessment"] = report::assessment(sites, map);
      confusion_matrix(sites, map);
      write_sites_csv(sites, artifact("sites_assessed.csv"));
    }
    rep["status"] = "ok";
    stage = "report";
    write_report();
  } catch (const Error& e) {
    rep["status"] = "failed";
    rep["partial"] = true;
    rep["failed_stage"] = stage;
    rep["error"] = e.what();
    try {
      write_report();
    } catch (const Error&) {
    }
    throw StageError(stage, e);
  }
  return rep;
}

}  // namespace waterx
