#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "waterx/assess.hpp"
#include "waterx/baselines.hpp"
#include "waterx/histogram.hpp"
#include "waterx/otsu.hpp"
#include "waterx/raster.hpp"

namespace waterx::report {

using nlohmann::ordered_json;

inline ordered_json optional_number(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

/// {method, threshold, objective, omega0, ..., v_total, bin_width, n_bins, skipped_samples}
inline ordered_json threshold(const ThresholdResult& r, const Histogram* h = nullptr) {
  ordered_json j;
  j["method"] = method_name(r.method);
  j["threshold"] = r.threshold;
  j["objective"] = r.objective;
  const auto field = [&](const char* name, auto member) {
    j[name] = r.stats ? ordered_json((*r.stats).*member) : ordered_json(nullptr);
  };
  field("omega0", &ClassStats::omega0);
  field("omega1", &ClassStats::omega1);
  field("mu0", &ClassStats::mu0);
  field("mu1", &ClassStats::mu1);
  field("mu", &ClassStats::mu);
  field("v0", &ClassStats::v0);
  field("v1", &ClassStats::v1);
  field("v_between", &ClassStats::v_between);
  field("v_total", &ClassStats::v_total);
  j["bin_width"] = h ? ordered_json(h->bin_width()) : ordered_json(nullptr);
  j["n_bins"] = h ? ordered_json(h->size()) : ordered_json(nullptr);
  j["skipped_samples"] = h ? ordered_json(h->skipped_samples()) : ordered_json(nullptr);
  return j;
}

inline ordered_json em(const EmFit& f) {
  return {{"w1", f.params.w1},         {"w2", f.params.w2},         {"mu1", f.params.mu1},
          {"mu2", f.params.mu2},       {"sigma1", f.params.sigma1}, {"sigma2", f.params.sigma2},
          {"iterations", f.iterations}, {"converged", f.converged}, {"log_likelihood", f.log_likelihood}};
}

inline ordered_json area(const AreaReport& a, double cellsize) {
  return {{"water_km2", a.water_km2},
          {"water_cells", a.water},
          {"nonwater_cells", a.nonwater},
          {"nodata_cells", a.nodata},
          {"cellsize", cellsize}};
}

inline ordered_json confusion(const ConfusionMatrix& m) {
  ordered_json j{{"tp", m.tp}, {"fn", m.fn}, {"fp", m.fp}, {"tn", m.tn}, {"n", m.n()}};
  j["accuracy"] = m.n() ? ordered_json(accuracy_of(m)) : ordered_json(nullptr);
  const ErrorRates e = m.n() ? omission_commission(m) : ErrorRates{};
  j["water_omission"] = optional_number(e.water_omission);
  j["water_commission"] = optional_number(e.water_commission);
  j["nonwater_omission"] = optional_number(e.nonwater_omission);
  j["nonwater_commission"] = optional_number(e.nonwater_commission);
  return j;
}

/// Matrix as labeled, plus the matrix before rectification when any site
/// carries the rectified flag.
inline ordered_json assessment(const std::vector<TestSite>& sites, const ClassMap& map) {
  ordered_json j;
  j["sites"] = sites.size();
  j["sampler"] = kSamplerVersion;
  j["rectified_sites"] = std::count_if(sites.begin(), sites.end(), [](const TestSite& s) { return s.rectified; });
  j["confusion"] = confusion(confusion_matrix(sites, map));
  if (j["rectified_sites"].get<long>() > 0) j["confusion_before_rectification"] = confusion(confusion_matrix(unrectified(sites), map));
  return j;
}

}  // namespace waterx::report
