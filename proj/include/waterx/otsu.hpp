#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "waterx/error.hpp"
#include "waterx/histogram.hpp"
#include "waterx/numeric.hpp"

namespace waterx {

enum class Method { otsu, otsu_quadratic, valley, gmm, kmeans };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::otsu: return "otsu";
    case Method::otsu_quadratic: return "otsu-quadratic";
    case Method::valley: return "valley";
    case Method::gmm: return "gmm";
    case Method::kmeans: return "kmeans";
  }
  return "unknown";
}

inline std::optional<Method> parse_method(const std::string& s) {
  for (Method m : {Method::otsu, Method::otsu_quadratic, Method::valley, Method::gmm, Method::kmeans})
    if (s == method_name(m)) return m;
  return std::nullopt;
}

/// Two-cluster variance decomposition of a histogram. C0 holds bins below
/// the threshold, C1 the rest. v0 and v1 are mass-weighted (not normalized
/// by the cluster mass), so v_total == v0 + v1 + v_between.
struct ClassStats {
  double omega0 = 0, omega1 = 0;
  double mu0 = 0, mu1 = 0, mu = 0;
  double v0 = 0, v1 = 0;
  double v_between = 0;
  double v_total = 0;

  double v_within() const noexcept { return v0 + v1; }
};

struct ThresholdResult {
  double threshold = 0;  // x is water iff x < threshold
  double objective = 0;
  Method method = Method::otsu;
  std::optional<ClassStats> stats;
  std::optional<std::size_t> bin_index;  // set when threshold is a bin value
};

/// Candidates within this relative margin of the incumbent count as ties, so
/// rounding noise cannot make the two Otsu routes pick different bins.
inline constexpr double kTieTolerance = 1e-12;

inline bool strictly_better(double candidate, double incumbent) {
  return candidate > incumbent + kTieTolerance * std::abs(incumbent);
}

namespace detail {

inline void require_bipartition(const Histogram& h) {
  if (h.nonzero_bins() < 2) fail(Errc::degenerate, "histogram needs at least two nonzero bins for a bipartition");
}

/// Decomposition for C0 = bins [0, split), C1 = bins [split, n), each sum
/// taken from scratch in ascending bin order.
inline ClassStats stats_at_split(const Histogram& h, std::size_t split) {
  const std::size_t n = h.size();
  CompensatedSum c0, c1;
  for (std::size_t i = 0; i < n; ++i) (i < split ? c0 : c1) += h.count(i);
  if (c0.value() <= 0.0 || c1.value() <= 0.0) fail(Errc::degenerate, "threshold leaves one cluster empty");

  const double total = h.total_count();
  CompensatedSum w0, w1, m0, m1, m;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = h.count(i) / total;
    const double px = p * h.value(i);
    if (i < split) {
      w0 += p;
      m0 += px;
    } else {
      w1 += p;
      m1 += px;
    }
    m += px;
  }
  ClassStats s;
  s.omega0 = w0.value();
  s.omega1 = w1.value();
  s.mu0 = m0.value() / s.omega0;
  s.mu1 = m1.value() / s.omega1;
  s.mu = m.value();

  CompensatedSum v0, v1, v;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = h.count(i) / total;
    const double x = h.value(i);
    const double d = x - (i < split ? s.mu0 : s.mu1);
    (i < split ? v0 : v1) += p * d * d;
    v += p * (x - s.mu) * (x - s.mu);
  }
  s.v0 = v0.value();
  s.v1 = v1.value();
  s.v_total = v.value();
  s.v_between = s.omega0 * (s.mu0 - s.mu) * (s.mu0 - s.mu) + s.omega1 * (s.mu1 - s.mu) * (s.mu1 - s.mu);
  return s;
}

inline std::size_t split_for_threshold(const Histogram& h, double threshold) {
  std::size_t split = 0;
  while (split < h.size() && h.value(split) < threshold) ++split;
  return split;
}

/// Single ascending pass over the candidate thresholds using running mass
/// and first-moment sums; calls visit(split, v_between) for every candidate
/// that leaves both clusters with mass.
template <typename Visit>
void scan_candidates(const Histogram& h, Visit&& visit) {
  const std::size_t n = h.size();
  const double total = h.total_count();
  CompensatedSum mass_all, moment_all;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = h.count(i) / total;
    mass_all += p;
    moment_all += p * h.value(i);
  }
  const double mass = mass_all.value();
  const double mu = moment_all.value();

  CompensatedSum c0, w0, m0;
  for (std::size_t split = 1; split < n; ++split) {
    const double p = h.count(split - 1) / total;
    c0 += h.count(split - 1);
    w0 += p;
    m0 += p * h.value(split - 1);
    const double count0 = c0.value();
    if (count0 <= 0.0 || count0 >= total) continue;
    const double omega0 = w0.value();
    const double omega1 = mass - omega0;
    const double mu0 = m0.value() / omega0;
    const double mu1 = (mu - m0.value()) / omega1;
    visit(split, omega0 * (mu0 - mu) * (mu0 - mu) + omega1 * (mu1 - mu) * (mu1 - mu));
  }
}

inline ThresholdResult make_result(const Histogram& h, std::size_t split, double objective, Method method) {
  ThresholdResult r;
  r.threshold = h.value(split);
  r.objective = objective;
  r.method = method;
  r.stats = stats_at_split(h, split);
  r.bin_index = split;
  return r;
}

}  // namespace detail

/// Full decomposition for the split "value < threshold".
inline ClassStats class_statistics(const Histogram& h, double threshold) {
  return detail::stats_at_split(h, detail::split_for_threshold(h, threshold));
}

/// Exhaustive reference: every candidate's objective is recomputed from
/// scratch, O(n^2). Ties resolve to the smallest threshold.
inline ThresholdResult otsu_quadratic(const Histogram& h) {
  detail::require_bipartition(h);
  const std::size_t n = h.size();
  const double total = h.total_count();
  std::vector<double> p(n), px(n);
  for (std::size_t j = 0; j < n; ++j) {
    p[j] = h.count(j) / total;
    px[j] = p[j] * h.value(j);
  }
  std::optional<std::size_t> best;
  double best_value = 0.0;
  for (std::size_t split = 1; split < n; ++split) {
    CompensatedSum c0, w0, w1, m0, m1;
    for (std::size_t j = 0; j < n; ++j) {
      if (j < split) {
        c0 += h.count(j);
        w0 += p[j];
        m0 += px[j];
      } else {
        w1 += p[j];
        m1 += px[j];
      }
    }
    if (c0.value() <= 0.0 || c0.value() >= total) continue;
    const double mu = m0.value() + m1.value();
    const double mu0 = m0.value() / w0.value();
    const double mu1 = m1.value() / w1.value();
    const double current = w0.value() * (mu0 - mu) * (mu0 - mu) + w1.value() * (mu1 - mu) * (mu1 - mu);
    if (!best || strictly_better(current, best_value)) {
      best = split;
      best_value = current;
    }
  }
  ThresholdResult r = detail::make_result(h, *best, best_value, Method::otsu_quadratic);
  return r;
}

/// O(n) form with the same contract as otsu_quadratic.
inline ThresholdResult otsu_linear(const Histogram& h) {
  detail::require_bipartition(h);
  std::optional<std::size_t> best;
  double best_value = 0.0;
  detail::scan_candidates(h, [&](std::size_t split, double v_between) {
    if (!best || strictly_better(v_between, best_value)) {
      best = split;
      best_value = v_between;
    }
  });
  return detail::make_result(h, *best, best_value, Method::otsu);
}

struct CurvePoint {
  double threshold;
  double v_between;
};

/// Interclass variance at every valid candidate, ascending.
inline std::vector<CurvePoint> objective_curve(const Histogram& h) {
  detail::require_bipartition(h);
  std::vector<CurvePoint> out;
  detail::scan_candidates(h, [&](std::size_t split, double v) { out.push_back({h.value(split), v}); });
  return out;
}

inline void write_curve_csv(const std::vector<CurvePoint>& curve, std::ostream& os) {
  os << "threshold,v_between\n";
  for (const auto& p : curve) os << text::shortest(p.threshold) << ',' << text::shortest(p.v_between) << '\n';
}

}  // namespace waterx
