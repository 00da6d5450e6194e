#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "waterx/error.hpp"
#include "waterx/histogram.hpp"
#include "waterx/numeric.hpp"
#include "waterx/otsu.hpp"

namespace waterx {

// ---------------------------------------------------------------------------
// Valley picking
// ---------------------------------------------------------------------------

namespace detail {

struct Peak {
  std::size_t index;  // first bin of the plateau
  double height;
};

/// Maximal plateaus strictly higher than every adjacent bin.
inline std::vector<Peak> local_maxima(std::span<const double> c) {
  std::vector<Peak> peaks;
  const std::size_t n = c.size();
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && c[j + 1] == c[i]) ++j;
    const bool left_lower = i == 0 || c[i - 1] < c[i];
    const bool right_lower = j + 1 == n || c[j + 1] < c[i];
    if (left_lower && right_lower && !(i == 0 && j + 1 == n)) peaks.push_back({i, c[i]});
    i = j + 1;
  }
  return peaks;
}

}  // namespace detail

/// Lowest smoothed bin strictly between the two highest local maxima.
/// The objective carries the smoothed count at the valley bin.
inline ThresholdResult valley_threshold(const Histogram& h, int window) {
  const Histogram smooth = smooth_histogram(h, window);
  auto peaks = detail::local_maxima(smooth.counts());
  if (peaks.size() < 2) fail(Errc::no_valley, "histogram is unimodal after smoothing; no valley to pick");
  std::stable_sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) { return a.height > b.height; });
  const std::size_t lo = std::min(peaks[0].index, peaks[1].index);
  const std::size_t hi = std::max(peaks[0].index, peaks[1].index);
  std::size_t valley = lo + 1;
  for (std::size_t i = lo + 1; i < hi; ++i)
    if (smooth.count(i) < smooth.count(valley)) valley = i;

  ThresholdResult r;
  r.threshold = h.value(valley);
  r.objective = smooth.count(valley);
  r.method = Method::valley;
  r.bin_index = valley;
  try {
    r.stats = detail::stats_at_split(h, valley);
  } catch (const Error&) {
  }
  return r;
}

// ---------------------------------------------------------------------------
// Two-component Gaussian mixture
// ---------------------------------------------------------------------------

inline constexpr double kSigmaFloor = 1e-3;

/// Component 1 is the low-backscatter (water-like) mode: mu1 < mu2.
struct GmmParams {
  double w1 = 0.5, w2 = 0.5;
  double mu1 = 0, mu2 = 1;
  double sigma1 = 1, sigma2 = 1;

  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(w1) || !finite(w2) || !finite(mu1) || !finite(mu2) || !finite(sigma1) || !finite(sigma2))
      fail(Errc::argument, "mixture parameters must be finite");
    if (w1 < 0 || w2 < 0 || std::abs(w1 + w2 - 1.0) > 1e-12) fail(Errc::argument, "mixture weights must be >= 0 and sum to 1");
    if (!(sigma1 > 0) || !(sigma2 > 0)) fail(Errc::argument, "component standard deviations must be positive");
  }

  /// Swaps components so that mu1 <= mu2.
  GmmParams canonical() const {
    if (mu1 <= mu2) return *this;
    return {w2, w1, mu2, mu1, sigma2, sigma1};
  }
};

struct EmFit {
  GmmParams params;
  int iterations = 0;
  bool converged = false;
  double log_likelihood = 0;
  std::vector<double> trace;  // log-likelihood before iteration 1, then after each
};

namespace detail {

inline double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

inline double component_log(double w, double x, double mu, double sigma) {
  return w > 0 ? std::log(w) + normal_log_pdf(x, mu, sigma) : -std::numeric_limits<double>::infinity();
}

/// Binned log-likelihood: sum of count_i * log p(x_i).
inline double mixture_log_likelihood(const Histogram& h, const GmmParams& g) {
  CompensatedSum ll;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h.count(i) <= 0) continue;
    const double x = h.value(i);
    ll += h.count(i) * log_sum_exp(component_log(g.w1, x, g.mu1, g.sigma1), component_log(g.w2, x, g.mu2, g.sigma2));
  }
  return ll.value();
}

}  // namespace detail

/// EM for a two-component mixture over binned data, each bin standing for
/// count_i points at its representative value. Starts from the per-cluster
/// moments of the Otsu split and stops when the relative change of the
/// log-likelihood drops below tol.
inline EmFit em_fit(const Histogram& h, int max_iter = 200, double tol = 1e-8) {
  detail::require_bipartition(h);
  if (max_iter < 0) fail(Errc::argument, "max_iter must be >= 0");

  const ClassStats split = *otsu_linear(h).stats;
  GmmParams g;
  g.w1 = split.omega0;
  g.w2 = 1.0 - g.w1;
  g.mu1 = split.mu0;
  g.mu2 = split.mu1;
  g.sigma1 = std::max(kSigmaFloor, std::sqrt(split.v0 / split.omega0));
  g.sigma2 = std::max(kSigmaFloor, std::sqrt(split.v1 / split.omega1));

  EmFit fit;
  double ll = detail::mixture_log_likelihood(h, g);
  fit.trace.push_back(ll);

  const std::size_t n = h.size();
  std::vector<double> r1(n);
  for (int iter = 0; iter < max_iter; ++iter) {
    // E step
    for (std::size_t i = 0; i < n; ++i) {
      const double x = h.value(i);
      const double a = detail::component_log(g.w1, x, g.mu1, g.sigma1);
      const double b = detail::component_log(g.w2, x, g.mu2, g.sigma2);
      r1[i] = std::exp(a - detail::log_sum_exp(a, b));
    }
    // M step
    CompensatedSum n1, n2, s1, s2;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = h.count(i);
      n1 += c * r1[i];
      n2 += c * (1.0 - r1[i]);
      s1 += c * r1[i] * h.value(i);
      s2 += c * (1.0 - r1[i]) * h.value(i);
    }
    GmmParams next = g;
    const double total = h.total_count();
    next.w1 = n1.value() / total;
    next.w2 = 1.0 - next.w1;
    if (n1.value() > 0) next.mu1 = s1.value() / n1.value();
    if (n2.value() > 0) next.mu2 = s2.value() / n2.value();
    CompensatedSum q1, q2;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = h.count(i);
      const double d1 = h.value(i) - next.mu1;
      const double d2 = h.value(i) - next.mu2;
      q1 += c * r1[i] * d1 * d1;
      q2 += c * (1.0 - r1[i]) * d2 * d2;
    }
    if (n1.value() > 0) next.sigma1 = std::max(kSigmaFloor, std::sqrt(q1.value() / n1.value()));
    if (n2.value() > 0) next.sigma2 = std::max(kSigmaFloor, std::sqrt(q2.value() / n2.value()));

    g = next;
    const double next_ll = detail::mixture_log_likelihood(h, g);
    fit.trace.push_back(next_ll);
    fit.iterations = iter + 1;
    const double change = std::abs(next_ll - ll) / std::max(std::abs(ll), std::numeric_limits<double>::min());
    ll = next_ll;
    if (change < tol) {
      fit.converged = true;
      break;
    }
  }
  fit.params = g.canonical();
  fit.log_likelihood = ll;
  return fit;
}

namespace detail {

/// Real roots of w1*N(x|mu1,s1) == w2*N(x|mu2,s2), ascending.
inline std::vector<double> density_crossings(const GmmParams& g) {
  const double a = 0.5 / (g.sigma2 * g.sigma2) - 0.5 / (g.sigma1 * g.sigma1);
  const double b = g.mu1 / (g.sigma1 * g.sigma1) - g.mu2 / (g.sigma2 * g.sigma2);
  const double c = std::log(g.w1 * g.sigma2 / (g.w2 * g.sigma1)) - 0.5 * g.mu1 * g.mu1 / (g.sigma1 * g.sigma1) +
                   0.5 * g.mu2 * g.mu2 / (g.sigma2 * g.sigma2);
  std::vector<double> roots;
  if (!std::isfinite(c)) return roots;
  if (g.sigma1 == g.sigma2 || std::abs(a) <= 1e-14 * std::abs(b)) {
    if (b != 0) roots.push_back(-c / b);
    return roots;
  }
  const double disc = b * b - 4 * a * c;
  if (disc < 0) return roots;
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  roots.push_back(q / a);
  if (q != 0) roots.push_back(c / q);
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace detail

/// Point between the means where the weighted component densities are equal.
inline ThresholdResult gmm_bayes_threshold(const GmmParams& params) {
  params.validate();
  const GmmParams g = params.canonical();
  if (!(g.mu1 < g.mu2)) fail(Errc::no_root, "components share a mean; no separating threshold");
  if (g.w1 == 0 || g.w2 == 0) fail(Errc::no_root, "a zero-weight component has no separating threshold");

  std::optional<double> root;
  if (g.sigma1 == g.sigma2) {
    const double x = 0.5 * (g.mu1 + g.mu2) + g.sigma1 * g.sigma1 * std::log(g.w1 / g.w2) / (g.mu2 - g.mu1);
    if (x > g.mu1 && x < g.mu2) root = x;
  } else {
    for (double x : detail::density_crossings(g))
      if (x > g.mu1 && x < g.mu2) {
        root = x;
        break;
      }
  }
  if (!root) fail(Errc::no_root, "weighted component densities do not cross between the means");

  ThresholdResult r;
  r.threshold = *root;
  r.objective = g.w1 * normal_pdf(*root, g.mu1, g.sigma1);
  r.method = Method::gmm;
  return r;
}

// ---------------------------------------------------------------------------
// Weighted two-means
// ---------------------------------------------------------------------------

struct KMeansResult {
  ThresholdResult result;
  int iterations = 0;
  double center_low = 0, center_high = 0;
  double v_within = 0;
};

namespace detail {

inline double weighted_percentile(const Histogram& h, double q) {
  CompensatedSum acc;
  const double target = q * h.total_count();
  for (std::size_t i = 0; i < h.size(); ++i) {
    acc += h.count(i);
    if (h.count(i) > 0 && acc.value() >= target) return h.value(i);
  }
  return h.value(h.size() - 1);
}

struct LloydOutcome {
  std::size_t split;
  int iterations;
  double c_low, c_high;
};

/// Lloyd iterations on a 1-D weighted point set. In one dimension the
/// assignment is a split index: bins at or past it go to the upper center.
/// Ties at the midpoint go to the lower center.
inline LloydOutcome lloyd(const Histogram& h, double c_low, double c_high, int max_iter) {
  const std::size_t n = h.size();
  auto assign = [&](double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    std::size_t s = 0;
    while (s < n && h.value(s) <= mid) ++s;
    return s;
  };
  std::size_t split = assign(c_low, c_high);
  int iter = 0;
  while (iter < max_iter) {
    ++iter;
    CompensatedSum w0, w1, m0, m1;
    for (std::size_t i = 0; i < n; ++i) {
      (i < split ? w0 : w1) += h.count(i);
      (i < split ? m0 : m1) += h.count(i) * h.value(i);
    }
    if (w0.value() > 0) c_low = m0.value() / w0.value();
    if (w1.value() > 0) c_high = m1.value() / w1.value();
    const std::size_t next = assign(c_low, c_high);
    if (next == split) break;
    split = next;
  }
  return {split, iter, c_low, c_high};
}

}  // namespace detail

/// Weighted 2-means on the histogram, started at the 25th/75th weighted
/// percentiles. `restarts` extra runs start from seeded random pairs of
/// occupied bins; the lowest within-class variance wins.
inline KMeansResult kmeans2_threshold(const Histogram& h, std::uint64_t seed = 0, int restarts = 0, int max_iter = 1000) {
  detail::require_bipartition(h);
  std::vector<std::size_t> occupied;
  for (std::size_t i = 0; i < h.size(); ++i)
    if (h.count(i) > 0) occupied.push_back(i);

  double lo = detail::weighted_percentile(h, 0.25);
  double hi = detail::weighted_percentile(h, 0.75);
  if (!(lo < hi)) {
    lo = h.value(occupied.front());
    hi = h.value(occupied.back());
  }

  std::optional<KMeansResult> best;
  Rng rng(seed);
  for (int run = 0; run <= restarts; ++run) {
    if (run > 0) {
      std::size_t a = rng.uniform_index(occupied.size());
      std::size_t b = rng.uniform_index(occupied.size() - 1);
      if (b >= a) ++b;
      lo = h.value(occupied[std::min(a, b)]);
      hi = h.value(occupied[std::max(a, b)]);
    }
    const auto out = detail::lloyd(h, lo, hi, max_iter);
    // Skip runs that collapsed onto one cluster.
    double c0 = 0;
    for (std::size_t i = 0; i < out.split; ++i) c0 += h.count(i);
    if (c0 <= 0 || c0 >= h.total_count()) continue;

    KMeansResult k;
    k.result.threshold = h.value(out.split);
    k.result.method = Method::kmeans;
    k.result.bin_index = out.split;
    k.result.stats = detail::stats_at_split(h, out.split);
    k.result.objective = k.result.stats->v_between;
    k.iterations = out.iterations;
    k.center_low = out.c_low;
    k.center_high = out.c_high;
    k.v_within = k.result.stats->v_within();
    if (!best || k.v_within < best->v_within) best = k;
  }
  if (!best) fail(Errc::degenerate, "two-means did not produce a bipartition");
  return *best;
}

}  // namespace waterx
