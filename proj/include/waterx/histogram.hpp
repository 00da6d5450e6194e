#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "waterx/error.hpp"
#include "waterx/numeric.hpp"
#include "waterx/text.hpp"

namespace waterx {

/// Binned density over a fixed-width lattice.
///
/// Bin i has representative value (first_index + i + phase) * bin_width.
/// Histograms built from samples use phase 0.5, so bin k covers
/// [k*w, (k+1)*w) and is represented by its center. Bins are contiguous:
/// empty interior bins are stored with count 0. Counts are doubles so that
/// smoothed histograms share the type; integer counts stay exact below 2^53.
class Histogram {
 public:
  static void check_width(double w) {
    if (!(w > 0.0) || !std::isfinite(w)) fail(Errc::argument, "bin width must be positive and finite");
  }

  /// Histogram with no bins; the identity for merge().
  static Histogram empty(double bin_width, double phase = 0.5) {
    check_width(bin_width);
    Histogram h;
    h.width_ = bin_width;
    h.phase_ = phase;
    return h;
  }

  /// Bins at first_value, first_value + w, ... with the given counts.
  static Histogram from_bins(double first_value, double bin_width, std::vector<double> counts) {
    check_width(bin_width);
    for (double c : counts)
      if (!(c >= 0.0) || !std::isfinite(c)) fail(Errc::argument, "histogram counts must be finite and non-negative");
    Histogram h;
    h.width_ = bin_width;
    const double q = first_value / bin_width;
    const double k = std::round(q);
    // Snap near-integral lattice positions so that e.g. -20 with width 10
    // reproduces -20 exactly.
    if (std::abs(q - k) <= 1e-12 * std::max(1.0, std::abs(q))) {
      h.first_ = static_cast<std::int64_t>(k);
      h.phase_ = 0.0;
    } else {
      const double f = std::floor(q);
      h.first_ = static_cast<std::int64_t>(f);
      h.phase_ = q - f;
    }
    h.counts_ = std::move(counts);
    h.recount();
    return h;
  }

  /// Bins first_index, first_index + 1, ... of the lattice (k + phase) * w.
  static Histogram from_lattice(double bin_width, double phase, std::int64_t first_index, std::vector<double> counts,
                                std::uint64_t skipped = 0) {
    check_width(bin_width);
    Histogram h;
    h.width_ = bin_width;
    h.phase_ = phase;
    h.first_ = first_index;
    h.counts_ = std::move(counts);
    h.skipped_ = skipped;
    h.recount();
    return h;
  }

  Histogram with_skipped(std::uint64_t skipped) const {
    Histogram h = *this;
    h.skipped_ = skipped;
    return h;
  }

  double bin_width() const noexcept { return width_; }
  double phase() const noexcept { return phase_; }
  std::int64_t first_index() const noexcept { return first_; }
  std::size_t size() const noexcept { return counts_.size(); }
  bool is_empty() const noexcept { return counts_.empty(); }

  double value(std::size_t i) const noexcept {
    return (static_cast<double>(first_ + static_cast<std::int64_t>(i)) + phase_) * width_;
  }
  double count(std::size_t i) const noexcept { return counts_[i]; }
  std::span<const double> counts() const noexcept { return counts_; }
  double total_count() const noexcept { return total_; }
  double density(std::size_t i) const noexcept { return total_ > 0.0 ? counts_[i] / total_ : 0.0; }

  std::vector<double> values() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = value(i);
    return out;
  }
  std::vector<double> densities() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = density(i);
    return out;
  }

  std::size_t nonzero_bins() const noexcept {
    return static_cast<std::size_t>(std::count_if(counts_.begin(), counts_.end(), [](double c) { return c > 0.0; }));
  }

  /// nodata and non-finite samples seen while building; carried through merge.
  std::uint64_t skipped_samples() const noexcept { return skipped_; }

  friend bool operator==(const Histogram& a, const Histogram& b) {
    return a.width_ == b.width_ && a.phase_ == b.phase_ && a.first_ == b.first_ && a.counts_ == b.counts_ &&
           a.skipped_ == b.skipped_;
  }

  /// Same counts, possibly real-valued, on the same bins.
  Histogram with_counts(std::vector<double> counts) const {
    if (counts.size() != counts_.size()) fail(Errc::argument, "count vector length differs from bin count");
    Histogram h = *this;
    h.counts_ = std::move(counts);
    h.recount();
    return h;
  }

 private:
  void recount() {
    CompensatedSum s;
    for (double c : counts_) s += c;
    total_ = s.value();
  }

  double width_ = 1.0;
  double phase_ = 0.5;
  std::int64_t first_ = 0;
  std::vector<double> counts_;
  double total_ = 0.0;
  std::uint64_t skipped_ = 0;
};

namespace detail {

/// Lattice index k with k*w <= v < (k+1)*w, corrected for rounding in v/w.
inline std::int64_t lattice_index(double v, double w) {
  auto k = static_cast<std::int64_t>(std::floor(v / w));
  if (static_cast<double>(k) * w > v) --k;
  else if (static_cast<double>(k + 1) * w <= v) ++k;
  return k;
}

}  // namespace detail

/// Bins samples on the zero-anchored lattice. Samples equal to nodata or
/// non-finite are skipped and tallied.
template <typename T>
Histogram build_histogram(std::span<const T> values, double bin_width, std::optional<double> nodata = std::nullopt) {
  Histogram::check_width(bin_width);
  std::uint64_t skipped = 0;
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  auto usable = [&](T v) {
    const double d = static_cast<double>(v);
    return std::isfinite(d) && !(nodata && d == *nodata);
  };
  for (T v : values) {
    if (!usable(v)) {
      ++skipped;
      continue;
    }
    const auto k = detail::lattice_index(static_cast<double>(v), bin_width);
    lo = std::min(lo, k);
    hi = std::max(hi, k);
  }
  if (lo > hi) fail(Errc::empty_input, "no finite, non-nodata samples to histogram");
  if (hi - lo >= std::int64_t{1} << 31) fail(Errc::argument, "sample range spans too many bins for this bin width");

  std::vector<double> counts(static_cast<std::size_t>(hi - lo + 1), 0.0);
  for (T v : values) {
    if (!usable(v)) continue;
    counts[static_cast<std::size_t>(detail::lattice_index(static_cast<double>(v), bin_width) - lo)] += 1.0;
  }
  return Histogram::from_lattice(bin_width, 0.5, lo, std::move(counts), skipped);
}

template <typename T>
Histogram build_histogram(const std::vector<T>& values, double bin_width, std::optional<double> nodata = std::nullopt) {
  return build_histogram(std::span<const T>(values), bin_width, nodata);
}

/// Bin-wise sum over the union of both ranges. Requires an identical bin
/// width and lattice phase.
inline Histogram merge_histograms(const Histogram& a, const Histogram& b) {
  if (a.bin_width() != b.bin_width()) fail(Errc::incompatible, "cannot merge histograms with different bin widths");
  if (a.is_empty() || b.is_empty()) return (a.is_empty() ? b : a).with_skipped(a.skipped_samples() + b.skipped_samples());
  if (std::abs(a.phase() - b.phase()) > 1e-9) fail(Errc::incompatible, "cannot merge histograms on different bin lattices");
  const std::int64_t first = std::min(a.first_index(), b.first_index());
  const std::int64_t last = std::max(a.first_index() + static_cast<std::int64_t>(a.size()),
                                     b.first_index() + static_cast<std::int64_t>(b.size()));
  std::vector<double> counts(static_cast<std::size_t>(last - first), 0.0);
  for (const Histogram* h : {&a, &b}) {
    const auto offset = static_cast<std::size_t>(h->first_index() - first);
    for (std::size_t i = 0; i < h->size(); ++i) counts[offset + i] += h->count(i);
  }
  return Histogram::from_lattice(a.bin_width(), a.phase(), first, std::move(counts),
                                 a.skipped_samples() + b.skipped_samples());
}

/// Builds per-band histograms on `threads` workers and merges them in band
/// order. Equal to build_histogram on the whole input.
template <typename T>
Histogram build_histogram_parallel(std::span<const T> values, double bin_width, std::optional<double> nodata,
                                   unsigned threads) {
  threads = resolve_threads(threads);
  if (threads <= 1 || values.size() < 4096) return build_histogram(values, bin_width, nodata);
  const std::size_t bands = threads;
  std::vector<std::optional<Histogram>> parts(bands);
  std::vector<std::uint64_t> skipped_only(bands, 0);
  parallel_bands(bands, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t b = lo; b < hi; ++b) {
      const auto chunk = values.subspan(values.size() * b / bands, values.size() * (b + 1) / bands - values.size() * b / bands);
      try {
        parts[b] = build_histogram(chunk, bin_width, nodata);
      } catch (const Error&) {
        skipped_only[b] = chunk.size();
      }
    }
  });
  Histogram out = Histogram::empty(bin_width);
  std::uint64_t extra = 0;
  for (std::size_t b = 0; b < bands; ++b) {
    if (parts[b]) out = merge_histograms(out, *parts[b]);
    extra += skipped_only[b];
  }
  if (out.is_empty()) fail(Errc::empty_input, "no finite, non-nodata samples to histogram");
  if (extra) out = out.with_skipped(out.skipped_samples() + extra);
  return out;
}

/// Centered moving average. Edges use symmetric (edge-repeating) reflection,
/// so [0, 9, 0] with window 3 pads to [0, 0, 9, 0, 0].
inline Histogram smooth_histogram(const Histogram& h, int window) {
  if (window < 1 || window % 2 == 0) fail(Errc::argument, "smoothing window must be odd and >= 1");
  if (static_cast<std::size_t>(window) > h.size()) fail(Errc::argument, "smoothing window exceeds the number of bins");
  if (window == 1) return h;
  const auto n = static_cast<std::ptrdiff_t>(h.size());
  const std::ptrdiff_t half = window / 2;
  auto reflect = [n](std::ptrdiff_t i) {
    if (i < 0) return -i - 1;
    if (i >= n) return 2 * n - i - 1;
    return i;
  };
  std::vector<double> out(h.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    CompensatedSum s;
    for (std::ptrdiff_t j = i - half; j <= i + half; ++j) s += h.count(static_cast<std::size_t>(reflect(j)));
    out[static_cast<std::size_t>(i)] = s.value() / window;
  }
  return h.with_counts(std::move(out));
}

inline void write_histogram_csv(const Histogram& h, std::ostream& os) {
  os << "bin_value,count,density\n";
  for (std::size_t i = 0; i < h.size(); ++i)
    os << text::shortest(h.value(i)) << ',' << text::shortest(h.count(i)) << ',' << text::shortest(h.density(i)) << '\n';
}

inline void write_histogram_csv(const Histogram& h, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(Errc::io, "cannot open '" + path + "' for writing");
  write_histogram_csv(h, os);
  if (!os) fail(Errc::io, "failed writing '" + path + "'");
}

}  // namespace waterx
