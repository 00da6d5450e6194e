#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "waterx/error.hpp"
#include "waterx/numeric.hpp"
#include "waterx/raster.hpp"

namespace waterx {

/// Neighborhood vote over a kernel x kernel window (center included,
/// nodata neighbors excluded, windows clipped at the grid edge). Exact ties
/// keep the cell's current class. Each pass reads the previous pass.
inline ClassMap majority_filter(const ClassMap& c, int kernel = 3, int iterations = 1, unsigned threads = 1) {
  if (kernel < 3 || kernel % 2 == 0) fail(Errc::argument, "majority kernel must be odd and >= 3");
  if (iterations < 1) fail(Errc::argument, "majority iterations must be >= 1");
  const std::int64_t ncols = c.header.ncols, nrows = c.header.nrows, half = kernel / 2;
  ClassMap src = c, dst = c;
  for (int pass = 0; pass < iterations; ++pass) {
    parallel_bands(static_cast<std::size_t>(nrows), threads, [&](std::size_t lo, std::size_t hi) {
      for (auto row = static_cast<std::int64_t>(lo); row < static_cast<std::int64_t>(hi); ++row) {
        const std::int64_t y0 = std::max<std::int64_t>(0, row - half), y1 = std::min(nrows - 1, row + half);
        for (std::int64_t col = 0; col < ncols; ++col) {
          const std::uint8_t self = src.at(col, row);
          if (self == cls::nodata) continue;
          const std::int64_t x0 = std::max<std::int64_t>(0, col - half), x1 = std::min(ncols - 1, col + half);
          int water = 0, nonwater = 0;
          for (std::int64_t y = y0; y <= y1; ++y) {
            const std::uint8_t* p = &src.cells[static_cast<std::size_t>(y * ncols)];
            for (std::int64_t x = x0; x <= x1; ++x) {
              water += p[x] == cls::water;
              nonwater += p[x] == cls::nonwater;
            }
          }
          dst.at(col, row) = water > nonwater ? cls::water : nonwater > water ? cls::nonwater : self;
        }
      }
    });
    std::swap(src, dst);
  }
  return src;
}

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0u); }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

  std::uint32_t size_of(std::uint32_t x) { return size_[find(x)]; }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
};

/// Flips every `target` component smaller than min_size to `replacement`.
inline void flip_small(ClassMap& c, std::uint8_t target, std::uint8_t replacement, std::int64_t min_size, int connectivity) {
  const std::int64_t ncols = c.header.ncols, nrows = c.header.nrows;
  DisjointSets sets(c.cells.size());
  auto idx = [ncols](std::int64_t x, std::int64_t y) { return static_cast<std::uint32_t>(y * ncols + x); };
  for (std::int64_t y = 0; y < nrows; ++y)
    for (std::int64_t x = 0; x < ncols; ++x) {
      if (c.at(x, y) != target) continue;
      // Backward neighbors only; each adjacency is visited once.
      if (x > 0 && c.at(x - 1, y) == target) sets.unite(idx(x, y), idx(x - 1, y));
      if (y > 0 && c.at(x, y - 1) == target) sets.unite(idx(x, y), idx(x, y - 1));
      if (connectivity == 8 && y > 0) {
        if (x > 0 && c.at(x - 1, y - 1) == target) sets.unite(idx(x, y), idx(x - 1, y - 1));
        if (x + 1 < ncols && c.at(x + 1, y - 1) == target) sets.unite(idx(x, y), idx(x + 1, y - 1));
      }
    }
  for (std::size_t i = 0; i < c.cells.size(); ++i)
    if (c.cells[i] == target && sets.size_of(static_cast<std::uint32_t>(i)) < min_size) c.cells[i] = replacement;
}

}  // namespace detail

/// Removes small islands: water components below min_size become nonwater,
/// then nonwater components below min_size (on the updated map) become
/// water. nodata never flips and separates components.
inline ClassMap remove_small_components(const ClassMap& c, std::int64_t min_size = 10, int connectivity = 8) {
  if (connectivity != 4 && connectivity != 8) fail(Errc::argument, "connectivity must be 4 or 8");
  if (min_size < 1) fail(Errc::argument, "min_size must be >= 1");
  if (c.cells.size() >= (std::size_t{1} << 32)) fail(Errc::argument, "grid too large for component labeling");
  ClassMap out = c;
  if (min_size == 1) return out;
  detail::flip_small(out, cls::water, cls::nonwater, min_size, connectivity);
  detail::flip_small(out, cls::nonwater, cls::water, min_size, connectivity);
  return out;
}

namespace detail {

/// 3x3 dilation (grow = true) or erosion of a 0/1 mask; windows are
/// clipped to the grid.
inline std::vector<std::uint8_t> morph3(const std::vector<std::uint8_t>& m, std::int64_t ncols, std::int64_t nrows,
                                        bool grow) {
  std::vector<std::uint8_t> out(m.size());
  for (std::int64_t y = 0; y < nrows; ++y)
    for (std::int64_t x = 0; x < ncols; ++x) {
      std::uint8_t v = grow ? 0 : 1;
      for (std::int64_t yy = std::max<std::int64_t>(0, y - 1); yy <= std::min(nrows - 1, y + 1); ++yy)
        for (std::int64_t xx = std::max<std::int64_t>(0, x - 1); xx <= std::min(ncols - 1, x + 1); ++xx) {
          const std::uint8_t s = m[static_cast<std::size_t>(yy * ncols + xx)];
          v = grow ? (v | s) : (v & s);
        }
      out[static_cast<std::size_t>(y * ncols + x)] = v;
    }
  return out;
}

}  // namespace detail

/// Closing then opening of the water class with a 3x3 square. nodata is
/// treated as nonwater during the morphology and restored afterwards.
inline ClassMap boundary_clean(const ClassMap& c) {
  const std::int64_t ncols = c.header.ncols, nrows = c.header.nrows;
  std::vector<std::uint8_t> m(c.cells.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = c.cells[i] == cls::water;
  m = detail::morph3(detail::morph3(m, ncols, nrows, true), ncols, nrows, false);
  m = detail::morph3(detail::morph3(m, ncols, nrows, false), ncols, nrows, true);
  ClassMap out = c;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (out.cells[i] != cls::nodata) out.cells[i] = m[i] ? cls::water : cls::nonwater;
  return out;
}

struct PostprocessOptions {
  int majority_kernel = 3;  // 0 disables
  int majority_iterations = 1;
  std::int64_t min_size = 10;  // 1 disables
  int connectivity = 8;
  bool boundary_clean = false;
};

inline ClassMap postprocess(const ClassMap& c, const PostprocessOptions& o, unsigned threads = 1) {
  ClassMap out = c;
  if (o.majority_kernel > 0) out = majority_filter(out, o.majority_kernel, o.majority_iterations, threads);
  out = remove_small_components(out, o.min_size, o.connectivity);
  if (o.boundary_clean) out = boundary_clean(out);
  return out;
}

}  // namespace waterx
