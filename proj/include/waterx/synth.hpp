#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "waterx/baselines.hpp"
#include "waterx/error.hpp"
#include "waterx/histogram.hpp"
#include "waterx/numeric.hpp"
#include "waterx/raster.hpp"
#include "waterx/text.hpp"

namespace waterx {

struct LabeledSamples {
  std::vector<double> values;
  std::vector<std::uint8_t> component;  // 1 = low mode (water), 2 = high mode
};

/// x ~ w1 N(mu1, sigma1) + w2 N(mu2, sigma2): one uniform picks the
/// component, then one Box-Muller normal.
inline LabeledSamples synth_samples(const GmmParams& params, std::size_t n, std::uint64_t seed) {
  params.validate();
  const GmmParams g = params.canonical();
  Rng rng(seed);
  LabeledSamples out;
  out.values.resize(n);
  out.component.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool low = rng.uniform01() < g.w1;
    const double z = rng.normal();
    out.values[i] = low ? g.mu1 + g.sigma1 * z : g.mu2 + g.sigma2 * z;
    out.component[i] = low ? 1 : 2;
  }
  return out;
}

inline Histogram synth_histogram(const GmmParams& g, std::size_t n, double bin_width, std::uint64_t seed) {
  if (n < 1) fail(Errc::argument, "synthetic histogram needs at least one sample");
  return build_histogram(synth_samples(g, n, seed).values, bin_width);
}

// ---------------------------------------------------------------------------
// Scenes
// ---------------------------------------------------------------------------

/// Geometry in cell units; cell (col, row) has center (col + 0.5, row + 0.5)
/// and row 0 is the top row.
struct Disc {
  double cx = 0, cy = 0, radius = 0;
};

/// Water where nx * x + ny * y < offset.
struct HalfPlane {
  double nx = 1, ny = 0, offset = 0;
};

struct BlobSet {
  std::vector<Disc> discs;
};

using WaterGeometry = std::variant<Disc, HalfPlane, BlobSet>;

namespace detail {

inline bool inside(const Disc& d, double x, double y) {
  return (x - d.cx) * (x - d.cx) + (y - d.cy) * (y - d.cy) <= d.radius * d.radius;
}

inline void check_disc(const Disc& d, std::int64_t ncols, std::int64_t nrows) {
  if (!(d.radius > 0)) fail(Errc::argument, "disc radius must be positive");
  if (d.cx - d.radius < 0 || d.cy - d.radius < 0 || d.cx + d.radius > static_cast<double>(ncols) ||
      d.cy + d.radius > static_cast<double>(nrows))
    fail(Errc::argument, "disc does not fit inside the grid");
}

/// Row seeds are derived independently so rows can be generated in any
/// order or on any thread: seed_row = splitmix64(seed + splitmix64(row + 1)).
inline std::uint64_t row_seed(std::uint64_t seed, std::int64_t row) {
  return splitmix64(seed + splitmix64(static_cast<std::uint64_t>(row) + 1));
}

}  // namespace detail

/// Rasterizes the geometry into a truth map (cell centers inside are water).
inline ClassMap rasterize(const WaterGeometry& geometry, const GridHeader& header) {
  header.validate();
  const std::int64_t ncols = header.ncols, nrows = header.nrows;
  std::visit(
      [&](const auto& g) {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, Disc>) detail::check_disc(g, ncols, nrows);
        else if constexpr (std::is_same_v<G, BlobSet>) {
          if (g.discs.empty()) fail(Errc::argument, "blob set needs at least one disc");
          for (const auto& d : g.discs) detail::check_disc(d, ncols, nrows);
        } else if (g.nx == 0 && g.ny == 0) fail(Errc::argument, "half-plane normal must be nonzero");
      },
      geometry);

  ClassMap truth = ClassMap::filled(header, cls::nonwater);
  for (std::int64_t row = 0; row < nrows; ++row)
    for (std::int64_t col = 0; col < ncols; ++col) {
      const double x = static_cast<double>(col) + 0.5, y = static_cast<double>(row) + 0.5;
      const bool water = std::visit(
          [&](const auto& g) {
            using G = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<G, Disc>) return detail::inside(g, x, y);
            else if constexpr (std::is_same_v<G, HalfPlane>) return g.nx * x + g.ny * y < g.offset;
            else {
              for (const auto& d : g.discs)
                if (detail::inside(d, x, y)) return true;
              return false;
            }
          },
          geometry);
      if (water) truth.at(col, row) = cls::water;
    }
  return truth;
}

struct Scene {
  Raster raster;
  ClassMap truth;
};

/// Water cells draw from component 1, the rest from component 2.
inline Scene synth_scene(const GmmParams& params, std::int64_t ncols, std::int64_t nrows, const WaterGeometry& geometry,
                         double cellsize, std::uint64_t seed, unsigned threads = 1) {
  params.validate();
  const GmmParams g = params.canonical();
  GridHeader header;
  header.ncols = ncols;
  header.nrows = nrows;
  header.cellsize = cellsize;
  header.nodata_value = -9999.0f;
  Scene s;
  s.truth = rasterize(geometry, header);
  s.raster.header = header;
  s.raster.values.resize(header.cells());
  parallel_bands(static_cast<std::size_t>(nrows), threads, [&](std::size_t lo, std::size_t hi) {
    for (auto row = static_cast<std::int64_t>(lo); row < static_cast<std::int64_t>(hi); ++row) {
      Rng rng(detail::row_seed(seed, row));
      for (std::int64_t col = 0; col < ncols; ++col) {
        const double z = rng.normal();
        const bool water = s.truth.at(col, row) == cls::water;
        auto v = static_cast<float>(water ? g.mu1 + g.sigma1 * z : g.mu2 + g.sigma2 * z);
        if (v == header.nodata_value) v = std::nextafter(v, 0.0f);
        s.raster.values[static_cast<std::size_t>(row * ncols + col)] = v;
      }
    }
  });
  return s;
}

/// Parses "disc:cx,cy,r", "half-plane:nx,ny,offset" or
/// "blobs:cx,cy,r;cx,cy,r;...".
inline WaterGeometry parse_geometry(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) fail(Errc::argument, "geometry must look like kind:params, got '" + spec + "'");
  const std::string kind = spec.substr(0, colon);
  const std::string_view rest = std::string_view(spec).substr(colon + 1);
  auto numbers = [&](std::string_view s) {
    std::vector<double> out;
    for (auto tok : text::split(s, ',')) {
      auto v = text::parse<double>(tok);
      if (!v) fail(Errc::argument, "bad number '" + std::string(tok) + "' in geometry '" + spec + "'");
      out.push_back(*v);
    }
    if (out.size() != 3) fail(Errc::argument, "geometry '" + spec + "' needs three numbers per shape");
    return out;
  };
  if (kind == "disc") {
    auto v = numbers(rest);
    return Disc{v[0], v[1], v[2]};
  }
  if (kind == "half-plane") {
    auto v = numbers(rest);
    return HalfPlane{v[0], v[1], v[2]};
  }
  if (kind == "blobs") {
    BlobSet b;
    for (auto part : text::split(rest, ';')) {
      auto v = numbers(part);
      b.discs.push_back({v[0], v[1], v[2]});
    }
    return b;
  }
  fail(Errc::argument, "unknown geometry kind '" + kind + "' (disc, half-plane, blobs)");
}

/// Misclassification probability of "x < t is water" at the best single
/// threshold: w1 P(X1 >= t) + w2 P(X2 < t). The candidates are the density
/// crossings and the two degenerate rules (all water, all nonwater).
inline double bayes_error(const GmmParams& params) {
  params.validate();
  const GmmParams g = params.canonical();
  auto err = [&](double t) { return g.w1 * normal_sf(t, g.mu1, g.sigma1) + g.w2 * normal_cdf(t, g.mu2, g.sigma2); };
  double best = std::min(g.w1, g.w2);
  if (g.mu1 == g.mu2 && g.sigma1 == g.sigma2) return best;
  try {
    best = std::min(best, err(gmm_bayes_threshold(g).threshold));
  } catch (const Error&) {
  }
  for (double t : detail::density_crossings(g)) best = std::min(best, err(t));
  return best;
}

}  // namespace waterx
