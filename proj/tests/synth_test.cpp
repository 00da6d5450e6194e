#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "waterx/otsu.hpp"
#include "waterx/synth.hpp"

namespace waterx {
namespace {

const GmmParams kMixture{0.4, 0.6, -18, -11, 1.2, 1.8};

double mixture_density(const GmmParams& g, double x) {
  return g.w1 * oracle::gauss(x, g.mu1, g.sigma1) + g.w2 * oracle::gauss(x, g.mu2, g.sigma2);
}

TEST(SynthHistogram, SameSeedSameHistogram) {
  EXPECT_EQ(synth_histogram(kMixture, 10000, 0.5, 3), synth_histogram(kMixture, 10000, 0.5, 3));
  EXPECT_NE(synth_histogram(kMixture, 10000, 0.5, 3), synth_histogram(kMixture, 10000, 0.5, 4));
}

TEST(SynthHistogram, MassBelowMidpointMatchesMixtureCdf) {
  const double mid = -14.5;  // on a bin edge for width 0.5
  const Histogram h = synth_histogram(kMixture, 1'000'000, 0.5, 11);
  double below = 0;
  for (std::size_t i = 0; i < h.size(); ++i)
    if (h.value(i) < mid) below += h.density(i);
  const double cdf = oracle::integrate([](double x) { return mixture_density(kMixture, x); }, -60, mid, 1e-13);
  EXPECT_NEAR(below, cdf, 0.005);
}

TEST(SynthHistogram, SingleSample) {
  const Histogram h = synth_histogram(kMixture, 1, 0.5, 0);
  EXPECT_EQ(h.size(), 1u);
  EXPECT_EQ(h.total_count(), 1);
  EXPECT_THROW(synth_histogram(kMixture, 0, 0.5, 0), Error);
  EXPECT_THROW(synth_histogram({0.7, 0.7, 0, 1, 1, 1}, 10, 0.5, 0), Error);
}

TEST(SynthScene, DiscCellCountMatchesRowWiseCount) {
  for (double r : {3.0, 7.5, 20.25}) {
    const Disc d{40.3, 37.9, r};
    const auto s = synth_scene(kMixture, 90, 80, d, 10, 1);
    std::int64_t expected = 0;
    for (int row = 0; row < 80; ++row) {
      const double dy = row + 0.5 - d.cy;
      if (dy * dy > r * r) continue;
      const double half = std::sqrt(r * r - dy * dy);
      // Columns c with d.cx - half <= c + 0.5 <= d.cx + half.
      expected += static_cast<std::int64_t>(std::floor(d.cx + half - 0.5) - std::ceil(d.cx - half - 0.5) + 1);
    }
    EXPECT_EQ(static_cast<std::int64_t>(std::count(s.truth.cells.begin(), s.truth.cells.end(), cls::water)), expected);
  }
}

TEST(SynthScene, SeparableMixtureClassifiesPerfectly) {
  const GmmParams g{0.5, 0.5, -20, -5, kSigmaFloor, kSigmaFloor};
  const auto s = synth_scene(g, 64, 48, BlobSet{{{10, 10, 6}, {40, 30, 12}}}, 10, 5);
  EXPECT_EQ(classify(s.raster, -12.5), s.truth);
}

TEST(SynthScene, DeterministicAndThreadIndependent) {
  const auto a = synth_scene(kMixture, 50, 70, HalfPlane{1, 0.3, 30}, 10, 9, 1);
  const auto b = synth_scene(kMixture, 50, 70, HalfPlane{1, 0.3, 30}, 10, 9, 4);
  EXPECT_EQ(a.raster, b.raster);
  EXPECT_EQ(a.truth, b.truth);
  EXPECT_TRUE(a.raster.header == a.truth.header || a.raster.header.same_grid(a.truth.header));
  EXPECT_FALSE(synth_scene(kMixture, 50, 70, HalfPlane{1, 0.3, 30}, 10, 10).raster == a.raster);
}

TEST(SynthScene, GeometryOutOfBounds) {
  try {
    synth_scene(kMixture, 20, 20, Disc{5, 5, 8}, 10, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::argument);
  }
}

TEST(SynthScene, ParseGeometry) {
  const auto d = std::get<Disc>(parse_geometry("disc:10,12.5,4"));
  EXPECT_EQ(d.cx, 10);
  EXPECT_EQ(d.cy, 12.5);
  EXPECT_EQ(d.radius, 4);
  EXPECT_EQ(std::get<BlobSet>(parse_geometry("blobs:1,2,1;5,5,2")).discs.size(), 2u);
  EXPECT_EQ(std::get<HalfPlane>(parse_geometry("half-plane:1,0,8")).offset, 8);
  EXPECT_THROW(parse_geometry("square:1,2,3"), Error);
  EXPECT_THROW(parse_geometry("disc:1,2"), Error);
}

TEST(BayesError, IdenticalComponentsGiveSmallerWeight) {
  EXPECT_DOUBLE_EQ(bayes_error({0.3, 0.7, -12, -12, 2, 2}), 0.3);
  EXPECT_DOUBLE_EQ(bayes_error({0.5, 0.5, -12, -12, 2, 2}), 0.5);
}

TEST(BayesError, NearSeparable) {
  EXPECT_LT(bayes_error({0.5, 0.5, -20, -10, 1, 1}), 1e-6);
}

TEST(BayesError, MatchesQuadrature) {
  const GmmParams& g = kMixture;
  const double t = oracle::bisect([&](double x) { return g.w1 * oracle::gauss(x, g.mu1, g.sigma1) - g.w2 * oracle::gauss(x, g.mu2, g.sigma2); },
                                  g.mu1, g.mu2);
  const double missed_water = oracle::integrate([&](double x) { return g.w1 * oracle::gauss(x, g.mu1, g.sigma1); }, t, g.mu1 + 40 * g.sigma1);
  const double false_water = oracle::integrate([&](double x) { return g.w2 * oracle::gauss(x, g.mu2, g.sigma2); }, g.mu2 - 40 * g.sigma2, t);
  EXPECT_NEAR(bayes_error(g), missed_water + false_water, 1e-9);
}

TEST(BayesError, EmpiricalMisclassificationConverges) {
  // Water fraction of the half-plane equals w1, so per-cell error rates
  // average to the mixture's Bayes error.
  const GmmParams g{0.4, 0.6, -18, -11, 1.2, 1.8};
  const std::int64_t ncols = 1000, nrows = 500;
  const auto s = synth_scene(g, ncols, nrows, HalfPlane{1, 0, 400}, 10, 77);
  const ClassMap c = classify(s.raster, gmm_bayes_threshold(g).threshold);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < c.cells.size(); ++i) wrong += c.cells[i] != s.truth.cells[i];
  const double n = static_cast<double>(c.cells.size());
  const double be = bayes_error(g);
  EXPECT_NEAR(wrong / n, be, 3 * std::sqrt(be * (1 - be) / n));
}

TEST(BayesError, OtsuWithinTwoPercentOnSeparatedMixture) {
  const GmmParams g{0.4, 0.6, -20, -10, 1.0, 1.5};
  const auto samples = synth_samples(g, 1'000'000, 21);
  const Histogram h = build_histogram(samples.values, 0.5);
  const double t = otsu_linear(h).threshold;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < samples.values.size(); ++i) wrong += (samples.values[i] < t) != (samples.component[i] == 1);
  EXPECT_LE(static_cast<double>(wrong) / 1e6, bayes_error(g) + 0.02);
}

}  // namespace
}  // namespace waterx
