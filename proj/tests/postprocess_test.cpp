#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "waterx/postprocess.hpp"

namespace waterx {
namespace {

using testutil::class_map;
using testutil::header;

ClassMap checkerboard(std::int64_t n) {
  ClassMap c = ClassMap::filled(header(n, n), cls::nonwater);
  for (std::int64_t y = 0; y < n; ++y)
    for (std::int64_t x = 0; x < n; ++x) c.at(x, y) = (x + y) % 2 ? cls::water : cls::nonwater;
  return c;
}

ClassMap random_map(std::mt19937_64& gen, std::int64_t ncols, std::int64_t nrows, int nodata_pct) {
  ClassMap c = ClassMap::filled(header(ncols, nrows), cls::nonwater);
  for (auto& v : c.cells) {
    const auto r = static_cast<int>(gen() % 100);
    v = r < nodata_pct ? cls::nodata : r < nodata_pct + (100 - nodata_pct) / 2 ? cls::water : cls::nonwater;
  }
  return c;
}

/// Component sizes of one class by flood fill.
std::vector<std::size_t> component_sizes(const ClassMap& c, std::uint8_t target, int connectivity) {
  const auto ncols = c.header.ncols, nrows = c.header.nrows;
  std::vector<char> seen(c.cells.size(), 0);
  std::vector<std::size_t> sizes;
  for (std::int64_t y0 = 0; y0 < nrows; ++y0)
    for (std::int64_t x0 = 0; x0 < ncols; ++x0) {
      if (c.at(x0, y0) != target || seen[static_cast<std::size_t>(y0 * ncols + x0)]) continue;
      std::vector<std::pair<std::int64_t, std::int64_t>> stack{{x0, y0}};
      seen[static_cast<std::size_t>(y0 * ncols + x0)] = 1;
      std::size_t n = 0;
      while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        ++n;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dx == 0 && dy == 0) || (connectivity == 4 && dx != 0 && dy != 0)) continue;
            const auto nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= ncols || ny >= nrows) continue;
            auto& s = seen[static_cast<std::size_t>(ny * ncols + nx)];
            if (s || c.at(nx, ny) != target) continue;
            s = 1;
            stack.push_back({nx, ny});
          }
      }
      sizes.push_back(n);
    }
  return sizes;
}

TEST(MajorityFilter, IsolatedPixelFlips) {
  ClassMap c = ClassMap::filled(header(5, 5), cls::nonwater);
  c.at(2, 2) = cls::water;
  EXPECT_EQ(majority_filter(c, 3, 1), ClassMap::filled(header(5, 5), cls::nonwater));
}

TEST(MajorityFilter, UniformAndCheckerboardAreFixedPoints) {
  for (auto code : {cls::water, cls::nonwater}) {
    const ClassMap u = ClassMap::filled(header(6, 4), code);
    EXPECT_EQ(majority_filter(u, 3, 1), u);
    EXPECT_EQ(majority_filter(u, 3, 3), u);
  }
  for (std::int64_t n : {2, 5, 8}) {
    const ClassMap cb = checkerboard(n);
    EXPECT_EQ(majority_filter(cb, 3, 1), cb);
    EXPECT_EQ(majority_filter(cb, 3, 4), cb);
  }
}

TEST(MajorityFilter, NodataExcludedFromVote) {
  // Center water with two water and two nonwater neighbors, rest nodata: 3-2 for water.
  const ClassMap c = class_map(3, 3, {255, 1, 255, 0, 1, 0, 255, 1, 255});
  EXPECT_EQ(majority_filter(c, 3, 1).at(1, 1), cls::water);
}

TEST(MajorityFilter, RejectsEvenKernel) {
  EXPECT_THROW(majority_filter(ClassMap::filled(header(3, 3), 0), 4, 1), Error);
  EXPECT_THROW(majority_filter(ClassMap::filled(header(3, 3), 0), 3, 0), Error);
}

TEST(MajorityFilter, ParallelMatchesSerial) {
  std::mt19937_64 gen(2);
  const ClassMap c = random_map(gen, 41, 29, 10);
  EXPECT_EQ(majority_filter(c, 5, 2, 1), majority_filter(c, 5, 2, 4));
}

TEST(RemoveSmallComponents, SmallBlobRemoved) {
  ClassMap c = ClassMap::filled(header(10, 10), cls::nonwater);
  c.at(4, 4) = c.at(5, 4) = c.at(4, 5) = cls::water;
  EXPECT_EQ(remove_small_components(c, 10, 8), ClassMap::filled(header(10, 10), cls::nonwater));
}

TEST(RemoveSmallComponents, MinSizeOneIsIdentity) {
  std::mt19937_64 gen(3);
  const ClassMap c = random_map(gen, 20, 20, 10);
  EXPECT_EQ(remove_small_components(c, 1, 8), c);
}

TEST(RemoveSmallComponents, DiagonalPairDependsOnConnectivity) {
  ClassMap c = ClassMap::filled(header(6, 6), cls::nonwater);
  c.at(2, 2) = c.at(3, 3) = cls::water;
  const ClassMap eight = remove_small_components(c, 2, 8);
  EXPECT_EQ(eight.at(2, 2), cls::water);
  EXPECT_EQ(eight.at(3, 3), cls::water);
  const ClassMap four = remove_small_components(c, 2, 4);
  EXPECT_EQ(four.at(2, 2), cls::nonwater);
  EXPECT_EQ(four.at(3, 3), cls::nonwater);
}

TEST(RemoveSmallComponents, NodataBreaksConnectivityAndNeverFlips) {
  // The nodata cell splits the top-row water into components of 2 and 3.
  const ClassMap c = class_map(10, 3, {1, 1, 255, 1, 1, 1, 0, 0, 0, 0,  //
                                       0, 0, 0, 0, 0, 0, 0, 0, 0, 0,  //
                                       0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  const ClassMap expected = class_map(10, 3, {0, 0, 255, 1, 1, 1, 0, 0, 0, 0,  //
                                              0, 0, 0, 0, 0, 0, 0, 0, 0, 0,  //
                                              0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  EXPECT_EQ(remove_small_components(c, 3, 8), expected);
}

TEST(RemoveSmallComponents, RejectsBadConnectivity) {
  EXPECT_THROW(remove_small_components(ClassMap::filled(header(3, 3), 0), 5, 6), Error);
}

TEST(RemoveSmallComponents, NoSmallComponentsSurviveOnNodataFreeMaps) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int conn = trial % 2 ? 8 : 4;
    const std::int64_t min_size = 2 + static_cast<std::int64_t>(gen() % 12);
    const ClassMap out = remove_small_components(random_map(gen, 30, 25, 0), min_size, conn);
    for (auto code : {cls::water, cls::nonwater})
      for (auto s : component_sizes(out, code, conn)) EXPECT_GE(static_cast<std::int64_t>(s), min_size);
  }
}

TEST(BoundaryClean, HalfPlaneUnchanged) {
  ClassMap c = ClassMap::filled(header(8, 6), cls::nonwater);
  for (std::int64_t y = 0; y < 6; ++y)
    for (std::int64_t x = 0; x < 4; ++x) c.at(x, y) = cls::water;
  EXPECT_EQ(boundary_clean(c), c);
}

TEST(BoundaryClean, OnePixelProtrusionRemoved) {
  // Water occupies columns 0-1 plus a bump at (2, 2). Closing leaves the
  // shape as is; the opening's erosion keeps only column 0, and dilating
  // that back restores columns 0-1 but not the bump.
  const ClassMap c = class_map(5, 5, {1, 1, 0, 0, 0,  //
                                      1, 1, 0, 0, 0,  //
                                      1, 1, 1, 0, 0,  //
                                      1, 1, 0, 0, 0,  //
                                      1, 1, 0, 0, 0});
  const ClassMap expected = class_map(5, 5, {1, 1, 0, 0, 0,  //
                                             1, 1, 0, 0, 0,  //
                                             1, 1, 0, 0, 0,  //
                                             1, 1, 0, 0, 0,  //
                                             1, 1, 0, 0, 0});
  EXPECT_EQ(boundary_clean(c), expected);
}

TEST(BoundaryClean, AllNodataUnchanged) {
  const ClassMap c = ClassMap::filled(header(4, 4), cls::nodata);
  EXPECT_EQ(boundary_clean(c), c);
}

TEST(BoundaryClean, UniformFiveByFiveNeighborhoodsUntouched) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 30; ++trial) {
    ClassMap c = ClassMap::filled(header(30, 30), cls::nonwater);
    // Blocky map so that uniform 5x5 neighborhoods exist.
    for (std::int64_t by = 0; by < 30; by += 6)
      for (std::int64_t bx = 0; bx < 30; bx += 6) {
        const auto code = static_cast<std::uint8_t>(gen() % 2);
        for (std::int64_t y = by; y < by + 6; ++y)
          for (std::int64_t x = bx; x < bx + 6; ++x) c.at(x, y) = code;
      }
    for (int k = 0; k < 40; ++k) c.cells[gen() % c.cells.size()] ^= 1;
    const ClassMap out = boundary_clean(c);
    for (std::int64_t y = 2; y < 28; ++y)
      for (std::int64_t x = 2; x < 28; ++x) {
        bool uniform = true;
        for (std::int64_t dy = -2; dy <= 2; ++dy)
          for (std::int64_t dx = -2; dx <= 2; ++dx) uniform &= c.at(x + dx, y + dy) == c.at(x, y);
        if (uniform) {
          EXPECT_EQ(out.at(x, y), c.at(x, y));
        }
      }
  }
}

TEST(Postprocess, HeaderAndNodataPreserved) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 30; ++trial) {
    const ClassMap c = random_map(gen, 10 + gen() % 30, 10 + gen() % 30, 15);
    for (const ClassMap& out : {majority_filter(c, 3, 2), remove_small_components(c, 6, 8), remove_small_components(c, 6, 4),
                                boundary_clean(c)}) {
      EXPECT_EQ(out.header, c.header);
      for (std::size_t i = 0; i < c.cells.size(); ++i)
        EXPECT_EQ(out.cells[i] == cls::nodata, c.cells[i] == cls::nodata);
    }
  }
}

}  // namespace
}  // namespace waterx
