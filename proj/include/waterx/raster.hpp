#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "waterx/error.hpp"
#include "waterx/numeric.hpp"
#include "waterx/text.hpp"

namespace waterx {

struct GridHeader {
  std::int64_t ncols = 0;
  std::int64_t nrows = 0;
  double xllcorner = 0;
  double yllcorner = 0;
  double cellsize = 1;  // meters
  float nodata_value = -9999.0f;

  std::size_t cells() const noexcept { return static_cast<std::size_t>(ncols * nrows); }

  /// Same georeferencing and shape; the nodata sentinel is not compared.
  bool same_grid(const GridHeader& o) const noexcept {
    return ncols == o.ncols && nrows == o.nrows && xllcorner == o.xllcorner && yllcorner == o.yllcorner &&
           cellsize == o.cellsize;
  }

  void validate() const {
    if (ncols <= 0 || nrows <= 0) fail(Errc::argument, "grid dimensions must be positive");
    if (!(cellsize > 0) || !std::isfinite(cellsize)) fail(Errc::argument, "cellsize must be positive");
    if (!std::isfinite(xllcorner) || !std::isfinite(yllcorner) || !std::isfinite(nodata_value))
      fail(Errc::argument, "grid header values must be finite");
  }

  friend bool operator==(const GridHeader&, const GridHeader&) = default;
};

/// dB (or linear power) values, row-major, top row first.
struct Raster {
  GridHeader header;
  std::vector<float> values;

  bool is_nodata(std::size_t i) const noexcept { return values[i] == header.nodata_value; }
  float at(std::int64_t col, std::int64_t row) const { return values[static_cast<std::size_t>(row * header.ncols + col)]; }

  void validate() const {
    header.validate();
    if (values.size() != header.cells()) fail(Errc::invariant, "raster value count does not match its header");
    for (float v : values)
      if (!std::isfinite(v)) fail(Errc::invariant, "raster values must be finite or the nodata sentinel");
  }

  friend bool operator==(const Raster& a, const Raster& b) {
    return a.header == b.header && a.values.size() == b.values.size() &&
           std::equal(a.values.begin(), a.values.end(), b.values.begin(),
                      [](float x, float y) { return std::bit_cast<std::uint32_t>(x) == std::bit_cast<std::uint32_t>(y); });
  }
};

namespace cls {
inline constexpr std::uint8_t nonwater = 0;
inline constexpr std::uint8_t water = 1;
inline constexpr std::uint8_t nodata = 255;
}  // namespace cls

/// Binary water map. Cells are cls::nonwater, cls::water or cls::nodata.
struct ClassMap {
  GridHeader header;
  std::vector<std::uint8_t> cells;

  static ClassMap filled(GridHeader h, std::uint8_t code) {
    h.nodata_value = cls::nodata;
    return {h, std::vector<std::uint8_t>(h.cells(), code)};
  }

  std::uint8_t at(std::int64_t col, std::int64_t row) const { return cells[static_cast<std::size_t>(row * header.ncols + col)]; }
  std::uint8_t& at(std::int64_t col, std::int64_t row) { return cells[static_cast<std::size_t>(row * header.ncols + col)]; }

  void validate() const {
    header.validate();
    if (cells.size() != header.cells()) fail(Errc::invariant, "class map cell count does not match its header");
    for (auto c : cells)
      if (c != cls::nonwater && c != cls::water && c != cls::nodata)
        fail(Errc::invariant, "class map cell " + std::to_string(c) + " is not one of 0, 1, 255");
  }

  friend bool operator==(const ClassMap&, const ClassMap&) = default;
};

// ---------------------------------------------------------------------------
// Text grid I/O
// ---------------------------------------------------------------------------

namespace detail {

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

class GridReader {
 public:
  GridReader(std::string path, std::string body) : path_(std::move(path)), body_(std::move(body)) {}

  GridHeader header() {
    GridHeader h;
    h.ncols = int_key("ncols");
    h.nrows = int_key("nrows");
    h.xllcorner = float_key("xllcorner");
    h.yllcorner = float_key("yllcorner");
    h.cellsize = float_key("cellsize");
    const double nd = float_key("nodata_value");
    h.nodata_value = static_cast<float>(nd);
    if (h.ncols <= 0 || h.nrows <= 0) error("ncols and nrows must be positive");
    if (!(h.cellsize > 0)) error("cellsize must be > 0");
    return h;
  }

  /// Calls cell(index, token) for every value; each row must be one line.
  template <typename Cell>
  void values(const GridHeader& h, Cell&& cell) {
    std::size_t index = 0;
    for (std::int64_t row = 0; row < h.nrows; ++row) {
      auto line = next_line();
      if (!line) error("expected " + std::to_string(h.nrows) + " data rows, found " + std::to_string(row));
      std::int64_t col = 0;
      std::size_t pos = 0;
      while (true) {
        pos = line->find_first_not_of(" \t\r", pos);
        if (pos == std::string_view::npos) break;
        auto end = line->find_first_of(" \t\r", pos);
        if (end == std::string_view::npos) end = line->size();
        if (col == h.ncols) error("row has more than " + std::to_string(h.ncols) + " values", pos + 1);
        if (!cell(index++, line->substr(pos, end - pos))) error("unparseable value '" + std::string(line->substr(pos, end - pos)) + "'", pos + 1);
        ++col;
        pos = end;
      }
      if (col != h.ncols) error("row has " + std::to_string(col) + " values, expected " + std::to_string(h.ncols));
    }
    while (auto line = next_line())
      if (!text::trim(*line).empty()) error("unexpected data after the last row");
  }

 private:
  std::optional<std::string_view> next_line() {
    if (offset_ >= body_.size()) return std::nullopt;
    const auto end = body_.find('\n', offset_);
    const auto stop = end == std::string::npos ? body_.size() : end;
    std::string_view line(body_.data() + offset_, stop - offset_);
    offset_ = stop + 1;
    ++line_no_;
    return line;
  }

  std::string_view key_value(const char* key) {
    auto line = next_line();
    if (!line) error(std::string("missing header key '") + key + "'");
    auto t = text::trim(*line);
    const auto sp = t.find_first_of(" \t");
    std::string name(t.substr(0, sp));
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    if (name != key) error(std::string("expected header key '") + key + "', found '" + name + "'");
    if (sp == std::string_view::npos) error(std::string("header key '") + key + "' has no value");
    return text::trim(t.substr(sp));
  }

  std::int64_t int_key(const char* key) {
    auto v = text::parse<std::int64_t>(key_value(key));
    if (!v) error(std::string("header key '") + key + "' is not an integer");
    return *v;
  }

  double float_key(const char* key) {
    auto v = text::parse<double>(key_value(key));
    if (!v) error(std::string("header key '") + key + "' is not a finite number");
    return *v;
  }

  [[noreturn]] void error(const std::string& what, std::size_t column = 0) const {
    std::string where = path_ + ":" + std::to_string(line_no_);
    if (column) where += ":" + std::to_string(column);
    fail(Errc::format, where + ": " + what);
  }

  std::string path_;
  std::string body_;
  std::size_t offset_ = 0;
  std::size_t line_no_ = 0;
};

inline void write_header(std::ostream& os, const GridHeader& h) {
  os << "ncols " << h.ncols << '\n'
     << "nrows " << h.nrows << '\n'
     << "xllcorner " << text::shortest(h.xllcorner) << '\n'
     << "yllcorner " << text::shortest(h.yllcorner) << '\n'
     << "cellsize " << text::shortest(h.cellsize) << '\n'
     << "nodata_value " << text::shortest(h.nodata_value) << '\n';
}

template <typename Emit>
void write_file(const std::string& path, Emit&& emit) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(Errc::io, "cannot open '" + path + "' for writing");
  emit(os);
  os.flush();
  if (!os) fail(Errc::io, "failed writing '" + path + "'");
}

}  // namespace detail

inline Raster read_grid(const std::string& path) {
  detail::GridReader reader(path, detail::slurp(path));
  Raster r;
  r.header = reader.header();
  r.values.resize(r.header.cells());
  reader.values(r.header, [&](std::size_t i, std::string_view tok) {
    auto v = text::parse<float>(tok);
    if (!v) return false;
    r.values[i] = *v;
    return true;
  });
  return r;
}

inline ClassMap read_class_map(const std::string& path) {
  detail::GridReader reader(path, detail::slurp(path));
  ClassMap c;
  c.header = reader.header();
  c.cells.resize(c.header.cells());
  reader.values(c.header, [&](std::size_t i, std::string_view tok) {
    auto v = text::parse<int>(tok);
    if (!v || (*v != cls::nonwater && *v != cls::water && *v != cls::nodata)) return false;
    c.cells[i] = static_cast<std::uint8_t>(*v);
    return true;
  });
  c.header.nodata_value = cls::nodata;
  return c;
}

inline void write_grid(const Raster& r, std::ostream& os) {
  r.validate();
  detail::write_header(os, r.header);
  std::string line;
  const auto ncols = static_cast<std::size_t>(r.header.ncols);
  for (std::size_t row = 0; row < static_cast<std::size_t>(r.header.nrows); ++row) {
    line.clear();
    for (std::size_t col = 0; col < ncols; ++col) {
      if (col) line += ' ';
      line += text::shortest(r.values[row * ncols + col]);
    }
    line += '\n';
    os << line;
  }
}

inline void write_grid(const ClassMap& c, std::ostream& os) {
  c.validate();
  GridHeader h = c.header;
  h.nodata_value = cls::nodata;
  detail::write_header(os, h);
  std::string line;
  const auto ncols = static_cast<std::size_t>(h.ncols);
  for (std::size_t row = 0; row < static_cast<std::size_t>(h.nrows); ++row) {
    line.clear();
    for (std::size_t col = 0; col < ncols; ++col) {
      if (col) line += ' ';
      line += std::to_string(c.cells[row * ncols + col]);
    }
    line += '\n';
    os << line;
  }
}

inline void write_grid(const Raster& r, const std::string& path) {
  r.validate();
  detail::write_file(path, [&](std::ostream& os) { write_grid(r, os); });
}

inline void write_grid(const ClassMap& c, const std::string& path) {
  c.validate();
  detail::write_file(path, [&](std::ostream& os) { write_grid(c, os); });
}

// ---------------------------------------------------------------------------
// Per-pixel operations
// ---------------------------------------------------------------------------

struct DbConversion {
  Raster raster;
  std::uint64_t nonpositive = 0;  // cells with linear power <= 0
  std::uint64_t nodata = 0;       // cells that were already nodata
};

/// v -> 10 log10(v); non-positive cells become nodata.
inline DbConversion linear_to_db(const Raster& r, unsigned threads = 1) {
  DbConversion out;
  out.raster.header = r.header;
  out.raster.values.resize(r.values.size());
  const auto ncols = static_cast<std::size_t>(r.header.ncols);
  std::vector<std::uint64_t> nonpos(static_cast<std::size_t>(r.header.nrows), 0), nd(nonpos.size(), 0);
  parallel_bands(nonpos.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t row = lo; row < hi; ++row)
      for (std::size_t i = row * ncols; i < (row + 1) * ncols; ++i) {
        const float v = r.values[i];
        if (v == r.header.nodata_value) {
          out.raster.values[i] = r.header.nodata_value;
          ++nd[row];
        } else if (!(v > 0.0f)) {
          out.raster.values[i] = r.header.nodata_value;
          ++nonpos[row];
        } else {
          out.raster.values[i] = static_cast<float>(10.0 * std::log10(static_cast<double>(v)));
        }
      }
  });
  for (std::size_t row = 0; row < nonpos.size(); ++row) {
    out.nonpositive += nonpos[row];
    out.nodata += nd[row];
  }
  return out;
}

/// Water iff value < threshold; ties go to nonwater.
inline ClassMap classify(const Raster& r, double threshold, unsigned threads = 1) {
  ClassMap c = ClassMap::filled(r.header, cls::nodata);
  const auto ncols = static_cast<std::size_t>(r.header.ncols);
  parallel_bands(static_cast<std::size_t>(r.header.nrows), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo * ncols; i < hi * ncols; ++i) {
      if (r.is_nodata(i)) continue;
      c.cells[i] = static_cast<double>(r.values[i]) < threshold ? cls::water : cls::nonwater;
    }
  });
  return c;
}

/// Cells outside the mask (mask != water) become nodata.
inline ClassMap apply_mask(const ClassMap& c, const ClassMap& mask) {
  if (!c.header.same_grid(mask.header)) fail(Errc::grid_mismatch, "mask grid does not match the class map grid");
  ClassMap out = c;
  for (std::size_t i = 0; i < out.cells.size(); ++i)
    if (mask.cells[i] != cls::water) out.cells[i] = cls::nodata;
  return out;
}

/// Raster variant: masked-out cells become the raster's nodata sentinel.
inline Raster apply_mask(const Raster& r, const ClassMap& mask) {
  if (!r.header.same_grid(mask.header)) fail(Errc::grid_mismatch, "mask grid does not match the raster grid");
  Raster out = r;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    if (mask.cells[i] != cls::water) out.values[i] = r.header.nodata_value;
  return out;
}

struct AreaReport {
  std::uint64_t water = 0;
  std::uint64_t nonwater = 0;
  std::uint64_t nodata = 0;
  double water_km2 = 0;
};

inline AreaReport water_area(const ClassMap& c) {
  AreaReport a;
  for (auto v : c.cells) {
    if (v == cls::water) ++a.water;
    else if (v == cls::nonwater) ++a.nonwater;
    else ++a.nodata;
  }
  a.water_km2 = static_cast<double>(a.water) * c.header.cellsize * c.header.cellsize / 1e6;
  return a;
}

/// Optional 3x3 median pre-filter. nodata cells stay nodata and are left out
/// of their neighbors' windows; even-sized windows take the lower median.
inline Raster median_filter3(const Raster& r, unsigned threads = 1) {
  Raster out = r;
  const auto ncols = r.header.ncols, nrows = r.header.nrows;
  parallel_bands(static_cast<std::size_t>(nrows), threads, [&](std::size_t lo, std::size_t hi) {
    std::vector<float> window;
    for (auto row = static_cast<std::int64_t>(lo); row < static_cast<std::int64_t>(hi); ++row)
      for (std::int64_t col = 0; col < ncols; ++col) {
        const auto i = static_cast<std::size_t>(row * ncols + col);
        if (r.is_nodata(i)) continue;
        window.clear();
        for (auto y = std::max<std::int64_t>(0, row - 1); y <= std::min(nrows - 1, row + 1); ++y)
          for (auto x = std::max<std::int64_t>(0, col - 1); x <= std::min(ncols - 1, col + 1); ++x) {
            const float v = r.at(x, y);
            if (v != r.header.nodata_value) window.push_back(v);
          }
        const auto mid = window.begin() + static_cast<std::ptrdiff_t>((window.size() - 1) / 2);
        std::nth_element(window.begin(), mid, window.end());
        out.values[i] = *mid;
      }
  });
  return out;
}

}  // namespace waterx
