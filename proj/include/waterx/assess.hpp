#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include "waterx/error.hpp"
#include "waterx/numeric.hpp"
#include "waterx/raster.hpp"
#include "waterx/text.hpp"

namespace waterx {

enum class Label { water, nonwater, unlabeled };

inline const char* truth_name(Label l) {
  switch (l) {
    case Label::water: return "water";
    case Label::nonwater: return "nonwater";
    case Label::unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

/// Predicted labels print "none" where truth labels print "unlabeled".
inline const char* prediction_name(Label l) { return l == Label::unlabeled ? "none" : truth_name(l); }

struct TestSite {
  std::int64_t id = 0;
  std::int64_t col = 0, row = 0;
  Label truth = Label::unlabeled;
  Label predicted = Label::unlabeled;
  bool rectified = false;  // truth was corrected after field labeling

  friend bool operator==(const TestSite&, const TestSite&) = default;
};

/// Rows are the ground truth, columns the prediction.
struct ConfusionMatrix {
  std::uint64_t tp = 0;  // water -> water
  std::uint64_t fn = 0;  // water -> nonwater
  std::uint64_t fp = 0;  // nonwater -> water
  std::uint64_t tn = 0;  // nonwater -> nonwater

  std::uint64_t n() const noexcept { return tp + fn + fp + tn; }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) noexcept {
    tp += o.tp;
    fn += o.fn;
    fp += o.fp;
    tn += o.tn;
    return *this;
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline constexpr const char* kSamplerVersion = "floyd/mt19937_64+splitmix64/v1";

/// n distinct water-coded cells of `domain`, uniform without replacement
/// (Floyd's algorithm over the valid-cell list), ordered by grid position.
inline std::vector<TestSite> sample_sites(const ClassMap& domain, std::size_t n, std::uint64_t seed) {
  std::vector<std::uint32_t> valid;
  for (std::size_t i = 0; i < domain.cells.size(); ++i)
    if (domain.cells[i] == cls::water) valid.push_back(static_cast<std::uint32_t>(i));
  if (n > valid.size())
    fail(Errc::sampling, "requested " + std::to_string(n) + " sites but the domain has only " + std::to_string(valid.size()) +
                             " valid cells");

  Rng rng(seed);
  std::unordered_set<std::size_t> picked;
  picked.reserve(n * 2);
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t j = valid.size() - n; j < valid.size(); ++j) {
    std::size_t t = rng.uniform_index(j + 1);
    if (!picked.insert(t).second) {
      picked.insert(j);
      t = j;
    }
    order.push_back(t);
  }
  std::sort(order.begin(), order.end());

  std::vector<TestSite> sites;
  sites.reserve(n);
  const auto ncols = static_cast<std::size_t>(domain.header.ncols);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t cell = valid[order[k]];
    TestSite s;
    s.id = static_cast<std::int64_t>(k + 1);
    s.col = static_cast<std::int64_t>(cell % ncols);
    s.row = static_cast<std::int64_t>(cell / ncols);
    sites.push_back(s);
  }
  return sites;
}

/// Fills each site's prediction from the map and tallies the 2x2 table.
inline ConfusionMatrix confusion_matrix(std::vector<TestSite>& sites, const ClassMap& c) {
  ConfusionMatrix m;
  for (auto& s : sites) {
    if (s.truth == Label::unlabeled) fail(Errc::label, "site " + std::to_string(s.id) + " has no ground-truth label");
    if (s.col < 0 || s.row < 0 || s.col >= c.header.ncols || s.row >= c.header.nrows)
      fail(Errc::coverage, "site " + std::to_string(s.id) + " lies outside the grid");
    const auto v = c.at(s.col, s.row);
    if (v == cls::nodata) fail(Errc::coverage, "site " + std::to_string(s.id) + " falls on a nodata cell");
    s.predicted = v == cls::water ? Label::water : Label::nonwater;
    const bool truth_water = s.truth == Label::water;
    const bool pred_water = s.predicted == Label::water;
    if (truth_water) ++(pred_water ? m.tp : m.fn);
    else ++(pred_water ? m.fp : m.tn);
  }
  return m;
}

inline ConfusionMatrix confusion_matrix(const std::vector<TestSite>& sites, const ClassMap& c) {
  auto copy = sites;
  return confusion_matrix(copy, c);
}

/// Sites with their truth label as it stood before rectification.
inline std::vector<TestSite> unrectified(std::vector<TestSite> sites) {
  for (auto& s : sites)
    if (s.rectified && s.truth != Label::unlabeled) s.truth = s.truth == Label::water ? Label::nonwater : Label::water;
  return sites;
}

/// Mean agreement over the test set: (tp + tn) / n.
inline double accuracy_of(const ConfusionMatrix& m) {
  if (m.n() == 0) fail(Errc::empty_matrix, "accuracy of an empty confusion matrix is undefined");
  return static_cast<double>(m.tp + m.tn) / static_cast<double>(m.n());
}

/// Rates are nullopt when their denominator is zero.
struct ErrorRates {
  std::optional<double> water_omission;      // fn / (tp + fn)
  std::optional<double> water_commission;    // fp / (tp + fp)
  std::optional<double> nonwater_omission;   // fp / (fp + tn)
  std::optional<double> nonwater_commission; // fn / (fn + tn)
};

inline ErrorRates omission_commission(const ConfusionMatrix& m) {
  if (m.n() == 0) fail(Errc::empty_matrix, "error rates of an empty confusion matrix are undefined");
  auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  return {ratio(m.fn, m.tp + m.fn), ratio(m.fp, m.tp + m.fp), ratio(m.fp, m.fp + m.tn), ratio(m.fn, m.fn + m.tn)};
}

// ---------------------------------------------------------------------------
// Sites CSV: id,col,row,true_label,predicted_label,rectified
// ---------------------------------------------------------------------------

inline void write_sites_csv(const std::vector<TestSite>& sites, std::ostream& os) {
  os << "id,col,row,true_label,predicted_label,rectified\n";
  for (const auto& s : sites)
    os << s.id << ',' << s.col << ',' << s.row << ',' << truth_name(s.truth) << ',' << prediction_name(s.predicted) << ','
       << (s.rectified ? "true" : "false") << '\n';
}

inline void write_sites_csv(const std::vector<TestSite>& sites, const std::string& path) {
  detail::write_file(path, [&](std::ostream& os) { write_sites_csv(sites, os); });
}

inline std::vector<TestSite> read_sites_csv(const std::string& path) {
  const std::string body = detail::slurp(path);
  std::vector<TestSite> sites;
  std::size_t line_no = 0, offset = 0;
  auto error = [&](const std::string& what) -> void { fail(Errc::format, path + ":" + std::to_string(line_no) + ": " + what); };
  while (offset <= body.size()) {
    const auto end = body.find('\n', offset);
    const auto stop = end == std::string::npos ? body.size() : end;
    const auto line = text::trim(std::string_view(body).substr(offset, stop - offset));
    offset = stop + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "id,col,row,true_label,predicted_label,rectified") error("unexpected sites CSV header");
      continue;
    }
    const auto f = text::split(line, ',');
    if (f.size() != 6) error("expected 6 fields, found " + std::to_string(f.size()));
    TestSite s;
    auto id = text::parse<std::int64_t>(f[0]), col = text::parse<std::int64_t>(f[1]), row = text::parse<std::int64_t>(f[2]);
    if (!id || !col || !row) error("id, col and row must be integers");
    s.id = *id;
    s.col = *col;
    s.row = *row;
    if (f[3] == "water") s.truth = Label::water;
    else if (f[3] == "nonwater") s.truth = Label::nonwater;
    else if (f[3] == "unlabeled" || f[3].empty()) s.truth = Label::unlabeled;
    else error("unknown true_label '" + std::string(f[3]) + "'");
    if (f[4] == "water") s.predicted = Label::water;
    else if (f[4] == "nonwater") s.predicted = Label::nonwater;
    else if (f[4] == "none" || f[4].empty()) s.predicted = Label::unlabeled;
    else error("unknown predicted_label '" + std::string(f[4]) + "'");
    if (f[5] == "true" || f[5] == "1") s.rectified = true;
    else if (f[5] == "false" || f[5] == "0" || f[5].empty()) s.rectified = false;
    else error("rectified must be true or false");
    sites.push_back(s);
    if (end == std::string::npos) break;
  }
  if (line_no == 0 || body.empty()) fail(Errc::format, path + ": empty sites CSV");
  return sites;
}

}  // namespace waterx
