#pragma once

#include <stdexcept>
#include <string>

namespace waterx {

/// Failure categories. Each maps onto one CLI exit code.
enum class Errc {
  argument,             // bad parameter value
  config,               // missing or malformed pipeline configuration
  empty_input,          // no usable samples
  incompatible,         // histograms on different lattices
  format,               // unparseable grid or CSV
  io,                   // file could not be opened or written
  grid_mismatch,        // headers of two grids differ
  invariant,            // value outside the domain of a type
  degenerate,           // histogram or partition with an empty class
  no_valley,            // smoothed histogram is unimodal
  no_root,              // mixture densities never cross between the means
  sampling,             // more sites requested than valid cells
  label,                // site without a ground-truth label
  coverage,             // site on a nodata cell
  empty_matrix,         // confusion matrix with no sites
};

inline const char* errc_name(Errc e) {
  switch (e) {
    case Errc::argument: return "argument";
    case Errc::config: return "config";
    case Errc::empty_input: return "empty-input";
    case Errc::incompatible: return "incompatible-histogram";
    case Errc::format: return "format";
    case Errc::io: return "io";
    case Errc::grid_mismatch: return "grid-mismatch";
    case Errc::invariant: return "invariant";
    case Errc::degenerate: return "degenerate";
    case Errc::no_valley: return "no-valley";
    case Errc::no_root: return "no-separating-root";
    case Errc::sampling: return "sampling";
    case Errc::label: return "label";
    case Errc::coverage: return "coverage";
    case Errc::empty_matrix: return "empty-matrix";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// 2 usage/config, 3 data/format, 4 numeric/degenerate input.
inline int exit_code(Errc e) {
  switch (e) {
    case Errc::argument:
    case Errc::config:
      return 2;
    case Errc::empty_input:
    case Errc::degenerate:
    case Errc::no_valley:
    case Errc::no_root:
    case Errc::empty_matrix:
      return 4;
    default:
      return 3;
  }
}

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace waterx
