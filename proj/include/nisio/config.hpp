#pragma once

// Experiment configuration: a line-oriented file of `section.key = value`
// entries. Blank lines and lines starting with '#' are ignored; values may
// be double-quoted. Lists use ';' between items and ',' between the
// components of one item, e.g. `problem.controls = "1,0; 0,1"`.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nisio/generator.hpp"

namespace nisio {

struct ProblemConfig {
  Topology topology = Topology::Torus;
  int d = 1;
  int n = 64;
  double extent = 1.0;
  std::vector<std::vector<double>> controls{{}};
  std::vector<std::string> sigma;  ///< d*d expressions, row-major
  std::vector<std::string> drift;  ///< d expressions
  std::string cost;
  Sense sense = Sense::Minimize;
};

struct SolverConfig {
  double dt_factor = 0.5;
  double tol = 1e-10;
  std::size_t max_iters = 20000000;
};

struct McSection {
  double T = 20.0;
  double dt_sim = 1e-3;
  std::size_t N = 10000;
  std::uint64_t seed = 1;
  std::vector<double> x0;      ///< defaults to the domain center
  std::string policy = "optimal";  ///< "optimal" or a control index
  bool sweep = false;          ///< also run every constant control
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats{"json", "csv"};
  bool path_histogram = false;
};

/// Keys of the command-specific sections (bounds, orbit, evolve, dv, matrix).
using ExtraSection = std::map<std::string, std::string, std::less<>>;

struct Config {
  std::optional<ProblemConfig> problem;
  SolverConfig solver;
  McSection mc;
  OutputConfig output;
  std::map<std::string, ExtraSection, std::less<>> extra;
  std::map<std::string, std::size_t, std::less<>> lines;  ///< key -> line number
  std::string source;

  /// Throws ValidationError if the problem section is absent.
  ProblemSpec spec() const;
  bool wants(const std::string& format) const;
};

/// Throws ParseError (with line) or ValidationError (naming the invariant).
Config load_config(const std::string& path);
Config parse_config(const std::string& text, const std::string& source = "<string>");

/// Re-checks every invariant after an override (e.g. --n).
void validate_config(const Config& cfg);

/// Splits "a; b; c" into trimmed items (empty input gives no items).
std::vector<std::string> split_list(const std::string& text, char sep = ';');
/// Parses "1,0; 0,1" into rows of numbers.
std::vector<std::vector<double>> parse_rows(const std::string& text);

}  // namespace nisio
