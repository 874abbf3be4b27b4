#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "homog2d/coefficients.hpp"
#include "homog2d/solver.hpp"

namespace homog2d {

/// Value of the structured-text (TOML subset) config format: strings,
/// numbers, booleans, arrays, tables and inline tables.
struct TomlValue {
  enum class Kind { Number, String, Bool, Array, Table };

  Kind kind = Kind::Table;
  double number = 0.0;
  bool integral = false;
  bool boolean = false;
  std::string text;
  std::vector<TomlValue> items;                          // Array
  std::vector<std::pair<std::string, TomlValue>> keys;  // Table, in file order
  int line = 0;

  const TomlValue* find(const std::string& key) const;
  bool is_table() const { return kind == Kind::Table; }
};

/// Parses a document into its root table. Errors carry the line number.
TomlValue parse_toml(const std::string& text);

enum class Command { Cell, Effective, Solve, Green, Rates, All };

Command command_from_string(const std::string& s);
std::string to_string(Command c);

struct GreenSettings {
  double rho_cells = 2.0;
  int random_pairs = 512;
  int bmo_centers = 64;
  // (x, y) pairs for the convergence sweep
  std::vector<std::pair<std::array<double, 2>, std::array<double, 2>>> pairs = {
      {{0.3, 0.5}, {0.7, 0.5}}, {{0.25, 0.5}, {0.75, 0.5}}, {{0.5, 0.25}, {0.5, 0.75}}};
};

struct RateSettings {
  std::string F = "one";   // one | sine
  std::string g = "zero";  // zero | affine
  Region interior{0.25, 0.75};
};

struct RunConfig {
  Command command = Command::All;
  std::string preset;  // empty when the set is given inline
  CoefficientSet set;
  int N = 256;
  int P = 16;
  std::vector<double> eps = {0.25, 0.125, 0.0625, 0.03125};
  bool lambda_auto = false;
  std::optional<double> lambda;  // fixed value; unset: the set's own lambda
  double tol = 1e-10;
  std::uint64_t seed = 42;
  int threads = 1;
  std::string out = "homog2d-out";
  std::string cache = ".homog2d-cache";
  GreenSettings green;
  RateSettings rates;
};

/// Reads, fills defaults and validates. `origin` only labels messages.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
RunConfig parse_config(const std::string& path);

/// Semantic checks (sizes, dyadic eps, mesh rule); throws ConfigError naming the key.
void validate_config(const RunConfig& cfg);

/// Coefficient set from a parsed [coefficients] table.
CoefficientSet coefficients_from_toml(const TomlValue& table);

/// Complete effective config in the input format; parses back to an equal config.
std::string echo_config(const RunConfig& cfg);

}  // namespace homog2d
