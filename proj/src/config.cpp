#include "homog2d/config.hpp"

#include <fmt/format.h>

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "homog2d/error.hpp"

namespace homog2d {

const TomlValue* TomlValue::find(const std::string& key) const {
  for (const auto& [k, v] : keys)
    if (k == key) return &v;
  return nullptr;
}

namespace {

class TomlParser {
 public:
  explicit TomlParser(const std::string& s) : s_(s) {}

  TomlValue document() {
    TomlValue root;
    root.line = 1;
    TomlValue* current = &root;
    std::set<std::string> headers;
    for (;;) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        skip_space();
        const int at = line_;
        std::vector<std::string> path = key_path();
        skip_space();
        expect(']');
        end_of_line();
        std::string joined;
        for (const auto& p : path) joined += (joined.empty() ? "" : ".") + p;
        if (!headers.insert(joined).second) fail(fmt::format("duplicate table [{}]", joined), at);
        current = &root;
        for (const auto& p : path) current = &descend(*current, p, at);
        continue;
      }
      key_value(*current);
      end_of_line();
    }
    return root;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
  int line_ = 1;

  [[noreturn]] void fail(const std::string& msg, int line = 0) const {
    const int l = line ? line : line_;
    throw ConfigError(fmt::format("line {}: {}", l, msg), l);
  }
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  void expect(char c) {
    if (peek() != c) fail(fmt::format("expected '{}'", c));
    ++pos_;
  }
  void skip_space() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
  }
  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }
  // whitespace, comments and newlines (inside arrays)
  void skip_all() {
    for (;;) {
      skip_space();
      skip_comment();
      if (peek() == '\n') {
        ++pos_;
        ++line_;
        continue;
      }
      return;
    }
  }
  void skip_blank_lines() { skip_all(); }
  void end_of_line() {
    skip_space();
    skip_comment();
    if (eof()) return;
    if (peek() != '\n') fail(fmt::format("unexpected '{}' after value", peek()));
    ++pos_;
    ++line_;
  }

  static bool bare(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

  std::string key_part() {
    if (peek() == '"') return basic_string();
    std::string k;
    while (!eof() && bare(peek())) k += s_[pos_++];
    if (k.empty()) fail("expected a key");
    return k;
  }
  std::vector<std::string> key_path() {
    std::vector<std::string> path{key_part()};
    for (;;) {
      skip_space();
      if (peek() != '.') return path;
      ++pos_;
      skip_space();
      path.push_back(key_part());
    }
  }

  TomlValue& descend(TomlValue& t, const std::string& k, int at) {
    for (auto& [key, v] : t.keys)
      if (key == k) {
        if (!v.is_table()) fail(fmt::format("key '{}' is already a value", k), at);
        return v;
      }
    TomlValue sub;
    sub.line = at;
    t.keys.emplace_back(k, std::move(sub));
    return t.keys.back().second;
  }

  void key_value(TomlValue& table) {
    const int at = line_;
    std::vector<std::string> path = key_path();
    skip_space();
    expect('=');
    skip_space();
    TomlValue v = value();
    v.line = at;
    TomlValue* t = &table;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) t = &descend(*t, path[i], at);
    if (t->find(path.back())) fail(fmt::format("duplicate key '{}'", path.back()), at);
    t->keys.emplace_back(path.back(), std::move(v));
  }

  std::string basic_string() {
    expect('"');
    std::string out;
    for (;;) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = s_[pos_++];
      if (c == '"') return out;
      if (c == '\\') {
        if (eof()) fail("unterminated string");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(fmt::format("unsupported escape '\\{}'", e));
        }
        continue;
      }
      out += c;
    }
  }

  TomlValue value() {
    TomlValue v;
    v.line = line_;
    const char c = peek();
    if (c == '"') {
      v.kind = TomlValue::Kind::String;
      v.text = basic_string();
    } else if (c == '\'') {
      ++pos_;
      v.kind = TomlValue::Kind::String;
      while (!eof() && peek() != '\'' && peek() != '\n') v.text += s_[pos_++];
      expect('\'');
    } else if (c == '[') {
      ++pos_;
      v.kind = TomlValue::Kind::Array;
      skip_all();
      while (peek() != ']') {
        v.items.push_back(value());
        skip_all();
        if (peek() == ',') {
          ++pos_;
          skip_all();
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
      ++pos_;
    } else if (c == '{') {
      ++pos_;
      v.kind = TomlValue::Kind::Table;
      skip_space();
      while (peek() != '}') {
        key_value(v);
        skip_space();
        if (peek() == ',') {
          ++pos_;
          skip_space();
        } else if (peek() != '}') {
          fail("expected ',' or '}' in inline table");
        }
      }
      ++pos_;
    } else if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      v.kind = TomlValue::Kind::Bool;
      v.boolean = true;
    } else if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      v.kind = TomlValue::Kind::Bool;
    } else {
      std::string tok;
      while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '.' || peek() == '+' ||
                        peek() == '-' || peek() == '_'))
        tok += s_[pos_++];
      if (tok.empty()) fail("expected a value");
      std::string clean;
      for (char ch : tok)
        if (ch != '_') clean += ch;
      std::size_t used = 0;
      try {
        v.number = std::stod(clean, &used);
      } catch (const std::exception&) {
        fail(fmt::format("invalid value '{}'", tok));
      }
      if (used != clean.size() || !std::isfinite(v.number)) fail(fmt::format("invalid number '{}'", tok));
      v.kind = TomlValue::Kind::Number;
      v.integral = clean.find_first_of(".eE") == std::string::npos;
    }
    return v;
  }
};

// Typed access with unknown-key rejection.
class Reader {
 public:
  Reader(const TomlValue& t, std::string prefix) : t_(t), prefix_(std::move(prefix)) {}

  const TomlValue* get(const std::string& k) {
    used_.insert(k);
    return t_.find(k);
  }
  std::string name(const std::string& k) const { return prefix_.empty() ? k : prefix_ + "." + k; }

  [[noreturn]] void bad(const std::string& k, const TomlValue& v, const std::string& msg) const {
    throw ConfigError(fmt::format("line {}: key '{}': {}", v.line, name(k), msg), v.line);
  }

  double number(const std::string& k, double def) {
    const TomlValue* v = get(k);
    if (!v) return def;
    if (v->kind != TomlValue::Kind::Number) bad(k, *v, "expected a number");
    return v->number;
  }
  long long integer(const std::string& k, long long def) {
    const TomlValue* v = get(k);
    if (!v) return def;
    if (v->kind != TomlValue::Kind::Number || !v->integral) bad(k, *v, "expected an integer");
    return static_cast<long long>(v->number);
  }
  std::string string(const std::string& k, const std::string& def) {
    const TomlValue* v = get(k);
    if (!v) return def;
    if (v->kind != TomlValue::Kind::String) bad(k, *v, "expected a string");
    return v->text;
  }

  void finish() const {
    for (const auto& [k, v] : t_.keys)
      if (!used_.count(k))
        throw ConfigError(fmt::format("line {}: unknown key '{}'", v.line, name(k)), v.line);
  }

 private:
  const TomlValue& t_;
  std::string prefix_;
  std::set<std::string> used_;
};

double eps_value(const Reader& r, const TomlValue& v) {
  if (v.kind == TomlValue::Kind::Number) return v.number;
  if (v.kind == TomlValue::Kind::String) {
    // "p/q" fractions
    int p = 0, q = 0;
    char slash = 0;
    std::istringstream in(v.text);
    if ((in >> p >> slash >> q) && slash == '/' && q != 0 && in.peek() == EOF) return static_cast<double>(p) / q;
  }
  r.bad("eps", v, "entries must be numbers or \"p/q\" fractions");
}

std::vector<double> number_list(const Reader& r, const std::string& k, const TomlValue& v, std::size_t n) {
  if (v.kind != TomlValue::Kind::Array || v.items.size() != n) r.bad(k, v, fmt::format("expected {} numbers", n));
  std::vector<double> out;
  for (const auto& it : v.items) {
    if (it.kind != TomlValue::Kind::Number) r.bad(k, v, fmt::format("expected {} numbers", n));
    out.push_back(it.number);
  }
  return out;
}

FourierEntry entry_from(const Reader& r, const std::string& key, const TomlValue& v) {
  if (v.kind == TomlValue::Kind::Number) return FourierEntry(v.number);
  if (!v.is_table()) r.bad(key, v, "expected a number or { constant = ..., modes = [...] }");
  FourierEntry e;
  for (const auto& [k, x] : v.keys) {
    if (k == "constant") {
      if (x.kind != TomlValue::Kind::Number) r.bad(key, v, "constant must be a number");
      e.constant = x.number;
    } else if (k == "modes") {
      if (x.kind != TomlValue::Kind::Array) r.bad(key, v, "modes must be an array");
      for (const auto& md : x.items) {
        const auto t = number_list(r, key, md, 4);
        if (t[0] != std::round(t[0]) || t[1] != std::round(t[1])) r.bad(key, v, "mode indices must be integers");
        e.modes.push_back({static_cast<int>(t[0]), static_cast<int>(t[1]), t[2], t[3]});
      }
    } else {
      r.bad(key, v, fmt::format("unknown field '{}'", k));
    }
  }
  return e;
}

// Collects the leaves of a nested index table such as A.1.2.1.1.
void leaves(const TomlValue& t, const std::string& path, int depth,
            std::vector<std::pair<std::string, const TomlValue*>>& out) {
  for (const auto& [k, v] : t.keys) {
    const std::string p = path + "." + k;
    const bool leaf = depth == 1 || !v.is_table() || v.find("constant") || v.find("modes");
    if (leaf && depth != 1) throw ConfigError(fmt::format("line {}: key '{}' has too few indices", v.line, p), v.line);
    if (depth == 1) {
      out.emplace_back(p, &v);
    } else {
      leaves(v, p, depth - 1, out);
    }
  }
}

}  // namespace

TomlValue parse_toml(const std::string& text) { return TomlParser(text).document(); }

Command command_from_string(const std::string& s) {
  if (s == "cell") return Command::Cell;
  if (s == "effective") return Command::Effective;
  if (s == "solve") return Command::Solve;
  if (s == "green") return Command::Green;
  if (s == "rates") return Command::Rates;
  if (s == "all") return Command::All;
  throw ConfigError(fmt::format("unknown command '{}' (cell, effective, solve, green, rates, all)", s));
}

std::string to_string(Command c) {
  switch (c) {
    case Command::Cell: return "cell";
    case Command::Effective: return "effective";
    case Command::Solve: return "solve";
    case Command::Green: return "green";
    case Command::Rates: return "rates";
    case Command::All: return "all";
  }
  return "all";
}

CoefficientSet coefficients_from_toml(const TomlValue& table) {
  Reader r(table, "coefficients");
  const long long m = r.integer("m", 1);
  if (m < 1 || m > 8) throw ConfigError(fmt::format("key 'coefficients.m': system size {} outside 1..8", m));
  CoefficientSet set = CoefficientSet::zeros(static_cast<int>(m));
  set.name = r.string("name", "custom");
  set.lambda = r.number("lambda", 0.0);
  set.mu = r.number("mu", 1.0);
  set.kappa = r.number("kappa", 0.0);
  const TensorLayout l{set.m};
  auto index = [&](const std::string& key, const std::string& part, int hi, int line) {
    int v = 0;
    try {
      std::size_t used = 0;
      v = std::stoi(part, &used);
      if (used != part.size()) v = 0;
    } catch (const std::exception&) {
      v = 0;
    }
    if (v < 1 || v > hi)
      throw ConfigError(fmt::format("line {}: key '{}': index '{}' outside 1..{}", line, key, part, hi), line);
    return v - 1;
  };
  auto split = [](const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream in(s);
    std::string p;
    while (std::getline(in, p, '.')) parts.push_back(p);
    return parts;
  };
  for (const auto& [group, depth] : {std::pair{"A", 4}, std::pair{"V", 3}, std::pair{"B", 3}, std::pair{"c", 2}}) {
    const TomlValue* g = r.get(group);
    if (!g) continue;
    if (!g->is_table() || g->find("constant") || g->find("modes"))
      throw ConfigError(fmt::format("line {}: key 'coefficients.{}' needs indices", g->line, group), g->line);
    std::vector<std::pair<std::string, const TomlValue*>> ls;
    leaves(*g, group, depth, ls);
    for (const auto& [key, v] : ls) {
      const auto parts = split(key);
      const std::string full = "coefficients." + key;
      std::vector<int> ix;
      for (std::size_t p = 1; p < parts.size(); ++p) {
        const bool spatial = (group == std::string("A") && p <= 2) || ((group == std::string("V") || group == std::string("B")) && p == 1);
        ix.push_back(index(full, parts[p], spatial ? 2 : set.m, v->line));
      }
      const Reader er(table, "coefficients");
      FourierEntry e = entry_from(er, key, *v);
      if (group == std::string("A")) set.a(ix[0], ix[1], ix[2], ix[3]) = std::move(e);
      else if (group == std::string("V")) set.V[l.vec(ix[0], ix[1], ix[2])] = std::move(e);
      else if (group == std::string("B")) set.B[l.vec(ix[0], ix[1], ix[2])] = std::move(e);
      else set.c[l.mat(ix[0], ix[1])] = std::move(e);
    }
  }
  r.finish();
  try {
    validate(set);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(fmt::format("key 'coefficients': {}", e.what()));
  }
  return set;
}

namespace {

bool power_of_two(long long v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

void validate_config(const RunConfig& c) {
  auto bad = [](const std::string& key, const std::string& msg) {
    throw ConfigError(fmt::format("key '{}': {}", key, msg));
  };
  if (!power_of_two(c.N) || c.N < 8) bad("N", fmt::format("torus size {} must be a power of two >= 8", c.N));
  if (c.N < 4 * c.set.max_mode_index()) bad("N", fmt::format("N = {} aliases modes up to {}", c.N, c.set.max_mode_index()));
  if (!power_of_two(c.P) || c.P < 4) bad("P", fmt::format("nodes per period {} must be a power of two >= 4", c.P));
  if (c.N < 4 * c.P) bad("N", fmt::format("N = {} must be at least 4 P = {} for corrector interpolation", c.N, 4 * c.P));
  if (c.eps.size() < 3) bad("eps", "needs at least three values");
  for (std::size_t k = 0; k < c.eps.size(); ++k) {
    const double e = c.eps[k];
    const double inv = 1.0 / e;
    const long long r = std::llround(inv);
    // M + 1 = P / eps must be an integer for every eps; with dyadic eps the
    // quarter lattice (interior region, Green pairs) is a set of mesh nodes
    if (!(e > 0.0 && e <= 0.5) || std::abs(inv - static_cast<double>(r)) > 1e-9 * inv || !power_of_two(r))
      bad("eps", fmt::format("eps = {} is not commensurate with the mesh rule: 1/eps must be a power of two "
                             "(M + 1 = P/eps with P = {})",
                             e, c.P));
    if (k && !(e < c.eps[k - 1])) bad("eps", "values must be strictly decreasing");
    if (static_cast<long long>(c.P) * r > 4096) bad("eps", fmt::format("mesh M + 1 = {} is too large", c.P * r));
  }
  if (!(c.tol > 0.0 && c.tol < 1e-3)) bad("tol", "must lie in (0, 1e-3)");
  if (c.threads < 1 || c.threads > 256) bad("threads", "must lie in 1..256");
  if (c.lambda && !(*c.lambda >= 0.0)) bad("lambda", "must be >= 0");
  if (c.out.empty()) bad("out", "must not be empty");
  if (!(c.green.rho_cells >= 1.0 && c.green.rho_cells <= 8.0)) bad("green.rho_cells", "must lie in [1, 8]");
  if (c.green.random_pairs < 0) bad("green.random_pairs", "must be >= 0");
  if (c.green.bmo_centers < 1) bad("green.bmo_centers", "must be >= 1");
  for (const auto& [x, y] : c.green.pairs) {
    auto dist = [](const std::array<double, 2>& p) { return std::min({p[0], p[1], 1 - p[0], 1 - p[1]}); };
    if (std::hypot(x[0] - y[0], x[1] - y[1]) < 0.25 || dist(x) < 0.25 || dist(y) < 0.25)
      bad("green.pairs", fmt::format("pair ({}, {}) - ({}, {}) needs |x-y| >= 1/4 and distance >= 1/4 to the boundary",
                                     x[0], x[1], y[0], y[1]));
  }
  if (c.rates.F != "one" && c.rates.F != "sine") bad("rates.F", "must be \"one\" or \"sine\"");
  if (c.rates.g != "zero" && c.rates.g != "affine") bad("rates.g", "must be \"zero\" or \"affine\"");
  if (!(c.rates.interior.lo > 0.0 && c.rates.interior.lo < c.rates.interior.hi && c.rates.interior.hi < 1.0))
    bad("rates.interior", "must satisfy 0 < lo < hi < 1");
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig c;
  try {
    const TomlValue root = parse_toml(text);
    Reader r(root, "");
    if (const TomlValue* v = r.get("command")) {
      if (v->kind != TomlValue::Kind::String) r.bad("command", *v, "expected a string");
      c.command = command_from_string(v->text);
    }
    c.preset = r.string("preset", "");
    const TomlValue* coeff = r.get("coefficients");
    if (!c.preset.empty() && coeff) throw ConfigError("keys 'preset' and 'coefficients' are mutually exclusive");
    if (coeff) {
      if (!coeff->is_table()) r.bad("coefficients", *coeff, "expected a table");
      c.set = coefficients_from_toml(*coeff);
    } else if (!c.preset.empty()) {
      try {
        c.set = preset(c.preset);
      } catch (const Error& e) {
        throw ConfigError(fmt::format("key 'preset': {}", e.what()));
      }
    } else {
      throw ConfigError("one of 'preset' or [coefficients] is required");
    }
    c.N = static_cast<int>(r.integer("N", c.N));
    c.P = static_cast<int>(r.integer("P", c.P));
    if (const TomlValue* v = r.get("eps")) {
      if (v->kind != TomlValue::Kind::Array) r.bad("eps", *v, "expected an array");
      c.eps.clear();
      for (const auto& it : v->items) c.eps.push_back(eps_value(r, it));
    }
    if (const TomlValue* v = r.get("lambda")) {
      if (v->kind == TomlValue::Kind::String && v->text == "auto") {
        c.lambda_auto = true;
      } else if (v->kind == TomlValue::Kind::Number) {
        c.lambda = v->number;
      } else {
        r.bad("lambda", *v, "expected a number or \"auto\"");
      }
    }
    c.tol = r.number("tol", c.tol);
    const long long seed = r.integer("seed", static_cast<long long>(c.seed));
    if (seed < 0) throw ConfigError("key 'seed': must be >= 0");
    c.seed = static_cast<std::uint64_t>(seed);
    c.threads = static_cast<int>(r.integer("threads", c.threads));
    c.out = r.string("out", c.out);
    c.cache = r.string("cache", c.cache);
    if (const TomlValue* g = r.get("green")) {
      if (!g->is_table()) r.bad("green", *g, "expected a table");
      Reader gr(*g, "green");
      c.green.rho_cells = gr.number("rho_cells", c.green.rho_cells);
      c.green.random_pairs = static_cast<int>(gr.integer("random_pairs", c.green.random_pairs));
      c.green.bmo_centers = static_cast<int>(gr.integer("bmo_centers", c.green.bmo_centers));
      if (const TomlValue* p = gr.get("pairs")) {
        if (p->kind != TomlValue::Kind::Array) gr.bad("pairs", *p, "expected an array of [x1, x2, y1, y2]");
        c.green.pairs.clear();
        for (const auto& it : p->items) {
          const auto q = number_list(gr, "pairs", it, 4);
          c.green.pairs.push_back({{q[0], q[1]}, {q[2], q[3]}});
        }
      }
      gr.finish();
    }
    if (const TomlValue* t = r.get("rates")) {
      if (!t->is_table()) r.bad("rates", *t, "expected a table");
      Reader rr(*t, "rates");
      c.rates.F = rr.string("F", c.rates.F);
      c.rates.g = rr.string("g", c.rates.g);
      if (const TomlValue* v = rr.get("interior")) {
        const auto q = number_list(rr, "interior", *v, 2);
        c.rates.interior = {q[0], q[1]};
      }
      rr.finish();
    }
    r.finish();
    validate_config(c);
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", origin, e.what()), e.line());
  }
  return c;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

std::string echo_config(const RunConfig& c) {
  std::string s;
  s += fmt::format("command = \"{}\"\n", to_string(c.command));
  if (!c.preset.empty()) s += fmt::format("preset = \"{}\"\n", c.preset);
  s += fmt::format("N = {}\nP = {}\neps = [", c.N, c.P);
  for (std::size_t k = 0; k < c.eps.size(); ++k) s += fmt::format("{}{:.17g}", k ? ", " : "", c.eps[k]);
  s += "]\n";
  if (c.lambda_auto) s += "lambda = \"auto\"\n";
  else if (c.lambda) s += fmt::format("lambda = {:.17g}\n", *c.lambda);
  s += fmt::format("tol = {:.17g}\nseed = {}\nthreads = {}\nout = \"{}\"\ncache = \"{}\"\n", c.tol, c.seed, c.threads,
                   c.out, c.cache);
  s += fmt::format("\n[green]\nrho_cells = {:.17g}\nrandom_pairs = {}\nbmo_centers = {}\npairs = [", c.green.rho_cells,
                   c.green.random_pairs, c.green.bmo_centers);
  for (std::size_t k = 0; k < c.green.pairs.size(); ++k) {
    const auto& [x, y] = c.green.pairs[k];
    s += fmt::format("{}[{:.17g}, {:.17g}, {:.17g}, {:.17g}]", k ? ", " : "", x[0], x[1], y[0], y[1]);
  }
  s += "]\n";
  s += fmt::format("\n[rates]\nF = \"{}\"\ng = \"{}\"\ninterior = [{:.17g}, {:.17g}]\n", c.rates.F, c.rates.g,
                   c.rates.interior.lo, c.rates.interior.hi);
  if (c.preset.empty()) s += "\n" + serialize(c.set);
  return s;
}

}  // namespace homog2d
