#include "millopt/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "millopt/errors.hpp"

namespace millopt {

namespace {

struct Value {
  enum class Kind { Number, String, Bool, Array } kind = Kind::Number;
  double num = 0.0;
  bool integral = false;
  std::string str;
  bool flag = false;
  std::vector<Value> items;
  int line = 0;
};

struct Entry {
  Value value;
  bool used = false;
};

struct Section {
  int line = 0;
  std::map<std::string, Entry> entries;
};

class Parser {
 public:
  Parser(std::string_view text, std::string_view source) : s_(text), source_(source) {}

  std::map<std::string, Section> run() {
    std::map<std::string, Section> out;
    Section* current = nullptr;
    std::string current_name;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        const int header_line = line_;
        ++pos_;
        skip_spaces();
        std::string name = bare_key();
        skip_spaces();
        expect(']');
        end_of_line();
        if (out.count(name)) error("section [" + name + "] appears twice");
        current = &out[name];
        current->line = header_line;
        current_name = name;
        continue;
      }
      const int key_line = line_;
      std::string key = bare_key();
      skip_spaces();
      expect('=');
      skip_spaces();
      Value v = value();
      end_of_line();
      if (!current) error_at(key_line, "key '" + key + "' outside of any section");
      if (current->entries.count(key)) {
        error_at(key_line, "duplicate key '" + key + "' in [" + current_name + "]");
      }
      v.line = key_line;
      current->entries[key] = Entry{std::move(v), false};
    }
    return out;
  }

 private:
  std::string_view s_;
  std::string_view source_;
  std::size_t pos_ = 0;
  int line_ = 1;

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }

  [[noreturn]] void error(const std::string& msg) const { error_at(line_, msg); }
  [[noreturn]] void error_at(int line, const std::string& msg) const {
    throw ConfigError(std::string(source_) + ":" + std::to_string(line) + ": " + msg);
  }

  void skip_spaces() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
  }
  void skip_comment() {
    if (peek() == '#') {
      while (!eof() && peek() != '\n') ++pos_;
    }
  }
  void skip_blank_lines() {
    while (true) {
      skip_spaces();
      skip_comment();
      if (peek() == '\n') {
        ++pos_;
        ++line_;
        continue;
      }
      return;
    }
  }
  // Whitespace, comments and newlines inside arrays.
  void skip_any() {
    while (true) {
      skip_spaces();
      skip_comment();
      if (peek() != '\n') return;
      ++pos_;
      ++line_;
    }
  }
  void end_of_line() {
    skip_spaces();
    skip_comment();
    if (eof()) return;
    if (peek() != '\n') error(std::string("unexpected character '") + peek() + "'");
    ++pos_;
    ++line_;
  }
  void expect(char c) {
    if (peek() != c) error(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string bare_key() {
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
    if (pos_ == start) error("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  Value value() {
    Value v;
    v.line = line_;
    const char c = peek();
    if (c == '"') {
      v.kind = Value::Kind::String;
      ++pos_;
      while (!eof() && peek() != '"') {
        if (peek() == '\n') error("unterminated string");
        if (peek() == '\\') {
          ++pos_;
          const char e = peek();
          v.str += e == 'n' ? '\n' : e == 't' ? '\t' : e;
        } else {
          v.str += peek();
        }
        ++pos_;
      }
      expect('"');
      return v;
    }
    if (c == '[') {
      v.kind = Value::Kind::Array;
      ++pos_;
      skip_any();
      while (peek() != ']') {
        v.items.push_back(value());
        skip_any();
        if (peek() == ',') {
          ++pos_;
          skip_any();
        } else if (peek() != ']') {
          error("expected ',' or ']' in array");
        }
      }
      ++pos_;
      return v;
    }
    if (s_.substr(pos_, 4) == "true") {
      pos_ += 4;
      v.kind = Value::Kind::Bool;
      v.flag = true;
      return v;
    }
    if (s_.substr(pos_, 5) == "false") {
      pos_ += 5;
      v.kind = Value::Kind::Bool;
      return v;
    }
    const std::size_t start = pos_;
    while (!eof() && (std::isdigit(static_cast<unsigned char>(peek())) || std::strchr("+-.eE_", peek()))) ++pos_;
    std::string tok(s_.substr(start, pos_ - start));
    tok.erase(std::remove(tok.begin(), tok.end(), '_'), tok.end());
    if (tok.empty()) error("expected a value");
    char* end = nullptr;
    v.num = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || !std::isfinite(v.num)) error("malformed number '" + tok + "'");
    v.integral = tok.find_first_of(".eE") == std::string::npos;
    return v;
  }
};

class Reader {
 public:
  Reader(std::map<std::string, Section> sections, std::string source)
      : sections_(std::move(sections)), source_(std::move(source)) {
    static const std::map<std::string, std::set<std::string>> known{
        {"grid", {"dims", "h", "origin", "passive"}},
        {"filter", {"kind", "r_min"}},
        {"shadow", {"angles", "directions", "peclet", "source_factor"}},
        {"project", {"p_mean", "beta", "eta"}},
        {"material", {"e_max", "e_min", "nu", "simp_p", "e_min_schedule", "e_min_factor"}},
        {"loads", {"supports", "load_at", "load_force"}},
        {"mma", {"asyinit", "asyincr", "asydecr", "asymin", "move_limit"}},
        {"run", {"v_star", "rho_init", "max_iters", "change_tol", "reference"}},
        {"solver", {"kind", "direct_limit", "rel_tol", "max_iters", "restart"}}};
    for (const auto& [name, sec] : sections_) {
      const auto k = known.find(name);
      if (k == known.end()) fail(sec.line, "unknown section [" + name + "]");
      for (const auto& [key, e] : sec.entries) {
        if (!k->second.count(key)) fail(e.value.line, "unknown key '" + key + "' in [" + name + "]");
      }
    }
  }

  bool has(const std::string& sec, const std::string& key) const {
    auto it = sections_.find(sec);
    return it != sections_.end() && it->second.entries.count(key);
  }

  const Value* find(const std::string& sec, const std::string& key) {
    auto it = sections_.find(sec);
    if (it == sections_.end()) return nullptr;
    auto e = it->second.entries.find(key);
    if (e == it->second.entries.end()) return nullptr;
    e->second.used = true;
    return &e->second.value;
  }

  const Value& require(const std::string& sec, const std::string& key) {
    const Value* v = find(sec, key);
    if (!v) throw ConfigError(source_ + ": missing required key '" + key + "' in [" + sec + "]");
    return *v;
  }

  double number(const Value& v, const std::string& what) const {
    if (v.kind != Value::Kind::Number) fail(v.line, what + " must be a number");
    return v.num;
  }
  int integer(const Value& v, const std::string& what) const {
    const double d = number(v, what);
    if (d != std::floor(d) || std::abs(d) > 2e9) fail(v.line, what + " must be an integer");
    return static_cast<int>(d);
  }
  std::string string(const Value& v, const std::string& what) const {
    if (v.kind != Value::Kind::String) fail(v.line, what + " must be a string");
    return v.str;
  }
  bool boolean(const Value& v, const std::string& what) const {
    if (v.kind != Value::Kind::Bool) fail(v.line, what + " must be true or false");
    return v.flag;
  }
  const std::vector<Value>& array(const Value& v, const std::string& what) const {
    if (v.kind != Value::Kind::Array) fail(v.line, what + " must be an array");
    return v.items;
  }
  std::vector<double> numbers(const Value& v, const std::string& what) const {
    std::vector<double> out;
    for (const Value& x : array(v, what)) out.push_back(number(x, what + " entries"));
    return out;
  }

  void get(const std::string& sec, const std::string& key, double& out) {
    if (const Value* v = find(sec, key)) out = number(*v, sec + "." + key);
  }
  void get(const std::string& sec, const std::string& key, int& out) {
    if (const Value* v = find(sec, key)) out = integer(*v, sec + "." + key);
  }
  void get(const std::string& sec, const std::string& key, bool& out) {
    if (const Value* v = find(sec, key)) out = boolean(*v, sec + "." + key);
  }

  void check_unused() const {
    for (const auto& [name, sec] : sections_) {
      for (const auto& [key, e] : sec.entries) {
        if (!e.used) fail(e.value.line, "unknown key '" + key + "' in [" + name + "]");
      }
    }
  }

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
  }

 private:
  std::map<std::string, Section> sections_;
  std::string source_;
};

Vec3 to_vec(const std::vector<double>& v, std::size_t dim, Reader& r, int line, const std::string& what) {
  if (v.size() != dim) r.fail(line, what + " must have " + std::to_string(dim) + " components");
  Vec3 out{};
  for (std::size_t a = 0; a < dim; ++a) out[a] = v[a];
  return out;
}

std::string fmt(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string fmt_vec(const Vec3& v, int dim) {
  std::string s = "[";
  for (int a = 0; a < dim; ++a) s += (a ? ", " : "") + fmt(v[a]);
  return s + "]";
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

ParsedConfig parse_config_text(std::string_view text, std::string_view source) {
  Reader r(Parser(text, source).run(), std::string(source));
  ParsedConfig pc;
  RunConfig& c = pc.config;

  // [grid]
  {
    const Value& dv = r.require("grid", "dims");
    for (const Value& x : r.array(dv, "grid.dims")) c.grid.dims.push_back(r.integer(x, "grid.dims entries"));
    if (c.grid.dims.size() != 2 && c.grid.dims.size() != 3) r.fail(dv.line, "grid.dims must have 2 or 3 entries");
    c.grid.h = r.number(r.require("grid", "h"), "grid.h");
    const std::size_t dim = c.grid.dims.size();
    if (const Value* v = r.find("grid", "origin")) c.grid.origin = to_vec(r.numbers(*v, "grid.origin"), dim, r, v->line, "grid.origin");
    if (const Value* v = r.find("grid", "passive")) {
      for (const Value& b : r.array(*v, "grid.passive")) {
        const auto nums = r.numbers(b, "grid.passive boxes");
        if (nums.size() != 2 * dim) r.fail(b.line, "each passive box needs " + std::to_string(2 * dim) + " numbers (lo then hi)");
        Box box{};
        for (std::size_t a = 0; a < dim; ++a) {
          box.lo[a] = nums[a];
          box.hi[a] = nums[dim + a];
        }
        c.grid.passive.push_back(box);
      }
    }
  }
  const int dim = static_cast<int>(c.grid.dims.size());

  // [filter]
  if (const Value* v = r.find("filter", "kind")) {
    const std::string k = r.string(*v, "filter.kind");
    if (k == "convolution") {
      c.filter.kind = FilterKind::Convolution;
    } else if (k == "pde") {
      c.filter.kind = FilterKind::PdeHelmholtz;
    } else {
      r.fail(v->line, "filter.kind must be \"convolution\" or \"pde\"");
    }
  }
  r.get("filter", "r_min", c.filter.r_min);

  // [run] first: the reference flag decides whether directions are required.
  r.get("run", "reference", c.reference);
  r.get("run", "v_star", c.v_star);
  r.get("run", "max_iters", c.max_iters);
  r.get("run", "change_tol", c.change_tol);

  // [shadow]
  const Value* angles = r.find("shadow", "angles");
  const Value* dirs = r.find("shadow", "directions");
  if (angles && dirs) r.fail(dirs->line, "give either shadow.angles or shadow.directions, not both");
  if (angles) {
    if (dim != 2) r.fail(angles->line, "shadow.angles is only valid for 2D grids; use shadow.directions");
    c.angles_deg = r.numbers(*angles, "shadow.angles");
    for (double a : c.angles_deg) c.directions.push_back(ToolDirection::from_angle_deg(a));
  } else if (dirs) {
    for (const Value& d : r.array(*dirs, "shadow.directions")) {
      const Vec3 u = to_vec(r.numbers(d, "shadow.directions entries"), dim, r, d.line, "tool direction");
      double n2 = 0.0;
      for (int a = 0; a < dim; ++a) n2 += u[a] * u[a];
      if (!(n2 > 0.0)) r.fail(d.line, "tool direction must be non-zero");
      if (std::abs(std::sqrt(n2) - 1.0) > 1e-12) {
        pc.warnings.push_back("tool direction " + fmt_vec(u, dim) + " normalized to unit length");
      }
      c.directions.push_back(ToolDirection::from_vector(u, dim));
    }
  }
  if (c.directions.empty() && !c.reference) {
    throw ConfigError(std::string(source) + ": [shadow] needs a non-empty 'angles' or 'directions' list");
  }
  if (const Value* v = r.find("shadow", "peclet")) {
    c.peclet = r.number(*v, "shadow.peclet");
  } else {
    double lc = 0.0;
    for (int d : c.grid.dims) lc = std::max(lc, d * c.grid.h);
    c.peclet = peclet_rule_of_thumb(lc);
    pc.warnings.push_back("shadow.peclet not given; using 1e4 / l_c = " + fmt(c.peclet) + " with l_c = " + fmt(lc));
  }
  r.get("shadow", "source_factor", c.source_factor);

  // [project]
  r.get("project", "p_mean", c.aggregate.p_mean);
  r.get("project", "beta", c.aggregate.beta);
  r.get("project", "eta", c.aggregate.eta);

  // [material]
  r.get("material", "e_max", c.material.e_max);
  r.get("material", "e_min", c.material.e_min);
  r.get("material", "nu", c.material.nu);
  r.get("material", "simp_p", c.material.simp_p);
  if (const Value* v = r.find("material", "e_min_schedule")) {
    for (const Value& x : r.array(*v, "material.e_min_schedule")) {
      c.e_min_schedule.iterations.push_back(r.integer(x, "material.e_min_schedule entries"));
    }
  }
  r.get("material", "e_min_factor", c.e_min_schedule.factor);

  // [loads]
  {
    const Value& sv = r.require("loads", "supports");
    for (const Value& x : r.array(sv, "loads.supports")) c.loads.supports.push_back({r.string(x, "loads.supports entries")});
    const Value& at = r.require("loads", "load_at");
    const Value& fv = r.require("loads", "load_force");
    const auto& at_items = r.array(at, "loads.load_at");
    const auto& f_items = r.array(fv, "loads.load_force");
    if (at_items.size() != f_items.size()) r.fail(fv.line, "loads.load_at and loads.load_force must have equal length");
    for (std::size_t i = 0; i < at_items.size(); ++i) {
      NodalLoad l;
      l.at = {r.string(at_items[i], "loads.load_at entries")};
      l.force = to_vec(r.numbers(f_items[i], "loads.load_force entries"), dim, r, f_items[i].line, "load force");
      c.loads.loads.push_back(l);
    }
  }

  // [mma]
  c.mma.asyinit = MmaConfig::asyinit_for_beta(c.aggregate.beta);
  r.get("mma", "asyinit", c.mma.asyinit);
  r.get("mma", "asyincr", c.mma.asyincr);
  r.get("mma", "asydecr", c.mma.asydecr);
  r.get("mma", "asymin", c.mma.asymin);
  r.get("mma", "move_limit", c.mma.move_limit);

  // Initial design follows the guidance of small but non-zero values.
  c.rho_init = c.reference ? 0.5 : c.directions.size() > 1 ? 0.02 : 0.005;
  r.get("run", "rho_init", c.rho_init);

  // [solver]
  if (const Value* v = r.find("solver", "kind")) {
    const std::string k = r.string(*v, "solver.kind");
    if (k == "auto") {
      c.solver.kind = SolverKind::Auto;
    } else if (k == "direct") {
      c.solver.kind = SolverKind::Direct;
    } else if (k == "iterative") {
      c.solver.kind = SolverKind::Iterative;
    } else {
      r.fail(v->line, "solver.kind must be \"auto\", \"direct\" or \"iterative\"");
    }
  }
  if (const Value* v = r.find("solver", "direct_limit")) c.solver.direct_limit = r.integer(*v, "solver.direct_limit");
  r.get("solver", "rel_tol", c.solver.rel_tol);
  r.get("solver", "max_iters", c.solver.max_iters);
  r.get("solver", "restart", c.solver.restart);

  r.check_unused();
  validate(c);
  return pc;
}

ParsedConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

std::string resolved_config_text(const RunConfig& c) {
  const int dim = static_cast<int>(c.grid.dims.size());
  std::ostringstream o;
  o << "# resolved configuration\n\n[grid]\ndims = [";
  for (std::size_t i = 0; i < c.grid.dims.size(); ++i) o << (i ? ", " : "") << c.grid.dims[i];
  o << "]\nh = " << fmt(c.grid.h) << "\norigin = " << fmt_vec(c.grid.origin, dim) << "\npassive = [";
  for (std::size_t i = 0; i < c.grid.passive.size(); ++i) {
    const Box& b = c.grid.passive[i];
    o << (i ? ", " : "") << "[";
    for (int a = 0; a < dim; ++a) o << (a ? ", " : "") << fmt(b.lo[a]);
    for (int a = 0; a < dim; ++a) o << ", " << fmt(b.hi[a]);
    o << "]";
  }
  o << "]\n\n[filter]\nkind = " << (c.filter.kind == FilterKind::Convolution ? "\"convolution\"" : "\"pde\"")
    << "\nr_min = " << fmt(c.filter.r_min) << "\n\n[shadow]\n";
  if (!c.angles_deg.empty()) {
    o << "angles = [";
    for (std::size_t i = 0; i < c.angles_deg.size(); ++i) o << (i ? ", " : "") << fmt(c.angles_deg[i]);
    o << "]\n";
  } else if (!c.directions.empty()) {
    o << "directions = [";
    for (std::size_t i = 0; i < c.directions.size(); ++i) o << (i ? ", " : "") << fmt_vec(c.directions[i].u(), dim);
    o << "]\n";
  }
  o << "peclet = " << fmt(c.peclet) << "\nsource_factor = " << fmt(c.source_factor) << "\n\n[project]\np_mean = "
    << fmt(c.aggregate.p_mean) << "\nbeta = " << fmt(c.aggregate.beta) << "\neta = " << fmt(c.aggregate.eta)
    << "\n\n[material]\ne_max = " << fmt(c.material.e_max) << "\ne_min = " << fmt(c.material.e_min)
    << "\nnu = " << fmt(c.material.nu) << "\nsimp_p = " << fmt(c.material.simp_p) << "\ne_min_schedule = [";
  for (std::size_t i = 0; i < c.e_min_schedule.iterations.size(); ++i) {
    o << (i ? ", " : "") << c.e_min_schedule.iterations[i];
  }
  o << "]\ne_min_factor = " << fmt(c.e_min_schedule.factor) << "\n\n[loads]\nsupports = [";
  for (std::size_t i = 0; i < c.loads.supports.size(); ++i) o << (i ? ", " : "") << quoted(c.loads.supports[i].expr);
  o << "]\nload_at = [";
  for (std::size_t i = 0; i < c.loads.loads.size(); ++i) o << (i ? ", " : "") << quoted(c.loads.loads[i].at.expr);
  o << "]\nload_force = [";
  for (std::size_t i = 0; i < c.loads.loads.size(); ++i) o << (i ? ", " : "") << fmt_vec(c.loads.loads[i].force, dim);
  o << "]\n\n[mma]\nasyinit = " << fmt(c.mma.asyinit) << "\nasyincr = " << fmt(c.mma.asyincr)
    << "\nasydecr = " << fmt(c.mma.asydecr)
    << "\nasymin = " << fmt(c.mma.asymin) << "\nmove_limit = " << fmt(c.mma.move_limit) << "\n\n[run]\nv_star = "
    << fmt(c.v_star) << "\nrho_init = " << fmt(c.rho_init) << "\nmax_iters = " << c.max_iters
    << "\nchange_tol = " << fmt(c.change_tol) << "\nreference = " << (c.reference ? "true" : "false")
    << "\n\n[solver]\nkind = "
    << (c.solver.kind == SolverKind::Auto ? "\"auto\"" : c.solver.kind == SolverKind::Direct ? "\"direct\"" : "\"iterative\"")
    << "\ndirect_limit = " << c.solver.direct_limit << "\nrel_tol = " << fmt(c.solver.rel_tol)
    << "\nmax_iters = " << c.solver.max_iters << "\nrestart = " << c.solver.restart << "\n";
  return o.str();
}

}  // namespace millopt
