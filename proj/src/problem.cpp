#include "bfopt/problem.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>

#include "bfopt/errors.hpp"

namespace bfopt::problem {

namespace {

// ---------------------------------------------------------------------------
// Minimal reader for the sectioned key/value problem format: [table] and
// [[table.array]] headers, key = value lines, values being quoted strings,
// numbers, booleans, or single-line arrays of numbers/strings. Comments start
// with '#' outside quotes.

struct Value {
  enum class Type { String, Number, Bool, NumberArray, StringArray };
  Type type = Type::Number;
  std::string str;
  double number = 0.0;
  bool boolean = false;
  std::vector<double> numbers;
  std::vector<std::string> strings;
  int line = 0;
};

using Table = std::map<std::string, Value>;

struct Document {
  std::map<std::string, Table> tables;            // [problem], [dynamics], ...
  std::map<std::string, std::vector<Table>> arrays;  // [[dynamics.region]]
};

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (c == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

[[noreturn]] void fail_at(int line, const std::string& message) {
  throw ParseError(message, line, 1);
}

std::string parse_quoted(const std::string& text, std::size_t& pos, int line) {
  if (text[pos] != '"') fail_at(line, "expected a quoted string");
  ++pos;
  std::string out;
  while (pos < text.size()) {
    const char c = text[pos++];
    if (c == '\\' && pos < text.size()) {
      out.push_back(text[pos++]);
    } else if (c == '"') {
      return out;
    } else {
      out.push_back(c);
    }
  }
  fail_at(line, "unterminated string");
}

double parse_number_token(const std::string& token, int line) {
  const char* start = token.c_str();
  char* end = nullptr;
  const double v = std::strtod(start, &end);
  if (end != start + token.size() || token.empty())
    fail_at(line, "invalid number '" + token + "'");
  return v;
}

Value parse_value(const std::string& raw, int line) {
  Value v;
  v.line = line;
  const std::string text = trim(raw);
  if (text.empty()) fail_at(line, "missing value");
  if (text == "true" || text == "false") {
    v.type = Value::Type::Bool;
    v.boolean = text == "true";
    return v;
  }
  if (text[0] == '"') {
    std::size_t pos = 0;
    v.type = Value::Type::String;
    v.str = parse_quoted(text, pos, line);
    if (trim(text.substr(pos)) != "") fail_at(line, "unexpected trailing input");
    return v;
  }
  if (text[0] == '[') {
    if (text.back() != ']') fail_at(line, "unterminated array");
    std::string body = text.substr(1, text.size() - 2);
    std::vector<std::string> elements;
    std::string current;
    bool in_string = false;
    for (std::size_t i = 0; i < body.size(); ++i) {
      const char c = body[i];
      if (c == '"' && (i == 0 || body[i - 1] != '\\')) in_string = !in_string;
      if (c == ',' && !in_string) {
        elements.push_back(current);
        current.clear();
      } else {
        current.push_back(c);
      }
    }
    if (!trim(current).empty() || !elements.empty()) elements.push_back(current);
    bool strings = false;
    for (const std::string& e : elements)
      if (!trim(e).empty() && trim(e)[0] == '"') strings = true;
    if (strings) {
      v.type = Value::Type::StringArray;
      for (const std::string& e : elements) {
        const std::string t = trim(e);
        std::size_t pos = 0;
        v.strings.push_back(parse_quoted(t, pos, line));
      }
    } else {
      v.type = Value::Type::NumberArray;
      for (const std::string& e : elements) v.numbers.push_back(parse_number_token(trim(e), line));
    }
    return v;
  }
  v.type = Value::Type::Number;
  v.number = parse_number_token(text, line);
  return v;
}

Document parse_document(const std::string& text) {
  Document doc;
  std::istringstream in(text);
  std::string raw;
  Table* current = nullptr;
  std::string current_name;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      const bool array = line.size() > 1 && line[1] == '[';
      const std::string closer = array ? "]]" : "]";
      if (line.substr(line.size() - closer.size()) != closer)
        fail_at(line_no, "malformed section header");
      const std::string name =
          trim(line.substr(array ? 2 : 1, line.size() - 2 * (array ? 2 : 1)));
      if (name.empty()) fail_at(line_no, "empty section name");
      if (array) {
        doc.arrays[name].emplace_back();
        current = &doc.arrays[name].back();
      } else {
        if (doc.tables.count(name)) fail_at(line_no, "duplicate section [" + name + "]");
        current = &doc.tables[name];
      }
      current_name = name;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail_at(line_no, "expected key = value");
    if (!current) fail_at(line_no, "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) fail_at(line_no, "empty key");
    if (current->count(key))
      fail_at(line_no, "duplicate key '" + key + "' in [" + current_name + "]");
    (*current)[key] = parse_value(line.substr(eq + 1), line_no);
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Typed field access with error messages carrying the field path.

class Fields {
 public:
  Fields(Table& table, std::string path) : table_(table), path_(std::move(path)) {}

  bool has(const std::string& key) const { return table_.count(key) != 0; }

  const Value& get(const std::string& key) {
    auto it = table_.find(key);
    if (it == table_.end()) throw SpecError("missing required field " + path_ + "." + key);
    used_.push_back(key);
    return it->second;
  }

  std::string get_string(const std::string& key) {
    const Value& v = get(key);
    if (v.type != Value::Type::String) bad(key, "a string");
    return v.str;
  }

  double get_real(const std::string& key) {
    const Value& v = get(key);
    if (v.type != Value::Type::Number) bad(key, "a number");
    return v.number;
  }

  long get_int(const std::string& key) {
    const double v = get_real(key);
    const long n = std::lround(v);
    if (std::abs(v - static_cast<double>(n)) > 1e-9) bad(key, "an integer");
    return n;
  }

  VectorXd get_vector(const std::string& key) {
    const Value& v = get(key);
    if (v.type != Value::Type::NumberArray) bad(key, "an array of numbers");
    VectorXd out(static_cast<Eigen::Index>(v.numbers.size()));
    for (std::size_t i = 0; i < v.numbers.size(); ++i) out[i] = v.numbers[i];
    return out;
  }

  std::vector<std::string> get_strings(const std::string& key) {
    const Value& v = get(key);
    if (v.type != Value::Type::StringArray) bad(key, "an array of strings");
    return v.strings;
  }

  void check_all_used() const {
    for (const auto& [key, value] : table_) {
      bool known = false;
      for (const std::string& u : used_)
        if (u == key) known = true;
      if (!known)
        throw SpecError("unknown field " + path_ + "." + key + " (line " +
                        std::to_string(value.line) + ")");
    }
  }

 private:
  [[noreturn]] void bad(const std::string& key, const std::string& expected) {
    throw SpecError("field " + path_ + "." + key + " must be " + expected);
  }

  Table& table_;
  std::string path_;
  std::vector<std::string> used_;
};

ExprDef make_expr(const std::string& text, const expr::Dims& dims, const std::string& where) {
  ExprDef def;
  def.text = text;
  try {
    def.ast = expr::parse_expression(text, dims);
  } catch (const ParseError& e) {
    throw SpecError("in " + where + ": " + e.what());
  }
  def.code = expr::CompiledExpr(*def.ast);
  return def;
}

std::vector<ExprDef> make_exprs(const std::vector<std::string>& texts, const expr::Dims& dims,
                                const std::string& where, int expected) {
  if (static_cast<int>(texts.size()) != expected)
    throw SpecError(where + " must list exactly " + std::to_string(expected) +
                    " expressions, got " + std::to_string(texts.size()));
  std::vector<ExprDef> out;
  for (std::size_t i = 0; i < texts.size(); ++i)
    out.push_back(make_expr(texts[i], dims, where + "[" + std::to_string(i) + "]"));
  return out;
}

std::string format_number(double v) {
  // Shortest representation that round-trips.
  char buf[64];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_vector(const VectorXd& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_number(v[i]);
  }
  return out + "]";
}

std::string format_exprs(const std::vector<ExprDef>& defs) {
  std::string out = "[";
  for (std::size_t i = 0; i < defs.size(); ++i) {
    if (i) out += ", ";
    out += quote(defs[i].text);
  }
  return out + "]";
}

}  // namespace

long ProblemSpec::steps() const { return std::lround(tf / dt); }

void ProblemSpec::validate() const {
  if (n_x < 1) throw SpecError("[problem].n_x must be >= 1");
  if (n_u < 1) throw SpecError("[problem].n_u must be >= 1");
  if (!(tf > 0.0)) throw SpecError("[problem].tf must be > 0");
  if (!(dt > 0.0)) throw SpecError("[problem].dt must be > 0");
  const double ratio = tf / dt;
  const long n = std::lround(ratio);
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) >= 1e-9)
    throw SpecError("[problem].tf must be an integer number of dt steps");
  if (x0.size() != n_x) throw SpecError("[problem].x0 must have n_x entries");
  if (xf && xf->size() != n_x) throw SpecError("[problem].xf must have n_x entries");
  if (u_min.size() != n_u || u_max.size() != n_u)
    throw SpecError("[problem] control bounds must have n_u entries");
  for (int j = 0; j < n_u; ++j)
    if (u_min[j] > u_max[j]) throw SpecError("[problem].u_min must be <= u_max");

  switch (dynamics) {
    case DynamicsKind::Smooth:
      if (static_cast<int>(f.size()) != n_x)
        throw SpecError("[dynamics].f must have n_x expressions");
      break;
    case DynamicsKind::Switched: {
      if (regions.empty()) throw SpecError("[dynamics] switched needs at least one region");
      for (const RegionDef& r : regions)
        if (static_cast<int>(r.f.size()) != n_x)
          throw SpecError("[dynamics.region].f must have n_x expressions");
      const RegionDef& last = regions.back();
      if (!last.guard || !expr::is_true_literal(*last.guard))
        throw SpecError("the final [dynamics.region].guard must be the catch-all \"true\"");
      break;
    }
    case DynamicsKind::Delayed: {
      if (static_cast<int>(f.size()) != n_x)
        throw SpecError("[dynamics].f must have n_x expressions");
      if (!(tau > 0.0)) throw SpecError("[dynamics].tau must be > 0");
      const double dratio = tau / dt;
      const long d = std::lround(dratio);
      if (d < 1 || std::abs(dratio - static_cast<double>(d)) >= 1e-9)
        throw SpecError("[dynamics].tau must be an integer multiple of dt");
      if (static_cast<int>(history.size()) != n_x)
        throw SpecError("[dynamics].history must have n_x expressions");
      break;
    }
  }

  if (!stage.ast) throw SpecError("[cost].stage is required");
  if (solver.m < 1) throw SpecError("[solver].m must be >= 1");
  if (!(solver.alpha > 0.0) || !(solver.beta > 0.0))
    throw SpecError("[solver] step sizes must be > 0");
  if (solver.rho < 0.0) throw SpecError("[solver].rho must be >= 0");
  if (!(solver.epsilon > 0.0)) throw SpecError("[solver].epsilon must be > 0");
  if (solver.samples < 0) throw SpecError("[solver].samples must be >= 0");
  if (!(solver.tol > 0.0)) throw SpecError("[solver].tol must be > 0");
  if (!(solver.feas_tol > 0.0)) throw SpecError("[solver].feas_tol must be > 0");
  if (solver.tol_window < 1) throw SpecError("[solver].tol_window must be >= 1");
  if (solver.max_iter < 1) throw SpecError("[solver].max_iter must be >= 1");
}

ProblemSpec parse_problem_text(const std::string& text, const std::string& origin) {
  Document doc;
  try {
    doc = parse_document(text);
  } catch (const ParseError& e) {
    throw SpecError(origin + ": " + e.what());
  }
  for (const auto& [name, table] : doc.tables)
    if (name != "problem" && name != "dynamics" && name != "cost" && name != "solver")
      throw SpecError(origin + ": unknown section [" + name + "]");
  for (const auto& [name, tables] : doc.arrays)
    if (name != "dynamics.region")
      throw SpecError(origin + ": unknown section [[" + name + "]]");

  ProblemSpec spec;
  if (!doc.tables.count("problem")) throw SpecError(origin + ": missing [problem] section");
  {
    Fields p(doc.tables["problem"], "[problem]");
    spec.name = p.get_string("name");
    spec.n_x = static_cast<int>(p.get_int("n_x"));
    spec.n_u = static_cast<int>(p.get_int("n_u"));
    if (spec.n_x < 1 || spec.n_u < 1)
      throw SpecError("[problem] dimensions must be >= 1");
    spec.tf = p.get_real("tf");
    spec.dt = p.get_real("dt");
    spec.x0 = p.get_vector("x0");
    if (p.has("xf")) spec.xf = p.get_vector("xf");
    const double inf = std::numeric_limits<double>::infinity();
    spec.u_min = VectorXd::Constant(spec.n_u, -inf);
    spec.u_max = VectorXd::Constant(spec.n_u, inf);
    if (p.has("u_min")) spec.u_min = p.get_vector("u_min");
    if (p.has("u_max")) spec.u_max = p.get_vector("u_max");
    p.check_all_used();
  }

  const expr::Dims field_dims{spec.n_x, spec.n_u, false};
  const expr::Dims delayed_dims{spec.n_x, spec.n_u, true};
  const expr::Dims time_dims{0, 0, false};

  if (!doc.tables.count("dynamics")) throw SpecError(origin + ": missing [dynamics] section");
  {
    Fields d(doc.tables["dynamics"], "[dynamics]");
    const std::string kind = d.get_string("kind");
    if (kind == "smooth") {
      spec.dynamics = DynamicsKind::Smooth;
      spec.f = make_exprs(d.get_strings("f"), field_dims, "[dynamics].f", spec.n_x);
    } else if (kind == "delayed") {
      spec.dynamics = DynamicsKind::Delayed;
      spec.f = make_exprs(d.get_strings("f"), delayed_dims, "[dynamics].f", spec.n_x);
      spec.tau = d.get_real("tau");
      spec.history =
          make_exprs(d.get_strings("history"), time_dims, "[dynamics].history", spec.n_x);
    } else if (kind == "switched") {
      spec.dynamics = DynamicsKind::Switched;
      auto it = doc.arrays.find("dynamics.region");
      if (it == doc.arrays.end() || it->second.empty())
        throw SpecError(origin + ": switched dynamics need [[dynamics.region]] entries");
      int index = 0;
      for (Table& table : it->second) {
        const std::string path = "[dynamics.region][" + std::to_string(index) + "]";
        Fields r(table, path);
        RegionDef region;
        region.guard_text = r.get_string("guard");
        try {
          region.guard = expr::parse_guard(region.guard_text, spec.n_x);
        } catch (const ParseError& e) {
          throw SpecError("in " + path + ".guard: " + e.what());
        }
        region.compiled_guard = expr::CompiledGuard(*region.guard);
        region.f = make_exprs(r.get_strings("f"), field_dims, path + ".f", spec.n_x);
        r.check_all_used();
        spec.regions.push_back(std::move(region));
        ++index;
      }
    } else {
      throw SpecError("[dynamics].kind must be smooth, switched or delayed");
    }
    d.check_all_used();
  }
  if (spec.dynamics != DynamicsKind::Switched && doc.arrays.count("dynamics.region"))
    throw SpecError(origin + ": [[dynamics.region]] requires kind = \"switched\"");

  if (!doc.tables.count("cost")) throw SpecError(origin + ": missing [cost] section");
  {
    Fields c(doc.tables["cost"], "[cost]");
    spec.stage = make_expr(c.get_string("stage"), field_dims, "[cost].stage");
    const std::string terminal =
        c.has("terminal") ? c.get_string("terminal") : std::string("0");
    spec.terminal = make_expr(terminal, expr::Dims{spec.n_x, 0, false}, "[cost].terminal");
    c.check_all_used();
  }

  if (doc.tables.count("solver")) {
    Fields s(doc.tables["solver"], "[solver]");
    SolverSettings& out = spec.solver;
    if (s.has("basis")) out.basis = basis::basis_kind_from_string(s.get_string("basis"));
    if (s.has("m")) out.m = static_cast<int>(s.get_int("m"));
    if (s.has("alpha")) out.alpha = s.get_real("alpha");
    if (s.has("beta")) out.beta = s.get_real("beta");
    if (s.has("schedule"))
      out.schedule = optimizer::schedule_kind_from_string(s.get_string("schedule"));
    if (s.has("rho")) out.rho = s.get_real("rho");
    if (s.has("epsilon")) out.epsilon = s.get_real("epsilon");
    if (s.has("samples")) out.samples = static_cast<int>(s.get_int("samples"));
    if (s.has("tol")) out.tol = s.get_real("tol");
    if (s.has("feas_tol")) out.feas_tol = s.get_real("feas_tol");
    if (s.has("tol_window")) out.tol_window = static_cast<int>(s.get_int("tol_window"));
    if (s.has("max_iter")) out.max_iter = static_cast<int>(s.get_int("max_iter"));
    if (s.has("seed")) out.seed = static_cast<std::uint64_t>(s.get_int("seed"));
    if (s.has("estimator"))
      out.estimator = estimator::estimator_kind_from_string(s.get_string("estimator"));
    if (s.has("mu_mode")) out.mu_mode = optimizer::mu_mode_from_string(s.get_string("mu_mode"));
    s.check_all_used();
  }

  spec.validate();
  return spec;
}

ProblemSpec parse_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot read problem file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_problem_text(buffer.str(), path);
}

std::string serialize_problem(const ProblemSpec& spec) {
  std::ostringstream os;
  os << "[problem]\n";
  os << "name = " << quote(spec.name) << "\n";
  os << "n_x = " << spec.n_x << "\n";
  os << "n_u = " << spec.n_u << "\n";
  os << "tf = " << format_number(spec.tf) << "\n";
  os << "dt = " << format_number(spec.dt) << "\n";
  os << "x0 = " << format_vector(spec.x0) << "\n";
  if (spec.xf) os << "xf = " << format_vector(*spec.xf) << "\n";
  if ((spec.u_min.array() > -std::numeric_limits<double>::infinity()).any())
    os << "u_min = " << format_vector(spec.u_min) << "\n";
  if ((spec.u_max.array() < std::numeric_limits<double>::infinity()).any())
    os << "u_max = " << format_vector(spec.u_max) << "\n";

  os << "\n[dynamics]\n";
  switch (spec.dynamics) {
    case DynamicsKind::Smooth:
      os << "kind = \"smooth\"\n";
      os << "f = " << format_exprs(spec.f) << "\n";
      break;
    case DynamicsKind::Delayed:
      os << "kind = \"delayed\"\n";
      os << "f = " << format_exprs(spec.f) << "\n";
      os << "tau = " << format_number(spec.tau) << "\n";
      os << "history = " << format_exprs(spec.history) << "\n";
      break;
    case DynamicsKind::Switched:
      os << "kind = \"switched\"\n";
      for (const RegionDef& region : spec.regions) {
        os << "\n[[dynamics.region]]\n";
        os << "guard = " << quote(region.guard_text) << "\n";
        os << "f = " << format_exprs(region.f) << "\n";
      }
      break;
  }

  os << "\n[cost]\n";
  os << "stage = " << quote(spec.stage.text) << "\n";
  os << "terminal = " << quote(spec.terminal.text) << "\n";

  const SolverSettings& s = spec.solver;
  os << "\n[solver]\n";
  os << "basis = " << quote(basis::to_string(s.basis)) << "\n";
  os << "m = " << s.m << "\n";
  os << "alpha = " << format_number(s.alpha) << "\n";
  os << "beta = " << format_number(s.beta) << "\n";
  os << "schedule = " << quote(optimizer::to_string(s.schedule)) << "\n";
  os << "rho = " << format_number(s.rho) << "\n";
  os << "epsilon = " << format_number(s.epsilon) << "\n";
  os << "samples = " << s.samples << "\n";
  os << "tol = " << format_number(s.tol) << "\n";
  os << "feas_tol = " << format_number(s.feas_tol) << "\n";
  os << "tol_window = " << s.tol_window << "\n";
  os << "max_iter = " << s.max_iter << "\n";
  os << "seed = " << s.seed << "\n";
  os << "estimator = " << quote(estimator::to_string(s.estimator)) << "\n";
  os << "mu_mode = " << quote(optimizer::to_string(s.mu_mode)) << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Bundled benchmark problems. Defined in the file format and routed through
// the parser so that every builtin is also a format example.

namespace {

const char* kEx1 = R"pb(# First-order system with a fixed terminal state.
[problem]
name = "ex1"
n_x = 1
n_u = 1
tf = 1.0
dt = 0.01
x0 = [2.0]
xf = [4.0]

[dynamics]
kind = "smooth"
f = ["x1 + u1"]

[cost]
stage = "x1^2 + u1^2"
terminal = "0"

[solver]
basis = "chebyshev"
m = 4
alpha = 0.01
beta = 0.01
rho = 25.0
epsilon = 0.001
tol = 0.01
feas_tol = 0.015
max_iter = 30000
)pb";

const char* kEx2 = R"pb(# Four-region state-dependent switched system with bounded input.
[problem]
name = "ex2"
n_x = 2
n_u = 1
tf = 2.0
dt = 0.01
x0 = [-8.0, -6.0]
xf = [0.0, 0.0]
u_min = [-10.0]
u_max = [10.0]

[dynamics]
kind = "switched"

[[dynamics.region]]
guard = "x1 <= -5 && x2 <= -5"
f = ["-x1 + 2*x2 + u1", "-2*x1 - x2 + u1"]

[[dynamics.region]]
guard = "x1 <= x2 && (x1 <= -2 || x2 <= -2)"
f = ["-x1 - 2*x2 + u1", "x1 - 0.5*x2 + u1"]

[[dynamics.region]]
guard = "x1 <= -2 || x2 <= -2"
f = ["-0.5*x1 - 5*x2 + u1", "x1 - 0.5*x2 + u1"]

[[dynamics.region]]
guard = "true"
f = ["-x1 + u1", "2*x1 - x2 + u1"]

[cost]
stage = "0.5*(x1^2 + x2^2 + u1^2)"
terminal = "0"

[solver]
basis = "legendre"
m = 28
alpha = 0.01
beta = 0.01
rho = 5.0
epsilon = 0.01
tol = 0.01
feas_tol = 0.05
tol_window = 500
max_iter = 30000
estimator = "central"
)pb";

const char* kEx3 = R"pb(# First-order system with a constant state delay of one time unit.
[problem]
name = "ex3"
n_x = 1
n_u = 1
tf = 2.0
dt = 0.01
x0 = [1.0]
xf = [0.0]

[dynamics]
kind = "delayed"
f = ["x1 + xd1 + u1"]
tau = 1.0
history = ["1"]

[cost]
stage = "x1^2 + u1^2"
terminal = "0"

[solver]
basis = "legendre"
m = 10
alpha = 0.01
beta = 0.01
rho = 1.0
epsilon = 0.001
tol = 0.01
feas_tol = 0.015
max_iter = 30000
)pb";

}  // namespace

ProblemSpec builtin(const std::string& name) {
  if (name == "ex1") return parse_problem_text(kEx1, "builtin:ex1");
  if (name == "ex2") return parse_problem_text(kEx2, "builtin:ex2");
  if (name == "ex3") return parse_problem_text(kEx3, "builtin:ex3");
  throw SpecError("unknown builtin problem '" + name + "' (available: ex1, ex2, ex3)");
}

std::vector<std::string> builtin_names() { return {"ex1", "ex2", "ex3"}; }

// ---------------------------------------------------------------------------
// Lowering to runtime callables. All closures share one immutable copy of the
// spec, which keeps them safe for concurrent rollouts.

namespace {

using SharedSpec = std::shared_ptr<const ProblemSpec>;

dynamics::SmoothFieldFn smooth_field_from(const SharedSpec& s,
                                          const std::vector<ExprDef>* fields) {
  return [s, fields](const VectorXd& x, const VectorXd& u, double t, VectorXd& dx) {
    expr::Bindings b{x.data(), nullptr, u.data(), t};
    for (std::size_t i = 0; i < fields->size(); ++i) dx[i] = (*fields)[i].code.eval(b);
  };
}

}  // namespace

dynamics::SmoothFieldFn make_smooth_field(const ProblemSpec& spec) {
  auto s = std::make_shared<const ProblemSpec>(spec);
  return smooth_field_from(s, &s->f);
}

dynamics::RegionSpec make_region_spec(const ProblemSpec& spec) {
  auto s = std::make_shared<const ProblemSpec>(spec);
  dynamics::RegionSpec out;
  for (const RegionDef& region : s->regions) {
    dynamics::Region entry;
    const RegionDef* def = &region;
    entry.guard = [s, def](const VectorXd& x, double t) {
      expr::Bindings b{x.data(), nullptr, nullptr, t};
      return def->compiled_guard.eval(b);
    };
    entry.field = smooth_field_from(s, &def->f);
    out.regions.push_back(std::move(entry));
  }
  return out;
}

dynamics::DelayedFieldFn make_delayed_field(const ProblemSpec& spec) {
  auto s = std::make_shared<const ProblemSpec>(spec);
  return [s](const VectorXd& x, const VectorXd& xd, const VectorXd& u, double t,
             VectorXd& dx) {
    expr::Bindings b{x.data(), xd.data(), u.data(), t};
    for (std::size_t i = 0; i < s->f.size(); ++i) dx[i] = s->f[i].code.eval(b);
  };
}

dynamics::DelaySpec make_delay_spec(const ProblemSpec& spec) {
  auto s = std::make_shared<const ProblemSpec>(spec);
  dynamics::DelaySpec out;
  out.tau = s->tau;
  out.history = [s](double t, VectorXd& x) {
    expr::Bindings b{nullptr, nullptr, nullptr, t};
    for (std::size_t i = 0; i < s->history.size(); ++i) x[i] = s->history[i].code.eval(b);
  };
  return out;
}

cost::CostSpec make_cost_spec(const ProblemSpec& spec) {
  auto s = std::make_shared<const ProblemSpec>(spec);
  cost::CostSpec out;
  out.stage = [s](const VectorXd& x, const VectorXd& u, double t) {
    expr::Bindings b{x.data(), nullptr, u.data(), t};
    return s->stage.code.eval(b);
  };
  out.terminal = [s](const VectorXd& x) {
    expr::Bindings b{x.data(), nullptr, nullptr, s->tf};
    return s->terminal.code.eval(b);
  };
  out.target = s->xf;
  out.rho = s->solver.rho;
  return out;
}

optimizer::ControlProblem make_control_problem(const ProblemSpec& spec) {
  spec.validate();
  optimizer::ControlProblem out;
  out.name = spec.name;
  out.n_x = spec.n_x;
  out.n_u = spec.n_u;
  out.n_steps = spec.steps();
  out.dt = spec.dt;
  out.tf = spec.tf;
  out.x0 = spec.x0;
  out.target = spec.xf;
  out.u_min = spec.u_min;
  out.u_max = spec.u_max;
  out.cost = make_cost_spec(spec);

  const VectorXd x0 = spec.x0;
  const double dt = spec.dt;
  const long n = spec.steps();
  switch (spec.dynamics) {
    case DynamicsKind::Smooth: {
      auto field = make_smooth_field(spec);
      out.rollout = [field, x0, dt, n](const Eigen::MatrixXd& u, dynamics::Trajectory& t) {
        dynamics::rollout_smooth_into(field, x0, u, dt, n, t);
      };
      break;
    }
    case DynamicsKind::Switched: {
      auto regions = std::make_shared<const dynamics::RegionSpec>(make_region_spec(spec));
      out.rollout = [regions, x0, dt, n](const Eigen::MatrixXd& u, dynamics::Trajectory& t) {
        dynamics::rollout_switched_into(*regions, x0, u, dt, n, t);
      };
      break;
    }
    case DynamicsKind::Delayed: {
      auto field = make_delayed_field(spec);
      auto delay = std::make_shared<const dynamics::DelaySpec>(make_delay_spec(spec));
      out.rollout = [field, delay, x0, dt, n](const Eigen::MatrixXd& u,
                                              dynamics::Trajectory& t) {
        dynamics::rollout_delayed_into(field, *delay, x0, u, dt, n, t);
      };
      break;
    }
  }
  return out;
}

optimizer::SolveConfig make_solve_config(const ProblemSpec& spec) {
  const SolverSettings& s = spec.solver;
  optimizer::SolveConfig cfg;
  cfg.basis = basis::BasisSet{s.basis, s.m, spec.tf};
  cfg.schedule.kind = s.schedule;
  cfg.schedule.alpha0 = s.alpha;
  cfg.schedule.beta0 = s.beta;
  cfg.rho = s.rho;
  cfg.tol = s.tol;
  cfg.feas_tol = s.feas_tol;
  cfg.tol_window = s.tol_window;
  cfg.max_iter = s.max_iter;
  cfg.scheme.kind = s.estimator;
  cfg.scheme.epsilon = s.epsilon;
  cfg.scheme.samples = s.samples;
  cfg.scheme.seed = s.seed;
  cfg.mu_mode = s.mu_mode;
  return cfg;
}

}  // namespace bfopt::problem
