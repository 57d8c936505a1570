#pragma once

// Run configuration: a flat structured-text document.
//
//   # comment
//   [section]
//   key = "string" | number | true | false
//
// Keys are addressed as "section.key". Coefficients are expression strings.
// Loading collects every problem (syntax, unknown keys, type mismatches,
// violated hypotheses) and reports them together in one ConfigError.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "varexp/elliptic.hpp"
#include "varexp/error.hpp"
#include "varexp/expr.hpp"
#include "varexp/fde.hpp"
#include "varexp/grid.hpp"
#include "varexp/opkernel.hpp"
#include "varexp/picone.hpp"
#include "varexp/vxspace.hpp"

namespace varexp::cli {

// -- flat document -----------------------------------------------------------------

using Value = std::variant<std::string, double, bool>;

struct Entry {
  Value value;
  int line = 0;
};

class FlatConfig {
 public:
  /// Parses the whole text; throws ConfigError listing every malformed line.
  static FlatConfig parse(std::string_view text) {
    FlatConfig cfg;
    std::vector<std::string> errors;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const std::string line = trim(strip_comment(raw));
      if (line.empty()) continue;
      auto fail = [&](const std::string& msg) { errors.push_back("line " + std::to_string(line_no) + ": " + msg); };
      if (line.front() == '[') {
        if (line.back() != ']') {
          fail("unterminated section header");
          continue;
        }
        section = trim(line.substr(1, line.size() - 2));
        if (!is_identifier(section)) fail("invalid section name '" + section + "'");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        fail("expected key = value");
        continue;
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string text_value = trim(line.substr(eq + 1));
      if (!is_identifier(key)) {
        fail("invalid key '" + key + "'");
        continue;
      }
      std::optional<Value> value = parse_value(text_value);
      if (!value) {
        fail("cannot parse value of '" + key + "'");
        continue;
      }
      const std::string full = section.empty() ? key : section + "." + key;
      if (cfg.entries_.count(full)) {
        fail("duplicate key '" + full + "'");
        continue;
      }
      cfg.entries_[full] = Entry{*value, line_no};
    }
    if (!errors.empty()) throw ConfigError(std::move(errors));
    return cfg;
  }

  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }
  const Entry* find(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

 private:
  static std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
      if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
  }

  static std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
  }

  static bool is_identifier(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    }
    return true;
  }

  static std::optional<Value> parse_value(const std::string& s) {
    if (s.empty()) return std::nullopt;
    if (s.front() == '"') {
      if (s.size() < 2 || s.back() != '"') return std::nullopt;
      std::string out;
      for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        if (s[i] == '\\' && i + 2 < s.size()) {
          out += s[++i];
        } else if (s[i] == '"') {
          return std::nullopt;
        } else {
          out += s[i];
        }
      }
      return Value{out};
    }
    if (s == "true") return Value{true};
    if (s == "false") return Value{false};
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
    return Value{v};
  }

  std::map<std::string, Entry> entries_;
};

/// Typed access that records violations instead of throwing, and tracks used keys.
class Reader {
 public:
  explicit Reader(const FlatConfig& cfg) : cfg_(cfg) {}

  std::vector<std::string>& violations() { return violations_; }
  void violation(std::string msg) { violations_.push_back(std::move(msg)); }

  bool has(const std::string& key) const { return cfg_.find(key) != nullptr; }

  std::optional<double> number(const std::string& key) {
    const Entry* e = use(key);
    if (!e) return std::nullopt;
    if (const double* d = std::get_if<double>(&e->value)) return *d;
    type_error(key, e, "a number");
    return std::nullopt;
  }
  double number(const std::string& key, double fallback) { return number(key).value_or(fallback); }

  std::optional<long long> integer(const std::string& key) {
    auto v = number(key);
    if (!v) return std::nullopt;
    if (std::floor(*v) != *v) {
      violation(key + " must be an integer");
      return std::nullopt;
    }
    return static_cast<long long>(*v);
  }
  long long integer(const std::string& key, long long fallback) { return integer(key).value_or(fallback); }

  std::optional<std::string> string(const std::string& key) {
    const Entry* e = use(key);
    if (!e) return std::nullopt;
    if (const std::string* s = std::get_if<std::string>(&e->value)) return *s;
    type_error(key, e, "a string");
    return std::nullopt;
  }
  std::string string(const std::string& key, const std::string& fallback) { return string(key).value_or(fallback); }

  bool flag(const std::string& key, bool fallback) {
    const Entry* e = use(key);
    if (!e) return fallback;
    if (const bool* b = std::get_if<bool>(&e->value)) return *b;
    type_error(key, e, "true or false");
    return fallback;
  }

  /// Parsed expression; a missing required key or a parse error is recorded.
  std::optional<expr::Expression> expression(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    std::optional<std::string> src = string(key);
    if (!src && !has(key)) src = fallback;
    if (!src) {
      if (!has(key)) violation("missing key " + key);
      return std::nullopt;
    }
    try {
      return expr::parse(*src);
    } catch (const ParseError& e) {
      violation(key + ": " + e.what());
      return std::nullopt;
    }
  }

  /// Records every key that was never read.
  void reject_unknown() {
    for (const auto& [key, entry] : cfg_.entries()) {
      if (!used_.count(key)) violation("line " + std::to_string(entry.line) + ": unknown key " + key);
    }
  }

  void throw_if_any() {
    if (!violations_.empty()) throw ConfigError(violations_);
  }

 private:
  const Entry* use(const std::string& key) {
    used_.insert(key);
    return cfg_.find(key);
  }

  void type_error(const std::string& key, const Entry* e, const char* want) {
    violation("line " + std::to_string(e->line) + ": " + key + " must be " + want);
  }

  const FlatConfig& cfg_;
  std::set<std::string> used_;
  std::vector<std::string> violations_;
};

// -- per-command run descriptions -----------------------------------------------------

enum class Command { kCheckPicone, kCheckDiazSaa, kCheckNorms, kSolveElliptic, kSolveFde, kProbeKernel };

inline const char* command_name(Command c) {
  switch (c) {
    case Command::kCheckPicone: return "check-picone";
    case Command::kCheckDiazSaa: return "check-diaz-saa";
    case Command::kCheckNorms: return "check-norms";
    case Command::kSolveElliptic: return "solve-elliptic";
    case Command::kSolveFde: return "solve-fde";
    case Command::kProbeKernel: return "probe-kernel";
  }
  return "?";
}

struct PiconeRun {
  std::string form;  ///< "kernel", "pair" or "aniso"
  double r = 1.0;
  std::optional<GridFunction> v, v0;      ///< kernel / aniso first component; pair: u = v, v = v0
  std::optional<GridFunction> v_2, v0_2;  ///< aniso second component
  std::optional<ExponentField> p_2;
  std::optional<expr::Expression> p_2_expr;
  PiconeOptions opts;
  int trials = 0;
};

struct DiazSaaRun {
  double r = 1.0;
  double floor = 1e-8;
  std::optional<GridFunction> w1, w2;
  int trials = 0;
};

struct NormsRun {
  std::optional<CellField> u, g;
  int trials = 0;
};

struct EllipticRun {
  std::optional<EllipticProblem> problem;
  std::optional<GridFunction> init;
  SolveOptions solver;
};

struct KernelRun {
  std::optional<OperatorKernel> kernel;
  int samples = 1000;
  ProbeDomain domain;
};

struct RunConfig {
  Command command = Command::kSolveElliptic;
  std::string path;
  std::string text;
  std::uint64_t hash = 0;
  Grid grid{0.0, 1.0, 2};
  std::optional<ExponentField> p;
  std::string p_source;
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  std::optional<PiconeRun> picone;
  std::optional<DiazSaaRun> diaz_saa;
  std::optional<NormsRun> norms;
  std::optional<EllipticRun> elliptic;
  std::optional<FdeConfig> fde;
  std::optional<KernelRun> kernel;
};

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {

inline std::optional<std::vector<double>> sample_at(Reader& rd, const std::string& key, const expr::Expression& e,
                                                    const std::vector<double>& xs) {
  std::vector<double> out(xs.size());
  try {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      out[i] = e(xs[i]);
      if (!std::isfinite(out[i])) {
        rd.violation(key + ": non-finite value at x = " + format_g17(xs[i]));
        return std::nullopt;
      }
    }
  } catch (const Error& err) {
    rd.violation(key + ": " + err.what());
    return std::nullopt;
  }
  return out;
}

inline std::optional<CellField> cells(Reader& rd, const std::string& key, const Grid& g,
                                      std::optional<std::string> fallback = std::nullopt) {
  auto e = rd.expression(key, fallback);
  if (!e) return std::nullopt;
  auto v = sample_at(rd, key, *e, g.centers());
  if (!v) return std::nullopt;
  return CellField(g, std::move(*v));
}

/// Nodal samples; marked zero-trace when both end values vanish (up to roundoff) or when forced.
inline std::optional<GridFunction> nodes(Reader& rd, const std::string& key, const Grid& g,
                                         bool force_zero_trace = false) {
  auto e = rd.expression(key);
  if (!e) return std::nullopt;
  auto v = sample_at(rd, key, *e, g.nodes());
  if (!v) return std::nullopt;
  // Trig expressions such as sin(pi x) miss 0 at the ends by roundoff; snap such values.
  double scale = 0.0;
  for (double x : *v) scale = std::max(scale, std::fabs(x));
  const double snap = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + scale);
  for (double* end : {&v->front(), &v->back()}) {
    if (force_zero_trace || std::fabs(*end) <= snap) *end = 0.0;
  }
  const bool zero = v->front() == 0.0 && v->back() == 0.0;
  return GridFunction(g, std::move(*v), zero);
}

inline std::optional<ExponentField> exponent(Reader& rd, const std::string& key, const Grid& g, ExponentBound bound,
                                             std::optional<std::string> fallback = std::nullopt) {
  auto c = cells(rd, key, g, fallback);
  if (!c) return std::nullopt;
  const double lo = *std::min_element(c->values().begin(), c->values().end());
  if (bound == ExponentBound::kAboveOne && !(lo > 1.0)) {
    rd.violation(key + ": 1 < p_- violated");
    return std::nullopt;
  }
  if (bound == ExponentBound::kAtLeastOne && !(lo >= 1.0)) {
    rd.violation(key + ": " + (key == "problem.q" ? "q_- >= 1 violated" : "exponent >= 1 violated"));
    return std::nullopt;
  }
  return ExponentField(g, c->vector(), bound);
}

inline int positive_int(Reader& rd, const std::string& key, long long fallback, long long lo = 1) {
  const long long v = rd.integer(key, fallback);
  if (v < lo || v > 100000000) {
    rd.violation(key + " out of range");
    return static_cast<int>(fallback);
  }
  return static_cast<int>(v);
}

inline SourceF source(Reader& rd, const std::string& section, const Grid& g) {
  const std::string kind = rd.string(section + ".kind", "zero");
  if (kind == "zero") return SourceF::zero();
  auto c = cells(rd, section + ".c", g, std::string("1"));
  if (!c) return SourceF::zero();
  if (kind == "constant") return SourceF::constant(*c);
  if (kind == "power") {
    const auto gamma = rd.number(section + ".gamma");
    if (!gamma) {
      rd.violation("missing key " + section + ".gamma");
      return SourceF::zero();
    }
    return SourceF::power(*c, *gamma);
  }
  rd.violation(section + ".kind must be zero, constant or power");
  return SourceF::zero();
}

inline SolveOptions solver(Reader& rd) {
  SolveOptions o;
  if (auto tol = rd.number("solver.tol")) {
    if (!(*tol > 0.0)) rd.violation("solver.tol must be positive");
    o.tol = *tol;
  }
  o.max_iter = positive_int(rd, "solver.max_iter", o.max_iter);
  o.step0 = rd.number("solver.step0", o.step0);
  if (!(o.step0 > 0.0)) rd.violation("solver.step0 must be positive");
  const std::string method = rd.string("solver.method", "preconditioned");
  if (method == "preconditioned") {
    o.method = DescentMethod::kPreconditioned;
  } else if (method == "cell_scaled") {
    o.method = DescentMethod::kCellScaled;
  } else {
    rd.violation("solver.method must be preconditioned or cell_scaled");
  }
  o.record_trace = rd.flag("solver.record_trace", true);
  return o;
}

inline std::optional<OperatorKernel> kernel(Reader& rd, const std::optional<ExponentField>& p,
                                            const std::string& p_source) {
  const std::string name = rd.string("kernel.name", "plap");
  std::optional<expr::Expression> pe;
  try {
    pe = expr::parse(p_source);
  } catch (const ParseError&) {
    return std::nullopt;  // already reported for exponent.p
  }
  if (!p) return std::nullopt;
  if (name == "plap") return plap(*pe);
  if (name == "custom") {
    auto a = rd.expression("kernel.A");
    auto da = rd.expression("kernel.dA");
    if (!a || !da) return std::nullopt;
    return kernel_from_expressions("custom", *a, *da, *pe);
  }
  rd.violation("kernel.name must be plap or custom");
  return std::nullopt;
}

}  // namespace detail

/// Builds the FDE configuration from an already-read grid and exponent.
inline std::optional<FdeConfig> read_fde(Reader& rd, const Grid& g, const std::optional<ExponentField>& p) {
  const double T = rd.number("fde.T", 1.0);
  const int n_steps = detail::positive_int(rd, "fde.n_steps", 32);
  const auto q = rd.number("fde.q");
  if (!q) rd.violation("missing key fde.q");
  auto h = rd.expression("fde.h");
  auto v0 = detail::nodes(rd, "fde.v0", g);
  SourceF f = detail::source(rd, "source", g);
  const bool relaxed = rd.flag("fde.relaxed_q", false);
  const bool bounded = rd.flag("fde.h_bounded_below", false);
  SolveOptions opts = detail::solver(rd);
  if (h && (h->uses(expr::Variable::kXi))) rd.violation("fde.h may only use t and x");
  if (!p || !q || !h || !v0) return std::nullopt;
  if (!v0->dirichlet_zero()) {
    rd.violation("v0 > 0 inside with zero trace violated");
    return std::nullopt;
  }
  FdeConfig cfg{g, *p, T, n_steps, *q, f, *h, *v0};
  cfg.relaxed_q = relaxed;
  cfg.h_bounded_below = bounded;
  cfg.solver = opts;
  for (auto& v : validate(cfg)) rd.violation(v);
  return cfg;
}

/// Parses and validates the configuration text for one command.
inline RunConfig parse_config(std::string_view text, Command command, std::string path = "<memory>") {
  const FlatConfig flat = FlatConfig::parse(text);
  Reader rd(flat);
  RunConfig rc;
  rc.command = command;
  rc.path = std::move(path);
  rc.text = std::string(text);
  rc.hash = fnv1a(text);

  const double a = rd.number("domain.a", 0.0);
  const double b = rd.number("domain.b", 1.0);
  const int n = detail::positive_int(rd, "domain.n_cells", 256, 2);
  if (!(b > a)) {
    rd.violation("domain must satisfy a < b");
    rd.throw_if_any();
  }
  rc.grid = Grid(a, b, n);
  const Grid& g = rc.grid;
  rc.output_dir = rd.string("output.dir", "out");
  const long long seed = rd.integer("output.seed", 0);
  if (seed < 0) rd.violation("output.seed must be nonnegative");
  rc.seed = static_cast<std::uint64_t>(seed);
  rc.p_source = rd.string("exponent.p", "");
  if (rc.p_source.empty()) {
    rd.violation("missing key exponent.p");
  } else {
    rc.p = detail::exponent(rd, "exponent.p", g, ExponentBound::kAboveOne);
  }

  switch (command) {
    case Command::kCheckPicone: {
      PiconeRun run;
      run.form = rd.string("picone.form", "kernel");
      run.r = rd.number("picone.r", 1.0);
      run.opts.floor = rd.number("picone.floor", run.opts.floor);
      run.opts.rel_tol = rd.number("picone.rel_tol", run.opts.rel_tol);
      run.opts.c_h = rd.number("picone.c_h", run.opts.c_h);
      run.opts.strict_threshold = rd.number("picone.strict_threshold", run.opts.strict_threshold);
      run.trials = detail::positive_int(rd, "picone.trials", 0, 0);
      if (run.form == "pair") {
        run.v = detail::nodes(rd, "picone.u", g);
        run.v0 = detail::nodes(rd, "picone.v", g);
      } else {
        run.v = detail::nodes(rd, "picone.v", g);
        run.v0 = detail::nodes(rd, "picone.v0", g);
      }
      if (run.form == "aniso") {
        run.p_2 = detail::exponent(rd, "picone.p2", g, ExponentBound::kAboveOne);
        if (run.p_2) run.p_2_expr = expr::parse(rd.string("picone.p2", ""));
        run.v_2 = detail::nodes(rd, "picone.v2", g);
        run.v0_2 = detail::nodes(rd, "picone.v02", g);
      } else if (run.form != "kernel" && run.form != "pair") {
        rd.violation("picone.form must be kernel, pair or aniso");
      }
      if (rc.p && !(run.r >= 1.0 && run.r <= rc.p->p_minus())) rd.violation("r in [1, p_-] violated");
      if (run.p_2 && !(run.r <= run.p_2->p_minus())) rd.violation("r in [1, p2_-] violated");
      if (!(run.opts.floor > 0.0)) rd.violation("picone.floor must be positive");
      rc.picone = std::move(run);
      break;
    }
    case Command::kCheckDiazSaa: {
      DiazSaaRun run;
      run.r = rd.number("diaz_saa.r", 1.0);
      run.floor = rd.number("diaz_saa.floor", run.floor);
      run.trials = detail::positive_int(rd, "diaz_saa.trials", 0, 0);
      run.w1 = detail::nodes(rd, "diaz_saa.w1", g, true);
      run.w2 = detail::nodes(rd, "diaz_saa.w2", g, true);
      if (rc.p && !(run.r >= 1.0 && run.r <= rc.p->p_minus())) rd.violation("r in [1, p_-] violated");
      rc.diaz_saa = std::move(run);
      break;
    }
    case Command::kCheckNorms: {
      NormsRun run;
      run.u = detail::cells(rd, "norms.u", g);
      run.g = detail::cells(rd, "norms.g", g, std::string("1"));
      run.trials = detail::positive_int(rd, "norms.trials", 0, 0);
      rc.norms = std::move(run);
      break;
    }
    case Command::kSolveElliptic: {
      EllipticRun run;
      const std::string family = rd.string("problem.family", "");
      std::optional<Family> fam;
      if (family == "torsion") {
        fam = Torsion{rd.number("problem.K", 1.0)};
      } else if (family == "reaction_pq") {
        auto h = detail::cells(rd, "problem.h", g);
        auto l = detail::cells(rd, "problem.l", g);
        auto q = detail::exponent(rd, "problem.q", g, ExponentBound::kAtLeastOne);
        auto s = detail::exponent(rd, "problem.s", g, ExponentBound::kAboveOne);
        if (h && l && q && s) fam = ReactionPQ{*h, *l, *q, *s};
      } else if (family == "fde_step") {
        const double lambda = rd.number("problem.lambda", 1.0);
        const auto q = rd.number("problem.q");
        if (!q) rd.violation("missing key problem.q");
        auto h0 = detail::cells(rd, "problem.h0", g);
        SourceF f = detail::source(rd, "source", g);
        if (q && h0) fam = FdeStep{lambda, *q, cells_to_nodes(*h0), f};
      } else if (family == "eps_perturbed") {
        const double eps = rd.number("problem.eps", 0.1);
        const double m = rd.number("problem.m", 1.0);
        SourceF gsrc = detail::source(rd, "source", g);
        fam = EpsPerturbed{eps, m, gsrc};
      } else {
        rd.violation("problem.family must be torsion, reaction_pq, fde_step or eps_perturbed");
      }
      run.solver = detail::solver(rd);
      std::optional<GridFunction> init;
      if (rd.has("init.u")) {
        init = detail::nodes(rd, "init.u", g, true);
      } else {
        init = bump(g, family == "torsion" ? 0.0 : 0.5);
      }
      if (fam && rc.p) {
        EllipticProblem prob{g, *rc.p, *fam};
        for (auto& v : validate(prob)) rd.violation(v);
        run.problem = std::move(prob);
      }
      run.init = init;
      rc.elliptic = std::move(run);
      break;
    }
    case Command::kSolveFde:
      rc.fde = read_fde(rd, g, rc.p);
      break;
    case Command::kProbeKernel: {
      KernelRun run;
      run.kernel = detail::kernel(rd, rc.p, rc.p_source);
      run.samples = detail::positive_int(rd, "probe.samples", 1000);
      run.domain.x_lo = rd.number("probe.x_lo", g.a());
      run.domain.x_hi = rd.number("probe.x_hi", g.b());
      run.domain.xi_max = rd.number("probe.xi_max", 4.0);
      if (!(run.domain.x_hi > run.domain.x_lo) || !(run.domain.xi_max > 0.0)) rd.violation("probe domain is empty");
      rc.kernel = std::move(run);
      break;
    }
  }
  if (command == Command::kCheckPicone || command == Command::kCheckDiazSaa) {
    if (!rc.kernel) {
      KernelRun k;
      k.kernel = detail::kernel(rd, rc.p, rc.p_source);
      rc.kernel = std::move(k);
    }
  }
  rd.reject_unknown();
  rd.throw_if_any();
  return rc;
}

inline RunConfig load_config(const std::string& path, Command command) {
  std::ifstream f(path);
  if (!f) throw ConfigError({"cannot open config file " + path});
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), command, path);
}

}  // namespace varexp::cli
