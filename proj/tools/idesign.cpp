// Command-line front end: enumerate, solve, verify, efficiency, construct.
//
// Exit codes: 0 success / optimal, 1 input error, 2 computational failure,
// 3 verification negative.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "idesign/designs.hpp"
#include "idesign/io.hpp"
#include "idesign/optimality.hpp"

using namespace idesign;
using io::json;

namespace {

constexpr int kInputError = 1;
constexpr int kComputeError = 2;
constexpr int kNotOptimal = 3;

class ComputeFailure : public std::runtime_error {
 public:
  ComputeFailure(const std::string& what, std::string partial) : std::runtime_error(what), partial(std::move(partial)) {}
  std::string partial;
};

struct RunConfig {
  std::string command;
  int a = 0, b = 0, t = 0;
  long long n = 0;
  std::string sigma = "identity";
  std::string pool;
  double tol = 1e-9;
  std::uint64_t seed = 1;
  int effort = 200;
  std::uint64_t budget = kDefaultOrbitBudget;
  std::string design_path;
  std::string out;
  std::string format = "table";
  bool force_computational = false;
  bool list = false;
};

std::string fixed(double v, int digits = 4) {
  char buf[64];
  if (std::fabs(v) < 0.5 * std::pow(10.0, -digits)) v = 0.0;
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string show(const Number& v) { return v.exact ? fixed(v.value) + "  (" + v.exact->str() + ")" : fixed(v.value); }

CovarianceSpec read_sigma(const std::string& s) {
  if (s == "identity") return CovarianceSpec::identity();
  if (s.rfind("type-h:", 0) == 0) {
    const std::string x = s.substr(7);
    try {
      return CovarianceSpec::type_h(Number(Rational::parse(x)));
    } catch (const std::exception&) {
      try {
        return CovarianceSpec::type_h(Number::approx(std::stod(x)));
      } catch (const std::exception&) {
        throw std::invalid_argument("--sigma: bad type-h scale \"" + x + "\"");
      }
    }
  }
  const std::string text = io::read_file(s);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return io::covariance_from_json(json::parse(text));
  return io::covariance_from_csv(text);
}

// Covariances are given in the file orientation of the block.
CovarianceSpec parse_sigma(const std::string& s, const Shape& internal, bool transposed) {
  const CovarianceSpec sigma = read_sigma(s);
  return transposed ? sigma.transposed(internal.b, internal.a) : sigma;
}

json config_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["sigma"] = c.sigma;
  j["seed"] = c.seed;
  j["tol"] = c.tol;
  j["effort"] = c.effort;
  j["pool"] = c.pool.empty() ? "default" : c.pool;
  j["force_computational"] = c.force_computational;
  return j;
}

void emit(const RunConfig& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
  } else {
    io::write_file(c.out, text);
  }
}

Pool build_pool(const Shape& sh, const CovarianceSpec& sigma, const RunConfig& c) {
  std::string kind = c.pool;
  if (kind.empty()) {
    const auto count = orbit_count(sh);
    kind = count && *count <= c.budget ? "full" : "q";
  }
  if (kind == "full") return full_pool(sh, sigma, c.budget);
  if (kind == "q") return constructive_pool(sh, sigma, solve_closed_form(sh).support, c.seed);
  if (kind.rfind("random:", 0) == 0) {
    int count = 0;
    try {
      count = std::stoi(kind.substr(7));
    } catch (const std::exception&) {
      count = 0;
    }
    if (count < 1) throw std::invalid_argument("--pool: random:N needs N >= 1");
    return random_pool(sh, sigma, count, c.seed);
  }
  throw std::invalid_argument("--pool: expected full, q or random:N");
}

struct Solved {
  SolveResult result;
  Pool pool;  ///< the exchange pool, empty on the closed-form path
  std::string source;
};

Solved solve_for(const Shape& sh, const CovarianceSpec& sigma, const RunConfig& c) {
  sigma.validate(sh.p());
  if (sigma.closed_form() && !c.force_computational) return {solve_closed_form(sh, sigma), {}, "closed-form"};
  Pool pool = build_pool(sh, sigma, c);
  ExchangeOptions opts;
  opts.seed = c.seed;
  opts.tol = c.tol;
  SolveResult r = solve_exchange(sh, sigma, pool, opts);
  return {std::move(r), std::move(pool), "exchange"};
}

std::string size_text(const BlockArray& o) {
  const auto size = orbit_size_if_fits(o);
  return size ? std::to_string(*size) : "above 2^64";
}

std::string solve_table(const SolveResult& r, bool transposed, const RunConfig& c) {
  std::string s;
  const Shape shown = transposed ? Shape{r.shape.b, r.shape.a, r.shape.t} : r.shape;
  s += "shape     " + shown.str() + "\n";
  s += "regime    " + to_string(r.regime) + (r.crossing_branch ? "  (crossing point)" : "") + "\n";
  s += "x*        " + show(r.x_star) + "\n";
  s += "y*        " + show(r.y_star) + "\n";
  if (!r.support.sets.empty()) s += "support   " + r.support.str() + "\n";
  if (!r.support_arrays.empty()) s += "support   " + std::to_string(r.support_arrays.size()) + " orbits\n";
  s += "gap       " + fixed(r.gap) + (r.converged ? "" : "  (not converged)") + "\n";
  s += "seed      " + std::to_string(c.seed) + "\ntol       " + format_decimal(c.tol, 6) + "\n";
  if (r.measure) {
    s += "measure\n";
    for (std::size_t k = 0; k < r.measure->orbits.size(); ++k) {
      const BlockArray& o = r.measure->orbits[k];
      s += "  " + fixed(r.measure->weights[k].value) + "  " + (transposed ? o.transposed() : o).str() +
           "  orbit size " + size_text(o) + "\n";
    }
  }
  return s;
}

std::string efficiency_table(const EfficiencyReport& r) {
  std::string s = "eff_A " + fixed(r.eff_a) + "\neff_D " + fixed(r.eff_d) + "\neff_E " + fixed(r.eff_e) + "\neff_T " +
                  fixed(r.eff_t) + "\n";
  if (!r.diagnostic.empty()) s += "note  " + r.diagnostic + "\n";
  return s;
}

IngestedShape cli_shape(const RunConfig& c) {
  try {
    return ingest_shape(c.a, c.b, c.t);
  } catch (const std::invalid_argument& e) {
    throw io::FormatError(e.what());
  }
}

std::string decimal_power(int base, int exp) {
  std::vector<int> digits{1};  // little endian
  for (int k = 0; k < exp; ++k) {
    int carry = 0;
    for (int& d : digits) {
      const int v = d * base + carry;
      d = v % 10;
      carry = v / 10;
    }
    for (; carry; carry /= 10) digits.push_back(carry % 10);
  }
  std::string s;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) s += static_cast<char>('0' + *it);
  return s;
}

int cmd_enumerate(const RunConfig& c) {
  const auto in = cli_shape(c);
  const Shape& sh = in.shape;
  const auto count = orbit_count(sh);
  if (!count) throw BudgetExceeded(std::nullopt, c.budget);
  const std::string arrays = decimal_power(sh.t, sh.p());
  json listing = json::array();
  std::string rows;
  if (c.list) {
    for_each_orbit(
        sh,
        [&](const Orbit& o) {
          const auto cls = classify_array(o.representative);
          std::string sets;
          for (QSet q : {QSet::Q0, QSet::Q1, QSet::Q2, QSet::Q3, QSet::Q4, QSet::Q1Star, QSet::Q2Star, QSet::Balanced})
            if (cls.member(q)) sets += (sets.empty() ? "" : ",") + to_string(q);
          if (c.format == "json") {
            json e;
            e["rows"] = io::array_to_json(o.representative, in.transposed);
            e["orbit_size"] = o.size;
            e["sets"] = sets;
            listing.push_back(e);
          } else {
            rows += "  " + (in.transposed ? o.representative.transposed() : o.representative).str() + "  size " +
                    std::to_string(o.size) + (sets.empty() ? "" : "  " + sets) + "\n";
          }
        },
        c.budget);
  }
  if (c.format == "json") {
    json j;
    j["a"] = c.a;
    j["b"] = c.b;
    j["t"] = c.t;
    j["arrays"] = arrays;
    j["orbits"] = *count;
    if (c.list) j["listing"] = listing;
    j["config"] = config_json(c);
    emit(c, io::dump(j));
  } else {
    emit(c, "arrays: " + arrays + ", orbits: " + std::to_string(*count) + "\n" + rows);
  }
  return 0;
}

int cmd_solve(const RunConfig& c) {
  const auto in = cli_shape(c);
  const CovarianceSpec sigma = parse_sigma(c.sigma, in.shape, in.transposed);
  const Solved s = solve_for(in.shape, sigma, c);
  std::string text;
  if (c.format == "json") {
    json j = io::to_json(s.result, in.transposed);
    j["config"] = config_json(c);
    text = io::dump(j);
  } else {
    text = solve_table(s.result, in.transposed, c);
  }
  if (!s.result.converged) throw ComputeFailure("exchange did not converge", text);
  emit(c, text);
  return 0;
}

io::DesignFile load_design(const RunConfig& c) {
  if (c.design_path.empty()) throw std::invalid_argument("--design is required");
  json j;
  try {
    j = json::parse(io::read_file(c.design_path));
  } catch (const json::exception& e) {
    throw io::FormatError(std::string("design file: ") + e.what());
  }
  return io::design_from_json(j);
}

int cmd_verify(const RunConfig& c) {
  const auto file = load_design(c);
  const CovarianceSpec sigma = parse_sigma(c.sigma, file.design.shape, file.transposed);
  const Solved s = solve_for(file.design.shape, sigma, c);
  const auto rep = verify_measure(measure_of_design(file.design), sigma, s.result.x_star, s.result.y_star, c.tol);
  if (c.format == "json") {
    json j = io::to_json(rep);
    j["x_star"] = io::to_json(s.result.x_star);
    j["y_star"] = io::to_json(s.result.y_star);
    j["y_star_source"] = s.source;
    j["config"] = config_json(c);
    emit(c, io::dump(j));
  } else {
    emit(c, std::string("verdict   ") + (rep.optimal ? "optimal" : "not optimal") + "\nx*        " + show(s.result.x_star) +
                "\ny*        " + show(s.result.y_star) + "\neq10      " + format_decimal(rep.residual_eq10, 6) +
                "\neq11      " + format_decimal(rep.residual_eq11, 6) + "\nsupport   " +
                format_decimal(rep.support_violation, 6) + "\ninfo      " + format_decimal(rep.info_residual, 6) +
                "\narithmetic " + (rep.exact ? "rational" : "floating") + "\n");
  }
  return rep.optimal ? 0 : kNotOptimal;
}

int cmd_efficiency(const RunConfig& c) {
  const auto file = load_design(c);
  const CovarianceSpec sigma = parse_sigma(c.sigma, file.design.shape, file.transposed);
  const Solved s = solve_for(file.design.shape, sigma, c);
  const auto rep = efficiencies(file.design, sigma, s.result.y_star);
  if (c.format == "json") {
    json j = io::to_json(rep);
    j["y_star_source"] = s.source;
    j["config"] = config_json(c);
    emit(c, io::dump(j));
  } else {
    emit(c, efficiency_table(rep) + "y*    " + show(s.result.y_star) + "  [" + s.source + "]\n");
  }
  return 0;
}

int cmd_construct(const RunConfig& c) {
  if (c.n < 1) throw std::invalid_argument("--n must be at least 1");
  const auto in = cli_shape(c);
  const CovarianceSpec sigma = parse_sigma(c.sigma, in.shape, in.transposed);
  const Solved s = solve_for(in.shape, sigma, c);
  Pool candidates;
  if (s.pool.empty()) {
    candidates = constructive_pool(in.shape, sigma, s.result.support, c.seed);
  } else {
    for (std::size_t i : support_set(s.pool, s.result.x_star.value, s.result.y_star.value, c.tol))
      candidates.push_back(s.pool[i]);
  }
  if (candidates.empty()) throw ComputeFailure("candidate pool is empty", "");
  ConstructOptions opts;
  opts.seed = c.seed;
  opts.effort = c.effort;
  const auto r = construct_exact(in.shape, static_cast<std::uint64_t>(c.n), sigma, s.result, candidates, opts);
  const io::DesignFile file{r.design, in.transposed};
  json report = io::to_json(r.report);
  report["residual"] = r.residual;
  report["swaps"] = r.swaps;
  report["y_star_source"] = s.source;
  report["config"] = config_json(c);
  if (!c.out.empty()) {
    io::write_file(c.out, io::dump(io::to_json(file)));
    std::cout << (c.format == "json" ? io::dump(report) : efficiency_table(r.report));
  } else if (c.format == "json") {
    json j;
    j["design"] = io::to_json(file);
    j["report"] = report;
    std::cout << io::dump(j);
  } else {
    std::string text;
    for (const auto& blk : r.design.blocks) text += (in.transposed ? blk.transposed() : blk).str() + "\n";
    std::cout << text << efficiency_table(r.report);
  }
  return 0;
}

void shape_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--a", c.a, "rows per block")->required();
  sub->add_option("--b", c.b, "columns per block")->required();
  sub->add_option("--t", c.t, "number of treatments")->required();
}

void common_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--sigma", c.sigma, "identity | type-h:x | path to JSON or CSV matrix");
  sub->add_option("--pool", c.pool, "full | q | random:N");
  sub->add_option("--tol", c.tol, "tolerance");
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_option("--budget", c.budget, "orbit enumeration budget");
  sub->add_flag("--force-computational", c.force_computational, "use the exchange algorithm");
  sub->add_option("--out", c.out, "output path");
  sub->add_option("--format", c.format, "json | table")->check(CLI::IsMember({"json", "table"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal designs under the two-dimensional interference model"};
  app.require_subcommand(1);
  RunConfig c;

  auto* en = app.add_subcommand("enumerate", "count (and list) orbits of block arrays");
  shape_options(en, c);
  en->add_flag("--list", c.list, "list every orbit");
  en->add_option("--budget", c.budget, "orbit enumeration budget");
  en->add_option("--out", c.out, "output path");
  en->add_option("--format", c.format, "json | table")->check(CLI::IsMember({"json", "table"}));

  auto* so = app.add_subcommand("solve", "optimal approximate design");
  shape_options(so, c);
  common_options(so, c);

  auto* ve = app.add_subcommand("verify", "check a design against the optimality conditions");
  ve->add_option("--design", c.design_path, "design JSON")->required();
  common_options(ve, c);

  auto* ef = app.add_subcommand("efficiency", "A-, D-, E- and T-efficiencies of a design");
  ef->add_option("--design", c.design_path, "design JSON")->required();
  common_options(ef, c);

  auto* co = app.add_subcommand("construct", "efficient exact design with n blocks");
  shape_options(co, c);
  co->add_option("--n", c.n, "number of blocks")->required();
  co->add_option("--effort", c.effort, "local search effort");
  common_options(co, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInputError;
  }

  try {
    c.command = app.get_subcommands().front()->get_name();
    if (*en) return cmd_enumerate(c);
    if (*so) return cmd_solve(c);
    if (*ve) return cmd_verify(c);
    if (*ef) return cmd_efficiency(c);
    if (*co) return cmd_construct(c);
  } catch (const ComputeFailure& e) {
    if (!e.partial.empty()) emit(c, e.partial);
    std::cerr << "error: " << e.what() << "\n";
    return kComputeError;
  } catch (const io::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kComputeError;
  }
  return kInputError;
}
