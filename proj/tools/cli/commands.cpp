#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "apkit/arith.hpp"
#include "apkit/errors.hpp"
#include "apkit/gowers.hpp"
#include "apkit/pseudo.hpp"
#include "apkit/random.hpp"
#include "apkit/transference.hpp"
#include "cli.hpp"

namespace apkit::cli {

namespace {

using json = nlohmann::json;

// Registers options on a subcommand and remembers how to serialize each
// bound variable into the run's parameter record.
class Params {
 public:
  explicit Params(CLI::App* app) : app_(app) {}

  template <typename T>
  CLI::Option* add(const std::string& name, T& var, const std::string& help) {
    dump_.emplace_back([name, &var](json& j) { j[name] = var; });
    return app_->add_option("--" + name, var, help)->capture_default_str();
  }

  CLI::Option* flag(const std::string& name, bool& var, const std::string& help) {
    dump_.emplace_back([name, &var](json& j) { j[name] = var; });
    return app_->add_flag("--" + name, var, help);
  }

  json to_json() const {
    json j = json::object();
    for (const auto& d : dump_) d(j);
    return j;
  }

 private:
  CLI::App* app_;
  std::vector<std::function<void(json&)>> dump_;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::int64_t parse_int(const std::string& s) {
  std::size_t used = 0;
  const long long v = std::stoll(s, &used);
  if (used != s.size()) throw InvalidArgument("not an integer: '" + s + "'");
  return v;
}

std::vector<std::int64_t> parse_int_list(const std::string& s) {
  std::vector<std::int64_t> out;
  for (const auto& part : split(s, ',')) out.push_back(parse_int(part));
  return out;
}

Rational parse_rational(const std::string& s) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) return Rational(parse_int(s));
  const std::int64_t den = parse_int(s.substr(slash + 1));
  if (den == 0) throw InvalidArgument("zero denominator in '" + s + "'");
  return Rational(parse_int(s.substr(0, slash)), den);
}

// "1,0;1,1" -> rows of rationals.
std::vector<std::vector<Rational>> parse_forms(const std::string& s) {
  std::vector<std::vector<Rational>> rows;
  for (const auto& row : split(s, ';')) {
    std::vector<Rational> r;
    for (const auto& c : split(row, ',')) r.push_back(parse_rational(c));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::uint64_t derived_seed(std::uint64_t seed, std::string_view name) { return splitmix64(seed ^ stream_id(name)); }

std::vector<double> read_column(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file '" + path + "'");
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  bool first_data = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::string field = line.substr(0, line.find(','));
    if (field.size() >= 2 && field.front() == '"' && field.back() == '"') field = field.substr(1, field.size() - 2);
    try {
      std::size_t used = 0;
      const double v = std::stod(field, &used);
      if (used != field.size()) throw std::invalid_argument(field);
      values.push_back(v);
      first_data = false;
    } catch (const std::exception&) {
      if (first_data) {  // header row
        first_data = false;
        continue;
      }
      throw InvalidArgument("input line " + std::to_string(lineno) + " is not a number");
    }
  }
  return values;
}

struct MeasureOptions {
  std::string measure = "constant";
  int k = 3;
  std::uint64_t w = 3;
  double theta = 0.0;

  void bind(Params& p) {
    p.add("measure", measure, "nu: constant | bernoulli | majorant")
        ->check(CLI::IsMember({"constant", "bernoulli", "majorant"}));
    p.add("k", k, "progression length k (majorant parameter)");
    p.add("w", w, "W-trick cutoff: W is the product of primes <= w");
    p.add("theta", theta, "R = N^theta; 0 selects 1/(k 2^(k+4))");
  }

  GridFunction make(std::uint64_t N, std::uint64_t seed) const {
    if (measure == "bernoulli") return bernoulli_measure(N, derived_seed(seed, "nu"));
    if (measure == "majorant") {
      return build_majorant(MajorantParams::make(k, N, w, theta > 0 ? std::optional<double>(theta) : std::nullopt));
    }
    return GridFunction::constant(CyclicGroup(N), 1.0);
  }
};

struct InputOptions {
  std::string input;
  std::string generator = "random";

  void bind(Params& p) {
    p.add("input", input, "single-column CSV with N values (overrides --generator)");
    p.add("generator", generator, "random | interval | constant | bernoulli")
        ->check(CLI::IsMember({"random", "interval", "constant", "bernoulli"}));
  }

  GridFunction make(std::uint64_t N, std::uint64_t seed) const {
    const CyclicGroup g(N);
    if (!input.empty()) return GridFunction(g, read_column(input));
    if (generator == "constant") return GridFunction::constant(g, 1.0);
    if (generator == "bernoulli") return bernoulli_measure(N, derived_seed(seed, "f"));
    std::vector<double> v(N, 0.0);
    if (generator == "interval") {
      for (std::uint64_t x = 0; x < N / 2; ++x) v[x] = 1.0;
    } else {
      Rng rng(seed, stream_id("f"));
      for (auto& x : v) x = 2.0 * rng.uniform() - 1.0;
    }
    return GridFunction(g, std::move(v));
  }
};

EstimateMode parse_mode(const std::string& m) {
  if (m == "exact") return EstimateMode::exact;
  if (m == "fourier") return EstimateMode::fourier;
  return EstimateMode::monte_carlo;
}

json estimate_json(const EstimatorResult& e) {
  return {{"value", e.value}, {"std_error", e.std_error}, {"samples", e.samples}, {"seed", e.seed}};
}

json gowers_json(const GowersEstimate& g) {
  return {{"norm", g.norm_value},
          {"raised", g.raised_value},
          {"std_error", g.std_error},
          {"mode", to_string(g.mode)},
          {"d", g.dimension},
          {"samples", g.samples}};
}

// A subcommand: its CLI, its parameters and its action.
struct Command {
  CLI::App* app = nullptr;
  std::unique_ptr<Params> params;
  std::function<Report()> action;
};

struct Globals {
  std::string output;
  std::string format = "json";
  bool timing = false;
  std::uint64_t seed = 0;
};

void add_sieve(CLI::App& root, std::vector<Command>& cmds) {
  struct O {
    std::uint64_t limit = 0;
    double R = 0.0;
    std::uint64_t memory = kDefaultSieveMemoryBytes;
  };
  auto o = std::make_shared<O>();
  Command c;
  c.app = root.add_subcommand("sieve", "mu, Lambda and Lambda_R tables up to a limit");
  c.params = std::make_unique<Params>(c.app);
  c.params->add("limit", o->limit, "table limit")->required();
  c.params->add("R", o->R, "truncation parameter of Lambda_R; 0 selects sqrt(limit)");
  c.params->add("memory-budget", o->memory, "bytes available to the tables");
  c.action = [o] {
    const SieveTables s = build_sieve(o->limit, o->memory);
    const double R = o->R > 0 ? o->R : std::sqrt(static_cast<double>(o->limit));
    const auto lr = lambda_r_table(o->limit, R, o->memory);
    Report r;
    r.result = {{"limit", o->limit}, {"R", R}, {"prime_count", s.primes().size()}};
    r.columns = {"n", "mu", "lambda", "lambda_r"};
    for (std::uint64_t n = 1; n <= o->limit; ++n) r.rows.push_back({n, s.mobius(n), s.von_mangoldt(n), lr[n]});
    return r;
  };
  cmds.push_back(std::move(c));
}

void add_majorant(CLI::App& root, std::vector<Command>& cmds) {
  struct O {
    std::uint64_t n = 0;
    int k = 3;
    std::uint64_t w = 3;
    double theta = 0.0;
    double epsilon_k = 0.0;
  };
  auto o = std::make_shared<O>();
  Command c;
  c.app = root.add_subcommand("majorant", "the pseudorandom majorant nu on Z_N");
  c.params = std::make_unique<Params>(c.app);
  c.params->add("n", o->n, "prime modulus N")->required();
  c.params->add("k", o->k, "progression length");
  c.params->add("w", o->w, "W-trick cutoff");
  c.params->add("theta", o->theta, "R = N^theta; 0 selects the default");
  c.params->add("epsilon-k", o->epsilon_k, "window parameter; 0 selects 1/(2^k (k+4)!)");
  c.action = [o] {
    const auto p = MajorantParams::make(o->k, o->n, o->w, o->theta > 0 ? std::optional<double>(o->theta) : std::nullopt,
                                        o->epsilon_k > 0 ? std::optional<double>(o->epsilon_k) : std::nullopt);
    const GridFunction nu = build_majorant(p);
    Report r;
    r.result = {{"N", p.N},           {"k", p.k},
                {"w", p.w},           {"W", p.W},
                {"theta", p.theta},   {"epsilon_k", p.epsilon_k},
                {"R", p.R()},         {"window_lo", p.window_lo()},
                {"window_hi", p.window_hi()},
                {"mean", expectation(nu)},
                {"max", lq_norm(nu, std::numeric_limits<double>::infinity())},
                {"u2_of_nu_minus_1", gowers_norm_u2_fourier(nu - GridFunction::constant(nu.group(), 1.0)).norm_value}};
    r.columns = {"n", "nu"};
    for (std::uint64_t n = 0; n < nu.size(); ++n) r.rows.push_back({n, nu[n]});
    return r;
  };
  cmds.push_back(std::move(c));
}

void add_gowers(CLI::App& root, std::vector<Command>& cmds, const Globals& g) {
  struct O {
    std::uint64_t n = 0;
    int d = 2;
    std::string mode = "exact";
    std::uint64_t samples = 1'000'000;
    std::uint64_t budget = kDefaultExactBudget;
    InputOptions input;
  };
  auto o = std::make_shared<O>();
  Command c;
  c.app = root.add_subcommand("gowers", "Gowers U^d norm of a function on Z_N");
  c.params = std::make_unique<Params>(c.app);
  c.params->add("n", o->n, "modulus N")->required();
  c.params->add("d", o->d, "norm order d");
  c.params->add("mode", o->mode, "exact | fourier | monte_carlo")
      ->check(CLI::IsMember({"exact", "fourier", "monte_carlo"}));
  c.params->add("samples", o->samples, "Monte Carlo samples");
  c.params->add("budget", o->budget, "operation cap for exact enumeration");
  o->input.bind(*c.params);
  c.action = [o, &g] {
    const GridFunction f = o->input.make(o->n, g.seed);
    GowersEstimate e;
    switch (parse_mode(o->mode)) {
      case EstimateMode::exact:
        e = gowers_norm(f, o->d, o->budget);
        break;
      case EstimateMode::fourier:
        if (o->d != 2) throw InvalidArgument("--mode fourier requires --d 2");
        e = gowers_norm_u2_fourier(f);
        break;
      case EstimateMode::monte_carlo:
        e = gowers_norm_mc(f, o->d, o->samples, g.seed);
        break;
    }
    Report r;
    r.result = gowers_json(e);
    r.result["N"] = o->n;
    r.columns = {"N", "d", "mode", "norm", "raised", "std_error", "samples"};
    r.rows.push_back({o->n, e.dimension, to_string(e.mode), e.norm_value, e.raised_value, e.std_error, e.samples});
    return r;
  };
  cmds.push_back(std::move(c));
}

void add_dual(CLI::App& root, std::vector<Command>& cmds, const Globals& g) {
  struct O {
    std::uint64_t n = 0;
    int d = 2;
    std::string mode = "exact";
    std::uint64_t samples = 10'000;
    std::uint64_t budget = kDefaultExactBudget;
    InputOptions input;
  };
  auto o = std::make_shared<O>();
  Command c;
  c.app = root.add_subcommand("dual", "dual function DF of F on Z_N");
  c.params = std::make_unique<Params>(c.app);
  c.params->add("n", o->n, "modulus N")->required();
  c.params->add("d", o->d, "cube dimension d");
  c.params->add("mode", o->mode, "exact | fourier | monte_carlo")
      ->check(CLI::IsMember({"exact", "fourier", "monte_carlo"}));
  c.params->add("samples", o->samples, "Monte Carlo samples per point");
  c.params->add("budget", o->budget, "operation cap for exact enumeration");
  o->input.bind(*c.params);
  c.action = [o, &g] {
    const GridFunction F = o->input.make(o->n, g.seed);
    DualOptions opts;
    opts.mode = o->mode == "exact" ? DualMode::exact : o->mode == "fourier" ? DualMode::fourier : DualMode::monte_carlo;
    opts.samples = o->samples;
    opts.seed = g.seed;
    opts.budget = o->budget;
    const GridFunction DF = dual_function(F, o->d, opts);
    Report r;
    r.result = {{"N", o->n},
                {"d", o->d},
                {"mode", o->mode},
                {"inner_product_F_DF", inner_product(F, DF)},
                {"sup_DF", lq_norm(DF, std::numeric_limits<double>::infinity())}};
    if (o->d == 2) {
      r.result["norm_raised"] = gowers_norm_u2_fourier(F).raised_value;
    } else if (exact_inner_cost(o->n, o->d) <= o->budget) {
      r.result["norm_raised"] = gowers_norm(F, o->d, o->budget).raised_value;
    }
    r.columns = {"x", "F", "DF"};
    for (std::uint64_t x = 0; x < o->n; ++x) r.rows.push_back({x, F[x], DF[x]});
    return r;
  };
  cmds.push_back(std::move(c));
}

LinearFormSystem make_system(const std::string& system, const std::string& forms, const std::string& constants) {
  if (!forms.empty()) {
    auto rows = parse_forms(forms);
    std::vector<std::int64_t> b = constants.empty() ? std::vector<std::int64_t>(rows.size(), 0) : parse_int_list(constants);
    return LinearFormSystem(std::move(rows), std::move(b));
  }
  if (system.rfind("cube:", 0) == 0) return LinearFormSystem::cube(static_cast<int>(parse_int(system.substr(5))));
  throw InvalidArgument("--system must be cube:D or --forms must be given");
}

void add_linforms(CLI::App& root, std::vector<Command>& cmds, const Globals& g) {
  struct O {
    std::uint64_t n = 0;
    std::string system = "cube:2";
    std::string forms;
    std::string constants;
    std::string mode = "monte_carlo";
    std::uint64_t samples = 1'000'000;
    std::uint64_t budget = kDefaultExactBudget;
    double threshold = 0.25;
    MeasureOptions measure;
  };
  auto o = std::make_shared<O>();
  Command c;
  c.app = root.add_subcommand("linforms", "linear-forms condition estimate");
  c.params = std::make_unique<Params>(c.app);
  c.params->add("n", o->n, "prime modulus N")->required();
  c.params->add("system", o->system, "cube:D (vertices of a D-cube)");
  c.params->add("forms", o->forms, "coefficient rows, e.g. '1,0;1,1;1/2,3'");
  c.params->add("constants", o->constants, "constants b_i, e.g. '0,5'");
  c.params->add("mode", o->mode, "exact | monte_carlo")->check(CLI::IsMember({"exact", "monte_carlo"}));
  c.params->add("samples", o->samples, "Monte Carlo samples");
  c.params->add("budget", o->budget, "operation cap for exact enumeration");
  c.params->add("threshold", o->threshold, "verdict threshold on |estimate - 1|");
  o->measure.bind(*c.params);
  c.action = [o, &g] {
    const GridFunction nu = o->measure.make(o->n, g.seed);
    EstimatorOptions opts;
    opts.mode = parse_mode(o->mode);
    opts.samples = o->samples;
    opts.seed = g.seed;
    opts.budget = o->budget;
    const auto rep = verify_linear_forms(nu, make_system(o->system, o->forms, o->constants), opts, o->threshold);
    Report r;
    r.result = {{"condition", to_string(rep.condition)},
                {"estimate", estimate_json(rep.estimate)},
                {"std_error", rep.estimate.std_error},
                {"target", rep.target},
                {"deviation", rep.deviation},
                {"verdict_threshold", rep.verdict_threshold},
                {"passed", rep.passed()},
                {"parameters", rep.parameters},
                {"mode", to_string(rep.mode)}};
    r.columns = {"estimate", "std_error", "target", "deviation", "verdict_threshold", "passed", "samples"};
    r.rows.push_back({rep.estimate.value, rep.estimate.std_error, rep.target, rep.deviation, rep.verdict_threshold,
                      rep.passed(), rep.estimate.samples});
    r.verification_failed = !rep.passed();
    return r;
  };
  cmds.push_back(std::move(c));
}

void add_correlation(CLI::App& root, std::vector<Command>& cmds, const Globals& g) {
  struct O {
    std::uint64_t n = 0;
    int m = 2;
    std::string h;
    std::uint64_t tuples = 100;
    std::string q = "1,2,4";
    double c_tau = 4.0;
    double a_tau = 0.0;
    MeasureOptions measure;
  };
  auto o = std::make_shared<O>();
  Command c;
  c.app = root.add_subcommand("correlation", "correlation condition against the weight tau");
  c.params = std::make_unique<Params>(c.app);
  c.params->add("n", o->n, "modulus N")->required();
  c.params->add("m", o->m, "tuple length m >= 2");
  c.params->add("tuple-list", o->h, "explicit tuples, e.g. '0,1;3,7' (otherwise random)");
  c.params->add("tuples", o->tuples, "number of random distinct tuples");
  c.params->add("q", o->q, "moment exponents for E(tau^q)");
  c.params->add("c-tau", o->c_tau, "constant C of tau");
  c.params->add("a-tau", o->a_tau, "exponent A of tau; 0 selects 2m");
  o->measure.bind(*c.params);
  c.action = [o, &g] {
    const GridFunction nu = o->measure.make(o->n, g.seed);
    std::vector<std::vector<std::int64_t>> tuples;
    if (!o->h.empty()) {
      for (const auto& t : split(o->h, ';')) tuples.push_back(parse_int_list(t));
    } else {
      Rng rng(g.seed, stream_id("tuples"));
      while (tuples.size() < o->tuples) {
        std::vector<std::int64_t> t;
        while (t.size() < static_cast<std::size_t>(o->m)) {
          const auto v = static_cast<std::int64_t>(rng.below(o->n));
          if (std::find(t.begin(), t.end(), v) == t.end()) t.push_back(v);
        }
        tuples.push_back(std::move(t));
      }
    }
    std::vector<double> qs;
    for (const auto& s : split(o->q, ',')) qs.push_back(std::stod(s));
    const auto rep = verify_correlation(nu, o->m, tuples, qs, TauParams{o->c_tau, o->a_tau});
    Report r;
    r.result = {{"condition", to_string(rep.condition)},
                {"estimate", estimate_json(rep.estimate)},
                {"max_ratio", rep.estimate.value},
                {"target", rep.target},
                {"deviation", rep.deviation},
                {"verdict_threshold", rep.verdict_threshold},
                {"passed", rep.passed()},
                {"parameters", rep.parameters},
                {"details", rep.details}};
    r.columns = {"max_ratio", "passed", "tuples"};
    r.rows.push_back({rep.estimate.value, rep.passed(), tuples.size()});
    r.verification_failed = !rep.passed();
    return r;
  };
  cmds.push_back(std::move(c));
}

std::vector<IntegerInterval> parse_box(const std::string& s) {
  std::vector<IntegerInterval> box;
  for (const auto& side : split(s, ',')) {
    const auto colon = side.find(':');
    if (colon == std::string::npos) throw InvalidArgument("box sides are lo:hi");
    box.push_back({parse_int(side.substr(0, colon)), parse_int(side.substr(colon + 1))});
  }
  return box;
}

void add_gycheck(CLI::App& root, std::vector<Command>& cmds, const Globals& g) {
  struct O {
    std::uint64_t n = 0;
    int k = 3;
    std::uint64_t w = 2;
    double theta = 0.05;
    std::string shifts;
    std::string forms = "1";
    std::string constants;
    std::string box;
    std::string mode = "exact";
    std::uint64_t samples = 1'000'000;
    double a_tau = 0.0;
    std::string expect_band;
  };
  auto o = std::make_shared<O>();
  Command c;
  c.app = root.add_subcommand("gycheck", "direct-summation check of the truncated divisor sum moments");
  c.params = std::make_unique<Params>(c.app);
  c.params->add("n", o->n, "prime modulus N")->required();
  c.params->add("k", o->k, "progression length");
  c.params->add("w", o->w, "W-trick cutoff");
  c.params->add("theta", o->theta, "R = N^theta");
  c.params->add("shifts", o->shifts, "distinct shifts h_i: correlation form x + h_i");
  c.params->add("forms", o->forms, "coefficient rows of psi (ignored with --shifts)");
  c.params->add("constants", o->constants, "constants of psi");
  c.params->add("box", o->box, "box sides lo:hi,...; default is the majorant window (t = 1)");
  c.params->add("mode", o->mode, "exact | monte_carlo")->check(CLI::IsMember({"exact", "monte_carlo"}));
  c.params->add("samples", o->samples, "Monte Carlo samples");
  c.params->add("a-tau", o->a_tau, "Delta-factor exponent; 0 selects 2m");
  c.params->add("expect-band", o->expect_band, "lo,hi: exit 4 if the ratio is outside");
  c.action = [o, &g] {
    const auto p = MajorantParams::make(o->k, o->n, o->w, o->theta);
    const IntegerInterval window{static_cast<std::int64_t>(p.window_lo()), static_cast<std::int64_t>(p.window_hi())};
    GyCheckResult res;
    if (!o->shifts.empty()) {
      const IntegerInterval B = o->box.empty() ? window : parse_box(o->box).at(0);
      res = gy2_correlation_check(p, parse_int_list(o->shifts), B, TauParams{4.0, o->a_tau});
    } else {
      const LinearFormSystem sys = make_system("", o->forms, o->constants);
      const auto box = o->box.empty() ? std::vector<IntegerInterval>(sys.variables(), window) : parse_box(o->box);
      EstimatorOptions opts;
      opts.mode = parse_mode(o->mode);
      opts.samples = o->samples;
      opts.seed = g.seed;
      res = gy_moment_check(p, sys, box, opts);
    }
    Report r;
    r.result = {{"ratio", res.estimate.value},
                {"estimate", estimate_json(res.estimate)},
                {"raw_mean", res.raw_mean},
                {"reference", res.reference},
                {"short_box_warning", res.short_box},
                {"details", res.details}};
    if (!o->expect_band.empty()) {
      const auto band = split(o->expect_band, ',');
      if (band.size() != 2) throw InvalidArgument("--expect-band is lo,hi");
      const bool inside = res.estimate.value >= std::stod(band[0]) && res.estimate.value <= std::stod(band[1]);
      r.result["in_band"] = inside;
      r.verification_failed = !inside;
    }
    r.columns = {"ratio", "std_error", "raw_mean", "reference", "short_box", "samples"};
    r.rows.push_back({res.estimate.value, res.estimate.std_error, res.raw_mean, res.reference, res.short_box,
                      res.estimate.samples});
    return r;
  };
  cmds.push_back(std::move(c));
}

void add_decompose(CLI::App& root, std::vector<Command>& cmds, const Globals& g) {
  struct O {
    std::uint64_t n = 0;
    double epsilon = 0.05;
    double eta = 0.0;
    std::string f = "random-half";
    std::string input;
    std::string mode = "exact";
    std::uint64_t samples = 1'000'000;
    std::size_t alpha_grid = 0;
    std::uint64_t max_iterations = 0;
    std::uint64_t budget = kDefaultExactBudget;
    MeasureOptions measure;
  };
  auto o = std::make_shared<O>();
  Command c;
  c.app = root.add_subcommand("decompose", "energy-increment decomposition of f <= nu");
  c.params = std::make_unique<Params>(c.app);
  c.params->add("n", o->n, "modulus N")->required();
  c.params->add("epsilon", o->epsilon, "accuracy epsilon in (0, 1)");
  c.params->add("eta", o->eta, "eta < epsilon; 0 selects epsilon / 10");
  c.params->add("f", o->f, "random-half (nu on a random half) | interval (nu on [0, N/2)) | input")
      ->check(CLI::IsMember({"random-half", "interval", "input"}));
  c.params->add("input", o->input, "single-column CSV for --f input");
  c.params->add("mode", o->mode, "exact | monte_carlo")->check(CLI::IsMember({"exact", "monte_carlo"}));
  c.params->add("samples", o->samples, "Monte Carlo samples for norms");
  c.params->add("alpha-grid", o->alpha_grid, "alpha candidates; 0 selects ceil(1/eta)");
  c.params->add("max-iterations", o->max_iterations, "iteration cap; 0 selects K_0");
  c.params->add("budget", o->budget, "operation cap for exact enumeration");
  o->measure.bind(*c.params);
  c.action = [o, &g] {
    const GridFunction nu = o->measure.make(o->n, g.seed);
    std::vector<double> v(o->n, 0.0);
    if (o->f == "input") {
      v = read_column(o->input);
    } else if (o->f == "interval") {
      for (std::uint64_t x = 0; x < o->n / 2; ++x) v[x] = nu[x];
    } else {
      Rng rng(g.seed, stream_id("S"));
      for (std::uint64_t x = 0; x < o->n; ++x) v[x] = (rng() >> 63) != 0U ? nu[x] : 0.0;
    }
    const GridFunction f(nu.group(), std::move(v));
    DecompositionConfig cfg;
    cfg.k = o->measure.k;
    cfg.epsilon = o->epsilon;
    cfg.eta = o->eta;
    cfg.uniformity_mode = parse_mode(o->mode);
    cfg.samples = o->samples;
    cfg.seed = g.seed;
    cfg.alpha_grid = o->alpha_grid;
    cfg.budget = o->budget;
    if (o->max_iterations > 0) cfg.max_iterations_override = o->max_iterations;
    const auto res = kvn_decompose(f, nu, cfg);
    Report r;
    r.result = {{"iterations", res.iterations},
                {"terminated_successfully", res.terminated_successfully},
                {"threshold", res.threshold},
                {"iteration_cap", res.iteration_cap},
                {"eta", cfg.effective_eta()},
                {"final_uniformity", gowers_json(res.final_uniformity)},
                {"atom_count", res.sigma.atom_count()},
                {"omega_size", res.omega.count()},
                {"energy_trace", res.energy_trace},
                {"max_conditional_outside_omega", res.max_conditional_outside_omega}};
    r.columns = {"K",          "energy",       "uniformity", "uniformity_std_error", "uniformity_mode",
                 "atom_count", "omega_mass",   "chosen_alpha", "dual_sup"};
    for (const auto& s : res.trace) {
      r.rows.push_back({s.K, s.energy, s.uniformity, s.uniformity_std_error, to_string(s.uniformity_mode), s.atom_count,
                        s.omega_mass, s.chosen_alpha, s.dual_sup});
    }
    r.verification_failed = !res.terminated_successfully;
    return r;
  };
  cmds.push_back(std::move(c));
}

void add_apcount(CLI::App& root, std::vector<Command>& cmds) {
  struct O {
    int k = 3;
    std::uint64_t limit = 0;
  };
  auto o = std::make_shared<O>();
  Command c;
  c.app = root.add_subcommand("apcount", "count k-term progressions of primes up to a limit");
  c.params = std::make_unique<Params>(c.app);
  c.params->add("k", o->k, "progression length");
  c.params->add("limit", o->limit, "largest allowed term")->required();
  c.action = [o] {
    const std::uint64_t count = count_prime_aps(o->k, o->limit);
    Report r;
    const double L = static_cast<double>(o->limit);
    r.result = {{"count", count}, {"k", o->k}, {"limit", o->limit}};
    if (o->limit >= 3) r.result["normalized"] = static_cast<double>(count) * std::pow(std::log(L), o->k) / (L * L);
    r.columns = {"k", "limit", "count"};
    r.rows.push_back({o->k, o->limit, count});
    return r;
  };
  cmds.push_back(std::move(c));
}

void add_gvn(CLI::App& root, std::vector<Command>& cmds, const Globals& g) {
  struct O {
    std::uint64_t n = 0;
    std::size_t trials = 30;
    MeasureOptions measure;
  };
  auto o = std::make_shared<O>();
  Command c;
  c.app = root.add_subcommand("gvn", "generalised von Neumann check: |E| against min ||f_j||");
  c.params = std::make_unique<Params>(c.app);
  c.params->add("n", o->n, "prime modulus N")->required();
  c.params->add("trials", o->trials, "number of random tuples");
  o->measure.bind(*c.params);
  c.action = [o, &g] {
    const GridFunction nu = o->measure.make(o->n, g.seed);
    const auto rep = gvn_check(nu, o->measure.k, o->trials, derived_seed(g.seed, "gvn"));
    Report r;
    r.result = {{"k", rep.k},
                {"slope", rep.slope},
                {"max_residual", rep.max_residual},
                {"max_abs_expectation", rep.max_abs_expectation}};
    r.columns = {"trial", "kind", "abs_expectation", "min_norm"};
    for (std::size_t i = 0; i < rep.cases.size(); ++i) {
      r.rows.push_back({i, rep.cases[i].kind, rep.cases[i].abs_expectation, rep.cases[i].min_norm});
    }
    return r;
  };
  cmds.push_back(std::move(c));
}

void write_error(std::ostream& err, int code, const char* type, const std::string& message) {
  write_json(err, {{"error", {{"code", code}, {"type", type}, {"message", message}}}});
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"apkit: Gowers norms, pseudorandom majorants and transference experiments", kToolName};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Globals g;
  app.add_option("--output,-o", g.output, "write the artifact here instead of stdout");
  app.add_option("--format", g.format, "json | csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  app.add_flag("--timing", g.timing, "record wall time in the header");
  app.add_option("--seed", g.seed, "root seed for every random sub-stream")->capture_default_str();
  app.set_version_flag("--version", kToolVersion);

  std::vector<Command> cmds;
  add_sieve(app, cmds);
  add_majorant(app, cmds);
  add_gowers(app, cmds, g);
  add_dual(app, cmds, g);
  add_linforms(app, cmds, g);
  add_correlation(app, cmds, g);
  add_gycheck(app, cmds, g);
  add_decompose(app, cmds, g);
  add_apcount(app, cmds);
  add_gvn(app, cmds, g);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    write_error(err, kInvalidArgument, "invalid_argument", e.what());
    return kInvalidArgument;
  }

  for (const auto& c : cmds) {
    if (!c.app->parsed()) continue;
    RunSpec spec;
    spec.command = c.app->get_name();
    spec.parameters = c.params->to_json();
    spec.seed = g.seed;
    spec.timing = g.timing;
    Report report;
    const auto start = std::chrono::steady_clock::now();
    try {
      report = c.action();
    } catch (const BudgetExceeded& e) {
      write_error(err, kBudgetExceeded, "budget_exceeded", e.what());
      return kBudgetExceeded;
    } catch (const RangeOverflow& e) {
      write_error(err, kInvalidArgument, "range_overflow", e.what());
      return kInvalidArgument;
    } catch (const std::invalid_argument& e) {
      write_error(err, kInvalidArgument, "invalid_argument", e.what());
      return kInvalidArgument;
    } catch (const std::out_of_range& e) {
      write_error(err, kInvalidArgument, "invalid_argument", e.what());
      return kInvalidArgument;
    } catch (const std::exception& e) {
      write_error(err, kIoError, "runtime_error", e.what());
      return kIoError;
    }
    spec.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    const Format format = g.format == "csv" ? Format::csv : Format::json;
    if (g.output.empty()) {
      emit_report(out, spec, report, format);
    } else {
      std::ofstream file(g.output, std::ios::binary);
      if (!file) {
        write_error(err, kIoError, "io_error", "cannot open output file '" + g.output + "'");
        return kIoError;
      }
      emit_report(file, spec, report, format);
      if (!file) {
        write_error(err, kIoError, "io_error", "failed writing '" + g.output + "'");
        return kIoError;
      }
    }
    return report.verification_failed ? kVerificationFailed : kOk;
  }
  return kInvalidArgument;
}

}  // namespace apkit::cli
