#include "besq/cli.hpp"

#include <chrono>
#include <cstdint>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "besq/analytic.hpp"
#include "besq/conditioned.hpp"
#include "besq/hitting.hpp"
#include "besq/io.hpp"
#include "besq/suites.hpp"

namespace besq {
namespace {

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw CLI::ValidationError("bad number: " + cell);
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError("empty list");
  return out;
}

struct CliFlags {
  int n = 3;
  double delta = 0.5;
  std::string x0;
  std::string eps = "1e-3";
  double tmax = 0, tmin = 0;
  std::int64_t paths = 10000;
  std::uint64_t seed = 42;
  std::string scheme = "exact";
  std::string frame = "power";
  std::string out;
  bool plot = false;
  unsigned workers = 0;
  std::size_t steps = 1000;
  std::string pairs;
  double step = 0.01;
  int points = 1000;
  std::string functional = "X1";
  double a = -1, b = 1;
  int m = 1;
  std::string t_list = "1,4,16";
  std::string mode = "pair";
  std::int64_t max_attempts = 100000;
};

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"Monte Carlo lab for joint returns to zero of squared Bessel processes", "besq_lab"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version_string);
    CliFlags f;

    std::map<std::string, double> tmax_default;
    auto model = [&](CLI::App* s, double tmax_def) {
      tmax_default[s->get_name()] = tmax_def;
      s->add_option("--n", f.n, "number of processes")->check(CLI::Range(1, 64));
      s->add_option("--delta", f.delta, "dimension (< 2)");
      s->add_option("--x0", f.x0, "starting point, comma separated (default all ones)");
      s->add_option("--tmax", f.tmax, "time horizon");
      s->add_option("--seed", f.seed, "master seed");
      s->add_option("--workers", f.workers, "worker threads (BESSEL_WORKERS overrides)");
      s->add_flag("--plot", f.plot, "also write an SVG chart");
    };

    auto* sim = app.add_subcommand("simulate", "one joint trajectory to CSV");
    model(sim, 10.0);
    sim->add_option("--steps", f.steps, "grid intervals");
    sim->add_option("--scheme", f.scheme, "exact | euler | cir");
    sim->add_option("--out", f.out, "output CSV")->required();

    auto* surv = app.add_subcommand("survival", "empirical P(H > t) with Wilson bands");
    model(surv, 1e4);
    surv->add_option("--eps", f.eps, "joint-zero threshold");
    surv->add_option("--paths", f.paths, "replicas")->check(CLI::PositiveNumber);
    surv->add_option("--frame", f.frame, "power | cir")->check(CLI::IsMember({"power", "cir"}));
    surv->add_option("--pairs", f.pairs, "detector pairs, e.g. 12,13 (default all)");
    surv->add_option("--out", f.out, "output CSV")->required();

    auto* theta = app.add_subcommand("theta", "fit the persistence exponent, optionally over an eps ladder");
    model(theta, 1e4);
    theta->add_option("--eps", f.eps, "threshold or comma-separated ladder");
    theta->add_option("--paths", f.paths, "replicas per threshold")->check(CLI::PositiveNumber);
    theta->add_option("--frame", f.frame, "power | cir")->check(CLI::IsMember({"power", "cir"}));
    theta->add_option("--tmin", f.tmin, "fit window start in original time (default tmax/100)");
    theta->add_option("--pairs", f.pairs, "detector pairs, e.g. 12,13 (default all)");
    theta->add_option("--out", f.out, "output JSON (default: stdout only)");

    auto* bounds = app.add_subcommand("bounds", "exponent bounds over a delta grid");
    bounds->add_option("--step", f.step, "delta grid step")->check(CLI::Range(1e-6, 0.5));
    bounds->add_option("--out", f.out, "output CSV")->required();
    bounds->add_flag("--plot", f.plot, "also write an SVG chart");

    auto* ident = app.add_subcommand("identities", "closed forms vs finite differences, algebra and bound checks");
    ident->add_option("--seed", f.seed, "seed for random states");
    ident->add_option("--points", f.points, "random points for the derivative suite")->check(CLI::PositiveNumber);
    ident->add_option("--out", f.out, "output CSV (default stdout)");

    auto* tc = app.add_subcommand("timechange", "integrals of a functional along paths, normalized by t^kappa");
    model(tc, 0.0);
    tc->add_option("--functional", f.functional, "X1 | V_upper | V_lower | prod | X1_pow")
        ->check(CLI::IsMember({"X1", "V_upper", "V_lower", "prod", "X1_pow"}));
    tc->add_option("--a", f.a, "exponent of the lower functional (default a(delta))");
    tc->add_option("--m", f.m, "number of factors for prod");
    tc->add_option("--b", f.b, "power for X1_pow");
    tc->add_option("--t-list", f.t_list, "integration times");
    tc->add_option("--paths", f.paths, "replicas")->check(CLI::PositiveNumber);
    tc->add_option("--steps", f.steps, "steps up to the largest time");
    tc->add_option("--out", f.out, "output CSV")->required();

    auto* cond = app.add_subcommand("conditioned", "paths conditioned on avoiding joint zeros");
    model(cond, 1e3);
    cond->add_option("--mode", f.mode, "pair | triple")->check(CLI::IsMember({"pair", "triple"}));
    cond->add_option("--eps", f.eps, "joint-zero threshold (triple)");
    cond->add_option("--steps", f.steps, "output grid intervals");
    cond->add_option("--max-attempts", f.max_attempts, "rejection budget (triple)")->check(CLI::PositiveNumber);
    cond->add_option("--out", f.out, "output CSV")->required();

    std::vector<std::string> argv_store{"besq_lab"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_store) argv.push_back(s.data());

    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
      out_ << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out_ << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::CallForVersion&) {
      out_ << version_string << "\n";
      return 0;
    } catch (const CLI::ParseError& e) {
      err_ << "error: " << e.what() << "\n\n" << app.help();
      return 2;
    }

    const auto started = std::chrono::steady_clock::now();
    CLI::App* sub = app.get_subcommands().front();
    if (tmax_default.count(sub->get_name()) && sub->count("--tmax") == 0) f.tmax = tmax_default[sub->get_name()];
    for (const auto* opt : sub->get_options())
      if (opt->count() > 0 && opt->get_name() != "--help") params_[opt->get_name()] = opt->as<std::string>();
    try {
      const std::string name = sub->get_name();
      int rc = 0;
      if (name == "simulate") rc = run_simulate(f);
      else if (name == "survival") rc = run_survival(f);
      else if (name == "theta") rc = run_theta(f);
      else if (name == "bounds") rc = run_bounds(f);
      else if (name == "identities") rc = run_identities(f);
      else if (name == "timechange") rc = run_timechange(f);
      else if (name == "conditioned") rc = run_conditioned(f);
      if (!f.out.empty() && rc != 2) write_manifest(name, f, started);
      return rc;
    } catch (const usage_error& e) {
      err_ << "error: " << e.what() << "\n\n" << sub->help();
      return 2;
    } catch (const CLI::ValidationError& e) {
      err_ << "error: " << e.what() << "\n\n" << sub->help();
      return 2;
    } catch (const std::invalid_argument& e) {
      err_ << "error: " << e.what() << "\n\n" << sub->help();
      return 2;
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << "\n";
      return 1;
    }
  }

 private:
  struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
  };

  std::ostream& out_;
  std::ostream& err_;
  std::map<std::string, std::string> params_;
  std::vector<std::string> outputs_;

  void emit(const std::string& path, const std::string& text) {
    write_text(path, text);
    outputs_.push_back(path);
  }

  ModelParams model(const CliFlags& f) const {
    ModelParams p;
    p.n = f.n;
    p.delta = f.delta;
    p.x0 = f.x0.empty() ? std::vector<double>(f.n, 1.0) : parse_list(f.x0);
    if (static_cast<int>(p.x0.size()) != p.n) throw usage_error("--x0 must have --n coordinates");
    p.validate();
    return p;
  }

  PairList pairs(const CliFlags& f) const {
    PairList out;
    if (f.pairs.empty()) return out;
    std::stringstream ss(f.pairs);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (cell.size() != 2) throw usage_error("pairs are written as digit pairs, e.g. 12,13");
      const int i = cell[0] - '1', j = cell[1] - '1';
      if (i < 0 || j < 0 || i >= f.n || j >= f.n || i == j) throw usage_error("pair out of range: " + cell);
      out.emplace_back(std::min(i, j), std::max(i, j));
    }
    return out;
  }

  double single_eps(const CliFlags& f) const {
    const auto e = parse_list(f.eps);
    if (e.size() != 1) throw usage_error("this command takes a single --eps");
    if (!(e[0] > 0.0)) throw usage_error("--eps must be positive");
    return e[0];
  }

  void plot(const CliFlags& f, const std::vector<Series>& s, const std::string& title, bool lx, bool ly) {
    if (f.plot) emit(f.out + ".svg", svg_chart(s, title, lx, ly));
  }

  int run_simulate(const CliFlags& f) {
    const auto p = model(f);
    if (!(f.tmax > 0.0) || f.steps < 1) throw usage_error("--tmax and --steps must be positive");
    const Scheme scheme = parse_scheme(f.scheme);
    const auto grid = scheme == Scheme::cir_frame ? uniform_grid(std::log1p(f.tmax), f.steps) : uniform_grid(f.tmax, f.steps);
    RngStream rng(f.seed, 0);
    const auto path = simulate_paths(p, grid, scheme, rng);
    emit(f.out, path_csv(path));
    std::vector<Series> s;
    for (int i = 0; i < p.n; ++i) s.push_back({"x" + std::to_string(i + 1), path.times, path.values[i]});
    plot(f, s, "trajectories", false, false);
    return 0;
  }

  std::vector<double> t_grid(const CliFlags& f, Frame frame) const {
    if (!(f.tmax > 1.0)) throw usage_error("--tmax must exceed 1");
    if (frame == Frame::power) {
      auto g = geometric_grid(1.0, f.tmax);
      g.insert(g.begin(), 0.0);
      return g;
    }
    const auto steps = static_cast<std::size_t>(std::ceil(std::log1p(f.tmax) / 0.05));
    return linear_grid(0.0, std::log1p(f.tmax), steps);
  }

  int run_survival(const CliFlags& f) {
    const auto p = model(f);
    const Frame frame = parse_frame(f.frame);
    if (pairs_transient(p)) err_ << "warning: delta >= 1, pairs never meet; the curve stays near 1\n";
    const auto grid = t_grid(f, frame);
    const auto c = survival_curve(p, single_eps(f), grid, f.paths, f.seed, frame, {f.workers, {0.05, pairs(f)}});
    emit(f.out, survival_csv(c));
    plot(f, {{"p_hat", c.t, c.p_hat}, {"ci_lo", c.t, c.ci_lo}, {"ci_hi", c.t, c.ci_hi}}, "survival",
         frame == Frame::power, true);
    return 0;
  }

  int run_theta(const CliFlags& f) {
    const auto p = model(f);
    const Frame frame = parse_frame(f.frame);
    if (pairs_transient(p)) err_ << "warning: delta >= 1, pairs never meet; the curve stays near 1\n";
    auto eps = parse_list(f.eps);
    for (double e : eps)
      if (!(e > 0.0)) throw usage_error("--eps must be positive");
    const auto grid = t_grid(f, frame);
    const double t_lo = f.tmin > 0.0 ? f.tmin : f.tmax / 100.0;
    const double w_lo = frame == Frame::power ? t_lo : std::log1p(t_lo);
    const double w_hi = frame == Frame::power ? f.tmax : std::log1p(f.tmax);
    const SurvivalOptions opt{f.workers, {0.05, pairs(f)}};
    nlohmann::ordered_json j;
    if (eps.size() == 1) {
      const auto c = survival_curve(p, eps[0], grid, f.paths, f.seed, frame, opt);
      j = fit_json(fit_exponent(c, w_lo, w_hi));
    } else {
      std::vector<std::pair<double, ExponentFit>> fits;
      for (std::size_t k = 0; k < eps.size(); ++k) {
        const auto c = survival_curve(p, eps[k], grid, f.paths, splitmix64(f.seed + k), frame, opt);
        fits.emplace_back(eps[k], fit_exponent(c, w_lo, w_hi));
      }
      const auto ex = extrapolate_eps(fits);
      j = fit_json(ex.fit);
      j["beta"] = ex.beta;
      j["beta_identified"] = ex.beta_identified;
      j["refused"] = ex.refused;
      j["ladder"] = nlohmann::ordered_json::array();
      for (const auto& [e, fit] : ex.raw) j["ladder"].push_back(fit_json(fit));
    }
    const std::string text = j.dump(2) + "\n";
    out_ << text;
    if (!f.out.empty()) emit(f.out, text);
    return 0;
  }

  int run_bounds(const CliFlags& f) {
    std::ostringstream o;
    o << "delta,theta_lower,theta_upper,f,a,theta_plus_r41\n";
    const auto steps = static_cast<int>(std::llround(1.0 / f.step));
    Series lo{"lower 2(1-delta)", {}, {}}, hi{"upper 2(1-delta)+f", {}, {}}, r41{"refined (conjectured)", {}, {}};
    for (int i = 0; i <= steps; ++i) {
      const double d = std::min(1.0, i * f.step);
      const auto b = theta3_bounds(d);
      o << fmt17(d) << "," << fmt17(b.lower) << "," << fmt17(b.upper) << "," << fmt17(f_of_delta(d)) << ","
        << fmt17(a_of_delta(d)) << "," << fmt17(theta_plus_remark41(d)) << "\n";
      lo.x.push_back(d), lo.y.push_back(b.lower);
      hi.x.push_back(d), hi.y.push_back(b.upper);
      r41.x.push_back(d), r41.y.push_back(theta_plus_remark41(d));
    }
    emit(f.out, o.str());
    plot(f, {lo, hi, r41}, "bounds for n = 3", false, false);
    return 0;
  }

  int run_identities(const CliFlags& f) {
    std::vector<CheckRow> rows = derivative_identity_suite(f.seed, f.points);
    for (auto& r : angular_suite(f.seed)) rows.push_back(r);
    for (auto& r : algebra_suite()) rows.push_back(r);
    for (auto& r : dimension_bound_suite(f.seed)) rows.push_back(r);
    std::ostringstream o;
    o << "suite,check,max_residual,tolerance,pass\n";
    bool all = true;
    for (const auto& r : rows) {
      o << r.suite << ",\"" << r.check << "\"," << fmt17(r.value) << "," << fmt17(r.tolerance) << ","
        << (r.pass ? "pass" : "FAIL") << "\n";
      all = all && r.pass;
    }
    if (f.out.empty()) out_ << o.str();
    else emit(f.out, o.str());
    return all ? 0 : 1;
  }

  int run_timechange(const CliFlags& f) {
    const ModelParams p = f.x0.empty() ? ModelParams{f.n, f.delta, std::vector<double>(f.n, 0.0)} : model(f);
    p.validate();
    TimeFunctional fn;
    if (f.functional == "X1") fn.kind = TimeFunctional::X1;
    else if (f.functional == "V_upper") fn.kind = TimeFunctional::V_upper;
    else if (f.functional == "V_lower") fn.kind = TimeFunctional::V_lower, fn.a = f.a >= 0 ? f.a : a_of_delta(f.delta);
    else if (f.functional == "prod") fn.kind = TimeFunctional::prod_m, fn.m = f.m;
    else fn.kind = TimeFunctional::X1_pow_b, fn.b = f.b;
    const auto ts = parse_list(f.t_list);
    const auto c = time_change_integral(p, fn, ts, f.paths, f.seed, f.steps, f.workers);
    std::ostringstream o;
    o << "t,kept,flagged,kappa,q10,median,q90\n";
    Series med{"median of integral / t^kappa", {}, {}};
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const auto v = c.normalized(k);
      if (v.empty()) throw std::runtime_error("every replica was flagged");
      o << fmt17(ts[k]) << "," << v.size() << "," << c.flagged << "," << fmt17(c.kappa) << "," << fmt17(quantile(v, 0.1))
        << "," << fmt17(quantile(v, 0.5)) << "," << fmt17(quantile(v, 0.9)) << "\n";
      med.x.push_back(ts[k]), med.y.push_back(quantile(v, 0.5));
    }
    emit(f.out, o.str());
    plot(f, {med}, "time change scaling", true, false);
    return 0;
  }

  int run_conditioned(const CliFlags& f) {
    if (!(f.tmax > 0.0) || f.steps < 1) throw usage_error("--tmax and --steps must be positive");
    const auto grid = uniform_grid(f.tmax, f.steps);
    RngStream rng(f.seed, 0);
    if (f.mode == "pair") {
      const auto x0 = f.x0.empty() ? std::vector<double>{1.0, 1.0} : parse_list(f.x0);
      if (x0.size() != 2) throw usage_error("pair mode needs two coordinates");
      const auto c = sample_conditioned_pair(f.delta, {x0[0], x0[1]}, grid, rng);
      emit(f.out, conditioned_csv(c));
      plot(f, {{"x1", c.times, c.x1}, {"x2", c.times, c.x2}}, "pair conditioned to avoid joint zeros", false, false);
      if (c.clock_guard_hits > 0) err_ << "warning: radius floor reached " << c.clock_guard_hits << " times\n";
      return 0;
    }
    const auto x0 = f.x0.empty() ? std::vector<double>{1.0, 1.0, 1.0} : parse_list(f.x0);
    if (x0.size() != 3) throw usage_error("triple mode needs three coordinates");
    const auto s = sample_conditioned_triple_rejection(f.delta, x0, single_eps(f), grid, rng, f.max_attempts);
    emit(f.out, path_csv(s.path));
    out_ << "attempts," << s.attempts << "\n";
    plot(f, {{"x1", s.path.times, s.path.values[0]}, {"x2", s.path.times, s.path.values[1]},
             {"x3", s.path.times, s.path.values[2]}},
         "three processes without joint zeros", false, false);
    return 0;
  }

  void write_manifest(const std::string& command, const CliFlags& f,
                      std::chrono::steady_clock::time_point started) {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["params"] = params_;
    j["seed"] = f.seed;
    j["version"] = version_string;
    j["outputs"] = outputs_;
    j["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_text(f.out + ".manifest.json", j.dump(2) + "\n");
  }
};

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return Runner(out, err).dispatch(args);
}

}  // namespace besq
