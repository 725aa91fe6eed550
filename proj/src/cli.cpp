#include "inout/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"

#include "inout/baselines.hpp"
#include "inout/errors.hpp"
#include "inout/oracle1d.hpp"
#include "inout/theory.hpp"

namespace inout::cli {

namespace {

using nlohmann::json;

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json proportion_json(const ProportionEstimate& p) {
  return {{"estimate", p.estimate}, {"ci", {p.lower, p.upper}}, {"successes", p.successes}, {"trials", p.trials}};
}

json mean_json(const MeanEstimate& m) {
  return {{"mean", m.mean}, {"std_error", m.std_error}, {"ci", {m.lower, m.upper}}, {"count", m.count}};
}

json config_json(const ExperimentConfig& c) {
  json j = {{"label", c.label},   {"body", c.body},     {"walk", std::string(to_string(c.walk))},
            {"m", c.m},           {"M", c.warmness},    {"eta", c.eta},
            {"eps", c.eps},       {"q", c.q},           {"chains", c.chains},
            {"seed", c.seed},     {"restart", c.restart}, {"checkpoints", c.checkpoints}};
  j["d"] = c.d ? json(*c.d) : json(nullptr);
  j["h"] = c.h ? json(*c.h) : json(nullptr);
  j["N"] = c.N ? json(*c.N) : json(nullptr);
  j["delta"] = c.delta ? json(*c.delta) : json(nullptr);
  return j;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::ios_base::failure("write failed for '" + path.string() + "'");
}

void write_outputs(const Experiment& e, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ostringstream trace;
  write_trace_csv(trace, e.traces.front(), e.config.coords);
  write_file(dir / "trace.csv", trace.str());

  std::ostringstream samples;
  const auto d = e.traces.front().last.size();
  samples << "chain";
  for (Eigen::Index i = 1; i <= d; ++i) samples << ",x" << i;
  samples << '\n';
  for (std::size_t c = 0; c < e.traces.size(); ++c) {
    samples << c;
    for (Eigen::Index i = 0; i < d; ++i) samples << ',' << format_double(e.traces[c].last(i));
    samples << '\n';
  }
  write_file(dir / "samples.csv", samples.str());
  write_file(dir / "report.json", report_json(e).dump(2) + "\n");
}

// Options shared by `sample` and `compare`; unset flags leave the config untouched.
struct Overrides {
  std::vector<std::string> config_files;
  std::optional<std::string> body, walk, out, checkpoints;
  std::optional<Eigen::Index> d;
  std::optional<std::uint64_t> m, N, chains, seed;
  std::optional<double> M, eta, eps, q, h, delta;
  std::optional<unsigned> threads;
  bool restart = false;
  bool no_coords = false;

  void attach(CLI::App& app, bool single_config) {
    if (single_config) {
      app.add_option("--config", config_files, "Config file (key = value with [sections])")->expected(0, 1);
    }
    app.add_option("--body", body, "Body: ball(d,R) box(d,a,b) simplex(d) polytope(file) ellipsoid(d,a...)");
    app.add_option("--walk", walk, "Walk: inout | ball | speedy");
    app.add_option("--d", d, "Dimension for bodies given without one");
    app.add_option("--m", m, "Iterations (proper steps for ball/speedy)");
    app.add_option("--M", M, "Warmness of the start");
    app.add_option("--eta", eta, "Failure budget");
    app.add_option("--eps", eps, "Target accuracy");
    app.add_option("--q", q, "Renyi order");
    app.add_option("--h", h, "Override the step variance");
    app.add_option("--N", N, "Override the per-iteration trial cap");
    app.add_option("--delta", delta, "Ball/speedy step radius (default 1/(2 sqrt d))");
    app.add_option("--chains", chains, "Independent chains");
    app.add_option("--seed", seed, "Master seed");
    app.add_flag("--restart", restart, "Restart failed chains from scratch");
    app.add_flag("--no-coords", no_coords, "Omit x1..xd from trace.csv");
    app.add_option("--out", out, "Output directory for trace.csv, samples.csv, report.json");
    app.add_option("--checkpoints", checkpoints, "Comma-separated iterations for histogram trend checks");
    app.add_option("--threads", threads, "Worker threads (0 = hardware)");
  }

  void apply(ExperimentConfig& c) const {
    std::ostringstream text;
    auto put = [&](const char* key, const auto& value) {
      if (value) text << key << " = " << *value << '\n';
    };
    put("body", body);
    put("walk", walk);
    put("d", d);
    put("m", m);
    put("N", N);
    put("chains", chains);
    put("seed", seed);
    put("threads", threads);
    put("checkpoints", checkpoints);
    put("out", out);
    auto put_double = [&](const char* key, const std::optional<double>& value) {
      if (value) text << key << " = " << format_double(*value) << '\n';
    };
    put_double("M", M);
    put_double("eta", eta);
    put_double("eps", eps);
    put_double("q", q);
    put_double("h", h);
    put_double("delta", delta);
    if (restart) text << "restart = true\n";
    if (no_coords) text << "coords = false\n";
    std::istringstream in(text.str());
    const auto base = c.base_dir;
    c.apply(ConfigFile::parse(in, "<flags>"));
    c.base_dir = base;
  }
};

ExperimentConfig load_config(const std::optional<std::filesystem::path>& file, const Overrides& flags) {
  ExperimentConfig c;
  if (file) c.apply(ConfigFile::load(*file));
  flags.apply(c);
  c.validate();
  return c;
}

}  // namespace

nlohmann::json schedule_json(std::uint64_t m, double warmness, double eta, double eps, double q, std::uint64_t d,
                             const ConvexBody<double>* body) {
  const auto s = theory::per_iteration_schedule(m, warmness, eta, d);
  json j;
  j["inputs"] = {{"m", m}, {"M", warmness}, {"eta", eta}, {"eps", eps}, {"q", q}, {"d", d}};
  j["per_iteration"] = {{"Z", s.Z}, {"log_Z", s.log_Z}, {"loglog_Z", s.loglog_Z}, {"c", s.c},
                        {"t", s.t}, {"h", s.h},         {"delta", s.delta},       {"N", s.N}};
  j["main_step_size"] = theory::main_step_size(m, warmness, eta, d);
  j["blowup_tail_bound"] = theory::blowup_tail_bound(s.delta, s.h, d);
  if (q > 1.0) j["conditioning_bias"] = theory::conditioning_bias(q, eta);
  if (body) {
    const double D = body->circumradius();
    j["body"] = {{"spec", body->describe()}, {"circumradius", D}};
    j["point_start_log_warmness"] = theory::point_start_log_warmness(d, s.h, D);
    if (const auto cov = body->exact_cov_opnorm()) {
      const auto fi = theory::fi_constants(*cov, D, d, false);
      j["body"]["cov_opnorm"] = *cov;
      j["fi_constants"] = {{"poincare_upper", fi.poincare_upper}, {"log_sobolev_upper", fi.log_sobolev_upper}};
      j["iteration_count"] = theory::iteration_count(q, d, *cov, warmness, eta, eps);
    }
  }
  return j;
}

void write_trace_csv(std::ostream& out, const ChainTrace<double>& trace, bool with_coords) {
  const bool coords = with_coords && (trace.iterates.size() == trace.trials_per_iter.size() + 1 ||
                                      (trace.failed() && trace.iterates.size() == trace.trials_per_iter.size()));
  const Eigen::Index d = trace.last.size();
  out << "iter,trials,cum_queries";
  if (coords)
    for (Eigen::Index i = 1; i <= d; ++i) out << ",x" << i;
  out << '\n';
  // The first row is the start point of the chain that was kept.
  std::uint64_t cum = trace.discarded_queries;
  auto row = [&](std::size_t iter, std::uint64_t trials) {
    out << iter << ',' << trials << ',' << cum;
    if (coords) {
      if (iter < trace.iterates.size())
        for (Eigen::Index i = 0; i < d; ++i) out << ',' << format_double(trace.iterates[iter](i));
      else
        for (Eigen::Index i = 0; i < d; ++i) out << ',';
    }
    out << '\n';
  };
  row(0, 0);
  for (std::size_t k = 0; k < trace.trials_per_iter.size(); ++k) {
    cum += trace.trials_per_iter[k];
    row(k + 1, trace.trials_per_iter[k]);
  }
}

std::vector<TraceRow> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("iter,trials,cum_queries", 0) != 0)
    throw ConfigError("trace csv: missing header");
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    TraceRow row;
    std::getline(fields, cell, ',');
    row.iter = std::stoull(cell);
    std::getline(fields, cell, ',');
    row.trials = std::stoull(cell);
    std::getline(fields, cell, ',');
    row.cum_queries = std::stoull(cell);
    while (std::getline(fields, cell, ','))
      if (!cell.empty()) row.x.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

double effective_samples(const std::vector<ChainTrace<double>>& traces) {
  double total = 0.0;
  for (const auto& t : traces) {
    if (t.iterates.size() < 4) {
      total += 1.0;
      continue;
    }
    std::vector<double> series;
    series.reserve(t.iterates.size() - 1);
    for (std::size_t k = 1; k < t.iterates.size(); ++k) series.push_back(t.iterates[k](0));
    total += effective_sample_size(series);
  }
  return total;
}

Experiment run_experiment(const ExperimentConfig& config) {
  config.validate();
  Experiment e;
  e.config = config;
  const auto body = config.make_body();
  e.body = body.describe();
  const auto d = static_cast<std::uint64_t>(body.dim());
  const bool exact = has_exact_sampler(body.kind());
  // Without an exact sampler the chain starts at the center; its warmness is the user's claim.
  if (!exact && config.walk == Walk::InOut && config.warmness <= 1.0)
    throw ConfigError(std::string(to_string(body.kind())) +
                      " has no exact uniform sampler; supply the warmness M of the center start with --M");
  auto warm = [&](Rng& rng) -> Eigen::VectorXd { return exact ? exact_uniform_sample(body, rng) : body.center(); };

  if (config.walk == Walk::InOut) {
    e.schedule = schedule_json(config.m, config.warmness, config.eta, config.eps, config.q, d, &body);
    InOutParams params;
    params.h = config.h.value_or(e.schedule["per_iteration"]["h"].get<double>());
    params.N = config.N.value_or(e.schedule["per_iteration"]["N"].get<std::uint64_t>());
    params.m = config.m;
    params.q = config.q;
    params.eps = config.eps;
    params.eta = config.eta;
    params.warmness = config.warmness;
    params.seed = config.seed;
    e.schedule["used"] = {{"h", params.h}, {"N", params.N}};
    e.traces = run_chains(
        config.chains, config.seed,
        [&](std::uint64_t, Rng& rng) {
          return config.restart ? run_with_restart(body, warm, params, rng) : run_chain(body, warm(rng), params, rng);
        },
        config.threads);
  } else {
    BallWalkParams params;
    params.delta = config.delta.value_or(default_ball_step(body.dim()));
    params.T = config.m;
    params.seed = config.seed;
    e.schedule = {{"delta", params.delta}, {"T", params.T}};
    const bool speedy = config.walk == Walk::Speedy;
    e.traces = run_chains(
        config.chains, config.seed,
        [&](std::uint64_t, Rng& rng) {
          const Eigen::VectorXd x0 = warm(rng);
          return speedy ? run_speedy_walk(body, x0, params, rng) : run_ball_walk(body, x0, params, rng);
        },
        config.threads);
  }

  e.report = summarize(e.traces);
  for (const auto& t : e.traces) e.any_failed = e.any_failed || t.failed();

  if (config.walk == Walk::InOut) {
    const auto& f = e.report.failure_rate;
    e.report.bounds.push_back({"failure_rate_le_eta", config.eta, f.estimate, f.lower, f.upper, f.upper <= config.eta});
  }
  e.report.tests.push_back({"mean_trials_ge_1", e.report.mean_trials.mean, e.report.mean_trials.mean >= 1.0});

  const bool binnable = (body.kind() == BodyKind::Box || body.kind() == BodyKind::Ball);
  if (binnable && !e.any_failed) {
    std::vector<Eigen::VectorXd> last;
    for (const auto& t : e.traces) last.push_back(t.last);
    const auto ks = marginal_ks(stack_samples(last), body);
    double worst = 0.0;
    for (double s : ks.statistic) worst = std::max(worst, s);
    e.report.tests.push_back({"marginal_ks", worst, ks.pass});
  }
  if (binnable && body.dim() <= 3 && !config.checkpoints.empty()) {
    for (const std::uint64_t k : config.checkpoints) {
      std::vector<Eigen::VectorXd> pts;
      for (const auto& t : e.traces)
        if (k < t.iterates.size()) pts.push_back(t.iterates[k]);
      if (pts.empty()) continue;
      e.checkpoint_kl.emplace_back(k, histogram_divergence(stack_samples(pts), body, 8, oracle1d::DivergenceKind::kl()));
    }
    if (e.checkpoint_kl.size() >= 2)
      e.report.tests.push_back({"checkpoint_kl_not_increasing", e.checkpoint_kl.back().second,
                                e.checkpoint_kl.back().second <= e.checkpoint_kl.front().second});
  }
  return e;
}

nlohmann::json report_json(const Experiment& e) {
  const auto& r = e.report;
  json j;
  j["config"] = config_json(e.config);
  j["config"]["body_canonical"] = e.body;
  j["schedule"] = e.schedule;
  j["summary"] = {{"walk", std::string(to_string(e.config.walk))},
                  {"proper_steps", r.proper_steps},
                  {"total_queries", r.total_queries},
                  {"mean_trials", mean_json(r.mean_trials)},
                  {"failure_rate", proportion_json(r.failure_rate)},
                  {"restarts", r.restarts},
                  {"chains", r.chains}};
  j["bounds"] = json::array();
  for (const auto& b : r.bounds)
    j["bounds"].push_back({{"name", b.name},
                           {"predicted", b.predicted},
                           {"empirical", b.empirical},
                           {"ci", {b.ci_lower, b.ci_upper}},
                           {"satisfied", b.satisfied}});
  j["tests"] = json::array();
  for (const auto& t : r.tests) j["tests"].push_back({{"name", t.name}, {"statistic", t.statistic}, {"pass", t.pass}});
  if (!e.checkpoint_kl.empty()) {
    j["checkpoints"] = json::array();
    for (const auto& [k, kl] : e.checkpoint_kl) j["checkpoints"].push_back({{"iter", k}, {"histogram_kl", kl}});
  }
  return j;
}

nlohmann::json verify_json(const std::vector<oracle1d::Check>& checks, double seconds) {
  json j;
  bool all = true;
  j["checks"] = json::array();
  for (const auto& c : checks) {
    j["checks"].push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"pass", c.pass}});
    all = all && c.pass;
  }
  j["pass"] = all;
  j["runtime_s"] = seconds;
  return j;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"In-and-Out uniform sampler for convex bodies"};
  // "--h" is the step-size override, so help is long-form only.
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);

  // schedule
  auto* schedule = app.add_subcommand("schedule", "Print the schedule and bounds as JSON");
  std::uint64_t s_m = 100;
  double s_M = 1.0, s_eta = 0.1, s_eps = 0.1, s_q = 2.0;
  std::optional<std::uint64_t> s_d;
  std::optional<std::string> s_body;
  schedule->add_option("--m", s_m, "Iterations")->capture_default_str();
  schedule->add_option("--M", s_M, "Warmness")->capture_default_str();
  schedule->add_option("--eta", s_eta, "Failure budget")->capture_default_str();
  schedule->add_option("--eps", s_eps, "Target accuracy")->capture_default_str();
  schedule->add_option("--q", s_q, "Renyi order")->capture_default_str();
  schedule->add_option("--d", s_d, "Dimension");
  schedule->add_option("--body", s_body, "Body spec for covariance and diameter");

  // sample
  auto* sample = app.add_subcommand("sample", "Run chains and write trace/report");
  Overrides sample_flags;
  sample_flags.attach(*sample, true);

  // verify-1d
  auto* verify = app.add_subcommand("verify-1d", "Run the exact 1-d grid checks");
  oracle1d::VerifyOptions vopt;
  verify->add_option("--n", vopt.n, "Grid cells")->capture_default_str();
  verify->add_option("--h", vopt.h, "Step variance")->capture_default_str();
  verify->add_option("--steps", vopt.steps, "Kernel steps")->capture_default_str();
  verify->add_option("--tolerance-scale", vopt.tolerance_scale, "Multiply every tolerance (< 1 tightens)")
      ->capture_default_str();

  // compare
  auto* compare = app.add_subcommand("compare", "Run several configs and tabulate queries per effective sample");
  std::vector<std::string> compare_files;
  std::optional<std::string> compare_walks;
  compare->add_option("configs", compare_files, "Config files");
  compare->add_option("--walks", compare_walks, "Comma-separated walks sharing the flags below");
  Overrides compare_flags;
  compare_flags.attach(*compare, false);

  std::vector<const char*> argv{"inout"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
  // Subcommand help is reported through the subcommand itself.

  try {
    if (*schedule) {
      std::optional<ConvexBody<double>> body;
      if (s_body) body = parse_body(*s_body, s_d ? std::optional<Eigen::Index>(static_cast<Eigen::Index>(*s_d)) : std::nullopt);
      if (!s_d && !body) throw ConfigError("schedule: give --d or --body");
      const std::uint64_t d = s_d ? *s_d : static_cast<std::uint64_t>(body->dim());
      out << schedule_json(s_m, s_M, s_eta, s_eps, s_q, d, body ? &*body : nullptr).dump(2) << "\n";
      return kOk;
    }
    if (*sample) {
      std::optional<std::filesystem::path> file;
      if (!sample_flags.config_files.empty()) file = sample_flags.config_files.front();
      const auto config = load_config(file, sample_flags);
      const auto e = run_experiment(config);
      if (config.out) write_outputs(e, *config.out);
      out << report_json(e).dump(2) << "\n";
      if (e.any_failed && !config.restart) {
        err << "error: " << e.report.failure_rate.successes << " of " << e.report.chains
            << " chains failed (rerun with --restart or a larger N)\n";
        return kSamplerFailure;
      }
      return kOk;
    }
    if (*verify) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto checks = oracle1d::verify_1d(vopt);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const auto j = verify_json(checks, secs);
      out << j.dump(2) << "\n";
      return j["pass"].get<bool>() ? kOk : kToleranceError;
    }
    if (*compare) {
      std::vector<ExperimentConfig> configs;
      for (const auto& f : compare_files) configs.push_back(load_config(std::filesystem::path(f), compare_flags));
      if (compare_walks) {
        std::istringstream list(*compare_walks);
        for (std::string w; std::getline(list, w, ',');) {
          auto c = load_config(std::nullopt, compare_flags);
          c.walk = parse_walk(w);
          c.label = w;
          configs.push_back(c);
        }
      }
      if (configs.empty()) {
        err << "error: compare needs at least one config file or --walks\n" << compare->help();
        return kConfigError;
      }
      json table = json::array();
      for (auto& c : configs) {
        if (c.label.empty()) c.label = std::string(to_string(c.walk));
        c.out.reset();
        const auto e = run_experiment(c);
        const double ess = effective_samples(e.traces);
        table.push_back({{"label", c.label},
                         {"walk", std::string(to_string(c.walk))},
                         {"body", e.body},
                         {"chains", e.report.chains},
                         {"proper_steps", e.report.proper_steps},
                         {"total_queries", e.report.total_queries},
                         {"mean_trials", e.report.mean_trials.mean},
                         {"failure_rate", e.report.failure_rate.estimate},
                         {"effective_samples", ess},
                         {"queries_per_effective_sample", static_cast<double>(e.report.total_queries) / ess}});
      }
      const json j = {{"table", table}};
      if (compare_flags.out) {
        std::filesystem::create_directories(*compare_flags.out);
        write_file(std::filesystem::path(*compare_flags.out) / "compare.json", j.dump(2) + "\n");
      }
      out << j.dump(2) << "\n";
      return kOk;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ParameterError& e) {
    err << "parameter error: " << e.what() << "\n";
    return kConfigError;
  } catch (const UnsupportedOperation& e) {
    err << "unsupported: " << e.what() << "\n";
    return kConfigError;
  } catch (const ToleranceError& e) {
    err << "tolerance error: " << e.what() << "\n";
    return kToleranceError;
  } catch (const DiagnosticsError& e) {
    err << "diagnostics error: " << e.what() << "\n";
    return kToleranceError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  }
  return kConfigError;
}

}  // namespace inout::cli
