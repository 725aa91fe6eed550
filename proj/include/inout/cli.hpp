#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "inout/config.hpp"
#include "inout/diagnostics.hpp"
#include "inout/sampler.hpp"

namespace inout::cli {

enum ExitCode : int {
  kOk = 0,
  kIoError = 1,
  kConfigError = 2,
  kSamplerFailure = 3,
  kToleranceError = 4,
};

struct Experiment {
  ExperimentConfig config;
  std::string body;  // canonical description
  nlohmann::json schedule;
  std::vector<ChainTrace<double>> traces;
  RunReport report;
  /// Histogram KL against Unif(K) at each checkpoint (boxes and balls with d <= 3).
  std::vector<std::pair<std::uint64_t, double>> checkpoint_kl;
  bool any_failed = false;
};

Experiment run_experiment(const ExperimentConfig& config);

nlohmann::json schedule_json(std::uint64_t m, double warmness, double eta, double eps, double q, std::uint64_t d,
                             const ConvexBody<double>* body = nullptr);
nlohmann::json report_json(const Experiment& experiment);
nlohmann::json verify_json(const std::vector<oracle1d::Check>& checks, double seconds);

/// One row per iteration: iter, trials, cum_queries, then x1..xd when iterates were kept.
/// Row 0 is the start point.
void write_trace_csv(std::ostream& out, const ChainTrace<double>& trace, bool with_coords = true);

struct TraceRow {
  std::uint64_t iter = 0;
  std::uint64_t trials = 0;
  std::uint64_t cum_queries = 0;
  std::vector<double> x;
};
std::vector<TraceRow> read_trace_csv(std::istream& in);

/// Sum over chains of the effective sample size of the first coordinate.
double effective_samples(const std::vector<ChainTrace<double>>& traces);

/// Entry point; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace inout::cli
