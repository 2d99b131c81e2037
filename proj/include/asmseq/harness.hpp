#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "asmseq/agent.hpp"
#include "asmseq/model.hpp"

namespace asmseq {

struct ExperimentSpec {
  Hyperparams hyperparams;
  int replications = 120;
  std::uint64_t base_seed = 0;
};

struct ReplicationRecord {
  int replication = 0;        // 0-based offset from base_seed
  std::uint64_t seed = 0;
  bool failed = false;
  bool optimal = false;
  double total_time = 0.0;    // valid when not failed
  std::vector<int> sequence;
};

struct Metrics {
  double mean_normalized_reward = 0.0;  // mean of -total_time over successes
  double ci95_halfwidth = 0.0;
  double pct_optimal = 0.0;             // successes matching the exact optimum
  double pct_fail = 0.0;                // failed attempts over all attempts
  int successful_count = 0;
  int attempts = 0;
};

struct ExperimentResult {
  Metrics metrics;
  std::vector<ReplicationRecord> records;  // seed order, failures included
  double optimal_total_time = 0.0;
};

/// Trains one agent per seed base_seed + r and rolls each table out
/// greedily. Failed rollouts stay in the records but extra seeds are drawn
/// until `replications` successes exist; more than 10x replications total
/// attempts aborts with std::runtime_error. `jobs` > 1 parallelises
/// training without changing any result.
ExperimentResult run_experiment_set(const AssemblyProblem& problem,
                                    const ExperimentSpec& spec, int jobs = 1);

struct SweepAxis {
  std::string name;                 // hyperparameter field name
  std::vector<double> values;
};

struct SweepSpec {
  ExperimentSpec base;
  SweepAxis axis;
  std::optional<SweepAxis> paired;  // same length, varied in lockstep
};

struct SweepCell {
  double axis_value = 0.0;
  std::optional<double> paired_value;
  Metrics metrics;
  std::vector<ReplicationRecord> records;
};

struct SweepResult {
  std::vector<SweepCell> cells;     // ascending by axis value
};

/// Returns a copy with the named field set; integer fields are rounded.
/// Throws std::invalid_argument for an unknown axis name.
Hyperparams with_axis_value(const Hyperparams& base, const std::string& axis,
                            double value);

SweepResult sweep(const AssemblyProblem& problem, const SweepSpec& spec, int jobs = 1);

/// First episode whose trailing moving average (window `window`, shorter
/// prefixes use what is available) reaches 99% of the final average, taken
/// in the direction the curve moves.
int plateau_episode(std::span<const EpisodeLog> logs, int window = 100);

struct RegressionFit {
  double coefficient = 0.0;  // a in y = a * x^b
  double exponent = 0.0;     // b
  double r_squared = 0.0;
};

/// Least squares on log-log axes. Requires at least two distinct positive
/// x values and positive y values; throws std::domain_error otherwise.
RegressionFit fit_power_law(std::span<const std::pair<double, double>> points);

void save_metrics_csv(const SweepResult& result, std::ostream& out);
void save_replications_csv(const SweepResult& result, std::ostream& out);

}  // namespace asmseq
