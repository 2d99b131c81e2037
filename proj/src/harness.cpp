#include "asmseq/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "asmseq/env.hpp"
#include "asmseq/io.hpp"
#include "asmseq/oracle.hpp"

namespace asmseq {

namespace {

constexpr double kOptimalTolerance = 1e-9;

ReplicationRecord run_replication(const AssemblyProblem& problem,
                                  const Hyperparams& hp, int replication,
                                  std::uint64_t seed, double optimal_total) {
  TrainedAgent agent = train(problem, hp, seed);
  RolloutResult rollout = greedy_rollout(agent.table, problem);
  ReplicationRecord record;
  record.replication = replication;
  record.seed = seed;
  record.failed = rollout.failed;
  if (!rollout.failed) {
    record.total_time = rollout.total_time;
    record.sequence = rollout.sequence;
    record.optimal = std::abs(rollout.total_time - optimal_total) <= kOptimalTolerance;
  }
  return record;
}

// Runs replications [first, first + count) across `jobs` threads. Each
// replication is an independent RNG stream, so scheduling cannot change
// results.
std::vector<ReplicationRecord> run_batch(const AssemblyProblem& problem,
                                         const Hyperparams& hp, int first, int count,
                                         std::uint64_t base_seed, double optimal_total,
                                         int jobs) {
  std::vector<ReplicationRecord> batch(static_cast<std::size_t>(count));
  std::atomic<int> cursor{0};
  std::exception_ptr failure;
  std::mutex guard;
  auto worker = [&]() {
    try {
      for (;;) {
        int index = cursor.fetch_add(1);
        if (index >= count) return;
        int replication = first + index;
        batch[static_cast<std::size_t>(index)] =
            run_replication(problem, hp, replication,
                            base_seed + static_cast<std::uint64_t>(replication),
                            optimal_total);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (!failure) failure = std::current_exception();
    }
  };
  int workers = std::min(jobs, count);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return batch;
}

Metrics compute_metrics(const std::vector<ReplicationRecord>& records) {
  Metrics metrics;
  metrics.attempts = static_cast<int>(records.size());
  double sum = 0.0;
  int optimal = 0;
  for (const auto& r : records) {
    if (r.failed) continue;
    ++metrics.successful_count;
    sum += -r.total_time;
    if (r.optimal) ++optimal;
  }
  if (metrics.successful_count > 0) {
    metrics.mean_normalized_reward = sum / metrics.successful_count;
    double ss = 0.0;
    for (const auto& r : records) {
      if (r.failed) continue;
      double dev = -r.total_time - metrics.mean_normalized_reward;
      ss += dev * dev;
    }
    if (metrics.successful_count > 1) {
      double sd = std::sqrt(ss / (metrics.successful_count - 1));
      metrics.ci95_halfwidth = 1.96 * sd / std::sqrt(double(metrics.successful_count));
    }
    metrics.pct_optimal = 100.0 * optimal / metrics.successful_count;
  }
  metrics.pct_fail =
      100.0 * (metrics.attempts - metrics.successful_count) / metrics.attempts;
  return metrics;
}

}  // namespace

ExperimentResult run_experiment_set(const AssemblyProblem& problem,
                                    const ExperimentSpec& spec, int jobs) {
  if (spec.replications < 1)
    throw std::invalid_argument("replications must be >= 1");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  validate_hyperparams(spec.hyperparams, problem);

  ExperimentResult result;
  result.optimal_total_time = solve_dp(problem, 1).min_total_time;

  const int max_attempts = 10 * spec.replications;
  int successes = 0;
  int next = 0;
  while (successes < spec.replications) {
    if (next >= max_attempts)
      throw std::runtime_error(
          "experiment aborted: " + std::to_string(successes) + " successes in " +
          std::to_string(next) + " attempts (limit " + std::to_string(max_attempts) +
          "); the configuration rarely learns a feasible sequence");
    int chunk = std::min(spec.replications - successes, max_attempts - next);
    auto batch = run_batch(problem, spec.hyperparams, next, chunk, spec.base_seed,
                           result.optimal_total_time, jobs);
    for (auto& record : batch) {
      if (!record.failed) ++successes;
      result.records.push_back(std::move(record));
    }
    next += chunk;
  }
  result.metrics = compute_metrics(result.records);
  return result;
}

Hyperparams with_axis_value(const Hyperparams& base, const std::string& axis,
                            double value) {
  Hyperparams hp = base;
  if (axis == "alpha") {
    hp.alpha = value;
  } else if (axis == "gamma") {
    hp.gamma = value;
  } else if (axis == "epsilon0") {
    hp.epsilon0 = value;
  } else if (axis == "epsilon_decay") {
    hp.epsilon_decay = value;
  } else if (axis == "epsilon_floor") {
    hp.epsilon_floor = value;
  } else if (axis == "max_steps") {
    hp.max_steps = static_cast<int>(std::llround(value));
  } else if (axis == "max_episodes") {
    hp.max_episodes = static_cast<int>(std::llround(value));
  } else if (axis == "reward_shift") {
    hp.rewards.shift = value;
  } else if (axis == "reward_multiplier") {
    hp.rewards.multiplier = value;
  } else if (axis == "reward_penalty") {
    hp.rewards.penalty = value;
  } else {
    throw std::invalid_argument("unknown sweep axis \"" + axis + "\"");
  }
  return hp;
}

SweepResult sweep(const AssemblyProblem& problem, const SweepSpec& spec, int jobs) {
  if (spec.axis.values.empty())
    throw std::invalid_argument("sweep axis has no values");
  if (spec.paired && spec.paired->values.size() != spec.axis.values.size())
    throw std::invalid_argument("paired axis must list one value per axis value");

  SweepResult result;
  for (std::size_t i = 0; i < spec.axis.values.size(); ++i) {
    double value = spec.axis.values[i];
    Hyperparams hp = with_axis_value(spec.base.hyperparams, spec.axis.name, value);
    SweepCell cell;
    cell.axis_value = value;
    if (spec.paired) {
      cell.paired_value = spec.paired->values[i];
      hp = with_axis_value(hp, spec.paired->name, *cell.paired_value);
    }
    ExperimentSpec experiment{hp, spec.base.replications, spec.base.base_seed};
    ExperimentResult one = run_experiment_set(problem, experiment, jobs);
    cell.metrics = one.metrics;
    cell.records = std::move(one.records);
    result.cells.push_back(std::move(cell));
  }
  std::stable_sort(result.cells.begin(), result.cells.end(),
                   [](const SweepCell& a, const SweepCell& b) {
                     return a.axis_value < b.axis_value;
                   });
  return result;
}

int plateau_episode(std::span<const EpisodeLog> logs, int window) {
  if (logs.empty()) return 0;
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  const int n = static_cast<int>(logs.size());
  std::vector<double> ma(static_cast<std::size_t>(n));
  double running = 0.0;
  for (int e = 0; e < n; ++e) {
    running += logs[static_cast<std::size_t>(e)].accumulated_reward;
    if (e >= window) running -= logs[static_cast<std::size_t>(e - window)].accumulated_reward;
    ma[static_cast<std::size_t>(e)] = running / std::min(e + 1, window);
  }
  // "Reaches 99% of the final value": one-sided in the direction the curve
  // moves, so an ascending average crosses final - 1%, a descending one
  // final + 1%.
  double final = ma[static_cast<std::size_t>(n - 1)];
  double band = 0.01 * std::abs(final);
  bool ascending = ma.front() <= final;
  for (int e = 0; e < n; ++e) {
    double value = ma[static_cast<std::size_t>(e)];
    if (ascending ? value >= final - band : value <= final + band) return e;
  }
  return n - 1;
}

RegressionFit fit_power_law(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2)
    throw std::domain_error("power-law fit needs at least two points");
  double sx = 0, sy = 0;
  for (const auto& [x, y] : points) {
    if (x <= 0 || y <= 0)
      throw std::domain_error("power-law fit needs positive coordinates");
    sx += std::log(x);
    sy += std::log(y);
  }
  const double n = static_cast<double>(points.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : points) {
    double dx = std::log(x) - mx, dy = std::log(y) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0)
    throw std::domain_error("power-law fit needs at least two distinct x values");
  RegressionFit fit;
  fit.exponent = sxy / sxx;
  fit.coefficient = std::exp(my - fit.exponent * mx);
  if (syy == 0) {
    fit.r_squared = 1.0;
  } else {
    double ss_res = 0;
    for (const auto& [x, y] : points) {
      double predicted = my + fit.exponent * (std::log(x) - mx);
      double err = std::log(y) - predicted;
      ss_res += err * err;
    }
    fit.r_squared = 1.0 - ss_res / syy;
  }
  return fit;
}

void save_metrics_csv(const SweepResult& result, std::ostream& out) {
  out << "axis_value,mean,ci95,pct_optimal,pct_fail,attempts\n";
  for (const auto& cell : result.cells)
    out << format_double(cell.axis_value) << ','
        << format_double(cell.metrics.mean_normalized_reward) << ','
        << format_double(cell.metrics.ci95_halfwidth) << ','
        << format_double(cell.metrics.pct_optimal) << ','
        << format_double(cell.metrics.pct_fail) << ',' << cell.metrics.attempts << '\n';
}

void save_replications_csv(const SweepResult& result, std::ostream& out) {
  out << "axis_value,replication,seed,failed,optimal,total_time,sequence\n";
  for (const auto& cell : result.cells)
    for (const auto& r : cell.records) {
      out << format_double(cell.axis_value) << ',' << r.replication << ',' << r.seed
          << ',' << (r.failed ? 1 : 0) << ',' << (r.optimal ? 1 : 0) << ',';
      if (!r.failed) out << format_double(r.total_time);
      out << ',';
      if (!r.failed) out << format_sequence(r.sequence);
      out << '\n';
    }
}

}  // namespace asmseq
