#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "asmseq/agent.hpp"
#include "asmseq/env.hpp"
#include "asmseq/harness.hpp"
#include "asmseq/io.hpp"
#include "asmseq/model.hpp"
#include "asmseq/oracle.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUnsupported = 2;

asmseq::AssemblyProblem resolve_problem(const std::string& ref) {
  if (auto id = asmseq::scenario_from_name(ref)) return asmseq::builtin_scenario(*id);
  return asmseq::load_problem_file(ref);
}

std::ofstream open_output(const fs::path& dir, const std::string& file) {
  fs::create_directories(dir);
  fs::path path = dir / file;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write \"" + path.string() + "\"");
  return out;
}

void write_json(const fs::path& dir, const std::string& file, const ordered_json& doc) {
  auto out = open_output(dir, file);
  out << doc.dump(2) << '\n';
}

std::uint64_t resolve_seed(const CLI::App* cmd, std::uint64_t flag_value) {
  if (cmd->count("--seed")) return flag_value;
  if (const char* env = std::getenv("ASMSEQ_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw std::runtime_error("ASMSEQ_SEED is not an unsigned integer");
    }
  }
  return 0;
}

ordered_json sequence_json(const std::vector<int>& sequence) {
  ordered_json arr = ordered_json::array();
  for (int t : sequence) arr.push_back(t);
  return arr;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const asmseq::EnumerationCapExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUnsupported;
  } catch (const asmseq::ProblemError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}

struct TrainOptions {
  std::string problem = "builtin:scenario1";
  std::string out = "out";
  std::uint64_t seed = 0;
  asmseq::Hyperparams hyperparams;
};

void add_hyperparam_flags(CLI::App* cmd, asmseq::Hyperparams& hp) {
  cmd->add_option("--alpha", hp.alpha, "Learning rate in [0,1]");
  cmd->add_option("--gamma", hp.gamma, "Discount factor in [0,1]");
  cmd->add_option("--epsilon", hp.epsilon0, "Initial exploration rate");
  cmd->add_option("--epsilon-decay", hp.epsilon_decay,
                  "Multiplicative decay applied per step");
  cmd->add_option("--epsilon-floor", hp.epsilon_floor, "Lower bound for epsilon");
  cmd->add_option("--max-steps", hp.max_steps, "Steps allowed per episode");
  cmd->add_option("--max-episodes", hp.max_episodes, "Training episodes");
  cmd->add_option("--reward-shift", hp.rewards.shift, "Per-step reward shift r_s");
  cmd->add_option("--reward-multiplier", hp.rewards.multiplier,
                  "Reward scale factor r_m");
  cmd->add_option("--reward-penalty", hp.rewards.penalty,
                  "Reward for impossible actions r_p");
  cmd->add_flag("--masking", hp.masking, "Restrict action choice to feasible tasks");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Assembly sequence learning and exact baselines"};
  app.require_subcommand(1);

  // enumerate
  std::string enum_problem, enum_out = "out";
  auto* enumerate = app.add_subcommand(
      "enumerate", "List all feasible sequences with exact total times");
  enumerate->add_option("--problem", enum_problem, "Problem file or builtin:...")
      ->required();
  enumerate->add_option("--out", enum_out, "Output directory");
  enumerate->callback([&]() {
    std::exit(guarded([&]() {
      auto problem = resolve_problem(enum_problem);
      auto records = asmseq::enumerate_feasible(problem);
      auto dist = asmseq::distribution(problem);
      {
        auto out = open_output(enum_out, "sequences.csv");
        asmseq::save_sequences_csv(records, out);
      }
      {
        auto out = open_output(enum_out, "distribution.csv");
        asmseq::save_distribution_csv(dist, out);
      }
      ordered_json summary;
      summary["problem"] = problem.name();
      summary["count"] = records.size();
      summary["min"] = dist.min_value();
      summary["max"] = dist.max_value();
      summary["modal_value"] = dist.modal_value();
      summary["modal_percent"] = dist.modal_percent();
      summary["distinct_values"] = dist.distinct_values();
      write_json(enum_out, "summary.json", summary);
      std::cout << records.size() << " feasible sequences, total time "
                << asmseq::format_double(dist.min_value()) << " to "
                << asmseq::format_double(dist.max_value()) << '\n';
      return kExitOk;
    }));
  });

  // solve
  std::string solve_problem, solve_out = "out";
  bool solve_export_milp = false;
  auto* solve = app.add_subcommand("solve", "Exact optimum via dynamic programming");
  solve->add_option("--problem", solve_problem, "Problem file or builtin:...")
      ->required();
  solve->add_option("--out", solve_out, "Output directory");
  solve->add_flag("--export-milp", solve_export_milp,
                  "Also write the position-indexed MILP in LP format");
  solve->callback([&]() {
    std::exit(guarded([&]() {
      auto problem = resolve_problem(solve_problem);
      auto start = std::chrono::steady_clock::now();
      auto solution = asmseq::solve_dp(problem);
      std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      ordered_json doc;
      doc["problem"] = problem.name();
      doc["min_total_time"] = solution.min_total_time;
      doc["optimal_count"] = solution.optimal_count;
      doc["optimal_sequences"] = ordered_json::array();
      for (const auto& seq : solution.optimal_sequences)
        doc["optimal_sequences"].push_back(sequence_json(seq));
      doc["elapsed_seconds"] = elapsed.count();
      write_json(solve_out, "solution.json", doc);
      std::cout << "minimum total time "
                << asmseq::format_double(solution.min_total_time) << " over "
                << solution.optimal_count << " optimal sequences\n";
      if (solve_export_milp) {
        try {
          auto model = asmseq::export_milp(problem);
          auto out = open_output(solve_out, "model.lp");
          out << model.lp_text;
        } catch (const std::invalid_argument& e) {
          std::cerr << "error: " << e.what() << '\n';
          return kExitUnsupported;
        }
      }
      return kExitOk;
    }));
  });

  // export-milp
  std::string milp_problem, milp_out = "out";
  auto* milp = app.add_subcommand("export-milp",
                                  "Write the MILP baseline in CPLEX LP format");
  milp->add_option("--problem", milp_problem, "Problem file or builtin:...")
      ->required();
  milp->add_option("--out", milp_out, "Output directory");
  milp->callback([&]() {
    std::exit(guarded([&]() {
      auto problem = resolve_problem(milp_problem);
      asmseq::MilpModel model;
      try {
        model = asmseq::export_milp(problem);
      } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUnsupported;
      }
      {
        auto out = open_output(milp_out, "model.lp");
        out << model.lp_text;
      }
      ordered_json stats;
      stats["problem"] = problem.name();
      stats["binary_variables"] = model.binary_count;
      stats["total_variables"] = model.total_variable_count;
      stats["constraints"] = model.constraint_count;
      write_json(milp_out, "milp.json", stats);
      std::cout << model.binary_count << " binary / " << model.total_variable_count
                << " total variables, " << model.constraint_count << " constraints\n";
      return kExitOk;
    }));
  });

  // train
  TrainOptions train_opts;
  auto* train = app.add_subcommand("train", "Q-learning on one seed");
  train->add_option("--problem", train_opts.problem, "Problem file or builtin:...")
      ->required();
  train->add_option("--out", train_opts.out, "Output directory");
  train->add_option("--seed", train_opts.seed, "RNG seed (ASMSEQ_SEED as fallback)");
  add_hyperparam_flags(train, train_opts.hyperparams);
  train->callback([&]() {
    std::exit(guarded([&]() {
      auto problem = resolve_problem(train_opts.problem);
      std::uint64_t seed = resolve_seed(train, train_opts.seed);
      auto agent = asmseq::train(problem, train_opts.hyperparams, seed);
      auto rollout = asmseq::greedy_rollout(agent.table, problem);
      {
        auto out = open_output(train_opts.out, "episodes.csv");
        asmseq::save_episode_logs_csv(agent.logs, out);
      }
      {
        auto out = open_output(train_opts.out, "qtable.csv");
        agent.table.save_csv(out);
      }
      ordered_json doc;
      doc["problem"] = problem.name();
      doc["seed"] = seed;
      doc["episodes"] = agent.logs.size();
      doc["fail"] = rollout.failed;
      doc["sequence"] = sequence_json(rollout.sequence);
      doc["sequence_text"] = asmseq::format_sequence(rollout.sequence);
      if (!rollout.failed) {
        double optimum = asmseq::solve_dp(problem, 1).min_total_time;
        doc["total_time"] = rollout.total_time;
        doc["optimal"] = std::abs(rollout.total_time - optimum) <= 1e-9;
      } else {
        doc["optimal"] = false;
      }
      write_json(train_opts.out, "rollout.json", doc);
      if (rollout.failed)
        std::cout << "greedy rollout failed\n";
      else
        std::cout << "learned " << asmseq::format_sequence(rollout.sequence)
                  << " with total time " << asmseq::format_double(rollout.total_time)
                  << '\n';
      return kExitOk;
    }));
  });

  // sweep
  std::string sweep_spec_path, sweep_out = "out";
  std::uint64_t sweep_seed = 0;
  int sweep_jobs = 1;
  int sweep_replications = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "Replicated experiment sets over an axis");
  sweep_cmd->add_option("--spec", sweep_spec_path, "Sweep description (JSON)")
      ->required();
  sweep_cmd->add_option("--out", sweep_out, "Output directory");
  sweep_cmd->add_option("--seed", sweep_seed, "Base seed override");
  sweep_cmd->add_option("--jobs", sweep_jobs, "Worker threads");
  sweep_cmd->add_option("--replications", sweep_replications,
                        "Replications override");
  sweep_cmd->callback([&]() {
    std::exit(guarded([&]() {
      std::ifstream in(sweep_spec_path);
      if (!in) throw std::runtime_error("cannot open \"" + sweep_spec_path + "\"");
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("sweep spec: ") + e.what());
      }
      if (!doc.is_object() || !doc.contains("problem") || !doc.contains("axis") ||
          !doc.contains("values"))
        throw std::runtime_error(
            "sweep spec needs \"problem\", \"axis\" and \"values\"");
      auto problem = resolve_problem(doc["problem"].get<std::string>());

      asmseq::SweepSpec spec;
      if (doc.contains("base")) {
        const auto& base = doc["base"];
        auto& hp = spec.base.hyperparams;
        auto load = [&](const char* key, auto& field) {
          if (base.contains(key)) field = base[key].get<std::decay_t<decltype(field)>>();
        };
        load("alpha", hp.alpha);
        load("gamma", hp.gamma);
        load("epsilon0", hp.epsilon0);
        load("epsilon_decay", hp.epsilon_decay);
        load("epsilon_floor", hp.epsilon_floor);
        load("max_steps", hp.max_steps);
        load("max_episodes", hp.max_episodes);
        load("reward_shift", hp.rewards.shift);
        load("reward_multiplier", hp.rewards.multiplier);
        load("reward_penalty", hp.rewards.penalty);
        load("masking", hp.masking);
      }
      spec.axis.name = doc["axis"].get<std::string>();
      for (const auto& v : doc["values"]) spec.axis.values.push_back(v.get<double>());
      if (doc.contains("paired")) {
        asmseq::SweepAxis paired;
        paired.name = doc["paired"]["axis"].get<std::string>();
        for (const auto& v : doc["paired"]["values"])
          paired.values.push_back(v.get<double>());
        spec.paired = std::move(paired);
      }
      if (doc.contains("replications"))
        spec.base.replications = doc["replications"].get<int>();
      if (doc.contains("base_seed"))
        spec.base.base_seed = doc["base_seed"].get<std::uint64_t>();
      if (sweep_cmd->count("--replications")) spec.base.replications = sweep_replications;
      if (sweep_cmd->count("--seed")) spec.base.base_seed = sweep_seed;

      auto result = asmseq::sweep(problem, spec, sweep_jobs);
      {
        auto out = open_output(sweep_out, "sweep.csv");
        asmseq::save_metrics_csv(result, out);
      }
      {
        auto out = open_output(sweep_out, "replications.csv");
        asmseq::save_replications_csv(result, out);
      }
      // One plottable (x, y, ci) series per metric.
      fs::path plots = fs::path(sweep_out) / "plots";
      auto write_series = [&](const std::string& file, auto&& metric, auto&& ci) {
        auto out = open_output(plots, file);
        out << "x,y,ci\n";
        for (const auto& cell : result.cells)
          out << asmseq::format_double(cell.axis_value) << ','
              << asmseq::format_double(metric(cell.metrics)) << ','
              << asmseq::format_double(ci(cell.metrics)) << '\n';
      };
      auto no_ci = [](const asmseq::Metrics&) { return 0.0; };
      write_series("mean.csv",
                   [](const asmseq::Metrics& m) { return m.mean_normalized_reward; },
                   [](const asmseq::Metrics& m) { return m.ci95_halfwidth; });
      write_series("pct_optimal.csv",
                   [](const asmseq::Metrics& m) { return m.pct_optimal; }, no_ci);
      write_series("pct_fail.csv",
                   [](const asmseq::Metrics& m) { return m.pct_fail; }, no_ci);
      ordered_json summary;
      summary["problem"] = problem.name();
      summary["axis"] = spec.axis.name;
      summary["replications"] = spec.base.replications;
      summary["base_seed"] = spec.base.base_seed;
      summary["cells"] = ordered_json::array();
      for (const auto& cell : result.cells) {
        ordered_json jc;
        jc["axis_value"] = cell.axis_value;
        if (cell.paired_value) jc["paired_value"] = *cell.paired_value;
        jc["mean"] = cell.metrics.mean_normalized_reward;
        jc["ci95"] = cell.metrics.ci95_halfwidth;
        jc["pct_optimal"] = cell.metrics.pct_optimal;
        jc["pct_fail"] = cell.metrics.pct_fail;
        jc["successes"] = cell.metrics.successful_count;
        jc["attempts"] = cell.metrics.attempts;
        summary["cells"].push_back(jc);
      }
      if (spec.paired) {
        summary["paired_axis"] = spec.paired->name;
        std::vector<std::pair<double, double>> points;
        for (const auto& cell : result.cells)
          if (cell.paired_value && cell.axis_value > 0 && *cell.paired_value > 0)
            points.emplace_back(cell.axis_value, *cell.paired_value);
        if (points.size() >= 2) {
          try {
            auto fit = asmseq::fit_power_law(points);
            summary["power_law_fit"] = {{"coefficient", fit.coefficient},
                                        {"exponent", fit.exponent},
                                        {"r_squared", fit.r_squared}};
          } catch (const std::domain_error&) {
          }
        }
      }
      write_json(sweep_out, "summary.json", summary);
      std::cout << result.cells.size() << " sweep cells written\n";
      return kExitOk;
    }));
  });

  // report
  std::string report_out = "out";
  auto* report = app.add_subcommand("report", "Summarise artifacts in an output directory");
  report->add_option("--out", report_out, "Directory to summarise");
  report->callback([&]() {
    std::exit(guarded([&]() {
      fs::path dir = report_out;
      bool found = false;
      for (const char* file :
           {"summary.json", "solution.json", "rollout.json", "milp.json"}) {
        fs::path path = dir / file;
        if (!fs::exists(path)) continue;
        std::ifstream in(path);
        nlohmann::json doc;
        try {
          doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error&) {
          continue;
        }
        std::cout << file << ":\n" << doc.dump(2) << '\n';
        found = true;
      }
      if (!found) {
        std::cerr << "error: no artifacts found in \"" << dir.string() << "\"\n";
        return kExitError;
      }
      return kExitOk;
    }));
  });

  CLI11_PARSE(app, argc, argv);
  return kExitOk;
}
