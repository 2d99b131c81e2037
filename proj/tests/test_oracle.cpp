#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "asmseq/model.hpp"
#include "asmseq/oracle.hpp"

using namespace asmseq;

namespace {

AssemblyProblem random_problem(std::mt19937& gen) {
  const int n = 2 + static_cast<int>(gen() % 5);
  auto quarter = [&](double lo, double hi) {
    int steps = static_cast<int>((hi - lo) * 4);
    return lo + 0.25 * static_cast<double>(gen() % (steps + 1));
  };
  bool tools = gen() % 5 < 2;
  std::vector<Task> tasks;
  for (int i = 1; i <= n; ++i) {
    Tool tool = Tool::None;
    if (tools && gen() % 2 == 0)
      tool = gen() % 2 == 0 ? Tool::Screwdriver : Tool::NutDriver;
    tasks.push_back({i, quarter(4.0, 12.0), tool});
  }
  DeltaMatrix deltas(n);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      if (i != j && gen() % 3 == 0) deltas.set(i, j, quarter(-0.5, 0.5));
  std::vector<PrecedencePair> precedence;
  for (int t = 2; t <= n; ++t)
    if (gen() % 2 == 0) precedence.push_back({t, 1 + static_cast<int>(gen() % (t - 1))});
  std::vector<ForbiddenPair> forbidden;
  if (gen() % 3 == 0) {
    int a = 1 + static_cast<int>(gen() % n);
    int b = 1 + static_cast<int>(gen() % n);
    if (a != b) forbidden.push_back({a, b});
  }
  ToolConfig config;
  if (tools) config = {true, quarter(0.25, 2.0), Tool::None};
  return AssemblyProblem("random", std::move(tasks), std::move(deltas),
                         std::move(precedence), std::move(forbidden), config);
}

// Minimal LP reader for the emitted text: rows between Subject To and Bounds.
struct LpConstraint {
  std::string name;
  std::vector<std::pair<double, std::string>> terms;
  std::string sense;
  double rhs = 0.0;
};

std::vector<LpConstraint> parse_lp_rows(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<LpConstraint> rows;
  bool active = false;
  while (std::getline(in, line)) {
    if (line == "Subject To") {
      active = true;
      continue;
    }
    if (line == "Bounds") break;
    if (!active || line.empty()) continue;
    LpConstraint row;
    std::istringstream parts(line);
    std::string token;
    parts >> token;
    REQUIRE(token.back() == ':');
    row.name = token.substr(0, token.size() - 1);
    double sign = 1.0;
    double pending = 1.0;
    bool have_coef = false;
    while (parts >> token) {
      if (token == "+" || token == "-") {
        sign = token == "-" ? -1.0 : 1.0;
        pending = 1.0;
        have_coef = false;
      } else if (token == "<=" || token == ">=" || token == "=") {
        row.sense = token;
        parts >> row.rhs;
      } else if (std::isdigit(static_cast<unsigned char>(token[0])) || token[0] == '.') {
        pending = std::stod(token);
        have_coef = true;
      } else {
        row.terms.emplace_back(sign * (have_coef ? pending : 1.0), token);
        sign = 1.0;
        pending = 1.0;
        have_coef = false;
      }
    }
    REQUIRE_FALSE(row.sense.empty());
    rows.push_back(std::move(row));
  }
  return rows;
}

// Fixes the binaries to one sequence, tightens every completion-time row to
// equality-from-below, and returns the resulting makespan.
double lp_makespan_for(const MilpModel& model, const std::vector<int>& sequence) {
  auto rows = parse_lp_rows(model.lp_text);
  const int n = static_cast<int>(sequence.size());
  std::map<std::string, double> value;
  for (int k = 1; k <= n; ++k)
    for (int i = 1; i <= n; ++i)
      value["y_" + std::to_string(i) + "_" + std::to_string(k)] =
          sequence[static_cast<std::size_t>(k - 1)] == i ? 1.0 : 0.0;
  for (int k = 1; k <= n; ++k)
    for (int i = 1; i <= n; ++i)
      value["c_" + std::to_string(i) + "_" + std::to_string(k)] = 0.0;
  value["cmax"] = 0.0;

  for (int pass = 0; pass < n + 2; ++pass) {
    for (const auto& row : rows) {
      if (row.name.rfind("t1_", 0) != 0 && row.name.rfind("tm_", 0) != 0 &&
          row.name.rfind("mk_", 0) != 0)
        continue;
      const auto& target = row.terms.front();
      REQUIRE(target.first == 1.0);
      double rest = 0.0;
      for (std::size_t i = 1; i < row.terms.size(); ++i)
        rest += row.terms[i].first * value[row.terms[i].second];
      double bound = row.rhs - rest;
      double& slot = value[target.second];
      slot = std::max(slot, bound);
    }
  }

  for (const auto& row : rows) {
    double lhs = 0.0;
    for (const auto& [coef, var] : row.terms) lhs += coef * value[var];
    INFO(row.name);
    if (row.sense == "<=") {
      CHECK(lhs <= row.rhs + 1e-9);
    } else if (row.sense == ">=") {
      CHECK(lhs >= row.rhs - 1e-9);
    } else {
      CHECK(lhs == doctest::Approx(row.rhs).epsilon(1e-12));
    }
  }
  return value["cmax"];
}

}  // namespace

TEST_CASE("scenario1 has 3360 feasible sequences") {
  auto p = builtin_scenario(ScenarioId::ScenarioI);
  auto records = enumerate_feasible(p);
  CHECK(records.size() == 3360);
  auto closed = count_linear_extensions_closed_form(p);
  REQUIRE(closed.is_forest);
  CHECK(closed.count == 3360);
  CHECK(std::is_sorted(records.begin(), records.end(),
                       [](const SequenceRecord& a, const SequenceRecord& b) {
                         return a.sequence < b.sequence;
                       }));
}

TEST_CASE("an unconstrained 8-task problem has 40320 sequences in closed form") {
  std::vector<Task> tasks;
  for (int i = 1; i <= 8; ++i) tasks.push_back({i, 1.0, Tool::None});
  AssemblyProblem p("free", tasks, DeltaMatrix(8), {}, {}, {});
  auto closed = count_linear_extensions_closed_form(p);
  REQUIRE(closed.is_forest);
  CHECK(closed.count == 40320);
}

TEST_CASE("a diamond precedence graph is not a forest") {
  std::vector<Task> tasks;
  for (int i = 1; i <= 4; ++i) tasks.push_back({i, 1.0, Tool::None});
  AssemblyProblem p("diamond", tasks, DeltaMatrix(4),
                    {{2, 1}, {3, 1}, {4, 2}, {4, 3}}, {}, {});
  CHECK_FALSE(count_linear_extensions_closed_form(p).is_forest);
}

TEST_CASE("redundant precedence edges are reduced away") {
  // 5 depends on 1 both directly and through 4; the reduction keeps a chain.
  auto p = builtin_scenario(ScenarioId::ScenarioI);
  CHECK(count_linear_extensions_closed_form(p).is_forest);
}

TEST_CASE("the enumeration cap rejects oversized problems") {
  std::vector<Task> tasks;
  std::vector<PrecedencePair> chain;
  for (int i = 1; i <= 13; ++i) tasks.push_back({i, 1.0, Tool::None});
  for (int i = 2; i <= 13; ++i) chain.push_back({i, i - 1});
  AssemblyProblem p("big", tasks, DeltaMatrix(13), chain, {}, {});
  CHECK_THROWS_AS(enumerate_feasible(p), EnumerationCapExceeded);
  CHECK(enumerate_feasible(p, 13).size() == 1);
}

TEST_CASE("scenario1 optimum is 65 with 50 optimal sequences") {
  auto p = builtin_scenario(ScenarioId::ScenarioI);
  auto records = enumerate_feasible(p);
  double min_total = records.front().total_time;
  for (const auto& r : records) min_total = std::min(min_total, r.total_time);
  CHECK(min_total == 65.0);
  std::uint64_t at_min = 0;
  for (const auto& r : records)
    if (r.total_time == min_total) ++at_min;
  CHECK(at_min == 50);

  auto solution = solve_dp(p);
  CHECK(solution.min_total_time == 65.0);
  CHECK(solution.optimal_count == 50);
  REQUIRE(solution.optimal_sequences.size() == 50);
  for (const auto& seq : solution.optimal_sequences)
    CHECK(sequence_total_time(p, seq) == 65.0);
  CHECK(std::is_sorted(solution.optimal_sequences.begin(),
                       solution.optimal_sequences.end()));
}

TEST_CASE("the published scenario1 optimal sequence costs 65") {
  auto p = builtin_scenario(ScenarioId::ScenarioI);
  std::vector<int> seq = {1, 8, 4, 7, 5, 2, 6, 3};
  CHECK(sequence_total_time(p, seq) == doctest::Approx(65.0).epsilon(1e-12));
}

TEST_CASE("the worked scenario1 example costs 69.5") {
  auto p = builtin_scenario(ScenarioId::ScenarioI);
  std::vector<int> seq = {8, 1, 3, 4, 7, 2, 6, 5};
  CHECK(sequence_total_time(p, seq) == 69.5);
}

TEST_CASE("scenario1 distribution peaks at 69.5") {
  auto p = builtin_scenario(ScenarioId::ScenarioI);
  auto dist = distribution(p);
  CHECK(dist.total() == 3360);
  CHECK(dist.min_value() == 65.0);
  CHECK(dist.modal_value() == 69.5);
  CHECK(dist.bins().at(69.5) == 618);
  CHECK(dist.modal_percent() == doctest::Approx(100.0 * 618 / 3360).epsilon(1e-12));
  double percent_sum = 0.0;
  for (const auto& [value, count] : dist.bins()) percent_sum += dist.percent(value);
  CHECK(percent_sum == doctest::Approx(100.0).epsilon(1e-8));
}

TEST_CASE("scenario2 optimum is 64 and both published sequences achieve it") {
  auto p = builtin_scenario(ScenarioId::ScenarioII);
  std::vector<int> first = {7, 1, 8, 2, 4, 5, 6, 3};
  std::vector<int> second = {7, 8, 1, 2, 4, 5, 6, 3};
  CHECK(sequence_total_time(p, first) == 64.0);
  CHECK(sequence_total_time(p, second) == 64.0);

  auto solution = solve_dp(p);
  CHECK(solution.min_total_time == 64.0);
  // Task 1 touches no tool and no time variation in either direction, so the
  // head 1-7-8 ties the two published heads exactly; the computed optimum
  // has three sequences.
  CHECK(solution.optimal_count == 3);
  REQUIRE(solution.optimal_sequences.size() == 3);
  std::vector<int> third = {1, 7, 8, 2, 4, 5, 6, 3};
  CHECK(solution.optimal_sequences[0] == third);
  CHECK(solution.optimal_sequences[1] == first);
  CHECK(solution.optimal_sequences[2] == second);
  CHECK(sequence_total_time(p, third) == 64.0);
}

TEST_CASE("scenario2 distribution spans 64 to 82 on a half-unit grid") {
  auto p = builtin_scenario(ScenarioId::ScenarioII);
  auto dist = distribution(p);
  CHECK(dist.total() == 3360);
  CHECK(dist.min_value() == 64.0);
  CHECK(dist.max_value() == 82.0);
  // Realized distinct totals: every half step from 64 to 80.5, plus 81.5 and
  // 82; the grid slot at 81 stays empty.
  CHECK(dist.distinct_values() == 36);
  CHECK(dist.spanned_slot_count(0.5) == 37);
  CHECK(dist.bins().count(81.0) == 0);
  CHECK(dist.bins().count(81.5) == 1);
  for (double v = 64.0; v <= 80.5; v += 0.5) CHECK(dist.bins().count(v) == 1);
  CHECK(dist.mean_of_distinct() == doctest::Approx(2620.0 / 36).epsilon(1e-12));
  // The full 37-slot grid midpoint; the value the associated reward view
  // reports as the mean possible accumulated reward.
  CHECK((dist.min_value() + dist.max_value()) / 2 == 73.0);
}

TEST_CASE("sequence_total_time rejects malformed sequences") {
  auto p = builtin_scenario(ScenarioId::ScenarioI);
  CHECK_THROWS_AS(sequence_total_time(p, std::vector<int>{1, 2, 3}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      sequence_total_time(p, std::vector<int>{2, 1, 3, 4, 5, 6, 7, 8}),
      std::invalid_argument);
  CHECK_THROWS_AS(
      sequence_total_time(p, std::vector<int>{1, 1, 3, 4, 5, 6, 7, 8}),
      std::invalid_argument);
}

TEST_CASE("forbidden successions restrict enumeration and the dp agrees") {
  std::vector<Task> tasks = {{1, 2.0, Tool::None}, {2, 3.0, Tool::None},
                             {3, 4.0, Tool::None}};
  AssemblyProblem p("forbid", tasks, DeltaMatrix(3), {}, {{1, 2}}, {});
  auto records = enumerate_feasible(p);
  CHECK(records.size() == 4);
  for (const auto& r : records)
    for (std::size_t i = 0; i + 1 < r.sequence.size(); ++i)
      CHECK_FALSE((r.sequence[i] == 1 && r.sequence[i + 1] == 2));
  auto solution = solve_dp(p);
  double min_total = records.front().total_time;
  std::uint64_t at_min = 0;
  for (const auto& r : records) min_total = std::min(min_total, r.total_time);
  for (const auto& r : records)
    if (r.total_time == min_total) ++at_min;
  CHECK(solution.min_total_time == min_total);
  CHECK(solution.optimal_count == at_min);
}

TEST_CASE("a fully forbidden problem has no solution") {
  std::vector<Task> tasks = {{1, 2.0, Tool::None}, {2, 3.0, Tool::None}};
  AssemblyProblem p("dead", tasks, DeltaMatrix(2), {}, {{1, 2}, {2, 1}}, {});
  CHECK(enumerate_feasible(p).empty());
  CHECK_THROWS_AS(solve_dp(p), std::runtime_error);
}

TEST_CASE("a single-task problem solves trivially") {
  std::vector<Task> tasks = {{1, 2.5, Tool::None}};
  AssemblyProblem p("one", tasks, DeltaMatrix(1), {}, {}, {});
  auto solution = solve_dp(p);
  CHECK(solution.min_total_time == 2.5);
  CHECK(solution.optimal_count == 1);
  REQUIRE(solution.optimal_sequences.size() == 1);
  CHECK(solution.optimal_sequences[0] == std::vector<int>{1});
}

TEST_CASE("dp and enumeration agree on random problems") {
  std::mt19937 gen(2024);
  for (int trial = 0; trial < 40; ++trial) {
    auto p = random_problem(gen);
    if (!validate(p).ok()) continue;
    auto records = enumerate_feasible(p);
    if (records.empty()) {
      CHECK_THROWS_AS(solve_dp(p), std::runtime_error);
      continue;
    }
    double min_total = records.front().total_time;
    for (const auto& r : records) min_total = std::min(min_total, r.total_time);
    std::uint64_t at_min = 0;
    std::set<std::vector<int>> optimal_set;
    for (const auto& r : records)
      if (r.total_time == min_total) {
        ++at_min;
        optimal_set.insert(r.sequence);
      }
    auto solution = solve_dp(p);
    INFO("trial ", trial, " n=", p.task_count());
    CHECK(solution.min_total_time == min_total);
    CHECK(solution.optimal_count == at_min);
    REQUIRE(solution.optimal_sequences.size() == at_min);
    for (const auto& seq : solution.optimal_sequences) {
      CHECK(optimal_set.count(seq) == 1);
      CHECK(sequence_total_time(p, seq) == min_total);
    }
  }
}

TEST_CASE("closed-form counts match enumeration on random forests") {
  std::mt19937 gen(99);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + static_cast<int>(gen() % 5);
    std::vector<Task> tasks;
    for (int i = 1; i <= n; ++i) tasks.push_back({i, 2.0, Tool::None});
    std::vector<PrecedencePair> precedence;
    for (int t = 2; t <= n; ++t) {
      int parent = static_cast<int>(gen() % static_cast<unsigned>(t));
      if (parent > 0) precedence.push_back({t, parent});
    }
    AssemblyProblem p("forest", tasks, DeltaMatrix(n), precedence, {}, {});
    auto closed = count_linear_extensions_closed_form(p);
    REQUIRE(closed.is_forest);
    CHECK(closed.count == enumerate_feasible(p).size());
  }
}

TEST_CASE("the sequence cap limits reconstruction but not the count") {
  auto p = builtin_scenario(ScenarioId::ScenarioI);
  auto solution = solve_dp(p, 5);
  CHECK(solution.optimal_count == 50);
  CHECK(solution.optimal_sequences.size() == 5);
}

TEST_CASE("milp export matches the published model size") {
  auto p = builtin_scenario(ScenarioId::ScenarioI);
  auto model = export_milp(p);
  CHECK(model.binary_count == 64);
  CHECK(model.total_variable_count == 129);
  CHECK(model.constraint_count == 592);
  for (const char* section :
       {"\\Problem name: scenario1", "Minimize", "Subject To", "Bounds", "Binary", "End"})
    CHECK(model.lp_text.find(section) != std::string::npos);
  auto rows = parse_lp_rows(model.lp_text);
  CHECK(static_cast<int>(rows.size()) == model.constraint_count);
  std::map<std::string, int> by_prefix;
  for (const auto& row : rows) ++by_prefix[row.name.substr(0, 2)];
  CHECK(by_prefix["mk"] == 8);
  CHECK(by_prefix["as"] == 8);
  CHECK(by_prefix["at"] == 8);
  CHECK(by_prefix["pr"] == 168);
  CHECK(by_prefix["t1"] == 8);
  CHECK(by_prefix["tm"] == 392);
}

TEST_CASE("milp refuses tool-enabled problems") {
  auto p = builtin_scenario(ScenarioId::ScenarioII);
  CHECK_THROWS_AS(export_milp(p), std::invalid_argument);
}

TEST_CASE("a one-task milp is the bare makespan model") {
  std::vector<Task> tasks = {{1, 2.5, Tool::None}};
  AssemblyProblem p("one", tasks, DeltaMatrix(1), {}, {}, {});
  auto model = export_milp(p);
  CHECK(model.binary_count == 1);
  CHECK(model.total_variable_count == 3);
  CHECK(model.constraint_count == 4);
  CHECK(model.lp_text.find("t1_1: c_1_1 - 2.5 y_1_1 >= 0") != std::string::npos);
}

TEST_CASE("an optimal assignment reproduces the dp makespan through the lp") {
  auto p = builtin_scenario(ScenarioId::ScenarioI);
  auto model = export_milp(p);
  auto solution = solve_dp(p, 3);
  for (const auto& seq : solution.optimal_sequences) {
    double makespan = lp_makespan_for(model, seq);
    CHECK(makespan == doctest::Approx(65.0).epsilon(1e-12));
  }

  // For arbitrary data the completion-time rows only bound the makespan from
  // below, so random problems get the one-sided check.
  std::mt19937 gen(5);
  int checked = 0;
  while (checked < 3) {
    auto q = random_problem(gen);
    if (q.tool_config().enabled || !q.forbidden().empty() || !validate(q).ok()) continue;
    auto sol = solve_dp(q, 1);
    auto m = export_milp(q);
    double span = lp_makespan_for(m, sol.optimal_sequences.front());
    CHECK(span >= sol.min_total_time - 1e-9);
    ++checked;
  }
}
