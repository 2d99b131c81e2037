#include "asmseq/model.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <ostream>

#include "json.hpp"

namespace asmseq {

namespace {

constexpr int kMaxTasks = 24;

std::string task_label(int id) { return "task " + std::to_string(id); }

}  // namespace

const char* tool_name(Tool t) {
  switch (t) {
    case Tool::Screwdriver: return "screwdriver";
    case Tool::NutDriver: return "nutdriver";
    case Tool::None: break;
  }
  return "none";
}

std::optional<Tool> tool_from_name(const std::string& name) {
  if (name == "none") return Tool::None;
  if (name == "screwdriver") return Tool::Screwdriver;
  if (name == "nutdriver") return Tool::NutDriver;
  return std::nullopt;
}

AssemblyProblem::AssemblyProblem(std::string name, std::vector<Task> tasks,
                                 DeltaMatrix deltas,
                                 std::vector<PrecedencePair> precedence,
                                 std::vector<ForbiddenPair> forbidden,
                                 ToolConfig tool_config)
    : name_(std::move(name)), tasks_(std::move(tasks)), deltas_(std::move(deltas)),
      precedence_(std::move(precedence)), forbidden_(std::move(forbidden)),
      tool_config_(tool_config) {
  const int n = static_cast<int>(tasks_.size());
  if (n < 1 || n > kMaxTasks)
    throw ProblemError(ProblemError::Kind::Validation,
                       "task count must be between 1 and " + std::to_string(kMaxTasks));
  std::sort(tasks_.begin(), tasks_.end(),
            [](const Task& a, const Task& b) { return a.id < b.id; });
  for (int i = 0; i < n; ++i)
    if (tasks_[static_cast<std::size_t>(i)].id != i + 1)
      throw ProblemError(ProblemError::Kind::Validation,
                         "task ids must form the contiguous range 1.." + std::to_string(n));
  if (deltas_.task_count() != n)
    throw ProblemError(ProblemError::Kind::Validation,
                       "deltas must be an " + std::to_string(n) + "x" + std::to_string(n) +
                           " matrix");
  prereq_masks_.assign(static_cast<std::size_t>(n), 0u);
  for (const auto& p : precedence_) {
    if (p.task < 1 || p.task > n || p.prerequisite < 1 || p.prerequisite > n)
      throw ProblemError(ProblemError::Kind::Validation,
                         "precedence pair references a task outside 1.." + std::to_string(n));
    prereq_masks_[static_cast<std::size_t>(p.task - 1)] |= 1u << (p.prerequisite - 1);
  }
  for (const auto& t : tasks_)
    if (t.tool != Tool::None) tool_task_mask_ |= 1u << (t.id - 1);
  forbidden_masks_.assign(static_cast<std::size_t>(n), 0u);
  for (const auto& f : forbidden_) {
    if (f.task < 1 || f.task > n || f.successor < 1 || f.successor > n)
      throw ProblemError(ProblemError::Kind::Validation,
                         "forbidden pair references a task outside 1.." + std::to_string(n));
    forbidden_masks_[static_cast<std::size_t>(f.task - 1)] |= 1u << (f.successor - 1);
  }
}

bool AssemblyProblem::operator==(const AssemblyProblem& other) const {
  auto sorted = [](auto pairs) {
    std::sort(pairs.begin(), pairs.end());
    return pairs;
  };
  return name_ == other.name_ && tasks_ == other.tasks_ && deltas_ == other.deltas_ &&
         sorted(precedence_) == sorted(other.precedence_) &&
         sorted(forbidden_) == sorted(other.forbidden_) &&
         tool_config_ == other.tool_config_;
}

namespace {

struct ScenarioData {
  const char* name;
  std::array<double, 8> avg_times;
  std::array<Tool, 8> tools;
  // (done task, affected task, value)
  std::vector<std::array<double, 3>> delta_entries;
  ToolConfig tool_config;
};

const std::array<std::array<int, 2>, 6> kBuiltinPrecedence = {
    {{2, 1}, {3, 1}, {4, 1}, {5, 1}, {5, 4}, {6, 1}}};

AssemblyProblem make_builtin(const ScenarioData& data) {
  std::vector<Task> tasks;
  for (int i = 0; i < 8; ++i)
    tasks.push_back({i + 1, data.avg_times[static_cast<std::size_t>(i)],
                     data.tools[static_cast<std::size_t>(i)]});
  DeltaMatrix deltas(8);
  for (const auto& e : data.delta_entries)
    deltas.set(static_cast<int>(e[0]), static_cast<int>(e[1]), e[2]);
  std::vector<PrecedencePair> precedence;
  for (const auto& p : kBuiltinPrecedence) precedence.push_back({p[0], p[1]});
  return AssemblyProblem(data.name, std::move(tasks), std::move(deltas),
                         std::move(precedence), {}, data.tool_config);
}

const ScenarioData kScenario1 = {
    "scenario1",
    {10, 7, 8, 6, 12, 8, 11, 9},
    {Tool::None, Tool::None, Tool::None, Tool::None, Tool::None, Tool::None,
     Tool::None, Tool::None},
    {{2, 3, -1}, {2, 4, -1.5}, {2, 6, -1}, {2, 8, 1}, {4, 2, -0.5},
     {5, 2, -1}, {5, 3, -0.5}, {5, 6, -2}, {5, 7, 1}},
    {false, 0.0, Tool::None}};

const ScenarioData kScenario2 = {
    "scenario2",
    {6, 8, 9, 7.5, 10, 10.5, 11.5, 9},
    {Tool::None, Tool::NutDriver, Tool::NutDriver, Tool::NutDriver, Tool::NutDriver,
     Tool::NutDriver, Tool::Screwdriver, Tool::NutDriver},
    {{2, 3, -2}, {2, 4, -3}, {2, 5, -0.5}, {2, 6, -2}, {2, 8, 1.5},
     {4, 2, -1}, {4, 6, -1.5}, {5, 2, -2}, {5, 3, -1}, {5, 6, -3},
     {5, 7, 2}, {6, 2, -1}, {6, 3, -0.5}, {6, 4, 1}, {6, 5, -0.5}},
    {true, 3.0, Tool::None}};

}  // namespace

AssemblyProblem builtin_scenario(ScenarioId id) {
  return make_builtin(id == ScenarioId::ScenarioI ? kScenario1 : kScenario2);
}

std::optional<ScenarioId> scenario_from_name(const std::string& name) {
  std::string key = name;
  if (key.rfind("builtin:", 0) == 0) key = key.substr(8);
  if (key == "scenario1") return ScenarioId::ScenarioI;
  if (key == "scenario2") return ScenarioId::ScenarioII;
  return std::nullopt;
}

namespace {

using nlohmann::json;

const json& require_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw ProblemError(ProblemError::Kind::Schema,
                       std::string("missing field \"") + key + "\"");
  return *it;
}

double require_number(const json& value, const std::string& where) {
  if (!value.is_number())
    throw ProblemError(ProblemError::Kind::Schema, where + " must be a number");
  return value.get<double>();
}

int require_int(const json& value, const std::string& where) {
  if (!value.is_number_integer())
    throw ProblemError(ProblemError::Kind::Schema, where + " must be an integer");
  return value.get<int>();
}

}  // namespace

AssemblyProblem load_problem(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ProblemError(ProblemError::Kind::Syntax, e.what());
  }
  if (!doc.is_object())
    throw ProblemError(ProblemError::Kind::Schema, "document root must be an object");

  const json& jname = require_field(doc, "name");
  if (!jname.is_string())
    throw ProblemError(ProblemError::Kind::Schema, "\"name\" must be a string");

  const json& jtasks = require_field(doc, "tasks");
  if (!jtasks.is_array() || jtasks.empty())
    throw ProblemError(ProblemError::Kind::Schema, "\"tasks\" must be a non-empty array");
  std::vector<Task> tasks;
  for (const auto& jt : jtasks) {
    if (!jt.is_object())
      throw ProblemError(ProblemError::Kind::Schema, "each task must be an object");
    Task t;
    t.id = require_int(require_field(jt, "id"), "task id");
    t.avg_time = require_number(require_field(jt, "avg_time"),
                                task_label(t.id) + " avg_time");
    const json& jtool = require_field(jt, "tool");
    if (!jtool.is_string())
      throw ProblemError(ProblemError::Kind::Schema, task_label(t.id) + " tool must be a string");
    auto tool = tool_from_name(jtool.get<std::string>());
    if (!tool)
      throw ProblemError(ProblemError::Kind::Schema,
                         task_label(t.id) + ": unknown tool \"" +
                             jtool.get<std::string>() + "\"");
    t.tool = *tool;
    tasks.push_back(t);
  }
  const int n = static_cast<int>(tasks.size());

  const json& jdeltas = require_field(doc, "deltas");
  if (!jdeltas.is_array() || static_cast<int>(jdeltas.size()) != n)
    throw ProblemError(ProblemError::Kind::Schema,
                       "\"deltas\" must be an array of " + std::to_string(n) + " rows");
  DeltaMatrix deltas(n);
  for (int i = 0; i < n; ++i) {
    const json& row = jdeltas[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      throw ProblemError(ProblemError::Kind::Schema,
                         "deltas row " + std::to_string(i + 1) + " must have " +
                             std::to_string(n) + " entries");
    for (int j = 0; j < n; ++j)
      deltas.set(i + 1, j + 1,
                 require_number(row[static_cast<std::size_t>(j)],
                                "deltas[" + std::to_string(i + 1) + "][" +
                                    std::to_string(j + 1) + "]"));
  }

  auto parse_pairs = [](const json& arr, const char* key) {
    std::vector<std::array<int, 2>> out;
    if (!arr.is_array())
      throw ProblemError(ProblemError::Kind::Schema,
                         std::string("\"") + key + "\" must be an array");
    for (const auto& jp : arr) {
      if (!jp.is_array() || jp.size() != 2)
        throw ProblemError(ProblemError::Kind::Schema,
                           std::string("each ") + key + " entry must be a pair");
      out.push_back({require_int(jp[0], std::string(key) + " entry"),
                     require_int(jp[1], std::string(key) + " entry")});
    }
    return out;
  };

  std::vector<PrecedencePair> precedence;
  for (const auto& p : parse_pairs(require_field(doc, "precedence"), "precedence"))
    precedence.push_back({p[0], p[1]});
  std::vector<ForbiddenPair> forbidden;
  if (doc.contains("forbidden"))
    for (const auto& p : parse_pairs(doc["forbidden"], "forbidden"))
      forbidden.push_back({p[0], p[1]});

  ToolConfig tool_config;
  if (doc.contains("tool_config")) {
    const json& jtc = doc["tool_config"];
    if (!jtc.is_object())
      throw ProblemError(ProblemError::Kind::Schema, "\"tool_config\" must be an object");
    const json& jenabled = require_field(jtc, "enabled");
    if (!jenabled.is_boolean())
      throw ProblemError(ProblemError::Kind::Schema, "tool_config.enabled must be a boolean");
    tool_config.enabled = jenabled.get<bool>();
    tool_config.changeover_time =
        require_number(require_field(jtc, "changeover_time"), "tool_config.changeover_time");
    if (jtc.contains("initial_tool")) {
      const json& jinit = jtc["initial_tool"];
      if (!jinit.is_string())
        throw ProblemError(ProblemError::Kind::Schema,
                           "tool_config.initial_tool must be a string");
      auto tool = tool_from_name(jinit.get<std::string>());
      if (!tool)
        throw ProblemError(ProblemError::Kind::Schema,
                           "unknown tool_config.initial_tool \"" +
                               jinit.get<std::string>() + "\"");
      tool_config.initial_tool = *tool;
    }
  }

  AssemblyProblem problem(jname.get<std::string>(), std::move(tasks), std::move(deltas),
                          std::move(precedence), std::move(forbidden), tool_config);
  ValidationReport report = validate(problem);
  if (!report.ok())
    throw ProblemError(ProblemError::Kind::Validation, report.errors.front());
  return problem;
}

AssemblyProblem load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ProblemError(ProblemError::Kind::Syntax, "cannot open \"" + path + "\"");
  return load_problem(in);
}

void save_problem(const AssemblyProblem& problem, std::ostream& out) {
  nlohmann::ordered_json doc;
  doc["name"] = problem.name();
  doc["tasks"] = nlohmann::ordered_json::array();
  for (const auto& t : problem.tasks()) {
    nlohmann::ordered_json jt;
    jt["id"] = t.id;
    jt["avg_time"] = t.avg_time;
    jt["tool"] = tool_name(t.tool);
    doc["tasks"].push_back(jt);
  }
  const int n = problem.task_count();
  doc["deltas"] = nlohmann::ordered_json::array();
  for (int i = 1; i <= n; ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int j = 1; j <= n; ++j) row.push_back(problem.deltas().at(i, j));
    doc["deltas"].push_back(row);
  }
  doc["precedence"] = nlohmann::ordered_json::array();
  for (const auto& p : problem.precedence())
    doc["precedence"].push_back({p.task, p.prerequisite});
  doc["forbidden"] = nlohmann::ordered_json::array();
  for (const auto& f : problem.forbidden())
    doc["forbidden"].push_back({f.task, f.successor});
  doc["tool_config"] = {{"enabled", problem.tool_config().enabled},
                        {"changeover_time", problem.tool_config().changeover_time},
                        {"initial_tool", tool_name(problem.tool_config().initial_tool)}};
  out << doc.dump(2) << '\n';
}

namespace {

// Ancestor closure of the precedence DAG; ancestors[t-1] has bit p-1 set when
// p must be done (directly or transitively) before t. Empty on a cycle.
std::vector<std::uint32_t> ancestor_masks(const AssemblyProblem& problem, bool& acyclic) {
  const int n = problem.task_count();
  std::vector<std::uint32_t> anc(static_cast<std::size_t>(n), 0u);
  std::vector<int> state(static_cast<std::size_t>(n), 0);  // 0 new, 1 open, 2 done
  acyclic = true;

  auto visit = [&](auto&& self, int t) -> void {
    state[static_cast<std::size_t>(t - 1)] = 1;
    std::uint32_t mask = 0;
    for (int p = 1; p <= n; ++p) {
      if (!((problem.prerequisite_mask(t) >> (p - 1)) & 1u)) continue;
      if (state[static_cast<std::size_t>(p - 1)] == 1) {
        acyclic = false;
        continue;
      }
      if (state[static_cast<std::size_t>(p - 1)] == 0) self(self, p);
      mask |= anc[static_cast<std::size_t>(p - 1)] | (1u << (p - 1));
    }
    anc[static_cast<std::size_t>(t - 1)] = mask;
    state[static_cast<std::size_t>(t - 1)] = 2;
  };
  for (int t = 1; t <= n && acyclic; ++t)
    if (state[static_cast<std::size_t>(t - 1)] == 0) visit(visit, t);
  return anc;
}

}  // namespace

ValidationReport validate(const AssemblyProblem& problem) {
  ValidationReport report;
  const int n = problem.task_count();

  for (const auto& t : problem.tasks())
    if (t.avg_time < 0)
      report.errors.push_back(task_label(t.id) + ": negative avg_time");
  for (int i = 1; i <= n; ++i)
    if (problem.deltas().at(i, i) != 0.0)
      report.errors.push_back("deltas diagonal must be zero (" + task_label(i) + ")");

  bool acyclic = true;
  auto ancestors = ancestor_masks(problem, acyclic);
  if (!acyclic) report.errors.push_back("precedence contains a cycle");

  bool has_source = false;
  for (int t = 1; t <= n; ++t)
    if (problem.prerequisite_mask(t) == 0) has_source = true;
  if (!has_source) report.errors.push_back("no task is free of prerequisites");

  {
    std::vector<PrecedencePair> seen;
    for (const auto& p : problem.precedence()) {
      if (std::find(seen.begin(), seen.end(), p) != seen.end())
        report.warnings.push_back("duplicate precedence pair (" + std::to_string(p.task) +
                                  ", " + std::to_string(p.prerequisite) + ")");
      seen.push_back(p);
    }
  }

  for (const auto& f : problem.forbidden()) {
    if (f.task == f.successor) {
      report.warnings.push_back("forbidden pair (" + std::to_string(f.task) + ", " +
                                std::to_string(f.successor) + ") can never apply");
      continue;
    }
    if (acyclic &&
        ((ancestors[static_cast<std::size_t>(f.task - 1)] >> (f.successor - 1)) & 1u))
      report.warnings.push_back("forbidden pair (" + std::to_string(f.task) + ", " +
                                std::to_string(f.successor) + ") is redundant: " +
                                task_label(f.successor) + " always precedes " +
                                task_label(f.task));
  }

  // Durations must stay positive for every reachable done-set. Checked
  // exhaustively for sizes where the closure is cheap, pessimistically above.
  if (acyclic) {
    if (n <= 16) {
      std::vector<std::uint32_t> frontier = {0u};
      std::vector<bool> seen(std::size_t{1} << n, false);
      seen[0] = true;
      std::vector<bool> flagged(static_cast<std::size_t>(n), false);
      while (!frontier.empty()) {
        std::uint32_t done = frontier.back();
        frontier.pop_back();
        std::uint32_t feas = feasible_mask(problem, done);
        for (int t = 1; t <= n; ++t) {
          if (!((feas >> (t - 1)) & 1u)) continue;
          double d = problem.task(t).avg_time;
          for (int i = 1; i <= n; ++i)
            if ((done >> (i - 1)) & 1u) d += problem.deltas().at(i, t);
          if (d <= 0.0 && !flagged[static_cast<std::size_t>(t - 1)]) {
            flagged[static_cast<std::size_t>(t - 1)] = true;
            report.errors.push_back(task_label(t) +
                                    ": duration becomes non-positive for a reachable "
                                    "set of completed tasks");
          }
          std::uint32_t next = done | (1u << (t - 1));
          if (!seen[next]) {
            seen[next] = true;
            frontier.push_back(next);
          }
        }
      }
    } else {
      for (int t = 1; t <= n; ++t) {
        double worst = problem.task(t).avg_time;
        for (int i = 1; i <= n; ++i)
          if (i != t) worst += std::min(0.0, problem.deltas().at(i, t));
        if (worst <= 0.0)
          report.warnings.push_back(task_label(t) +
                                    ": duration may become non-positive (pessimistic "
                                    "bound; problem too large for the exact check)");
      }
    }
  }

  const ToolConfig& tc = problem.tool_config();
  if (tc.changeover_time < 0)
    report.errors.push_back("tool_config: negative changeover_time");
  if (!tc.enabled && tc.changeover_time != 0.0)
    report.errors.push_back("tool_config: changeover_time must be 0 when disabled");
  if (!tc.enabled && tc.initial_tool != Tool::None)
    report.errors.push_back("tool_config: initial_tool must be none when disabled");

  return report;
}

std::uint32_t feasible_mask(const AssemblyProblem& problem, std::uint32_t done_mask,
                            std::optional<int> last) {
  const int n = problem.task_count();
  std::uint32_t mask = 0;
  for (int t = 1; t <= n; ++t) {
    if ((done_mask >> (t - 1)) & 1u) continue;
    std::uint32_t need = problem.prerequisite_mask(t);
    if ((done_mask & need) != need) continue;
    if (last && problem.forbidden_after(*last, t)) continue;
    mask |= 1u << (t - 1);
  }
  return mask;
}

std::vector<int> feasible_actions(const AssemblyProblem& problem, std::uint32_t done_mask,
                                  std::optional<int> last) {
  std::uint32_t mask = feasible_mask(problem, done_mask, last);
  std::vector<int> out;
  for (int t = 1; t <= problem.task_count(); ++t)
    if ((mask >> (t - 1)) & 1u) out.push_back(t);
  return out;
}

}  // namespace asmseq
