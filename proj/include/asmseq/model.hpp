#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace asmseq {

/// Fastening tool a task may require. None means the task uses bare hands
/// and leaves whatever tool is mounted untouched.
enum class Tool : std::uint8_t { None = 0, Screwdriver = 1, NutDriver = 2 };

const char* tool_name(Tool t);
std::optional<Tool> tool_from_name(const std::string& name);

/// One assembly task: 1-based id, base duration in time units, required tool.
struct Task {
  int id = 0;
  double avg_time = 0.0;
  Tool tool = Tool::None;

  friend bool operator==(const Task&, const Task&) = default;
};

/// Duration variations: at(i, j) is the change applied to task j's base time
/// once task i has been completed. Diagonal entries are always zero.
class DeltaMatrix {
 public:
  DeltaMatrix() = default;
  explicit DeltaMatrix(int task_count)
      : n_(task_count), values_(static_cast<std::size_t>(task_count) * task_count, 0.0) {}

  int task_count() const { return n_; }
  double at(int done_task, int affected_task) const {
    return values_[index(done_task, affected_task)];
  }
  void set(int done_task, int affected_task, double value) {
    values_[index(done_task, affected_task)] = value;
  }

  friend bool operator==(const DeltaMatrix&, const DeltaMatrix&) = default;

 private:
  std::size_t index(int done_task, int affected_task) const {
    return static_cast<std::size_t>(done_task - 1) * n_ + (affected_task - 1);
  }

  int n_ = 0;
  std::vector<double> values_;
};

/// (task, prerequisite): `task` may only start once `prerequisite` is done.
struct PrecedencePair {
  int task = 0;
  int prerequisite = 0;

  friend auto operator<=>(const PrecedencePair&, const PrecedencePair&) = default;
};

/// (task, successor): `successor` may not be executed immediately after `task`.
struct ForbiddenPair {
  int task = 0;
  int successor = 0;

  friend auto operator<=>(const ForbiddenPair&, const ForbiddenPair&) = default;
};

struct ToolConfig {
  bool enabled = false;
  double changeover_time = 0.0;
  Tool initial_tool = Tool::None;

  friend bool operator==(const ToolConfig&, const ToolConfig&) = default;
};

/// Raised by problem loading/validation. Kind tells callers whether the
/// document was unreadable, structurally wrong, or semantically invalid.
class ProblemError : public std::runtime_error {
 public:
  enum class Kind { Syntax, Schema, Validation };

  ProblemError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  bool ok() const { return errors.empty(); }
};

/// Immutable description of one assembly problem. Construction checks the
/// structural shape (ids form 1..N, matrix dimension, pair references in
/// range) and precomputes per-task prerequisite masks; semantic rules live
/// in validate().
class AssemblyProblem {
 public:
  AssemblyProblem(std::string name, std::vector<Task> tasks, DeltaMatrix deltas,
                  std::vector<PrecedencePair> precedence,
                  std::vector<ForbiddenPair> forbidden, ToolConfig tool_config);

  const std::string& name() const { return name_; }
  int task_count() const { return static_cast<int>(tasks_.size()); }
  const std::vector<Task>& tasks() const { return tasks_; }
  const Task& task(int id) const { return tasks_[static_cast<std::size_t>(id - 1)]; }
  const DeltaMatrix& deltas() const { return deltas_; }
  const std::vector<PrecedencePair>& precedence() const { return precedence_; }
  const std::vector<ForbiddenPair>& forbidden() const { return forbidden_; }
  const ToolConfig& tool_config() const { return tool_config_; }

  /// Bitmask of direct prerequisites of `task` (bit t-1 set for prerequisite t).
  std::uint32_t prerequisite_mask(int task) const {
    return prereq_masks_[static_cast<std::size_t>(task - 1)];
  }
  /// Mask with one bit per task, all set.
  std::uint32_t full_mask() const {
    return task_count() == 32 ? ~0u : (1u << task_count()) - 1u;
  }
  /// Tasks that require some tool.
  std::uint32_t tool_task_mask() const { return tool_task_mask_; }
  bool forbidden_after(int last_task, int next_task) const {
    return (forbidden_masks_[static_cast<std::size_t>(last_task - 1)] >>
            (next_task - 1)) & 1u;
  }

  bool operator==(const AssemblyProblem& other) const;

 private:
  std::string name_;
  std::vector<Task> tasks_;
  DeltaMatrix deltas_;
  std::vector<PrecedencePair> precedence_;
  std::vector<ForbiddenPair> forbidden_;
  ToolConfig tool_config_;
  std::vector<std::uint32_t> prereq_masks_;
  std::vector<std::uint32_t> forbidden_masks_;
  std::uint32_t tool_task_mask_ = 0;
};

enum class ScenarioId { ScenarioI, ScenarioII };

/// The two datasets shipped with the library. Scenario I runs without tool
/// handling; Scenario II adds the two-tool changeover with a bare start.
AssemblyProblem builtin_scenario(ScenarioId id);

/// Resolves "builtin:scenario1" / "builtin:scenario2" (also bare "scenario1").
std::optional<ScenarioId> scenario_from_name(const std::string& name);

/// Parses a problem document (see docs/problem-format.md). Throws
/// ProblemError with Kind::Syntax for malformed JSON, Kind::Schema for a
/// missing/mistyped field and Kind::Validation when validate() rejects the
/// parsed problem.
AssemblyProblem load_problem(std::istream& in);
AssemblyProblem load_problem_file(const std::string& path);
void save_problem(const AssemblyProblem& problem, std::ostream& out);

/// Semantic checks: non-negative durations, zero diagonal, acyclic
/// precedence, strictly positive durations over reachable done-sets,
/// consistent tool configuration. Redundant forbidden pairs only warn.
ValidationReport validate(const AssemblyProblem& problem);

/// Tasks executable given the completed set: not yet done, all prerequisites
/// done, and not an immediately-forbidden successor of `last`.
std::uint32_t feasible_mask(const AssemblyProblem& problem, std::uint32_t done_mask,
                            std::optional<int> last = std::nullopt);
std::vector<int> feasible_actions(const AssemblyProblem& problem, std::uint32_t done_mask,
                                  std::optional<int> last = std::nullopt);

}  // namespace asmseq
