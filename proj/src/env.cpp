#include "asmseq/env.hpp"

#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace asmseq {

EnvState initial_state(const AssemblyProblem& problem) {
  Tool start = problem.tool_config().enabled ? problem.tool_config().initial_tool
                                             : Tool::None;
  return EnvState{0u, start};
}

bool is_terminal(const AssemblyProblem& problem, const EnvState& state) {
  return state.done_mask == problem.full_mask();
}

int state_space_size(const AssemblyProblem& problem) {
  const int n = problem.task_count();
  const int masks = 1 << n;
  if (!problem.tool_config().enabled) return masks;
  return 2 * (masks - 1) + 1;
}

int state_ordinal(const AssemblyProblem& problem, const EnvState& state) {
  if (!problem.tool_config().enabled) {
    if (state.tool != Tool::None)
      throw std::logic_error("state encodes a mounted tool but tools are disabled");
    return static_cast<int>(state.done_mask);
  }
  if (state.tool == Tool::None && (state.done_mask & problem.tool_task_mask()))
    throw std::logic_error("state has tool-requiring tasks done but no tool mounted");
  if (state.done_mask == 0) return 0;
  // A done-set whose tasks all work bare-handed never mounts anything, so its
  // screwdriver slot is unreachable; (mask, None) states borrow it.
  return 2 * static_cast<int>(state.done_mask) - 1 + (state.tool == Tool::NutDriver ? 1 : 0);
}

double duration(const AssemblyProblem& problem, const EnvState& state, int action) {
  std::uint32_t feas = feasible_mask(problem, state.done_mask);
  if (action < 1 || action > problem.task_count() || !((feas >> (action - 1)) & 1u))
    throw std::logic_error("duration queried for an infeasible action");
  double d = problem.task(action).avg_time;
  for (int i = 1; i <= problem.task_count(); ++i)
    if ((state.done_mask >> (i - 1)) & 1u) d += problem.deltas().at(i, action);
  const ToolConfig& tc = problem.tool_config();
  Tool required = problem.task(action).tool;
  if (tc.enabled && required != Tool::None && state.tool != required)
    d += tc.changeover_time;
  return d;
}

double reward(const RewardParams& params, const AssemblyProblem& problem,
              const EnvState& state, int action) {
  std::uint32_t feas = feasible_mask(problem, state.done_mask);
  if (action < 1 || action > problem.task_count() || !((feas >> (action - 1)) & 1u))
    return params.penalty;
  return params.multiplier * (params.shift - duration(problem, state, action));
}

StepOutcome step(const AssemblyProblem& problem, const RewardParams& params,
                 const EnvState& state, int action) {
  std::uint32_t feas = feasible_mask(problem, state.done_mask);
  if (action < 1 || action > problem.task_count() || !((feas >> (action - 1)) & 1u))
    return StepOutcome{state, params.penalty, is_terminal(problem, state),
                       StepKind::Impossible};
  double r = params.multiplier * (params.shift - duration(problem, state, action));
  EnvState next = state;
  next.done_mask |= 1u << (action - 1);
  Tool required = problem.task(action).tool;
  if (problem.tool_config().enabled && required != Tool::None) next.tool = required;
  return StepOutcome{next, r, is_terminal(problem, next), StepKind::Possible};
}

int reachable_state_count(const AssemblyProblem& problem) {
  auto key = [](const EnvState& s) {
    return (static_cast<std::uint64_t>(s.done_mask) << 2) |
           static_cast<std::uint64_t>(s.tool);
  };
  std::unordered_set<std::uint64_t> seen;
  std::vector<EnvState> frontier = {initial_state(problem)};
  seen.insert(key(frontier.front()));
  RewardParams params;
  while (!frontier.empty()) {
    EnvState s = frontier.back();
    frontier.pop_back();
    std::uint32_t feas = feasible_mask(problem, s.done_mask);
    for (int t = 1; t <= problem.task_count(); ++t) {
      if (!((feas >> (t - 1)) & 1u)) continue;
      EnvState next = step(problem, params, s, t).next;
      if (seen.insert(key(next)).second) frontier.push_back(next);
    }
  }
  return static_cast<int>(seen.size());
}

}  // namespace asmseq
