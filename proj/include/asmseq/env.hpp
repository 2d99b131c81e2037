#pragma once

#include <cstdint>

#include "asmseq/model.hpp"

namespace asmseq {

/// MDP state: completed-task bitmask plus the currently mounted tool.
/// For problems without tool handling the tool stays None.
struct EnvState {
  std::uint32_t done_mask = 0;
  Tool tool = Tool::None;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

/// Reward shaping knobs: a feasible step yields multiplier * (shift - duration),
/// an impossible one yields the flat penalty.
struct RewardParams {
  double multiplier = 1.0;
  double shift = 0.0;
  double penalty = -1e6;

  friend bool operator==(const RewardParams&, const RewardParams&) = default;
};

enum class StepKind { Possible, Impossible };

struct StepOutcome {
  EnvState next;
  double reward = 0.0;
  bool terminal = false;
  StepKind kind = StepKind::Possible;
};

EnvState initial_state(const AssemblyProblem& problem);

bool is_terminal(const AssemblyProblem& problem, const EnvState& state);

/// Number of declared states: 2^N without tools, 2 * (2^N - 1) + 1 with them
/// (every non-empty done-set paired with each of the two tools, plus the
/// bare initial state).
int state_space_size(const AssemblyProblem& problem);

/// Dense index into [0, state_space_size). Throws std::logic_error when the
/// state violates the encoding (tool mounted while tools are disabled, or a
/// tool-requiring task done with no tool mounted).
int state_ordinal(const AssemblyProblem& problem, const EnvState& state);

/// Execution time of `action` from `state`: base time, plus accumulated
/// variations from completed tasks, plus the tool changeover when the
/// mounted tool differs from the required one. Throws std::logic_error if
/// the action is not feasible from the state.
double duration(const AssemblyProblem& problem, const EnvState& state, int action);

double reward(const RewardParams& params, const AssemblyProblem& problem,
              const EnvState& state, int action);

/// Deterministic transition. Infeasible actions leave the state unchanged
/// and earn the penalty; the caller still consumes a step.
StepOutcome step(const AssemblyProblem& problem, const RewardParams& params,
                 const EnvState& state, int action);

/// Distinct states reachable from the initial state by feasible execution.
int reachable_state_count(const AssemblyProblem& problem);

}  // namespace asmseq
