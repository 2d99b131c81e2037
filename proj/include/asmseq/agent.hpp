#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "asmseq/env.hpp"
#include "asmseq/model.hpp"

namespace asmseq {

struct Hyperparams {
  double alpha = 1.0;
  double gamma = 1.0;
  double epsilon0 = 0.9;
  double epsilon_decay = 1e-4;
  double epsilon_floor = 0.01;
  int max_steps = 8;
  int max_episodes = 3000;
  RewardParams rewards;
  bool masking = false;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// Throws std::invalid_argument on out-of-range settings (alpha/gamma/epsilon
/// outside [0,1], negative decay, max_steps < task count, ...).
void validate_hyperparams(const Hyperparams& hp, const AssemblyProblem& problem);

/// Deterministic RNG used everywhere: a fixed mt19937_64 stream mapped to
/// doubles by hand so results are bit-identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1), 53 mantissa bits.
  double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform index in [0, n).
  int next_index(int n) { return static_cast<int>(next_unit() * n); }

 private:
  std::mt19937_64 engine_;
};

/// Dense state x action table, zero-initialised.
class QTable {
 public:
  QTable() = default;
  QTable(int state_count, int action_count)
      : states_(state_count), actions_(action_count),
        values_(static_cast<std::size_t>(state_count) * action_count, 0.0) {}

  int state_count() const { return states_; }
  int action_count() const { return actions_; }
  /// `action` is a 1-based task id.
  double at(int state, int action) const { return values_[index(state, action)]; }
  double& at(int state, int action) { return values_[index(state, action)]; }
  double max_value(int state) const;
  /// Argmax with ties broken towards the lowest task id.
  int argmax_action(int state) const;

  void save_csv(std::ostream& out) const;
  static QTable load_csv(std::istream& in);

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::size_t index(int state, int action) const {
    return static_cast<std::size_t>(state) * actions_ + (action - 1);
  }

  int states_ = 0;
  int actions_ = 0;
  std::vector<double> values_;
};

/// Epsilon-greedy selection. With probability epsilon picks uniformly from
/// the candidate set, otherwise the candidate with the highest Q value (ties
/// to the lowest id). Candidates are the feasible actions when masking is on
/// and all N actions otherwise.
int select_action(const QTable& table, const AssemblyProblem& problem,
                  const EnvState& state, double epsilon, bool masking, Rng& rng);

/// Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)); the bootstrap
/// term is zero for terminal next states. Returns the updated entry.
double bellman_update(QTable& table, int state, int action, double reward,
                      int next_state, bool next_terminal, double alpha, double gamma);

struct EpisodeLog {
  int episode = 0;
  double accumulated_reward = 0.0;
  int steps_taken = 0;
  double q0 = 0.0;           // max_a Q(s0, a) before the episode
  double epsilon_at_start = 0.0;
};

/// Runs one episode in place: up to max_steps steps, Bellman update and
/// epsilon decay (down to the floor) after every step, early stop on the
/// terminal state. `epsilon` persists across calls.
EpisodeLog run_episode(const AssemblyProblem& problem, const Hyperparams& hp,
                       QTable& table, double& epsilon, int episode_index, Rng& rng);

struct TrainedAgent {
  QTable table;
  std::vector<EpisodeLog> logs;
  Hyperparams hyperparams;
  std::uint64_t seed = 0;
};

/// Fresh zero table, epsilon = epsilon0, max_episodes episodes on a single
/// RNG stream seeded with `seed`. Same seed, same everything.
TrainedAgent train(const AssemblyProblem& problem, const Hyperparams& hp,
                   std::uint64_t seed);

struct RolloutResult {
  bool failed = false;
  std::vector<int> sequence;
  double total_time = 0.0;
};

/// Greedy walk from the initial state, argmax over all actions regardless of
/// how the table was trained. Fails as soon as the greedy action is
/// infeasible; never executes more than N steps.
RolloutResult greedy_rollout(const QTable& table, const AssemblyProblem& problem);

void save_episode_logs_csv(const std::vector<EpisodeLog>& logs, std::ostream& out);

}  // namespace asmseq
