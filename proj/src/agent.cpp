#include "asmseq/agent.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "asmseq/io.hpp"

namespace asmseq {

void validate_hyperparams(const Hyperparams& hp, const AssemblyProblem& problem) {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(hp.alpha)) throw std::invalid_argument("alpha must be in [0, 1]");
  if (!in_unit(hp.gamma)) throw std::invalid_argument("gamma must be in [0, 1]");
  if (!in_unit(hp.epsilon0)) throw std::invalid_argument("epsilon0 must be in [0, 1]");
  if (!in_unit(hp.epsilon_decay))
    throw std::invalid_argument("epsilon_decay must be in [0, 1]");
  if (!in_unit(hp.epsilon_floor) || hp.epsilon_floor > hp.epsilon0)
    throw std::invalid_argument("epsilon_floor must be in [0, epsilon0]");
  if (hp.max_steps < problem.task_count())
    throw std::invalid_argument("max_steps must cover at least one full sequence");
  if (hp.max_episodes < 0) throw std::invalid_argument("max_episodes must be >= 0");
  if (hp.rewards.multiplier <= 0)
    throw std::invalid_argument("reward multiplier must be positive");
}

double QTable::max_value(int state) const {
  double best = at(state, 1);
  for (int a = 2; a <= actions_; ++a) best = std::max(best, at(state, a));
  return best;
}

int QTable::argmax_action(int state) const {
  int best = 1;
  for (int a = 2; a <= actions_; ++a)
    if (at(state, a) > at(state, best)) best = a;
  return best;
}

void QTable::save_csv(std::ostream& out) const {
  out << "state_ordinal,action,value\n";
  for (int s = 0; s < states_; ++s)
    for (int a = 1; a <= actions_; ++a)
      out << s << ',' << a << ',' << format_double(at(s, a)) << '\n';
}

QTable QTable::load_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "state_ordinal,action,value")
    throw std::invalid_argument("bad q-table header");
  struct Entry {
    int state, action;
    double value;
  };
  std::vector<Entry> entries;
  int max_state = -1, max_action = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    Entry e{};
    char comma1 = 0, comma2 = 0;
    if (!(row >> e.state >> comma1 >> e.action >> comma2 >> e.value) || comma1 != ',' ||
        comma2 != ',')
      throw std::invalid_argument("bad q-table row: " + line);
    entries.push_back(e);
    max_state = std::max(max_state, e.state);
    max_action = std::max(max_action, e.action);
  }
  QTable table(max_state + 1, max_action);
  for (const auto& e : entries) table.at(e.state, e.action) = e.value;
  return table;
}

int select_action(const QTable& table, const AssemblyProblem& problem,
                  const EnvState& state, double epsilon, bool masking, Rng& rng) {
  const int n = problem.task_count();
  int ordinal = state_ordinal(problem, state);
  std::array<int, 32> candidates{};
  int candidate_count = 0;
  if (masking) {
    std::uint32_t feas = feasible_mask(problem, state.done_mask);
    for (int t = 1; t <= n; ++t)
      if ((feas >> (t - 1)) & 1u) candidates[static_cast<std::size_t>(candidate_count++)] = t;
    if (candidate_count == 0)
      throw std::logic_error("no feasible action to select from");
  } else {
    for (int t = 1; t <= n; ++t) candidates[static_cast<std::size_t>(candidate_count++)] = t;
  }
  if (rng.next_unit() < epsilon)
    return candidates[static_cast<std::size_t>(rng.next_index(candidate_count))];
  int best = candidates[0];
  for (int c = 1; c < candidate_count; ++c) {
    int t = candidates[static_cast<std::size_t>(c)];
    if (table.at(ordinal, t) > table.at(ordinal, best)) best = t;
  }
  return best;
}

double bellman_update(QTable& table, int state, int action, double reward,
                      int next_state, bool next_terminal, double alpha, double gamma) {
  double bootstrap = next_terminal ? 0.0 : table.max_value(next_state);
  double& entry = table.at(state, action);
  entry += alpha * (reward + gamma * bootstrap - entry);
  return entry;
}

EpisodeLog run_episode(const AssemblyProblem& problem, const Hyperparams& hp,
                       QTable& table, double& epsilon, int episode_index, Rng& rng) {
  EnvState state = initial_state(problem);
  EpisodeLog log;
  log.episode = episode_index;
  log.epsilon_at_start = epsilon;
  log.q0 = table.max_value(state_ordinal(problem, state));
  for (int step_index = 0; step_index < hp.max_steps; ++step_index) {
    int action = select_action(table, problem, state, epsilon, hp.masking, rng);
    StepOutcome outcome = step(problem, hp.rewards, state, action);
    bellman_update(table, state_ordinal(problem, state), action, outcome.reward,
                   state_ordinal(problem, outcome.next), outcome.terminal, hp.alpha,
                   hp.gamma);
    epsilon = std::max(hp.epsilon_floor, epsilon * (1.0 - hp.epsilon_decay));
    log.accumulated_reward += outcome.reward;
    ++log.steps_taken;
    state = outcome.next;
    if (outcome.terminal) break;
  }
  return log;
}

TrainedAgent train(const AssemblyProblem& problem, const Hyperparams& hp,
                   std::uint64_t seed) {
  validate_hyperparams(hp, problem);
  TrainedAgent agent;
  agent.hyperparams = hp;
  agent.seed = seed;
  agent.table = QTable(state_space_size(problem), problem.task_count());
  agent.logs.reserve(static_cast<std::size_t>(hp.max_episodes));
  Rng rng(seed);
  double epsilon = hp.epsilon0;
  for (int episode = 0; episode < hp.max_episodes; ++episode)
    agent.logs.push_back(run_episode(problem, hp, agent.table, epsilon, episode, rng));
  return agent;
}

RolloutResult greedy_rollout(const QTable& table, const AssemblyProblem& problem) {
  RolloutResult result;
  EnvState state = initial_state(problem);
  RewardParams params;
  for (int i = 0; i < problem.task_count(); ++i) {
    int action = table.argmax_action(state_ordinal(problem, state));
    std::uint32_t feas = feasible_mask(problem, state.done_mask);
    if (!((feas >> (action - 1)) & 1u)) {
      result.failed = true;
      return result;
    }
    result.total_time += duration(problem, state, action);
    result.sequence.push_back(action);
    state = step(problem, params, state, action).next;
  }
  return result;
}

void save_episode_logs_csv(const std::vector<EpisodeLog>& logs, std::ostream& out) {
  out << "episode,accumulated_reward,steps,q0,epsilon\n";
  for (const auto& log : logs)
    out << log.episode << ',' << format_double(log.accumulated_reward) << ','
        << log.steps_taken << ',' << format_double(log.q0) << ','
        << format_double(log.epsilon_at_start) << '\n';
}

}  // namespace asmseq
