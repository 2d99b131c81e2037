#include "asmseq/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <unordered_map>

#include "asmseq/env.hpp"
#include "asmseq/io.hpp"

namespace asmseq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t checked_count(unsigned __int128 value, const char* what) {
  if (value > static_cast<unsigned __int128>(~std::uint64_t{0}))
    throw std::overflow_error(std::string(what) + " count exceeds 64 bits");
  return static_cast<std::uint64_t>(value);
}

// Prerequisite closure per task; cycles leave `acyclic` false.
std::vector<std::uint32_t> ancestor_closure(const AssemblyProblem& problem, bool& acyclic) {
  const int n = problem.task_count();
  std::vector<std::uint32_t> anc(static_cast<std::size_t>(n));
  for (int t = 1; t <= n; ++t)
    anc[static_cast<std::size_t>(t - 1)] = problem.prerequisite_mask(t);
  for (int pass = 0; pass < n; ++pass) {
    bool changed = false;
    for (int t = 1; t <= n; ++t) {
      std::uint32_t mask = anc[static_cast<std::size_t>(t - 1)];
      std::uint32_t grown = mask;
      for (int p = 1; p <= n; ++p)
        if ((mask >> (p - 1)) & 1u) grown |= anc[static_cast<std::size_t>(p - 1)];
      if (grown != mask) {
        anc[static_cast<std::size_t>(t - 1)] = grown;
        changed = true;
      }
    }
    if (!changed) break;
  }
  acyclic = true;
  for (int t = 1; t <= n; ++t)
    if ((anc[static_cast<std::size_t>(t - 1)] >> (t - 1)) & 1u) acyclic = false;
  return anc;
}

}  // namespace

double sequence_total_time(const AssemblyProblem& problem, std::span<const int> sequence) {
  const int n = problem.task_count();
  if (static_cast<int>(sequence.size()) != n)
    throw std::invalid_argument("sequence must contain every task exactly once");
  EnvState state = initial_state(problem);
  RewardParams params;
  std::optional<int> last;
  double total = 0.0;
  for (int t : sequence) {
    if (t < 1 || t > n)
      throw std::invalid_argument("sequence references task " + std::to_string(t));
    std::uint32_t feas = feasible_mask(problem, state.done_mask, last);
    if (!((feas >> (t - 1)) & 1u))
      throw std::invalid_argument("sequence is not feasible at task " + std::to_string(t));
    total += duration(problem, state, t);
    state = step(problem, params, state, t).next;
    last = t;
  }
  return total;
}

std::vector<SequenceRecord> enumerate_feasible(const AssemblyProblem& problem,
                                               int task_cap) {
  const int n = problem.task_count();
  if (n > task_cap)
    throw EnumerationCapExceeded("problem has " + std::to_string(n) +
                                 " tasks, enumeration cap is " + std::to_string(task_cap));
  std::vector<SequenceRecord> records;
  std::vector<int> prefix;
  prefix.reserve(static_cast<std::size_t>(n));
  RewardParams params;

  auto dfs = [&](auto&& self, EnvState state, std::optional<int> last,
                 double time) -> void {
    if (static_cast<int>(prefix.size()) == n) {
      records.push_back({prefix, time});
      return;
    }
    std::uint32_t feas = feasible_mask(problem, state.done_mask, last);
    for (int t = 1; t <= n; ++t) {
      if (!((feas >> (t - 1)) & 1u)) continue;
      double d = duration(problem, state, t);
      prefix.push_back(t);
      self(self, step(problem, params, state, t).next, t, time + d);
      prefix.pop_back();
    }
  };
  dfs(dfs, initial_state(problem), std::nullopt, 0.0);
  return records;
}

LinearExtensionCount count_linear_extensions_closed_form(const AssemblyProblem& problem) {
  const int n = problem.task_count();
  bool acyclic = true;
  auto anc = ancestor_closure(problem, acyclic);
  if (!acyclic) return {false, 0};

  // Transitive reduction: a direct prerequisite p of t is redundant when some
  // other prerequisite already implies it.
  std::vector<int> parent(static_cast<std::size_t>(n), 0);
  for (int t = 1; t <= n; ++t) {
    int kept = 0;
    for (int p = 1; p <= n; ++p) {
      if (!((problem.prerequisite_mask(t) >> (p - 1)) & 1u)) continue;
      bool implied = false;
      for (int q = 1; q <= n; ++q) {
        if (q == p || !((problem.prerequisite_mask(t) >> (q - 1)) & 1u)) continue;
        if ((anc[static_cast<std::size_t>(q - 1)] >> (p - 1)) & 1u) implied = true;
      }
      if (implied) continue;
      if (kept != 0) return {false, 0};
      kept = p;
    }
    parent[static_cast<std::size_t>(t - 1)] = kept;
  }

  std::vector<std::uint64_t> subtree(static_cast<std::size_t>(n), 0);
  auto size_of = [&](auto&& self, int t) -> std::uint64_t {
    std::uint64_t& cached = subtree[static_cast<std::size_t>(t - 1)];
    if (cached != 0) return cached;
    std::uint64_t size = 1;
    for (int c = 1; c <= n; ++c)
      if (parent[static_cast<std::size_t>(c - 1)] == t) size += self(self, c);
    cached = size;
    return size;
  };

  unsigned __int128 numerator = 1;
  for (int i = 2; i <= n; ++i) numerator *= static_cast<unsigned>(i);
  unsigned __int128 denominator = 1;
  for (int t = 1; t <= n; ++t) denominator *= size_of(size_of, t);
  return {true, checked_count(numerator / denominator, "linear extension")};
}

Distribution::Distribution(std::map<double, std::uint64_t> bins, std::uint64_t total)
    : bins_(std::move(bins)), total_(total) {}

double Distribution::min_value() const {
  if (bins_.empty()) throw std::logic_error("empty distribution");
  return bins_.begin()->first;
}

double Distribution::max_value() const {
  if (bins_.empty()) throw std::logic_error("empty distribution");
  return bins_.rbegin()->first;
}

double Distribution::modal_value() const {
  if (bins_.empty()) throw std::logic_error("empty distribution");
  auto best = bins_.begin();
  for (auto it = bins_.begin(); it != bins_.end(); ++it)
    if (it->second > best->second) best = it;
  return best->first;
}

double Distribution::modal_percent() const { return percent(modal_value()); }

double Distribution::percent(double value) const {
  if (total_ == 0) return 0.0;
  auto it = bins_.find(value);
  if (it == bins_.end()) return 0.0;
  return 100.0 * static_cast<double>(it->second) / static_cast<double>(total_);
}

double Distribution::mean_of_distinct() const {
  if (bins_.empty()) throw std::logic_error("empty distribution");
  double sum = 0.0;
  for (const auto& [value, count] : bins_) sum += value;
  return sum / static_cast<double>(bins_.size());
}

int Distribution::spanned_slot_count(double step) const {
  if (step <= 0) throw std::invalid_argument("step must be positive");
  return static_cast<int>(std::llround((max_value() - min_value()) / step)) + 1;
}

Distribution distribution(const AssemblyProblem& problem, int task_cap) {
  auto records = enumerate_feasible(problem, task_cap);
  std::map<double, std::uint64_t> bins;
  for (const auto& r : records) ++bins[r.total_time];
  return Distribution(std::move(bins), records.size());
}

namespace {

struct DpNode {
  double best = kInf;
  unsigned __int128 count = 0;
};

struct DpContext {
  const AssemblyProblem& problem;
  bool use_last;
  std::unordered_map<std::uint64_t, DpNode> memo;
  RewardParams params;

  std::uint64_t key(const EnvState& state, int last) const {
    return static_cast<std::uint64_t>(state.done_mask) |
           (static_cast<std::uint64_t>(state.tool) << 24) |
           (static_cast<std::uint64_t>(last) << 26);
  }

  DpNode solve(const EnvState& state, int last) {
    if (state.done_mask == problem.full_mask()) return {0.0, 1};
    std::uint64_t k = key(state, use_last ? last : 0);
    auto it = memo.find(k);
    if (it != memo.end()) return it->second;
    std::optional<int> last_opt;
    if (use_last && last != 0) last_opt = last;
    std::uint32_t feas = feasible_mask(problem, state.done_mask, last_opt);
    DpNode node;
    for (int t = 1; t <= problem.task_count(); ++t) {
      if (!((feas >> (t - 1)) & 1u)) continue;
      double d = duration(problem, state, t);
      DpNode child = solve(step(problem, params, state, t).next, t);
      if (child.best == kInf) continue;
      double candidate = d + child.best;
      if (candidate < node.best) {
        node.best = candidate;
        node.count = child.count;
      } else if (candidate == node.best) {
        node.count += child.count;
      }
    }
    memo.emplace(k, node);
    return node;
  }

  void collect(const EnvState& state, int last, double best,
               std::vector<int>& prefix, std::vector<std::vector<int>>& out,
               std::size_t cap) {
    if (out.size() >= cap) return;
    if (state.done_mask == problem.full_mask()) {
      out.push_back(prefix);
      return;
    }
    std::optional<int> last_opt;
    if (use_last && last != 0) last_opt = last;
    std::uint32_t feas = feasible_mask(problem, state.done_mask, last_opt);
    for (int t = 1; t <= problem.task_count(); ++t) {
      if (!((feas >> (t - 1)) & 1u)) continue;
      double d = duration(problem, state, t);
      DpNode child = solve(step(problem, params, state, t).next, t);
      if (child.best == kInf || d + child.best != best) continue;
      prefix.push_back(t);
      collect(step(problem, params, state, t).next, t, best - d, prefix, out, cap);
      prefix.pop_back();
      if (out.size() >= cap) return;
    }
  }
};

}  // namespace

ExactSolution solve_dp(const AssemblyProblem& problem, std::size_t sequence_cap) {
  DpContext ctx{problem, !problem.forbidden().empty(), {}, {}};
  EnvState start = initial_state(problem);
  DpNode root = ctx.solve(start, 0);
  if (root.best == kInf)
    throw std::runtime_error("problem has no feasible complete sequence");
  ExactSolution solution;
  solution.min_total_time = root.best;
  solution.optimal_count = checked_count(root.count, "optimal sequence");
  std::vector<int> prefix;
  ctx.collect(start, 0, root.best, prefix, solution.optimal_sequences, sequence_cap);
  return solution;
}

namespace {

// One LP constraint row under construction: named linear terms, sense, rhs.
class LpRow {
 public:
  explicit LpRow(std::string name) : name_(std::move(name)) {}

  LpRow& term(double coefficient, const std::string& variable) {
    if (coefficient == 0.0) return *this;
    if (body_.empty()) {
      if (coefficient < 0) body_ += "- ";
    } else {
      body_ += coefficient < 0 ? " - " : " + ";
    }
    double mag = std::abs(coefficient);
    if (mag != 1.0) body_ += format_double(mag) + " ";
    body_ += variable;
    return *this;
  }

  std::string render(const char* sense, double rhs) const {
    return " " + name_ + ": " + body_ + " " + sense + " " + format_double(rhs) + "\n";
  }

 private:
  std::string name_;
  std::string body_;
};

std::string y_var(int task, int pos) {
  return "y_" + std::to_string(task) + "_" + std::to_string(pos);
}

std::string c_var(int task, int pos) {
  return "c_" + std::to_string(task) + "_" + std::to_string(pos);
}

}  // namespace

MilpModel export_milp(const AssemblyProblem& problem) {
  if (problem.tool_config().enabled)
    throw std::invalid_argument(
        "the MILP formulation does not cover tool changeovers; disable tool "
        "handling to export");
  const int n = problem.task_count();
  MilpModel model;
  model.binary_count = n * n;
  model.total_variable_count = 2 * n * n + 1;

  std::string rows;
  int row_count = 0;
  auto emit = [&](const LpRow& row, const char* sense, double rhs) {
    rows += row.render(sense, rhs);
    ++row_count;
  };

  // Makespan: cmax dominates every completion time at the last step.
  for (int i = 1; i <= n; ++i) {
    LpRow row("mk_" + std::to_string(i));
    row.term(1, "cmax").term(-1, c_var(i, n));
    emit(row, ">=", 0);
  }
  // Exactly one task per step and one step per task.
  for (int k = 1; k <= n; ++k) {
    LpRow row("as_" + std::to_string(k));
    for (int i = 1; i <= n; ++i) row.term(1, y_var(i, k));
    emit(row, "=", 1);
  }
  for (int i = 1; i <= n; ++i) {
    LpRow row("at_" + std::to_string(i));
    for (int k = 1; k <= n; ++k) row.term(1, y_var(i, k));
    emit(row, "=", 1);
  }
  // Precedence: a task may not sit at an earlier step than its prerequisite.
  for (const auto& p : problem.precedence()) {
    for (int k = 1; k <= n; ++k) {
      for (int kp = k + 1; kp <= n; ++kp) {
        LpRow row("pr_" + std::to_string(p.task) + "_" + std::to_string(p.prerequisite) +
                  "_" + std::to_string(k) + "_" + std::to_string(kp));
        row.term(1, y_var(p.task, k)).term(1, y_var(p.prerequisite, kp));
        emit(row, "<=", 1);
      }
    }
  }
  // Completion times: base time at step 1, then chained through every
  // possible predecessor with the accumulated time variations.
  for (int i = 1; i <= n; ++i) {
    LpRow row("t1_" + std::to_string(i));
    row.term(1, c_var(i, 1)).term(-problem.task(i).avg_time, y_var(i, 1));
    emit(row, ">=", 0);
  }
  for (int k = 2; k <= n; ++k) {
    for (int i = 1; i <= n; ++i) {
      for (int ip = 1; ip <= n; ++ip) {
        if (ip == i || problem.forbidden_after(ip, i)) continue;
        LpRow row("tm_" + std::to_string(i) + "_" + std::to_string(k) + "_p" +
                  std::to_string(ip));
        row.term(1, c_var(i, k)).term(-problem.task(i).avg_time, y_var(i, k));
        row.term(-1, c_var(ip, k - 1));
        row.term(-problem.deltas().at(ip, i), y_var(ip, k - 1));
        for (int kp = 1; kp <= k - 2; ++kp)
          for (int ipp = 1; ipp <= n; ++ipp) {
            if (ipp == i || problem.forbidden_after(ipp, i)) continue;
            row.term(-problem.deltas().at(ipp, i), y_var(ipp, kp));
          }
        emit(row, ">=", 0);
      }
    }
  }

  std::string text;
  text += "\\Problem name: " + problem.name() + "\n\n";
  text += "Minimize\n obj: cmax\n";
  text += "Subject To\n";
  text += rows;
  text += "Bounds\n";
  for (int i = 1; i <= n; ++i)
    for (int k = 1; k <= n; ++k) text += " " + c_var(i, k) + " >= 0\n";
  text += " cmax >= 0\n";
  text += "Binary\n";
  for (int i = 1; i <= n; ++i)
    for (int k = 1; k <= n; ++k) text += " " + y_var(i, k) + "\n";
  text += "End\n";

  model.constraint_count = row_count;
  model.lp_text = std::move(text);
  return model;
}

std::string format_sequence(std::span<const int> sequence) {
  std::string out;
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    if (i != 0) out += '-';
    out += std::to_string(sequence[i]);
  }
  return out;
}

void save_sequences_csv(const std::vector<SequenceRecord>& records, std::ostream& out) {
  out << "sequence,total_time\n";
  for (const auto& r : records)
    out << format_sequence(r.sequence) << ',' << format_double(r.total_time) << '\n';
}

void save_distribution_csv(const Distribution& dist, std::ostream& out) {
  out << "total_time,count,percent\n";
  for (const auto& [value, count] : dist.bins())
    out << format_double(value) << ',' << count << ','
        << format_double(dist.percent(value)) << '\n';
}

}  // namespace asmseq
