#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "asmseq/model.hpp"

namespace asmseq {

struct SequenceRecord {
  std::vector<int> sequence;
  double total_time = 0.0;
};

/// Raised when a problem is too large for exhaustive enumeration.
class EnumerationCapExceeded : public std::runtime_error {
 public:
  explicit EnumerationCapExceeded(const std::string& message)
      : std::runtime_error(message) {}
};

/// Total execution time of a full feasible sequence, evaluated step by step
/// with the same duration model the environment uses. Throws
/// std::invalid_argument if the sequence is not a feasible permutation.
double sequence_total_time(const AssemblyProblem& problem, std::span<const int> sequence);

/// All feasible complete sequences in lexicographic order with exact totals.
/// Refuses problems with more than `task_cap` tasks.
std::vector<SequenceRecord> enumerate_feasible(const AssemblyProblem& problem,
                                               int task_cap = 12);

struct LinearExtensionCount {
  bool is_forest = false;    // transitive reduction of the precedence DAG
  std::uint64_t count = 0;   // valid only when is_forest
};

/// Closed-form sequence count N! / prod(subtree sizes), applicable when the
/// reduced precedence graph is a forest.
LinearExtensionCount count_linear_extensions_closed_form(const AssemblyProblem& problem);

/// Histogram of total times over all feasible sequences.
class Distribution {
 public:
  Distribution(std::map<double, std::uint64_t> bins, std::uint64_t total);

  const std::map<double, std::uint64_t>& bins() const { return bins_; }
  std::uint64_t total() const { return total_; }
  int distinct_values() const { return static_cast<int>(bins_.size()); }
  double min_value() const;
  double max_value() const;
  double modal_value() const;     // highest count, ties to the lower value
  double modal_percent() const;
  double percent(double value) const;
  double mean_of_distinct() const;
  /// Number of grid points of the given step spanning [min, max]; the value
  /// range the associated reward distribution can occupy.
  int spanned_slot_count(double step) const;

 private:
  std::map<double, std::uint64_t> bins_;
  std::uint64_t total_ = 0;
};

Distribution distribution(const AssemblyProblem& problem, int task_cap = 12);

struct ExactSolution {
  double min_total_time = 0.0;
  std::uint64_t optimal_count = 0;
  std::vector<std::vector<int>> optimal_sequences;  // capped, lexicographic
};

/// Bitmask dynamic program over (done-set, tool) states; tracks the exact
/// number of optimal sequences and reconstructs up to `sequence_cap` of
/// them. Problems with forbidden successions get a last-task dimension.
/// Handles up to 24 tasks.
ExactSolution solve_dp(const AssemblyProblem& problem, std::size_t sequence_cap = 1000);

struct MilpModel {
  int binary_count = 0;
  int total_variable_count = 0;
  int constraint_count = 0;     // rows in Subject To, objective not counted
  std::string lp_text;
};

/// Position-indexed MILP in CPLEX LP format: binaries y_i_k (task i at step
/// k), continuous completion times c_i_k and the makespan objective. Only
/// covers problems without tool handling; throws std::invalid_argument when
/// tools are enabled.
MilpModel export_milp(const AssemblyProblem& problem);

void save_sequences_csv(const std::vector<SequenceRecord>& records, std::ostream& out);
void save_distribution_csv(const Distribution& dist, std::ostream& out);
std::string format_sequence(std::span<const int> sequence);  // "1-8-4-..."

}  // namespace asmseq
