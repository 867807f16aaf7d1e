#pragma once

#include <cstdint>
#include <vector>

#include "l0dc/types.hpp"

namespace l0dc {

/// Entries with magnitude at or below this value count as zero in the L0 measure.
inline constexpr double kZeroThreshold = 1e-10;

/// Finite, purely atomic measure space: atom i carries mass weights()[i] > 0.
class DiscreteMeasureSpace {
 public:
  explicit DiscreteMeasureSpace(Vector weights);

  Index size() const { return weights_.size(); }
  const Vector& weights() const { return weights_; }
  double weight(Index i) const { return weights_[i]; }
  double total_measure() const { return total_; }

  /// Slack added to a budget when comparing floating-point weight sums.
  double budget_tolerance() const { return 1e-12 * total_; }

 private:
  Vector weights_;
  double total_ = 0.0;
};

/// Index set attaining (or approximating) the largest-K maximum.
struct KSelection {
  std::vector<Index> indices;  // ascending
  double value = 0.0;          // sum of weight_i * |x_i| over indices
  double weight = 0.0;         // sum of weight_i over indices
  bool exact = false;          // produced by an exact oracle
  Index n_atoms = 0;           // size of the vector the selection was computed for
};

double weighted_l0(const Vector& x, const DiscreteMeasureSpace& space,
                   double zero_threshold = kZeroThreshold);

double weighted_l1(const Vector& x, const DiscreteMeasureSpace& space);

/// Greedy knapsack scan: atoms in order of decreasing |x_i| (ties by index),
/// each taken iff it fits the remaining budget. Atoms with |x_i| <= zero_threshold
/// are skipped unless fill_zero_atoms is set, in which case they are offered
/// last (ascending index) to use up leftover budget.
KSelection largest_k_greedy(const Vector& x, const DiscreteMeasureSpace& space, double K,
                            double zero_threshold = kZeroThreshold,
                            bool fill_zero_atoms = false);

struct ExactOracleLimits {
  Index enumeration_max = 25;               // nonzero atoms handled by subset enumeration
  Index dp_max_atoms = 10000;               // nonzero atoms handled by integer-weight DP
  std::int64_t dp_max_cells = 400'000'000;  // atoms x (capacity + 1)
};

/// Exact maximizer of sum weight_i |x_i| over subsets with total weight <= K.
/// Enumerates subsets of the nonzero atoms when there are few of them, otherwise
/// runs a 0/1 knapsack DP over weights rescaled to integers. Throws
/// OracleLimitExceeded when neither applies.
KSelection largest_k_exact(const Vector& x, const DiscreteMeasureSpace& space, double K,
                           const ExactOracleLimits& limits = {});

/// True when largest_k_exact can handle the instance within the limits.
bool exact_oracle_applicable(const Vector& x, const DiscreteMeasureSpace& space, double K,
                             const ExactOracleLimits& limits = {});

/// Fractional knapsack bound: sup of sum weight_i d_i |x_i| over d in [0,1]^n
/// with sum weight_i d_i <= K.
double largest_k_relaxed(const Vector& x, const DiscreteMeasureSpace& space, double K);

struct GapResult {
  double gap = 0.0;  // weighted_l1 - largest_k, accumulated over the unselected atoms
  double l1 = 0.0;
  double largest_k = 0.0;
  bool exact = false;
};

/// ||x||_1 - |x|_K. Uses the exact oracle when it applies, the greedy scan otherwise.
GapResult reformulation_gap(const Vector& x, const DiscreteMeasureSpace& space, double K,
                            const ExactOracleLimits& limits = {});

/// Gap of x with respect to a fixed selection: the l1 mass outside it.
double gap_outside(const Vector& x, const DiscreteMeasureSpace& space, const KSelection& sel);

enum class ZeroSign { zero, plus, minus, custom };

/// Value a_i used on selected atoms where x_i == 0.
struct ZeroSignPolicy {
  ZeroSign rule = ZeroSign::zero;
  Vector custom;  // per-atom value in [-1, 1], read when rule == custom
};

/// Subgradient of |.|_K at x built from a selection: weight_i sign(x_i) on the
/// selection, weight_i a_i on selected zeros, 0 elsewhere.
Vector subgradient_largest_k(const Vector& x, const DiscreteMeasureSpace& space, double K,
                             const KSelection& selection, const ZeroSignPolicy& policy = {});

}  // namespace l0dc
