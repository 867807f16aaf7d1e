#include "l0dc/measure_norms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace l0dc {

DiscreteMeasureSpace::DiscreteMeasureSpace(Vector weights) : weights_(std::move(weights)) {
  if (weights_.size() == 0) throw OutOfRange("measure space needs at least one atom");
  for (Index i = 0; i < weights_.size(); ++i) {
    if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i])) {
      throw OutOfRange("atom " + std::to_string(i) + " has non-positive or non-finite measure");
    }
  }
  total_ = weights_.sum();
}

namespace {

void check_budget(const DiscreteMeasureSpace& space, double K) {
  if (!(K >= 0.0) || K > space.total_measure() + space.budget_tolerance()) {
    throw OutOfRange("budget K=" + std::to_string(K) + " outside [0, " +
                     std::to_string(space.total_measure()) + "]");
  }
}

void check_vector(const Vector& x, const DiscreteMeasureSpace& space) {
  require_size(x.size(), space.size(), "vector over measure space");
}

// Atoms sorted by decreasing |x_i|, ties by ascending index.
std::vector<Index> magnitude_order(const Vector& x) {
  std::vector<Index> order(static_cast<std::size_t>(x.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(x[a]) > std::abs(x[b]); });
  return order;
}

KSelection finish_selection(std::vector<Index> indices, const Vector& x,
                            const DiscreteMeasureSpace& space, bool exact) {
  std::sort(indices.begin(), indices.end());
  KSelection sel;
  sel.exact = exact;
  sel.n_atoms = x.size();
  for (Index i : indices) {
    sel.value += space.weight(i) * std::abs(x[i]);
    sel.weight += space.weight(i);
  }
  sel.indices = std::move(indices);
  return sel;
}

struct Candidate {
  Index atom;
  double weight;
  double value;
};

std::vector<Candidate> nonzero_candidates(const Vector& x, const DiscreteMeasureSpace& space) {
  std::vector<Candidate> out;
  for (Index i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) out.push_back({i, space.weight(i), space.weight(i) * std::abs(x[i])});
  }
  return out;
}

// Depth-first enumeration of all subsets; branches that overflow the budget are cut.
class SubsetEnumerator {
 public:
  SubsetEnumerator(const std::vector<Candidate>& items, double budget)
      : items_(items), budget_(budget), suffix_(items.size() + 1, 0.0) {
    for (std::size_t k = items.size(); k-- > 0;) suffix_[k] = suffix_[k + 1] + items[k].value;
  }

  std::vector<Index> run() {
    double total_weight = 0.0;
    for (const auto& c : items_) total_weight += c.weight;
    if (total_weight <= budget_) {
      std::vector<Index> all;
      for (const auto& c : items_) all.push_back(c.atom);
      return all;
    }
    visit(0, 0.0, 0.0);
    std::vector<Index> out;
    for (std::size_t k = 0; k < items_.size(); ++k) {
      if (best_mask_[k]) out.push_back(items_[k].atom);
    }
    return out;
  }

 private:
  void visit(std::size_t k, double weight, double value) {
    if (value + suffix_[k] <= best_value_) return;
    if (k == items_.size()) {
      if (value > best_value_) {
        best_value_ = value;
        best_mask_ = mask_;
      }
      return;
    }
    const double w = weight + items_[k].weight;
    if (w <= budget_) {
      mask_[k] = true;
      visit(k + 1, w, value + items_[k].value);
      mask_[k] = false;
    }
    visit(k + 1, weight, value);
  }

  const std::vector<Candidate>& items_;
  double budget_;
  std::vector<double> suffix_;  // value of items k, k+1, ...
  double best_value_ = -1.0;
  std::vector<bool> mask_ = std::vector<bool>(items_.size(), false);
  std::vector<bool> best_mask_ = std::vector<bool>(items_.size(), false);
};

// Integer weights w_i = weight_i / unit with a common unit, if one exists.
struct IntegerScaling {
  std::vector<std::int64_t> weights;
  std::int64_t capacity = 0;
};

bool integer_scaling(const std::vector<Candidate>& items, double K, IntegerScaling& out) {
  if (items.empty()) return true;
  double min_w = items.front().weight;
  for (const auto& c : items) min_w = std::min(min_w, c.weight);
  for (int denom = 1; denom <= 64; ++denom) {
    const double unit = min_w / denom;
    bool ok = true;
    std::vector<std::int64_t> scaled;
    scaled.reserve(items.size());
    for (const auto& c : items) {
      const double r = c.weight / unit;
      const double rounded = std::round(r);
      if (std::abs(r - rounded) > 1e-9 * std::max(1.0, r) || rounded > 1e12) {
        ok = false;
        break;
      }
      scaled.push_back(static_cast<std::int64_t>(rounded));
    }
    if (!ok) continue;
    out.weights = std::move(scaled);
    out.capacity = static_cast<std::int64_t>(std::floor(K / unit + 1e-9));
    return true;
  }
  return false;
}

std::vector<Index> knapsack_dp(const std::vector<Candidate>& items, const IntegerScaling& scaling) {
  const std::int64_t cap = std::max<std::int64_t>(scaling.capacity, 0);
  const std::size_t cols = static_cast<std::size_t>(cap) + 1;
  std::vector<double> best(cols, 0.0);
  std::vector<std::vector<bool>> keep(items.size(), std::vector<bool>(cols, false));
  for (std::size_t k = 0; k < items.size(); ++k) {
    const std::int64_t w = scaling.weights[k];
    if (w > cap) continue;
    for (std::int64_t c = cap; c >= w; --c) {
      const double cand = best[static_cast<std::size_t>(c - w)] + items[k].value;
      if (cand > best[static_cast<std::size_t>(c)]) {
        best[static_cast<std::size_t>(c)] = cand;
        keep[k][static_cast<std::size_t>(c)] = true;
      }
    }
  }
  std::vector<Index> out;
  std::int64_t c = cap;
  for (std::size_t k = items.size(); k-- > 0;) {
    if (keep[k][static_cast<std::size_t>(c)]) {
      out.push_back(items[k].atom);
      c -= scaling.weights[k];
    }
  }
  return out;
}

enum class ExactRoute { enumerate, dynamic_programming, none };

ExactRoute choose_route(const std::vector<Candidate>& items, double K,
                        const ExactOracleLimits& limits, IntegerScaling& scaling) {
  const auto n = static_cast<Index>(items.size());
  if (n <= limits.enumeration_max) return ExactRoute::enumerate;
  if (n > limits.dp_max_atoms) return ExactRoute::none;
  if (!integer_scaling(items, K, scaling)) return ExactRoute::none;
  const double cells = static_cast<double>(n) * static_cast<double>(scaling.capacity + 1);
  if (cells > static_cast<double>(limits.dp_max_cells)) return ExactRoute::none;
  return ExactRoute::dynamic_programming;
}

}  // namespace

double weighted_l0(const Vector& x, const DiscreteMeasureSpace& space, double zero_threshold) {
  check_vector(x, space);
  double total = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    if (std::abs(x[i]) > zero_threshold) total += space.weight(i);
  }
  return total;
}

double weighted_l1(const Vector& x, const DiscreteMeasureSpace& space) {
  check_vector(x, space);
  return space.weights().dot(x.cwiseAbs());
}

KSelection largest_k_greedy(const Vector& x, const DiscreteMeasureSpace& space, double K,
                            double zero_threshold, bool fill_zero_atoms) {
  check_vector(x, space);
  check_budget(space, K);
  const double budget = K + space.budget_tolerance();
  std::vector<Index> taken;
  double used = 0.0;
  for (Index i : magnitude_order(x)) {
    if (!fill_zero_atoms && std::abs(x[i]) <= zero_threshold) break;
    if (used + space.weight(i) <= budget) {
      used += space.weight(i);
      taken.push_back(i);
    }
  }
  return finish_selection(std::move(taken), x, space, false);
}

bool exact_oracle_applicable(const Vector& x, const DiscreteMeasureSpace& space, double K,
                             const ExactOracleLimits& limits) {
  check_vector(x, space);
  check_budget(space, K);
  IntegerScaling scaling;
  return choose_route(nonzero_candidates(x, space), K + space.budget_tolerance(), limits,
                      scaling) != ExactRoute::none;
}

KSelection largest_k_exact(const Vector& x, const DiscreteMeasureSpace& space, double K,
                           const ExactOracleLimits& limits) {
  check_vector(x, space);
  check_budget(space, K);
  const auto items = nonzero_candidates(x, space);
  const double budget = K + space.budget_tolerance();
  IntegerScaling scaling;
  switch (choose_route(items, budget, limits, scaling)) {
    case ExactRoute::enumerate:
      return finish_selection(SubsetEnumerator(items, budget).run(), x, space, true);
    case ExactRoute::dynamic_programming:
      return finish_selection(knapsack_dp(items, scaling), x, space, true);
    case ExactRoute::none:
      break;
  }
  throw OracleLimitExceeded("exact largest-K oracle: " + std::to_string(items.size()) +
                            " nonzero atoms exceed the enumeration limit and the weights "
                            "admit no affordable integer rescaling");
}

double largest_k_relaxed(const Vector& x, const DiscreteMeasureSpace& space, double K) {
  check_vector(x, space);
  check_budget(space, K);
  double remaining = K;
  double value = 0.0;
  for (Index i : magnitude_order(x)) {
    if (remaining <= 0.0 || x[i] == 0.0) break;
    const double take = std::min(space.weight(i), remaining);
    value += take * std::abs(x[i]);
    remaining -= take;
  }
  return value;
}

double gap_outside(const Vector& x, const DiscreteMeasureSpace& space, const KSelection& sel) {
  check_vector(x, space);
  require_size(sel.n_atoms, x.size(), "selection");
  std::vector<bool> in(static_cast<std::size_t>(x.size()), false);
  for (Index i : sel.indices) in[static_cast<std::size_t>(i)] = true;
  double gap = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    if (!in[static_cast<std::size_t>(i)]) gap += space.weight(i) * std::abs(x[i]);
  }
  return gap;
}

GapResult reformulation_gap(const Vector& x, const DiscreteMeasureSpace& space, double K,
                            const ExactOracleLimits& limits) {
  const KSelection sel = exact_oracle_applicable(x, space, K, limits)
                             ? largest_k_exact(x, space, K, limits)
                             : largest_k_greedy(x, space, K);
  GapResult r;
  r.gap = gap_outside(x, space, sel);
  r.l1 = weighted_l1(x, space);
  r.largest_k = sel.value;
  r.exact = sel.exact;
  return r;
}

Vector subgradient_largest_k(const Vector& x, const DiscreteMeasureSpace& space, double K,
                             const KSelection& selection, const ZeroSignPolicy& policy) {
  check_vector(x, space);
  check_budget(space, K);
  if (selection.n_atoms != x.size()) {
    throw DimensionMismatch("stale selection: computed for " + std::to_string(selection.n_atoms) +
                            " atoms, vector has " + std::to_string(x.size()));
  }
  if (policy.rule == ZeroSign::custom) require_size(policy.custom.size(), x.size(), "zero-sign values");
  Vector s = Vector::Zero(x.size());
  for (Index i : selection.indices) {
    if (i < 0 || i >= x.size()) throw DimensionMismatch("stale selection: index out of range");
    double a = 0.0;
    if (x[i] > 0.0) {
      a = 1.0;
    } else if (x[i] < 0.0) {
      a = -1.0;
    } else {
      switch (policy.rule) {
        case ZeroSign::zero: a = 0.0; break;
        case ZeroSign::plus: a = 1.0; break;
        case ZeroSign::minus: a = -1.0; break;
        case ZeroSign::custom: a = std::clamp(policy.custom[i], -1.0, 1.0); break;
      }
    }
    s[i] = space.weight(i) * a;
  }
  return s;
}

}  // namespace l0dc
