#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pkd/geom.hpp"
#include "pkd/protocol_sum.hpp"
#include "pkd/workload.hpp"

// Differentially private KD-tree over worker skills, built through private
// sums only. Levels are numbered h at the root down to 0 at the leaves. Every
// node gets a perturbed population count (budget eps_c, split geometrically
// across levels so deeper counts get more), and every internal node is split
// at a perturbed median of its level's dimension (budget eps_m, split evenly
// across the h median rounds).

namespace pkd::tree {

struct BudgetPlan {
  double epsilon = 0.0;       // total budget
  double epsilon_count = 0.0;   // 0.7 * epsilon
  double epsilon_median = 0.0;  // 0.3 * epsilon
  int depth = 0;              // h

  // eps_c_levels[i] is the count budget of level i, i = 0 (leaves) .. h.
  std::vector<double> eps_c_levels;
  // eps_m_levels[i - 1] is the median budget of level i, i = 1 .. h.
  std::vector<double> eps_m_levels;

  double count_epsilon(int level) const;
  double median_epsilon(int level) const;
};

// Per-level budgets: counts follow eps_c_i = 2^((h-i)/3) * eps_c * q with
// q = (2^(1/3) - 1) / (2^((h+1)/3) - 1), medians get eps_m / h each. Both
// families sum back to their portion exactly.
BudgetPlan allocate_budget(double epsilon, int depth);

struct PkdNode {
  geom::Box box;
  double raw_count = 0.0;  // perturbed count straight from the protocol
  double count = 0.0;      // post-processed count (equals raw until then)
  int split_dim = -1;
  double split_value = 0.0;
  std::unique_ptr<PkdNode> left, right;

  bool is_leaf() const { return !left; }
};

struct PkdTree {
  std::unique_ptr<PkdNode> root;
  int depth = 0;  // h
  int n_dims = 0;
  int bins = 0;  // histogram bins l used by the median rounds
  BudgetPlan budget;
  bool post_processed = false;

  std::vector<const PkdNode*> leaves() const;
  std::vector<geom::Box> leaf_boxes() const;
};

// Builds the tree over all workers with the given backend. Split dimensions
// rotate through dim_order by depth. Every private sum runs over the full
// population (workers outside a node contribute noise only), so the message
// pattern reveals nothing about who falls where.
PkdTree build_pkd(std::span<const workload::WorkerProfile> workers,
                  std::span<const int> dim_order, int depth, int bins,
                  double epsilon, int tau, protocol::SumBackend& backend,
                  Rng& rng);

// Constrained inference: two sweeps of inverse-variance averaging that leave
// every parent count equal to the sum of its children. Uses each level's
// count-noise variance 2a/(1-a)^2, a = exp(-eps_c_level).
void post_process(PkdTree& tree);

// Expected number of matching workers for a task: sum over leaves of
// count * vol(leaf intersect task) / vol(leaf).
double estimate_matching(const PkdTree& tree, const workload::TaskSpec& task);

// Versioned structured text round-trip.
std::string serialize_tree(const PkdTree& tree);
PkdTree parse_tree(const std::string& text);
void save_tree(const PkdTree& tree, const std::string& path);
PkdTree load_tree(const std::string& path);

}  // namespace pkd::tree
