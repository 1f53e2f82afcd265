#include "pkd/pkd_tree.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pkd::tree {

using json = nlohmann::json;

namespace {

constexpr double kMinSplitWidth = 1e-9;

}  // namespace

double BudgetPlan::count_epsilon(int level) const {
  return eps_c_levels.at(static_cast<size_t>(level));
}

double BudgetPlan::median_epsilon(int level) const {
  return eps_m_levels.at(static_cast<size_t>(level - 1));
}

BudgetPlan allocate_budget(double epsilon, int depth) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("budget: epsilon <= 0");
  if (depth < 1) throw std::invalid_argument("budget: depth < 1");
  BudgetPlan plan;
  plan.epsilon = epsilon;
  plan.depth = depth;
  plan.epsilon_count = 0.7 * epsilon;
  plan.epsilon_median = 0.3 * epsilon;

  double cbrt2 = std::cbrt(2.0);
  double q = (cbrt2 - 1.0) /
             (std::pow(2.0, (depth + 1) / 3.0) - 1.0);
  plan.eps_c_levels.resize(static_cast<size_t>(depth) + 1);
  for (int i = 0; i <= depth; ++i)
    plan.eps_c_levels[static_cast<size_t>(i)] =
        std::pow(2.0, (depth - i) / 3.0) * plan.epsilon_count * q;
  plan.eps_m_levels.assign(static_cast<size_t>(depth),
                           plan.epsilon_median / depth);
  return plan;
}

namespace {

// Node count via one full-population private sum; bit = inside the box.
double counted(const geom::Box& box,
               std::span<const workload::WorkerProfile> workers, double eps,
               int tau, protocol::SumBackend& backend, Rng& rng) {
  std::vector<int> bits(workers.size());
  for (size_t i = 0; i < workers.size(); ++i)
    bits[i] = box.contains(workers[i].skills) ? 1 : 0;
  dp::NoiseParams np{eps, static_cast<int>(workers.size()), tau};
  return static_cast<double>(backend.sum_round(bits, np, rng));
}

}  // namespace

PkdTree build_pkd(std::span<const workload::WorkerProfile> workers,
                  std::span<const int> dim_order, int depth, int bins,
                  double epsilon, int tau, protocol::SumBackend& backend,
                  Rng& rng) {
  if (workers.empty()) throw std::invalid_argument("build: no workers");
  if (dim_order.empty()) throw std::invalid_argument("build: no dimensions");
  if (bins < 1) throw std::invalid_argument("build: bins < 1");
  int n_dims = static_cast<int>(workers[0].skills.size());
  for (int d : dim_order)
    if (d < 0 || d >= n_dims)
      throw std::invalid_argument("build: dimension index out of range");

  PkdTree tree;
  tree.depth = depth;
  tree.n_dims = n_dims;
  tree.bins = bins;
  tree.budget = allocate_budget(epsilon, depth);

  auto P = static_cast<int>(workers.size());
  tree.root = std::make_unique<PkdNode>();
  tree.root->box = geom::unit_box(n_dims);
  tree.root->raw_count = counted(tree.root->box, workers,
                                 tree.budget.count_epsilon(depth), tau,
                                 backend, rng);
  tree.root->count = tree.root->raw_count;

  std::vector<PkdNode*> frontier{tree.root.get()};
  for (int d = 0; d < depth; ++d) {
    int level = depth - d;  // level of the nodes being split
    int dim = dim_order[static_cast<size_t>(d) % dim_order.size()];
    std::vector<PkdNode*> next;
    for (PkdNode* node : frontier) {
      const geom::Interval iv = node->box.dims[static_cast<size_t>(dim)];
      double split;
      if (iv.width() < kMinSplitWidth) {
        // too thin to measure; halve it without spending median budget
        split = iv.lo + iv.width() / 2.0;
      } else {
        // full-population histogram round; outsiders add noise only
        std::vector<int> bin_of(workers.size(), -1);
        protocol::PerturbedHistogram hist;
        hist.lo = iv.lo;
        hist.hi = iv.hi;
        hist.bins.assign(static_cast<size_t>(bins), 0);
        for (size_t i = 0; i < workers.size(); ++i)
          if (node->box.contains(workers[i].skills))
            bin_of[i] = hist.bin_index(workers[i].skills[static_cast<size_t>(dim)]);
        dp::NoiseParams np{tree.budget.median_epsilon(level), P, tau};
        hist.bins = backend.histogram_round(bin_of, bins, np, rng);
        hist.epsilon_spent = np.epsilon;
        split = protocol::estimate_median(hist);
        if (!(split > iv.lo && split < iv.hi))
          split = iv.lo + iv.width() / 2.0;  // estimate hit the boundary
      }

      node->split_dim = dim;
      node->split_value = split;
      node->left = std::make_unique<PkdNode>();
      node->right = std::make_unique<PkdNode>();
      node->left->box = node->box;
      node->right->box = node->box;
      auto& li = node->left->box.dims[static_cast<size_t>(dim)];
      li.hi = split;
      li.hi_closed = false;
      node->right->box.dims[static_cast<size_t>(dim)].lo = split;

      for (PkdNode* child : {node->left.get(), node->right.get()}) {
        child->raw_count = counted(child->box, workers,
                                   tree.budget.count_epsilon(level - 1), tau,
                                   backend, rng);
        child->count = child->raw_count;
        next.push_back(child);
      }
    }
    frontier = std::move(next);
  }
  return tree;
}

std::vector<const PkdNode*> PkdTree::leaves() const {
  std::vector<const PkdNode*> out;
  std::vector<const PkdNode*> stack{root.get()};
  while (!stack.empty()) {
    const PkdNode* n = stack.back();
    stack.pop_back();
    if (n->is_leaf()) {
      out.push_back(n);
    } else {
      stack.push_back(n->right.get());
      stack.push_back(n->left.get());
    }
  }
  return out;
}

std::vector<geom::Box> PkdTree::leaf_boxes() const {
  std::vector<geom::Box> out;
  for (const PkdNode* n : leaves()) out.push_back(n->box);
  return out;
}

namespace {

double level_variance(const BudgetPlan& plan, int level) {
  double a = std::exp(-plan.count_epsilon(level));
  return 2.0 * a / ((1.0 - a) * (1.0 - a));
}

// Upward sweep: blend each node's own noisy count with the sum of its
// children's blended counts, weighted by inverse variance. Returns the
// variance of the blended estimate.
double sweep_up(PkdNode* node, int level, const BudgetPlan& plan,
                double* blended) {
  double own_var = level_variance(plan, level);
  if (node->is_leaf()) {
    *blended = node->raw_count;
    node->count = node->raw_count;
    return own_var;
  }
  double zl, zr;
  double vl = sweep_up(node->left.get(), level - 1, plan, &zl);
  double vr = sweep_up(node->right.get(), level - 1, plan, &zr);
  double child_var = vl + vr;
  double w = (1.0 / own_var) / (1.0 / own_var + 1.0 / child_var);
  *blended = w * node->raw_count + (1.0 - w) * (zl + zr);
  node->count = *blended;
  return 1.0 / (1.0 / own_var + 1.0 / child_var);
}

// cached upward-sweep variances, recomputed on the way down
double subtree_variance(const PkdNode* node, int level,
                        const BudgetPlan& plan) {
  double own_var = level_variance(plan, level);
  if (node->is_leaf()) return own_var;
  double child_var = subtree_variance(node->left.get(), level - 1, plan) +
                     subtree_variance(node->right.get(), level - 1, plan);
  return 1.0 / (1.0 / own_var + 1.0 / child_var);
}

// Downward sweep: distribute the parent/child mismatch across the children
// in proportion to their upward-sweep variances, so sums become exact.
void sweep_down(PkdNode* node, int level, const BudgetPlan& plan) {
  if (node->is_leaf()) return;
  double vl = subtree_variance(node->left.get(), level - 1, plan);
  double vr = subtree_variance(node->right.get(), level - 1, plan);
  double gap = node->count - (node->left->count + node->right->count);
  node->left->count += gap * vl / (vl + vr);
  node->right->count += gap * vr / (vl + vr);
  sweep_down(node->left.get(), level - 1, plan);
  sweep_down(node->right.get(), level - 1, plan);
}

}  // namespace

void post_process(PkdTree& tree) {
  if (!tree.root) throw std::invalid_argument("post process: empty tree");
  double z;
  sweep_up(tree.root.get(), tree.depth, tree.budget, &z);
  tree.root->count = z;
  sweep_down(tree.root.get(), tree.depth, tree.budget);
  tree.post_processed = true;
}

double estimate_matching(const PkdTree& tree, const workload::TaskSpec& task) {
  if (task.n_dims() != tree.n_dims)
    throw std::invalid_argument("estimate matching: dimension mismatch");
  double est = 0.0;
  for (const PkdNode* leaf : tree.leaves()) {
    double frac = 1.0;
    for (int d = 0; d < tree.n_dims; ++d) {
      const auto& [lo, hi] = task.meta[static_cast<size_t>(d)];
      const auto& iv = leaf->box.dims[static_cast<size_t>(d)];
      frac *= geom::overlap_len(lo, hi, iv) / iv.width();
      if (frac == 0.0) break;
    }
    est += leaf->count * frac;
  }
  return est;
}

namespace {

json node_to_json(const PkdNode& n) {
  json j;
  json box = json::array();
  for (const auto& iv : n.box.dims)
    box.push_back({{"lo", iv.lo}, {"hi", iv.hi}, {"hi_closed", iv.hi_closed}});
  j["box"] = std::move(box);
  j["raw_count"] = n.raw_count;
  j["count"] = n.count;
  if (!n.is_leaf()) {
    j["split_dim"] = n.split_dim;
    j["split_value"] = n.split_value;
    j["left"] = node_to_json(*n.left);
    j["right"] = node_to_json(*n.right);
  }
  return j;
}

std::unique_ptr<PkdNode> node_from_json(const json& j) {
  auto n = std::make_unique<PkdNode>();
  for (const auto& iv : j.at("box"))
    n->box.dims.push_back(geom::Interval{iv.at("lo").get<double>(),
                                         iv.at("hi").get<double>(),
                                         iv.at("hi_closed").get<bool>()});
  n->raw_count = j.at("raw_count").get<double>();
  n->count = j.at("count").get<double>();
  if (j.contains("left")) {
    n->split_dim = j.at("split_dim").get<int>();
    n->split_value = j.at("split_value").get<double>();
    n->left = node_from_json(j.at("left"));
    n->right = node_from_json(j.at("right"));
  }
  return n;
}

}  // namespace

std::string serialize_tree(const PkdTree& tree) {
  json j;
  j["format"] = "pkd-tree";
  j["version"] = 1;
  j["depth"] = tree.depth;
  j["n_dims"] = tree.n_dims;
  j["bins"] = tree.bins;
  j["post_processed"] = tree.post_processed;
  j["budget"] = {{"epsilon", tree.budget.epsilon},
                 {"epsilon_count", tree.budget.epsilon_count},
                 {"epsilon_median", tree.budget.epsilon_median},
                 {"depth", tree.budget.depth},
                 {"eps_c_levels", tree.budget.eps_c_levels},
                 {"eps_m_levels", tree.budget.eps_m_levels}};
  j["root"] = node_to_json(*tree.root);
  return j.dump(2);
}

PkdTree parse_tree(const std::string& text) {
  json j = json::parse(text);
  if (j.at("format") != "pkd-tree" || j.at("version") != 1)
    throw std::runtime_error("tree: unknown format/version");
  PkdTree tree;
  tree.depth = j.at("depth").get<int>();
  tree.n_dims = j.at("n_dims").get<int>();
  tree.bins = j.at("bins").get<int>();
  tree.post_processed = j.at("post_processed").get<bool>();
  const auto& b = j.at("budget");
  tree.budget.epsilon = b.at("epsilon").get<double>();
  tree.budget.epsilon_count = b.at("epsilon_count").get<double>();
  tree.budget.epsilon_median = b.at("epsilon_median").get<double>();
  tree.budget.depth = b.at("depth").get<int>();
  tree.budget.eps_c_levels = b.at("eps_c_levels").get<std::vector<double>>();
  tree.budget.eps_m_levels = b.at("eps_m_levels").get<std::vector<double>>();
  tree.root = node_from_json(j.at("root"));
  return tree;
}

void save_tree(const PkdTree& tree, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << serialize_tree(tree) << "\n";
}

PkdTree load_tree(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_tree(buf.str());
}

}  // namespace pkd::tree
