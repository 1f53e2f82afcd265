#include "pkd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace pkd::metrics {

double quality(const tree::PkdTree& tree,
               std::span<const workload::WorkerProfile> workers,
               std::span<const workload::TaskSpec> tasks) {
  if (tasks.empty()) throw std::invalid_argument("quality: no tasks");
  double total = 0.0;
  for (const auto& t : tasks) {
    long match = 0;
    for (const auto& w : workers)
      if (workload::matches(w, t)) ++match;
    if (match == 0)
      throw std::invalid_argument("quality: task matches no worker");
    double est = tree::estimate_matching(tree, t);
    total += std::abs(static_cast<double>(match) - est) /
             static_cast<double>(match);
  }
  return total / static_cast<double>(tasks.size());
}

std::vector<AssignmentRecord> assign_all(
    const packing::Packing& packing,
    std::span<const workload::WorkerProfile> workers,
    std::span<const workload::TaskSpec> tasks) {
  std::vector<AssignmentRecord> out;
  out.reserve(workers.size());
  for (size_t i = 0; i < workers.size(); ++i) {
    AssignmentRecord rec;
    rec.worker_index = static_cast<int>(i);
    rec.bucket_index = packing::assign_bucket(packing, workers[i]);
    rec.downloaded_task_ids =
        packing.buckets[static_cast<size_t>(rec.bucket_index)].task_ids;
    for (const auto& t : tasks)
      if (workload::matches(workers[i], t)) rec.matching_task_ids.push_back(t.id);
    out.push_back(std::move(rec));
  }
  return out;
}

PrecisionReport precision(std::span<const AssignmentRecord> assignments,
                          std::span<const workload::TaskSpec> tasks) {
  std::map<int, long> downloads, matches_among;
  for (const auto& rec : assignments) {
    for (int id : rec.downloaded_task_ids) downloads[id] += 1;
    // matching AND downloaded
    for (int id : rec.matching_task_ids)
      if (std::find(rec.downloaded_task_ids.begin(),
                    rec.downloaded_task_ids.end(),
                    id) != rec.downloaded_task_ids.end())
        matches_among[id] += 1;
  }
  PrecisionReport rep;
  double total = 0.0;
  int counted = 0;
  for (const auto& t : tasks) {
    auto it = downloads.find(t.id);
    if (it == downloads.end() || it->second == 0) {
      rep.excluded_tasks += 1;
      continue;
    }
    total += static_cast<double>(matches_among[t.id]) /
             static_cast<double>(it->second);
    ++counted;
  }
  if (counted == 0) throw std::runtime_error("precision: no task downloaded");
  rep.value = total / static_cast<double>(counted);
  return rep;
}

double precision_spam(std::span<const workload::WorkerProfile> workers,
                      std::span<const workload::TaskSpec> tasks) {
  if (workers.empty() || tasks.empty())
    throw std::invalid_argument("precision: empty input");
  double total = 0.0;
  for (const auto& t : tasks) {
    long match = 0;
    for (const auto& w : workers)
      if (workload::matches(w, t)) ++match;
    total += static_cast<double>(match) / static_cast<double>(workers.size());
  }
  return total / static_cast<double>(tasks.size());
}

std::size_t max_tasks(const packing::Packing& packing) {
  std::size_t best = 0;
  for (const auto& b : packing.buckets)
    best = std::max(best, b.task_ids.size());
  return best;
}

MessageCounts message_counts(int n_workers, int threshold_t, int depth,
                             int bins) {
  double counts = std::pow(2.0, depth + 1) - 1.0;
  double medians = static_cast<double>(bins) * (std::pow(2.0, depth) - 1.0);
  double inner = medians + counts;
  MessageCounts mc;
  mc.to_platform = (n_workers + threshold_t) * inner;
  mc.per_worker_avg =
      (1.0 + static_cast<double>(threshold_t) / n_workers) * inner;
  mc.by_platform = threshold_t * inner;
  return mc;
}

Capacity capacity(double storage_mb, double time_seconds, double f, double k,
                  int depth, double task_mb, double scan_rate_s_per_mb) {
  Capacity cap;
  cap.n_max_spam = storage_mb / task_mb;
  double by_storage = storage_mb / (f * task_mb * k);
  double by_time = time_seconds /
                   (std::pow(2.0, depth) * scan_rate_s_per_mb * task_mb * k);
  cap.n_max_pir = std::min(by_storage, by_time);
  return cap;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("linear fit: need >= 2 points");
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw std::invalid_argument("linear fit: degenerate x");
  LinearFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0, ss_tot = 0, ybar = sy / n;
  for (size_t i = 0; i < x.size(); ++i) {
    double pred = fit.slope * x[i] + fit.intercept;
    ss_res += (y[i] - pred) * (y[i] - pred);
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  fit.r2 = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return fit;
}

}  // namespace pkd::metrics
