#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pkd/packing.hpp"
#include "pkd/pkd_tree.hpp"
#include "pkd/workload.hpp"

// Evaluation metrics and the closed-form cost/capacity models.

namespace pkd::metrics {

// Mean relative error of the tree's matching estimate:
// (1/|T|) * sum_t |t_match - t_est| / t_match. Tasks must match >= 1 worker.
double quality(const tree::PkdTree& tree,
               std::span<const workload::WorkerProfile> workers,
               std::span<const workload::TaskSpec> tasks);

struct AssignmentRecord {
  int worker_index = 0;
  int bucket_index = -1;
  std::vector<int> downloaded_task_ids;
  std::vector<int> matching_task_ids;
};

// One record per worker: the bucket it downloads and its exact matches.
std::vector<AssignmentRecord> assign_all(
    const packing::Packing& packing,
    std::span<const workload::WorkerProfile> workers,
    std::span<const workload::TaskSpec> tasks);

struct PrecisionReport {
  double value = 0.0;
  int excluded_tasks = 0;  // tasks downloaded by no worker
};

// Mean over tasks of |matchers among downloaders| / |downloaders|; tasks
// nobody downloaded are excluded and counted.
PrecisionReport precision(std::span<const AssignmentRecord> assignments,
                          std::span<const workload::TaskSpec> tasks);

// Spamming baseline: everyone downloads everything, so each task contributes
// t_match / |P|.
double precision_spam(std::span<const workload::WorkerProfile> workers,
                      std::span<const workload::TaskSpec> tasks);

std::size_t max_tasks(const packing::Packing& packing);

struct MessageCounts {
  double to_platform = 0.0;    // (|P| + T) * inner
  double per_worker_avg = 0.0; // (1 + T/|P|) * inner
  double by_platform = 0.0;    // T * inner
};

// inner = l * (2^h - 1) + (2^(h+1) - 1): one histogram per internal node and
// one count per node.
MessageCounts message_counts(int n_workers, int threshold_t, int depth,
                             int bins);

struct Capacity {
  double n_max_spam = 0.0;
  double n_max_pir = 0.0;
};

// Worker-side capacity: spamming is bounded by storage s / |task|; private
// delivery by storage s / (f * |task| * k) and by time
// t / (2^depth * scan_rate * |task| * k), with |task| in MB and scan_rate in
// seconds per MB.
Capacity capacity(double storage_mb, double time_seconds, double f, double k,
                  int depth, double task_mb, double scan_rate_s_per_mb);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace pkd::metrics
