#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pkd/metrics.hpp"
#include "pkd/workload.hpp"

// Seeded end-to-end experiment runs: generate a population and tasks, build
// the private tree, post-process, pack, deliver one bucket per worker and
// score the result. One run is deterministic in its seed; repetitions fan out
// over consecutive seeds in parallel.

namespace pkd::experiment {

struct Config {
  std::string generator = "unif";       // unif | onespe | stack
  std::string task_generator = "unif";  // unif | onespe | subvolume
  int n_dims = 10;
  int n_workers = 10000;
  int n_tasks = 1000;
  double epsilon = 0.1;
  int tau = 1;
  int threshold_t = 2;  // key-shares required for decryption, > tau
  int l_bins = 10;
  int depth_h = 10;
  int key_bits = 1024;
  double subvolume_ratio = 0.5;
  std::uint64_t seed = 1;
  int repetitions = 5;
  bool mock_crypto = false;

  void validate() const;  // throws std::invalid_argument
  // One key=value line per field, reusable as a config file.
  std::string echo() const;
};

struct StageTimings {
  double gen_s = 0.0;
  double keygen_s = 0.0;
  double build_s = 0.0;
  double post_s = 0.0;
  double pack_s = 0.0;
  double pir_s = 0.0;
  double metrics_s = 0.0;
  double total_s = 0.0;
};

struct RunReport {
  Config config;
  std::uint64_t seed = 0;  // seed of this repetition

  double quality = 0.0;
  double precision_pir = 0.0;
  int precision_excluded = 0;
  double precision_spam = 0.0;
  double recall = 0.0;
  std::size_t max_tasks = 0;
  std::uint64_t weight_bits = 0;
  std::size_t padded_bucket_bytes = 0;
  int n_buckets = 0;

  metrics::MessageCounts measured;
  metrics::MessageCounts formula;
  StageTimings timings;
};

// Every generated task carries this payload size; bucket weights follow.
inline constexpr std::uint64_t kTaskWeightBits = 2048;

// Retry budget for resampling empty-match tasks. High-dimensional boxes
// match a sparse population only rarely (well under 1% per draw for 10
// dimensions against 500 workers), so the bound is generous; each retry is
// a cheap scan and impossible configs still terminate with an error.
inline constexpr int kEnsureRetries = 1000000;

// One full pipeline pass under `seed` (the config's own seed field is
// ignored here). STACK runs sample workers uniformly from `stack_pool`,
// which other generators ignore. Throws on any invariant violation,
// including measured-vs-formula message mismatch and packing check failure.
RunReport run_once(const Config& cfg, std::uint64_t seed,
                   std::span<const workload::WorkerProfile> stack_pool = {});

// Runs seeds cfg.seed .. cfg.seed + repetitions - 1, fanned out over
// hardware threads, reported in seed order.
std::vector<RunReport> run_many(
    const Config& cfg,
    std::span<const workload::WorkerProfile> stack_pool = {});

}  // namespace pkd::experiment
