#include "pkd/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "pkd/crypto_he.hpp"
#include "pkd/geom.hpp"
#include "pkd/packing.hpp"
#include "pkd/pir_engine.hpp"
#include "pkd/pkd_tree.hpp"
#include "pkd/protocol_sum.hpp"
#include "pkd/rng.hpp"

namespace pkd::experiment {

namespace {

// Fork tags for the per-stage random streams of one run.
constexpr std::uint64_t kTagWorkers = 1;
constexpr std::uint64_t kTagTasks = 2;
constexpr std::uint64_t kTagKeys = 3;
constexpr std::uint64_t kTagBuild = 4;
constexpr std::uint64_t kTagPir = 5;

bool one_of(const std::string& v, std::initializer_list<const char*> set) {
  for (const char* s : set)
    if (v == s) return true;
  return false;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

void Config::validate() const {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("config: " + msg);
  };
  if (!one_of(generator, {"unif", "onespe", "stack"}))
    fail("unknown generator " + generator);
  if (!one_of(task_generator, {"unif", "onespe", "subvolume"}))
    fail("unknown task generator " + task_generator);
  if (n_dims < 1) fail("n_dims < 1");
  if (n_workers < 1) fail("n_workers < 1");
  if (n_tasks < 1) fail("n_tasks < 1");
  if (!(epsilon > 0.0)) fail("epsilon <= 0");
  if (tau < 0) fail("tau < 0");
  if (tau >= n_workers) fail("tau >= n_workers");
  if (threshold_t <= tau) fail("T <= tau");
  if (threshold_t > n_workers) fail("T > n_workers");
  if (l_bins < 1) fail("l_bins < 1");
  if (depth_h < 1) fail("depth_h < 1");
  if (key_bits < 128) fail("key_bits < 128");
  if (!(subvolume_ratio > 0.0) || subvolume_ratio > 1.0)
    fail("subvolume_ratio outside (0, 1]");
  if (repetitions < 1) fail("repetitions < 1");
}

std::string Config::echo() const {
  std::ostringstream out;
  out << "generator=" << generator << "\n";
  out << "task-generator=" << task_generator << "\n";
  out << "n-dims=" << n_dims << "\n";
  out << "n-workers=" << n_workers << "\n";
  out << "n-tasks=" << n_tasks << "\n";
  out << "epsilon=" << fmt_g(epsilon) << "\n";
  out << "tau=" << tau << "\n";
  out << "threshold=" << threshold_t << "\n";
  out << "l-bins=" << l_bins << "\n";
  out << "depth=" << depth_h << "\n";
  out << "key-bits=" << key_bits << "\n";
  out << "subvolume-ratio=" << fmt_g(subvolume_ratio) << "\n";
  out << "seed=" << seed << "\n";
  out << "repetitions=" << repetitions << "\n";
  out << "mock-crypto=" << (mock_crypto ? "true" : "false") << "\n";
  return out.str();
}

RunReport run_once(const Config& cfg, std::uint64_t seed,
                   std::span<const workload::WorkerProfile> stack_pool) {
  cfg.validate();
  RunReport rep;
  rep.config = cfg;
  rep.seed = seed;
  Rng root(seed);
  auto run_start = std::chrono::steady_clock::now();

  // Workers, and tasks that do not depend on the tree.
  auto t0 = std::chrono::steady_clock::now();
  Rng rng_workers = root.fork(kTagWorkers);
  std::vector<workload::WorkerProfile> workers;
  if (cfg.generator == "unif") {
    workers = workload::gen_unif_workers(cfg.n_workers, cfg.n_dims,
                                         rng_workers);
  } else if (cfg.generator == "onespe") {
    workers = workload::gen_onespe_workers(cfg.n_workers, cfg.n_dims,
                                           rng_workers);
  } else {
    if (stack_pool.empty())
      throw std::invalid_argument("stack generator needs a profile pool");
    if (static_cast<int>(stack_pool.front().skills.size()) != cfg.n_dims)
      throw std::invalid_argument("stack pool dimensionality != n_dims");
    workers.reserve(static_cast<size_t>(cfg.n_workers));
    for (int i = 0; i < cfg.n_workers; ++i)
      workers.push_back(
          stack_pool[static_cast<size_t>(rng_workers.uniform_below(
              stack_pool.size()))]);
  }

  Rng rng_tasks = root.fork(kTagTasks);
  std::vector<workload::TaskSpec> tasks;
  if (cfg.task_generator == "unif") {
    tasks = workload::gen_unif_tasks(cfg.n_tasks, cfg.n_dims, kTaskWeightBits,
                                     rng_tasks);
    workload::ensure_nonempty(
        tasks, workers,
        [&cfg](Rng& r) {
          return workload::gen_unif_tasks(1, cfg.n_dims, kTaskWeightBits,
                                          r)[0];
        },
        rng_tasks, kEnsureRetries);
  } else if (cfg.task_generator == "onespe") {
    tasks = workload::gen_onespe_tasks(cfg.n_tasks, cfg.n_dims,
                                       kTaskWeightBits, rng_tasks);
    workload::ensure_nonempty(
        tasks, workers,
        [&cfg](Rng& r) {
          return workload::gen_onespe_tasks(1, cfg.n_dims, kTaskWeightBits,
                                            r)[0];
        },
        rng_tasks, kEnsureRetries);
  }
  rep.timings.gen_s = seconds_since(t0);

  // Keys for the private sums; mock runs skip them.
  t0 = std::chrono::steady_clock::now();
  Rng rng_keys = root.fork(kTagKeys);
  crypto::KeyMaterial km;
  std::vector<int> decryptors;
  for (int i = 0; i < cfg.threshold_t; ++i) decryptors.push_back(i);
  if (!cfg.mock_crypto)
    km = crypto::keygen(cfg.key_bits, cfg.threshold_t, cfg.threshold_t,
                        rng_keys);
  rep.timings.keygen_s = seconds_since(t0);

  // Tree.
  t0 = std::chrono::steady_clock::now();
  Rng rng_build = root.fork(kTagBuild);
  std::vector<int> dim_order(static_cast<size_t>(cfg.n_dims));
  std::iota(dim_order.begin(), dim_order.end(), 0);
  std::unique_ptr<protocol::SumBackend> backend;
  if (cfg.mock_crypto)
    backend = std::make_unique<protocol::PlainBackend>(cfg.threshold_t);
  else
    backend = std::make_unique<protocol::EncryptedBackend>(km, decryptors);
  tree::PkdTree tree =
      tree::build_pkd(workers, dim_order, cfg.depth_h, cfg.l_bins, cfg.epsilon,
                      cfg.tau, *backend, rng_build);
  rep.timings.build_s = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  tree::post_process(tree);
  rep.timings.post_s = seconds_since(t0);

  // Tasks carved out of the built leaves.
  if (cfg.task_generator == "subvolume") {
    t0 = std::chrono::steady_clock::now();
    auto leaves = tree.leaf_boxes();
    tasks = workload::gen_subvolume_tasks(leaves, cfg.n_tasks,
                                          cfg.subvolume_ratio, kTaskWeightBits,
                                          rng_tasks);
    workload::ensure_nonempty(
        tasks, workers,
        [&leaves, &cfg](Rng& r) {
          return workload::gen_subvolume_tasks(leaves, 1, cfg.subvolume_ratio,
                                               kTaskWeightBits, r)[0];
        },
        rng_tasks, kEnsureRetries);
    rep.timings.gen_s += seconds_since(t0);
  }

  // Packing.
  t0 = std::chrono::steady_clock::now();
  packing::Packing packing = packing::pkd_pir_packing(tree, tasks);
  auto check = packing::check_packing(packing, tasks,
                                      geom::unit_box(cfg.n_dims));
  if (!check.ok)
    throw std::runtime_error("packing check failed: " +
                             check.first_violation());
  rep.n_buckets = static_cast<int>(packing.buckets.size());
  rep.weight_bits = packing.weight_bits;
  rep.padded_bucket_bytes = packing::padded_bucket_bytes(packing, tasks);
  rep.timings.pack_s = seconds_since(t0);

  // One delivery per worker, verified bit-exact against the bucket content.
  t0 = std::chrono::steady_clock::now();
  Rng rng_pir = root.fork(kTagPir);
  std::vector<std::vector<std::uint8_t>> items;
  items.reserve(packing.buckets.size());
  for (const auto& b : packing.buckets)
    items.push_back(
        packing::encode_bucket(b, tasks, rep.padded_bucket_bytes));

  std::map<int, const workload::TaskSpec*> task_by_id;
  for (const auto& t : tasks) task_by_id[t.id] = &t;
  auto verify_delivery = [&](int bucket,
                             const std::vector<std::uint8_t>& bytes) {
    auto got = packing::decode_bucket(bytes);
    const auto& want = packing.buckets[static_cast<size_t>(bucket)].task_ids;
    if (got.size() != want.size())
      throw std::runtime_error("delivery lost tasks");
    for (size_t i = 0; i < got.size(); ++i) {
      if (got[i].id != want[i])
        throw std::runtime_error("delivery task id mismatch");
      if (got[i].payload != packing::task_payload(*task_by_id.at(got[i].id)))
        throw std::runtime_error("delivery payload mismatch");
    }
  };

  if (cfg.mock_crypto) {
    for (const auto& w : workers) {
      int b = packing::assign_bucket(packing, w);
      verify_delivery(b, items[static_cast<size_t>(b)]);
    }
  } else {
    crypto::KeyMaterial client = crypto::keygen(cfg.key_bits, 1, 1, rng_pir);
    int chunk_bits = pir::default_chunk_bits(client.pk, items.size());
    pir::PirLibrary lib = pir::build_library(items, chunk_bits);
    for (const auto& w : workers) {
      int b = packing::assign_bucket(packing, w);
      auto query = pir::make_query(client.pk, static_cast<size_t>(b),
                                   items.size(), rng_pir);
      auto qwire = pir::serialize_query(query);
      auto response = pir::answer(pir::parse_query(qwire), lib);
      auto rwire = pir::serialize_response(response);
      auto bytes =
          pir::decode(client.pk, client.oracle, pir::parse_response(rwire),
                      chunk_bits, rep.padded_bucket_bytes);
      verify_delivery(b, bytes);
    }
  }
  rep.timings.pir_s = seconds_since(t0);

  // Scores and the message reconciliation.
  t0 = std::chrono::steady_clock::now();
  rep.quality = metrics::quality(tree, workers, tasks);
  auto records = metrics::assign_all(packing, workers, tasks);
  auto prec = metrics::precision(records, tasks);
  rep.precision_pir = prec.value;
  rep.precision_excluded = prec.excluded_tasks;
  rep.precision_spam = metrics::precision_spam(workers, tasks);
  rep.max_tasks = metrics::max_tasks(packing);

  long matching = 0, retrieved = 0;
  for (const auto& r : records) {
    for (int id : r.matching_task_ids) {
      ++matching;
      for (int d : r.downloaded_task_ids)
        if (d == id) {
          ++retrieved;
          break;
        }
    }
  }
  rep.recall = matching == 0 ? 1.0
                             : static_cast<double>(retrieved) /
                                   static_cast<double>(matching);

  const auto& log = backend->log();
  rep.measured.to_platform = static_cast<double>(log.to_platform);
  rep.measured.by_platform = static_cast<double>(log.by_platform);
  rep.measured.per_worker_avg = log.per_worker_avg();
  rep.formula = metrics::message_counts(cfg.n_workers, cfg.threshold_t,
                                        cfg.depth_h, cfg.l_bins);
  auto mismatch = [](double got, double want) {
    return std::abs(got - want) > 1e-9 * std::max(1.0, std::abs(want));
  };
  if (mismatch(rep.measured.to_platform, rep.formula.to_platform) ||
      mismatch(rep.measured.by_platform, rep.formula.by_platform) ||
      mismatch(rep.measured.per_worker_avg, rep.formula.per_worker_avg))
    throw std::runtime_error(
        "message reconciliation failed: measured " +
        fmt_g(rep.measured.to_platform) + "/" +
        fmt_g(rep.measured.by_platform) + "/" +
        fmt_g(rep.measured.per_worker_avg) + " vs formula " +
        fmt_g(rep.formula.to_platform) + "/" + fmt_g(rep.formula.by_platform) +
        "/" + fmt_g(rep.formula.per_worker_avg));
  rep.timings.metrics_s = seconds_since(t0);

  rep.timings.total_s = seconds_since(run_start);
  return rep;
}

std::vector<RunReport> run_many(
    const Config& cfg, std::span<const workload::WorkerProfile> stack_pool) {
  cfg.validate();
  unsigned lanes = std::max(1u, std::thread::hardware_concurrency());
  std::vector<RunReport> out(static_cast<size_t>(cfg.repetitions));
  size_t next = 0;
  while (next < out.size()) {
    size_t batch = std::min<size_t>(lanes, out.size() - next);
    std::vector<std::future<RunReport>> futs;
    futs.reserve(batch);
    for (size_t i = 0; i < batch; ++i) {
      std::uint64_t seed = cfg.seed + next + i;
      futs.push_back(std::async(std::launch::async, [&cfg, seed, stack_pool] {
        return run_once(cfg, seed, stack_pool);
      }));
    }
    for (size_t i = 0; i < batch; ++i) out[next + i] = futs[i].get();
    next += batch;
  }
  return out;
}

}  // namespace pkd::experiment
