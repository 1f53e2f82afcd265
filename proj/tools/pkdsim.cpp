#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pkd/crypto_he.hpp"
#include "pkd/experiment.hpp"
#include "pkd/geom.hpp"
#include "pkd/ingest_stack.hpp"
#include "pkd/metrics.hpp"
#include "pkd/packing.hpp"
#include "pkd/pir_engine.hpp"
#include "pkd/pkd_tree.hpp"
#include "pkd/plot.hpp"
#include "pkd/protocol_sum.hpp"
#include "pkd/rng.hpp"
#include "pkd/workload.hpp"

// Experiment harness around the library: keygen, data generation, dump
// ingestion, tree building, packing, full runs, parameter sweeps and the PIR
// answer benchmark. Results go to fixed-schema CSV files plus SVG plots;
// every run reconciles its measured message counts against the closed-form
// model and fails loudly when any invariant breaks.

using namespace pkd;

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct MeanCi {
  double mean = 0.0;
  double half = 0.0;  // 95% confidence half-width
};

MeanCi mean_ci(std::span<const double> xs) {
  // Two-sided 95% Student quantiles for df 1..30; 1.96 beyond.
  static const double t95[30] = {
      12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
      2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
      2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  MeanCi r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return r;
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  double se = std::sqrt(ss / static_cast<double>(xs.size() - 1) /
                        static_cast<double>(xs.size()));
  size_t df = xs.size() - 1;
  r.half = (df <= 30 ? t95[df - 1] : 1.96) * se;
  return r;
}

std::vector<double> column(std::span<const experiment::RunReport> reports,
                           double (*get)(const experiment::RunReport&)) {
  std::vector<double> out;
  out.reserve(reports.size());
  for (const auto& r : reports) out.push_back(get(r));
  return out;
}

// STACK pools: profile table projected onto an explicit tag list or the
// top-n tags of a frequency table.
std::vector<ingest::TagInfo> read_tag_frequencies(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != "tag,count")
    throw std::runtime_error(path + ": expected tag,count header");
  std::vector<ingest::TagInfo> tags;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto comma = line.rfind(',');
    if (comma == std::string::npos)
      throw std::runtime_error(path + ": malformed line " + line);
    ingest::TagInfo t;
    t.name = line.substr(0, comma);
    t.count = std::stol(line.substr(comma + 1));
    tags.push_back(std::move(t));
  }
  return tags;
}

std::vector<workload::WorkerProfile> load_stack_pool(
    const std::string& profiles_path, const std::string& tags_csv,
    const std::string& tag_freq_path, int n_dims) {
  if (profiles_path.empty())
    throw std::invalid_argument("stack generator needs --profiles");
  std::vector<std::string> order;
  if (!tags_csv.empty()) {
    order = split_commas(tags_csv);
  } else if (!tag_freq_path.empty()) {
    auto tags = read_tag_frequencies(tag_freq_path);
    std::stable_sort(tags.begin(), tags.end(),
                     [](const ingest::TagInfo& a, const ingest::TagInfo& b) {
                       if (a.count != b.count) return a.count > b.count;
                       return a.name < b.name;
                     });
    for (const auto& t : tags) {
      if (static_cast<int>(order.size()) == n_dims) break;
      order.push_back(t.name);
    }
  } else {
    throw std::invalid_argument("stack generator needs --tags or --tag-freq");
  }
  if (static_cast<int>(order.size()) != n_dims)
    throw std::invalid_argument("need exactly n-dims tags, got " +
                                std::to_string(order.size()));
  auto pool = ingest::project(ingest::load_profiles(profiles_path), order);
  if (pool.empty()) throw std::runtime_error("stack pool is empty");
  return pool;
}

const char* kRunCsvHeader =
    "seed,generator,task_generator,n_dims,n_workers,n_tasks,epsilon,tau,"
    "threshold,l_bins,depth,key_bits,subvolume_ratio,mock_crypto,quality,"
    "precision_pir,precision_excluded,precision_spam,recall,max_tasks,"
    "n_buckets,weight_bits,padded_bucket_bytes,msg_to_platform,"
    "msg_by_platform,msg_per_worker_avg,msg_to_platform_formula,"
    "msg_by_platform_formula,msg_per_worker_avg_formula";

std::string run_csv_row(const experiment::RunReport& r) {
  const auto& c = r.config;
  std::ostringstream out;
  out << r.seed << ',' << c.generator << ',' << c.task_generator << ','
      << c.n_dims << ',' << c.n_workers << ',' << c.n_tasks << ','
      << fmt(c.epsilon) << ',' << c.tau << ',' << c.threshold_t << ','
      << c.l_bins << ',' << c.depth_h << ',' << c.key_bits << ','
      << fmt(c.subvolume_ratio) << ',' << (c.mock_crypto ? 1 : 0) << ','
      << fmt(r.quality) << ',' << fmt(r.precision_pir) << ','
      << r.precision_excluded << ',' << fmt(r.precision_spam) << ','
      << fmt(r.recall) << ',' << r.max_tasks << ',' << r.n_buckets << ','
      << r.weight_bits << ',' << r.padded_bucket_bytes << ','
      << fmt(r.measured.to_platform) << ',' << fmt(r.measured.by_platform)
      << ',' << fmt(r.measured.per_worker_avg) << ','
      << fmt(r.formula.to_platform) << ',' << fmt(r.formula.by_platform)
      << ',' << fmt(r.formula.per_worker_avg);
  return out.str();
}

void print_run_summary(std::span<const experiment::RunReport> reports) {
  auto stat = [&](const char* name,
                  double (*get)(const experiment::RunReport&)) {
    auto ci = mean_ci(column(reports, get));
    std::cout << "  " << name << ": " << fmt(ci.mean) << " +- "
              << fmt(ci.half) << "\n";
  };
  stat("quality", [](const experiment::RunReport& r) { return r.quality; });
  stat("precision (pir)",
       [](const experiment::RunReport& r) { return r.precision_pir; });
  stat("precision (spam)",
       [](const experiment::RunReport& r) { return r.precision_spam; });
  stat("recall", [](const experiment::RunReport& r) { return r.recall; });
  stat("max tasks", [](const experiment::RunReport& r) {
    return static_cast<double>(r.max_tasks);
  });
  const auto& first = reports.front();
  std::cout << "  messages to platform: measured "
            << fmt(first.measured.to_platform) << ", formula "
            << fmt(first.formula.to_platform) << "\n";
  std::cout << "  messages by platform: measured "
            << fmt(first.measured.by_platform) << ", formula "
            << fmt(first.formula.by_platform) << "\n";
  std::cout << "  messages per worker (avg): measured "
            << fmt(first.measured.per_worker_avg) << ", formula "
            << fmt(first.formula.per_worker_avg) << "\n";
  experiment::StageTimings mean;
  for (const auto& r : reports) {
    mean.gen_s += r.timings.gen_s;
    mean.keygen_s += r.timings.keygen_s;
    mean.build_s += r.timings.build_s;
    mean.post_s += r.timings.post_s;
    mean.pack_s += r.timings.pack_s;
    mean.pir_s += r.timings.pir_s;
    mean.metrics_s += r.timings.metrics_s;
    mean.total_s += r.timings.total_s;
  }
  double n = static_cast<double>(reports.size());
  std::cout << "  timings mean (s): gen " << fmt(mean.gen_s / n) << ", keygen "
            << fmt(mean.keygen_s / n) << ", build " << fmt(mean.build_s / n)
            << ", post " << fmt(mean.post_s / n) << ", pack "
            << fmt(mean.pack_s / n) << ", pir " << fmt(mean.pir_s / n)
            << ", metrics " << fmt(mean.metrics_s / n) << ", total "
            << fmt(mean.total_s / n) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "pkdsim: private skill-tree builder, task packer and PIR delivery "
      "simulator"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value config file");

  experiment::Config cfg;
  app.add_option("--generator", cfg.generator, "worker generator")
      ->check(CLI::IsMember({"unif", "onespe", "stack"}))
      ->capture_default_str();
  app.add_option("--task-generator", cfg.task_generator, "task generator")
      ->check(CLI::IsMember({"unif", "onespe", "subvolume"}))
      ->capture_default_str();
  app.add_option("--n-dims", cfg.n_dims, "skill dimensions")
      ->capture_default_str();
  app.add_option("--n-workers", cfg.n_workers, "population size")
      ->capture_default_str();
  app.add_option("--n-tasks", cfg.n_tasks, "task count")
      ->capture_default_str();
  app.add_option("--epsilon", cfg.epsilon, "total privacy budget")
      ->capture_default_str();
  app.add_option("--tau", cfg.tau, "tolerated coalition size")
      ->capture_default_str();
  app.add_option("-T,--threshold", cfg.threshold_t,
                 "key shares required to decrypt (> tau)")
      ->capture_default_str();
  app.add_option("--l-bins", cfg.l_bins, "histogram bins per median")
      ->capture_default_str();
  app.add_option("--depth", cfg.depth_h, "tree depth h")
      ->capture_default_str();
  app.add_option("--key-bits", cfg.key_bits, "modulus size")
      ->capture_default_str();
  app.add_option("--subvolume-ratio", cfg.subvolume_ratio,
                 "leaf volume fraction per subvolume task")
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "base seed")->capture_default_str();
  app.add_option("--repetitions", cfg.repetitions, "seeded repetitions")
      ->capture_default_str();
  app.add_flag("--mock-crypto", cfg.mock_crypto,
               "plaintext backend with identical noise and message counts");

  // keygen
  auto* sc_keygen =
      app.add_subcommand("keygen", "deal threshold key material to a file");
  std::string keygen_out;
  int keygen_shares = 0;
  bool keygen_no_oracle = false;
  sc_keygen->add_option("--out", keygen_out, "output key file")->required();
  sc_keygen->add_option("--shares", keygen_shares,
                        "shares dealt (default: threshold)");
  sc_keygen->add_flag("--no-oracle", keygen_no_oracle,
                      "omit the dealer's full key");
  sc_keygen->fallthrough();
  sc_keygen->callback([&] {
    int shares = keygen_shares > 0 ? keygen_shares : cfg.threshold_t;
    Rng rng(cfg.seed);
    auto km = crypto::keygen(cfg.key_bits, shares, cfg.threshold_t, rng);
    write_file(keygen_out, crypto::serialize_key_material(
                               km, /*include_oracle=*/!keygen_no_oracle));
    std::cout << "keygen: " << cfg.key_bits << "-bit modulus, " << shares
              << " shares, threshold " << cfg.threshold_t << " -> "
              << keygen_out << "\n";
  });

  // gen-data
  auto* sc_gen = app.add_subcommand(
      "gen-data", "generate a worker population and a task set");
  std::string gen_workers_out, gen_tasks_out, gen_tree;
  std::string gen_profiles, gen_tags, gen_tag_freq;
  sc_gen->add_option("--workers-out", gen_workers_out)->required();
  sc_gen->add_option("--tasks-out", gen_tasks_out)->required();
  sc_gen->add_option("--tree", gen_tree,
                     "tree file whose leaves host subvolume tasks");
  sc_gen->add_option("--profiles", gen_profiles,
                     "ingested profile table for the stack generator");
  sc_gen->add_option("--tags", gen_tags, "comma-separated tag dimensions");
  sc_gen->add_option("--tag-freq", gen_tag_freq,
                     "tag frequency csv; top n-dims tags become dimensions");
  sc_gen->fallthrough();
  sc_gen->callback([&] {
    cfg.validate();
    Rng root(cfg.seed);
    Rng rng_workers = root.fork(1);
    Rng rng_tasks = root.fork(2);
    std::vector<workload::WorkerProfile> workers;
    if (cfg.generator == "unif") {
      workers =
          workload::gen_unif_workers(cfg.n_workers, cfg.n_dims, rng_workers);
    } else if (cfg.generator == "onespe") {
      workers =
          workload::gen_onespe_workers(cfg.n_workers, cfg.n_dims, rng_workers);
    } else {
      auto pool =
          load_stack_pool(gen_profiles, gen_tags, gen_tag_freq, cfg.n_dims);
      workers.reserve(static_cast<size_t>(cfg.n_workers));
      for (int i = 0; i < cfg.n_workers; ++i)
        workers.push_back(pool[static_cast<size_t>(
            rng_workers.uniform_below(pool.size()))]);
    }
    std::vector<workload::TaskSpec> tasks;
    std::function<workload::TaskSpec(Rng&)> regen;
    if (cfg.task_generator == "unif") {
      tasks = workload::gen_unif_tasks(cfg.n_tasks, cfg.n_dims,
                                       experiment::kTaskWeightBits, rng_tasks);
      regen = [&cfg](Rng& r) {
        return workload::gen_unif_tasks(1, cfg.n_dims,
                                        experiment::kTaskWeightBits, r)[0];
      };
    } else if (cfg.task_generator == "onespe") {
      tasks = workload::gen_onespe_tasks(
          cfg.n_tasks, cfg.n_dims, experiment::kTaskWeightBits, rng_tasks);
      regen = [&cfg](Rng& r) {
        return workload::gen_onespe_tasks(1, cfg.n_dims,
                                          experiment::kTaskWeightBits, r)[0];
      };
    } else {
      if (gen_tree.empty())
        throw std::invalid_argument("subvolume tasks need --tree");
      auto tree = tree::load_tree(gen_tree);
      auto leaves = tree.leaf_boxes();
      tasks = workload::gen_subvolume_tasks(leaves, cfg.n_tasks,
                                            cfg.subvolume_ratio,
                                            experiment::kTaskWeightBits,
                                            rng_tasks);
      regen = [leaves, &cfg](Rng& r) {
        return workload::gen_subvolume_tasks(leaves, 1, cfg.subvolume_ratio,
                                             experiment::kTaskWeightBits,
                                             r)[0];
      };
    }
    workload::ensure_nonempty(tasks, workers, regen, rng_tasks,
                              experiment::kEnsureRetries);
    workload::save_workers(workers, gen_workers_out);
    workload::save_tasks(tasks, gen_tasks_out);
    std::cout << "gen-data: " << workers.size() << " workers -> "
              << gen_workers_out << ", " << tasks.size() << " tasks -> "
              << gen_tasks_out << "\n";
  });

  // ingest
  auto* sc_ingest = app.add_subcommand(
      "ingest", "turn a stackexchange dump into skill profiles");
  std::string in_posts, in_votes, in_tags, ingest_out, ingest_freq_out;
  std::string ingest_whitelist;
  sc_ingest->add_option("--posts", in_posts)->required();
  sc_ingest->add_option("--votes", in_votes)->required();
  sc_ingest->add_option("--tags-file", in_tags)->required();
  sc_ingest->add_option("--out", ingest_out, "profile table output")
      ->required();
  sc_ingest->add_option("--tag-freq-out", ingest_freq_out,
                        "tag frequency csv output");
  sc_ingest->add_option("--whitelist", ingest_whitelist,
                        "comma-separated tags to keep");
  sc_ingest->fallthrough();
  sc_ingest->callback([&] {
    auto data = ingest::parse_dumps(in_posts, in_votes, in_tags);
    std::optional<std::set<std::string>> whitelist;
    if (!ingest_whitelist.empty()) {
      auto parts = split_commas(ingest_whitelist);
      whitelist.emplace(parts.begin(), parts.end());
    }
    auto table = ingest::build_profiles(data.posts, whitelist);
    ingest::save_profiles(table, ingest_out);
    if (!ingest_freq_out.empty())
      ingest::save_tag_frequencies(data.tags, ingest_freq_out);
    std::cout << "ingest: " << data.posts.size() << " rated posts, "
              << data.skipped_rows << " skipped rows, " << table.size()
              << " profiles -> " << ingest_out << "\n";
  });

  // build-pkd
  auto* sc_build = app.add_subcommand(
      "build-pkd", "build the private tree over a saved population");
  std::string build_workers, build_keys, build_out;
  bool build_raw = false;
  sc_build->add_option("--workers", build_workers)->required();
  sc_build->add_option("--keys", build_keys,
                       "key file (required without --mock-crypto)");
  sc_build->add_option("--out", build_out, "tree output file")->required();
  sc_build->add_flag("--raw", build_raw, "skip constrained inference");
  sc_build->fallthrough();
  sc_build->callback([&] {
    auto workers = workload::load_workers(build_workers);
    if (workers.empty()) throw std::runtime_error("no workers loaded");
    int n_dims = static_cast<int>(workers[0].skills.size());
    Rng root(cfg.seed);
    Rng rng_build = root.fork(4);
    crypto::KeyMaterial km;
    std::unique_ptr<protocol::SumBackend> backend;
    if (cfg.mock_crypto) {
      backend = std::make_unique<protocol::PlainBackend>(cfg.threshold_t);
    } else {
      if (build_keys.empty())
        throw std::invalid_argument("build-pkd needs --keys or --mock-crypto");
      km = crypto::parse_key_material(read_file(build_keys));
      std::vector<int> decryptors;
      for (int i = 0; i < km.pk.thr.threshold; ++i) decryptors.push_back(i);
      backend = std::make_unique<protocol::EncryptedBackend>(km, decryptors);
    }
    std::vector<int> dim_order(static_cast<size_t>(n_dims));
    std::iota(dim_order.begin(), dim_order.end(), 0);
    auto tree = tree::build_pkd(workers, dim_order, cfg.depth_h, cfg.l_bins,
                                cfg.epsilon, cfg.tau, *backend, rng_build);
    if (!build_raw) tree::post_process(tree);
    tree::save_tree(tree, build_out);
    auto formula =
        metrics::message_counts(static_cast<int>(workers.size()),
                                backend->threshold(), cfg.depth_h, cfg.l_bins);
    const auto& log = backend->log();
    std::cout << "build-pkd: depth " << cfg.depth_h << ", " << cfg.l_bins
              << " bins, " << (cfg.mock_crypto ? "mock" : "encrypted")
              << " backend -> " << build_out << "\n";
    std::cout << "  messages to platform: measured " << log.to_platform
              << ", formula " << fmt(formula.to_platform) << "\n";
    std::cout << "  messages by platform: measured " << log.by_platform
              << ", formula " << fmt(formula.by_platform) << "\n";
    std::cout << "  messages per worker (avg): measured "
              << fmt(log.per_worker_avg()) << ", formula "
              << fmt(formula.per_worker_avg) << "\n";
    if (static_cast<double>(log.to_platform) != formula.to_platform ||
        static_cast<double>(log.by_platform) != formula.by_platform ||
        std::abs(log.per_worker_avg() - formula.per_worker_avg) >
            1e-9 * formula.per_worker_avg)
      throw std::runtime_error("message reconciliation failed");
  });

  // pack
  auto* sc_pack = app.add_subcommand(
      "pack", "bucket tasks by tree leaf and verify the packing");
  std::string pack_tree, pack_tasks, pack_out;
  sc_pack->add_option("--tree", pack_tree)->required();
  sc_pack->add_option("--tasks", pack_tasks)->required();
  sc_pack->add_option("--out", pack_out, "packing manifest output")
      ->required();
  sc_pack->fallthrough();
  sc_pack->callback([&] {
    auto tree = tree::load_tree(pack_tree);
    auto tasks = workload::load_tasks(pack_tasks);
    auto packing = packing::pkd_pir_packing(tree, tasks);
    auto check =
        packing::check_packing(packing, tasks, geom::unit_box(tree.n_dims));
    if (!check.ok)
      throw std::runtime_error("packing check failed: " +
                               check.first_violation());
    packing::save_packing(packing, pack_out);
    std::cout << "pack: " << packing.buckets.size() << " buckets, weight "
              << packing.weight_bits << " bits, padded bucket "
              << packing::padded_bucket_bytes(packing, tasks)
              << " bytes, max tasks " << metrics::max_tasks(packing) << " -> "
              << pack_out << "\n";
  });

  // run
  auto* sc_run =
      app.add_subcommand("run", "full pipeline over `repetitions` seeds");
  std::string run_csv = "run.csv";
  std::string run_profiles, run_tags, run_tag_freq;
  sc_run->add_option("--csv", run_csv, "per-seed results csv")
      ->capture_default_str();
  sc_run->add_option("--profiles", run_profiles,
                     "ingested profile table for the stack generator");
  sc_run->add_option("--tags", run_tags, "comma-separated tag dimensions");
  sc_run->add_option("--tag-freq", run_tag_freq,
                     "tag frequency csv; top n-dims tags become dimensions");
  sc_run->fallthrough();
  sc_run->callback([&] {
    cfg.validate();
    std::vector<workload::WorkerProfile> pool;
    if (cfg.generator == "stack")
      pool = load_stack_pool(run_profiles, run_tags, run_tag_freq, cfg.n_dims);
    std::cout << "run config:\n" << cfg.echo();
    auto reports = experiment::run_many(cfg, pool);
    std::ostringstream csv;
    csv << kRunCsvHeader << "\n";
    for (const auto& r : reports) csv << run_csv_row(r) << "\n";
    write_file(run_csv, csv.str());
    std::cout << "run: " << reports.size() << " repetitions, seeds "
              << cfg.seed << ".." << cfg.seed + reports.size() - 1 << "\n";
    print_run_summary(reports);
    std::cout << "  csv: " << run_csv << "\n";
  });

  // sweep
  auto* sc_sweep = app.add_subcommand(
      "sweep", "repeat runs along one axis and plot mean +- ci");
  std::string sweep_axis;
  std::vector<double> sweep_values;
  std::string sweep_csv, sweep_plot;
  std::string sweep_profiles, sweep_tags, sweep_tag_freq;
  sc_sweep->add_option("--axis", sweep_axis)
      ->check(CLI::IsMember({"depth", "epsilon", "bins", "workers", "ratio"}))
      ->required();
  sc_sweep->add_option("--values", sweep_values)->required()->delimiter(',');
  sc_sweep->add_option("--csv", sweep_csv, "default sweep_<axis>.csv");
  sc_sweep->add_option("--plot", sweep_plot, "default sweep_<axis>.svg");
  sc_sweep->add_option("--profiles", sweep_profiles,
                       "ingested profile table for the stack generator");
  sc_sweep->add_option("--tags", sweep_tags, "comma-separated tag dimensions");
  sc_sweep->add_option("--tag-freq", sweep_tag_freq,
                       "tag frequency csv; top n-dims tags become dimensions");
  sc_sweep->fallthrough();
  sc_sweep->callback([&] {
    if (sweep_csv.empty()) sweep_csv = "sweep_" + sweep_axis + ".csv";
    if (sweep_plot.empty()) sweep_plot = "sweep_" + sweep_axis + ".svg";
    if (sweep_axis == "ratio" && cfg.task_generator != "subvolume") {
      std::cerr << "note: ratio sweep forces task-generator=subvolume\n";
      cfg.task_generator = "subvolume";
    }
    std::vector<workload::WorkerProfile> pool;
    if (cfg.generator == "stack")
      pool = load_stack_pool(sweep_profiles, sweep_tags, sweep_tag_freq,
                             cfg.n_dims);
    auto as_int = [&](double v) {
      if (v != std::floor(v) || v < 1.0)
        throw std::invalid_argument(sweep_axis + " values must be positive " +
                                    "integers");
      return static_cast<int>(v);
    };
    std::ostringstream csv;
    csv << "axis,value," << kRunCsvHeader << "\n";
    plot::Series line_q{"quality", {}, {}, {}};
    plot::Series line_pir{"precision pir", {}, {}, {}};
    plot::Series line_spam{"precision spam", {}, {}, {}};
    for (double v : sweep_values) {
      experiment::Config c = cfg;
      if (sweep_axis == "depth") c.depth_h = as_int(v);
      else if (sweep_axis == "epsilon") c.epsilon = v;
      else if (sweep_axis == "bins") c.l_bins = as_int(v);
      else if (sweep_axis == "workers") c.n_workers = as_int(v);
      else c.subvolume_ratio = v;
      auto reports = experiment::run_many(c, pool);
      for (const auto& r : reports)
        csv << sweep_axis << ',' << fmt(v) << ',' << run_csv_row(r) << "\n";
      auto q = mean_ci(column(
          reports, [](const experiment::RunReport& r) { return r.quality; }));
      auto pir = mean_ci(column(reports, [](const experiment::RunReport& r) {
        return r.precision_pir;
      }));
      auto spam = mean_ci(column(reports, [](const experiment::RunReport& r) {
        return r.precision_spam;
      }));
      line_q.x.push_back(v);
      line_q.y.push_back(q.mean);
      line_q.err.push_back(q.half);
      line_pir.x.push_back(v);
      line_pir.y.push_back(pir.mean);
      line_pir.err.push_back(pir.half);
      line_spam.x.push_back(v);
      line_spam.y.push_back(spam.mean);
      line_spam.err.push_back(spam.half);
      std::cout << sweep_axis << " = " << fmt(v) << ": quality "
                << fmt(q.mean) << " +- " << fmt(q.half) << ", precision pir "
                << fmt(pir.mean) << ", spam " << fmt(spam.mean) << "\n";
    }
    write_file(sweep_csv, csv.str());
    if (sweep_axis == "ratio")
      plot::write_svg(sweep_plot, "precision vs leaf ratio", "ratio",
                      "precision", {line_pir, line_spam});
    else
      plot::write_svg(sweep_plot, "quality vs " + sweep_axis, sweep_axis,
                      "mean relative error", {line_q},
                      /*log_x=*/sweep_axis == "epsilon");
    std::cout << "sweep: csv " << sweep_csv << ", plot " << sweep_plot
              << "\n";
  });

  // bench-pir
  auto* sc_bench = app.add_subcommand(
      "bench-pir", "time PIR answers across library sizes and fit a line");
  std::vector<std::size_t> bench_sizes = {65536, 131072, 262144, 524288,
                                          1048576};
  int bench_items = 16;
  int bench_trials = 3;
  std::string bench_csv = "bench_pir.csv";
  std::string bench_plot = "bench_pir.svg";
  sc_bench->add_option("--sizes", bench_sizes, "library sizes in bytes")
      ->delimiter(',')
      ->capture_default_str();
  sc_bench->add_option("--n-items", bench_items)->capture_default_str();
  sc_bench->add_option("--trials", bench_trials)->capture_default_str();
  sc_bench->add_option("--csv", bench_csv)->capture_default_str();
  sc_bench->add_option("--plot", bench_plot)->capture_default_str();
  sc_bench->fallthrough();
  sc_bench->callback([&] {
    Rng rng(cfg.seed);
    auto points = pir::bench_answer(bench_sizes, bench_items, cfg.key_bits,
                                    bench_trials, rng);
    std::vector<double> mb, secs;
    std::ostringstream csv;
    csv << "library_bytes,answer_seconds\n";
    for (const auto& p : points) {
      mb.push_back(static_cast<double>(p.library_bytes) / 1e6);
      secs.push_back(p.answer_seconds);
      csv << p.library_bytes << ',' << fmt(p.answer_seconds) << "\n";
    }
    write_file(bench_csv, csv.str());
    auto fit = metrics::linear_fit(mb, secs);
    std::cout << "bench-pir: " << points.size() << " sizes, " << bench_items
              << " items, " << cfg.key_bits << "-bit keys\n";
    std::cout << "  slope " << fmt(fit.slope) << " s/MB (scan rate), "
              << "intercept " << fmt(fit.intercept) << " s, r2 "
              << fmt(fit.r2) << "\n";
    plot::Series measured{"answer time", mb, secs, {}};
    plot::Series fitted{"fit",
                        {mb.front(), mb.back()},
                        {fit.intercept + fit.slope * mb.front(),
                         fit.intercept + fit.slope * mb.back()},
                        {}};
    plot::write_svg(bench_plot, "pir answer time vs library size",
                    "library MB", "seconds", {measured, fitted});
    std::cout << "  csv: " << bench_csv << ", plot: " << bench_plot << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\nconfig was:\n" << cfg.echo();
    return 1;
  }
  return 0;
}
