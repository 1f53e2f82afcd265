#include "pkd/workload.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pkd::workload {

bool matches(const WorkerProfile& w, const TaskSpec& t) {
  if (static_cast<int>(w.skills.size()) != t.n_dims()) return false;
  for (int d = 0; d < t.n_dims(); ++d) {
    double x = w.skills[static_cast<size_t>(d)];
    const auto& [lo, hi] = t.meta[static_cast<size_t>(d)];
    if (x < lo || x > hi) return false;
  }
  return true;
}

bool task_intersects(const TaskSpec& t, const geom::Box& box) {
  if (t.n_dims() != box.n_dims()) return false;
  for (int d = 0; d < t.n_dims(); ++d) {
    const auto& [lo, hi] = t.meta[static_cast<size_t>(d)];
    if (!geom::overlaps(lo, hi, box.dims[static_cast<size_t>(d)])) return false;
  }
  return true;
}

std::vector<WorkerProfile> gen_unif_workers(int count, int dims, Rng& rng) {
  std::vector<WorkerProfile> out(static_cast<size_t>(count));
  for (auto& w : out) {
    w.skills.resize(static_cast<size_t>(dims));
    for (auto& s : w.skills) s = rng.uniform01();
  }
  return out;
}

std::vector<TaskSpec> gen_unif_tasks(int count, int dims,
                                     std::uint64_t weight_bits, Rng& rng) {
  std::vector<TaskSpec> out(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    auto& t = out[static_cast<size_t>(i)];
    t.id = i;
    t.weight_bits = weight_bits;
    t.meta.resize(static_cast<size_t>(dims));
    for (auto& [lo, hi] : t.meta) {
      double a = rng.uniform01(), b = rng.uniform01();
      lo = std::min(a, b);
      hi = std::max(a, b);
    }
  }
  return out;
}

std::vector<WorkerProfile> gen_onespe_workers(int count, int dims, Rng& rng) {
  std::vector<WorkerProfile> out(static_cast<size_t>(count));
  for (auto& w : out) {
    w.skills.resize(static_cast<size_t>(dims));
    auto spe = static_cast<size_t>(rng.uniform_below(static_cast<std::uint64_t>(dims)));
    for (size_t d = 0; d < w.skills.size(); ++d)
      w.skills[d] = d == spe ? rng.uniform(0.5, 1.0) : rng.uniform(0.0, 0.5);
  }
  return out;
}

std::vector<TaskSpec> gen_onespe_tasks(int count, int dims,
                                       std::uint64_t weight_bits, Rng& rng) {
  std::vector<TaskSpec> out(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    auto& t = out[static_cast<size_t>(i)];
    t.id = i;
    t.weight_bits = weight_bits;
    t.meta.resize(static_cast<size_t>(dims));
    auto spe = static_cast<size_t>(rng.uniform_below(static_cast<std::uint64_t>(dims)));
    for (size_t d = 0; d < t.meta.size(); ++d) {
      if (d == spe)
        t.meta[d] = {rng.uniform(0.5, 1.0), 1.0};
      else
        t.meta[d] = {0.0, rng.uniform(0.0, 0.5)};
    }
  }
  return out;
}

std::vector<TaskSpec> gen_subvolume_tasks(std::span<const geom::Box> leaves,
                                          int count, double ratio,
                                          std::uint64_t weight_bits, Rng& rng) {
  if (leaves.empty())
    throw std::invalid_argument("subvolume tasks: no leaves");
  if (!(ratio > 0.0) || ratio > 1.0)
    throw std::invalid_argument("subvolume tasks: ratio outside (0, 1]");
  std::vector<TaskSpec> out(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    auto& t = out[static_cast<size_t>(i)];
    t.id = i;
    t.weight_bits = weight_bits;
    const auto& leaf =
        leaves[static_cast<size_t>(rng.uniform_below(leaves.size()))];
    int dims = leaf.n_dims();
    double scale = std::pow(ratio, 1.0 / static_cast<double>(dims));
    t.meta.resize(static_cast<size_t>(dims));
    for (int d = 0; d < dims; ++d) {
      const auto& iv = leaf.dims[static_cast<size_t>(d)];
      if (ratio == 1.0) {
        // cover the leaf exactly; lo + side would drift off iv.hi
        t.meta[static_cast<size_t>(d)] = {iv.lo, iv.hi};
        continue;
      }
      double side = iv.width() * scale;
      double lo = rng.uniform(iv.lo, iv.hi - side);
      t.meta[static_cast<size_t>(d)] = {lo, lo + side};
    }
  }
  return out;
}

void ensure_nonempty(std::vector<TaskSpec>& tasks,
                     std::span<const WorkerProfile> workers,
                     const std::function<TaskSpec(Rng&)>& regen, Rng& rng,
                     int max_retries) {
  auto has_match = [&](const TaskSpec& t) {
    for (const auto& w : workers)
      if (matches(w, t)) return true;
    return false;
  };
  for (auto& t : tasks) {
    int tries = 0;
    while (!has_match(t)) {
      if (++tries > max_retries)
        throw std::runtime_error(
            "ensure_nonempty: retry budget exhausted for task " +
            std::to_string(t.id));
      int keep = t.id;
      t = regen(rng);
      t.id = keep;
    }
  }
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void save_workers(const std::vector<WorkerProfile>& workers,
                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  int dims = workers.empty() ? 0 : static_cast<int>(workers[0].skills.size());
  out << "pkd-workers v1 dims=" << dims << "\n";
  for (size_t i = 0; i < workers.size(); ++i) {
    out << i;
    for (double s : workers[i].skills) out << " " << fmt_double(s);
    out << "\n";
  }
}

std::vector<WorkerProfile> load_workers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string header;
  std::getline(in, header);
  if (header.rfind("pkd-workers v1", 0) != 0)
    throw std::runtime_error(path + ": not a worker file");
  std::vector<WorkerProfile> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    long id;
    row >> id;
    WorkerProfile w;
    double v;
    while (row >> v) w.skills.push_back(v);
    out.push_back(std::move(w));
  }
  return out;
}

void save_tasks(const std::vector<TaskSpec>& tasks, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  int dims = tasks.empty() ? 0 : tasks[0].n_dims();
  out << "pkd-tasks v1 dims=" << dims << "\n";
  for (const auto& t : tasks) {
    out << t.id;
    for (const auto& [lo, hi] : t.meta)
      out << " " << fmt_double(lo) << " " << fmt_double(hi);
    out << " " << t.weight_bits << "\n";
  }
}

std::vector<TaskSpec> load_tasks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string header;
  std::getline(in, header);
  if (header.rfind("pkd-tasks v1", 0) != 0)
    throw std::runtime_error(path + ": not a task file");
  auto eq = header.find("dims=");
  int dims = std::stoi(header.substr(eq + 5));
  std::vector<TaskSpec> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    TaskSpec t;
    row >> t.id;
    t.meta.resize(static_cast<size_t>(dims));
    for (auto& [lo, hi] : t.meta) row >> lo >> hi;
    row >> t.weight_bits;
    if (!row) throw std::runtime_error(path + ": malformed task row");
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace pkd::workload
