#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pkd/geom.hpp"
#include "pkd/rng.hpp"

// Synthetic worker and task generators plus the columnar text formats the
// tools exchange. Skills live in [0, 1]; a worker matches a task when every
// skill lies inside the task's closed interval on that dimension.

namespace pkd::workload {

struct WorkerProfile {
  std::vector<double> skills;
};

struct TaskSpec {
  int id = 0;
  // closed interval [lo, hi] per dimension
  std::vector<std::pair<double, double>> meta;
  std::uint64_t weight_bits = 0;

  int n_dims() const { return static_cast<int>(meta.size()); }
};

bool matches(const WorkerProfile& w, const TaskSpec& t);

// Positive-measure intersection between a task rectangle and a box, with the
// degenerate-interval rule from geom::overlaps applied per dimension.
bool task_intersects(const TaskSpec& t, const geom::Box& box);

// UNIF: skills i.i.d. uniform; task intervals from sorted uniform pairs.
std::vector<WorkerProfile> gen_unif_workers(int count, int dims, Rng& rng);
std::vector<TaskSpec> gen_unif_tasks(int count, int dims,
                                     std::uint64_t weight_bits, Rng& rng);

// ONESPE: one uniformly chosen specialty dimension in [0.5, 1], all other
// skills in [0, 0.5). Tasks ask for one specialty at least u and everything
// else below v < 0.5.
std::vector<WorkerProfile> gen_onespe_workers(int count, int dims, Rng& rng);
std::vector<TaskSpec> gen_onespe_tasks(int count, int dims,
                                       std::uint64_t weight_bits, Rng& rng);

// SUBVOLUME: each task sits strictly inside one uniformly chosen leaf and
// covers a `ratio` fraction of its volume (side length scaled by
// ratio^(1/dims)), placed uniformly within the leaf.
std::vector<TaskSpec> gen_subvolume_tasks(std::span<const geom::Box> leaves,
                                          int count, double ratio,
                                          std::uint64_t weight_bits, Rng& rng);

// Resample any task matching no worker via `regen` until all match at least
// one; throws std::runtime_error after max_retries failures on one slot.
void ensure_nonempty(std::vector<TaskSpec>& tasks,
                     std::span<const WorkerProfile> workers,
                     const std::function<TaskSpec(Rng&)>& regen, Rng& rng,
                     int max_retries = 1000);

// Columnar text formats, full double precision, versioned header line.
void save_workers(const std::vector<WorkerProfile>& workers,
                  const std::string& path);
std::vector<WorkerProfile> load_workers(const std::string& path);
void save_tasks(const std::vector<TaskSpec>& tasks, const std::string& path);
std::vector<TaskSpec> load_tasks(const std::string& path);

}  // namespace pkd::workload
