#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pkd/geom.hpp"
#include "pkd/pkd_tree.hpp"
#include "pkd/workload.hpp"

// Task packings for private delivery. A partitioned packing carves the skill
// space into disjoint subspaces, one bucket each, and a bucket holds exactly
// the tasks whose rectangles intersect its subspace (positive-measure
// intersection; boundary touching does not count). All buckets are padded to
// one uniform size so a download reveals nothing, which makes the packing
// weight the size of its heaviest bucket.

namespace pkd::packing {

// A subspace as a union of boxes; tree-derived buckets hold a single box.
using Region = std::vector<geom::Box>;

struct Bucket {
  Region region;
  std::vector<int> task_ids;
  std::uint64_t raw_weight_bits = 0;  // sum of member task weights
};

struct Packing {
  std::vector<Bucket> buckets;
  std::uint64_t weight_bits = 0;  // uniform padded size = max raw weight
};

// One bucket per tree leaf, containing exactly the tasks intersecting it.
Packing pkd_pir_packing(const tree::PkdTree& tree,
                        std::span<const workload::TaskSpec> tasks);

// Index of the unique bucket whose region contains the profile point; throws
// std::runtime_error when the point is outside every bucket.
int assign_bucket(const Packing& packing, const workload::WorkerProfile& w);

struct CheckReport {
  bool ok = true;
  std::vector<std::string> violations;  // in check order

  std::string first_violation() const;
};

// Verifies uniform padded size, exact bucket membership, pairwise disjoint
// regions and full coverage of the space, in that order.
CheckReport check_packing(const Packing& packing,
                          std::span<const workload::TaskSpec> tasks,
                          const geom::Box& space);

// Minimum possible packing weight: the heaviest point of the space, i.e. the
// max over arrangement cells of the summed weights of tasks covering the
// cell. Lower-bounds the weight of every valid partitioned packing.
std::uint64_t min_weight(std::span<const workload::TaskSpec> tasks);

bool is_acceptable(const Packing& packing,
                   std::span<const workload::TaskSpec> tasks);

// Exhaustive search over partitions of the arrangement cells into at most
// max_buckets buckets; returns an acceptable packing with the fewest buckets
// or nullopt when none exists under the cap. Instances are capped at 8 tasks.
std::optional<Packing> brute_force_optimal(
    std::span<const workload::TaskSpec> tasks, const geom::Box& space,
    int max_buckets);

// Arrangement of the space induced by task rectangle boundaries: half-open
// grid cells whose interiors never cross a task edge. Exposed for tests.
std::vector<geom::Box> arrangement_cells(
    std::span<const workload::TaskSpec> tasks, const geom::Box& space);

// Bucket wire format: u32le task count, then per task u32le id, u32le payload
// length and the payload bytes, zero-padded to padded_bytes. Payloads are
// deterministic pseudo-random bytes derived from the task id.
std::vector<std::uint8_t> task_payload(const workload::TaskSpec& task);
std::size_t encoded_bucket_size(const Bucket& bucket,
                                std::span<const workload::TaskSpec> tasks);
std::size_t padded_bucket_bytes(const Packing& packing,
                                std::span<const workload::TaskSpec> tasks);
std::vector<std::uint8_t> encode_bucket(const Bucket& bucket,
                                        std::span<const workload::TaskSpec> tasks,
                                        std::size_t padded_bytes);

struct DecodedTask {
  int id = 0;
  std::vector<std::uint8_t> payload;
};
std::vector<DecodedTask> decode_bucket(std::span<const std::uint8_t> bytes);

// Versioned manifest round-trip.
std::string serialize_packing(const Packing& packing);
Packing parse_packing(const std::string& text);
void save_packing(const Packing& packing, const std::string& path);
Packing load_packing(const std::string& path);

}  // namespace pkd::packing
