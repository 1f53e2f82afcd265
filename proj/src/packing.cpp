#include "pkd/packing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pkd::packing {

using json = nlohmann::json;

namespace {

constexpr std::size_t kMaxBruteTasks = 8;
constexpr std::size_t kMaxBruteCells = 24;

std::map<int, const workload::TaskSpec*> by_id(
    std::span<const workload::TaskSpec> tasks) {
  std::map<int, const workload::TaskSpec*> m;
  for (const auto& t : tasks)
    if (!m.emplace(t.id, &t).second)
      throw std::invalid_argument("packing: duplicate task id");
  return m;
}

bool region_intersects(const workload::TaskSpec& t, const Region& region) {
  for (const auto& box : region)
    if (workload::task_intersects(t, box)) return true;
  return false;
}

bool boxes_overlap(const geom::Box& a, const geom::Box& b) {
  for (size_t d = 0; d < a.dims.size(); ++d) {
    if (std::max(a.dims[d].lo, b.dims[d].lo) >=
        std::min(a.dims[d].hi, b.dims[d].hi))
      return false;
  }
  return true;
}

bool box_inside(const geom::Box& inner, const geom::Box& outer) {
  for (size_t d = 0; d < inner.dims.size(); ++d)
    if (inner.dims[d].lo < outer.dims[d].lo - 1e-12 ||
        inner.dims[d].hi > outer.dims[d].hi + 1e-12)
      return false;
  return true;
}

}  // namespace

Packing pkd_pir_packing(const tree::PkdTree& tree,
                        std::span<const workload::TaskSpec> tasks) {
  by_id(tasks);  // validates id uniqueness
  Packing p;
  for (const geom::Box& leaf : tree.leaf_boxes()) {
    Bucket b;
    b.region = {leaf};
    for (const auto& t : tasks) {
      if (workload::task_intersects(t, leaf)) {
        b.task_ids.push_back(t.id);
        b.raw_weight_bits += t.weight_bits;
      }
    }
    p.weight_bits = std::max(p.weight_bits, b.raw_weight_bits);
    p.buckets.push_back(std::move(b));
  }
  return p;
}

int assign_bucket(const Packing& packing, const workload::WorkerProfile& w) {
  for (size_t i = 0; i < packing.buckets.size(); ++i)
    for (const auto& box : packing.buckets[i].region)
      if (box.contains(w.skills)) return static_cast<int>(i);
  throw std::runtime_error("assign_bucket: profile outside every bucket");
}

std::string CheckReport::first_violation() const {
  return violations.empty() ? "" : violations.front();
}

CheckReport check_packing(const Packing& packing,
                          std::span<const workload::TaskSpec> tasks,
                          const geom::Box& space) {
  CheckReport rep;
  auto ids = by_id(tasks);

  // uniform padded size: stored weights consistent, pad covers every bucket
  std::uint64_t max_raw = 0;
  bool weights_ok = true;
  for (const auto& b : packing.buckets) {
    std::uint64_t raw = 0;
    for (int id : b.task_ids) {
      auto it = ids.find(id);
      if (it == ids.end()) {
        weights_ok = false;
        break;
      }
      raw += it->second->weight_bits;
    }
    if (raw != b.raw_weight_bits) weights_ok = false;
    max_raw = std::max(max_raw, raw);
  }
  if (!weights_ok || packing.weight_bits != max_raw)
    rep.violations.push_back("def4.cond2-uniform-size");

  // exact membership: bucket tasks == tasks intersecting its region
  for (size_t i = 0; i < packing.buckets.size(); ++i) {
    const auto& b = packing.buckets[i];
    std::vector<int> expect;
    for (const auto& t : tasks)
      if (region_intersects(t, b.region)) expect.push_back(t.id);
    std::vector<int> got = b.task_ids;
    std::sort(got.begin(), got.end());
    std::sort(expect.begin(), expect.end());
    if (got != expect) {
      rep.violations.push_back("def5.cond2-exact-tasks");
      break;
    }
  }

  // pairwise disjoint regions (positive-measure overlap forbidden)
  auto any_overlap = [&] {
    for (size_t i = 0; i < packing.buckets.size(); ++i)
      for (size_t j = i + 1; j < packing.buckets.size(); ++j)
        for (const auto& ba : packing.buckets[i].region)
          for (const auto& bb : packing.buckets[j].region)
            if (boxes_overlap(ba, bb)) return true;
    return false;
  };
  if (any_overlap()) rep.violations.push_back("def5.cond4-disjoint");

  // coverage: regions inside the space and volumes summing to it (valid
  // because disjointness was already established)
  {
    bool inside = true;
    double vol = 0.0;
    for (const auto& b : packing.buckets)
      for (const auto& box : b.region) {
        if (!box_inside(box, space)) inside = false;
        vol += box.volume();
      }
    if (!inside || std::abs(vol - space.volume()) >
                       1e-9 * std::max(1.0, space.volume()))
      rep.violations.push_back("def5.cond3-cover");
  }

  rep.ok = rep.violations.empty();
  return rep;
}

std::vector<geom::Box> arrangement_cells(
    std::span<const workload::TaskSpec> tasks, const geom::Box& space) {
  int dims = space.n_dims();
  std::vector<std::vector<double>> cuts(static_cast<size_t>(dims));
  for (int d = 0; d < dims; ++d) {
    auto& c = cuts[static_cast<size_t>(d)];
    const auto& iv = space.dims[static_cast<size_t>(d)];
    c.push_back(iv.lo);
    c.push_back(iv.hi);
    for (const auto& t : tasks) {
      const auto& [lo, hi] = t.meta[static_cast<size_t>(d)];
      if (lo > iv.lo && lo < iv.hi) c.push_back(lo);
      if (hi > iv.lo && hi < iv.hi) c.push_back(hi);
    }
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
  }

  std::vector<geom::Box> cells{geom::Box{}};
  for (int d = 0; d < dims; ++d) {
    const auto& c = cuts[static_cast<size_t>(d)];
    const auto& iv = space.dims[static_cast<size_t>(d)];
    std::vector<geom::Box> next;
    for (const auto& cell : cells) {
      for (size_t k = 0; k + 1 < c.size(); ++k) {
        geom::Box b = cell;
        bool last = k + 2 == c.size();
        b.dims.push_back(geom::Interval{c[k], c[k + 1], last && iv.hi_closed});
        next.push_back(std::move(b));
      }
    }
    cells = std::move(next);
  }
  return cells;
}

std::uint64_t min_weight(std::span<const workload::TaskSpec> tasks) {
  if (tasks.empty()) return 0;
  // hull of the tasks, upper edges closed like a domain boundary
  int dims = tasks[0].n_dims();
  geom::Box hull;
  hull.dims.resize(static_cast<size_t>(dims));
  for (int d = 0; d < dims; ++d) {
    double lo = tasks[0].meta[static_cast<size_t>(d)].first;
    double hi = tasks[0].meta[static_cast<size_t>(d)].second;
    for (const auto& t : tasks) {
      lo = std::min(lo, t.meta[static_cast<size_t>(d)].first);
      hi = std::max(hi, t.meta[static_cast<size_t>(d)].second);
    }
    hull.dims[static_cast<size_t>(d)] = geom::Interval{lo, hi, true};
  }
  std::uint64_t best = 0;
  for (const auto& cell : arrangement_cells(tasks, hull)) {
    std::uint64_t w = 0;
    for (const auto& t : tasks)
      if (workload::task_intersects(t, cell)) w += t.weight_bits;
    best = std::max(best, w);
  }
  return best;
}

bool is_acceptable(const Packing& packing,
                   std::span<const workload::TaskSpec> tasks) {
  return packing.weight_bits == min_weight(tasks);
}

namespace {

struct BruteState {
  std::span<const workload::TaskSpec> tasks;
  std::vector<std::uint32_t> cell_mask;       // task set per supercell
  std::vector<std::vector<geom::Box>> cell_boxes;
  std::uint64_t target = 0;                   // m_T
  int max_blocks = 0;

  std::vector<std::uint32_t> block_mask;
  std::vector<std::uint64_t> block_weight;
  std::vector<std::vector<size_t>> block_cells;

  std::uint64_t mask_weight(std::uint32_t mask) const {
    std::uint64_t w = 0;
    for (size_t t = 0; t < tasks.size(); ++t)
      if (mask & (1u << t)) w += tasks[t].weight_bits;
    return w;
  }

  bool place(size_t cell) {
    if (cell == cell_mask.size()) return true;
    size_t used = block_mask.size();
    for (size_t b = 0; b < used; ++b) {
      std::uint32_t merged = block_mask[b] | cell_mask[cell];
      std::uint64_t w = mask_weight(merged);
      if (w > target) continue;  // weights only grow with more cells
      auto keep_mask = block_mask[b];
      auto keep_w = block_weight[b];
      block_mask[b] = merged;
      block_weight[b] = w;
      block_cells[b].push_back(cell);
      if (place(cell + 1)) return true;
      block_mask[b] = keep_mask;
      block_weight[b] = keep_w;
      block_cells[b].pop_back();
    }
    if (static_cast<int>(used) < max_blocks) {
      std::uint64_t w = mask_weight(cell_mask[cell]);
      if (w <= target) {
        block_mask.push_back(cell_mask[cell]);
        block_weight.push_back(w);
        block_cells.push_back({cell});
        if (place(cell + 1)) return true;
        block_mask.pop_back();
        block_weight.pop_back();
        block_cells.pop_back();
      }
    }
    return false;
  }
};

}  // namespace

std::optional<Packing> brute_force_optimal(
    std::span<const workload::TaskSpec> tasks, const geom::Box& space,
    int max_buckets) {
  if (tasks.size() > kMaxBruteTasks)
    throw std::invalid_argument("brute force: instance too large");
  by_id(tasks);  // validates id uniqueness
  for (const auto& t : tasks)
    for (int d = 0; d < t.n_dims(); ++d) {
      const auto& [lo, hi] = t.meta[static_cast<size_t>(d)];
      const auto& iv = space.dims[static_cast<size_t>(d)];
      if (lo < iv.lo || hi > iv.hi)
        throw std::invalid_argument("brute force: task outside space");
    }

  auto cells = arrangement_cells(tasks, space);
  if (cells.size() > kMaxBruteCells)
    throw std::invalid_argument("brute force: instance too large");

  // group cells with identical task sets; splitting such twins across
  // buckets can never help, so one representative group suffices
  std::map<std::uint32_t, std::vector<geom::Box>> groups;
  std::vector<std::pair<std::uint32_t, std::vector<geom::Box>>> supercells;
  for (const auto& cell : cells) {
    std::uint32_t mask = 0;
    for (size_t t = 0; t < tasks.size(); ++t)
      if (workload::task_intersects(tasks[t], cell)) mask |= 1u << t;
    groups[mask].push_back(cell);
  }
  for (auto& [mask, boxes] : groups) supercells.emplace_back(mask, boxes);

  BruteState st;
  st.tasks = tasks;
  st.target = min_weight(tasks);
  for (auto& [mask, boxes] : supercells) {
    st.cell_mask.push_back(mask);
    st.cell_boxes.push_back(boxes);
  }

  for (int blocks = 1; blocks <= max_buckets; ++blocks) {
    st.max_blocks = blocks;
    st.block_mask.clear();
    st.block_weight.clear();
    st.block_cells.clear();
    if (!st.place(0)) continue;

    Packing p;
    p.weight_bits = st.target;
    for (size_t b = 0; b < st.block_mask.size(); ++b) {
      Bucket bucket;
      for (size_t c : st.block_cells[b])
        for (const auto& box : st.cell_boxes[c]) bucket.region.push_back(box);
      for (size_t t = 0; t < tasks.size(); ++t)
        if (st.block_mask[b] & (1u << t)) {
          bucket.task_ids.push_back(tasks[t].id);
          bucket.raw_weight_bits += tasks[t].weight_bits;
        }
      p.buckets.push_back(std::move(bucket));
    }
    return p;
  }
  return std::nullopt;
}

std::vector<std::uint8_t> task_payload(const workload::TaskSpec& task) {
  std::size_t bytes = static_cast<std::size_t>((task.weight_bits + 7) / 8);
  std::vector<std::uint8_t> out(bytes);
  std::uint64_t state =
      0x9e3779b97f4a7c15ULL ^ (static_cast<std::uint64_t>(task.id) * 0x100000001b3ULL);
  std::size_t i = 0;
  while (i < bytes) {
    std::uint64_t word = splitmix64(state);
    for (int b = 0; b < 8 && i < bytes; ++b, ++i)
      out[i] = static_cast<std::uint8_t>(word >> (8 * b));
  }
  return out;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b)
    out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b)
    v |= static_cast<std::uint32_t>(in[at + static_cast<size_t>(b)]) << (8 * b);
  return v;
}

}  // namespace

std::size_t encoded_bucket_size(const Bucket& bucket,
                                std::span<const workload::TaskSpec> tasks) {
  auto ids = by_id(tasks);
  std::size_t size = 4;
  for (int id : bucket.task_ids) {
    auto it = ids.find(id);
    if (it == ids.end())
      throw std::invalid_argument("bucket encode: unknown task id");
    size += 8 + static_cast<std::size_t>((it->second->weight_bits + 7) / 8);
  }
  return size;
}

std::size_t padded_bucket_bytes(const Packing& packing,
                                std::span<const workload::TaskSpec> tasks) {
  std::size_t pad = 0;
  for (const auto& b : packing.buckets)
    pad = std::max(pad, encoded_bucket_size(b, tasks));
  return pad;
}

std::vector<std::uint8_t> encode_bucket(
    const Bucket& bucket, std::span<const workload::TaskSpec> tasks,
    std::size_t padded_bytes) {
  auto ids = by_id(tasks);
  std::vector<int> ordered = bucket.task_ids;
  std::sort(ordered.begin(), ordered.end());

  std::vector<std::uint8_t> out;
  out.reserve(padded_bytes);
  put_u32(out, static_cast<std::uint32_t>(ordered.size()));
  for (int id : ordered) {
    auto it = ids.find(id);
    if (it == ids.end())
      throw std::invalid_argument("bucket encode: unknown task id");
    auto payload = task_payload(*it->second);
    put_u32(out, static_cast<std::uint32_t>(id));
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
  }
  if (out.size() > padded_bytes)
    throw std::invalid_argument("bucket encode: content exceeds padded size");
  out.resize(padded_bytes, 0);
  return out;
}

std::vector<DecodedTask> decode_bucket(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw std::runtime_error("bucket decode: truncated");
  std::uint32_t count = get_u32(bytes, 0);
  std::size_t at = 4;
  std::vector<DecodedTask> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    if (at + 8 > bytes.size())
      throw std::runtime_error("bucket decode: truncated");
    DecodedTask t;
    t.id = static_cast<int>(get_u32(bytes, at));
    std::uint32_t len = get_u32(bytes, at + 4);
    at += 8;
    if (at + len > bytes.size())
      throw std::runtime_error("bucket decode: truncated");
    t.payload.assign(bytes.begin() + static_cast<long>(at),
                     bytes.begin() + static_cast<long>(at + len));
    at += len;
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

json box_to_json(const geom::Box& box) {
  json j = json::array();
  for (const auto& iv : box.dims)
    j.push_back({{"lo", iv.lo}, {"hi", iv.hi}, {"hi_closed", iv.hi_closed}});
  return j;
}

geom::Box box_from_json(const json& j) {
  geom::Box box;
  for (const auto& iv : j)
    box.dims.push_back(geom::Interval{iv.at("lo").get<double>(),
                                      iv.at("hi").get<double>(),
                                      iv.at("hi_closed").get<bool>()});
  return box;
}

}  // namespace

std::string serialize_packing(const Packing& packing) {
  json j;
  j["format"] = "pkd-packing";
  j["version"] = 1;
  j["weight_bits"] = packing.weight_bits;
  json buckets = json::array();
  for (const auto& b : packing.buckets) {
    json jb;
    json region = json::array();
    for (const auto& box : b.region) region.push_back(box_to_json(box));
    jb["region"] = std::move(region);
    jb["task_ids"] = b.task_ids;
    jb["raw_weight_bits"] = b.raw_weight_bits;
    buckets.push_back(std::move(jb));
  }
  j["buckets"] = std::move(buckets);
  return j.dump(2);
}

Packing parse_packing(const std::string& text) {
  json j = json::parse(text);
  if (j.at("format") != "pkd-packing" || j.at("version") != 1)
    throw std::runtime_error("packing: unknown format/version");
  Packing p;
  p.weight_bits = j.at("weight_bits").get<std::uint64_t>();
  for (const auto& jb : j.at("buckets")) {
    Bucket b;
    for (const auto& jbox : jb.at("region"))
      b.region.push_back(box_from_json(jbox));
    b.task_ids = jb.at("task_ids").get<std::vector<int>>();
    b.raw_weight_bits = jb.at("raw_weight_bits").get<std::uint64_t>();
    p.buckets.push_back(std::move(b));
  }
  return p;
}

void save_packing(const Packing& packing, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << serialize_packing(packing) << "\n";
}

Packing load_packing(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_packing(buf.str());
}

}  // namespace pkd::packing
