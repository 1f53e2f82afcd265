#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pkd/workload.hpp"

// StackExchange dump ingestion: joins Posts, Votes and Tags into per-user
// skill profiles. A post's popularity ratio is up / (up + down); posts with
// no votes have no ratio and are skipped. A user's skill on a tag is the mean
// ratio over their posts carrying that tag; answers inherit the tags of their
// parent question. Users with no positive skill are dropped.

namespace pkd::ingest {

struct PostRecord {
  long post_id = 0;
  long owner_user_id = -1;  // -1 when the dump omits the owner
  std::vector<std::string> tags;
  int upvotes = 0;
  int downvotes = 0;
};

struct TagInfo {
  std::string name;
  long count = 0;
};

struct DumpData {
  std::vector<PostRecord> posts;
  std::vector<TagInfo> tags;
  int skipped_rows = 0;  // malformed rows encountered across the three files
};

// Attribute map of one `<row .../>` line, XML entities decoded; nullopt when
// the line is not a row element.
std::optional<std::map<std::string, std::string>> parse_row(
    const std::string& line);

// Reads the three dump files. Questions carry their own tags; answers get
// their parent question's tags. Vote type 2 counts up, 3 counts down.
// Missing files are fatal; malformed rows are skipped and counted.
DumpData parse_dumps(const std::string& posts_path,
                     const std::string& votes_path,
                     const std::string& tags_path);

std::optional<double> popularity_ratio(int upvotes, int downvotes);

// user id -> tag -> mean ratio; only tags with at least one rated post
// appear. Users whose every skill is zero (or who have none) are dropped.
using SkillProfileTable = std::map<long, std::map<std::string, double>>;

SkillProfileTable build_profiles(
    const std::vector<PostRecord>& posts,
    const std::optional<std::set<std::string>>& tag_whitelist);

// Deterministic text table: header line, then user <TAB> tag <TAB> value
// rows sorted by user then tag.
void save_profiles(const SkillProfileTable& table, const std::string& path);
SkillProfileTable load_profiles(const std::string& path);

// Dense projection onto the given tag order; absent tags read as 0.
std::vector<workload::WorkerProfile> project(
    const SkillProfileTable& table, const std::vector<std::string>& tag_order);

// tag,count frequency table (CSV) from the Tags file.
void save_tag_frequencies(const std::vector<TagInfo>& tags,
                          const std::string& path);

}  // namespace pkd::ingest
