#include "pkd/ingest_stack.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pkd::ingest {

namespace {

std::string unescape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size();) {
    if (s[i] == '&') {
      auto semi = s.find(';', i);
      if (semi != std::string::npos && semi - i <= 6) {
        std::string ent = s.substr(i + 1, semi - i - 1);
        i = semi + 1;
        if (ent == "lt")
          out += '<';
        else if (ent == "gt")
          out += '>';
        else if (ent == "amp")
          out += '&';
        else if (ent == "quot")
          out += '"';
        else if (ent == "apos" || ent == "#39")
          out += '\'';
        else if (!ent.empty() && ent[0] == '#')
          out += static_cast<char>(std::stoi(ent.substr(1)));
        else
          out += '&' + ent + ';';
        continue;
      }
    }
    out += s[i++];
  }
  return out;
}

// "<a><b>" or "|a|b|" -> {a, b}
std::vector<std::string> split_tags(const std::string& raw) {
  std::vector<std::string> out;
  if (raw.empty()) return out;
  if (raw.find('<') != std::string::npos) {
    size_t i = 0;
    while ((i = raw.find('<', i)) != std::string::npos) {
      auto j = raw.find('>', i);
      if (j == std::string::npos) break;
      out.push_back(raw.substr(i + 1, j - i - 1));
      i = j + 1;
    }
  } else {
    std::stringstream ss(raw);
    std::string tag;
    while (std::getline(ss, tag, '|'))
      if (!tag.empty()) out.push_back(tag);
  }
  return out;
}

long attr_long(const std::map<std::string, std::string>& attrs,
               const std::string& key, long fallback) {
  auto it = attrs.find(key);
  if (it == attrs.end()) return fallback;
  return std::stol(it->second);
}

// Distinguishes scaffolding lines (<?xml ...>, <posts>) from row elements
// that failed to parse; only the latter count as skipped.
bool looks_like_row(const std::string& line) {
  return line.find("<row") != std::string::npos;
}

}  // namespace

std::optional<std::map<std::string, std::string>> parse_row(
    const std::string& line) {
  auto open = line.find("<row");
  if (open == std::string::npos) return std::nullopt;
  std::map<std::string, std::string> attrs;
  size_t i = open + 4;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    if (i >= line.size() || line[i] == '/' || line[i] == '>') break;
    auto eq = line.find('=', i);
    if (eq == std::string::npos) return std::nullopt;
    std::string name = line.substr(i, eq - i);
    if (eq + 1 >= line.size() || line[eq + 1] != '"') return std::nullopt;
    auto close = line.find('"', eq + 2);
    if (close == std::string::npos) return std::nullopt;
    attrs[name] = unescape(line.substr(eq + 2, close - eq - 2));
    i = close + 1;
  }
  return attrs;
}

DumpData parse_dumps(const std::string& posts_path,
                     const std::string& votes_path,
                     const std::string& tags_path) {
  DumpData data;

  // votes first: post -> (up, down)
  std::map<long, std::pair<int, int>> votes;
  {
    std::ifstream in(votes_path);
    if (!in) throw std::runtime_error("cannot read " + votes_path);
    std::string line;
    while (std::getline(in, line)) {
      auto attrs = parse_row(line);
      if (!attrs) {
        if (looks_like_row(line)) data.skipped_rows += 1;
        continue;
      }
      try {
        long post = attr_long(*attrs, "PostId", -1);
        long type = attr_long(*attrs, "VoteTypeId", -1);
        if (post < 0 || type < 0) throw std::runtime_error("missing field");
        if (type == 2)
          votes[post].first += 1;
        else if (type == 3)
          votes[post].second += 1;
      } catch (const std::exception&) {
        data.skipped_rows += 1;
      }
    }
  }

  // posts: two passes so answers can inherit question tags regardless of
  // file order
  struct RawPost {
    long id, owner, parent;
    int type;
    std::vector<std::string> tags;
  };
  std::vector<RawPost> raw;
  std::map<long, std::vector<std::string>> question_tags;
  {
    std::ifstream in(posts_path);
    if (!in) throw std::runtime_error("cannot read " + posts_path);
    std::string line;
    while (std::getline(in, line)) {
      auto attrs = parse_row(line);
      if (!attrs) {
        if (looks_like_row(line)) data.skipped_rows += 1;
        continue;
      }
      try {
        RawPost p;
        p.id = attr_long(*attrs, "Id", -1);
        if (p.id < 0) throw std::runtime_error("missing id");
        p.type = static_cast<int>(attr_long(*attrs, "PostTypeId", -1));
        p.owner = attr_long(*attrs, "OwnerUserId", -1);
        p.parent = attr_long(*attrs, "ParentId", -1);
        auto tags_it = attrs->find("Tags");
        if (tags_it != attrs->end()) p.tags = split_tags(tags_it->second);
        if (p.type == 1) question_tags[p.id] = p.tags;
        if (p.type == 1 || p.type == 2) raw.push_back(std::move(p));
      } catch (const std::exception&) {
        data.skipped_rows += 1;
      }
    }
  }
  for (auto& p : raw) {
    PostRecord rec;
    rec.post_id = p.id;
    rec.owner_user_id = p.owner;
    if (p.type == 2) {
      auto it = question_tags.find(p.parent);
      if (it == question_tags.end()) continue;  // orphan answer
      rec.tags = it->second;
    } else {
      rec.tags = std::move(p.tags);
    }
    auto v = votes.find(p.id);
    if (v != votes.end()) {
      rec.upvotes = v->second.first;
      rec.downvotes = v->second.second;
    }
    data.posts.push_back(std::move(rec));
  }

  {
    std::ifstream in(tags_path);
    if (!in) throw std::runtime_error("cannot read " + tags_path);
    std::string line;
    while (std::getline(in, line)) {
      auto attrs = parse_row(line);
      if (!attrs) {
        if (looks_like_row(line)) data.skipped_rows += 1;
        continue;
      }
      auto it = attrs->find("TagName");
      if (it == attrs->end()) {
        data.skipped_rows += 1;
        continue;
      }
      TagInfo info;
      info.name = it->second;
      info.count = attr_long(*attrs, "Count", 0);
      data.tags.push_back(std::move(info));
    }
  }
  return data;
}

std::optional<double> popularity_ratio(int upvotes, int downvotes) {
  if (upvotes + downvotes == 0) return std::nullopt;
  return static_cast<double>(upvotes) /
         static_cast<double>(upvotes + downvotes);
}

SkillProfileTable build_profiles(
    const std::vector<PostRecord>& posts,
    const std::optional<std::set<std::string>>& tag_whitelist) {
  // (user, tag) -> (sum of ratios, post count)
  std::map<long, std::map<std::string, std::pair<double, long>>> acc;
  for (const auto& p : posts) {
    if (p.owner_user_id < 0) continue;
    auto ratio = popularity_ratio(p.upvotes, p.downvotes);
    if (!ratio) continue;
    for (const auto& tag : p.tags) {
      if (tag_whitelist && !tag_whitelist->count(tag)) continue;
      auto& cell = acc[p.owner_user_id][tag];
      cell.first += *ratio;
      cell.second += 1;
    }
  }
  SkillProfileTable table;
  for (const auto& [user, tags] : acc) {
    std::map<std::string, double> skills;
    bool any_positive = false;
    for (const auto& [tag, cell] : tags) {
      double mean = cell.first / static_cast<double>(cell.second);
      skills[tag] = mean;
      if (mean > 0.0) any_positive = true;
    }
    if (any_positive) table[user] = std::move(skills);
  }
  return table;
}

namespace {

std::string fmt_skill(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void save_profiles(const SkillProfileTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "pkd-profiles v1\n";
  for (const auto& [user, tags] : table)
    for (const auto& [tag, value] : tags)
      out << user << "\t" << tag << "\t" << fmt_skill(value) << "\n";
}

SkillProfileTable load_profiles(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string header;
  std::getline(in, header);
  if (header != "pkd-profiles v1")
    throw std::runtime_error(path + ": not a profile table");
  SkillProfileTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    long user;
    std::string tag;
    double value;
    row >> user >> tag >> value;
    if (!row) throw std::runtime_error(path + ": malformed profile row");
    table[user][tag] = value;
  }
  return table;
}

std::vector<workload::WorkerProfile> project(
    const SkillProfileTable& table, const std::vector<std::string>& tag_order) {
  std::vector<workload::WorkerProfile> out;
  out.reserve(table.size());
  for (const auto& [user, tags] : table) {
    workload::WorkerProfile w;
    w.skills.reserve(tag_order.size());
    for (const auto& tag : tag_order) {
      auto it = tags.find(tag);
      w.skills.push_back(it == tags.end() ? 0.0 : it->second);
    }
    out.push_back(std::move(w));
  }
  return out;
}

void save_tag_frequencies(const std::vector<TagInfo>& tags,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "tag,count\n";
  for (const auto& t : tags) out << t.name << "," << t.count << "\n";
}

}  // namespace pkd::ingest
