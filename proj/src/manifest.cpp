#include "dgs/manifest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "dgs/error.hpp"

namespace dgs {

using nlohmann::json;

namespace {

bool in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

std::string quote(const std::string& s) { return json(s).dump(); }

// Numbers may arrive as JSON integers ("1") or floats ("0.25").
bool read_real(const json& v, double& out) {
  if (!v.is_number()) return false;
  out = v.get<double>();
  return std::isfinite(out);
}

struct RecordParser {
  std::size_t line;
  std::vector<ManifestIssue>& issues;
  std::string id;

  void fail(std::string message) { issues.push_back({line, id, std::move(message)}); }

  std::optional<Item> parse(const json& rec) {
    if (!rec.is_object()) {
      fail("record is not a JSON object");
      return std::nullopt;
    }
    const std::size_t before = issues.size();
    if (auto it = rec.find("id"); it != rec.end() && it->is_string() && !it->get<std::string>().empty()) {
      id = it->get<std::string>();
    } else {
      fail("missing or invalid \"id\" (non-empty string required)");
    }

    Item item;
    item.id = id;
    for (const auto& [key, value] : rec.items()) {
      if (key == "id") continue;
      if (key == "label") {
        if (value.is_string() && !value.get<std::string>().empty()) {
          item.label = value.get<std::string>();
        } else {
          fail("invalid \"label\" (non-empty string required)");
        }
      } else if (key == "prob_true" || key == "difficulty" || key == "difficulty_smoothed") {
        double v = 0.0;
        if (!read_real(value, v) || !in_unit(v)) {
          fail("\"" + key + "\" must be a number in [0, 1]");
          continue;
        }
        if (key == "prob_true") {
          item.prob_true = v;
        } else if (key == "difficulty") {
          item.difficulty = v;
        } else {
          item.difficulty_smoothed = v;
        }
      } else if (key == "latent") {
        if (!value.is_array() || value.empty()) {
          fail("\"latent\" must be a non-empty array of numbers");
          continue;
        }
        item.latent.reserve(value.size());
        for (const auto& x : value) {
          double v = 0.0;
          if (!read_real(x, v)) {
            fail("\"latent\" contains a non-finite or non-numeric entry");
            item.latent.clear();
            break;
          }
          item.latent.push_back(v);
        }
      } else if (key == "path" || key == "center_id") {
        if (!value.is_string()) {
          fail("\"" + key + "\" must be a string");
          continue;
        }
        (key == "path" ? item.path : item.center_id) = value.get<std::string>();
      } else if (key == "interval") {
        if (!value.is_number_integer() || value.get<long long>() < 0 || value.get<long long>() > 9) {
          fail("\"interval\" must be an integer in [0, 9]");
          continue;
        }
        item.interval = static_cast<int>(value.get<long long>());
      } else {
        fail("unknown field \"" + key + "\"");
      }
    }
    if (!rec.contains("label")) fail("missing \"label\"");

    const bool has_prob = rec.contains("prob_true");
    const bool has_diff = rec.contains("difficulty");
    if (has_prob == has_diff) {
      fail("exactly one of \"prob_true\" and \"difficulty\" is required");
    } else if (has_prob) {
      item.source = DifficultySource::prob_true;
      item.difficulty = 1.0 - item.prob_true;
    } else {
      item.source = DifficultySource::difficulty;
      item.prob_true = 1.0 - item.difficulty;
    }
    if (issues.size() != before) return std::nullopt;
    return item;
  }
};

std::string issue_text(const ManifestIssue& issue) {
  std::string out;
  if (issue.line > 0) out += "line " + std::to_string(issue.line) + ": ";
  if (!issue.id.empty()) out += "id \"" + issue.id + "\": ";
  return out + issue.message;
}

}  // namespace

double difficulty(double prob_true) {
  if (!in_unit(prob_true)) {
    throw DomainError("probability must lie in [0, 1], got " + std::to_string(prob_true));
  }
  return 1.0 - prob_true;
}

Item item_from_prob(std::string id, std::string label, double prob_true) {
  Item item;
  item.id = std::move(id);
  item.label = std::move(label);
  item.prob_true = prob_true;
  item.difficulty = difficulty(prob_true);
  item.source = DifficultySource::prob_true;
  return item;
}

Item item_from_difficulty(std::string id, std::string label, double d) {
  if (!in_unit(d)) throw DomainError("difficulty must lie in [0, 1], got " + std::to_string(d));
  Item item;
  item.id = std::move(id);
  item.label = std::move(label);
  item.difficulty = d;
  item.prob_true = 1.0 - d;
  item.source = DifficultySource::difficulty;
  return item;
}

std::vector<std::string> Manifest::labels() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& item : items) {
    if (seen.insert(item.label).second) out.push_back(item.label);
  }
  return out;
}

std::vector<std::size_t> Manifest::indices_of(std::string_view label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].label == label) out.push_back(i);
  }
  return out;
}

ManifestCheck check_manifest(std::istream& in, Role role) {
  ManifestCheck check;
  check.manifest.role = role;
  std::unordered_set<std::string> ids;
  std::optional<std::size_t> dim;
  std::size_t line_no = 0;
  std::size_t records = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++records;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      check.issues.push_back({line_no, "", std::string("malformed JSON: ") + e.what()});
      continue;
    }
    RecordParser parser{line_no, check.issues, ""};
    auto item = parser.parse(rec);
    if (!item) continue;
    if (!ids.insert(item->id).second) {
      check.issues.push_back({line_no, item->id, "duplicate id"});
      continue;
    }
    if (!dim) dim = item->latent.size();
    if (item->latent.size() != *dim) {
      check.issues.push_back({line_no, item->id,
                              "latent dimension " + std::to_string(item->latent.size()) +
                                  " differs from " + std::to_string(*dim)});
      continue;
    }
    check.manifest.items.push_back(std::move(*item));
  }
  if (records == 0) check.issues.push_back({0, "", "manifest is empty"});
  check.manifest.latent_dim = dim.value_or(0);
  return check;
}

ManifestCheck check_manifest_file(const std::filesystem::path& path, Role role) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  return check_manifest(in, role);
}

Manifest parse_manifest(std::istream& in, Role role) {
  auto check = check_manifest(in, role);
  if (!check.ok()) {
    std::string msg = issue_text(check.issues.front());
    if (check.issues.size() > 1) {
      msg += " (+" + std::to_string(check.issues.size() - 1) + " more)";
    }
    throw ValidationError(msg);
  }
  return std::move(check.manifest);
}

Manifest load_manifest(const std::filesystem::path& path, Role role) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  return parse_manifest(in, role);
}

void validate(const Manifest& manifest) {
  if (manifest.items.empty()) throw ValidationError("manifest is empty");
  std::unordered_set<std::string> ids;
  for (const auto& item : manifest.items) {
    if (item.id.empty()) throw ValidationError("item with empty id");
    if (item.label.empty()) throw ValidationError("id \"" + item.id + "\": empty label");
    if (!ids.insert(item.id).second) throw ValidationError("id \"" + item.id + "\": duplicate id");
    if (!in_unit(item.difficulty) || !in_unit(item.prob_true)) {
      throw ValidationError("id \"" + item.id + "\": difficulty outside [0, 1]");
    }
    if (item.latent.size() != manifest.latent_dim) {
      throw ValidationError("id \"" + item.id + "\": latent dimension " +
                            std::to_string(item.latent.size()) + " differs from " +
                            std::to_string(manifest.latent_dim));
    }
    if (item.difficulty_smoothed && !in_unit(*item.difficulty_smoothed)) {
      throw ValidationError("id \"" + item.id + "\": difficulty_smoothed outside [0, 1]");
    }
    if (item.interval && (*item.interval < 0 || *item.interval > 9)) {
      throw ValidationError("id \"" + item.id + "\": interval outside [0, 9]");
    }
  }
}

std::string format_real(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string to_json_line(const Item& item) {
  std::string out = "{\"id\":" + quote(item.id) + ",\"label\":" + quote(item.label);
  if (item.source == DifficultySource::prob_true) {
    out += ",\"prob_true\":" + format_real(item.prob_true);
  } else {
    out += ",\"difficulty\":" + format_real(item.difficulty);
  }
  if (!item.latent.empty()) {
    out += ",\"latent\":[";
    for (std::size_t i = 0; i < item.latent.size(); ++i) {
      if (i) out += ',';
      out += format_real(item.latent[i]);
    }
    out += ']';
  }
  if (item.path) out += ",\"path\":" + quote(*item.path);
  if (item.difficulty_smoothed) out += ",\"difficulty_smoothed\":" + format_real(*item.difficulty_smoothed);
  if (item.interval) out += ",\"interval\":" + std::to_string(*item.interval);
  if (item.center_id) out += ",\"center_id\":" + quote(*item.center_id);
  out += '}';
  return out;
}

void write_manifest(const Manifest& manifest, std::ostream& out) {
  validate(manifest);
  for (const auto& item : manifest.items) out << to_json_line(item) << '\n';
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  validate(manifest);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  write_manifest(manifest, out);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace dgs
