#include "leafpipe/features_io.hpp"

#include "leafpipe/errors.hpp"
#include "leafpipe/features.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace leafpipe {

namespace {

void append_number(std::string& out, double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, r.ptr);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) return cells;
    start = comma + 1;
  }
}

bool plain_cell(const std::string& s) {
  return s.find_first_of(",\"\r\n") == std::string::npos;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::filesystem::path meta_path(const std::filesystem::path& csv) {
  return std::filesystem::path(csv.string() + ".meta.json");
}

}  // namespace

std::string features_to_csv(const FeatureMatrix& m) {
  m.validate();
  std::string out = "sample_id,label";
  for (const auto& n : m.names) {
    if (!plain_cell(n)) throw ArgumentError("feature name '" + n + "' cannot be written to CSV");
    out += ',';
    out += n;
  }
  out += '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const std::string& id = m.sample_ids[static_cast<std::size_t>(i)];
    if (!plain_cell(id)) throw ArgumentError("sample id '" + id + "' cannot be written to CSV");
    out += id;
    out += ',';
    out += std::to_string(m.labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      out += ',';
      append_number(out, m.values(i, k));
    }
    out += '\n';
  }
  return out;
}

FeatureMatrix features_from_csv(const std::string& text) {
  std::vector<std::string_view> lines;
  {
    std::string_view rest(text);
    while (!rest.empty()) {
      const std::size_t nl = rest.find('\n');
      lines.push_back(rest.substr(0, nl));
      if (nl == std::string_view::npos) break;
      rest.remove_prefix(nl + 1);
    }
  }
  if (lines.empty()) throw ParseError("empty features file", 1);
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (!lines[i].empty() && lines[i].back() == '\r') throw ParseError("CRLF line ending", static_cast<long>(i + 1));

  const auto header = split(lines[0]);
  if (header.size() < 3 || header[0] != "sample_id" || header[1] != "label")
    throw ParseError("header must start with sample_id,label and name at least one feature", 1);
  FeatureMatrix m;
  std::set<std::string_view> seen;
  for (std::size_t k = 2; k < header.size(); ++k) {
    if (header[k].empty() || !seen.insert(header[k]).second)
      throw ParseError("empty or duplicate column name '" + std::string(header[k]) + "'", 1);
    m.names.emplace_back(header[k]);
  }
  const std::size_t d = m.names.size();
  std::size_t rows = lines.size() - 1;
  while (rows > 0 && lines[rows].empty()) --rows;  // tolerate the trailing newline only
  m.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < rows; ++r) {
    const long line_no = static_cast<long>(r + 2);
    const auto cells = split(lines[r + 1]);
    if (cells.size() != d + 2)
      throw ParseError("expected " + std::to_string(d + 2) + " cells, found " + std::to_string(cells.size()), line_no);
    if (cells[0].empty()) throw ParseError("empty sample_id", line_no);
    m.sample_ids.emplace_back(cells[0]);
    int label = 0;
    const auto lr = std::from_chars(cells[1].data(), cells[1].data() + cells[1].size(), label);
    if (lr.ec != std::errc() || lr.ptr != cells[1].data() + cells[1].size() || label < 0)
      throw ParseError("label '" + std::string(cells[1]) + "' is not a non-negative integer", line_no);
    m.labels.push_back(label);
    for (std::size_t k = 0; k < d; ++k) {
      const std::string_view c = cells[k + 2];
      double v = 0;
      const auto vr = std::from_chars(c.data(), c.data() + c.size(), v);
      if (c.empty() || vr.ec != std::errc() || vr.ptr != c.data() + c.size())
        throw ParseError("column '" + m.names[k] + "': '" + std::string(c) + "' is not a number", line_no);
      m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = v;
    }
  }
  return m;
}

void features_save(const FeatureMatrix& m, const std::filesystem::path& path, const FeaturesMeta& meta) {
  write_file(path, features_to_csv(m));
  nlohmann::json j{{"schema_version", kFeaturesSchemaVersion},
                   {"config_hash", meta.config_hash},
                   {"class_names", meta.class_names},
                   {"rows", m.rows()},
                   {"columns", m.cols()}};
  write_file(meta_path(path), j.dump(2) + "\n");
}

FeatureMatrix features_load(const std::filesystem::path& path) {
  features_meta_load(path);
  return features_from_csv(read_file(path));
}

FeaturesMeta features_meta_load(const std::filesystem::path& csv_path) {
  FeaturesMeta meta;
  const auto p = meta_path(csv_path);
  if (!std::filesystem::exists(p)) return meta;
  try {
    const auto j = nlohmann::json::parse(read_file(p));
    meta.schema_version = j.at("schema_version").get<int>();
    if (meta.schema_version != kFeaturesSchemaVersion)
      throw VersionError("features schema_version " + std::to_string(meta.schema_version) + ", expected " +
                         std::to_string(kFeaturesSchemaVersion));
    meta.config_hash = j.at("config_hash").get<std::string>();
    meta.class_names = j.at("class_names").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("features metadata " + p.string() + ": " + e.what());
  }
  return meta;
}

void check_dictionary(const std::vector<std::string>& names) {
  if (names.empty()) throw DictionaryMismatch("no feature columns");
  static const std::vector<std::string> canonical = feature_names();
  static const std::map<std::string, int> position = [] {
    std::map<std::string, int> p;
    for (int i = 0; i < static_cast<int>(canonical.size()); ++i) p[canonical[static_cast<std::size_t>(i)]] = i;
    return p;
  }();

  for (const char* prefix : {"pca.", "kpca.", "sae.", "ae."}) {
    const std::string pre(prefix);
    if (names[0].rfind(pre, 0) != 0) continue;
    for (std::size_t i = 0; i < names.size(); ++i) {
      char expect[32];
      std::snprintf(expect, sizeof expect, "%s%03zu", prefix, i);
      if (names[i] != expect)
        throw DictionaryMismatch("column " + std::to_string(i + 3) + " is '" + names[i] + "', expected '" + expect + "'");
    }
    return;
  }
  int last = -1;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto it = position.find(names[i]);
    if (it == position.end())
      throw DictionaryMismatch("column " + std::to_string(i + 3) + " '" + names[i] + "' is not a canonical feature");
    if (it->second <= last)
      throw DictionaryMismatch("column " + std::to_string(i + 3) + " '" + names[i] + "' is out of canonical order");
    last = it->second;
  }
}

}  // namespace leafpipe
