#include "peerkt/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_map>

#include "json.hpp"
#include "peerkt/error.hpp"
#include "peerkt/rng.hpp"

namespace peerkt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kRequiredColumns[] = {"student", "question", "concept", "correct"};

fs::path resolve_against(const fs::path& base_dir, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

DatasetManifest DatasetManifest::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadConfig, "manifest " + path.string() + ": " + e.what());
  }
  const auto dir = path.parent_path();
  DatasetManifest m;
  try {
    m.source_id = doc.at("source_id").get<std::string>();
    m.interactions_path = resolve_against(dir, doc.at("interactions_path").get<std::string>());
    m.column_map = doc.at("columns").get<std::map<std::string, std::string>>();
    if (doc.contains("kc_graph_path") && !doc["kc_graph_path"].is_null()) {
      m.kc_graph_path = resolve_against(dir, doc["kc_graph_path"].get<std::string>());
    }
    if (doc.contains("delimiter")) {
      const auto d = doc["delimiter"].get<std::string>();
      if (d.size() != 1) throw Error(ErrorCode::BadConfig, "delimiter must be one character");
      m.delimiter = d[0];
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadConfig, "manifest " + path.string() + ": " + e.what());
  }
  for (const auto* col : kRequiredColumns) {
    if (!m.column_map.contains(col)) {
      throw Error(ErrorCode::MissingColumn,
                  "manifest " + path.string() + " maps no column for '" + col + "'");
    }
  }
  return m;
}

void DatasetManifest::save(const fs::path& path) const {
  // Paths are stored relative to the manifest so a directory can be moved.
  auto portable = [&](const fs::path& p) {
    const auto rel = p.lexically_normal().lexically_relative(path.parent_path().lexically_normal());
    return rel.empty() ? p.string() : rel.generic_string();
  };
  json doc;
  doc["source_id"] = source_id;
  doc["interactions_path"] = portable(interactions_path);
  doc["columns"] = column_map;
  if (kc_graph_path) doc["kc_graph_path"] = portable(*kc_graph_path);
  doc["delimiter"] = std::string(1, delimiter);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::UnreadableFile, "cannot write manifest " + path.string());
  out << doc.dump(2) << '\n';
}

std::optional<bool> coerce_correct(std::string_view text) {
  if (text == "1" || text == "true" || text == "TRUE" || text == "True") return true;
  if (text == "0" || text == "false" || text == "FALSE" || text == "False") return false;
  return std::nullopt;
}

std::vector<std::string> split_delimited(std::string_view line, char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

LoadReport load_interactions(const DatasetManifest& manifest) {
  std::ifstream in(manifest.interactions_path);
  if (!in) {
    throw Error(ErrorCode::UnreadableFile,
                "cannot read interactions file " + manifest.interactions_path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::UnreadableFile,
                "interactions file " + manifest.interactions_path.string() + " is empty");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_delimited(line, manifest.delimiter);

  auto column_index = [&](const std::string& canonical) -> std::optional<std::size_t> {
    const auto it = manifest.column_map.find(canonical);
    if (it == manifest.column_map.end()) return std::nullopt;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == it->second) return i;
    }
    return std::nullopt;
  };

  std::size_t idx[4];
  for (int c = 0; c < 4; ++c) {
    const auto found = column_index(kRequiredColumns[c]);
    if (!found) {
      const auto it = manifest.column_map.find(kRequiredColumns[c]);
      const std::string name = it == manifest.column_map.end() ? kRequiredColumns[c] : it->second;
      throw Error(ErrorCode::MissingColumn, "column '" + name + "' (" + kRequiredColumns[c] +
                                                ") not found in " +
                                                manifest.interactions_path.string());
    }
    idx[c] = *found;
  }
  std::optional<std::size_t> order_col;
  if (manifest.column_map.contains("order")) {
    order_col = column_index("order");
    if (!order_col) {
      throw Error(ErrorCode::MissingColumn, "order column '" + manifest.column_map.at("order") +
                                                "' not found in " +
                                                manifest.interactions_path.string());
    }
  }

  struct Row {
    Interaction interaction;
    double order_key;
    std::size_t row;
  };
  std::vector<std::string> student_order;
  std::unordered_map<std::string, std::vector<Row>> rows_by_student;

  LoadReport report;
  const std::size_t needed = std::max({idx[0], idx[1], idx[2], idx[3], order_col.value_or(0)}) + 1;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++report.rows_read;
    const auto fields = split_delimited(line, manifest.delimiter);
    if (fields.size() < needed) {
      ++report.rows_skipped;
      continue;
    }
    const auto correct = coerce_correct(trim(fields[idx[3]]));
    if (!correct) {
      ++report.rows_skipped;
      continue;
    }
    double order_key = static_cast<double>(report.rows_read);
    if (order_col) {
      const auto text = trim(fields[*order_col]);
      const char* first = text.data();
      const auto res = std::from_chars(first, first + text.size(), order_key);
      if (res.ec != std::errc() || res.ptr != first + text.size()) {
        ++report.rows_skipped;
        continue;
      }
    }
    Interaction i;
    i.student_id = trim(fields[idx[0]]);
    i.question_id = trim(fields[idx[1]]);
    i.concept_label = trim(fields[idx[2]]);
    i.source_id = manifest.source_id;
    i.correct = *correct;
    if (i.student_id.empty() || i.question_id.empty()) {
      ++report.rows_skipped;
      continue;
    }
    auto [it, inserted] = rows_by_student.try_emplace(i.student_id);
    if (inserted) student_order.push_back(i.student_id);
    it->second.push_back(Row{std::move(i), order_key, report.rows_read});
  }

  for (const auto& student : student_order) {
    auto& rows = rows_by_student[student];
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return a.order_key < b.order_key;
    });
    std::int64_t next = 0;
    for (auto& r : rows) {
      r.interaction.order_index = next++;
      report.interactions.push_back(std::move(r.interaction));
    }
  }
  return report;
}

std::vector<EvalSequence> segment(const std::vector<Interaction>& history, std::size_t length) {
  std::vector<EvalSequence> out;
  if (length < 2) throw Error(ErrorCode::BadConfig, "segment length must be >= 2");
  std::size_t w = 0;
  for (std::size_t start = 0; start < history.size(); start += length, ++w) {
    const std::size_t end = std::min(history.size(), start + length);
    if (end - start < 2) break;
    EvalSequence seq;
    seq.student_id = history[start].student_id;
    seq.id = qualify(history[start].source_id, seq.student_id) + "#" + std::to_string(w);
    seq.window.assign(history.begin() + static_cast<std::ptrdiff_t>(start),
                      history.begin() + static_cast<std::ptrdiff_t>(end));
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<EvalSequence> segment_all(const std::vector<Interaction>& interactions,
                                      std::size_t length) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<Interaction>> grouped;
  for (const auto& i : interactions) {
    const auto key = qualify(i.source_id, i.student_id);
    auto [it, inserted] = grouped.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(i);
  }
  std::vector<EvalSequence> out;
  for (const auto& key : order) {
    auto& hist = grouped[key];
    std::stable_sort(hist.begin(), hist.end(), [](const Interaction& a, const Interaction& b) {
      return a.order_index < b.order_index;
    });
    auto seqs = segment(hist, length);
    std::move(seqs.begin(), seqs.end(), std::back_inserter(out));
  }
  return out;
}

Split split_student_disjoint(const std::vector<EvalSequence>& sequences, std::size_t n_test,
                             std::uint64_t seed) {
  if (n_test > sequences.size()) {
    throw Error(ErrorCode::InsufficientData,
                "requested " + std::to_string(n_test) + " test sequences but only " +
                    std::to_string(sequences.size()) + " exist");
  }
  Rng rng(seed);
  std::vector<std::size_t> idx(sequences.size());
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates: the first n_test slots become the sample.
  for (std::size_t i = 0; i < n_test; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<std::size_t> drawn(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::sort(drawn.begin(), drawn.end());

  auto owner = [](const EvalSequence& s) {
    return qualify(s.window.front().source_id, s.student_id);
  };
  std::set<std::string> test_students;
  for (auto i : drawn) test_students.insert(owner(sequences[i]));

  Split split;
  split.seed = seed;
  for (auto i : drawn) split.sampled.push_back(sequences[i]);
  for (const auto& s : sequences) {
    (test_students.contains(owner(s)) ? split.test : split.train).push_back(s);
  }
  return split;
}

}  // namespace peerkt
