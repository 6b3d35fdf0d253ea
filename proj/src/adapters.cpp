#include "synthref/adapters.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "synthref/errors.hpp"

namespace synthref {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

std::string locator(const fs::path& path, std::size_t line) {
  return path.filename().string() + ":" + std::to_string(line);
}

const json& field(const json& obj, const char* name, const std::string& where) {
  if (!obj.is_object() || !obj.contains(name)) {
    throw SchemaError(where + ": missing field '" + name + "'");
  }
  return obj.at(name);
}

std::string string_field(const json& obj, const char* name, const std::string& where) {
  const auto& v = field(obj, name, where);
  if (!v.is_string()) throw SchemaError(where + ": field '" + name + "' is not a string");
  return v.get<std::string>();
}

double number(const json& v, const std::string& where, const std::string& name) {
  if (!v.is_number()) throw SchemaError(where + ": field '" + name + "' is not a number");
  return v.get<double>();
}

// Mean of a list of annotator scores, or one of them.
double aggregate(const std::vector<double>& scores, const IngestOptions& options,
                 const std::string& where, const std::string& name) {
  if (scores.empty()) throw SchemaError(where + ": no scores for '" + name + "'");
  if (options.annotator_index) {
    const int i = *options.annotator_index;
    if (i < 0 || i >= static_cast<int>(scores.size())) {
      throw SchemaError(where + ": annotator " + std::to_string(i) + " absent for '" + name +
                        "'");
    }
    return scores[static_cast<std::size_t>(i)];
  }
  double sum = 0.0;
  for (double s : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

// Lines of a JSONL file paired with their 1-based numbers; blank lines skipped.
std::vector<std::pair<std::size_t, json>> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path.string());
  std::vector<std::pair<std::size_t, json>> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.emplace_back(n, json::parse(line));
    } catch (const json::parse_error& e) {
      throw SchemaError(locator(path, n) + ": " + e.what());
    }
  }
  return out;
}

// Accumulates contexts and candidates in first-seen order.
class Builder {
 public:
  Builder(std::string name, DatasetKind kind) {
    ds_.name = std::move(name);
    ds_.kind = kind;
  }

  void context(const std::string& id, const std::string& text) {
    if (context_ids_.insert(id).second) ds_.contexts.push_back({ds_.kind, id, text});
  }

  void candidate(const std::string& context_id, const std::string& system,
                 const std::string& text) {
    if (candidate_keys_.insert({context_id, system}).second) {
      ds_.candidates.push_back({context_id, {system, text}});
    }
  }

  void annotation(const std::string& context_id, const std::string& system,
                  const std::string& dimension, double score) {
    ds_.annotations.push_back({context_id, system, dimension, score});
  }

  Dataset finish() { return std::move(ds_); }

 private:
  Dataset ds_;
  std::set<std::string> context_ids_;
  std::set<std::pair<std::string, std::string>> candidate_keys_;
};

}  // namespace

Dataset ingest_summeval(const fs::path& path, const IngestOptions& options) {
  static const char* kDims[] = {"coherence", "consistency", "fluency", "relevance"};
  Builder b("summeval", DatasetKind::summarization);
  for (const auto& [n, obj] : read_jsonl(path)) {
    const std::string where = locator(path, n);
    const std::string id = string_field(obj, "id", where);
    const std::string system = string_field(obj, "model_id", where);
    const std::string decoded = string_field(obj, "decoded", where);
    std::string text;
    if (obj.contains("text")) {
      text = string_field(obj, "text", where);
    } else if (!options.allow_missing_text) {
      throw SchemaError(where + ": missing field 'text' (pair the annotations with source "
                                "articles, or allow missing text)");
    }
    const auto& experts = field(obj, "expert_annotations", where);
    if (!experts.is_array() || experts.empty()) {
      throw SchemaError(where + ": field 'expert_annotations' is not a non-empty list");
    }
    b.context(id, text);
    b.candidate(id, system, decoded);
    for (const char* dim : kDims) {
      std::vector<double> scores;
      for (const auto& e : experts) {
        scores.push_back(number(field(e, dim, where), where, dim));
      }
      b.annotation(id, system, dim, aggregate(scores, options, where, dim));
    }
  }
  return b.finish();
}

Dataset ingest_topicalchat(const fs::path& path, const IngestOptions& options) {
  static const std::pair<const char*, const char*> kDims[] = {
      {"naturalness", "Natural"}, {"engagingness", "Engaging"}, {"overall", "Overall"}};
  json root;
  try {
    root = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw SchemaError(path.filename().string() + ": " + e.what());
  }
  if (!root.is_array()) throw SchemaError(path.filename().string() + ": expected a list");
  Builder b("topicalchat", DatasetKind::dialog);
  for (std::size_t i = 0; i < root.size(); ++i) {
    const std::string where = path.filename().string() + "[" + std::to_string(i) + "]";
    const std::string id = "tc-" + std::to_string(i);
    b.context(id, string_field(root[i], "context", where));
    const auto& responses = field(root[i], "responses", where);
    if (!responses.is_array()) throw SchemaError(where + ": field 'responses' is not a list");
    for (std::size_t r = 0; r < responses.size(); ++r) {
      const std::string rwhere = where + ".responses[" + std::to_string(r) + "]";
      const auto& resp = responses[r];
      const std::string system = string_field(resp, "model", rwhere);
      b.candidate(id, system, string_field(resp, "response", rwhere));
      for (const auto& [dim, key] : kDims) {
        const auto& raw = field(resp, key, rwhere);
        std::vector<double> scores;
        if (raw.is_array()) {
          for (const auto& v : raw) scores.push_back(number(v, rwhere, key));
        } else {
          scores.push_back(number(raw, rwhere, key));
        }
        b.annotation(id, system, dim, aggregate(scores, options, rwhere, key));
      }
    }
  }
  return b.finish();
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
      continue;
    }
    any = true;
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(cell));
      cell.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(cell));
      cell.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      cell += c;
    }
  }
  if (quoted) throw SchemaError("unterminated quoted CSV field");
  if (any || !cell.empty() || !row.empty()) {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

Dataset ingest_hanna(const fs::path& path, const IngestOptions& options) {
  static const std::pair<const char*, const char*> kDims[] = {
      {"coherence", "Coherence"}, {"surprise", "Surprise"}, {"complexity", "Complexity"}};
  const auto rows = parse_csv(read_file(path));
  if (rows.empty()) throw SchemaError(path.filename().string() + ": empty file");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < rows[0].size(); ++i) col[rows[0][i]] = i;
  auto need = [&](const char* name) {
    auto it = col.find(name);
    if (it == col.end()) {
      throw SchemaError(locator(path, 1) + ": missing column '" + std::string(name) + "'");
    }
    return it->second;
  };
  const std::size_t c_prompt = need("Prompt");
  const std::size_t c_story = need("Story");
  const std::size_t c_model = need("Model");
  std::vector<std::size_t> c_dims;
  for (const auto& [dim, key] : kDims) c_dims.push_back(need(key));

  // (prompt, model) -> story text and per-dimension annotator scores.
  struct Item {
    std::string story;
    std::vector<std::vector<double>> scores;
  };
  std::map<std::string, std::string> prompt_ids;
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, Item> items;
  Builder b("hanna", DatasetKind::story);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = path.filename().string() + " row " + std::to_string(r + 1);
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != rows[0].size()) {
      throw SchemaError(where + ": expected " + std::to_string(rows[0].size()) + " fields, got " +
                        std::to_string(row.size()));
    }
    const std::string& prompt = row[c_prompt];
    auto [pit, fresh] =
        prompt_ids.emplace(prompt, "hanna-" + std::to_string(prompt_ids.size()));
    if (fresh) b.context(pit->second, prompt);
    const std::pair<std::string, std::string> key{pit->second, row[c_model]};
    auto [it, added] = items.try_emplace(key);
    if (added) {
      order.push_back(key);
      it->second.story = row[c_story];
      it->second.scores.resize(c_dims.size());
    }
    for (std::size_t d = 0; d < c_dims.size(); ++d) {
      try {
        std::size_t used = 0;
        const std::string& cell = row[c_dims[d]];
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        it->second.scores[d].push_back(v);
      } catch (const std::exception&) {
        throw SchemaError(where + ": column '" + std::string(kDims[d].second) +
                          "' is not a number");
      }
    }
  }
  for (const auto& key : order) {
    const auto& item = items.at(key);
    b.candidate(key.first, key.second, item.story);
    for (std::size_t d = 0; d < c_dims.size(); ++d) {
      b.annotation(key.first, key.second, kDims[d].first,
                   aggregate(item.scores[d], options, key.first + "/" + key.second,
                             kDims[d].second));
    }
  }
  return b.finish();
}

void write_canonical(const Dataset& dataset, const fs::path& rows_path,
                     const fs::path& contexts_path) {
  std::map<std::pair<std::string, std::string>, const std::string*> texts;
  for (const auto& c : dataset.candidates) {
    texts[{c.context_id, c.output.system_id}] = &c.output.text;
  }
  std::ofstream ctx(contexts_path, std::ios::binary);
  for (const auto& c : dataset.contexts) {
    ctx << json{{"dataset", dataset.name},
                {"kind", to_string(c.kind)},
                {"context_id", c.id},
                {"text", c.text}}
               .dump()
        << '\n';
  }
  std::ofstream rows(rows_path, std::ios::binary);
  for (const auto& a : dataset.annotations) {
    auto it = texts.find({a.context_id, a.system_id});
    if (it == texts.end()) {
      throw ValidationError("annotation (" + a.context_id + ", " + a.system_id +
                            ") has no candidate text");
    }
    rows << json{{"context_id", a.context_id},
                 {"system_id", a.system_id},
                 {"dimension", a.dimension},
                 {"candidate", *it->second},
                 {"human_score", a.score}}
                .dump()
         << '\n';
  }
  if (!ctx || !rows) throw Error("failed writing canonical dataset");
}

Dataset ingest_canonical(const fs::path& rows_path, const fs::path& contexts_path) {
  std::optional<Builder> b;
  for (const auto& [n, obj] : read_jsonl(contexts_path)) {
    const std::string where = locator(contexts_path, n);
    const std::string name = string_field(obj, "dataset", where);
    const DatasetKind kind = dataset_kind_from_string(string_field(obj, "kind", where));
    if (!b) b.emplace(name, kind);
    b->context(string_field(obj, "context_id", where), string_field(obj, "text", where));
  }
  if (!b) throw SchemaError(contexts_path.filename().string() + ": no contexts");
  for (const auto& [n, obj] : read_jsonl(rows_path)) {
    const std::string where = locator(rows_path, n);
    const std::string ctx = string_field(obj, "context_id", where);
    const std::string sys = string_field(obj, "system_id", where);
    b->candidate(ctx, sys, string_field(obj, "candidate", where));
    b->annotation(ctx, sys, string_field(obj, "dimension", where),
                  number(field(obj, "human_score", where), where, "human_score"));
  }
  return b->finish();
}

}  // namespace synthref
