#include "synthref/prompts.hpp"

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "synthref/hashing.hpp"

#ifndef SYNTHREF_DEFAULT_ASSET_DIR
#define SYNTHREF_DEFAULT_ASSET_DIR "assets"
#endif

namespace synthref {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::regex& placeholder_pattern() {
  static const std::regex re(R"(\{\{\s*([A-Za-z_][A-Za-z0-9_]*)\s*\}\})");
  return re;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace

std::string_view to_string(PromptPurpose purpose) {
  switch (purpose) {
    case PromptPurpose::extreme:
      return "extreme";
    case PromptPurpose::recursive:
      return "recursive";
    case PromptPurpose::predict_bws:
      return "predict_bws";
    case PromptPurpose::predict_yesno:
      return "predict_yesno";
    case PromptPurpose::direct_score:
      return "direct_score";
  }
  return "unknown";
}

std::string_view template_family(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::summarization:
      return "summeval";
    case DatasetKind::dialog:
      return "topicalchat";
    case DatasetKind::story:
      return "hanna";
  }
  return "unknown";
}

std::string_view context_placeholder(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::summarization:
      return "article";
    case DatasetKind::dialog:
      return "context";
    case DatasetKind::story:
      return "story_prompt";
  }
  return "unknown";
}

std::string TemplateId::str() const {
  std::string out(template_family(kind));
  out += '.';
  out += to_string(purpose);
  if (variant != "default") {
    out += '.';
    out += variant;
  }
  return out;
}

TemplateId TemplateId::parse(std::string_view text) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : text) {
    if (c == '.') {
      parts.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  parts.push_back(current);
  if (parts.size() < 2 || parts.size() > 3) {
    throw ValidationError("malformed template id: " + std::string(text));
  }
  TemplateId id;
  if (parts[0] == "summeval") {
    id.kind = DatasetKind::summarization;
  } else if (parts[0] == "topicalchat") {
    id.kind = DatasetKind::dialog;
  } else if (parts[0] == "hanna") {
    id.kind = DatasetKind::story;
  } else {
    throw ValidationError("unknown template family: " + parts[0]);
  }
  static const std::pair<const char*, PromptPurpose> kPurposes[] = {
      {"extreme", PromptPurpose::extreme},
      {"recursive", PromptPurpose::recursive},
      {"predict_bws", PromptPurpose::predict_bws},
      {"predict_yesno", PromptPurpose::predict_yesno},
      {"direct_score", PromptPurpose::direct_score},
  };
  bool found = false;
  for (const auto& [name, purpose] : kPurposes) {
    if (parts[1] == name) {
      id.purpose = purpose;
      found = true;
    }
  }
  if (!found) throw ValidationError("unknown template purpose: " + parts[1]);
  if (parts.size() == 3) {
    if (parts[2].empty() || parts[2] == "default") {
      throw ValidationError("malformed template variant in " + std::string(text));
    }
    id.variant = parts[2];
  }
  return id;
}

// ---------------------------------------------------------------------------
// PromptTemplate

PromptTemplate PromptTemplate::make(TemplateId id, std::string body,
                                    const std::map<std::string, int>& declared) {
  std::map<std::string, int> found;
  std::size_t matched_opens = 0;
  for (std::sregex_iterator it(body.begin(), body.end(), placeholder_pattern()), end; it != end;
       ++it) {
    ++found[(*it)[1].str()];
    ++matched_opens;
  }
  std::size_t opens = 0;
  for (std::size_t pos = body.find("{{"); pos != std::string::npos; pos = body.find("{{", pos + 2)) {
    ++opens;
  }
  if (opens != matched_opens) {
    throw ValidationError("template " + id.str() + " contains a malformed placeholder");
  }
  if (found != declared) {
    std::string msg = "template " + id.str() + " placeholders do not match the manifest:";
    for (const auto& [name, count] : found) {
      auto it = declared.find(name);
      if (it == declared.end()) {
        msg += " undeclared '" + name + "';";
      } else if (it->second != count) {
        msg += " '" + name + "' occurs " + std::to_string(count) + "x, declared " +
               std::to_string(it->second) + "x;";
      }
    }
    for (const auto& [name, _] : declared) {
      if (!found.contains(name)) msg += " declared '" + name + "' absent from body;";
    }
    throw ValidationError(msg);
  }
  PromptTemplate t;
  t.id_ = std::move(id);
  t.body_ = std::move(body);
  t.placeholders_ = std::move(found);
  return t;
}

std::string PromptTemplate::render(const Substitutions& subs) const {
  for (const auto& [name, _] : placeholders_) {
    auto it = subs.find(name);
    if (it == subs.end()) {
      throw RenderError("template " + id_.str() + ": missing placeholder '" + name + "'");
    }
    if (it->second.empty()) {
      throw RenderError("template " + id_.str() + ": empty value for '" + name + "'");
    }
  }
  for (const auto& [name, _] : subs) {
    if (!placeholders_.contains(name)) {
      throw RenderError("template " + id_.str() + ": extra placeholder '" + name + "'");
    }
  }
  std::string out;
  out.reserve(body_.size() + 256);
  auto last = body_.cbegin();
  for (std::sregex_iterator it(body_.begin(), body_.end(), placeholder_pattern()), end; it != end;
       ++it) {
    const auto& m = *it;
    out.append(last, m[0].first);
    out.append(subs.find(m[1].str())->second);
    last = m[0].second;
  }
  out.append(last, body_.cend());
  return out;
}

std::string PromptTemplate::hash() const { return sha256_hex(body_); }

// ---------------------------------------------------------------------------
// PromptRegistry

PromptRegistry PromptRegistry::load(const std::vector<fs::path>& manifests) {
  PromptRegistry registry;
  for (const auto& manifest : manifests) {
    const json doc = read_json(manifest);
    const fs::path base = manifest.parent_path();
    try {
      for (const auto& entry : doc.at("templates")) {
        TemplateId id = TemplateId::parse(entry.at("id").get<std::string>());
        std::map<std::string, int> declared;
        for (const auto& [name, count] : entry.at("placeholders").items()) {
          declared[name] = count.get<int>();
        }
        auto tmpl = PromptTemplate::make(
            id, read_file(base / entry.at("file").get<std::string>()), declared);
        if (!registry.templates_.emplace(id, std::move(tmpl)).second) {
          throw ValidationError("template " + id.str() + " registered twice");
        }
      }
    } catch (const json::exception& e) {
      throw ValidationError("malformed manifest " + manifest.string() + ": " + e.what());
    }
  }
  return registry;
}

PromptRegistry PromptRegistry::load_shipped(const fs::path& asset_dir) {
  return load({asset_dir / "prompts" / "manifest.json"});
}

PromptRegistry PromptRegistry::load_shipped_with_variants(const fs::path& asset_dir) {
  return load({asset_dir / "prompts" / "manifest.json", asset_dir / "prompts" / "variants.json"});
}

std::vector<TemplateId> PromptRegistry::ids() const {
  std::vector<TemplateId> out;
  for (const auto& [id, _] : templates_) out.push_back(id);
  return out;
}

const PromptTemplate& PromptRegistry::get(const TemplateId& id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw ValidationError("unknown template " + id.str());
  return it->second;
}

std::string PromptRegistry::render(const TemplateId& id, const Substitutions& subs) const {
  return get(id).render(subs);
}

std::string PromptRegistry::render_from(const TemplateId& id,
                                        const Substitutions& available) const {
  const auto& tmpl = get(id);
  Substitutions subs;
  for (const auto& [name, _] : tmpl.placeholders()) {
    auto it = available.find(name);
    if (it == available.end()) {
      throw RenderError("template " + id.str() + ": missing placeholder '" + name + "'");
    }
    subs.emplace(name, it->second);
  }
  return tmpl.render(subs);
}

fs::path default_asset_dir() {
  if (const char* env = std::getenv("SYNTHREF_ASSETS"); env && *env) return fs::path(env);
  return fs::path(SYNTHREF_DEFAULT_ASSET_DIR);
}

// ---------------------------------------------------------------------------
// Dimensions

const QualityDimension& DimensionSet::get(std::string_view name) const {
  for (const auto& d : dimensions) {
    if (d.name == name) return d;
  }
  throw ValidationError("dimension '" + std::string(name) + "' is not configured for " + dataset);
}

std::vector<std::string> DimensionSet::names() const {
  std::vector<std::string> out;
  for (const auto& d : dimensions) out.push_back(d.name);
  return out;
}

DimensionSet load_dimensions(const fs::path& file) {
  const json doc = read_json(file);
  DimensionSet set;
  try {
    set.dataset = doc.at("dataset").get<std::string>();
    set.kind = dataset_kind_from_string(doc.at("kind").get<std::string>());
    for (const auto& d : doc.at("dimensions")) {
      QualityDimension dim{d.at("name").get<std::string>(), d.at("description").get<std::string>()};
      if (dim.name.empty() || dim.description.empty()) {
        throw ValidationError("dimension with empty name or description in " + file.string());
      }
      set.dimensions.push_back(std::move(dim));
    }
  } catch (const json::exception& e) {
    throw ValidationError("malformed dimension file " + file.string() + ": " + e.what());
  }
  return set;
}

DimensionSet load_shipped_dimensions(const fs::path& asset_dir, std::string_view dataset) {
  return load_dimensions(asset_dir / "dimensions" / (std::string(dataset) + ".json"));
}

}  // namespace synthref
