#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "synthref/core.hpp"

namespace synthref {

enum class PromptPurpose { extreme, recursive, predict_bws, predict_yesno, direct_score };

std::string_view to_string(PromptPurpose purpose);

/// Benchmark family whose templates serve a dataset kind
/// (summarization -> "summeval", dialog -> "topicalchat", story -> "hanna").
std::string_view template_family(DatasetKind kind);

/// Placeholder holding the source item in a family's templates
/// ("article", "context" or "story_prompt").
std::string_view context_placeholder(DatasetKind kind);

struct TemplateId {
  DatasetKind kind = DatasetKind::summarization;
  PromptPurpose purpose = PromptPurpose::extreme;
  std::string variant = "default";

  /// "summeval.extreme", "summeval.predict_bws.inline", ...
  std::string str() const;
  static TemplateId parse(std::string_view text);

  auto operator<=>(const TemplateId&) const = default;
};

using Substitutions = std::map<std::string, std::string, std::less<>>;

class PromptTemplate {
 public:
  /// Parses `{{ name }}` placeholders out of `body` and checks them against
  /// the declared name -> occurrence-count map. Throws ValidationError on any
  /// mismatch or on a malformed `{{` sequence.
  static PromptTemplate make(TemplateId id, std::string body,
                             const std::map<std::string, int>& declared);

  const TemplateId& id() const { return id_; }
  const std::string& body() const { return body_; }
  /// Placeholder name -> number of occurrences in the body.
  const std::map<std::string, int>& placeholders() const { return placeholders_; }

  /// Literal substitution. `subs` must name exactly the placeholder set, with
  /// non-empty values; otherwise RenderError naming the offending key.
  std::string render(const Substitutions& subs) const;

  /// SHA-256 of the raw body.
  std::string hash() const;

 private:
  PromptTemplate() = default;

  TemplateId id_;
  std::string body_;
  std::map<std::string, int> placeholders_;
};

class PromptRegistry {
 public:
  /// Manifest layout: {"templates": [{"id", "file", "placeholders": {name: count}}]}
  /// with files resolved relative to the manifest.
  static PromptRegistry load(const std::vector<std::filesystem::path>& manifests);

  /// The twelve benchmark templates ({summeval, topicalchat, hanna} x
  /// {extreme, recursive, predict_bws, predict_yesno}).
  static PromptRegistry load_shipped(const std::filesystem::path& asset_dir);
  /// Shipped templates plus variants (the inline bws wording and the
  /// direct-score baseline templates).
  static PromptRegistry load_shipped_with_variants(const std::filesystem::path& asset_dir);

  std::size_t size() const { return templates_.size(); }
  std::vector<TemplateId> ids() const;
  bool contains(const TemplateId& id) const { return templates_.contains(id); }

  /// Throws ValidationError for an unregistered id.
  const PromptTemplate& get(const TemplateId& id) const;

  std::string render(const TemplateId& id, const Substitutions& subs) const;

  /// Renders with the subset of `available` the template declares. A missing
  /// value is a RenderError; unused entries are ignored.
  std::string render_from(const TemplateId& id, const Substitutions& available) const;

  std::string template_hash(const TemplateId& id) const { return get(id).hash(); }

 private:
  std::map<TemplateId, PromptTemplate> templates_;
};

/// Asset root: $SYNTHREF_ASSETS if set, else the directory baked in at build.
std::filesystem::path default_asset_dir();

/// Dimension descriptions shipped per benchmark family.
struct DimensionSet {
  std::string dataset;
  DatasetKind kind = DatasetKind::summarization;
  std::vector<QualityDimension> dimensions;

  const QualityDimension& get(std::string_view name) const;
  std::vector<std::string> names() const;
};

DimensionSet load_dimensions(const std::filesystem::path& file);
DimensionSet load_shipped_dimensions(const std::filesystem::path& asset_dir,
                                     std::string_view dataset);

}  // namespace synthref
