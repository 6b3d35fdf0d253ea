#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "synthref/core.hpp"

namespace synthref {

struct IngestOptions {
  // SummEval's aligned annotation file ships without article text unless it
  // has been paired with the CNN/DM sources. Accept that, leaving text empty.
  bool allow_missing_text = false;
  // Use a single annotator's ratings instead of the per-item mean.
  std::optional<int> annotator_index;
};

/// SummEval `model_annotations.aligned.jsonl`: one line per (document,
/// system) with `id`, `model_id`, `decoded`, `expert_annotations` and,
/// once paired, `text`.
Dataset ingest_summeval(const std::filesystem::path& path, const IngestOptions& options = {});

/// USR TopicalChat release (`tc_usr_data.json`): a list of dialog contexts,
/// each with scored `responses`.
Dataset ingest_topicalchat(const std::filesystem::path& path, const IngestOptions& options = {});

/// HANNA `hanna_stories_annotations.csv`: one row per (story, annotator).
/// Stories are grouped by prompt.
Dataset ingest_hanna(const std::filesystem::path& path, const IngestOptions& options = {});

/// Canonical form: rows file with one object per (context, system,
/// dimension) plus a contexts sidecar keyed by context_id.
Dataset ingest_canonical(const std::filesystem::path& rows_path,
                         const std::filesystem::path& contexts_path);
void write_canonical(const Dataset& dataset, const std::filesystem::path& rows_path,
                     const std::filesystem::path& contexts_path);

/// Minimal RFC 4180 reader: quoted fields, doubled quotes, embedded newlines.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

std::string read_file(const std::filesystem::path& path);

}  // namespace synthref
