#include "synthref/pipeline.hpp"

#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <thread>

#include <json.hpp>

#include "synthref/adapters.hpp"
#include "synthref/cache.hpp"
#include "synthref/hashing.hpp"
#include "synthref/http_backend.hpp"
#include "synthref/metaeval.hpp"
#include "synthref/mock_backend.hpp"
#include "synthref/scorer.hpp"
#include "synthref/synthgen.hpp"

namespace synthref {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::unique_ptr<Backend> make_backend(const RunConfig& config) {
  if (config.backend == BackendKind::mock) {
    if (config.mock_table) {
      return std::make_unique<MockBackend>(
          MockBackend::from_file(*config.mock_table, config.concurrency));
    }
    return std::make_unique<MockBackend>(config.model, config.seed.value_or(0),
                                         config.concurrency);
  }
  HttpBackendOptions opts;
  opts.descriptor = {BackendKind::openai_compatible_http, config.model, config.endpoint,
                     config.concurrency};
  opts.api_style = config.api_style;
  opts.api_key_env = config.api_key_env;
  return std::make_unique<HttpBackend>(opts);
}

Dataset load_dataset(const RunConfig& config) {
  IngestOptions opts;
  opts.allow_missing_text = config.allow_missing_text;
  opts.annotator_index = config.annotator;
  if (config.dataset == "summeval") return ingest_summeval(config.dataset_path, opts);
  if (config.dataset == "topicalchat") return ingest_topicalchat(config.dataset_path, opts);
  if (config.dataset == "hanna") return ingest_hanna(config.dataset_path, opts);
  if (config.dataset == "canonical") {
    return ingest_canonical(config.dataset_path, config.contexts_path.value_or(fs::path()));
  }
  throw ConfigError("unknown dataset '" + config.dataset + "'");
}

namespace {

fs::path asset_dir(const RunConfig& config) {
  return config.asset_dir ? *config.asset_dir : default_asset_dir();
}

}  // namespace

DimensionSet resolve_dimensions(const RunConfig& config, const Dataset& dataset) {
  DimensionSet all = config.dimensions_file
                         ? load_dimensions(*config.dimensions_file)
                         : load_shipped_dimensions(asset_dir(config), template_family(dataset.kind));
  if (config.dimensions.empty()) return all;
  DimensionSet picked{all.dataset, all.kind, {}};
  for (const auto& name : config.dimensions) {
    try {
      picked.dimensions.push_back(all.get(name));
    } catch (const Error&) {
      throw ConfigError("dimension '" + name + "' is not defined for " + all.dataset);
    }
  }
  return picked;
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& f) {
  const std::size_t threads = std::min<std::size_t>(count, static_cast<std::size_t>(
                                                               std::max(workers, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) f(i);
    });
  }
}

namespace {

// Atomic replace so a crash never leaves a half-written export.
void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw Error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string failures_jsonl(const std::vector<ItemFailure>& failures) {
  std::string out;
  for (const auto& f : failures) out += json{{"item", f.item}, {"error", f.error}}.dump() + "\n";
  return out;
}

// Writes or clears the failure manifest so a clean rerun leaves none behind.
void record_failures(const fs::path& path, const std::vector<ItemFailure>& failures,
                     CommandResult& result) {
  if (failures.empty()) {
    fs::remove(path);
    return;
  }
  write_file(path, failures_jsonl(failures));
  result.outputs.push_back(path);
}

std::vector<json> read_jsonl_rows(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::vector<json> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw SchemaError(path.filename().string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return rows;
}

std::string item_name(std::initializer_list<std::string_view> parts) {
  std::string out;
  for (auto p : parts) {
    if (!out.empty()) out += '/';
    out += p;
  }
  return out;
}

}  // namespace

CommandResult cmd_generate(const RunConfig& config, Backend& backend, std::ostream& log) {
  config.check();
  const Dataset dataset = load_dataset(config);
  const DimensionSet dims = resolve_dimensions(config, dataset);
  const PromptRegistry prompts = PromptRegistry::load_shipped_with_variants(asset_dir(config));
  Cache cache(config.cache_dir);
  CachingBackend cached(backend, cache);

  const std::string extreme_hash = prompts.template_hash({dataset.kind, PromptPurpose::extreme});
  const std::string recursive_hash =
      prompts.template_hash({dataset.kind, PromptPurpose::recursive});

  struct Item {
    const EvaluationContext* ctx;
    const QualityDimension* dim;
  };
  std::vector<Item> items;
  for (const auto& ctx : dataset.contexts) {
    for (const auto& dim : dims.dimensions) items.push_back({&ctx, &dim});
  }

  std::vector<std::optional<std::string>> payloads(items.size());
  std::vector<std::optional<ItemFailure>> failed(items.size());
  std::mutex log_mutex;

  parallel_for(items.size(), config.concurrency, [&](std::size_t i) {
    const auto& [ctx, dim] = items[i];
    const std::string name = item_name({ctx->id, dim->name});
    try {
      const auto key = CacheKey::make(
          CacheNamespace::reference_set,
          {{"dataset", dataset.name},
           {"context_id", ctx->id},
           {"context_sha256", sha256_hex(ctx->text)},
           {"dimension", dim->name},
           {"dimension_sha256", sha256_hex(dim->description)},
           {"n", config.n},
           {"model", backend.descriptor().model_name},
           {"template_hashes", json::array({extreme_hash, recursive_hash})},
           {"temperature", config.temperature},
           {"top_p", config.top_p},
           {"max_new_tokens", config.max_new_tokens},
           {"seed", *config.seed}});
      if (auto hit = cache.get(key)) {
        payloads[i] = std::move(*hit);
        return;
      }
      GenerationSettings settings;
      settings.max_new_tokens = config.max_new_tokens;
      settings.sampling = {config.temperature, config.top_p, derive_seed(*config.seed, key.digest)};
      ReferenceGenerator gen(prompts, cached, settings);
      const auto set = gen.build_reference_set(*ctx, *dim, config.n);
      std::string payload;
      for (const auto& row : to_release_rows(set, dataset.name)) payload += row.dump() + "\n";
      cache.put(key, payload);
      payloads[i] = std::move(payload);
    } catch (const std::exception& e) {
      failed[i] = ItemFailure{name, e.what()};
      std::lock_guard lock(log_mutex);
      log << "generate " << name << " failed: " << e.what() << "\n";
    }
  });

  CommandResult result;
  result.items = items.size();
  std::string exported;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (payloads[i]) exported += *payloads[i];
    if (failed[i]) result.failures.push_back(*failed[i]);
  }
  const fs::path out = config.out / kReferencesFile;
  write_file(out, exported);
  result.outputs.push_back(out);
  record_failures(config.out / kGenerateFailuresFile, result.failures, result);
  log << "generate: " << items.size() - result.failures.size() << "/" << items.size()
      << " reference sets, " << cached.forwarded() << " backend calls\n";
  return result;
}

CommandResult cmd_score(const RunConfig& config, Backend& backend, std::ostream& log) {
  config.check();
  const Dataset dataset = load_dataset(config);
  const DimensionSet dims = resolve_dimensions(config, dataset);
  const PromptRegistry prompts = PromptRegistry::load_shipped_with_variants(asset_dir(config));
  Cache cache(config.cache_dir);
  CachingBackend cached(backend, cache);

  // Reference rows arrive grouped per set, in export order.
  std::map<std::pair<std::string, std::string>, SyntheticReferenceSet> refsets;
  {
    const auto rows = read_jsonl_rows(config.out / kReferencesFile);
    std::map<std::pair<std::string, std::string>, std::vector<json>> grouped;
    for (const auto& row : rows) {
      try {
        grouped[{row.at("context_id").get<std::string>(), row.at("dimension").get<std::string>()}]
            .push_back(row);
      } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed reference row: ") + e.what());
      }
    }
    for (const auto& [key, group] : grouped) refsets.emplace(key, from_release_rows(group));
  }

  struct Item {
    const Candidate* cand;
    const EvaluationContext* ctx;
    const QualityDimension* dim;
  };
  std::vector<Item> items;
  for (const auto& cand : dataset.candidates) {
    for (const auto& dim : dims.dimensions) {
      items.push_back({&cand, dataset.find_context(cand.context_id), &dim});
    }
  }

  std::vector<std::optional<std::string>> lines(items.size());
  std::vector<std::optional<ItemFailure>> failed(items.size());
  std::mutex log_mutex;

  parallel_for(items.size(), config.concurrency, [&](std::size_t i) {
    const auto& [cand, ctx, dim] = items[i];
    const std::string name = item_name({cand->context_id, cand->output.system_id, dim->name});
    try {
      if (ctx == nullptr) throw ValidationError("unknown context " + cand->context_id);
      auto it = refsets.find({ctx->id, dim->name});
      if (it == refsets.end()) {
        throw ValidationError("missing reference set for (" + ctx->id + ", " + dim->name + ")");
      }
      ScorerOptions opts;
      opts.variant = config.variant;
      opts.n_samples = config.n_samples;
      opts.similar_weight = config.similar_weight;
      opts.sampling = {config.temperature, config.top_p,
                       derive_seed(*config.seed, "score\x1f" + ctx->id + "\x1f" +
                                                     cand->output.system_id + "\x1f" + dim->name)};
      const Scorer scorer(prompts, cached, opts);
      const auto breakdown = scorer.score_candidate(*ctx, *dim, it->second, cand->output.text);
      json per_ref = json::array();
      for (const auto& j : breakdown.per_reference) {
        per_ref.push_back({{"score", j.score},
                           {"p_better", j.distribution.p_better()},
                           {"p_worse", j.distribution.p_worse()},
                           {"p_similar", j.distribution.p_similar()}});
      }
      lines[i] = json{{"context_id", ctx->id},
                      {"system_id", cand->output.system_id},
                      {"dimension", dim->name},
                      {"variant", to_string(breakdown.variant)},
                      {"n", it->second.n()},
                      {"score", breakdown.final},
                      {"per_reference", per_ref}}
                     .dump() +
                 "\n";
    } catch (const std::exception& e) {
      failed[i] = ItemFailure{name, e.what()};
      std::lock_guard lock(log_mutex);
      log << "score " << name << " failed: " << e.what() << "\n";
    }
  });

  CommandResult result;
  result.items = items.size();
  std::string exported;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (lines[i]) exported += *lines[i];
    if (failed[i]) result.failures.push_back(*failed[i]);
  }
  const fs::path out = config.out / kScoresFile;
  write_file(out, exported);
  result.outputs.push_back(out);
  record_failures(config.out / kScoreFailuresFile, result.failures, result);
  log << "score: " << items.size() - result.failures.size() << "/" << items.size()
      << " rows, " << cached.forwarded() << " backend calls\n";
  return result;
}

CommandResult cmd_metaeval(const RunConfig& config, std::ostream& log) {
  config.check();
  const Dataset dataset = load_dataset(config);
  const DimensionSet dims = resolve_dimensions(config, dataset);
  const auto names = dims.names();
  const std::set<std::string> wanted(names.begin(), names.end());

  using Key = std::tuple<std::string, std::string, std::string>;
  std::map<Key, double> predictions;
  for (const auto& row : read_jsonl_rows(config.out / kScoresFile)) {
    try {
      Key key{row.at("context_id").get<std::string>(), row.at("system_id").get<std::string>(),
              row.at("dimension").get<std::string>()};
      if (!wanted.contains(std::get<2>(key))) continue;
      predictions[key] = row.at("score").get<double>();
    } catch (const json::exception& e) {
      throw SchemaError(std::string("malformed score row: ") + e.what());
    }
  }
  std::map<Key, double> humans;
  for (const auto& a : dataset.annotations) {
    if (wanted.contains(a.dimension)) humans[{a.context_id, a.system_id, a.dimension}] = a.score;
  }

  CommandResult result;
  auto orphan = [&](const Key& k, const char* side) {
    result.failures.push_back({item_name({std::get<0>(k), std::get<1>(k), std::get<2>(k)}),
                               std::string("orphan key: no ") + side});
  };
  for (const auto& [k, v] : predictions) {
    if (!humans.contains(k)) orphan(k, "human annotation");
  }
  for (const auto& [k, v] : humans) {
    if (!predictions.contains(k)) orphan(k, "score row");
  }
  if (!result.failures.empty()) {
    log << "metaeval: " << result.failures.size() << " orphan keys\n";
    for (const auto& f : result.failures) log << "  " << f.item << ": " << f.error << "\n";
    return result;
  }

  MetaEvalOptions opts{dataset.name, config.correlation, config.impute_zero};
  std::vector<CorrelationReport> reports;
  json all = json::array();
  for (const auto& dim : names) {
    std::vector<MetaEvalRecord> records;
    for (const auto& [k, human] : humans) {
      if (std::get<2>(k) == dim) {
        records.push_back({std::get<0>(k), std::get<1>(k), dim, predictions.at(k), human});
      }
    }
    for (auto level : config.levels) {
      ++result.items;
      try {
        reports.push_back(evaluate_level(level, records, opts));
        all.push_back(report_to_json(reports.back()));
      } catch (const std::exception& e) {
        result.failures.push_back({item_name({dim, to_string(level)}), e.what()});
        log << "metaeval " << dim << "/" << to_string(level) << " failed: " << e.what() << "\n";
      }
    }
  }
  const fs::path js = config.out / kMetaevalJson;
  const fs::path csv = config.out / kMetaevalCsv;
  write_file(js, json{{"dataset", dataset.name}, {"reports", all}}.dump(2) + "\n");
  write_file(csv, reports_table_csv(reports, names));
  result.outputs = {js, csv};
  log << reports_table_csv(reports, names);
  return result;
}

CommandResult cmd_axis_corr(const RunConfig& config, std::ostream& log) {
  config.check();
  const Dataset dataset = load_dataset(config);
  const DimensionSet dims = resolve_dimensions(config, dataset);
  CommandResult result;
  result.items = 1;
  try {
    const auto matrix = axis_correlation_matrix(
        dataset.annotations, dims.names(),
        MetaEvalOptions{dataset.name, config.correlation, config.impute_zero});
    const fs::path csv = config.out / kAxisCsv;
    const fs::path txt = config.out / kAxisText;
    write_file(csv, axis_matrix_csv(matrix));
    write_file(txt, axis_matrix_text(matrix));
    result.outputs = {csv, txt};
    log << axis_matrix_text(matrix);
  } catch (const std::exception& e) {
    result.failures.push_back({"axis-corr", e.what()});
    log << "axis-corr failed: " << e.what() << "\n";
  }
  return result;
}

CommandResult cmd_validate(const RunConfig& config, std::ostream& log) {
  config.check();
  const Dataset dataset = load_dataset(config);
  // Validate against every defined dimension, not just the selected ones.
  RunConfig all = config;
  all.dimensions.clear();
  const DimensionSet dims = resolve_dimensions(all, dataset);
  const auto report = validate_dataset(dataset, dims.names());
  CommandResult result;
  result.items = dataset.contexts.size() + dataset.candidates.size() + dataset.annotations.size();
  for (const auto& issue : report.issues) {
    result.failures.push_back({issue.locator, issue.message});
    log << issue.locator << ": " << issue.message << "\n";
  }
  log << "validate: " << dataset.contexts.size() << " contexts, " << dataset.candidates.size()
      << " candidates, " << dataset.annotations.size() << " annotations, "
      << report.issues.size() << " issues\n";
  return result;
}

}  // namespace synthref
