// synthref: generate synthetic reference ladders, score candidates against
// them, and meta-evaluate the scores against human judgments.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "synthref/config.hpp"
#include "synthref/errors.hpp"
#include "synthref/pipeline.hpp"

namespace {

using json = nlohmann::json;

struct Flags {
  std::string config;
  std::optional<std::string> backend, model, variant, cache_dir, out, level, dataset, dataset_path,
      contexts_path, dimensions, endpoint, correlation;
  std::optional<long long> n, n_samples, seed, concurrency;
  bool impute_zero = false;
  bool allow_missing_text = false;

  void add_to(CLI::App& app) {
    app.add_option("--config", config, "TOML-style key = value config file");
    app.add_option("--backend", backend, "mock | http");
    app.add_option("--model", model, "Model name sent to the backend");
    app.add_option("--endpoint", endpoint, "API base URL for the http backend");
    app.add_option("--n", n, "Ladder size (>= 2)");
    app.add_option("--variant", variant, "bws_prob | yesno_prob | sampled | geval_baseline");
    app.add_option("--n-samples", n_samples, "Draws per rung for the sampled variant");
    app.add_option("--seed", seed, "Root seed");
    app.add_option("--concurrency", concurrency, "Worker count");
    app.add_option("--cache-dir", cache_dir, "Cache directory");
    app.add_option("--out", out, "Output directory");
    app.add_option("--dataset", dataset, "summeval | topicalchat | hanna | canonical");
    app.add_option("--dataset-path", dataset_path, "Dataset file");
    app.add_option("--contexts-path", contexts_path, "Contexts sidecar (canonical datasets)");
    app.add_option("--dimensions", dimensions, "Comma-separated dimension names");
    app.add_option("--level", level, "Comma-separated levels: system, sample, summary");
    app.add_option("--correlation", correlation, "spearman | kendall");
    app.add_flag("--impute-zero", impute_zero, "Count undefined per-document correlations as 0");
    app.add_flag("--allow-missing-text", allow_missing_text,
                 "Accept SummEval rows without article text");
  }

  synthref::RunConfig resolve() const {
    synthref::RunConfig c = config.empty() ? synthref::RunConfig{} : synthref::load_config(config);
    auto set = [&](const char* key, const auto& v) {
      if (v) synthref::apply_setting(c, key, json(*v));
    };
    set("backend", backend);
    set("model", model);
    set("endpoint", endpoint);
    set("n", n);
    set("variant", variant);
    set("n_samples", n_samples);
    set("seed", seed);
    set("concurrency", concurrency);
    set("cache_dir", cache_dir);
    set("out", out);
    set("dataset", dataset);
    set("dataset_path", dataset_path);
    set("contexts_path", contexts_path);
    set("dimensions", dimensions);
    set("levels", level);
    set("correlation", correlation);
    if (impute_zero) c.impute_zero = true;
    if (allow_missing_text) c.allow_missing_text = true;
    return c;
  }
};

int report(const synthref::CommandResult& r) {
  for (const auto& p : r.outputs) std::cerr << "wrote " << p.string() << "\n";
  if (!r.failures.empty()) std::cerr << r.failures.size() << " item(s) failed\n";
  return r.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reference-free text evaluation with synthetic reference ladders"};
  app.require_subcommand(1);
  Flags flags;
  flags.add_to(app);

  auto* generate = app.add_subcommand("generate", "Build a reference ladder per (context, dimension)");
  auto* score = app.add_subcommand("score", "Score every candidate against its ladders");
  auto* metaeval = app.add_subcommand("metaeval", "Correlate scores with human judgments");
  auto* axis = app.add_subcommand("axis-corr", "Correlate human annotation axes with each other");
  auto* validate = app.add_subcommand("validate", "Check an ingested dataset");
  for (auto* sub : {generate, score, metaeval, axis, validate}) {
    sub->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const synthref::RunConfig config = flags.resolve();
    if (generate->parsed() || score->parsed()) {
      config.check();
      auto backend = synthref::make_backend(config);
      return report(generate->parsed() ? synthref::cmd_generate(config, *backend, std::cerr)
                                       : synthref::cmd_score(config, *backend, std::cerr));
    }
    if (metaeval->parsed()) {
      const auto r = synthref::cmd_metaeval(config, std::cout);
      return report(r);
    }
    if (axis->parsed()) return report(synthref::cmd_axis_corr(config, std::cout));
    return report(synthref::cmd_validate(config, std::cout));
  } catch (const synthref::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
