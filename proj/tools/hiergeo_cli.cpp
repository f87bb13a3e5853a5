#include "hiergeo/binary_io.hpp"
#include "hiergeo/diagnostics.hpp"
#include "hiergeo/inequality.hpp"
#include "hiergeo/pipeline.hpp"
#include "hiergeo/scene.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

using namespace hiergeo;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json_file(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    fail(Errc::config, path.string() + ": " + e.what());
  }
}

void emit(const json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  require(static_cast<bool>(out), Errc::io, "cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  require(static_cast<bool>(out), Errc::io, "write failed: " + path);
}

Taxonomy load_taxonomy(const fs::path& path) {
  const auto records = read_class_file(path);
  return Taxonomy::build(records);
}

// Taxonomy-derived sizes first, then whatever the user overrides.
ModelConfig model_config_for(const Taxonomy& taxonomy, const json& overrides) {
  json base = to_json(ModelConfig::for_taxonomy(taxonomy));
  if (!overrides.is_null()) {
    require(overrides.is_object(), Errc::config, "\"model\" must be an object");
    base.merge_patch(overrides);
  }
  auto config = model_config_from_json(base);
  config.validate();
  return config;
}

struct TrainArgs {
  std::string manifest, taxonomy, config, out, embeddings, val_manifest, output;
};

int run_train(const TrainArgs& a) {
  const auto taxonomy = load_taxonomy(a.taxonomy);
  json cfg = a.config.empty() ? json::object() : read_json_file(a.config);
  require(cfg.is_object(), Errc::config, "config must be a JSON object");
  const auto model_config = model_config_for(taxonomy, cfg.value("model", json()));
  const auto train_config = train_config_from_json(cfg.value("train", json::object()));

  std::optional<EmbeddingTable> table;
  TextFeatureSource source;
  source.dim = model_config.text_dim;
  if (!a.embeddings.empty()) {
    table = EmbeddingTable::load(a.embeddings);
    require(table->dim() == model_config.text_dim, Errc::dimension,
            "embedding table has dimension " + std::to_string(table->dim()) + ", model expects " +
                std::to_string(model_config.text_dim));
    source.table = &*table;
    source.stub_fallback = false;
  }

  const auto records = load_manifest(a.manifest, taxonomy);
  const auto result = train(records, taxonomy, model_config, train_config, source);
  save_checkpoint(a.out, result.checkpoint);

  json out{{"checkpoint", a.out},
           {"samples", records.size()},
           {"parameters", result.checkpoint.params.parameter_count()},
           {"train_config", to_json(train_config)},
           {"epochs", json::array()}};
  for (const auto& e : result.log) out["epochs"].push_back(to_json(e));
  if (!a.val_manifest.empty()) {
    const auto val = load_manifest(a.val_manifest, taxonomy);
    out["validation"] = to_json(evaluate(result.checkpoint, val, taxonomy, train_config.eval_mode));
  }
  emit(out, a.output);
  return 0;
}

struct EvalArgs {
  std::string checkpoint, manifest, taxonomy, mode = "codependent", output, predictions;
  std::size_t topk = 5;
};

int run_eval(const EvalArgs& a) {
  const auto checkpoint = load_checkpoint(a.checkpoint);
  Taxonomy taxonomy;
  if (!a.taxonomy.empty()) {
    taxonomy = load_taxonomy(a.taxonomy);
  } else {
    require(!checkpoint.config.classes.empty(), Errc::config,
            "checkpoint carries no class list; pass --taxonomy");
    taxonomy = Taxonomy::build(checkpoint.config.classes);
  }
  const auto records = load_manifest(a.manifest, taxonomy);
  const auto report = evaluate(checkpoint, records, taxonomy, parse_eval_mode(a.mode), a.topk);

  if (!a.predictions.empty()) {
    std::ofstream out(a.predictions);
    require(static_cast<bool>(out), Errc::io, "cannot open " + a.predictions + " for writing");
    for (std::size_t i = 0; i < records.size(); ++i) {
      json line{{"id", records[i].id}};
      for (std::size_t h = 0; h < kNumHierarchies; ++h) {
        const auto name = std::string(hierarchy_name(h));
        line[name] = taxonomy.name(h, report.predictions[i].path.ids[h]);
        line["true_" + name] = taxonomy.name(h, records[i].labels.ids[h]);
      }
      out << line.dump() << "\n";
    }
  }
  emit(to_json(report), a.output);
  return 0;
}

struct AnalyzeArgs {
  std::string manifest, lorenz_csv, output;
};

int run_analyze(const AnalyzeArgs& a) {
  const auto entries = read_manifest_entries(a.manifest);
  require(!entries.empty(), Errc::empty_input, a.manifest + ": no samples");

  json out{{"samples", entries.size()}};
  for (std::size_t h = 0; h < kNumHierarchies; ++h) {
    std::map<std::string, std::size_t> histogram;
    for (const auto& e : entries) {
      const std::array<const std::string*, kNumHierarchies> names{&e.names.city, &e.names.state, &e.names.country,
                                                                  &e.names.continent};
      histogram[*names[h]]++;
    }
    ClassCounts counts;
    for (const auto& [name, n] : histogram) counts.counts.push_back(static_cast<double>(n));
    const auto curve = lorenz_curve(counts);

    const std::string level(hierarchy_name(h));
    json j{{"classes", histogram.size()}, {"gini", gini(counts)}, {"hoover", hoover(counts)}, {"histogram", histogram}};
    if (!a.lorenz_csv.empty()) {
      const std::string path = a.lorenz_csv + "_" + level + ".csv";
      std::ofstream csv(path);
      require(static_cast<bool>(csv), Errc::io, "cannot open " + path + " for writing");
      csv.precision(17);
      csv << "population_share,sample_share\n";
      for (const auto& p : curve) csv << p.x << "," << p.y << "\n";
      j["lorenz_csv"] = path;
    }
    out[level] = j;
  }
  emit(out, a.output);
  return 0;
}

struct GradcheckArgs {
  std::string config, output;
  double eps = 1e-5;
  std::size_t points = 20;
  std::size_t batch = 3;
  std::uint64_t seed = 0;
};

int run_gradcheck(const GradcheckArgs& a) {
  ModelConfig config;
  config.feature_dim = 8;
  config.hierarchy_sizes = {2, 2, 2, 2};
  config.scene_dim = 3;
  config.text_dim = 4;
  if (!a.config.empty()) {
    json j = to_json(config);
    json file = read_json_file(a.config);
    j.merge_patch(file.contains("model") ? file["model"] : file);
    config = model_config_from_json(j);
  }
  const auto report = check_model_gradients(config, a.points, a.batch, a.eps, a.seed);
  json out = to_json(report);
  out["eps"] = a.eps;
  emit(out, a.output);
  return 0;
}

struct SynthArgs {
  std::size_t cities = 8, per_city = 64;
  std::size_t states = 0, countries = 0, continents = 0;
  double sigma = 0.1, val_ratio = 0.2;
  std::uint64_t seed = 0;
  Index feature_dim = 384, scene_dim = kDefaultSceneClasses;
  std::string out;
};

int run_synth(SynthArgs a) {
  require(a.cities >= 1, Errc::config, "--cities must be positive");
  require(a.val_ratio > 0.0 && a.val_ratio < 1.0, Errc::config, "--val-ratio must lie in (0, 1)");
  const auto half = [](std::size_t n) { return (n + 1) / 2; };
  if (a.states == 0) a.states = half(a.cities);
  if (a.countries == 0) a.countries = half(a.states);
  if (a.continents == 0) a.continents = std::min<std::size_t>(a.countries, 6);
  require(a.states <= a.cities && a.countries <= a.states && a.continents <= a.countries, Errc::config,
          "each hierarchy needs at most as many classes as the finer one");

  const auto taxonomy = synthetic_taxonomy(a.cities, a.states, a.countries, a.continents);
  SynthConfig cfg;
  cfg.samples_per_city = a.per_city;
  cfg.noise_sigma = a.sigma;
  cfg.seed = a.seed;
  cfg.feature_dim = a.feature_dim;
  cfg.scene_dim = a.scene_dim;
  const auto records = generate_synthetic(taxonomy, cfg);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_class_file(dir / "taxonomy.tsv", taxonomy.records());
  write_features(dir / "features.hgft", records);

  std::map<std::string, std::size_t> index_of;
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto& ids = r.labels.ids;
    entries.push_back({r.id, "features.hgft", i,
                       {taxonomy.name(0, ids[0]), taxonomy.name(1, ids[1]), taxonomy.name(2, ids[2]),
                        taxonomy.name(3, ids[3])},
                       r.scene});
    index_of[r.id] = i;
  }
  write_manifest(dir / "manifest.jsonl", entries);

  const auto split = stratified_split(records, 1.0 - a.val_ratio, a.seed);
  const auto subset = [&](const std::vector<FeatureRecord>& side) {
    std::vector<ManifestEntry> out;
    for (const auto& r : side) out.push_back(entries[index_of.at(r.id)]);
    return out;
  };
  write_manifest(dir / "train.jsonl", subset(split.train));
  write_manifest(dir / "val.jsonl", subset(split.val));

  emit(json{{"out", dir.string()},
            {"classes", {{"city", a.cities}, {"state", a.states}, {"country", a.countries}, {"continent", a.continents}}},
            {"samples", records.size()},
            {"train", split.train.size()},
            {"val", split.val.size()},
            {"files", {"taxonomy.tsv", "features.hgft", "manifest.jsonl", "train.jsonl", "val.jsonl"}}},
       "");
  return 0;
}

int report_error(std::string_view kind, const std::string& message, int code) {
  std::cerr << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical geolocalization head: training, evaluation and dataset analytics"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a manifest");
  train_cmd->add_option("--manifest", train_args.manifest, "Training manifest (JSONL)")->required();
  train_cmd->add_option("--taxonomy", train_args.taxonomy, "Class definition file (TSV)")->required();
  train_cmd->add_option("--config", train_args.config, "JSON file with optional \"model\" and \"train\" objects");
  train_cmd->add_option("--out", train_args.out, "Checkpoint path")->required();
  train_cmd->add_option("--embeddings", train_args.embeddings, "Label embedding table; default is the stub embedder");
  train_cmd->add_option("--val-manifest", train_args.val_manifest, "Evaluate on this manifest after training");
  train_cmd->add_option("--output", train_args.output, "Write the JSON summary here instead of stdout");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint)->required();
  eval_cmd->add_option("--manifest", eval_args.manifest)->required();
  eval_cmd->add_option("--mode", eval_args.mode)
      ->check(CLI::IsMember({"none", "independent", "codependent"}))
      ->capture_default_str();
  eval_cmd->add_option("--topk", eval_args.topk)->check(CLI::PositiveNumber)->capture_default_str();
  eval_cmd->add_option("--taxonomy", eval_args.taxonomy, "Defaults to the class list stored in the checkpoint");
  eval_cmd->add_option("--predictions", eval_args.predictions, "Write per-sample predictions (JSONL)");
  eval_cmd->add_option("--output", eval_args.output);

  AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "Class histograms and inequality metrics");
  analyze_cmd->add_option("--manifest", analyze_args.manifest)->required();
  analyze_cmd->add_option("--lorenz-csv", analyze_args.lorenz_csv, "Write <prefix>_<hierarchy>.csv Lorenz curves");
  analyze_cmd->add_option("--output", analyze_args.output);

  GradcheckArgs grad_args;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the training gradient");
  grad_cmd->add_option("--config", grad_args.config, "Model config JSON; defaults to a small toy model");
  grad_cmd->add_option("--eps", grad_args.eps)->check(CLI::PositiveNumber)->capture_default_str();
  grad_cmd->add_option("--points", grad_args.points)->check(CLI::PositiveNumber)->capture_default_str();
  grad_cmd->add_option("--batch", grad_args.batch)->check(CLI::PositiveNumber)->capture_default_str();
  grad_cmd->add_option("--seed", grad_args.seed)->capture_default_str();
  grad_cmd->add_option("--output", grad_args.output);

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("--cities", synth_args.cities)->capture_default_str();
  synth_cmd->add_option("--states", synth_args.states, "Default: half the cities, rounded up");
  synth_cmd->add_option("--countries", synth_args.countries, "Default: half the states, rounded up");
  synth_cmd->add_option("--continents", synth_args.continents, "Default: min(countries, 6)");
  synth_cmd->add_option("--per-city", synth_args.per_city)->capture_default_str();
  synth_cmd->add_option("--sigma", synth_args.sigma)->capture_default_str();
  synth_cmd->add_option("--seed", synth_args.seed)->capture_default_str();
  synth_cmd->add_option("--feature-dim", synth_args.feature_dim)->capture_default_str();
  synth_cmd->add_option("--scene-dim", synth_args.scene_dim)->capture_default_str();
  synth_cmd->add_option("--val-ratio", synth_args.val_ratio)->capture_default_str();
  synth_cmd->add_option("--out", synth_args.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage_error", e.what(), 2);
  }

  try {
    if (*train_cmd) return run_train(train_args);
    if (*eval_cmd) return run_eval(eval_args);
    if (*analyze_cmd) return run_analyze(analyze_args);
    if (*grad_cmd) return run_gradcheck(grad_args);
    if (*synth_cmd) return run_synth(synth_args);
  } catch (const Error& e) {
    return report_error(to_string(e.code()), e.what(), 1);
  } catch (const std::exception& e) {
    return report_error("internal_error", e.what(), 1);
  }
  return 1;
}
