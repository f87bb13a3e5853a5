#include "hiergeo/binary_io.hpp"
#include "hiergeo/pipeline.hpp"

#include "test_util.hpp"
#include "toy.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <cstring>

using namespace hiergeo;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hiergeo_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<FeatureRecord> random_records(std::size_t n, Index dim, Rng& rng) {
  std::vector<FeatureRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureRecord r{"rec" + std::to_string(i), toy::gaussian(dim, rng), {{int(i), 1, 2, 3}}, {}};
    if (i % 2 == 0) {
      r.scene = std::vector<int>{1, 4, 4, int(i)};
    } else {
      r.scene = toy::simplex(16, rng);
    }
    out.push_back(std::move(r));
  }
  return out;
}

SynthConfig small_synth(std::uint64_t seed, std::size_t per_city = 16) {
  SynthConfig s;
  s.samples_per_city = per_city;
  s.noise_sigma = 0.1;
  s.seed = seed;
  s.feature_dim = 32;
  s.scene_dim = 4;
  return s;
}

ModelConfig small_model(const Taxonomy& tax, std::uint64_t seed) {
  ModelConfig c = ModelConfig::for_taxonomy(tax);
  c.feature_dim = 32;
  c.scene_dim = 4;
  c.text_dim = 16;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("feature file round trips") {
  Rng rng(51);
  SUBCASE("empty") {
    const auto bytes = encode_features({});
    CHECK(decode_features(bytes).empty());
  }
  SUBCASE("random records are bit identical and re-encode byte exactly") {
    const auto records = random_records(3, 6, rng);
    const auto bytes = encode_features(records);
    const auto back = decode_features(bytes);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(bitwise_equal(records[i], back[i]));
    CHECK(encode_features(back) == bytes);

    const auto path = std::filesystem::temp_directory_path() / "hiergeo_features_test.hgft";
    write_features(path, records);
    CHECK(read_file_bytes(path) == bytes);
    CHECK(read_features(path).size() == 3);
    std::filesystem::remove(path);
  }
  SUBCASE("truncation and corruption fail closed") {
    const auto bytes = encode_features(random_records(3, 6, rng));
    for (std::size_t cut : {std::size_t{3}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
      auto truncated = bytes;
      truncated.resize(cut);
      try {
        decode_features(truncated);
        FAIL("truncated file decoded");
      } catch (const Error& e) {
        CHECK(e.code() == Errc::format);
        CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
      }
    }
    auto bad = bytes;
    bad[0] = 'Z';
    CHECK_ERRC(decode_features(bad), Errc::format);
    auto extra = bytes;
    extra.push_back(0);
    CHECK_ERRC(decode_features(extra), Errc::format);
  }
  SUBCASE("mixed dimensions are rejected") {
    auto records = random_records(2, 6, rng);
    records[1].features = VectorXd::Zero(5);
    CHECK_ERRC(encode_features(records), Errc::dimension);
  }
}

TEST_CASE("manifest load resolves labels and features") {
  const auto dir = scratch_dir("manifest");
  const auto tax = synthetic_taxonomy(4, 2, 1, 1);
  Rng rng(52);
  auto records = random_records(3, 5, rng);
  for (std::size_t i = 0; i < 3; ++i) records[i].labels = tax.ancestors_of(int(i));
  write_features(dir / "f.hgft", records);

  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto names = tax.records()[i];
    entries.push_back({"m" + std::to_string(i), "f.hgft", 2 - i, names, records[i].scene});
  }
  write_manifest(dir / "m.jsonl", entries);
  const auto loaded = load_manifest(dir / "m.jsonl", tax);
  REQUIRE(loaded.size() == 3);
  CHECK(loaded[0].id == "m0");
  CHECK(loaded[0].features == records[2].features);
  CHECK(loaded[1].labels == tax.ancestors_of(1));
  CHECK(loaded[1].scene.index() == 1);

  std::ofstream(dir / "bad.jsonl") << R"({"id":"x","feature_file":"f.hgft","feature_index":0,"city":"city_0","state":"state_0","country":"country_0","continent":"continent_0"})"
                                   << "\n";
  CHECK_ERRC(read_manifest_entries(dir / "bad.jsonl"), Errc::format);
  std::ofstream(dir / "unknown.jsonl") << R"({"id":"x","feature_file":"f.hgft","feature_index":0,"city":"Atlantis","state":"state_0","country":"country_0","continent":"continent_0","frame_scenes":[1]})"
                                       << "\n";
  CHECK_ERRC(load_manifest(dir / "unknown.jsonl", tax), Errc::lookup);
  std::ofstream(dir / "range.jsonl") << R"({"id":"x","feature_file":"f.hgft","feature_index":7,"city":"city_0","state":"state_0","country":"country_0","continent":"continent_0","frame_scenes":[1]})"
                                     << "\n";
  CHECK_ERRC(load_manifest(dir / "range.jsonl", tax), Errc::index);
  std::filesystem::remove_all(dir);
}

TEST_CASE("stratified split sizes") {
  CHECK(stratified_train_count(10, 0.8) == 8);
  CHECK(stratified_train_count(2, 0.8) == 1);
  CHECK(stratified_train_count(2, 0.1) == 1);
  CHECK(stratified_train_count(3, 0.8) == 2);  // 2.4 / 0.6: the remainder favors validation
  CHECK(stratified_train_count(4, 0.8) == 3);  // 3.2 / 0.8
  CHECK(stratified_train_count(7, 0.8) == 6);  // 5.6 / 1.4
  CHECK(stratified_train_count(1000, 0.8) == 800);
  CHECK_ERRC(stratified_train_count(1, 0.8), Errc::stratification);
  CHECK_ERRC(stratified_train_count(10, 1.0), Errc::config);
}

TEST_CASE("stratified split is per city, deterministic and loses nothing") {
  const auto tax = synthetic_taxonomy(8, 4, 2, 2);
  auto records = generate_synthetic(tax, small_synth(53, 10));
  records.push_back(records.front());
  records.back().id = "extra";
  const auto a = stratified_split(records, 0.8, 7);
  const auto b = stratified_split(records, 0.8, 7);
  const auto c = stratified_split(records, 0.8, 8);

  std::map<int, int> train_count, val_count;
  for (const auto& r : a.train) train_count[r.labels.city()]++;
  for (const auto& r : a.val) val_count[r.labels.city()]++;
  CHECK(train_count[0] == 9);  // 11 samples: 8.8 / 2.2
  CHECK(val_count[0] == 2);
  for (int city = 1; city < 8; ++city) {
    CHECK(train_count[city] == 8);
    CHECK(val_count[city] == 2);
  }
  CHECK(a.train.size() + a.val.size() == records.size());

  std::multiset<std::string> before, after;
  for (const auto& r : records) before.insert(r.id);
  for (const auto& r : a.train) after.insert(r.id);
  for (const auto& r : a.val) after.insert(r.id);
  CHECK(before == after);

  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(a.train[i].id == b.train[i].id);
  bool differs = false;
  for (std::size_t i = 0; i < a.train.size(); ++i) differs |= a.train[i].id != c.train[i].id;
  CHECK(differs);

  std::vector<FeatureRecord> lonely(records.begin(), records.begin() + 3);
  lonely.push_back(records[15]);  // city 1 has a single sample here
  try {
    stratified_split(lonely, 0.8, 1);
    FAIL("expected a stratification error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::stratification);
    CHECK(std::string(e.what()).find("city class 1") != std::string::npos);
  }
}

TEST_CASE("synthetic data") {
  const auto tax = synthetic_taxonomy(8, 4, 2, 2);
  SUBCASE("zero noise repeats the prototype") {
    auto cfg = small_synth(54);
    cfg.noise_sigma = 0.0;
    const auto records = generate_synthetic(tax, cfg);
    for (const auto& r : records) {
      CHECK(r.features == records[static_cast<std::size_t>(r.labels.city()) * cfg.samples_per_city].features);
      CHECK(std::abs(r.features.norm() - 1.0) < 1e-12);
    }
  }
  SUBCASE("deterministic under seed") {
    const auto a = generate_synthetic(tax, small_synth(55));
    const auto b = generate_synthetic(tax, small_synth(55));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(bitwise_equal(a[i], b[i]));
    CHECK_FALSE(bitwise_equal(a[3], generate_synthetic(tax, small_synth(56))[3]));
  }
  SUBCASE("classes are separable by nearest centroid") {
    SynthConfig cfg;
    cfg.samples_per_city = 64;
    cfg.noise_sigma = 0.1;
    cfg.seed = 57;
    const auto records = generate_synthetic(tax, cfg);
    std::vector<VectorXd> centroid(8, VectorXd::Zero(cfg.feature_dim));
    for (const auto& r : records) centroid[r.labels.city()] += r.features / 64.0;
    std::size_t correct = 0;
    for (const auto& r : records) {
      int best = 0;
      for (int c = 1; c < 8; ++c)
        if ((r.features - centroid[c]).squaredNorm() < (r.features - centroid[best]).squaredNorm()) best = c;
      correct += best == r.labels.city();
    }
    CHECK(correct == records.size());
  }
  SUBCASE("too few samples per city") {
    CHECK_ERRC(generate_synthetic(tax, small_synth(1, 1)), Errc::stratification);
  }
}

TEST_CASE("scene targets") {
  const SceneInfo frames = std::vector<int>{2, 2, 1};
  CHECK(scene_target(frames, SceneMode::soft, 4)(2) == doctest::Approx(2.0 / 3.0));
  CHECK(scene_target(frames, SceneMode::majority, 4) == VectorXd::Unit(4, 2));
  VectorXd s(3);
  s << 0.2, 0.5, 0.3;
  CHECK(scene_target(SceneInfo{s}, SceneMode::soft, 3) == s);
  CHECK(scene_target(SceneInfo{s}, SceneMode::majority, 3) == VectorXd::Unit(3, 1));
  CHECK_ERRC(scene_target(SceneInfo{s}, SceneMode::soft, 4), Errc::dimension);
  CHECK_ERRC(scene_target(SceneInfo{VectorXd(s * 2.0)}, SceneMode::soft, 3), Errc::degenerate_input);
}

TEST_CASE("train config json") {
  TrainConfig t;
  t.epochs = 3;
  t.alignment = AlignmentStrategy::city_only;
  t.scene_mode = SceneMode::majority;
  t.eval_mode = EvalMode::independent;
  const auto back = train_config_from_json(to_json(t));
  CHECK(back.epochs == 3);
  CHECK(back.batch_size == 12);
  CHECK(back.learning_rate == 1e-3);
  CHECK(back.alignment == AlignmentStrategy::city_only);
  CHECK(back.scene_mode == SceneMode::majority);
  CHECK(back.eval_mode == EvalMode::independent);
  CHECK_ERRC(train_config_from_json(nlohmann::json{{"batch_size", 0}}), Errc::config);
  CHECK_ERRC(train_config_from_json(nlohmann::json{{"eval_mode", "sideways"}}), Errc::config);
}

TEST_CASE("training") {
  const auto tax = synthetic_taxonomy(4, 2, 2, 1);
  const auto records = generate_synthetic(tax, small_synth(58));
  const auto model = small_model(tax, 3);
  TrainConfig tc;
  tc.seed = 4;

  SUBCASE("zero epochs returns the initialization") {
    tc.epochs = 0;
    const auto result = train(records, tax, model, tc);
    CHECK(result.log.empty());
    CHECK(encode_checkpoint(result.checkpoint) == encode_checkpoint({result.checkpoint.config, init_model(model)}));
  }
  SUBCASE("identical inputs give identical logs; loss decreases") {
    tc.epochs = 5;
    const auto a = train(records, tax, model, tc);
    const auto b = train(records, tax, model, tc);
    REQUIRE(a.log.size() == 5);
    for (std::size_t e = 0; e < 5; ++e) {
      CHECK(std::memcmp(&a.log[e].mean_loss, &b.log[e].mean_loss, sizeof(LossBreakdown)) == 0);
      CHECK(a.log[e].train_top1_city == b.log[e].train_top1_city);
    }
    for (std::size_t e = 1; e < 5; ++e) CHECK(a.log[e].mean_loss.total < a.log[e - 1].mean_loss.total);
    CHECK(encode_checkpoint(a.checkpoint) == encode_checkpoint(b.checkpoint));
    CHECK(a.checkpoint.config.classes == tax.records());
  }
  SUBCASE("non-finite input aborts with diagnostics") {
    auto poisoned = records;
    poisoned[5].features(0) = std::numeric_limits<double>::quiet_NaN();
    tc.epochs = 1;
    try {
      train(poisoned, tax, model, tc);
      FAIL("expected an evaluation error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::evaluation);
      CHECK(std::string(e.what()).find("batch") != std::string::npos);
    }
  }
  SUBCASE("mismatched model and taxonomy") {
    auto wrong = model;
    wrong.hierarchy_sizes[0] = 5;
    wrong.classes.clear();
    CHECK_ERRC(train(records, tax, wrong, tc), Errc::config);
    auto narrow = model;
    narrow.feature_dim = 31;
    CHECK_ERRC(train(records, tax, narrow, tc), Errc::dimension);
  }
}

TEST_CASE("evaluation reports") {
  const auto tax = synthetic_taxonomy(4, 2, 2, 1);
  const auto records = generate_synthetic(tax, small_synth(59));
  TrainConfig tc;
  tc.epochs = 30;
  const auto trained = train(records, tax, small_model(tax, 5), tc);

  const auto report = evaluate(trained.checkpoint, records, tax, EvalMode::codependent, 5);
  for (std::size_t h = 0; h < 4; ++h) {
    CHECK(report.top1[h] == 1.0);
    CHECK(report.topk[h] == 1.0);
  }
  CHECK(report.valid_path_fraction == 1.0);
  const auto j = to_json(report);
  CHECK(j["mode"] == "codependent");
  CHECK(j["top1"]["city"] == 1.0);
  CHECK(j.contains("top5"));

  const auto path = std::filesystem::temp_directory_path() / "hiergeo_eval_test.hgck";
  save_checkpoint(path, trained.checkpoint);
  const auto reloaded = load_checkpoint(path);
  for (auto mode : {EvalMode::none, EvalMode::independent, EvalMode::codependent}) {
    CHECK(to_json(evaluate(trained.checkpoint, records, tax, mode)).dump() ==
          to_json(evaluate(reloaded, records, tax, mode)).dump());
  }
  std::filesystem::remove(path);

  const auto other = synthetic_taxonomy(4, 4, 2, 1);
  CHECK_ERRC(evaluate(trained.checkpoint, records, other, EvalMode::none), Errc::config);
}
