#include "hiergeo/inference.hpp"

#include "hiergeo/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hiergeo {

std::string_view to_string(EvalMode mode) {
  switch (mode) {
    case EvalMode::none: return "none";
    case EvalMode::independent: return "independent";
    case EvalMode::codependent: return "codependent";
  }
  return "none";
}

EvalMode parse_eval_mode(std::string_view text) {
  if (text == "none") return EvalMode::none;
  if (text == "independent") return EvalMode::independent;
  if (text == "codependent") return EvalMode::codependent;
  fail(Errc::config, "unknown evaluation mode '" + std::string(text) + "'");
}

namespace {

void check_dims(const HierProbs& probs, const Taxonomy& taxonomy) {
  for (std::size_t h = 0; h < kNumHierarchies; ++h) {
    require(static_cast<std::size_t>(probs[h].size()) == taxonomy.size(h), Errc::dimension,
            std::string(hierarchy_name(h)) + " probabilities have " + std::to_string(probs[h].size()) +
                " entries, taxonomy has " + std::to_string(taxonomy.size(h)) + " classes");
  }
}

double floored_log(double p) { return p > 0.0 ? std::max(std::log(p), kLogFloor) : kLogFloor; }

int argmax_lowest(const VectorXd& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return static_cast<int>(best);
}

}  // namespace

HierProbs refine_probabilities(const HierProbs& probs, const Taxonomy& taxonomy) {
  check_dims(probs, taxonomy);
  // Coarse to fine: a class's accumulated log score is its own plus its
  // parent's accumulated score.
  std::array<VectorXd, kNumHierarchies> logs;
  logs[3] = probs[3].unaryExpr(&floored_log);
  for (std::size_t h = kNumHierarchies - 1; h-- > 0;) {
    logs[h].resize(probs[h].size());
    for (Index c = 0; c < probs[h].size(); ++c) {
      logs[h](c) = floored_log(probs[h](c)) + logs[h + 1](taxonomy.parent(h, static_cast<int>(c)));
    }
  }
  HierProbs refined;
  for (std::size_t h = 0; h + 1 < kNumHierarchies; ++h) refined[h] = logs[h].array().exp().matrix();
  refined[3] = probs[3];
  return refined;
}

std::vector<int> rank_classes(const VectorXd& scores) {
  std::vector<int> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores(a) > scores(b); });
  return order;
}

PredictionReport predict(const HierProbs& probs, const Taxonomy& taxonomy, EvalMode mode) {
  check_dims(probs, taxonomy);
  PredictionReport report;
  switch (mode) {
    case EvalMode::none:
      report.scores = probs;
      break;
    case EvalMode::independent:
      report.scores = refine_probabilities(probs, taxonomy);
      break;
    case EvalMode::codependent: {
      const HierProbs refined = refine_probabilities(probs, taxonomy);
      report.scores[0] = refined[0];
      for (std::size_t h = 1; h < kNumHierarchies; ++h) {
        report.scores[h] = VectorXd::Constant(probs[h].size(), -1.0);
        for (Index c = 0; c < report.scores[h - 1].size(); ++c) {
          const int parent = taxonomy.parent(h - 1, static_cast<int>(c));
          report.scores[h](parent) = std::max(report.scores[h](parent), report.scores[h - 1](c));
        }
      }
      break;
    }
  }
  for (std::size_t h = 0; h < kNumHierarchies; ++h) report.ranking[h] = rank_classes(report.scores[h]);
  if (mode == EvalMode::codependent) {
    report.path = taxonomy.ancestors_of(argmax_lowest(report.scores[0]));
    // A coarse class can tie with the traced ancestor at the max; force the
    // ancestor to the front so the ranking agrees with the path.
    for (std::size_t h = 1; h < kNumHierarchies; ++h) {
      auto& r = report.ranking[h];
      const auto it = std::find(r.begin(), r.end(), report.path.ids[h]);
      std::rotate(r.begin(), it, it + 1);
    }
  } else {
    for (std::size_t h = 0; h < kNumHierarchies; ++h) report.path.ids[h] = argmax_lowest(report.scores[h]);
  }
  return report;
}

double topk_accuracy(std::span<const PredictionReport> reports, std::span<const LabelPath> truths, std::size_t k,
                     std::size_t hierarchy) {
  require(reports.size() == truths.size(), Errc::dimension, "topk_accuracy: reports and labels differ in length");
  require(k >= 1, Errc::config, "topk_accuracy: k must be at least 1");
  require(hierarchy < kNumHierarchies, Errc::index, "topk_accuracy: hierarchy out of range");
  if (reports.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& ranking = reports[i].ranking[hierarchy];
    const std::size_t kk = std::min(k, ranking.size());
    if (std::find(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(kk), truths[i].ids[hierarchy]) !=
        ranking.begin() + static_cast<std::ptrdiff_t>(kk))
      ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(reports.size());
}

}  // namespace hiergeo
