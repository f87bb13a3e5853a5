#pragma once

#include "hiergeo/taxonomy.hpp"
#include "hiergeo/tensor.hpp"

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace hiergeo {

/// One probability (or score) vector per hierarchy, city first.
using HierProbs = std::array<VectorXd, kNumHierarchies>;

enum class EvalMode { none, independent, codependent };

std::string_view to_string(EvalMode mode);
EvalMode parse_eval_mode(std::string_view text);

/// Floor applied to log-probabilities during refinement.
inline constexpr double kLogFloor = -745.0;

/// Multiplies each class's probability by those of all its strict ancestors
/// (in log space, then exponentiated). Continent scores are unchanged.
HierProbs refine_probabilities(const HierProbs& probs, const Taxonomy& taxonomy);

struct PredictionReport {
  LabelPath path;
  /// Class ids per hierarchy ordered by decreasing score; ties by lowest id.
  std::array<std::vector<int>, kNumHierarchies> ranking;
  /// The scores the ranking was derived from.
  HierProbs scores;
};

/// none: argmax of raw probabilities per hierarchy. independent: argmax of
/// refined scores per hierarchy. codependent: argmax refined city, coarser
/// labels from its ancestors; coarser rankings order each class by its best
/// descendant city score so the top entry is always the traced ancestor.
PredictionReport predict(const HierProbs& probs, const Taxonomy& taxonomy, EvalMode mode);

/// Descending-score ordering with lowest-id tie-breaking.
std::vector<int> rank_classes(const VectorXd& scores);

/// Fraction of samples whose true class is within the first k ranked classes
/// of `hierarchy`. k is clipped to the class count.
double topk_accuracy(std::span<const PredictionReport> reports, std::span<const LabelPath> truths, std::size_t k,
                     std::size_t hierarchy);

}  // namespace hiergeo
