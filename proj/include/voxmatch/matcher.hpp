#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "voxmatch/metrics.hpp"
#include "voxmatch/pardata.hpp"

namespace voxmatch {

struct SimilarityScore {
  std::size_t component_index = 0;  // 0-based logical index
  std::string component_label;
  MetricKind metric = MetricKind::ssd;
  double value = 0.0;
  std::size_t rank = 0;  // 1-based once ranked, 0 before

  bool operator==(const SimilarityScore&) const = default;
};

struct MatchReport {
  std::vector<SimilarityScore> scores;  // ordered by rank
  std::size_t selected = 0;             // component_index of rank 1
  MetricKind metric = MetricKind::ssd;
  unsigned workers = 1;
  double elapsed_seconds = 0.0;
  std::size_t component_count = 0;
};

/// Scores every component against the template through the partitioned
/// dataset engine: components dataset, zipped with a shared template
/// reference, metric mapped per element, collected in order. Ranks are left
/// unassigned; see rank_scores.
inline std::vector<SimilarityScore> score_components(
    std::span<const Volume> components, const Template& tpl, MetricKind metric,
    const ExecutionConfig& cfg = {}, double candidate_threshold = 0.0) {
  if (components.empty()) throw EmptyInput("no components to score");
  for (std::size_t i = 0; i < components.size(); ++i) {
    const Volume& c = components[i];
    if (!c.same_dims(tpl.volume))
      throw DimMismatch("component " + std::to_string(i) + " (" + c.label +
                            ") is " + std::to_string(c.nx) + "x" +
                            std::to_string(c.ny) + "x" + std::to_string(c.nz) +
                            ", template is " + std::to_string(tpl.volume.nx) +
                            "x" + std::to_string(tpl.volume.ny) + "x" +
                            std::to_string(tpl.volume.nz),
                        static_cast<std::ptrdiff_t>(i));
  }

  const std::size_t partitions = cfg.partitions.value_or(
      std::min<std::size_t>(std::max(cfg.workers, 1u), components.size()));

  std::vector<const Volume*> refs;
  refs.reserve(components.size());
  for (const Volume& c : components) refs.push_back(&c);
  // the template is shared read-only across lanes, one pointer per element
  std::vector<const Template*> tpl_refs(components.size(), &tpl);

  auto comps = PartitionedDataset<const Volume*>::from_items(std::move(refs),
                                                             partitions, cfg);
  auto tpls = PartitionedDataset<const Template*>::from_items(
      std::move(tpl_refs), partitions, cfg);
  const std::vector<double> values =
      comps.zip(tpls)
          .map([metric, candidate_threshold](const std::pair<const Volume*, const Template*>& pair) {
            return evaluate_metric(metric, *pair.first, *pair.second,
                                   candidate_threshold);
          })
          .collect();

  std::vector<SimilarityScore> scores;
  scores.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    scores.push_back(SimilarityScore{i, components[i].label, metric, values[i], 0});
  return scores;
}

/// Sorts best-first per the metric's direction (SSD ascending, NCC/Dice
/// descending), breaking ties toward the lower component index, and assigns
/// ranks 1..N.
inline std::vector<SimilarityScore> rank_scores(std::vector<SimilarityScore> scores) {
  for (const auto& s : scores)
    if (s.metric != scores.front().metric)
      throw MixedMetrics("scores mix " +
                         std::string(to_string(scores.front().metric)) +
                         " and " + std::string(to_string(s.metric)));
  const bool ascending =
      !scores.empty() &&
      direction(scores.front().metric) == MetricDirection::lower_is_better;
  std::sort(scores.begin(), scores.end(),
            [ascending](const SimilarityScore& a, const SimilarityScore& b) {
              if (a.value != b.value)
                return ascending ? a.value < b.value : a.value > b.value;
              return a.component_index < b.component_index;
            });
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i].rank = i + 1;
  return scores;
}

/// Full extraction: score, rank, and return the report together with an
/// untouched copy of the winning component.
inline std::pair<MatchReport, Volume> extract_network(
    std::span<const Volume> components, const Template& tpl, MetricKind metric,
    const ExecutionConfig& cfg = {}, double candidate_threshold = 0.0) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<SimilarityScore> ranked =
      rank_scores(score_components(components, tpl, metric, cfg, candidate_threshold));
  const std::chrono::duration<double> elapsed =
      std::chrono::steady_clock::now() - start;

  const std::size_t selected = ranked.front().component_index;
  MatchReport report;
  report.selected = selected;
  report.metric = metric;
  report.workers = cfg.workers;
  report.elapsed_seconds = elapsed.count();
  report.component_count = components.size();
  report.scores = std::move(ranked);
  return {std::move(report), components[selected]};
}

}  // namespace voxmatch
