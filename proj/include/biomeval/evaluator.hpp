#pragma once

// End-to-end evaluation under a threshold-selection policy.
//
// The operational regime solves one threshold on the pooled dev scores of all
// sub-protocols and applies it unchanged to every eval sub-protocol. The
// other policies exist to show how much that choice matters:
//   per_subprotocol_dev_fmr  one dev threshold per sub-protocol label
//   on_eval_fmr              one threshold per label, solved on eval itself
//   eer_dev_hter_eval        EER threshold on pooled dev, HTER on eval
//
// Sub-protocol membership of a score always comes from the probe.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biomeval/embedding.hpp"
#include "biomeval/metrics.hpp"
#include "biomeval/protocol.hpp"

namespace biomeval {

struct ThresholdPolicy {
  enum class Variant { combined_dev_fmr, per_subprotocol_dev_fmr, on_eval_fmr, eer_dev_hter_eval };

  Variant variant = Variant::combined_dev_fmr;
  double alpha = kDefaultFmrTarget;  // ignored by eer_dev_hter_eval

  static ThresholdPolicy combined_dev_fmr(double alpha) { return {Variant::combined_dev_fmr, alpha}; }
  static ThresholdPolicy per_subprotocol_dev_fmr(double alpha) {
    return {Variant::per_subprotocol_dev_fmr, alpha};
  }
  static ThresholdPolicy on_eval_fmr(double alpha) { return {Variant::on_eval_fmr, alpha}; }
  static ThresholdPolicy eer_dev_hter_eval() { return {Variant::eer_dev_hter_eval, kDefaultFmrTarget}; }

  bool per_label() const {
    return variant == Variant::per_subprotocol_dev_fmr || variant == Variant::on_eval_fmr;
  }
  void validate() const;
};

std::string_view to_string(ThresholdPolicy::Variant variant);

/// Accepts the variant names and the CLI spellings combined, per-subprotocol,
/// on-eval, eer-hter.
ThresholdPolicy::Variant parse_policy_variant(std::string_view s);

inline constexpr std::string_view kCombinedThresholdKey = "combined";

struct EvaluationResult {
  ThresholdPolicy policy;
  std::map<std::string, double> thresholds;  // "combined" or one entry per label
  MetricReport dev_report;
  MetricReport eval_report;
  std::optional<double> dev_eer;  // eer_dev_hter_eval only
  std::vector<std::string> warnings;
};

/// Errors: policy_mismatch unless `kind` is verification_split; empty_class
/// when a pool a threshold is solved on (or a pooled report) lacks a class;
/// validation when dev and eval carry different sub-protocol labels under a
/// per-label policy.
EvaluationResult evaluate(std::span<const ScoreRecord> scores, const ThresholdPolicy& policy,
                          ProtocolKind kind = ProtocolKind::verification_split);
EvaluationResult evaluate(const Protocol& protocol, std::span<const ScoreRecord> scores,
                          const ThresholdPolicy& policy);

/// Rates of `records` with one threshold per label (labels absent from the
/// map are an error).
MetricReport report_at(std::span<const ScoreRecord> records,
                       const std::map<std::string, double>& label_thresholds,
                       std::optional<double> uniform_threshold);

/// One ROC per sub-protocol label from that label's pooled scores. Only for
/// roc-only protocols; Error{policy_mismatch} otherwise.
std::map<std::string, std::vector<RocPoint>> roc_evaluate(std::span<const ScoreRecord> scores,
                                                          ProtocolKind kind);

struct OpenSetResult {
  OpenSetCurve curve;
  double closed_set_rank1 = 0.0;
  std::size_t known_probes = 0;
  std::size_t unknown_probes = 0;
};

/// Reduces all-pairs gallery scores to rank-1 probe summaries. A gallery
/// subject's score is the max over its templates; the top subject is the one
/// with the highest score (ties go to the lexicographically smaller subject
/// id). A probe is known when its subject has a template in the gallery.
std::vector<OpenSetProbe> rank1_summaries(std::span<const ScoreRecord> scores);

OpenSetResult openset_from_scores(std::span<const ScoreRecord> scores);

/// Scores every probe against every template and builds the open-set curve.
/// Error{policy_mismatch} unless the protocol is open_set.
OpenSetResult openset_evaluate(const Protocol& protocol, std::span<const Template> templates,
                               const EmbeddingStore& probes, const ScoreOptions& options = {});

/// Canonical JSON report (two-space indent, trailing LF).
std::string serialize_evaluation(const EvaluationResult& result);
std::string serialize_openset(const OpenSetResult& result,
                              std::span<const double> report_fpirs = {});

}  // namespace biomeval
