#pragma once

// Verification and open-set identification metrics.
//
// Decision rule: a comparison is a match when score >= threshold. FMR counts
// impostor scores >= threshold, FNMR counts genuine scores < threshold. All
// rates are an integer count divided once by the class size, so results are
// reproducible bit-for-bit by any enumeration that uses the same rule.
//
// Candidate thresholds are the observed score values plus one value strictly
// above the maximum: std::nextafter(max, +inf). Empirical rates only change
// at observed scores, so nothing is lost by restricting to this set.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "biomeval/protocol.hpp"

namespace biomeval {

struct ScoreRecord {
  std::string model_id;
  std::string probe_sample_id;
  std::string probe_subject_id;
  std::string reference_subject_id;
  std::string sub_protocol;
  Group group = Group::none;
  double score = 0.0;
  bool is_genuine = false;

  bool operator==(const ScoreRecord&) const = default;
};

/// The metric view of a set of comparisons: the genuine and impostor score
/// multisets.
class ScoreSet {
 public:
  ScoreSet() = default;
  ScoreSet(std::vector<double> genuine, std::vector<double> impostor);

  static ScoreSet from_records(std::span<const ScoreRecord> records);

  const std::vector<double>& genuine() const { return genuine_; }
  const std::vector<double>& impostor() const { return impostor_; }
  std::size_t genuine_count() const { return genuine_.size(); }
  std::size_t impostor_count() const { return impostor_.size(); }
  std::size_t size() const { return genuine_.size() + impostor_.size(); }

 private:
  std::vector<double> genuine_;
  std::vector<double> impostor_;
};

/// Fraction of impostor scores >= threshold. Error{empty_class} without impostors.
double fmr_at(const ScoreSet& scores, double threshold);

/// Fraction of genuine scores < threshold. Error{empty_class} without genuines.
double fnmr_at(const ScoreSet& scores, double threshold);

/// Smallest candidate threshold whose FMR is <= target. When the target is
/// below 1/impostor_count this is nextafter(max impostor, +inf) and FMR is 0.
double threshold_at_fmr(const ScoreSet& dev, double fmr_target);

/// True when there are too few impostors to resolve the target rate
/// (impostor_count < 1/fmr_target).
bool fmr_target_underresolved(const ScoreSet& dev, double fmr_target);

struct EerResult {
  double threshold = 0.0;
  double eer = 0.0;  // (fmr + fnmr) / 2 at threshold
  double fmr = 0.0;
  double fnmr = 0.0;
};

/// Candidate threshold minimizing |FMR - FNMR| over all distinct scores of
/// both classes plus one above the maximum; ties go to the smaller threshold.
EerResult eer_threshold(const ScoreSet& dev);

struct RocPoint {
  double threshold = 0.0;
  double fmr = 0.0;
  double fnmr = 0.0;

  bool operator==(const RocPoint&) const = default;
};

/// One point per distinct score value plus the point above the maximum
/// (FMR = 0, FNMR = 1), in ascending threshold order. The lowest point has
/// FMR = 1, FNMR = 0.
std::vector<RocPoint> roc_points(const ScoreSet& scores);

/// Per-probe rank-1 summary for open-set identification.
struct OpenSetProbe {
  double top_score = 0.0;    // best subject score over the gallery
  bool top_correct = false;  // the best subject is the probe's own subject
  bool known = false;        // the probe's subject is enrolled in the gallery
};

struct OpenSetPoint {
  double threshold = 0.0;
  double fpir = 0.0;
  double tpir = 0.0;

  bool operator==(const OpenSetPoint&) const = default;
};

/// TPIR-vs-FPIR points ordered by descending threshold, hence by ascending
/// FPIR with non-decreasing TPIR. The first point uses the threshold above
/// every score (FPIR = TPIR = 0); the last uses -inf (FPIR = 1, TPIR =
/// closed-set rank-1 rate).
struct OpenSetCurve {
  std::vector<OpenSetPoint> points;

  /// Throws Error{validation} if an invariant is violated.
  void validate() const;

  /// TPIR of the FPIR = 1 point.
  double closed_set_rank1() const;
};

/// For each candidate threshold: FPIR = share of unknown probes with
/// top_score >= threshold, TPIR = share of known probes with top_correct and
/// top_score >= threshold. Candidates: +above-max, every distinct top score
/// (descending), -inf. Error{empty_class} without known or unknown probes.
OpenSetCurve openset_curve(std::span<const OpenSetProbe> probes);

/// Conservative step interpolation: TPIR at the largest achieved FPIR not
/// exceeding the target. A target below every point yields the TPIR of the
/// zero-FPIR operating point, which is 0.
double interpolate_tpir_at_fpir(const OpenSetCurve& curve, double target_fpir);

/// Rates of one sub-protocol slice. A rate is absent when its class is empty.
struct LabelRates {
  double threshold = 0.0;
  std::optional<double> fmr;
  std::optional<double> fnmr;
  std::size_t genuine_count = 0;
  std::size_t impostor_count = 0;
  std::size_t false_matches = 0;
  std::size_t false_non_matches = 0;
};

/// Operating-point summary. hter = (fmr + fnmr) / 2 is enforced on
/// construction. `threshold` is empty when sub-protocols use different
/// thresholds.
class MetricReport {
 public:
  MetricReport(std::optional<double> threshold, double fmr, double fnmr, double hter,
               std::map<std::string, LabelRates> per_sub_protocol);

  /// Builds the report from per-label counts; pooled rates are the summed
  /// counts divided once.
  static MetricReport from_labels(std::optional<double> threshold,
                                  std::map<std::string, LabelRates> per_sub_protocol);

  std::optional<double> threshold() const { return threshold_; }
  double fmr() const { return fmr_; }
  double fnmr() const { return fnmr_; }
  double hter() const { return hter_; }
  const std::map<std::string, LabelRates>& per_sub_protocol() const { return per_label_; }

 private:
  std::optional<double> threshold_;
  double fmr_;
  double fnmr_;
  double hter_;
  std::map<std::string, LabelRates> per_label_;
};

}  // namespace biomeval
