#include "biomeval/evaluator.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "biomeval/error.hpp"
#include "biomeval/simd.hpp"

namespace biomeval {

void ThresholdPolicy::validate() const {
  if (variant != Variant::eer_dev_hter_eval && !(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "FMR target must lie in (0,1)");
  }
}

std::string_view to_string(ThresholdPolicy::Variant variant) {
  using V = ThresholdPolicy::Variant;
  switch (variant) {
    case V::combined_dev_fmr: return "combined_dev_fmr";
    case V::per_subprotocol_dev_fmr: return "per_subprotocol_dev_fmr";
    case V::on_eval_fmr: return "on_eval_fmr";
    case V::eer_dev_hter_eval: return "eer_dev_hter_eval";
  }
  return "combined_dev_fmr";
}

ThresholdPolicy::Variant parse_policy_variant(std::string_view s) {
  using V = ThresholdPolicy::Variant;
  if (s == "combined" || s == "combined_dev_fmr") return V::combined_dev_fmr;
  if (s == "per-subprotocol" || s == "per_subprotocol_dev_fmr") return V::per_subprotocol_dev_fmr;
  if (s == "on-eval" || s == "on_eval_fmr") return V::on_eval_fmr;
  if (s == "eer-hter" || s == "eer_dev_hter_eval") return V::eer_dev_hter_eval;
  throw Error(ErrorCode::invalid_argument, "unknown threshold policy '" + std::string(s) + "'");
}

namespace {

using LabelScores = std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>;

LabelScores split_by_label(std::span<const ScoreRecord> records) {
  LabelScores out;
  for (const auto& r : records) {
    auto& [gen, imp] = out[r.sub_protocol];
    (r.is_genuine ? gen : imp).push_back(r.score);
  }
  return out;
}

std::vector<ScoreRecord> select_group(std::span<const ScoreRecord> records, Group group) {
  std::vector<ScoreRecord> out;
  for (const auto& r : records) {
    if (r.group == group) out.push_back(r);
  }
  return out;
}

ScoreSet solvable(std::vector<double> gen, std::vector<double> imp, const std::string& what) {
  if (gen.empty()) throw Error(ErrorCode::empty_class, what + " has no genuine scores");
  if (imp.empty()) throw Error(ErrorCode::empty_class, what + " has no impostor scores");
  return ScoreSet(std::move(gen), std::move(imp));
}

std::map<std::string, double> per_label_thresholds(std::span<const ScoreRecord> records,
                                                   double alpha, const char* group_name,
                                                   std::vector<std::string>& warnings) {
  std::map<std::string, double> out;
  for (auto& [label, classes] : split_by_label(records)) {
    const ScoreSet set = solvable(std::move(classes.first), std::move(classes.second),
                                  std::string(group_name) + " sub-protocol '" + label + "'");
    if (fmr_target_underresolved(set, alpha)) {
      warnings.push_back(std::string(group_name) + " sub-protocol '" + label + "' has only " +
                         std::to_string(set.impostor_count()) +
                         " impostor scores; the FMR target cannot be resolved");
    }
    out[label] = threshold_at_fmr(set, alpha);
  }
  return out;
}

std::set<std::string> labels_of(std::span<const ScoreRecord> records) {
  std::set<std::string> labels;
  for (const auto& r : records) labels.insert(r.sub_protocol);
  return labels;
}

std::map<std::string, double> uniform(const std::set<std::string>& labels, double t) {
  std::map<std::string, double> out;
  for (const auto& l : labels) out[l] = t;
  return out;
}

}  // namespace

MetricReport report_at(std::span<const ScoreRecord> records,
                       const std::map<std::string, double>& label_thresholds,
                       std::optional<double> uniform_threshold) {
  std::map<std::string, LabelRates> per_label;
  for (const auto& [label, classes] : split_by_label(records)) {
    const auto it = label_thresholds.find(label);
    if (it == label_thresholds.end()) {
      throw Error(ErrorCode::validation, "no threshold for sub-protocol '" + label + "'");
    }
    const auto& [gen, imp] = classes;
    LabelRates r;
    r.threshold = it->second;
    r.genuine_count = gen.size();
    r.impostor_count = imp.size();
    r.false_matches = simd::count_at_least(imp, r.threshold);
    r.false_non_matches = simd::count_below(gen, r.threshold);
    if (!imp.empty()) {
      r.fmr = static_cast<double>(r.false_matches) / static_cast<double>(imp.size());
    }
    if (!gen.empty()) {
      r.fnmr = static_cast<double>(r.false_non_matches) / static_cast<double>(gen.size());
    }
    per_label.emplace(label, r);
  }
  return MetricReport::from_labels(uniform_threshold, std::move(per_label));
}

EvaluationResult evaluate(std::span<const ScoreRecord> scores, const ThresholdPolicy& policy,
                          ProtocolKind kind) {
  policy.validate();
  if (kind != ProtocolKind::verification_split) {
    throw Error(ErrorCode::policy_mismatch,
                "threshold policies need a dev/eval split protocol; " +
                    std::string(to_string(kind)) + " protocols support " +
                    (kind == ProtocolKind::open_set ? "open-set" : "ROC") + " evaluation only");
  }
  const auto dev = select_group(scores, Group::dev);
  const auto eval = select_group(scores, Group::eval);
  if (dev.empty()) throw Error(ErrorCode::empty_class, "no dev scores");
  if (eval.empty()) throw Error(ErrorCode::empty_class, "no eval scores");

  const auto dev_labels = labels_of(dev);
  const auto eval_labels = labels_of(eval);
  std::vector<std::string> warnings;

  using V = ThresholdPolicy::Variant;
  switch (policy.variant) {
    case V::combined_dev_fmr:
    case V::eer_dev_hter_eval: {
      const ScoreSet dev_set = ScoreSet::from_records(dev);
      const ScoreSet pooled = solvable(dev_set.genuine(), dev_set.impostor(), "dev group");
      double t = 0.0;
      std::optional<double> eer;
      if (policy.variant == V::combined_dev_fmr) {
        if (fmr_target_underresolved(pooled, policy.alpha)) {
          warnings.push_back("dev group has only " + std::to_string(pooled.impostor_count()) +
                             " impostor scores; the FMR target cannot be resolved");
        }
        t = threshold_at_fmr(pooled, policy.alpha);
      } else {
        const auto e = eer_threshold(pooled);
        t = e.threshold;
        eer = e.eer;
      }
      return EvaluationResult{policy,
                              {{std::string(kCombinedThresholdKey), t}},
                              report_at(dev, uniform(dev_labels, t), t),
                              report_at(eval, uniform(eval_labels, t), t),
                              eer,
                              std::move(warnings)};
    }
    case V::per_subprotocol_dev_fmr:
    case V::on_eval_fmr: {
      if (dev_labels != eval_labels) {
        throw Error(ErrorCode::validation,
                    "dev and eval groups carry different sub-protocol labels");
      }
      const bool on_eval = policy.variant == V::on_eval_fmr;
      if (on_eval) {
        warnings.push_back(
            "on-eval thresholds are chosen on the evaluation scores themselves; the reported "
            "rates are not an operational estimate");
      }
      auto thresholds = on_eval ? per_label_thresholds(eval, policy.alpha, "eval", warnings)
                                : per_label_thresholds(dev, policy.alpha, "dev", warnings);
      auto dev_report = report_at(dev, thresholds, std::nullopt);
      auto eval_report = report_at(eval, thresholds, std::nullopt);
      return EvaluationResult{policy,          std::move(thresholds), std::move(dev_report),
                              std::move(eval_report), std::nullopt,   std::move(warnings)};
    }
  }
  throw Error(ErrorCode::invalid_argument, "unknown policy");
}

EvaluationResult evaluate(const Protocol& protocol, std::span<const ScoreRecord> scores,
                          const ThresholdPolicy& policy) {
  return evaluate(scores, policy, protocol.kind);
}

std::map<std::string, std::vector<RocPoint>> roc_evaluate(std::span<const ScoreRecord> scores,
                                                          ProtocolKind kind) {
  if (kind != ProtocolKind::verification_roc_only) {
    throw Error(ErrorCode::policy_mismatch,
                "ROC-only evaluation is for roc-only protocols; use a threshold policy for "
                "split protocols");
  }
  std::map<std::string, std::vector<RocPoint>> out;
  for (auto& [label, classes] : split_by_label(scores)) {
    out[label] = roc_points(solvable(std::move(classes.first), std::move(classes.second),
                                     "sub-protocol '" + label + "'"));
  }
  return out;
}

std::vector<OpenSetProbe> rank1_summaries(std::span<const ScoreRecord> scores) {
  std::unordered_set<std::string_view> gallery_subjects;
  for (const auto& r : scores) gallery_subjects.insert(r.reference_subject_id);

  struct Best {
    std::string_view probe_subject;
    std::map<std::string_view, double> subject_max;
  };
  std::map<std::string_view, Best> per_probe;
  for (const auto& r : scores) {
    auto& b = per_probe[r.probe_sample_id];
    b.probe_subject = r.probe_subject_id;
    auto [it, inserted] = b.subject_max.emplace(r.reference_subject_id, r.score);
    if (!inserted) it->second = std::max(it->second, r.score);
  }

  std::vector<OpenSetProbe> probes;
  probes.reserve(per_probe.size());
  for (const auto& [probe_id, b] : per_probe) {
    // subject_max is ordered by subject id, so strict > keeps the smaller id on ties.
    auto top = b.subject_max.begin();
    for (auto it = b.subject_max.begin(); it != b.subject_max.end(); ++it) {
      if (it->second > top->second) top = it;
    }
    probes.push_back({top->second, top->first == b.probe_subject,
                      gallery_subjects.contains(b.probe_subject)});
  }
  return probes;
}

OpenSetResult openset_from_scores(std::span<const ScoreRecord> scores) {
  const auto probes = rank1_summaries(scores);
  OpenSetResult result;
  result.curve = openset_curve(probes);
  result.closed_set_rank1 = result.curve.closed_set_rank1();
  for (const auto& p : probes) (p.known ? result.known_probes : result.unknown_probes)++;
  return result;
}

OpenSetResult openset_evaluate(const Protocol& protocol, std::span<const Template> templates,
                               const EmbeddingStore& probes, const ScoreOptions& options) {
  if (protocol.kind != ProtocolKind::open_set) {
    throw Error(ErrorCode::policy_mismatch, "open-set evaluation needs an open_set protocol");
  }
  const auto scores = score_protocol(protocol, templates, probes, GroupSelector::all, options);
  return openset_from_scores(scores);
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json optional_json(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json report_json(const MetricReport& r) {
  ordered_json j;
  j["threshold"] = optional_json(r.threshold());
  j["fmr"] = r.fmr();
  j["fnmr"] = r.fnmr();
  j["hter"] = r.hter();
  ordered_json labels = ordered_json::object();
  for (const auto& [label, rates] : r.per_sub_protocol()) {
    ordered_json l;
    l["threshold"] = rates.threshold;
    l["fmr"] = optional_json(rates.fmr);
    l["fnmr"] = optional_json(rates.fnmr);
    l["genuine_count"] = rates.genuine_count;
    l["impostor_count"] = rates.impostor_count;
    labels[label] = std::move(l);
  }
  j["per_sub_protocol"] = std::move(labels);
  return j;
}

}  // namespace

std::string serialize_evaluation(const EvaluationResult& result) {
  ordered_json j;
  ordered_json policy;
  policy["variant"] = to_string(result.policy.variant);
  policy["alpha"] = result.policy.variant == ThresholdPolicy::Variant::eer_dev_hter_eval
                        ? ordered_json(nullptr)
                        : ordered_json(result.policy.alpha);
  j["policy"] = std::move(policy);
  ordered_json thresholds = ordered_json::object();
  for (const auto& [label, t] : result.thresholds) thresholds[label] = t;
  j["thresholds"] = std::move(thresholds);
  j["dev"] = report_json(result.dev_report);
  j["eval"] = report_json(result.eval_report);
  j["dev_eer"] = optional_json(result.dev_eer);
  j["warnings"] = result.warnings;
  return j.dump(2) + "\n";
}

std::string serialize_openset(const OpenSetResult& result, std::span<const double> report_fpirs) {
  ordered_json j;
  j["known_probes"] = result.known_probes;
  j["unknown_probes"] = result.unknown_probes;
  j["closed_set_rank1"] = result.closed_set_rank1;
  ordered_json at = ordered_json::array();
  for (double f : report_fpirs) {
    ordered_json p;
    p["fpir"] = f;
    p["tpir"] = interpolate_tpir_at_fpir(result.curve, f);
    at.push_back(std::move(p));
  }
  j["tpir_at_fpir"] = std::move(at);
  return j.dump(2) + "\n";
}

}  // namespace biomeval
