#include "biomeval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "biomeval/error.hpp"
#include "biomeval/simd.hpp"

namespace biomeval {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double rate(std::size_t count, std::size_t total) {
  return static_cast<double>(count) / static_cast<double>(total);
}

void require_impostors(const ScoreSet& s) {
  if (s.impostor_count() == 0) throw Error(ErrorCode::empty_class, "no impostor scores");
}

void require_genuines(const ScoreSet& s) {
  if (s.genuine_count() == 0) throw Error(ErrorCode::empty_class, "no genuine scores");
}

std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// Distinct values of both classes in ascending order, then one above the max.
std::vector<double> candidate_thresholds(const std::vector<double>& genuine_sorted,
                                         const std::vector<double>& impostor_sorted) {
  std::vector<double> all;
  all.reserve(genuine_sorted.size() + impostor_sorted.size() + 1);
  std::merge(genuine_sorted.begin(), genuine_sorted.end(), impostor_sorted.begin(),
             impostor_sorted.end(), std::back_inserter(all));
  all.erase(std::unique(all.begin(), all.end()), all.end());
  const double above = std::nextafter(all.back(), kInf);
  all.push_back(above);
  return all;
}

}  // namespace

ScoreSet::ScoreSet(std::vector<double> genuine, std::vector<double> impostor)
    : genuine_(std::move(genuine)), impostor_(std::move(impostor)) {
  for (double v : genuine_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::validation, "non-finite genuine score");
  }
  for (double v : impostor_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::validation, "non-finite impostor score");
  }
}

ScoreSet ScoreSet::from_records(std::span<const ScoreRecord> records) {
  std::vector<double> genuine;
  std::vector<double> impostor;
  for (const auto& r : records) (r.is_genuine ? genuine : impostor).push_back(r.score);
  return ScoreSet(std::move(genuine), std::move(impostor));
}

double fmr_at(const ScoreSet& scores, double threshold) {
  require_impostors(scores);
  return rate(simd::count_at_least(scores.impostor(), threshold), scores.impostor_count());
}

double fnmr_at(const ScoreSet& scores, double threshold) {
  require_genuines(scores);
  return rate(simd::count_below(scores.genuine(), threshold), scores.genuine_count());
}

double threshold_at_fmr(const ScoreSet& dev, double fmr_target) {
  require_impostors(dev);
  if (!(fmr_target > 0.0 && fmr_target <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "FMR target must lie in (0,1]");
  }
  const auto imp = sorted(dev.impostor());
  const std::size_t n = imp.size();
  // FMR is non-increasing in the threshold, so the first candidate (ascending)
  // meeting the bound is the smallest one.
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && imp[i] == imp[i - 1]) continue;
    if (rate(n - i, n) <= fmr_target) return imp[i];
  }
  return std::nextafter(imp.back(), kInf);
}

bool fmr_target_underresolved(const ScoreSet& dev, double fmr_target) {
  return static_cast<double>(dev.impostor_count()) * fmr_target < 1.0;
}

EerResult eer_threshold(const ScoreSet& dev) {
  require_impostors(dev);
  require_genuines(dev);
  const auto gen = sorted(dev.genuine());
  const auto imp = sorted(dev.impostor());
  const auto candidates = candidate_thresholds(gen, imp);

  EerResult best;
  double best_gap = kInf;
  std::size_t gen_below = 0;  // genuine scores < threshold
  std::size_t imp_below = 0;  // impostor scores < threshold
  for (double t : candidates) {
    while (gen_below < gen.size() && gen[gen_below] < t) ++gen_below;
    while (imp_below < imp.size() && imp[imp_below] < t) ++imp_below;
    const double fmr = rate(imp.size() - imp_below, imp.size());
    const double fnmr = rate(gen_below, gen.size());
    const double gap = std::fabs(fmr - fnmr);
    if (gap < best_gap) {
      best_gap = gap;
      best = {t, (fmr + fnmr) / 2.0, fmr, fnmr};
    }
  }
  return best;
}

std::vector<RocPoint> roc_points(const ScoreSet& scores) {
  require_impostors(scores);
  require_genuines(scores);
  const auto gen = sorted(scores.genuine());
  const auto imp = sorted(scores.impostor());
  const auto candidates = candidate_thresholds(gen, imp);

  std::vector<RocPoint> points;
  points.reserve(candidates.size());
  std::size_t gen_below = 0;
  std::size_t imp_below = 0;
  for (double t : candidates) {
    while (gen_below < gen.size() && gen[gen_below] < t) ++gen_below;
    while (imp_below < imp.size() && imp[imp_below] < t) ++imp_below;
    points.push_back({t, rate(imp.size() - imp_below, imp.size()), rate(gen_below, gen.size())});
  }
  return points;
}

void OpenSetCurve::validate() const {
  if (points.empty()) throw Error(ErrorCode::validation, "open-set curve is empty");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!(p.fpir >= 0.0 && p.fpir <= 1.0 && p.tpir >= 0.0 && p.tpir <= 1.0)) {
      throw Error(ErrorCode::validation, "open-set rate outside [0,1]");
    }
    if (i > 0 && (p.fpir < points[i - 1].fpir || p.tpir < points[i - 1].tpir)) {
      throw Error(ErrorCode::validation, "open-set curve is not monotone");
    }
  }
  if (points.back().fpir != 1.0) {
    throw Error(ErrorCode::validation, "open-set curve lacks the FPIR=1 point");
  }
}

double OpenSetCurve::closed_set_rank1() const {
  if (points.empty() || points.back().fpir != 1.0) {
    throw Error(ErrorCode::validation, "open-set curve lacks the FPIR=1 point");
  }
  return points.back().tpir;
}

OpenSetCurve openset_curve(std::span<const OpenSetProbe> probes) {
  std::vector<OpenSetProbe> ordered(probes.begin(), probes.end());
  const auto n_known = static_cast<std::size_t>(
      std::count_if(ordered.begin(), ordered.end(), [](const OpenSetProbe& p) { return p.known; }));
  const std::size_t n_unknown = ordered.size() - n_known;
  if (n_known == 0) throw Error(ErrorCode::empty_class, "no known probes");
  if (n_unknown == 0) throw Error(ErrorCode::empty_class, "no unknown probes");
  for (const auto& p : ordered) {
    if (!std::isfinite(p.top_score)) throw Error(ErrorCode::validation, "non-finite probe score");
  }

  std::sort(ordered.begin(), ordered.end(),
            [](const OpenSetProbe& a, const OpenSetProbe& b) { return a.top_score > b.top_score; });

  OpenSetCurve curve;
  curve.points.reserve(ordered.size() + 2);
  curve.points.push_back({std::nextafter(ordered.front().top_score, kInf), 0.0, 0.0});
  std::size_t accepted_unknown = 0;
  std::size_t identified = 0;
  std::size_t i = 0;
  while (i < ordered.size()) {
    const double t = ordered[i].top_score;
    for (; i < ordered.size() && ordered[i].top_score == t; ++i) {
      if (!ordered[i].known) {
        ++accepted_unknown;
      } else if (ordered[i].top_correct) {
        ++identified;
      }
    }
    curve.points.push_back({t, rate(accepted_unknown, n_unknown), rate(identified, n_known)});
  }
  curve.points.push_back({-kInf, rate(accepted_unknown, n_unknown), rate(identified, n_known)});
  return curve;
}

double interpolate_tpir_at_fpir(const OpenSetCurve& curve, double target_fpir) {
  const OpenSetPoint* best = nullptr;
  for (const auto& p : curve.points) {
    if (p.fpir > target_fpir) continue;
    if (best == nullptr || p.fpir > best->fpir || (p.fpir == best->fpir && p.tpir > best->tpir)) {
      best = &p;
    }
  }
  return best == nullptr ? 0.0 : best->tpir;
}

MetricReport::MetricReport(std::optional<double> threshold, double fmr, double fnmr, double hter,
                           std::map<std::string, LabelRates> per_sub_protocol)
    : threshold_(threshold), fmr_(fmr), fnmr_(fnmr), hter_(hter),
      per_label_(std::move(per_sub_protocol)) {
  if (hter_ != (fmr_ + fnmr_) / 2.0) {
    throw Error(ErrorCode::validation, "HTER must equal (FMR + FNMR) / 2");
  }
  for (double r : {fmr_, fnmr_}) {
    if (!(r >= 0.0 && r <= 1.0)) throw Error(ErrorCode::validation, "rate outside [0,1]");
  }
}

MetricReport MetricReport::from_labels(std::optional<double> threshold,
                                       std::map<std::string, LabelRates> per_sub_protocol) {
  std::size_t gen = 0, imp = 0, fm = 0, fnm = 0;
  for (const auto& [label, r] : per_sub_protocol) {
    gen += r.genuine_count;
    imp += r.impostor_count;
    fm += r.false_matches;
    fnm += r.false_non_matches;
  }
  if (imp == 0) throw Error(ErrorCode::empty_class, "no impostor scores");
  if (gen == 0) throw Error(ErrorCode::empty_class, "no genuine scores");
  const double fmr = rate(fm, imp);
  const double fnmr = rate(fnm, gen);
  return MetricReport(threshold, fmr, fnmr, (fmr + fnmr) / 2.0, std::move(per_sub_protocol));
}

}  // namespace biomeval
