#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "biomeval/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace biomeval;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ScoreSet random_set(std::mt19937_64& rng, std::size_t max_total = 200) {
  std::uniform_int_distribution<std::size_t> n(1, max_total / 2);
  std::normal_distribution<double> g(0.6, 0.2), i(0.2, 0.2);
  // Coarse rounding makes ties common.
  auto q = [](double x) { return std::round(x * 50) / 50; };
  std::vector<double> gen(n(rng)), imp(n(rng));
  for (auto& x : gen) x = q(g(rng));
  for (auto& x : imp) x = q(i(rng));
  return {gen, imp};
}

}  // namespace

TEST(Rates, Boundaries) {
  const ScoreSet s({0.5, 0.7}, {0.1, 0.2, 0.3});
  EXPECT_EQ(fmr_at(s, -kInf), 1.0);
  EXPECT_EQ(fmr_at(s, 0.31), 0.0);
  EXPECT_EQ(fmr_at(s, 0.2), 2.0 / 3.0);
  EXPECT_EQ(fnmr_at(s, 0.0), 0.0);
  EXPECT_EQ(fnmr_at(s, 0.8), 1.0);
  EXPECT_EQ(fnmr_at(s, 0.7), 0.5);
}

TEST(Rates, EmptyClassesAndNonFinite) {
  EXPECT_BIOMEVAL_ERROR(fmr_at(ScoreSet({0.5}, {}), 0.0), ErrorCode::empty_class);
  EXPECT_BIOMEVAL_ERROR(fnmr_at(ScoreSet({}, {0.5}), 0.0), ErrorCode::empty_class);
  EXPECT_BIOMEVAL_ERROR(threshold_at_fmr(ScoreSet({0.5}, {}), 0.1), ErrorCode::empty_class);
  EXPECT_BIOMEVAL_ERROR(ScoreSet({NAN}, {0.1}), ErrorCode::validation);
  EXPECT_BIOMEVAL_ERROR(ScoreSet({0.1}, {kInf}), ErrorCode::validation);
}

TEST(Rates, Monotone) {
  std::mt19937_64 rng(2);
  const ScoreSet s = random_set(rng);
  double prev_fmr = 2, prev_fnmr = -1;
  for (double t = -0.5; t < 1.5; t += 0.01) {
    const double a = fmr_at(s, t), b = fnmr_at(s, t);
    EXPECT_LE(a, prev_fmr);
    EXPECT_GE(b, prev_fnmr);
    prev_fmr = a;
    prev_fnmr = b;
  }
}

TEST(ThresholdAtFmr, TenImpostorsAlphaTenth) {
  std::vector<double> imp;
  for (int k = 1; k <= 10; ++k) imp.push_back(k / 10.0);
  const ScoreSet s({0.5}, imp);
  EXPECT_EQ(threshold_at_fmr(s, 0.1), 1.0);
  EXPECT_EQ(fmr_at(s, 1.0), 0.1);
  EXPECT_EQ(threshold_at_fmr(s, 1.0), 0.1);
  const double forced = threshold_at_fmr(s, 0.01);
  EXPECT_EQ(forced, std::nextafter(1.0, kInf));
  EXPECT_EQ(fmr_at(s, forced), 0.0);
  EXPECT_TRUE(fmr_target_underresolved(s, 0.01));
  EXPECT_FALSE(fmr_target_underresolved(s, 0.1));
  EXPECT_BIOMEVAL_ERROR(threshold_at_fmr(s, 0.0), ErrorCode::invalid_argument);
}

TEST(ThresholdAtFmr, MatchesOracleAndGuarantee) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const ScoreSet s = random_set(rng);
    for (double alpha : {0.5, 0.1, 0.01, 0.001}) {
      const double t = threshold_at_fmr(s, alpha);
      EXPECT_EQ(t, oracle::threshold_at_fmr(s.impostor(), alpha));
      EXPECT_LE(fmr_at(s, t), alpha);
    }
  }
}

TEST(Eer, SeparableAndSymmetric) {
  const auto sep = eer_threshold(ScoreSet({0.8, 0.9}, {0.1, 0.2, 0.3}));
  EXPECT_EQ(sep.eer, 0.0);
  EXPECT_EQ(sep.fmr, 0.0);
  EXPECT_EQ(sep.fnmr, 0.0);
  // Smallest threshold with zero gap: 0.8 (no impostor >= 0.8, no genuine < 0.8);
  // 0.3 < t <= 0.8 all qualify but candidates are observed scores.
  EXPECT_EQ(sep.threshold, 0.8);

  std::vector<double> v;
  for (int k = 0; k < 100; ++k) v.push_back(k / 100.0);
  const auto sym = eer_threshold(ScoreSet(v, v));
  EXPECT_NEAR(sym.eer, 0.5, 0.01);
}

TEST(Eer, MatchesExhaustiveScan) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const ScoreSet s = random_set(rng, 200);
    const auto got = eer_threshold(s);
    const auto want = oracle::eer(s.genuine(), s.impostor());
    EXPECT_EQ(got.threshold, want.threshold);
    EXPECT_EQ(got.fmr, want.fmr);
    EXPECT_EQ(got.fnmr, want.fnmr);
    EXPECT_EQ(got.eer, want.eer);
  }
}

TEST(Roc, MinimalSeparable) {
  const auto pts = roc_points(ScoreSet({0.9}, {0.1}));
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_EQ(pts.front(), (RocPoint{0.1, 1.0, 0.0}));
  EXPECT_EQ(pts[1], (RocPoint{0.9, 0.0, 0.0}));
  EXPECT_EQ(pts.back().fmr, 0.0);
  EXPECT_EQ(pts.back().fnmr, 1.0);
}

TEST(Roc, PerPointRecomputationAndMonotone) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const ScoreSet s = random_set(rng);
    const auto pts = roc_points(s);
    const auto cands = oracle::candidates(s.genuine(), s.impostor());
    ASSERT_EQ(pts.size(), cands.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
      EXPECT_EQ(pts[k].threshold, cands[k]);
      EXPECT_EQ(pts[k].fmr, oracle::fmr(s.impostor(), cands[k]));
      EXPECT_EQ(pts[k].fnmr, oracle::fnmr(s.genuine(), cands[k]));
      if (k > 0) {
        EXPECT_LE(pts[k].fmr, pts[k - 1].fmr);
        EXPECT_GE(pts[k].fnmr, pts[k - 1].fnmr);
      }
    }
  }
}

TEST(Roc, DuplicationInvariance) {
  std::mt19937_64 rng(10);
  const ScoreSet s = random_set(rng);
  std::vector<double> g, i;
  for (int k = 0; k < 3; ++k) {
    g.insert(g.end(), s.genuine().begin(), s.genuine().end());
    i.insert(i.end(), s.impostor().begin(), s.impostor().end());
  }
  const ScoreSet tripled(g, i);
  EXPECT_EQ(roc_points(s), roc_points(tripled));
  EXPECT_EQ(threshold_at_fmr(s, 0.1), threshold_at_fmr(tripled, 0.1));
  EXPECT_EQ(eer_threshold(s).eer, eer_threshold(tripled).eer);
}

TEST(OpenSet, SeparableReachesFullTpirAtZeroFpir) {
  const std::vector<OpenSetProbe> probes = {
      {0.9, true, true}, {0.8, true, true}, {0.3, false, false}, {0.2, false, false}};
  const auto curve = openset_curve(probes);
  curve.validate();
  bool found = false;
  for (const auto& p : curve.points) found |= (p.fpir == 0.0 && p.tpir == 1.0);
  EXPECT_TRUE(found);
  EXPECT_EQ(curve.points.front().fpir, 0.0);
  EXPECT_EQ(curve.points.front().tpir, 0.0);
  EXPECT_EQ(curve.points.back().fpir, 1.0);
  EXPECT_EQ(curve.points.back().threshold, -kInf);
}

TEST(OpenSet, MinusInfinityPointIsClosedSetRank1) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<OpenSetProbe> probes;
    std::vector<oracle::Probe> plain;
    for (int k = 0; k < 40; ++k) {
      const bool known = k < 25 || u(rng) < 0.5;
      const OpenSetProbe p{std::round(u(rng) * 20) / 20, known && u(rng) < 0.7, known};
      probes.push_back(p);
      plain.push_back({p.top_score, p.top_correct, p.known});
    }
    plain.push_back({0.5, false, false});
    probes.push_back({0.5, false, false});
    const auto curve = openset_curve(probes);
    EXPECT_EQ(curve.closed_set_rank1(), oracle::closed_set_rank1(plain));
    EXPECT_EQ(curve.points, oracle::openset(plain));
    EXPECT_NO_THROW(curve.validate());
  }
}

TEST(OpenSet, NeedsBothProbeKinds) {
  EXPECT_BIOMEVAL_ERROR(openset_curve(std::vector<OpenSetProbe>{{0.5, true, true}}), ErrorCode::empty_class);
  EXPECT_BIOMEVAL_ERROR(openset_curve(std::vector<OpenSetProbe>{{0.5, false, false}}), ErrorCode::empty_class);
}

TEST(OpenSet, Interpolation) {
  OpenSetCurve c;
  c.points = {{0.9, 0.0, 0.0}, {0.7, 0.25, 0.5}, {0.5, 0.5, 0.75}, {-kInf, 1.0, 0.9}};
  EXPECT_EQ(interpolate_tpir_at_fpir(c, 1.0), 0.9);
  EXPECT_EQ(interpolate_tpir_at_fpir(c, 0.6), 0.75);
  EXPECT_EQ(interpolate_tpir_at_fpir(c, 0.5), 0.75);
  EXPECT_EQ(interpolate_tpir_at_fpir(c, 0.3), 0.5);
  EXPECT_EQ(interpolate_tpir_at_fpir(c, 0.1), 0.0);

  OpenSetCurve single;
  single.points = {{-kInf, 1.0, 0.9}};
  EXPECT_EQ(interpolate_tpir_at_fpir(single, 0.001), 0.0);
  EXPECT_EQ(interpolate_tpir_at_fpir(single, 1.0), 0.9);
}

TEST(OpenSet, ValidateRejectsBrokenCurves) {
  OpenSetCurve c;
  c.points = {{0.9, 0.0, 0.5}, {0.5, 0.5, 0.25}, {-kInf, 1.0, 0.3}};
  EXPECT_BIOMEVAL_ERROR(c.validate(), ErrorCode::validation);
  c.points = {{0.9, 0.0, 0.0}, {0.5, 0.5, 0.5}};
  EXPECT_BIOMEVAL_ERROR(c.validate(), ErrorCode::validation);
}

TEST(Report, HterIsEnforced) {
  EXPECT_NO_THROW(MetricReport(0.5, 0.1, 0.3, (0.1 + 0.3) / 2, {}));
  EXPECT_THROW(MetricReport(0.5, 0.1, 0.3, 0.25, {}), Error);
}

TEST(Report, FromLabelsSumsCounts) {
  LabelRates a{0.5, 0.1, 0.2, 10, 10, 1, 2};
  LabelRates b{0.5, 0.3, 0.0, 5, 10, 3, 0};
  const auto r = MetricReport::from_labels(0.5, {{"a", a}, {"b", b}});
  EXPECT_EQ(r.fmr(), 4.0 / 20.0);
  EXPECT_EQ(r.fnmr(), 2.0 / 15.0);
  EXPECT_EQ(r.hter(), (r.fmr() + r.fnmr()) / 2);
  EXPECT_EQ(r.threshold(), 0.5);
}
