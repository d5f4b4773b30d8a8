#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <map>

#include "biomeval/protocol.hpp"
#include "biomeval/synth.hpp"
#include "biomeval/text_io.hpp"
#include "test_util.hpp"

using namespace biomeval;

namespace {

SampleRecord sample(std::string id, std::string subject, Role role, Group group, std::string label = "") {
  return {id, subject, id + ".png", role, group, std::move(label), std::nullopt};
}

// Subjects A, B in dev with one model each; probes A, A, B.
Protocol two_by_three() {
  Protocol p;
  p.name = "tiny";
  p.sub_protocols = {"x"};
  p.samples = {
      sample("a_e", "A", Role::enroll, Group::dev),    sample("b_e", "B", Role::enroll, Group::dev),
      sample("a_p1", "A", Role::probe, Group::dev, "x"), sample("a_p2", "A", Role::probe, Group::dev, "x"),
      sample("b_p1", "B", Role::probe, Group::dev, "x"), sample("c_e", "C", Role::enroll, Group::eval),
      sample("c_p", "C", Role::probe, Group::eval, "x"),
  };
  p.models = {{"mA", "A", {"a_e"}}, {"mB", "B", {"b_e"}}, {"mC", "C", {"c_e"}}};
  return p;
}

Protocol synthetic(std::size_t subjects, std::size_t samples_per_subject, std::uint64_t seed = 1) {
  SynthConfig c;
  c.seed = seed;
  c.n_subjects = subjects;
  c.samples_per_subject = samples_per_subject;
  c.enroll_per_subject = 1;
  c.dim = 4;
  c.sub_protocols = {{"frontal", 0.0}, {"profile", 0.1}};
  return generate(c).protocol;
}

}  // namespace

TEST(Protocol, EnumRoundTrip) {
  for (auto k : {ProtocolKind::verification_split, ProtocolKind::verification_roc_only, ProtocolKind::open_set}) {
    EXPECT_EQ(parse_protocol_kind(to_string(k)), k);
  }
  for (auto g : {Group::dev, Group::eval, Group::none}) EXPECT_EQ(parse_group(to_string(g)), g);
  EXPECT_EQ(parse_role("enroll"), Role::enroll);
  EXPECT_EQ(parse_group_selector("all"), GroupSelector::all);
  EXPECT_THROW(parse_group("test"), Error);
}

TEST(Protocol, DevOnlyFileFailsWithEvalGroupEmpty) {
  const char* text = R"({
    "name": "minimal", "kind": "verification_split", "sub_protocols": ["default"],
    "samples": [
      {"sample_id": "s1", "subject_id": "A", "path": "s1.png", "role": "enroll", "group": "dev", "sub_protocol": ""},
      {"sample_id": "s2", "subject_id": "A", "path": "s2.png", "role": "probe", "group": "dev", "sub_protocol": "default"}
    ],
    "models": [{"model_id": "m", "subject_id": "A", "enroll_sample_ids": ["s1"]}]
  })";
  EXPECT_BIOMEVAL_ERROR_MSG(parse_protocol(text), ErrorCode::validation, "eval group empty");
}

TEST(Protocol, SubjectInBothGroupsIsNamed) {
  Protocol p = two_by_three();
  p.samples.push_back(sample("a_x", "A", Role::probe, Group::eval, "x"));
  EXPECT_BIOMEVAL_ERROR_MSG(p.validate(), ErrorCode::validation, "subject A appears in both dev and eval");
}

TEST(Protocol, UnknownSubjectMustNotBeEnrolled) {
  Protocol p;
  p.name = "os";
  p.kind = ProtocolKind::open_set;
  p.sub_protocols = {"x"};
  p.samples = {sample("a_e", "A", Role::enroll, Group::eval), sample("a_p", "A", Role::probe, Group::eval, "x"),
               sample("u_p", "U", Role::probe, Group::eval, "x")};
  p.models = {{"mA", "A", {"a_e"}}};
  p.unknown_subjects = {"U"};
  EXPECT_NO_THROW(p.validate());
  p.unknown_subjects.insert("A");
  EXPECT_BIOMEVAL_ERROR_MSG(p.validate(), ErrorCode::validation, "unknown subject A");
}

TEST(Protocol, StructuralRules) {
  {
    Protocol p = two_by_three();
    p.samples.push_back(p.samples.front());
    EXPECT_BIOMEVAL_ERROR_MSG(p.validate(), ErrorCode::validation, "duplicate sample_id");
  }
  {
    Protocol p = two_by_three();
    p.samples[2].sub_protocol = "undeclared";
    EXPECT_BIOMEVAL_ERROR_MSG(p.validate(), ErrorCode::validation, "undeclared");
  }
  {
    Protocol p = two_by_three();
    p.samples[0].group = Group::none;
    EXPECT_BIOMEVAL_ERROR_MSG(p.validate(), ErrorCode::validation, "group none");
  }
  {
    Protocol p = two_by_three();
    p.models[0].enroll_sample_ids = {"a_p1"};
    EXPECT_BIOMEVAL_ERROR_MSG(p.validate(), ErrorCode::validation, "non-enroll");
  }
  {
    Protocol p = two_by_three();
    p.models[0].subject_id = "B";
    EXPECT_BIOMEVAL_ERROR(p.validate(), ErrorCode::validation);
  }
  {
    Protocol p = two_by_three();
    p.models[0].enroll_sample_ids.clear();
    EXPECT_BIOMEVAL_ERROR(p.validate(), ErrorCode::validation);
  }
  {
    Protocol p = two_by_three();
    p.fmr_target = 1.0;
    EXPECT_BIOMEVAL_ERROR(p.validate(), ErrorCode::validation);
  }
}

TEST(Protocol, SeveralModelsPerSubjectAreAllowed) {
  Protocol p = two_by_three();
  p.samples.push_back(sample("a_e2", "A", Role::enroll, Group::dev));
  p.models.push_back({"mA2", "A", {"a_e2"}});
  EXPECT_NO_THROW(p.validate());
  EXPECT_EQ(comparison_pairs(p, GroupSelector::dev).size(), 9u);
}

TEST(Protocol, MalformedJsonIsParseError) {
  EXPECT_BIOMEVAL_ERROR(parse_protocol("{"), ErrorCode::parse);
  EXPECT_BIOMEVAL_ERROR(parse_protocol("[]"), ErrorCode::parse);
  EXPECT_BIOMEVAL_ERROR(parse_protocol(R"({"name": "x"})"), ErrorCode::parse);
}

TEST(Protocol, DefaultFmrTarget) {
  const char* text = R"({
    "name": "roc", "kind": "verification_roc_only", "sub_protocols": ["x"],
    "samples": [
      {"sample_id": "s1", "subject_id": "A", "path": "s1.png", "role": "enroll", "group": "none", "sub_protocol": ""},
      {"sample_id": "s2", "subject_id": "A", "path": "s2.png", "role": "probe", "group": "none", "sub_protocol": "x"}
    ],
    "models": [{"model_id": "m", "subject_id": "A", "enroll_sample_ids": ["s1"]}]
  })";
  EXPECT_EQ(parse_protocol(text).fmr_target, 0.001);
}

TEST(Protocol, ComparisonPairsTwoByThree) {
  const auto pairs = comparison_pairs(two_by_three(), GroupSelector::dev);
  ASSERT_EQ(pairs.size(), 6u);
  std::size_t genuine = 0;
  for (const auto& pr : pairs) genuine += pr.is_genuine;
  EXPECT_EQ(genuine, 3u);
  EXPECT_EQ(pairs[0].model_id, "mA");
  EXPECT_EQ(pairs[0].probe_sample_id, "a_p1");
  EXPECT_EQ(pairs[5].model_id, "mB");
  EXPECT_EQ(pairs[5].probe_sample_id, "b_p1");
  for (const auto& pr : pairs) {
    EXPECT_EQ(pr.group, Group::dev);
    EXPECT_EQ(pr.sub_protocol, "x");
  }
  EXPECT_EQ(comparison_pairs(two_by_three(), GroupSelector::eval).size(), 1u);
  EXPECT_EQ(comparison_pairs(two_by_three(), GroupSelector::all).size(), 7u);
}

TEST(Protocol, GroupWithoutProbesIsAnError) {
  Protocol p = two_by_three();
  std::erase_if(p.samples, [](const SampleRecord& s) { return s.sample_id == "c_p"; });
  EXPECT_BIOMEVAL_ERROR_MSG(comparison_pairs(p, GroupSelector::eval), ErrorCode::validation, "no probes");
}

TEST(Protocol, RocOnlySharedGallery) {
  Protocol p;
  p.name = "roc";
  p.kind = ProtocolKind::verification_roc_only;
  p.sub_protocols = {"near", "far"};
  p.samples = {sample("a_e", "A", Role::enroll, Group::none), sample("b_e", "B", Role::enroll, Group::none),
               sample("a_n", "A", Role::probe, Group::none, "near"),
               sample("b_f", "B", Role::probe, Group::none, "far")};
  p.models = {{"mA", "A", {"a_e"}}, {"mB", "B", {"b_e"}}};
  p.validate();
  const auto pairs = comparison_pairs(p, GroupSelector::all);
  EXPECT_EQ(pairs.size(), 4u);
}

TEST(Protocol, PairCountMatchesNestedLoopOracle) {
  const Protocol p = synthetic(50, 5);
  for (auto sel : {GroupSelector::dev, GroupSelector::eval, GroupSelector::all}) {
    std::size_t total = 0, genuine = 0;
    for (const auto& m : p.models) {
      const Group mg = p.find_sample(m.enroll_sample_ids.front())->group;
      for (const auto& s : p.samples) {
        if (s.role != Role::probe) continue;
        const bool in = sel == GroupSelector::all || (sel == GroupSelector::dev && s.group == Group::dev) ||
                        (sel == GroupSelector::eval && s.group == Group::eval);
        if (!in || mg != s.group) continue;
        ++total;
        genuine += s.subject_id == m.subject_id;
      }
    }
    const auto pairs = comparison_pairs(p, sel);
    std::size_t got_genuine = 0;
    for (const auto& pr : pairs) got_genuine += pr.is_genuine;
    EXPECT_EQ(pairs.size(), total);
    EXPECT_EQ(got_genuine, genuine);
  }
}

TEST(Protocol, GenuineCountIdentity) {
  const Protocol p = synthetic(12, 4);
  std::map<std::string, std::size_t> models_of, probes_of;
  for (const auto& m : p.models) ++models_of[m.subject_id];
  for (const auto& s : p.samples) {
    if (s.role == Role::probe) ++probes_of[s.subject_id];
  }
  std::size_t expected = 0;
  for (const auto& [subject, n] : models_of) expected += n * probes_of[subject];
  std::size_t genuine = 0;
  for (const auto& pr : comparison_pairs(p, GroupSelector::all)) genuine += pr.is_genuine;
  EXPECT_EQ(genuine, expected);
}

TEST(Protocol, EnrollSamplesNeverProbe) {
  const Protocol p = synthetic(10, 4);
  for (const auto& pr : comparison_pairs(p, GroupSelector::all)) {
    EXPECT_EQ(p.find_sample(pr.probe_sample_id)->role, Role::probe);
  }
  EXPECT_EQ(comparison_pairs(p, GroupSelector::all), comparison_pairs(p, GroupSelector::all));
}

TEST(Protocol, SaveLoadRoundTripIsByteIdentical) {
  const auto dir = testutil::scratch_dir();
  Protocol p = synthetic(50, 4);
  p.samples[3].landmark_file = "lm/" + p.samples[3].sample_id + ".pos";
  save_protocol(p, dir / "a.json");
  const Protocol q = load_protocol(dir / "a.json");
  Protocol canonical = p;
  canonical.canonicalize();
  EXPECT_EQ(q, canonical);
  save_protocol(q, dir / "b.json");
  EXPECT_EQ(read_text_file(dir / "a.json"), read_text_file(dir / "b.json"));

  // Input order does not leak into the file.
  Protocol shuffled = p;
  std::reverse(shuffled.samples.begin(), shuffled.samples.end());
  std::reverse(shuffled.models.begin(), shuffled.models.end());
  EXPECT_EQ(serialize_protocol(shuffled), read_text_file(dir / "a.json"));
}

TEST(Protocol, TenThousandSamplesSaveAndLoadUnderOneSecond) {
  const auto dir = testutil::scratch_dir();
  const Protocol p = synthetic(2000, 5);
  ASSERT_EQ(p.samples.size(), 10000u);
  const auto start = std::chrono::steady_clock::now();
  save_protocol(p, dir / "big.json");
  const Protocol q = load_protocol(dir / "big.json");
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(q.samples.size(), 10000u);
  EXPECT_LT(seconds, 1.0);
}
