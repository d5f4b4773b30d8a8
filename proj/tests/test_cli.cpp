#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <nlohmann/json.hpp>

#include "biomeval/align.hpp"
#include "biomeval/image.hpp"
#include "biomeval/manifest.hpp"
#include "biomeval/protocol.hpp"
#include "biomeval/score_io.hpp"
#include "biomeval/text_io.hpp"
#include "test_util.hpp"

using namespace biomeval;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int status;
  std::string err;
};

RunResult run(const fs::path& dir, const std::string& args) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(BIOMEVAL_CLI_PATH) + " " + args + " 2> '" + err.string() + "'";
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, fs::exists(err) ? read_text_file(err) : ""};
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

void write_synth_config(const fs::path& path, std::uint64_t seed) {
  write_text_file(path, R"({"seed": )" + std::to_string(seed) + R"(, "n_subjects": 12, "samples_per_subject": 4,
    "dim": 8, "noise_sigma": 0.4,
    "sub_protocols": [{"label": "near", "extra_noise": 0.0}, {"label": "far", "extra_noise": 0.3}]})");
}

}  // namespace

TEST(Cli, ErrorsAreSingleLine) {
  const auto dir = testutil::scratch_dir();
  const auto r = run(dir, "evaluate --scores " + q(dir / "nope.csv") + " --out " + q(dir / "r.json"));
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.err.rfind("biomeval: error: io_error: ", 0), 0u) << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
  EXPECT_NE(run(dir, "bogus").status, 0);
}

TEST(Cli, SynthIsDeterministic) {
  const auto dir = testutil::scratch_dir();
  write_synth_config(dir / "cfg.json", 5);
  ASSERT_EQ(run(dir, "synth --config " + q(dir / "cfg.json") + " --out " + q(dir / "a")).status, 0);
  ASSERT_EQ(run(dir, "synth --config " + q(dir / "cfg.json") + " --out " + q(dir / "b")).status, 0);
  for (const char* f : {"protocol.json", "embeddings.csv", "config.json"}) {
    EXPECT_EQ(sha256_file(dir / "a" / f), sha256_file(dir / "b" / f)) << f;
  }
  const auto m = nlohmann::json::parse(read_text_file(dir / "a" / "manifest.json"));
  EXPECT_EQ(m["command"], "synth");
  EXPECT_EQ(m["seeds"][0], 5);
  EXPECT_EQ(m["outputs"].size(), 3u);
}

TEST(Cli, PipelineAndPolicies) {
  const auto dir = testutil::scratch_dir();
  write_synth_config(dir / "cfg.json", 6);
  ASSERT_EQ(run(dir, "synth --config " + q(dir / "cfg.json") + " --out " + q(dir / "s")).status, 0);
  const std::string proto = q(dir / "s" / "protocol.json");
  const std::string emb = q(dir / "s" / "embeddings.csv");
  ASSERT_EQ(run(dir, "enroll --protocol " + proto + " --embeddings " + emb + " --out " + q(dir / "t.csv")).status, 0);
  ASSERT_EQ(run(dir, "score --protocol " + proto + " --embeddings " + emb + " --templates " + q(dir / "t.csv") +
                         " --group all --out " + q(dir / "scores.csv"))
                .status,
            0);
  EXPECT_TRUE(fs::exists(dir / "t.csv.manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "scores.csv.manifest.json"));

  const auto records = load_scores_csv(dir / "scores.csv");
  const auto pairs = comparison_pairs(load_protocol(dir / "s" / "protocol.json"), GroupSelector::all);
  ASSERT_EQ(records.size(), pairs.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(records[i].is_genuine, records[i].reference_subject_id == records[i].probe_subject_id);
    EXPECT_EQ(records[i].model_id, pairs[i].model_id);
  }

  std::vector<std::string> reports;
  for (const char* policy : {"combined", "per-subprotocol", "on-eval", "eer-hter"}) {
    const fs::path out = dir / (std::string(policy) + ".json");
    const auto r = run(dir, "evaluate --scores " + q(dir / "scores.csv") + " --policy " + policy +
                                " --fmr-target 0.05 --out " + q(out) + " --curves " + q(dir / "curves"));
    ASSERT_EQ(r.status, 0) << r.err;
    if (std::string(policy) == "on-eval") {
      EXPECT_NE(r.err.find("warning"), std::string::npos);
    }
    reports.push_back(q(out));
  }
  EXPECT_TRUE(fs::exists(dir / "curves" / "roc_eval_far.csv"));

  std::string inputs;
  for (const auto& r : reports) inputs += " " + r;
  ASSERT_EQ(run(dir, "report --inputs" + inputs + " --out " + q(dir / "table.md")).status, 0);
  const auto table = read_text_file(dir / "table.md");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 6);
  const auto combined = nlohmann::json::parse(read_text_file(dir / "combined.json"));
  const std::string t = "combined=" + format_double(combined["thresholds"]["combined"].get<double>());
  EXPECT_NE(table.find(t), std::string::npos);
  ASSERT_EQ(run(dir, "report --inputs" + inputs + " --out " + q(dir / "table.csv")).status, 0);
  const auto csv = read_text_file(dir / "table.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(Cli, DefaultFmrTarget) {
  const auto dir = testutil::scratch_dir();
  write_text_file(dir / "s.csv", std::string(kScoreHeader) +
                                     "\nx,dev,m1,A,p1,A,0.9\nx,dev,m1,A,p2,B,0.1\n"
                                     "x,eval,m2,C,p3,C,0.8\nx,eval,m2,C,p4,D,0.2\n");
  ASSERT_EQ(run(dir, "evaluate --scores " + q(dir / "s.csv") + " --out " + q(dir / "r.json")).status, 0);
  const auto j = nlohmann::json::parse(read_text_file(dir / "r.json"));
  EXPECT_EQ(j["policy"]["alpha"], 0.001);
}

TEST(Cli, OpensetSeparableFixture) {
  const auto dir = testutil::scratch_dir();
  write_text_file(dir / "s.csv", std::string(kScoreHeader) +
                                     "\nx,eval,mA,A,pA,A,0.9\nx,eval,mB,B,pA,A,0.1\n"
                                     "x,eval,mA,A,pB,B,0.2\nx,eval,mB,B,pB,B,0.8\n"
                                     "x,eval,mA,A,pU,U,0.3\nx,eval,mB,B,pU,U,0.4\n");
  const auto r = run(dir, "openset --scores " + q(dir / "s.csv") + " --out " + q(dir / "curve.csv"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(read_text_file(dir / "curve.csv").find("\n0.8,0,1\n"), std::string::npos)
      << read_text_file(dir / "curve.csv");
  const auto j = nlohmann::json::parse(read_text_file(dir / "curve.json"));
  EXPECT_EQ(j["closed_set_rank1"], 1.0);
}

TEST(Cli, AlignThreeImages) {
  const auto dir = testutil::scratch_dir();
  Image img(200, 180, 3, 90.0);
  for (const char* name : {"a", "b", "sub/c"}) {
    write_png(img, dir / "img" / (std::string(name) + ".png"));
  }
  write_text_file(dir / "ann" / "a.pos", "right_eye 80 70\nleft_eye 82 120\n");
  write_text_file(dir / "ann" / "b.pos", "right_eye 60 60\nleft_eye 60 100\n");
  write_text_file(dir / "ann" / "sub" / "c.pos", "left_eye 70 90\nmouth 140 92\n");
  for (const char* preset : {"arcface112", "facenet160"}) {
    const fs::path out = dir / preset;
    const auto r = run(dir, "align --images " + q(dir / "img") + " --annotations " + q(dir / "ann") + " --spec " +
                                preset + " --out " + q(out));
    ASSERT_EQ(r.status, 0) << r.err;
    const std::size_t size = std::string(preset) == "arcface112" ? 112 : 160;
    for (const char* name : {"a", "b", "sub/c"}) {
      const Image aligned = read_png(out / (std::string(name) + ".png"));
      EXPECT_EQ(aligned.height, size);
      EXPECT_EQ(aligned.width, size);
    }
    EXPECT_TRUE(fs::exists(out / "manifest.json"));
  }
  const auto before = sha256_file(dir / "arcface112" / "a.png");
  ASSERT_EQ(run(dir, "align --images " + q(dir / "img") + " --annotations " + q(dir / "ann") +
                         " --spec arcface112 --out " + q(dir / "arcface112"))
                .status,
            0);
  EXPECT_EQ(sha256_file(dir / "arcface112" / "a.png"), before);

  auto r = run(dir, "align --images " + q(dir / "img") + " --annotations " + q(dir / "ann") +
                        " --spec vgg --out " + q(dir / "x"));
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("unknown_preset"), std::string::npos) << r.err;
  fs::remove(dir / "ann" / "b.pos");
  r = run(dir, "align --images " + q(dir / "img") + " --annotations " + q(dir / "ann") + " --spec arcface112 --out " +
                   q(dir / "y"));
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("missing_annotation"), std::string::npos) << r.err;
}

TEST(Cli, ExtractDownsample) {
  const auto dir = testutil::scratch_dir();
  write_synth_config(dir / "cfg.json", 8);
  ASSERT_EQ(run(dir, "synth --config " + q(dir / "cfg.json") + " --out " + q(dir / "s")).status, 0);
  const auto p = load_protocol(dir / "s" / "protocol.json");
  std::size_t k = 0;
  for (const auto& s : p.samples) {
    Image img(16, 16, 1, static_cast<double>(k++ % 200 + 10));
    img.at(0, 0, 0) = static_cast<double>(k % 7);
    write_png(img, dir / "aligned" / s.path);
  }
  const auto r = run(dir, "extract --protocol " + q(dir / "s" / "protocol.json") + " --images " +
                              q(dir / "aligned") + " --extractor downsample:16x16:4 --out " + q(dir / "e.csv"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto header = read_text_file(dir / "e.csv").substr(0, 60);
  EXPECT_EQ(header.rfind("sample_id,subject_id,v0,", 0), 0u);
}
