// biomeval: command-line front end.
//
//   synth     generate a synthetic protocol + embeddings from a JSON config
//   align     crop images onto a landmark preset
//   extract   run an extractor over the protocol's aligned samples
//   enroll    average enrollment embeddings into templates
//   score     compare templates with probes, write the canonical score file
//   evaluate  threshold policy evaluation (or per-label ROC for roc-only sets)
//   openset   rank-1 TPIR/FPIR curve
//   report    tabulate several evaluation reports
//
// Every command writes a manifest next to its outputs. Errors go to stderr as
// a single line: `biomeval: error: <code>: <message>`.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "biomeval/align.hpp"
#include "biomeval/embedding.hpp"
#include "biomeval/error.hpp"
#include "biomeval/evaluator.hpp"
#include "biomeval/extractor.hpp"
#include "biomeval/image.hpp"
#include "biomeval/manifest.hpp"
#include "biomeval/protocol.hpp"
#include "biomeval/score_io.hpp"
#include "biomeval/simd.hpp"
#include "biomeval/synth.hpp"
#include "biomeval/text_io.hpp"

namespace fs = std::filesystem;
using namespace biomeval;

namespace {

std::size_t default_jobs() {
  if (const char* env = std::getenv("BIOMEVAL_JOBS"); env != nullptr && *env != '\0') {
    const double v = parse_double(env, "BIOMEVAL_JOBS");
    if (v >= 1.0 && v == static_cast<double>(static_cast<std::size_t>(v))) {
      return static_cast<std::size_t>(v);
    }
    throw Error(ErrorCode::invalid_argument, "BIOMEVAL_JOBS must be a positive integer");
  }
  return 1;
}

fs::path manifest_for_file(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

class ManifestScope {
 public:
  explicit ManifestScope(std::string command)
      : start_(std::chrono::steady_clock::now()) {
    manifest_.command = std::move(command);
    manifest_.started_at = utc_timestamp();
  }

  RunManifest& operator*() { return manifest_; }
  RunManifest* operator->() { return &manifest_; }

  void arg(const std::string& name, const std::string& value) {
    manifest_.arguments.push_back(name + "=" + value);
  }

  void write(const fs::path& path) {
    manifest_.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_text_file(path, manifest_.to_json());
  }

 private:
  RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

std::string file_label(const std::string& label) {
  std::string out = label.empty() ? "_" : label;
  for (char& c : out) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ||
                    c == '+';
    if (!ok) c = '_';
  }
  return out;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void run_synth(const SynthArgs& a) {
  ManifestScope m("synth");
  SynthConfig config = parse_synth_config(read_text_file(a.config));
  if (a.seed) config.seed = *a.seed;
  m.arg("config", a.config);
  m.arg("seed", std::to_string(config.seed));
  m->inputs.push_back(a.config);
  m->seeds.push_back(config.seed);

  const fs::path out(a.out);
  const auto result = generate(config);
  save_protocol(result.protocol, out / "protocol.json");
  save_embeddings_csv(result.embeddings, out / "embeddings.csv");
  write_text_file(out / "config.json", serialize_synth_config(config));
  m->outputs = {out / "protocol.json", out / "embeddings.csv", out / "config.json"};
  if (!config.score_slices.empty()) {
    save_scores_csv(generate_scores(config.seed, config.score_slices), out / "parametric_scores.csv");
    m->outputs.push_back(out / "parametric_scores.csv");
  }
  m.write(out / "manifest.json");
}

// ---------------------------------------------------------------- align

struct AlignArgs {
  std::string images;
  std::string annotations;
  std::string spec;
  std::string out;
};

void run_align(const AlignArgs& a) {
  ManifestScope m("align");
  m.arg("images", a.images);
  m.arg("annotations", a.annotations);
  m.arg("spec", a.spec);
  const AlignmentPreset preset = resolve_alignment(a.spec);

  std::vector<fs::path> images;
  for (const auto& entry : fs::recursive_directory_iterator(a.images)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") images.push_back(entry.path());
  }
  std::sort(images.begin(), images.end());

  // Check every annotation before writing anything.
  std::vector<std::pair<fs::path, fs::path>> jobs;
  for (const auto& img : images) {
    const fs::path rel = fs::relative(img, a.images);
    fs::path pos = fs::path(a.annotations) / rel;
    pos.replace_extension(".pos");
    if (!fs::is_regular_file(pos)) {
      throw Error(ErrorCode::missing_annotation, "no annotation " + pos.string() + " for " + img.string());
    }
    jobs.emplace_back(img, pos);
  }

  for (const auto& [img, pos] : jobs) {
    const auto landmarks = load_landmarks(pos);
    const AlignmentSpec& spec = select_spec(preset, landmarks);
    const fs::path target = fs::path(a.out) / fs::relative(img, a.images);
    write_png(align_sample(read_png(img), landmarks, spec), target);
    m->inputs.push_back(img);
    m->inputs.push_back(pos);
    m->outputs.push_back(target);
  }
  m.write(fs::path(a.out) / "manifest.json");
}

// ---------------------------------------------------------------- extract

struct ExtractArgs {
  std::string protocol;
  std::string images;
  std::string extractor;
  std::string out;
};

void run_extract(const ExtractArgs& a) {
  ManifestScope m("extract");
  m.arg("protocol", a.protocol);
  m.arg("images", a.images);
  m.arg("extractor", a.extractor);
  const Protocol protocol = load_protocol(a.protocol);
  auto extractor = make_extractor(a.extractor);

  EmbeddingStore store;
  for (const auto& sample : protocol.samples) {
    ExtractionRequest request{sample.sample_id, fs::path(a.images) / sample.path, nullptr};
    store.add(extract(sample, request, *extractor, store.dimension()));
  }
  if (auto* process = dynamic_cast<ProcessExtractor*>(extractor.get())) process->finish();

  save_embeddings_csv(store, a.out);
  m->inputs = {a.protocol};
  m->outputs = {a.out};
  m.write(manifest_for_file(a.out));
}

// ---------------------------------------------------------------- enroll / score

struct ScoreArgs {
  std::string protocol;
  std::string embeddings;
  std::string templates;
  std::string group = "all";
  std::string similarity = "cosine";
  std::string out;
  std::size_t jobs = 0;
};

std::vector<Template> templates_for(const Protocol& protocol, const EmbeddingStore& store,
                                    GroupSelector group) {
  std::vector<Template> out;
  for (auto& t : enroll_all(protocol, store)) {
    const ModelSpec* model = protocol.find_model(t.model_id);
    const Group g = protocol.model_group(*model);
    const bool keep = group == GroupSelector::all || g == Group::none ||
                      (group == GroupSelector::dev && g == Group::dev) ||
                      (group == GroupSelector::eval && g == Group::eval);
    if (keep) out.push_back(std::move(t));
  }
  return out;
}

void run_enroll(const ScoreArgs& a) {
  ManifestScope m("enroll");
  m.arg("protocol", a.protocol);
  m.arg("embeddings", a.embeddings);
  m.arg("group", a.group);
  const Protocol protocol = load_protocol(a.protocol);
  const EmbeddingStore store = load_embeddings_csv(a.embeddings);
  const auto templates = templates_for(protocol, store, parse_group_selector(a.group));
  save_templates_csv(templates, a.out);
  m->inputs = {a.protocol, a.embeddings};
  m->outputs = {a.out};
  m.write(manifest_for_file(a.out));
}

Similarity parse_similarity(const std::string& s) {
  if (s == "cosine") return Similarity::cosine;
  if (s == "negated-euclidean") return Similarity::negated_euclidean;
  throw Error(ErrorCode::invalid_argument, "unknown similarity '" + s + "'");
}

void run_score(const ScoreArgs& a) {
  ManifestScope m("score");
  m.arg("protocol", a.protocol);
  m.arg("embeddings", a.embeddings);
  m.arg("templates", a.templates);
  m.arg("group", a.group);
  m.arg("similarity", a.similarity);
  const Protocol protocol = load_protocol(a.protocol);
  const EmbeddingStore store = load_embeddings_csv(a.embeddings);
  const GroupSelector group = parse_group_selector(a.group);
  const auto templates = a.templates.empty() ? templates_for(protocol, store, group)
                                             : load_templates_csv(a.templates);
  ScoreOptions options;
  options.similarity = parse_similarity(a.similarity);
  options.jobs = a.jobs > 0 ? a.jobs : default_jobs();
  const auto records = score_protocol(protocol, templates, store, group, options);
  save_scores_csv(records, a.out);
  m->inputs = {a.protocol, a.embeddings};
  if (!a.templates.empty()) m->inputs.push_back(a.templates);
  m->outputs = {a.out};
  m.write(manifest_for_file(a.out));
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string scores;
  std::string protocol;
  std::string policy = "combined";
  std::optional<double> fmr_target;
  std::string out;
  std::string curves;
};

ProtocolKind infer_kind(const std::vector<ScoreRecord>& records) {
  const bool any_none = std::any_of(records.begin(), records.end(),
                                    [](const ScoreRecord& r) { return r.group == Group::none; });
  return any_none ? ProtocolKind::verification_roc_only : ProtocolKind::verification_split;
}

void write_roc_curves(const fs::path& dir, const std::string& prefix,
                      const std::map<std::string, std::vector<RocPoint>>& curves, RunManifest& m) {
  for (const auto& [label, points] : curves) {
    const fs::path path = dir / (prefix + file_label(label) + ".csv");
    write_text_file(path, serialize_roc_csv(points));
    m.outputs.push_back(path);
  }
}

std::map<std::string, std::vector<RocPoint>> per_label_roc(const std::vector<ScoreRecord>& records) {
  std::map<std::string, std::vector<ScoreRecord>> by_label;
  for (const auto& r : records) by_label[r.sub_protocol].push_back(r);
  std::map<std::string, std::vector<RocPoint>> out;
  for (const auto& [label, rs] : by_label) {
    const auto set = ScoreSet::from_records(rs);
    if (set.genuine_count() > 0 && set.impostor_count() > 0) out[label] = roc_points(set);
  }
  return out;
}

void run_evaluate(const EvaluateArgs& a) {
  ManifestScope m("evaluate");
  m.arg("scores", a.scores);
  m.arg("protocol", a.protocol);
  m.arg("policy", a.policy);
  const auto records = load_scores_csv(a.scores);
  m->inputs = {a.scores};

  std::optional<Protocol> protocol;
  if (!a.protocol.empty()) {
    protocol = load_protocol(a.protocol);
    m->inputs.push_back(a.protocol);
  }
  const ProtocolKind kind = protocol ? protocol->kind : infer_kind(records);
  const double alpha = a.fmr_target ? *a.fmr_target : (protocol ? protocol->fmr_target : kDefaultFmrTarget);
  m.arg("fmr_target", format_double(alpha));

  if (a.policy == "roc") {
    const auto curves = roc_evaluate(records, kind);
    nlohmann::ordered_json j;
    j["policy"] = {{"variant", "roc"}};
    nlohmann::ordered_json labels = nlohmann::ordered_json::object();
    for (const auto& [label, points] : curves) {
      const auto eer = eer_threshold(ScoreSet::from_records([&] {
        std::vector<ScoreRecord> rs;
        for (const auto& r : records) {
          if (r.sub_protocol == label) rs.push_back(r);
        }
        return rs;
      }()));
      labels[label] = {{"points", points.size()}, {"eer", eer.eer}, {"eer_threshold", eer.threshold}};
    }
    j["per_sub_protocol"] = std::move(labels);
    write_text_file(a.out, j.dump(2) + "\n");
    m->outputs.push_back(a.out);
    if (!a.curves.empty()) write_roc_curves(a.curves, "roc_", curves, *m);
    m.write(manifest_for_file(a.out));
    return;
  }

  ThresholdPolicy policy{parse_policy_variant(a.policy), alpha};
  const auto result = evaluate(records, policy, kind);
  for (const auto& w : result.warnings) std::cerr << "biomeval: warning: " << w << "\n";
  write_text_file(a.out, serialize_evaluation(result));
  m->outputs.push_back(a.out);
  if (!a.curves.empty()) {
    std::vector<ScoreRecord> dev, eval;
    for (const auto& r : records) (r.group == Group::dev ? dev : eval).push_back(r);
    write_roc_curves(a.curves, "roc_dev_", per_label_roc(dev), *m);
    write_roc_curves(a.curves, "roc_eval_", per_label_roc(eval), *m);
  }
  m.write(manifest_for_file(a.out));
}

// ---------------------------------------------------------------- openset

struct OpensetArgs {
  std::string protocol;
  std::string embeddings;
  std::string scores;
  std::string out;
  std::string report;
  std::size_t jobs = 0;
};

void run_openset(const OpensetArgs& a) {
  ManifestScope m("openset");
  m.arg("protocol", a.protocol);
  m.arg("embeddings", a.embeddings);
  m.arg("scores", a.scores);
  if (a.embeddings.empty() == a.scores.empty()) {
    throw Error(ErrorCode::invalid_argument, "give exactly one of --embeddings or --scores");
  }
  OpenSetResult result;
  if (!a.embeddings.empty()) {
    if (a.protocol.empty()) throw Error(ErrorCode::invalid_argument, "--embeddings requires --protocol");
    const Protocol protocol = load_protocol(a.protocol);
    const EmbeddingStore store = load_embeddings_csv(a.embeddings);
    ScoreOptions options;
    options.jobs = a.jobs > 0 ? a.jobs : default_jobs();
    result = openset_evaluate(protocol, enroll_all(protocol, store), store, options);
    m->inputs = {a.protocol, a.embeddings};
  } else {
    if (!a.protocol.empty()) {
      const Protocol protocol = load_protocol(a.protocol);
      if (protocol.kind != ProtocolKind::open_set) {
        throw Error(ErrorCode::policy_mismatch, "open-set evaluation needs an open_set protocol");
      }
      m->inputs.push_back(a.protocol);
    }
    result = openset_from_scores(load_scores_csv(a.scores));
    m->inputs.push_back(a.scores);
  }

  write_text_file(a.out, serialize_openset_csv(result.curve));
  m->outputs = {a.out};
  const fs::path report = a.report.empty() ? fs::path(a.out).replace_extension(".json") : fs::path(a.report);
  static constexpr double kFpirs[] = {0.001, 0.01, 0.1, 1.0};
  write_text_file(report, serialize_openset(result, kFpirs));
  m->outputs.push_back(report);
  m.write(manifest_for_file(a.out));
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out;
};

std::string cell(const nlohmann::json& v) {
  if (v.is_null()) return "-";
  if (v.is_number()) return format_double(v.get<double>());
  return v.get<std::string>();
}

void run_report(const ReportArgs& a) {
  ManifestScope m("report");
  std::set<std::string> labels;
  std::vector<std::pair<std::string, nlohmann::json>> reports;
  for (const auto& path : a.inputs) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::parse, path + ": " + e.what());
    }
    if (!j.contains("eval") || !j.contains("policy")) {
      throw Error(ErrorCode::parse, path + ": not an evaluation report");
    }
    for (const auto& [label, v] : j["eval"]["per_sub_protocol"].items()) labels.insert(label);
    reports.emplace_back(fs::path(path).stem().string(), std::move(j));
    m->inputs.push_back(path);
    m.arg("input", path);
  }

  std::vector<std::string> header = {"report", "policy", "alpha", "thresholds", "eval_fmr", "eval_fnmr",
                                     "eval_hter"};
  for (const auto& l : labels) {
    header.push_back("fmr[" + l + "]");
    header.push_back("fnmr[" + l + "]");
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& [name, j] : reports) {
    std::string thresholds;
    for (const auto& [label, t] : j["thresholds"].items()) {
      if (!thresholds.empty()) thresholds += ' ';
      thresholds += label + "=" + cell(t);
    }
    std::vector<std::string> row = {name, cell(j["policy"]["variant"]), cell(j["policy"]["alpha"]),
                                    thresholds, cell(j["eval"]["fmr"]), cell(j["eval"]["fnmr"]),
                                    cell(j["eval"]["hter"])};
    for (const auto& l : labels) {
      const auto& per = j["eval"]["per_sub_protocol"];
      row.push_back(per.contains(l) ? cell(per[l]["fmr"]) : "-");
      row.push_back(per.contains(l) ? cell(per[l]["fnmr"]) : "-");
    }
    rows.push_back(std::move(row));
  }

  std::string text;
  if (fs::path(a.out).extension() == ".csv") {
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
      return s + "\n";
    };
    text = join(header);
    for (const auto& r : rows) text += join(r);
  } else {
    auto join = [](const std::vector<std::string>& v) {
      std::string s = "|";
      for (const auto& c : v) s += " " + c + " |";
      return s + "\n";
    };
    text = join(header);
    text += join(std::vector<std::string>(header.size(), "---"));
    for (const auto& r : rows) text += join(r);
  }
  write_text_file(a.out, text);
  m->outputs = {a.out};
  m.write(manifest_for_file(a.out));
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"biomeval: biometric recognition evaluation engine"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic protocol and embeddings");
  synth_cmd->add_option("--config", synth.config, "Synth config JSON")->required();
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "Override the config seed");

  AlignArgs align;
  auto* align_cmd = app.add_subcommand("align", "Align images onto preset landmark positions");
  align_cmd->add_option("--images", align.images, "Directory of PNG images")->required();
  align_cmd->add_option("--annotations", align.annotations, "Directory of .pos landmark files")->required();
  align_cmd->add_option("--spec", align.spec, "Preset name or alignment spec JSON")->required();
  align_cmd->add_option("--out", align.out, "Output directory")->required();

  ExtractArgs extract_args;
  auto* extract_cmd = app.add_subcommand("extract", "Extract embeddings for every protocol sample");
  extract_cmd->add_option("--protocol", extract_args.protocol)->required();
  extract_cmd->add_option("--images", extract_args.images, "Root of the aligned images")->required();
  extract_cmd->add_option("--extractor", extract_args.extractor,
                          "downsample:<H>x<W>:<block> | file:<csv> | exec:<command>")
      ->required();
  extract_cmd->add_option("--out", extract_args.out, "Embedding CSV")->required();

  ScoreArgs enroll_args;
  auto* enroll_cmd = app.add_subcommand("enroll", "Average enrollment embeddings into templates");
  enroll_cmd->add_option("--protocol", enroll_args.protocol)->required();
  enroll_cmd->add_option("--embeddings", enroll_args.embeddings)->required();
  enroll_cmd->add_option("--group", enroll_args.group, "dev | eval | all");
  enroll_cmd->add_option("--out", enroll_args.out, "Template CSV")->required();

  ScoreArgs score_args;
  auto* score_cmd = app.add_subcommand("score", "Score templates against probes");
  score_cmd->add_option("--protocol", score_args.protocol)->required();
  score_cmd->add_option("--embeddings", score_args.embeddings)->required();
  score_cmd->add_option("--templates", score_args.templates, "Template CSV (default: enroll on the fly)");
  score_cmd->add_option("--group", score_args.group, "dev | eval | all");
  score_cmd->add_option("--similarity", score_args.similarity, "cosine | negated-euclidean");
  score_cmd->add_option("--jobs", score_args.jobs, "Worker threads (default: BIOMEVAL_JOBS or 1)");
  score_cmd->add_option("--out", score_args.out, "Score CSV")->required();

  EvaluateArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a score file under a threshold policy");
  eval_cmd->add_option("--scores", eval_args.scores)->required();
  eval_cmd->add_option("--protocol", eval_args.protocol, "Protocol JSON (kind and default FMR target)");
  eval_cmd->add_option("--policy", eval_args.policy, "combined | per-subprotocol | on-eval | eer-hter | roc");
  eval_cmd->add_option("--fmr-target", eval_args.fmr_target, "FMR target (default 0.001)");
  eval_cmd->add_option("--out", eval_args.out, "Report JSON")->required();
  eval_cmd->add_option("--curves", eval_args.curves, "Directory for per-sub-protocol ROC CSVs");

  OpensetArgs open_args;
  auto* open_cmd = app.add_subcommand("openset", "Open-set rank-1 TPIR/FPIR curve");
  open_cmd->add_option("--protocol", open_args.protocol);
  open_cmd->add_option("--embeddings", open_args.embeddings);
  open_cmd->add_option("--scores", open_args.scores);
  open_cmd->add_option("--jobs", open_args.jobs);
  open_cmd->add_option("--out", open_args.out, "Curve CSV")->required();
  open_cmd->add_option("--report", open_args.report, "Summary JSON (default: <out>.json)");

  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "Tabulate evaluation reports");
  report_cmd->add_option("--inputs", report_args.inputs, "Report JSON files")->required();
  report_cmd->add_option("--out", report_args.out, "Markdown (.md) or CSV (.csv) table")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "biomeval: error: invalid_argument: " << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    if (*synth_cmd) run_synth(synth);
    if (*align_cmd) run_align(align);
    if (*extract_cmd) run_extract(extract_args);
    if (*enroll_cmd) run_enroll(enroll_args);
    if (*score_cmd) run_score(score_args);
    if (*eval_cmd) run_evaluate(eval_args);
    if (*open_cmd) run_openset(open_args);
    if (*report_cmd) run_report(report_args);
  } catch (const Error& e) {
    std::cerr << "biomeval: error: " << to_string(e.code()) << ": " << one_line(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "biomeval: error: internal: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
