#include "biomeval/score_io.hpp"

#include <cmath>

#include "biomeval/error.hpp"
#include "biomeval/text_io.hpp"

namespace biomeval {

std::vector<ScoreRecord> parse_scores_csv(std::string_view text) {
  const auto lines = split_lines(text, "score file");
  if (lines.empty() || lines[0] != kScoreHeader) {
    throw Error(ErrorCode::parse, "score file: expected header '" + std::string(kScoreHeader) + "'");
  }
  std::vector<ScoreRecord> records;
  records.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string context = "score file line " + std::to_string(i + 1);
    const auto f = split_fields(lines[i]);
    if (f.size() != 7) throw Error(ErrorCode::parse, context + ": expected 7 fields");
    ScoreRecord r;
    r.sub_protocol = std::string(f[0]);
    try {
      r.group = parse_group(f[1]);
    } catch (const Error& e) {
      throw Error(ErrorCode::parse, context + ": " + e.what());
    }
    r.model_id = std::string(f[2]);
    r.reference_subject_id = std::string(f[3]);
    r.probe_sample_id = std::string(f[4]);
    r.probe_subject_id = std::string(f[5]);
    r.score = parse_double(f[6], context);
    if (!std::isfinite(r.score)) throw Error(ErrorCode::parse, context + ": score is not finite");
    r.is_genuine = r.reference_subject_id == r.probe_subject_id;
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<ScoreRecord> load_scores_csv(const std::filesystem::path& path) {
  return parse_scores_csv(read_text_file(path));
}

std::string serialize_scores_csv(std::span<const ScoreRecord> records) {
  std::string out(kScoreHeader);
  out += '\n';
  for (const auto& r : records) {
    for (const std::string* id : {&r.sub_protocol, &r.model_id, &r.reference_subject_id,
                                  &r.probe_sample_id, &r.probe_subject_id}) {
      if (id->find_first_of(",\n\r") != std::string::npos) {
        throw Error(ErrorCode::validation, "identifier '" + *id + "' cannot be written to CSV");
      }
    }
    out += r.sub_protocol;
    out += ',';
    out += to_string(r.group);
    out += ',';
    out += r.model_id;
    out += ',';
    out += r.reference_subject_id;
    out += ',';
    out += r.probe_sample_id;
    out += ',';
    out += r.probe_subject_id;
    out += ',';
    out += format_double(r.score);
    out += '\n';
  }
  return out;
}

void save_scores_csv(std::span<const ScoreRecord> records, const std::filesystem::path& path) {
  write_text_file(path, serialize_scores_csv(records));
}

std::string serialize_roc_csv(std::span<const RocPoint> points) {
  std::string out = "threshold,fmr,fnmr\n";
  for (const auto& p : points) {
    out += format_double(p.threshold) + ',' + format_double(p.fmr) + ',' + format_double(p.fnmr) + '\n';
  }
  return out;
}

std::string serialize_openset_csv(const OpenSetCurve& curve) {
  std::string out = "threshold,fpir,tpir\n";
  for (const auto& p : curve.points) {
    out += format_double(p.threshold) + ',' + format_double(p.fpir) + ',' + format_double(p.tpir) + '\n';
  }
  return out;
}

}  // namespace biomeval
