#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biomeval/metrics.hpp"

namespace biomeval {

/// Header of the canonical score file.
inline constexpr std::string_view kScoreHeader =
    "sub_protocol,group,model_id,reference_subject_id,probe_sample_id,probe_subject_id,score";

/// is_genuine is derived from reference_subject_id == probe_subject_id.
std::vector<ScoreRecord> parse_scores_csv(std::string_view text);
std::vector<ScoreRecord> load_scores_csv(const std::filesystem::path& path);

/// Scores use the shortest round-trip decimal form, so parse(serialize(x)) == x.
std::string serialize_scores_csv(std::span<const ScoreRecord> records);
void save_scores_csv(std::span<const ScoreRecord> records, const std::filesystem::path& path);

std::string serialize_roc_csv(std::span<const RocPoint> points);      // threshold,fmr,fnmr
std::string serialize_openset_csv(const OpenSetCurve& curve);          // threshold,fpir,tpir

}  // namespace biomeval
