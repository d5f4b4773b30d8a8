#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace biomeval {

enum class Role { enroll, probe };
enum class Group { dev, eval, none };
enum class ProtocolKind { verification_split, verification_roc_only, open_set };

/// Group filter for comparison_pairs. `all` crosses every model with every
/// probe of a compatible group.
enum class GroupSelector { dev, eval, all };

std::string_view to_string(Role role);
std::string_view to_string(Group group);
std::string_view to_string(ProtocolKind kind);
std::string_view to_string(GroupSelector group);

Role parse_role(std::string_view s);
Group parse_group(std::string_view s);
ProtocolKind parse_protocol_kind(std::string_view s);
GroupSelector parse_group_selector(std::string_view s);

struct SampleRecord {
  std::string sample_id;
  std::string subject_id;
  std::string path;
  Role role = Role::probe;
  Group group = Group::none;
  std::string sub_protocol;
  std::optional<std::string> landmark_file;

  bool operator==(const SampleRecord&) const = default;
};

struct ModelSpec {
  std::string model_id;
  std::string subject_id;
  std::vector<std::string> enroll_sample_ids;

  bool operator==(const ModelSpec&) const = default;
};

inline constexpr double kDefaultFmrTarget = 0.001;

/// Declarative evaluation contract. Build one by hand and call validate(), or
/// use load_protocol(); every Protocol handed to the rest of the library is
/// expected to be valid.
struct Protocol {
  std::string name;
  ProtocolKind kind = ProtocolKind::verification_split;
  double fmr_target = kDefaultFmrTarget;
  std::vector<std::string> sub_protocols;
  std::vector<SampleRecord> samples;
  std::vector<ModelSpec> models;
  std::set<std::string> unknown_subjects;

  bool operator==(const Protocol&) const = default;

  const SampleRecord* find_sample(std::string_view sample_id) const;
  const ModelSpec* find_model(std::string_view model_id) const;

  /// Group of a model: the group of its enrollment samples.
  Group model_group(const ModelSpec& model) const;

  /// Throws Error{validation} naming the first violated rule.
  void validate() const;

  /// Sorts samples, models and enrollment lists into the canonical order used
  /// by save_protocol.
  void canonicalize();
};

Protocol load_protocol(const std::filesystem::path& path);
Protocol parse_protocol(std::string_view json_text);

/// Writes canonical JSON (samples sorted by sample_id, models by model_id,
/// two-space indent, LF newlines). Repeated saves are byte-identical.
void save_protocol(const Protocol& protocol, const std::filesystem::path& path);
std::string serialize_protocol(const Protocol& protocol);

struct ComparisonPair {
  std::string model_id;
  std::string probe_sample_id;
  std::string reference_subject_id;
  std::string probe_subject_id;
  std::string sub_protocol;
  Group group = Group::none;
  bool is_genuine = false;

  bool operator==(const ComparisonPair&) const = default;
};

/// Every model of the group crossed with every probe of the group, ordered by
/// (model_id, probe_sample_id). A model and a probe are compatible when their
/// groups are equal or either one is `none`. Sub-protocol and group come from
/// the probe (falling back to the model's group for group-less probes).
std::vector<ComparisonPair> comparison_pairs(const Protocol& protocol,
                                             GroupSelector group);

}  // namespace biomeval
