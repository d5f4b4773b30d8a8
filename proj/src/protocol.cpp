#include "biomeval/protocol.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "biomeval/error.hpp"
#include "biomeval/text_io.hpp"

namespace biomeval {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Role role) {
  return role == Role::enroll ? "enroll" : "probe";
}

std::string_view to_string(Group group) {
  switch (group) {
    case Group::dev: return "dev";
    case Group::eval: return "eval";
    case Group::none: return "none";
  }
  return "none";
}

std::string_view to_string(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::verification_split: return "verification_split";
    case ProtocolKind::verification_roc_only: return "verification_roc_only";
    case ProtocolKind::open_set: return "open_set";
  }
  return "verification_split";
}

std::string_view to_string(GroupSelector group) {
  switch (group) {
    case GroupSelector::dev: return "dev";
    case GroupSelector::eval: return "eval";
    case GroupSelector::all: return "all";
  }
  return "all";
}

Role parse_role(std::string_view s) {
  if (s == "enroll") return Role::enroll;
  if (s == "probe") return Role::probe;
  throw Error(ErrorCode::parse, "invalid role '" + std::string(s) + "'");
}

Group parse_group(std::string_view s) {
  if (s == "dev") return Group::dev;
  if (s == "eval") return Group::eval;
  if (s == "none") return Group::none;
  throw Error(ErrorCode::parse, "invalid group '" + std::string(s) + "'");
}

ProtocolKind parse_protocol_kind(std::string_view s) {
  if (s == "verification_split") return ProtocolKind::verification_split;
  if (s == "verification_roc_only") return ProtocolKind::verification_roc_only;
  if (s == "open_set") return ProtocolKind::open_set;
  throw Error(ErrorCode::parse, "invalid protocol kind '" + std::string(s) + "'");
}

GroupSelector parse_group_selector(std::string_view s) {
  if (s == "dev") return GroupSelector::dev;
  if (s == "eval") return GroupSelector::eval;
  if (s == "all") return GroupSelector::all;
  throw Error(ErrorCode::invalid_argument, "invalid group '" + std::string(s) + "'");
}

const SampleRecord* Protocol::find_sample(std::string_view sample_id) const {
  auto it = std::find_if(samples.begin(), samples.end(),
                         [&](const SampleRecord& s) { return s.sample_id == sample_id; });
  return it == samples.end() ? nullptr : &*it;
}

const ModelSpec* Protocol::find_model(std::string_view model_id) const {
  auto it = std::find_if(models.begin(), models.end(),
                         [&](const ModelSpec& m) { return m.model_id == model_id; });
  return it == models.end() ? nullptr : &*it;
}

Group Protocol::model_group(const ModelSpec& model) const {
  if (model.enroll_sample_ids.empty()) return Group::none;
  const SampleRecord* s = find_sample(model.enroll_sample_ids.front());
  return s == nullptr ? Group::none : s->group;
}

namespace {

[[noreturn]] void invalid(const std::string& message) {
  throw Error(ErrorCode::validation, message);
}

}  // namespace

void Protocol::validate() const {
  if (!(fmr_target > 0.0 && fmr_target < 1.0)) {
    invalid("fmr_target must lie in (0,1)");
  }

  std::unordered_set<std::string> labels;
  for (const auto& label : sub_protocols) {
    if (!labels.insert(label).second) invalid("duplicate sub-protocol label '" + label + "'");
  }

  std::unordered_map<std::string, const SampleRecord*> by_id;
  by_id.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.sample_id.empty()) invalid("sample with empty sample_id");
    if (s.subject_id.empty()) invalid("sample " + s.sample_id + " has empty subject_id");
    if (!by_id.emplace(s.sample_id, &s).second) invalid("duplicate sample_id " + s.sample_id);
    if (s.group == Group::none && kind != ProtocolKind::verification_roc_only) {
      invalid("sample " + s.sample_id + " has group none outside a roc-only protocol");
    }
    if (s.role == Role::probe && !labels.contains(s.sub_protocol)) {
      invalid("probe " + s.sample_id + " uses undeclared sub-protocol '" + s.sub_protocol + "'");
    }
    if (s.role == Role::enroll && !s.sub_protocol.empty() && !labels.contains(s.sub_protocol)) {
      invalid("sample " + s.sample_id + " uses undeclared sub-protocol '" + s.sub_protocol + "'");
    }
  }

  std::unordered_set<std::string> model_ids;
  std::unordered_set<std::string> enrolled_subjects;
  for (const auto& m : models) {
    if (m.model_id.empty()) invalid("model with empty model_id");
    if (!model_ids.insert(m.model_id).second) invalid("duplicate model_id " + m.model_id);
    if (m.enroll_sample_ids.empty()) invalid("model " + m.model_id + " has no enrollment samples");
    std::optional<Group> group;
    for (const auto& id : m.enroll_sample_ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) invalid("model " + m.model_id + " references unknown sample " + id);
      const SampleRecord& s = *it->second;
      if (s.role != Role::enroll) invalid("model " + m.model_id + " enrolls non-enroll sample " + id);
      if (s.subject_id != m.subject_id) {
        invalid("model " + m.model_id + " enrolls sample " + id + " of subject " + s.subject_id);
      }
      if (group && *group != s.group) invalid("model " + m.model_id + " mixes groups");
      group = s.group;
    }
    enrolled_subjects.insert(m.subject_id);
  }

  if (kind == ProtocolKind::verification_split) {
    std::set<std::string> dev_subjects;
    std::set<std::string> eval_subjects;
    for (const auto& s : samples) {
      (s.group == Group::dev ? dev_subjects : eval_subjects).insert(s.subject_id);
    }
    if (dev_subjects.empty()) invalid("dev group empty");
    if (eval_subjects.empty()) invalid("eval group empty");
    for (const auto& subject : dev_subjects) {
      if (eval_subjects.contains(subject)) {
        invalid("subject " + subject + " appears in both dev and eval");
      }
    }
  }

  if (kind == ProtocolKind::open_set) {
    for (const auto& subject : unknown_subjects) {
      if (enrolled_subjects.contains(subject)) {
        invalid("unknown subject " + subject + " is enrolled in the gallery");
      }
    }
  } else if (!unknown_subjects.empty()) {
    invalid("unknown_subjects is only allowed in open_set protocols");
  }
}

void Protocol::canonicalize() {
  std::sort(samples.begin(), samples.end(),
            [](const SampleRecord& a, const SampleRecord& b) { return a.sample_id < b.sample_id; });
  for (auto& m : models) std::sort(m.enroll_sample_ids.begin(), m.enroll_sample_ids.end());
  std::sort(models.begin(), models.end(),
            [](const ModelSpec& a, const ModelSpec& b) { return a.model_id < b.model_id; });
}

namespace {

template <typename T>
T field(const ordered_json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::parse, std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

Protocol parse_protocol(std::string_view json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::parse, std::string("malformed protocol JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::parse, "protocol JSON must be an object");

  Protocol p;
  p.name = field<std::string>(j, "name");
  p.kind = parse_protocol_kind(field<std::string>(j, "kind"));
  p.fmr_target = j.contains("fmr_target") ? field<double>(j, "fmr_target") : kDefaultFmrTarget;
  p.sub_protocols = field<std::vector<std::string>>(j, "sub_protocols");

  const auto samples = field<ordered_json>(j, "samples");
  if (!samples.is_array()) throw Error(ErrorCode::parse, "'samples' must be an array");
  p.samples.reserve(samples.size());
  for (const auto& s : samples) {
    SampleRecord r;
    r.sample_id = field<std::string>(s, "sample_id");
    r.subject_id = field<std::string>(s, "subject_id");
    r.path = field<std::string>(s, "path");
    r.role = parse_role(field<std::string>(s, "role"));
    r.group = parse_group(field<std::string>(s, "group"));
    r.sub_protocol = field<std::string>(s, "sub_protocol");
    if (s.contains("landmark_file") && !s.at("landmark_file").is_null()) {
      r.landmark_file = field<std::string>(s, "landmark_file");
    }
    p.samples.push_back(std::move(r));
  }

  const auto models = field<ordered_json>(j, "models");
  if (!models.is_array()) throw Error(ErrorCode::parse, "'models' must be an array");
  for (const auto& m : models) {
    ModelSpec spec;
    spec.model_id = field<std::string>(m, "model_id");
    spec.subject_id = field<std::string>(m, "subject_id");
    spec.enroll_sample_ids = field<std::vector<std::string>>(m, "enroll_sample_ids");
    p.models.push_back(std::move(spec));
  }

  if (j.contains("unknown_subjects")) {
    for (auto& s : field<std::vector<std::string>>(j, "unknown_subjects")) {
      p.unknown_subjects.insert(std::move(s));
    }
  }

  p.validate();
  return p;
}

Protocol load_protocol(const std::filesystem::path& path) {
  return parse_protocol(read_text_file(path));
}

std::string serialize_protocol(const Protocol& protocol) {
  Protocol p = protocol;
  p.canonicalize();

  ordered_json j;
  j["name"] = p.name;
  j["kind"] = to_string(p.kind);
  j["fmr_target"] = p.fmr_target;
  j["sub_protocols"] = p.sub_protocols;
  ordered_json samples = ordered_json::array();
  for (const auto& s : p.samples) {
    ordered_json o;
    o["sample_id"] = s.sample_id;
    o["subject_id"] = s.subject_id;
    o["path"] = s.path;
    o["role"] = to_string(s.role);
    o["group"] = to_string(s.group);
    o["sub_protocol"] = s.sub_protocol;
    if (s.landmark_file) o["landmark_file"] = *s.landmark_file;
    samples.push_back(std::move(o));
  }
  j["samples"] = std::move(samples);
  ordered_json models = ordered_json::array();
  for (const auto& m : p.models) {
    ordered_json o;
    o["model_id"] = m.model_id;
    o["subject_id"] = m.subject_id;
    o["enroll_sample_ids"] = m.enroll_sample_ids;
    models.push_back(std::move(o));
  }
  j["models"] = std::move(models);
  j["unknown_subjects"] = ordered_json(std::vector<std::string>(p.unknown_subjects.begin(),
                                                                 p.unknown_subjects.end()));
  return j.dump(2) + "\n";
}

void save_protocol(const Protocol& protocol, const std::filesystem::path& path) {
  write_text_file(path, serialize_protocol(protocol));
}

std::vector<ComparisonPair> comparison_pairs(const Protocol& protocol, GroupSelector group) {
  auto selected = [&](Group g) {
    switch (group) {
      case GroupSelector::dev: return g == Group::dev;
      case GroupSelector::eval: return g == Group::eval;
      case GroupSelector::all: return true;
    }
    return false;
  };
  auto compatible = [](Group a, Group b) { return a == b || a == Group::none || b == Group::none; };

  std::vector<const SampleRecord*> probes;
  for (const auto& s : protocol.samples) {
    if (s.role == Role::probe && selected(s.group)) probes.push_back(&s);
  }
  if (probes.empty()) {
    throw Error(ErrorCode::validation,
                "group " + std::string(to_string(group)) + " has no probes");
  }
  std::sort(probes.begin(), probes.end(),
            [](const SampleRecord* a, const SampleRecord* b) { return a->sample_id < b->sample_id; });

  std::unordered_map<std::string_view, Group> sample_group;
  sample_group.reserve(protocol.samples.size());
  for (const auto& s : protocol.samples) sample_group.emplace(s.sample_id, s.group);

  std::vector<std::pair<const ModelSpec*, Group>> models;
  for (const auto& m : protocol.models) {
    Group g = Group::none;
    if (!m.enroll_sample_ids.empty()) {
      if (auto it = sample_group.find(m.enroll_sample_ids.front()); it != sample_group.end()) {
        g = it->second;
      }
    }
    if (g == Group::none || selected(g)) models.emplace_back(&m, g);
  }
  std::sort(models.begin(), models.end(),
            [](const auto& a, const auto& b) { return a.first->model_id < b.first->model_id; });

  std::vector<ComparisonPair> pairs;
  for (const auto& [model, model_group] : models) {
    for (const SampleRecord* probe : probes) {
      if (!compatible(model_group, probe->group)) continue;
      ComparisonPair pair;
      pair.model_id = model->model_id;
      pair.probe_sample_id = probe->sample_id;
      pair.reference_subject_id = model->subject_id;
      pair.probe_subject_id = probe->subject_id;
      pair.sub_protocol = probe->sub_protocol;
      pair.group = probe->group != Group::none ? probe->group : model_group;
      pair.is_genuine = model->subject_id == probe->subject_id;
      pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

}  // namespace biomeval
