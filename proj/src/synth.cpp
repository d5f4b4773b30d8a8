#include "biomeval/synth.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <set>

#include "biomeval/error.hpp"

namespace biomeval {

double PortableRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double PortableRng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  while (true) {
    const double u = 2.0 * uniform() - 1.0;
    const double v = 2.0 * uniform() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      const double f = std::sqrt(-2.0 * std::log(s) / s);
      spare_ = v * f;
      return u * f;
    }
  }
}

namespace {

[[noreturn]] void bad_config(const std::string& message) {
  throw Error(ErrorCode::invalid_config, message);
}

std::string padded(char prefix, std::size_t index, std::size_t count, std::size_t min_width) {
  std::size_t width = 1;
  for (std::size_t n = count > 0 ? count - 1 : 0; n >= 10; n /= 10) ++width;
  width = std::max(width, min_width);
  std::string digits = std::to_string(index);
  return std::string(1, prefix) + std::string(width - std::min(width, digits.size()), '0') + digits;
}

// Normalized standard-normal draw; redraws the (measure-zero) zero vector.
std::vector<double> unit_vector(PortableRng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  while (true) {
    double norm_sq = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm_sq += x * x;
    }
    if (norm_sq > 0.0) {
      const double norm = std::sqrt(norm_sq);
      for (auto& x : v) x /= norm;
      return v;
    }
  }
}

std::vector<double> noisy_sample(PortableRng& rng, const std::vector<double>& center, double sigma) {
  std::vector<double> v(center.size());
  while (true) {
    double norm_sq = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      v[k] = center[k] + sigma * rng.normal();
      norm_sq += v[k] * v[k];
    }
    if (norm_sq > 0.0) {
      const double norm = std::sqrt(norm_sq);
      for (auto& x : v) x /= norm;
      return v;
    }
  }
}

}  // namespace

void SynthConfig::validate() const {
  if (dim < 2) bad_config("dim must be at least 2");
  if (enroll_per_subject < 1) bad_config("enroll_per_subject must be at least 1");
  if (enroll_per_subject >= samples_per_subject) {
    bad_config("enroll_per_subject must be smaller than samples_per_subject");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    bad_config("noise_sigma must be a finite nonnegative number");
  }
  if (!(fmr_target > 0.0 && fmr_target < 1.0)) bad_config("fmr_target must lie in (0,1)");
  if (sub_protocols.empty()) bad_config("at least one sub-protocol label is required");
  std::set<std::string> labels;
  for (const auto& s : sub_protocols) {
    if (s.label.empty() || s.label.find_first_of(",\n\r") != std::string::npos) {
      bad_config("invalid sub-protocol label '" + s.label + "'");
    }
    if (!labels.insert(s.label).second) bad_config("duplicate sub-protocol label '" + s.label + "'");
    if (!(s.extra_noise >= 0.0) || !std::isfinite(s.extra_noise)) {
      bad_config("extra_noise must be a finite nonnegative number");
    }
  }
  switch (kind) {
    case ProtocolKind::verification_split:
    case ProtocolKind::verification_roc_only:
      if (n_subjects < 2) bad_config("verification protocols need at least 2 subjects");
      if (n_unknown_subjects != 0) bad_config("unknown subjects are only used by open_set protocols");
      break;
    case ProtocolKind::open_set:
      if (n_subjects < 1) bad_config("open-set protocols need at least 1 gallery subject");
      if (n_unknown_subjects < 1) bad_config("open-set protocols need at least 1 unknown subject");
      break;
  }
  for (const auto& slice : score_slices) {
    if (!(slice.genuine.stddev >= 0.0) || !(slice.impostor.stddev >= 0.0)) {
      bad_config("score slice standard deviations must be nonnegative");
    }
  }
}

SynthOutput generate(const SynthConfig& config) {
  config.validate();
  PortableRng rng(config.seed);

  SynthOutput out;
  Protocol& p = out.protocol;
  p.name = config.name;
  p.kind = config.kind;
  p.fmr_target = config.fmr_target;
  for (const auto& s : config.sub_protocols) p.sub_protocols.push_back(s.label);

  const std::size_t n_probes = config.samples_per_subject - config.enroll_per_subject;
  const std::size_t total_subjects = config.n_subjects + config.n_unknown_subjects;
  for (std::size_t s = 0; s < total_subjects; ++s) {
    const bool unknown = s >= config.n_subjects;
    const std::string subject = unknown
        ? padded('u', s - config.n_subjects, config.n_unknown_subjects, 4)
        : padded('s', s, config.n_subjects, 4);
    Group group = Group::eval;
    if (config.kind == ProtocolKind::verification_roc_only) group = Group::none;
    if (config.kind == ProtocolKind::verification_split) {
      group = s < config.n_subjects / 2 ? Group::dev : Group::eval;
    }
    if (unknown) p.unknown_subjects.insert(subject);

    const auto center = unit_vector(rng, config.dim);
    ModelSpec model{"m_" + subject, subject, {}};
    const std::size_t n_samples = unknown ? n_probes : config.samples_per_subject;
    for (std::size_t k = 0; k < n_samples; ++k) {
      const bool enrolls = !unknown && k < config.enroll_per_subject;
      SampleRecord sample;
      sample.sample_id = subject + "_" + padded('n', k, n_samples, 2).substr(1);
      sample.subject_id = subject;
      sample.path = sample.sample_id + ".png";
      sample.role = enrolls ? Role::enroll : Role::probe;
      sample.group = group;
      double sigma = config.noise_sigma;
      if (!enrolls) {
        const std::size_t probe_index = unknown ? k : k - config.enroll_per_subject;
        const auto& label = config.sub_protocols[probe_index % config.sub_protocols.size()];
        sample.sub_protocol = label.label;
        sigma += label.extra_noise;
      }
      out.embeddings.add({sample.sample_id, subject, noisy_sample(rng, center, sigma)});
      if (enrolls) model.enroll_sample_ids.push_back(sample.sample_id);
      p.samples.push_back(std::move(sample));
    }
    if (!unknown) p.models.push_back(std::move(model));
  }
  p.canonicalize();
  p.validate();
  return out;
}

std::vector<ScoreRecord> generate_scores(std::uint64_t seed, std::span<const ScoreSlice> slices) {
  PortableRng rng(seed);
  std::vector<ScoreRecord> records;
  for (std::size_t s = 0; s < slices.size(); ++s) {
    const auto& slice = slices[s];
    if (!(slice.genuine.stddev >= 0.0) || !(slice.impostor.stddev >= 0.0)) {
      bad_config("score slice standard deviations must be nonnegative");
    }
    const std::string tag = std::to_string(s) + "_";
    for (std::size_t i = 0; i < slice.n_genuine; ++i) {
      const std::string id = tag + std::to_string(i);
      ScoreRecord r;
      r.model_id = "gm" + id;
      r.reference_subject_id = "gs" + id;
      r.probe_subject_id = "gs" + id;
      r.probe_sample_id = "gp" + id;
      r.sub_protocol = slice.sub_protocol;
      r.group = slice.group;
      r.score = slice.genuine.mean + slice.genuine.stddev * rng.normal();
      r.is_genuine = true;
      records.push_back(std::move(r));
    }
    for (std::size_t i = 0; i < slice.n_impostor; ++i) {
      const std::string id = tag + std::to_string(i);
      ScoreRecord r;
      r.model_id = "im" + id;
      r.reference_subject_id = "ir" + id;
      r.probe_subject_id = "ip" + id;
      r.probe_sample_id = "ip" + id;
      r.sub_protocol = slice.sub_protocol;
      r.group = slice.group;
      r.score = slice.impostor.mean + slice.impostor.stddev * rng.normal();
      r.is_genuine = false;
      records.push_back(std::move(r));
    }
  }
  return records;
}

ScoreSet generate_score_set(std::uint64_t seed, ScoreDistribution genuine,
                            ScoreDistribution impostor, std::size_t n_genuine,
                            std::size_t n_impostor) {
  const ScoreSlice slice{"", Group::none, genuine, impostor, n_genuine, n_impostor};
  return ScoreSet::from_records(generate_scores(seed, std::span(&slice, 1)));
}

namespace {

using ordered_json = nlohmann::ordered_json;

template <typename T>
T value_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    bad_config(std::string("bad value for '") + key + "': " + e.what());
  }
}

ScoreDistribution distribution(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) bad_config(std::string("score slice lacks '") + key + "'");
  const auto& d = j.at(key);
  return {value_or<double>(d, "mean", 0.0), value_or<double>(d, "stddev", 0.0)};
}

}  // namespace

SynthConfig parse_synth_config(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    bad_config(std::string("malformed synth config: ") + e.what());
  }
  if (!j.is_object()) bad_config("synth config must be a JSON object");

  SynthConfig c;
  try {
    c.seed = value_or<std::uint64_t>(j, "seed", c.seed);
    c.kind = parse_protocol_kind(value_or<std::string>(j, "kind", std::string(to_string(c.kind))));
  } catch (const Error& e) {
    bad_config(e.what());
  }
  c.name = value_or<std::string>(j, "name", c.name);
  c.n_subjects = value_or<std::size_t>(j, "n_subjects", c.n_subjects);
  c.n_unknown_subjects = value_or<std::size_t>(j, "n_unknown_subjects", c.n_unknown_subjects);
  c.samples_per_subject = value_or<std::size_t>(j, "samples_per_subject", c.samples_per_subject);
  c.enroll_per_subject = value_or<std::size_t>(j, "enroll_per_subject", c.enroll_per_subject);
  c.dim = value_or<std::size_t>(j, "dim", c.dim);
  c.noise_sigma = value_or<double>(j, "noise_sigma", c.noise_sigma);
  c.fmr_target = value_or<double>(j, "fmr_target", c.fmr_target);
  if (j.contains("sub_protocols")) {
    c.sub_protocols.clear();
    for (const auto& s : j.at("sub_protocols")) {
      c.sub_protocols.push_back({value_or<std::string>(s, "label", ""),
                                 value_or<double>(s, "extra_noise", 0.0)});
    }
  }
  if (j.contains("score_slices")) {
    for (const auto& s : j.at("score_slices")) {
      ScoreSlice slice;
      slice.sub_protocol = value_or<std::string>(s, "sub_protocol", "");
      try {
        slice.group = parse_group(value_or<std::string>(s, "group", "none"));
      } catch (const Error& e) {
        bad_config(e.what());
      }
      slice.genuine = distribution(s, "genuine");
      slice.impostor = distribution(s, "impostor");
      slice.n_genuine = value_or<std::size_t>(s, "n_genuine", 0);
      slice.n_impostor = value_or<std::size_t>(s, "n_impostor", 0);
      c.score_slices.push_back(std::move(slice));
    }
  }
  c.validate();
  return c;
}

std::string serialize_synth_config(const SynthConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["name"] = c.name;
  j["kind"] = to_string(c.kind);
  j["n_subjects"] = c.n_subjects;
  j["n_unknown_subjects"] = c.n_unknown_subjects;
  j["samples_per_subject"] = c.samples_per_subject;
  j["enroll_per_subject"] = c.enroll_per_subject;
  j["dim"] = c.dim;
  j["noise_sigma"] = c.noise_sigma;
  j["fmr_target"] = c.fmr_target;
  ordered_json labels = ordered_json::array();
  for (const auto& s : c.sub_protocols) {
    labels.push_back({{"label", s.label}, {"extra_noise", s.extra_noise}});
  }
  j["sub_protocols"] = std::move(labels);
  ordered_json slices = ordered_json::array();
  for (const auto& s : c.score_slices) {
    ordered_json o;
    o["sub_protocol"] = s.sub_protocol;
    o["group"] = to_string(s.group);
    o["genuine"] = {{"mean", s.genuine.mean}, {"stddev", s.genuine.stddev}};
    o["impostor"] = {{"mean", s.impostor.mean}, {"stddev", s.impostor.stddev}};
    o["n_genuine"] = s.n_genuine;
    o["n_impostor"] = s.n_impostor;
    slices.push_back(std::move(o));
  }
  j["score_slices"] = std::move(slices);
  return j.dump(2) + "\n";
}

}  // namespace biomeval
