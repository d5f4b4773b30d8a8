#pragma once

// Seeded synthetic identities and scores with known ground truth.
//
// Random stream (normative, so other implementations can reproduce files
// byte-for-byte from a seed):
//   - raw generator: std::mt19937_64 seeded with the 64-bit seed
//   - uniform in [0,1): (next() >> 11) * 2^-53
//   - standard normal: Marsaglia polar method on u, v = 2*uniform - 1,
//     rejecting s = u^2 + v^2 outside (0, 1); each accepted pair yields
//     u*f then v*f with f = sqrt(-2 ln(s) / s)
//
// Embedding model: each subject's center is a standard-normal vector scaled to
// unit length (uniform on the hypersphere). Each sample is
// normalize(center + sigma * z) with z standard normal, where sigma is the
// base noise plus the extra noise of the sample's sub-protocol. Draw order:
// for each subject (known subjects, then unknown), its center, then its
// samples in index order.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biomeval/embedding.hpp"
#include "biomeval/metrics.hpp"
#include "biomeval/protocol.hpp"

namespace biomeval {

class PortableRng {
 public:
  explicit PortableRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();
  double normal();

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

struct SubProtocolNoise {
  std::string label;
  double extra_noise = 0.0;
};

struct ScoreDistribution {
  double mean = 0.0;
  double stddev = 0.0;
};

/// A block of parametric scores: n_genuine draws from `genuine` followed by
/// n_impostor draws from `impostor`.
struct ScoreSlice {
  std::string sub_protocol;
  Group group = Group::none;
  ScoreDistribution genuine;
  ScoreDistribution impostor;
  std::size_t n_genuine = 0;
  std::size_t n_impostor = 0;
};

struct SynthConfig {
  std::uint64_t seed = 0;
  std::string name = "synthetic";
  ProtocolKind kind = ProtocolKind::verification_split;
  std::size_t n_subjects = 50;
  std::size_t n_unknown_subjects = 0;
  std::size_t samples_per_subject = 4;
  std::size_t enroll_per_subject = 1;
  std::size_t dim = 16;
  double noise_sigma = 0.05;
  double fmr_target = kDefaultFmrTarget;
  std::vector<SubProtocolNoise> sub_protocols{{"default", 0.0}};
  std::vector<ScoreSlice> score_slices;  // optional parametric score output

  /// Throws Error{invalid_config}.
  void validate() const;
};

SynthConfig parse_synth_config(std::string_view json_text);
std::string serialize_synth_config(const SynthConfig& config);

struct SynthOutput {
  Protocol protocol;
  EmbeddingStore embeddings;
};

/// Subjects are s0000.. (known) and u0000.. (unknown). The first
/// enroll_per_subject samples of a known subject form its single model; the
/// rest are probes labelled round-robin over the sub-protocols. Split
/// protocols put the first half of the known subjects in dev and the rest in
/// eval; open-set protocols place every sample in eval and every sample of an
/// unknown subject is a probe; roc-only protocols use group none.
SynthOutput generate(const SynthConfig& config);

/// Parametric scores, bypassing embeddings. Slices are drawn in order from
/// one stream seeded with `seed`.
std::vector<ScoreRecord> generate_scores(std::uint64_t seed, std::span<const ScoreSlice> slices);

/// Single-slice shortcut returning the metric view directly.
ScoreSet generate_score_set(std::uint64_t seed, ScoreDistribution genuine,
                            ScoreDistribution impostor, std::size_t n_genuine,
                            std::size_t n_impostor);

}  // namespace biomeval
