#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biomeval/metrics.hpp"
#include "biomeval/protocol.hpp"

namespace biomeval {

struct Embedding {
  std::string sample_id;
  std::string subject_id;
  std::vector<double> vector;

  bool operator==(const Embedding&) const = default;
};

/// Enrolled subject representation: the component-wise mean of the
/// enrollment embeddings (no re-normalization).
struct Template {
  std::string model_id;
  std::string subject_id;
  std::vector<double> vector;
  std::size_t n_enrolled = 0;

  bool operator==(const Template&) const = default;
};

/// Embeddings keyed by sample_id, all of one dimension.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::vector<Embedding> embeddings);

  /// Throws Error{dimension_mismatch} / Error{validation} for inconsistent
  /// dimensions, non-finite values or duplicate ids.
  void add(Embedding embedding);

  const Embedding* find(std::string_view sample_id) const;
  const Embedding& at(std::string_view sample_id) const;  // Error{missing_id}
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return items_.size(); }
  const std::map<std::string, Embedding, std::less<>>& items() const { return items_; }

 private:
  std::map<std::string, Embedding, std::less<>> items_;
  std::size_t dimension_ = 0;
};

/// Averages the embeddings of model.enroll_sample_ids. The embeddings are
/// taken in sample_id order and folded with a running mean, so the result is
/// independent of input order and exact when all inputs are identical.
/// Errors: missing_id / validation for missing or extra embeddings,
/// dimension_mismatch, degenerate for a zero mean vector.
Template enroll(const ModelSpec& model, std::span<const Embedding> embeddings);

/// Enrolls every model of the protocol from the store.
std::vector<Template> enroll_all(const Protocol& protocol, const EmbeddingStore& store);

enum class Similarity { cosine, negated_euclidean };

/// <a,b> / sqrt(|a|^2 |b|^2), clamped to [-1, 1]. Error{degenerate} for a zero
/// vector, Error{dimension_mismatch} for unequal lengths.
double cosine_score(std::span<const double> a, std::span<const double> b);
double cosine_score(const Template& t, const Embedding& p);

double similarity(std::span<const double> a, std::span<const double> b, Similarity kind);

struct ScoreOptions {
  Similarity similarity = Similarity::cosine;
  std::size_t jobs = 1;
};

/// One ScoreRecord per comparison pair, in comparison_pairs order.
std::vector<ScoreRecord> score_protocol(const Protocol& protocol,
                                        std::span<const Template> templates,
                                        const EmbeddingStore& probes, GroupSelector group,
                                        const ScoreOptions& options = {});

// Embedding CSV: header `sample_id,subject_id,v0,...,v{D-1}`.
EmbeddingStore parse_embeddings_csv(std::string_view text);
EmbeddingStore load_embeddings_csv(const std::filesystem::path& path);
std::string serialize_embeddings_csv(const EmbeddingStore& store);
void save_embeddings_csv(const EmbeddingStore& store, const std::filesystem::path& path);

// Template CSV: header `model_id,subject_id,n_enrolled,v0,...,v{D-1}`.
std::vector<Template> parse_templates_csv(std::string_view text);
std::vector<Template> load_templates_csv(const std::filesystem::path& path);
std::string serialize_templates_csv(std::span<const Template> templates);
void save_templates_csv(std::span<const Template> templates, const std::filesystem::path& path);

}  // namespace biomeval
