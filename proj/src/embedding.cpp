#include "biomeval/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <unordered_map>

#include "biomeval/error.hpp"
#include "biomeval/simd.hpp"
#include "biomeval/text_io.hpp"

namespace biomeval {

EmbeddingStore::EmbeddingStore(std::vector<Embedding> embeddings) {
  for (auto& e : embeddings) add(std::move(e));
}

void EmbeddingStore::add(Embedding embedding) {
  if (embedding.vector.size() < 2) {
    throw Error(ErrorCode::dimension_mismatch,
                "embedding " + embedding.sample_id + " has dimension < 2");
  }
  if (dimension_ != 0 && embedding.vector.size() != dimension_) {
    throw Error(ErrorCode::dimension_mismatch,
                "embedding " + embedding.sample_id + " has dimension " +
                    std::to_string(embedding.vector.size()) + ", expected " +
                    std::to_string(dimension_));
  }
  for (double v : embedding.vector) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::validation, "embedding " + embedding.sample_id + " is not finite");
    }
  }
  dimension_ = embedding.vector.size();
  const std::string id = embedding.sample_id;
  if (!items_.emplace(id, std::move(embedding)).second) {
    throw Error(ErrorCode::validation, "duplicate embedding for sample " + id);
  }
}

const Embedding* EmbeddingStore::find(std::string_view sample_id) const {
  auto it = items_.find(sample_id);
  return it == items_.end() ? nullptr : &it->second;
}

const Embedding& EmbeddingStore::at(std::string_view sample_id) const {
  if (const Embedding* e = find(sample_id)) return *e;
  throw Error(ErrorCode::missing_id, "no embedding for sample " + std::string(sample_id));
}

Template enroll(const ModelSpec& model, std::span<const Embedding> embeddings) {
  if (model.enroll_sample_ids.empty()) {
    throw Error(ErrorCode::validation, "model " + model.model_id + " has no enrollment samples");
  }
  std::vector<const Embedding*> ordered;
  ordered.reserve(embeddings.size());
  for (const auto& e : embeddings) ordered.push_back(&e);
  std::sort(ordered.begin(), ordered.end(),
            [](const Embedding* a, const Embedding* b) { return a->sample_id < b->sample_id; });

  std::vector<std::string> wanted = model.enroll_sample_ids;
  std::sort(wanted.begin(), wanted.end());
  std::vector<std::string> have;
  for (const Embedding* e : ordered) have.push_back(e->sample_id);
  std::vector<std::string> missing;
  std::vector<std::string> extra;
  std::set_difference(wanted.begin(), wanted.end(), have.begin(), have.end(),
                      std::back_inserter(missing));
  std::set_difference(have.begin(), have.end(), wanted.begin(), wanted.end(),
                      std::back_inserter(extra));
  if (!missing.empty()) {
    throw Error(ErrorCode::missing_id,
                "model " + model.model_id + ": no embedding for sample " + missing.front());
  }
  if (!extra.empty()) {
    throw Error(ErrorCode::validation,
                "model " + model.model_id + ": unexpected embedding " + extra.front());
  }

  const std::size_t dim = ordered.front()->vector.size();
  Template t{model.model_id, model.subject_id, std::vector<double>(dim, 0.0), ordered.size()};
  const auto& kernels = simd::active();
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const auto& v = ordered[i]->vector;
    if (v.size() != dim) {
      throw Error(ErrorCode::dimension_mismatch,
                  "model " + model.model_id + ": embeddings differ in dimension");
    }
    kernels.running_mean_update(t.vector.data(), v.data(), dim, static_cast<double>(i + 1));
  }
  if (std::all_of(t.vector.begin(), t.vector.end(), [](double x) { return x == 0.0; })) {
    throw Error(ErrorCode::degenerate, "model " + model.model_id + " averages to the zero vector");
  }
  return t;
}

std::vector<Template> enroll_all(const Protocol& protocol, const EmbeddingStore& store) {
  std::vector<Template> templates;
  templates.reserve(protocol.models.size());
  for (const auto& model : protocol.models) {
    std::vector<Embedding> embeddings;
    for (const auto& id : model.enroll_sample_ids) embeddings.push_back(store.at(id));
    templates.push_back(enroll(model, embeddings));
  }
  return templates;
}

double cosine_score(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::dimension_mismatch, "cosine of vectors with different dimensions");
  }
  const auto r = simd::dot_norms(a, b);
  if (r.norm_a_sq == 0.0 || r.norm_b_sq == 0.0) {
    throw Error(ErrorCode::degenerate, "cosine of a zero vector");
  }
  const double c = r.dot / std::sqrt(r.norm_a_sq * r.norm_b_sq);
  return std::clamp(c, -1.0, 1.0);
}

double cosine_score(const Template& t, const Embedding& p) { return cosine_score(t.vector, p.vector); }

double similarity(std::span<const double> a, std::span<const double> b, Similarity kind) {
  if (kind == Similarity::cosine) return cosine_score(a, b);
  if (a.size() != b.size()) {
    throw Error(ErrorCode::dimension_mismatch, "distance of vectors with different dimensions");
  }
  return -std::sqrt(simd::squared_distance(a, b));
}

std::vector<ScoreRecord> score_protocol(const Protocol& protocol,
                                        std::span<const Template> templates,
                                        const EmbeddingStore& probes, GroupSelector group,
                                        const ScoreOptions& options) {
  const auto pairs = comparison_pairs(protocol, group);

  std::unordered_map<std::string_view, const Template*> by_model;
  for (const auto& t : templates) by_model.emplace(t.model_id, &t);

  // Resolve every id up front so missing inputs fail before any work starts.
  std::vector<std::pair<const Template*, const Embedding*>> work(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto it = by_model.find(pairs[i].model_id);
    if (it == by_model.end()) {
      throw Error(ErrorCode::missing_id, "no template for model " + pairs[i].model_id);
    }
    work[i] = {it->second, &probes.at(pairs[i].probe_sample_id)};
    if (it->second->vector.size() != work[i].second->vector.size()) {
      throw Error(ErrorCode::dimension_mismatch,
                  "template " + pairs[i].model_id + " and probe " + pairs[i].probe_sample_id +
                      " differ in dimension");
    }
  }

  std::vector<ScoreRecord> records(pairs.size());
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& pair = pairs[i];
      ScoreRecord& r = records[i];
      r.model_id = pair.model_id;
      r.probe_sample_id = pair.probe_sample_id;
      r.probe_subject_id = pair.probe_subject_id;
      r.reference_subject_id = pair.reference_subject_id;
      r.sub_protocol = pair.sub_protocol;
      r.group = pair.group;
      r.is_genuine = pair.is_genuine;
      r.score = similarity(work[i].first->vector, work[i].second->vector, options.similarity);
    }
  };

  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, std::max<std::size_t>(1, pairs.size() / 64));
  if (jobs == 1) {
    run(0, pairs.size());
    return records;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> failures(jobs);
  const std::size_t chunk = (pairs.size() + jobs - 1) / jobs;
  for (std::size_t w = 0; w < jobs; ++w) {
    const std::size_t begin = std::min(pairs.size(), w * chunk);
    const std::size_t end = std::min(pairs.size(), begin + chunk);
    workers.emplace_back([&, w, begin, end] {
      try {
        run(begin, end);
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return records;
}

namespace {

std::vector<double> parse_vector(std::span<const std::string_view> fields, std::string_view context) {
  std::vector<double> v;
  v.reserve(fields.size());
  for (auto f : fields) v.push_back(parse_double(f, context));
  return v;
}

void append_vector(std::string& out, const std::vector<double>& v) {
  for (double x : v) {
    out += ',';
    out += format_double(x);
  }
  out += '\n';
}

void check_id(const std::string& id, std::string_view what) {
  if (id.empty() || id.find_first_of(",\n\r") != std::string::npos) {
    throw Error(ErrorCode::validation, std::string(what) + " '" + id + "' cannot be written to CSV");
  }
}

void check_header(std::string_view line, std::span<const std::string_view> fixed,
                  std::size_t& dimension, std::string_view context) {
  const auto fields = split_fields(line);
  if (fields.size() < fixed.size() + 2) {
    throw Error(ErrorCode::parse, std::string(context) + ": header needs at least two vector columns");
  }
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    if (fields[i] != fixed[i]) {
      throw Error(ErrorCode::parse, std::string(context) + ": expected column '" +
                                        std::string(fixed[i]) + "'");
    }
  }
  dimension = fields.size() - fixed.size();
  for (std::size_t k = 0; k < dimension; ++k) {
    if (fields[fixed.size() + k] != "v" + std::to_string(k)) {
      throw Error(ErrorCode::parse, std::string(context) + ": expected column 'v" +
                                        std::to_string(k) + "'");
    }
  }
}

}  // namespace

EmbeddingStore parse_embeddings_csv(std::string_view text) {
  const auto lines = split_lines(text, "embedding file");
  if (lines.empty()) throw Error(ErrorCode::parse, "embedding file: missing header");
  static constexpr std::string_view kFixed[] = {"sample_id", "subject_id"};
  std::size_t dim = 0;
  check_header(lines[0], kFixed, dim, "embedding file");

  EmbeddingStore store;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string context = "embedding file line " + std::to_string(i + 1);
    const auto fields = split_fields(lines[i]);
    if (fields.size() != dim + 2) throw Error(ErrorCode::parse, context + ": wrong field count");
    store.add({std::string(fields[0]), std::string(fields[1]),
               parse_vector(std::span(fields).subspan(2), context)});
  }
  return store;
}

EmbeddingStore load_embeddings_csv(const std::filesystem::path& path) {
  return parse_embeddings_csv(read_text_file(path));
}

std::string serialize_embeddings_csv(const EmbeddingStore& store) {
  std::string out = "sample_id,subject_id";
  for (std::size_t k = 0; k < store.dimension(); ++k) out += ",v" + std::to_string(k);
  out += '\n';
  for (const auto& [id, e] : store.items()) {
    check_id(e.sample_id, "sample_id");
    check_id(e.subject_id, "subject_id");
    out += e.sample_id + ',' + e.subject_id;
    append_vector(out, e.vector);
  }
  return out;
}

void save_embeddings_csv(const EmbeddingStore& store, const std::filesystem::path& path) {
  write_text_file(path, serialize_embeddings_csv(store));
}

std::vector<Template> parse_templates_csv(std::string_view text) {
  const auto lines = split_lines(text, "template file");
  if (lines.empty()) throw Error(ErrorCode::parse, "template file: missing header");
  static constexpr std::string_view kFixed[] = {"model_id", "subject_id", "n_enrolled"};
  std::size_t dim = 0;
  check_header(lines[0], kFixed, dim, "template file");

  std::vector<Template> templates;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string context = "template file line " + std::to_string(i + 1);
    const auto fields = split_fields(lines[i]);
    if (fields.size() != dim + 3) throw Error(ErrorCode::parse, context + ": wrong field count");
    const double n = parse_double(fields[2], context);
    if (!(n >= 1.0) || n != std::floor(n)) {
      throw Error(ErrorCode::parse, context + ": n_enrolled must be a positive integer");
    }
    templates.push_back({std::string(fields[0]), std::string(fields[1]),
                         parse_vector(std::span(fields).subspan(3), context),
                         static_cast<std::size_t>(n)});
  }
  return templates;
}

std::vector<Template> load_templates_csv(const std::filesystem::path& path) {
  return parse_templates_csv(read_text_file(path));
}

std::string serialize_templates_csv(std::span<const Template> templates) {
  const std::size_t dim = templates.empty() ? 0 : templates.front().vector.size();
  std::string out = "model_id,subject_id,n_enrolled";
  for (std::size_t k = 0; k < dim; ++k) out += ",v" + std::to_string(k);
  out += '\n';
  for (const auto& t : templates) {
    if (t.vector.size() != dim) {
      throw Error(ErrorCode::dimension_mismatch, "templates differ in dimension");
    }
    check_id(t.model_id, "model_id");
    check_id(t.subject_id, "subject_id");
    out += t.model_id + ',' + t.subject_id + ',' + std::to_string(t.n_enrolled);
    append_vector(out, t.vector);
  }
  return out;
}

void save_templates_csv(std::span<const Template> templates, const std::filesystem::path& path) {
  write_text_file(path, serialize_templates_csv(templates));
}

}  // namespace biomeval
