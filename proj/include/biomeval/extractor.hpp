#pragma once

// Feature-extraction boundary. Networks are external; the engine only needs
// something that turns an aligned sample into a fixed-length vector.

#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <sys/types.h>
#include <vector>

#include "biomeval/embedding.hpp"
#include "biomeval/image.hpp"

namespace biomeval {

struct ExtractionRequest {
  std::string sample_id;
  std::filesystem::path image_path;  // aligned PNG, when one exists on disk
  const Image* image = nullptr;      // decoded pixels, when already in memory
};

class Extractor {
 public:
  virtual ~Extractor() = default;
  virtual std::vector<double> extract(const ExtractionRequest& request) = 0;
};

/// Block-mean downsampling of a fixed-size image, flattened plane by plane:
/// D = (height / block) * (width / block) * channels.
class DownsampleExtractor final : public Extractor {
 public:
  DownsampleExtractor(std::size_t height, std::size_t width, std::size_t block);

  std::vector<double> extract(const ExtractionRequest& request) override;

 private:
  std::size_t height_;
  std::size_t width_;
  std::size_t block_;
};

/// Serves precomputed vectors from an embedding file, keyed by sample_id.
class EmbeddingFileExtractor final : public Extractor {
 public:
  explicit EmbeddingFileExtractor(EmbeddingStore store) : store_(std::move(store)) {}

  std::vector<double> extract(const ExtractionRequest& request) override;

 private:
  EmbeddingStore store_;
};

/// Runs `/bin/sh -c command` once and talks to it over pipes: for each sample
/// the engine writes `EXTRACT <png-path>\n`, the child answers with one line
/// of space-separated reals. EOF or a nonzero exit is an extractor failure.
class ProcessExtractor final : public Extractor {
 public:
  explicit ProcessExtractor(std::string command);
  ~ProcessExtractor() override;

  ProcessExtractor(const ProcessExtractor&) = delete;
  ProcessExtractor& operator=(const ProcessExtractor&) = delete;

  std::vector<double> extract(const ExtractionRequest& request) override;

  /// Closes the child's input and waits; throws Error{extractor_failure} on a
  /// nonzero exit status. Called by the destructor (without throwing).
  void finish();

 private:
  pid_t child_ = -1;
  std::FILE* to_child_ = nullptr;
  std::FILE* from_child_ = nullptr;
  std::string command_;
};

/// Parses an extractor description: `downsample:<H>x<W>:<block>`,
/// `file:<embeddings.csv>` or `exec:<shell command>`.
std::unique_ptr<Extractor> make_extractor(const std::string& description);

/// Runs the extractor and checks the result: nonempty, finite, and of the
/// same dimension as `expected_dim` when that is nonzero.
Embedding extract(const SampleRecord& sample, const ExtractionRequest& request,
                  Extractor& extractor, std::size_t expected_dim = 0);

}  // namespace biomeval
