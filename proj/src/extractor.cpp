#include "biomeval/extractor.hpp"

#include <csignal>
#include <cmath>
#include <cstdlib>
#include <sys/wait.h>
#include <unistd.h>

#include "biomeval/error.hpp"
#include "biomeval/text_io.hpp"

namespace biomeval {

DownsampleExtractor::DownsampleExtractor(std::size_t height, std::size_t width, std::size_t block)
    : height_(height), width_(width), block_(block) {
  if (block == 0 || height == 0 || width == 0 || height % block != 0 || width % block != 0) {
    throw Error(ErrorCode::invalid_argument,
                "downsample block size must divide the input size");
  }
}

std::vector<double> DownsampleExtractor::extract(const ExtractionRequest& request) {
  Image loaded;
  const Image* image = request.image;
  if (image == nullptr) {
    loaded = read_png(request.image_path);
    image = &loaded;
  }
  if (image->height != height_ || image->width != width_) {
    throw Error(ErrorCode::dimension_mismatch,
                "sample " + request.sample_id + " is " + std::to_string(image->height) + "x" +
                    std::to_string(image->width) + ", extractor expects " +
                    std::to_string(height_) + "x" + std::to_string(width_));
  }
  const std::size_t rows = height_ / block_;
  const std::size_t cols = width_ / block_;
  const double area = static_cast<double>(block_ * block_);
  std::vector<double> out;
  out.reserve(rows * cols * image->channels);
  for (std::size_t c = 0; c < image->channels; ++c) {
    for (std::size_t by = 0; by < rows; ++by) {
      for (std::size_t bx = 0; bx < cols; ++bx) {
        double sum = 0.0;
        for (std::size_t y = by * block_; y < (by + 1) * block_; ++y) {
          for (std::size_t x = bx * block_; x < (bx + 1) * block_; ++x) sum += image->at(c, y, x);
        }
        out.push_back(sum / area);
      }
    }
  }
  return out;
}

std::vector<double> EmbeddingFileExtractor::extract(const ExtractionRequest& request) {
  return store_.at(request.sample_id).vector;
}

ProcessExtractor::ProcessExtractor(std::string command) : command_(std::move(command)) {
  std::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0) throw Error(ErrorCode::extractor_failure, "pipe() failed");
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw Error(ErrorCode::extractor_failure, "pipe() failed");
  }
  child_ = fork();
  if (child_ < 0) throw Error(ErrorCode::extractor_failure, "fork() failed");
  if (child_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = fdopen(in_pipe[1], "w");
  from_child_ = fdopen(out_pipe[0], "r");
  if (to_child_ == nullptr || from_child_ == nullptr) {
    throw Error(ErrorCode::extractor_failure, "fdopen() failed");
  }
}

ProcessExtractor::~ProcessExtractor() {
  try {
    finish();
  } catch (...) {
  }
}

void ProcessExtractor::finish() {
  if (to_child_ != nullptr) {
    std::fclose(to_child_);
    to_child_ = nullptr;
  }
  if (from_child_ != nullptr) {
    std::fclose(from_child_);
    from_child_ = nullptr;
  }
  if (child_ > 0) {
    int status = 0;
    waitpid(child_, &status, 0);
    child_ = -1;
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      throw Error(ErrorCode::extractor_failure,
                  "extractor '" + command_ + "' exited with failure status");
    }
  }
}

std::vector<double> ProcessExtractor::extract(const ExtractionRequest& request) {
  if (to_child_ == nullptr) throw Error(ErrorCode::extractor_failure, "extractor already finished");
  const std::string line = "EXTRACT " + request.image_path.string() + "\n";
  if (std::fputs(line.c_str(), to_child_) == EOF || std::fflush(to_child_) != 0) {
    throw Error(ErrorCode::extractor_failure, "extractor closed its input");
  }
  char* buf = nullptr;
  std::size_t cap = 0;
  const ssize_t n = getline(&buf, &cap, from_child_);
  std::string reply = n > 0 ? std::string(buf, static_cast<std::size_t>(n)) : std::string();
  std::free(buf);
  if (n <= 0) {
    throw Error(ErrorCode::extractor_failure,
                "extractor produced no output for sample " + request.sample_id);
  }
  if (!reply.empty() && reply.back() == '\n') reply.pop_back();

  std::vector<double> v;
  for (auto field : split_fields(reply, ' ')) {
    if (field.empty()) continue;
    v.push_back(parse_double(field, "extractor reply"));
  }
  return v;
}

std::unique_ptr<Extractor> make_extractor(const std::string& description) {
  const auto colon = description.find(':');
  const std::string kind = description.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : description.substr(colon + 1);
  if (kind == "exec" && !arg.empty()) return std::make_unique<ProcessExtractor>(arg);
  if (kind == "file" && !arg.empty()) {
    return std::make_unique<EmbeddingFileExtractor>(load_embeddings_csv(arg));
  }
  if (kind == "downsample") {
    // downsample:<H>x<W>:<block>
    const auto parts = split_fields(arg, ':');
    if (parts.size() == 2) {
      const auto dims = split_fields(parts[0], 'x');
      if (dims.size() == 2) {
        auto as_size = [](std::string_view s) {
          const double v = parse_double(s, "downsample extractor");
          if (!(v >= 1.0) || v != std::floor(v)) {
            throw Error(ErrorCode::invalid_argument, "downsample sizes must be positive integers");
          }
          return static_cast<std::size_t>(v);
        };
        return std::make_unique<DownsampleExtractor>(as_size(dims[0]), as_size(dims[1]),
                                                     as_size(parts[1]));
      }
    }
  }
  throw Error(ErrorCode::invalid_argument, "unrecognized extractor '" + description + "'");
}

Embedding extract(const SampleRecord& sample, const ExtractionRequest& request,
                  Extractor& extractor, std::size_t expected_dim) {
  Embedding e{sample.sample_id, sample.subject_id, extractor.extract(request)};
  if (e.vector.size() < 2) {
    throw Error(ErrorCode::extractor_failure,
                "extractor returned fewer than 2 values for sample " + sample.sample_id);
  }
  if (expected_dim != 0 && e.vector.size() != expected_dim) {
    throw Error(ErrorCode::dimension_mismatch,
                "sample " + sample.sample_id + " has dimension " + std::to_string(e.vector.size()) +
                    ", expected " + std::to_string(expected_dim));
  }
  for (double v : e.vector) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::extractor_failure, "non-finite embedding for sample " + sample.sample_id);
    }
  }
  return e;
}

}  // namespace biomeval
