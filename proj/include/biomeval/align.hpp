#pragma once

// Two-landmark face alignment. All coordinates are (y, x) in pixels with pixel
// centers at integer positions.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biomeval/image.hpp"

namespace biomeval {

struct Point {
  double y = 0.0;
  double x = 0.0;

  bool operator==(const Point&) const = default;
};

/// Named landmarks. Recognized names: right_eye, left_eye, eye, mouth.
class LandmarkSet {
 public:
  LandmarkSet() = default;
  LandmarkSet(std::initializer_list<std::pair<const std::string, Point>> points)
      : points_(points) {}

  void set(const std::string& name, Point p) { points_[name] = p; }
  bool contains(std::string_view name) const;

  /// Looks up an anchor. The profile anchor "eye" resolves to an explicit
  /// "eye" entry, or else to the only visible one of right_eye / left_eye.
  std::optional<Point> anchor(std::string_view name) const;

  const std::map<std::string, Point, std::less<>>& points() const { return points_; }

  bool operator==(const LandmarkSet&) const = default;

 private:
  std::map<std::string, Point, std::less<>> points_;
};

/// Parses the `name y x` line format.
LandmarkSet parse_landmarks(std::string_view text);
LandmarkSet load_landmarks(const std::filesystem::path& path);
std::string serialize_landmarks(const LandmarkSet& landmarks);

struct AlignmentSpec {
  std::size_t target_height = 0;
  std::size_t target_width = 0;
  std::string anchor_a_name;
  std::string anchor_b_name;
  Point anchor_a_target;
  Point anchor_b_target;

  bool operator==(const AlignmentSpec&) const = default;

  /// Throws Error{validation} if the targets fall outside the crop or coincide.
  void validate() const;
};

/// A frontal (two-eye) spec with an optional eye+mouth spec used when an eye
/// is not annotated.
struct AlignmentPreset {
  std::string name;
  AlignmentSpec primary;
  std::optional<AlignmentSpec> fallback;
};

/// Built-in preset names: arcface112, arcface112-profile, facenet160,
/// facenet160-profile, legacy80x64, legacy80x64-profile.
std::vector<std::string> preset_names();
AlignmentPreset preset(std::string_view name);

/// Preset name, or a path to a JSON spec file:
///   {"target_height": H, "target_width": W,
///    "anchors": [{"name": n, "y": y, "x": x}, {"name": n, "y": y, "x": x}],
///    "fallback": { same shape, optional }}
AlignmentPreset resolve_alignment(std::string_view preset_or_file);

/// y' = a*y - b*x + ty,  x' = b*y + a*x + tx
struct SimilarityTransform {
  double a = 1.0;
  double b = 0.0;
  double ty = 0.0;
  double tx = 0.0;

  double scale() const;
  double rotation() const;  // atan2(b, a), radians
  Point apply(Point p) const;
  SimilarityTransform inverse() const;
};

/// The unique scale-rotation-translation mapping src_a→dst_a and src_b→dst_b.
/// Throws Error{degenerate} for coincident anchors.
SimilarityTransform solve_transform(Point src_a, Point src_b, Point dst_a, Point dst_b);

/// Inverse-mapped bilinear resampling into a spec-sized image. Output pixel
/// (i, j) samples the source at T^-1(i, j); samples outside the source image
/// are 0.
Image warp_crop(const Image& image, const SimilarityTransform& transform,
                std::size_t target_height, std::size_t target_width);
Image warp_crop(const Image& image, const SimilarityTransform& transform,
                const AlignmentSpec& spec);

/// Solves the transform from the spec's two anchors and warps. Throws
/// Error{missing_landmark} when an anchor is not annotated.
Image align_sample(const Image& image, const LandmarkSet& landmarks, const AlignmentSpec& spec);

/// The spec align_sample would use for these landmarks: the primary spec when
/// both its anchors are present, else the fallback.
const AlignmentSpec& select_spec(const AlignmentPreset& preset, const LandmarkSet& landmarks);

}  // namespace biomeval
