#include "biomeval/align.hpp"

#include <cmath>
#include <complex>
#include <nlohmann/json.hpp>
#include <sstream>

#include "biomeval/error.hpp"
#include "biomeval/simd.hpp"
#include "biomeval/text_io.hpp"

namespace biomeval {

bool LandmarkSet::contains(std::string_view name) const {
  return points_.find(name) != points_.end();
}

std::optional<Point> LandmarkSet::anchor(std::string_view name) const {
  if (auto it = points_.find(name); it != points_.end()) return it->second;
  if (name == "eye") {
    const auto right = points_.find("right_eye");
    const auto left = points_.find("left_eye");
    const bool has_right = right != points_.end();
    const bool has_left = left != points_.end();
    if (has_right != has_left) return has_right ? right->second : left->second;
  }
  return std::nullopt;
}

LandmarkSet parse_landmarks(std::string_view text) {
  LandmarkSet set;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text, "landmark file")) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line, ' ');
    if (fields.size() != 3 || fields[0].empty()) {
      throw Error(ErrorCode::parse,
                  "landmark line " + std::to_string(line_no) + ": expected 'name y x'");
    }
    const std::string context = "landmark line " + std::to_string(line_no);
    set.set(std::string(fields[0]),
            Point{parse_double(fields[1], context), parse_double(fields[2], context)});
  }
  return set;
}

LandmarkSet load_landmarks(const std::filesystem::path& path) {
  return parse_landmarks(read_text_file(path));
}

std::string serialize_landmarks(const LandmarkSet& landmarks) {
  std::string out;
  for (const auto& [name, p] : landmarks.points()) {
    out += name + ' ' + format_double(p.y) + ' ' + format_double(p.x) + '\n';
  }
  return out;
}

void AlignmentSpec::validate() const {
  if (target_height == 0 || target_width == 0) {
    throw Error(ErrorCode::validation, "alignment target size must be positive");
  }
  auto inside = [&](Point p) {
    return p.y >= 0.0 && p.y < static_cast<double>(target_height) && p.x >= 0.0 &&
           p.x < static_cast<double>(target_width);
  };
  if (!inside(anchor_a_target) || !inside(anchor_b_target)) {
    throw Error(ErrorCode::validation, "alignment anchor target lies outside the crop");
  }
  if (anchor_a_target == anchor_b_target) {
    throw Error(ErrorCode::validation, "alignment anchor targets coincide");
  }
  if (anchor_a_name.empty() || anchor_b_name.empty() || anchor_a_name == anchor_b_name) {
    throw Error(ErrorCode::validation, "alignment needs two distinct anchor names");
  }
}

namespace {

AlignmentSpec two_eye(std::size_t h, std::size_t w, Point right, Point left) {
  return {h, w, "right_eye", "left_eye", right, left};
}

AlignmentSpec eye_mouth(std::size_t h, std::size_t w, Point eye, Point mouth) {
  return {h, w, "eye", "mouth", eye, mouth};
}

struct PresetRow {
  const char* name;
  std::size_t height;
  std::size_t width;
  Point right_eye;
  Point left_eye;
  Point eye;
  Point mouth;
};

// Target geometry for the three network families (y, x).
constexpr PresetRow kPresets[] = {
    {"arcface112", 112, 112, {52, 38}, {52, 74}, {52, 56}, {91, 56}},
    {"facenet160", 160, 160, {32, 39}, {32, 120}, {32, 64}, {106, 64}},
    {"legacy80x64", 80, 64, {16, 15}, {16, 48}, {16, 25}, {52, 25}},
};

AlignmentSpec spec_from_json(const nlohmann::json& j) {
  try {
    AlignmentSpec spec;
    spec.target_height = j.at("target_height").get<std::size_t>();
    spec.target_width = j.at("target_width").get<std::size_t>();
    const auto& anchors = j.at("anchors");
    if (!anchors.is_array() || anchors.size() != 2) {
      throw Error(ErrorCode::parse, "alignment spec needs exactly two anchors");
    }
    spec.anchor_a_name = anchors[0].at("name").get<std::string>();
    spec.anchor_a_target = {anchors[0].at("y").get<double>(), anchors[0].at("x").get<double>()};
    spec.anchor_b_name = anchors[1].at("name").get<std::string>();
    spec.anchor_b_target = {anchors[1].at("y").get<double>(), anchors[1].at("x").get<double>()};
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("alignment spec: ") + e.what());
  }
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& row : kPresets) {
    names.emplace_back(row.name);
    names.push_back(std::string(row.name) + "-profile");
  }
  return names;
}

AlignmentPreset preset(std::string_view name) {
  for (const auto& row : kPresets) {
    const auto frontal = two_eye(row.height, row.width, row.right_eye, row.left_eye);
    const auto profile = eye_mouth(row.height, row.width, row.eye, row.mouth);
    if (name == row.name) return {std::string(name), frontal, profile};
    if (name == std::string(row.name) + "-profile") return {std::string(name), profile, std::nullopt};
  }
  throw Error(ErrorCode::unknown_preset, "unknown alignment preset '" + std::string(name) + "'");
}

AlignmentPreset resolve_alignment(std::string_view preset_or_file) {
  for (const auto& name : preset_names()) {
    if (name == preset_or_file) return preset(name);
  }
  const std::filesystem::path path(preset_or_file);
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(ErrorCode::unknown_preset,
                "unknown alignment preset '" + std::string(preset_or_file) + "'");
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::parse, std::string("alignment spec: ") + e.what());
  }
  AlignmentPreset result{path.stem().string(), spec_from_json(j), std::nullopt};
  if (j.contains("fallback")) result.fallback = spec_from_json(j.at("fallback"));
  return result;
}

double SimilarityTransform::scale() const { return std::hypot(a, b); }

double SimilarityTransform::rotation() const { return std::atan2(b, a); }

Point SimilarityTransform::apply(Point p) const {
  return {a * p.y - b * p.x + ty, b * p.y + a * p.x + tx};
}

SimilarityTransform SimilarityTransform::inverse() const {
  const double s = a * a + b * b;
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw Error(ErrorCode::degenerate, "similarity transform is not invertible");
  }
  SimilarityTransform inv;
  inv.a = a / s;
  inv.b = -b / s;
  inv.ty = -(inv.a * ty - inv.b * tx);
  inv.tx = -(inv.b * ty + inv.a * tx);
  return inv;
}

SimilarityTransform solve_transform(Point src_a, Point src_b, Point dst_a, Point dst_b) {
  // (y, x) as the complex number y + ix turns the transform into z' = w z + t.
  using C = std::complex<double>;
  const C sa(src_a.y, src_a.x);
  const C sb(src_b.y, src_b.x);
  const C da(dst_a.y, dst_a.x);
  const C db(dst_b.y, dst_b.x);
  const C src_d = sb - sa;
  const C dst_d = db - da;
  if (std::norm(src_d) == 0.0 || !std::isfinite(std::norm(src_d))) {
    throw Error(ErrorCode::degenerate, "source anchors coincide");
  }
  if (std::norm(dst_d) == 0.0 || !std::isfinite(std::norm(dst_d))) {
    throw Error(ErrorCode::degenerate, "target anchors coincide");
  }
  const C w = dst_d / src_d;
  const C t = da - w * sa;
  return {w.real(), w.imag(), t.real(), t.imag()};
}

Image warp_crop(const Image& image, const SimilarityTransform& transform,
                std::size_t target_height, std::size_t target_width) {
  if (image.empty()) throw Error(ErrorCode::invalid_argument, "cannot warp an empty image");
  const SimilarityTransform inv = transform.inverse();
  const auto& kernels = simd::active();

  Image out(target_height, target_width, image.channels);
  for (std::size_t c = 0; c < image.channels; ++c) {
    const auto source = image.plane(c);
    auto dest = out.plane(c);
    for (std::size_t i = 0; i < target_height; ++i) {
      const double id = static_cast<double>(i);
      simd::WarpRow row;
      row.source = source.data();
      row.source_height = image.height;
      row.source_width = image.width;
      row.row_y = inv.a * id + inv.ty;
      row.row_x = inv.b * id + inv.tx;
      row.step_y = -inv.b;
      row.step_x = inv.a;
      row.out = dest.data() + i * target_width;
      row.out_width = target_width;
      kernels.bilinear_row(row);
    }
  }
  return out;
}

Image warp_crop(const Image& image, const SimilarityTransform& transform,
                const AlignmentSpec& spec) {
  return warp_crop(image, transform, spec.target_height, spec.target_width);
}

Image align_sample(const Image& image, const LandmarkSet& landmarks, const AlignmentSpec& spec) {
  const auto a = landmarks.anchor(spec.anchor_a_name);
  const auto b = landmarks.anchor(spec.anchor_b_name);
  if (!a || !b) {
    throw Error(ErrorCode::missing_landmark,
                "landmark '" + (a ? spec.anchor_b_name : spec.anchor_a_name) +
                    "' is not annotated; choose an eye+mouth spec for profile faces");
  }
  const auto t = solve_transform(*a, *b, spec.anchor_a_target, spec.anchor_b_target);
  return warp_crop(image, t, spec);
}

const AlignmentSpec& select_spec(const AlignmentPreset& preset, const LandmarkSet& landmarks) {
  const auto& p = preset.primary;
  if (landmarks.anchor(p.anchor_a_name) && landmarks.anchor(p.anchor_b_name)) return p;
  if (preset.fallback) return *preset.fallback;
  return p;
}

}  // namespace biomeval
