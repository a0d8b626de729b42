#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrv {

/// Distinct failure kinds reported by the file loaders and writers.
enum class IoErrc {
  MissingFile,
  MalformedHeader,
  TruncatedPayload,
  BadMagic,
  SizeMismatch,
  BadValue,
  Unwritable,
};

const char* to_string(IoErrc code);

class IoError : public std::runtime_error {
 public:
  IoError(IoErrc code, const std::string& what);
  IoErrc code() const noexcept { return code_; }

 private:
  IoErrc code_;
};

/// Dense image with intensities in [0,1], stored row-major and
/// channel-interleaved: index = (y * width + x) * channels + c.
class Frame {
 public:
  Frame() = default;
  /// Throws std::invalid_argument when the size, channel count or value
  /// range is wrong.
  Frame(int height, int width, int channels, std::vector<float> data);

  static Frame filled(int height, int width, int channels, float value);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height_) * width_;
  }
  bool empty() const noexcept { return data_.empty(); }

  float at(int y, int x, int c = 0) const noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  std::span<const float> data() const noexcept { return data_; }

  bool same_shape(const Frame& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }
  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Per-pixel displacement in pixels. u pairs with the horizontal axis x,
/// v with the vertical axis y.
class FlowField {
 public:
  FlowField() = default;
  FlowField(int height, int width, std::vector<float> u, std::vector<float> v);

  static FlowField zeros(int height, int width);
  static FlowField constant(int height, int width, float u, float v);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height_) * width_;
  }

  float u(int y, int x) const noexcept { return u_[index(y, x)]; }
  float v(int y, int x) const noexcept { return v_[index(y, x)]; }
  std::span<const float> u() const noexcept { return u_; }
  std::span<const float> v() const noexcept { return v_; }

  bool same_shape(const FlowField& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }
  friend bool operator==(const FlowField&, const FlowField&) = default;

 private:
  std::size_t index(int y, int x) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<float> u_;
  std::vector<float> v_;
};

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int height, int width, std::vector<std::uint8_t> bits);

  static BinaryMask filled(int height, int width, bool value);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t pixel_count() const noexcept { return bits_.size(); }

  bool at(int y, int x) const noexcept {
    return bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::size_t count() const noexcept;

  BinaryMask operator~() const;
  BinaryMask operator&(const BinaryMask& other) const;
  BinaryMask operator|(const BinaryMask& other) const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Intersection over union of the set pixels, ignoring a band of `border`
/// pixels along every edge. Two empty masks give 1.
double mask_iou(const BinaryMask& a, const BinaryMask& b, int border = 0);

/// Ordered frame indices produced by a sampler.
struct ClipIndices {
  std::vector<int> values;

  std::size_t size() const noexcept { return values.size(); }
  int operator[](std::size_t i) const { return values[i]; }
  auto begin() const noexcept { return values.begin(); }
  auto end() const noexcept { return values.end(); }
  friend bool operator==(const ClipIndices&, const ClipIndices&) = default;
};

struct VideoClip {
  std::vector<Frame> frames;
  ClipIndices source_indices;
  std::string source_id;

  /// Throws std::invalid_argument if the clip violates its invariants.
  void validate() const;
};

Frame load_frame(const std::filesystem::path& path);
void save_frame(const Frame& frame, const std::filesystem::path& path);

/// 8-bit code written for an intensity: round-half-up of value * 255.
std::uint8_t quantize_intensity(float value) noexcept;

FlowField load_flow(const std::filesystem::path& path);
void save_flow(const FlowField& flow, const std::filesystem::path& path);

}  // namespace mrv
