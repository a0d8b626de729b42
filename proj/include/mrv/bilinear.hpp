#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace mrv {

/// Spatial grid of channel vectors, row-major with channels innermost.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int height, int width, int channels, std::vector<float> data);

  static FeatureMap zeros(int height, int width, int channels);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t cell_count() const noexcept { return static_cast<std::size_t>(height_) * width_; }

  std::span<const float> cell(std::size_t index) const noexcept {
    return std::span<const float>(data_).subspan(index * channels_, channels_);
  }
  std::span<const float> data() const noexcept { return data_; }

  bool same_shape(const FeatureMap& o) const noexcept {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }
  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Hash and sign tables of the two count sketches used by Tensor Sketch.
struct SketchParams {
  int dim = 8192;
  std::vector<int> h1, h2;
  std::vector<int> s1, s2;
  std::uint64_t seed = 0;

  int channels() const noexcept { return static_cast<int>(h1.size()); }
  /// Throws std::invalid_argument on inconsistent tables.
  void validate() const;
};

inline constexpr int kDefaultSketchDim = 8192;

bool is_power_of_two(long long n) noexcept;

/// Tables drawn from a generator seeded with `seed`; identical seeds give
/// identical tables. `dim` must be a power of two.
SketchParams make_sketch_params(int channels, int dim, std::uint64_t seed);

struct Descriptor {
  std::vector<float> values;

  std::size_t size() const noexcept { return values.size(); }
  friend bool operator==(const Descriptor&, const Descriptor&) = default;
};

/// Sum over cells of x x^T, flattened row-major (length C^2).
Descriptor exact_bilinear(const FeatureMap& map);

/// out[k] = sum over c with hash[c] == k of sign[c] * x[c].
std::vector<double> count_sketch(std::span<const float> x, std::span<const int> hash,
                                 std::span<const int> sign, int dim);

/// Circular convolution of the two count sketches of x, computed in the
/// frequency domain.
std::vector<double> tensor_sketch_cell(std::span<const float> x, const SketchParams& params);

/// How tensor_sketch_pool evaluates the circular convolution. Direct
/// expands the C^2 outer-product terms into the sketch; Frequency multiplies
/// spectra. Auto picks Direct when C^2 <= dim. Results agree to rounding.
enum class SketchMethod { Auto, Frequency, Direct };

/// Sum of tensor_sketch_cell over every cell, with the same tables.
Descriptor tensor_sketch_pool(const FeatureMap& map, const SketchParams& params,
                              SketchMethod method = SketchMethod::Auto);

/// Element-wise product of the segment maps.
FeatureMap aggregate_segments(std::span<const FeatureMap> maps);

/// Signed square root, then scaling to unit Euclidean norm. A zero vector
/// stays zero.
Descriptor normalize_descriptor(const Descriptor& d);

double dot(const Descriptor& a, const Descriptor& b);

// Descriptor files: "CBPD", u32 version, u32 length, u32 reserved, then
// little-endian float32 values.
inline constexpr std::uint32_t kDescriptorVersion = 1;

void save_descriptor(const Descriptor& d, const std::filesystem::path& path);
Descriptor load_descriptor(const std::filesystem::path& path);

}  // namespace mrv
