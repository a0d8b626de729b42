#include "mrv/bilinear.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

#include "fft.hpp"
#include "mrv/media.hpp"
#include "mrv/rng.hpp"

namespace mrv {

FeatureMap::FeatureMap(int height, int width, int channels, std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (height <= 0 || width <= 0 || channels <= 0) {
    throw std::invalid_argument("FeatureMap: non-positive size");
  }
  if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw std::invalid_argument("FeatureMap: data length does not match dimensions");
  }
  if (!std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); })) {
    throw std::invalid_argument("FeatureMap: non-finite value");
  }
}

FeatureMap FeatureMap::zeros(int height, int width, int channels) {
  return FeatureMap(height, width, channels,
                    std::vector<float>(static_cast<std::size_t>(height) * width * channels, 0.0f));
}

bool is_power_of_two(long long n) noexcept { return n > 0 && (n & (n - 1)) == 0; }

void SketchParams::validate() const {
  if (!is_power_of_two(dim)) throw std::invalid_argument("sketch dimension must be a power of two");
  const std::size_t c = h1.size();
  if (c == 0 || h2.size() != c || s1.size() != c || s2.size() != c) {
    throw std::invalid_argument("sketch tables have inconsistent lengths");
  }
  auto bad_hash = [&](int k) { return k < 0 || k >= dim; };
  auto bad_sign = [](int s) { return s != 1 && s != -1; };
  if (std::any_of(h1.begin(), h1.end(), bad_hash) || std::any_of(h2.begin(), h2.end(), bad_hash) ||
      std::any_of(s1.begin(), s1.end(), bad_sign) || std::any_of(s2.begin(), s2.end(), bad_sign)) {
    throw std::invalid_argument("sketch table entry out of range");
  }
}

SketchParams make_sketch_params(int channels, int dim, std::uint64_t seed) {
  if (channels < 1) throw std::invalid_argument("make_sketch_params: channels must be >= 1");
  if (!is_power_of_two(dim)) throw std::invalid_argument("make_sketch_params: dim must be a power of two");
  Rng rng = make_rng(seed, {0x736b65746368ull});
  SketchParams p;
  p.dim = dim;
  p.seed = seed;
  auto draw = [&](std::vector<int>& hash, std::vector<int>& sign) {
    hash.resize(channels);
    sign.resize(channels);
    for (int c = 0; c < channels; ++c) {
      hash[c] = uniform_int(rng, 0, dim - 1);
      sign[c] = uniform_int(rng, 0, 1) ? 1 : -1;
    }
  };
  draw(p.h1, p.s1);
  draw(p.h2, p.s2);
  return p;
}

Descriptor exact_bilinear(const FeatureMap& map) {
  const int c = map.channels();
  std::vector<double> acc(static_cast<std::size_t>(c) * c, 0.0);
  for (std::size_t cell = 0; cell < map.cell_count(); ++cell) {
    const auto x = map.cell(cell);
    for (int i = 0; i < c; ++i) {
      for (int j = 0; j < c; ++j) acc[static_cast<std::size_t>(i) * c + j] += double(x[i]) * x[j];
    }
  }
  return Descriptor{{acc.begin(), acc.end()}};
}

std::vector<double> count_sketch(std::span<const float> x, std::span<const int> hash,
                                 std::span<const int> sign, int dim) {
  if (dim < 1) throw std::invalid_argument("count_sketch: dim must be >= 1");
  if (hash.size() != x.size() || sign.size() != x.size()) {
    throw std::invalid_argument("count_sketch: table length differs from input length");
  }
  std::vector<double> out(static_cast<std::size_t>(dim), 0.0);
  for (std::size_t c = 0; c < x.size(); ++c) {
    if (hash[c] < 0 || hash[c] >= dim) throw std::invalid_argument("count_sketch: hash out of range");
    out[static_cast<std::size_t>(hash[c])] += sign[c] * static_cast<double>(x[c]);
  }
  return out;
}

namespace {

using Spectrum = std::vector<std::complex<double>>;

// Adds DFT(cs1) .* DFT(cs2) for one channel vector into `acc`.
void accumulate_cell_spectrum(std::span<const float> x, const SketchParams& p, Spectrum& acc,
                              Spectrum& a, Spectrum& b) {
  const std::vector<double> cs1 = count_sketch(x, p.h1, p.s1, p.dim);
  const std::vector<double> cs2 = count_sketch(x, p.h2, p.s2, p.dim);
  detail::forward_real_dft(cs1, a);
  detail::forward_real_dft(cs2, b);
  for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += a[k] * b[k];
}

}  // namespace

std::vector<double> tensor_sketch_cell(std::span<const float> x, const SketchParams& params) {
  params.validate();
  if (static_cast<int>(x.size()) != params.channels()) {
    throw std::invalid_argument("tensor_sketch_cell: input length differs from sketch channels");
  }
  const std::size_t bins = static_cast<std::size_t>(params.dim / 2 + 1);
  Spectrum acc(bins), a(bins), b(bins);
  accumulate_cell_spectrum(x, params, acc, a, b);
  std::vector<double> out(static_cast<std::size_t>(params.dim));
  detail::inverse_real_dft(acc, out);
  return out;
}

Descriptor tensor_sketch_pool(const FeatureMap& map, const SketchParams& params,
                              SketchMethod method) {
  params.validate();
  if (map.channels() != params.channels()) {
    throw std::invalid_argument("tensor_sketch_pool: map channels differ from sketch channels");
  }
  const int c = params.channels();
  if (method == SketchMethod::Auto) {
    method = static_cast<long long>(c) * c <= params.dim ? SketchMethod::Direct : SketchMethod::Frequency;
  }
  std::vector<double> out(static_cast<std::size_t>(params.dim), 0.0);
  if (method == SketchMethod::Direct) {
    const int mask = params.dim - 1;
    for (std::size_t cell = 0; cell < map.cell_count(); ++cell) {
      const auto x = map.cell(cell);
      for (int i = 0; i < c; ++i) {
        const double xi = params.s1[i] * static_cast<double>(x[i]);
        if (xi == 0.0) continue;
        for (int j = 0; j < c; ++j) {
          out[(params.h1[i] + params.h2[j]) & mask] += xi * params.s2[j] * static_cast<double>(x[j]);
        }
      }
    }
    return Descriptor{{out.begin(), out.end()}};
  }
  const std::size_t bins = static_cast<std::size_t>(params.dim / 2 + 1);
  Spectrum acc(bins), a(bins), b(bins);
  // The DFT is linear, so summing spectra and inverting once equals the sum
  // of per-cell convolutions.
  for (std::size_t cell = 0; cell < map.cell_count(); ++cell) {
    accumulate_cell_spectrum(map.cell(cell), params, acc, a, b);
  }
  detail::inverse_real_dft(acc, out);
  return Descriptor{{out.begin(), out.end()}};
}

FeatureMap aggregate_segments(std::span<const FeatureMap> maps) {
  if (maps.empty()) throw std::invalid_argument("aggregate_segments: no segments");
  for (const auto& m : maps) {
    if (!m.same_shape(maps.front())) throw std::invalid_argument("aggregate_segments: shape mismatch");
  }
  std::vector<float> out(maps.front().data().begin(), maps.front().data().end());
  for (std::size_t s = 1; s < maps.size(); ++s) {
    const auto d = maps[s].data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= d[i];
  }
  const auto& f = maps.front();
  return FeatureMap(f.height(), f.width(), f.channels(), std::move(out));
}

Descriptor normalize_descriptor(const Descriptor& d) {
  std::vector<double> v(d.values.size());
  double norm2 = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = d.values[i];
    v[i] = std::copysign(std::sqrt(std::abs(x)), x);
    norm2 += v[i] * v[i];
  }
  Descriptor out;
  out.values.resize(v.size(), 0.0f);
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t i = 0; i < v.size(); ++i) out.values[i] = static_cast<float>(v[i] * inv);
  }
  return out;
}

double dot(const Descriptor& a, const Descriptor& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += double(a.values[i]) * b.values[i];
  return s;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

}  // namespace

void save_descriptor(const Descriptor& d, const std::filesystem::path& path) {
  std::string out = "CBPD";
  put_u32(out, kDescriptorVersion);
  put_u32(out, static_cast<std::uint32_t>(d.size()));
  put_u32(out, 0);
  for (float v : d.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(IoErrc::Unwritable, path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError(IoErrc::Unwritable, path.string());
}

Descriptor load_descriptor(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(IoErrc::MissingFile, path.string());
  const std::vector<char> bytes{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  if (bytes.size() < 16) throw IoError(IoErrc::SizeMismatch, "descriptor header truncated");
  if (!std::equal(bytes.begin(), bytes.begin() + 4, "CBPD")) throw IoError(IoErrc::BadMagic, path.string());
  if (get_u32(bytes.data() + 4) != kDescriptorVersion) {
    throw IoError(IoErrc::MalformedHeader, "unsupported descriptor version");
  }
  const std::size_t n = get_u32(bytes.data() + 8);
  if (bytes.size() != 16 + 4 * n) throw IoError(IoErrc::SizeMismatch, path.string());
  Descriptor d;
  d.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.values[i] = std::bit_cast<float>(get_u32(bytes.data() + 16 + 4 * i));
    if (!std::isfinite(d.values[i])) throw IoError(IoErrc::BadValue, path.string());
  }
  return d;
}

}  // namespace mrv
