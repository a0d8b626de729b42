#include "mrv/media.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace mrv {

namespace {

constexpr float kFloMagic = 202021.25f;

bool in_unit_range(float v) { return std::isfinite(v) && v >= 0.0f && v <= 1.0f; }

std::vector<char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoErrc::MissingFile, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoErrc::Unwritable, "cannot write " + path.string());
  return out;
}

// Netpbm header tokenizer: whitespace separated fields, '#' comments.
class HeaderReader {
 public:
  explicit HeaderReader(const std::vector<char>& bytes) : bytes_(bytes) {}

  std::string token() {
    skip_space_and_comments();
    std::string out;
    while (pos_ < bytes_.size() && !is_space(bytes_[pos_])) out.push_back(bytes_[pos_++]);
    return out;
  }

  long number() {
    const std::string t = token();
    if (t.empty() || t.size() > 9 ||
        !std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw IoError(IoErrc::MalformedHeader, "bad header field '" + t + "'");
    }
    return std::stol(t);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t payload_offset() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      throw IoError(IoErrc::MalformedHeader, "missing separator before raster");
    }
    return pos_ + 1;
  }

 private:
  static bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<char>& bytes_;
  std::size_t pos_ = 0;
};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

}  // namespace

const char* to_string(IoErrc code) {
  switch (code) {
    case IoErrc::MissingFile: return "missing file";
    case IoErrc::MalformedHeader: return "malformed header";
    case IoErrc::TruncatedPayload: return "truncated payload";
    case IoErrc::BadMagic: return "bad magic";
    case IoErrc::SizeMismatch: return "size mismatch";
    case IoErrc::BadValue: return "bad value";
    case IoErrc::Unwritable: return "unwritable path";
  }
  return "unknown";
}

IoError::IoError(IoErrc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

// ---------------------------------------------------------------------------

Frame::Frame(int height, int width, int channels, std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (height <= 0 || width <= 0) throw std::invalid_argument("Frame: non-positive size");
  if (channels != 1 && channels != 3) throw std::invalid_argument("Frame: channels must be 1 or 3");
  if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw std::invalid_argument("Frame: data length does not match dimensions");
  }
  if (!std::all_of(data_.begin(), data_.end(), in_unit_range)) {
    throw std::invalid_argument("Frame: value outside [0,1]");
  }
}

Frame Frame::filled(int height, int width, int channels, float value) {
  return Frame(height, width, channels,
               std::vector<float>(static_cast<std::size_t>(height) * width * channels, value));
}

FlowField::FlowField(int height, int width, std::vector<float> u, std::vector<float> v)
    : height_(height), width_(width), u_(std::move(u)), v_(std::move(v)) {
  if (height <= 0 || width <= 0) throw std::invalid_argument("FlowField: non-positive size");
  const auto n = static_cast<std::size_t>(height) * width;
  if (u_.size() != n || v_.size() != n) {
    throw std::invalid_argument("FlowField: component length does not match dimensions");
  }
  auto finite = [](float x) { return std::isfinite(x); };
  if (!std::all_of(u_.begin(), u_.end(), finite) || !std::all_of(v_.begin(), v_.end(), finite)) {
    throw std::invalid_argument("FlowField: non-finite displacement");
  }
}

FlowField FlowField::zeros(int height, int width) { return constant(height, width, 0.0f, 0.0f); }

FlowField FlowField::constant(int height, int width, float u, float v) {
  const auto n = static_cast<std::size_t>(std::max(height, 0)) * std::max(width, 0);
  return FlowField(height, width, std::vector<float>(n, u), std::vector<float>(n, v));
}

BinaryMask::BinaryMask(int height, int width, std::vector<std::uint8_t> bits)
    : height_(height), width_(width), bits_(std::move(bits)) {
  if (height <= 0 || width <= 0) throw std::invalid_argument("BinaryMask: non-positive size");
  if (bits_.size() != static_cast<std::size_t>(height) * width) {
    throw std::invalid_argument("BinaryMask: length does not match dimensions");
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

BinaryMask BinaryMask::filled(int height, int width, bool value) {
  return BinaryMask(height, width,
                    std::vector<std::uint8_t>(static_cast<std::size_t>(height) * width, value ? 1 : 0));
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BinaryMask BinaryMask::operator~() const {
  BinaryMask out = *this;
  for (auto& b : out.bits_) b ^= 1u;
  return out;
}

BinaryMask BinaryMask::operator&(const BinaryMask& other) const {
  if (height_ != other.height_ || width_ != other.width_) {
    throw std::invalid_argument("BinaryMask: dimension mismatch");
  }
  BinaryMask out = *this;
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] &= other.bits_[i];
  return out;
}

BinaryMask BinaryMask::operator|(const BinaryMask& other) const {
  if (height_ != other.height_ || width_ != other.width_) {
    throw std::invalid_argument("BinaryMask: dimension mismatch");
  }
  BinaryMask out = *this;
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] |= other.bits_[i];
  return out;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b, int border) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw std::invalid_argument("mask_iou: mask sizes differ");
  }
  if (border < 0) throw std::invalid_argument("mask_iou: negative border");
  std::size_t inter = 0, uni = 0;
  for (int y = border; y < a.height() - border; ++y) {
    for (int x = border; x < a.width() - border; ++x) {
      inter += a.at(y, x) && b.at(y, x);
      uni += a.at(y, x) || b.at(y, x);
    }
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
}

void VideoClip::validate() const {
  if (frames.empty()) throw std::invalid_argument("VideoClip: no frames");
  for (const auto& f : frames) {
    if (!f.same_shape(frames.front())) throw std::invalid_argument("VideoClip: frame shapes differ");
  }
  if (source_indices.size() != frames.size()) {
    throw std::invalid_argument("VideoClip: index count differs from frame count");
  }
}

// ---------------------------------------------------------------------------

std::uint8_t quantize_intensity(float value) noexcept {
  const double scaled = std::floor(static_cast<double>(value) * 255.0 + 0.5);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

Frame load_frame(const std::filesystem::path& path) {
  const std::vector<char> bytes = read_all(path);
  HeaderReader header(bytes);
  const std::string magic = header.token();
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw IoError(IoErrc::MalformedHeader, "expected P5 or P6 in " + path.string());
  }
  const long width = header.number();
  const long height = header.number();
  const long maxval = header.number();
  if (width <= 0 || height <= 0) throw IoError(IoErrc::MalformedHeader, "non-positive dimensions");
  if (maxval != 255) throw IoError(IoErrc::MalformedHeader, "maxval must be 255");
  const std::size_t offset = header.payload_offset();

  const std::size_t need = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() < offset || bytes.size() - offset < need) {
    throw IoError(IoErrc::TruncatedPayload, path.string());
  }
  std::vector<float> data(need);
  for (std::size_t i = 0; i < need; ++i) {
    data[i] = static_cast<float>(static_cast<unsigned char>(bytes[offset + i])) / 255.0f;
  }
  return Frame(static_cast<int>(height), static_cast<int>(width), channels, std::move(data));
}

void save_frame(const Frame& frame, const std::filesystem::path& path) {
  if (frame.empty()) throw std::invalid_argument("save_frame: empty frame");
  std::string out = (frame.channels() == 1 ? "P5\n" : "P6\n") + std::to_string(frame.width()) +
                    " " + std::to_string(frame.height()) + "\n255\n";
  out.reserve(out.size() + frame.data().size());
  for (float v : frame.data()) out.push_back(static_cast<char>(quantize_intensity(v)));
  auto stream = open_for_write(path);
  stream.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!stream) throw IoError(IoErrc::Unwritable, path.string());
}

FlowField load_flow(const std::filesystem::path& path) {
  const std::vector<char> bytes = read_all(path);
  if (bytes.size() < 12) throw IoError(IoErrc::SizeMismatch, "flow header shorter than 12 bytes");
  if (std::bit_cast<float>(get_u32(bytes.data())) != kFloMagic) {
    throw IoError(IoErrc::BadMagic, path.string());
  }
  const auto width = static_cast<std::int32_t>(get_u32(bytes.data() + 4));
  const auto height = static_cast<std::int32_t>(get_u32(bytes.data() + 8));
  if (width <= 0 || height <= 0 || width > (1 << 15) || height > (1 << 15)) {
    throw IoError(IoErrc::SizeMismatch, "implausible flow dimensions");
  }
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (bytes.size() != 12 + 8 * n) throw IoError(IoErrc::SizeMismatch, path.string());

  std::vector<float> u(n), v(n);
  const char* p = bytes.data() + 12;
  for (std::size_t i = 0; i < n; ++i, p += 8) {
    u[i] = std::bit_cast<float>(get_u32(p));
    v[i] = std::bit_cast<float>(get_u32(p + 4));
    if (!std::isfinite(u[i]) || !std::isfinite(v[i])) {
      throw IoError(IoErrc::BadValue, "non-finite displacement in " + path.string());
    }
  }
  return FlowField(height, width, std::move(u), std::move(v));
}

void save_flow(const FlowField& flow, const std::filesystem::path& path) {
  std::string out;
  out.reserve(12 + 8 * flow.pixel_count());
  put_u32(out, std::bit_cast<std::uint32_t>(kFloMagic));
  put_u32(out, static_cast<std::uint32_t>(flow.width()));
  put_u32(out, static_cast<std::uint32_t>(flow.height()));
  for (std::size_t i = 0; i < flow.pixel_count(); ++i) {
    put_u32(out, std::bit_cast<std::uint32_t>(flow.u()[i]));
    put_u32(out, std::bit_cast<std::uint32_t>(flow.v()[i]));
  }
  auto stream = open_for_write(path);
  stream.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!stream) throw IoError(IoErrc::Unwritable, path.string());
}

}  // namespace mrv
