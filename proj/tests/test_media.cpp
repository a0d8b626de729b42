#include <doctest.h>

#include <bit>
#include <cmath>

#include "mrv/media.hpp"
#include "support.hpp"

using namespace mrv;
using testing::TempDir;

namespace {

IoErrc load_frame_error(const std::filesystem::path& p) {
  try {
    load_frame(p);
  } catch (const IoError& e) {
    return e.code();
  }
  FAIL("load_frame did not throw");
  return IoErrc::BadValue;
}

IoErrc load_flow_error(const std::filesystem::path& p) {
  try {
    load_flow(p);
  } catch (const IoError& e) {
    return e.code();
  }
  FAIL("load_flow did not throw");
  return IoErrc::BadValue;
}

std::string le32(std::uint32_t v) {
  std::string s(4, '\0');
  for (int i = 0; i < 4; ++i) s[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  return s;
}

std::string flo_bytes(float magic, int w, int h, const std::vector<float>& uv) {
  std::string s = le32(std::bit_cast<std::uint32_t>(magic)) + le32(w) + le32(h);
  for (float f : uv) s += le32(std::bit_cast<std::uint32_t>(f));
  return s;
}

}  // namespace

TEST_CASE("frame construction validates size and range") {
  CHECK_NOTHROW(Frame(2, 2, 1, {0.0f, 0.5f, 1.0f, 0.25f}));
  CHECK_THROWS_AS(Frame(2, 2, 1, {0.0f, 0.5f, 1.0f}), std::invalid_argument);
  CHECK_THROWS_AS(Frame(1, 1, 1, {1.5f}), std::invalid_argument);
  CHECK_THROWS_AS(Frame(1, 1, 1, {-0.1f}), std::invalid_argument);
  CHECK_THROWS_AS(Frame(1, 1, 1, {NAN}), std::invalid_argument);
  CHECK_THROWS_AS(Frame(1, 1, 2, {0.0f, 0.0f}), std::invalid_argument);
  CHECK_THROWS_AS(FlowField(1, 1, {INFINITY}, {0.0f}), std::invalid_argument);
}

TEST_CASE("P5 of all 255 loads as ones") {
  TempDir dir("media");
  testing::write_bytes(dir / "a.pgm", std::string("P5\n2 2\n255\n") + std::string(4, '\xff'));
  const Frame f = load_frame(dir / "a.pgm");
  CHECK(f.height() == 2);
  CHECK(f.width() == 2);
  CHECK(f.channels() == 1);
  for (float v : f.data()) CHECK(v == 1.0f);
}

TEST_CASE("P6 bytes map linearly") {
  TempDir dir("media");
  testing::write_bytes(dir / "a.ppm", std::string("P6\n1 1\n255\n") + std::string("\x00\x80\xff", 3));
  const Frame f = load_frame(dir / "a.ppm");
  CHECK(f.channels() == 3);
  CHECK(f.at(0, 0, 0) == 0.0f);
  CHECK(f.at(0, 0, 1) == 128.0f / 255.0f);
  CHECK(f.at(0, 0, 2) == 1.0f);
}

TEST_CASE("frame loader errors are distinct") {
  TempDir dir("media");
  CHECK(load_frame_error(dir / "missing.pgm") == IoErrc::MissingFile);
  testing::write_bytes(dir / "short.pgm", std::string("P5\n4 4\n255\n") + std::string(3, 'x'));
  CHECK(load_frame_error(dir / "short.pgm") == IoErrc::TruncatedPayload);
  testing::write_bytes(dir / "bad.pgm", "P7\n1 1\n255\n\x01");
  CHECK(load_frame_error(dir / "bad.pgm") == IoErrc::MalformedHeader);
  testing::write_bytes(dir / "maxval.pgm", "P5\n1 1\n65535\n\x01\x01");
  CHECK(load_frame_error(dir / "maxval.pgm") == IoErrc::MalformedHeader);
  testing::write_bytes(dir / "dims.pgm", "P5\nx 1\n255\n\x01");
  CHECK(load_frame_error(dir / "dims.pgm") == IoErrc::MalformedHeader);
}

TEST_CASE("header comments are skipped") {
  TempDir dir("media");
  testing::write_bytes(dir / "c.pgm", std::string("P5\n# note\n1 1\n255\n") + "\x40");
  CHECK(load_frame(dir / "c.pgm").at(0, 0) == 64.0f / 255.0f);
}

TEST_CASE("zero frame saves zero payload") {
  TempDir dir("media");
  save_frame(Frame::filled(3, 3, 1, 0.0f), dir / "z.pgm");
  const std::string bytes = testing::read_bytes(dir / "z.pgm");
  const std::string header = "P5\n3 3\n255\n";
  REQUIRE(bytes.size() == header.size() + 9);
  CHECK(bytes.substr(0, header.size()) == header);
  for (std::size_t i = header.size(); i < bytes.size(); ++i) CHECK(bytes[i] == '\0');
}

TEST_CASE("quantization rounds half up") {
  CHECK(quantize_intensity(0.5f) == 128);
  CHECK(quantize_intensity(0.0f) == 0);
  CHECK(quantize_intensity(1.0f) == 255);
  // every 8-bit code survives a round trip through its float value
  for (int code = 0; code < 256; ++code) CHECK(quantize_intensity(code / 255.0f) == code);
}

TEST_CASE("frame round trip stays within half a code") {
  TempDir dir("media");
  std::mt19937_64 rng(11);
  for (int c : {1, 3}) {
    for (int trial = 0; trial < 5; ++trial) {
      const Frame f = testing::random_frame(7, 5, c, rng);
      const auto path = dir / (c == 1 ? "r.pgm" : "r.ppm");
      save_frame(f, path);
      const Frame g = load_frame(path);
      REQUIRE(g.same_shape(f));
      for (std::size_t i = 0; i < f.data().size(); ++i) {
        CHECK(std::abs(f.data()[i] - g.data()[i]) <= 1.0f / 510.0f + 1e-7f);
      }
    }
  }
}

TEST_CASE("flow file decodes directly") {
  TempDir dir("media");
  testing::write_bytes(dir / "a.flo", flo_bytes(202021.25f, 1, 1, {2.5f, -1.0f}));
  const FlowField f = load_flow(dir / "a.flo");
  CHECK(f.width() == 1);
  CHECK(f.u(0, 0) == 2.5f);
  CHECK(f.v(0, 0) == -1.0f);
}

TEST_CASE("flow layout is row-major interleaved") {
  TempDir dir("media");
  // w=2, h=1: pixel (0,0) then (0,1)
  testing::write_bytes(dir / "a.flo", flo_bytes(202021.25f, 2, 1, {1, 2, 3, 4}));
  const FlowField f = load_flow(dir / "a.flo");
  CHECK(f.height() == 1);
  CHECK(f.u(0, 1) == 3.0f);
  CHECK(f.v(0, 1) == 4.0f);
  CHECK(testing::read_bytes(dir / "a.flo").substr(0, 4) == "PIEH");
}

TEST_CASE("flow round trip is byte-identical") {
  TempDir dir("media");
  std::mt19937_64 rng(5);
  const FlowField f = testing::random_flow(8, 8, 20.0f, rng);
  save_flow(f, dir / "a.flo");
  const FlowField g = load_flow(dir / "a.flo");
  CHECK(g == f);
  save_flow(g, dir / "b.flo");
  CHECK(testing::read_bytes(dir / "a.flo") == testing::read_bytes(dir / "b.flo"));
}

TEST_CASE("flow loader rejects bad magic and size") {
  TempDir dir("media");
  testing::write_bytes(dir / "m.flo", flo_bytes(0.0f, 1, 1, {0, 0}));
  CHECK(load_flow_error(dir / "m.flo") == IoErrc::BadMagic);
  testing::write_bytes(dir / "s.flo", flo_bytes(202021.25f, 2, 2, {0, 0, 0}));
  CHECK(load_flow_error(dir / "s.flo") == IoErrc::SizeMismatch);
  CHECK(load_flow_error(dir / "none.flo") == IoErrc::MissingFile);
}

TEST_CASE("mask algebra and iou") {
  const BinaryMask a(2, 2, {1, 1, 0, 0});
  const BinaryMask b(2, 2, {1, 0, 1, 0});
  CHECK((a & b) == BinaryMask(2, 2, {1, 0, 0, 0}));
  CHECK((a | b) == BinaryMask(2, 2, {1, 1, 1, 0}));
  CHECK((~a) == BinaryMask(2, 2, {0, 0, 1, 1}));
  CHECK(a.count() == 2);
  CHECK(mask_iou(a, b) == doctest::Approx(1.0 / 3.0));
  CHECK(mask_iou(BinaryMask::filled(3, 3, false), BinaryMask::filled(3, 3, false)) == 1.0);
  // border band removes everything but the center pixel
  BinaryMask ring = BinaryMask::filled(3, 3, true);
  CHECK(mask_iou(ring, BinaryMask(3, 3, {0, 0, 0, 0, 1, 0, 0, 0, 0}), 1) == 1.0);
}

TEST_CASE("video clip invariants") {
  VideoClip clip;
  CHECK_THROWS(clip.validate());
  clip.frames = {Frame::filled(2, 2, 1, 0.0f), Frame::filled(2, 2, 1, 1.0f)};
  clip.source_indices.values = {0, 1};
  CHECK_NOTHROW(clip.validate());
  clip.source_indices.values = {0};
  CHECK_THROWS(clip.validate());
  clip.source_indices.values = {0, 1};
  clip.frames[1] = Frame::filled(2, 3, 1, 0.0f);
  CHECK_THROWS(clip.validate());
}
