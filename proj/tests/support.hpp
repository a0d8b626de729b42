#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "mrv/media.hpp"

namespace testing {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("mrv_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline std::string read_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline mrv::Frame random_frame(int h, int w, int c, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> d(0.0f, 1.0f);
  std::vector<float> data(static_cast<std::size_t>(h) * w * c);
  for (float& x : data) x = d(rng);
  return mrv::Frame(h, w, c, std::move(data));
}

inline mrv::FlowField random_flow(int h, int w, float scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> d(-scale, scale);
  std::vector<float> u(static_cast<std::size_t>(h) * w), v(u.size());
  for (float& x : u) x = d(rng);
  for (float& x : v) x = d(rng);
  return mrv::FlowField(h, w, std::move(u), std::move(v));
}

}  // namespace testing
