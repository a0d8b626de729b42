#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mrv/bilinear.hpp"
#include "mrv/rng.hpp"
#include "support.hpp"

using namespace mrv;

namespace {

FeatureMap random_map(int h, int w, int c, std::mt19937_64& rng, float lo = -1.0f) {
  std::uniform_real_distribution<float> d(lo, 1.0f);
  std::vector<float> data(static_cast<std::size_t>(h) * w * c);
  for (float& x : data) x = d(rng);
  return FeatureMap(h, w, c, std::move(data));
}

// Circular convolution of the two count sketches, evaluated directly.
std::vector<double> direct_tensor_sketch(std::span<const float> x, const SketchParams& p) {
  const int d = p.dim;
  std::vector<double> a(d, 0.0), b(d, 0.0), out(d, 0.0);
  for (std::size_t c = 0; c < x.size(); ++c) {
    a[p.h1[c]] += p.s1[c] * double(x[c]);
    b[p.h2[c]] += p.s2[c] * double(x[c]);
  }
  for (int k = 0; k < d; ++k) {
    for (int j = 0; j < d; ++j) out[k] += a[j] * b[((k - j) % d + d) % d];
  }
  return out;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<double> widen(const Descriptor& d) { return {d.values.begin(), d.values.end()}; }

}  // namespace

TEST_CASE("exact bilinear examples") {
  CHECK(exact_bilinear(FeatureMap(1, 1, 2, {1, 0})).values == std::vector<float>{1, 0, 0, 0});
  CHECK(exact_bilinear(FeatureMap(1, 1, 2, {2, 3})).values == std::vector<float>{4, 6, 6, 9});
  CHECK(exact_bilinear(FeatureMap(2, 1, 2, {1, 0, 0, 1})).values == std::vector<float>{1, 0, 0, 1});
}

TEST_CASE("exact bilinear is symmetric positive semidefinite") {
  std::mt19937_64 rng(1);
  const int c = 5;
  const Descriptor b = exact_bilinear(random_map(3, 4, c, rng));
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < c; ++j) CHECK(b.values[i * c + j] == b.values[j * c + i]);
  }
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> z(c);
    for (double& v : z) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    double q = 0.0;
    for (int i = 0; i < c; ++i) {
      for (int j = 0; j < c; ++j) q += z[i] * b.values[i * c + j] * z[j];
    }
    CHECK(q >= -1e-5);
  }
}

TEST_CASE("count sketch") {
  const std::vector<float> x{3, 4};
  CHECK(count_sketch(x, std::vector<int>{0, 1}, std::vector<int>{1, -1}, 2) == std::vector<double>{3, -4});
  CHECK(count_sketch(std::vector<float>{0, 0, 0}, std::vector<int>{0, 1, 1}, std::vector<int>{1, 1, -1}, 2) ==
        std::vector<double>{0, 0});
  CHECK_THROWS(count_sketch(x, std::vector<int>{0}, std::vector<int>{1}, 2));
  CHECK_THROWS(count_sketch(x, std::vector<int>{0, 2}, std::vector<int>{1, 1}, 2));

  std::mt19937_64 rng(2);
  const SketchParams p = make_sketch_params(9, 16, 3);
  std::vector<float> a(9), b(9), s(9);
  for (int i = 0; i < 9; ++i) {
    a[i] = float(rng() % 7) - 3;
    b[i] = float(rng() % 5) - 2;
    s[i] = a[i] + b[i];
  }
  const auto ca = count_sketch(a, p.h1, p.s1, 16), cb = count_sketch(b, p.h1, p.s1, 16);
  const auto cs = count_sketch(s, p.h1, p.s1, 16);
  for (int k = 0; k < 16; ++k) CHECK(cs[k] == ca[k] + cb[k]);
}

TEST_CASE("sketch tables are reproducible and valid") {
  const SketchParams a = make_sketch_params(12, 64, 7), b = make_sketch_params(12, 64, 7);
  CHECK(a.h1 == b.h1);
  CHECK(a.s2 == b.s2);
  CHECK_NOTHROW(a.validate());
  for (int i = 0; i < 12; ++i) {
    CHECK((a.h1[i] >= 0 && a.h1[i] < 64));
    CHECK((a.s1[i] == 1 || a.s1[i] == -1));
  }
  CHECK(make_sketch_params(12, 64, 8).h1 != a.h1);
  CHECK_THROWS(make_sketch_params(12, 1000, 7));
  SketchParams bad = a;
  bad.h2[0] = 64;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("tensor sketch matches the direct circular convolution") {
  std::mt19937_64 rng(4);
  for (int dim : {1, 8, 64}) {
    for (int c : {2, 5, 13}) {
      const SketchParams p = make_sketch_params(c, dim, dim * 100 + c);
      const FeatureMap m = random_map(1, 1, c, rng);
      CHECK(max_abs_diff(tensor_sketch_cell(m.data(), p), direct_tensor_sketch(m.data(), p)) < 1e-9);
    }
  }
}

TEST_CASE("length-one sketch is a product of signed sums") {
  const SketchParams p = make_sketch_params(2, 1, 9);
  const std::vector<float> x{0.7f, -1.3f};
  const double a = p.s1[0] * 0.7 + p.s1[1] * -1.3, b = p.s2[0] * 0.7 + p.s2[1] * -1.3;
  CHECK(tensor_sketch_cell(x, p)[0] == doctest::Approx(a * b).epsilon(1e-6));
}

TEST_CASE("tensor sketch is quadratic and zero at zero") {
  std::mt19937_64 rng(5);
  const SketchParams p = make_sketch_params(6, 32, 1);
  const FeatureMap m = random_map(1, 1, 6, rng);
  std::vector<float> scaled(m.data().begin(), m.data().end());
  for (float& v : scaled) v *= 3.0f;
  const auto base = tensor_sketch_cell(m.data(), p), big = tensor_sketch_cell(scaled, p);
  for (int k = 0; k < 32; ++k) CHECK(big[k] == doctest::Approx(9.0 * base[k]).epsilon(1e-5));
  for (double v : tensor_sketch_cell(std::vector<float>(6, 0.0f), p)) CHECK(v == 0.0);
}

TEST_CASE("pooling sums cells and both methods agree") {
  std::mt19937_64 rng(6);
  for (auto [c, dim] : {std::pair{4, 64}, std::pair{16, 64}, std::pair{10, 256}}) {
    const SketchParams p = make_sketch_params(c, dim, c + dim);
    const FeatureMap m = random_map(3, 2, c, rng);
    std::vector<double> sum(dim, 0.0);
    for (std::size_t i = 0; i < m.cell_count(); ++i) {
      const auto cell = direct_tensor_sketch(m.cell(i), p);
      for (int k = 0; k < dim; ++k) sum[k] += cell[k];
    }
    for (auto method : {SketchMethod::Auto, SketchMethod::Frequency, SketchMethod::Direct}) {
      CHECK(max_abs_diff(widen(tensor_sketch_pool(m, p, method)), sum) < 1e-4);
    }
  }
  const SketchParams p = make_sketch_params(3, 16, 0);
  const FeatureMap one = random_map(1, 1, 3, rng);
  CHECK(max_abs_diff(widen(tensor_sketch_pool(one, p)), tensor_sketch_cell(one.data(), p)) < 1e-6);
  CHECK_THROWS(tensor_sketch_pool(random_map(1, 1, 4, rng), p));
}

TEST_CASE("pooling ignores cell order") {
  std::mt19937_64 rng(7);
  const SketchParams p = make_sketch_params(5, 32, 2);
  const FeatureMap m = random_map(2, 3, 5, rng);
  std::vector<float> reversed;
  for (std::size_t i = m.cell_count(); i-- > 0;) {
    const auto cell = m.cell(i);
    reversed.insert(reversed.end(), cell.begin(), cell.end());
  }
  const FeatureMap r(3, 2, 5, reversed);
  CHECK(max_abs_diff(widen(tensor_sketch_pool(m, p)), widen(tensor_sketch_pool(r, p))) < 1e-5);
}

TEST_CASE("sketch inner product is an unbiased kernel estimate") {
  std::mt19937_64 rng(8);
  const int c = 6, dim = 16, trials = 4000;
  const FeatureMap x = random_map(1, 1, c, rng), y = random_map(1, 1, c, rng);
  double dot_xy = 0.0;
  for (int i = 0; i < c; ++i) dot_xy += double(x.data()[i]) * y.data()[i];
  double mean = 0.0, sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    const SketchParams p = make_sketch_params(c, dim, 1000 + t);
    const double v = dot(tensor_sketch_pool(x, p), tensor_sketch_pool(y, p));
    mean += v;
    sq += v * v;
  }
  mean /= trials;
  const double se = std::sqrt((sq / trials - mean * mean) / trials);
  CHECK(std::abs(mean - dot_xy * dot_xy) < 3 * se);
}

TEST_CASE("estimator variance shrinks with the dimension") {
  std::mt19937_64 rng(9);
  const int c = 32;
  const FeatureMap x = random_map(2, 2, c, rng), y = random_map(2, 2, c, rng);
  auto variance = [&](int dim) {
    double mean = 0.0, sq = 0.0;
    const int trials = 300;
    for (int t = 0; t < trials; ++t) {
      const SketchParams p = make_sketch_params(c, dim, 77 + t);
      const double v = dot(tensor_sketch_pool(x, p), tensor_sketch_pool(y, p));
      mean += v;
      sq += v * v;
    }
    mean /= trials;
    return sq / trials - mean * mean;
  };
  CHECK(variance(8192) < variance(512));
}

TEST_CASE("segment aggregation") {
  std::mt19937_64 rng(10);
  const FeatureMap a = random_map(2, 2, 3, rng), b = random_map(2, 2, 3, rng);
  const FeatureMap ones(2, 2, 3, std::vector<float>(12, 1.0f));
  CHECK(aggregate_segments(std::vector<FeatureMap>{a}) == a);
  CHECK(aggregate_segments(std::vector<FeatureMap>{a, ones}) == a);
  CHECK(aggregate_segments(std::vector<FeatureMap>{a, b}) == aggregate_segments(std::vector<FeatureMap>{b, a}));
  const FeatureMap ab = aggregate_segments(std::vector<FeatureMap>{a, b});
  for (std::size_t i = 0; i < 12; ++i) CHECK(ab.data()[i] == a.data()[i] * b.data()[i]);
  CHECK_THROWS(aggregate_segments(std::vector<FeatureMap>{}));
  CHECK_THROWS(aggregate_segments(std::vector<FeatureMap>{a, random_map(1, 2, 3, rng)}));
}

TEST_CASE("descriptor normalization") {
  CHECK(normalize_descriptor({{4, 0, 0}}).values == std::vector<float>{1, 0, 0});
  const Descriptor n = normalize_descriptor({{-9, 16}});
  CHECK(n.values[0] == doctest::Approx(-0.6));
  CHECK(n.values[1] == doctest::Approx(0.8));
  CHECK(normalize_descriptor({{0, 0}}).values == std::vector<float>{0, 0});
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    Descriptor d;
    for (int i = 0; i < 50; ++i) d.values.push_back(std::uniform_real_distribution<float>(-5, 5)(rng));
    const Descriptor u = normalize_descriptor(d);
    CHECK(std::sqrt(dot(u, u)) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("descriptor files") {
  testing::TempDir dir("bilinear");
  const Descriptor d{{1.5f, -2.0f, 0.25f}};
  save_descriptor(d, dir / "a.cbpd");
  const std::string bytes = testing::read_bytes(dir / "a.cbpd");
  REQUIRE(bytes.size() == 16 + 12);
  CHECK(bytes.substr(0, 4) == "CBPD");
  CHECK(bytes[4] == 1);
  CHECK(bytes[8] == 3);
  CHECK(load_descriptor(dir / "a.cbpd") == d);
  testing::write_bytes(dir / "b.cbpd", "XXXX" + bytes.substr(4));
  CHECK_THROWS_AS(load_descriptor(dir / "b.cbpd"), IoError);
  testing::write_bytes(dir / "c.cbpd", bytes.substr(0, 20));
  CHECK_THROWS_AS(load_descriptor(dir / "c.cbpd"), IoError);
}
