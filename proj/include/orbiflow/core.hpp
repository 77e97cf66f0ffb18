#pragma once

// Small shared utilities: fixed-capacity coordinate vectors, torus wrapping,
// deterministic RNG, a flat thread pool, and float formatting helpers.

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace orbiflow {

inline constexpr int kMaxDim = 3;
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Coordinate vector with inline storage. Dimension is runtime but <= kMaxDim.
struct Vec {
  std::array<double, kMaxDim> c{};
  int n = 0;

  Vec() = default;
  explicit Vec(int dim) : n(dim) {}
  Vec(std::initializer_list<double> xs) {
    n = static_cast<int>(xs.size());
    int i = 0;
    for (double x : xs) c[i++] = x;
  }
  double& operator[](int i) { return c[i]; }
  double operator[](int i) const { return c[i]; }
  int dim() const { return n; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < n; ++i) c[i] += o.c[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < n; ++i) c[i] -= o.c[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < n; ++i) c[i] *= s;
    return *this;
  }
  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(double s, Vec a) { return a *= s; }
};

inline double dot(const Vec& a, const Vec& b) {
  double s = 0;
  for (int i = 0; i < a.n; ++i) s += a.c[i] * b.c[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double sup_norm(const Vec& a) {
  double m = 0;
  for (int i = 0; i < a.n; ++i) m = std::max(m, std::fabs(a.c[i]));
  return m;
}

// Wrap a coordinate into [0,1).
inline double wrap01(double x) {
  double y = x - std::floor(x);
  if (y >= 1.0) y = 0.0;  // guard against floor rounding at exact integers
  return y;
}

inline Vec wrap01(const Vec& x) {
  Vec y(x.n);
  for (int i = 0; i < x.n; ++i) y[i] = wrap01(x[i]);
  return y;
}

// Distance on the flat torus (per-axis nearest lattice shift).
inline double torus_dist(const Vec& a, const Vec& b) {
  double s = 0;
  for (int i = 0; i < a.n; ++i) {
    double d = std::fabs(wrap01(a[i]) - wrap01(b[i]));
    d = std::min(d, 1.0 - d);
    s += d * d;
  }
  return std::sqrt(s);
}

// splitmix64: deterministic seeding for sample patterns and test data.
struct SplitMix64 {
  uint64_t s;
  explicit SplitMix64(uint64_t seed) : s(seed) {}
  uint64_t next() {
    uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return (next() >> 11) * 0x1.0p-53; }
};

// Compensated accumulator for long time averages.
struct KahanSum {
  double s = 0, comp = 0;
  void add(double x) {
    double y = x - comp;
    double t = s + y;
    comp = (t - s) - y;
    s = t;
  }
  double value() const { return s; }
};

inline int worker_count() {
  if (const char* e = std::getenv("ORBIFLOW_THREADS")) {
    int k = std::atoi(e);
    if (k >= 1) return k;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Parallel loop over [0,n). Work items write to index-addressed slots, so the
// result does not depend on the scheduling order.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  int workers = worker_count();
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  auto run = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  int k = std::min<std::size_t>(workers, n);
  pool.reserve(k);
  for (int t = 0; t < k; ++t) pool.emplace_back(run);
  for (auto& th : pool) th.join();
}

// Round to 12 significant digits; reports serialize floats through this so
// identical runs produce identical bytes.
inline double round12(double x) {
  if (!std::isfinite(x)) return x;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::strtod(buf, nullptr);
}

// FNV-1a content hash for manifest entries.
inline std::string fnv1a_hex(const std::string& data) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace orbiflow
