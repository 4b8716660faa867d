#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>

namespace kraichnan {

// compensated sum (Neumaier), order-dependent but far less lossy than plain +=
struct NeumaierSum {
  double sum = 0.0, comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

// FNV-1a over raw bytes; stable across runs, unlike std::hash
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(std::span<const double> v, std::uint64_t h = 1469598103934665603ULL) {
  return fnv1a(v.data(), v.size_bytes(), h);
}

}  // namespace kraichnan
