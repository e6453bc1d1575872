#pragma once

#include <cstddef>
#include <cstring>
#include <span>
#include <vector>

namespace grandcouple {

// A state. Finite spaces store the state index as a single coordinate.
using Point = std::vector<double>;

inline bool bitwise_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

struct PointHash {
  std::size_t operator()(const Point& p) const noexcept {
    // FNV-1a over the raw bytes
    std::size_t h = 14695981039346656037ull;
    const auto* bytes = reinterpret_cast<const unsigned char*>(p.data());
    for (std::size_t i = 0; i < p.size() * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
    return h;
  }
};

struct PointBitwiseEq {
  bool operator()(const Point& a, const Point& b) const noexcept {
    return bitwise_equal(a, b);
  }
};

// Labels 0..g-1 in order of first appearance; equal labels iff bitwise-equal.
std::vector<int> bitwise_partition(std::span<const Point> values, int* n_labels = nullptr);

}  // namespace grandcouple
