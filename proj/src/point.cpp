#include "grandcouple/point.hpp"

#include <unordered_map>

namespace grandcouple {

std::vector<int> bitwise_partition(std::span<const Point> values, int* n_labels) {
  std::unordered_map<Point, int, PointHash, PointBitwiseEq> seen;
  seen.reserve(values.size());
  std::vector<int> labels(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto [it, inserted] = seen.try_emplace(values[i], static_cast<int>(seen.size()));
    labels[i] = it->second;
  }
  if (n_labels != nullptr) *n_labels = static_cast<int>(seen.size());
  return labels;
}

}  // namespace grandcouple
