#pragma once

#include <cstddef>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "enlmc/types.hpp"

namespace enlmc {

/// Fixed-radius neighbour search over a point set.
///
/// Points are bucketed into a uniform grid with cell edge `cell_edge`; a
/// query of radius r <= cell_edge visits the 3^d surrounding cells. For d > 3,
/// for non-finite points, or for grids whose extent does not fit the packed
/// cell key, queries fall back to a linear scan. Results are identical either
/// way; the visiting order is deterministic for a given point set but is
/// otherwise unspecified.
class NeighborIndex {
 public:
  NeighborIndex() = default;
  NeighborIndex(const Matrix& points, double cell_edge);

  /// Calls fn(j) for every j != i with |points_j - points_i| <= radius.
  template <typename Fn>
  void for_each_within(std::size_t i, double radius, Fn&& fn) const;

  std::size_t count_within(std::size_t i, double radius) const;

  /// Brute-force reference: ids j != i with |points_j - points_i| <= radius.
  std::vector<std::size_t> brute_force(std::size_t i, double radius) const;

  bool uses_grid() const { return use_grid_; }
  double cell_edge() const { return cell_edge_; }

 private:
  static constexpr int kBitsPerAxis = 21;

  std::uint64_t pack(const std::int64_t* cell) const;
  void candidate_ranges(std::size_t i, std::vector<std::pair<std::uint32_t, std::uint32_t>>& out) const;

  const Matrix* points_ = nullptr;
  double cell_edge_ = 0.0;
  int dim_ = 0;
  bool use_grid_ = false;
  std::vector<std::int64_t> cell_of_;      // n * dim cell coordinates
  std::vector<std::int64_t> origin_;       // minimal cell coordinate per axis
  std::vector<std::uint32_t> sorted_ids_;  // ids grouped by cell
  std::unordered_map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>> cells_;
};

template <typename Fn>
void NeighborIndex::for_each_within(std::size_t i, double radius, Fn&& fn) const {
  const Matrix& p = *points_;
  const double r2 = radius * radius;
  const auto n = static_cast<std::size_t>(p.rows());
  const double* xi = p.row(static_cast<Eigen::Index>(i)).data();
  auto within = [&](std::size_t j) {
    const double* xj = p.row(static_cast<Eigen::Index>(j)).data();
    double s = 0.0;
    for (int k = 0; k < dim_; ++k) {
      const double diff = xj[k] - xi[k];
      s += diff * diff;
    }
    return s <= r2;
  };
  if (!use_grid_ || radius > cell_edge_ || cell_of_[i * static_cast<std::size_t>(dim_)] == INT64_MIN) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && within(j)) fn(j);
    }
    return;
  }
  thread_local std::vector<std::pair<std::uint32_t, std::uint32_t>> ranges;
  candidate_ranges(i, ranges);
  for (const auto& [begin, end] : ranges) {
    for (std::uint32_t k = begin; k < end; ++k) {
      const std::size_t j = sorted_ids_[k];
      if (j != i && within(j)) fn(j);
    }
  }
}

}  // namespace enlmc
