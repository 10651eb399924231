#include "enlmc/neighbor_index.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace enlmc {

NeighborIndex::NeighborIndex(const Matrix& points, double cell_edge)
    : points_(&points), cell_edge_(cell_edge), dim_(static_cast<int>(points.cols())) {
  if (!(cell_edge > 0.0)) throw std::invalid_argument("cell edge must be positive");
  const auto n = static_cast<std::size_t>(points.rows());
  const auto d = static_cast<std::size_t>(dim_);
  if (dim_ < 1 || dim_ > 3 || n < 2) return;

  cell_of_.assign(n * d, 0);
  origin_.assign(d, INT64_MAX);
  std::vector<std::int64_t> top(d, INT64_MIN);
  constexpr double kMaxCoord = 1e15;
  for (std::size_t i = 0; i < n; ++i) {
    bool finite = true;
    for (std::size_t k = 0; k < d; ++k) {
      const double c = points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) / cell_edge;
      if (!std::isfinite(c) || std::abs(c) > kMaxCoord) finite = false;
    }
    if (!finite) {
      cell_of_[i * d] = INT64_MIN;
      continue;
    }
    for (std::size_t k = 0; k < d; ++k) {
      const double c = points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) / cell_edge;
      const auto cell = static_cast<std::int64_t>(std::floor(c));
      cell_of_[i * d + k] = cell;
      origin_[k] = std::min(origin_[k], cell);
      top[k] = std::max(top[k], cell);
    }
  }
  for (std::size_t k = 0; k < d; ++k) {
    if (origin_[k] == INT64_MAX) return;  // no finite points
    // one spare cell on each side so neighbour offsets never wrap
    if (top[k] - origin_[k] + 3 >= (std::int64_t{1} << kBitsPerAxis)) return;
    origin_[k] -= 1;
  }

  std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed;
  keyed.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (cell_of_[i * d] == INT64_MIN) continue;
    keyed.emplace_back(pack(&cell_of_[i * d]), static_cast<std::uint32_t>(i));
  }
  std::sort(keyed.begin(), keyed.end());
  sorted_ids_.resize(keyed.size());
  for (std::size_t k = 0; k < keyed.size(); ++k) {
    sorted_ids_[k] = keyed[k].second;
    auto [it, inserted] = cells_.try_emplace(keyed[k].first, static_cast<std::uint32_t>(k),
                                             static_cast<std::uint32_t>(k + 1));
    if (!inserted) it->second.second = static_cast<std::uint32_t>(k + 1);
  }
  use_grid_ = true;
}

std::uint64_t NeighborIndex::pack(const std::int64_t* cell) const {
  std::uint64_t key = 0;
  for (int k = 0; k < dim_; ++k) {
    key = (key << kBitsPerAxis) | static_cast<std::uint64_t>(cell[k] - origin_[static_cast<std::size_t>(k)]);
  }
  return key;
}

void NeighborIndex::candidate_ranges(std::size_t i,
                                     std::vector<std::pair<std::uint32_t, std::uint32_t>>& out) const {
  out.clear();
  const auto d = static_cast<std::size_t>(dim_);
  const std::int64_t* base = &cell_of_[i * d];
  std::int64_t probe[3];
  int offsets[3] = {-1, -1, -1};
  while (true) {
    for (std::size_t k = 0; k < d; ++k) probe[k] = base[k] + offsets[k];
    const auto it = cells_.find(pack(probe));
    if (it != cells_.end()) out.push_back(it->second);
    std::size_t k = 0;
    while (k < d && offsets[k] == 1) offsets[k++] = -1;
    if (k == d) break;
    ++offsets[k];
  }
}

std::size_t NeighborIndex::count_within(std::size_t i, double radius) const {
  std::size_t count = 0;
  for_each_within(i, radius, [&](std::size_t) { ++count; });
  return count;
}

std::vector<std::size_t> NeighborIndex::brute_force(std::size_t i, double radius) const {
  const Matrix& p = *points_;
  std::vector<std::size_t> out;
  const auto row_i = static_cast<Eigen::Index>(i);
  for (Eigen::Index j = 0; j < p.rows(); ++j) {
    if (j == row_i) continue;
    if ((p.row(j) - p.row(row_i)).squaredNorm() <= radius * radius) out.push_back(static_cast<std::size_t>(j));
  }
  return out;
}

}  // namespace enlmc
