#include "adhocsim/topology.hpp"

#include <cmath>

#include "adhocsim/contract.hpp"

namespace adhocsim {

Topology::Topology(std::vector<Position> positions, double comm_range)
    : positions_(std::move(positions)), comm_range_(comm_range) {
  contract_check(!positions_.empty(), "topology: no nodes");
  contract_check(comm_range_ > 0.0, "topology: comm_range must be positive");
  adj_.resize(positions_.size());
  for (NodeId a = 0; a < positions_.size(); ++a) {
    for (NodeId b = 0; b < positions_.size(); ++b) {
      if (a != b && in_range(a, b)) adj_[a].push_back(b);
    }
  }
}

double Topology::distance(NodeId a, NodeId b) const {
  contract_check(a < positions_.size() && b < positions_.size(),
                 "topology: unknown node");
  return std::hypot(positions_[a].x - positions_[b].x,
                    positions_[a].y - positions_[b].y);
}

bool Topology::in_range(NodeId a, NodeId b) const {
  return distance(a, b) <= comm_range_;
}

std::vector<Position> make_grid(std::size_t rows, std::size_t cols, double spacing) {
  contract_check(rows >= 1 && cols >= 1 && rows * cols >= 2,
                 "make_grid: need at least two nodes");
  contract_check(spacing > 0.0, "make_grid: spacing must be positive");
  std::vector<Position> out;
  out.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out.push_back(Position{static_cast<double>(c) * spacing,
                             static_cast<double>(r) * spacing});
    }
  }
  return out;
}

std::vector<Position> make_square_grid(std::size_t count, double width,
                                       double height) {
  std::size_t k = 1;
  while (k * k < count) ++k;
  contract_check(k * k == count && k >= 2,
                 "make_square_grid: count must be a perfect square >= 4");
  contract_check(width > 0.0 && height > 0.0,
                 "make_square_grid: area must be positive");
  double sx = width / static_cast<double>(k - 1);
  double sy = height / static_cast<double>(k - 1);
  std::vector<Position> out;
  out.reserve(count);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      out.push_back(Position{static_cast<double>(c) * sx,
                             static_cast<double>(r) * sy});
    }
  }
  return out;
}

}  // namespace adhocsim
