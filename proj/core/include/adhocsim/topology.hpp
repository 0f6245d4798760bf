#pragma once

#include <cstddef>
#include <vector>

#include "adhocsim/types.hpp"

namespace adhocsim {

struct Position {
  double x = 0.0;
  double y = 0.0;
};

// Static node placement with unit-disk connectivity: a and b are neighbors
// iff euclidean distance <= comm_range (boundary inclusive).  Links are
// symmetric by construction.
class Topology {
 public:
  Topology(std::vector<Position> positions, double comm_range);

  std::size_t size() const { return positions_.size(); }
  double comm_range() const { return comm_range_; }
  const Position& position(NodeId n) const { return positions_[n]; }

  double distance(NodeId a, NodeId b) const;
  bool in_range(NodeId a, NodeId b) const;

  // Sorted by node id; excludes the node itself.
  const std::vector<NodeId>& neighbors(NodeId n) const { return adj_[n]; }

 private:
  std::vector<Position> positions_;
  double comm_range_;
  std::vector<std::vector<NodeId>> adj_;
};

// rows x cols lattice with the given spacing, row-major ids: node r*cols+c
// sits at (c*spacing, r*spacing).  rows, cols >= 2.
std::vector<Position> make_grid(std::size_t rows, std::size_t cols, double spacing);

// k x k lattice spanning a width x height area, spacing width/(k-1) and
// height/(k-1).  count must be a perfect square >= 4.
std::vector<Position> make_square_grid(std::size_t count, double width, double height);

}  // namespace adhocsim
