#pragma once

#include <utility>
#include <vector>

#include "nfr/mesh.hpp"

namespace nfr {

struct DecimationResult {
  std::vector<int> kept;                      // surviving original vertex ids, ascending
  std::vector<std::pair<int, int>> edges;     // over original vertex ids
  bool reached_target = false;
};

// Quadric edge collapse with subset placement (each collapse keeps one of
// the two endpoints), so surviving vertices are original mesh vertices.
DecimationResult qem_decimate(const Mesh& mesh, int target_vertices);

}  // namespace nfr
