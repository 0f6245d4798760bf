#include "adhocsim/types.hpp"

namespace adhocsim {

std::string to_string(const FlowKey& f) {
  return std::to_string(f.src) + ":" + std::to_string(f.dst) + ":" +
         std::to_string(f.flow_id);
}

}  // namespace adhocsim
