#include "adhocsim/contract.hpp"

namespace adhocsim {

void contract_fail(const std::string& what) { throw ContractViolation(what); }

}  // namespace adhocsim
