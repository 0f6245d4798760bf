#pragma once

#include <stdexcept>
#include <string>

namespace adhocsim {

// Violated runtime contract: scheduling into the past, negative debit,
// malformed internal state. The CLI maps this to exit code 2.
class ContractViolation : public std::runtime_error {
 public:
  explicit ContractViolation(const std::string& what)
      : std::runtime_error(what) {}
};

[[noreturn]] void contract_fail(const std::string& what);

inline void contract_check(bool ok, const char* what) {
  if (!ok) contract_fail(what);
}

}  // namespace adhocsim
