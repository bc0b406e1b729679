#pragma once

#include <stdexcept>
#include <string>

namespace uresim {

// Thrown when a request is structurally valid but cannot be satisfied
// (e.g. an allocation budget larger than the total requested bits).
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace uresim
