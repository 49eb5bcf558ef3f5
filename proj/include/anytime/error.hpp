#pragma once

#include <stdexcept>
#include <string>

namespace anytime {

/// Error raised by profile validation and all library operations.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace anytime
