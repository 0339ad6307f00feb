#pragma once

#include <stdexcept>
#include <string>

namespace igdist {

/// Library error. `kind` decides the CLI exit status: invalid input maps to
/// the configuration exit code, everything else to the runtime one.
class Error : public std::runtime_error {
 public:
  enum class Kind { InvalidInput, Numerical, Capacity };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline Error invalid_input(const std::string& what) { return {Error::Kind::InvalidInput, what}; }
inline Error numerical_error(const std::string& what) { return {Error::Kind::Numerical, what}; }
inline Error capacity_error(const std::string& what) { return {Error::Kind::Capacity, what}; }

}  // namespace igdist
