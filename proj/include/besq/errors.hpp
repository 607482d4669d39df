#pragma once

#include <stdexcept>
#include <string>

namespace besq {

struct domain_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct unsupported_scheme : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// State lies on the collision set (two or more coordinates at zero).
struct boundary_error : std::domain_error {
  using std::domain_error::domain_error;
};

struct singular_origin : std::domain_error {
  using std::domain_error::domain_error;
};

struct fit_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct rejection_exhausted : std::runtime_error {
  rejection_exhausted(const std::string& what, long attempts)
      : std::runtime_error(what), attempts(attempts) {}
  long attempts;
};

}  // namespace besq
