#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace cfd {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Bad arguments, malformed files or configs. Maps to CLI exit code 2.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A covariance that will not factorize, a blown-up simulation, a fit that
// cannot start. Maps to CLI exit code 3.
class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

inline void require_dim(const Vec& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw InputError(std::string(what) + ": expected length " + std::to_string(n) +
                     ", got " + std::to_string(v.size()));
  }
}

}  // namespace cfd
