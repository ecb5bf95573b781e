#ifndef MSSFS_TYPES_HPP
#define MSSFS_TYPES_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace mssfs {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Error hierarchy. The C API maps each subclass onto one status code; the
// C++ surface throws.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Carries the time index (1-based) where a linear-algebra step failed.
class NumericError : public Error {
 public:
  NumericError(const std::string& msg, int t = -1) : Error(msg), t_(t) {}
  int time_index() const { return t_; }

 private:
  int t_;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class BootstrapError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Either a single constant value or one value per time step (1-based t).
template <typename T>
class Schedule {
 public:
  Schedule() = default;
  explicit Schedule(T constant) : constant_(std::move(constant)) {}
  explicit Schedule(std::vector<T> per_time) : per_time_(std::move(per_time)) {}

  bool is_constant() const { return per_time_.empty(); }

  const T& at(int t) const {
    if (per_time_.empty()) return constant_;
    if (t < 1 || t > static_cast<int>(per_time_.size()))
      throw ConfigError("schedule index out of range: t=" + std::to_string(t));
    return per_time_[static_cast<size_t>(t - 1)];
  }

 private:
  T constant_{};
  std::vector<T> per_time_{};
};

}  // namespace mssfs

#endif  // MSSFS_TYPES_HPP
