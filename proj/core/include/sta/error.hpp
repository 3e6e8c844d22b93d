#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sta {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user input: bad parameters, malformed configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A designer could not produce an admissible protocol.
class DesignRejected : public Error {
 public:
  using Error::Error;
};

class UnsolvableConstraints : public DesignRejected {
 public:
  UnsolvableConstraints(const std::string& what, std::vector<std::size_t> rows)
      : DesignRejected(what), rows_(std::move(rows)) {}
  const std::vector<std::size_t>& rows() const { return rows_; }

 private:
  std::vector<std::size_t> rows_;
};

class SimulationError : public Error {
 public:
  SimulationError(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

}  // namespace sta
