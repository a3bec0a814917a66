#ifndef LONGDOC_ERRORS_HPP
#define LONGDOC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace longdoc {

// Error categories map onto the CLI exit codes: config = 1, data = 2,
// training = 3.

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

class TrainError : public std::runtime_error {
 public:
  explicit TrainError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace longdoc

#endif  // LONGDOC_ERRORS_HPP
