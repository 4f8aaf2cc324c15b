#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace protoverb {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or arguments supplied by the caller.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Content violates the dataset / checkpoint format or a data precondition
// (dimension mismatch, duplicate id, too few records for an episode, ...).
class DataError : public Error {
 public:
  explicit DataError(const std::string& message,
                     std::optional<std::size_t> line = std::nullopt,
                     std::optional<std::string> record_id = std::nullopt)
      : Error(Format(message, line, record_id)), line_(line), record_id_(std::move(record_id)) {}

  std::optional<std::size_t> line() const noexcept { return line_; }
  const std::optional<std::string>& record_id() const noexcept { return record_id_; }

 private:
  static std::string Format(const std::string& message, std::optional<std::size_t> line,
                            const std::optional<std::string>& record_id) {
    std::string out;
    if (line) out += "line " + std::to_string(*line) + ": ";
    if (record_id) out += "record '" + *record_id + "': ";
    return out + message;
  }

  std::optional<std::size_t> line_;
  std::optional<std::string> record_id_;
};

// Zero norms, non-finite intermediates and similar failures of the math.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace protoverb
