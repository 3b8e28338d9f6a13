#pragma once

#include <stdexcept>
#include <string>

namespace adamlab {

// Exit-code classes surfaced by the CLI: config -> 2, numeric -> 3, io -> 4.

class config_error : public std::invalid_argument {
 public:
  config_error(std::string key, const std::string& what)
      : std::invalid_argument(key.empty() ? what : key + ": " + what),
        key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No statistically confident sign change inside a zero-search bracket.
class bracket_error : public numeric_error {
 public:
  using numeric_error::numeric_error;
};

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace adamlab
