#pragma once

#include <stdexcept>
#include <string>

namespace mapseg {

// Exit-code classes of the command-line tool map one-to-one onto these.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int round)
      : std::runtime_error(what), round_(round) {}
  int round() const noexcept { return round_; }

 private:
  int round_;
};

}  // namespace mapseg
