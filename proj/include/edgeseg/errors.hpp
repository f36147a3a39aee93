#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace edgeseg {

struct InvalidConfig : std::runtime_error {
  std::vector<std::string> issues;

  explicit InvalidConfig(std::vector<std::string> issues_)
      : std::runtime_error(join(issues_)), issues(std::move(issues_)) {}

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "invalid config:";
    for (const auto& e : v) s += "\n  - " + e;
    return s;
  }
};

struct TooFewAnchors : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateMatrix : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientAnchors : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyRoster : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DoubleRelease : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingSeries : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace edgeseg
