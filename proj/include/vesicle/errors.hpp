#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vesicle {

/// Evaluation point too close to a coordinate pole for theta-derivative
/// recurrences (sin(theta) below the configured floor).
class DegenerateNodeError : public std::runtime_error {
public:
  explicit DegenerateNodeError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Invalid surface geometry: nonpositive radius or singular metric.
/// Carries the offending flat node indices when they are known.
class GeometryError : public std::runtime_error {
public:
  explicit GeometryError(const std::string& what, std::vector<int> nodes = {})
      : std::runtime_error(what), nodes_(std::move(nodes)) {}

  const std::vector<int>& nodes() const { return nodes_; }

private:
  std::vector<int> nodes_;
};

}  // namespace vesicle
