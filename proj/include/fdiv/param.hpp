#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "fdiv/common.hpp"

namespace fdl::diff {

// Named slice of a flat parameter vector, e.g. ("policy/l0/W", 0, 250).
struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Disjoint, covering segment map over a flat vector.
class ParamLayout {
 public:
  ParamLayout() = default;

  // Validates that segments are contiguous from 0 with no gaps or overlaps.
  static ParamLayout build(std::vector<Segment> segments);

  std::size_t total() const { return total_; }
  const std::vector<Segment>& segments() const { return segments_; }
  const Segment& at(std::string_view name) const;
  bool has(std::string_view name) const;
  // Name of the segment containing a flat index (for error messages).
  const std::string& segment_of(std::size_t index) const;

 private:
  std::vector<Segment> segments_;
  std::size_t total_ = 0;
};

struct ParamVector {
  ParamLayout layout;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  std::span<const double> span() const { return values; }
  std::span<double> span() { return values; }
  std::span<double> segment(std::string_view name);
  std::span<const double> segment(std::string_view name) const;

  // Enforces the finite-values and layout-coverage invariants.
  void validate() const;
};

struct GradResult {
  double value = 0.0;
  std::vector<double> gradient;
};

}  // namespace fdl::diff
