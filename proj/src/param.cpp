#include "fdiv/param.hpp"

#include <algorithm>

namespace fdl::diff {

ParamLayout ParamLayout::build(std::vector<Segment> segments) {
  std::sort(segments.begin(), segments.end(),
            [](const Segment& a, const Segment& b) { return a.offset < b.offset; });
  std::size_t expect = 0;
  for (const Segment& s : segments) {
    if (s.offset != expect) {
      throw ConfigError("param layout has a gap or overlap at segment '" + s.name + "'");
    }
    expect = s.offset + s.size;
  }
  ParamLayout out;
  out.segments_ = std::move(segments);
  out.total_ = expect;
  return out;
}

const Segment& ParamLayout::at(std::string_view name) const {
  for (const Segment& s : segments_) {
    if (s.name == name) return s;
  }
  throw ConfigError("unknown param segment '" + std::string(name) + "'");
}

bool ParamLayout::has(std::string_view name) const {
  for (const Segment& s : segments_) {
    if (s.name == name) return true;
  }
  return false;
}

const std::string& ParamLayout::segment_of(std::size_t index) const {
  for (const Segment& s : segments_) {
    if (index >= s.offset && index < s.offset + s.size) return s.name;
  }
  static const std::string unknown = "<out of range>";
  return unknown;
}

std::span<double> ParamVector::segment(std::string_view name) {
  const Segment& s = layout.at(name);
  return {values.data() + s.offset, s.size};
}

std::span<const double> ParamVector::segment(std::string_view name) const {
  const Segment& s = layout.at(name);
  return {values.data() + s.offset, s.size};
}

void ParamVector::validate() const {
  if (layout.total() != values.size()) {
    throw ConfigError("param vector length does not match its layout");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericError("non-finite parameter in segment '" + layout.segment_of(i) + "'");
    }
  }
}

}  // namespace fdl::diff
