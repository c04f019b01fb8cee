#pragma once

#include <compare>
#include <ostream>

namespace offload {

// (execution time, device CPU) cost pair. Both objectives are minimized.
struct ObjectiveVector {
  double time_ms = 0.0;
  double cpu_units = 0.0;

  constexpr ObjectiveVector& operator+=(const ObjectiveVector& o) {
    time_ms += o.time_ms;
    cpu_units += o.cpu_units;
    return *this;
  }
  friend constexpr ObjectiveVector operator+(ObjectiveVector a, const ObjectiveVector& b) {
    return a += b;
  }
  friend constexpr bool operator==(const ObjectiveVector&, const ObjectiveVector&) = default;
  friend constexpr auto operator<=>(const ObjectiveVector&, const ObjectiveVector&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const ObjectiveVector& v) {
  return os << '(' << v.time_ms << ", " << v.cpu_units << ')';
}

}  // namespace offload
