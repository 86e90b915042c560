#pragma once

#include <string>
#include <vector>

#include "bp/types.hpp"

namespace bp {

/// Contiguous range of feasible consumption values for a given difference
/// state w = s - x.
struct YRange {
  int lo = 0;
  int hi = -1;

  int size() const { return hi - lo + 1; }
  bool empty() const { return hi < lo; }
  bool contains(int y) const { return y >= lo && y <= hi; }
};

/// Feasible consumptions 𝒴∘(w) = { y : w + y stays inside the battery
/// alphabet }. Never empty when mx <= my.
YRange feasible_outputs(const SystemSpec& spec, int w);

/// One battery step under the conservation law: returns s + y - x.
/// Throws SpecError if y is not feasible for (s, x).
int step(const SystemSpec& spec, int s, int x, int y);

/// A sampled joint trajectory of demand, battery, and consumption.
struct Trace {
  std::vector<int> x;
  std::vector<int> s;
  std::vector<int> y;

  int horizon() const { return static_cast<int>(x.size()); }
  std::string to_csv() const;  // header t,x,s,y
};

}  // namespace bp
