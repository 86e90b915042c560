#include "bp/model.hpp"

#include <algorithm>
#include <sstream>

namespace bp {

YRange feasible_outputs(const SystemSpec& spec, int w) {
  if (!spec.difference().contains(w))
    throw SpecError("difference state w=" + std::to_string(w) +
                    " outside W alphabet");
  YRange r;
  r.lo = std::max(0, -w);
  r.hi = std::min(spec.my(), spec.ms() - w);
  return r;
}

int step(const SystemSpec& spec, int s, int x, int y) {
  spec.battery.index(s);
  spec.demand.index(x);
  spec.consumption.index(y);
  if (!feasible_outputs(spec, s - x).contains(y))
    throw SpecError("conservation violation: y=" + std::to_string(y) +
                    " infeasible for s=" + std::to_string(s) +
                    ", x=" + std::to_string(x));
  return s + y - x;
}

std::string Trace::to_csv() const {
  std::ostringstream out;
  out << "t,x,s,y\n";
  for (std::size_t t = 0; t < x.size(); ++t)
    out << (t + 1) << ',' << x[t] << ',' << s[t] << ',' << y[t] << '\n';
  return out.str();
}

}  // namespace bp
