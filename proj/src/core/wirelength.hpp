#pragma once

#include <vector>

#include "core/netlist.hpp"

namespace gp {

// Weighted-average wirelength, the smooth HPWL surrogate. gamma is the
// sharpness (1 / layout units): per net and axis the max estimator is
// sum(x * e^{gamma x}) / sum(e^{gamma x}) and the min estimator mirrors it,
// both evaluated with the max-shift trick. The value approaches HPWL from
// below as gamma grows. When grad is non-null it receives d value / d
// position for every cell (terminal entries are computed too; callers that
// optimize simply skip them).
double wa_wirelength(const Netlist& nl, const Placement& pl, double gamma,
                     std::vector<Vec2>* grad);

}  // namespace gp
