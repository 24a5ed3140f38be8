#pragma once

#include <utility>

#include "ctlqr/model.hpp"

namespace ctlqr::harness {

/// Lateral-directional dynamics of the X-29A aircraft at 4000 ft, with noise 0.2 I,
/// Q = 10 I and R = I.
std::pair<DynamicsModel, CostSpec> x29a_preset();

}  // namespace ctlqr::harness
