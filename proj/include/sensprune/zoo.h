#pragma once

#include <string>
#include <vector>

#include "sensprune/model_spec.h"

namespace sensprune {

// Names accepted by build_model.
std::vector<std::string> zoo_names();

// Builds a zoo topology. Mini variants divide every filter and hidden-unit
// count by `divisor` (0 selects the default of 8); full-size models reject a
// non-zero divisor other than 1. Unknown names throw ConfigError listing the
// zoo.
ModelSpec build_model(const std::string& name, int divisor = 0);

}  // namespace sensprune
