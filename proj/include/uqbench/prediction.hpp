#pragma once

namespace uqbench {

/// Mean and epistemic standard deviation reported by any method at one input.
struct UqPrediction {
  double mean = 0.0;
  double std = 0.0;
};

}  // namespace uqbench
