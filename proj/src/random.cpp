#include "loyalty/random.hpp"

#include <cmath>
#include <numbers>

namespace loyalty {

double Rng::normal(double mean, double stddev) {
  // Box-Muller on two fresh uniforms; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace loyalty
