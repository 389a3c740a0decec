#pragma once

#include <cstdint>
#include <random>

#include "parastab/fem.hpp"
#include "parastab/patches.hpp"

namespace parastab {

/// Deterministic uniform noise on [-mag, mag] per component. Draws from a
/// seeded mt19937_64 are mapped to [0,1) by taking the top 53 bits, so
/// identical seeds give identical sequences on every platform.
class NoiseGenerator {
 public:
  NoiseGenerator(std::uint64_t seed, double mag) : mag_(mag), engine_(seed) {
    if (mag < 0.0) throw std::invalid_argument("NoiseGenerator: mag must be >= 0");
  }

  double mag() const { return mag_; }

  Vector sample(int dim) {
    Vector z(dim);
    for (int i = 0; i < dim; ++i) {
      const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;  // [0,1)
      z(i) = mag_ * (-1.0 + 2.0 * u);
    }
    return z;
  }

 private:
  double mag_;
  std::mt19937_64 engine_;
};

/// One backward-Euler step of the Luenberger observer from coarse step
/// end_index-1 to end_index:
///   (F + dt lambda_L Lw G^{-1} Lw^T) yhat+ = M yhat + dt (Lb u + lambda_L Lw G^{-1} w)
/// where F is the free end-of-step system matrix, Lw/Lb the sensor/actuator
/// load matrices and G the sensor Gram matrix. The sensor coupling is
/// applied implicitly through a rank-s Woodbury correction of the cached
/// factorization of F.
Vector observer_step(ImplicitStepper& stepper, const PatchArray& sensors,
                     const PatchArray& actuators, const Vector& estimate,
                     const Vector& measurement, const Vector& delayed_input, long end_index);

}  // namespace parastab
