// Named, versioned library of closed-form test fields.
#pragma once

#include "heis/field.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace heis {

inline constexpr const char* kTestLibraryVersion = "tf-1";

// exp(-((|z|^2 - a)^2 + (t - b)^2) / w^4): Gaussian-type bump concentrated near |z|^2 = a, t = b.
Field gaussian_ring(int n, double a, double b, double w);

// exp(-rho^4 / s^4)
Field gaussian(int n, double s = 1.0);

// rho^s times a smooth switch vanishing for rho <= r1 (equal to rho^s for rho >= r2).
Field rho_power_cutoff(int n, double s, double r1 = 0.5, double r2 = 1.0);

// sigma^s (1 + c (x_1^2 - y_1^2) / sigma^2): power-law member of the inequality family.
Field sigma_power_profile(int n, double s, double c);

// Look up by name: "gauss_r4", "ring_z4", "poly_gauss", "rho4_sigma_m10", "shifted_bump",
// "gaussian", "ring_bump".
Field named_test_function(const std::string& name, int n);
std::vector<std::string> test_function_names();

// The five fields used for the dilation identity; all vanish to order 4 at the origin.
std::vector<std::string> scaling_test_names();

struct BumpParams {
  double a, b, w;
};

// Seeded ring bumps with a in [0.6, 1.6], b in [-0.6, 0.6], w in [0.7, 0.9].
std::vector<BumpParams> bump_family_params(int count, std::uint64_t seed);
std::vector<Field> bump_family(int n, int count, std::uint64_t seed);

}  // namespace heis
