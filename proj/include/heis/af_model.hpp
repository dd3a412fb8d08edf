// Asymptotically flat blow-up model: leading coefficients of the pseudo-hermitian structure near infinity
// and the perturbed sub-Laplacian (1 + 4 c~_n A_p rho^{-2n}) Lap.
#pragma once

#include "heis/operators.hpp"

#include <string>
#include <vector>

namespace heis {

struct AFModel {
  int n = 1;
  double A_p = 0.0;
  double a_n = 1.0;
  double rho_0 = 1.0;

  double c_n() const { return 4.0 * M_PI / (n * a_n); }
  double c_tilde_n() const { return 2.0 * M_PI / (n * a_n); }
  // 4 c~_n A_p: coefficient of rho^{-2n} in the blow-up factor
  double leading() const { return 4.0 * c_tilde_n() * A_p; }

  void validate() const;
  nlohmann::json to_json() const;
};

// 1 + 4 c~_n A_p rho^{-2n}; throws std::domain_error for rho < rho_0.
double blowup_coefficient(const AFModel& m, const HPoint<double>& x);

// The blow-up factor on all of H_n: the rho^{-2n} deviation switched off smoothly on [rho_0/2, rho_0].
Field blowup_field(const AFModel& m);

// a = blowup_field I, b = c = 0, with lambda and C1 set from a radial bound on the deviation.
// Throws std::invalid_argument unless 0 < tau < 2n, Q < q, and |4 c~_n A_p| rho_0^{-2n} (switch peak) < 1.
SubellipticOperator build_perturbed_sublaplacian(const AFModel& m, double tau, double q_exp = 0.0);

struct FrameExpansion {
  double frame = 1.0;    // 1 - c~_n A_p rho^{-2n}
  double coframe = 1.0;  // 1 + c~_n A_p rho^{-2n}
  double product_defect = 0.0;  // frame * coframe - 1
  int remainder_order = 0;        // 2n + 1
  int cross_remainder_order = 0;  // 2n + 2
  nlohmann::json to_json() const;
};

FrameExpansion frame_expansion(const AFModel& m, const HPoint<double>& x);

// Magnitude of the leading connection coefficient n (c_n + c~_n) |A_p| |z_1| omega / rho^{2n+4} with the
// placeholder omega = rho^2.
Field connection_placeholder(const AFModel& m);

struct DecayClaim {
  std::string field;
  double s = 0.0;  // field = O(rho^{-s})
  std::vector<double> radii;
};

struct DecayResult {
  DecayClaim claim;
  std::vector<double> sup_values;  // max |field| over sphere directions at each radius
  double slope = 0.0;
  bool pass = false;
  nlohmann::json to_json() const;
};

// Log-log slope per claim; pass iff slope <= -s + 0.2 (identically zero fields pass).
std::vector<DecayResult> validate_decay(const std::vector<DecayClaim>& claims, const std::vector<Field>& fields, int n);

// Claims and fields for the model expansions on radii rho_0 * 2^k, k = 2..6.
std::vector<DecayClaim> model_decay_claims(const AFModel& m);
std::vector<Field> model_decay_fields(const AFModel& m);

}  // namespace heis
