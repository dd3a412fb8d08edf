// Weighted Lebesgue and Folland-Stein norms with sigma (unprimed) or rho (primed) weights.
#pragma once

#include "heis/field.hpp"
#include "heis/grid.hpp"

#include "json.hpp"

#include <algorithm>
#include <limits>

namespace heis {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Flavor { Sigma, Rho };

struct NormSpec {
  int k = 0;
  double p = 2.0;  // kInf for the sup norm
  double delta = 0.0;
  Flavor flavor = Flavor::Sigma;
  Region region;

  void validate() const;
  nlohmann::json to_json() const;
};

struct NormReport {
  NormSpec spec;
  double value = 0.0;
  double quadrature_error = std::numeric_limits<double>::quiet_NaN();
  double tail_bound = 0.0;  // estimated increase of the norm from the truncated exterior
  bool divergent = false;   // per-annulus contributions do not decay
  Eigen::VectorXd level_terms;  // p-th powers (or maxima for p = inf) per level

  nlohmann::json to_json() const;
};

// Frame derivatives by group-flow central differences: e_a f(x) ~ (f(x exp(h e_a)) - f(x exp(-h e_a))) / 2h,
// second derivatives by composing two first-order stencils.
FrameJet<double> stencil_frame_jet(const Field& f, const HPoint<double>& x, double h);

// Step used for value-only fields: relative to the gauge radius near the origin, capped at unit scale.
inline constexpr double kStencilRelStep = 0.01;
inline double stencil_step(double rho) { return kStencilRelStep * std::clamp(rho, 1e-2, 1.0); }

// Norm of per-node magnitudes a_i >= 0 carrying weight exponent delta.
NormReport weighted_norm_of_values(const GridPtr& grid, const Eigen::VectorXd& a, const NormSpec& spec);

NormReport weighted_norm(const GridFunctionD& u, const NormSpec& spec);
NormReport weighted_norm(const Field& u, const NormSpec& spec, const GridPtr& grid);

// sum_{j<=k} || |nabla^j u| ||_{p, delta-j}; nabla^j in Euclidean norm over all ordered frame indices.
NormReport fs_norm(const Field& u, const NormSpec& spec, const GridPtr& grid);

// Same with the quadrature error estimated from the grid at half resolution.
NormReport fs_norm_with_error(const Field& u, const NormSpec& spec, const GridOptions& opts);

// Per-node |nabla^j u| for j = 0..k (columns).
Eigen::MatrixXd derivative_magnitudes(const Field& u, const AnnularGrid& grid, int k);

}  // namespace heis
