#pragma once

#include <cstdint>

#include "causalembed/dataset.hpp"
#include "causalembed/dgp/sprite.hpp"

namespace causalembed::dgp {

// Back-door experiment: hidden confounders U1, U2 ~ Unif(-u, u); back-door
// X_k = U_k + N(0, backdoor_noise_std^2); treatment image rendered at
// posX = clamp((X1 + 1.5)/3), posY = clamp((X2 + 1.5)/3); outcome
// Y = h^2(A)/100 + confounder_weight * (U1 + U2) + N(0, outcome_noise_std^2).
struct BackdoorDspriteConfig {
  SpriteConfig sprite;
  double u_half_range = 1.0;
  double backdoor_noise_std = 0.3;  // variance 0.09
  double outcome_noise_std = 0.5;   // variance 0.25
  double confounder_weight = 1.0;
};

// True dose-response for the back-door design: theta_ATE(a) = h^2(a)/100,
// evaluable at any image.
struct BackdoorGroundTruth {
  std::size_t resolution = 16;
  double ate(std::span<const double> image) const;
};

struct BackdoorDspriteData {
  ColumnarDataset data;
  BackdoorGroundTruth truth;
};

// Draw order per sample: U1, U2, eps1, eps2, pixel noise (row-major), epsY.
BackdoorDspriteData gen_backdoor_dsprite(const BackdoorDspriteConfig& config,
                                         std::size_t n, std::uint64_t seed);

// Front-door experiment: U1, U2 ~ Unif(-u, u); image latents
// posX = (U1 + 1.5)/3, posY = (U2 + 1.5)/3; mediator M = h(A) +
// N(0, mediator_noise_std^2); outcome Y = M^2/100 + confounder_weight *
// (U1 + U2) + N(0, outcome_noise_std^2).
struct FrontdoorDspriteConfig {
  SpriteConfig sprite;
  double u_half_range = 1.5;
  double mediator_noise_std = 0.2;  // variance 0.04
  double outcome_noise_std = 0.5;   // variance 0.25
  double confounder_weight = 5.0;
};

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

struct FrontdoorGroundTruth {
  FrontdoorDspriteConfig config;
  // Monte-Carlo evaluation of E[Y^(a) | A = a'], where a' is identified by
  // its sprite latents: Y^(a) = (h(a) + eps_M)^2 / 100 + confounder_weight *
  // (u1' + u2') + eps_Y with u_k' pinned by the latents of a'.
  McEstimate att(std::span<const double> a_image, double aprime_pos_x,
                 double aprime_pos_y, std::size_t mc_samples,
                 std::uint64_t seed) const;
};

struct FrontdoorDspriteData {
  ColumnarDataset data;
  FrontdoorGroundTruth truth;
};

// Draw order per sample: U1, U2, pixel noise (row-major), epsM, epsY.
FrontdoorDspriteData gen_frontdoor_dsprite(
    const FrontdoorDspriteConfig& config, std::size_t n, std::uint64_t seed);

}  // namespace causalembed::dgp
