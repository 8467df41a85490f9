#include "causalembed/dgp/dsprite.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace causalembed::dgp {

namespace {

std::vector<std::string> pixel_names(std::size_t resolution) {
  std::vector<std::string> names;
  names.reserve(resolution * resolution);
  for (std::size_t i = 0; i < resolution * resolution; ++i) {
    names.push_back("a" + std::to_string(i));
  }
  return names;
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

double BackdoorGroundTruth::ate(std::span<const double> image) const {
  const double h = h_weight(image, resolution);
  return h * h / 100.0;
}

BackdoorDspriteData gen_backdoor_dsprite(const BackdoorDspriteConfig& config,
                                         std::size_t n, std::uint64_t seed) {
  config.sprite.validate();
  if (n == 0) {
    throw InvalidArgument("gen_backdoor_dsprite: n must be >= 1");
  }
  const std::size_t d = config.sprite.resolution;
  PhiloxRng rng(seed, streams::kDataset);

  std::vector<double> y(n);
  std::vector<double> images(n * d * d);
  std::vector<double> x(n * 2);

  for (std::size_t i = 0; i < n; ++i) {
    const double u1 = rng.uniform(-config.u_half_range, config.u_half_range);
    const double u2 = rng.uniform(-config.u_half_range, config.u_half_range);
    const double x1 = u1 + rng.normal(0.0, config.backdoor_noise_std);
    const double x2 = u2 + rng.normal(0.0, config.backdoor_noise_std);
    // Latents derive from the back-door variable; values outside [0,1] are
    // clamped to the nearest representable sprite position.
    const double pos_x = clamp01((x1 + 1.5) / 3.0);
    const double pos_y = clamp01((x2 + 1.5) / 3.0);
    const linalg::Vector image =
        render_sprite(config.sprite, pos_x, pos_y, rng);
    const double h = h_weight(image.view(), d);
    y[i] = h * h / 100.0 + config.confounder_weight * (u1 + u2) +
           rng.normal(0.0, config.outcome_noise_std);
    std::copy(image.begin(), image.end(), images.begin() + i * d * d);
    x[i * 2] = x1;
    x[i * 2 + 1] = x2;
  }

  ColumnarDataset data(n);
  data.add_column({Role::outcome, {"y"}, std::move(y)});
  data.add_column({Role::treatment, pixel_names(d), std::move(images)});
  data.add_column({Role::backdoor, {"x1", "x2"}, std::move(x)});
  data.seed_provenance =
      "philox seed=" + std::to_string(seed) + " stream=dataset";
  return {std::move(data), BackdoorGroundTruth{d}};
}

McEstimate FrontdoorGroundTruth::att(std::span<const double> a_image,
                                     double aprime_pos_x,
                                     double aprime_pos_y,
                                     std::size_t mc_samples,
                                     std::uint64_t seed) const {
  if (mc_samples < 2) {
    throw InvalidArgument("frontdoor ground truth: need at least 2 samples");
  }
  const double h = h_weight(a_image, config.sprite.resolution);
  // Conditioning on A = a' pins the confounders through the latents.
  const double u1 = 3.0 * aprime_pos_x - 1.5;
  const double u2 = 3.0 * aprime_pos_y - 1.5;
  const double confounder_term = config.confounder_weight * (u1 + u2);

  PhiloxRng rng(seed, streams::kGroundTruthMc);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t s = 0; s < mc_samples; ++s) {
    const double m = h + rng.normal(0.0, config.mediator_noise_std);
    const double eps_y = rng.normal(0.0, config.outcome_noise_std);
    const double value = m * m / 100.0 + confounder_term + eps_y;
    sum += value;
    sum_sq += value * value;
  }
  const double count = static_cast<double>(mc_samples);
  const double mean = sum / count;
  const double variance =
      std::max(0.0, (sum_sq - sum * sum / count) / (count - 1.0));
  return {mean, std::sqrt(variance / count)};
}

FrontdoorDspriteData gen_frontdoor_dsprite(
    const FrontdoorDspriteConfig& config, std::size_t n, std::uint64_t seed) {
  config.sprite.validate();
  if (n == 0) {
    throw InvalidArgument("gen_frontdoor_dsprite: n must be >= 1");
  }
  const std::size_t d = config.sprite.resolution;
  PhiloxRng rng(seed, streams::kDataset);

  std::vector<double> y(n);
  std::vector<double> images(n * d * d);
  std::vector<double> m(n);

  for (std::size_t i = 0; i < n; ++i) {
    const double u1 = rng.uniform(-config.u_half_range, config.u_half_range);
    const double u2 = rng.uniform(-config.u_half_range, config.u_half_range);
    const double pos_x = clamp01((u1 + 1.5) / 3.0);
    const double pos_y = clamp01((u2 + 1.5) / 3.0);
    const linalg::Vector image =
        render_sprite(config.sprite, pos_x, pos_y, rng);
    const double h = h_weight(image.view(), d);
    const double mediator = h + rng.normal(0.0, config.mediator_noise_std);
    y[i] = mediator * mediator / 100.0 +
           config.confounder_weight * (u1 + u2) +
           rng.normal(0.0, config.outcome_noise_std);
    std::copy(image.begin(), image.end(), images.begin() + i * d * d);
    m[i] = mediator;
  }

  ColumnarDataset data(n);
  data.add_column({Role::outcome, {"y"}, std::move(y)});
  data.add_column({Role::treatment, pixel_names(d), std::move(images)});
  data.add_column({Role::frontdoor, {"m"}, std::move(m)});
  data.seed_provenance =
      "philox seed=" + std::to_string(seed) + " stream=dataset";
  return {std::move(data), FrontdoorGroundTruth{config}};
}

}  // namespace causalembed::dgp
