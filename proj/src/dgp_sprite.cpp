#include "causalembed/dgp/sprite.hpp"

#include <cmath>
#include <string>

namespace causalembed::dgp {

void SpriteConfig::validate() const {
  if (resolution < 4) {
    throw InvalidArgument("sprite: resolution must be >= 4, got " +
                          std::to_string(resolution));
  }
  if (!(half_width > 0.0) ||
      half_width >= static_cast<double>(resolution) / 2.0) {
    throw InvalidArgument("sprite: half_width must be in (0, D/2)");
  }
  if (pixel_noise_std < 0.0) {
    throw InvalidArgument("sprite: pixel_noise_std must be >= 0");
  }
}

namespace {

// Centre coordinate for position p in [0,1]: an affine map onto
// [half_width, D-1-half_width] so the sprite always fits.
double centre(const SpriteConfig& config, double p) {
  const double d = static_cast<double>(config.resolution);
  return config.half_width + p * (d - 1.0 - 2.0 * config.half_width);
}

}  // namespace

linalg::Vector render_sprite_clean(const SpriteConfig& config, double pos_x,
                                   double pos_y) {
  config.validate();
  if (pos_x < 0.0 || pos_x > 1.0 || pos_y < 0.0 || pos_y > 1.0) {
    throw InvalidArgument("sprite: positions must lie in [0,1]");
  }
  const std::size_t d = config.resolution;
  const double cx = centre(config, pos_x);
  const double cy = centre(config, pos_y);
  linalg::Vector image(d * d, 0.0);
  if (config.kind == SpriteKind::square) {
    for (std::size_t r = 0; r < d; ++r) {
      if (std::fabs(static_cast<double>(r) - cy) > config.half_width) continue;
      for (std::size_t c = 0; c < d; ++c) {
        if (std::fabs(static_cast<double>(c) - cx) > config.half_width) {
          continue;
        }
        image[r * d + c] = 1.0;
      }
    }
  } else {
    const double sigma = config.half_width / 2.0;
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t r = 0; r < d; ++r) {
      const double dy = static_cast<double>(r) - cy;
      for (std::size_t c = 0; c < d; ++c) {
        const double dx = static_cast<double>(c) - cx;
        image[r * d + c] = std::exp(-(dx * dx + dy * dy) * inv);
      }
    }
  }
  return image;
}

linalg::Vector render_sprite(const SpriteConfig& config, double pos_x,
                             double pos_y, PhiloxRng& rng) {
  linalg::Vector image = render_sprite_clean(config, pos_x, pos_y);
  if (config.pixel_noise_std > 0.0) {
    // Pixel noise drawn in row-major order.
    for (std::size_t i = 0; i < image.size(); ++i) {
      image[i] += rng.normal(0.0, config.pixel_noise_std);
    }
  }
  return image;
}

double h_weight(std::span<const double> image, std::size_t resolution) {
  if (image.size() != resolution * resolution) {
    throw DimensionMismatch("h_weight: image has " +
                            std::to_string(image.size()) +
                            " pixels, expected " +
                            std::to_string(resolution * resolution));
  }
  const double inv_d = 1.0 / static_cast<double>(resolution);
  double acc = 0.0;
  for (std::size_t r = 0; r < resolution; ++r) {
    const double wr = static_cast<double>(r) * inv_d;
    for (std::size_t c = 0; c < resolution; ++c) {
      acc += wr * (static_cast<double>(c) * inv_d) *
             image[r * resolution + c];
    }
  }
  return acc;
}

}  // namespace causalembed::dgp
