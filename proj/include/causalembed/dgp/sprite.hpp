#pragma once

#include <cstddef>
#include <span>

#include "causalembed/linalg.hpp"
#include "causalembed/rng.hpp"

namespace causalembed::dgp {

enum class SpriteKind { square, gaussian_blob };

struct SpriteConfig {
  std::size_t resolution = 16;  // D; images are D x D
  SpriteKind kind = SpriteKind::square;
  double half_width = 3.0;      // sprite half-extent in pixels
  double pixel_noise_std = 0.1; // N(0, 0.01) per pixel

  void validate() const;
};

// Renders a D*D image with the sprite centred according to (pos_x, pos_y)
// in [0,1]^2 and i.i.d. Gaussian pixel noise added. The placement maps
// [0,1] onto centres that keep the sprite fully inside the frame, so the
// sprite mass never clips at a border. Pixel values before noise are {0,1}
// for the square sprite and [0,1] for the blob. Row r, column c live at
// flat index r*D + c; pos_x moves the sprite along columns, pos_y along
// rows.
linalg::Vector render_sprite(const SpriteConfig& config, double pos_x,
                             double pos_y, PhiloxRng& rng);

// Noise-free render; deterministic in (pos_x, pos_y).
linalg::Vector render_sprite_clean(const SpriteConfig& config, double pos_x,
                                   double pos_y);

// h(A) = sum_{r,c} (r/D) (c/D) A[r*D + c] with 0-based row r and column c;
// the pixel-weighted functional driving the synthetic outcomes.
double h_weight(std::span<const double> image, std::size_t resolution);

}  // namespace causalembed::dgp
