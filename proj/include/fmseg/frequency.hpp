#ifndef FMSEG_FREQUENCY_HPP
#define FMSEG_FREQUENCY_HPP

#include <vector>

#include "fmseg/image.hpp"
#include "fmseg/rng.hpp"
#include "fmseg/tensor.hpp"

namespace fmseg {

/// Gaussian low-pass parameters: kernel half-width (size 2r+1) and spatial
/// constant. Sampled parameters stay inside [kRadiusMin, kRadiusMax] x
/// [kSigmaMin, kSigmaMax].
struct GaussianParams {
    int radius = 1;
    double sigma = 1.0;

    void validate() const;
    bool operator==(const GaussianParams&) const = default;
};

inline constexpr int kRadiusMin = 5;
inline constexpr int kRadiusMax = 50;
inline constexpr double kSigmaMin = 2.0;
inline constexpr double kSigmaMax = 22.0;

/// Fixed parameters of the reconstruction-target view. This view doubles as
/// the inference-time input representation.
inline constexpr GaussianParams kAnchorParams{27, 9.0};

/// High-frequency residual of an image: source minus its Gaussian blur.
/// Values are signed and intentionally left unnormalised.
struct FrequencyView {
    Tensor pixels;  // {C, H, W}
    GaussianParams params;
    int view_index = 0;
};

/// Normalised (2r+1)x(2r+1) kernel with entries proportional to
/// exp(-(u^2+v^2) / (2 sigma^2)).
Tensor build_gaussian_kernel(const GaussianParams& params);

/// Gaussian blur with reflective border padding, separable implementation.
/// Throws if the kernel does not fit inside the image.
Tensor gaussian_blur(const Tensor& pixels, const GaussianParams& params);

/// View extraction: image - blur(image). The result keeps the generating
/// parameters; the caller assigns view_index (defaults to 0).
FrequencyView high_pass_view(const Image& image, const GaussianParams& params);

/// Draws `count` parameter pairs, radius uniform integer in [5,50], sigma
/// uniform real in [2,22]. count < 2 is rejected (mixing needs a pair).
std::vector<GaussianParams> sample_view_params(Rng& rng, int count);

/// Anchor view at index 0 followed by one view per perturbed parameter set.
std::vector<FrequencyView> extract_view_bank(const Image& image, const GaussianParams& anchor,
                                             const std::vector<GaussianParams>& perturbed);

}  // namespace fmseg

#endif
