#ifndef FMSEG_IMAGE_HPP
#define FMSEG_IMAGE_HPP

#include <string>

#include "fmseg/tensor.hpp"

namespace fmseg {

/// Raster image with pixels in channel-major {C, H, W} layout. Raw inputs
/// live in [0, 1]; derived signed data (high-pass residuals) reuses the
/// plain Tensor type instead.
struct Image {
    Tensor pixels;  // {C, H, W}

    Image() = default;
    explicit Image(Tensor t);
    Image(std::size_t channels, std::size_t height, std::size_t width, real fill = 0.0);

    std::size_t channels() const { return pixels.dim(0); }
    std::size_t height() const { return pixels.dim(1); }
    std::size_t width() const { return pixels.dim(2); }

    void validate() const;  // C in {1,3}, H,W >= 1
};

/// Bilinear resample of a {C,H,W} tensor. Same-size calls return a copy.
Tensor resize_bilinear(const Tensor& src, std::size_t out_h, std::size_t out_w);

/// Nearest-neighbour resample of a {H,W} map; preserves binary values.
Tensor resize_nearest(const Tensor& src, std::size_t out_h, std::size_t out_w);

/// 8-bit PNG I/O. Loading maps sample values to [0,1]; channels become 1
/// (gray) or 3 (RGB), alpha is dropped, palettes are expanded. Saving
/// quantises with round(v*255) after clamping to [0,1].
Image load_png(const std::string& path);
void save_png(const std::string& path, const Image& image);

/// Loads a mask PNG as a binary {H,W} map: 8-bit values >= 128 become 1.
/// Multi-channel inputs must agree across channels after thresholding.
Tensor load_mask_png(const std::string& path);
void save_mask_png(const std::string& path, const Tensor& mask);

}  // namespace fmseg

#endif
