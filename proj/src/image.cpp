#include "fmseg/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fmseg {

Image::Image(Tensor t) : pixels(std::move(t)) { validate(); }

Image::Image(std::size_t channels, std::size_t height, std::size_t width, real fill)
    : pixels({channels, height, width}, fill) {
    validate();
}

void Image::validate() const {
    if (pixels.rank() != 3) throw std::invalid_argument("Image: pixels must be rank 3 {C,H,W}");
    std::size_t c = pixels.dim(0);
    if (c != 1 && c != 3) throw std::invalid_argument("Image: channel count must be 1 or 3");
    if (pixels.dim(1) < 1 || pixels.dim(2) < 1)
        throw std::invalid_argument("Image: height and width must be >= 1");
}

Tensor resize_bilinear(const Tensor& src, std::size_t out_h, std::size_t out_w) {
    if (src.rank() != 3) throw std::invalid_argument("resize_bilinear: rank 3 input expected");
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize_bilinear: empty output");
    const std::size_t c = src.dim(0), h = src.dim(1), w = src.dim(2);
    if (h == out_h && w == out_w) return src;

    Tensor out({c, out_h, out_w});
    // align-corners=false sampling grid
    const real sy = static_cast<real>(h) / static_cast<real>(out_h);
    const real sx = static_cast<real>(w) / static_cast<real>(out_w);
    for (std::size_t oy = 0; oy < out_h; ++oy) {
        real fy = (static_cast<real>(oy) + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<real>(h - 1));
        std::size_t y0 = static_cast<std::size_t>(fy);
        std::size_t y1 = std::min(y0 + 1, h - 1);
        real wy = fy - static_cast<real>(y0);
        for (std::size_t ox = 0; ox < out_w; ++ox) {
            real fx = (static_cast<real>(ox) + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<real>(w - 1));
            std::size_t x0 = static_cast<std::size_t>(fx);
            std::size_t x1 = std::min(x0 + 1, w - 1);
            real wx = fx - static_cast<real>(x0);
            for (std::size_t ch = 0; ch < c; ++ch) {
                real top = src.at(ch, y0, x0) * (1.0 - wx) + src.at(ch, y0, x1) * wx;
                real bot = src.at(ch, y1, x0) * (1.0 - wx) + src.at(ch, y1, x1) * wx;
                out.at(ch, oy, ox) = top * (1.0 - wy) + bot * wy;
            }
        }
    }
    return out;
}

Tensor resize_nearest(const Tensor& src, std::size_t out_h, std::size_t out_w) {
    if (src.rank() != 2) throw std::invalid_argument("resize_nearest: rank 2 input expected");
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize_nearest: empty output");
    const std::size_t h = src.dim(0), w = src.dim(1);
    if (h == out_h && w == out_w) return src;

    Tensor out({out_h, out_w});
    const real sy = static_cast<real>(h) / static_cast<real>(out_h);
    const real sx = static_cast<real>(w) / static_cast<real>(out_w);
    for (std::size_t oy = 0; oy < out_h; ++oy) {
        std::size_t y = std::min(static_cast<std::size_t>((static_cast<real>(oy) + 0.5) * sy), h - 1);
        for (std::size_t ox = 0; ox < out_w; ++ox) {
            std::size_t x = std::min(static_cast<std::size_t>((static_cast<real>(ox) + 0.5) * sx), w - 1);
            out.at(oy, ox) = src.at(y, x);
        }
    }
    return out;
}

}  // namespace fmseg
