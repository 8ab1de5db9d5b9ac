#include "fmseg/frequency.hpp"

#include <cmath>
#include <stdexcept>

namespace fmseg {

namespace {

// Symmetric reflection: ...2 1 0 | 0 1 2... Valid for offsets up to the
// axis length, which the kernel-fits-image check guarantees.
inline std::ptrdiff_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
    if (i < 0) return -i - 1;
    if (i >= n) return 2 * n - i - 1;
    return i;
}

std::vector<real> gaussian_taps_1d(const GaussianParams& p) {
    std::vector<real> taps(2 * p.radius + 1);
    real sum = 0.0;
    for (int u = -p.radius; u <= p.radius; ++u) {
        real v = std::exp(-static_cast<real>(u) * u / (2.0 * p.sigma * p.sigma));
        taps[u + p.radius] = v;
        sum += v;
    }
    for (real& t : taps) t /= sum;
    return taps;
}

}  // namespace

void GaussianParams::validate() const {
    if (radius < 1) throw std::invalid_argument("GaussianParams: radius must be >= 1");
    if (!(sigma > 0.0)) throw std::invalid_argument("GaussianParams: sigma must be positive");
}

Tensor build_gaussian_kernel(const GaussianParams& params) {
    params.validate();
    const std::size_t k = 2 * static_cast<std::size_t>(params.radius) + 1;
    Tensor kernel({k, k});
    real sum = 0.0;
    for (int u = -params.radius; u <= params.radius; ++u) {
        for (int v = -params.radius; v <= params.radius; ++v) {
            real g = std::exp(-(static_cast<real>(u) * u + static_cast<real>(v) * v) /
                              (2.0 * params.sigma * params.sigma));
            kernel.at(u + params.radius, v + params.radius) = g;
            sum += g;
        }
    }
    for (std::size_t i = 0; i < kernel.size(); ++i) kernel[i] /= sum;
    return kernel;
}

Tensor gaussian_blur(const Tensor& pixels, const GaussianParams& params) {
    params.validate();
    if (pixels.rank() != 3) throw std::invalid_argument("gaussian_blur: rank 3 input expected");
    const std::ptrdiff_t c = static_cast<std::ptrdiff_t>(pixels.dim(0));
    const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(pixels.dim(1));
    const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(pixels.dim(2));
    const std::ptrdiff_t k = 2 * params.radius + 1;
    if (k > h || k > w)
        throw std::invalid_argument("gaussian_blur: kernel larger than image");

    // The 2-D kernel is the outer product of its 1-D profile, so the blur
    // separates into a horizontal and a vertical pass.
    const std::vector<real> taps = gaussian_taps_1d(params);
    const std::ptrdiff_t r = params.radius;

    Tensor tmp = Tensor::zeros_like(pixels);
    for (std::ptrdiff_t ch = 0; ch < c; ++ch) {
        for (std::ptrdiff_t y = 0; y < h; ++y) {
            for (std::ptrdiff_t x = 0; x < w; ++x) {
                real acc = 0.0;
                for (std::ptrdiff_t d = -r; d <= r; ++d)
                    acc += taps[d + r] * pixels.at(ch, y, reflect(x + d, w));
                tmp.at(ch, y, x) = acc;
            }
        }
    }
    Tensor out = Tensor::zeros_like(pixels);
    for (std::ptrdiff_t ch = 0; ch < c; ++ch) {
        for (std::ptrdiff_t y = 0; y < h; ++y) {
            for (std::ptrdiff_t x = 0; x < w; ++x) {
                real acc = 0.0;
                for (std::ptrdiff_t d = -r; d <= r; ++d)
                    acc += taps[d + r] * tmp.at(ch, reflect(y + d, h), x);
                out.at(ch, y, x) = acc;
            }
        }
    }
    return out;
}

FrequencyView high_pass_view(const Image& image, const GaussianParams& params) {
    image.validate();
    FrequencyView view;
    view.pixels = image.pixels - gaussian_blur(image.pixels, params);
    view.params = params;
    view.view_index = 0;
    return view;
}

std::vector<GaussianParams> sample_view_params(Rng& rng, int count) {
    if (count < 2)
        throw std::invalid_argument("sample_view_params: at least 2 views required");
    std::vector<GaussianParams> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int n = 0; n < count; ++n) {
        GaussianParams p;
        p.radius = rng.uniform_int(kRadiusMin, kRadiusMax);
        p.sigma = rng.uniform(kSigmaMin, kSigmaMax);
        out.push_back(p);
    }
    return out;
}

std::vector<FrequencyView> extract_view_bank(const Image& image, const GaussianParams& anchor,
                                             const std::vector<GaussianParams>& perturbed) {
    if (perturbed.empty())
        throw std::invalid_argument("extract_view_bank: perturbed parameter list is empty");
    std::vector<FrequencyView> bank;
    bank.reserve(perturbed.size() + 1);
    bank.push_back(high_pass_view(image, anchor));
    for (std::size_t n = 0; n < perturbed.size(); ++n) {
        FrequencyView v = high_pass_view(image, perturbed[n]);
        v.view_index = static_cast<int>(n) + 1;
        bank.push_back(std::move(v));
    }
    return bank;
}

}  // namespace fmseg
