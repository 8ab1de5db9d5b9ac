#include "fmseg/fmaug.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fmseg {

void PatchLaw::validate() const {
    if (count_range[0] < 1 || count_range[1] < count_range[0])
        throw std::invalid_argument("PatchLaw: invalid patch count range");
    if (!(frac_range[0] > 0.0) || frac_range[1] < frac_range[0] || frac_range[1] > 1.0)
        throw std::invalid_argument("PatchLaw: side fractions must satisfy 0 < lo <= hi <= 1");
}

MixMask generate_mix_mask(Rng& rng, std::size_t height, std::size_t width, const PatchLaw& law) {
    law.validate();
    if (height < 8 || width < 8)
        throw std::invalid_argument("generate_mix_mask: image sides must be >= 8");

    MixMask out;
    out.mask = Tensor({height, width}, 0.0);
    const int patches = rng.uniform_int(law.count_range[0], law.count_range[1]);
    for (int p = 0; p < patches; ++p) {
        auto side = [&](std::size_t full) {
            double frac = rng.uniform(law.frac_range[0], law.frac_range[1]);
            auto px = static_cast<std::size_t>(std::lround(frac * static_cast<double>(full)));
            return std::clamp<std::size_t>(px, 1, full);
        };
        const std::size_t ph = side(height);
        const std::size_t pw = side(width);
        const std::size_t top = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(height - ph)));
        const std::size_t left = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(width - pw)));
        for (std::size_t y = top; y < top + ph; ++y)
            for (std::size_t x = left; x < left + pw; ++x) out.mask.at(y, x) = 1.0;
    }

    std::size_t ones = 0;
    for (std::size_t i = 0; i < out.mask.size(); ++i) ones += (out.mask[i] == 1.0);
    out.coverage = static_cast<double>(ones) / static_cast<double>(out.mask.size());
    return out;
}

Tensor mix_views(const FrequencyView& view_i, const FrequencyView& view_j, const MixMask& mask) {
    const Tensor& a = view_i.pixels;
    const Tensor& b = view_j.pixels;
    if (!a.same_shape(b)) throw std::invalid_argument("mix_views: view shapes differ");
    if (mask.mask.rank() != 2 || mask.mask.dim(0) != a.dim(1) || mask.mask.dim(1) != a.dim(2))
        throw std::invalid_argument("mix_views: mask shape does not match views");

    Tensor out = Tensor::zeros_like(a);
    const std::size_t c = a.dim(0), h = a.dim(1), w = a.dim(2);
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                out.at(ch, y, x) = (mask.mask.at(y, x) == 1.0) ? a.at(ch, y, x) : b.at(ch, y, x);
    return out;
}

std::vector<ViewPair> enumerate_pairs(int n_views) {
    if (n_views < 2) throw std::invalid_argument("enumerate_pairs: need at least 2 views");
    std::vector<ViewPair> pairs;
    pairs.reserve(static_cast<std::size_t>(n_views) * (n_views - 1));
    int k = 1;
    for (int i = 1; i <= n_views; ++i)
        for (int j = 1; j <= n_views; ++j)
            if (i != j) pairs.push_back({i, j, k++});
    return pairs;
}

std::vector<AugmentedSample> build_training_samples(const Image& image, const Tensor& seg_mask,
                                                    const GaussianParams& anchor, Rng& rng,
                                                    int n_views, std::optional<int> subsample,
                                                    const PatchLaw& law) {
    if (seg_mask.rank() != 2 || seg_mask.dim(0) != image.height() ||
        seg_mask.dim(1) != image.width())
        throw std::invalid_argument("build_training_samples: mask shape mismatch");
    for (std::size_t i = 0; i < seg_mask.size(); ++i)
        if (seg_mask[i] != 0.0 && seg_mask[i] != 1.0)
            throw std::invalid_argument("build_training_samples: mask must be binary");

    const std::vector<GaussianParams> perturbed = sample_view_params(rng, n_views);
    const std::vector<FrequencyView> bank = extract_view_bank(image, anchor, perturbed);

    std::vector<ViewPair> pairs = enumerate_pairs(n_views);
    if (subsample) {
        if (*subsample < 1 || *subsample > static_cast<int>(pairs.size()))
            throw std::invalid_argument("build_training_samples: subsample out of range");
        // partial Fisher-Yates: first `subsample` entries become the draw
        for (int s = 0; s < *subsample; ++s) {
            int j = rng.uniform_int(s, static_cast<int>(pairs.size()) - 1);
            std::swap(pairs[static_cast<std::size_t>(s)], pairs[static_cast<std::size_t>(j)]);
        }
        pairs.resize(static_cast<std::size_t>(*subsample));
    }

    auto target = std::make_shared<const Tensor>(bank[0].pixels);
    auto mask_shared = std::make_shared<const Tensor>(seg_mask);

    std::vector<AugmentedSample> samples;
    samples.reserve(pairs.size());
    for (const ViewPair& pr : pairs) {
        MixMask mm = generate_mix_mask(rng, image.height(), image.width(), law);
        AugmentedSample s;
        s.mixed = mix_views(bank[static_cast<std::size_t>(pr.i)],
                            bank[static_cast<std::size_t>(pr.j)], mm);
        s.target = target;
        s.seg_mask = mask_shared;
        s.pair = pr;
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace fmseg
