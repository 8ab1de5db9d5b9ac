#ifndef FMSEG_FMAUG_HPP
#define FMSEG_FMAUG_HPP

#include <array>
#include <memory>
#include <optional>
#include <vector>

#include "fmseg/frequency.hpp"
#include "fmseg/image.hpp"
#include "fmseg/rng.hpp"

namespace fmseg {

/// Binary drop/fill mask for patch mixing. Entries are exactly 0 or 1.
struct MixMask {
    Tensor mask;  // {H, W}
    double coverage = 0.0;
};

/// Ordered view pair (i, j), i != j, i,j in [1, N], with its dense index
/// k in [1, N(N-1)].
struct ViewPair {
    int i = 0;
    int j = 0;
    int k = 0;
};

/// One augmentation outcome. All samples built from the same image share
/// the reconstruction target (the anchor view) and the ground-truth mask.
struct AugmentedSample {
    Tensor mixed;                             // {C, H, W}
    std::shared_ptr<const Tensor> target;     // anchor view pixels
    std::shared_ptr<const Tensor> seg_mask;   // {H, W}, binary
    ViewPair pair;
};

struct PatchLaw {
    std::array<int, 2> count_range{1, 4};
    std::array<double, 2> frac_range{0.2, 0.5};

    void validate() const;
};

/// Union of p axis-aligned rectangles, p uniform in count_range, each side
/// a uniform fraction (frac_range) of the matching image side. Rectangles
/// are placed uniformly among positions that keep them fully inside.
MixMask generate_mix_mask(Rng& rng, std::size_t height, std::size_t width,
                          const PatchLaw& law = {});

/// Per-pixel selection: mask==1 picks view_i, mask==0 picks view_j. Exact,
/// no blending.
Tensor mix_views(const FrequencyView& view_i, const FrequencyView& view_j, const MixMask& mask);

/// All ordered pairs over [1, N] in lexicographic order, k densely 1..N(N-1).
std::vector<ViewPair> enumerate_pairs(int n_views);

/// Full augmentation for one image: samples N perturbed parameter sets,
/// extracts the view bank, and mixes every ordered pair (or a uniformly
/// chosen subset of `subsample` pairs) under an independent mask per pair.
std::vector<AugmentedSample> build_training_samples(const Image& image, const Tensor& seg_mask,
                                                    const GaussianParams& anchor, Rng& rng,
                                                    int n_views,
                                                    std::optional<int> subsample = std::nullopt,
                                                    const PatchLaw& law = {});

}  // namespace fmseg

#endif
