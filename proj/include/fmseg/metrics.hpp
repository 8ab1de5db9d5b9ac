#ifndef FMSEG_METRICS_HPP
#define FMSEG_METRICS_HPP

#include <cstdint>

#include "fmseg/tensor.hpp"

namespace fmseg {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
};

/// Binarises pred at `threshold` (>= is positive) and accumulates per-pixel
/// counts against the binary reference mask.
ConfusionCounts confusion_counts(const Tensor& pred_prob, const Tensor& mask,
                                 real threshold = 0.5);

/// 2 tp / (2 tp + fp + fn); empty union counts as perfect agreement (1.0).
real dice(const ConfusionCounts& c);

/// Matthews correlation coefficient; 0 when any marginal is empty.
real mcc(const ConfusionCounts& c);

}  // namespace fmseg

#endif
