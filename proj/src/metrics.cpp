#include "fmseg/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace fmseg {

ConfusionCounts confusion_counts(const Tensor& pred_prob, const Tensor& mask, real threshold) {
    if (!pred_prob.same_shape(mask))
        throw std::invalid_argument("confusion_counts: shape mismatch");
    ConfusionCounts c;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        real m = mask[i];
        if (m != 0.0 && m != 1.0)
            throw std::invalid_argument("confusion_counts: mask must be binary");
        real p = pred_prob[i];
        if (p < 0.0 || p > 1.0)
            throw std::invalid_argument("confusion_counts: prediction outside [0,1]");
        bool pos = p >= threshold;
        bool ref = m == 1.0;
        if (pos && ref)
            ++c.tp;
        else if (pos && !ref)
            ++c.fp;
        else if (!pos && ref)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

real dice(const ConfusionCounts& c) {
    const std::uint64_t denom = 2 * c.tp + c.fp + c.fn;
    if (denom == 0) return 1.0;
    return 2.0 * static_cast<real>(c.tp) / static_cast<real>(denom);
}

real mcc(const ConfusionCounts& c) {
    const real tp = static_cast<real>(c.tp), fp = static_cast<real>(c.fp);
    const real tn = static_cast<real>(c.tn), fn = static_cast<real>(c.fn);
    const real f1 = tp + fp, f2 = tp + fn, f3 = tn + fp, f4 = tn + fn;
    if (f1 == 0.0 || f2 == 0.0 || f3 == 0.0 || f4 == 0.0) return 0.0;
    return (tp * tn - fp * fn) / std::sqrt(f1 * f2 * f3 * f4);
}

}  // namespace fmseg
