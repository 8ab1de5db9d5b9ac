#ifndef FMSEG_LOSSES_HPP
#define FMSEG_LOSSES_HPP

#include <vector>

#include "fmseg/tensor.hpp"

namespace fmseg {

struct LossConfig {
    real alpha = 1.0;          // weight of the segmentation term
    real bce_epsilon = 1e-7;   // log clamp

    void validate() const;
};

struct LossBreakdown {
    real total = 0.0;
    real reconstruction = 0.0;
    real segmentation = 0.0;
};

/// Mean absolute error against the shared target: mean over pixels and
/// channels, then mean over the batch entries.
real reconstruction_loss(const std::vector<Tensor>& recon_batch, const Tensor& target);

/// Mean binary cross-entropy of the predicted probabilities against the
/// binary mask, probabilities clamped to [eps, 1-eps]; mean over pixels,
/// then over the batch entries.
real segmentation_loss(const std::vector<Tensor>& seg_prob_batch, const Tensor& mask,
                       real bce_epsilon = 1e-7);

/// reconstruction + alpha * segmentation, with both components reported.
LossBreakdown total_loss(const std::vector<Tensor>& recon_batch,
                         const std::vector<Tensor>& seg_prob_batch, const Tensor& target,
                         const Tensor& mask, const LossConfig& cfg);

/// Gradient of the mean-L1 term w.r.t. one reconstruction in a batch of
/// `batch_size` (sign of the residual over pixel count and batch size).
Tensor reconstruction_loss_grad(const Tensor& recon, const Tensor& target,
                                std::size_t batch_size);

/// Gradient of the mean-BCE term w.r.t. the pre-sigmoid logits of one
/// prediction: (p - m) / (pixels * batch_size). Fusing the sigmoid keeps
/// the expression finite for saturated probabilities.
Tensor segmentation_loss_logit_grad(const Tensor& seg_prob, const Tensor& mask,
                                    std::size_t batch_size);

}  // namespace fmseg

#endif
