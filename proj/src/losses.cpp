#include "fmseg/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace fmseg {

void LossConfig::validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("LossConfig: alpha must be positive");
    if (!(bce_epsilon > 0.0) || bce_epsilon > 1e-3)
        throw std::invalid_argument("LossConfig: bce_epsilon must be in (0, 1e-3]");
}

real reconstruction_loss(const std::vector<Tensor>& recon_batch, const Tensor& target) {
    if (recon_batch.empty()) throw std::invalid_argument("reconstruction_loss: empty batch");
    real acc = 0.0;
    for (const Tensor& r : recon_batch) {
        if (!r.same_shape(target))
            throw std::invalid_argument("reconstruction_loss: shape mismatch");
        real s = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) s += std::abs(target[i] - r[i]);
        acc += s / static_cast<real>(r.size());
    }
    return acc / static_cast<real>(recon_batch.size());
}

real segmentation_loss(const std::vector<Tensor>& seg_prob_batch, const Tensor& mask,
                       real bce_epsilon) {
    if (seg_prob_batch.empty()) throw std::invalid_argument("segmentation_loss: empty batch");
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i] != 0.0 && mask[i] != 1.0)
            throw std::invalid_argument("segmentation_loss: mask must be binary");

    real acc = 0.0;
    for (const Tensor& p : seg_prob_batch) {
        if (p.size() != mask.size())
            throw std::invalid_argument("segmentation_loss: shape mismatch");
        real s = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            real q = std::clamp(p[i], bce_epsilon, 1.0 - bce_epsilon);
            s += -(mask[i] * std::log(q) + (1.0 - mask[i]) * std::log(1.0 - q));
        }
        acc += s / static_cast<real>(p.size());
    }
    return acc / static_cast<real>(seg_prob_batch.size());
}

LossBreakdown total_loss(const std::vector<Tensor>& recon_batch,
                         const std::vector<Tensor>& seg_prob_batch, const Tensor& target,
                         const Tensor& mask, const LossConfig& cfg) {
    cfg.validate();
    LossBreakdown out;
    out.reconstruction = reconstruction_loss(recon_batch, target);
    out.segmentation = segmentation_loss(seg_prob_batch, mask, cfg.bce_epsilon);
    out.total = out.reconstruction + cfg.alpha * out.segmentation;
    return out;
}

Tensor reconstruction_loss_grad(const Tensor& recon, const Tensor& target,
                                std::size_t batch_size) {
    if (!recon.same_shape(target))
        throw std::invalid_argument("reconstruction_loss_grad: shape mismatch");
    Tensor g = Tensor::zeros_like(recon);
    const real scale = 1.0 / (static_cast<real>(recon.size()) * static_cast<real>(batch_size));
    for (std::size_t i = 0; i < g.size(); ++i) {
        const real d = recon[i] - target[i];
        g[i] = d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
    }
    return g;
}

Tensor segmentation_loss_logit_grad(const Tensor& seg_prob, const Tensor& mask,
                                    std::size_t batch_size) {
    if (seg_prob.size() != mask.size())
        throw std::invalid_argument("segmentation_loss_logit_grad: shape mismatch");
    Tensor g = Tensor::zeros_like(seg_prob);
    const real scale = 1.0 / (static_cast<real>(seg_prob.size()) * static_cast<real>(batch_size));
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = (seg_prob[i] - mask[i]) * scale;
    return g;
}

}  // namespace fmseg
