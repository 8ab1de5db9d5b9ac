#ifndef FMSEG_GRADCHECK_HPP
#define FMSEG_GRADCHECK_HPP

#include <cmath>
#include <string>
#include <vector>

#include "fmseg/losses.hpp"
#include "fmseg/network.hpp"
#include "fmseg/rng.hpp"
#include "testutil.hpp"

namespace fmseg::test {

struct GradCheckResult {
    real max_rel_error = 0.0;
    std::string worst_param;
    std::size_t checked = 0;
};

/// Central-difference verification of the full objective
///   L = (1/B) sum_b [ mean|recon_b - target_b| + alpha * BCE(seg_b, mask_b) ]
/// against the analytic backward pass. Targets are offset from the initial
/// reconstructions by +-0.1 so the L1 term stays away from its kinks under
/// the probe step. `stride` thins the per-tensor element sweep (1 = every
/// element).
inline GradCheckResult run_gradient_check(const ModelConfig& cfg, std::uint64_t seed,
                                          real alpha = 1.0, std::size_t stride = 1,
                                          real step = 1e-3) {
    CoupledNetwork net(cfg);
    net.init_params(seed);

    const std::size_t batch = 2;
    Rng rng(mix_seed(seed, 1));
    std::vector<Tensor> inputs, targets, masks;
    for (std::size_t b = 0; b < batch; ++b) {
        inputs.push_back(random_tensor(rng, {static_cast<std::size_t>(cfg.in_channels),
                                             static_cast<std::size_t>(cfg.image_size),
                                             static_cast<std::size_t>(cfg.image_size)},
                                       -0.5, 0.5));
        ForwardOutput out = net.forward(inputs.back());
        Tensor target = out.recon;
        for (std::size_t i = 0; i < target.size(); ++i)
            target[i] -= (rng.uniform(0.0, 1.0) < 0.5 ? 0.1 : -0.1);
        targets.push_back(std::move(target));
        Tensor mask = Tensor::zeros_like(out.seg_prob);
        for (std::size_t i = 0; i < mask.size(); ++i)
            mask[i] = rng.uniform(0.0, 1.0) < 0.5 ? 1.0 : 0.0;
        masks.push_back(std::move(mask));
    }

    auto objective = [&]() {
        real acc = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
            ForwardOutput out = net.forward(inputs[b]);
            acc += reconstruction_loss({out.recon}, targets[b]) +
                   alpha * segmentation_loss({out.seg_prob}, masks[b]);
        }
        return acc / static_cast<real>(batch);
    };

    // analytic gradients
    net.zero_grad();
    NetCache cache;
    for (std::size_t b = 0; b < batch; ++b) {
        ForwardOutput out = net.forward(inputs[b], &cache);
        Tensor grad_recon = reconstruction_loss_grad(out.recon, targets[b], batch);
        Tensor grad_logit = segmentation_loss_logit_grad(out.seg_prob, masks[b], batch);
        grad_logit *= alpha;
        net.backward(cache, grad_recon, grad_logit);
    }

    GradCheckResult result;
    for (const ParamRef& p : net.parameters()) {
        Tensor& w = *p.value;
        const Tensor& g = *p.grad;
        for (std::size_t i = 0; i < w.size(); i += stride) {
            const real saved = w[i];
            w[i] = saved + step;
            const real up = objective();
            w[i] = saved - step;
            const real down = objective();
            w[i] = saved;
            const real numeric = (up - down) / (2.0 * step);
            const real analytic = g[i];
            const real denom = std::max({std::abs(analytic), std::abs(numeric), 1e-4});
            const real rel = std::abs(analytic - numeric) / denom;
            ++result.checked;
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_param = p.name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return result;
}

}  // namespace fmseg::test

#endif
