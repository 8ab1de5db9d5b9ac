#ifndef FMSEG_OPTIM_HPP
#define FMSEG_OPTIM_HPP

#include <cstdint>
#include <vector>

#include "fmseg/layers.hpp"

namespace fmseg {

struct AdamConfig {
    real beta1 = 0.9;
    real beta2 = 0.999;
    real eps = 1e-8;
};

/// Adam with bias correction and no weight decay. Holds references to the
/// parameter tensors; the owning network must outlive the optimizer.
class Adam {
public:
    explicit Adam(std::vector<ParamRef> params, AdamConfig cfg = {});

    void step(real lr);

    std::int64_t steps_taken() const { return t_; }
    const std::vector<ParamRef>& params() const { return params_; }
    std::vector<Tensor>& first_moments() { return m_; }
    std::vector<Tensor>& second_moments() { return v_; }
    void set_steps_taken(std::int64_t t) { t_ = t; }

private:
    std::vector<ParamRef> params_;
    AdamConfig cfg_;
    std::vector<Tensor> m_, v_;
    std::int64_t t_ = 0;
};

}  // namespace fmseg

#endif
