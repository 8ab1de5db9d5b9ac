#include "fmseg/optim.hpp"

#include <cmath>

namespace fmseg {

Adam::Adam(std::vector<ParamRef> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const ParamRef& p : params_) {
        m_.push_back(Tensor::zeros_like(*p.value));
        v_.push_back(Tensor::zeros_like(*p.value));
    }
}

void Adam::step(real lr) {
    ++t_;
    const real bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<real>(t_));
    const real bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<real>(t_));
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        Tensor& w = *params_[pi].value;
        const Tensor& g = *params_[pi].grad;
        Tensor& m = m_[pi];
        Tensor& v = v_[pi];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const real mhat = m[i] / bc1;
            const real vhat = v[i] / bc2;
            w[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace fmseg
