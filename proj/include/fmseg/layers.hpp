#ifndef FMSEG_LAYERS_HPP
#define FMSEG_LAYERS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fmseg/rng.hpp"
#include "fmseg/tensor.hpp"

namespace fmseg {

/// Named view onto one parameter tensor and its gradient accumulator.
struct ParamRef {
    std::string name;
    Tensor* value;
    Tensor* grad;
};

/// Layers keep parameters and gradient accumulators; per-forward state
/// lives in external cache structs so inference-mode forwards stay const
/// and shareable across threads. backward() accumulates into the gradient
/// tensors and returns the gradient w.r.t. the layer input.

// ---------------------------------------------------------------------------
// 2-D convolution, stride 1, square kernel, zero padding k/2.
// ---------------------------------------------------------------------------
struct Conv2dCache {
    Tensor cols;  // {in*k*k, H*W} im2col matrix
    std::size_t h = 0, w = 0;
};

struct Conv2d {
    int in_ch = 0, out_ch = 0, ksize = 3;
    Tensor w;   // {out, in, k, k}
    Tensor b;   // {out}
    Tensor gw, gb;

    Conv2d() = default;
    Conv2d(int in, int out, int k);

    void init(Rng& rng);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
    Tensor forward(const Tensor& x, Conv2dCache* cache) const;
    Tensor backward(const Tensor& gy, const Conv2dCache& cache);
};

// ---------------------------------------------------------------------------
// Transposed convolution, kernel 2, stride 2 (doubles the resolution).
// ---------------------------------------------------------------------------
struct TConv2dCache {
    Tensor x;  // {in, H, W}
};

struct TConv2d {
    int in_ch = 0, out_ch = 0;
    Tensor w;  // {in, out, 2, 2}
    Tensor b;  // {out}
    Tensor gw, gb;

    TConv2d() = default;
    TConv2d(int in, int out);

    void init(Rng& rng);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
    Tensor forward(const Tensor& x, TConv2dCache* cache) const;
    Tensor backward(const Tensor& gy, const TConv2dCache& cache);
};

// ---------------------------------------------------------------------------
// 2x2 max pooling, stride 2.
// ---------------------------------------------------------------------------
struct MaxPoolCache {
    std::vector<std::uint32_t> argmax;  // flat input index per output element
    std::size_t c = 0, h = 0, w = 0;    // input dims
};

Tensor maxpool_forward(const Tensor& x, MaxPoolCache* cache);
Tensor maxpool_backward(const Tensor& gy, const MaxPoolCache& cache);

// ---------------------------------------------------------------------------
// Instance normalisation (per sample, per channel) with affine parameters.
// Can be constructed disabled, in which case it is the identity.
// ---------------------------------------------------------------------------
struct InstanceNormCache {
    Tensor xhat;
    std::vector<real> inv_std;  // per channel
};

struct InstanceNorm {
    bool enabled = true;
    int channels = 0;
    real eps = 1e-5;
    Tensor gamma, beta;
    Tensor ggamma, gbeta;

    InstanceNorm() = default;
    InstanceNorm(int ch, bool on);

    void init();
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
    Tensor forward(const Tensor& x, InstanceNormCache* cache) const;
    Tensor backward(const Tensor& gy, const InstanceNormCache& cache);
};

// ---------------------------------------------------------------------------
// Pointwise nonlinearities.
// ---------------------------------------------------------------------------
struct ReluCache {
    Tensor y;
};

Tensor relu_forward(const Tensor& x, ReluCache* cache);
Tensor relu_backward(const Tensor& gy, const ReluCache& cache);

struct SigmoidCache {
    Tensor y;
};

Tensor sigmoid_forward(const Tensor& x, SigmoidCache* cache);
Tensor sigmoid_backward(const Tensor& gy, const SigmoidCache& cache);

// ---------------------------------------------------------------------------
// conv -> norm -> relu, twice.
// ---------------------------------------------------------------------------
struct ConvBlockCache {
    Conv2dCache c1, c2;
    InstanceNormCache n1, n2;
    ReluCache r1, r2;
};

struct ConvBlock {
    Conv2d conv1, conv2;
    InstanceNorm norm1, norm2;

    ConvBlock() = default;
    ConvBlock(int in, int out, bool norm_on);

    void init(Rng& rng);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
    Tensor forward(const Tensor& x, ConvBlockCache* cache) const;
    Tensor backward(const Tensor& gy, const ConvBlockCache& cache);
};

// ---------------------------------------------------------------------------
// Channel attention: shared two-layer MLP over global-average and
// global-max channel descriptors, summed, sigmoid-gated per channel.
// ---------------------------------------------------------------------------
struct ChannelAttentionCache {
    Tensor x;                        // input
    Tensor avg, mx;                  // {C} descriptors
    std::vector<std::uint32_t> arg;  // spatial argmax per channel
    Tensor ha_pre, hm_pre;           // hidden pre-activations {Ch}
    Tensor ha, hm;                   // hidden activations {Ch}
    Tensor gate;                     // {C}, in (0,1)
};

struct ChannelAttention {
    int channels = 0, hidden = 0;
    Tensor w1, b1;  // {hidden, C}, {hidden}
    Tensor w2, b2;  // {C, hidden}, {C}
    Tensor gw1, gb1, gw2, gb2;

    ChannelAttention() = default;
    ChannelAttention(int ch, int reduction);

    void init(Rng& rng);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
    Tensor forward(const Tensor& x, ChannelAttentionCache* cache) const;
    Tensor backward(const Tensor& gy, const ChannelAttentionCache& cache);
};

// ---------------------------------------------------------------------------
// Spatial attention: 7x7 convolution over the channelwise average and
// maximum maps, sigmoid-gated per pixel.
// ---------------------------------------------------------------------------
struct SpatialAttentionCache {
    Tensor x;
    Tensor maps;                     // {2, H, W} [avg; max]
    std::vector<std::uint32_t> arg;  // channel argmax per pixel
    Conv2dCache conv;
    SigmoidCache sig;
    Tensor gate;  // {1, H, W}
};

struct SpatialAttention {
    Conv2d conv;  // 2 -> 1, 7x7

    SpatialAttention();

    void init(Rng& rng);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
    Tensor forward(const Tensor& x, SpatialAttentionCache* cache) const;
    Tensor backward(const Tensor& gy, const SpatialAttentionCache& cache);
};

/// Concatenates two {C,H,W} tensors along the channel axis.
Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Splits a channel gradient back into the two concatenated parts.
void split_channels(const Tensor& g, std::size_t c_first, Tensor& ga, Tensor& gb);

}  // namespace fmseg

#endif
