#ifndef FMSEG_NETWORK_HPP
#define FMSEG_NETWORK_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fmseg/layers.hpp"
#include "fmseg/tensor.hpp"

namespace fmseg {

/// Architecture description. Channel width at resolution level l is
/// base_channels * 2^l, capped at max_channels; level 0 is full resolution
/// and level depth is the bottleneck.
struct ModelConfig {
    int depth = 4;  // resolution levels L
    int base_channels = 8;
    int in_channels = 3;
    int image_size = 64;
    bool attention_enabled = true;
    int max_channels = 512;
    int attention_reduction = 8;
    bool norm_enabled = true;  // instance norm inside conv blocks

    int channels_at(int level) const;
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

struct ForwardOptions {
    /// Test hook: bypass attention gating (gates pinned to 1) without
    /// changing which parameters exist.
    bool attention_identity = false;
    /// Return the per-level decoder features alongside the heads.
    bool keep_features = false;
};

struct ForwardOutput {
    Tensor recon;     // {C, H, W}, linear head, values unbounded
    Tensor seg_prob;  // {1, H, W}, sigmoid head, values in (0,1)
    std::vector<Tensor> f_sel;  // filled when keep_features
    std::vector<Tensor> f_seg;
};

struct SegStageCache {
    ChannelAttentionCache catt;
    SpatialAttentionCache satt;
    bool att_applied = false;
    ConvBlockCache block;
    TConv2dCache up;
    std::size_t seg_channels = 0;  // channel count of the f_seg part of the concat
};

/// Per-forward activation state. Owned by the training loop; inference
/// forwards pass nullptr and the network object stays read-only.
struct NetCache {
    std::vector<ConvBlockCache> enc_blocks;
    std::vector<MaxPoolCache> pools;
    std::vector<TConv2dCache> sel_up;
    std::vector<ConvBlockCache> sel_blocks;
    std::vector<std::size_t> sel_skip_channels;
    Conv2dCache sel_head;
    std::vector<SegStageCache> seg_stages;
    Conv2dCache seg_head;
    SigmoidCache seg_sig;
};

/// Shared encoder E with a reconstruction decoder (U-Net skips from E) and
/// a segmentation decoder that, at every stage, consumes its previous
/// features concatenated with the same-level reconstruction-decoder
/// features through channel+spatial attention.
class CoupledNetwork {
public:
    explicit CoupledNetwork(const ModelConfig& cfg);

    const ModelConfig& config() const { return cfg_; }

    void init_params(std::uint64_t seed);
    void zero_params();  // test hook, includes norm affine terms
    void zero_grad();

    std::vector<ParamRef> parameters();
    std::size_t parameter_count() const;

    /// L+1 feature tensors; level l is at resolution image_size / 2^l.
    std::vector<Tensor> forward_encoder(const Tensor& x, NetCache* cache = nullptr) const;

    /// Reconstruction decoder. Returns the linear-head output; appends the
    /// decoder features f_sel[0..L] (index 0 = bottleneck) to `f_sel`.
    Tensor forward_decoder_sel(const std::vector<Tensor>& enc, std::vector<Tensor>& f_sel,
                               NetCache* cache = nullptr) const;

    /// Segmentation decoder over the reconstruction-decoder features.
    Tensor forward_decoder_seg(const std::vector<Tensor>& f_sel, const Tensor& bottleneck,
                               std::vector<Tensor>* f_seg, NetCache* cache = nullptr,
                               const ForwardOptions& opt = {}) const;

    ForwardOutput forward(const Tensor& x, NetCache* cache = nullptr,
                          const ForwardOptions& opt = {}) const;
    std::vector<ForwardOutput> forward_batch(const std::vector<Tensor>& xs,
                                             const ForwardOptions& opt = {}) const;

    /// Accumulates parameter gradients for one sample. grad_recon is the
    /// loss gradient w.r.t. the reconstruction output; grad_seg_logit is
    /// the gradient w.r.t. the segmentation head's pre-sigmoid logits
    /// (fused with the sigmoid for numerical safety).
    void backward(const NetCache& cache, const Tensor& grad_recon, const Tensor& grad_seg_logit);

private:
    ModelConfig cfg_;
    std::vector<ConvBlock> enc_blocks_;       // L+1
    std::vector<TConv2d> sel_up_;             // L
    std::vector<ConvBlock> sel_blocks_;       // L
    Conv2d sel_head_;
    std::vector<ChannelAttention> seg_catt_;  // L when attention enabled
    std::vector<SpatialAttention> seg_satt_;
    std::vector<ConvBlock> seg_blocks_;       // L
    std::vector<TConv2d> seg_up_;             // L
    Conv2d seg_head_;
};

/// Copies parameters from `src` into `dst` wherever names match; returns
/// the number of tensors copied. Used by the attention-ablation tests.
std::size_t copy_matching_parameters(CoupledNetwork& src, CoupledNetwork& dst);

}  // namespace fmseg

#endif
