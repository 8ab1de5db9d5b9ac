#include "fmseg/network.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace fmseg {

int ModelConfig::channels_at(int level) const {
    long long ch = static_cast<long long>(base_channels) << level;
    return static_cast<int>(std::min<long long>(ch, max_channels));
}

void ModelConfig::validate() const {
    if (depth < 2) throw std::invalid_argument("ModelConfig: depth must be >= 2");
    if (base_channels < 4) throw std::invalid_argument("ModelConfig: base_channels must be >= 4");
    if (in_channels != 1 && in_channels != 3)
        throw std::invalid_argument("ModelConfig: in_channels must be 1 or 3");
    if (image_size < 1 || image_size % (1 << depth) != 0)
        throw std::invalid_argument("ModelConfig: image_size must be divisible by 2^depth");
    if (max_channels < base_channels)
        throw std::invalid_argument("ModelConfig: max_channels below base_channels");
    if (attention_reduction < 1)
        throw std::invalid_argument("ModelConfig: attention_reduction must be >= 1");
}

CoupledNetwork::CoupledNetwork(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const int L = cfg_.depth;

    enc_blocks_.reserve(static_cast<std::size_t>(L) + 1);
    enc_blocks_.emplace_back(cfg_.in_channels, cfg_.channels_at(0), cfg_.norm_enabled);
    for (int l = 1; l <= L; ++l)
        enc_blocks_.emplace_back(cfg_.channels_at(l - 1), cfg_.channels_at(l), cfg_.norm_enabled);

    for (int l = 1; l <= L; ++l) {
        const int coarse = cfg_.channels_at(L - l + 1);
        const int fine = cfg_.channels_at(L - l);
        sel_up_.emplace_back(coarse, fine);
        sel_blocks_.emplace_back(2 * fine, fine, cfg_.norm_enabled);
        if (cfg_.attention_enabled) {
            seg_catt_.emplace_back(2 * coarse, cfg_.attention_reduction);
            seg_satt_.emplace_back();
        }
        seg_blocks_.emplace_back(2 * coarse, coarse, cfg_.norm_enabled);
        seg_up_.emplace_back(coarse, fine);
    }
    sel_head_ = Conv2d(cfg_.channels_at(0), cfg_.in_channels, 1);
    seg_head_ = Conv2d(cfg_.channels_at(0), 1, 1);
}

std::vector<ParamRef> CoupledNetwork::parameters() {
    std::vector<ParamRef> out;
    for (std::size_t l = 0; l < enc_blocks_.size(); ++l)
        enc_blocks_[l].collect("enc.block" + std::to_string(l), out);
    for (std::size_t l = 0; l < sel_up_.size(); ++l) {
        const std::string stage = std::to_string(l + 1);
        sel_up_[l].collect("sel.up" + stage, out);
        sel_blocks_[l].collect("sel.block" + stage, out);
    }
    sel_head_.collect("sel.head", out);
    for (std::size_t l = 0; l < seg_blocks_.size(); ++l) {
        const std::string stage = std::to_string(l + 1);
        if (cfg_.attention_enabled) {
            seg_catt_[l].collect("seg.catt" + stage, out);
            seg_satt_[l].collect("seg.satt" + stage, out);
        }
        seg_blocks_[l].collect("seg.block" + stage, out);
        seg_up_[l].collect("seg.up" + stage, out);
    }
    seg_head_.collect("seg.head", out);
    return out;
}

std::size_t CoupledNetwork::parameter_count() const {
    std::size_t n = 0;
    auto& self = const_cast<CoupledNetwork&>(*this);
    for (const ParamRef& p : self.parameters()) n += p.value->size();
    return n;
}

void CoupledNetwork::init_params(std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t l = 0; l < enc_blocks_.size(); ++l) enc_blocks_[l].init(rng);
    for (std::size_t l = 0; l < sel_up_.size(); ++l) {
        sel_up_[l].init(rng);
        sel_blocks_[l].init(rng);
    }
    sel_head_.init(rng);
    for (std::size_t l = 0; l < seg_blocks_.size(); ++l) {
        if (cfg_.attention_enabled) {
            seg_catt_[l].init(rng);
            seg_satt_[l].init(rng);
        }
        seg_blocks_[l].init(rng);
        seg_up_[l].init(rng);
    }
    seg_head_.init(rng);
}

void CoupledNetwork::zero_params() {
    for (const ParamRef& p : parameters()) p.value->zero();
}

void CoupledNetwork::zero_grad() {
    for (const ParamRef& p : parameters()) p.grad->zero();
}

std::vector<Tensor> CoupledNetwork::forward_encoder(const Tensor& x, NetCache* cache) const {
    if (x.rank() != 3 || x.dim(0) != static_cast<std::size_t>(cfg_.in_channels) ||
        x.dim(1) != static_cast<std::size_t>(cfg_.image_size) ||
        x.dim(2) != static_cast<std::size_t>(cfg_.image_size))
        throw std::invalid_argument("forward_encoder: input shape does not match config");

    const int L = cfg_.depth;
    if (cache) {
        cache->enc_blocks.assign(static_cast<std::size_t>(L) + 1, {});
        cache->pools.assign(static_cast<std::size_t>(L), {});
    }
    std::vector<Tensor> feats;
    feats.reserve(static_cast<std::size_t>(L) + 1);
    feats.push_back(enc_blocks_[0].forward(x, cache ? &cache->enc_blocks[0] : nullptr));
    for (int l = 1; l <= L; ++l) {
        Tensor pooled = maxpool_forward(feats.back(), cache ? &cache->pools[l - 1] : nullptr);
        feats.push_back(enc_blocks_[static_cast<std::size_t>(l)].forward(
            pooled, cache ? &cache->enc_blocks[static_cast<std::size_t>(l)] : nullptr));
    }
    return feats;
}

Tensor CoupledNetwork::forward_decoder_sel(const std::vector<Tensor>& enc,
                                           std::vector<Tensor>& f_sel, NetCache* cache) const {
    const int L = cfg_.depth;
    if (enc.size() != static_cast<std::size_t>(L) + 1)
        throw std::invalid_argument("forward_decoder_sel: expected L+1 encoder features");

    if (cache) {
        cache->sel_up.assign(static_cast<std::size_t>(L), {});
        cache->sel_blocks.assign(static_cast<std::size_t>(L), {});
        cache->sel_skip_channels.assign(static_cast<std::size_t>(L), 0);
    }
    f_sel.clear();
    f_sel.reserve(static_cast<std::size_t>(L) + 1);
    f_sel.push_back(enc.back());  // bottleneck doubles as f_sel[0]
    for (int l = 1; l <= L; ++l) {
        const std::size_t i = static_cast<std::size_t>(l - 1);
        Tensor up = sel_up_[i].forward(f_sel.back(), cache ? &cache->sel_up[i] : nullptr);
        const Tensor& skip = enc[static_cast<std::size_t>(L - l)];
        if (cache) cache->sel_skip_channels[i] = up.dim(0);
        Tensor cat = concat_channels(up, skip);
        f_sel.push_back(sel_blocks_[i].forward(cat, cache ? &cache->sel_blocks[i] : nullptr));
    }
    return sel_head_.forward(f_sel.back(), cache ? &cache->sel_head : nullptr);
}

Tensor CoupledNetwork::forward_decoder_seg(const std::vector<Tensor>& f_sel,
                                           const Tensor& bottleneck, std::vector<Tensor>* f_seg,
                                           NetCache* cache, const ForwardOptions& opt) const {
    const int L = cfg_.depth;
    if (f_sel.size() < static_cast<std::size_t>(L))
        throw std::invalid_argument("forward_decoder_seg: missing reconstruction features");

    if (cache) cache->seg_stages.assign(static_cast<std::size_t>(L), {});
    if (f_seg) {
        f_seg->clear();
        f_seg->reserve(static_cast<std::size_t>(L) + 1);
    }
    Tensor g = bottleneck;  // f_seg[0]
    if (f_seg) f_seg->push_back(g);
    for (int l = 1; l <= L; ++l) {
        const std::size_t i = static_cast<std::size_t>(l - 1);
        SegStageCache* sc = cache ? &cache->seg_stages[i] : nullptr;
        if (sc) sc->seg_channels = g.dim(0);
        Tensor t = concat_channels(g, f_sel[i]);
        if (cfg_.attention_enabled && !opt.attention_identity) {
            t = seg_catt_[i].forward(t, sc ? &sc->catt : nullptr);
            t = seg_satt_[i].forward(t, sc ? &sc->satt : nullptr);
            if (sc) sc->att_applied = true;
        }
        t = seg_blocks_[i].forward(t, sc ? &sc->block : nullptr);
        g = seg_up_[i].forward(t, sc ? &sc->up : nullptr);
        if (f_seg) f_seg->push_back(g);
    }
    Tensor logit = seg_head_.forward(g, cache ? &cache->seg_head : nullptr);
    return sigmoid_forward(logit, cache ? &cache->seg_sig : nullptr);
}

ForwardOutput CoupledNetwork::forward(const Tensor& x, NetCache* cache,
                                      const ForwardOptions& opt) const {
    ForwardOutput out;
    std::vector<Tensor> enc = forward_encoder(x, cache);
    std::vector<Tensor> f_sel;
    out.recon = forward_decoder_sel(enc, f_sel, cache);
    std::vector<Tensor> f_seg;
    out.seg_prob =
        forward_decoder_seg(f_sel, enc.back(), opt.keep_features ? &f_seg : nullptr, cache, opt);
    if (opt.keep_features) {
        out.f_sel = std::move(f_sel);
        out.f_seg = std::move(f_seg);
    }
    return out;
}

std::vector<ForwardOutput> CoupledNetwork::forward_batch(const std::vector<Tensor>& xs,
                                                         const ForwardOptions& opt) const {
    std::vector<ForwardOutput> outs;
    outs.reserve(xs.size());
    for (const Tensor& x : xs) outs.push_back(forward(x, nullptr, opt));
    return outs;
}

void CoupledNetwork::backward(const NetCache& cache, const Tensor& grad_recon,
                              const Tensor& grad_seg_logit) {
    const int L = cfg_.depth;
    std::vector<Tensor> g_fsel(static_cast<std::size_t>(L) + 1);
    std::vector<Tensor> g_enc(static_cast<std::size_t>(L) + 1);
    auto add_to = [](Tensor& acc, Tensor&& g) {
        if (acc.empty())
            acc = std::move(g);
        else
            acc += g;
    };

    // segmentation branch; the caller already folded the sigmoid into
    // grad_seg_logit, so it enters at the head directly
    Tensor g_fseg = seg_head_.backward(grad_seg_logit, cache.seg_head);
    for (int l = L; l >= 1; --l) {
        const std::size_t i = static_cast<std::size_t>(l - 1);
        const SegStageCache& sc = cache.seg_stages[i];
        Tensor gt = seg_up_[i].backward(g_fseg, sc.up);
        gt = seg_blocks_[i].backward(gt, sc.block);
        if (sc.att_applied) {
            gt = seg_satt_[i].backward(gt, sc.satt);
            gt = seg_catt_[i].backward(gt, sc.catt);
        }
        Tensor g_prev_seg, g_sel_part;
        split_channels(gt, sc.seg_channels, g_prev_seg, g_sel_part);
        add_to(g_fsel[i], std::move(g_sel_part));
        g_fseg = std::move(g_prev_seg);
    }
    // g_fseg now holds the gradient w.r.t. f_seg[0] (the bottleneck)

    // reconstruction branch
    add_to(g_fsel[static_cast<std::size_t>(L)], sel_head_.backward(grad_recon, cache.sel_head));
    for (int l = L; l >= 1; --l) {
        const std::size_t i = static_cast<std::size_t>(l - 1);
        Tensor g_cat = sel_blocks_[i].backward(g_fsel[static_cast<std::size_t>(l)],
                                               cache.sel_blocks[i]);
        Tensor g_up, g_skip;
        split_channels(g_cat, cache.sel_skip_channels[i], g_up, g_skip);
        add_to(g_enc[static_cast<std::size_t>(L - l)], std::move(g_skip));
        add_to(g_fsel[i], sel_up_[i].backward(g_up, cache.sel_up[i]));
    }

    // encoder: bottleneck collects both decoder entry points
    add_to(g_enc[static_cast<std::size_t>(L)], std::move(g_fsel[0]));
    add_to(g_enc[static_cast<std::size_t>(L)], std::move(g_fseg));
    Tensor g = std::move(g_enc[static_cast<std::size_t>(L)]);
    for (int l = L; l >= 1; --l) {
        Tensor gp = enc_blocks_[static_cast<std::size_t>(l)].backward(
            g, cache.enc_blocks[static_cast<std::size_t>(l)]);
        g = maxpool_backward(gp, cache.pools[static_cast<std::size_t>(l - 1)]);
        if (!g_enc[static_cast<std::size_t>(l - 1)].empty())
            g += g_enc[static_cast<std::size_t>(l - 1)];
    }
    enc_blocks_[0].backward(g, cache.enc_blocks[0]);
}

std::size_t copy_matching_parameters(CoupledNetwork& src, CoupledNetwork& dst) {
    std::unordered_map<std::string, const Tensor*> by_name;
    for (const ParamRef& p : src.parameters()) by_name.emplace(p.name, p.value);
    std::size_t copied = 0;
    for (const ParamRef& p : dst.parameters()) {
        auto it = by_name.find(p.name);
        if (it == by_name.end()) continue;
        if (!p.value->same_shape(*it->second))
            throw std::invalid_argument("copy_matching_parameters: shape mismatch for " + p.name);
        *p.value = *it->second;
        ++copied;
    }
    return copied;
}

}  // namespace fmseg
