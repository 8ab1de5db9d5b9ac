#include "fmseg/layers.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace fmseg {

namespace {

using MatrixRM = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

void he_normal(Tensor& w, Rng& rng, std::size_t fan_in) {
    const real scale = std::sqrt(2.0 / static_cast<real>(fan_in));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = scale * rng.normal();
}

void im2col(const Tensor& x, int k, Tensor& cols) {
    const std::ptrdiff_t c = static_cast<std::ptrdiff_t>(x.dim(0));
    const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(x.dim(1));
    const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(x.dim(2));
    const std::ptrdiff_t p = k / 2;
    const std::size_t hw = static_cast<std::size_t>(h * w);
    real* out = cols.data();
    for (std::ptrdiff_t ci = 0; ci < c; ++ci) {
        for (std::ptrdiff_t dy = 0; dy < k; ++dy) {
            for (std::ptrdiff_t dx = 0; dx < k; ++dx) {
                real* row = out;
                out += hw;
                for (std::ptrdiff_t y = 0; y < h; ++y) {
                    const std::ptrdiff_t iy = y + dy - p;
                    if (iy < 0 || iy >= h) {
                        for (std::ptrdiff_t xx = 0; xx < w; ++xx) *row++ = 0.0;
                        continue;
                    }
                    for (std::ptrdiff_t xx = 0; xx < w; ++xx) {
                        const std::ptrdiff_t ix = xx + dx - p;
                        *row++ = (ix < 0 || ix >= w) ? 0.0 : x.at(ci, iy, ix);
                    }
                }
            }
        }
    }
}

void col2im_add(const Tensor& gcols, int k, Tensor& gx) {
    const std::ptrdiff_t c = static_cast<std::ptrdiff_t>(gx.dim(0));
    const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(gx.dim(1));
    const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(gx.dim(2));
    const std::ptrdiff_t p = k / 2;
    const std::size_t hw = static_cast<std::size_t>(h * w);
    const real* in = gcols.data();
    for (std::ptrdiff_t ci = 0; ci < c; ++ci) {
        for (std::ptrdiff_t dy = 0; dy < k; ++dy) {
            for (std::ptrdiff_t dx = 0; dx < k; ++dx) {
                const real* row = in;
                in += hw;
                for (std::ptrdiff_t y = 0; y < h; ++y) {
                    const std::ptrdiff_t iy = y + dy - p;
                    if (iy < 0 || iy >= h) {
                        row += w;
                        continue;
                    }
                    for (std::ptrdiff_t xx = 0; xx < w; ++xx) {
                        const std::ptrdiff_t ix = xx + dx - p;
                        if (ix >= 0 && ix < w) gx.at(ci, iy, ix) += *row;
                        ++row;
                    }
                }
            }
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d
// ---------------------------------------------------------------------------

Conv2d::Conv2d(int in, int out, int k)
    : in_ch(in),
      out_ch(out),
      ksize(k),
      w({static_cast<std::size_t>(out), static_cast<std::size_t>(in), static_cast<std::size_t>(k),
         static_cast<std::size_t>(k)}),
      b({static_cast<std::size_t>(out)}),
      gw(Tensor::zeros_like(w)),
      gb(Tensor::zeros_like(b)) {}

void Conv2d::init(Rng& rng) {
    he_normal(w, rng, static_cast<std::size_t>(in_ch) * ksize * ksize);
    b.zero();
}

void Conv2d::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w", &w, &gw});
    out.push_back({prefix + ".b", &b, &gb});
}

Tensor Conv2d::forward(const Tensor& x, Conv2dCache* cache) const {
    if (x.rank() != 3 || x.dim(0) != static_cast<std::size_t>(in_ch))
        throw std::invalid_argument("Conv2d: input channel mismatch");
    const std::size_t h = x.dim(1), ww = x.dim(2), hw = h * ww;
    const std::size_t kk = static_cast<std::size_t>(in_ch) * ksize * ksize;

    Tensor local_cols;
    Tensor& cols = cache ? cache->cols : local_cols;
    cols = Tensor({kk, hw});
    im2col(x, ksize, cols);
    if (cache) {
        cache->h = h;
        cache->w = ww;
    }

    Tensor y({static_cast<std::size_t>(out_ch), h, ww});
    ConstMapRM wm(w.data(), out_ch, static_cast<Eigen::Index>(kk));
    ConstMapRM cm(cols.data(), static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(hw));
    MapRM ym(y.data(), out_ch, static_cast<Eigen::Index>(hw));
    ym.noalias() = wm * cm;
    for (int o = 0; o < out_ch; ++o) ym.row(o).array() += b[static_cast<std::size_t>(o)];
    return y;
}

Tensor Conv2d::backward(const Tensor& gy, const Conv2dCache& cache) {
    const std::size_t h = cache.h, ww = cache.w, hw = h * ww;
    const std::size_t kk = static_cast<std::size_t>(in_ch) * ksize * ksize;

    ConstMapRM gym(gy.data(), out_ch, static_cast<Eigen::Index>(hw));
    ConstMapRM cm(cache.cols.data(), static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(hw));
    MapRM gwm(gw.data(), out_ch, static_cast<Eigen::Index>(kk));
    gwm.noalias() += gym * cm.transpose();
    for (int o = 0; o < out_ch; ++o) gb[static_cast<std::size_t>(o)] += gym.row(o).sum();

    Tensor gcols({kk, hw});
    MapRM gcm(gcols.data(), static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(hw));
    ConstMapRM wm(w.data(), out_ch, static_cast<Eigen::Index>(kk));
    gcm.noalias() = wm.transpose() * gym;

    Tensor gx({static_cast<std::size_t>(in_ch), h, ww});
    col2im_add(gcols, ksize, gx);
    return gx;
}

// ---------------------------------------------------------------------------
// TConv2d
// ---------------------------------------------------------------------------

TConv2d::TConv2d(int in, int out)
    : in_ch(in),
      out_ch(out),
      w({static_cast<std::size_t>(in), static_cast<std::size_t>(out), 2, 2}),
      b({static_cast<std::size_t>(out)}),
      gw(Tensor::zeros_like(w)),
      gb(Tensor::zeros_like(b)) {}

void TConv2d::init(Rng& rng) {
    he_normal(w, rng, static_cast<std::size_t>(in_ch) * 4);
    b.zero();
}

void TConv2d::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w", &w, &gw});
    out.push_back({prefix + ".b", &b, &gb});
}

Tensor TConv2d::forward(const Tensor& x, TConv2dCache* cache) const {
    if (x.rank() != 3 || x.dim(0) != static_cast<std::size_t>(in_ch))
        throw std::invalid_argument("TConv2d: input channel mismatch");
    const std::size_t h = x.dim(1), ww = x.dim(2), hw = h * ww;
    if (cache) cache->x = x;

    // One non-overlapping 2x2 tap per output pixel: a plain linear map
    // from input channels to (out_ch * 4) interleaved outputs.
    Tensor y4({static_cast<std::size_t>(out_ch) * 4, hw});
    ConstMapRM wm(w.data(), in_ch, out_ch * 4);
    ConstMapRM xm(x.data(), in_ch, static_cast<Eigen::Index>(hw));
    MapRM y4m(y4.data(), out_ch * 4, static_cast<Eigen::Index>(hw));
    y4m.noalias() = wm.transpose() * xm;

    Tensor y({static_cast<std::size_t>(out_ch), 2 * h, 2 * ww});
    for (std::size_t o = 0; o < static_cast<std::size_t>(out_ch); ++o) {
        for (std::size_t dy = 0; dy < 2; ++dy) {
            for (std::size_t dx = 0; dx < 2; ++dx) {
                const real* src = y4.data() + ((o * 2 + dy) * 2 + dx) * hw;
                for (std::size_t yy = 0; yy < h; ++yy)
                    for (std::size_t xx = 0; xx < ww; ++xx)
                        y.at(o, 2 * yy + dy, 2 * xx + dx) = src[yy * ww + xx] + b[o];
            }
        }
    }
    return y;
}

Tensor TConv2d::backward(const Tensor& gy, const TConv2dCache& cache) {
    const std::size_t h = cache.x.dim(1), ww = cache.x.dim(2), hw = h * ww;

    Tensor g4({static_cast<std::size_t>(out_ch) * 4, hw});
    for (std::size_t o = 0; o < static_cast<std::size_t>(out_ch); ++o) {
        real bsum = 0.0;
        for (std::size_t dy = 0; dy < 2; ++dy) {
            for (std::size_t dx = 0; dx < 2; ++dx) {
                real* dst = g4.data() + ((o * 2 + dy) * 2 + dx) * hw;
                for (std::size_t yy = 0; yy < h; ++yy)
                    for (std::size_t xx = 0; xx < ww; ++xx) {
                        real v = gy.at(o, 2 * yy + dy, 2 * xx + dx);
                        dst[yy * ww + xx] = v;
                        bsum += v;
                    }
            }
        }
        gb[o] += bsum;
    }

    ConstMapRM xm(cache.x.data(), in_ch, static_cast<Eigen::Index>(hw));
    ConstMapRM g4m(g4.data(), out_ch * 4, static_cast<Eigen::Index>(hw));
    MapRM gwm(gw.data(), in_ch, out_ch * 4);
    gwm.noalias() += xm * g4m.transpose();

    Tensor gx({static_cast<std::size_t>(in_ch), h, ww});
    ConstMapRM wm(w.data(), in_ch, out_ch * 4);
    MapRM gxm(gx.data(), in_ch, static_cast<Eigen::Index>(hw));
    gxm.noalias() = wm * g4m;
    return gx;
}

// ---------------------------------------------------------------------------
// Max pooling
// ---------------------------------------------------------------------------

Tensor maxpool_forward(const Tensor& x, MaxPoolCache* cache) {
    const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    if (h % 2 != 0 || w % 2 != 0) throw std::invalid_argument("maxpool: odd spatial size");
    Tensor y({c, h / 2, w / 2});
    if (cache) {
        cache->argmax.assign(y.size(), 0);
        cache->c = c;
        cache->h = h;
        cache->w = w;
    }
    std::size_t oi = 0;
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t yy = 0; yy < h; yy += 2) {
            for (std::size_t xx = 0; xx < w; xx += 2, ++oi) {
                std::size_t best = (ch * h + yy) * w + xx;
                real bv = x[best];
                const std::size_t cand[3] = {best + 1, best + w, best + w + 1};
                for (std::size_t k = 0; k < 3; ++k) {
                    if (x[cand[k]] > bv) {
                        bv = x[cand[k]];
                        best = cand[k];
                    }
                }
                y[oi] = bv;
                if (cache) cache->argmax[oi] = static_cast<std::uint32_t>(best);
            }
        }
    }
    return y;
}

Tensor maxpool_backward(const Tensor& gy, const MaxPoolCache& cache) {
    Tensor gx({cache.c, cache.h, cache.w});
    for (std::size_t i = 0; i < gy.size(); ++i) gx[cache.argmax[i]] += gy[i];
    return gx;
}

// ---------------------------------------------------------------------------
// InstanceNorm
// ---------------------------------------------------------------------------

InstanceNorm::InstanceNorm(int ch, bool on)
    : enabled(on),
      channels(ch),
      gamma({static_cast<std::size_t>(ch)}, 1.0),
      beta({static_cast<std::size_t>(ch)}, 0.0),
      ggamma({static_cast<std::size_t>(ch)}, 0.0),
      gbeta({static_cast<std::size_t>(ch)}, 0.0) {}

void InstanceNorm::init() {
    gamma.fill(1.0);
    beta.zero();
}

void InstanceNorm::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    if (!enabled) return;
    out.push_back({prefix + ".gamma", &gamma, &ggamma});
    out.push_back({prefix + ".beta", &beta, &gbeta});
}

Tensor InstanceNorm::forward(const Tensor& x, InstanceNormCache* cache) const {
    if (!enabled) return x;
    const std::size_t c = x.dim(0), hw = x.dim(1) * x.dim(2);
    Tensor y = Tensor::zeros_like(x);
    if (cache) {
        cache->xhat = Tensor::zeros_like(x);
        cache->inv_std.assign(c, 0.0);
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
        const real* xs = x.data() + ch * hw;
        real mu = 0.0;
        for (std::size_t i = 0; i < hw; ++i) mu += xs[i];
        mu /= static_cast<real>(hw);
        real var = 0.0;
        for (std::size_t i = 0; i < hw; ++i) {
            real d = xs[i] - mu;
            var += d * d;
        }
        var /= static_cast<real>(hw);
        const real inv = 1.0 / std::sqrt(var + eps);
        real* ys = y.data() + ch * hw;
        real* hs = cache ? cache->xhat.data() + ch * hw : nullptr;
        for (std::size_t i = 0; i < hw; ++i) {
            real xh = (xs[i] - mu) * inv;
            if (hs) hs[i] = xh;
            ys[i] = gamma[ch] * xh + beta[ch];
        }
        if (cache) cache->inv_std[ch] = inv;
    }
    return y;
}

Tensor InstanceNorm::backward(const Tensor& gy, const InstanceNormCache& cache) {
    if (!enabled) return gy;
    const std::size_t c = gy.dim(0), hw = gy.dim(1) * gy.dim(2);
    Tensor gx = Tensor::zeros_like(gy);
    for (std::size_t ch = 0; ch < c; ++ch) {
        const real* gys = gy.data() + ch * hw;
        const real* hs = cache.xhat.data() + ch * hw;
        real sum_g = 0.0, sum_gh = 0.0;
        for (std::size_t i = 0; i < hw; ++i) {
            sum_g += gys[i];
            sum_gh += gys[i] * hs[i];
        }
        gbeta[ch] += sum_g;
        ggamma[ch] += sum_gh;
        const real n = static_cast<real>(hw);
        const real inv = cache.inv_std[ch];
        const real g = gamma[ch];
        real* gxs = gx.data() + ch * hw;
        for (std::size_t i = 0; i < hw; ++i)
            gxs[i] = g * inv * (gys[i] - sum_g / n - hs[i] * sum_gh / n);
    }
    return gx;
}

// ---------------------------------------------------------------------------
// Nonlinearities
// ---------------------------------------------------------------------------

Tensor relu_forward(const Tensor& x, ReluCache* cache) {
    Tensor y = Tensor::zeros_like(x);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    if (cache) cache->y = y;
    return y;
}

Tensor relu_backward(const Tensor& gy, const ReluCache& cache) {
    Tensor gx = Tensor::zeros_like(gy);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] = cache.y[i] > 0.0 ? gy[i] : 0.0;
    return gx;
}

Tensor sigmoid_forward(const Tensor& x, SigmoidCache* cache) {
    Tensor y = Tensor::zeros_like(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
        real v = x[i];
        y[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }
    if (cache) cache->y = y;
    return y;
}

Tensor sigmoid_backward(const Tensor& gy, const SigmoidCache& cache) {
    Tensor gx = Tensor::zeros_like(gy);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] = gy[i] * cache.y[i] * (1.0 - cache.y[i]);
    return gx;
}

// ---------------------------------------------------------------------------
// ConvBlock
// ---------------------------------------------------------------------------

ConvBlock::ConvBlock(int in, int out, bool norm_on)
    : conv1(in, out, 3), conv2(out, out, 3), norm1(out, norm_on), norm2(out, norm_on) {}

void ConvBlock::init(Rng& rng) {
    conv1.init(rng);
    conv2.init(rng);
    norm1.init();
    norm2.init();
}

void ConvBlock::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    conv1.collect(prefix + ".conv1", out);
    norm1.collect(prefix + ".norm1", out);
    conv2.collect(prefix + ".conv2", out);
    norm2.collect(prefix + ".norm2", out);
}

Tensor ConvBlock::forward(const Tensor& x, ConvBlockCache* cache) const {
    Tensor t = conv1.forward(x, cache ? &cache->c1 : nullptr);
    t = norm1.forward(t, cache ? &cache->n1 : nullptr);
    t = relu_forward(t, cache ? &cache->r1 : nullptr);
    t = conv2.forward(t, cache ? &cache->c2 : nullptr);
    t = norm2.forward(t, cache ? &cache->n2 : nullptr);
    return relu_forward(t, cache ? &cache->r2 : nullptr);
}

Tensor ConvBlock::backward(const Tensor& gy, const ConvBlockCache& cache) {
    Tensor g = relu_backward(gy, cache.r2);
    g = norm2.backward(g, cache.n2);
    g = conv2.backward(g, cache.c2);
    g = relu_backward(g, cache.r1);
    g = norm1.backward(g, cache.n1);
    return conv1.backward(g, cache.c1);
}

// ---------------------------------------------------------------------------
// ChannelAttention
// ---------------------------------------------------------------------------

ChannelAttention::ChannelAttention(int ch, int reduction)
    : channels(ch),
      hidden(std::max(1, ch / std::max(1, reduction))),
      w1({static_cast<std::size_t>(hidden), static_cast<std::size_t>(ch)}),
      b1({static_cast<std::size_t>(hidden)}),
      w2({static_cast<std::size_t>(ch), static_cast<std::size_t>(hidden)}),
      b2({static_cast<std::size_t>(ch)}),
      gw1(Tensor::zeros_like(w1)),
      gb1(Tensor::zeros_like(b1)),
      gw2(Tensor::zeros_like(w2)),
      gb2(Tensor::zeros_like(b2)) {}

void ChannelAttention::init(Rng& rng) {
    he_normal(w1, rng, static_cast<std::size_t>(channels));
    he_normal(w2, rng, static_cast<std::size_t>(hidden));
    b1.zero();
    b2.zero();
}

void ChannelAttention::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w1", &w1, &gw1});
    out.push_back({prefix + ".b1", &b1, &gb1});
    out.push_back({prefix + ".w2", &w2, &gw2});
    out.push_back({prefix + ".b2", &b2, &gb2});
}

Tensor ChannelAttention::forward(const Tensor& x, ChannelAttentionCache* cache) const {
    const std::size_t c = x.dim(0), hw = x.dim(1) * x.dim(2);
    Tensor avg({c}), mx({c});
    std::vector<std::uint32_t> arg(c, 0);
    for (std::size_t ch = 0; ch < c; ++ch) {
        const real* xs = x.data() + ch * hw;
        real s = 0.0, best = xs[0];
        std::size_t bi = 0;
        for (std::size_t i = 0; i < hw; ++i) {
            s += xs[i];
            if (xs[i] > best) {
                best = xs[i];
                bi = i;
            }
        }
        avg[ch] = s / static_cast<real>(hw);
        mx[ch] = best;
        arg[ch] = static_cast<std::uint32_t>(bi);
    }

    auto dense1 = [&](const Tensor& v, Tensor& pre, Tensor& act) {
        pre = Tensor({static_cast<std::size_t>(hidden)});
        act = Tensor({static_cast<std::size_t>(hidden)});
        for (int hidx = 0; hidx < hidden; ++hidx) {
            real s = b1[static_cast<std::size_t>(hidx)];
            const real* row = w1.data() + static_cast<std::size_t>(hidx) * c;
            for (std::size_t ch = 0; ch < c; ++ch) s += row[ch] * v[ch];
            pre[static_cast<std::size_t>(hidx)] = s;
            act[static_cast<std::size_t>(hidx)] = s > 0.0 ? s : 0.0;
        }
    };
    Tensor ha_pre, ha, hm_pre, hm;
    dense1(avg, ha_pre, ha);
    dense1(mx, hm_pre, hm);

    Tensor gate({c});
    for (std::size_t ch = 0; ch < c; ++ch) {
        real s = b2[ch];
        const real* row = w2.data() + ch * static_cast<std::size_t>(hidden);
        for (int hidx = 0; hidx < hidden; ++hidx)
            s += row[hidx] * (ha[static_cast<std::size_t>(hidx)] + hm[static_cast<std::size_t>(hidx)]);
        gate[ch] = s >= 0.0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
    }

    Tensor y = Tensor::zeros_like(x);
    for (std::size_t ch = 0; ch < c; ++ch) {
        const real g = gate[ch];
        const real* xs = x.data() + ch * hw;
        real* ys = y.data() + ch * hw;
        for (std::size_t i = 0; i < hw; ++i) ys[i] = xs[i] * g;
    }

    if (cache) {
        cache->x = x;
        cache->avg = std::move(avg);
        cache->mx = std::move(mx);
        cache->arg = std::move(arg);
        cache->ha_pre = std::move(ha_pre);
        cache->hm_pre = std::move(hm_pre);
        cache->ha = std::move(ha);
        cache->hm = std::move(hm);
        cache->gate = std::move(gate);
    }
    return y;
}

Tensor ChannelAttention::backward(const Tensor& gy, const ChannelAttentionCache& cache) {
    const std::size_t c = gy.dim(0), hw = gy.dim(1) * gy.dim(2);

    Tensor gx = Tensor::zeros_like(gy);
    Tensor ggate({c});
    for (std::size_t ch = 0; ch < c; ++ch) {
        const real g = cache.gate[ch];
        const real* gys = gy.data() + ch * hw;
        const real* xs = cache.x.data() + ch * hw;
        real* gxs = gx.data() + ch * hw;
        real s = 0.0;
        for (std::size_t i = 0; i < hw; ++i) {
            s += gys[i] * xs[i];
            gxs[i] = gys[i] * g;
        }
        ggate[ch] = s;
    }

    // through the sigmoid
    Tensor gs({c});
    for (std::size_t ch = 0; ch < c; ++ch)
        gs[ch] = ggate[ch] * cache.gate[ch] * (1.0 - cache.gate[ch]);

    Tensor gh({static_cast<std::size_t>(hidden)}, 0.0);
    for (std::size_t ch = 0; ch < c; ++ch) {
        gb2[ch] += gs[ch];
        const std::size_t base = ch * static_cast<std::size_t>(hidden);
        for (int hidx = 0; hidx < hidden; ++hidx) {
            gw2[base + static_cast<std::size_t>(hidx)] +=
                gs[ch] * (cache.ha[static_cast<std::size_t>(hidx)] +
                          cache.hm[static_cast<std::size_t>(hidx)]);
            gh[static_cast<std::size_t>(hidx)] += w2[base + static_cast<std::size_t>(hidx)] * gs[ch];
        }
    }

    auto dense1_back = [&](const Tensor& pre, const Tensor& v, Tensor& gv) {
        gv = Tensor({c}, 0.0);
        for (int hidx = 0; hidx < hidden; ++hidx) {
            if (pre[static_cast<std::size_t>(hidx)] <= 0.0) continue;
            const real gp = gh[static_cast<std::size_t>(hidx)];
            gb1[static_cast<std::size_t>(hidx)] += gp;
            const std::size_t base = static_cast<std::size_t>(hidx) * c;
            for (std::size_t ch = 0; ch < c; ++ch) {
                gw1[base + ch] += gp * v[ch];
                gv[ch] += w1[base + ch] * gp;
            }
        }
    };
    Tensor gavg, gmx;
    dense1_back(cache.ha_pre, cache.avg, gavg);
    dense1_back(cache.hm_pre, cache.mx, gmx);

    for (std::size_t ch = 0; ch < c; ++ch) {
        const real spread = gavg[ch] / static_cast<real>(hw);
        real* gxs = gx.data() + ch * hw;
        for (std::size_t i = 0; i < hw; ++i) gxs[i] += spread;
        gxs[cache.arg[ch]] += gmx[ch];
    }
    return gx;
}

// ---------------------------------------------------------------------------
// SpatialAttention
// ---------------------------------------------------------------------------

SpatialAttention::SpatialAttention() : conv(2, 1, 7) {}

void SpatialAttention::init(Rng& rng) { conv.init(rng); }

void SpatialAttention::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    conv.collect(prefix + ".conv", out);
}

Tensor SpatialAttention::forward(const Tensor& x, SpatialAttentionCache* cache) const {
    const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2), hw = h * w;
    Tensor maps({2, h, w});
    std::vector<std::uint32_t> arg(hw, 0);
    for (std::size_t i = 0; i < hw; ++i) {
        real s = 0.0, best = x[i];
        std::size_t bc = 0;
        for (std::size_t ch = 0; ch < c; ++ch) {
            real v = x[ch * hw + i];
            s += v;
            if (v > best) {
                best = v;
                bc = ch;
            }
        }
        maps[i] = s / static_cast<real>(c);
        maps[hw + i] = best;
        arg[i] = static_cast<std::uint32_t>(bc);
    }

    Tensor z = conv.forward(maps, cache ? &cache->conv : nullptr);
    Tensor gate = sigmoid_forward(z, cache ? &cache->sig : nullptr);

    Tensor y = Tensor::zeros_like(x);
    for (std::size_t ch = 0; ch < c; ++ch) {
        const real* xs = x.data() + ch * hw;
        real* ys = y.data() + ch * hw;
        for (std::size_t i = 0; i < hw; ++i) ys[i] = xs[i] * gate[i];
    }

    if (cache) {
        cache->x = x;
        cache->maps = std::move(maps);
        cache->arg = std::move(arg);
        cache->gate = gate;
    }
    return y;
}

Tensor SpatialAttention::backward(const Tensor& gy, const SpatialAttentionCache& cache) {
    const std::size_t c = gy.dim(0), h = gy.dim(1), w = gy.dim(2), hw = h * w;

    Tensor gx = Tensor::zeros_like(gy);
    Tensor ggate({1, h, w}, 0.0);
    for (std::size_t ch = 0; ch < c; ++ch) {
        const real* gys = gy.data() + ch * hw;
        const real* xs = cache.x.data() + ch * hw;
        real* gxs = gx.data() + ch * hw;
        for (std::size_t i = 0; i < hw; ++i) {
            ggate[i] += gys[i] * xs[i];
            gxs[i] = gys[i] * cache.gate[i];
        }
    }

    Tensor gz = sigmoid_backward(ggate, cache.sig);
    Tensor gmaps = conv.backward(gz, cache.conv);

    for (std::size_t i = 0; i < hw; ++i) {
        const real spread = gmaps[i] / static_cast<real>(c);
        for (std::size_t ch = 0; ch < c; ++ch) gx[ch * hw + i] += spread;
        gx[static_cast<std::size_t>(cache.arg[i]) * hw + i] += gmaps[hw + i];
    }
    return gx;
}

// ---------------------------------------------------------------------------
// Channel concat helpers
// ---------------------------------------------------------------------------

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.rank() != 3 || b.rank() != 3 || a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2))
        throw std::invalid_argument("concat_channels: spatial shapes differ");
    Tensor out({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
    std::copy(a.data(), a.data() + a.size(), out.data());
    std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
    return out;
}

void split_channels(const Tensor& g, std::size_t c_first, Tensor& ga, Tensor& gb) {
    ga = Tensor({c_first, g.dim(1), g.dim(2)});
    gb = Tensor({g.dim(0) - c_first, g.dim(1), g.dim(2)});
    std::copy(g.data(), g.data() + ga.size(), ga.data());
    std::copy(g.data() + ga.size(), g.data() + g.size(), gb.data());
}

}  // namespace fmseg
