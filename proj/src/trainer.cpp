#include "fmseg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <stdexcept>

#include "fmseg/losses.hpp"
#include "fmseg/metrics.hpp"

namespace fmseg {

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (total_epochs < 1) throw std::invalid_argument("TrainConfig: total_epochs must be >= 1");
    if (warm_epochs < 0 || decay_epochs < 1 || warm_epochs + decay_epochs != total_epochs)
        throw std::invalid_argument("TrainConfig: warm_epochs + decay_epochs must equal total_epochs");
    if (!(base_lr > 0.0)) throw std::invalid_argument("TrainConfig: base_lr must be positive");
    if (num_views < 2) throw std::invalid_argument("TrainConfig: num_views must be >= 2");
    if (!(alpha > 0.0)) throw std::invalid_argument("TrainConfig: alpha must be positive");
    if (subsample && *subsample < 1)
        throw std::invalid_argument("TrainConfig: subsample must be >= 1 when set");
}

real lr_at_epoch(const TrainConfig& cfg, int epoch) {
    if (epoch < 0 || epoch >= cfg.total_epochs)
        throw std::invalid_argument("lr_at_epoch: epoch out of range");
    if (epoch < cfg.warm_epochs) return cfg.base_lr;
    return cfg.base_lr * static_cast<real>(cfg.total_epochs - epoch) /
           static_cast<real>(cfg.decay_epochs);
}

namespace {

struct StreamSample {
    Tensor input;                            // mixed view (or anchor view)
    std::shared_ptr<const Tensor> target;    // anchor view
    std::shared_ptr<const Tensor> seg_mask;  // {H, W}
};

std::vector<StreamSample> samples_for_record(const DatasetRecord& rec, const TrainConfig& cfg,
                                             Rng& rng) {
    std::vector<StreamSample> out;
    if (cfg.use_fmaug) {
        std::vector<AugmentedSample> aug =
            build_training_samples(Image(rec.image), rec.mask, kAnchorParams, rng, cfg.num_views,
                                   cfg.subsample, cfg.patch_law);
        out.reserve(aug.size());
        for (AugmentedSample& a : aug)
            out.push_back({std::move(a.mixed), a.target, a.seg_mask});
    } else {
        // ablation: the anchor view is both the input and its own target
        FrequencyView anchor = high_pass_view(Image(rec.image), kAnchorParams);
        auto target = std::make_shared<const Tensor>(anchor.pixels);
        out.push_back({std::move(anchor.pixels), target,
                       std::make_shared<const Tensor>(rec.mask)});
    }
    return out;
}

// Mask tensors are {H,W} while the head emits {1,H,W}; flat sizes match,
// so the loss helpers operate on the flat views.
Tensor flat_as(const Tensor& like, const Tensor& src) {
    Tensor out = Tensor::zeros_like(like);
    for (std::size_t i = 0; i < src.size(); ++i) out[i] = src[i];
    return out;
}

}  // namespace

EpochStats train_epoch(CoupledNetwork& net, const std::vector<const DatasetRecord*>& data,
                       const TrainConfig& cfg, Rng& rng, Adam& optimizer, real lr,
                       int epoch_for_diagnostics) {
    cfg.validate();
    if (data.empty()) throw std::invalid_argument("train_epoch: no training records");

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    EpochStats stats;
    real sum_sel = 0.0, sum_seg = 0.0, sum_total = 0.0;

    std::deque<StreamSample> pending;
    std::size_t next_record = 0;
    NetCache cache;

    auto run_batch = [&](std::size_t batch_size) {
        net.zero_grad();
        real batch_sel = 0.0, batch_seg = 0.0;
        for (std::size_t b = 0; b < batch_size; ++b) {
            StreamSample s = std::move(pending.front());
            pending.pop_front();

            ForwardOutput out = net.forward(s.input, &cache);
            batch_sel += reconstruction_loss({out.recon}, *s.target);
            const Tensor mask_flat = flat_as(out.seg_prob, *s.seg_mask);
            batch_seg += segmentation_loss({out.seg_prob}, mask_flat, cfg.bce_epsilon);

            Tensor grad_recon = cfg.use_ssl
                                    ? reconstruction_loss_grad(out.recon, *s.target, batch_size)
                                    : Tensor::zeros_like(out.recon);
            Tensor grad_logit = segmentation_loss_logit_grad(out.seg_prob, mask_flat, batch_size);
            grad_logit *= cfg.alpha;
            net.backward(cache, grad_recon, grad_logit);
        }
        batch_sel /= static_cast<real>(batch_size);
        batch_seg /= static_cast<real>(batch_size);
        const real objective = (cfg.use_ssl ? batch_sel : 0.0) + cfg.alpha * batch_seg;
        if (!std::isfinite(objective))
            throw std::runtime_error("train_epoch: non-finite loss at epoch " +
                                     std::to_string(epoch_for_diagnostics) + ", step " +
                                     std::to_string(stats.steps));
        optimizer.step(lr);
        sum_sel += batch_sel;
        sum_seg += batch_seg;
        sum_total += objective;
        ++stats.steps;
    };

    while (true) {
        while (pending.size() < static_cast<std::size_t>(cfg.batch_size) &&
               next_record < order.size()) {
            std::vector<StreamSample> fresh =
                samples_for_record(*data[order[next_record++]], cfg, rng);
            for (StreamSample& s : fresh) pending.push_back(std::move(s));
        }
        if (pending.empty()) break;
        run_batch(std::min<std::size_t>(pending.size(), static_cast<std::size_t>(cfg.batch_size)));
    }

    if (stats.steps > 0) {
        stats.l_sel = sum_sel / static_cast<real>(stats.steps);
        stats.l_seg = sum_seg / static_cast<real>(stats.steps);
        stats.l_total = sum_total / static_cast<real>(stats.steps);
    }
    return stats;
}

FitResult fit(CoupledNetwork& net, const std::vector<const DatasetRecord*>& train_set,
              const std::vector<const DatasetRecord*>& val_set, const TrainConfig& cfg,
              const Checkpoint* resume, std::ostream* log,
              std::optional<int> stop_after_epoch) {
    cfg.validate();
    if (train_set.empty()) throw std::invalid_argument("fit: empty training split");
    if (val_set.empty()) throw std::invalid_argument("fit: empty validation split");
    if (net.config().attention_enabled != cfg.use_att)
        throw std::invalid_argument("fit: network attention flag disagrees with TrainConfig");

    Adam optimizer(net.parameters(), cfg.adam);
    int start_epoch = 0;
    real best_dice = -1.0;
    FitResult result;

    if (resume) {
        restore_parameters(*resume, net);
        restore_optimizer(*resume, optimizer);
        start_epoch = resume->epoch + 1;
        best_dice = resume->val_dice;
        result.best = *resume;
        if (start_epoch >= cfg.total_epochs)
            throw std::invalid_argument("fit: resume checkpoint already covers the schedule");
    }

    int end_epoch = cfg.total_epochs;
    if (stop_after_epoch) end_epoch = std::min(end_epoch, *stop_after_epoch + 1);

    for (int epoch = start_epoch; epoch < end_epoch; ++epoch) {
        const real lr = lr_at_epoch(cfg, epoch);
        Rng epoch_rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
        EpochStats stats = train_epoch(net, train_set, cfg, epoch_rng, optimizer, lr, epoch);

        EvalReport val = evaluate(net, val_set);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = lr;
        rec.l_sel = stats.l_sel;
        rec.l_seg = stats.l_seg;
        rec.l_total = stats.l_total;
        rec.val_dice = val.macro_dice;
        rec.val_mcc = val.macro_mcc;
        result.history.push_back(rec);
        if (log) write_epoch_record(*log, rec);

        if (val.macro_dice > best_dice) {
            best_dice = val.macro_dice;
            result.best = snapshot(net, cfg.seed, epoch, &optimizer);
            result.best.val_dice = val.macro_dice;
            result.best.val_mcc = val.macro_mcc;
        }
        if (epoch == end_epoch - 1) {
            result.last = snapshot(net, cfg.seed, epoch, &optimizer);
            result.last.val_dice = val.macro_dice;
            result.last.val_mcc = val.macro_mcc;
        }
    }
    return result;
}

Prediction predict(const CoupledNetwork& net, const Image& image) {
    image.validate();
    const ModelConfig& mc = net.config();
    if (image.channels() != static_cast<std::size_t>(mc.in_channels))
        throw std::invalid_argument("predict: channel count does not match the model");

    const std::size_t s = static_cast<std::size_t>(mc.image_size);
    const std::size_t h = image.height(), w = image.width();

    Prediction out;
    out.resized = (h != s || w != s);
    Tensor pixels = out.resized ? resize_bilinear(image.pixels, s, s) : image.pixels;

    FrequencyView anchor = high_pass_view(Image(std::move(pixels)), kAnchorParams);
    ForwardOutput fo = net.forward(anchor.pixels);

    Tensor prob({s, s});
    for (std::size_t i = 0; i < prob.size(); ++i) prob[i] = fo.seg_prob[i];
    if (out.resized) {
        Tensor prob3({1, s, s});
        for (std::size_t i = 0; i < prob.size(); ++i) prob3[i] = prob[i];
        prob3 = resize_bilinear(prob3, h, w);
        prob = Tensor({h, w});
        for (std::size_t i = 0; i < prob.size(); ++i) prob[i] = prob3[i];
    }

    out.mask = Tensor({prob.dim(0), prob.dim(1)});
    for (std::size_t i = 0; i < prob.size(); ++i) out.mask[i] = prob[i] >= 0.5 ? 1.0 : 0.0;
    out.prob = std::move(prob);
    return out;
}

EvalReport evaluate(const CoupledNetwork& net, const std::vector<const DatasetRecord*>& data) {
    if (data.empty()) throw std::invalid_argument("evaluate: no records");
    EvalReport report;
    report.per_image.reserve(data.size());
    real dsum = 0.0, msum = 0.0;
    for (const DatasetRecord* rec : data) {
        Prediction p = predict(net, Image(rec->image));
        ConfusionCounts c = confusion_counts(p.prob, rec->mask);
        EvalEntry e{rec->id, dice(c), mcc(c)};
        dsum += e.dice;
        msum += e.mcc;
        report.per_image.push_back(std::move(e));
    }
    report.macro_dice = dsum / static_cast<real>(data.size());
    report.macro_mcc = msum / static_cast<real>(data.size());
    return report;
}

void write_epoch_record(std::ostream& out, const EpochRecord& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%d\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\n", r.epoch,
                  r.lr, r.l_sel, r.l_seg, r.l_total, r.val_dice, r.val_mcc);
    out << buf;
    out.flush();
}

void write_eval_report(std::ostream& out, const EvalReport& report) {
    out << "id\tdice\tmcc\n";
    char buf[256];
    for (const EvalEntry& e : report.per_image) {
        std::snprintf(buf, sizeof(buf), "%s\t%.6f\t%.6f\n", e.id.c_str(), e.dice, e.mcc);
        out << buf;
    }
    std::snprintf(buf, sizeof(buf), "macro\t%.6f\t%.6f\n", report.macro_dice, report.macro_mcc);
    out << buf;
}

}  // namespace fmseg
