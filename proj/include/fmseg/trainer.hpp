#ifndef FMSEG_TRAINER_HPP
#define FMSEG_TRAINER_HPP

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fmseg/checkpoint.hpp"
#include "fmseg/data.hpp"
#include "fmseg/fmaug.hpp"
#include "fmseg/network.hpp"
#include "fmseg/optim.hpp"

namespace fmseg {

struct TrainConfig {
    int image_size = 512;
    int batch_size = 2;
    int total_epochs = 200;
    int warm_epochs = 80;    // constant-lr phase
    int decay_epochs = 120;  // linear decay to zero
    real base_lr = 1e-3;
    int num_views = 3;  // N perturbed frequency views per image
    real alpha = 1.0;
    real bce_epsilon = 1e-7;
    bool use_fmaug = true;
    bool use_ssl = true;
    bool use_att = true;
    std::uint64_t seed = 1;
    std::optional<int> subsample;  // cap on mixed pairs per image
    AdamConfig adam;
    PatchLaw patch_law;

    void validate() const;
};

/// Piecewise schedule: base_lr while e < warm_epochs, then linear decay
/// base_lr * (total_epochs - e) / decay_epochs. Continuous at the boundary.
real lr_at_epoch(const TrainConfig& cfg, int epoch);

struct EpochStats {
    real l_sel = 0.0;   // observed reconstruction error (logged even when
                        // it is excluded from the objective)
    real l_seg = 0.0;
    real l_total = 0.0;  // the optimised objective
    int steps = 0;
};

struct EpochRecord {
    int epoch = 0;
    real lr = 0.0;
    real l_sel = 0.0, l_seg = 0.0, l_total = 0.0;
    real val_dice = 0.0, val_mcc = 0.0;
};

struct FitResult {
    Checkpoint best;  // highest validation DICE
    Checkpoint last;  // end-of-schedule state incl. optimizer, for resuming
    std::vector<EpochRecord> history;
};

struct Prediction {
    Tensor mask;  // {H, W}, binary
    Tensor prob;  // {H, W}
    bool resized = false;  // input was resampled to the model size
};

struct EvalEntry {
    std::string id;
    real dice = 0.0, mcc = 0.0;
};

struct EvalReport {
    std::vector<EvalEntry> per_image;
    real macro_dice = 0.0, macro_mcc = 0.0;
};

/// One pass over the training records: per image, FMAug samples (or the
/// bare anchor view when FMAug is off) are flattened into a stream and
/// consumed in batches with one Adam step each.
EpochStats train_epoch(CoupledNetwork& net, const std::vector<const DatasetRecord*>& data,
                       const TrainConfig& cfg, Rng& rng, Adam& optimizer, real lr,
                       int epoch_for_diagnostics = -1);

/// Full schedule with per-epoch validation; keeps the checkpoint with the
/// best validation DICE. Per-epoch RNG streams are derived from (seed,
/// epoch), so resuming from a checkpoint reproduces the uninterrupted
/// trajectory. `log` receives one tab-separated record per epoch.
/// `stop_after_epoch` ends the run early (schedule unchanged) so the
/// returned `last` checkpoint can seed a later resume.
FitResult fit(CoupledNetwork& net, const std::vector<const DatasetRecord*>& train_set,
              const std::vector<const DatasetRecord*>& val_set, const TrainConfig& cfg,
              const Checkpoint* resume = nullptr, std::ostream* log = nullptr,
              std::optional<int> stop_after_epoch = std::nullopt);

/// Inference: anchor frequency view of the input, forward pass, threshold
/// at 0.5. Inputs that do not match the model size are resampled (and the
/// probability map is resampled back), flagged in the result.
Prediction predict(const CoupledNetwork& net, const Image& image);

/// Per-image DICE/Mcc via predict(), macro-averaged over the records.
EvalReport evaluate(const CoupledNetwork& net, const std::vector<const DatasetRecord*>& data);

void write_epoch_record(std::ostream& out, const EpochRecord& r);
void write_eval_report(std::ostream& out, const EvalReport& report);

}  // namespace fmseg

#endif
