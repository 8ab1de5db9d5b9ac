#ifndef FMSEG_CONFIG_HPP
#define FMSEG_CONFIG_HPP

#include <string>

#include "fmseg/data.hpp"
#include "fmseg/losses.hpp"
#include "fmseg/network.hpp"
#include "fmseg/trainer.hpp"

namespace fmseg {

/// Run configuration assembled from (in order of increasing precedence)
/// built-in defaults, a preset, a key=value config file, and command-line
/// overrides. Unknown keys are rejected. Every command writes the fully
/// resolved configuration next to its outputs so runs can be replayed.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    LossConfig loss;
    SynthConfig synth;

    /// "desk" (64 px, 4 levels, short schedule) or "paper" (512 px,
    /// 8 levels, 200 epochs).
    void apply_preset(const std::string& name);

    /// Parses `key = value` lines; '#' starts a comment. Keys use dotted
    /// sections, e.g. `train.base_lr = 0.001`.
    void apply_file(const std::string& path);

    void apply_kv(const std::string& key, const std::string& value);

    /// Syncs coupled fields (shared image size, attention flag, loss
    /// weights) and validates everything.
    void finalize();

    /// Serialises every known key.
    std::string resolved_text() const;
    void write_resolved(const std::string& path) const;
};

}  // namespace fmseg

#endif
