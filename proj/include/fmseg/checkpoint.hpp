#ifndef FMSEG_CHECKPOINT_HPP
#define FMSEG_CHECKPOINT_HPP

#include <cstdint>
#include <map>
#include <string>

#include "fmseg/network.hpp"
#include "fmseg/optim.hpp"

namespace fmseg {

/// Serialized training state. Parameters (and optional optimizer moments)
/// are stored as raw little-endian doubles, so save/load round-trips to a
/// bitwise-identical forward pass.
struct Checkpoint {
    ModelConfig model;
    std::uint64_t seed = 0;
    int epoch = -1;  // last completed epoch, -1 for untrained
    double val_dice = 0.0;
    double val_mcc = 0.0;
    std::map<std::string, Tensor> params;

    bool has_optimizer = false;
    std::map<std::string, Tensor> adam_m, adam_v;
    std::int64_t adam_t = 0;
};

/// Captures the network parameters (plus Adam state when given).
Checkpoint snapshot(CoupledNetwork& net, std::uint64_t seed, int epoch, Adam* optimizer = nullptr);

/// Writes parameters back into a network built from checkpoint.model.
void restore_parameters(const Checkpoint& ckpt, CoupledNetwork& net);
/// Restores Adam moments; throws if the checkpoint carries none.
void restore_optimizer(const Checkpoint& ckpt, Adam& optimizer);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace fmseg

#endif
