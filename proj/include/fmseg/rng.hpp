#ifndef FMSEG_RNG_HPP
#define FMSEG_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace fmseg {

/// Mixes a seed with a stream label so that sub-streams (per epoch, per
/// worker) are decorrelated but fully determined by the root seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Seeded random source. All sampling helpers are implemented on top of the
/// raw engine output so draws are reproducible across standard libraries.
/// Callers own the state; nothing here is global.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform real in [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform integer in [lo, hi], both ends inclusive.
    int uniform_int(int lo, int hi);

    /// Standard normal deviate (Box-Muller, two engine draws per call).
    double normal();

    /// Child generator for an independent sub-stream.
    Rng fork(std::uint64_t stream) { return Rng(mix_seed(engine_(), stream)); }

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<int>(i) - 1));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace fmseg

#endif
