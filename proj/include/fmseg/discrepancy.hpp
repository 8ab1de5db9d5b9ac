#ifndef FMSEG_DISCREPANCY_HPP
#define FMSEG_DISCREPANCY_HPP

#include <array>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fmseg/data.hpp"
#include "fmseg/frequency.hpp"
#include "fmseg/image.hpp"
#include "fmseg/rng.hpp"

namespace fmseg {

/// Maps an image to a fixed-length feature vector. Deterministic by
/// contract; implementations must not keep state across calls.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::string id() const = 0;
    virtual std::vector<real> embed(const Tensor& pixels) const = 0;
};

/// Default embedder: 16x16 bilinear-downsampled grayscale pixels (256)
/// concatenated with a 32-bin gradient-magnitude histogram.
class HandcraftedEmbedder : public Embedder {
public:
    std::string id() const override { return "handcrafted-v1"; }
    std::vector<real> embed(const Tensor& pixels) const override;
};

std::unique_ptr<Embedder> make_embedder(const std::string& id);

struct EmbeddingSet {
    std::vector<std::vector<real>> vectors;  // standardized per coordinate
    std::vector<std::string> domain_labels;
    std::string embedder_id;
};

/// Embeds every image and standardizes each coordinate to zero mean and
/// unit variance across the set (constant coordinates become zeros).
EmbeddingSet embed_images(const std::vector<Tensor>& images,
                          const std::vector<std::string>& domain_labels,
                          const Embedder& embedder);

struct DispersionReport {
    std::string condition_id;  // raw | uniform_hp | discriminative_hp
    /// Mean pairwise Euclidean distance within each domain; absent for
    /// singleton domains.
    std::map<std::string, std::optional<real>> inner_dispersion;
    /// Euclidean distance between domain centroids, keyed "a|b".
    std::map<std::string, real> inter_distance;

    real mean_inner() const;
    real mean_inter() const;
};

DispersionReport dispersion_stats(const EmbeddingSet& embeddings,
                                  const std::string& condition_id = "raw");

struct HypothesisVerdict {
    DispersionReport raw;
    DispersionReport uniform;
    DispersionReport discriminative;
    EmbeddingSet raw_embeddings, uniform_embeddings, discriminative_embeddings;
    bool h1_inter_decreased = false;   // raw -> uniform, centroid distance
    bool h1_inner_decreased = false;   // raw -> uniform, mean inner dispersion
    bool h2_inner_increased = false;   // uniform -> discriminative
    real h1_inter_ratio = 0.0;         // uniform / raw
    real h2_inner_ratio = 0.0;         // discriminative / uniform
    /// The corresponding clustering claim on the clinical datasets is
    /// out of reach here and reported as untested.
    std::string real_data_claim = "untested";
};

/// Evaluates both frequency hypotheses on a multi-domain image set:
/// raw images vs a uniform high-pass (anchor parameters everywhere) vs a
/// discriminative high-pass (fresh random parameters per image). The
/// discriminative parameters can be pinned explicitly (one per image),
/// which collapses that condition onto the uniform one when they all
/// equal the anchor.
HypothesisVerdict hypothesis_check(const std::vector<Tensor>& images,
                                   const std::vector<std::string>& domain_labels,
                                   const GaussianParams& anchor, Rng& rng,
                                   const Embedder& embedder,
                                   const std::vector<GaussianParams>* discriminative_params =
                                       nullptr);

/// Convenience overload over loaded dataset records.
HypothesisVerdict hypothesis_check(const Dataset& dataset, const GaussianParams& anchor,
                                   Rng& rng, const Embedder& embedder);

/// Principal-axes 2-D projection of the embedding set, one (x, y) row per
/// image, for external plotting.
std::vector<std::array<real, 2>> project_2d(const EmbeddingSet& embeddings);

void write_verdict(std::ostream& out, const HypothesisVerdict& v);

}  // namespace fmseg

#endif
