#ifndef FMSEG_DATA_HPP
#define FMSEG_DATA_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fmseg/image.hpp"
#include "fmseg/rng.hpp"
#include "fmseg/tensor.hpp"

namespace fmseg {

/// One manifest line: tab-separated image path, mask path, split, domain.
/// Relative paths are resolved against the manifest's directory at load.
struct ManifestRecord {
    std::string image_path;
    std::string mask_path;
    std::string split;   // train | val | test
    std::string domain;
};

struct DatasetManifest {
    std::vector<ManifestRecord> records;

    static DatasetManifest load(const std::string& path);
    void save(const std::string& path) const;
};

/// Fully loaded sample: image resized bilinearly to the working size and
/// scaled to [0,1], mask resized nearest-neighbour and re-binarised.
struct DatasetRecord {
    std::string id;
    Tensor image;  // {C, S, S}
    Tensor mask;   // {S, S}, values 0/1
    std::string split;
    std::string domain;
};

struct Dataset {
    std::vector<DatasetRecord> records;

    std::vector<const DatasetRecord*> split(const std::string& name) const;
    std::vector<std::string> domains() const;  // unique, in first-seen order
};

Dataset load_dataset(const std::string& manifest_path, int image_size = 512);

struct DomainTransform {
    std::string id = "A";
    double brightness = 0.0;
    double contrast = 1.0;
    double blur_sigma = 0.0;
};

/// Built-in photometric shifts for quick multi-domain experiments; index 0
/// is the identity domain.
DomainTransform default_domain_transform(int index);

struct SynthConfig {
    int image_size = 64;
    int count = 10;  // images per domain
    std::array<int, 2> curves_range{2, 5};
    std::array<int, 2> thickness_range{1, 3};
    double background_amplitude = 0.10;
    double noise_amplitude = 0.03;
    std::array<double, 2> fg_frac_bounds{0.02, 0.15};
    std::vector<DomainTransform> domains{DomainTransform{}};
    /// Shared geometry reuses one stroke set across domains (for domain
    /// discrepancy analysis); otherwise every domain gets fresh geometry.
    bool shared_geometry = false;
    std::array<double, 3> split_fractions{1.0, 0.0, 0.0};  // train, val, test
    std::uint64_t seed = 1;
    std::string out_dir;

    void validate() const;
};

/// One generated sample before any domain transform.
struct SynthSample {
    Tensor image;  // {1, S, S}
    Tensor mask;   // {S, S}
};

/// Draws background + strokes; retries until the stroke fraction lands in
/// fg_frac_bounds.
SynthSample generate_synth_sample(const SynthConfig& cfg, Rng& rng);

/// Applies a photometric domain shift (geometry untouched).
Tensor apply_domain_transform(const Tensor& image, const DomainTransform& t);

/// Writes PNGs plus a manifest under cfg.out_dir; returns the manifest path.
std::string generate_synthetic(const SynthConfig& cfg);

}  // namespace fmseg

#endif
