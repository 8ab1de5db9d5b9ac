#include "fmseg/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "fmseg/frequency.hpp"

namespace fmseg {

namespace fs = std::filesystem;

DatasetManifest DatasetManifest::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("manifest: cannot open: " + path);
    const fs::path base = fs::path(path).parent_path();

    DatasetManifest m;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t')) fields.push_back(field);
        if (fields.size() != 4)
            throw std::runtime_error("manifest: line " + std::to_string(lineno) +
                                     ": expected 4 tab-separated fields");
        ManifestRecord r;
        r.image_path = (base / fields[0]).lexically_normal().string();
        r.mask_path = (base / fields[1]).lexically_normal().string();
        r.split = fields[2];
        r.domain = fields[3];
        if (r.split != "train" && r.split != "val" && r.split != "test")
            throw std::runtime_error("manifest: line " + std::to_string(lineno) +
                                     ": unknown split '" + r.split + "'");
        m.records.push_back(std::move(r));
    }
    return m;
}

void DatasetManifest::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("manifest: cannot write: " + path);
    for (const ManifestRecord& r : records)
        out << r.image_path << '\t' << r.mask_path << '\t' << r.split << '\t' << r.domain << '\n';
}

std::vector<const DatasetRecord*> Dataset::split(const std::string& name) const {
    std::vector<const DatasetRecord*> out;
    for (const DatasetRecord& r : records)
        if (r.split == name) out.push_back(&r);
    return out;
}

std::vector<std::string> Dataset::domains() const {
    std::vector<std::string> out;
    for (const DatasetRecord& r : records)
        if (std::find(out.begin(), out.end(), r.domain) == out.end()) out.push_back(r.domain);
    return out;
}

Dataset load_dataset(const std::string& manifest_path, int image_size) {
    if (image_size < 1) throw std::invalid_argument("load_dataset: bad image size");
    const DatasetManifest manifest = DatasetManifest::load(manifest_path);

    Dataset ds;
    ds.records.reserve(manifest.records.size());
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        const ManifestRecord& r = manifest.records[i];
        try {
            DatasetRecord rec;
            Image img = load_png(r.image_path);
            rec.image = resize_bilinear(img.pixels, static_cast<std::size_t>(image_size),
                                        static_cast<std::size_t>(image_size));
            Tensor mask = load_mask_png(r.mask_path);
            mask = resize_nearest(mask, static_cast<std::size_t>(image_size),
                                  static_cast<std::size_t>(image_size));
            for (std::size_t p = 0; p < mask.size(); ++p) mask[p] = mask[p] >= 0.5 ? 1.0 : 0.0;
            rec.mask = std::move(mask);
            rec.id = fs::path(r.image_path).stem().string();
            rec.split = r.split;
            rec.domain = r.domain;
            ds.records.push_back(std::move(rec));
        } catch (const std::exception& e) {
            throw std::runtime_error("load_dataset: record " + std::to_string(i) + ": " +
                                     e.what());
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Synthetic curvilinear-structure generator
// ---------------------------------------------------------------------------

DomainTransform default_domain_transform(int index) {
    switch (index) {
        case 0: return {"A", 0.0, 1.0, 0.0};
        case 1: return {"B", 0.14, 0.82, 0.8};
        case 2: return {"C", -0.10, 1.20, 0.0};
        case 3: return {"D", 0.08, 0.90, 1.2};
        default: {
            DomainTransform t;
            t.id = "D" + std::to_string(index);
            t.brightness = 0.05 * static_cast<double>(index % 5);
            t.contrast = 1.0 - 0.04 * static_cast<double>(index % 4);
            return t;
        }
    }
}

void SynthConfig::validate() const {
    if (image_size < 16) throw std::invalid_argument("SynthConfig: image_size too small");
    if (count < 1) throw std::invalid_argument("SynthConfig: count must be >= 1");
    if (curves_range[0] < 1 || curves_range[1] < curves_range[0])
        throw std::invalid_argument("SynthConfig: bad curves range");
    if (thickness_range[0] < 1 || thickness_range[1] < thickness_range[0])
        throw std::invalid_argument("SynthConfig: bad thickness range");
    if (domains.empty()) throw std::invalid_argument("SynthConfig: at least one domain required");
    if (!(fg_frac_bounds[0] > 0.0) || fg_frac_bounds[1] <= fg_frac_bounds[0] ||
        fg_frac_bounds[1] >= 1.0)
        throw std::invalid_argument("SynthConfig: bad foreground bounds");
}

namespace {

Tensor synth_background(const SynthConfig& cfg, Rng& rng) {
    const std::size_t s = static_cast<std::size_t>(cfg.image_size);
    Tensor img({1, s, s});
    const real level = rng.uniform(0.50, 0.60);

    struct Wave {
        real fx, fy, phase, amp;
    };
    Wave waves[3];
    for (Wave& wv : waves) {
        wv.fx = static_cast<real>(rng.uniform_int(1, 3));
        wv.fy = static_cast<real>(rng.uniform_int(1, 3));
        wv.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        wv.amp = cfg.background_amplitude * rng.uniform(0.15, 0.33);
    }
    for (std::size_t y = 0; y < s; ++y) {
        for (std::size_t x = 0; x < s; ++x) {
            real v = level;
            for (const Wave& wv : waves)
                v += wv.amp * std::cos(2.0 * std::numbers::pi *
                                           (wv.fx * static_cast<real>(x) / static_cast<real>(s) +
                                            wv.fy * static_cast<real>(y) / static_cast<real>(s)) +
                                       wv.phase);
            img.at(0, y, x) = v;
        }
    }

    if (cfg.noise_amplitude > 0.0) {
        Tensor noise({1, s, s});
        for (std::size_t i = 0; i < noise.size(); ++i)
            noise[i] = rng.uniform(-1.0, 1.0) * cfg.noise_amplitude;
        img += gaussian_blur(noise, GaussianParams{2, 1.0});
    }
    return img;
}

void stamp_disk(Tensor& mask, real cy, real cx, real radius) {
    const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(mask.dim(0));
    const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(mask.dim(1));
    const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(std::ceil(radius));
    const std::ptrdiff_t y0 = static_cast<std::ptrdiff_t>(std::floor(cy));
    const std::ptrdiff_t x0 = static_cast<std::ptrdiff_t>(std::floor(cx));
    for (std::ptrdiff_t y = y0 - r; y <= y0 + r; ++y) {
        if (y < 0 || y >= h) continue;
        for (std::ptrdiff_t x = x0 - r; x <= x0 + r; ++x) {
            if (x < 0 || x >= w) continue;
            const real dy = static_cast<real>(y) + 0.5 - cy;
            const real dx = static_cast<real>(x) + 0.5 - cx;
            if (dy * dy + dx * dx <= radius * radius) mask.at(y, x) = 1.0;
        }
    }
}

Tensor synth_strokes(const SynthConfig& cfg, Rng& rng) {
    const std::size_t s = static_cast<std::size_t>(cfg.image_size);
    Tensor mask({s, s}, 0.0);
    const int curves = rng.uniform_int(cfg.curves_range[0], cfg.curves_range[1]);
    const real lo = 0.08 * static_cast<real>(s), hi = 0.92 * static_cast<real>(s);
    for (int c = 0; c < curves; ++c) {
        // quadratic Bezier with random control points
        const real p0y = rng.uniform(lo, hi), p0x = rng.uniform(lo, hi);
        const real p1y = rng.uniform(lo, hi), p1x = rng.uniform(lo, hi);
        const real p2y = rng.uniform(lo, hi), p2x = rng.uniform(lo, hi);
        const int thickness = rng.uniform_int(cfg.thickness_range[0], cfg.thickness_range[1]);
        const real radius = static_cast<real>(thickness) / 2.0;
        const int steps = 3 * cfg.image_size;
        for (int t = 0; t <= steps; ++t) {
            const real u = static_cast<real>(t) / static_cast<real>(steps);
            const real a = (1.0 - u) * (1.0 - u), b = 2.0 * u * (1.0 - u), d = u * u;
            stamp_disk(mask, a * p0y + b * p1y + d * p2y, a * p0x + b * p1x + d * p2x, radius);
        }
    }
    return mask;
}

}  // namespace

SynthSample generate_synth_sample(const SynthConfig& cfg, Rng& rng) {
    cfg.validate();
    const std::size_t s = static_cast<std::size_t>(cfg.image_size);
    const real total = static_cast<real>(s * s);

    for (int attempt = 0; attempt < 200; ++attempt) {
        Tensor mask = synth_strokes(cfg, rng);
        real fg = 0.0;
        for (std::size_t i = 0; i < mask.size(); ++i) fg += mask[i];
        fg /= total;
        if (fg < cfg.fg_frac_bounds[0] || fg > cfg.fg_frac_bounds[1]) continue;

        SynthSample out;
        out.image = synth_background(cfg, rng);
        const real depth = rng.uniform(0.22, 0.38);
        for (std::size_t y = 0; y < s; ++y)
            for (std::size_t x = 0; x < s; ++x)
                if (mask.at(y, x) == 1.0) out.image.at(0, y, x) -= depth;
        for (std::size_t i = 0; i < out.image.size(); ++i)
            out.image[i] = std::clamp(out.image[i], 0.0, 1.0);
        out.mask = std::move(mask);
        return out;
    }
    throw std::runtime_error(
        "generate_synth_sample: could not hit foreground bounds; widen fg_frac_bounds "
        "or the curve/thickness ranges");
}

Tensor apply_domain_transform(const Tensor& image, const DomainTransform& t) {
    Tensor out = image;
    if (t.blur_sigma > 0.0) {
        GaussianParams p{std::max(1, static_cast<int>(std::ceil(2.0 * t.blur_sigma))),
                         t.blur_sigma};
        out = gaussian_blur(out, p);
    }
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::clamp(t.contrast * (out[i] - 0.5) + 0.5 + t.brightness, 0.0, 1.0);
    return out;
}

std::string generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    if (cfg.out_dir.empty()) throw std::invalid_argument("generate_synthetic: out_dir unset");
    const fs::path root(cfg.out_dir);
    fs::create_directories(root / "images");
    fs::create_directories(root / "masks");

    auto split_of = [&](int index) {
        const int n_train = static_cast<int>(std::lround(cfg.split_fractions[0] * cfg.count));
        const int n_val = static_cast<int>(std::lround(cfg.split_fractions[1] * cfg.count));
        if (index < n_train) return std::string("train");
        if (index < n_train + n_val) return std::string("val");
        return std::string("test");
    };

    Rng rng(cfg.seed);
    DatasetManifest manifest;

    if (cfg.shared_geometry) {
        for (int i = 0; i < cfg.count; ++i) {
            SynthSample base = generate_synth_sample(cfg, rng);
            char mask_name[64];
            std::snprintf(mask_name, sizeof(mask_name), "masks/geo_%04d.png", i);
            save_mask_png((root / mask_name).string(), base.mask);
            for (const DomainTransform& dom : cfg.domains) {
                Image img(apply_domain_transform(base.image, dom));
                char img_name[64];
                std::snprintf(img_name, sizeof(img_name), "images/%s_%04d.png", dom.id.c_str(), i);
                save_png((root / img_name).string(), img);
                manifest.records.push_back({img_name, mask_name, split_of(i), dom.id});
            }
        }
    } else {
        for (const DomainTransform& dom : cfg.domains) {
            for (int i = 0; i < cfg.count; ++i) {
                SynthSample base = generate_synth_sample(cfg, rng);
                char img_name[64], mask_name[64];
                std::snprintf(img_name, sizeof(img_name), "images/%s_%04d.png", dom.id.c_str(), i);
                std::snprintf(mask_name, sizeof(mask_name), "masks/%s_%04d.png", dom.id.c_str(), i);
                Image img(apply_domain_transform(base.image, dom));
                save_png((root / img_name).string(), img);
                save_mask_png((root / mask_name).string(), base.mask);
                manifest.records.push_back({img_name, mask_name, split_of(i), dom.id});
            }
        }
    }

    const std::string manifest_path = (root / "manifest.tsv").string();
    manifest.save(manifest_path);
    return manifest_path;
}

}  // namespace fmseg
