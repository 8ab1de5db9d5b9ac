#include "fmseg/discrepancy.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace fmseg {

std::vector<real> HandcraftedEmbedder::embed(const Tensor& pixels) const {
    if (pixels.rank() != 3) throw std::invalid_argument("embed: rank 3 pixels expected");
    const std::size_t c = pixels.dim(0), h = pixels.dim(1), w = pixels.dim(2);

    // channel-mean grayscale
    Tensor gray({1, h, w});
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            real s = 0.0;
            for (std::size_t ch = 0; ch < c; ++ch) s += pixels.at(ch, y, x);
            gray.at(0, y, x) = s / static_cast<real>(c);
        }
    }

    std::vector<real> out;
    out.reserve(256 + 32);
    Tensor small = resize_bilinear(gray, 16, 16);
    for (std::size_t i = 0; i < small.size(); ++i) out.push_back(small[i]);

    // gradient-magnitude histogram, central differences, fixed binning
    // over [0, 2] so raw images and signed residuals share the scale
    std::array<real, 32> hist{};
    std::size_t samples = 0;
    for (std::size_t y = 1; y + 1 < h; ++y) {
        for (std::size_t x = 1; x + 1 < w; ++x) {
            const real gx = (gray.at(0, y, x + 1) - gray.at(0, y, x - 1)) / 2.0;
            const real gy = (gray.at(0, y + 1, x) - gray.at(0, y - 1, x)) / 2.0;
            const real mag = std::sqrt(gx * gx + gy * gy);
            auto bin = static_cast<std::size_t>(mag / 2.0 * 32.0);
            hist[std::min<std::size_t>(bin, 31)] += 1.0;
            ++samples;
        }
    }
    for (real v : hist) out.push_back(samples > 0 ? v / static_cast<real>(samples) : 0.0);
    return out;
}

std::unique_ptr<Embedder> make_embedder(const std::string& id) {
    if (id == "handcrafted-v1" || id == "default") return std::make_unique<HandcraftedEmbedder>();
    throw std::invalid_argument("make_embedder: unknown embedder id '" + id + "'");
}

EmbeddingSet embed_images(const std::vector<Tensor>& images,
                          const std::vector<std::string>& domain_labels,
                          const Embedder& embedder) {
    if (images.empty()) throw std::invalid_argument("embed_images: empty image list");
    if (images.size() != domain_labels.size())
        throw std::invalid_argument("embed_images: label count mismatch");

    EmbeddingSet set;
    set.embedder_id = embedder.id();
    set.domain_labels = domain_labels;
    set.vectors.reserve(images.size());
    for (const Tensor& img : images) set.vectors.push_back(embedder.embed(img));

    const std::size_t dim = set.vectors.front().size();
    for (const auto& v : set.vectors)
        if (v.size() != dim) throw std::runtime_error("embed_images: inconsistent dimensions");

    // per-coordinate standardization across the set
    const real n = static_cast<real>(set.vectors.size());
    for (std::size_t d = 0; d < dim; ++d) {
        real mu = 0.0;
        for (const auto& v : set.vectors) mu += v[d];
        mu /= n;
        real var = 0.0;
        for (const auto& v : set.vectors) var += (v[d] - mu) * (v[d] - mu);
        var /= n;
        const real sd = std::sqrt(var);
        for (auto& v : set.vectors) v[d] = sd > 0.0 ? (v[d] - mu) / sd : 0.0;
    }
    return set;
}

namespace {

real euclidean(const std::vector<real>& a, const std::vector<real>& b) {
    real s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace

real DispersionReport::mean_inner() const {
    real s = 0.0;
    std::size_t n = 0;
    for (const auto& [domain, value] : inner_dispersion) {
        if (value) {
            s += *value;
            ++n;
        }
    }
    return n > 0 ? s / static_cast<real>(n) : 0.0;
}

real DispersionReport::mean_inter() const {
    real s = 0.0;
    for (const auto& [key, value] : inter_distance) s += value;
    return inter_distance.empty() ? 0.0 : s / static_cast<real>(inter_distance.size());
}

DispersionReport dispersion_stats(const EmbeddingSet& embeddings,
                                  const std::string& condition_id) {
    DispersionReport report;
    report.condition_id = condition_id;

    std::vector<std::string> domains;
    for (const std::string& d : embeddings.domain_labels)
        if (std::find(domains.begin(), domains.end(), d) == domains.end()) domains.push_back(d);

    std::map<std::string, std::vector<const std::vector<real>*>> grouped;
    for (std::size_t i = 0; i < embeddings.vectors.size(); ++i)
        grouped[embeddings.domain_labels[i]].push_back(&embeddings.vectors[i]);

    std::map<std::string, std::vector<real>> centroids;
    for (const std::string& d : domains) {
        const auto& members = grouped[d];
        // centroid
        std::vector<real> centroid(embeddings.vectors.front().size(), 0.0);
        for (const auto* v : members)
            for (std::size_t k = 0; k < centroid.size(); ++k) centroid[k] += (*v)[k];
        for (real& x : centroid) x /= static_cast<real>(members.size());
        centroids[d] = std::move(centroid);

        if (members.size() < 2) {
            report.inner_dispersion[d] = std::nullopt;
            continue;
        }
        real s = 0.0;
        std::size_t pairs = 0;
        for (std::size_t a = 0; a < members.size(); ++a)
            for (std::size_t b = a + 1; b < members.size(); ++b) {
                s += euclidean(*members[a], *members[b]);
                ++pairs;
            }
        report.inner_dispersion[d] = s / static_cast<real>(pairs);
    }

    for (std::size_t a = 0; a < domains.size(); ++a)
        for (std::size_t b = a + 1; b < domains.size(); ++b)
            report.inter_distance[domains[a] + "|" + domains[b]] =
                euclidean(centroids[domains[a]], centroids[domains[b]]);
    return report;
}

HypothesisVerdict hypothesis_check(const std::vector<Tensor>& images,
                                   const std::vector<std::string>& domain_labels,
                                   const GaussianParams& anchor, Rng& rng,
                                   const Embedder& embedder) {
    if (images.size() < 2) throw std::invalid_argument("hypothesis_check: need >= 2 images");

    std::vector<Tensor> uniform_views, disc_views;
    uniform_views.reserve(images.size());
    disc_views.reserve(images.size());
    for (const Tensor& img : images) {
        uniform_views.push_back(img - gaussian_blur(img, anchor));
        GaussianParams p;
        p.radius = rng.uniform_int(kRadiusMin, kRadiusMax);
        p.sigma = rng.uniform(kSigmaMin, kSigmaMax);
        disc_views.push_back(img - gaussian_blur(img, p));
    }

    HypothesisVerdict v;
    v.raw_embeddings = embed_images(images, domain_labels, embedder);
    v.uniform_embeddings = embed_images(uniform_views, domain_labels, embedder);
    v.discriminative_embeddings = embed_images(disc_views, domain_labels, embedder);
    v.raw = dispersion_stats(v.raw_embeddings, "raw");
    v.uniform = dispersion_stats(v.uniform_embeddings, "uniform_hp");
    v.discriminative = dispersion_stats(v.discriminative_embeddings, "discriminative_hp");

    const real raw_inter = v.raw.mean_inter();
    const real uni_inter = v.uniform.mean_inter();
    const real raw_inner = v.raw.mean_inner();
    const real uni_inner = v.uniform.mean_inner();
    const real disc_inner = v.discriminative.mean_inner();

    v.h1_inter_decreased = uni_inter < raw_inter;
    v.h1_inner_decreased = uni_inner < raw_inner;
    v.h2_inner_increased = disc_inner > uni_inner;
    v.h1_inter_ratio = raw_inter > 0.0 ? uni_inter / raw_inter : 1.0;
    v.h2_inner_ratio = uni_inner > 0.0 ? disc_inner / uni_inner : 1.0;
    return v;
}

HypothesisVerdict hypothesis_check(const Dataset& dataset, const GaussianParams& anchor,
                                   Rng& rng, const Embedder& embedder) {
    std::vector<Tensor> images;
    std::vector<std::string> labels;
    images.reserve(dataset.records.size());
    for (const DatasetRecord& r : dataset.records) {
        images.push_back(r.image);
        labels.push_back(r.domain);
    }
    if (dataset.domains().size() < 2)
        throw std::invalid_argument("hypothesis_check: need at least 2 domains");
    return hypothesis_check(images, labels, anchor, rng, embedder);
}

std::vector<std::array<real, 2>> project_2d(const EmbeddingSet& embeddings) {
    const std::size_t n = embeddings.vectors.size();
    const std::size_t dim = embeddings.vectors.front().size();
    Eigen::MatrixXd x(n, dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < dim; ++d) x(static_cast<Eigen::Index>(i),
                                                static_cast<Eigen::Index>(d)) =
            embeddings.vectors[i][d];
    Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    Eigen::MatrixXd cov = (x.transpose() * x) / std::max<double>(1.0, static_cast<double>(n - 1));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    // principal axes live in the last two columns (ascending eigenvalues)
    Eigen::MatrixXd axes = solver.eigenvectors().rightCols(2).rowwise().reverse();
    Eigen::MatrixXd proj = x * axes;
    std::vector<std::array<real, 2>> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = {proj(static_cast<Eigen::Index>(i), 0), proj(static_cast<Eigen::Index>(i), 1)};
    return out;
}

namespace {

void write_report(std::ostream& out, const DispersionReport& r) {
    out << "condition\t" << r.condition_id << "\n";
    for (const auto& [domain, value] : r.inner_dispersion) {
        out << "inner\t" << domain << "\t";
        if (value)
            out << *value;
        else
            out << "absent";
        out << "\n";
    }
    for (const auto& [key, value] : r.inter_distance)
        out << "inter\t" << key << "\t" << value << "\n";
}

}  // namespace

void write_verdict(std::ostream& out, const HypothesisVerdict& v) {
    write_report(out, v.raw);
    write_report(out, v.uniform);
    write_report(out, v.discriminative);
    out << "h1_inter_decreased\t" << (v.h1_inter_decreased ? "yes" : "no") << "\n";
    out << "h1_inter_ratio\t" << v.h1_inter_ratio << "\n";
    out << "h1_inner_decreased\t" << (v.h1_inner_decreased ? "yes" : "no") << "\n";
    out << "h2_inner_increased\t" << (v.h2_inner_increased ? "yes" : "no") << "\n";
    out << "h2_inner_ratio\t" << v.h2_inner_ratio << "\n";
    out << "real_data_claim\t" << v.real_data_claim << "\n";
}

}  // namespace fmseg
