#include "fmseg/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "fmseg/checkpoint.hpp"
#include "fmseg/config.hpp"
#include "fmseg/data.hpp"
#include "fmseg/discrepancy.hpp"
#include "fmseg/fmaug.hpp"
#include "fmseg/frequency.hpp"
#include "fmseg/trainer.hpp"

namespace fmseg {

namespace {

namespace fs = std::filesystem;

struct CommonArgs {
    std::string config_file;
    std::string preset;
    std::vector<std::string> overrides;  // key=value pairs from --set
    std::string out_dir;
};

RunConfig assemble_config(const CommonArgs& args) {
    RunConfig cfg;
    if (!args.preset.empty()) cfg.apply_preset(args.preset);
    if (!args.config_file.empty()) cfg.apply_file(args.config_file);
    for (const std::string& kv : args.overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        cfg.apply_kv(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

void prepare_out_dir(const std::string& out) {
    if (out.empty()) throw std::invalid_argument("--out is required");
    fs::create_directories(out);
}

/// Signed tensors are saved for inspection by mapping [lo, hi] affinely
/// onto [0, 255]; the mapping is recorded in the dump manifest.
std::pair<real, real> save_signed_png(const std::string& path, const Tensor& t) {
    real lo = t[0], hi = t[0];
    for (std::size_t i = 0; i < t.size(); ++i) {
        lo = std::min(lo, t[i]);
        hi = std::max(hi, t[i]);
    }
    const real span = hi > lo ? hi - lo : 1.0;
    Image img(t.dim(0), t.dim(1), t.dim(2));
    for (std::size_t i = 0; i < t.size(); ++i) img.pixels[i] = (t[i] - lo) / span;
    save_png(path, img);
    return {lo, hi};
}

int detect_channels(const Dataset& ds) {
    if (ds.records.empty()) throw std::invalid_argument("dataset is empty");
    const std::size_t c = ds.records.front().image.dim(0);
    for (const DatasetRecord& r : ds.records)
        if (r.image.dim(0) != c)
            throw std::invalid_argument("dataset mixes channel counts; split it per modality");
    return static_cast<int>(c);
}

// ---------------------------------------------------------------------------

int cmd_synth(const CommonArgs& common) {
    RunConfig cfg = assemble_config(common);
    cfg.synth.out_dir = common.out_dir;
    cfg.synth.validate();
    prepare_out_dir(common.out_dir);

    const std::string manifest = generate_synthetic(cfg.synth);
    cfg.write_resolved((fs::path(common.out_dir) / "resolved.cfg").string());
    std::cout << "manifest: " << manifest << "\n";
    std::cout << "images: " << cfg.synth.count * static_cast<int>(cfg.synth.domains.size())
              << "\n";
    return 0;
}

int cmd_augment(const CommonArgs& common, const std::string& manifest_path) {
    RunConfig cfg = assemble_config(common);
    cfg.finalize();
    prepare_out_dir(common.out_dir);

    const Dataset ds = load_dataset(manifest_path, cfg.train.image_size);
    if (ds.records.empty()) throw std::invalid_argument("augment: dataset is empty");

    const int n_views = cfg.train.num_views;
    Rng rng(cfg.train.seed);
    std::ofstream dump((fs::path(common.out_dir) / "dump_manifest.tsv").string());
    dump << "file\tkind\timage_id\tdetail\tlo\thi\n";
    char buf[512];

    for (const DatasetRecord& rec : ds.records) {
        const std::vector<GaussianParams> params = sample_view_params(rng, n_views);
        const std::vector<FrequencyView> bank =
            extract_view_bank(Image(rec.image), kAnchorParams, params);

        auto emit = [&](const Tensor& t, const std::string& name, const char* kind,
                        const std::string& detail) {
            const fs::path p = fs::path(common.out_dir) / name;
            auto [lo, hi] = save_signed_png(p.string(), t);
            std::snprintf(buf, sizeof(buf), "%s\t%s\t%s\t%s\t%.17g\t%.17g\n", name.c_str(), kind,
                          rec.id.c_str(), detail.c_str(), lo, hi);
            dump << buf;
        };

        emit(bank[0].pixels, rec.id + "_x0.png", "anchor", "r=27 sigma=9");
        for (int n = 1; n <= n_views; ++n) {
            std::snprintf(buf, sizeof(buf), "r=%d sigma=%.4f", bank[static_cast<std::size_t>(n)].params.radius,
                          bank[static_cast<std::size_t>(n)].params.sigma);
            emit(bank[static_cast<std::size_t>(n)].pixels,
                 rec.id + "_view" + std::to_string(n) + ".png", "view", buf);
        }
        for (const ViewPair& pr : enumerate_pairs(n_views)) {
            MixMask mm = generate_mix_mask(rng, rec.image.dim(1), rec.image.dim(2),
                                           cfg.train.patch_law);
            Tensor mixed = mix_views(bank[static_cast<std::size_t>(pr.i)],
                                     bank[static_cast<std::size_t>(pr.j)], mm);
            std::snprintf(buf, sizeof(buf), "i=%d j=%d coverage=%.4f", pr.i, pr.j, mm.coverage);
            emit(mixed, rec.id + "_mix" + std::to_string(pr.k) + ".png", "mix", buf);
        }
    }
    cfg.write_resolved((fs::path(common.out_dir) / "resolved.cfg").string());
    std::cout << "augmented " << ds.records.size() << " images ("
              << 1 + n_views + n_views * (n_views - 1) << " files each)\n";
    return 0;
}

int cmd_train(const CommonArgs& common, const std::string& manifest_path,
              const std::string& resume_path) {
    RunConfig cfg = assemble_config(common);
    cfg.finalize();
    prepare_out_dir(common.out_dir);

    Dataset ds = load_dataset(manifest_path, cfg.train.image_size);
    cfg.model.in_channels = detect_channels(ds);

    std::vector<const DatasetRecord*> train_split = ds.split("train");
    std::vector<const DatasetRecord*> val_split = ds.split("val");
    if (train_split.empty()) throw std::invalid_argument("train: no records in the train split");
    if (val_split.empty()) {
        std::cout << "note: empty val split, validating on the training images\n";
        val_split = train_split;
    }

    std::optional<Checkpoint> resume;
    if (!resume_path.empty()) {
        resume = load_checkpoint(resume_path);
        if (!(resume->model == cfg.model))
            throw std::invalid_argument("train: resume checkpoint architecture differs from config");
    }

    CoupledNetwork net(cfg.model);
    if (!resume) net.init_params(cfg.train.seed);

    const fs::path out(common.out_dir);
    cfg.write_resolved((out / "resolved.cfg").string());

    std::ofstream log((out / "train_log.tsv").string(),
                      resume ? std::ios::app : std::ios::trunc);
    if (!resume) log << "epoch\tlr\tl_sel\tl_seg\tl_total\tval_dice\tval_mcc\n";

    FitResult result = fit(net, train_split, val_split, cfg.train,
                           resume ? &*resume : nullptr, &log);

    // keep the better of the new best and any previous best on disk
    const std::string best_path = (out / "checkpoint_best.ckpt").string();
    bool write_best = true;
    if (resume && fs::exists(best_path)) {
        Checkpoint prev = load_checkpoint(best_path);
        if (prev.val_dice >= result.best.val_dice) write_best = false;
    }
    if (write_best) save_checkpoint(best_path, result.best);
    save_checkpoint((out / "checkpoint_last.ckpt").string(), result.last);

    std::cout << "epochs run: " << result.history.size() << "\n";
    std::cout << "best epoch: " << result.best.epoch << " val_dice "
              << result.best.val_dice << " val_mcc " << result.best.val_mcc << "\n";
    std::cout << "checkpoints: " << best_path << "\n";
    return 0;
}

int cmd_eval(const CommonArgs& common, const std::string& manifest_path,
             const std::string& checkpoint_path, const std::string& split) {
    RunConfig cfg = assemble_config(common);
    prepare_out_dir(common.out_dir);
    if (checkpoint_path.empty()) throw std::invalid_argument("--checkpoint is required");

    Checkpoint ckpt = load_checkpoint(checkpoint_path);
    CoupledNetwork net(ckpt.model);
    restore_parameters(ckpt, net);

    Dataset ds = load_dataset(manifest_path, ckpt.model.image_size);
    std::vector<const DatasetRecord*> records = ds.split(split);
    if (records.empty())
        throw std::invalid_argument("eval: split '" + split + "' is empty");

    EvalReport report = evaluate(net, records);
    const fs::path out(common.out_dir);
    std::ofstream rf((out / "eval_report.tsv").string());
    write_eval_report(rf, report);
    cfg.write_resolved((out / "resolved.cfg").string());

    std::printf("%zu images, macro dice %.6f, macro mcc %.6f\n", report.per_image.size(),
                report.macro_dice, report.macro_mcc);
    return 0;
}

int cmd_analyze(const CommonArgs& common, const std::string& manifest_path,
                const std::string& embedder_id, bool write_projection) {
    RunConfig cfg = assemble_config(common);
    cfg.finalize();
    prepare_out_dir(common.out_dir);

    Dataset ds = load_dataset(manifest_path, cfg.train.image_size);
    if (ds.domains().size() < 2)
        throw std::invalid_argument("analyze: need at least 2 domains in the manifest");

    std::unique_ptr<Embedder> embedder = make_embedder(embedder_id);
    Rng rng(cfg.train.seed);
    HypothesisVerdict verdict = hypothesis_check(ds, kAnchorParams, rng, *embedder);

    const fs::path out(common.out_dir);
    std::ofstream vf((out / "analysis.tsv").string());
    write_verdict(vf, verdict);
    cfg.write_resolved((out / "resolved.cfg").string());

    if (write_projection) {
        auto dump_proj = [&](const EmbeddingSet& set, const std::string& name) {
            std::ofstream pf((out / ("projection_" + name + ".tsv")).string());
            pf << "domain\tx\ty\n";
            const auto coords = project_2d(set);
            for (std::size_t i = 0; i < coords.size(); ++i)
                pf << set.domain_labels[i] << '\t' << coords[i][0] << '\t' << coords[i][1]
                   << '\n';
        };
        dump_proj(verdict.raw_embeddings, "raw");
        dump_proj(verdict.uniform_embeddings, "uniform_hp");
        dump_proj(verdict.discriminative_embeddings, "discriminative_hp");
    }

    std::cout << "h1_inter_decreased: " << (verdict.h1_inter_decreased ? "yes" : "no")
              << " (ratio " << verdict.h1_inter_ratio << ")\n";
    std::cout << "h2_inner_increased: " << (verdict.h2_inner_increased ? "yes" : "no")
              << " (ratio " << verdict.h2_inner_ratio << ")\n";
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Frequency-mixed augmentation toolkit for binary segmentation"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string manifest, resume_path, checkpoint_path, split = "test";
    std::string embedder_id = "handcrafted-v1";
    bool write_projection = false;
    std::optional<int> domains_flag, count_flag, views_flag, epochs_flag, size_flag;
    std::optional<std::uint64_t> seed_flag;
    bool shared_geometry = false;
    bool no_fmaug = false, no_ssl = false, no_att = false;

    auto add_common = [&](CLI::App* sub, bool needs_out = true) {
        sub->add_option("--config", common.config_file, "key = value configuration file");
        sub->add_option("--preset", common.preset, "desk or paper");
        sub->add_option("--set", common.overrides, "override a config key (key=value)");
        auto* out = sub->add_option("--out", common.out_dir, "output directory");
        if (needs_out) out->required();
        sub->add_option("--seed", seed_flag, "random seed");
        sub->add_option("--size", size_flag, "working image size");
    };

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    add_common(synth);
    synth->add_option("--domains", domains_flag, "number of synthetic domains");
    synth->add_option("--count", count_flag, "images per domain");
    synth->add_flag("--shared-geometry", shared_geometry,
                    "same stroke geometry across domains");

    CLI::App* augment = app.add_subcommand("augment", "dump frequency views and mixed samples");
    add_common(augment);
    augment->add_option("--manifest", manifest, "dataset manifest")->required();
    augment->add_option("--views", views_flag, "perturbed views per image (N)");

    CLI::App* train = app.add_subcommand("train", "train the coupled network");
    add_common(train);
    train->add_option("--manifest", manifest, "dataset manifest")->required();
    train->add_option("--epochs", epochs_flag, "override total epochs (keeps the 40/60 split)");
    train->add_option("--resume", resume_path, "checkpoint to resume from");
    train->add_flag("--no-fmaug", no_fmaug, "disable frequency-mixed augmentation");
    train->add_flag("--no-ssl", no_ssl, "drop the reconstruction objective");
    train->add_flag("--no-att", no_att, "disable the attention coupling");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a manifest split");
    add_common(eval);
    eval->add_option("--manifest", manifest, "dataset manifest")->required();
    eval->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
    eval->add_option("--split", split, "train, val or test (default test)");

    CLI::App* analyze = app.add_subcommand("analyze", "frequency-vs-discrepancy analysis");
    add_common(analyze);
    analyze->add_option("--manifest", manifest, "multi-domain manifest")->required();
    analyze->add_option("--embedder", embedder_id, "embedder id");
    analyze->add_flag("--proj", write_projection, "write 2-D projections per condition");

    try {
        app.parse(argc, argv);

        // fold simple flags into config overrides (flags win over files)
        if (seed_flag) {
            common.overrides.push_back("train.seed=" + std::to_string(*seed_flag));
            common.overrides.push_back("synth.seed=" + std::to_string(*seed_flag));
        }
        if (size_flag) {
            common.overrides.push_back("train.image_size=" + std::to_string(*size_flag));
            common.overrides.push_back("synth.image_size=" + std::to_string(*size_flag));
        }
        if (domains_flag)
            common.overrides.push_back("synth.domains=" + std::to_string(*domains_flag));
        if (count_flag) common.overrides.push_back("synth.count=" + std::to_string(*count_flag));
        if (shared_geometry) common.overrides.push_back("synth.shared_geometry=true");
        if (views_flag)
            common.overrides.push_back("train.num_views=" + std::to_string(*views_flag));
        if (epochs_flag) {
            const int total = *epochs_flag;
            const int warm = static_cast<int>(std::lround(0.4 * total));
            common.overrides.push_back("train.total_epochs=" + std::to_string(total));
            common.overrides.push_back("train.warm_epochs=" + std::to_string(warm));
            common.overrides.push_back("train.decay_epochs=" + std::to_string(total - warm));
        }
        if (no_fmaug) common.overrides.push_back("train.use_fmaug=false");
        if (no_ssl) common.overrides.push_back("train.use_ssl=false");
        if (no_att) common.overrides.push_back("train.use_att=false");

        if (synth->parsed()) return cmd_synth(common);
        if (augment->parsed()) return cmd_augment(common, manifest);
        if (train->parsed()) return cmd_train(common, manifest, resume_path);
        if (eval->parsed()) return cmd_eval(common, manifest, checkpoint_path, split);
        if (analyze->parsed()) return cmd_analyze(common, manifest, embedder_id, write_projection);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace fmseg
