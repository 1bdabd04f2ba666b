// sosnet: lesion-centered image classification via sequential patch-set
// learning, plus dataset synthesis, metrics, and the reader-study stats.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sosnet/eval.hpp"
#include "sosnet/geometry.hpp"
#include "sosnet/imageio.hpp"
#include "sosnet/models.hpp"
#include "sosnet/stats.hpp"
#include "sosnet/synth.hpp"
#include "sosnet/train.hpp"

namespace {

std::string parent_dir(const std::string& path) {
    const std::filesystem::path p(path);
    const std::string dir = p.parent_path().string();
    return dir.empty() ? "." : dir;
}

struct CommonFlags {
    std::string config_path;
    std::string variant;
    long long seed = -1;  // -1: keep config/default
    int threads = 1;
};

sosnet::TrainConfig resolve_train_config(const CommonFlags& flags) {
    sosnet::TrainConfig cfg;
    if (!flags.config_path.empty()) cfg = sosnet::load_train_config(flags.config_path);
    if (!flags.variant.empty()) cfg.variant = sosnet::variant_from_name(flags.variant);
    if (flags.seed >= 0) cfg.seed = static_cast<std::uint64_t>(flags.seed);  // --seed overrides config
    cfg.threads = flags.threads;
    cfg.validate();
    return cfg;
}

int run_gen_data(const std::string& out_dir, const std::string& mode, int classes, int n_train,
                 int n_test, int size, int k_gen, double noise_sigma, long long seed, int threads) {
    sosnet::SynthConfig cfg;
    cfg.mode = sosnet::synth_mode_from_name(mode);
    cfg.classes = classes;
    cfg.n_train = n_train;
    cfg.n_test = n_test;
    cfg.image_size = size;
    cfg.k_gen = k_gen;
    cfg.noise_sigma = noise_sigma;
    cfg.seed = static_cast<std::uint64_t>(seed < 0 ? 1 : seed);
    sosnet::DatasetManifest manifest = sosnet::generate(cfg, out_dir, threads);
    std::printf("gen-data: wrote %zu train + %zu test images and manifest.json to %s\n",
                manifest.train.size(), manifest.test.size(), out_dir.c_str());
    return 0;
}

int run_train(const std::string& manifest_path, const CommonFlags& flags, const std::string& out_ckpt,
              std::string report_path) {
    const sosnet::TrainConfig cfg = resolve_train_config(flags);
    const sosnet::DatasetManifest manifest = sosnet::load_manifest(manifest_path);
    const sosnet::FitResult result = sosnet::fit(manifest, cfg, parent_dir(manifest_path));
    sosnet::save_checkpoint(result.params, out_ckpt);
    if (report_path.empty()) report_path = out_ckpt + ".report.csv";
    sosnet::write_train_report_csv(result.report, report_path);
    std::printf("train[%s]: %d epochs, final loss %.6f, train acc %.4f, %.1fs -> %s\n",
                sosnet::variant_name(cfg.variant), cfg.epochs, result.report.epoch_loss.back(),
                result.report.epoch_accuracy.back(), result.report.wall_seconds, out_ckpt.c_str());
    return 0;
}

int run_eval(const std::string& ckpt, const std::string& manifest_path, const std::string& report,
             const std::string& roc, const std::string& confusion, const std::string& embeddings,
             long long seed, int threads) {
    const sosnet::ModelParams params = sosnet::load_checkpoint(ckpt);
    const sosnet::DatasetManifest manifest = sosnet::load_manifest(manifest_path);
    if (static_cast<int>(manifest.classes.size()) != params.config.classes)
        throw std::runtime_error("eval: manifest has " + std::to_string(manifest.classes.size()) +
                                 " classes but checkpoint expects " + std::to_string(params.config.classes));
    const std::uint64_t s = static_cast<std::uint64_t>(seed < 0 ? 0 : seed);
    const std::string data_dir = parent_dir(manifest_path);
    const sosnet::EvalResult result = sosnet::evaluate(params, manifest.test, data_dir, s, threads);
    sosnet::write_report_csv(result, manifest.classes, report);
    const std::vector<sosnet::RocCurve> curves = sosnet::one_vs_rest_roc(result, params.config.classes);
    sosnet::write_roc_csv(curves, manifest.classes, roc);
    sosnet::write_confusion_csv(result, manifest.classes, confusion);
    if (!embeddings.empty())
        sosnet::export_embeddings_csv(params, manifest.test, data_dir, s, threads, embeddings);
    std::printf("eval[%s]: accuracy %.4f, macro AUC %.4f over %zu samples\n",
                sosnet::variant_name(params.config.variant), result.accuracy, sosnet::macro_auc(curves),
                result.truths.size());
    return 0;
}

int run_compare(const std::string& manifest_path, const CommonFlags& flags, const std::string& out_csv) {
    const sosnet::DatasetManifest manifest = sosnet::load_manifest(manifest_path);
    const std::string data_dir = parent_dir(manifest_path);

    std::ofstream out(out_csv, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open compare table for writing: " + out_csv);
    out << "variant,acc";
    for (std::size_t c = 0; c < manifest.classes.size(); ++c) out << ",recall_" << c;
    out << "\n";

    for (sosnet::VariantId v : {sosnet::VariantId::IMAGE, sosnet::VariantId::VOTE, sosnet::VariantId::ROP,
                                sosnet::VariantId::SOP, sosnet::VariantId::SOS}) {
        sosnet::TrainConfig cfg = resolve_train_config(flags);
        cfg.variant = v;
        const sosnet::FitResult fitres = sosnet::fit(manifest, cfg, data_dir);
        const sosnet::EvalResult ev = sosnet::evaluate(fitres.params, manifest.test, data_dir, cfg.seed,
                                                       cfg.threads);
        char buf[64];
        out << sosnet::variant_name(v);
        std::snprintf(buf, sizeof(buf), ",%.12g", ev.accuracy);
        out << buf;
        for (double r : ev.recalls) {
            std::snprintf(buf, sizeof(buf), ",%.12g", r);
            out << buf;
        }
        out << "\n";
        out.flush();
        std::printf("compare[%s]: test acc %.4f (train %.1fs)\n", sosnet::variant_name(v), ev.accuracy,
                    fitres.report.wall_seconds);
    }
    std::printf("compare: table written to %s\n", out_csv.c_str());
    return 0;
}

int run_stats(const std::string& readers_csv, const std::string& out_json) {
    const std::vector<sosnet::ReaderRecord> records = sosnet::read_reader_csv(readers_csv);
    const std::string report = sosnet::reader_study_report(records);
    std::ofstream out(out_json, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open stats report for writing: " + out_json);
    out << report;
    std::printf("stats: %zu reader records analyzed -> %s\n", records.size(), out_json.c_str());
    return 0;
}

int run_extract_patches(const std::string& manifest_path, long long index, int k, int side,
                        double arc_step, int n_min, const std::string& out_dir) {
    const sosnet::DatasetManifest manifest = sosnet::load_manifest(manifest_path);
    if (index < 0 || index >= static_cast<long long>(manifest.train.size()))
        throw std::runtime_error("extract-patches: train index " + std::to_string(index) +
                                 " out of range (train split has " + std::to_string(manifest.train.size()) +
                                 " entries)");
    const auto samples = sosnet::load_split({manifest.train[static_cast<std::size_t>(index)]},
                                            parent_dir(manifest_path));
    sosnet::SampleConfig scfg;
    scfg.side = side;
    scfg.arc_step = arc_step > 0.0 ? arc_step : side / 2.0;
    scfg.n_min = n_min;
    const sosnet::PatchSequence seq =
        sosnet::build_sequence(samples[0].image, samples[0].annotation, scfg, k, sosnet::SequenceMode::SOS);

    std::filesystem::create_directories(out_dir);
    std::ofstream csv(out_dir + "/layout.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot open layout.csv for writing in " + out_dir);
    csv << "set_index,angle,cx,cy\n";
    std::size_t dumped = 0;
    for (const auto& set : seq.sets) {
        std::size_t j = 0;
        for (const sosnet::Patch& patch : set) {
            sosnet::Image img;
            img.width = patch.side;
            img.height = patch.side;
            img.channels = static_cast<int>(patch.data.shape[2]);
            img.pixels.resize(patch.data.size());
            for (std::size_t i = 0; i < patch.data.size(); ++i)
                img.pixels[i] = static_cast<std::uint8_t>(std::llround(patch.data[i] * 255.0));
            char name[64];
            std::snprintf(name, sizeof(name), "patch_s%d_%03zu.%s", patch.set_index, j,
                          img.channels == 3 ? "ppm" : "pgm");
            sosnet::write_image(img, out_dir + "/" + name);
            char row[128];
            std::snprintf(row, sizeof(row), "%d,%.12g,%.12g,%.12g\n", patch.set_index, patch.angle, patch.cx,
                          patch.cy);
            csv << row;
            ++j;
            ++dumped;
        }
    }
    std::printf("extract-patches: wrote %zu patches + layout.csv to %s\n", dumped, out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sequential patch-set lesion classifier"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic lesion dataset");
    std::string gen_out, gen_mode = "radial-permutation";
    int gen_classes = 4, gen_train = 400, gen_test = 200, gen_size = 256, gen_kgen = 3, gen_threads = 1;
    double gen_sigma = 0.05;
    long long gen_seed = 1;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--mode", gen_mode, "radial-permutation|profile");
    gen->add_option("--classes", gen_classes, "number of classes");
    gen->add_option("--n-train", gen_train, "training images");
    gen->add_option("--n-test", gen_test, "test images");
    gen->add_option("--size", gen_size, "image side, pixels");
    gen->add_option("--k-gen", gen_kgen, "generation ring count");
    gen->add_option("--noise-sigma", gen_sigma, "pixel noise sigma");
    gen->add_option("--seed", gen_seed, "master seed");
    gen->add_option("--threads", gen_threads, "worker threads");

    // train
    auto* train = app.add_subcommand("train", "train one model variant");
    std::string train_manifest, train_out, train_report;
    CommonFlags train_flags;
    train->add_option("--manifest", train_manifest, "dataset manifest JSON")->required();
    train->add_option("--variant", train_flags.variant, "sos|sop|rop|vote|image");
    train->add_option("--config", train_flags.config_path, "train config JSON");
    train->add_option("--out", train_out, "checkpoint path")->required();
    train->add_option("--report", train_report, "train report CSV (default: <out>.report.csv)");
    train->add_option("--seed", train_flags.seed, "seed (overrides config)");
    train->add_option("--threads", train_flags.threads, "worker threads");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on the manifest test split");
    std::string ev_ckpt, ev_manifest, ev_report, ev_roc, ev_conf, ev_emb;
    long long ev_seed = 0;
    int ev_threads = 1;
    ev->add_option("--ckpt", ev_ckpt, "checkpoint path")->required();
    ev->add_option("--manifest", ev_manifest, "dataset manifest JSON")->required();
    ev->add_option("--report", ev_report, "metrics CSV")->required();
    ev->add_option("--roc", ev_roc, "ROC points CSV")->required();
    ev->add_option("--confusion", ev_conf, "confusion matrix CSV")->required();
    ev->add_option("--embeddings", ev_emb, "optional embeddings CSV");
    ev->add_option("--seed", ev_seed, "evaluation seed (ROP permutations)");
    ev->add_option("--threads", ev_threads, "worker threads");

    // compare
    auto* cmp = app.add_subcommand("compare", "train and evaluate all five variants");
    std::string cmp_manifest, cmp_out;
    CommonFlags cmp_flags;
    cmp->add_option("--manifest", cmp_manifest, "dataset manifest JSON")->required();
    cmp->add_option("--config", cmp_flags.config_path, "train config JSON");
    cmp->add_option("--out", cmp_out, "comparison table CSV")->required();
    cmp->add_option("--seed", cmp_flags.seed, "seed (overrides config)");
    cmp->add_option("--threads", cmp_flags.threads, "worker threads");

    // stats
    auto* st = app.add_subcommand("stats", "reader-study statistical analysis");
    std::string st_readers, st_out;
    st->add_option("--readers", st_readers, "reader CSV")->required();
    st->add_option("--out", st_out, "JSON report path")->required();

    // extract-patches
    auto* ex = app.add_subcommand("extract-patches", "dump sampled patches for visual audit");
    std::string ex_manifest, ex_out;
    long long ex_index = 0;
    int ex_k = 3, ex_side = 32, ex_nmin = 4;
    double ex_arc = 0.0;
    ex->add_option("--manifest", ex_manifest, "dataset manifest JSON")->required();
    ex->add_option("--index", ex_index, "train-split sample index")->required();
    ex->add_option("--k", ex_k, "ring count");
    ex->add_option("--side", ex_side, "patch side");
    ex->add_option("--arc-step", ex_arc, "arc step (default side/2)");
    ex->add_option("--n-min", ex_nmin, "min centers per ring");
    ex->add_option("--out", ex_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed())
            return run_gen_data(gen_out, gen_mode, gen_classes, gen_train, gen_test, gen_size, gen_kgen,
                                gen_sigma, gen_seed, gen_threads);
        if (train->parsed()) return run_train(train_manifest, train_flags, train_out, train_report);
        if (ev->parsed())
            return run_eval(ev_ckpt, ev_manifest, ev_report, ev_roc, ev_conf, ev_emb, ev_seed, ev_threads);
        if (cmp->parsed()) return run_compare(cmp_manifest, cmp_flags, cmp_out);
        if (st->parsed()) return run_stats(st_readers, st_out);
        if (ex->parsed())
            return run_extract_patches(ex_manifest, ex_index, ex_k, ex_side, ex_arc, ex_nmin, ex_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
