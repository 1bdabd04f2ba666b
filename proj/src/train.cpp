#include "sosnet/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "sosnet/parallel.hpp"
#include "sosnet/rng.hpp"

namespace sosnet {

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("train config: lr must be > 0");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0))
        throw std::invalid_argument("train config: dropout_p must be in [0, 1)");
    if (k < 1 || k > 8) throw std::invalid_argument("train config: k must be in 1..8");
    if (patch_side < 8 || patch_side % 8 != 0)
        throw std::invalid_argument("train config: patch_side must be a positive multiple of 8");
    if (n_min < 1) throw std::invalid_argument("train config: n_min must be >= 1");
    if (feature_dim < 1 || hidden < 1) throw std::invalid_argument("train config: dims must be >= 1");
    if (threads < 1) throw std::invalid_argument("train config: threads must be >= 1");
}

TrainConfig train_config_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("train config parse error: ") + e.what());
    }
    if (!j.is_object()) throw std::runtime_error("train config must be a JSON object");

    static const std::vector<std::string> known = {
        "variant", "epochs", "batch_size", "lr",          "optimizer", "dropout_p", "k",
        "patch_side", "arc_step", "n_min", "feature_dim", "hidden",    "seed",      "threads"};
    for (const auto& [key, val] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw std::runtime_error("train config: unknown key \"" + key + "\"");

    TrainConfig c;
    if (j.contains("variant")) c.variant = variant_from_name(j["variant"].get<std::string>());
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("lr")) c.lr = j["lr"].get<double>();
    if (j.contains("optimizer")) {
        const std::string name = j["optimizer"].get<std::string>();
        if (name == "sgd") c.optimizer = TrainConfig::Optimizer::Sgd;
        else if (name == "adam") c.optimizer = TrainConfig::Optimizer::Adam;
        else throw std::runtime_error("train config: optimizer must be \"sgd\" or \"adam\"");
    }
    if (j.contains("dropout_p")) c.dropout_p = j["dropout_p"].get<double>();
    if (j.contains("k")) c.k = j["k"].get<int>();
    if (j.contains("patch_side")) c.patch_side = j["patch_side"].get<int>();
    if (j.contains("arc_step")) c.arc_step = j["arc_step"].get<double>();
    if (j.contains("n_min")) c.n_min = j["n_min"].get<int>();
    if (j.contains("feature_dim")) c.feature_dim = j["feature_dim"].get<int>();
    if (j.contains("hidden")) c.hidden = j["hidden"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads")) c.threads = j["threads"].get<int>();
    c.validate();
    return c;
}

TrainConfig load_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open train config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return train_config_from_json_text(text);
}

void write_train_report_csv(const TrainReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open train report for writing: " + path);
    out << "epoch,mean_loss,train_accuracy\n";
    char buf[96];
    for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
        std::snprintf(buf, sizeof(buf), "%zu,%.12g,%.12g\n", e + 1, report.epoch_loss[e],
                      report.epoch_accuracy[e]);
        out << buf;
    }
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, const AdamHyper& hyper) {
    check_shape(params.size() == grads.size(), "adam_step param/grad count");
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params[i]->size(), 0.0);
            state.v[i].assign(params[i]->size(), 0.0);
        }
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        check_shape(p.size() == g.size(), "adam_step tensor shapes");
        std::vector<double>& m = state.m[i];
        std::vector<double>& v = state.v[i];
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = hyper.beta1 * m[k] + (1.0 - hyper.beta1) * g.data[k];
            v[k] = hyper.beta2 * v[k] + (1.0 - hyper.beta2) * g.data[k] * g.data[k];
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            p.data[k] -= hyper.lr * mhat / (std::sqrt(vhat) + hyper.eps);
        }
    }
}

void sgd_momentum_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
                       SgdState& state, const SgdHyper& hyper) {
    check_shape(params.size() == grads.size(), "sgd_step param/grad count");
    if (state.velocity.empty()) {
        state.velocity.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) state.velocity[i].assign(params[i]->size(), 0.0);
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        check_shape(p.size() == g.size(), "sgd_step tensor shapes");
        std::vector<double>& v = state.velocity[i];
        for (std::size_t k = 0; k < p.size(); ++k) {
            v[k] = hyper.momentum * v[k] + g.data[k];
            p.data[k] -= hyper.lr * v[k];
        }
    }
}

namespace {

// Flat ordered patch list reused as the VOTE patch pool and the ROP base.
std::vector<const Tensor*> flat_patch_ptrs(const PatchSequence& seq) {
    std::vector<const Tensor*> out;
    out.reserve(seq.flat.size());
    for (const Patch& p : seq.flat) out.push_back(&p.data);
    return out;
}

}  // namespace

FitResult fit(const DatasetManifest& manifest, const TrainConfig& config, const std::string& data_dir) {
    config.validate();
    if (manifest.train.empty()) throw std::runtime_error("fit: train split is empty");

    const auto t_start = std::chrono::steady_clock::now();
    std::vector<LoadedSample> samples = load_split(manifest.train, data_dir);

    ModelConfig mc;
    mc.variant = config.variant;
    mc.k = config.k;
    mc.patch_side = config.patch_side;
    mc.arc_step = config.effective_arc_step();
    mc.n_min = config.n_min;
    mc.channels = samples.front().image.channels;
    mc.feature_dim = config.feature_dim;
    mc.hidden = config.hidden;
    mc.classes = static_cast<int>(manifest.classes.size());
    mc.validate();
    for (const LoadedSample& s : samples)
        if (s.image.channels != mc.channels)
            throw std::runtime_error("fit: mixed channel counts in training images");

    ModelParams params = init_params(mc, config.seed);
    const SampleConfig scfg = mc.sample_config();
    const bool is_image = config.variant == VariantId::IMAGE;
    const bool is_sos = config.variant == VariantId::SOS;
    const bool is_flat_seq = config.variant == VariantId::SOP || config.variant == VariantId::ROP;
    const bool is_vote = config.variant == VariantId::VOTE;

    // Patch pools are deterministic per sample; build them once.
    std::vector<PatchSequence> base(samples.size());
    if (!is_image) {
        const SequenceMode base_mode = is_sos ? SequenceMode::SOS : SequenceMode::SOP;
        for (std::size_t i = 0; i < samples.size(); ++i)
            base[i] = build_sequence(samples[i].image, samples[i].annotation, scfg, mc.k, base_mode);
    }

    Rng shuffle_rng(derive_seed(config.seed, stream::kShuffle));
    Rng dropout_rng(derive_seed(config.seed, stream::kDropout));
    Rng rop_rng(derive_seed(config.seed, stream::kRopPermutation));

    auto param_list_pairs = params.named_tensors();
    std::vector<Tensor*> param_list;
    for (auto& [name, t] : param_list_pairs) param_list.push_back(t);

    ModelGrads batch_grads = make_grads(params);
    auto batch_pairs = batch_grads.named_tensors();
    std::vector<const Tensor*> batch_grad_list;
    for (auto& [name, t] : batch_pairs) batch_grad_list.push_back(t);

    const std::size_t bs = static_cast<std::size_t>(config.batch_size);
    std::vector<ModelGrads> slot_grads;
    for (std::size_t i = 0; i < std::min(bs, samples.size()); ++i) slot_grads.push_back(make_grads(params));
    std::vector<double> slot_loss(slot_grads.size(), 0.0);
    std::vector<double> slot_acc(slot_grads.size(), 0.0);

    AdamState adam_state;
    SgdState sgd_state;
    const AdamHyper adam_hyper{config.lr, 0.9, 0.999, 1e-8};
    const SgdHyper sgd_hyper{config.lr, 0.9};

    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainReport report;
    report.epoch_loss.reserve(config.epochs);
    report.epoch_accuracy.reserve(config.epochs);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        double acc_sum = 0.0;

        for (std::size_t start = 0; start < order.size(); start += bs) {
            const std::size_t count = std::min(bs, order.size() - start);

            // Serial augmentation pass: all randomness is drawn in sample
            // order here so the parallel compute below cannot perturb it.
            std::vector<PatchSequence> aug(count);
            for (std::size_t b = 0; b < count; ++b) {
                const std::size_t si = order[start + b];
                if (is_sos) {
                    aug[b] = config.dropout_p > 0.0 ? set_dropout(base[si], config.dropout_p, dropout_rng)
                                                    : base[si];
                } else if (config.variant == VariantId::ROP) {
                    std::vector<std::size_t> perm = rop_rng.permutation(base[si].flat.size());
                    aug[b].mode = SequenceMode::ROP;
                    aug[b].label = base[si].label;
                    aug[b].flat.reserve(perm.size());
                    for (std::size_t j : perm) aug[b].flat.push_back(base[si].flat[j]);
                }
            }

            parallel_for(count, config.threads, [&](std::size_t b) {
                const std::size_t si = order[start + b];
                ModelGrads& g = slot_grads[b];
                zero_grads(g);
                Tensor logits;
                if (is_sos) {
                    slot_loss[b] = loss_and_grad_sos(aug[b], params, g, &logits);
                } else if (is_flat_seq) {
                    const PatchSequence& seq = config.variant == VariantId::ROP ? aug[b] : base[si];
                    slot_loss[b] = loss_and_grad_flat_seq(seq, params, g, &logits);
                } else if (is_vote) {
                    std::vector<const Tensor*> pats = flat_patch_ptrs(base[si]);
                    int correct = 0;
                    slot_loss[b] = loss_and_grad_vote(pats, base[si].label, params, g, &correct);
                    slot_acc[b] = static_cast<double>(correct) / static_cast<double>(pats.size());
                } else {
                    slot_loss[b] =
                        loss_and_grad_image(samples[si].image, samples[si].annotation.label, params, g, &logits);
                }
                if (!is_vote) {
                    int pred = 0;
                    for (std::size_t c2 = 1; c2 < logits.size(); ++c2)
                        if (logits.data[c2] > logits.data[pred]) pred = static_cast<int>(c2);
                    const int label = is_image ? samples[si].annotation.label : base[si].label;
                    slot_acc[b] = pred == label ? 1.0 : 0.0;
                }
            });

            // Fixed-order reduction keeps serial and parallel modes bit-identical.
            zero_grads(batch_grads);
            const double inv = 1.0 / static_cast<double>(count);
            for (std::size_t b = 0; b < count; ++b) {
                add_scaled_grads(batch_grads, slot_grads[b], inv);
                loss_sum += slot_loss[b];
                acc_sum += slot_acc[b];
            }

            if (config.optimizer == TrainConfig::Optimizer::Adam)
                adam_step(param_list, batch_grad_list, adam_state, adam_hyper);
            else
                sgd_momentum_step(param_list, batch_grad_list, sgd_state, sgd_hyper);
        }

        report.epoch_loss.push_back(loss_sum / static_cast<double>(samples.size()));
        report.epoch_accuracy.push_back(acc_sum / static_cast<double>(samples.size()));
    }

    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return FitResult{std::move(params), std::move(report)};
}

}  // namespace sosnet
