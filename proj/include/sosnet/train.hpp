#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sosnet/imageio.hpp"
#include "sosnet/models.hpp"

namespace sosnet {

struct TrainConfig {
    VariantId variant = VariantId::SOS;
    int epochs = 10;
    int batch_size = 16;
    double lr = 1e-3;
    enum class Optimizer { Sgd, Adam } optimizer = Optimizer::Adam;
    double dropout_p = 0.25;
    int k = 3;
    int patch_side = 32;
    double arc_step = 0.0;  // 0 = auto: patch_side / 2
    int n_min = 4;
    int feature_dim = 64;
    int hidden = 64;
    std::uint64_t seed = 1;
    int threads = 1;

    void validate() const;
    double effective_arc_step() const { return arc_step > 0.0 ? arc_step : patch_side / 2.0; }
};

// JSON config file; every field optional, unknown keys are an error.
TrainConfig load_train_config(const std::string& path);
TrainConfig train_config_from_json_text(const std::string& text);

struct TrainReport {
    std::vector<double> epoch_loss;      // mean per-sample loss
    std::vector<double> epoch_accuracy;  // training-path accuracy (VOTE: patch accuracy)
    double wall_seconds = 0.0;           // not serialized: reports must be byte-reproducible
};

// CSV: header `epoch,mean_loss,train_accuracy`, one row per epoch.
void write_train_report_csv(const TrainReport& report, const std::string& path);

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<std::vector<double>> m, v;
    std::uint64_t t = 0;
};

// Bias-corrected Adam; state tensors are lazily sized on first use.
void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, const AdamHyper& hyper);

struct SgdHyper {
    double lr = 1e-3;
    double momentum = 0.9;
};

struct SgdState {
    std::vector<std::vector<double>> velocity;
};

// v <- momentum*v + g; theta <- theta - lr*v.
void sgd_momentum_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
                       SgdState& state, const SgdHyper& hyper);

struct FitResult {
    ModelParams params;
    TrainReport report;
};

// Deterministic training: (manifest, config) fully determine the result,
// in both the serial reference mode (threads=1) and the OpenMP mode.
// Per-sample gradients are reduced in ascending sample order so the two
// modes are bit-identical. Set-dropout augmentation applies to SOS only,
// and only here, never in evaluation.
FitResult fit(const DatasetManifest& manifest, const TrainConfig& config, const std::string& data_dir);

}  // namespace sosnet
