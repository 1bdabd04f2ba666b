#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "sosnet/geometry.hpp"
#include "sosnet/imageio.hpp"
#include "sosnet/nn.hpp"
#include "sosnet/tensor.hpp"

namespace sosnet {

enum class VariantId { IMAGE, VOTE, ROP, SOP, SOS };

const char* variant_name(VariantId v);
VariantId variant_from_name(const std::string& name);

// Everything needed to rebuild a model and its sampling pipeline; stored in
// the checkpoint header so evaluation is self-contained.
struct ModelConfig {
    VariantId variant = VariantId::SOS;
    int k = 3;
    int patch_side = 32;
    double arc_step = 16.0;
    int n_min = 4;
    int channels = 3;
    std::array<int, 3> conv_channels{8, 16, 32};
    int feature_dim = 64;
    int hidden = 64;
    int classes = 4;

    SampleConfig sample_config() const { return SampleConfig{patch_side, arc_step, n_min}; }
    bool uses_lstm() const { return variant == VariantId::SOS || variant == VariantId::SOP || variant == VariantId::ROP; }
    // Side of the encoder input: patches, or the fixed 64px downscale for IMAGE.
    int encoder_side() const { return variant == VariantId::IMAGE ? 64 : patch_side; }
    int pool_stages() const { return variant == VariantId::IMAGE ? 4 : 3; }
    int flatten_dim() const {
        int s = encoder_side();
        for (int i = 0; i < pool_stages(); ++i) s /= 2;
        return s * s * conv_channels[2];
    }
    int head_input_dim() const { return uses_lstm() ? hidden : feature_dim; }
    void validate() const;
};

struct ModelParams {
    ModelConfig config;
    Tensor conv1_w, conv1_b;
    Tensor conv2_w, conv2_b;
    Tensor conv3_w, conv3_b;
    Tensor dense_w, dense_b;  // flatten -> feature_dim
    Tensor lstm_w, lstm_b;    // (feature_dim+hidden) x 4*hidden, gate order (i,f,g,o); empty unless LSTM
    Tensor head_w, head_b;    // head_input_dim -> classes

    std::vector<std::pair<std::string, Tensor*>> named_tensors();
    std::vector<std::pair<std::string, const Tensor*>> named_tensors() const;
    LstmParams lstm_params() const;
};

// Gradient buffers mirroring ModelParams (grad values live in .data).
struct ModelGrads {
    Tensor conv1_w, conv1_b;
    Tensor conv2_w, conv2_b;
    Tensor conv3_w, conv3_b;
    Tensor dense_w, dense_b;
    Tensor lstm_w, lstm_b;
    Tensor head_w, head_b;

    std::vector<std::pair<std::string, Tensor*>> named_tensors();
};

ModelGrads make_grads(const ModelParams& p);
void zero_grads(ModelGrads& g);
void add_scaled_grads(ModelGrads& acc, const ModelGrads& src, double scale);

// Glorot uniform weights, zero biases, LSTM forget-gate bias 1.0;
// fully determined by (config, seed).
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

// Per-patch encoder: three conv/relu/pool stages (a fourth pool for the
// IMAGE variant), then a dense+relu bottleneck to feature_dim.
struct EncoderCache {
    Tensor a1, p1, a2, p2, a3, p3, p4;
    MaxPoolCache c1, c2, c3, c4;
    Tensor flat, d1, feat;
};

Tensor encode_patch(const Tensor& patch, const ModelParams& p, EncoderCache* cache = nullptr);
void encode_backward(const Tensor& patch, const EncoderCache& cache, const ModelParams& p,
                     const Tensor& gfeat, ModelGrads& g);

// Logits (softmax is applied by loss/eval, not here).
Tensor logits_sos(const PatchSequence& seq, const ModelParams& p);
Tensor logits_flat_seq(const PatchSequence& seq, const ModelParams& p);  // SOP / ROP
Tensor logits_image(const Image& img, const ModelParams& p);

struct VoteOutput {
    std::vector<Tensor> patch_logits;
    std::vector<int> patch_preds;
    Tensor mean_probs;  // mean per-patch softmax; the score vector for ROC
    int voted_class = 0;
};

// Majority vote over per-patch predictions; ties broken by greatest summed
// softmax probability over the tied classes, then by lowest class index.
VoteOutput forward_vote(const std::vector<const Tensor*>& patches, const ModelParams& p);

// The voting rule itself: modal class over patch predictions, ties by
// summed_probs (one entry per class), remaining ties by lowest index.
int majority_vote(const std::vector<int>& patch_preds, const std::vector<double>& summed_probs,
                  int classes);

// Head-input features, exported as embeddings.
Tensor embed_sos(const PatchSequence& seq, const ModelParams& p);
Tensor embed_flat_seq(const PatchSequence& seq, const ModelParams& p);
Tensor embed_image(const Image& img, const ModelParams& p);
Tensor embed_vote(const std::vector<const Tensor*>& patches, const ModelParams& p);  // mean patch feature

// Cross-entropy loss against seq.label / label; accumulates dL/dparams into g.
double loss_and_grad_sos(const PatchSequence& seq, const ModelParams& p, ModelGrads& g,
                         Tensor* logits_out = nullptr);
double loss_and_grad_flat_seq(const PatchSequence& seq, const ModelParams& p, ModelGrads& g,
                              Tensor* logits_out = nullptr);
// Mean cross-entropy over the patches, every patch carrying the image label.
// correct_out (optional) counts patches whose argmax equals the label.
double loss_and_grad_vote(const std::vector<const Tensor*>& patches, int label, const ModelParams& p,
                          ModelGrads& g, int* correct_out = nullptr);
double loss_and_grad_image(const Image& img, int label, const ModelParams& p, ModelGrads& g,
                           Tensor* logits_out = nullptr);

// Binary checkpoint: magic "SOSM", u32 LE version, u64 LE header length,
// JSON header (config + per-tensor name/shape/offset in fixed order), then
// 64-bit LE float payloads.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

class CheckpointError : public std::runtime_error {
public:
    explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sosnet
