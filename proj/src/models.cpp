#include "sosnet/models.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "sosnet/rng.hpp"

namespace sosnet {

const char* variant_name(VariantId v) {
    switch (v) {
        case VariantId::IMAGE: return "image";
        case VariantId::VOTE: return "vote";
        case VariantId::ROP: return "rop";
        case VariantId::SOP: return "sop";
        case VariantId::SOS: return "sos";
    }
    return "?";
}

VariantId variant_from_name(const std::string& name) {
    for (VariantId v : {VariantId::IMAGE, VariantId::VOTE, VariantId::ROP, VariantId::SOP, VariantId::SOS})
        if (name == variant_name(v)) return v;
    throw std::invalid_argument("unknown variant \"" + name + "\" (want image|vote|rop|sop|sos)");
}

void ModelConfig::validate() const {
    if (k < 1 || k > 8) throw std::invalid_argument("config: k must be in 1..8");
    if (patch_side < 8 || patch_side % 8 != 0)
        throw std::invalid_argument("config: patch_side must be a positive multiple of 8");
    if (!(arc_step > 0.0)) throw std::invalid_argument("config: arc_step must be > 0");
    if (n_min < 1) throw std::invalid_argument("config: n_min must be >= 1");
    if (channels != 1 && channels != 3) throw std::invalid_argument("config: channels must be 1 or 3");
    for (int c : conv_channels)
        if (c < 1) throw std::invalid_argument("config: conv channels must be >= 1");
    if (feature_dim < 1 || hidden < 1 || classes < 2)
        throw std::invalid_argument("config: feature_dim/hidden/classes out of range");
}

std::vector<std::pair<std::string, Tensor*>> ModelParams::named_tensors() {
    std::vector<std::pair<std::string, Tensor*>> out = {
        {"conv1_w", &conv1_w}, {"conv1_b", &conv1_b}, {"conv2_w", &conv2_w}, {"conv2_b", &conv2_b},
        {"conv3_w", &conv3_w}, {"conv3_b", &conv3_b}, {"dense_w", &dense_w}, {"dense_b", &dense_b},
    };
    if (config.uses_lstm()) {
        out.emplace_back("lstm_w", &lstm_w);
        out.emplace_back("lstm_b", &lstm_b);
    }
    out.emplace_back("head_w", &head_w);
    out.emplace_back("head_b", &head_b);
    return out;
}

std::vector<std::pair<std::string, const Tensor*>> ModelParams::named_tensors() const {
    auto mut = const_cast<ModelParams*>(this)->named_tensors();
    std::vector<std::pair<std::string, const Tensor*>> out;
    out.reserve(mut.size());
    for (auto& [name, t] : mut) out.emplace_back(name, t);
    return out;
}

LstmParams ModelParams::lstm_params() const {
    LstmParams lp;
    lp.w = &lstm_w;
    lp.b = &lstm_b;
    lp.input_dim = config.feature_dim;
    lp.hidden = config.hidden;
    return lp;
}

std::vector<std::pair<std::string, Tensor*>> ModelGrads::named_tensors() {
    std::vector<std::pair<std::string, Tensor*>> out = {
        {"conv1_w", &conv1_w}, {"conv1_b", &conv1_b}, {"conv2_w", &conv2_w}, {"conv2_b", &conv2_b},
        {"conv3_w", &conv3_w}, {"conv3_b", &conv3_b}, {"dense_w", &dense_w}, {"dense_b", &dense_b},
    };
    if (lstm_w.size() > 0) {
        out.emplace_back("lstm_w", &lstm_w);
        out.emplace_back("lstm_b", &lstm_b);
    }
    out.emplace_back("head_w", &head_w);
    out.emplace_back("head_b", &head_b);
    return out;
}

ModelGrads make_grads(const ModelParams& p) {
    ModelGrads g;
    g.conv1_w = Tensor::zeros(p.conv1_w.shape);
    g.conv1_b = Tensor::zeros(p.conv1_b.shape);
    g.conv2_w = Tensor::zeros(p.conv2_w.shape);
    g.conv2_b = Tensor::zeros(p.conv2_b.shape);
    g.conv3_w = Tensor::zeros(p.conv3_w.shape);
    g.conv3_b = Tensor::zeros(p.conv3_b.shape);
    g.dense_w = Tensor::zeros(p.dense_w.shape);
    g.dense_b = Tensor::zeros(p.dense_b.shape);
    if (p.config.uses_lstm()) {
        g.lstm_w = Tensor::zeros(p.lstm_w.shape);
        g.lstm_b = Tensor::zeros(p.lstm_b.shape);
    }
    g.head_w = Tensor::zeros(p.head_w.shape);
    g.head_b = Tensor::zeros(p.head_b.shape);
    return g;
}

void zero_grads(ModelGrads& g) {
    for (auto& [name, t] : g.named_tensors()) std::fill(t->data.begin(), t->data.end(), 0.0);
}

void add_scaled_grads(ModelGrads& acc, const ModelGrads& src, double scale) {
    auto a = acc.named_tensors();
    auto b = const_cast<ModelGrads&>(src).named_tensors();
    check_shape(a.size() == b.size(), "add_scaled_grads tensor count");
    for (std::size_t i = 0; i < a.size(); ++i) {
        Tensor& dst = *a[i].second;
        const Tensor& s = *b[i].second;
        check_shape(dst.size() == s.size(), "add_scaled_grads shapes");
        for (std::size_t k = 0; k < dst.size(); ++k) dst.data[k] += scale * s.data[k];
    }
}

namespace {

void fill_glorot(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : t.data) v = rng.next_uniform(-limit, limit);
}

}  // namespace

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    ModelParams p;
    p.config = config;
    const std::size_t cin = config.channels;
    const std::size_t c1 = config.conv_channels[0];
    const std::size_t c2 = config.conv_channels[1];
    const std::size_t c3 = config.conv_channels[2];
    const std::size_t flat = config.flatten_dim();
    const std::size_t d = config.feature_dim;
    const std::size_t hd = config.hidden;
    const std::size_t cls = config.classes;

    p.conv1_w = Tensor::zeros({3, 3, cin, c1});
    p.conv1_b = Tensor::zeros({c1});
    p.conv2_w = Tensor::zeros({3, 3, c1, c2});
    p.conv2_b = Tensor::zeros({c2});
    p.conv3_w = Tensor::zeros({3, 3, c2, c3});
    p.conv3_b = Tensor::zeros({c3});
    p.dense_w = Tensor::zeros({flat, d});
    p.dense_b = Tensor::zeros({d});
    if (config.uses_lstm()) {
        p.lstm_w = Tensor::zeros({d + hd, 4 * hd});
        p.lstm_b = Tensor::zeros({4 * hd});
    }
    p.head_w = Tensor::zeros({static_cast<std::size_t>(config.head_input_dim()), cls});
    p.head_b = Tensor::zeros({cls});

    Rng rng(derive_seed(seed, stream::kInit));
    fill_glorot(p.conv1_w, 9 * cin, 9 * c1, rng);
    fill_glorot(p.conv2_w, 9 * c1, 9 * c2, rng);
    fill_glorot(p.conv3_w, 9 * c2, 9 * c3, rng);
    fill_glorot(p.dense_w, flat, d, rng);
    if (config.uses_lstm()) {
        fill_glorot(p.lstm_w, d + hd, 4 * hd, rng);
        // forget-gate bias 1.0, gate order (i, f, g, o)
        for (std::size_t k = 0; k < hd; ++k) p.lstm_b.data[hd + k] = 1.0;
    }
    fill_glorot(p.head_w, config.head_input_dim(), cls, rng);
    return p;
}

Tensor encode_patch(const Tensor& patch, const ModelParams& p, EncoderCache* cache) {
    const int side = p.config.encoder_side();
    check_shape(patch.shape.size() == 3 && patch.shape[0] == static_cast<std::size_t>(side) &&
                    patch.shape[1] == static_cast<std::size_t>(side) &&
                    patch.shape[2] == static_cast<std::size_t>(p.config.channels),
                "encode_patch input");

    EncoderCache local;
    EncoderCache& cc = cache ? *cache : local;

    cc.a1 = conv2d(patch, p.conv1_w, p.conv1_b);
    cc.p1 = maxpool2d(relu(cc.a1), &cc.c1);
    cc.a2 = conv2d(cc.p1, p.conv2_w, p.conv2_b);
    cc.p2 = maxpool2d(relu(cc.a2), &cc.c2);
    cc.a3 = conv2d(cc.p2, p.conv3_w, p.conv3_b);
    cc.p3 = maxpool2d(relu(cc.a3), &cc.c3);
    const Tensor* last = &cc.p3;
    if (p.config.pool_stages() == 4) {
        cc.p4 = maxpool2d(cc.p3, &cc.c4);
        last = &cc.p4;
    }
    cc.flat = *last;
    cc.flat.shape = {last->size()};
    cc.d1 = dense(cc.flat, p.dense_w, p.dense_b);
    cc.feat = relu(cc.d1);
    return cc.feat;
}

void encode_backward(const Tensor& patch, const EncoderCache& cc, const ModelParams& p,
                     const Tensor& gfeat, ModelGrads& g) {
    Tensor gd1 = Tensor::zeros(cc.d1.shape);
    relu_backward(cc.d1, gfeat, gd1);

    Tensor gflat = Tensor::zeros(cc.flat.shape);
    dense_backward(cc.flat, p.dense_w, gd1, gflat, g.dense_w, g.dense_b);

    Tensor gp3 = Tensor::zeros(cc.p3.shape);
    if (p.config.pool_stages() == 4) {
        Tensor gp4 = gflat;
        gp4.shape = cc.p4.shape;
        maxpool2d_backward(cc.c4, gp4, gp3);
    } else {
        gp3 = gflat;
        gp3.shape = cc.p3.shape;
    }

    Tensor gr3 = Tensor::zeros(cc.a3.shape);
    maxpool2d_backward(cc.c3, gp3, gr3);
    Tensor ga3 = Tensor::zeros(cc.a3.shape);
    relu_backward(cc.a3, gr3, ga3);
    Tensor gp2 = Tensor::zeros(cc.p2.shape);
    conv2d_backward(cc.p2, p.conv3_w, ga3, gp2, g.conv3_w, g.conv3_b);

    Tensor gr2 = Tensor::zeros(cc.a2.shape);
    maxpool2d_backward(cc.c2, gp2, gr2);
    Tensor ga2 = Tensor::zeros(cc.a2.shape);
    relu_backward(cc.a2, gr2, ga2);
    Tensor gp1 = Tensor::zeros(cc.p1.shape);
    conv2d_backward(cc.p1, p.conv2_w, ga2, gp1, g.conv2_w, g.conv2_b);

    Tensor gr1 = Tensor::zeros(cc.a1.shape);
    maxpool2d_backward(cc.c1, gp1, gr1);
    Tensor ga1 = Tensor::zeros(cc.a1.shape);
    relu_backward(cc.a1, gr1, ga1);
    Tensor gx = Tensor::zeros(patch.shape);  // input grad unused
    conv2d_backward(patch, p.conv1_w, ga1, gx, g.conv1_w, g.conv1_b);
}

namespace {

// Shared forward for the LSTM variants. Collects the per-step inputs
// (pooled set features for SOS, patch features for SOP/ROP).
struct SeqForward {
    std::vector<std::vector<EncoderCache>> enc;   // [step][patch-in-step]
    std::vector<std::vector<const Tensor*>> pats; // patch data pointers
    std::vector<std::vector<std::size_t>> pool_argmax;  // SOS only
    std::vector<Tensor> xs;                       // LSTM inputs
    std::vector<LstmStepCache> lstm;
    Tensor h_final, head_logits;
};

void seq_forward_sos(const PatchSequence& seq, const ModelParams& p, SeqForward& f, bool caches) {
    if (seq.mode != SequenceMode::SOS) throw std::invalid_argument("SOS forward requires an SOS sequence");
    if (seq.sets.empty()) throw std::invalid_argument("SOS forward: no sets");
    const std::size_t k = seq.sets.size();
    f.enc.resize(k);
    f.pats.resize(k);
    f.pool_argmax.resize(k);
    f.xs.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        const auto& set = seq.sets[i];
        if (set.empty()) throw std::invalid_argument("SOS forward: empty set " + std::to_string(i + 1));
        f.enc[i].resize(caches ? set.size() : 0);
        std::vector<Tensor> feats(set.size());
        std::vector<const Tensor*> fptr(set.size());
        f.pats[i].resize(set.size());
        for (std::size_t j = 0; j < set.size(); ++j) {
            f.pats[i][j] = &set[j].data;
            feats[j] = encode_patch(set[j].data, p, caches ? &f.enc[i][j] : nullptr);
            fptr[j] = &feats[j];
        }
        f.xs[i] = set_maxpool(fptr, caches ? &f.pool_argmax[i] : nullptr);
        if (caches)
            for (std::size_t j = 0; j < set.size(); ++j) f.enc[i][j].feat = std::move(feats[j]);
    }
    f.h_final = lstm_sequence(f.xs, p.lstm_params(), caches ? &f.lstm : nullptr);
    f.head_logits = dense(f.h_final, p.head_w, p.head_b);
}

void seq_forward_flat(const PatchSequence& seq, const ModelParams& p, SeqForward& f, bool caches) {
    if (seq.mode != SequenceMode::SOP && seq.mode != SequenceMode::ROP)
        throw std::invalid_argument("flat forward requires an SOP/ROP sequence");
    if (seq.flat.empty()) throw std::invalid_argument("flat forward: empty sequence");
    const std::size_t n = seq.flat.size();
    f.enc.resize(n);
    f.pats.resize(n);
    f.xs.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        f.enc[t].resize(caches ? 1 : 0);
        f.pats[t] = {&seq.flat[t].data};
        f.xs[t] = encode_patch(seq.flat[t].data, p, caches ? &f.enc[t][0] : nullptr);
    }
    f.h_final = lstm_sequence(f.xs, p.lstm_params(), caches ? &f.lstm : nullptr);
    f.head_logits = dense(f.h_final, p.head_w, p.head_b);
}

// Backward from dL/dlogits through head, LSTM, set pooling and encoders.
void seq_backward(const SeqForward& f, const ModelParams& p, const Tensor& glogits, ModelGrads& g,
                  bool sos) {
    Tensor gh = Tensor::zeros(f.h_final.shape);
    dense_backward(f.h_final, p.head_w, glogits, gh, g.head_w, g.head_b);

    std::vector<Tensor> gxs;
    lstm_sequence_backward(f.lstm, p.lstm_params(), gh, g.lstm_w, g.lstm_b, gxs);

    for (std::size_t i = 0; i < f.xs.size(); ++i) {
        if (sos) {
            std::vector<Tensor> gfeats(f.enc[i].size(), Tensor::zeros(f.xs[i].shape));
            std::vector<Tensor*> gptr(gfeats.size());
            for (std::size_t j = 0; j < gfeats.size(); ++j) gptr[j] = &gfeats[j];
            set_maxpool_backward(f.pool_argmax[i], gxs[i], gptr);
            for (std::size_t j = 0; j < f.enc[i].size(); ++j)
                encode_backward(*f.pats[i][j], f.enc[i][j], p, gfeats[j], g);
        } else {
            encode_backward(*f.pats[i][0], f.enc[i][0], p, gxs[i], g);
        }
    }
}

}  // namespace

Tensor logits_sos(const PatchSequence& seq, const ModelParams& p) {
    SeqForward f;
    seq_forward_sos(seq, p, f, false);
    return f.head_logits;
}

Tensor logits_flat_seq(const PatchSequence& seq, const ModelParams& p) {
    SeqForward f;
    seq_forward_flat(seq, p, f, false);
    return f.head_logits;
}

Tensor logits_image(const Image& img, const ModelParams& p) {
    Image small = downscale(img, 64, 64);
    Tensor x = extract_patch(small, 0, 0, 64);
    Tensor feat = encode_patch(x, p, nullptr);
    return dense(feat, p.head_w, p.head_b);
}

int majority_vote(const std::vector<int>& patch_preds, const std::vector<double>& summed_probs,
                  int classes) {
    if (patch_preds.empty()) throw std::invalid_argument("majority_vote: no predictions");
    check_shape(static_cast<int>(summed_probs.size()) == classes, "majority_vote prob sums");
    std::vector<int> votes(classes, 0);
    for (int pred : patch_preds) {
        if (pred < 0 || pred >= classes) throw std::out_of_range("majority_vote: prediction out of range");
        votes[pred] += 1;
    }
    const int top_votes = *std::max_element(votes.begin(), votes.end());
    int best = -1;
    double best_prob = -1.0;
    for (int c = 0; c < classes; ++c) {
        if (votes[c] != top_votes) continue;
        if (summed_probs[c] > best_prob) {  // strict: equal-prob ties keep the lowest index
            best_prob = summed_probs[c];
            best = c;
        }
    }
    return best;
}

VoteOutput forward_vote(const std::vector<const Tensor*>& patches, const ModelParams& p) {
    if (patches.empty()) throw std::invalid_argument("forward_vote: no patches");
    VoteOutput out;
    out.patch_logits.reserve(patches.size());
    out.mean_probs = Tensor::zeros({static_cast<std::size_t>(p.config.classes)});
    std::vector<double> prob_sums(p.config.classes, 0.0);
    for (const Tensor* patch : patches) {
        Tensor feat = encode_patch(*patch, p, nullptr);
        Tensor logits = dense(feat, p.head_w, p.head_b);
        Tensor probs = softmax(logits);
        int pred = 0;
        for (int c = 1; c < p.config.classes; ++c)
            if (probs.data[c] > probs.data[pred]) pred = c;
        for (int c = 0; c < p.config.classes; ++c) prob_sums[c] += probs.data[c];
        out.patch_preds.push_back(pred);
        out.patch_logits.push_back(std::move(logits));
    }
    for (int c = 0; c < p.config.classes; ++c)
        out.mean_probs.data[c] = prob_sums[c] / static_cast<double>(patches.size());
    out.voted_class = majority_vote(out.patch_preds, prob_sums, p.config.classes);
    return out;
}

Tensor embed_sos(const PatchSequence& seq, const ModelParams& p) {
    SeqForward f;
    seq_forward_sos(seq, p, f, false);
    return f.h_final;
}

Tensor embed_flat_seq(const PatchSequence& seq, const ModelParams& p) {
    SeqForward f;
    seq_forward_flat(seq, p, f, false);
    return f.h_final;
}

Tensor embed_image(const Image& img, const ModelParams& p) {
    Image small = downscale(img, 64, 64);
    Tensor x = extract_patch(small, 0, 0, 64);
    return encode_patch(x, p, nullptr);
}

Tensor embed_vote(const std::vector<const Tensor*>& patches, const ModelParams& p) {
    if (patches.empty()) throw std::invalid_argument("embed_vote: no patches");
    Tensor mean = Tensor::zeros({static_cast<std::size_t>(p.config.feature_dim)});
    for (const Tensor* patch : patches) {
        Tensor feat = encode_patch(*patch, p, nullptr);
        for (std::size_t k = 0; k < mean.size(); ++k) mean.data[k] += feat.data[k];
    }
    for (double& v : mean.data) v /= static_cast<double>(patches.size());
    return mean;
}

double loss_and_grad_sos(const PatchSequence& seq, const ModelParams& p, ModelGrads& g,
                         Tensor* logits_out) {
    SeqForward f;
    seq_forward_sos(seq, p, f, true);
    Tensor glogits;
    double loss = cross_entropy(f.head_logits, seq.label, &glogits);
    seq_backward(f, p, glogits, g, true);
    if (logits_out) *logits_out = f.head_logits;
    return loss;
}

double loss_and_grad_flat_seq(const PatchSequence& seq, const ModelParams& p, ModelGrads& g,
                              Tensor* logits_out) {
    SeqForward f;
    seq_forward_flat(seq, p, f, true);
    Tensor glogits;
    double loss = cross_entropy(f.head_logits, seq.label, &glogits);
    seq_backward(f, p, glogits, g, false);
    if (logits_out) *logits_out = f.head_logits;
    return loss;
}

double loss_and_grad_vote(const std::vector<const Tensor*>& patches, int label, const ModelParams& p,
                          ModelGrads& g, int* correct_out) {
    if (patches.empty()) throw std::invalid_argument("loss_and_grad_vote: no patches");
    const double inv_n = 1.0 / static_cast<double>(patches.size());
    double total = 0.0;
    int correct = 0;
    for (const Tensor* patch : patches) {
        EncoderCache cc;
        Tensor feat = encode_patch(*patch, p, &cc);
        Tensor logits = dense(feat, p.head_w, p.head_b);
        int pred = 0;
        for (std::size_t c = 1; c < logits.size(); ++c)
            if (logits.data[c] > logits.data[pred]) pred = static_cast<int>(c);
        if (pred == label) ++correct;
        Tensor glogits;
        total += cross_entropy(logits, label, &glogits);
        for (double& v : glogits.data) v *= inv_n;
        Tensor gfeat = Tensor::zeros(feat.shape);
        dense_backward(feat, p.head_w, glogits, gfeat, g.head_w, g.head_b);
        encode_backward(*patch, cc, p, gfeat, g);
    }
    if (correct_out) *correct_out = correct;
    return total * inv_n;
}

double loss_and_grad_image(const Image& img, int label, const ModelParams& p, ModelGrads& g,
                           Tensor* logits_out) {
    Image small = downscale(img, 64, 64);
    Tensor x = extract_patch(small, 0, 0, 64);
    EncoderCache cc;
    Tensor feat = encode_patch(x, p, &cc);
    Tensor logits = dense(feat, p.head_w, p.head_b);
    Tensor glogits;
    double loss = cross_entropy(logits, label, &glogits);
    Tensor gfeat = Tensor::zeros(feat.shape);
    dense_backward(feat, p.head_w, glogits, gfeat, g.head_w, g.head_b);
    encode_backward(x, cc, p, gfeat, g);
    if (logits_out) *logits_out = logits;
    return loss;
}

// ---------------------------------------------------------------------------
// Checkpoint format

namespace {

constexpr char kMagic[4] = {'S', 'O', 'S', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_u32le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64le(std::string& out, double d) { put_u64le(out, std::bit_cast<std::uint64_t>(d)); }

std::uint32_t get_u32le(const std::string& b, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + i])) << (8 * i);
    return v;
}

std::uint64_t get_u64le(const std::string& b, std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[at + i])) << (8 * i);
    return v;
}

nlohmann::json config_to_json(const ModelConfig& c) {
    return {{"variant", variant_name(c.variant)},
            {"k", c.k},
            {"patch_side", c.patch_side},
            {"arc_step", c.arc_step},
            {"n_min", c.n_min},
            {"channels", c.channels},
            {"conv_channels", c.conv_channels},
            {"feature_dim", c.feature_dim},
            {"hidden", c.hidden},
            {"classes", c.classes}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.variant = variant_from_name(j.at("variant").get<std::string>());
    c.k = j.at("k").get<int>();
    c.patch_side = j.at("patch_side").get<int>();
    c.arc_step = j.at("arc_step").get<double>();
    c.n_min = j.at("n_min").get<int>();
    c.channels = j.at("channels").get<int>();
    auto cc = j.at("conv_channels").get<std::vector<int>>();
    if (cc.size() != 3) throw CheckpointError("checkpoint config: conv_channels must have 3 entries");
    std::copy(cc.begin(), cc.end(), c.conv_channels.begin());
    c.feature_dim = j.at("feature_dim").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.classes = j.at("classes").get<int>();
    return c;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
    auto tensors = params.named_tensors();
    nlohmann::json tlist = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, t] : tensors) {
        tlist.push_back({{"name", name}, {"shape", t->shape}, {"offset", offset}});
        offset += static_cast<std::uint64_t>(t->size()) * 8;
    }
    nlohmann::json header = {{"config", config_to_json(params.config)},
                             {"dtype", "f64le"},
                             {"gate_order", "ifgo"},
                             {"tensors", tlist}};
    const std::string header_str = header.dump();

    std::string out;
    out.append(kMagic, 4);
    put_u32le(out, kVersion);
    put_u64le(out, header_str.size());
    out += header_str;
    for (const auto& [name, t] : tensors)
        for (double v : t->data) put_f64le(out, v);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot open checkpoint for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw CheckpointError("checkpoint write failed: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot open checkpoint: " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw CheckpointError("bad checkpoint magic (want SOSM)");
    const std::uint32_t version = get_u32le(bytes, 4);
    if (version != kVersion)
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    const std::uint64_t header_len = get_u64le(bytes, 8);
    if (bytes.size() < 16 + header_len) throw CheckpointError("checkpoint truncated in header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(16, header_len));
    } catch (const nlohmann::json::parse_error& e) {
        throw CheckpointError(std::string("checkpoint header parse error: ") + e.what());
    }

    ModelParams p;
    p.config = config_from_json(header.at("config"));
    p.config.validate();
    auto tensors = p.named_tensors();
    const auto& tlist = header.at("tensors");
    if (tlist.size() != tensors.size())
        throw CheckpointError("checkpoint tensor count mismatch: header has " + std::to_string(tlist.size()) +
                              ", config implies " + std::to_string(tensors.size()));

    const std::size_t payload_at = 16 + header_len;
    std::uint64_t expect_offset = 0;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const auto& entry = tlist[i];
        if (entry.at("name").get<std::string>() != tensors[i].first)
            throw CheckpointError("checkpoint tensor order mismatch at index " + std::to_string(i));
        auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        const std::uint64_t off = entry.at("offset").get<std::uint64_t>();
        if (off != expect_offset)
            throw CheckpointError("checkpoint offset mismatch for " + tensors[i].first);
        Tensor t = Tensor::zeros(shape);
        if (payload_at + off + t.size() * 8 > bytes.size())
            throw CheckpointError("checkpoint payload truncated at tensor " + tensors[i].first);
        for (std::size_t k = 0; k < t.size(); ++k)
            t.data[k] = std::bit_cast<double>(get_u64le(bytes, payload_at + off + k * 8));
        *tensors[i].second = std::move(t);
        expect_offset = off + tensors[i].second->size() * 8;
    }
    if (payload_at + expect_offset != bytes.size())
        throw CheckpointError("checkpoint payload length mismatch: expected " +
                              std::to_string(payload_at + expect_offset) + " bytes, file has " +
                              std::to_string(bytes.size()));
    return p;
}

}  // namespace sosnet
