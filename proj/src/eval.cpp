#include "sosnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "sosnet/parallel.hpp"
#include "sosnet/rng.hpp"

namespace sosnet {

namespace {

struct SampleOutput {
    std::vector<double> probs;
    int pred = 0;
};

SampleOutput eval_one(const ModelParams& params, const LoadedSample& s, std::uint64_t seed,
                      std::size_t index) {
    const ModelConfig& mc = params.config;
    SampleOutput out;
    Tensor logits;
    switch (mc.variant) {
        case VariantId::SOS: {
            PatchSequence seq = build_sequence(s.image, s.annotation, mc.sample_config(), mc.k, SequenceMode::SOS);
            logits = logits_sos(seq, params);
            break;
        }
        case VariantId::SOP: {
            PatchSequence seq = build_sequence(s.image, s.annotation, mc.sample_config(), mc.k, SequenceMode::SOP);
            logits = logits_flat_seq(seq, params);
            break;
        }
        case VariantId::ROP: {
            Rng rng(derive_seed(seed, index));
            PatchSequence seq =
                build_sequence(s.image, s.annotation, mc.sample_config(), mc.k, SequenceMode::ROP, &rng);
            logits = logits_flat_seq(seq, params);
            break;
        }
        case VariantId::VOTE: {
            PatchSequence seq = build_sequence(s.image, s.annotation, mc.sample_config(), mc.k, SequenceMode::SOP);
            std::vector<const Tensor*> pats;
            pats.reserve(seq.flat.size());
            for (const Patch& p : seq.flat) pats.push_back(&p.data);
            VoteOutput vote = forward_vote(pats, params);
            out.probs = vote.mean_probs.data;
            out.pred = vote.voted_class;
            return out;
        }
        case VariantId::IMAGE: {
            logits = logits_image(s.image, params);
            break;
        }
    }
    Tensor probs = softmax(logits);
    out.probs = probs.data;
    out.pred = 0;
    for (std::size_t c = 1; c < probs.size(); ++c)
        if (probs.data[c] > probs.data[out.pred]) out.pred = static_cast<int>(c);
    return out;
}

}  // namespace

EvalResult tabulate(const std::vector<int>& truths, const std::vector<int>& predictions,
                    std::vector<std::vector<double>> probs, int classes) {
    if (truths.empty() || truths.size() != predictions.size() || truths.size() != probs.size())
        throw std::invalid_argument("tabulate: inconsistent or empty inputs");
    EvalResult res;
    res.confusion.assign(classes, std::vector<long>(classes, 0));
    long correct = 0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        if (truths[i] < 0 || truths[i] >= classes || predictions[i] < 0 || predictions[i] >= classes)
            throw std::out_of_range("tabulate: class index out of range");
        res.confusion[truths[i]][predictions[i]] += 1;
        if (truths[i] == predictions[i]) ++correct;
    }
    res.truths = truths;
    res.predictions = predictions;
    res.probs = std::move(probs);
    res.accuracy = static_cast<double>(correct) / static_cast<double>(truths.size());
    res.recalls.resize(classes);
    res.precisions.resize(classes);
    for (int c = 0; c < classes; ++c) {
        long row = 0, col = 0;
        for (int j = 0; j < classes; ++j) {
            row += res.confusion[c][j];
            col += res.confusion[j][c];
        }
        res.recalls[c] = row > 0 ? static_cast<double>(res.confusion[c][c]) / row : 0.0;
        res.precisions[c] = col > 0 ? static_cast<double>(res.confusion[c][c]) / col : 0.0;
    }
    return res;
}

EvalResult evaluate(const ModelParams& params, const std::vector<LesionAnnotation>& test_split,
                    const std::string& data_dir, std::uint64_t seed, int threads) {
    if (test_split.empty()) throw std::runtime_error("evaluate: empty test split");
    const int classes = params.config.classes;
    std::vector<LoadedSample> samples = load_split(test_split, data_dir);

    std::vector<SampleOutput> outputs(samples.size());
    parallel_for(samples.size(), threads,
                 [&](std::size_t i) { outputs[i] = eval_one(params, samples[i], seed, i); });

    std::vector<int> truths, preds;
    std::vector<std::vector<double>> probs;
    truths.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        truths.push_back(samples[i].annotation.label);
        preds.push_back(outputs[i].pred);
        probs.push_back(std::move(outputs[i].probs));
    }
    return tabulate(truths, preds, std::move(probs), classes);
}

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& truths) {
    if (scores.size() != truths.size() || scores.empty())
        throw std::invalid_argument("roc_curve: scores/truths must be equal-length and non-empty");
    long pos = 0, neg = 0;
    for (int t : truths) (t ? pos : neg) += 1;
    if (pos == 0 || neg == 0)
        throw std::invalid_argument("roc_curve: need at least one positive and one negative");

    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.fpr.push_back(0.0);
    curve.tpr.push_back(0.0);
    curve.thresholds.push_back(std::numeric_limits<double>::infinity());

    long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        const double threshold = scores[idx[i]];
        while (i < idx.size() && scores[idx[i]] == threshold) {
            (truths[idx[i]] ? tp : fp) += 1;
            ++i;
        }
        curve.fpr.push_back(static_cast<double>(fp) / neg);
        curve.tpr.push_back(static_cast<double>(tp) / pos);
        curve.thresholds.push_back(threshold);
    }
    return curve;
}

double auc(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < curve.fpr.size(); ++i)
        area += (curve.fpr[i + 1] - curve.fpr[i]) * (curve.tpr[i] + curve.tpr[i + 1]) * 0.5;
    return area;
}

double macro_auc(const std::vector<RocCurve>& curves) {
    if (curves.empty()) throw std::invalid_argument("macro_auc: no curves");
    double sum = 0.0;
    for (const RocCurve& c : curves) sum += auc(c);
    return sum / static_cast<double>(curves.size());
}

std::vector<RocCurve> one_vs_rest_roc(const EvalResult& result, int classes) {
    std::vector<RocCurve> curves;
    curves.reserve(classes);
    for (int c = 0; c < classes; ++c) {
        std::vector<double> scores;
        std::vector<int> truths;
        scores.reserve(result.probs.size());
        for (std::size_t i = 0; i < result.probs.size(); ++i) {
            scores.push_back(result.probs[i][c]);
            truths.push_back(result.truths[i] == c ? 1 : 0);
        }
        curves.push_back(roc_curve(scores, truths));
    }
    return curves;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

void write_report_csv(const EvalResult& result, const std::vector<std::string>& classes,
                      const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open report for writing: " + path);
    out << "metric,class,value\n";
    out << "accuracy,," << fmt(result.accuracy) << "\n";
    for (std::size_t c = 0; c < classes.size(); ++c)
        out << "recall," << classes[c] << "," << fmt(result.recalls[c]) << "\n";
    for (std::size_t c = 0; c < classes.size(); ++c)
        out << "precision," << classes[c] << "," << fmt(result.precisions[c]) << "\n";
}

void write_confusion_csv(const EvalResult& result, const std::vector<std::string>& classes,
                         const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open confusion for writing: " + path);
    out << "truth";
    for (const std::string& name : classes) out << "," << name;
    out << "\n";
    for (std::size_t r = 0; r < classes.size(); ++r) {
        out << classes[r];
        for (std::size_t c = 0; c < classes.size(); ++c) out << "," << result.confusion[r][c];
        out << "\n";
    }
}

void write_roc_csv(const std::vector<RocCurve>& curves, const std::vector<std::string>& classes,
                   const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open roc for writing: " + path);
    out << "class,threshold,fpr,tpr\n";
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const RocCurve& cv = curves[c];
        for (std::size_t i = 0; i < cv.fpr.size(); ++i)
            out << classes[c] << "," << fmt(cv.thresholds[i]) << "," << fmt(cv.fpr[i]) << ","
                << fmt(cv.tpr[i]) << "\n";
    }
}

void export_embeddings_csv(const ModelParams& params, const std::vector<LesionAnnotation>& split,
                           const std::string& data_dir, std::uint64_t seed, int threads,
                           const std::string& path) {
    std::vector<LoadedSample> samples = load_split(split, data_dir);
    const ModelConfig& mc = params.config;

    std::vector<Tensor> features(samples.size());
    parallel_for(samples.size(), threads, [&](std::size_t i) {
        const LoadedSample& s = samples[i];
        switch (mc.variant) {
            case VariantId::SOS: {
                PatchSequence seq =
                    build_sequence(s.image, s.annotation, mc.sample_config(), mc.k, SequenceMode::SOS);
                features[i] = embed_sos(seq, params);
                break;
            }
            case VariantId::SOP: {
                PatchSequence seq =
                    build_sequence(s.image, s.annotation, mc.sample_config(), mc.k, SequenceMode::SOP);
                features[i] = embed_flat_seq(seq, params);
                break;
            }
            case VariantId::ROP: {
                Rng rng(derive_seed(seed, i));
                PatchSequence seq =
                    build_sequence(s.image, s.annotation, mc.sample_config(), mc.k, SequenceMode::ROP, &rng);
                features[i] = embed_flat_seq(seq, params);
                break;
            }
            case VariantId::VOTE: {
                PatchSequence seq =
                    build_sequence(s.image, s.annotation, mc.sample_config(), mc.k, SequenceMode::SOP);
                std::vector<const Tensor*> pats;
                for (const Patch& p : seq.flat) pats.push_back(&p.data);
                features[i] = embed_vote(pats, params);
                break;
            }
            case VariantId::IMAGE: {
                features[i] = embed_image(s.image, params);
                break;
            }
        }
    });

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open embeddings for writing: " + path);
    const std::size_t dim = features.empty() ? 0 : features[0].size();
    out << "id,label";
    for (std::size_t k = 0; k < dim; ++k) out << ",f" << k;
    out << "\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out << samples[i].annotation.image_path << "," << samples[i].annotation.label;
        for (double v : features[i].data) out << "," << fmt(v);
        out << "\n";
    }
}

}  // namespace sosnet
