#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sosnet/imageio.hpp"
#include "sosnet/models.hpp"

namespace sosnet {

struct EvalResult {
    double accuracy = 0.0;
    std::vector<double> recalls;                // per class, diag/row-sum (0 on empty support)
    std::vector<double> precisions;             // per class, diag/col-sum (0 on empty column)
    std::vector<std::vector<long>> confusion;   // rows = truth, cols = prediction
    std::vector<std::vector<double>> probs;     // per sample; softmax, or mean patch softmax for VOTE
    std::vector<int> predictions;
    std::vector<int> truths;
};

// Accuracy/recall/precision/confusion from per-sample truths & predictions.
EvalResult tabulate(const std::vector<int>& truths, const std::vector<int>& predictions,
                    std::vector<std::vector<double>> probs, int classes);

// Builds sequences WITHOUT set_dropout; ROP permutations are derived from
// (seed, sample index) so the result is independent of thread count.
EvalResult evaluate(const ModelParams& params, const std::vector<LesionAnnotation>& test_split,
                    const std::string& data_dir, std::uint64_t seed, int threads = 1);

// One-vs-rest ROC. Points start at (0,0) with threshold +inf and end at
// (1,1); thresholds sweep the distinct score values descending, classifying
// positive when score >= threshold.
struct RocCurve {
    std::vector<double> fpr, tpr, thresholds;
};

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& truths);
double auc(const RocCurve& curve);
double macro_auc(const std::vector<RocCurve>& curves);

// One curve per class from the evaluation's probability rows.
std::vector<RocCurve> one_vs_rest_roc(const EvalResult& result, int classes);

// CSV outputs (formats documented in the README).
void write_report_csv(const EvalResult& result, const std::vector<std::string>& classes,
                      const std::string& path);
void write_confusion_csv(const EvalResult& result, const std::vector<std::string>& classes,
                         const std::string& path);
void write_roc_csv(const std::vector<RocCurve>& curves, const std::vector<std::string>& classes,
                   const std::string& path);

// Per-sample head-input features: (id, label, feature...) rows.
void export_embeddings_csv(const ModelParams& params, const std::vector<LesionAnnotation>& split,
                           const std::string& data_dir, std::uint64_t seed, int threads,
                           const std::string& path);

}  // namespace sosnet
