#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sosnet/tensor.hpp"

namespace sosnet {

// Explicit forward/backward passes for every layer in the models. All
// backward functions ACCUMULATE into the provided gradient tensors (whose
// .data fields hold the gradient); callers zero them per sample.

// 3x3 cross-correlation, stride 1, zero padding 1.
// x: HxWxCin, w: 3x3xCinxCout, b: Cout -> y: HxWxCout.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b);
void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor& gx, Tensor& gw,
                     Tensor& gb);

// Elementwise max(0, x); subgradient at 0 is 0.
Tensor relu(const Tensor& x);
void relu_backward(const Tensor& x, const Tensor& gy, Tensor& gx);

// 2x2 window, stride 2; H and W must be even. Ties route the gradient to
// the first maximizer in row-major scan order.
struct MaxPoolCache {
    std::vector<std::size_t> shape_in;
    std::vector<std::size_t> argmax;  // flat input index per output element
};
Tensor maxpool2d(const Tensor& x, MaxPoolCache* cache = nullptr);
void maxpool2d_backward(const MaxPoolCache& cache, const Tensor& gy, Tensor& gx);

// y_j = sum_i x_i * w[i, j] + b_j. x: n, w: n x m, b: m.
Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b);
void dense_backward(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor& gx, Tensor& gw,
                    Tensor& gb);

// Elementwise max over a non-empty set of equal-dim vectors; first-index
// tie-break. argmax (when requested) records the winning feature index per
// coordinate for the backward routing.
Tensor set_maxpool(const std::vector<const Tensor*>& features, std::vector<std::size_t>* argmax = nullptr);
void set_maxpool_backward(const std::vector<std::size_t>& argmax, const Tensor& gy,
                          std::vector<Tensor*>& gfeatures);

// LSTM with the packed weight layout w: (d+H) x 4H, gate column order
// (i, f, g, o); b: 4H. Rows 0..d-1 multiply the input, rows d..d+H-1 the
// previous hidden state.
struct LstmParams {
    const Tensor* w = nullptr;
    const Tensor* b = nullptr;
    int input_dim = 0;
    int hidden = 0;
};

struct LstmState {
    Tensor h;
    Tensor c;
};

LstmState lstm_zero_state(int hidden);

struct LstmStepCache {
    std::vector<double> x, h_prev, c_prev;
    std::vector<double> i, f, g, o, c, tanh_c;
};

// i,f,o = sigmoid, g = tanh; c' = f*c + i*g; h' = o*tanh(c').
LstmState lstm_step(const Tensor& x, const LstmState& state, const LstmParams& p,
                    LstmStepCache* cache = nullptr);

// Folds lstm_step from the zero state and returns h_T. Errors on an empty
// sequence.
Tensor lstm_sequence(const std::vector<Tensor>& xs, const LstmParams& p,
                     std::vector<LstmStepCache>* caches = nullptr);

// Full BPTT given dL/dh_T. Accumulates into gw/gb and fills gxs (resized to
// the sequence length).
void lstm_sequence_backward(const std::vector<LstmStepCache>& caches, const LstmParams& p,
                            const Tensor& grad_h_final, Tensor& gw, Tensor& gb,
                            std::vector<Tensor>& gxs);

// Max-subtracted exp normalization.
Tensor softmax(const Tensor& logits);

// loss = logsumexp(z) - z[label]; grad (optional) = softmax(z) - onehot.
double cross_entropy(const Tensor& logits, int label, Tensor* grad = nullptr);

// Central-difference verification of an analytic gradient. `loss` is
// re-evaluated with each coordinate of each param perturbed by +-h; the
// analytic tensor holds dL/dparam in .data. Relative error is
// |a - n| / max(1e-8, |a| + |n|).
struct GradCheckItem {
    std::string name;
    Tensor* param;
    const Tensor* analytic;
};

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_name;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

GradCheckResult grad_check(const std::function<double()>& loss, const std::vector<GradCheckItem>& items,
                           double h);

}  // namespace sosnet
