#include "sosnet/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sosnet {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b) {
    check_shape(x.shape.size() == 3, "conv2d input must be HxWxC");
    check_shape(w.shape.size() == 4 && w.shape[0] == 3 && w.shape[1] == 3, "conv2d kernel must be 3x3xCinxCout");
    const std::size_t h = x.shape[0], wd = x.shape[1], cin = x.shape[2];
    const std::size_t cout = w.shape[3];
    check_shape(w.shape[2] == cin, "conv2d kernel Cin");
    check_shape(b.shape.size() == 1 && b.shape[0] == cout, "conv2d bias");

    Tensor y = Tensor::zeros({h, wd, cout});
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < wd; ++c) {
            double* yp = &y.data[(r * wd + c) * cout];
            for (std::size_t o = 0; o < cout; ++o) yp[o] = b[o];
            for (int dr = -1; dr <= 1; ++dr) {
                const long rr = static_cast<long>(r) + dr;
                if (rr < 0 || rr >= static_cast<long>(h)) continue;
                for (int dc = -1; dc <= 1; ++dc) {
                    const long cc = static_cast<long>(c) + dc;
                    if (cc < 0 || cc >= static_cast<long>(wd)) continue;
                    const double* xp = &x.data[(rr * wd + cc) * cin];
                    const double* wp = &w.data[(((dr + 1) * 3 + (dc + 1)) * cin) * cout];
                    for (std::size_t i = 0; i < cin; ++i) {
                        const double xv = xp[i];
                        const double* wrow = wp + i * cout;
                        for (std::size_t o = 0; o < cout; ++o) yp[o] += xv * wrow[o];
                    }
                }
            }
        }
    }
    return y;
}

void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor& gx, Tensor& gw,
                     Tensor& gb) {
    const std::size_t h = x.shape[0], wd = x.shape[1], cin = x.shape[2];
    const std::size_t cout = w.shape[3];
    check_shape(gy.shape.size() == 3 && gy.shape[0] == h && gy.shape[1] == wd && gy.shape[2] == cout,
                "conv2d_backward upstream grad");
    check_shape(gx.same_shape(x) && gw.same_shape(w), "conv2d_backward grad buffers");
    check_shape(gb.shape.size() == 1 && gb.shape[0] == cout, "conv2d_backward bias grad");

    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < wd; ++c) {
            const double* gp = &gy.data[(r * wd + c) * cout];
            for (std::size_t o = 0; o < cout; ++o) gb[o] += gp[o];
            for (int dr = -1; dr <= 1; ++dr) {
                const long rr = static_cast<long>(r) + dr;
                if (rr < 0 || rr >= static_cast<long>(h)) continue;
                for (int dc = -1; dc <= 1; ++dc) {
                    const long cc = static_cast<long>(c) + dc;
                    if (cc < 0 || cc >= static_cast<long>(wd)) continue;
                    const std::size_t xoff = (rr * wd + cc) * cin;
                    const std::size_t woff = ((dr + 1) * 3 + (dc + 1)) * cin * cout;
                    for (std::size_t i = 0; i < cin; ++i) {
                        const double xv = x.data[xoff + i];
                        const double* wrow = &w.data[woff + i * cout];
                        double acc = 0.0;
                        double* gwrow = &gw.data[woff + i * cout];
                        for (std::size_t o = 0; o < cout; ++o) {
                            acc += wrow[o] * gp[o];
                            gwrow[o] += xv * gp[o];
                        }
                        gx.data[xoff + i] += acc;
                    }
                }
            }
        }
    }
}

Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) v = std::max(0.0, v);
    return y;
}

void relu_backward(const Tensor& x, const Tensor& gy, Tensor& gx) {
    check_shape(gy.size() == x.size() && gx.size() == x.size(), "relu_backward");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x.data[i] > 0.0) gx.data[i] += gy.data[i];
}

Tensor maxpool2d(const Tensor& x, MaxPoolCache* cache) {
    check_shape(x.shape.size() == 3, "maxpool2d input must be HxWxC");
    const std::size_t h = x.shape[0], w = x.shape[1], ch = x.shape[2];
    if (h % 2 != 0 || w % 2 != 0) throw std::invalid_argument("maxpool2d: H and W must be even");

    Tensor y = Tensor::zeros({h / 2, w / 2, ch});
    if (cache) {
        cache->shape_in = x.shape;
        cache->argmax.assign(y.size(), 0);
    }
    std::size_t yi = 0;
    for (std::size_t r = 0; r < h; r += 2) {
        for (std::size_t c = 0; c < w; c += 2) {
            for (std::size_t k = 0; k < ch; ++k, ++yi) {
                std::size_t best = (r * w + c) * ch + k;
                double bv = x.data[best];
                const std::size_t cand[3] = {(r * w + c + 1) * ch + k, ((r + 1) * w + c) * ch + k,
                                             ((r + 1) * w + c + 1) * ch + k};
                for (std::size_t idx : cand) {
                    if (x.data[idx] > bv) {
                        bv = x.data[idx];
                        best = idx;
                    }
                }
                y.data[yi] = bv;
                if (cache) cache->argmax[yi] = best;
            }
        }
    }
    return y;
}

void maxpool2d_backward(const MaxPoolCache& cache, const Tensor& gy, Tensor& gx) {
    check_shape(gy.size() == cache.argmax.size(), "maxpool2d_backward upstream grad");
    for (std::size_t i = 0; i < gy.size(); ++i) gx.data[cache.argmax[i]] += gy.data[i];
}

Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b) {
    const std::size_t n = x.size();
    check_shape(w.shape.size() == 2 && w.shape[0] == n, "dense weight rows");
    const std::size_t m = w.shape[1];
    check_shape(b.size() == m, "dense bias");

    Tensor y = b;
    y.shape = {m};
    for (std::size_t i = 0; i < n; ++i) {
        const double xv = x.data[i];
        if (xv == 0.0) continue;
        const double* wrow = &w.data[i * m];
        for (std::size_t j = 0; j < m; ++j) y.data[j] += xv * wrow[j];
    }
    return y;
}

void dense_backward(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor& gx, Tensor& gw,
                    Tensor& gb) {
    const std::size_t n = x.size();
    const std::size_t m = w.shape[1];
    check_shape(gy.size() == m && gx.size() == n && gw.same_shape(w) && gb.size() == m, "dense_backward");
    for (std::size_t j = 0; j < m; ++j) gb.data[j] += gy.data[j];
    for (std::size_t i = 0; i < n; ++i) {
        const double xv = x.data[i];
        const double* wrow = &w.data[i * m];
        double* gwrow = &gw.data[i * m];
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            acc += wrow[j] * gy.data[j];
            gwrow[j] += xv * gy.data[j];
        }
        gx.data[i] += acc;
    }
}

Tensor set_maxpool(const std::vector<const Tensor*>& features, std::vector<std::size_t>* argmax) {
    if (features.empty()) throw std::invalid_argument("set_maxpool: empty set");
    const std::size_t d = features[0]->size();
    for (const Tensor* f : features) check_shape(f->size() == d, "set_maxpool feature dims");

    Tensor y = *features[0];
    if (argmax) argmax->assign(d, 0);
    for (std::size_t j = 1; j < features.size(); ++j) {
        const Tensor& f = *features[j];
        for (std::size_t k = 0; k < d; ++k) {
            if (f.data[k] > y.data[k]) {
                y.data[k] = f.data[k];
                if (argmax) (*argmax)[k] = j;
            }
        }
    }
    return y;
}

void set_maxpool_backward(const std::vector<std::size_t>& argmax, const Tensor& gy,
                          std::vector<Tensor*>& gfeatures) {
    check_shape(gy.size() == argmax.size(), "set_maxpool_backward");
    for (std::size_t k = 0; k < gy.size(); ++k) gfeatures[argmax[k]]->data[k] += gy.data[k];
}

LstmState lstm_zero_state(int hidden) {
    LstmState s;
    s.h = Tensor::zeros({static_cast<std::size_t>(hidden)});
    s.c = Tensor::zeros({static_cast<std::size_t>(hidden)});
    return s;
}

LstmState lstm_step(const Tensor& x, const LstmState& state, const LstmParams& p, LstmStepCache* cache) {
    const std::size_t d = static_cast<std::size_t>(p.input_dim);
    const std::size_t hd = static_cast<std::size_t>(p.hidden);
    check_shape(x.size() == d, "lstm_step input dim");
    check_shape(state.h.size() == hd && state.c.size() == hd, "lstm_step state dims");
    check_shape(p.w->shape.size() == 2 && p.w->shape[0] == d + hd && p.w->shape[1] == 4 * hd,
                "lstm_step packed weight");
    check_shape(p.b->size() == 4 * hd, "lstm_step bias");

    // z = [x; h] * W + b, gate columns (i, f, g, o).
    std::vector<double> z(p.b->data);
    const std::size_t m = 4 * hd;
    for (std::size_t i = 0; i < d; ++i) {
        const double xv = x.data[i];
        const double* wrow = &p.w->data[i * m];
        for (std::size_t j = 0; j < m; ++j) z[j] += xv * wrow[j];
    }
    for (std::size_t i = 0; i < hd; ++i) {
        const double hv = state.h.data[i];
        const double* wrow = &p.w->data[(d + i) * m];
        for (std::size_t j = 0; j < m; ++j) z[j] += hv * wrow[j];
    }

    LstmState next = lstm_zero_state(p.hidden);
    if (cache) {
        cache->x = x.data;
        cache->h_prev = state.h.data;
        cache->c_prev = state.c.data;
        cache->i.resize(hd);
        cache->f.resize(hd);
        cache->g.resize(hd);
        cache->o.resize(hd);
        cache->c.resize(hd);
        cache->tanh_c.resize(hd);
    }
    for (std::size_t k = 0; k < hd; ++k) {
        const double gi = sigmoid(z[k]);
        const double gf = sigmoid(z[hd + k]);
        const double gg = std::tanh(z[2 * hd + k]);
        const double go = sigmoid(z[3 * hd + k]);
        const double cc = gf * state.c.data[k] + gi * gg;
        const double tc = std::tanh(cc);
        next.c.data[k] = cc;
        next.h.data[k] = go * tc;
        if (cache) {
            cache->i[k] = gi;
            cache->f[k] = gf;
            cache->g[k] = gg;
            cache->o[k] = go;
            cache->c[k] = cc;
            cache->tanh_c[k] = tc;
        }
    }
    return next;
}

Tensor lstm_sequence(const std::vector<Tensor>& xs, const LstmParams& p,
                     std::vector<LstmStepCache>* caches) {
    if (xs.empty()) throw std::invalid_argument("lstm_sequence: empty sequence");
    if (caches) caches->resize(xs.size());
    LstmState state = lstm_zero_state(p.hidden);
    for (std::size_t t = 0; t < xs.size(); ++t)
        state = lstm_step(xs[t], state, p, caches ? &(*caches)[t] : nullptr);
    return state.h;
}

void lstm_sequence_backward(const std::vector<LstmStepCache>& caches, const LstmParams& p,
                            const Tensor& grad_h_final, Tensor& gw, Tensor& gb,
                            std::vector<Tensor>& gxs) {
    const std::size_t d = static_cast<std::size_t>(p.input_dim);
    const std::size_t hd = static_cast<std::size_t>(p.hidden);
    const std::size_t m = 4 * hd;
    check_shape(grad_h_final.size() == hd, "lstm_sequence_backward grad dim");
    check_shape(gw.same_shape(*p.w) && gb.size() == m, "lstm_sequence_backward grad buffers");

    gxs.assign(caches.size(), Tensor::zeros({d}));
    std::vector<double> gh(grad_h_final.data);
    std::vector<double> gc(hd, 0.0);
    std::vector<double> gz(m);

    for (std::size_t t = caches.size(); t-- > 0;) {
        const LstmStepCache& cc = caches[t];
        for (std::size_t k = 0; k < hd; ++k) {
            const double go = gh[k] * cc.tanh_c[k];
            const double gcell = gc[k] + gh[k] * cc.o[k] * (1.0 - cc.tanh_c[k] * cc.tanh_c[k]);
            const double gi = gcell * cc.g[k];
            const double gf = gcell * cc.c_prev[k];
            const double gg = gcell * cc.i[k];
            gc[k] = gcell * cc.f[k];  // becomes gc for step t-1
            gz[k] = gi * cc.i[k] * (1.0 - cc.i[k]);
            gz[hd + k] = gf * cc.f[k] * (1.0 - cc.f[k]);
            gz[2 * hd + k] = gg * (1.0 - cc.g[k] * cc.g[k]);
            gz[3 * hd + k] = go * cc.o[k] * (1.0 - cc.o[k]);
        }
        for (std::size_t j = 0; j < m; ++j) gb.data[j] += gz[j];
        double* gx = gxs[t].data.data();
        for (std::size_t i = 0; i < d; ++i) {
            const double xv = cc.x[i];
            const double* wrow = &p.w->data[i * m];
            double* gwrow = &gw.data[i * m];
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                acc += wrow[j] * gz[j];
                gwrow[j] += xv * gz[j];
            }
            gx[i] += acc;
        }
        for (std::size_t i = 0; i < hd; ++i) {
            const double hv = cc.h_prev[i];
            const double* wrow = &p.w->data[(d + i) * m];
            double* gwrow = &gw.data[(d + i) * m];
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                acc += wrow[j] * gz[j];
                gwrow[j] += hv * gz[j];
            }
            gh[i] = acc;  // dL/dh_{t-1}; overwritten fresh each step
        }
    }
}

Tensor softmax(const Tensor& logits) {
    Tensor p = logits;
    double mx = *std::max_element(p.data.begin(), p.data.end());
    double sum = 0.0;
    for (double& v : p.data) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : p.data) v /= sum;
    return p;
}

double cross_entropy(const Tensor& logits, int label, Tensor* grad) {
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
        throw std::out_of_range("cross_entropy: label out of range");
    const double mx = *std::max_element(logits.data.begin(), logits.data.end());
    double sum = 0.0;
    for (double v : logits.data) sum += std::exp(v - mx);
    const double loss = mx + std::log(sum) - logits.data[label];
    if (grad) {
        *grad = softmax(logits);
        grad->data[label] -= 1.0;
    }
    return loss;
}

GradCheckResult grad_check(const std::function<double()>& loss, const std::vector<GradCheckItem>& items,
                           double h) {
    GradCheckResult res;
    for (const GradCheckItem& item : items) {
        check_shape(item.analytic->size() == item.param->size(), "grad_check analytic shape");
        for (std::size_t k = 0; k < item.param->size(); ++k) {
            const double saved = item.param->data[k];
            item.param->data[k] = saved + h;
            const double lp = loss();
            item.param->data[k] = saved - h;
            const double lm = loss();
            item.param->data[k] = saved;
            const double numeric = (lp - lm) / (2.0 * h);
            const double analytic = item.analytic->data[k];
            const double rel = std::fabs(analytic - numeric) /
                               std::max(1e-8, std::fabs(analytic) + std::fabs(numeric));
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst_name = item.name;
                res.worst_index = k;
                res.analytic = analytic;
                res.numeric = numeric;
            }
        }
    }
    return res;
}

}  // namespace sosnet
