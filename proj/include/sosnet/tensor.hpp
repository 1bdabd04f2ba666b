#pragma once

#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace sosnet {

// Dense row-major 64-bit tensor with an optional same-shape gradient
// buffer. grad is empty until ensure_grad() is called.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;
    std::vector<double> grad;

    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> shp) {
        Tensor t;
        std::size_t n = 1;
        for (std::size_t d : shp) n *= d;
        t.shape = std::move(shp);
        t.data.assign(n, 0.0);
        return t;
    }

    std::size_t size() const { return data.size(); }

    std::size_t dim(std::size_t i) const { return shape.at(i); }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    // 3-d index (row, col, channel) for HxWxC activations.
    double& at3(std::size_t r, std::size_t c, std::size_t ch) {
        return data[(r * shape[1] + c) * shape[2] + ch];
    }
    double at3(std::size_t r, std::size_t c, std::size_t ch) const {
        return data[(r * shape[1] + c) * shape[2] + ch];
    }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
    void zero_grad() {
        grad.assign(data.size(), 0.0);
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline void check_shape(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("shape mismatch: " + what);
}

}  // namespace sosnet
