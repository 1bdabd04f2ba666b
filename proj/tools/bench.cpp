// Benchmark: the OpenMP sample-parallel gradient/evaluation kernels against
// the serial reference path, verifying bit-identical results while timing.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "sosnet/eval.hpp"
#include "sosnet/models.hpp"
#include "sosnet/parallel.hpp"
#include "sosnet/synth.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct BatchResult {
    sosnet::ModelGrads grads;
    double loss_sum = 0.0;
};

// Per-sample gradients into private slots, then a fixed-order reduction:
// the same scheme fit() uses, timed in isolation.
BatchResult batch_gradients(const std::vector<sosnet::PatchSequence>& seqs,
                            const sosnet::ModelParams& params, int threads) {
    std::vector<sosnet::ModelGrads> slots;
    slots.reserve(seqs.size());
    for (std::size_t i = 0; i < seqs.size(); ++i) slots.push_back(sosnet::make_grads(params));
    std::vector<double> losses(seqs.size(), 0.0);

    sosnet::parallel_for(seqs.size(), threads, [&](std::size_t i) {
        losses[i] = sosnet::loss_and_grad_sos(seqs[i], params, slots[i]);
    });

    BatchResult out{sosnet::make_grads(params), 0.0};
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        sosnet::add_scaled_grads(out.grads, slots[i], 1.0 / static_cast<double>(seqs.size()));
        out.loss_sum += losses[i];
    }
    return out;
}

bool grads_identical(sosnet::ModelGrads& a, sosnet::ModelGrads& b) {
    auto ta = a.named_tensors();
    auto tb = b.named_tensors();
    for (std::size_t i = 0; i < ta.size(); ++i) {
        const auto& da = ta[i].second->data;
        const auto& db = tb[i].second->data;
        if (da.size() != db.size()) return false;
        if (std::memcmp(da.data(), db.data(), da.size() * sizeof(double)) != 0) return false;
    }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    int n_samples = 24;
    int threads = sosnet::hardware_threads();
    int repeats = 3;
    for (int i = 1; i + 1 < argc; i += 2) {
        if (std::strcmp(argv[i], "--samples") == 0) n_samples = std::atoi(argv[i + 1]);
        else if (std::strcmp(argv[i], "--threads") == 0) threads = std::atoi(argv[i + 1]);
        else if (std::strcmp(argv[i], "--repeats") == 0) repeats = std::atoi(argv[i + 1]);
    }

    sosnet::SynthConfig scfg;
    scfg.image_size = 128;
    scfg.seed = 7;
    sosnet::ModelConfig mc;
    mc.variant = sosnet::VariantId::SOS;
    mc.channels = 1;
    const sosnet::ModelParams params = sosnet::init_params(mc, 7);

    std::printf("building %d synthetic samples...\n", n_samples);
    std::vector<sosnet::PatchSequence> seqs;
    std::size_t patch_total = 0;
    for (int i = 0; i < n_samples; ++i) {
        sosnet::SynthSample s = sosnet::render_sample(scfg, i % scfg.classes, static_cast<std::uint64_t>(i));
        seqs.push_back(sosnet::build_sequence(s.image, s.annotation, mc.sample_config(), mc.k,
                                              sosnet::SequenceMode::SOS));
        patch_total += seqs.back().patch_count();
    }
    std::printf("  %zu patches across %d samples\n", patch_total, n_samples);

    // warm-up + reference
    BatchResult serial = batch_gradients(seqs, params, 1);

    double t_serial = 1e300, t_parallel = 1e300;
    for (int r = 0; r < repeats; ++r) {
        auto t0 = Clock::now();
        BatchResult s = batch_gradients(seqs, params, 1);
        t_serial = std::min(t_serial, seconds_since(t0));
        if (!grads_identical(serial.grads, s.grads)) {
            std::printf("FAIL: serial run not reproducible\n");
            return 1;
        }
    }
    BatchResult parallel = batch_gradients(seqs, params, threads);
    for (int r = 0; r < repeats; ++r) {
        auto t0 = Clock::now();
        BatchResult p = batch_gradients(seqs, params, threads);
        t_parallel = std::min(t_parallel, seconds_since(t0));
        if (!grads_identical(serial.grads, p.grads)) {
            std::printf("FAIL: parallel gradients differ from serial reference\n");
            return 1;
        }
    }
    if (!grads_identical(serial.grads, parallel.grads)) {
        std::printf("FAIL: parallel gradients differ from serial reference\n");
        return 1;
    }

    std::printf("batch gradients (%d samples):\n", n_samples);
    std::printf("  serial    %8.1f ms  (%.1f patches/s)\n", t_serial * 1e3, patch_total / t_serial);
    std::printf("  %d threads %8.1f ms  (%.1f patches/s)  speedup %.2fx\n", threads, t_parallel * 1e3,
                patch_total / t_parallel, t_serial / t_parallel);
    std::printf("  bit-identical: yes\n");
    return 0;
}
