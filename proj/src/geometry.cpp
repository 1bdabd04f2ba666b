#include "sosnet/geometry.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

namespace sosnet {

namespace {
constexpr double kTwoPi = 6.283185307179586476925287;
std::atomic<std::uint64_t> g_set_dropout_calls{0};
}  // namespace

const char* sequence_mode_name(SequenceMode m) {
    switch (m) {
        case SequenceMode::SOS: return "sos";
        case SequenceMode::SOP: return "sop";
        case SequenceMode::ROP: return "rop";
    }
    return "?";
}

RingPartition partition(const LesionAnnotation& annotation, int k) {
    if (k < 1) throw std::invalid_argument("partition: K must be >= 1");
    if (!(annotation.r > 0.0)) throw std::invalid_argument("partition: annotation radius must be > 0");
    RingPartition part;
    part.cx = annotation.cx;
    part.cy = annotation.cy;
    part.boundaries.resize(k + 1);
    for (int i = 0; i <= k; ++i) part.boundaries[i] = annotation.r * i / k;
    return part;
}

namespace {

int clamp_window(double center, int side, int img_dim) {
    // Window top-left so the rounded center sits at x0 + side/2.
    int c = static_cast<int>(std::llround(center));
    int x0 = c - side / 2;
    return std::clamp(x0, 0, img_dim - side);
}

}  // namespace

std::vector<PatchSite> sample_centers(const RingPartition& part, const SampleConfig& cfg,
                                      int img_width, int img_height) {
    if (cfg.side < 2) throw std::invalid_argument("sample_centers: side must be >= 2");
    if (!(cfg.arc_step > 0.0)) throw std::invalid_argument("sample_centers: arc_step must be > 0");
    if (cfg.n_min < 1) throw std::invalid_argument("sample_centers: n_min must be >= 1");
    if (img_width < cfg.side || img_height < cfg.side)
        throw std::runtime_error("sample_centers: image " + std::to_string(img_width) + "x" +
                                 std::to_string(img_height) + " cannot contain a " +
                                 std::to_string(cfg.side) + "px patch");

    std::vector<PatchSite> out;
    const int k = part.ring_count();
    for (int i = 1; i <= k; ++i) {
        const double mid = 0.5 * (part.boundaries[i - 1] + part.boundaries[i]);
        if (mid < cfg.side / 2.0) {
            PatchSite s;
            s.set_index = i;
            s.angle = 0.0;
            s.raw_x = part.cx;
            s.raw_y = part.cy;
            s.centroid_fallback = true;
            s.x0 = clamp_window(s.raw_x, cfg.side, img_width);
            s.y0 = clamp_window(s.raw_y, cfg.side, img_height);
            out.push_back(s);
            continue;
        }
        const int n = std::max<long>(cfg.n_min, static_cast<long>(std::ceil(kTwoPi * mid / cfg.arc_step)));
        for (int j = 0; j < n; ++j) {
            PatchSite s;
            s.set_index = i;
            s.angle = kTwoPi * j / n;
            s.raw_x = part.cx + mid * std::cos(s.angle);
            s.raw_y = part.cy + mid * std::sin(s.angle);
            s.x0 = clamp_window(s.raw_x, cfg.side, img_width);
            s.y0 = clamp_window(s.raw_y, cfg.side, img_height);
            out.push_back(s);
        }
    }
    return out;
}

Tensor extract_patch(const Image& img, int x0, int y0, int side) {
    if (x0 < 0 || y0 < 0 || x0 + side > img.width || y0 + side > img.height)
        throw std::out_of_range("extract_patch: window out of bounds");
    Tensor t = Tensor::zeros({static_cast<std::size_t>(side), static_cast<std::size_t>(side),
                              static_cast<std::size_t>(img.channels)});
    std::size_t idx = 0;
    for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x)
            for (int c = 0; c < img.channels; ++c) t[idx++] = img.at(x, y, c) / 255.0;
    return t;
}

PatchSequence build_sequence(const Image& img, const LesionAnnotation& annotation,
                             const SampleConfig& cfg, int k, SequenceMode mode, Rng* rng) {
    RingPartition part = partition(annotation, k);
    std::vector<PatchSite> sites = sample_centers(part, cfg, img.width, img.height);

    // sites come out in (set_index asc, angle asc) order already: SOP order.
    std::vector<Patch> sop;
    sop.reserve(sites.size());
    for (const PatchSite& s : sites) {
        Patch p;
        p.set_index = s.set_index;
        p.angle = s.angle;
        p.cx = s.x0 + cfg.side / 2.0;
        p.cy = s.y0 + cfg.side / 2.0;
        p.side = cfg.side;
        p.data = extract_patch(img, s.x0, s.y0, cfg.side);
        sop.push_back(std::move(p));
    }

    PatchSequence seq;
    seq.label = annotation.label;
    seq.mode = mode;
    switch (mode) {
        case SequenceMode::SOS: {
            seq.sets.resize(k);
            for (Patch& p : sop) seq.sets[p.set_index - 1].push_back(std::move(p));
            break;
        }
        case SequenceMode::SOP: {
            seq.flat = std::move(sop);
            break;
        }
        case SequenceMode::ROP: {
            if (rng == nullptr) throw std::invalid_argument("build_sequence: ROP requires an RNG");
            std::vector<std::size_t> perm = rng->permutation(sop.size());
            seq.flat.reserve(sop.size());
            for (std::size_t j : perm) seq.flat.push_back(std::move(sop[j]));
            break;
        }
    }
    return seq;
}

PatchSequence set_dropout(const PatchSequence& seq, double p, Rng& rng) {
    if (seq.mode != SequenceMode::SOS)
        throw std::invalid_argument("set_dropout: only defined for SOS sequences");
    if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("set_dropout: p must be in [0, 1)");
    g_set_dropout_calls.fetch_add(1, std::memory_order_relaxed);

    PatchSequence out;
    out.mode = SequenceMode::SOS;
    out.label = seq.label;
    out.sets.resize(seq.sets.size());
    for (std::size_t i = 0; i < seq.sets.size(); ++i) {
        const auto& src = seq.sets[i];
        auto& dst = out.sets[i];
        for (const Patch& patch : src)
            if (rng.next_unit() >= p) dst.push_back(patch);
        if (dst.empty() && !src.empty())
            dst.push_back(src[rng.next_below(src.size())]);
    }
    return out;
}

std::uint64_t set_dropout_call_count() { return g_set_dropout_calls.load(std::memory_order_relaxed); }

Image downscale(const Image& img, int target_w, int target_h) {
    if (target_w < 1 || target_h < 1) throw std::invalid_argument("downscale: targets must be >= 1");
    Image out;
    out.width = target_w;
    out.height = target_h;
    out.channels = img.channels;
    out.pixels.resize(static_cast<std::size_t>(target_w) * target_h * img.channels);
    for (int y = 0; y < target_h; ++y) {
        int sy = static_cast<int>(static_cast<long long>(y) * img.height / target_h);
        for (int x = 0; x < target_w; ++x) {
            int sx = static_cast<int>(static_cast<long long>(x) * img.width / target_w);
            for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(sx, sy, c);
        }
    }
    return out;
}

}  // namespace sosnet
