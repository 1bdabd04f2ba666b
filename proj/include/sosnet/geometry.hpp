#pragma once

#include <vector>

#include "sosnet/imageio.hpp"
#include "sosnet/rng.hpp"
#include "sosnet/tensor.hpp"

namespace sosnet {

// Concentric partition of the lesion disc: boundaries[0]=0 < ... < boundaries[K]=r.
struct RingPartition {
    double cx = 0.0;
    double cy = 0.0;
    std::vector<double> boundaries;

    int ring_count() const { return static_cast<int>(boundaries.size()) - 1; }
};

struct SampleConfig {
    int side = 32;          // patch side, pixels
    double arc_step = 16.0; // target spacing between centers along a ring
    int n_min = 4;          // minimum centers per ring (when ring-sampled)
};

// One sampled patch location. (raw_x, raw_y) is the geometric center before
// border clamping; (x0, y0) is the clamped top-left of the side*side window.
struct PatchSite {
    int set_index = 1;  // 1..K, inner to outer
    double angle = 0.0;
    double raw_x = 0.0;
    double raw_y = 0.0;
    int x0 = 0;
    int y0 = 0;
    bool centroid_fallback = false;  // ring too small, single center at the centroid
};

struct Patch {
    int set_index = 1;
    double angle = 0.0;
    double cx = 0.0;  // clamped center
    double cy = 0.0;
    int side = 0;
    Tensor data;  // side x side x channels, values in [0, 1]
};

enum class SequenceMode { SOS, SOP, ROP };

const char* sequence_mode_name(SequenceMode m);

struct PatchSequence {
    SequenceMode mode = SequenceMode::SOS;
    std::vector<std::vector<Patch>> sets;  // SOS: K non-empty sets, inner to outer
    std::vector<Patch> flat;               // SOP/ROP
    int label = 0;

    std::size_t patch_count() const {
        if (mode == SequenceMode::SOS) {
            std::size_t n = 0;
            for (const auto& s : sets) n += s.size();
            return n;
        }
        return flat.size();
    }
};

// Equal radial division: boundaries[i] = r*i/K.
RingPartition partition(const LesionAnnotation& annotation, int k);

// Ring i gets centers on its mid-circle at radius m_i=(b_{i-1}+b_i)/2:
// a single centroid center when m_i < side/2, otherwise
// max(n_min, ceil(2*pi*m_i/arc_step)) centers at uniform angles. Windows are
// clamped into the image; throws if the image cannot contain one patch.
std::vector<PatchSite> sample_centers(const RingPartition& part, const SampleConfig& cfg,
                                      int img_width, int img_height);

// side*side window with top-left (x0, y0); pixel values scaled into [0, 1].
Tensor extract_patch(const Image& img, int x0, int y0, int side);

// SOS groups patches by ring, inner to outer; SOP flattens in
// (set_index asc, angle asc) order; ROP applies a uniform permutation of the
// SOP list drawn from `rng` (required for ROP, ignored otherwise).
PatchSequence build_sequence(const Image& img, const LesionAnnotation& annotation,
                             const SampleConfig& cfg, int k, SequenceMode mode, Rng* rng = nullptr);

// Training-time augmentation: each patch kept with probability 1-p; a set
// that would empty out keeps one uniformly chosen patch instead.
// Instrumented via set_dropout_call_count() so tests can prove evaluation
// paths never invoke it.
PatchSequence set_dropout(const PatchSequence& seq, double p, Rng& rng);

std::uint64_t set_dropout_call_count();

// Nearest-neighbor downscale, source pixel floor(x*sw/tw).
Image downscale(const Image& img, int target_w, int target_h);

}  // namespace sosnet
