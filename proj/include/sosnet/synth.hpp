#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sosnet/imageio.hpp"

namespace sosnet {

// Synthetic lesion datasets. In RADIAL_PERMUTATION mode every class paints
// the same three texture primitives onto the K_gen equal-width annuli of
// the lesion disc, in a class-specific radial order; the primitives share
// one per-pixel intensity distribution (a +-amplitude binary field at
// spatial scales 1 px / 4 px / 8 px), so classes are indistinguishable by
// intensity statistics and differ only in the radial arrangement. PROFILE
// mode gives each class a distinct radial intensity profile instead (an
// easier, order-free task).
struct SynthConfig {
    enum class Mode { RadialPermutation, Profile };
    Mode mode = Mode::RadialPermutation;
    int n_train = 400;
    int n_test = 200;
    int image_size = 256;
    int classes = 4;
    int k_gen = 3;
    double noise_sigma = 0.05;
    std::uint64_t seed = 1;

    void validate() const;
};

SynthConfig::Mode synth_mode_from_name(const std::string& name);

struct SynthSample {
    Image image;
    LesionAnnotation annotation;  // exact generation centroid/radius/label
};

// Class c uses the c-th permutation of {0..k_gen-1} in lexicographic order.
std::vector<std::vector<int>> class_permutations(int k_gen, int classes);

// Deterministic in (cfg.seed, image_index); the label is assigned
// round-robin by position within the split.
SynthSample render_sample(const SynthConfig& cfg, int label, std::uint64_t image_index);

// Writes train_NNNN.pgm / test_NNNN.pgm plus manifest.json into out_dir and
// returns the manifest. Embarrassingly parallel per image.
DatasetManifest generate(const SynthConfig& cfg, const std::string& out_dir, int threads = 1);

}  // namespace sosnet
