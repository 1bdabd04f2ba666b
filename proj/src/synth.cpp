#include "sosnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "sosnet/parallel.hpp"
#include "sosnet/rng.hpp"

namespace sosnet {

namespace {

// Texture constants. All three primitives flip a +-kAmplitude field around
// kBase with a 50/50 sign balance, so their intensity marginals coincide;
// only the spatial scale of the sign field differs.
constexpr double kBase = 0.5;
constexpr double kAmplitude = 0.25;
constexpr int kStripeWidth = 4;
constexpr int kCheckerCell = 8;
constexpr double kRadiusLo = 0.15;   // radius range, fraction of image size
constexpr double kRadiusHi = 0.30;
constexpr double kProfileDepth = 0.3;

long long factorial(int n) {
    long long f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

int hash_sign(std::uint64_t seed, long ix, long iy) {
    std::uint64_t h = splitmix64(seed ^ (static_cast<std::uint64_t>(ix) * 0x9E3779B97F4A7C15ULL));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(iy) * 0xC2B2AE3D27D4EB4FULL));
    return (h & 1) ? 1 : -1;
}

struct TextureParams {
    std::uint64_t speckle_seed = 0;
    std::uint64_t checker_seed = 0;
    double checker_ox = 0.0, checker_oy = 0.0;
    double stripe_cos = 1.0, stripe_sin = 0.0, stripe_phase = 0.0;
};

// primitive 0: 1 px speckle; 1: 4 px stripes; 2: 8 px checker cells.
// k_gen > 3 reuses the three primitives cyclically (rings remain
// distinguishable by their neighbors' order).
double primitive_value(int primitive, double x, double y, const TextureParams& tp) {
    switch (primitive % 3) {
        case 0:
            return kBase + kAmplitude * hash_sign(tp.speckle_seed, static_cast<long>(x), static_cast<long>(y));
        case 1: {
            const double t = x * tp.stripe_cos + y * tp.stripe_sin + tp.stripe_phase;
            const long band = static_cast<long>(std::floor(t / kStripeWidth));
            return kBase + kAmplitude * ((band & 1) ? 1 : -1);
        }
        default: {
            const long cx = static_cast<long>(std::floor((x + tp.checker_ox) / kCheckerCell));
            const long cy = static_cast<long>(std::floor((y + tp.checker_oy) / kCheckerCell));
            return kBase + kAmplitude * hash_sign(tp.checker_seed, cx, cy);
        }
    }
}

}  // namespace

void SynthConfig::validate() const {
    if (classes < 2) throw std::invalid_argument("synth config: classes must be >= 2");
    if (k_gen < 1 || k_gen > 8) throw std::invalid_argument("synth config: k_gen must be in 1..8");
    if (image_size < 128)
        throw std::invalid_argument("synth config: image_size must be >= 128 (4x the default patch side)");
    if (n_train < 1 || n_test < 0) throw std::invalid_argument("synth config: bad split sizes");
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("synth config: noise_sigma must be >= 0");
    if (mode == Mode::RadialPermutation && classes > factorial(k_gen))
        throw std::invalid_argument("synth config: " + std::to_string(classes) + " classes exceed " +
                                    std::to_string(factorial(k_gen)) + " distinct permutations of " +
                                    std::to_string(k_gen) + " ring textures");
}

SynthConfig::Mode synth_mode_from_name(const std::string& name) {
    if (name == "radial-permutation") return SynthConfig::Mode::RadialPermutation;
    if (name == "profile") return SynthConfig::Mode::Profile;
    throw std::invalid_argument("unknown synth mode \"" + name + "\" (want radial-permutation|profile)");
}

std::vector<std::vector<int>> class_permutations(int k_gen, int classes) {
    std::vector<int> perm(k_gen);
    for (int i = 0; i < k_gen; ++i) perm[i] = i;
    std::vector<std::vector<int>> out;
    do {
        out.push_back(perm);
        if (static_cast<int>(out.size()) == classes) return out;
    } while (std::next_permutation(perm.begin(), perm.end()));
    throw std::invalid_argument("class_permutations: not enough permutations for " + std::to_string(classes) +
                                " classes");
}

SynthSample render_sample(const SynthConfig& cfg, int label, std::uint64_t image_index) {
    cfg.validate();
    if (label < 0 || label >= cfg.classes) throw std::invalid_argument("render_sample: label out of range");

    Rng rng(derive_seed(cfg.seed, stream::kSynthBase + image_index));
    const int s = cfg.image_size;

    // Draw order is part of the format: centroid, radius, texture params,
    // then per-pixel noise in row-major order.
    const double cx = rng.next_uniform(0.25 * s, 0.75 * s);
    const double cy = rng.next_uniform(0.25 * s, 0.75 * s);
    const double r = rng.next_uniform(kRadiusLo * s, kRadiusHi * s);

    TextureParams tp;
    tp.speckle_seed = rng.next_u64();
    tp.checker_seed = rng.next_u64();
    tp.checker_ox = rng.next_uniform(0.0, kCheckerCell);
    tp.checker_oy = rng.next_uniform(0.0, kCheckerCell);
    const double phi = rng.next_uniform(0.0, 3.14159265358979323846);
    tp.stripe_cos = std::cos(phi);
    tp.stripe_sin = std::sin(phi);
    tp.stripe_phase = rng.next_uniform(0.0, 4.0 * kStripeWidth);

    const std::vector<std::vector<int>> perms =
        cfg.mode == SynthConfig::Mode::RadialPermutation ? class_permutations(cfg.k_gen, cfg.classes)
                                                         : std::vector<std::vector<int>>{};

    Image img;
    img.width = s;
    img.height = s;
    img.channels = 1;
    img.pixels.resize(static_cast<std::size_t>(s) * s);

    std::size_t idx = 0;
    for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x, ++idx) {
            const double dx = x - cx;
            const double dy = y - cy;
            const double dist = std::sqrt(dx * dx + dy * dy);
            double v;
            if (dist <= r) {
                const double u = dist / r;  // 0 center .. 1 rim
                if (cfg.mode == SynthConfig::Mode::RadialPermutation) {
                    int ring = std::min(cfg.k_gen - 1, static_cast<int>(u * cfg.k_gen));
                    v = primitive_value(perms[label][ring], x, y, tp);
                } else {
                    v = kBase + kProfileDepth *
                                    std::cos(3.14159265358979323846 * u +
                                             6.28318530717958647692 * label / cfg.classes);
                }
            } else {
                v = kBase;
            }
            v += rng.next_normal(0.0, cfg.noise_sigma);
            v = std::clamp(v, 0.0, 1.0);
            img.pixels[idx] = static_cast<std::uint8_t>(std::llround(v * 255.0));
        }
    }

    SynthSample out;
    out.image = std::move(img);
    out.annotation.cx = cx;
    out.annotation.cy = cy;
    out.annotation.r = r;
    out.annotation.label = label;
    return out;
}

DatasetManifest generate(const SynthConfig& cfg, const std::string& out_dir, int threads) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);

    DatasetManifest manifest;
    if (cfg.classes == 4) {
        manifest.classes = {"BK", "FK", "HSK", "Others"};
    } else {
        for (int c = 0; c < cfg.classes; ++c) manifest.classes.push_back("class_" + std::to_string(c));
    }

    const int total = cfg.n_train + cfg.n_test;
    std::vector<SynthSample> samples(total);
    parallel_for(static_cast<std::size_t>(total), threads, [&](std::size_t i) {
        const bool train = static_cast<int>(i) < cfg.n_train;
        const int pos = train ? static_cast<int>(i) : static_cast<int>(i) - cfg.n_train;
        const int label = pos % cfg.classes;
        samples[i] = render_sample(cfg, label, i);
        char name[48];
        std::snprintf(name, sizeof(name), "%s_%04d.pgm", train ? "train" : "test", pos);
        samples[i].annotation.image_path = name;
        write_image(samples[i].image, out_dir + "/" + name);
        samples[i].image = Image{};  // free pixel data as we go
    });

    for (int i = 0; i < total; ++i) {
        if (i < cfg.n_train)
            manifest.train.push_back(samples[i].annotation);
        else
            manifest.test.push_back(samples[i].annotation);
    }
    save_manifest(manifest, out_dir + "/manifest.json");
    return manifest;
}

}  // namespace sosnet
