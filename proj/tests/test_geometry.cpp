#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "helpers.hpp"
#include "sosnet/geometry.hpp"

using namespace sosnet;

namespace {

Image flat_image(int w, int h, std::uint8_t value, int channels = 1) {
    Image img;
    img.width = w;
    img.height = h;
    img.channels = channels;
    img.pixels.assign(static_cast<std::size_t>(w) * h * channels, value);
    return img;
}

LesionAnnotation ann(double cx, double cy, double r, int label = 0) {
    LesionAnnotation a;
    a.image_path = "mem";
    a.cx = cx;
    a.cy = cy;
    a.r = r;
    a.label = label;
    return a;
}

// Independent center-count oracle: the emission rule recomputed directly.
int expected_ring_centers(double b_lo, double b_hi, const SampleConfig& cfg) {
    const double mid = 0.5 * (b_lo + b_hi);
    if (mid < cfg.side / 2.0) return 1;
    return std::max(cfg.n_min, static_cast<int>(std::ceil(2.0 * 3.14159265358979323846 * mid / cfg.arc_step)));
}

}  // namespace

TEST_CASE("partition equal radial division") {
    RingPartition p = partition(ann(50, 50, 30), 3);
    REQUIRE(p.boundaries.size() == 4);
    CHECK(p.boundaries[0] == 0.0);
    CHECK(p.boundaries[1] == doctest::Approx(10.0));
    CHECK(p.boundaries[2] == doctest::Approx(20.0));
    CHECK(p.boundaries[3] == doctest::Approx(30.0));

    RingPartition p1 = partition(ann(50, 50, 30), 1);
    REQUIRE(p1.boundaries.size() == 2);
    CHECK(p1.boundaries[1] == doctest::Approx(30.0));

    // interval membership: distance 15 falls in ring 2 of the K=3 partition
    const double d = 15.0;
    int ring = 0;
    for (int i = 1; i <= 3; ++i)
        if (d >= p.boundaries[i - 1] && d < p.boundaries[i]) ring = i;
    CHECK(ring == 2);

    CHECK_THROWS(partition(ann(50, 50, 30), 0));
    CHECK_THROWS(partition(ann(50, 50, 0.0), 3));
    CHECK_THROWS(partition(ann(50, 50, -2.0), 3));
}

TEST_CASE("sample_centers central disc gets one centroid center") {
    // b_1 = 10, side = 32: mid radius 5 < 16
    RingPartition p = partition(ann(128, 128, 30), 3);
    SampleConfig cfg{32, 16.0, 4};
    auto sites = sample_centers(p, cfg, 256, 256);
    int ring1 = 0;
    for (const auto& s : sites)
        if (s.set_index == 1) {
            ++ring1;
            CHECK(s.centroid_fallback);
            CHECK(s.raw_x == doctest::Approx(128));
            CHECK(s.raw_y == doctest::Approx(128));
        }
    CHECK(ring1 == 1);
}

TEST_CASE("sample_centers ring counts match the ceil rule") {
    // r=30, K=3 with side 16: mids 5, 15, 25 -> counts 1, 6, 10
    RingPartition p = partition(ann(128, 128, 30), 3);
    SampleConfig cfg{16, 16.0, 4};
    CHECK(expected_ring_centers(20, 30, cfg) == 10);  // ceil(2*pi*25/16) = ceil(9.817...) = 10

    auto sites = sample_centers(p, cfg, 256, 256);
    std::map<int, int> counts;
    for (const auto& s : sites) counts[s.set_index] += 1;
    CHECK(counts[1] == expected_ring_centers(0, 10, cfg));
    CHECK(counts[2] == expected_ring_centers(10, 20, cfg));
    CHECK(counts[3] == expected_ring_centers(20, 30, cfg));
    CHECK(counts[1] == 1);
    CHECK(counts[2] == 6);
    CHECK(counts[3] == 10);
}

TEST_CASE("sample_centers clamping keeps windows inside; raw radius in ring interval") {
    Rng rng(99);
    SampleConfig cfg{16, 9.0, 3};
    const int W = 120, H = 90;
    for (int trial = 0; trial < 200; ++trial) {
        // annotations all over the image, including corners
        const double cx = rng.next_uniform(0.0, W - 1.0);
        const double cy = rng.next_uniform(0.0, H - 1.0);
        const double r = rng.next_uniform(1.0, 60.0);
        const int k = 1 + static_cast<int>(rng.next_below(4));
        RingPartition p = partition(ann(cx, cy, r), k);
        auto sites = sample_centers(p, cfg, W, H);
        CHECK(!sites.empty());
        std::set<int> seen;
        for (const auto& s : sites) {
            seen.insert(s.set_index);
            CHECK(s.x0 >= 0);
            CHECK(s.y0 >= 0);
            CHECK(s.x0 + cfg.side <= W);
            CHECK(s.y0 + cfg.side <= H);
            if (s.centroid_fallback) {
                CHECK(s.raw_x == cx);
                CHECK(s.raw_y == cy);
            } else {
                const double dist = std::hypot(s.raw_x - cx, s.raw_y - cy);
                CHECK(dist >= p.boundaries[s.set_index - 1] - 1e-9);
                CHECK(dist < p.boundaries[s.set_index]);
            }
        }
        CHECK(static_cast<int>(seen.size()) == k);  // every set non-empty
    }
}

TEST_CASE("sample_centers image too small") {
    RingPartition p = partition(ann(4, 4, 3), 2);
    SampleConfig cfg{16, 8.0, 4};
    CHECK_THROWS(sample_centers(p, cfg, 8, 8));
}

TEST_CASE("extract_patch values and purity") {
    Image zeros = flat_image(64, 64, 0);
    Tensor pz = extract_patch(zeros, 8, 8, 16);
    for (double v : pz.data) CHECK(v == 0.0);

    Image whites = flat_image(64, 64, 255, 3);
    Tensor pw = extract_patch(whites, 0, 0, 16);
    CHECK(pw.shape[2] == 3);
    for (double v : pw.data) CHECK(v == 1.0);

    // overlapping windows share the overlap exactly
    Image img = flat_image(64, 64, 0);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) img.at(x, y, 0) = static_cast<std::uint8_t>((x * 7 + y * 13) % 256);
    Tensor a = extract_patch(img, 10, 10, 16);
    Tensor b = extract_patch(img, 14, 10, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 4; x < 16; ++x) CHECK(a.at3(y, x, 0) == b.at3(y, x - 4, 0));

    CHECK_THROWS(extract_patch(img, 60, 0, 16));
}

TEST_CASE("build_sequence modes") {
    Image img = flat_image(256, 256, 0);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i * 31 % 256);
    LesionAnnotation a = ann(128, 128, 30, 2);
    SampleConfig cfg{16, 16.0, 4};

    PatchSequence sos = build_sequence(img, a, cfg, 3, SequenceMode::SOS);
    REQUIRE(sos.sets.size() == 3);
    CHECK(sos.sets[0].size() == 1);
    CHECK(sos.sets[1].size() == 6);
    CHECK(sos.sets[2].size() == 10);
    CHECK(sos.label == 2);

    PatchSequence sop = build_sequence(img, a, cfg, 3, SequenceMode::SOP);
    CHECK(sop.flat.size() == 17);
    for (std::size_t i = 0; i + 1 < sop.flat.size(); ++i) {
        const Patch& x = sop.flat[i];
        const Patch& y = sop.flat[i + 1];
        const bool ordered = x.set_index < y.set_index || (x.set_index == y.set_index && x.angle < y.angle);
        CHECK(ordered);
    }

    // byte-identical determinism of SOP
    PatchSequence sop2 = build_sequence(img, a, cfg, 3, SequenceMode::SOP);
    REQUIRE(sop2.flat.size() == sop.flat.size());
    for (std::size_t i = 0; i < sop.flat.size(); ++i) CHECK(sop.flat[i].data.data == sop2.flat[i].data.data);

    // ROP with a seed is a permutation of SOP (multiset equality)
    Rng r1(123);
    PatchSequence rop = build_sequence(img, a, cfg, 3, SequenceMode::ROP, &r1);
    REQUIRE(rop.flat.size() == sop.flat.size());
    auto key = [](const Patch& p) { return std::make_pair(p.set_index, p.angle); };
    std::multiset<std::pair<int, double>> ks, kr;
    for (const auto& p : sop.flat) ks.insert(key(p));
    for (const auto& p : rop.flat) kr.insert(key(p));
    CHECK(ks == kr);

    // same seed -> same permutation
    Rng r2(123);
    PatchSequence rop2 = build_sequence(img, a, cfg, 3, SequenceMode::ROP, &r2);
    for (std::size_t i = 0; i < rop.flat.size(); ++i) CHECK(rop.flat[i].angle == rop2.flat[i].angle);

    CHECK_THROWS(build_sequence(img, a, cfg, 3, SequenceMode::ROP, nullptr));

    // K=1 degenerate: one set; SOS and SOP see identical patch multisets
    PatchSequence sos1 = build_sequence(img, a, cfg, 1, SequenceMode::SOS);
    PatchSequence sop1 = build_sequence(img, a, cfg, 1, SequenceMode::SOP);
    REQUIRE(sos1.sets.size() == 1);
    CHECK(sos1.sets[0].size() == sop1.flat.size());
    for (std::size_t i = 0; i < sop1.flat.size(); ++i)
        CHECK(sos1.sets[0][i].data.data == sop1.flat[i].data.data);
}

TEST_CASE("set_dropout") {
    Image img = flat_image(256, 256, 100);
    LesionAnnotation a = ann(128, 128, 40);
    SampleConfig cfg{16, 12.0, 4};
    PatchSequence base = build_sequence(img, a, cfg, 3, SequenceMode::SOS);

    SUBCASE("p=0 is the identity") {
        Rng rng(5);
        PatchSequence out = set_dropout(base, 0.0, rng);
        REQUIRE(out.sets.size() == base.sets.size());
        for (std::size_t i = 0; i < base.sets.size(); ++i) {
            REQUIRE(out.sets[i].size() == base.sets[i].size());
            for (std::size_t j = 0; j < base.sets[i].size(); ++j)
                CHECK(out.sets[i][j].data.data == base.sets[i][j].data.data);
        }
    }
    SUBCASE("no set ever empties over many draws; singleton sets unchanged") {
        Rng rng(17);
        for (int trial = 0; trial < 10000; ++trial) {
            PatchSequence out = set_dropout(base, 0.25, rng);
            REQUIRE(out.sets.size() == base.sets.size());
            for (const auto& s : out.sets) CHECK(!s.empty());
            CHECK(out.sets[0].size() == 1);  // singleton survives verbatim
            CHECK(out.sets[0][0].data.data == base.sets[0][0].data.data);
        }
    }
    SUBCASE("same seed reproduces bit-for-bit") {
        Rng ra(33), rb(33);
        PatchSequence x = set_dropout(base, 0.4, ra);
        PatchSequence y = set_dropout(base, 0.4, rb);
        REQUIRE(x.sets.size() == y.sets.size());
        for (std::size_t i = 0; i < x.sets.size(); ++i) {
            REQUIRE(x.sets[i].size() == y.sets[i].size());
            for (std::size_t j = 0; j < x.sets[i].size(); ++j)
                CHECK(x.sets[i][j].data.data == y.sets[i][j].data.data);
        }
    }
    SUBCASE("p >= 1 rejected; call counter advances") {
        Rng rng(1);
        CHECK_THROWS(set_dropout(base, 1.0, rng));
        const std::uint64_t before = set_dropout_call_count();
        set_dropout(base, 0.1, rng);
        CHECK(set_dropout_call_count() == before + 1);
    }
}

TEST_CASE("downscale nearest neighbor") {
    Image img = flat_image(4, 4, 0);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) img.at(x, y, 0) = static_cast<std::uint8_t>(y * 4 + x);

    SUBCASE("identity at equal dims") {
        Image same = downscale(img, 4, 4);
        CHECK(same.pixels == img.pixels);
    }
    SUBCASE("2x2 to 1x1 picks floor-mapped (0,0)") {
        Image two = flat_image(2, 2, 0);
        two.at(0, 0, 0) = 9;
        two.at(1, 0, 0) = 1;
        two.at(0, 1, 0) = 2;
        two.at(1, 1, 0) = 3;
        Image one = downscale(two, 1, 1);
        CHECK(one.pixels[0] == 9);
    }
    SUBCASE("downscale twice equals once for exact power ratios") {
        Image big = flat_image(8, 8, 0);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) big.at(x, y, 0) = static_cast<std::uint8_t>((x * 37 + y * 11) % 256);
        Image once = downscale(big, 2, 2);
        Image twice = downscale(downscale(big, 4, 4), 2, 2);
        CHECK(once.pixels == twice.pixels);
    }
    SUBCASE("invalid targets") { CHECK_THROWS(downscale(img, 0, 2)); }
}
