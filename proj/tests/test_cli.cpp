#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "helpers.hpp"
#include "sosnet/imageio.hpp"
#include "sosnet/models.hpp"

#ifndef SOSNET_CLI_PATH
#error "SOSNET_CLI_PATH must be defined"
#endif

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(SOSNET_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

int count_lines(const std::string& path) {
    const auto bytes = testutil::read_bytes(path);
    return static_cast<int>(std::count(bytes.begin(), bytes.end(), '\n'));
}

std::string first_line(const std::string& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    return line;
}

// Small shared dataset + config for train/eval/compare runs.
struct CliFixture {
    testutil::TempDir tmp{"cli"};
    std::string manifest;

    CliFixture() {
        REQUIRE(run("gen-data --out " + tmp.str() + " --n-train 8 --n-test 4 --size 128 --seed 3") == 0);
        manifest = tmp.file("manifest.json");
        testutil::write_text(tmp.file("fast.json"),
                             R"({"epochs":2,"batch_size":4,"patch_side":16,"arc_step":64,)"
                             R"("n_min":2,"feature_dim":8,"hidden":8,"seed":5})");
    }
};

}  // namespace

TEST_CASE("usage errors exit 2") {
    CHECK(run("") == 2);
    CHECK(run("no-such-command") == 2);
    CHECK(run("gen-data --no-such-flag 1") == 2);
    CHECK(run("train --manifest x.json") == 2);  // missing required --out
    CHECK(run("--help") == 0);
}

TEST_CASE("gen-data") {
    testutil::TempDir tmp("cligen");

    SUBCASE("writes images plus manifest; same seed gives an identical tree") {
        REQUIRE(run("gen-data --out " + tmp.file("a") + " --n-train 6 --n-test 2 --size 128 --seed 7") == 0);
        REQUIRE(run("gen-data --out " + tmp.file("b") + " --n-train 6 --n-test 2 --size 128 --seed 7") == 0);
        auto m = sosnet::load_manifest(tmp.file("a") + "/manifest.json");
        CHECK(m.train.size() == 6);
        CHECK(m.test.size() == 2);
        CHECK(testutil::same_file_bytes(tmp.file("a") + "/manifest.json", tmp.file("b") + "/manifest.json"));
        CHECK(testutil::same_file_bytes(tmp.file("a") + "/train_0003.pgm", tmp.file("b") + "/train_0003.pgm"));
        CHECK(std::filesystem::exists(tmp.file("a") + "/test_0001.pgm"));
    }
    SUBCASE("impossible class count is a runtime error (exit 1)") {
        CHECK(run("gen-data --out " + tmp.file("c") + " --classes 7 --k-gen 3") == 1);
    }
}

TEST_CASE("train, eval, extract-patches, compare") {
    CliFixture fx;

    SUBCASE("train writes a loadable checkpoint; report rows = epochs") {
        REQUIRE(run("train --manifest " + fx.manifest + " --variant sos --config " + fx.tmp.file("fast.json") +
                    " --out " + fx.tmp.file("m.ckpt") + " --report " + fx.tmp.file("m.csv")) == 0);
        sosnet::ModelParams p = sosnet::load_checkpoint(fx.tmp.file("m.ckpt"));
        CHECK(p.config.variant == sosnet::VariantId::SOS);
        CHECK(p.config.classes == 4);
        CHECK(count_lines(fx.tmp.file("m.csv")) == 3);  // header + 2 epochs

        SUBCASE("eval produces the metric files") {
            REQUIRE(run("eval --ckpt " + fx.tmp.file("m.ckpt") + " --manifest " + fx.manifest + " --report " +
                        fx.tmp.file("rep.csv") + " --roc " + fx.tmp.file("roc.csv") + " --confusion " +
                        fx.tmp.file("conf.csv") + " --embeddings " + fx.tmp.file("emb.csv")) == 0);
            CHECK(first_line(fx.tmp.file("rep.csv")) == "metric,class,value");
            CHECK(first_line(fx.tmp.file("roc.csv")) == "class,threshold,fpr,tpr");
            CHECK(first_line(fx.tmp.file("conf.csv")) == "truth,BK,FK,HSK,Others");
            CHECK(count_lines(fx.tmp.file("conf.csv")) == 5);
            CHECK(count_lines(fx.tmp.file("emb.csv")) == 5);  // header + 4 test samples

            // determinism across reruns
            REQUIRE(run("eval --ckpt " + fx.tmp.file("m.ckpt") + " --manifest " + fx.manifest + " --report " +
                        fx.tmp.file("rep2.csv") + " --roc " + fx.tmp.file("roc2.csv") + " --confusion " +
                        fx.tmp.file("conf2.csv")) == 0);
            CHECK(testutil::same_file_bytes(fx.tmp.file("rep.csv"), fx.tmp.file("rep2.csv")));
            CHECK(testutil::same_file_bytes(fx.tmp.file("roc.csv"), fx.tmp.file("roc2.csv")));

            // ROC rows monotone per class
            std::ifstream roc(fx.tmp.file("roc.csv"));
            std::string line;
            std::getline(roc, line);
            std::string prev_class;
            double prev_fpr = 0.0, prev_tpr = 0.0;
            while (std::getline(roc, line)) {
                std::istringstream ss(line);
                std::string cls, thr, fpr, tpr;
                std::getline(ss, cls, ',');
                std::getline(ss, thr, ',');
                std::getline(ss, fpr, ',');
                std::getline(ss, tpr, ',');
                if (cls != prev_class) {
                    prev_class = cls;
                    prev_fpr = prev_tpr = 0.0;
                }
                CHECK(std::stod(fpr) >= prev_fpr);
                CHECK(std::stod(tpr) >= prev_tpr);
                prev_fpr = std::stod(fpr);
                prev_tpr = std::stod(tpr);
            }
        }
    }
    SUBCASE("missing manifest is exit 1") {
        CHECK(run("train --manifest " + fx.tmp.file("absent.json") + " --out " + fx.tmp.file("x.ckpt")) == 1);
        CHECK(run("eval --ckpt " + fx.tmp.file("absent.ckpt") + " --manifest " + fx.manifest + " --report r --roc r2 --confusion r3") == 1);
    }
    SUBCASE("extract-patches dumps the sequence with a layout csv") {
        REQUIRE(run("extract-patches --manifest " + fx.manifest + " --index 0 --k 3 --side 16 --n-min 2 " +
                    "--arc-step 64 --out " + fx.tmp.file("patches")) == 0);
        CHECK(first_line(fx.tmp.file("patches") + "/layout.csv") == "set_index,angle,cx,cy");
        int n_patches = 0;
        for (const auto& entry : std::filesystem::directory_iterator(fx.tmp.file("patches")))
            if (entry.path().extension() == ".pgm") ++n_patches;
        CHECK(n_patches == count_lines(fx.tmp.file("patches") + "/layout.csv") - 1);
        CHECK(n_patches >= 3);

        CHECK(run("extract-patches --manifest " + fx.manifest + " --index 99 --out " +
                  fx.tmp.file("nope")) == 1);
    }
    SUBCASE("compare writes one row per variant with the exact header") {
        testutil::write_text(fx.tmp.file("cmp.json"),
                             R"({"epochs":1,"batch_size":4,"patch_side":16,"arc_step":64,)"
                             R"("n_min":2,"feature_dim":8,"hidden":8,"seed":5})");
        REQUIRE(run("compare --manifest " + fx.manifest + " --config " + fx.tmp.file("cmp.json") +
                    " --out " + fx.tmp.file("table.csv") + " --threads 2") == 0);
        CHECK(first_line(fx.tmp.file("table.csv")) == "variant,acc,recall_0,recall_1,recall_2,recall_3");
        CHECK(count_lines(fx.tmp.file("table.csv")) == 6);  // header + 5 variants
        const auto bytes = testutil::read_bytes(fx.tmp.file("table.csv"));
        const std::string text(bytes.begin(), bytes.end());
        for (const char* v : {"image", "vote", "rop", "sop", "sos"})
            CHECK(text.find(std::string("\n") + v + ",") != std::string::npos);
    }
}

TEST_CASE("stats subcommand") {
    testutil::TempDir tmp("clistats");
    std::string csv = "participant_id,hospital_rank,title,years,acc_image_only,acc_with_history\n";
    const char* hosts[] = {"Teaching", "City", "Community"};
    const char* titles[] = {"Attending", "Fellow", "Resident"};
    for (int i = 0; i < 24; ++i) {
        char line[160];
        std::snprintf(line, sizeof(line), "d%02d,%s,%s,%d,%.3f,%.3f\n", i, hosts[i % 3], titles[(i / 3) % 3],
                      2 + (i * 7) % 23, 0.35 + 0.02 * (i % 7), 0.40 + 0.02 * ((i + 2) % 7));
        csv += line;
    }
    testutil::write_text(tmp.file("readers.csv"), csv);

    SUBCASE("produces the analysis JSON") {
        REQUIRE(run("stats --readers " + tmp.file("readers.csv") + " --out " + tmp.file("report.json")) == 0);
        std::ifstream in(tmp.file("report.json"));
        nlohmann::json doc = nlohmann::json::parse(in);
        CHECK(doc["hospital_rank"].contains("anova"));
        CHECK(doc["hospital_rank"].contains("lsd"));
        CHECK(doc.contains("paired_t_with_vs_without_history"));
        CHECK(doc.contains("wilcoxon_with_vs_without_history"));
        CHECK(doc.contains("stepwise_regression"));
    }
    SUBCASE("malformed csv is exit 1") {
        testutil::write_text(tmp.file("bad.csv"), "nope\n");
        CHECK(run("stats --readers " + tmp.file("bad.csv") + " --out " + tmp.file("r.json")) == 1);
    }
}
