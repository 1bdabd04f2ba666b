#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "helpers.hpp"
#include "sosnet/rng.hpp"
#include "sosnet/special.hpp"
#include "sosnet/stats.hpp"

using namespace sosnet;

namespace {

// Definitional one-way ANOVA recomputed from scratch.
double anova_f_oracle(const std::vector<std::vector<double>>& groups) {
    double grand = 0.0;
    std::size_t n = 0;
    for (const auto& g : groups)
        for (double x : g) {
            grand += x;
            ++n;
        }
    grand /= static_cast<double>(n);
    double ssb = 0.0, ssw = 0.0;
    for (const auto& g : groups) {
        double mean = 0.0;
        for (double x : g) mean += x;
        mean /= static_cast<double>(g.size());
        ssb += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
        for (double x : g) ssw += (x - mean) * (x - mean);
    }
    return (ssb / (static_cast<double>(groups.size()) - 1.0)) /
           (ssw / (static_cast<double>(n) - static_cast<double>(groups.size())));
}

// Pooled two-sample t statistic (equal-variance form).
double pooled_t_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double ma = std::accumulate(a.begin(), a.end(), 0.0) / na;
    double mb = std::accumulate(b.begin(), b.end(), 0.0) / nb;
    double ssa = 0.0, ssb = 0.0;
    for (double x : a) ssa += (x - ma) * (x - ma);
    for (double x : b) ssb += (x - mb) * (x - mb);
    const double sp2 = (ssa + ssb) / (na + nb - 2.0);
    return (ma - mb) / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
}

// Independent Wilcoxon exact p: dynamic program over doubled mid-ranks
// (a different enumeration ordering than the mask loop in the library).
double wilcoxon_exact_dp(const std::vector<double>& xs, const std::vector<double>& ys) {
    std::vector<double> d;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (xs[i] != ys[i]) d.push_back(xs[i] - ys[i]);
    const std::size_t m = d.size();
    std::vector<double> abs_d(m);
    for (std::size_t i = 0; i < m; ++i) abs_d[i] = std::fabs(d[i]);

    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return abs_d[a] < abs_d[b]; });
    std::vector<double> ranks(m);
    std::size_t i = 0;
    while (i < m) {
        std::size_t j = i;
        while (j + 1 < m && abs_d[idx[j + 1]] == abs_d[idx[i]]) ++j;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = 0.5 * static_cast<double>(i + 1 + j + 1);
        i = j + 1;
    }
    double w_plus = 0.0, w_minus = 0.0;
    for (std::size_t k = 0; k < m; ++k) (d[k] > 0.0 ? w_plus : w_minus) += ranks[k];
    const double w = std::min(w_plus, w_minus);

    // DP over 2*rank integer sums
    std::vector<long> r2(m);
    long total = 0;
    for (std::size_t k = 0; k < m; ++k) {
        r2[k] = static_cast<long>(std::llround(2.0 * ranks[k]));
        total += r2[k];
    }
    std::vector<double> ways(total + 1, 0.0);
    ways[0] = 1.0;
    for (std::size_t k = 0; k < m; ++k)
        for (long s = total; s >= r2[k]; --s) ways[s] += ways[s - r2[k]];
    const long wcut = static_cast<long>(std::llround(2.0 * w));
    double count = 0.0;
    for (long s = 0; s <= wcut; ++s) count += ways[s];
    const double p_one = count / std::pow(2.0, static_cast<double>(m));
    return std::min(1.0, 2.0 * p_one);
}

// Modified Gram-Schmidt least squares, independent of the normal-equations path.
std::vector<double> ols_qr_oracle(const std::vector<double>& y,
                                  const std::vector<std::vector<double>>& cols) {
    const std::size_t n = y.size(), p = cols.size();
    std::vector<std::vector<double>> q(p, std::vector<double>(n));
    std::vector<std::vector<double>> r(p, std::vector<double>(p, 0.0));
    for (std::size_t j = 0; j < p; ++j) {
        q[j] = cols[j];
        for (std::size_t k = 0; k < j; ++k) {
            double dot = 0.0;
            for (std::size_t t = 0; t < n; ++t) dot += q[k][t] * cols[j][t];
            r[k][j] = dot;
            for (std::size_t t = 0; t < n; ++t) q[j][t] -= dot * q[k][t];
        }
        double nrm = 0.0;
        for (double v : q[j]) nrm += v * v;
        nrm = std::sqrt(nrm);
        r[j][j] = nrm;
        for (double& v : q[j]) v /= nrm;
    }
    std::vector<double> qty(p, 0.0);
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t t = 0; t < n; ++t) qty[j] += q[j][t] * y[t];
    std::vector<double> beta(p, 0.0);
    for (std::size_t j = p; j-- > 0;) {
        double acc = qty[j];
        for (std::size_t k = j + 1; k < p; ++k) acc -= r[j][k] * beta[k];
        beta[j] = acc / r[j][j];
    }
    return beta;
}

// Bisection inverse of the in-repo normal CDF.
double normal_quantile(double p) {
    double lo = -10.0, hi = 10.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (normal_cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("special functions") {
    SUBCASE("ln_gamma against the standard library") {
        for (double x : {0.1, 0.5, 1.0, 1.5, 2.0, 3.7, 10.0, 56.5, 120.0})
            CHECK(ln_gamma(x) == doctest::Approx(std::lgamma(x)).epsilon(1e-12));
        CHECK_THROWS(ln_gamma(0.0));
        CHECK_THROWS(ln_gamma(-3.0));
    }
    SUBCASE("incomplete beta symmetry identity to 1e-12") {
        for (double a : {0.5, 1.0, 2.5, 7.0, 30.0})
            for (double b : {0.5, 1.0, 2.5, 7.0, 30.0})
                for (double x = 0.05; x < 1.0; x += 0.09) {
                    const double lhs = inc_beta(a, b, x) + inc_beta(b, a, 1.0 - x);
                    CHECK(std::fabs(lhs - 1.0) < 1e-12);
                }
        CHECK(inc_beta(2.0, 3.0, 0.0) == 0.0);
        CHECK(inc_beta(2.0, 3.0, 1.0) == 1.0);
    }
    SUBCASE("erf against the standard library") {
        for (double x = -4.0; x <= 4.0; x += 0.37)
            CHECK(erf_inrepo(x) == doctest::Approx(std::erf(x)).epsilon(1e-12));
        CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(normal_cdf(1.96) == doctest::Approx(0.9750021048517795).epsilon(1e-12));
    }
    SUBCASE("t and F distribution edge values") {
        CHECK(student_t_two_sided_p(0.0, 10.0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(f_sf(0.0, 2.0, 6.0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(student_t_two_sided_p(100.0, 10.0) < 1e-8);
    }
    SUBCASE("kolmogorov tail") {
        CHECK(kolmogorov_q(0.0) == 1.0);
        CHECK(kolmogorov_q(10.0) < 1e-12);
        CHECK(kolmogorov_q(0.5) > kolmogorov_q(1.0));
    }
}

TEST_CASE("describe") {
    Summary s = describe({1.0, 2.0, 3.0});
    CHECK(s.mean == doctest::Approx(2.0));
    CHECK(s.sd == doctest::Approx(1.0));
    CHECK(s.min == 1.0);
    CHECK(s.max == 3.0);
    CHECK(s.n == 3);
    CHECK_THROWS(describe({5.0}));
}

TEST_CASE("anova_oneway") {
    SUBCASE("fixed instance F=3") {
        TestResult r = anova_oneway({{1, 2, 3}, {2, 3, 4}, {3, 4, 5}});
        CHECK(r.statistic == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(r.df1 == 2.0);
        CHECK(r.df2 == 6.0);
        CHECK(r.p_value == doctest::Approx(f_sf(3.0, 2.0, 6.0)).epsilon(1e-12));
    }
    SUBCASE("identical group means give F=0, p=1") {
        TestResult r = anova_oneway({{1, 2, 3}, {2, 1, 3}});
        CHECK(r.statistic == doctest::Approx(0.0));
        CHECK(r.p_value == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("random instances match the definitional oracle") {
        Rng rng(3);
        for (int trial = 0; trial < 40; ++trial) {
            std::vector<std::vector<double>> groups(2 + rng.next_below(3));
            for (auto& g : groups) {
                g.resize(2 + rng.next_below(8));
                for (double& v : g) v = rng.next_normal(rng.next_unit(), 1.0);
            }
            TestResult r = anova_oneway(groups);
            CHECK(r.statistic == doctest::Approx(anova_f_oracle(groups)).epsilon(1e-12));
        }
    }
    SUBCASE("F equals t^2 for two groups (100 random datasets)") {
        Rng rng(4);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> a(3 + rng.next_below(12)), b(3 + rng.next_below(12));
            for (double& v : a) v = rng.next_normal(0.0, 1.0);
            for (double& v : b) v = rng.next_normal(0.3, 1.2);
            TestResult r = anova_oneway({a, b});
            const double t = pooled_t_oracle(a, b);
            CHECK(std::fabs(r.statistic - t * t) < 1e-9);
        }
    }
    SUBCASE("input validation") {
        CHECK_THROWS(anova_oneway({{1.0, 2.0}}));
        CHECK_THROWS(anova_oneway({{1.0}, {2.0, 3.0}}));
    }
}

TEST_CASE("lsd_posthoc") {
    SUBCASE("identical groups give t=0, p=1") {
        auto pairs = lsd_posthoc({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
        REQUIRE(pairs.size() == 3);
        for (const auto& p : pairs) {
            CHECK(p.t == doctest::Approx(0.0));
            CHECK(p.p == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(!p.significant);
        }
    }
    SUBCASE("hand-sized instance against the definitional formula") {
        std::vector<std::vector<double>> groups = {{1, 2, 3}, {2, 3, 4}, {3, 4, 5}};
        auto pairs = lsd_posthoc(groups);
        // MSW = 1 (SSW=6, df=6); se = sqrt(1*(1/3+1/3)); t_{0,2} = (2-4)/se
        const double se = std::sqrt(2.0 / 3.0);
        REQUIRE(pairs.size() == 3);
        CHECK(pairs[0].mean_diff == doctest::Approx(-1.0));
        CHECK(pairs[0].t == doctest::Approx(-1.0 / se).epsilon(1e-12));
        CHECK(pairs[2].i == 1);
        CHECK(pairs[2].j == 2);
        const auto& p02 = pairs[1];
        CHECK(p02.mean_diff == doctest::Approx(-2.0));
        CHECK(p02.t == doctest::Approx(-2.0 / se).epsilon(1e-12));
        CHECK(p02.p == doctest::Approx(student_t_two_sided_p(-2.0 / se, 6.0)).epsilon(1e-12));
    }
}

TEST_CASE("pearson_r") {
    SUBCASE("exact linear relations") {
        std::vector<double> x = {1, 2, 3, 4, 5};
        std::vector<double> y, z;
        for (double v : x) {
            y.push_back(2.0 * v + 1.0);
            z.push_back(-v);
        }
        TestResult up = pearson_r(x, y);
        CHECK(up.statistic == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(up.p_value == doctest::Approx(0.0));
        TestResult dn = pearson_r(x, z);
        CHECK(dn.statistic == doctest::Approx(-1.0).epsilon(1e-12));
    }
    SUBCASE("independent data: p matches the t-transform formula") {
        Rng rng(6);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> x(20), y(20);
            for (std::size_t i = 0; i < x.size(); ++i) {
                x[i] = rng.next_normal(0, 1);
                y[i] = rng.next_normal(0, 1);
            }
            TestResult r = pearson_r(x, y);
            CHECK(std::fabs(r.statistic) < 0.9);
            const double t = r.statistic * std::sqrt(18.0 / (1.0 - r.statistic * r.statistic));
            CHECK(r.p_value == doctest::Approx(student_t_two_sided_p(t, 18.0)).epsilon(1e-12));
        }
    }
    SUBCASE("constant input rejected") {
        CHECK_THROWS(pearson_r({1, 1, 1}, {1, 2, 3}));
    }
}

TEST_CASE("paired_t") {
    SUBCASE("equal inputs give t=0 p=1") {
        TestResult r = paired_t({1, 2, 3, 4}, {1, 2, 3, 4});
        CHECK(r.statistic == 0.0);
        CHECK(r.p_value == 1.0);
    }
    SUBCASE("constant nonzero shift is an error") {
        CHECK_THROWS(paired_t({1, 2, 3}, {2, 3, 4}));
    }
    SUBCASE("hand instance against the definitional formula") {
        std::vector<double> x = {3.1, 2.7, 4.5, 3.3, 2.2};
        std::vector<double> y = {2.5, 2.9, 3.1, 3.0, 1.4};
        TestResult r = paired_t(x, y);
        std::vector<double> d(5);
        for (int i = 0; i < 5; ++i) d[i] = x[i] - y[i];
        Summary s = describe(d);
        const double expect = s.mean / (s.sd / std::sqrt(5.0));
        CHECK(r.statistic == doctest::Approx(expect).epsilon(1e-12));
        CHECK(r.df1 == 4.0);
        CHECK(r.p_value == doctest::Approx(student_t_two_sided_p(expect, 4.0)).epsilon(1e-12));
    }
}

TEST_CASE("wilcoxon_signed_rank") {
    SUBCASE("rank-sum hand oracle") {
        // diffs [1,-2,3,-4,5]: W+ = 1+3+5 = 9, W- = 2+4 = 6, W = 6
        std::vector<double> x = {1, 0, 3, 0, 5};
        std::vector<double> y = {0, 2, 0, 4, 0};
        TestResult r = wilcoxon_signed_rank(x, y);
        CHECK(r.statistic == doctest::Approx(6.0));
    }
    SUBCASE("all-positive m=5 one-tail exact p = 1/32") {
        std::vector<double> x = {2, 3, 4, 5, 6};
        std::vector<double> y = {1, 1, 1, 1, 1};
        TestResult r = wilcoxon_signed_rank(x, y, Tail::OneSided, WilcoxonMethod::Exact);
        CHECK(r.p_value == doctest::Approx(1.0 / 32.0).epsilon(1e-12));
    }
    SUBCASE("all-zero differences rejected") {
        CHECK_THROWS(wilcoxon_signed_rank({1, 2}, {1, 2}));
    }
    SUBCASE("exact p matches the independent DP enumeration for all m <= 10") {
        Rng rng(7);
        for (std::size_t m = 2; m <= 10; ++m) {
            for (int trial = 0; trial < 4; ++trial) {
                std::vector<double> x(m), y(m);
                for (std::size_t i = 0; i < m; ++i) {
                    x[i] = static_cast<double>(rng.next_below(12));
                    y[i] = static_cast<double>(rng.next_below(12));
                    if (x[i] == y[i]) x[i] += 1.0;  // keep every pair non-zero
                }
                TestResult r = wilcoxon_signed_rank(x, y, Tail::TwoSided, WilcoxonMethod::Exact);
                CHECK(r.p_value == doctest::Approx(wilcoxon_exact_dp(x, y)).epsilon(1e-12));
            }
        }
    }
    SUBCASE("normal approximation path") {
        Rng rng(8);
        std::vector<double> x(40), y(40);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = rng.next_normal(0.3, 1.0);
            y[i] = rng.next_normal(0.0, 1.0);
        }
        TestResult r = wilcoxon_signed_rank(x, y);  // auto -> normal for m > 20
        CHECK(r.method.find("normal") != std::string::npos);
        CHECK(r.p_value >= 0.0);
        CHECK(r.p_value <= 1.0);
        // both paths agree reasonably on a mid-size instance
        std::vector<double> xs(x.begin(), x.begin() + 18), ys(y.begin(), y.begin() + 18);
        TestResult exact = wilcoxon_signed_rank(xs, ys, Tail::TwoSided, WilcoxonMethod::Exact);
        TestResult approx = wilcoxon_signed_rank(xs, ys, Tail::TwoSided, WilcoxonMethod::Normal);
        CHECK(std::fabs(exact.p_value - approx.p_value) < 0.05);
    }
}

TEST_CASE("ols") {
    SUBCASE("exact line") {
        std::vector<double> x = {0, 1, 2, 3, 4};
        std::vector<double> y;
        for (double v : x) y.push_back(2.0 * v + 1.0);
        OlsResult r = ols(y, {std::vector<double>(5, 1.0), x});
        CHECK(r.coeffs[0] == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(r.coeffs[1] == doctest::Approx(2.0).epsilon(1e-10));
        CHECK(r.r2 == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("constant response with intercept-only gives R2=0") {
        OlsResult r = ols({3, 3, 3, 3}, {std::vector<double>(4, 1.0)});
        CHECK(r.coeffs[0] == doctest::Approx(3.0));
        CHECK(r.r2 == 0.0);
    }
    SUBCASE("random instances match the independent QR solver to 1e-9") {
        Rng rng(9);
        for (int trial = 0; trial < 25; ++trial) {
            const std::size_t n = 12 + rng.next_below(20);
            std::vector<std::vector<double>> cols = {std::vector<double>(n, 1.0)};
            for (int j = 0; j < 3; ++j) {
                std::vector<double> c(n);
                for (double& v : c) v = rng.next_normal(0, 1);
                cols.push_back(c);
            }
            std::vector<double> y(n);
            for (std::size_t i = 0; i < n; ++i)
                y[i] = 0.5 + 1.5 * cols[1][i] - 0.7 * cols[2][i] + rng.next_normal(0, 0.3);
            OlsResult r = ols(y, cols);
            std::vector<double> qr = ols_qr_oracle(y, cols);
            for (std::size_t j = 0; j < cols.size(); ++j) CHECK(std::fabs(r.coeffs[j] - qr[j]) < 1e-9);
        }
    }
    SUBCASE("collinear design rejected") {
        std::vector<double> x = {1, 2, 3, 4};
        CHECK_THROWS(ols({1, 2, 3, 4}, {std::vector<double>(4, 1.0), x, x}));
    }
}

TEST_CASE("stepwise_forward") {
    SUBCASE("single perfect predictor enters in one step with R2=1") {
        std::vector<double> x = {0, 1, 2, 3, 4, 5};
        std::vector<double> y;
        for (double v : x) y.push_back(3.0 * v - 2.0);
        auto models = stepwise_forward(y, {x});
        REQUIRE(models.size() == 1);
        CHECK(models[0].r2 == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(models[0].included == std::vector<std::size_t>{0});
    }
    SUBCASE("no significant candidate leaves the intercept-only model") {
        Rng rng(10);
        std::vector<double> y(30), c1(30), c2(30);
        for (std::size_t i = 0; i < y.size(); ++i) {
            y[i] = rng.next_normal(0, 1);
            c1[i] = rng.next_normal(0, 1);
            c2[i] = rng.next_normal(0, 1);
        }
        auto models = stepwise_forward(y, {c1, c2}, 1e-6);  // essentially impossible threshold
        CHECK(models.empty());
    }
    SUBCASE("nested R2 is monotone non-decreasing") {
        Rng rng(11);
        std::vector<double> c1(40), c2(40), c3(40), y(40);
        for (std::size_t i = 0; i < y.size(); ++i) {
            c1[i] = rng.next_normal(0, 1);
            c2[i] = rng.next_normal(0, 1);
            c3[i] = rng.next_normal(0, 1);
            y[i] = 1.0 * c1[i] + 0.6 * c2[i] + 0.3 * c3[i] + rng.next_normal(0, 0.5);
        }
        auto models = stepwise_forward(y, {c1, c2, c3}, 0.2);
        REQUIRE(models.size() >= 2);
        for (std::size_t i = 1; i < models.size(); ++i) CHECK(models[i].r2 >= models[i - 1].r2 - 1e-12);
        // strongest predictor enters first
        CHECK(models[0].included[0] == 0);
    }
}

TEST_CASE("ks_normality") {
    SUBCASE("exact normal quantiles give a small statistic") {
        std::vector<double> xs;
        const int n = 50;
        for (int i = 1; i <= n; ++i) xs.push_back(normal_quantile((i - 0.5) / n));
        TestResult r = ks_normality(xs);
        CHECK(r.statistic < 0.05);
        CHECK(r.p_value > 0.9);
    }
    SUBCASE("two-point data is far from normal; D matches direct computation") {
        std::vector<double> xs;
        for (int i = 0; i < 20; ++i) xs.push_back(i < 10 ? -1.0 : 1.0);
        TestResult r = ks_normality(xs);

        // direct oracle on the sorted sample with estimated parameters
        Summary s = describe(xs);
        std::vector<double> sorted = xs;
        std::sort(sorted.begin(), sorted.end());
        double d = 0.0;
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            const double z = (sorted[i] - s.mean) / s.sd;
            d = std::max(d, std::fabs((i + 1.0) / 20.0 - normal_cdf(z)));
            d = std::max(d, std::fabs(normal_cdf(z) - i / 20.0));
        }
        CHECK(r.statistic == doctest::Approx(d).epsilon(1e-12));
        CHECK(r.statistic > 0.25);
    }
    SUBCASE("needs four values") { CHECK_THROWS(ks_normality({1.0, 2.0, 3.0})); }
}

TEST_CASE("reader csv and report") {
    testutil::TempDir tmp("readers");
    std::string csv = "participant_id,hospital_rank,title,years,acc_image_only,acc_with_history\n";
    Rng rng(12);
    const char* hosts[] = {"Teaching", "City", "Community"};
    const char* titles[] = {"Attending", "Fellow", "Resident"};
    for (int i = 0; i < 30; ++i) {
        const double base = 0.40 + 0.05 * (i % 3 == 0) + 0.02 * (i % 2);
        char line[160];
        std::snprintf(line, sizeof(line), "dr%02d,%s,%s,%d,%.3f,%.3f\n", i, hosts[i % 3], titles[(i / 3) % 3],
                      1 + static_cast<int>(rng.next_below(25)), base + 0.01 * (i % 5),
                      base + 0.06 + 0.01 * ((i + 1) % 4));
        csv += line;
    }
    testutil::write_text(tmp.file("readers.csv"), csv);

    auto records = read_reader_csv(tmp.file("readers.csv"));
    REQUIRE(records.size() == 30);
    CHECK(records[0].participant_id == "dr00");
    CHECK(records[0].hospital_rank == "Teaching");

    const std::string report = reader_study_report(records);
    auto doc = nlohmann::json::parse(report);
    CHECK(doc.contains("normality_acc_image_only"));
    CHECK(doc["hospital_rank"].contains("anova"));
    CHECK(doc["hospital_rank"].contains("lsd"));
    CHECK(doc["title"].contains("anova"));
    CHECK(doc.contains("pearson_years_vs_accuracy"));
    CHECK(doc.contains("stepwise_regression"));
    CHECK(doc.contains("paired_t_with_vs_without_history"));
    CHECK(doc.contains("wilcoxon_with_vs_without_history"));
    CHECK(doc["hospital_rank"]["lsd"].size() == 3);

    SUBCASE("bad header rejected") {
        testutil::write_text(tmp.file("bad1.csv"), "id,rank\n");
        CHECK_THROWS(read_reader_csv(tmp.file("bad1.csv")));
    }
    SUBCASE("malformed line names its number") {
        testutil::write_text(tmp.file("bad2.csv"),
                             "participant_id,hospital_rank,title,years,acc_image_only,acc_with_history\n"
                             "dr1,Teaching,Attending,5,0.5,0.6\n"
                             "dr2,Nowhere,Attending,5,0.5,0.6\n");
        try {
            read_reader_csv(tmp.file("bad2.csv"));
            FAIL("expected throw");
        } catch (const std::exception& e) {
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        }
    }
    SUBCASE("years_band boundaries") {
        CHECK(years_band(1) == "1-5");
        CHECK(years_band(5) == "1-5");
        CHECK(years_band(6) == "6-10");
        CHECK(years_band(15) == "11-15");
        CHECK(years_band(20) == "16-20");
        CHECK(years_band(21) == ">20");
    }
}
