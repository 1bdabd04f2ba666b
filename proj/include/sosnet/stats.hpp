#pragma once

#include <limits>
#include <string>
#include <vector>

namespace sosnet {

struct TestResult {
    std::string method;
    double statistic = 0.0;
    double p_value = 1.0;
    double df1 = std::numeric_limits<double>::quiet_NaN();
    double df2 = std::numeric_limits<double>::quiet_NaN();
};

struct Summary {
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation (n-1)
    double min = 0.0;
    double max = 0.0;
    std::size_t n = 0;
};

// Errors on fewer than two values (sample sd undefined).
Summary describe(const std::vector<double>& xs);

// One-way ANOVA, F = MSB/MSW, df = (k-1, N-k). Every group needs >= 2 values.
TestResult anova_oneway(const std::vector<std::vector<double>>& groups);

struct LsdPair {
    std::size_t i = 0, j = 0;
    double mean_diff = 0.0;
    double t = 0.0;
    double p = 1.0;
    bool significant = false;
};

// Pairwise least-significant-difference t tests with the pooled MSW and
// df = N-k from the omnibus ANOVA.
std::vector<LsdPair> lsd_posthoc(const std::vector<std::vector<double>>& groups, double alpha = 0.05);

// r plus the t-transform p-value, df = n-2.
TestResult pearson_r(const std::vector<double>& xs, const std::vector<double>& ys);

// Paired t, df = n-1. Identical inputs give t = 0 / p = 1; a constant
// non-zero shift (zero-variance differences) is an error.
TestResult paired_t(const std::vector<double>& xs, const std::vector<double>& ys);

enum class Tail { TwoSided, OneSided };
enum class WilcoxonMethod { Auto, Exact, Normal };

// Signed-rank test on the non-zero differences with mid-ranks for ties.
// statistic = W = min(W+, W-). Auto: exact enumeration of all 2^m sign
// assignments for m <= 20, else the normal approximation with tie and
// continuity corrections (the SPSS route; both are exposed for comparison).
TestResult wilcoxon_signed_rank(const std::vector<double>& xs, const std::vector<double>& ys,
                                Tail tail = Tail::TwoSided,
                                WilcoxonMethod method = WilcoxonMethod::Auto);

struct OlsResult {
    std::vector<double> coeffs;
    std::vector<double> se;
    std::vector<double> t;
    std::vector<double> p;
    double r2 = 0.0;
    double df_residual = 0.0;
};

// Least squares via the normal equations (partial-pivot Gaussian
// elimination). X columns include the intercept. SST = 0 reports R^2 = 0.
OlsResult ols(const std::vector<double>& y, const std::vector<std::vector<double>>& columns);

struct StepwiseModel {
    std::vector<std::size_t> included;  // candidate indices, in the order added
    double r2 = 0.0;
    OlsResult fit;
};

// Forward selection: repeatedly add the candidate with the smallest
// coefficient p below alpha_in; one StepwiseModel snapshot per step.
std::vector<StepwiseModel> stepwise_forward(const std::vector<double>& y,
                                            const std::vector<std::vector<double>>& candidates,
                                            double alpha_in = 0.05);

// Kolmogorov-Smirnov statistic against a normal with the sample's own
// mean/sd; asymptotic p. (Parameter estimation makes this anti-conservative;
// the Lilliefors correction is out of scope.) Needs n >= 4.
TestResult ks_normality(const std::vector<double>& xs);

// --- reader-study ingestion (the cmd-stats surface) ---------------------

struct ReaderRecord {
    std::string participant_id;
    std::string hospital_rank;  // Teaching | City | Community
    std::string title;          // Attending | Fellow | Resident
    double years = 0.0;
    double acc_image_only = 0.0;
    double acc_with_history = 0.0;
};

// Band label for a years-of-employment value: 1-5, 6-10, 11-15, 16-20, >20.
std::string years_band(double years);

// CSV with header participant_id,hospital_rank,title,years,acc_image_only,acc_with_history.
// Errors carry the 1-based line number.
std::vector<ReaderRecord> read_reader_csv(const std::string& path);

// JSON text keyed by test name: normality, group ANOVAs + LSD, Pearson
// years correlation, stepwise regression, paired t + Wilcoxon for the
// with-history comparison, and descriptive summaries.
std::string reader_study_report(const std::vector<ReaderRecord>& records);

}  // namespace sosnet
