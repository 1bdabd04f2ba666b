#include "sosnet/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sosnet/special.hpp"

namespace sosnet {

Summary describe(const std::vector<double>& xs) {
    if (xs.size() < 2) throw std::invalid_argument("describe: need at least two values");
    Summary s;
    s.n = xs.size();
    s.min = xs[0];
    s.max = xs[0];
    double sum = 0.0;
    for (double x : xs) {
        sum += x;
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
    }
    s.mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return s;
}

namespace {

struct AnovaParts {
    double msb = 0.0, msw = 0.0;
    double df_between = 0.0, df_within = 0.0;
    std::vector<double> means;
    std::vector<std::size_t> sizes;
};

AnovaParts anova_parts(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw std::invalid_argument("anova: need at least two groups");
    AnovaParts parts;
    double grand_sum = 0.0;
    std::size_t total = 0;
    for (const auto& g : groups) {
        if (g.size() < 2) throw std::invalid_argument("anova: every group needs at least two values");
        double sum = 0.0;
        for (double x : g) sum += x;
        parts.means.push_back(sum / static_cast<double>(g.size()));
        parts.sizes.push_back(g.size());
        grand_sum += sum;
        total += g.size();
    }
    const double grand_mean = grand_sum / static_cast<double>(total);
    double ssb = 0.0, ssw = 0.0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        ssb += static_cast<double>(parts.sizes[i]) * (parts.means[i] - grand_mean) * (parts.means[i] - grand_mean);
        for (double x : groups[i]) ssw += (x - parts.means[i]) * (x - parts.means[i]);
    }
    parts.df_between = static_cast<double>(groups.size() - 1);
    parts.df_within = static_cast<double>(total - groups.size());
    parts.msb = ssb / parts.df_between;
    parts.msw = ssw / parts.df_within;
    return parts;
}

}  // namespace

TestResult anova_oneway(const std::vector<std::vector<double>>& groups) {
    AnovaParts parts = anova_parts(groups);
    TestResult res;
    res.method = "one-way ANOVA";
    res.df1 = parts.df_between;
    res.df2 = parts.df_within;
    if (parts.msw == 0.0) {
        // degenerate: no within-group variance at all
        res.statistic = parts.msb == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        res.p_value = parts.msb == 0.0 ? 1.0 : 0.0;
        return res;
    }
    res.statistic = parts.msb / parts.msw;
    res.p_value = f_sf(res.statistic, res.df1, res.df2);
    return res;
}

std::vector<LsdPair> lsd_posthoc(const std::vector<std::vector<double>>& groups, double alpha) {
    AnovaParts parts = anova_parts(groups);
    std::vector<LsdPair> out;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        for (std::size_t j = i + 1; j < groups.size(); ++j) {
            LsdPair pair;
            pair.i = i;
            pair.j = j;
            pair.mean_diff = parts.means[i] - parts.means[j];
            const double se = std::sqrt(parts.msw * (1.0 / static_cast<double>(parts.sizes[i]) +
                                                     1.0 / static_cast<double>(parts.sizes[j])));
            if (se == 0.0) {
                pair.t = pair.mean_diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
                pair.p = pair.mean_diff == 0.0 ? 1.0 : 0.0;
            } else {
                pair.t = pair.mean_diff / se;
                pair.p = student_t_two_sided_p(pair.t, parts.df_within);
            }
            pair.significant = pair.p < alpha;
            out.push_back(pair);
        }
    }
    return out;
}

TestResult pearson_r(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("pearson_r: length mismatch");
    const std::size_t n = xs.size();
    if (n < 3) throw std::invalid_argument("pearson_r: need at least three pairs");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("pearson_r: a variable is constant");

    TestResult res;
    res.method = "Pearson correlation";
    res.statistic = sxy / std::sqrt(sxx * syy);
    res.df1 = static_cast<double>(n - 2);
    const double r2 = res.statistic * res.statistic;
    if (r2 >= 1.0) {
        res.p_value = 0.0;
    } else {
        const double t = res.statistic * std::sqrt((static_cast<double>(n) - 2.0) / (1.0 - r2));
        res.p_value = student_t_two_sided_p(t, res.df1);
    }
    return res;
}

TestResult paired_t(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("paired_t: length mismatch");
    const std::size_t n = xs.size();
    if (n < 2) throw std::invalid_argument("paired_t: need at least two pairs");
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = xs[i] - ys[i];
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    TestResult res;
    res.method = "paired t-test";
    res.df1 = static_cast<double>(n - 1);
    if (sd == 0.0) {
        if (mean == 0.0) {  // xs == ys elementwise
            res.statistic = 0.0;
            res.p_value = 1.0;
            return res;
        }
        throw std::invalid_argument("paired_t: zero variance in differences, t undefined");
    }
    res.statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
    res.p_value = student_t_two_sided_p(res.statistic, res.df1);
    return res;
}

namespace {

// Mid-ranks of |d| (ties share the average rank).
std::vector<double> mid_ranks(const std::vector<double>& abs_d) {
    const std::size_t m = abs_d.size();
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return abs_d[a] < abs_d[b]; });
    std::vector<double> ranks(m);
    std::size_t i = 0;
    while (i < m) {
        std::size_t j = i;
        while (j + 1 < m && abs_d[idx[j + 1]] == abs_d[idx[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

// P(W+ <= w) by direct enumeration of all 2^m sign assignments.
double exact_sign_flip_p(const std::vector<double>& ranks, double w) {
    const std::size_t m = ranks.size();
    const std::uint64_t total = 1ULL << m;
    std::uint64_t count = 0;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        double wp = 0.0;
        for (std::size_t k = 0; k < m; ++k)
            if (mask & (1ULL << k)) wp += ranks[k];
        if (wp <= w + 1e-9) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(total);
}

}  // namespace

TestResult wilcoxon_signed_rank(const std::vector<double>& xs, const std::vector<double>& ys,
                                Tail tail, WilcoxonMethod method) {
    if (xs.size() != ys.size()) throw std::invalid_argument("wilcoxon: length mismatch");
    std::vector<double> d;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double v = xs[i] - ys[i];
        if (v != 0.0) d.push_back(v);
    }
    if (d.empty()) throw std::invalid_argument("wilcoxon: all differences are zero");
    const std::size_t m = d.size();

    std::vector<double> abs_d(m);
    for (std::size_t i = 0; i < m; ++i) abs_d[i] = std::fabs(d[i]);
    const std::vector<double> ranks = mid_ranks(abs_d);

    double w_plus = 0.0, w_minus = 0.0;
    for (std::size_t i = 0; i < m; ++i) (d[i] > 0.0 ? w_plus : w_minus) += ranks[i];
    const double w = std::min(w_plus, w_minus);

    TestResult res;
    res.statistic = w;
    const bool exact = method == WilcoxonMethod::Exact || (method == WilcoxonMethod::Auto && m <= 20);
    double p_one;
    if (exact) {
        if (m > 25) throw std::invalid_argument("wilcoxon: exact enumeration limited to m <= 25");
        res.method = "Wilcoxon signed-rank (exact)";
        p_one = exact_sign_flip_p(ranks, w);
    } else {
        res.method = "Wilcoxon signed-rank (normal approximation)";
        const double mm = static_cast<double>(m);
        const double mu = mm * (mm + 1.0) / 4.0;
        double tie_adj = 0.0;
        {
            std::vector<double> sorted = abs_d;
            std::sort(sorted.begin(), sorted.end());
            std::size_t i = 0;
            while (i < m) {
                std::size_t j = i;
                while (j + 1 < m && sorted[j + 1] == sorted[i]) ++j;
                const double t = static_cast<double>(j - i + 1);
                tie_adj += t * t * t - t;
                i = j + 1;
            }
        }
        const double var = mm * (mm + 1.0) * (2.0 * mm + 1.0) / 24.0 - tie_adj / 48.0;
        if (var <= 0.0) throw std::runtime_error("wilcoxon: zero variance after tie correction");
        const double z = (w - mu + 0.5) / std::sqrt(var);  // continuity correction toward the mean
        p_one = normal_cdf(z);
    }
    res.p_value = tail == Tail::OneSided ? p_one : std::min(1.0, 2.0 * p_one);
    return res;
}

namespace {

// Partial-pivot Gauss-Jordan inverse; throws on singular systems.
std::vector<std::vector<double>> invert(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        if (std::fabs(a[pivot][col]) < 1e-12)
            throw std::runtime_error("ols: singular design matrix (collinear columns)");
        std::swap(a[pivot], a[col]);
        std::swap(inv[pivot], inv[col]);
        const double scale = a[col][col];
        for (std::size_t c = 0; c < n; ++c) {
            a[col][c] /= scale;
            inv[col][c] /= scale;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) {
                a[r][c] -= f * a[col][c];
                inv[r][c] -= f * inv[col][c];
            }
        }
    }
    return inv;
}

}  // namespace

OlsResult ols(const std::vector<double>& y, const std::vector<std::vector<double>>& columns) {
    const std::size_t n = y.size();
    const std::size_t p = columns.size();
    if (p == 0) throw std::invalid_argument("ols: no columns");
    for (const auto& col : columns)
        if (col.size() != n) throw std::invalid_argument("ols: column length mismatch");
    if (n <= p) throw std::invalid_argument("ols: need more observations than coefficients");

    // Normal equations: (X'X) beta = X'y.
    std::vector<std::vector<double>> xtx(p, std::vector<double>(p, 0.0));
    std::vector<double> xty(p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < n; ++r) s += columns[i][r] * columns[j][r];
            xtx[i][j] = s;
            xtx[j][i] = s;
        }
        double s = 0.0;
        for (std::size_t r = 0; r < n; ++r) s += columns[i][r] * y[r];
        xty[i] = s;
    }
    const std::vector<std::vector<double>> xtx_inv = invert(xtx);

    OlsResult res;
    res.coeffs.assign(p, 0.0);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) res.coeffs[i] += xtx_inv[i][j] * xty[j];

    double y_mean = 0.0;
    for (double v : y) y_mean += v;
    y_mean /= static_cast<double>(n);
    double sse = 0.0, sst = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        double fit = 0.0;
        for (std::size_t i = 0; i < p; ++i) fit += res.coeffs[i] * columns[i][r];
        sse += (y[r] - fit) * (y[r] - fit);
        sst += (y[r] - y_mean) * (y[r] - y_mean);
    }
    res.r2 = sst > 0.0 ? 1.0 - sse / sst : 0.0;
    res.df_residual = static_cast<double>(n - p);
    const double sigma2 = sse / res.df_residual;

    res.se.assign(p, 0.0);
    res.t.assign(p, 0.0);
    res.p.assign(p, 1.0);
    for (std::size_t i = 0; i < p; ++i) {
        res.se[i] = std::sqrt(std::max(0.0, sigma2 * xtx_inv[i][i]));
        if (res.se[i] == 0.0) {
            res.t[i] = res.coeffs[i] == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
            res.p[i] = res.coeffs[i] == 0.0 ? 1.0 : 0.0;
        } else {
            res.t[i] = res.coeffs[i] / res.se[i];
            res.p[i] = student_t_two_sided_p(res.t[i], res.df_residual);
        }
    }
    return res;
}

std::vector<StepwiseModel> stepwise_forward(const std::vector<double>& y,
                                            const std::vector<std::vector<double>>& candidates,
                                            double alpha_in) {
    const std::size_t n = y.size();
    std::vector<std::vector<double>> design = {std::vector<double>(n, 1.0)};  // intercept
    std::vector<std::size_t> included;
    std::vector<bool> used(candidates.size(), false);
    std::vector<StepwiseModel> models;

    for (;;) {
        double best_p = 1.0;
        std::size_t best_idx = candidates.size();
        OlsResult best_fit;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            if (used[c]) continue;
            if (design.size() + 1 >= n) continue;  // not enough df to add
            std::vector<std::vector<double>> trial = design;
            trial.push_back(candidates[c]);
            OlsResult fit;
            try {
                fit = ols(y, trial);
            } catch (const std::exception&) {
                continue;  // collinear candidate
            }
            const double p = fit.p.back();
            if (p < best_p) {
                best_p = p;
                best_idx = c;
                best_fit = fit;
            }
        }
        if (best_idx == candidates.size() || best_p >= alpha_in) break;
        used[best_idx] = true;
        included.push_back(best_idx);
        design.push_back(candidates[best_idx]);
        StepwiseModel model;
        model.included = included;
        model.fit = best_fit;
        model.r2 = best_fit.r2;
        models.push_back(std::move(model));
    }
    return models;
}

TestResult ks_normality(const std::vector<double>& xs) {
    if (xs.size() < 4) throw std::invalid_argument("ks_normality: need at least four values");
    const Summary s = describe(xs);
    if (s.sd == 0.0) throw std::invalid_argument("ks_normality: zero variance");
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double z = (sorted[i] - s.mean) / s.sd;
        const double cdf = normal_cdf(z);
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - cdf));
        d = std::max(d, std::fabs(cdf - static_cast<double>(i) / n));
    }
    TestResult res;
    res.method = "Kolmogorov-Smirnov normality (estimated parameters)";
    res.statistic = d;
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    res.p_value = kolmogorov_q(lambda);
    return res;
}

// --- reader study --------------------------------------------------------

std::string years_band(double years) {
    if (years <= 5.0) return "1-5";
    if (years <= 10.0) return "6-10";
    if (years <= 15.0) return "11-15";
    if (years <= 20.0) return "16-20";
    return ">20";
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double_field(const std::string& field, std::size_t line, const char* name) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(field, &pos);
        if (pos != field.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("reader csv line " + std::to_string(line) + ": bad " + name + " \"" + field +
                                 "\"");
    }
}

}  // namespace

std::vector<ReaderRecord> read_reader_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open reader csv: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("reader csv line 1: missing header");
    const std::string expected = "participant_id,hospital_rank,title,years,acc_image_only,acc_with_history";
    {
        std::string trimmed = line;
        while (!trimmed.empty() && (trimmed.back() == '\r' || trimmed.back() == '\n')) trimmed.pop_back();
        if (trimmed != expected)
            throw std::runtime_error("reader csv line 1: header must be exactly \"" + expected + "\"");
    }

    std::vector<ReaderRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() != 6)
            throw std::runtime_error("reader csv line " + std::to_string(lineno) + ": expected 6 fields, got " +
                                     std::to_string(f.size()));
        ReaderRecord r;
        r.participant_id = f[0];
        r.hospital_rank = f[1];
        r.title = f[2];
        if (r.hospital_rank != "Teaching" && r.hospital_rank != "City" && r.hospital_rank != "Community")
            throw std::runtime_error("reader csv line " + std::to_string(lineno) + ": hospital_rank \"" +
                                     r.hospital_rank + "\" not in Teaching|City|Community");
        if (r.title != "Attending" && r.title != "Fellow" && r.title != "Resident")
            throw std::runtime_error("reader csv line " + std::to_string(lineno) + ": title \"" + r.title +
                                     "\" not in Attending|Fellow|Resident");
        r.years = parse_double_field(f[3], lineno, "years");
        r.acc_image_only = parse_double_field(f[4], lineno, "acc_image_only");
        r.acc_with_history = parse_double_field(f[5], lineno, "acc_with_history");
        if (r.acc_image_only < 0.0 || r.acc_image_only > 1.0 || r.acc_with_history < 0.0 ||
            r.acc_with_history > 1.0)
            throw std::runtime_error("reader csv line " + std::to_string(lineno) + ": accuracies must be in [0,1]");
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

nlohmann::json test_to_json(const TestResult& t) {
    nlohmann::json j = {{"method", t.method}, {"statistic", t.statistic}, {"p_value", t.p_value}};
    if (!std::isnan(t.df1)) j["df1"] = t.df1;
    if (!std::isnan(t.df2)) j["df2"] = t.df2;
    return j;
}

nlohmann::json summary_to_json(const Summary& s) {
    return {{"mean", s.mean}, {"sd", s.sd}, {"min", s.min}, {"max", s.max}, {"n", s.n}};
}

nlohmann::json lsd_to_json(const std::vector<LsdPair>& pairs, const std::vector<std::string>& names) {
    nlohmann::json arr = nlohmann::json::array();
    for (const LsdPair& p : pairs)
        arr.push_back({{"group_a", names[p.i]},
                       {"group_b", names[p.j]},
                       {"mean_diff", p.mean_diff},
                       {"t", p.t},
                       {"p_value", p.p},
                       {"significant", p.significant}});
    return arr;
}

}  // namespace

std::string reader_study_report(const std::vector<ReaderRecord>& records) {
    if (records.size() < 4) throw std::runtime_error("reader study: need at least 4 records");

    std::vector<double> acc, acc_hist, years;
    for (const ReaderRecord& r : records) {
        acc.push_back(r.acc_image_only);
        acc_hist.push_back(r.acc_with_history);
        years.push_back(r.years);
    }

    const std::vector<std::string> hosp_names = {"Teaching", "City", "Community"};
    const std::vector<std::string> title_names = {"Attending", "Fellow", "Resident"};
    auto group_by = [&](auto key, const std::vector<std::string>& names) {
        std::vector<std::vector<double>> groups(names.size());
        for (const ReaderRecord& r : records)
            for (std::size_t g = 0; g < names.size(); ++g)
                if (key(r) == names[g]) groups[g].push_back(r.acc_image_only);
        return groups;
    };
    const auto hosp_groups = group_by([](const ReaderRecord& r) { return r.hospital_rank; }, hosp_names);
    const auto title_groups = group_by([](const ReaderRecord& r) { return r.title; }, title_names);

    nlohmann::json doc;
    doc["n"] = records.size();
    doc["describe_acc_image_only"] = summary_to_json(describe(acc));
    doc["describe_acc_with_history"] = summary_to_json(describe(acc_hist));
    doc["normality_acc_image_only"] = test_to_json(ks_normality(acc));

    // per-band and per-group descriptives
    {
        nlohmann::json by_band = nlohmann::json::object();
        std::map<std::string, std::vector<double>> bands;
        for (const ReaderRecord& r : records) bands[years_band(r.years)].push_back(r.acc_image_only);
        for (const auto& [band, vals] : bands)
            if (vals.size() >= 2) by_band[band] = summary_to_json(describe(vals));
        doc["describe_by_years_band"] = by_band;
    }

    auto run_group_block = [&](const std::vector<std::vector<double>>& groups,
                               const std::vector<std::string>& names) {
        nlohmann::json block;
        nlohmann::json desc = nlohmann::json::object();
        bool all_ok = true;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (groups[g].size() >= 2)
                desc[names[g]] = summary_to_json(describe(groups[g]));
            else
                all_ok = false;
        }
        block["describe"] = desc;
        if (all_ok) {
            block["anova"] = test_to_json(anova_oneway(groups));
            block["lsd"] = lsd_to_json(lsd_posthoc(groups), names);
        } else {
            block["anova"] = nullptr;
            block["note"] = "a group has fewer than two records; ANOVA skipped";
        }
        return block;
    };
    doc["hospital_rank"] = run_group_block(hosp_groups, hosp_names);
    doc["title"] = run_group_block(title_groups, title_names);

    doc["pearson_years_vs_accuracy"] = test_to_json(pearson_r(years, acc));

    // stepwise regression on ordinal codes (documented in the README):
    // hospital Community=0 City=1 Teaching=2; title Resident=0 Fellow=1 Attending=2.
    {
        std::vector<double> hosp_code, title_code;
        for (const ReaderRecord& r : records) {
            hosp_code.push_back(r.hospital_rank == "Teaching" ? 2.0 : r.hospital_rank == "City" ? 1.0 : 0.0);
            title_code.push_back(r.title == "Attending" ? 2.0 : r.title == "Fellow" ? 1.0 : 0.0);
        }
        const std::vector<std::string> cand_names = {"hospital_rank", "title", "years"};
        const std::vector<std::vector<double>> candidates = {hosp_code, title_code, years};
        const auto models = stepwise_forward(acc, candidates);
        nlohmann::json marr = nlohmann::json::array();
        for (std::size_t mi = 0; mi < models.size(); ++mi) {
            nlohmann::json jm;
            jm["model"] = mi + 1;
            jm["r2"] = models[mi].r2;
            nlohmann::json included = nlohmann::json::array();
            for (std::size_t idx : models[mi].included) included.push_back(cand_names[idx]);
            jm["included"] = included;
            nlohmann::json coeffs = nlohmann::json::object();
            coeffs["intercept"] = models[mi].fit.coeffs[0];
            for (std::size_t k = 0; k < models[mi].included.size(); ++k) {
                coeffs[cand_names[models[mi].included[k]]] = models[mi].fit.coeffs[k + 1];
            }
            jm["coeffs"] = coeffs;
            marr.push_back(jm);
        }
        doc["stepwise_regression"] = marr;
    }

    doc["paired_t_with_vs_without_history"] = test_to_json(paired_t(acc_hist, acc));
    try {
        doc["wilcoxon_with_vs_without_history"] = test_to_json(wilcoxon_signed_rank(acc_hist, acc));
    } catch (const std::exception& e) {
        doc["wilcoxon_with_vs_without_history"] = {{"error", e.what()}};
    }

    return doc.dump(1, '\t') + "\n";
}

}  // namespace sosnet
