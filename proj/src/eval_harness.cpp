#include "embroid/eval_harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace embroid {

namespace {

void check_aligned(std::size_t a, std::size_t b, const char* what) {
    if (a != b)
        throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(a) +
                                    " vs " + std::to_string(b) + ")");
    if (a == 0) throw std::invalid_argument(std::string(what) + ": empty input");
}

double class_f1(std::span<const int> pred, std::span<const int> gold, int cls) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] == cls;
        const bool g = gold[i] == cls;
        tp += p && g;
        fp += p && !g;
        fn += !p && g;
    }
    if (tp + fp + fn == 0) return 1.0;  // class absent from both
    return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

std::vector<double> ranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double macro_f1(std::span<const int> pred, std::span<const int> gold) {
    check_aligned(pred.size(), gold.size(), "macro_f1");
    return (class_f1(pred, gold, 1) + class_f1(pred, gold, -1)) / 2.0;
}

double accuracy(std::span<const int> pred, std::span<const int> gold) {
    check_aligned(pred.size(), gold.size(), "accuracy");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == gold[i];
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

std::vector<int> majority_vote_baseline(const PredictionMatrix& votes) {
    std::vector<int> out(votes.rows());
    for (std::size_t r = 0; r < votes.rows(); ++r) {
        int sum = 0;
        for (const auto v : votes.row(r)) sum += v;
        out[r] = sum >= 0 ? 1 : -1;
    }
    return out;
}

double empirical_smoothness(const NeighborTable& table, std::span<const int> gold) {
    if (gold.empty()) throw std::invalid_argument("empirical_smoothness: gold labels missing");
    if (gold.size() != table.rows())
        throw std::invalid_argument("empirical_smoothness: " + std::to_string(gold.size()) +
                                    " gold labels for " + std::to_string(table.rows()) + " rows");
    double total = 0.0;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        std::size_t same = 0;
        for (const auto nb : table.neighbors_of(i)) same += gold[nb] == gold[i];
        total += static_cast<double>(same) / static_cast<double>(table.k);
    }
    return total / static_cast<double>(table.rows());
}

EvalReport compare(std::span<const int> gold, std::span<const Trial> trials) {
    if (trials.empty()) throw std::invalid_argument("compare: no trials");
    EvalReport report;
    report.n_trials = trials.size();
    std::size_t wins = 0;
    double sum_base = 0.0, sum_cand = 0.0;
    for (const auto& t : trials) {
        check_aligned(t.base.size(), gold.size(), "compare (base)");
        check_aligned(t.candidate.size(), gold.size(), "compare (candidate)");
        const double fb = macro_f1(t.base, gold);
        const double fc = macro_f1(t.candidate, gold);
        report.base_f1.push_back(fb);
        report.candidate_f1.push_back(fc);
        wins += fc > fb;  // ties are losses
        sum_base += fb;
        sum_cand += fc;
    }
    const auto n = static_cast<double>(trials.size());
    report.per_method_f1["base"] = sum_base / n;
    report.per_method_f1["candidate"] = sum_cand / n;
    report.win_rate = static_cast<double>(wins) / n;
    report.mean_improvement = 100.0 * (sum_cand - sum_base) / n;
    return report;
}

EvalReport compare(std::span<const int> gold, std::span<const int> base,
                   std::span<const std::vector<double>> candidate_posteriors) {
    std::vector<Trial> trials;
    for (const auto& post : candidate_posteriors) {
        Trial t{std::vector<int>(base.begin(), base.end()), std::vector<int>(post.size())};
        std::transform(post.begin(), post.end(), t.candidate.begin(), hard_label);
        trials.push_back(std::move(t));
    }
    return compare(gold, trials);
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["per_method_f1"] = report.per_method_f1;
    j["win_rate"] = report.win_rate;
    j["mean_improvement"] = report.mean_improvement;
    j["smoothness"] = report.smoothness;
    j["n_trials"] = report.n_trials;
    j["base_f1"] = report.base_f1;
    j["candidate_f1"] = report.candidate_f1;
    return j.dump(2);
}

std::string report_to_text(const EvalReport& report) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(6);
    os << "metric,value\n";
    for (const auto& [method, f1] : report.per_method_f1) os << "f1_" << method << ',' << f1 << '\n';
    os << "win_rate," << report.win_rate << '\n';
    os << "mean_improvement," << report.mean_improvement << '\n';
    os << "n_trials," << report.n_trials << '\n';
    for (const auto& [space, s] : report.smoothness) os << "smoothness_" << space << ',' << s << '\n';
    return os.str();
}

void write_scatter_plot_data(std::span<const ScatterPoint> points, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open file for writing", path.string());
    out << "# label smoothness improvement\n" << std::setprecision(10);
    for (const auto& p : points) out << p.label << ' ' << p.smoothness << ' ' << p.improvement << '\n';
    if (!out) throw DataError("write failed", path.string());
}

double pearson(std::span<const double> x, std::span<const double> y) {
    check_aligned(x.size(), y.size(), "pearson");
    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

double spearman(std::span<const double> x, std::span<const double> y) {
    check_aligned(x.size(), y.size(), "spearman");
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    return pearson(rx, ry);
}

}  // namespace embroid
