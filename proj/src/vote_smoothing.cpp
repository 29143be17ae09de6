#include "embroid/vote_smoothing.hpp"

#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "parallel.hpp"

namespace embroid {

std::string to_string(ThresholdPolicy policy) {
    return policy == ThresholdPolicy::MeanVote ? "mean_vote" : "class_marginals";
}

ThresholdPolicy parse_threshold_policy(const std::string& text) {
    if (text == "mean_vote") return ThresholdPolicy::MeanVote;
    if (text == "class_marginals") return ThresholdPolicy::ClassMarginals;
    throw std::invalid_argument("unknown threshold policy '" + text +
                                "' (expected mean_vote or class_marginals)");
}

void ShrinkageThresholds::validate() const {
    if (tau_plus.size() != tau_minus.size())
        throw std::invalid_argument("tau_plus and tau_minus differ in length");
    for (std::size_t i = 0; i < tau_plus.size(); ++i) {
        if (!(tau_plus[i] >= -1.0 && tau_plus[i] <= 1.0) ||
            !(tau_minus[i] >= -1.0 && tau_minus[i] <= 1.0))
            throw std::invalid_argument("threshold for source " + std::to_string(i) +
                                        " outside [-1, 1]");
        if (tau_minus[i] > tau_plus[i])
            throw std::invalid_argument("tau_minus > tau_plus for source " + std::to_string(i));
    }
}

ShrinkageThresholds default_thresholds(const PredictionMatrix& predictions) {
    const std::size_t n = predictions.rows();
    const std::size_t m = predictions.cols();
    ShrinkageThresholds t{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
    if (n == 0) return t;
    for (std::size_t i = 0; i < m; ++i) {
        long long sum = 0;
        for (std::size_t r = 0; r < n; ++r) sum += predictions(r, i);
        // integer numerator keeps ties with neighbourhood means (s / k) exact
        t.tau_plus[i] = t.tau_minus[i] = static_cast<double>(sum) / static_cast<double>(n);
    }
    return t;
}

ShrinkageThresholds class_marginal_thresholds(const PredictionMatrix& predictions) {
    if (predictions.alphabet() != Alphabet::Binary)
        throw std::invalid_argument(
            "class-marginal thresholds need non-abstaining {-1,+1} sources");
    const std::size_t n = predictions.rows();
    const std::size_t m = predictions.cols();
    ShrinkageThresholds t{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
    if (n == 0) return t;
    const auto nn = static_cast<long long>(n);
    for (std::size_t i = 0; i < m; ++i) {
        long long pos = 0;
        long long neg = 0;
        for (std::size_t r = 0; r < n; ++r) (predictions(r, i) > 0 ? pos : neg) += 1;
        t.tau_plus[i] = static_cast<double>(2 * pos - nn) / static_cast<double>(n);
        t.tau_minus[i] = static_cast<double>(nn - 2 * neg) / static_cast<double>(n);
    }
    return t;
}

ShrinkageThresholds make_thresholds(const PredictionMatrix& predictions, ThresholdPolicy policy) {
    return policy == ThresholdPolicy::MeanVote ? default_thresholds(predictions)
                                               : class_marginal_thresholds(predictions);
}

int threshold_vote(double mean, double tau_plus, double tau_minus) noexcept {
    if (mean > tau_plus) return 1;
    if (mean < tau_minus) return -1;
    return 0;
}

SmoothedVotes smooth_votes(const PredictionMatrix& predictions,
                           std::span<const NeighborTable> tables,
                           const ShrinkageThresholds& thresholds) {
    const std::size_t n = predictions.rows();
    const std::size_t m = predictions.cols();
    const std::size_t spaces = tables.size();
    if (thresholds.tau_plus.size() != m || thresholds.tau_minus.size() != m)
        throw std::invalid_argument("threshold count " + std::to_string(thresholds.tau_plus.size()) +
                                    " does not match " + std::to_string(m) + " sources");
    thresholds.validate();
    for (const auto& t : tables) {
        if (t.rows() != n)
            throw std::invalid_argument("neighbour table '" + t.space_name + "' has " +
                                        std::to_string(t.rows()) + " rows, predictions have " +
                                        std::to_string(n));
        if (t.k != tables.front().k)
            throw std::invalid_argument("neighbour tables were built with different k");
    }

    const std::size_t cols = spaces * m;
    SmoothedVotes out{spaces, m, std::vector<double>(n * cols, 0.0),
                      PredictionMatrix(n, cols, Alphabet::Ternary)};
    std::vector<std::int8_t> votes(n * cols, 0);

    detail::parallel_for(n, [&](std::size_t x) {
        for (std::size_t j = 0; j < spaces; ++j) {
            const auto& table = tables[j];
            const auto nbrs = table.neighbors_of(x);
            for (std::size_t i = 0; i < m; ++i) {
                long long sum = 0;
                for (const auto nb : nbrs) sum += predictions(nb, i);
                const double mean = static_cast<double>(sum) / static_cast<double>(table.k);
                const std::size_t c = x * cols + j * m + i;
                out.raw_means[c] = mean;
                votes[c] = static_cast<std::int8_t>(
                    threshold_vote(mean, thresholds.tau_plus[i], thresholds.tau_minus[i]));
            }
        }
    }, 256);

    out.votes = PredictionMatrix(n, cols, Alphabet::Ternary, std::move(votes));
    return out;
}

void write_vote_dump(const SmoothedVotes& votes, std::span<const std::string> sample_ids,
                     std::span<const std::string> space_names,
                     std::span<const std::string> source_names,
                     const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open file for writing", path.string());
    out << "sample,space,source,raw_mean,vote\n" << std::fixed << std::setprecision(6);
    for (std::size_t x = 0; x < votes.votes.rows(); ++x)
        for (std::size_t j = 0; j < votes.n_spaces; ++j)
            for (std::size_t i = 0; i < votes.n_sources; ++i)
                out << sample_ids[x] << ',' << space_names[j] << ',' << source_names[i] << ','
                    << votes.raw_mean(x, j, i) << ','
                    << static_cast<int>(votes.votes(x, j * votes.n_sources + i)) << '\n';
    if (!out) throw DataError("write failed", path.string());
}

}  // namespace embroid
