#include "embroid/label_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "parallel.hpp"

namespace embroid {

void LabelModel::validate() const {
    if (!(class_prior > 0.0 && class_prior < 1.0))
        throw std::invalid_argument("class prior must lie in (0, 1)");
    if (abstain_rates.size() != accuracies.size())
        throw std::invalid_argument("abstain rate count does not match accuracies");
    if (!source_names.empty() && source_names.size() != accuracies.size())
        throw std::invalid_argument("source name count does not match accuracies");
    for (std::size_t i = 0; i < accuracies.size(); ++i)
        if (!(accuracies[i] > 0.5 && accuracies[i] < 1.0))
            throw std::invalid_argument("accuracy of source " + std::to_string(i) +
                                        " outside (0.5, 1)");
}

std::vector<double> pairwise_moments(const PredictionMatrix& votes) {
    const std::size_t n = votes.rows();
    const std::size_t s = votes.cols();
    // integer accumulation: the result does not depend on summation order
    std::vector<long long> counts(s * s, 0);
    for (std::size_t r = 0; r < n; ++r) {
        const auto row = votes.row(r);
        for (std::size_t i = 0; i < s; ++i) {
            if (row[i] == 0) continue;
            for (std::size_t j = i; j < s; ++j) counts[i * s + j] += row[i] * row[j];
        }
    }
    std::vector<double> moments(s * s, 0.0);
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = i; j < s; ++j)
            moments[i * s + j] = moments[j * s + i] =
                static_cast<double>(counts[i * s + j]) / static_cast<double>(n);
    return moments;
}

LabelModel estimate_accuracies(const PredictionMatrix& votes, double class_prior,
                               const TripletOptions& options,
                               std::span<const std::string> source_names) {
    const std::size_t s = votes.cols();
    const std::size_t n = votes.rows();
    if (s < 3)
        throw EstimationError("the triplet method needs at least 3 sources, got " +
                              std::to_string(s));
    if (n < 2) throw EstimationError("the triplet method needs at least 2 samples");
    if (!(class_prior > 0.0 && class_prior < 1.0))
        throw std::invalid_argument("class prior must lie in (0, 1)");
    if (!source_names.empty() && source_names.size() != s)
        throw std::invalid_argument("source name count does not match columns");

    const auto moments = pairwise_moments(votes);
    auto m = [&](std::size_t a, std::size_t b) { return moments[a * s + b]; };

    LabelModel model;
    model.class_prior = class_prior;
    model.accuracies.resize(s);
    model.abstain_rates.resize(s);
    if (source_names.empty()) {
        for (std::size_t i = 0; i < s; ++i) model.source_names.push_back("source_" + std::to_string(i + 1));
    } else {
        model.source_names.assign(source_names.begin(), source_names.end());
    }

    for (std::size_t i = 0; i < s; ++i) {
        double total = 0.0;
        std::size_t used = 0;
        for (std::size_t j = 0; j < s; ++j) {
            if (j == i) continue;
            for (std::size_t k = j + 1; k < s; ++k) {
                if (k == i) continue;
                const double den = m(j, k);
                if (std::abs(den) < options.eps_den) continue;
                total += std::sqrt(std::abs(m(i, j) * m(i, k) / den));
                ++used;
            }
        }
        if (used == 0) {
            model.accuracies[i] = 0.5 + options.delta;
            model.warnings.push_back("source '" + model.source_names[i] +
                                     "': every triplet denominator below guard; accuracy set to " +
                                     std::to_string(model.accuracies[i]));
        } else {
            const double a = std::clamp(total / static_cast<double>(used), options.delta,
                                        1.0 - options.delta);
            model.accuracies[i] = (1.0 + a) / 2.0;
        }

        std::size_t zeros = 0;
        for (std::size_t r = 0; r < n; ++r) zeros += votes(r, i) == 0 ? 1 : 0;
        model.abstain_rates[i] = static_cast<double>(zeros) / static_cast<double>(n);
    }
    return model;
}

double posterior(const LabelModel& model, std::span<const std::int8_t> row) {
    if (row.size() != model.n_sources())
        throw std::invalid_argument("row has " + std::to_string(row.size()) +
                                    " votes, model has " + std::to_string(model.n_sources()) +
                                    " sources");
    // log-odds of y = +1; each non-abstaining vote adds +/- log(acc / (1 - acc))
    double log_odds = std::log(model.class_prior) - std::log1p(-model.class_prior);
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (row[i] == 0) continue;
        const double acc = model.accuracies[i];
        const double weight = std::log(acc) - std::log1p(-acc);
        log_odds += row[i] > 0 ? weight : -weight;
    }
    if (log_odds >= 0.0) return 1.0 / (1.0 + std::exp(-log_odds));
    const double e = std::exp(log_odds);
    return e / (1.0 + e);
}

std::vector<double> posteriors(const LabelModel& model, const PredictionMatrix& votes) {
    if (votes.cols() != model.n_sources())
        throw std::invalid_argument("vote matrix has " + std::to_string(votes.cols()) +
                                    " columns, model has " + std::to_string(model.n_sources()) +
                                    " sources");
    std::vector<double> out(votes.rows());
    detail::parallel_for(votes.rows(), [&](std::size_t r) { out[r] = posterior(model, votes.row(r)); },
                         1024);
    return out;
}

void write_model_dump(const LabelModel& model, const std::filesystem::path& path,
                      std::span<const std::string> header_comments) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open file for writing", path.string());
    for (const auto& c : header_comments) out << "# " << c << '\n';
    out << "# class_prior=" << model.class_prior << '\n';
    for (const auto& w : model.warnings) out << "# warning: " << w << '\n';
    out << "source,accuracy,abstain_rate\n" << std::fixed << std::setprecision(6);
    for (std::size_t i = 0; i < model.n_sources(); ++i)
        out << model.source_names[i] << ',' << model.accuracies[i] << ','
            << model.abstain_rates[i] << '\n';
    if (!out) throw DataError("write failed", path.string());
}

PipelineResult weak_supervision(const PredictionMatrix& predictions,
                                std::span<const std::string> source_names,
                                const PipelineConfig& config) {
    PipelineResult result;
    result.model = estimate_accuracies(predictions, config.class_prior, config.triplet, source_names);
    result.posteriors = posteriors(result.model, predictions);
    return result;
}

PipelineResult embroid_pipeline(const PredictionMatrix& predictions,
                                std::span<const EmbeddingSpace> spaces,
                                std::span<const std::string> source_names,
                                const PipelineConfig& config) {
    if (predictions.alphabet() != Alphabet::Binary)
        throw std::invalid_argument("original predictions must use the {-1,+1} alphabet");
    const std::size_t m = predictions.cols();
    if (config.k == 0) {
        if (m < 3)
            throw EstimationError("the triplet method needs at least 3 sources; k = 0 leaves only " +
                                  std::to_string(m) + " original source(s)");
        return weak_supervision(predictions, source_names, config);
    }
    const std::size_t total = (spaces.size() + 1) * m;
    if (total < 3)
        throw EstimationError("the triplet method needs at least 3 sources; (N+1)*m = " +
                              std::to_string(total) + " with N = " + std::to_string(spaces.size()) +
                              ", m = " + std::to_string(m));

    std::vector<NeighborTable> tables;
    tables.reserve(spaces.size());
    for (const auto& space : spaces) {
        if (space.rows() != predictions.rows())
            throw std::invalid_argument("embedding '" + space.name + "' has " +
                                        std::to_string(space.rows()) + " rows, predictions have " +
                                        std::to_string(predictions.rows()));
        tables.push_back(config.neighbor_cache_dir
                             ? cached_neighbor_table(space, config.k, *config.neighbor_cache_dir)
                             : build_neighbor_table(space, config.k));
    }

    PipelineResult result;
    result.thresholds = make_thresholds(predictions, config.threshold_policy);
    result.smoothed = smooth_votes(predictions, tables, *result.thresholds);
    const PredictionMatrix combined = predictions.hconcat(result.smoothed->votes);

    std::vector<std::string> names;
    names.reserve(total);
    for (std::size_t i = 0; i < m; ++i)
        names.push_back(i < source_names.size() ? source_names[i] : "source_" + std::to_string(i + 1));
    for (const auto& space : spaces)
        for (std::size_t i = 0; i < m; ++i) names.push_back(space.name + "/" + names[i]);

    result.model = estimate_accuracies(combined, config.class_prior, config.triplet, names);
    result.posteriors = posteriors(result.model, combined);
    return result;
}

PipelineResult embroid_pipeline(const Dataset& dataset, const PipelineConfig& config) {
    return embroid_pipeline(dataset.predictions, dataset.embeddings, dataset.source_names, config);
}

}  // namespace embroid
