#pragma once
// Conditionally independent binary label model: source accuracies fitted by
// the triplet method of moments, posteriors by Bayes' rule.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "embroid/dataset_io.hpp"
#include "embroid/neighbor_index.hpp"
#include "embroid/vote_smoothing.hpp"

namespace embroid {

// The model cannot be fitted (e.g. fewer than three sources).
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TripletOptions {
    double delta = 1e-4;        // |a_i| is clamped to [delta, 1 - delta]
    double eps_den = 1e-6;      // triplets with |E[l_j l_k]| below this are skipped
};

struct LabelModel {
    std::vector<double> accuracies;     // P(lambda_i = y), each in (0.5, 1)
    std::vector<double> abstain_rates;  // fraction of zeros per source
    double class_prior = 0.5;           // P(y = 1)
    std::vector<std::string> source_names;
    std::vector<std::string> warnings;  // one record per fallback source

    std::size_t n_sources() const noexcept { return accuracies.size(); }
    // Throws std::invalid_argument when an invariant is broken.
    void validate() const;
};

// Symmetric matrix of sample means E[l_i l_j] over all rows, zeros included.
std::vector<double> pairwise_moments(const PredictionMatrix& votes);

// Triplet estimator. For each source i the estimate |a_i| is the mean of
// sqrt(|E[l_i l_j] E[l_i l_k] / E[l_j l_k]|) over unordered pairs {j, k} of
// the other sources, clamped to [delta, 1 - delta]; accuracy = (1 + a_i) / 2.
// Throws EstimationError with fewer than 3 sources or fewer than 2 rows.
LabelModel estimate_accuracies(const PredictionMatrix& votes, double class_prior,
                               const TripletOptions& options = {},
                               std::span<const std::string> source_names = {});

// P(y = 1 | row). Abstains (0) contribute no evidence.
double posterior(const LabelModel& model, std::span<const std::int8_t> row);
std::vector<double> posteriors(const LabelModel& model, const PredictionMatrix& votes);

// Writes `source,accuracy,abstain_rate`; `header_comments` become '#' lines.
void write_model_dump(const LabelModel& model, const std::filesystem::path& path,
                      std::span<const std::string> header_comments = {});

// --- end-to-end ------------------------------------------------------------

struct PipelineConfig {
    std::size_t k = 10;  // 0 = weak supervision over the original sources only
    ThresholdPolicy threshold_policy = ThresholdPolicy::MeanVote;
    double class_prior = 0.5;
    TripletOptions triplet;
    std::optional<std::filesystem::path> neighbor_cache_dir;
};

struct PipelineResult {
    std::vector<double> posteriors;
    LabelModel model;
    std::optional<ShrinkageThresholds> thresholds;  // absent when k = 0
    std::optional<SmoothedVotes> smoothed;          // absent when k = 0
};

// Weak supervision over the given sources alone.
PipelineResult weak_supervision(const PredictionMatrix& predictions,
                                std::span<const std::string> source_names,
                                const PipelineConfig& config);

// Builds one neighbour table per space, smooths the original predictions,
// appends the N*m smoothed sources to the m original ones, fits the label
// model and returns per-sample posteriors. Only predictions and embeddings
// are consulted; gold labels never reach this path.
PipelineResult embroid_pipeline(const PredictionMatrix& predictions,
                                std::span<const EmbeddingSpace> spaces,
                                std::span<const std::string> source_names,
                                const PipelineConfig& config);
PipelineResult embroid_pipeline(const Dataset& dataset, const PipelineConfig& config);

}  // namespace embroid
