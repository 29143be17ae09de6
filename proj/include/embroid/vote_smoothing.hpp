#pragma once
// Neighbourhood vote smoothing: for every embedding space j and source i,
// the mean of source i over the k neighbours of x, thresholded into
// {-1, 0, +1}.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "embroid/dataset_io.hpp"
#include "embroid/neighbor_index.hpp"

namespace embroid {

enum class ThresholdPolicy {
    MeanVote,        // tau+ = tau- = E[lambda_i]
    ClassMarginals,  // tau+ from P(lambda_i = 1), tau- from P(lambda_i = -1)
};

std::string to_string(ThresholdPolicy policy);
// Accepts "mean_vote" / "class_marginals"; throws std::invalid_argument.
ThresholdPolicy parse_threshold_policy(const std::string& text);

struct ShrinkageThresholds {
    std::vector<double> tau_plus;
    std::vector<double> tau_minus;

    // Throws std::invalid_argument on a size mismatch, a value outside
    // [-1, 1], or tau_minus > tau_plus.
    void validate() const;
};

// tau+ = tau- = column mean of each source.
ShrinkageThresholds default_thresholds(const PredictionMatrix& predictions);

// Class-marginal thresholds put on the mean scale: a neighbourhood votes +1
// when its share of +1 votes exceeds P(lambda_i = 1), i.e. mean > 2P(1) - 1,
// and -1 when its share of -1 votes exceeds P(lambda_i = -1), i.e.
// mean < 1 - 2P(-1). For sources that never abstain both equal E[lambda_i].
ShrinkageThresholds class_marginal_thresholds(const PredictionMatrix& predictions);

ShrinkageThresholds make_thresholds(const PredictionMatrix& predictions, ThresholdPolicy policy);

struct SmoothedVotes {
    std::size_t n_spaces = 0;
    std::size_t n_sources = 0;
    // n x (N*m), column j*m + i holds the neighbourhood mean of source i in space j.
    std::vector<double> raw_means;
    PredictionMatrix votes;  // Ternary, same layout

    double raw_mean(std::size_t sample, std::size_t space, std::size_t source) const {
        return raw_means[sample * n_spaces * n_sources + space * n_sources + source];
    }
};

// Vote rule: +1 iff mean > tau+, -1 iff mean < tau-, otherwise 0.
int threshold_vote(double mean, double tau_plus, double tau_minus) noexcept;

// Throws std::invalid_argument when tables disagree with the predictions or
// with each other on n or k.
SmoothedVotes smooth_votes(const PredictionMatrix& predictions,
                           std::span<const NeighborTable> tables,
                           const ShrinkageThresholds& thresholds);

// Debug dump: `sample,space,source,raw_mean,vote` per cell.
void write_vote_dump(const SmoothedVotes& votes, std::span<const std::string> sample_ids,
                     std::span<const std::string> space_names,
                     std::span<const std::string> source_names,
                     const std::filesystem::path& path);

}  // namespace embroid
