#pragma once
// Evaluation metrics and baselines. This is the only module that reads gold
// labels.

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "embroid/dataset_io.hpp"
#include "embroid/neighbor_index.hpp"

namespace embroid {

// Unweighted mean of the per-class F1 of +1 and -1. A class absent from
// both pred and gold scores 1; predicted-but-absent (or the reverse) scores 0.
// Throws std::invalid_argument on a length mismatch or empty input.
double macro_f1(std::span<const int> pred, std::span<const int> gold);

double accuracy(std::span<const int> pred, std::span<const int> gold);

// Per row: sign of the sum of votes, zero sum -> +1.
std::vector<int> majority_vote_baseline(const PredictionMatrix& votes);

// Mean over samples of the fraction of its k neighbours sharing its gold label.
double empirical_smoothness(const NeighborTable& table, std::span<const int> gold);

struct Trial {
    std::vector<int> base;       // hard labels of the base predictions
    std::vector<int> candidate;  // hard labels of the corrected predictions
};

struct EvalReport {
    std::map<std::string, double> per_method_f1;  // mean over trials
    double win_rate = 0.0;                        // share of trials with candidate F1 > base F1
    double mean_improvement = 0.0;                // 100 * (F1_candidate - F1_base), mean over trials
    std::map<std::string, double> smoothness;     // per embedding space
    std::size_t n_trials = 0;
    std::vector<double> base_f1;       // per trial
    std::vector<double> candidate_f1;  // per trial
};

EvalReport compare(std::span<const int> gold, std::span<const Trial> trials);
// Single base, one candidate per trial.
EvalReport compare(std::span<const int> gold, std::span<const int> base,
                   std::span<const std::vector<double>> candidate_posteriors);

std::string report_to_json(const EvalReport& report);
std::string report_to_text(const EvalReport& report);

struct ScatterPoint {
    std::string label;
    double smoothness = 0.0;
    double improvement = 0.0;
};
// Plot data: `label smoothness improvement` per line.
void write_scatter_plot_data(std::span<const ScatterPoint> points, const std::filesystem::path& path);

double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace embroid
