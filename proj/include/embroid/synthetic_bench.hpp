#pragma once
// Two-cluster synthetic benchmark and the three sweeps built on it
// (lift over weak supervision vs. m, smoothness, skew).

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "embroid/dataset_io.hpp"
#include "embroid/vote_smoothing.hpp"

namespace embroid {

struct SyntheticConfig {
    std::size_t points_per_cluster = 500;
    std::array<std::array<double, 2>, 2> cluster_centers{{{-2.0, 0.0}, {2.0, 0.0}}};
    double cluster_spread = 0.5;  // isotropic Gaussian sd
    double p_smooth = 0.8;        // P(y=1 | C1) = p, P(y=1 | C2) = 1 - p
    std::size_t m_sources = 1;
    double beta = 0.6;            // P(lambda_i = y) outside the skew
    double rho_skew = 0.0;        // P(source forced wrong | C1)
    std::size_t k = 20;
    std::uint64_t seed = 0;
    // Embedding views. View 0 is the raw coordinates; further views add
    // independent N(0, view_jitter^2) noise. 0 = smallest count giving at
    // least three label-model sources.
    std::size_t views = 0;
    double view_jitter = -1.0;    // < 0: use cluster_spread
    ThresholdPolicy threshold_policy = ThresholdPolicy::ClassMarginals;

    std::size_t effective_views() const noexcept;
    // Throws std::invalid_argument on an out-of-range field.
    void validate() const;
    // One `key=value` string per field.
    std::vector<std::string> describe() const;
};

// 2 * points_per_cluster samples; samples [0, ppc) come from C1. Includes
// gold labels.
Dataset generate(const SyntheticConfig& config);

struct CellResult {
    double embroid_accuracy = 0.0;
    double ws_accuracy = 0.0;  // NaN when m < 3
    double base_accuracy = 0.0;  // mean accuracy of the individual sources
    double embroid_f1 = 0.0;
    double base_f1 = 0.0;      // mean macro-F1 of the individual sources
    double smoothness = 0.0;   // empirical smoothness of view 0 at k
};

// Generates one dataset and scores Embroid, the WS-only baseline and the
// raw sources against its gold labels.
CellResult run_cell(const SyntheticConfig& config);

enum class SweepKind { LiftVsM, Smoothness, Skew };

std::string to_string(SweepKind kind);
SweepKind parse_sweep_kind(const std::string& text);

// Base configuration and grid used by each sweep when none is given.
SyntheticConfig default_base_config(SweepKind kind);
std::vector<double> default_grid(SweepKind kind);

struct ArmStats {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation over seeds
};

struct SweepRow {
    double grid = 0.0;
    ArmStats embroid;
    ArmStats ws;
    ArmStats base;
};

struct SweepTable {
    SweepKind kind = SweepKind::Smoothness;
    SyntheticConfig base;
    std::size_t seeds = 0;
    std::vector<SweepRow> rows;
};

// For every grid point and seed s in [0, seeds) a config is derived from
// `base` (m, p or rho replaced by the grid value; seed mixed from base.seed,
// s and the grid index) and run through run_cell. Throws
// std::invalid_argument on an empty grid, seeds == 0, or a grid value out of
// range (lift_vs_m requires m >= 3).
SweepTable run_sweep(SweepKind kind, std::span<const double> grid, const SyntheticConfig& base,
                     std::size_t seeds);

// CSV: grid,embroid_mean,embroid_std,ws_mean,ws_std,base_mean,base_std,
// preceded by '#' lines echoing the configuration.
void write_sweep_table(const SweepTable& table, const std::filesystem::path& path);
// One `<stem>.<arm>.dat` file per arm (grid mean std). Returns the paths.
std::vector<std::filesystem::path> write_sweep_plot_data(const SweepTable& table,
                                                         const std::filesystem::path& out_path);

struct SmoothnessGainPoint {
    double p_smooth = 0.0;
    double smoothness = 0.0;
    double f1_gain = 0.0;  // Embroid macro-F1 minus base macro-F1
};

// `tasks` synthetic tasks with p drawn uniformly from [0.5, 1].
std::vector<SmoothnessGainPoint> smoothness_gain_study(std::size_t tasks,
                                                       const SyntheticConfig& base);

}  // namespace embroid
