#pragma once
// Command-line workflows: patch, synth, eval. Each returns a process exit
// code: 0 ok, 2 invalid input, 3 estimation failure.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "embroid/synthetic_bench.hpp"
#include "embroid/vote_smoothing.hpp"

namespace embroid::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitEstimation = 3;

struct RunConfig {
    std::filesystem::path manifest;
    std::size_t k = 10;
    ThresholdPolicy threshold_policy = ThresholdPolicy::MeanVote;
    double class_prior = 0.5;
    std::uint64_t seed = 0;
    std::filesystem::path output = "labels.csv";
    bool emit_model = false;
    bool emit_plot_data = false;
    std::optional<std::filesystem::path> neighbor_cache;
    bool dump_votes = false;

    std::vector<std::string> describe() const;
};

struct SynthArgs {
    SweepKind kind = SweepKind::Smoothness;
    std::vector<double> grid;  // empty: default grid for the kind
    std::size_t seeds = 10;
    std::uint64_t seed = 0;
    std::filesystem::path output = "sweep.csv";
    bool emit_plot_data = false;
    // Overrides applied on top of default_base_config(kind).
    std::optional<std::size_t> m_sources;
    std::optional<double> p_smooth;
    std::optional<double> beta;
    std::optional<double> rho_skew;
    std::optional<std::size_t> k;
    std::optional<std::size_t> points_per_cluster;
    std::optional<std::size_t> views;
    std::optional<double> view_jitter;
    std::optional<ThresholdPolicy> threshold_policy;
    // Also save the base-config dataset (seed = `seed`) here.
    std::optional<std::filesystem::path> save_dataset;
};

struct EvalArgs {
    std::filesystem::path gold;
    std::filesystem::path base;
    std::vector<std::filesystem::path> candidates;
    std::optional<std::filesystem::path> output;  // text report; stdout when absent
    std::optional<std::filesystem::path> json_output;
    std::optional<std::filesystem::path> manifest;  // enables smoothness diagnostics
    std::size_t k = 10;
    bool emit_plot_data = false;
};

int cmd_patch(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_synth(const SynthArgs& args, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);

// Parses argv (argv[0] = program name) and dispatches to a subcommand.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace embroid::cli
