#include "embroid/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include "CLI11.hpp"
#include "embroid/dataset_io.hpp"
#include "embroid/eval_harness.hpp"
#include "embroid/label_model.hpp"
#include "embroid/neighbor_index.hpp"

namespace embroid::cli {

namespace fs = std::filesystem;

namespace {

fs::path sibling(const fs::path& out, const std::string& suffix) {
    return out.parent_path() / (out.stem().string() + suffix);
}

// Runs `body`, mapping exceptions onto the exit-code taxonomy.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const EstimationError& e) {
        err << "estimation error: " << e.what() << '\n';
        return kExitEstimation;
    } catch (const DataError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        err << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::out_of_range& e) {
        err << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const fs::filesystem_error& e) {
        err << "input error: " << e.what() << '\n';
        return kExitInput;
    }
}

// Labels from `file` re-ordered to follow `ids`; throws DataError when the id
// sets differ.
LabelFile align_to(const LabelFile& file, const std::vector<std::string>& ids, const fs::path& path) {
    if (file.ids.size() != ids.size())
        throw DataError("misaligned ids: " + std::to_string(file.ids.size()) + " rows vs " +
                            std::to_string(ids.size()) + " gold rows",
                        path.string());
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t r = 0; r < file.ids.size(); ++r) index.emplace(file.ids[r], r);
    LabelFile out;
    out.ids = ids;
    if (file.posteriors) out.posteriors.emplace();
    for (const auto& id : ids) {
        const auto it = index.find(id);
        if (it == index.end()) throw DataError("misaligned ids: '" + id + "' not found", path.string());
        out.labels.push_back(file.labels[it->second]);
        if (file.posteriors) out.posteriors->push_back((*file.posteriors)[it->second]);
    }
    return out;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

}  // namespace

std::vector<std::string> RunConfig::describe() const {
    std::ostringstream prior;
    prior << std::setprecision(17) << class_prior;
    return {"command=patch",
            "manifest=" + manifest.string(),
            "k=" + std::to_string(k),
            "threshold_policy=" + to_string(threshold_policy),
            "class_prior=" + prior.str(),
            "seed=" + std::to_string(seed),
            "output=" + output.string(),
            "emit_model=" + bool_str(emit_model),
            "emit_plot_data=" + bool_str(emit_plot_data)};
}

int cmd_patch(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (!(config.class_prior > 0.0 && config.class_prior < 1.0))
            throw std::invalid_argument("--class-prior must lie in (0, 1)");
        const Dataset ds = load_dataset(config.manifest);

        PipelineConfig pc;
        pc.k = config.k;
        pc.threshold_policy = config.threshold_policy;
        pc.class_prior = config.class_prior;
        pc.neighbor_cache_dir = config.neighbor_cache;
        const auto result = embroid_pipeline(ds, pc);

        auto header = config.describe();
        std::ostringstream guards;
        guards << "delta=" << pc.triplet.delta << " eps_den=" << pc.triplet.eps_den;
        header.push_back(guards.str());
        write_labels(ds, result.posteriors, config.output, header);
        for (const auto& w : result.model.warnings) err << "warning: " << w << '\n';

        if (config.emit_model) write_model_dump(result.model, sibling(config.output, ".model.csv"), header);
        if (config.dump_votes && result.smoothed) {
            std::vector<std::string> spaces;
            for (const auto& e : ds.embeddings) spaces.push_back(e.name);
            write_vote_dump(*result.smoothed, ds.sample_ids, spaces, ds.source_names,
                            sibling(config.output, ".votes.csv"));
        }
        if (config.emit_plot_data) {
            const auto path = sibling(config.output, ".accuracies.dat");
            std::ofstream plot(path, std::ios::trunc);
            if (!plot) throw DataError("cannot open file for writing", path.string());
            plot << "# source accuracy abstain_rate\n" << std::fixed << std::setprecision(6);
            for (std::size_t i = 0; i < result.model.n_sources(); ++i)
                plot << result.model.source_names[i] << ' ' << result.model.accuracies[i] << ' '
                     << result.model.abstain_rates[i] << '\n';
        }
        out << "wrote " << ds.n_samples() << " labels to " << config.output.string() << '\n';
        return kExitOk;
    });
}

int cmd_synth(const SynthArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        SyntheticConfig base = default_base_config(args.kind);
        base.seed = args.seed;
        if (args.m_sources) base.m_sources = *args.m_sources;
        if (args.p_smooth) base.p_smooth = *args.p_smooth;
        if (args.beta) base.beta = *args.beta;
        if (args.rho_skew) base.rho_skew = *args.rho_skew;
        if (args.k) base.k = *args.k;
        if (args.points_per_cluster) base.points_per_cluster = *args.points_per_cluster;
        if (args.views) base.views = *args.views;
        if (args.view_jitter) base.view_jitter = *args.view_jitter;
        if (args.threshold_policy) base.threshold_policy = *args.threshold_policy;

        if (args.save_dataset) {
            std::filesystem::create_directories(*args.save_dataset);
            const auto manifest = save_dataset(generate(base), *args.save_dataset);
            out << "wrote dataset " << manifest.string() << '\n';
        }
        const auto grid = args.grid.empty() ? default_grid(args.kind) : args.grid;
        const auto table = run_sweep(args.kind, grid, base, args.seeds);
        write_sweep_table(table, args.output);
        if (args.emit_plot_data)
            for (const auto& p : write_sweep_plot_data(table, args.output))
                out << "wrote " << p.string() << '\n';
        out << "wrote " << table.rows.size() << " rows to " << args.output.string() << '\n';
        return kExitOk;
    });
}

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (args.candidates.empty()) throw std::invalid_argument("at least one --candidate is required");
        const LabelFile gold = read_labels(args.gold);
        const LabelFile base = align_to(read_labels(args.base), gold.ids, args.base);

        std::vector<Trial> trials;
        for (const auto& path : args.candidates) {
            const LabelFile cand = align_to(read_labels(path), gold.ids, path);
            trials.push_back({base.labels, cand.labels});
        }
        EvalReport report = compare(gold.labels, trials);

        std::vector<ScatterPoint> scatter;
        if (args.manifest) {
            const Dataset ds = load_dataset(*args.manifest);
            if (ds.sample_ids != gold.ids) {
                // smoothness needs gold in dataset order
                const LabelFile aligned = align_to(gold, ds.sample_ids, args.gold);
                for (const auto& space : ds.embeddings)
                    report.smoothness[space.name] =
                        empirical_smoothness(build_neighbor_table(space, args.k), aligned.labels);
            } else {
                for (const auto& space : ds.embeddings)
                    report.smoothness[space.name] =
                        empirical_smoothness(build_neighbor_table(space, args.k), gold.labels);
            }
            for (const auto& [name, s] : report.smoothness)
                scatter.push_back({name, s, report.mean_improvement});
        }

        const std::string text = report_to_text(report);
        if (args.output) {
            std::ofstream f(*args.output, std::ios::trunc);
            if (!f) throw DataError("cannot open file for writing", args.output->string());
            f << text;
        } else {
            out << text;
        }
        if (args.json_output) {
            std::ofstream f(*args.json_output, std::ios::trunc);
            if (!f) throw DataError("cannot open file for writing", args.json_output->string());
            f << report_to_json(report) << '\n';
        }
        if (args.emit_plot_data) {
            if (scatter.empty())
                throw std::invalid_argument("--emit-plot-data needs --manifest for smoothness");
            const fs::path target = args.output ? sibling(*args.output, ".scatter.dat")
                                                : fs::path("eval.scatter.dat");
            write_scatter_plot_data(scatter, target);
        }
        return kExitOk;
    });
}

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"embroid: correct noisy predictions with embedding-neighbourhood votes"};
    app.require_subcommand(1);

    RunConfig patch;
    std::string patch_policy = "mean_vote";
    auto* p = app.add_subcommand("patch", "run the label-correction pipeline on a dataset");
    p->add_option("--manifest", patch.manifest, "dataset manifest (JSON)")->required();
    p->add_option("--k", patch.k, "neighbours per sample; 0 = weak supervision only")
        ->capture_default_str();
    p->add_option("--threshold-policy", patch_policy, "mean_vote | class_marginals")
        ->capture_default_str();
    p->add_option("--class-prior", patch.class_prior, "P(y = 1)")->capture_default_str();
    p->add_option("--seed", patch.seed, "random seed")->capture_default_str();
    p->add_option("--out", patch.output, "output labels file")->capture_default_str();
    p->add_flag("--emit-model", patch.emit_model, "also write <out>.model.csv");
    p->add_flag("--emit-plot-data", patch.emit_plot_data, "also write <out>.accuracies.dat");
    p->add_flag("--dump-votes", patch.dump_votes, "also write <out>.votes.csv");
    std::string cache_dir;
    p->add_option("--neighbor-cache", cache_dir, "directory for cached neighbour tables");

    SynthArgs synth;
    std::string synth_kind = "smoothness";
    std::string synth_policy;
    auto* s = app.add_subcommand("synth", "run a two-cluster synthetic sweep");
    s->add_option("--kind", synth_kind, "lift_vs_m | smoothness | skew")->capture_default_str();
    s->add_option("--grid", synth.grid, "comma-separated grid values")->delimiter(',');
    s->add_option("--seeds", synth.seeds, "seeds per grid point")->capture_default_str();
    s->add_option("--seed", synth.seed, "base seed")->capture_default_str();
    s->add_option("--out", synth.output, "sweep table")->capture_default_str();
    s->add_flag("--emit-plot-data", synth.emit_plot_data, "write one .dat file per arm");
    s->add_option("--m", synth.m_sources, "sources per sample");
    s->add_option("--p", synth.p_smooth, "cluster label purity");
    s->add_option("--beta", synth.beta, "source accuracy");
    s->add_option("--rho", synth.rho_skew, "probability a source is forced wrong on C1");
    s->add_option("--k", synth.k, "neighbours per sample");
    s->add_option("--points-per-cluster", synth.points_per_cluster, "samples per cluster");
    s->add_option("--views", synth.views, "embedding views (0 = auto)");
    s->add_option("--view-jitter", synth.view_jitter, "noise sd for extra views");
    s->add_option("--threshold-policy", synth_policy, "mean_vote | class_marginals");
    std::string synth_dataset;
    s->add_option("--save-dataset", synth_dataset, "also save one generated dataset to this directory");

    EvalArgs eval;
    std::string eval_out, eval_json, eval_manifest;
    auto* e = app.add_subcommand("eval", "score label files against gold");
    e->add_option("--gold", eval.gold, "gold labels (id,label)")->required();
    e->add_option("--base", eval.base, "base predictions")->required();
    e->add_option("--candidate", eval.candidates, "corrected predictions, one per trial")
        ->required()
        ->expected(1, -1);
    e->add_option("--out", eval_out, "text report (default: stdout)");
    e->add_option("--json", eval_json, "JSON report");
    e->add_option("--manifest", eval_manifest, "dataset manifest for smoothness diagnostics");
    e->add_option("--k", eval.k, "neighbours for smoothness")->capture_default_str();
    e->add_flag("--emit-plot-data", eval.emit_plot_data, "write smoothness/improvement scatter");

    std::vector<const char*> raw;
    raw.reserve(argv.size());
    for (const auto& a : argv) raw.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(raw.size()), raw.data());
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    return guarded(err, [&] {
        if (p->parsed()) {
            patch.threshold_policy = parse_threshold_policy(patch_policy);
            if (!cache_dir.empty()) patch.neighbor_cache = cache_dir;
            return cmd_patch(patch, out, err);
        }
        if (s->parsed()) {
            synth.kind = parse_sweep_kind(synth_kind);
            if (!synth_policy.empty()) synth.threshold_policy = parse_threshold_policy(synth_policy);
            if (!synth_dataset.empty()) synth.save_dataset = synth_dataset;
            return cmd_synth(synth, out, err);
        }
        if (!eval_out.empty()) eval.output = eval_out;
        if (!eval_json.empty()) eval.json_output = eval_json;
        if (!eval_manifest.empty()) eval.manifest = eval_manifest;
        return cmd_eval(eval, out, err);
    });
}

}  // namespace embroid::cli
