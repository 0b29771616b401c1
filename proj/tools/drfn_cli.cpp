// Command-line front end: generate-synthetic, train, evaluate, ablate, sensitivity.
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

#include "drfn/config.hpp"
#include "drfn/errors.hpp"
#include "drfn/harness.hpp"
#include "drfn/reports.hpp"
#include "drfn/synthetic.hpp"
#include "drfn/text_io.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <iostream>

namespace fs = std::filesystem;
using namespace drfn;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Wall-clock lives in its own file so the reports stay byte-reproducible.
void write_timing(const fs::path& dir, const std::string& command, double seconds) {
    write_text_file(dir / "timing.json", fmt::format("{{\n  \"command\": \"{}\",\n  \"wall_clock_seconds\": {:.3f}\n}}\n",
                                                     command, seconds));
}

RunConfig config_for_checkpoint(const fs::path& checkpoint, const std::string& explicit_config) {
    const fs::path cfg = explicit_config.empty() ? checkpoint.parent_path() / "config.json" : fs::path(explicit_config);
    return load_config(cfg);
}

DrfnModel load_model(const Experiment& exp, const fs::path& checkpoint) {
    DrfnModel model(exp.model_config(), exp.relations.matrix, exp.config.seed);
    load_checkpoint(checkpoint, model.params());
    return model;
}

std::string variant_label(const RunConfig& c) {
    for (const auto& v : ablation_variants())
        if (v.spec == c.variant()) return v.name;
    return to_string(c.relation_mode);
}

int cmd_generate(const std::string& spec_path, const std::string& out) {
    SyntheticSpec spec;
    if (!spec_path.empty()) spec = synthetic_spec_from_json(read_text_file(spec_path));
    const SyntheticMarket market = generate_synthetic(spec);
    write_synthetic(market, out);
    write_text_file(fs::path(out) / "spec.json", synthetic_spec_to_json(spec) + "\n");
    spdlog::info("wrote {} stocks x {} days to {}", market.panel.num_stocks(), market.panel.num_days(), out);
    return 0;
}

int cmd_train(const std::string& config_path) {
    Stopwatch clock;
    const RunConfig config = load_config(config_path);
    const Experiment exp = load_experiment(config);
    const fs::path out = config.output_dir;
    fs::create_directories(out);
    spdlog::info("training {} on {} train / {} val windows, {} epochs", variant_label(config), exp.train.size(),
                 exp.validation.size(), config.epochs);

    TrainOutcome t = train_model(exp, config.variant(), config.seed);
    save_config(out / "config.json", config);
    save_checkpoint(out / "checkpoint.bin", t.model.params());
    write_text_file(out / "train_log.csv", training_log_csv(t.log));

    EvalReport val = evaluate_model(t.model, exp, Partition::Validation, variant_label(config), config.seed);
    std::string summary = fmt::format(
        "{{\n  \"variant\": \"{}\",\n  \"seed\": {},\n  \"config_hash\": \"{}\",\n  \"epochs_completed\": {},\n"
        "  \"best_epoch\": {},\n  \"best_val_rmse\": {},\n  \"val_mae\": {},\n  \"parameters\": {},\n"
        "  \"diverged\": {}\n}}\n",
        variant_label(config), config.seed, config_hash(config), t.log.size() - 1, t.best_epoch,
        format_double(t.best_val_rmse), format_double(val.mae), t.model.active_parameter_count(),
        t.divergence ? "true" : "false");
    write_text_file(out / "train_report.json", summary);
    write_timing(out, "train", clock.seconds());

    if (t.divergence) {
        spdlog::error("training diverged: {}; best checkpoint so far saved to {}", *t.divergence,
                      (out / "checkpoint.bin").string());
        return kExitNumeric;
    }
    spdlog::info("best epoch {} with validation RMSE {:.6g}; checkpoint {}", t.best_epoch, t.best_val_rmse,
                 (out / "checkpoint.bin").string());
    return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& partition, const std::string& config_path,
                 const std::string& out_dir, bool snapshots) {
    Stopwatch clock;
    const RunConfig config = config_for_checkpoint(checkpoint, config_path);
    const Experiment exp = load_experiment(config);
    DrfnModel model = load_model(exp, checkpoint);
    const Partition part = partition_from_string(partition);
    if (part == Partition::Train) throw ContractError("evaluate takes --partition val or test");
    EvalReport report = evaluate_model(model, exp, part, variant_label(config), config.seed);
    const fs::path out = out_dir.empty() ? fs::path(checkpoint).parent_path() : fs::path(out_dir);
    emit_report(report, out, "eval_" + report.partition);
    if (snapshots) write_relation_snapshots(model, exp, part, out / ("relations_" + report.partition));
    write_timing(out, "evaluate", clock.seconds());
    std::cout << fmt::format("{} {}: RMSE {} MAE {} over {} predictions\n", report.variant, report.partition,
                             format_double(report.rmse), format_double(report.mae), report.rows.size());
    return 0;
}

int cmd_ablate(const std::string& config_path, std::size_t seeds) {
    Stopwatch clock;
    const RunConfig config = load_config(config_path);
    const Experiment exp = load_experiment(config);
    const AblationResult res = run_ablation(exp, seeds);
    const fs::path out = fs::path(config.output_dir) / "ablation";
    for (std::size_t v = 0; v < res.variants.size(); ++v)
        for (const auto& rep : res.reports[v])
            emit_report(rep, out / res.variants[v], "seed_" + std::to_string(rep.seed));
    write_text_file(out / "ablation_table.csv", ablation_table_csv(res));
    write_text_file(out / "ablation_runs.csv", ablation_runs_csv(res));
    write_timing(out, "ablate", clock.seconds());
    std::cout << ablation_table_csv(res);
    return 0;
}

int cmd_sensitivity(const std::string& checkpoint, const std::string& pair, bool all_pairs,
                    const std::string& partition, bool dynamic, bool planted, const std::string& config_path,
                    const std::string& out_dir) {
    Stopwatch clock;
    if (all_pairs == !pair.empty()) throw CLI::ValidationError("sensitivity", "give exactly one of --pair or --all-pairs");
    const RunConfig config = config_for_checkpoint(checkpoint, config_path);
    const Experiment exp = load_experiment(config);
    DrfnModel model = load_model(exp, checkpoint);

    SensitivityOptions opt;
    opt.partition = partition_from_string(partition);
    opt.use_dynamic = dynamic;
    opt.planted = planted;
    if (!pair.empty()) {
        const auto comma = pair.find(',');
        if (comma == std::string::npos) throw CLI::ValidationError("--pair", "expected SYM1,SYM2");
        const auto a = exp.panel.index_of(pair.substr(0, comma));
        const auto b = exp.panel.index_of(pair.substr(comma + 1));
        if (!a || !b) throw DataError("unknown symbol in --pair " + pair);
        opt.pairs.emplace_back(*a, *b);
    }
    SensitivityReport rep = sensitivity_analysis(model, exp, opt, config.seed);
    const fs::path out = out_dir.empty() ? fs::path(checkpoint).parent_path() : fs::path(out_dir);
    emit_report(rep, out, "sensitivity_" + rep.partition);
    write_timing(out, "sensitivity", clock.seconds());
    std::cout << fmt::format("mean |rho| {} over {} pairs, aggregate rho {}\n", format_double(rep.mean_abs_rho),
                             rep.evaluated_pairs, rep.aggregate_rho ? format_double(*rep.aggregate_rho) : "undefined");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_st("drfn"));
    CLI::App app{"Dual relation fusion network for next-day stock returns"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    std::string spec, out, config, checkpoint, partition = "test", pair, cfg_override, out_dir;
    std::size_t seeds = 10;
    bool all_pairs = false, dynamic = false, planted = false, snapshots = false;

    auto* gen = app.add_subcommand("generate-synthetic", "Write a synthetic market with planted relations");
    gen->add_option("--spec", spec, "Synthetic spec JSON (defaults when omitted)")->check(CLI::ExistingFile);
    gen->add_option("--out", out, "Output directory")->required();

    auto* train = app.add_subcommand("train", "Train a model and keep the best validation checkpoint");
    train->add_option("--config", config, "Run config JSON")->required()->check(CLI::ExistingFile);

    auto* eval = app.add_subcommand("evaluate", "RMSE/MAE of a checkpoint on a partition");
    eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
    eval->add_option("--partition", partition, "val or test")->check(CLI::IsMember({"val", "test"}));
    eval->add_option("--config", cfg_override, "Run config (default: config.json beside the checkpoint)");
    eval->add_option("--out", out_dir, "Report directory (default: the checkpoint's)");
    eval->add_flag("--snapshots", snapshots, "Also export per-date relation matrices");

    auto* abl = app.add_subcommand("ablate", "Train every ablation variant over several seeds");
    abl->add_option("--config", config, "Run config JSON")->required()->check(CLI::ExistingFile);
    abl->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);

    auto* sens = app.add_subcommand("sensitivity", "Relation-strength vs price co-movement");
    sens->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
    sens->add_option("--pair", pair, "SYM1,SYM2");
    sens->add_flag("--all-pairs", all_pairs, "Every stock pair");
    sens->add_option("--partition", partition, "val or test")->check(CLI::IsMember({"val", "test"}));
    sens->add_flag("--dynamic", dynamic, "Use the dynamic relation instead of the fused one");
    sens->add_flag("--planted", planted, "Compare against the planted regime correlation");
    sens->add_option("--config", cfg_override, "Run config (default: config.json beside the checkpoint)");
    sens->add_option("--out", out_dir, "Report directory (default: the checkpoint's)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

    try {
        if (*gen) return cmd_generate(spec, out);
        if (*train) return cmd_train(config);
        if (*eval) return cmd_evaluate(checkpoint, partition, cfg_override, out_dir, snapshots);
        if (*abl) return cmd_ablate(config, seeds);
        if (*sens) return cmd_sensitivity(checkpoint, pair, all_pairs, partition, dynamic, planted, cfg_override, out_dir);
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ContractError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const DimensionError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
