#pragma once

#include "drfn/config.hpp"
#include "drfn/dataset.hpp"
#include "drfn/features.hpp"
#include "drfn/model.hpp"
#include "drfn/reports.hpp"
#include "drfn/synthetic.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace drfn {

enum class Partition { Train, Validation, Test };
std::string to_string(Partition p);
Partition partition_from_string(const std::string& name);

/// Loaded data, split, normalised and windowed for one configuration.
struct Experiment {
    RunConfig config;
    MarketPanel panel;
    NewsTable news;
    StaticRelations relations;
    std::optional<GroundTruth> truth;
    ChronoSplit split;
    NormStats stats;
    std::vector<DayFeatures> features;
    std::vector<WindowSample> train, validation, test;

    ModelConfig model_config() const { return config.model_config(panel.num_stocks()); }
    const std::vector<WindowSample>& windows(Partition p) const;
    DayRange range(Partition p) const;
};

Experiment make_experiment(RunConfig config, MarketPanel panel, NewsTable news, StaticRelations relations,
                           std::optional<GroundTruth> truth = std::nullopt);
Experiment load_experiment(const RunConfig& config);
/// Synthetic market as an experiment, without touching the filesystem.
Experiment synthetic_experiment(const RunConfig& config, const SyntheticMarket& market);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;  // mean total loss over the epoch's windows
    double train_mse = 0.0;
    double val_rmse = 0.0;
};

struct TrainOutcome {
    DrfnModel model;  // parameters of the best validation epoch
    std::vector<EpochRecord> log;
    std::size_t best_epoch = 0;
    double best_val_rmse = 0.0;
    std::optional<std::string> divergence;
};

/// Epoch 0 records the initial parameters; epochs 1..E each take one Adam step per
/// training window in chronological order. The parameters with the lowest
/// validation RMSE are kept. A non-finite loss or gradient stops training and
/// returns the best parameters so far with `divergence` set.
TrainOutcome train_model(const Experiment& exp, const VariantSpec& variant, std::uint64_t seed);

std::string training_log_csv(const std::vector<EpochRecord>& log);

/// Predictions on every window of the partition.
EvalReport evaluate_model(DrfnModel& model, const Experiment& exp, Partition partition, const std::string& variant_name,
                          std::uint64_t seed);

/// Partition-level RMSE only (no report rows).
double partition_rmse(DrfnModel& model, const Experiment& exp, Partition partition);

struct SensitivityOptions {
    Partition partition = Partition::Test;
    bool use_dynamic = false;  // D_dynamic instead of the fused R
    bool planted = false;      // planted regime correlation instead of prices
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // empty: all pairs
};

/// Day-over-day changes of the symmetrised relation strength S_ij at each window
/// end versus changes of C_ij on the target day, where C_ij is the pair's mean
/// close relative to the partition's first day, or the planted sign product.
SensitivityReport sensitivity_analysis(DrfnModel& model, const Experiment& exp, const SensitivityOptions& options,
                                       std::uint64_t seed);

/// R^θ and D_dynamic^θ at each window end as CSV matrices, one file per date.
void write_relation_snapshots(DrfnModel& model, const Experiment& exp, Partition partition,
                              const std::filesystem::path& dir);

struct AblationResult {
    std::vector<std::string> variants;
    std::vector<std::uint64_t> seeds;
    std::vector<std::vector<EvalReport>> reports;  // [variant][seed], test partition
};

/// Every ablation variant trained from seeds seed, seed+1, ..., seed+n−1 on the same data.
AblationResult run_ablation(const Experiment& exp, std::size_t num_seeds);
/// Rows per seed plus a median row; one RMSE column per variant.
std::string ablation_table_csv(const AblationResult& result);
std::string ablation_runs_csv(const AblationResult& result);

double median(std::vector<double> values);

}  // namespace drfn
