#include "drfn/harness.hpp"

#include "drfn/adam.hpp"
#include "drfn/errors.hpp"
#include "drfn/text_io.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>

namespace drfn {

std::string to_string(Partition p) {
    switch (p) {
        case Partition::Train: return "train";
        case Partition::Validation: return "val";
        case Partition::Test: return "test";
    }
    return "unknown";
}

Partition partition_from_string(const std::string& name) {
    if (name == "train") return Partition::Train;
    if (name == "val" || name == "validation") return Partition::Validation;
    if (name == "test") return Partition::Test;
    throw ContractError("unknown partition '" + name + "' (expected train, val or test)");
}

const std::vector<WindowSample>& Experiment::windows(Partition p) const {
    switch (p) {
        case Partition::Train: return train;
        case Partition::Validation: return validation;
        case Partition::Test: return test;
    }
    return test;
}

DayRange Experiment::range(Partition p) const {
    switch (p) {
        case Partition::Train: return split.train;
        case Partition::Validation: return split.validation;
        case Partition::Test: return split.test;
    }
    return split.test;
}

Experiment make_experiment(RunConfig config, MarketPanel panel, NewsTable news, StaticRelations relations,
                           std::optional<GroundTruth> truth) {
    const std::size_t z = panel.num_stocks();
    if (z == 0) throw DataError("no stocks in the bar data");
    if (config.num_stocks != 0 && config.num_stocks != z) {
        throw DataError("config expects " + std::to_string(config.num_stocks) + " stocks, bars contain " +
                        std::to_string(z));
    }
    if (relations.symbols != panel.symbols) throw DataError("relation universe does not match the bar symbols");
    if (news.dim != config.news_dim) {
        throw DataError("news embeddings have dimension " + std::to_string(news.dim) + ", config news_dim is " +
                        std::to_string(config.news_dim));
    }
    if (truth && truth->symbols != panel.symbols) throw DataError("ground-truth symbols do not match the bar symbols");

    Experiment e;
    e.config = std::move(config);
    e.panel = std::move(panel);
    e.news = std::move(news);
    e.relations = std::move(relations);
    e.truth = std::move(truth);
    e.split = chronological_split(e.panel.num_days(), e.config.window);
    e.stats = fit_normalization(e.panel, e.split.train);
    e.features = prepare_features(e.panel, e.news, e.stats, e.config.max_news);
    e.train = build_windows(e.panel, e.split.train, e.config.window);
    e.validation = build_windows(e.panel, e.split.validation, e.config.window);
    e.test = build_windows(e.panel, e.split.test, e.config.window);
    if (e.train.empty()) throw DataError("training partition yields no complete windows");
    if (e.validation.empty()) throw DataError("validation partition yields no complete windows");
    if (e.test.empty()) throw DataError("test partition yields no complete windows");
    return e;
}

Experiment load_experiment(const RunConfig& config) {
    config.validate();
    MarketPanel panel = read_bars_csv(config.bars);
    NewsTable news = read_news(config.news, panel.symbols, config.news_dim);
    StaticRelations relations = load_relations(config.relations, panel.symbols);
    std::optional<GroundTruth> truth;
    if (!config.regimes.empty() && !config.sectors.empty()) truth = read_ground_truth(config.regimes, config.sectors);
    return make_experiment(config, std::move(panel), std::move(news), std::move(relations), std::move(truth));
}

Experiment synthetic_experiment(const RunConfig& config, const SyntheticMarket& market) {
    return make_experiment(config, market.panel, market.news, market.relations, market.truth);
}

namespace {

std::vector<double> snapshot(const ParamStore& params) {
    std::vector<double> out;
    for (const auto& p : params.all()) out.insert(out.end(), p.value.data().begin(), p.value.data().end());
    return out;
}

void restore(ParamStore& params, const std::vector<double>& flat) {
    std::size_t k = 0;
    for (auto& p : params.all())
        for (auto& v : p.value.data()) v = flat[k++];
}

}  // namespace

double partition_rmse(DrfnModel& model, const Experiment& exp, Partition partition) {
    std::vector<double> errors;
    for (const auto& w : exp.windows(partition)) {
        const auto pred = model.predict(window_inputs(exp.features, w));
        for (std::size_t i = 0; i < pred.size(); ++i) errors.push_back(pred[i] - w.targets[i]);
    }
    return rmse(errors);
}

TrainOutcome train_model(const Experiment& exp, const VariantSpec& variant, std::uint64_t seed) {
    TrainOutcome out{build_variant(exp.model_config(), variant, exp.relations.matrix, seed), {}, 0, 0.0, std::nullopt};
    DrfnModel& model = out.model;
    AdamState adam(model.params(), AdamConfig{exp.config.lr});

    out.best_val_rmse = partition_rmse(model, exp, Partition::Validation);
    out.log.push_back({0, 0.0, 0.0, out.best_val_rmse});
    std::vector<double> best = snapshot(model.params());

    for (std::size_t epoch = 1; epoch <= exp.config.epochs && !out.divergence; ++epoch) {
        double loss_sum = 0.0, mse_sum = 0.0;
        for (const auto& w : exp.train) {
            ad::Tape tape;
            ForwardResult r = model.forward(tape, window_inputs(exp.features, w));
            ad::Var loss = model.loss(r, w.targets);
            const double lv = loss.value().item();
            if (!std::isfinite(lv)) {
                out.divergence = "non-finite loss at epoch " + std::to_string(epoch) + ", window ending " +
                                 format_date(exp.panel.dates[w.end]);
                break;
            }
            loss_sum += lv;
            mse_sum += total_loss(r.predictions, w.targets, r.align, 0.0).value().item();
            model.params().zero_grad();
            tape.backward(loss);
            try {
                adam_step(adam, model.params());
            } catch (const NumericError& e) {
                out.divergence = std::string(e.what()) + " at epoch " + std::to_string(epoch);
                break;
            }
        }
        if (out.divergence) break;
        const double n = static_cast<double>(exp.train.size());
        EpochRecord rec{epoch, loss_sum / n, mse_sum / n, partition_rmse(model, exp, Partition::Validation)};
        if (!std::isfinite(rec.val_rmse)) {
            out.divergence = "non-finite validation RMSE at epoch " + std::to_string(epoch);
            break;
        }
        out.log.push_back(rec);
        spdlog::debug("epoch {}: train loss {:.6g}, val RMSE {:.6g}", epoch, rec.train_loss, rec.val_rmse);
        if (rec.val_rmse < out.best_val_rmse) {
            out.best_val_rmse = rec.val_rmse;
            out.best_epoch = epoch;
            best = snapshot(model.params());
        }
    }
    restore(model.params(), best);
    model.params().zero_grad();
    return out;
}

std::string training_log_csv(const std::vector<EpochRecord>& log) {
    std::string csv = "epoch,train_loss,train_mse,val_rmse\n";
    for (const auto& r : log) {
        csv += std::to_string(r.epoch) + "," + format_double(r.train_loss) + "," + format_double(r.train_mse) + "," +
               format_double(r.val_rmse) + "\n";
    }
    return csv;
}

EvalReport evaluate_model(DrfnModel& model, const Experiment& exp, Partition partition, const std::string& variant_name,
                          std::uint64_t seed) {
    const auto& windows = exp.windows(partition);
    if (windows.empty()) throw DataError("partition '" + to_string(partition) + "' has no windows to evaluate");
    EvalReport report;
    report.variant = variant_name;
    report.partition = to_string(partition);
    report.seed = seed;
    report.config_hash = config_hash(exp.config);
    for (const auto& w : windows) {
        const auto pred = model.predict(window_inputs(exp.features, w));
        const std::string date = format_date(exp.panel.dates[w.target_day()]);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            report.rows.push_back({date, exp.panel.symbols[i], pred[i], w.targets[i]});
        }
    }
    report.finalize();
    return report;
}

SensitivityReport sensitivity_analysis(DrfnModel& model, const Experiment& exp, const SensitivityOptions& opt,
                                       std::uint64_t seed) {
    const auto& windows = exp.windows(opt.partition);
    if (windows.size() < 3) {
        throw DataError("sensitivity needs at least 3 evaluable days, partition '" + to_string(opt.partition) +
                        "' has " + std::to_string(windows.size()));
    }
    if (opt.use_dynamic && model.config().variant.relation == RelationMode::StaticOnly) {
        throw ContractError("the static-only variant has no dynamic relation");
    }
    if (opt.use_dynamic && model.config().variant.relation == RelationMode::None) {
        throw ContractError("the no-relation baseline has no dynamic relation");
    }
    if (opt.planted && !exp.truth) throw DataError("planted-correlation sensitivity needs regimes and sectors files");

    const std::size_t z = exp.panel.num_stocks();
    std::vector<std::pair<std::size_t, std::size_t>> pairs = opt.pairs;
    if (pairs.empty())
        for (std::size_t i = 0; i < z; ++i)
            for (std::size_t j = i + 1; j < z; ++j) pairs.emplace_back(i, j);
    for (const auto& [i, j] : pairs)
        if (i >= z || j >= z || i == j) throw ContractError("sensitivity: invalid stock pair");

    std::map<Date, std::size_t> truth_day;
    if (opt.planted)
        for (std::size_t d = 0; d < exp.truth->dates.size(); ++d) truth_day[exp.truth->dates[d]] = d;

    // Relation strength per window, then the target series on each target day.
    const std::size_t first = exp.range(opt.partition).begin;
    std::vector<std::vector<double>> strength(pairs.size()), target(pairs.size());
    std::vector<std::string> dates;
    for (const auto& w : windows) {
        ad::Tape tape;
        ForwardResult r = model.forward(tape, window_inputs(exp.features, w));
        const Tensor& rel = opt.use_dynamic ? r.relation.dynamic.back().value() : r.relation.fused.back().value();
        const std::size_t day = w.target_day();
        dates.push_back(format_date(exp.panel.dates[day]));
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            const auto [i, j] = pairs[k];
            strength[k].push_back(0.5 * (rel(i, j) + rel(j, i)));
            double c = 0.0;
            if (opt.planted) {
                auto it = truth_day.find(exp.panel.dates[day]);
                if (it == truth_day.end()) throw DataError("regimes file lacks " + dates.back());
                c = exp.truth->planted_correlation(it->second, i, j);
            } else {
                const auto& bi = exp.panel.bars[i];
                const auto& bj = exp.panel.bars[j];
                if (!bi[first] || !bj[first]) throw DataError("sensitivity: missing bar on the partition's first day");
                c = 0.5 * ((*bi[day])[kClose] / (*bi[first])[kClose] + (*bj[day])[kClose] / (*bj[first])[kClose]);
            }
            target[k].push_back(c);
        }
    }

    SensitivityReport rep;
    rep.partition = to_string(opt.partition);
    rep.strength_source = opt.use_dynamic ? "dynamic" : "fused";
    rep.target = opt.planted ? "planted" : "price";
    rep.seed = seed;
    rep.config_hash = config_hash(exp.config);
    rep.length = windows.size() - 1;
    std::vector<double> mean_ds(rep.length, 0.0), mean_dc(rep.length, 0.0);
    double abs_sum = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        PairSeries p;
        p.symbol_a = exp.panel.symbols[pairs[k].first];
        p.symbol_b = exp.panel.symbols[pairs[k].second];
        for (std::size_t t = 1; t < windows.size(); ++t) {
            p.dates.push_back(dates[t]);
            p.delta_s.push_back(strength[k][t] - strength[k][t - 1]);
            p.delta_c.push_back(target[k][t] - target[k][t - 1]);
        }
        p.rho = pearson(p.delta_s, p.delta_c);
        const bool target_varies = std::any_of(p.delta_c.begin(), p.delta_c.end(), [](double v) { return v != 0.0; });
        if (target_varies) {
            ++rep.evaluated_pairs;
            abs_sum += p.rho ? std::abs(*p.rho) : 0.0;
            for (std::size_t t = 0; t < rep.length; ++t) {
                mean_ds[t] += p.delta_s[t];
                mean_dc[t] += p.delta_c[t];
            }
        }
        rep.pairs.push_back(std::move(p));
    }
    if (rep.evaluated_pairs > 0) {
        rep.mean_abs_rho = abs_sum / static_cast<double>(rep.evaluated_pairs);
        rep.aggregate_rho = pearson(mean_ds, mean_dc);
    }
    return rep;
}

void write_relation_snapshots(DrfnModel& model, const Experiment& exp, Partition partition,
                              const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto matrix_csv = [&](const Tensor& m) {
        std::string csv = "symbol";
        for (const auto& s : exp.panel.symbols) csv += "," + s;
        csv += "\n";
        for (std::size_t i = 0; i < m.rows(); ++i) {
            csv += exp.panel.symbols[i];
            for (std::size_t j = 0; j < m.cols(); ++j) csv += "," + format_double(m(i, j));
            csv += "\n";
        }
        return csv;
    };
    for (const auto& w : exp.windows(partition)) {
        ad::Tape tape;
        ForwardResult r = model.forward(tape, window_inputs(exp.features, w));
        const std::string date = format_date(exp.panel.dates[w.end]);
        write_text_file(dir / ("R_" + date + ".csv"), matrix_csv(r.relation.fused.back().value()));
        if (r.relation.dynamic.back().valid()) {
            write_text_file(dir / ("D_" + date + ".csv"), matrix_csv(r.relation.dynamic.back().value()));
        }
    }
}

double median(std::vector<double> values) {
    if (values.empty()) throw DataError("median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

AblationResult run_ablation(const Experiment& exp, std::size_t num_seeds) {
    if (num_seeds == 0) throw ContractError("ablation needs at least one seed");
    AblationResult res;
    for (std::size_t k = 0; k < num_seeds; ++k) res.seeds.push_back(exp.config.seed + k);
    for (const auto& v : ablation_variants()) {
        res.variants.push_back(v.name);
        res.reports.emplace_back();
        for (auto seed : res.seeds) {
            TrainOutcome t = train_model(exp, v.spec, seed);
            if (t.divergence) throw NumericError("variant " + v.name + ", seed " + std::to_string(seed) + ": " + *t.divergence);
            res.reports.back().push_back(evaluate_model(t.model, exp, Partition::Test, v.name, seed));
            spdlog::info("ablation {} seed {}: test RMSE {:.6g}", v.name, seed, res.reports.back().back().rmse);
        }
    }
    return res;
}

std::string ablation_table_csv(const AblationResult& r) {
    std::string csv = "seed";
    for (const auto& v : r.variants) csv += "," + v;
    csv += "\n";
    for (std::size_t s = 0; s < r.seeds.size(); ++s) {
        csv += std::to_string(r.seeds[s]);
        for (std::size_t v = 0; v < r.variants.size(); ++v) csv += "," + format_double(r.reports[v][s].rmse);
        csv += "\n";
    }
    csv += "median";
    for (std::size_t v = 0; v < r.variants.size(); ++v) {
        std::vector<double> xs;
        for (const auto& rep : r.reports[v]) xs.push_back(rep.rmse);
        csv += "," + format_double(median(xs));
    }
    csv += "\n";
    return csv;
}

std::string ablation_runs_csv(const AblationResult& r) {
    std::string csv = "variant,seed,rmse,mae\n";
    for (std::size_t v = 0; v < r.variants.size(); ++v)
        for (const auto& rep : r.reports[v])
            csv += r.variants[v] + "," + std::to_string(rep.seed) + "," + format_double(rep.rmse) + "," +
                   format_double(rep.mae) + "\n";
    return csv;
}

}  // namespace drfn
