#include "drfn/config.hpp"
#include "drfn/errors.hpp"
#include "drfn/harness.hpp"
#include "drfn/reports.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace drfn;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_config(std::size_t epochs = 1) {
    RunConfig c;
    c.window = 3;
    c.news_dim = 8;
    c.market_dim = 4;
    c.fused_dim = 4;
    c.state_dim = 4;
    c.head_dim = 3;
    c.num_heads = 2;
    c.epochs = epochs;
    return c;
}

SyntheticMarket tiny_market(std::uint64_t seed = 1) {
    SyntheticSpec s;
    s.num_stocks = 6;
    s.num_days = 80;
    s.embedding_dim = 8;
    s.seed = seed;
    return generate_synthetic(s);
}

std::string checkpoint_bytes(const ParamStore& params, const std::string& stem) {
    const auto path = fs::temp_directory_path() / (stem + ".ckpt");
    save_checkpoint(path, params);
    std::string bytes = read_text_file(path);
    fs::remove(path);
    return bytes;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
    return out;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(DRFN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST(Metrics, Examples) {
    const std::vector<double> zero{0, 0, 0}, sym{0.1, -0.1}, mixed{0.0, 0.2};
    EXPECT_EQ(rmse(zero), 0.0);
    EXPECT_EQ(mae(zero), 0.0);
    EXPECT_NEAR(mae(sym), 0.1, 1e-15);
    EXPECT_NEAR(rmse(sym), 0.1, 1e-15);
    EXPECT_NEAR(mae(mixed), 0.1, 1e-15);
    EXPECT_NEAR(rmse(mixed), 0.1414213562373095, 1e-15);
}

TEST(Metrics, RmseNeverBelowMae) {
    Rng rng(5);
    std::normal_distribution<double> n(0.0, 0.03);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> e(1 + trial % 17);
        for (double& v : e) v = n(rng);
        EXPECT_GE(rmse(e), mae(e) - 1e-15);
    }
}

TEST(Pearson, Examples) {
    const std::vector<double> a{1, 2, 3}, b{1, 2, 4}, neg{-1, -2, -3}, flat{2, 2, 2};
    EXPECT_NEAR(*pearson(a, a), 1.0, 1e-15);
    EXPECT_NEAR(*pearson(a, neg), -1.0, 1e-15);
    EXPECT_NEAR(*pearson(a, b), 0.9819805060619657, 1e-12);
    EXPECT_FALSE(pearson(a, flat).has_value());
}

TEST(Pearson, ErrorsAndRange) {
    const std::vector<double> one{1}, two{1, 2}, three{1, 2, 3};
    EXPECT_THROW(pearson(one, one), DataError);
    EXPECT_THROW(pearson(two, three), DataError);
    Rng rng(2);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> x(5), y(5);
        for (std::size_t i = 0; i < 5; ++i) x[i] = u(rng), y[i] = u(rng);
        const double r = *pearson(x, y);
        EXPECT_GE(r, -1.0);
        EXPECT_LE(r, 1.0);
    }
}

TEST(Reports, EvalReportRoundTrip) {
    EvalReport r;
    r.variant = "full";
    r.partition = "test";
    r.seed = 7;
    r.config_hash = "00112233aabbccdd";
    r.rows = {{"2020-01-02", "AAA", 0.0123456789012345, -0.01}, {"2020-01-02", "BBB", -1e-17, 0.02}};
    r.finalize();
    EXPECT_GE(r.rmse, r.mae);
    EXPECT_EQ(eval_report_from_json(to_json(r)), r);
}

TEST(Reports, SensitivityReportRoundTripAndHeaderOnlyCsv) {
    SensitivityReport r;
    r.partition = "test";
    r.strength_source = "fused";
    r.target = "planted";
    r.seed = 3;
    r.config_hash = "ffff000011112222";
    EXPECT_EQ(sensitivity_report_from_json(to_json(r)), r);

    const auto dir = fresh_dir("drfn_test_empty_report");
    emit_report(r, dir, "sens");
    EXPECT_EQ(read_text_file(dir / "sens.csv"), "date,pair,delta_s,delta_c\n");

    r.length = 2;
    r.pairs.push_back({"AAA", "BBB", {"2020-01-03", "2020-01-06"}, {0.1, -0.2}, {1.0, 0.5}, std::nullopt});
    r.pairs.push_back({"AAA", "CCC", {"2020-01-03", "2020-01-06"}, {0.1, 0.2}, {1.0, 2.0}, 1.0});
    r.mean_abs_rho = 0.5;
    r.evaluated_pairs = 2;
    r.aggregate_rho = -0.25;
    EXPECT_EQ(sensitivity_report_from_json(to_json(r)), r);
    fs::remove_all(dir);
}

TEST(Reports, EmitWritesJsonAndCsv) {
    EvalReport r;
    r.variant = "static";
    r.partition = "val";
    r.rows = {{"2020-01-02", "AAA", 0.5, 0.25}};
    r.finalize();
    const auto dir = fresh_dir("drfn_test_emit");
    emit_report(r, dir, "eval");
    EXPECT_EQ(eval_report_from_json(read_text_file(dir / "eval.json")), r);
    const std::string csv = read_text_file(dir / "eval.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "date,symbol,predicted,actual");
    fs::remove_all(dir);
    EXPECT_THROW(emit_report(r, "/proc/definitely/not/writable", "eval"), DataError);
}

TEST(Config, JsonRoundTrip) {
    RunConfig c = tiny_config(4);
    c.bars = "data/bars.csv";
    c.relation_mode = RelationMode::RelativeStaticOnly;
    c.alignment = false;
    c.lr = 1.25e-3;
    c.seed = 99;
    EXPECT_EQ(config_from_json(config_to_json(c)), c);
}

TEST(Config, DefaultsAreTheTunedValues) {
    const RunConfig c;
    EXPECT_EQ(c.window, 5u);
    EXPECT_EQ(c.max_news, 30u);
    EXPECT_EQ(c.market_dim, 64u);
    EXPECT_EQ(c.state_dim, 128u);
    EXPECT_EQ(c.head_dim, 256u);
    EXPECT_EQ(c.num_heads, 6u);
    EXPECT_EQ(c.lambda, 1.0);
    EXPECT_EQ(c.lr, 2e-3);
}

TEST(Config, UnknownKeyIsRejected) {
    EXPECT_THROW(config_from_json(R"({"window": 5, "learning_rate": 0.1})"), DataError);
}

TEST(Config, HashChangesWithEveryField) {
    const RunConfig base = tiny_config();
    const std::string h0 = config_hash(base);
    EXPECT_EQ(h0.size(), 16u);
    EXPECT_EQ(config_hash(base), h0);
    std::vector<std::function<void(RunConfig&)>> edits = {
        [](RunConfig& c) { c.bars = "x"; },         [](RunConfig& c) { c.news = "x"; },
        [](RunConfig& c) { c.relations = "x"; },    [](RunConfig& c) { c.regimes = "x"; },
        [](RunConfig& c) { c.sectors = "x"; },      [](RunConfig& c) { c.num_stocks = 4; },
        [](RunConfig& c) { c.window = 4; },         [](RunConfig& c) { c.max_news = 3; },
        [](RunConfig& c) { c.news_dim = 9; },       [](RunConfig& c) { c.market_dim = 5; },
        [](RunConfig& c) { c.fused_dim = 5; },      [](RunConfig& c) { c.state_dim = 5; },
        [](RunConfig& c) { c.head_dim = 4; },       [](RunConfig& c) { c.num_heads = 3; },
        [](RunConfig& c) { c.temperature = 0.2; },  [](RunConfig& c) { c.lambda = 0.5; },
        [](RunConfig& c) { c.lr = 1e-3; },          [](RunConfig& c) { c.epochs = 2; },
        [](RunConfig& c) { c.seed = 1; },           [](RunConfig& c) { c.relation_mode = RelationMode::None; },
        [](RunConfig& c) { c.alignment = false; },  [](RunConfig& c) { c.residual = false; },
        [](RunConfig& c) { c.per_stock_fusion = true; },
        [](RunConfig& c) { c.per_head_relation = true; },
        [](RunConfig& c) { c.output_dir = "elsewhere"; },
    };
    for (std::size_t i = 0; i < edits.size(); ++i) {
        RunConfig c = base;
        edits[i](c);
        EXPECT_NE(config_hash(c), h0) << "edit " << i;
    }
}

TEST(Config, RelativePathsResolveAgainstTheFile) {
    const auto dir = fresh_dir("drfn_test_config");
    write_text_file(dir / "run.json", R"({"bars": "data/bars.csv", "output_dir": "out"})");
    const RunConfig c = load_config(dir / "run.json");
    EXPECT_EQ(fs::path(c.bars), dir / "data/bars.csv");
    EXPECT_EQ(fs::path(c.output_dir), dir / "out");
    fs::remove_all(dir);
}

TEST(Training, ZeroEpochsKeepsTheInitialisation) {
    RunConfig c = tiny_config(0);
    c.seed = 4;
    const Experiment exp = synthetic_experiment(c, tiny_market());
    TrainOutcome t = train_model(exp, c.variant(), c.seed);
    DrfnModel init = build_variant(exp.model_config(), c.variant(), exp.relations.matrix, c.seed);
    EXPECT_EQ(checkpoint_bytes(t.model.params(), "zero_a"), checkpoint_bytes(init.params(), "zero_b"));
    ASSERT_EQ(t.log.size(), 1u);
    EXPECT_EQ(t.best_epoch, 0u);
}

TEST(Training, SameSeedGivesIdenticalLogAndCheckpoint) {
    const RunConfig c = tiny_config(2);
    const Experiment exp = synthetic_experiment(c, tiny_market());
    TrainOutcome a = train_model(exp, c.variant(), 3);
    TrainOutcome b = train_model(exp, c.variant(), 3);
    EXPECT_EQ(training_log_csv(a.log), training_log_csv(b.log));
    EXPECT_EQ(checkpoint_bytes(a.model.params(), "det_a"), checkpoint_bytes(b.model.params(), "det_b"));
    EXPECT_EQ(a.log.size(), 3u);
    EXPECT_FALSE(a.divergence);
}

TEST(Training, TestPartitionCannotInfluenceTraining) {
    const RunConfig c = tiny_config(2);
    SyntheticMarket m = tiny_market();
    const Experiment clean = synthetic_experiment(c, m);
    for (auto& series : m.panel.bars)
        for (std::size_t d = clean.split.test.begin; d < clean.split.test.end; ++d)
            if (series[d])
                for (double& v : *series[d]) v *= 1.7;
    const Experiment mutated = synthetic_experiment(c, m);
    TrainOutcome a = train_model(clean, c.variant(), 0);
    TrainOutcome b = train_model(mutated, c.variant(), 0);
    EXPECT_EQ(checkpoint_bytes(a.model.params(), "leak_a"), checkpoint_bytes(b.model.params(), "leak_b"));
    EXPECT_NE(partition_rmse(a.model, clean, Partition::Test), partition_rmse(b.model, mutated, Partition::Test));
}

TEST(Evaluation, ReportIsRecomputableFromRows) {
    const RunConfig c = tiny_config(1);
    const Experiment exp = synthetic_experiment(c, tiny_market());
    TrainOutcome t = train_model(exp, c.variant(), 0);
    const EvalReport r = evaluate_model(t.model, exp, Partition::Test, "full", 0);
    EXPECT_EQ(r.rows.size(), exp.test.size() * exp.panel.num_stocks());
    std::vector<double> errs;
    for (const auto& row : r.rows) errs.push_back(row.predicted - row.actual);
    EXPECT_DOUBLE_EQ(r.rmse, rmse(errs));
    EXPECT_DOUBLE_EQ(r.mae, mae(errs));
    EXPECT_GE(r.rmse, r.mae);
    EXPECT_DOUBLE_EQ(r.rmse, partition_rmse(t.model, exp, Partition::Test));
}

TEST(Sensitivity, StaticVariantHasNoDefinedCorrelation) {
    const RunConfig c = tiny_config(0);
    const Experiment exp = synthetic_experiment(c, tiny_market());
    DrfnModel m = build_variant(exp.model_config(), {RelationMode::StaticOnly, true, true}, exp.relations.matrix, 0);
    SensitivityOptions opt;
    opt.planted = true;
    const SensitivityReport r = sensitivity_analysis(m, exp, opt, 0);
    EXPECT_EQ(r.length + 1, exp.test.size());
    for (const auto& p : r.pairs) {
        for (double d : p.delta_s) EXPECT_EQ(d, 0.0);
        EXPECT_FALSE(p.rho.has_value());
    }
    EXPECT_EQ(r.mean_abs_rho, 0.0);
}

TEST(Sensitivity, FusedStrengthCorrelationsAreInRange) {
    const RunConfig c = tiny_config(0);
    const Experiment exp = synthetic_experiment(c, tiny_market());
    DrfnModel m = build_variant(exp.model_config(), {}, exp.relations.matrix, 0);
    SensitivityOptions opt;
    opt.pairs = {{0, 1}, {2, 5}};
    const SensitivityReport r = sensitivity_analysis(m, exp, opt, 0);
    ASSERT_EQ(r.pairs.size(), 2u);
    EXPECT_EQ(r.pairs[0].symbol_a, exp.panel.symbols[0]);
    for (const auto& p : r.pairs) {
        EXPECT_EQ(p.delta_s.size(), r.length);
        if (p.rho) {
            EXPECT_GE(*p.rho, -1.0);
            EXPECT_LE(*p.rho, 1.0);
        }
    }
}

TEST(Ablation, TableHasSixVariantColumnsAndAMedianRow) {
    const RunConfig c = tiny_config(0);
    const Experiment exp = synthetic_experiment(c, tiny_market());
    const AblationResult res = run_ablation(exp, 2);
    const std::string csv = ablation_table_csv(res);
    std::stringstream ss(csv);
    std::string header, row1, row2, med;
    std::getline(ss, header);
    std::getline(ss, row1);
    std::getline(ss, row2);
    std::getline(ss, med);
    const auto cols = split_line(header);
    ASSERT_EQ(cols.size(), 7u);
    EXPECT_EQ(cols[1], "static");
    EXPECT_EQ(cols[6], "full");
    EXPECT_EQ(split_line(row1)[0], "0");
    EXPECT_EQ(split_line(med)[0], "median");
    for (std::size_t v = 0; v < 6; ++v)
        for (const auto& rep : res.reports[v]) EXPECT_GE(rep.rmse, rep.mae);
}

TEST(Median, OddAndEven) {
    EXPECT_EQ(median({3, 1, 2}), 2.0);
    EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
}

TEST(Cli, ExitCodes) {
    const auto dir = fresh_dir("drfn_test_cli");
    EXPECT_EQ(run_cli(""), 1);
    EXPECT_EQ(run_cli("train"), 1);
    EXPECT_EQ(run_cli("train --config " + (dir / "missing.json").string()), 1);
    EXPECT_EQ(run_cli("--help"), 0);

    write_text_file(dir / "spec.json", R"({"num_stocks": 4, "num_days": 60, "embedding_dim": 8, "seed": 2})");
    ASSERT_EQ(run_cli("generate-synthetic --spec " + (dir / "spec.json").string() + " --out " + (dir / "data").string()), 0);

    RunConfig c = tiny_config(1);
    c.bars = "data/bars.csv";
    c.news = "data/news.bin";
    c.relations = "data/relations.csv";
    c.output_dir = "run";
    save_config(dir / "run.json", c);
    EXPECT_EQ(run_cli("train --config " + (dir / "run.json").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "run" / "checkpoint.bin"));
    EXPECT_EQ(run_cli("evaluate --checkpoint " + (dir / "run" / "checkpoint.bin").string() + " --partition test"), 0);
    EXPECT_TRUE(fs::exists(dir / "run" / "eval_test.json"));
    EXPECT_EQ(run_cli("sensitivity --checkpoint " + (dir / "run" / "checkpoint.bin").string()), 1);
    EXPECT_EQ(run_cli("sensitivity --all-pairs --checkpoint " + (dir / "run" / "checkpoint.bin").string()), 0);

    write_text_file(dir / "data" / "bars.csv", "date,symbol,open,high,low,close,adj_close,volume\n");
    EXPECT_EQ(run_cli("train --config " + (dir / "run.json").string()), 2);
    fs::remove_all(dir);
}
