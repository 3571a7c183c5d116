// stlf: short-term household load forecasting from minute-resolution
// global-active-power data. Subcommands cover the whole pipeline: ingest,
// train, evaluate, reproduce, export.

#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stlf/stlf.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string dataset;
    std::string start_date;
    int weeks = -1;
    std::string model;
    int64_t seed = -1;
    std::string out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "key = value configuration file");
    cmd->add_option("--dataset", args.dataset, "dataset file (UCI household power text format)");
    cmd->add_option("--start-date", args.start_date, "span start, yyyy-mm-dd");
    cmd->add_option("--weeks", args.weeks, "number of consecutive weeks in the span");
    cmd->add_option("--model", args.model, "model kind: svr|arima|rnn|drnn|tprnn");
    cmd->add_option("--seed", args.seed, "random seed");
    cmd->add_option("--out", args.out, "output directory");
}

stlf::RunConfig build_config(const CommonArgs& args) {
    stlf::RunConfig cfg;
    if (!args.config_path.empty()) cfg = stlf::load_config_file(args.config_path);
    if (!args.dataset.empty()) cfg.dataset = args.dataset;
    if (!args.start_date.empty()) cfg.start_date = args.start_date;
    if (args.weeks >= 0) cfg.weeks = args.weeks;
    if (!args.model.empty()) cfg.model.kind = args.model;
    if (args.seed >= 0) cfg.seed = static_cast<uint64_t>(args.seed);
    if (!args.out.empty()) cfg.out = args.out;
    stlf::apply_dataset_env_default(cfg);
    return cfg;
}

stlf::EpochSink stdout_sink() {
    return [](const stlf::EpochLog& e) {
        std::printf("epoch=%zu train_mse=%.9g val_rmse=%.9g\n", e.epoch, e.train_mse, e.val_rmse);
        std::fflush(stdout);
    };
}

int cmd_ingest(const CommonArgs& args) {
    const stlf::RunConfig cfg = build_config(args);
    const stlf::IngestSummary sum = stlf::run_ingest(cfg);
    if (sum.cached_hit)
        std::cout << "ingest: cache hit, nothing to do (" << sum.cache_path << ")\n";
    else
        std::cout << "ingest: wrote " << sum.cache_path << "\n";
    std::cout << "records=" << sum.records << " minutes=" << sum.minutes
              << " imputed=" << sum.imputed << " dataset_hash=" << stlf::hex64(sum.dataset_hash)
              << "\n";
    return 0;
}

int cmd_train(const CommonArgs& args) {
    const stlf::RunConfig cfg = build_config(args);
    cfg.validate();
    const stlf::TrainOutcome out = stlf::run_train(cfg, cfg.model.kind, stdout_sink());
    std::cout << "checkpoint: " << out.checkpoint_path << "\n";
    std::cout << "log: " << out.log_path << "\n";
    return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::vector<std::string>& checkpoints) {
    const stlf::RunConfig cfg = build_config(args);
    const stlf::EvaluateOutcome out = stlf::run_evaluate(cfg, checkpoints);
    std::cout << stlf::render_report_table(out.report);
    std::cout << "report: " << out.report_json_path << "\n";
    return 0;
}

int cmd_reproduce(const CommonArgs& args, const std::vector<std::string>& skip, bool force) {
    const stlf::RunConfig cfg = build_config(args);
    const std::set<std::string> skip_set(skip.begin(), skip.end());
    const stlf::ReproduceOutcome out = stlf::run_reproduce(cfg, skip_set, force, stdout_sink());
    std::cout << stlf::render_report_table(out.evaluation.report);
    std::cout << "manifest: " << out.manifest_path << "\n";
    return 0;
}

int cmd_export(const CommonArgs& args) {
    const stlf::RunConfig cfg = build_config(args);
    const std::string path = stlf::run_export(cfg);
    std::cout << "series: " << path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"short-term load forecasting toolkit"};
    app.require_subcommand(1);

    CommonArgs args;
    std::vector<std::string> checkpoints;
    std::vector<std::string> skip;
    bool force = false;

    CLI::App* ingest = app.add_subcommand("ingest", "parse and complete the dataset into a cached series");
    add_common(ingest, args);

    CLI::App* train = app.add_subcommand("train", "train one model and write its checkpoint");
    add_common(train, args);

    CLI::App* evaluate = app.add_subcommand("evaluate", "roll checkpoints over the test pools and report RMSE/MAE");
    add_common(evaluate, args);
    evaluate->add_option("checkpoints", checkpoints, "checkpoint files to evaluate")->required();

    CLI::App* reproduce = app.add_subcommand("reproduce", "run the full pipeline for all methods");
    add_common(reproduce, args);
    reproduce->add_option("--skip", skip, "methods to leave out")->delimiter(',');
    reproduce->add_flag("--force", force, "allow writing into a non-empty output directory");

    CLI::App* exp = app.add_subcommand("export", "dump the completed series as timestamp,kW CSV");
    add_common(exp, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(ingest)) return cmd_ingest(args);
        if (app.got_subcommand(train)) return cmd_train(args);
        if (app.got_subcommand(evaluate)) return cmd_evaluate(args, checkpoints);
        if (app.got_subcommand(reproduce)) return cmd_reproduce(args, skip, force);
        if (app.got_subcommand(exp)) return cmd_export(args);
    } catch (const stlf::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const stlf::TrainingError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const stlf::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
