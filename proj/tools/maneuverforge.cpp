// maneuverforge run|batch|replay|report
//
// Exit codes: 0 converged, 1 fatal, 2 bad config or arguments,
// 3 best-effort only, 4 replay fixture exhausted.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <maneuverforge/maneuverforge.hpp>

namespace fs = std::filesystem;
namespace mf = maneuverforge;

namespace {

constexpr int exit_converged = 0;
constexpr int exit_fatal = 1;
constexpr int exit_config = 2;
constexpr int exit_best_effort = 3;
constexpr int exit_exhausted = 4;

struct Options {
    std::string config_path;
    std::optional<std::string> task;
    std::optional<std::string> out;
    std::optional<std::string> backend;
    std::optional<std::string> fixture;
    std::optional<int> trials;
    std::optional<int> batch_size;
    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::string> inputs;
    std::vector<std::string> labels;
};

// Lets every trial of a batch share one backend instance.
class Borrowed : public mf::AgentBackend {
public:
    explicit Borrowed(mf::AgentBackend& inner) : inner_(inner) {}
    nlohmann::json generate(const std::vector<mf::ChatMessage>& m, const nlohmann::json& s) override {
        return inner_.generate(m, s);
    }

private:
    mf::AgentBackend& inner_;
};

mf::RunConfigFile resolve(const Options& o) {
    mf::RunConfigFile cfg = o.config_path.empty() ? mf::RunConfigFile{} : mf::load_run_config(o.config_path);
    if (o.task) cfg.task = *o.task;
    if (o.out) cfg.output_dir = *o.out;
    if (o.backend) {
        try {
            cfg.loop.backend = mf::backend_from_string(*o.backend);
        } catch (const mf::error& e) {
            throw mf::config_error(e.what());
        }
    }
    if (o.fixture) cfg.fixture = *o.fixture;
    if (o.trials) cfg.trials = *o.trials;
    if (o.batch_size) cfg.batch_size = *o.batch_size;
    if (cfg.trials < 1) throw mf::config_error("--trials must be >= 1");
    if (cfg.batch_size < 1) throw mf::config_error("--batch-size must be >= 1");
    if (cfg.task.empty()) throw mf::config_error("task text must not be empty");
    if (cfg.loop.backend == mf::BackendKind::replay && !cfg.fixture)
        throw mf::config_error("replay backend needs a fixture (--fixture or \"fixture\")");
    return cfg;
}

std::unique_ptr<mf::AgentBackend> make_backend(const mf::RunConfigFile& cfg, std::uint64_t seed) {
    switch (cfg.loop.backend) {
    case mf::BackendKind::scripted:
        return std::make_unique<mf::ScriptedBackend>(seed, cfg.loop.seed_perturbation);
    case mf::BackendKind::replay:
        return std::make_unique<mf::ReplayBackend>(*cfg.fixture);
    case mf::BackendKind::llm:
        return std::make_unique<mf::LlmBackend>(cfg.llm);
    }
    throw mf::config_error("unknown backend");
}

void write_run_outputs(const mf::RunConfigFile& cfg, const mf::RunResult& result) {
    const fs::path out = cfg.output_dir;
    mf::atomic_write(out / "run_result.json", nlohmann::json(result).dump(2) + "\n");
    if (cfg.exports.iteration_log) mf::atomic_write(out / "iterations.csv", mf::iteration_log_csv(result));
    if (cfg.exports.trajectory_csv) mf::atomic_write(out / "trajectory.csv", mf::trajectory_csv(result.best_trajectory));
}

int finish_run(const mf::RunConfigFile& cfg, const mf::RunResult& result) {
    write_run_outputs(cfg, result);
    std::cout << (result.converged ? "converged" : "best effort") << " after " << result.iterations_used
              << " iteration(s); best k=" << result.best_k << " cost=" << result.best_cost
              << " angle_error=" << result.best_metrics.angle_error << " deg\n"
              << "outputs in " << cfg.output_dir << "\n";
    return result.converged ? exit_converged : exit_best_effort;
}

int cmd_run(const Options& o) {
    const auto cfg = resolve(o);
    auto backend = make_backend(cfg, cfg.loop.seed);
    return finish_run(cfg, mf::run_loop(cfg.loop, cfg.task, *backend));
}

int cmd_replay(const Options& o) {
    auto cfg = resolve(o);
    cfg.loop.backend = mf::BackendKind::replay;
    if (!cfg.fixture) throw mf::config_error("replay needs --fixture");
    if (!fs::exists(*cfg.fixture)) throw mf::config_error("fixture '" + *cfg.fixture + "' does not exist");
    mf::ReplayBackend backend(*cfg.fixture);
    return finish_run(cfg, mf::run_loop(cfg.loop, cfg.task, backend));
}

int cmd_batch(const Options& o) {
    const auto cfg = resolve(o);
    int jobs = std::max(1, o.jobs);
    // One shared fixture cursor means trials must run in order.
    std::unique_ptr<mf::AgentBackend> shared;
    if (cfg.loop.backend != mf::BackendKind::scripted) shared = make_backend(cfg, cfg.loop.seed);
    if (cfg.loop.backend == mf::BackendKind::replay) jobs = 1;

    const auto report = mf::run_batch(
        cfg.loop, cfg.task, cfg.trials, cfg.batch_size,
        [&](int, std::uint64_t seed) -> std::unique_ptr<mf::AgentBackend> {
            if (shared) return std::make_unique<Borrowed>(*shared);
            return make_backend(cfg, seed);
        },
        jobs);

    const fs::path out = cfg.output_dir;
    mf::atomic_write(out / "batch_report.json", nlohmann::json(report).dump(2) + "\n");
    mf::atomic_write(out / "learning_progress.csv", mf::learning_progress_csv(report.batches));
    const auto impl = mf::format_implementation_table(report.implementation);
    mf::atomic_write(out / "table_implementation.txt", impl);

    const auto metrics = mf::evaluated_metrics(report);
    std::string comparison;
    if (!metrics.empty()) {
        comparison = mf::format_comparison_table(
            mf::summarize_comparison({metrics}, {report.vehicle}, cfg.loop.thresholds));
        mf::atomic_write(out / "table_comparison.txt", comparison);
    }
    if (cfg.exports.velocity_ci_csv) mf::atomic_write(out / "velocity_ci.csv", mf::velocity_ci_csv(report.velocity));
    if (cfg.exports.iteration_log) {
        std::vector<const mf::RunResult*> runs;
        for (std::size_t i = 0; i < report.runs.size(); ++i)
            runs.push_back(report.trials[i].evaluated ? &report.runs[i] : nullptr);
        mf::atomic_write(out / "iterations.csv", mf::iteration_log_csv(runs));
    }
    std::cout << impl << "\n" << comparison << "outputs in " << cfg.output_dir << "\n";
    return exit_converged;
}

// Builds a comparison table from saved batch reports, one column per report.
int cmd_report(const Options& o) {
    if (o.inputs.empty()) throw mf::config_error("report needs at least one batch_report.json");
    std::vector<std::vector<mf::TrialMetrics>> sets;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < o.inputs.size(); ++i) {
        std::ifstream in(o.inputs[i]);
        if (!in) throw mf::config_error("cannot read '" + o.inputs[i] + "'");
        const auto doc = nlohmann::json::parse(in);
        std::vector<mf::TrialMetrics> set;
        for (const auto& t : doc.at("trials"))
            if (t.at("evaluated").get<bool>()) set.push_back(t.at("best_metrics").get<mf::TrialMetrics>());
        if (set.empty()) throw mf::invalid_argument("'" + o.inputs[i] + "' has no evaluated trials");
        sets.push_back(std::move(set));
        labels.push_back(i < o.labels.size() ? o.labels[i] : doc.value("vehicle", "run " + std::to_string(i + 1)));
    }
    const auto table = mf::format_comparison_table(mf::summarize_comparison(sets, labels));
    std::cout << table;
    if (o.out) mf::atomic_write(fs::path(*o.out) / "table_comparison.txt", table);
    return exit_converged;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Closed-loop maneuver planning harness"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "Run configuration JSON")->check(CLI::ExistingFile);
        sub->add_option("--task", o.task, "Task sentence for the planner");
        sub->add_option("--out", o.out, "Output directory");
        sub->add_option("--backend", o.backend, "llm | scripted | replay");
        sub->add_option("--fixture", o.fixture, "JSONL fixture for the replay backend");
    };
    auto* run = app.add_subcommand("run", "Run one closed loop");
    common(run);
    auto* batch = app.add_subcommand("batch", "Run independent trials and aggregate them");
    common(batch);
    batch->add_option("--trials", o.trials, "Number of trials");
    batch->add_option("--batch-size", o.batch_size, "Trials per learning-progress batch");
    batch->add_option("--jobs", o.jobs, "Parallel trials");
    auto* replay = app.add_subcommand("replay", "Run one loop against a recorded fixture");
    common(replay);
    auto* report = app.add_subcommand("report", "Compare saved batch reports");
    report->add_option("inputs", o.inputs, "batch_report.json files")->required();
    report->add_option("--label", o.labels, "Column label, one per input");
    report->add_option("--out", o.out, "Directory for table_comparison.txt");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_config;
    }

    try {
        if (*run) return cmd_run(o);
        if (*batch) return cmd_batch(o);
        if (*replay) return cmd_replay(o);
        return cmd_report(o);
    } catch (const mf::config_error& e) {
        std::cerr << e.what() << "\n";
        return exit_config;
    } catch (const mf::fixture_exhausted& e) {
        std::cerr << e.what() << "\n";
        return exit_exhausted;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return exit_fatal;
    }
}
