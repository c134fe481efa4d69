#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fprobe/errors.hpp"
#include "fprobe/experiment.hpp"

namespace {

using namespace fprobe;

int cmd_index_build(const ExperimentConfig& config) {
    const BuildReport report = run_index_build(config);
    std::printf("manifest: %s\n", report.manifest_path.c_str());
    std::printf("shards: %zu built, %zu up to date\n", report.shards_built,
                report.shards_total - report.shards_built);
    return 0;
}

int cmd_index_count(const ExperimentConfig& config,
                    const std::string& pattern) {
    const CountResult result = run_count(config, pattern);
    std::printf("%llu\n", static_cast<unsigned long long>(result.count));
    std::fprintf(stderr, "query time: %.6f s\n", result.seconds);
    return 0;
}

int cmd_freq_compute(const ExperimentConfig& config) {
    const FrequencyReport report = run_freq_compute(config);
    std::printf("frequencies: %s\n", report.frequencies_path.c_str());
    std::printf("entities: %zu (alias cache: %zu hits, %zu misses)\n",
                report.entities, report.cache_hits, report.cache_misses);
    return 0;
}

int cmd_dataset_build(const ExperimentConfig& config) {
    const DatasetReport report = run_dataset_build(config);
    if (report.cells.empty()) {
        std::fprintf(stderr, "warning: no datasets produced; the triple file "
                             "is empty or nothing survived filtering\n");
    }
    std::printf("%-36s %8s %s\n", "cell", "total", "underpowered");
    for (const CellInfo& cell : report.cells) {
        std::printf("%-36s %8zu %s\n", cell.cell.c_str(), cell.total,
                    cell.underpowered ? "yes" : "no");
    }
    std::printf("skipped: %llu low-low, %llu outside requested bands\n",
                static_cast<unsigned long long>(report.skips.low_low),
                static_cast<unsigned long long>(report.skips.band_excluded));
    return 0;
}

int cmd_probe_run(const ExperimentConfig& config) {
    const ProbeReport report = run_probe(config);
    for (const ProbeCellReport& run : report.runs) {
        std::printf("%s %s: %zu pairs -> %s\n", run.cell.cell.c_str(),
                    template_kind_label(run.kind).data(), run.pairs,
                    run.outcomes_path.c_str());
    }
    return 0;
}

int cmd_report(const ExperimentConfig& config) {
    const ReportPaths paths = run_report(config);
    std::fputs(paths.table_text.c_str(), stdout);
    std::fprintf(stderr, "wrote %s\n", paths.table_txt.c_str());
    std::fprintf(stderr, "wrote %s\n", paths.table_csv.c_str());
    std::fprintf(stderr, "wrote %s\n", paths.ratios_csv.c_str());
    if (!paths.correlation_csv.empty()) {
        std::fprintf(stderr, "wrote %s\n", paths.correlation_csv.c_str());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Corpus frequency indexing and two-way fact recognition "
                 "probes"};
    app.require_subcommand(1);

    // Shared flags; command-line values override the config file, which
    // overrides built-in defaults.
    std::string config_path;
    std::vector<std::string> corpus;
    std::vector<std::string> relations;
    std::string template_kind;
    std::string mode;
    std::string endpoint_url;
    std::string out_dir;
    uint64_t seed = 0;
    bool mock = false;

    app.add_option("--config", config_path, "JSON experiment config file");
    auto* corpus_opt = app.add_option(
        "--corpus", corpus, "corpus file or directory, repeatable");
    auto* relation_opt = app.add_option(
        "--relation", relations, "restrict to this relation id, repeatable");
    auto* template_opt =
        app.add_option("--template", template_kind, "probe one template kind")
            ->check(CLI::IsMember({"question", "statement"}));
    auto* mode_opt =
        app.add_option("--mode", mode, "answer style requested of the model")
            ->check(CLI::IsMember({"direct", "think"}));
    auto* endpoint_opt = app.add_option("--endpoint", endpoint_url,
                                        "chat-completion base URL");
    auto* mock_flag = app.add_flag(
        "--mock", mock, "probe the offline frequency-biased mock model");
    auto* seed_opt =
        app.add_option("--seed", seed, "seed for alias sampling and the mock");
    auto* out_opt = app.add_option("--out", out_dir, "output directory");

    CLI::App* index = app.add_subcommand("index", "build or query the index");
    index->require_subcommand(1);
    index->fallthrough();
    CLI::App* index_build =
        index->add_subcommand("build", "index the corpus into shards");
    index_build->fallthrough();
    CLI::App* index_count = index->add_subcommand("count", "count a pattern");
    index_count->fallthrough();
    std::string pattern;
    index_count->add_option("--pattern", pattern, "bytes to count")
        ->required();

    CLI::App* freq = app.add_subcommand("freq", "entity frequencies");
    freq->require_subcommand(1);
    freq->fallthrough();
    CLI::App* freq_compute = freq->add_subcommand(
        "compute", "count every entity's aliases against the index");
    freq_compute->fallthrough();

    CLI::App* dataset = app.add_subcommand("dataset", "probe datasets");
    dataset->require_subcommand(1);
    dataset->fallthrough();
    CLI::App* dataset_build = dataset->add_subcommand(
        "build", "split triples into frequency-setting cells");
    dataset_build->fallthrough();

    CLI::App* probe = app.add_subcommand("probe", "recognition probes");
    probe->require_subcommand(1);
    probe->fallthrough();
    CLI::App* probe_run = probe->add_subcommand(
        "run", "probe every cell forward and backward, resumably");
    probe_run->fallthrough();

    CLI::App* report_cmd = app.add_subcommand(
        "report", "summarize outcomes into the asymmetry report");
    report_cmd->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig config;
        if (!config_path.empty()) config = load_config(config_path);
        if (corpus_opt->count() > 0) {
            config.corpus_paths.assign(corpus.begin(), corpus.end());
        }
        if (relation_opt->count() > 0) config.relation_ids = relations;
        if (template_opt->count() > 0) {
            config.template_kinds = {*template_kind_from_label(template_kind)};
        }
        if (mode_opt->count() > 0) {
            config.mode = mode == "think" ? InstructionMode::THINK_FIRST
                                          : InstructionMode::DIRECT;
        }
        if (endpoint_opt->count() > 0) config.endpoint.base_url = endpoint_url;
        if (mock_flag->count() > 0) config.mock.enabled = true;
        if (seed_opt->count() > 0) config.seed = seed;
        if (out_opt->count() > 0) config.out_dir = out_dir;
        validate_config(config);

        if (index_build->parsed()) return cmd_index_build(config);
        if (index_count->parsed()) return cmd_index_count(config, pattern);
        if (freq_compute->parsed()) return cmd_freq_compute(config);
        if (dataset_build->parsed()) return cmd_dataset_build(config);
        if (probe_run->parsed()) return cmd_probe_run(config);
        if (report_cmd->parsed()) return cmd_report(config);
    } catch (const fprobe::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
