#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fprobe/corpus.hpp"
#include "fprobe/entity_catalog.hpp"
#include "fprobe/probe_runner.hpp"
#include "fprobe/prompt_builder.hpp"
#include "fprobe/report.hpp"
#include "fprobe/triple_store.hpp"

namespace fprobe {

struct MockConfig {
    bool enabled = false;
    // Chance of a positive reply keyed on the first-mentioned entity's
    // frequency band.
    double high_rate = 0.8;
    double low_rate = 0.4;
};

struct ProbeConfig {
    bool short_circuit = true;
    uint64_t max_pairs = 0; // 0: whole cell
    size_t workers = 0;     // 0: endpoint.max_concurrent_requests
};

// An endpoint with the reply budget unset; run_probe reads max_tokens 0 as
// "pick by instruction mode", so THINK_FIRST runs get the long budget
// unless a size is configured explicitly.
inline ModelEndpoint mode_sized_endpoint() {
    ModelEndpoint endpoint;
    endpoint.max_tokens = 0;
    return endpoint;
}

// One experiment, fully specified. Every run artifact lands under out_dir:
//   index/            shard files and manifest (unless index_dir overrides)
//   frequencies.tsv   per-entity corpus counts and bands
//   alias_counts.tsv  per-alias count cache keyed by corpus fingerprint
//   datasets/         per-cell JSONL rows plus cells.tsv and skips.tsv
//   outcomes/         per-cell, per-template paired outcome JSONL
//   replies.jsonl     raw model reply cache
//   report.txt/.csv, ratios.csv, correlation.csv
struct ExperimentConfig {
    std::vector<std::filesystem::path> corpus_paths;
    std::filesystem::path entities_tsv;
    std::filesystem::path triples_tsv;
    std::filesystem::path relations_json; // empty: built-in relations
    std::filesystem::path out_dir = "out";
    std::filesystem::path index_dir;      // empty: out_dir/index
    // Optional second per-entity count source (TSV, entity_id<TAB>count);
    // when present the report correlates it against the corpus counts.
    std::filesystem::path secondary_counts;

    std::vector<std::string> relation_ids; // empty: every configured relation
    std::vector<FrequencyBand> low_bands = {FrequencyBand::B0_1K,
                                            FrequencyBand::B1K_10K,
                                            FrequencyBand::B10K_100K};
    uint64_t high_threshold = 100000;
    std::vector<TemplateKind> template_kinds = {TemplateKind::QUESTION,
                                                TemplateKind::STATEMENT};
    InstructionMode mode = InstructionMode::DIRECT;
    size_t synonym_cap = kMaxAliasesPerEntity;
    uint64_t seed = 0;

    uint64_t shard_budget = kDefaultShardBudget;
    uint32_t checkpoint_interval = 0; // 0: library default
    // endpoint.max_tokens 0 means "pick by instruction mode".
    ModelEndpoint endpoint = mode_sized_endpoint();
    MockConfig mock;
    ProbeConfig probe;
};

// Reads a JSON config. Relative paths are resolved against the config
// file's directory; unknown keys raise ConfigError so typos surface
// instead of silently meaning defaults.
ExperimentConfig load_config(const std::filesystem::path& path);

// Checks cross-field invariants (threshold above the low bands, rates and
// caps in range, non-empty band/template selections). Throws ConfigError.
void validate_config(const ExperimentConfig& config);

// Resolved artifact locations.
std::filesystem::path config_index_dir(const ExperimentConfig& config);
std::filesystem::path config_manifest_path(const ExperimentConfig& config);
std::filesystem::path config_frequencies_path(const ExperimentConfig& config);
std::filesystem::path config_datasets_dir(const ExperimentConfig& config);
std::filesystem::path config_outcomes_dir(const ExperimentConfig& config);

// The relation set this experiment probes: loaded from relations_json (or
// the built-ins) and filtered to relation_ids when given. Unknown
// relation_ids raise ConfigError.
std::vector<RelationSpec> config_relations(const ExperimentConfig& config);

// Ingests every corpus path (file, gzip file, or directory) and builds or
// refreshes the sharded index; unchanged shards are skipped.
BuildReport run_index_build(const ExperimentConfig& config);

struct CountResult {
    uint64_t count = 0;
    double seconds = 0.0; // query time, excluding index load
};

CountResult run_count(const ExperimentConfig& config,
                      const std::string& pattern);

struct FrequencyReport {
    std::filesystem::path frequencies_path;
    size_t entities = 0;
    size_t cache_hits = 0;
    size_t cache_misses = 0;
};

// Counts every entity's aliases against the index and writes
// frequencies.tsv. Alias counts are cached across runs keyed by the corpus
// fingerprint.
FrequencyReport run_freq_compute(const ExperimentConfig& config);

struct CellInfo {
    std::string cell;          // file stem, e.g. P26_high_to_low_B0_1K
    std::string relation_id;
    std::string relation_name;
    Setting setting = Setting::HIGH_TO_HIGH;
    std::optional<FrequencyBand> low_band;
    size_t total = 0;
    bool underpowered = true;
};

struct DatasetReport {
    std::filesystem::path datasets_dir;
    std::vector<CellInfo> cells;
    DivisionSkips skips;
};

// Partitions the triples into per-cell datasets and writes one JSONL file
// per cell plus cells.tsv (the cell summary consumed by probe and report)
// and skips.tsv. Computes frequencies first when frequencies.tsv is
// missing.
DatasetReport run_dataset_build(const ExperimentConfig& config);

// Reads datasets/cells.tsv back. Throws ConfigError when absent.
std::vector<CellInfo> read_cells_tsv(const std::filesystem::path& path);

struct ProbeCellReport {
    CellInfo cell;
    TemplateKind kind = TemplateKind::QUESTION;
    std::filesystem::path outcomes_path;
    size_t pairs = 0;
};

struct ProbeReport {
    std::vector<ProbeCellReport> runs;
};

// Probes every dataset cell under every configured template kind,
// appending outcomes with resume support. With mock.enabled the
// frequency-biased rule client replaces the HTTP endpoint; otherwise
// endpoint.base_url must be set.
ProbeReport run_probe(const ExperimentConfig& config);

struct ReportPaths {
    std::filesystem::path table_txt;
    std::filesystem::path table_csv;
    std::filesystem::path ratios_csv;
    std::filesystem::path correlation_csv; // empty when not requested
    std::string table_text; // the rendered table, for printing
};

// Summarizes all existing outcome files into the asymmetry table, the CSV
// mirrors, and the ratio CSV; adds the count correlation when
// secondary_counts is configured.
ReportPaths run_report(const ExperimentConfig& config);

} // namespace fprobe
