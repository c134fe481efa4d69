#include "fprobe/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <set>

#include <json.hpp>

#include "fprobe/corpus_index.hpp"
#include "fprobe/errors.hpp"

namespace fprobe {

namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& raw) {
    const std::filesystem::path path(raw);
    return path.is_absolute() || base.empty() ? path : base / path;
}

void expect_keys(const json& object, const char* where,
                 std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : object.items()) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError(std::string("unknown config key \"") + key +
                              "\" in " + where);
        }
    }
}

std::vector<std::string> string_list(const json& value, const char* key) {
    std::vector<std::string> out;
    if (value.is_string()) {
        out.push_back(value.get<std::string>());
        return out;
    }
    if (!value.is_array()) {
        throw ConfigError(std::string(key) + " must be a string or a list");
    }
    for (const auto& item : value) {
        if (!item.is_string()) {
            throw ConfigError(std::string(key) + " entries must be strings");
        }
        out.push_back(item.get<std::string>());
    }
    return out;
}

InstructionMode parse_mode(const std::string& label) {
    if (label == "think") return InstructionMode::THINK_FIRST;
    const auto mode = instruction_mode_from_label(label);
    if (!mode) throw ConfigError("unknown instruction mode \"" + label + "\"");
    return *mode;
}

std::vector<TemplateKind> parse_templates(const json& value) {
    std::vector<TemplateKind> kinds;
    for (const std::string& label : string_list(value, "templates")) {
        const auto kind = template_kind_from_label(label);
        if (!kind) throw ConfigError("unknown template \"" + label + "\"");
        kinds.push_back(*kind);
    }
    return kinds;
}

std::vector<FrequencyBand> parse_bands(const json& value) {
    std::vector<FrequencyBand> bands;
    for (const std::string& label : string_list(value, "low_bands")) {
        const auto band = band_from_label(label);
        if (!band) throw ConfigError("unknown band \"" + label + "\"");
        bands.push_back(*band);
    }
    return bands;
}

void parse_endpoint(const json& object, ModelEndpoint& endpoint) {
    expect_keys(object, "endpoint",
                {"base_url", "model", "temperature", "max_tokens", "timeout_s",
                 "max_concurrent_requests", "max_retries",
                 "backoff_initial_ms"});
    if (object.contains("base_url")) {
        endpoint.base_url = object.at("base_url").get<std::string>();
    }
    if (object.contains("model")) {
        endpoint.model_name = object.at("model").get<std::string>();
    }
    if (object.contains("temperature")) {
        endpoint.temperature = object.at("temperature").get<double>();
    }
    if (object.contains("max_tokens")) {
        endpoint.max_tokens = object.at("max_tokens").get<uint32_t>();
    }
    if (object.contains("timeout_s")) {
        endpoint.request_timeout_s = object.at("timeout_s").get<uint32_t>();
    }
    if (object.contains("max_concurrent_requests")) {
        endpoint.max_concurrent_requests =
            object.at("max_concurrent_requests").get<uint32_t>();
    }
    if (object.contains("max_retries")) {
        endpoint.max_retries = object.at("max_retries").get<uint32_t>();
    }
    if (object.contains("backoff_initial_ms")) {
        endpoint.backoff_initial_ms =
            object.at("backoff_initial_ms").get<uint32_t>();
    }
}

} // namespace

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("malformed config " + path.string() + ": " +
                          e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("config " + path.string() + " must be an object");
    }

    expect_keys(doc, path.string().c_str(),
                {"corpus", "entities", "triples", "relations", "out_dir",
                 "index_dir", "secondary_counts", "relation_ids", "low_bands",
                 "high_threshold", "templates", "mode", "synonym_cap", "seed",
                 "shard_budget_bytes", "checkpoint_interval", "endpoint",
                 "mock", "probe"});

    const std::filesystem::path base = path.parent_path();
    ExperimentConfig config;

    try {
        if (doc.contains("corpus")) {
            for (const std::string& p : string_list(doc["corpus"], "corpus")) {
                config.corpus_paths.push_back(resolve(base, p));
            }
        }
        if (doc.contains("entities")) {
            config.entities_tsv =
                resolve(base, doc["entities"].get<std::string>());
        }
        if (doc.contains("triples")) {
            config.triples_tsv =
                resolve(base, doc["triples"].get<std::string>());
        }
        if (doc.contains("relations")) {
            config.relations_json =
                resolve(base, doc["relations"].get<std::string>());
        }
        if (doc.contains("out_dir")) {
            config.out_dir = resolve(base, doc["out_dir"].get<std::string>());
        }
        if (doc.contains("index_dir")) {
            config.index_dir =
                resolve(base, doc["index_dir"].get<std::string>());
        }
        if (doc.contains("secondary_counts")) {
            config.secondary_counts =
                resolve(base, doc["secondary_counts"].get<std::string>());
        }
        if (doc.contains("relation_ids")) {
            config.relation_ids =
                string_list(doc["relation_ids"], "relation_ids");
        }
        if (doc.contains("low_bands")) {
            config.low_bands = parse_bands(doc["low_bands"]);
        }
        if (doc.contains("high_threshold")) {
            config.high_threshold = doc["high_threshold"].get<uint64_t>();
        }
        if (doc.contains("templates")) {
            config.template_kinds = parse_templates(doc["templates"]);
        }
        if (doc.contains("mode")) {
            config.mode = parse_mode(doc["mode"].get<std::string>());
        }
        if (doc.contains("synonym_cap")) {
            config.synonym_cap = doc["synonym_cap"].get<size_t>();
        }
        if (doc.contains("seed")) {
            config.seed = doc["seed"].get<uint64_t>();
        }
        if (doc.contains("shard_budget_bytes")) {
            config.shard_budget = doc["shard_budget_bytes"].get<uint64_t>();
        }
        if (doc.contains("checkpoint_interval")) {
            config.checkpoint_interval =
                doc["checkpoint_interval"].get<uint32_t>();
        }
        if (doc.contains("endpoint")) {
            parse_endpoint(doc["endpoint"], config.endpoint);
        }
        if (doc.contains("mock")) {
            const json& mock = doc["mock"];
            expect_keys(mock, "mock", {"enabled", "high_rate", "low_rate"});
            if (mock.contains("enabled")) {
                config.mock.enabled = mock.at("enabled").get<bool>();
            }
            if (mock.contains("high_rate")) {
                config.mock.high_rate = mock.at("high_rate").get<double>();
            }
            if (mock.contains("low_rate")) {
                config.mock.low_rate = mock.at("low_rate").get<double>();
            }
        }
        if (doc.contains("probe")) {
            const json& probe = doc["probe"];
            expect_keys(probe, "probe",
                        {"short_circuit", "max_pairs", "workers"});
            if (probe.contains("short_circuit")) {
                config.probe.short_circuit =
                    probe.at("short_circuit").get<bool>();
            }
            if (probe.contains("max_pairs")) {
                config.probe.max_pairs = probe.at("max_pairs").get<uint64_t>();
            }
            if (probe.contains("workers")) {
                config.probe.workers = probe.at("workers").get<size_t>();
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError("malformed config " + path.string() + ": " +
                          e.what());
    }
    return config;
}

void validate_config(const ExperimentConfig& config) {
    // The largest low band tops out at 99999; the high threshold must sit
    // strictly above every low band.
    if (config.high_threshold < 100000) {
        throw ConfigError(
            "high_threshold must be at least 100000, above the largest low "
            "band");
    }
    if (config.synonym_cap < 1 || config.synonym_cap > kMaxAliasesPerEntity) {
        throw ConfigError("synonym_cap must be between 1 and " +
                          std::to_string(kMaxAliasesPerEntity));
    }
    if (config.low_bands.empty()) {
        throw ConfigError("low_bands must name at least one band");
    }
    std::set<FrequencyBand> seen_bands;
    for (const FrequencyBand band : config.low_bands) {
        if (band == FrequencyBand::HIGH) {
            throw ConfigError("low_bands cannot include the high band");
        }
        if (!seen_bands.insert(band).second) {
            throw ConfigError("low_bands lists a band twice");
        }
    }
    if (config.template_kinds.empty()) {
        throw ConfigError("templates must name at least one template kind");
    }
    std::set<TemplateKind> seen_kinds;
    for (const TemplateKind kind : config.template_kinds) {
        if (!seen_kinds.insert(kind).second) {
            throw ConfigError("templates lists a template kind twice");
        }
    }
    if (config.mock.high_rate < 0.0 || config.mock.high_rate > 1.0 ||
        config.mock.low_rate < 0.0 || config.mock.low_rate > 1.0) {
        throw ConfigError("mock reply rates must lie in [0, 1]");
    }
    if (config.endpoint.temperature < 0.0 ||
        config.endpoint.temperature > 2.0) {
        throw ConfigError("endpoint temperature must lie in [0, 2]");
    }
    if (config.endpoint.max_concurrent_requests < 1) {
        throw ConfigError("max_concurrent_requests must be at least 1");
    }
}

std::filesystem::path config_index_dir(const ExperimentConfig& config) {
    return config.index_dir.empty() ? config.out_dir / "index"
                                    : config.index_dir;
}

std::filesystem::path config_manifest_path(const ExperimentConfig& config) {
    return config_index_dir(config) / "manifest.json";
}

std::filesystem::path config_frequencies_path(const ExperimentConfig& config) {
    return config.out_dir / "frequencies.tsv";
}

std::filesystem::path config_datasets_dir(const ExperimentConfig& config) {
    return config.out_dir / "datasets";
}

std::filesystem::path config_outcomes_dir(const ExperimentConfig& config) {
    return config.out_dir / "outcomes";
}

std::vector<RelationSpec> config_relations(const ExperimentConfig& config) {
    std::vector<RelationSpec> all = config.relations_json.empty()
                                        ? default_relations()
                                        : load_relations(config.relations_json);
    if (config.relation_ids.empty()) return all;

    std::vector<RelationSpec> selected;
    for (const std::string& id : config.relation_ids) {
        const auto it =
            std::find_if(all.begin(), all.end(), [&](const RelationSpec& r) {
                return r.relation_id == id;
            });
        if (it == all.end()) {
            throw ConfigError("relation " + id +
                              " is not in the relation configuration");
        }
        selected.push_back(*it);
    }
    return selected;
}

BuildReport run_index_build(const ExperimentConfig& config) {
    if (config.corpus_paths.empty()) {
        throw ConfigError("no corpus paths configured; set corpus or pass "
                          "--corpus");
    }
    std::vector<std::string> docs;
    std::string label;
    for (const std::filesystem::path& path : config.corpus_paths) {
        std::vector<std::string> part = ingest_documents(path);
        docs.insert(docs.end(), std::make_move_iterator(part.begin()),
                    std::make_move_iterator(part.end()));
        if (!label.empty()) label += ',';
        label += path.string();
    }
    BuildOptions options;
    options.shard_budget = config.shard_budget;
    if (config.checkpoint_interval != 0) {
        options.checkpoint_interval = config.checkpoint_interval;
    }
    options.source_label = label;
    return build_corpus_index(docs, config_index_dir(config), options);
}

CountResult run_count(const ExperimentConfig& config,
                      const std::string& pattern) {
    const std::filesystem::path manifest = config_manifest_path(config);
    if (!std::filesystem::exists(manifest)) {
        throw ConfigError("no index manifest at " + manifest.string() +
                          "; run index build first");
    }
    const CorpusIndex index = CorpusIndex::load(manifest);
    const Pattern needle(pattern);
    CountResult result;
    const auto start = std::chrono::steady_clock::now();
    result.count = index.count(needle);
    const auto stop = std::chrono::steady_clock::now();
    result.seconds = std::chrono::duration<double>(stop - start).count();
    return result;
}

FrequencyReport run_freq_compute(const ExperimentConfig& config) {
    const std::filesystem::path manifest = config_manifest_path(config);
    if (!std::filesystem::exists(manifest)) {
        throw ConfigError("no index manifest at " + manifest.string() +
                          "; run index build first");
    }
    if (config.entities_tsv.empty() ||
        !std::filesystem::exists(config.entities_tsv)) {
        throw ConfigError("entity TSV not found: " +
                          config.entities_tsv.string());
    }
    const CorpusIndex index = CorpusIndex::load(manifest);
    std::vector<EntityRecord> records = load_entities(config.entities_tsv);
    std::filesystem::create_directories(config.out_dir);
    AliasCountCache cache(config.out_dir / "alias_counts.tsv",
                          index.corpus_fingerprint());
    compute_frequencies(records, index, &cache);

    FrequencyReport report;
    report.frequencies_path = config_frequencies_path(config);
    write_frequencies(records, report.frequencies_path);
    report.entities = records.size();
    report.cache_hits = cache.hits();
    report.cache_misses = cache.misses();
    return report;
}

namespace {

std::string bool_label(bool value) { return value ? "true" : "false"; }

std::unordered_map<std::string, std::pair<uint64_t, FrequencyBand>>
frequencies_or_compute(const ExperimentConfig& config) {
    const std::filesystem::path path = config_frequencies_path(config);
    if (!std::filesystem::exists(path)) {
        run_freq_compute(config);
    }
    return read_frequencies(path);
}

} // namespace

DatasetReport run_dataset_build(const ExperimentConfig& config) {
    if (config.triples_tsv.empty() ||
        !std::filesystem::exists(config.triples_tsv)) {
        throw ConfigError("triple TSV not found: " +
                          config.triples_tsv.string());
    }
    const std::vector<RelationSpec> relations = config_relations(config);

    std::vector<EntityRecord> records = load_entities(config.entities_tsv);
    EntityTable entities = index_entities(std::move(records));
    apply_frequencies(entities, frequencies_or_compute(config));

    TripleLoadStats stats;
    const std::vector<Triple> triples =
        load_triples(config.triples_tsv, relations, &stats);
    const Divisions divisions =
        build_divisions(triples, entities, relations, config.low_bands);

    DatasetReport report;
    report.datasets_dir = config_datasets_dir(config);
    report.skips = divisions.skips;
    std::filesystem::create_directories(report.datasets_dir);

    std::string cells_tsv = "cell\trelation_id\tsetting\tlow_band\ttotal\t"
                            "underpowered\n";
    for (const ProbeDataset& dataset : divisions.datasets) {
        const std::string cell = dataset.cell_name();
        write_dataset_jsonl(dataset, entities,
                            report.datasets_dir / (cell + ".jsonl"));

        CellInfo info;
        info.cell = cell;
        info.relation_id = dataset.relation_id;
        info.relation_name = dataset.relation_id;
        for (const RelationSpec& relation : relations) {
            if (relation.relation_id == dataset.relation_id) {
                info.relation_name = relation.name;
            }
        }
        info.setting = dataset.setting;
        info.low_band = dataset.low_band;
        info.total = dataset.total();
        info.underpowered = dataset.underpowered();
        report.cells.push_back(info);

        cells_tsv += cell;
        cells_tsv += '\t';
        cells_tsv += dataset.relation_id;
        cells_tsv += '\t';
        cells_tsv += setting_label(dataset.setting);
        cells_tsv += '\t';
        cells_tsv += dataset.low_band ? band_label(*dataset.low_band) : "";
        cells_tsv += '\t';
        cells_tsv += std::to_string(dataset.total());
        cells_tsv += '\t';
        cells_tsv += bool_label(dataset.underpowered());
        cells_tsv += '\n';
    }

    {
        std::ofstream out(report.datasets_dir / "cells.tsv",
                          std::ios::binary);
        if (!out) throw IoError("cannot write cells.tsv");
        out << cells_tsv;
        out.flush();
        if (!out) throw IoError("write failed for cells.tsv");
    }
    {
        std::ofstream out(report.datasets_dir / "skips.tsv",
                          std::ios::binary);
        if (!out) throw IoError("cannot write skips.tsv");
        out << "rows_read\tkept\tfiltered_by_relation\tself_loops_skipped\t"
               "duplicates_skipped\tlow_low\tband_excluded\n"
            << stats.rows_read << '\t' << stats.kept << '\t'
            << stats.filtered_by_relation << '\t'
            << stats.self_loops_skipped << '\t' << stats.duplicates_skipped
            << '\t' << divisions.skips.low_low << '\t'
            << divisions.skips.band_excluded << '\n';
        out.flush();
        if (!out) throw IoError("write failed for skips.tsv");
    }
    return report;
}

std::vector<CellInfo> read_cells_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("no cell summary at " + path.string() +
                          "; run dataset build first");
    }
    std::vector<CellInfo> cells;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        size_t start = 0;
        while (true) {
            const size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (line_no == 1 && !fields.empty() && fields[0] == "cell") continue;
        if (fields.size() != 6) {
            throw MalformedRowError("cells summary " + path.string() +
                                    " line " + std::to_string(line_no) +
                                    ": expected 6 columns");
        }
        CellInfo info;
        info.cell = fields[0];
        info.relation_id = fields[1];
        info.relation_name = fields[1];
        const auto setting = setting_from_label(fields[2]);
        if (!setting) {
            throw MalformedRowError("cells summary line " +
                                    std::to_string(line_no) +
                                    ": unknown setting " + fields[2]);
        }
        info.setting = *setting;
        if (!fields[3].empty()) {
            const auto band = band_from_label(fields[3]);
            if (!band) {
                throw MalformedRowError("cells summary line " +
                                        std::to_string(line_no) +
                                        ": unknown band " + fields[3]);
            }
            info.low_band = band;
        }
        try {
            info.total = std::stoull(fields[4]);
        } catch (const std::exception&) {
            throw MalformedRowError("cells summary line " +
                                    std::to_string(line_no) +
                                    ": bad total " + fields[4]);
        }
        info.underpowered = fields[5] == "true";
        cells.push_back(std::move(info));
    }
    return cells;
}

namespace {

// Name lookup for report rows; cells keep their relation id when the
// relation set no longer names them.
std::map<std::string, std::string> relation_names(
    const std::vector<RelationSpec>& relations) {
    std::map<std::string, std::string> names;
    for (const RelationSpec& relation : relations) {
        names[relation.relation_id] =
            relation.name.empty() ? relation.relation_id : relation.name;
    }
    return names;
}

ModelEndpoint resolved_endpoint(const ExperimentConfig& config) {
    ModelEndpoint endpoint = config.endpoint;
    if (endpoint.max_tokens == 0) {
        endpoint.max_tokens = default_max_tokens(config.mode);
    }
    if (config.mock.enabled && endpoint.model_name.empty()) {
        endpoint.model_name = "rule-mock";
    }
    return endpoint;
}

std::filesystem::path outcome_path(const ExperimentConfig& config,
                                   const CellInfo& cell, TemplateKind kind) {
    return config_outcomes_dir(config) /
           (cell.cell + "." + std::string(template_kind_label(kind)) +
            ".jsonl");
}

} // namespace

ProbeReport run_probe(const ExperimentConfig& config) {
    const std::vector<RelationSpec> relations = config_relations(config);
    std::map<std::string, RelationSpec> relation_by_id;
    for (const RelationSpec& relation : relations) {
        relation_by_id[relation.relation_id] = relation;
    }

    std::vector<CellInfo> cells =
        read_cells_tsv(config_datasets_dir(config) / "cells.tsv");
    std::erase_if(cells, [&](const CellInfo& cell) {
        return relation_by_id.find(cell.relation_id) == relation_by_id.end();
    });
    if (cells.empty()) {
        throw ConfigError("no dataset cells match the configured relations");
    }

    // Rows are needed up front twice over: to probe, and to teach the mock
    // each alias's frequency.
    std::vector<std::vector<DatasetRow>> rows_per_cell;
    rows_per_cell.reserve(cells.size());
    for (const CellInfo& cell : cells) {
        rows_per_cell.push_back(read_dataset_jsonl(
            config_datasets_dir(config) / (cell.cell + ".jsonl")));
    }

    const ModelEndpoint endpoint = resolved_endpoint(config);
    std::unique_ptr<ModelClient> client;
    if (config.mock.enabled) {
        MockRules rules;
        rules.high_threshold = config.high_threshold;
        rules.high_first_positive_rate = config.mock.high_rate;
        rules.low_first_positive_rate = config.mock.low_rate;
        rules.seed = config.seed;
        for (const std::vector<DatasetRow>& rows : rows_per_cell) {
            for (const DatasetRow& row : rows) {
                for (const std::string& alias : row.subject_aliases) {
                    rules.alias_frequency.emplace(alias,
                                                  row.subject_frequency);
                }
                for (const std::string& alias : row.object_aliases) {
                    rules.alias_frequency.emplace(alias,
                                                  row.object_frequency);
                }
            }
        }
        client = std::make_unique<RuleMockClient>(std::move(rules), endpoint);
    } else {
        if (endpoint.base_url.empty()) {
            throw ConfigError("endpoint base_url is required unless the mock "
                              "backend is enabled");
        }
        client = std::make_unique<HttpModelClient>(endpoint);
    }

    std::filesystem::create_directories(config_outcomes_dir(config));
    ResponseCache cache(config.out_dir / "replies.jsonl");

    ProbeReport report;
    for (size_t i = 0; i < cells.size(); ++i) {
        const RelationSpec& relation = relation_by_id.at(cells[i].relation_id);
        for (const TemplateKind kind : config.template_kinds) {
            const PromptTemplate prompt_template =
                make_template(relation, kind, config.mode);
            RunOptions options;
            options.seed = config.seed;
            options.short_circuit = config.probe.short_circuit;
            options.alias_cap = config.synonym_cap;
            options.max_pairs = config.probe.max_pairs;
            options.workers = config.probe.workers;
            options.outcomes_path = outcome_path(config, cells[i], kind);
            const auto records = run_division(rows_per_cell[i],
                                              prompt_template, *client,
                                              &cache, options);
            report.runs.push_back(
                {cells[i], kind, options.outcomes_path, records.size()});
        }
    }
    return report;
}

namespace {

// entity_id<TAB>count rows with an optional header; extra columns are
// ignored so frequencies.tsv itself is accepted.
std::vector<std::pair<std::string, uint64_t>> read_count_tsv(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open count TSV " + path.string());
    std::vector<std::pair<std::string, uint64_t>> counts;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw MalformedRowError("count TSV " + path.string() + " line " +
                                    std::to_string(line_no) +
                                    ": expected entity_id<TAB>count");
        }
        const std::string id = line.substr(0, tab);
        const size_t next_tab = line.find('\t', tab + 1);
        const std::string value =
            line.substr(tab + 1, next_tab == std::string::npos
                                     ? std::string::npos
                                     : next_tab - tab - 1);
        if (line_no == 1 && id == "entity_id") continue;
        try {
            counts.emplace_back(id, std::stoull(value));
        } catch (const std::exception&) {
            throw MalformedRowError("count TSV " + path.string() + " line " +
                                    std::to_string(line_no) +
                                    ": bad count " + value);
        }
    }
    return counts;
}

} // namespace

ReportPaths run_report(const ExperimentConfig& config) {
    const std::vector<CellInfo> cells =
        read_cells_tsv(config_datasets_dir(config) / "cells.tsv");
    const auto names = relation_names(config_relations(config));

    std::vector<CellSummary> summaries;
    for (const CellInfo& cell : cells) {
        for (const TemplateKind kind : config.template_kinds) {
            const std::filesystem::path outcomes =
                outcome_path(config, cell, kind);
            if (!std::filesystem::exists(outcomes)) continue;
            std::vector<PairedOutcome> pairs;
            for (const PairedProbeRecord& record :
                 read_paired_outcomes(outcomes)) {
                pairs.push_back(
                    {record.forward_recognized, record.backward_recognized});
            }
            const auto name = names.find(cell.relation_id);
            summaries.push_back(summarize_cell(
                cell.setting, cell.low_band, cell.relation_id,
                name == names.end() ? cell.relation_id : name->second, kind,
                pairs));
        }
    }
    if (summaries.empty()) {
        throw ConfigError("no outcome files under " +
                          config_outcomes_dir(config).string() +
                          "; run probe first");
    }

    std::filesystem::create_directories(config.out_dir);
    ReportPaths paths;
    paths.table_txt = config.out_dir / "report.txt";
    paths.table_csv = config.out_dir / "report.csv";
    paths.ratios_csv = config.out_dir / "ratios.csv";
    paths.table_text = render_asymmetry_table(summaries);

    if (!config.secondary_counts.empty()) {
        const auto frequencies =
            read_frequencies(config_frequencies_path(config));
        std::vector<std::pair<std::string, uint64_t>> secondary =
            read_count_tsv(config.secondary_counts);
        std::sort(secondary.begin(), secondary.end());
        std::vector<std::pair<uint64_t, uint64_t>> matched;
        for (const auto& [id, count] : secondary) {
            const auto it = frequencies.find(id);
            if (it == frequencies.end()) continue;
            matched.emplace_back(it->second.first, count);
        }
        const CorrelationReport correlation = log1p_correlations(matched);
        paths.correlation_csv = config.out_dir / "correlation.csv";
        write_correlation_csv(correlation, paths.correlation_csv);
        paths.table_text += '\n' + render_correlation(correlation) + '\n';
    }

    write_asymmetry_csv(summaries, paths.table_csv);
    write_ratio_csv(summaries, paths.ratios_csv);
    std::ofstream out(paths.table_txt, std::ios::binary);
    if (!out) throw IoError("cannot write " + paths.table_txt.string());
    out << paths.table_text;
    out.flush();
    if (!out) throw IoError("write failed for " + paths.table_txt.string());
    return paths;
}

} // namespace fprobe
