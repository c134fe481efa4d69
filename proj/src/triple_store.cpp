#include "fprobe/triple_store.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "fprobe/errors.hpp"

namespace fprobe {

namespace {

size_t count_occurrences(const std::string& text, const std::string& needle) {
    size_t n = 0;
    for (size_t pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + 1)) {
        ++n;
    }
    return n;
}

void validate_template(const std::string& tmpl, const std::string& which,
                       const std::string& relation_id) {
    for (const char* placeholder : {"{s}", "{o}"}) {
        const size_t n = count_occurrences(tmpl, placeholder);
        if (n != 1) {
            throw TemplateError(which + " template of " + relation_id +
                                " must contain " + placeholder +
                                " exactly once, found " + std::to_string(n));
        }
    }
}

std::vector<std::string> split_tsv(const std::string& line) {
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
        const size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

} // namespace

void RelationSpec::validate() const {
    validate_template(question_template, "question", relation_id);
    validate_template(statement_template, "statement", relation_id);
}

std::vector<RelationSpec> default_relations() {
    return {
        {"P190", "twinTown", "Is {s} twinned with {o}?",
         "{s} is twinned with {o}.", true},
        {"P26", "spouse", "Is {s} married to {o}?", "{s} is married to {o}.",
         true},
        {"P3373", "sibling", "Does {s} have a sibling named {o}?",
         "{s} has a sibling named {o}.", true},
        {"P47", "bordersWith", "Does {s} border with {o}?",
         "{s} borders with {o}.", true},
    };
}

std::vector<RelationSpec> load_relations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open relation config " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed relation config " + path.string() + ": " +
                          e.what());
    }
    const nlohmann::json* list = &doc;
    if (doc.is_object()) {
        if (!doc.contains("relations")) {
            throw ConfigError("relation config " + path.string() +
                              " has no \"relations\" array");
        }
        list = &doc.at("relations");
    }
    if (!list->is_array()) {
        throw ConfigError("relation config " + path.string() +
                          " must be an array of relation objects");
    }
    std::vector<RelationSpec> specs;
    for (const auto& item : *list) {
        RelationSpec spec;
        try {
            spec.relation_id = item.at("relation_id").get<std::string>();
            spec.name = item.value("name", spec.relation_id);
            spec.question_template =
                item.at("question_template").get<std::string>();
            spec.statement_template =
                item.at("statement_template").get<std::string>();
            spec.symmetric = item.value("symmetric", true);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("relation config " + path.string() +
                              " entry missing field: " + e.what());
        }
        spec.validate();
        specs.push_back(std::move(spec));
    }
    return specs;
}

std::string Triple::fact_key() const {
    const bool ordered = subject_id <= object_id;
    const std::string& a = ordered ? subject_id : object_id;
    const std::string& b = ordered ? object_id : subject_id;
    return a + '\x1f' + relation_id + '\x1f' + b;
}

std::vector<Triple> load_triples(const std::filesystem::path& path,
                                 const std::vector<RelationSpec>& relations,
                                 TripleLoadStats* stats) {
    std::unordered_set<std::string> admitted;
    for (const RelationSpec& spec : relations) {
        if (!spec.symmetric) {
            throw ConfigError("relation " + spec.relation_id +
                              " is not symmetric; only symmetric relations "
                              "can be probed");
        }
        admitted.insert(spec.relation_id);
    }

    std::ifstream in(path);
    if (!in) throw IoError("cannot open triple file " + path.string());

    TripleLoadStats local;
    TripleLoadStats& s = stats ? *stats : local;
    std::vector<Triple> triples;
    std::unordered_set<std::string> seen_facts;

    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_tsv(line);
        if (fields.size() != 3) {
            throw MalformedRowError(
                "triple file " + path.string() + " line " +
                std::to_string(line_no) +
                ": expected subject_id<TAB>relation_id<TAB>object_id");
        }
        if (line_no == 1 && fields[0] == "subject_id") continue; // header
        ++s.rows_read;
        if (fields[0].empty() || fields[1].empty() || fields[2].empty()) {
            throw MalformedRowError("triple file " + path.string() + " line " +
                                    std::to_string(line_no) + ": empty field");
        }
        Triple triple{fields[0], fields[2], fields[1]};
        if (!admitted.count(triple.relation_id)) {
            ++s.filtered_by_relation;
            continue;
        }
        if (triple.subject_id == triple.object_id) {
            ++s.self_loops_skipped;
            continue;
        }
        if (!seen_facts.insert(triple.fact_key()).second) {
            ++s.duplicates_skipped;
            continue;
        }
        triples.push_back(std::move(triple));
        ++s.kept;
    }
    return triples;
}

std::string_view setting_label(Setting setting) {
    switch (setting) {
        case Setting::HIGH_TO_LOW: return "high_to_low";
        case Setting::LOW_TO_HIGH: return "low_to_high";
        case Setting::HIGH_TO_HIGH: return "high_to_high";
    }
    return "?";
}

std::string_view setting_display(Setting setting) {
    switch (setting) {
        case Setting::HIGH_TO_LOW: return "High-to-Low";
        case Setting::LOW_TO_HIGH: return "Low-to-High";
        case Setting::HIGH_TO_HIGH: return "High-to-High";
    }
    return "?";
}

std::optional<Setting> setting_from_label(std::string_view label) {
    if (label == "high_to_low") return Setting::HIGH_TO_LOW;
    if (label == "low_to_high") return Setting::LOW_TO_HIGH;
    if (label == "high_to_high") return Setting::HIGH_TO_HIGH;
    return std::nullopt;
}

std::string ProbeDataset::cell_name() const {
    std::string name = relation_id + '_' + std::string(setting_label(setting));
    if (low_band) {
        name += '_';
        name += band_label(*low_band);
    }
    return name;
}

EntityTable index_entities(std::vector<EntityRecord> records) {
    EntityTable table;
    table.reserve(records.size());
    for (EntityRecord& record : records) {
        std::string id = record.entity_id;
        table.emplace(std::move(id), std::move(record));
    }
    return table;
}

void apply_frequencies(
    EntityTable& entities,
    const std::unordered_map<std::string, std::pair<uint64_t, FrequencyBand>>&
        frequencies) {
    for (auto& [id, record] : entities) {
        const auto it = frequencies.find(id);
        if (it == frequencies.end()) continue;
        record.frequency = it->second.first;
        record.band = it->second.second;
    }
}

namespace {

FrequencyBand band_of(const EntityTable& entities, const std::string& id) {
    const auto it = entities.find(id);
    if (it == entities.end() || !it->second.band) {
        throw MissingFrequencyError("no computed frequency for entity " + id);
    }
    return *it->second.band;
}

} // namespace

Divisions build_divisions(const std::vector<Triple>& triples,
                          const EntityTable& entities,
                          const std::vector<RelationSpec>& relations,
                          const std::vector<FrequencyBand>& low_bands) {
    Divisions out;

    // Materialize cells up front so the output order is fixed by
    // configuration, not by which cell happens to fill first.
    struct CellKey {
        std::string relation_id;
        Setting setting;
        std::optional<FrequencyBand> low_band;
    };
    std::vector<CellKey> keys;
    for (const RelationSpec& relation : relations) {
        for (const FrequencyBand band : low_bands) {
            keys.push_back({relation.relation_id, Setting::HIGH_TO_LOW, band});
        }
        for (const FrequencyBand band : low_bands) {
            keys.push_back({relation.relation_id, Setting::LOW_TO_HIGH, band});
        }
        keys.push_back({relation.relation_id, Setting::HIGH_TO_HIGH, {}});
    }
    out.datasets.reserve(keys.size());
    std::unordered_map<std::string, size_t> cell_index;
    for (const CellKey& key : keys) {
        ProbeDataset dataset;
        dataset.setting = key.setting;
        dataset.low_band = key.low_band;
        dataset.relation_id = key.relation_id;
        cell_index[dataset.cell_name()] = out.datasets.size();
        out.datasets.push_back(std::move(dataset));
    }

    const auto requested = [&](FrequencyBand band) {
        return std::find(low_bands.begin(), low_bands.end(), band) !=
               low_bands.end();
    };

    for (const Triple& triple : triples) {
        const FrequencyBand sb = band_of(entities, triple.subject_id);
        const FrequencyBand ob = band_of(entities, triple.object_id);
        const bool s_high = sb == FrequencyBand::HIGH;
        const bool o_high = ob == FrequencyBand::HIGH;

        ProbeDataset probe;
        probe.relation_id = triple.relation_id;
        if (s_high && o_high) {
            probe.setting = Setting::HIGH_TO_HIGH;
        } else if (s_high) {
            if (!requested(ob)) { ++out.skips.band_excluded; continue; }
            probe.setting = Setting::HIGH_TO_LOW;
            probe.low_band = ob;
        } else if (o_high) {
            if (!requested(sb)) { ++out.skips.band_excluded; continue; }
            probe.setting = Setting::LOW_TO_HIGH;
            probe.low_band = sb;
        } else {
            ++out.skips.low_low;
            continue;
        }

        const auto it = cell_index.find(probe.cell_name());
        if (it == cell_index.end()) {
            // Relation absent from the configuration; treat as excluded.
            ++out.skips.band_excluded;
            continue;
        }
        out.datasets[it->second].triples.push_back(triple);
    }
    return out;
}

namespace {

const EntityRecord& entity_of(const EntityTable& entities,
                              const std::string& id) {
    const auto it = entities.find(id);
    if (it == entities.end()) {
        throw MissingFrequencyError("entity " + id + " not in catalog");
    }
    return it->second;
}

bool share_alias(const EntityRecord& a, const EntityRecord& b) {
    for (const std::string& alias : a.aliases) {
        if (std::find(b.aliases.begin(), b.aliases.end(), alias) !=
            b.aliases.end()) {
            return true;
        }
    }
    return false;
}

} // namespace

void write_dataset_jsonl(const ProbeDataset& dataset,
                         const EntityTable& entities,
                         const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset " + path.string());
    for (const Triple& triple : dataset.triples) {
        const EntityRecord& subject = entity_of(entities, triple.subject_id);
        const EntityRecord& object = entity_of(entities, triple.object_id);
        const nlohmann::json row = {
            {"subject_id", triple.subject_id},
            {"object_id", triple.object_id},
            {"relation_id", triple.relation_id},
            {"subject_aliases", subject.aliases},
            {"object_aliases", object.aliases},
            {"subject_frequency", subject.frequency},
            {"object_frequency", object.frequency},
            {"alias_overlap", share_alias(subject, object)},
        };
        out << row.dump() << '\n';
    }
    out.flush();
    if (!out) throw IoError("write failed for dataset " + path.string());
}

std::vector<DatasetRow> read_dataset_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset " + path.string());
    std::vector<DatasetRow> rows;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
            DatasetRow row;
            row.subject_id = doc.at("subject_id").get<std::string>();
            row.object_id = doc.at("object_id").get<std::string>();
            row.relation_id = doc.at("relation_id").get<std::string>();
            row.subject_aliases =
                doc.at("subject_aliases").get<std::vector<std::string>>();
            row.object_aliases =
                doc.at("object_aliases").get<std::vector<std::string>>();
            row.subject_frequency = doc.at("subject_frequency").get<uint64_t>();
            row.object_frequency = doc.at("object_frequency").get<uint64_t>();
            row.alias_overlap = doc.value("alias_overlap", false);
            rows.push_back(std::move(row));
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRowError("dataset " + path.string() + " line " +
                                    std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

} // namespace fprobe
