#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fprobe/entity_catalog.hpp"

namespace fprobe {

// A probed relation and its two verbalization templates. Placeholders {s}
// and {o} must each occur exactly once per template.
struct RelationSpec {
    std::string relation_id;
    std::string name;
    std::string question_template;
    std::string statement_template;
    bool symmetric = true;

    // Throws TemplateError on a malformed template.
    void validate() const;
};

// The four stock relations probed by default.
std::vector<RelationSpec> default_relations();

// JSON config: either a top-level array of relation objects or an object
// with a "relations" array. Every spec is validated.
std::vector<RelationSpec> load_relations(const std::filesystem::path& path);

struct Triple {
    std::string subject_id;
    std::string object_id;
    std::string relation_id;

    // The relations are symmetric, so <s,r,o> and <o,r,s> state the same
    // fact; this key is identical for both orientations.
    std::string fact_key() const;
};

struct TripleLoadStats {
    uint64_t rows_read = 0;
    uint64_t kept = 0;
    uint64_t filtered_by_relation = 0;
    uint64_t self_loops_skipped = 0;
    uint64_t duplicates_skipped = 0;
};

// Reads subject_id<TAB>relation_id<TAB>object_id rows, keeping triples of
// the given relations in input order. Self-loops and duplicate facts
// (either orientation) are skipped. Throws ConfigError if a non-symmetric
// relation is offered for probing.
std::vector<Triple> load_triples(const std::filesystem::path& path,
                                 const std::vector<RelationSpec>& relations,
                                 TripleLoadStats* stats = nullptr);

enum class Setting { HIGH_TO_LOW, LOW_TO_HIGH, HIGH_TO_HIGH };

std::string_view setting_label(Setting setting);        // "high_to_low"
std::string_view setting_display(Setting setting);      // "High-to-Low"
std::optional<Setting> setting_from_label(std::string_view label);

// Cells smaller than this are still built and probed but flagged so that
// reports can mark their statistics as underpowered.
inline constexpr size_t kMinCellSize = 30;

struct ProbeDataset {
    Setting setting = Setting::HIGH_TO_HIGH;
    std::optional<FrequencyBand> low_band; // empty for HIGH_TO_HIGH
    std::string relation_id;
    std::vector<Triple> triples;

    size_t total() const { return triples.size(); }
    bool underpowered() const { return triples.size() < kMinCellSize; }
    // File stem such as P26_high_to_low_B0_1K or P26_high_to_high.
    std::string cell_name() const;
};

struct DivisionSkips {
    uint64_t low_low = 0;        // both entities below HIGH
    uint64_t band_excluded = 0;  // low side in a band not requested
};

struct Divisions {
    std::vector<ProbeDataset> datasets;
    DivisionSkips skips;
};

using EntityTable = std::unordered_map<std::string, EntityRecord>;

EntityTable index_entities(std::vector<EntityRecord> records);

// Copies frequency and band onto each record from a frequency lookup
// (as produced by read_frequencies). Entities absent from the lookup are
// left unassigned and only fault if a triple references them.
void apply_frequencies(
    EntityTable& entities,
    const std::unordered_map<std::string, std::pair<uint64_t, FrequencyBand>>&
        frequencies);

// Splits triples into (relation, setting, low_band) cells:
//   HIGH subject x low-band object -> HIGH_TO_LOW
//   low-band subject x HIGH object -> LOW_TO_HIGH
//   HIGH subject x HIGH object    -> HIGH_TO_HIGH
// Low-low triples and triples whose low side falls outside `low_bands` are
// skipped and tallied. Cell order: relations in config order, settings in
// the order above, low bands in `low_bands` order; triples keep input
// order, so re-runs are byte-identical. Throws MissingFrequencyError for
// entities without a computed band.
Divisions build_divisions(const std::vector<Triple>& triples,
                          const EntityTable& entities,
                          const std::vector<RelationSpec>& relations,
                          const std::vector<FrequencyBand>& low_bands);

// One probe item: a triple with its resolved alias lists and frequencies.
struct DatasetRow {
    std::string subject_id;
    std::string object_id;
    std::string relation_id;
    std::vector<std::string> subject_aliases;
    std::vector<std::string> object_aliases;
    uint64_t subject_frequency = 0;
    uint64_t object_frequency = 0;
    // Subject and object share an alias string; frequency separation for
    // such pairs may be an artifact of the shared name.
    bool alias_overlap = false;
};

void write_dataset_jsonl(const ProbeDataset& dataset,
                         const EntityTable& entities,
                         const std::filesystem::path& path);

std::vector<DatasetRow> read_dataset_jsonl(const std::filesystem::path& path);

} // namespace fprobe
