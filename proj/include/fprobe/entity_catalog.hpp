#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fprobe/corpus_index.hpp"

namespace fprobe {

// Frequency bands partition [0, inf). Boundaries attach to the lower band
// below 100K ("count <= 1K" is low frequency) while 100K itself is already
// high frequency ("count >= 100K").
enum class FrequencyBand { B0_1K, B1K_10K, B10K_100K, HIGH };

std::string_view band_label(FrequencyBand band);
std::optional<FrequencyBand> band_from_label(std::string_view label);
FrequencyBand assign_band(uint64_t frequency);

struct EntityRecord {
    std::string entity_id;
    // Normalized, validated, duplicate-free, in first-seen order.
    std::vector<std::string> aliases;
    uint64_t frequency = 0;
    std::optional<FrequencyBand> band;
};

// Deletes bracket characters ()[]{} keeping their content, turns
// underscores into spaces, collapses whitespace runs, trims the ends.
// Total and idempotent.
std::string normalize_alias(std::string_view raw);

// True iff `name` is non-empty and every character is an ASCII letter,
// digit, dash, period, comma, single or double quote, or space. Expects
// normalized input.
bool is_valid_alias(std::string_view name);

// Reads a TSV of entity_id<TAB>alias rows (UTF-8, one row per alias,
// optional header with those column names). Aliases are normalized and
// filtered; entities left with no valid alias are dropped. Row order
// determines entity and alias order.
std::vector<EntityRecord> load_entities(const std::filesystem::path& path);

// Per-alias corpus counts, persisted as TSV rows of
// fingerprint<TAB>alias<TAB>count so repeated frequency runs skip lookups
// that were already answered for the same corpus. Entries keyed by other
// fingerprints are kept but ignored.
class AliasCountCache {
public:
    AliasCountCache() = default;
    explicit AliasCountCache(std::filesystem::path file, uint64_t fingerprint);

    std::optional<uint64_t> lookup(const std::string& alias) const;
    void store(const std::string& alias, uint64_t count);
    // Appends entries added since load; safe to call repeatedly.
    void flush();

    size_t hits() const { return hits_; }
    size_t misses() const { return misses_; }

private:
    std::filesystem::path file_;
    uint64_t fingerprint_ = 0;
    std::unordered_map<std::string, uint64_t> counts_;
    std::vector<std::pair<std::string, uint64_t>> pending_;
    mutable size_t hits_ = 0;
    size_t misses_ = 0;
};

// Sum of corpus counts over the record's unique aliases; stores the result
// on the record and returns it.
uint64_t entity_frequency(EntityRecord& record, const CorpusIndex& index,
                          AliasCountCache* cache = nullptr);

// Computes frequency and band for every record.
void compute_frequencies(std::vector<EntityRecord>& records,
                         const CorpusIndex& index,
                         AliasCountCache* cache = nullptr);

// TSV with header entity_id<TAB>frequency<TAB>band.
void write_frequencies(const std::vector<EntityRecord>& records,
                       const std::filesystem::path& path);

// Reads the TSV produced by write_frequencies back into a map keyed by
// entity_id; value is (frequency, band).
std::unordered_map<std::string, std::pair<uint64_t, FrequencyBand>>
read_frequencies(const std::filesystem::path& path);

} // namespace fprobe
