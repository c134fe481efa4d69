#include "fprobe/entity_catalog.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "fprobe/errors.hpp"

namespace fprobe {

std::string_view band_label(FrequencyBand band) {
    switch (band) {
        case FrequencyBand::B0_1K: return "B0_1K";
        case FrequencyBand::B1K_10K: return "B1K_10K";
        case FrequencyBand::B10K_100K: return "B10K_100K";
        case FrequencyBand::HIGH: return "HIGH";
    }
    return "?";
}

std::optional<FrequencyBand> band_from_label(std::string_view label) {
    if (label == "B0_1K") return FrequencyBand::B0_1K;
    if (label == "B1K_10K") return FrequencyBand::B1K_10K;
    if (label == "B10K_100K") return FrequencyBand::B10K_100K;
    if (label == "HIGH") return FrequencyBand::HIGH;
    return std::nullopt;
}

FrequencyBand assign_band(uint64_t frequency) {
    if (frequency <= 1000) return FrequencyBand::B0_1K;
    if (frequency <= 10000) return FrequencyBand::B1K_10K;
    if (frequency <= 99999) return FrequencyBand::B10K_100K;
    return FrequencyBand::HIGH;
}

std::string normalize_alias(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (const char ch : raw) {
        switch (ch) {
            case '(': case ')': case '[': case ']': case '{': case '}':
                continue;
            case '_':
            case ' ': case '\t': case '\n': case '\r': case '\v': case '\f':
                if (!out.empty()) pending_space = true;
                continue;
            default:
                if (pending_space) {
                    out.push_back(' ');
                    pending_space = false;
                }
                out.push_back(ch);
        }
    }
    return out;
}

bool is_valid_alias(std::string_view name) {
    if (name.empty()) return false;
    for (const char ch : name) {
        const auto uc = static_cast<unsigned char>(ch);
        if (uc > 0x7f) return false;
        if (std::isalnum(uc)) continue;
        switch (ch) {
            case '-': case '.': case ',': case '\'': case '"': case ' ':
                continue;
            default:
                return false;
        }
    }
    return true;
}

namespace {

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

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

} // namespace

std::vector<EntityRecord> load_entities(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open entity file " + path.string());

    std::vector<EntityRecord> records;
    std::unordered_map<std::string, size_t> by_id;
    std::unordered_map<std::string, std::unordered_set<std::string>> seen;

    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(std::move(line));
        if (line.empty()) continue;
        const auto fields = split_tsv(line);
        if (fields.size() != 2) {
            throw MalformedRowError("entity file " + path.string() + " line " +
                                    std::to_string(line_no) +
                                    ": expected entity_id<TAB>alias");
        }
        if (line_no == 1 && fields[0] == "entity_id" && fields[1] == "alias") {
            continue;
        }
        const std::string& id = fields[0];
        if (id.empty()) {
            throw MalformedRowError("entity file " + path.string() + " line " +
                                    std::to_string(line_no) + ": empty entity_id");
        }
        const std::string alias = normalize_alias(fields[1]);
        if (!is_valid_alias(alias)) continue;

        auto [it, inserted] = by_id.try_emplace(id, records.size());
        if (inserted) records.push_back(EntityRecord{id, {}, 0, std::nullopt});
        if (seen[id].insert(alias).second) {
            records[it->second].aliases.push_back(alias);
        }
    }
    // Entities whose aliases were all filtered out never got a record, so no
    // further pruning is needed: a record exists only once an alias survived.
    return records;
}

AliasCountCache::AliasCountCache(std::filesystem::path file, uint64_t fingerprint)
    : file_(std::move(file)), fingerprint_(fingerprint) {
    std::ifstream in(file_);
    if (!in) return; // first run: the file appears on flush
    std::string line;
    while (std::getline(in, line)) {
        line = strip_cr(std::move(line));
        if (line.empty()) continue;
        const auto fields = split_tsv(line);
        if (fields.size() != 3) continue; // torn write: ignore the row
        uint64_t fp = 0, count = 0;
        try {
            fp = std::stoull(fields[0], nullptr, 16);
            count = std::stoull(fields[2]);
        } catch (const std::exception&) {
            continue;
        }
        if (fp == fingerprint_) counts_[fields[1]] = count;
    }
}

std::optional<uint64_t> AliasCountCache::lookup(const std::string& alias) const {
    const auto it = counts_.find(alias);
    if (it == counts_.end()) return std::nullopt;
    ++hits_;
    return it->second;
}

void AliasCountCache::store(const std::string& alias, uint64_t count) {
    ++misses_;
    if (counts_.emplace(alias, count).second) {
        pending_.emplace_back(alias, count);
    }
}

void AliasCountCache::flush() {
    if (pending_.empty() || file_.empty()) return;
    std::ofstream out(file_, std::ios::app);
    if (!out) throw IoError("cannot write alias cache " + file_.string());
    char fp[17];
    std::snprintf(fp, sizeof fp, "%016llx",
                  static_cast<unsigned long long>(fingerprint_));
    for (const auto& [alias, count] : pending_) {
        out << fp << '\t' << alias << '\t' << count << '\n';
    }
    out.flush();
    if (!out) throw IoError("write failed for alias cache " + file_.string());
    pending_.clear();
}

uint64_t entity_frequency(EntityRecord& record, const CorpusIndex& index,
                          AliasCountCache* cache) {
    uint64_t total = 0;
    for (const std::string& alias : record.aliases) {
        if (cache) {
            if (const auto cached = cache->lookup(alias)) {
                total += *cached;
                continue;
            }
        }
        const uint64_t count = index.count(Pattern(alias));
        if (cache) cache->store(alias, count);
        total += count;
    }
    record.frequency = total;
    return total;
}

void compute_frequencies(std::vector<EntityRecord>& records,
                         const CorpusIndex& index, AliasCountCache* cache) {
    for (EntityRecord& record : records) {
        entity_frequency(record, index, cache);
        record.band = assign_band(record.frequency);
    }
    if (cache) cache->flush();
}

void write_frequencies(const std::vector<EntityRecord>& records,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "entity_id\tfrequency\tband\n";
    for (const EntityRecord& record : records) {
        const FrequencyBand band =
            record.band.value_or(assign_band(record.frequency));
        out << record.entity_id << '\t' << record.frequency << '\t'
            << band_label(band) << '\n';
    }
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

std::unordered_map<std::string, std::pair<uint64_t, FrequencyBand>>
read_frequencies(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open frequency file " + path.string());
    std::unordered_map<std::string, std::pair<uint64_t, FrequencyBand>> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(std::move(line));
        if (line.empty()) continue;
        const auto fields = split_tsv(line);
        if (line_no == 1 && fields.size() >= 1 && fields[0] == "entity_id") {
            continue;
        }
        if (fields.size() != 3) {
            throw MalformedRowError("frequency file " + path.string() +
                                    " line " + std::to_string(line_no));
        }
        const auto band = band_from_label(fields[2]);
        uint64_t freq = 0;
        try {
            freq = std::stoull(fields[1]);
        } catch (const std::exception&) {
            throw MalformedRowError("frequency file " + path.string() +
                                    " line " + std::to_string(line_no) +
                                    ": bad frequency " + fields[1]);
        }
        if (!band) {
            throw MalformedRowError("frequency file " + path.string() +
                                    " line " + std::to_string(line_no) +
                                    ": unknown band " + fields[2]);
        }
        out[fields[0]] = {freq, *band};
    }
    return out;
}

} // namespace fprobe
