#include <doctest.h>

#include <string>
#include <vector>

#include "fprobe/corpus_index.hpp"
#include "fprobe/entity_catalog.hpp"
#include "fprobe/errors.hpp"
#include "test_support.hpp"

using fprobe::AliasCountCache;
using fprobe::assign_band;
using fprobe::EntityRecord;
using fprobe::entity_frequency;
using fprobe::FrequencyBand;
using fprobe::is_valid_alias;
using fprobe::normalize_alias;

TEST_SUITE("entity_catalog") {

TEST_CASE("normalization rules") {
    CHECK(normalize_alias("Diego_Maradona") == "Diego Maradona");
    CHECK(normalize_alias("Raul  (Maradona)") == "Raul Maradona");
    CHECK(normalize_alias("  A__B  ") == "A B");
    CHECK(normalize_alias("[note] {x}") == "note x");
    CHECK(normalize_alias("") == "");
    CHECK(normalize_alias("()[]{}__") == "");
    CHECK(normalize_alias("tab\tand\nnewline") == "tab and newline");
}

TEST_CASE("normalization is idempotent") {
    fprobe::SplitMix64 rng(41);
    const std::string charset = "ab C_()[]{}\t-.'z9";
    for (int round = 0; round < 300; ++round) {
        std::string raw;
        const size_t len = rng.next_below(24);
        for (size_t i = 0; i < len; ++i) {
            raw.push_back(charset[rng.next_below(charset.size())]);
        }
        const std::string once = normalize_alias(raw);
        CAPTURE(raw);
        REQUIRE(normalize_alias(once) == once);
    }
}

TEST_CASE("alias validity") {
    CHECK(is_valid_alias("O'Brien, Jr."));
    CHECK(is_valid_alias("Route 66"));
    CHECK(is_valid_alias("\"Magic\" Johnson"));
    CHECK(is_valid_alias("Jean-Luc"));
    CHECK_FALSE(is_valid_alias("caf\xc3\xa9"));  // non-ASCII
    CHECK_FALSE(is_valid_alias(""));
    CHECK_FALSE(is_valid_alias("semi;colon"));
    CHECK_FALSE(is_valid_alias("under_score"));  // normalization removes these
    CHECK_FALSE(is_valid_alias("star*"));
}

TEST_CASE("validity is stable under re-normalization") {
    for (const std::string name :
         {"O'Brien, Jr.", "Route 66", "plain", "a-b.c"}) {
        REQUIRE(is_valid_alias(name));
        CHECK(normalize_alias(name) == name);
    }
}

TEST_CASE("band assignment matches the partition") {
    CHECK(assign_band(0) == FrequencyBand::B0_1K);
    CHECK(assign_band(500) == FrequencyBand::B0_1K);
    CHECK(assign_band(1000) == FrequencyBand::B0_1K);
    CHECK(assign_band(1001) == FrequencyBand::B1K_10K);
    CHECK(assign_band(10000) == FrequencyBand::B1K_10K);
    CHECK(assign_band(10001) == FrequencyBand::B10K_100K);
    CHECK(assign_band(99999) == FrequencyBand::B10K_100K);
    CHECK(assign_band(100000) == FrequencyBand::HIGH);
    CHECK(assign_band(5'000'000'000ull) == FrequencyBand::HIGH);
}

TEST_CASE("every frequency lands in exactly one band") {
    fprobe::SplitMix64 rng(43);
    for (int round = 0; round < 2000; ++round) {
        const uint64_t f = rng.next_below(200001);
        int members = 0;
        if (f <= 1000) ++members;
        if (f >= 1001 && f <= 10000) ++members;
        if (f >= 10001 && f <= 99999) ++members;
        if (f >= 100000) ++members;
        REQUIRE(members == 1);
        const FrequencyBand band = assign_band(f);
        const bool in_band =
            (band == FrequencyBand::B0_1K && f <= 1000) ||
            (band == FrequencyBand::B1K_10K && f >= 1001 && f <= 10000) ||
            (band == FrequencyBand::B10K_100K && f >= 10001 && f <= 99999) ||
            (band == FrequencyBand::HIGH && f >= 100000);
        CAPTURE(f);
        REQUIRE(in_band);
    }
}

TEST_CASE("band labels round-trip") {
    for (const auto band : {FrequencyBand::B0_1K, FrequencyBand::B1K_10K,
                            FrequencyBand::B10K_100K, FrequencyBand::HIGH}) {
        CHECK(fprobe::band_from_label(fprobe::band_label(band)) == band);
    }
    CHECK_FALSE(fprobe::band_from_label("MEDIUM").has_value());
}

TEST_CASE("entity TSV loading normalizes, dedups, and drops empties") {
    const testsup::TempDir dir("entities");
    const auto file = dir / "entities.tsv";
    testsup::write_file(file,
                        "entity_id\talias\n"
                        "Q1\tA_B\n"
                        "Q1\tA B\n"       // duplicate after normalization
                        "Q1\tcaf\xc3\xa9\n"  // invalid, dropped
                        "Q2\t\xe4\xb8\xad\n" // only invalid aliases: no record
                        "Q3\t  Plain  Name \n");
    const auto records = fprobe::load_entities(file);
    REQUIRE(records.size() == 2);
    CHECK(records[0].entity_id == "Q1");
    CHECK(records[0].aliases == std::vector<std::string>{"A B"});
    CHECK(records[1].entity_id == "Q3");
    CHECK(records[1].aliases == std::vector<std::string>{"Plain Name"});
}

TEST_CASE("malformed entity rows are rejected") {
    const testsup::TempDir dir("entities-bad");
    const auto file = dir / "entities.tsv";
    testsup::write_file(file, "Q1\talias\textra\n");
    CHECK_THROWS_AS(fprobe::load_entities(file), fprobe::MalformedRowError);
    testsup::write_file(file, "\tno-id\n");
    CHECK_THROWS_AS(fprobe::load_entities(file), fprobe::MalformedRowError);
}

TEST_CASE("entity frequency sums alias counts over the corpus") {
    const testsup::TempDir dir("freq");
    const auto report = fprobe::build_corpus_index({"banana"}, dir.path());
    const auto corpus = fprobe::CorpusIndex::load(report.manifest_path);

    EntityRecord record{"Q1", {"ana", "ban"}, 0, std::nullopt};
    CHECK(entity_frequency(record, corpus) == 3);  // 2 + 1
    CHECK(record.frequency == 3);

    EntityRecord absent{"Q2", {"zzz"}, 0, std::nullopt};
    CHECK(entity_frequency(absent, corpus) == 0);
}

TEST_CASE("adding an alias never decreases the frequency") {
    const testsup::TempDir dir("freq-mono");
    const auto report =
        fprobe::build_corpus_index({"the quick brown fox", "the slow fox"},
                                   dir.path());
    const auto corpus = fprobe::CorpusIndex::load(report.manifest_path);

    fprobe::SplitMix64 rng(44);
    const std::vector<std::string> pool = {"the", "fox", "slow", "quick",
                                           "ox", "z", "row", "e q"};
    for (int round = 0; round < 50; ++round) {
        EntityRecord record{"Q", {}, 0, std::nullopt};
        uint64_t prev = 0;
        for (int i = 0; i < 5; ++i) {
            const auto& alias = pool[rng.next_below(pool.size())];
            if (std::find(record.aliases.begin(), record.aliases.end(),
                          alias) != record.aliases.end()) {
                continue;
            }
            record.aliases.push_back(alias);
            const uint64_t now = entity_frequency(record, corpus);
            REQUIRE(now >= prev);
            prev = now;
        }
    }
}

TEST_CASE("alias count cache persists across runs and keys by corpus") {
    const testsup::TempDir dir("alias-cache");
    const auto report = fprobe::build_corpus_index({"banana"}, dir.path());
    const auto corpus = fprobe::CorpusIndex::load(report.manifest_path);
    const auto cache_file = dir / "alias-counts.tsv";

    std::vector<EntityRecord> records = {
        EntityRecord{"Q1", {"ana", "ban"}, 0, std::nullopt}};
    {
        AliasCountCache cache(cache_file, corpus.corpus_fingerprint());
        fprobe::compute_frequencies(records, corpus, &cache);
        CHECK(cache.hits() == 0);
        CHECK(cache.misses() == 2);
    }
    CHECK(records[0].frequency == 3);
    CHECK(records[0].band == FrequencyBand::B0_1K);

    {
        // Same corpus fingerprint: every lookup is served from the file.
        AliasCountCache cache(cache_file, corpus.corpus_fingerprint());
        fprobe::compute_frequencies(records, corpus, &cache);
        CHECK(cache.hits() == 2);
        CHECK(cache.misses() == 0);
    }
    CHECK(records[0].frequency == 3);

    {
        // Different corpus: stale entries must not be reused.
        AliasCountCache cache(cache_file, corpus.corpus_fingerprint() + 1);
        fprobe::compute_frequencies(records, corpus, &cache);
        CHECK(cache.hits() == 0);
        CHECK(cache.misses() == 2);
    }
}

TEST_CASE("frequency TSV round-trips") {
    const testsup::TempDir dir("freq-tsv");
    std::vector<EntityRecord> records = {
        EntityRecord{"Q1", {"x"}, 512, FrequencyBand::B0_1K},
        EntityRecord{"Q2", {"y"}, 123456, FrequencyBand::HIGH},
    };
    const auto file = dir / "frequencies.tsv";
    fprobe::write_frequencies(records, file);
    const auto loaded = fprobe::read_frequencies(file);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded.at("Q1") == std::make_pair(uint64_t{512}, FrequencyBand::B0_1K));
    CHECK(loaded.at("Q2") == std::make_pair(uint64_t{123456}, FrequencyBand::HIGH));
}

}  // TEST_SUITE
