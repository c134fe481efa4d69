#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fprobe/fm_index.hpp"

namespace fprobe {

// A corpus is a flat list of documents. Inside a shard, documents are joined
// with a single 0x00 separator byte; the separator never occurs inside a
// document payload, so no pattern can span a document boundary.
inline constexpr char kDocSeparator = '\0';

// Default shard budget: 256 MiB of text. Suffix-array construction needs
// roughly 5-9x the text size in working memory, so this bound keeps a
// single-shard build within a few GiB.
inline constexpr uint64_t kDefaultShardBudget = 256ull * 1024 * 1024;

struct ShardMeta {
    uint64_t shard_id = 0;
    std::string file;           // index file name, relative to the manifest
    uint64_t byte_length = 0;   // assembled shard text, separators included
    uint64_t document_count = 0;
    uint64_t text_checksum = 0; // FNV-1a of the shard text
    uint64_t file_checksum = 0; // FNV-1a of the serialized index file
    std::string source_label;
};

struct CorpusManifest {
    uint32_t format_version = 1;
    uint32_t checkpoint_interval = 0;
    std::vector<ShardMeta> shards;
};

// Half-open run of documents assigned to one shard.
struct ShardPlan {
    size_t first_doc = 0;
    size_t doc_count = 0;
    uint64_t byte_length = 0; // text length after joining with separators
};

// Reads a corpus from `path`. A regular file yields one document per line
// (trailing CR stripped, empty lines skipped); a directory yields one
// document per file, in sorted path order. Gzip-compressed inputs are
// decompressed transparently. Throws IoError on unreadable paths and
// SeparatorInDocumentError if any document contains a 0x00 byte.
std::vector<std::string> ingest_documents(const std::filesystem::path& path);

// Greedy left-to-right packing: a document is appended to the current shard
// unless that would push it past `budget`; a document larger than the budget
// gets a shard of its own. Splits therefore fall only on document boundaries.
std::vector<ShardPlan> plan_shards(const std::vector<std::string>& docs,
                                   uint64_t budget = kDefaultShardBudget);

// Joins the planned run of documents with kDocSeparator.
std::string assemble_shard_text(const std::vector<std::string>& docs,
                                const ShardPlan& plan);

void write_manifest(const CorpusManifest& manifest,
                    const std::filesystem::path& path);
CorpusManifest read_manifest(const std::filesystem::path& path);

struct BuildOptions {
    uint64_t shard_budget = kDefaultShardBudget;
    uint32_t checkpoint_interval = FmIndex::kDefaultCheckpointInterval;
    std::string source_label;
};

struct BuildReport {
    std::filesystem::path manifest_path;
    size_t shards_total = 0;
    size_t shards_built = 0; // rest were up to date and skipped
};

// Builds one index file per planned shard under `out_dir` and writes
// manifest.json beside them. Rebuilds are incremental: a shard whose text
// checksum matches the existing manifest entry and whose index file is intact
// on disk is skipped.
BuildReport build_corpus_index(const std::vector<std::string>& docs,
                               const std::filesystem::path& out_dir,
                               const BuildOptions& options = {});

} // namespace fprobe
