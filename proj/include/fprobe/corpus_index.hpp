#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fprobe/corpus.hpp"
#include "fprobe/fm_index.hpp"

namespace fprobe {

// All shards of a corpus, loaded and checksum-verified. Immutable after
// load, so count() may be called from many threads concurrently.
class CorpusIndex {
public:
    static CorpusIndex load(const std::filesystem::path& manifest_path);

    // Sum of per-shard occurrence counts. Shards are disjoint and split only
    // on document boundaries, so no occurrence is lost or double-counted.
    uint64_t count(const Pattern& pattern) const;

    size_t shard_count() const { return shards_.size(); }
    uint64_t total_text_bytes() const { return total_text_bytes_; }

    // Fingerprint of the indexed text (combined shard text checksums).
    // Changes whenever the underlying corpus changes; used to key caches of
    // derived counts.
    uint64_t corpus_fingerprint() const { return corpus_fingerprint_; }

    const std::vector<FmIndex>& shards() const { return shards_; }
    const CorpusManifest& manifest() const { return manifest_; }

private:
    CorpusIndex() = default;

    std::vector<FmIndex> shards_;
    CorpusManifest manifest_;
    uint64_t total_text_bytes_ = 0;
    uint64_t corpus_fingerprint_ = 0;
};

} // namespace fprobe
