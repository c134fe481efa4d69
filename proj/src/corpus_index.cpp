#include "fprobe/corpus_index.hpp"

#include <fstream>

#include "fprobe/errors.hpp"
#include "fprobe/index_io.hpp"
#include "fprobe/util/hash.hpp"

namespace fprobe {

namespace {

uint64_t checksum_of_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    uint64_t h = kFnvOffset;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        h = fnv1a64(buf, static_cast<size_t>(in.gcount()), h);
    }
    return h;
}

} // namespace

CorpusIndex CorpusIndex::load(const std::filesystem::path& manifest_path) {
    CorpusIndex corpus;
    corpus.manifest_ = read_manifest(manifest_path);
    const auto dir = manifest_path.parent_path();

    uint64_t fingerprint = kFnvOffset;
    for (const ShardMeta& meta : corpus.manifest_.shards) {
        const auto shard_path = dir / meta.file;
        if (!std::filesystem::exists(shard_path)) {
            throw ShardMissingError("shard file missing: " + shard_path.string());
        }
        if (checksum_of_file(shard_path) != meta.file_checksum) {
            throw ShardChecksumMismatchError("shard file modified since build: " +
                                             shard_path.string());
        }
        FmIndex index = deserialize_index(shard_path);
        if (index.text_length() != meta.byte_length) {
            throw CorruptPayloadError("shard length disagrees with manifest: " +
                                      shard_path.string());
        }
        corpus.total_text_bytes_ += meta.byte_length;
        fingerprint = fnv1a64(&meta.text_checksum, sizeof meta.text_checksum,
                              fingerprint);
        corpus.shards_.push_back(std::move(index));
    }
    corpus.corpus_fingerprint_ = fingerprint;
    return corpus;
}

uint64_t CorpusIndex::count(const Pattern& pattern) const {
    uint64_t total = 0;
    for (const FmIndex& shard : shards_) total += shard.count(pattern);
    return total;
}

} // namespace fprobe
