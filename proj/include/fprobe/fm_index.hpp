#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fprobe {

// A validated search pattern: non-empty, free of the document separator
// (0x00). The terminator symbol is out of band and can never appear in a
// byte string.
class Pattern {
public:
    explicit Pattern(std::string bytes);
    const std::string& bytes() const { return bytes_; }

private:
    std::string bytes_;
};

// Count-only FM-index over one text shard.
//
// Holds the Burrows-Wheeler transform of text + terminator, the cumulative
// symbol-count table, and per-symbol rank checkpoints every
// `checkpoint_interval` positions. The terminator is a 257th symbol that
// sorts before every byte; its slot in the stored BWT is a placeholder
// byte excluded from rank counts via `terminator_pos`.
class FmIndex {
public:
    static constexpr uint32_t kDefaultCheckpointInterval = 1024;

    FmIndex() = default;

    // Burrows-Wheeler transform of text + terminator via suffix array
    // construction. Throws EmptyTextError for empty text.
    static FmIndex build(std::string_view text,
                         uint32_t checkpoint_interval = kDefaultCheckpointInterval);

    // Occurrences of `pattern` in the shard text, overlapping matches
    // included. Backward search: O(pattern length) rank operations.
    uint64_t count(const Pattern& pattern) const;

    // Occurrences of byte `b` in bwt[0..pos), terminator slot excluded.
    uint64_t rank(uint8_t b, uint64_t pos) const;

    // Reconstructs the original text by walking the LF-mapping.
    std::string invert() const;

    // Text length in bytes (BWT length minus the terminator).
    uint64_t text_length() const { return bwt_.empty() ? 0 : bwt_.size() - 1; }

    const std::vector<uint8_t>& bwt() const { return bwt_; }
    uint64_t terminator_pos() const { return terminator_pos_; }
    // c_table[b] = number of symbols in the BWT smaller than byte b, the
    // terminator included; c_table[256] = BWT length.
    const std::array<uint64_t, 257>& c_table() const { return c_table_; }
    uint32_t checkpoint_interval() const { return checkpoint_interval_; }
    const std::vector<uint32_t>& checkpoints() const { return checkpoints_; }

    // Used by (de)serialization, which rebuilds derived state explicitly.
    static FmIndex from_parts(std::vector<uint8_t> bwt, uint64_t terminator_pos,
                              uint32_t checkpoint_interval);

private:
    void rebuild_tables();

    std::vector<uint8_t> bwt_;
    uint64_t terminator_pos_ = 0;
    std::array<uint64_t, 257> c_table_{};
    uint32_t checkpoint_interval_ = kDefaultCheckpointInterval;
    // occ snapshots at positions 0, R, 2R, ...; 256 counters per block.
    std::vector<uint32_t> checkpoints_;
};

// Overlapping-occurrence scan. Reference oracle for the FM-index and the
// baseline for the speedup comparison.
uint64_t naive_count(std::string_view text, std::string_view pattern);

}  // namespace fprobe
