#include "fprobe/fm_index.hpp"

#include <cassert>
#include <limits>

#include "fprobe/errors.hpp"
#include "fprobe/suffix_array.hpp"

namespace fprobe {

Pattern::Pattern(std::string bytes) : bytes_(std::move(bytes)) {
    if (bytes_.empty()) {
        throw InvalidPatternError("pattern is empty");
    }
    if (bytes_.find('\0') != std::string::npos) {
        throw InvalidPatternError("pattern contains the document separator byte 0x00");
    }
}

FmIndex FmIndex::build(std::string_view text, uint32_t checkpoint_interval) {
    if (text.empty()) {
        throw EmptyTextError("cannot index empty text");
    }
    if (checkpoint_interval == 0) {
        throw Error("checkpoint_interval must be >= 1");
    }
    if (text.size() >= static_cast<size_t>(std::numeric_limits<uint32_t>::max())) {
        throw Error("shard too large: per-shard rank counters are 32-bit");
    }

    const std::vector<int32_t> sa = build_suffix_array(text);
    const size_t n = text.size();

    FmIndex idx;
    idx.checkpoint_interval_ = checkpoint_interval;
    idx.bwt_.resize(n + 1);
    for (size_t row = 0; row < sa.size(); ++row) {
        const int64_t p = sa[row];
        if (p == 0) {
            idx.terminator_pos_ = row;
            idx.bwt_[row] = 0;  // placeholder; excluded from ranks
        } else {
            idx.bwt_[row] = static_cast<uint8_t>(text[p - 1]);
        }
    }
    idx.rebuild_tables();
    return idx;
}

FmIndex FmIndex::from_parts(std::vector<uint8_t> bwt, uint64_t terminator_pos,
                            uint32_t checkpoint_interval) {
    if (bwt.empty() || terminator_pos >= bwt.size()) {
        throw CorruptPayloadError("BWT payload empty or terminator out of range");
    }
    FmIndex idx;
    idx.bwt_ = std::move(bwt);
    idx.terminator_pos_ = terminator_pos;
    idx.checkpoint_interval_ = checkpoint_interval;
    idx.rebuild_tables();
    return idx;
}

void FmIndex::rebuild_tables() {
    const uint64_t len = bwt_.size();
    const uint32_t r = checkpoint_interval_;
    const uint64_t n_blocks = len / r + 1;

    checkpoints_.assign(n_blocks * 256, 0);
    std::array<uint32_t, 256> running{};
    for (uint64_t i = 0; i < len; ++i) {
        if (i % r == 0) {
            std::copy(running.begin(), running.end(),
                      checkpoints_.begin() + (i / r) * 256);
        }
        if (i != terminator_pos_) ++running[bwt_[i]];
    }
    if (len % r == 0) {
        std::copy(running.begin(), running.end(),
                  checkpoints_.begin() + (len / r) * 256);
    }

    // running now holds total per-byte counts; fold into the cumulative
    // table with the terminator occupying the slot before byte 0.
    uint64_t sum = 1;
    for (int b = 0; b < 256; ++b) {
        c_table_[b] = sum;
        sum += running[b];
    }
    c_table_[256] = sum;
    assert(sum == len);
}

uint64_t FmIndex::rank(uint8_t b, uint64_t pos) const {
    assert(pos <= bwt_.size());
    const uint64_t block = pos / checkpoint_interval_;
    uint64_t r = checkpoints_[block * 256 + b];
    for (uint64_t i = block * checkpoint_interval_; i < pos; ++i) {
        if (bwt_[i] == b && i != terminator_pos_) ++r;
    }
    return r;
}

uint64_t FmIndex::count(const Pattern& pattern) const {
    const std::string& p = pattern.bytes();
    uint64_t lo = 0, hi = bwt_.size();
    for (size_t k = p.size(); k-- > 0;) {
        const uint8_t b = static_cast<uint8_t>(p[k]);
        lo = c_table_[b] + rank(b, lo);
        hi = c_table_[b] + rank(b, hi);
        if (lo >= hi) return 0;
    }
    return hi - lo;
}

std::string FmIndex::invert() const {
    const uint64_t n = text_length();
    std::string out(n, '\0');
    // Row 0 is the rotation beginning with the terminator; its last column
    // entry is the final text byte. Walk LF until the terminator is reached.
    uint64_t row = 0;
    for (uint64_t k = n; k-- > 0;) {
        assert(row != terminator_pos_);
        const uint8_t b = bwt_[row];
        out[k] = static_cast<char>(b);
        row = c_table_[b] + rank(b, row);
    }
    assert(row == terminator_pos_);
    return out;
}

uint64_t naive_count(std::string_view text, std::string_view pattern) {
    if (pattern.empty()) return 0;
    uint64_t n = 0;
    size_t pos = 0;
    while ((pos = text.find(pattern, pos)) != std::string_view::npos) {
        ++n;
        ++pos;
    }
    return n;
}

}  // namespace fprobe
