#include "fprobe/suffix_array.hpp"

#include <algorithm>
#include <cassert>
#include <limits>
#include <stdexcept>

namespace fprobe {
namespace {

constexpr int32_t kEmpty = -1;

// The SA-IS core works on a sequence ending in a unique, smallest symbol.
// At the top level the sequence is text bytes shifted by one with a virtual
// 0 terminator, so the text is never copied into an int array; recursion
// levels use materialized int32 arrays.
struct ByteText {
    const unsigned char* data;
    int64_t len;  // excluding terminator
    int32_t operator()(int64_t i) const {
        return i == len ? 0 : static_cast<int32_t>(data[i]) + 1;
    }
};

struct IntText {
    const int32_t* data;
    int32_t operator()(int64_t i) const { return data[i]; }
};

template <typename Text>
void fill_bucket_counts(const Text& s, int64_t n, int32_t alphabet,
                        std::vector<int64_t>& counts) {
    counts.assign(alphabet, 0);
    for (int64_t i = 0; i < n; ++i) ++counts[s(i)];
}

void bucket_heads(const std::vector<int64_t>& counts, std::vector<int64_t>& out) {
    out.resize(counts.size());
    int64_t sum = 0;
    for (size_t c = 0; c < counts.size(); ++c) {
        out[c] = sum;
        sum += counts[c];
    }
}

void bucket_tails(const std::vector<int64_t>& counts, std::vector<int64_t>& out) {
    out.resize(counts.size());
    int64_t sum = 0;
    for (size_t c = 0; c < counts.size(); ++c) {
        sum += counts[c];
        out[c] = sum;  // one past the end of bucket c
    }
}

// types[i] == 1 for S-type, 0 for L-type.
template <typename Text>
void classify_types(const Text& s, int64_t n, std::vector<uint8_t>& types) {
    types.assign(n, 0);
    types[n - 1] = 1;  // terminator is S
    for (int64_t i = n - 2; i >= 0; --i) {
        int32_t a = s(i), b = s(i + 1);
        types[i] = (a < b || (a == b && types[i + 1])) ? 1 : 0;
    }
}

inline bool is_lms(const std::vector<uint8_t>& types, int64_t i) {
    return i > 0 && types[i] && !types[i - 1];
}

template <typename Text>
void induce(const Text& s, int64_t n, const std::vector<uint8_t>& types,
            const std::vector<int64_t>& counts, std::vector<int32_t>& sa,
            std::vector<int64_t>& bkt) {
    // L-type: left to right from bucket heads.
    bucket_heads(counts, bkt);
    for (int64_t i = 0; i < n; ++i) {
        int64_t j = sa[i];
        if (j > 0 && !types[j - 1]) {
            sa[bkt[s(j - 1)]++] = static_cast<int32_t>(j - 1);
        }
    }
    // S-type: right to left from bucket tails.
    bucket_tails(counts, bkt);
    for (int64_t i = n - 1; i >= 0; --i) {
        int64_t j = sa[i];
        if (j > 0 && types[j - 1]) {
            sa[--bkt[s(j - 1)]] = static_cast<int32_t>(j - 1);
        }
    }
}

template <typename Text>
void sais(const Text& s, int64_t n, int32_t alphabet, std::vector<int32_t>& sa) {
    sa.assign(n, kEmpty);
    if (n == 1) {
        sa[0] = 0;
        return;
    }

    std::vector<uint8_t> types;
    classify_types(s, n, types);

    std::vector<int64_t> counts, bkt;
    fill_bucket_counts(s, n, alphabet, counts);

    std::vector<int64_t> lms;  // LMS positions in text order
    for (int64_t i = 1; i < n; ++i) {
        if (is_lms(types, i)) lms.push_back(i);
    }
    const int64_t m = static_cast<int64_t>(lms.size());

    // First pass: place LMS suffixes unsorted, induce to sort LMS substrings.
    bucket_tails(counts, bkt);
    for (int64_t i = m - 1; i >= 0; --i) {
        sa[--bkt[s(lms[i])]] = static_cast<int32_t>(lms[i]);
    }
    induce(s, n, types, counts, sa, bkt);

    // Name LMS substrings in their sorted order. Two LMS substrings are
    // equal iff they have the same length and the same symbols (equal
    // symbols over the closed interval force equal types).
    std::vector<int64_t> sorted_lms;
    sorted_lms.reserve(m);
    for (int64_t i = 0; i < n; ++i) {
        if (sa[i] > 0 && is_lms(types, sa[i])) sorted_lms.push_back(sa[i]);
    }

    // lms_end[i]: position of the next LMS after i (substring end, inclusive).
    std::vector<int32_t> name_of(n, kEmpty);
    auto lms_len = [&](int64_t p) -> int64_t {
        if (p == n - 1) return 1;
        int64_t q = p + 1;
        while (!is_lms(types, q)) ++q;
        return q - p + 1;
    };

    int32_t names = 0;
    int64_t prev = -1, prev_len = 0;
    for (int64_t k = 0; k < m; ++k) {
        int64_t cur = sorted_lms[k];
        int64_t cur_len = lms_len(cur);
        bool same = false;
        if (prev >= 0 && cur_len == prev_len) {
            same = true;
            for (int64_t d = 0; d < cur_len; ++d) {
                if (s(cur + d) != s(prev + d)) {
                    same = false;
                    break;
                }
            }
        }
        if (!same) ++names;
        name_of[cur] = names - 1;
        prev = cur;
        prev_len = cur_len;
    }

    // Order of LMS suffixes, either directly or via recursion on the
    // reduced string of substring names.
    std::vector<int32_t> lms_order(m);
    if (names == m) {
        for (int64_t i = 0; i < m; ++i) {
            lms_order[name_of[lms[i]]] = static_cast<int32_t>(i);
        }
    } else {
        std::vector<int32_t> reduced(m);
        for (int64_t i = 0; i < m; ++i) reduced[i] = name_of[lms[i]];
        name_of.clear();
        name_of.shrink_to_fit();
        sais(IntText{reduced.data()}, m, names, lms_order);
    }

    // Second pass: place LMS suffixes in sorted order, induce the rest.
    std::fill(sa.begin(), sa.end(), kEmpty);
    bucket_tails(counts, bkt);
    for (int64_t k = m - 1; k >= 0; --k) {
        int64_t p = lms[lms_order[k]];
        sa[--bkt[s(p)]] = static_cast<int32_t>(p);
    }
    induce(s, n, types, counts, sa, bkt);
}

}  // namespace

std::vector<int32_t> build_suffix_array(std::string_view text) {
    const int64_t n = static_cast<int64_t>(text.size()) + 1;
    if (n > std::numeric_limits<int32_t>::max()) {
        throw std::length_error("text too large for 32-bit suffix array");
    }
    std::vector<int32_t> sa;
    ByteText s{reinterpret_cast<const unsigned char*>(text.data()),
               static_cast<int64_t>(text.size())};
    sais(s, n, 257, sa);
    return sa;
}

std::vector<int32_t> build_suffix_array_naive(std::string_view text) {
    const int64_t n = static_cast<int64_t>(text.size()) + 1;
    std::vector<int32_t> sa(n);
    for (int64_t i = 0; i < n; ++i) sa[i] = static_cast<int32_t>(i);
    std::sort(sa.begin(), sa.end(), [&](int32_t a, int32_t b) {
        // Suffix of text+terminator; the terminator is smaller than any byte.
        std::string_view sa_ = text.substr(a), sb_ = text.substr(b);
        int cmp = sa_.compare(sb_);
        if (cmp != 0) {
            // compare() orders prefixes first, which matches the
            // terminator-is-smallest convention.
            return cmp < 0;
        }
        return false;
    });
    return sa;
}

}  // namespace fprobe
