#include "fprobe/index_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "fprobe/errors.hpp"
#include "fprobe/util/hash.hpp"

namespace fprobe {
namespace {

constexpr char kMagic[4] = {'F', 'P', 'I', 'X'};
constexpr bool kNativeLittleEndian = std::endian::native == std::endian::little;

class ChecksumWriter {
public:
    explicit ChecksumWriter(std::ostream& out) : out_(out) {}

    void write(const void* data, size_t len) {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
        hash_ = fnv1a64(data, len, hash_);
    }
    void u32(uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        write(b, 4);
    }
    void u64(uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        write(b, 8);
    }
    void u32_array(const std::vector<uint32_t>& vs) {
        if constexpr (kNativeLittleEndian) {
            write(vs.data(), vs.size() * sizeof(uint32_t));
        } else {
            for (uint32_t v : vs) u32(v);
        }
    }
    uint64_t hash() const { return hash_; }

private:
    std::ostream& out_;
    uint64_t hash_ = kFnvOffset;
};

class ChecksumReader {
public:
    explicit ChecksumReader(std::istream& in) : in_(in) {}

    void read(void* data, size_t len) {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
        if (static_cast<size_t>(in_.gcount()) != len) {
            throw CorruptPayloadError("index file truncated");
        }
        hash_ = fnv1a64(data, len, hash_);
    }
    uint32_t u32() {
        unsigned char b[4];
        read(b, 4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
        return v;
    }
    uint64_t u64() {
        unsigned char b[8];
        read(b, 8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
        return v;
    }
    void u32_array(std::vector<uint32_t>& vs) {
        if constexpr (kNativeLittleEndian) {
            read(vs.data(), vs.size() * sizeof(uint32_t));
        } else {
            for (auto& v : vs) v = u32();
        }
    }
    uint64_t hash() const { return hash_; }

private:
    std::istream& in_;
    uint64_t hash_ = kFnvOffset;
};

}  // namespace

void serialize_index(const FmIndex& index, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open for writing: " + path.string());
    }
    ChecksumWriter w(out);
    w.write(kMagic, 4);
    w.u32(kIndexFormatVersion);
    for (uint64_t v : index.c_table()) w.u64(v);
    w.u32(index.checkpoint_interval());
    w.u64(index.terminator_pos());
    w.u32_array(index.checkpoints());
    w.write(index.bwt().data(), index.bwt().size());
    const uint64_t checksum = w.hash();
    w.u64(checksum);
    out.flush();
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

FmIndex deserialize_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open for reading: " + path.string());
    }
    ChecksumReader r(in);

    char magic[4];
    r.read(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw BadMagicError("not an index file (bad magic): " + path.string());
    }
    const uint32_t version = r.u32();
    if (version != kIndexFormatVersion) {
        throw VersionMismatchError("unsupported index format version " +
                                   std::to_string(version));
    }

    std::array<uint64_t, 257> c_table;
    for (auto& v : c_table) v = r.u64();
    const uint64_t bwt_len = c_table[256];
    if (bwt_len == 0) {
        throw CorruptPayloadError("zero-length BWT");
    }

    const uint32_t interval = r.u32();
    if (interval == 0) {
        throw CorruptPayloadError("zero checkpoint interval");
    }
    const uint64_t terminator_pos = r.u64();
    if (terminator_pos >= bwt_len) {
        throw CorruptPayloadError("terminator position out of range");
    }

    // Validate the length fields against the actual file size before
    // allocating; a corrupted c_table[256] must not drive a huge resize.
    const uint64_t actual_size = std::filesystem::file_size(path);
    if (bwt_len > actual_size) {
        throw CorruptPayloadError("BWT length exceeds file size");
    }
    const uint64_t n_blocks = bwt_len / interval + 1;
    const uint64_t expected_size =
        4 + 4 + 257 * 8 + 4 + 8 + n_blocks * 256 * 4 + bwt_len + 8;
    if (expected_size != actual_size) {
        throw CorruptPayloadError("index file size mismatch: " + path.string());
    }
    std::vector<uint32_t> checkpoints(n_blocks * 256);
    r.u32_array(checkpoints);

    std::vector<uint8_t> bwt(bwt_len);
    r.read(bwt.data(), bwt.size());

    const uint64_t computed = r.hash();
    const uint64_t stored = r.u64();
    if (computed != stored) {
        throw CorruptPayloadError("index checksum mismatch: " + path.string());
    }

    FmIndex idx = FmIndex::from_parts(std::move(bwt), terminator_pos, interval);
    // from_parts recomputes tables; cross-check against the stored ones.
    if (idx.c_table() != c_table || idx.checkpoints() != checkpoints) {
        throw CorruptPayloadError("stored tables inconsistent with BWT payload: " +
                                  path.string());
    }
    return idx;
}

}  // namespace fprobe
