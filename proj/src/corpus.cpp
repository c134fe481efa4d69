#include "fprobe/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <json.hpp>
#include <zlib.h>

#include "fprobe/errors.hpp"
#include "fprobe/index_io.hpp"
#include "fprobe/util/hash.hpp"

namespace fprobe {

namespace {

// gzread is transparent: it inflates gzip streams and passes plain bytes
// through unchanged, so one reader covers both input kinds.
std::string read_file_raw_or_gzip(const std::filesystem::path& path) {
    gzFile gz = gzopen(path.string().c_str(), "rb");
    if (!gz) throw IoError("cannot open " + path.string());
    std::string out;
    char buf[1 << 16];
    int n;
    while ((n = gzread(gz, buf, sizeof buf)) > 0) out.append(buf, static_cast<size_t>(n));
    const bool failed = n < 0;
    gzclose(gz);
    if (failed) throw IoError("read error in " + path.string());
    return out;
}

void require_no_separator(const std::string& doc, const std::string& origin) {
    if (doc.find(kDocSeparator) != std::string::npos) {
        throw SeparatorInDocumentError("document from " + origin +
                                       " contains a 0x00 byte");
    }
}

void append_line_documents(std::string&& content, const std::string& origin,
                           std::vector<std::string>& docs) {
    size_t start = 0;
    while (start <= content.size()) {
        size_t end = content.find('\n', start);
        if (end == std::string::npos) end = content.size();
        size_t len = end - start;
        if (len > 0 && content[start + len - 1] == '\r') --len;
        if (len > 0) {
            std::string doc = content.substr(start, len);
            require_no_separator(doc, origin);
            docs.push_back(std::move(doc));
        }
        if (end == content.size()) break;
        start = end + 1;
    }
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

uint64_t parse_hex64(const std::string& s) {
    if (s.size() != 16) throw ConfigError("bad checksum literal: " + s);
    return std::stoull(s, nullptr, 16);
}

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

std::string shard_file_name(uint64_t shard_id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "shard-%05llu.fpix",
                  static_cast<unsigned long long>(shard_id));
    return buf;
}

} // namespace

std::vector<std::string> ingest_documents(const std::filesystem::path& path) {
    std::vector<std::string> docs;
    if (std::filesystem::is_directory(path)) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(path)) {
            if (entry.is_regular_file()) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            std::string doc = read_file_raw_or_gzip(file);
            if (doc.empty()) continue;
            require_no_separator(doc, file.string());
            docs.push_back(std::move(doc));
        }
    } else if (std::filesystem::is_regular_file(path)) {
        append_line_documents(read_file_raw_or_gzip(path), path.string(), docs);
    } else {
        throw IoError("no such corpus path: " + path.string());
    }
    return docs;
}

std::vector<ShardPlan> plan_shards(const std::vector<std::string>& docs,
                                   uint64_t budget) {
    std::vector<ShardPlan> plans;
    ShardPlan cur;
    for (size_t i = 0; i < docs.size(); ++i) {
        const uint64_t doc_len = docs[i].size();
        const uint64_t grown = cur.byte_length + 1 + doc_len; // +1 separator
        if (cur.doc_count > 0 && grown > budget) {
            plans.push_back(cur);
            cur = ShardPlan{i, 0, 0};
        }
        if (cur.doc_count == 0) {
            cur.first_doc = i;
            cur.byte_length = doc_len;
        } else {
            cur.byte_length = grown;
        }
        ++cur.doc_count;
    }
    if (cur.doc_count > 0) plans.push_back(cur);
    return plans;
}

std::string assemble_shard_text(const std::vector<std::string>& docs,
                                const ShardPlan& plan) {
    std::string text;
    text.reserve(plan.byte_length);
    for (size_t i = 0; i < plan.doc_count; ++i) {
        if (i > 0) text.push_back(kDocSeparator);
        text += docs[plan.first_doc + i];
    }
    return text;
}

void write_manifest(const CorpusManifest& manifest,
                    const std::filesystem::path& path) {
    nlohmann::json shards = nlohmann::json::array();
    for (const ShardMeta& s : manifest.shards) {
        shards.push_back({{"shard_id", s.shard_id},
                          {"file", s.file},
                          {"byte_length", s.byte_length},
                          {"document_count", s.document_count},
                          {"text_checksum", hex64(s.text_checksum)},
                          {"file_checksum", hex64(s.file_checksum)},
                          {"source_label", s.source_label}});
    }
    nlohmann::json doc = {{"format_version", manifest.format_version},
                          {"checkpoint_interval", manifest.checkpoint_interval},
                          {"shards", shards}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

CorpusManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed manifest " + path.string() + ": " + e.what());
    }
    CorpusManifest manifest;
    try {
        manifest.format_version = doc.at("format_version").get<uint32_t>();
        manifest.checkpoint_interval = doc.at("checkpoint_interval").get<uint32_t>();
        for (const auto& s : doc.at("shards")) {
            ShardMeta meta;
            meta.shard_id = s.at("shard_id").get<uint64_t>();
            meta.file = s.at("file").get<std::string>();
            meta.byte_length = s.at("byte_length").get<uint64_t>();
            meta.document_count = s.at("document_count").get<uint64_t>();
            meta.text_checksum = parse_hex64(s.at("text_checksum").get<std::string>());
            meta.file_checksum = parse_hex64(s.at("file_checksum").get<std::string>());
            meta.source_label = s.value("source_label", std::string{});
            manifest.shards.push_back(std::move(meta));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("manifest " + path.string() +
                          " missing required field: " + e.what());
    }
    if (manifest.format_version != kIndexFormatVersion) {
        throw VersionMismatchError("manifest format_version " +
                                   std::to_string(manifest.format_version));
    }
    return manifest;
}

BuildReport build_corpus_index(const std::vector<std::string>& docs,
                               const std::filesystem::path& out_dir,
                               const BuildOptions& options) {
    std::filesystem::create_directories(out_dir);
    const auto manifest_path = out_dir / "manifest.json";

    // Index previous shards by text checksum so unchanged ones can be reused.
    CorpusManifest previous;
    if (std::filesystem::exists(manifest_path)) {
        try {
            previous = read_manifest(manifest_path);
        } catch (const Error&) {
            previous = {}; // unreadable manifest: rebuild everything
        }
    }

    const std::vector<ShardPlan> plans = plan_shards(docs, options.shard_budget);
    CorpusManifest manifest;
    manifest.checkpoint_interval = options.checkpoint_interval;

    BuildReport report;
    report.manifest_path = manifest_path;
    report.shards_total = plans.size();

    for (size_t id = 0; id < plans.size(); ++id) {
        std::string text = assemble_shard_text(docs, plans[id]);
        ShardMeta meta;
        meta.shard_id = id;
        meta.file = shard_file_name(id);
        meta.byte_length = text.size();
        meta.document_count = plans[id].doc_count;
        meta.text_checksum = fnv1a64(text);
        meta.source_label = options.source_label;

        const auto shard_path = out_dir / meta.file;
        const ShardMeta* prior = nullptr;
        if (id < previous.shards.size() &&
            previous.checkpoint_interval == options.checkpoint_interval) {
            const ShardMeta& p = previous.shards[id];
            if (p.file == meta.file && p.text_checksum == meta.text_checksum &&
                std::filesystem::exists(shard_path) &&
                checksum_of_file(shard_path) == p.file_checksum) {
                prior = &p;
            }
        }

        if (prior) {
            meta.file_checksum = prior->file_checksum;
            if (meta.source_label.empty()) meta.source_label = prior->source_label;
        } else {
            FmIndex index = FmIndex::build(text, options.checkpoint_interval);
            text.clear();
            text.shrink_to_fit();
            serialize_index(index, shard_path);
            meta.file_checksum = checksum_of_file(shard_path);
            ++report.shards_built;
        }
        manifest.shards.push_back(std::move(meta));
    }

    write_manifest(manifest, manifest_path);
    return report;
}

} // namespace fprobe
