#include "fprobe/probe_runner.hpp"

#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <future>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "fprobe/errors.hpp"
#include "fprobe/util/hash.hpp"

namespace fprobe {

uint32_t default_max_tokens(InstructionMode mode) {
    return mode == InstructionMode::DIRECT ? 8 : 512;
}

// ---------------------------------------------------------------------------
// HTTP client

HttpModelClient::HttpModelClient(ModelEndpoint endpoint)
    : endpoint_(std::move(endpoint)) {
    // Split scheme://authority from an optional path prefix.
    const std::string& url = endpoint_.base_url;
    const size_t scheme = url.find("://");
    if (scheme == std::string::npos) {
        throw ConfigError("base_url needs a scheme: " + url);
    }
    const size_t path = url.find('/', scheme + 3);
    if (path == std::string::npos) {
        host_ = url;
    } else {
        host_ = url.substr(0, path);
        path_prefix_ = url.substr(path);
        while (!path_prefix_.empty() && path_prefix_.back() == '/') {
            path_prefix_.pop_back();
        }
    }
}

std::string HttpModelClient::complete(const std::string& system_instruction,
                                      const std::string& user_prompt) {
    const nlohmann::json body = {
        {"model", endpoint_.model_name},
        {"messages",
         {{{"role", "system"}, {"content", system_instruction}},
          {{"role", "user"}, {"content", user_prompt}}}},
        {"temperature", endpoint_.temperature},
        {"max_tokens", endpoint_.max_tokens},
    };
    const std::string payload = body.dump();
    const std::string path = path_prefix_ + "/v1/chat/completions";

    httplib::Headers headers;
    if (const char* token = std::getenv("API_TOKEN"); token && *token) {
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    std::string last_failure;
    bool last_was_timeout = false;
    for (uint32_t attempt = 0; attempt <= endpoint_.max_retries; ++attempt) {
        if (attempt > 0) {
            const auto delay = std::chrono::milliseconds(
                endpoint_.backoff_initial_ms << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }
        // httplib clients are not safe for concurrent requests, so each
        // attempt gets its own.
        httplib::Client client(host_);
        client.set_connection_timeout(endpoint_.request_timeout_s, 0);
        client.set_read_timeout(endpoint_.request_timeout_s, 0);
        client.set_write_timeout(endpoint_.request_timeout_s, 0);

        httplib::Result result =
            client.Post(path, headers, payload, "application/json");
        if (!result) {
            last_was_timeout = result.error() == httplib::Error::Read ||
                               result.error() == httplib::Error::ConnectionTimeout;
            last_failure = httplib::to_string(result.error());
            continue;
        }
        if (result->status == 429 || result->status >= 500) {
            last_was_timeout = false;
            last_failure = "HTTP " + std::to_string(result->status);
            continue;
        }
        if (result->status != 200) {
            throw HttpError(result->status, "model endpoint returned HTTP " +
                                                std::to_string(result->status));
        }
        try {
            const auto doc = nlohmann::json::parse(result->body);
            return doc.at("choices").at(0).at("message").at("content")
                .get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw HttpError(result->status,
                            std::string("malformed completion response: ") +
                                e.what());
        }
    }
    if (last_was_timeout) {
        throw TimeoutError("model endpoint timed out after " +
                           std::to_string(endpoint_.max_retries + 1) +
                           " attempts");
    }
    throw ExhaustedRetriesError("model endpoint unavailable after " +
                                std::to_string(endpoint_.max_retries + 1) +
                                " attempts (" + last_failure + ")");
}

// ---------------------------------------------------------------------------
// Mock client

RuleMockClient::RuleMockClient(MockRules rules, ModelEndpoint endpoint)
    : rules_(std::move(rules)), endpoint_(std::move(endpoint)) {}

std::string RuleMockClient::complete(const std::string& system_instruction,
                                     const std::string& user_prompt) {
    calls_.fetch_add(1);

    // Earliest alias occurrence decides; the longer alias wins a tie so
    // that "Anna Swan senior" beats "Anna Swan" at the same offset.
    size_t best_pos = std::string::npos;
    size_t best_len = 0;
    uint64_t frequency = 0;
    bool found = false;
    for (const auto& [alias, freq] : rules_.alias_frequency) {
        const size_t pos = user_prompt.find(alias);
        if (pos == std::string::npos) continue;
        if (pos < best_pos || (pos == best_pos && alias.size() > best_len)) {
            best_pos = pos;
            best_len = alias.size();
            frequency = freq;
            found = true;
        }
    }

    const bool question =
        system_instruction.find("'Yes'") != std::string::npos;
    const char* pos_word = question ? "Yes" : "True";
    const char* neg_word = question ? "No" : "False";

    if (!found) return "I am not sure.";

    const double rate = frequency >= rules_.high_threshold
                            ? rules_.high_first_positive_rate
                            : rules_.low_first_positive_rate;
    const uint64_t draw = mix64(fnv1a64(user_prompt) ^ rules_.seed);
    const double u = static_cast<double>(draw >> 11) * 0x1.0p-53;
    const bool positive = u < rate;

    const bool think =
        system_instruction.find("step by step") != std::string::npos;
    if (think) {
        return std::string("Considering what is known about the claim, the "
                           "final answer is ") +
               (positive ? pos_word : neg_word) + ".";
    }
    return std::string(positive ? pos_word : neg_word) + ".";
}

// ---------------------------------------------------------------------------
// Response cache

ResponseCache::ResponseCache(std::filesystem::path file)
    : file_(std::move(file)) {
    std::ifstream in(file_);
    if (!in) return; // created on first put
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            const auto doc = nlohmann::json::parse(line);
            replies_[doc.at("key").get<std::string>()] =
                doc.at("reply").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            continue; // torn tail from a killed run
        }
    }
}

std::string ResponseCache::key(const ModelEndpoint& endpoint,
                               const std::string& system_instruction,
                               const std::string& user_prompt) {
    char temperature[32];
    std::snprintf(temperature, sizeof temperature, "%.6f",
                  endpoint.temperature);
    std::string material = endpoint.model_name;
    material += '\x1f';
    material += system_instruction;
    material += '\x1f';
    material += user_prompt;
    material += '\x1f';
    material += temperature;
    material += '\x1f';
    material += std::to_string(endpoint.max_tokens);
    const uint64_t h = fnv1a64(material);
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(h));
    return hex;
}

std::optional<std::string> ResponseCache::lookup(const std::string& key) const {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = replies_.find(key);
    if (it == replies_.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::put(const std::string& key, const std::string& reply) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!replies_.emplace(key, reply).second) return; // concurrent duplicate
    std::ofstream out(file_, std::ios::app);
    if (!out) throw IoError("cannot append to response cache " + file_.string());
    const nlohmann::json row = {
        {"key", key},
        {"reply", reply},
        {"ts", std::chrono::duration_cast<std::chrono::seconds>(
                   std::chrono::system_clock::now().time_since_epoch())
                   .count()},
    };
    out << row.dump() << '\n';
    out.flush();
    if (!out) throw IoError("write failed for response cache " + file_.string());
}

size_t ResponseCache::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return replies_.size();
}

std::string query_model(ModelClient& client, ResponseCache* cache,
                        const std::string& system_instruction,
                        const std::string& user_prompt) {
    std::string cache_key;
    if (cache) {
        cache_key =
            ResponseCache::key(client.endpoint(), system_instruction, user_prompt);
        if (const auto hit = cache->lookup(cache_key)) return *hit;
    }
    std::string reply = client.complete(system_instruction, user_prompt);
    if (cache) cache->put(cache_key, reply);
    return reply;
}

// ---------------------------------------------------------------------------
// Parsing

std::string_view verdict_label(Verdict verdict) {
    switch (verdict) {
        case Verdict::POSITIVE: return "positive";
        case Verdict::NEGATIVE: return "negative";
        case Verdict::UNPARSEABLE: return "unparseable";
    }
    return "?";
}

namespace {

bool is_filler(char ch) {
    const auto uc = static_cast<unsigned char>(ch);
    return std::isspace(uc) || std::ispunct(uc);
}

// True when `text` starts with `word` (case-insensitively) and the rest is
// punctuation or whitespace only.
bool matches_word(std::string_view text, std::string_view word) {
    if (text.size() < word.size()) return false;
    for (size_t i = 0; i < word.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(text[i])) !=
            std::tolower(static_cast<unsigned char>(word[i]))) {
            return false;
        }
    }
    for (size_t i = word.size(); i < text.size(); ++i) {
        if (!is_filler(text[i])) return false;
    }
    return true;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

std::string_view final_token(std::string_view s) {
    s = trim(s);
    const size_t cut = s.find_last_of(" \t\r\n\v\f");
    return cut == std::string_view::npos ? s : s.substr(cut + 1);
}

} // namespace

Verdict parse_answer(std::string_view raw, std::string_view positive,
                     std::string_view negative, InstructionMode mode) {
    const std::string_view answer =
        mode == InstructionMode::DIRECT ? trim(raw) : final_token(raw);
    if (matches_word(answer, positive)) return Verdict::POSITIVE;
    if (matches_word(answer, negative)) return Verdict::NEGATIVE;
    return Verdict::UNPARSEABLE;
}

// ---------------------------------------------------------------------------
// Probing

size_t ProbeOutcome::transport_failures() const {
    size_t n = 0;
    for (const VariantOutcome& v : variants) n += v.transport_failed ? 1 : 0;
    return n;
}

ProbeOutcome probe_fact(const Triple& triple, Direction direction,
                        const PromptTemplate& prompt_template,
                        const EntityTable& entities, ModelClient& client,
                        ResponseCache* cache, uint64_t seed,
                        bool short_circuit, size_t alias_cap) {
    const PromptBatch batch = expand_variants(triple, direction,
                                              prompt_template, entities, seed,
                                              alias_cap);

    ProbeOutcome outcome;
    outcome.triple = triple;
    outcome.direction = direction;
    outcome.kind = prompt_template.kind;

    for (const PromptVariant& variant : batch.variants) {
        VariantOutcome result;
        result.subject_alias = variant.subject_alias;
        result.object_alias = variant.object_alias;
        result.prompt = variant.prompt;
        try {
            result.raw_reply = query_model(
                client, cache, prompt_template.system_instruction, variant.prompt);
            result.verdict =
                parse_answer(result.raw_reply, prompt_template.positive(),
                             prompt_template.negative(), prompt_template.mode);
        } catch (const Error&) {
            // One failed variant must not sink the fact; it scores as
            // unrecognized like any other unparseable reply.
            result.verdict = Verdict::UNPARSEABLE;
            result.transport_failed = true;
        }
        const bool positive = result.verdict == Verdict::POSITIVE;
        outcome.variants.push_back(std::move(result));
        if (positive) {
            outcome.recognized = true;
            if (short_circuit) break;
        }
    }
    return outcome;
}

// ---------------------------------------------------------------------------
// Division runs

namespace {

EntityTable row_entities(const DatasetRow& row) {
    EntityTable entities;
    entities.emplace(row.subject_id,
                     EntityRecord{row.subject_id, row.subject_aliases,
                                  row.subject_frequency, std::nullopt});
    entities.emplace(row.object_id,
                     EntityRecord{row.object_id, row.object_aliases,
                                  row.object_frequency, std::nullopt});
    return entities;
}

nlohmann::json record_json(const PairedProbeRecord& record) {
    return {
        {"subject_id", record.subject_id},
        {"object_id", record.object_id},
        {"relation_id", record.relation_id},
        {"template", template_kind_label(record.kind)},
        {"forward_recognized", record.forward_recognized},
        {"backward_recognized", record.backward_recognized},
    };
}

PairedProbeRecord record_from_json(const nlohmann::json& doc) {
    PairedProbeRecord record;
    record.subject_id = doc.at("subject_id").get<std::string>();
    record.object_id = doc.at("object_id").get<std::string>();
    record.relation_id = doc.at("relation_id").get<std::string>();
    const auto kind =
        template_kind_from_label(doc.at("template").get<std::string>());
    if (!kind) throw MalformedRowError("unknown template kind in outcome");
    record.kind = *kind;
    record.forward_recognized = doc.at("forward_recognized").get<bool>();
    record.backward_recognized = doc.at("backward_recognized").get<bool>();
    return record;
}

// Complete lines of an interrupted outcomes file; a torn trailing line is
// truncated away so appending resumes cleanly.
std::vector<PairedProbeRecord> load_checkpoint(
    const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    in.close();

    size_t keep = content.size();
    if (keep > 0 && content.back() != '\n') {
        const size_t last_newline = content.find_last_of('\n');
        keep = last_newline == std::string::npos ? 0 : last_newline + 1;
        std::filesystem::resize_file(path, keep);
        content.resize(keep);
    }

    std::vector<PairedProbeRecord> records;
    size_t start = 0;
    while (start < content.size()) {
        const size_t end = content.find('\n', start);
        const std::string line = content.substr(start, end - start);
        start = end + 1;
        if (line.empty()) continue;
        try {
            records.push_back(record_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRowError("outcomes file " + path.string() +
                                    " is corrupt: " + e.what());
        }
    }
    return records;
}

} // namespace

std::vector<PairedProbeRecord> read_paired_outcomes(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open outcomes file " + path.string());
    std::vector<PairedProbeRecord> records;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(record_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRowError("outcomes file " + path.string() +
                                    " line " + std::to_string(line_no) + ": " +
                                    e.what());
        }
    }
    return records;
}

std::vector<PairedProbeRecord> run_division(
    const std::vector<DatasetRow>& rows, const PromptTemplate& prompt_template,
    ModelClient& client, ResponseCache* cache, const RunOptions& options) {
    const size_t limit = options.max_pairs == 0
                             ? rows.size()
                             : std::min(options.max_pairs, rows.size());

    std::vector<PairedProbeRecord> completed;
    if (!options.outcomes_path.empty()) {
        completed = load_checkpoint(options.outcomes_path);
        if (completed.size() > rows.size()) {
            throw ConfigError("outcomes file " + options.outcomes_path.string() +
                              " holds more rows than the dataset");
        }
        for (size_t i = 0; i < completed.size(); ++i) {
            if (completed[i].subject_id != rows[i].subject_id ||
                completed[i].object_id != rows[i].object_id ||
                completed[i].relation_id != rows[i].relation_id ||
                completed[i].kind != prompt_template.kind) {
                throw ConfigError(
                    "outcomes file " + options.outcomes_path.string() +
                    " does not line up with the dataset at row " +
                    std::to_string(i) + "; refusing to resume");
            }
        }
    }
    // Opened before the completion check so even a zero-row run leaves an
    // (empty) outcomes file behind; the report treats that as a probed cell
    // with no pairs rather than an unprobed one.
    std::ofstream out;
    if (!options.outcomes_path.empty()) {
        out.open(options.outcomes_path, std::ios::app);
        if (!out) {
            throw IoError("cannot append outcomes to " +
                          options.outcomes_path.string());
        }
    }
    if (completed.size() >= limit) {
        completed.resize(limit);
        return completed;
    }

    const size_t workers = std::max<size_t>(
        1, options.workers ? options.workers
                           : client.endpoint().max_concurrent_requests);

    const auto probe_row = [&](const DatasetRow& row) {
        const Triple triple{row.subject_id, row.object_id, row.relation_id};
        const EntityTable entities = row_entities(row);
        const ProbeOutcome forward =
            probe_fact(triple, Direction::FORWARD, prompt_template, entities,
                       client, cache, options.seed, options.short_circuit,
                       options.alias_cap);
        const ProbeOutcome backward =
            probe_fact(triple, Direction::BACKWARD, prompt_template, entities,
                       client, cache, options.seed, options.short_circuit,
                       options.alias_cap);

        // A fact whose every query failed transport signals a dead
        // endpoint; surface it instead of logging a fabricated negative.
        const auto all_failed = [](const ProbeOutcome& outcome) {
            return !outcome.variants.empty() &&
                   outcome.transport_failures() == outcome.variants.size();
        };
        if (all_failed(forward) && all_failed(backward)) {
            throw ExhaustedRetriesError(
                "endpoint failed for every variant of " + triple.fact_key());
        }

        PairedProbeRecord record;
        record.subject_id = row.subject_id;
        record.object_id = row.object_id;
        record.relation_id = row.relation_id;
        record.kind = prompt_template.kind;
        record.forward_recognized = forward.recognized;
        record.backward_recognized = backward.recognized;
        return record;
    };

    // Rows are probed in worker-sized chunks and appended strictly in
    // dataset order, so the file on disk is always an ordered prefix of
    // the full run, whatever the in-chunk completion order.
    for (size_t base = completed.size(); base < limit; base += workers) {
        const size_t chunk_end = std::min(limit, base + workers);
        std::vector<std::future<PairedProbeRecord>> chunk;
        chunk.reserve(chunk_end - base);
        for (size_t i = base; i < chunk_end; ++i) {
            chunk.push_back(std::async(std::launch::async, probe_row,
                                       std::cref(rows[i])));
        }
        for (auto& future : chunk) {
            PairedProbeRecord record = future.get();
            if (out.is_open()) {
                out << record_json(record).dump() << '\n';
            }
            completed.push_back(std::move(record));
        }
        if (out.is_open()) {
            out.flush();
            if (!out) {
                throw IoError("write failed for outcomes file " +
                              options.outcomes_path.string());
            }
        }
    }
    return completed;
}

} // namespace fprobe
