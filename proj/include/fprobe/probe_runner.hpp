#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fprobe/prompt_builder.hpp"
#include "fprobe/triple_store.hpp"

namespace fprobe {

// Chat-completion endpoint parameters. Experiments always run greedy
// (temperature 0.0); the field exists so the cache key can prove it.
struct ModelEndpoint {
    std::string base_url;   // scheme://host[:port][/prefix]
    std::string model_name;
    double temperature = 0.0;
    uint32_t max_tokens = 8;
    uint32_t request_timeout_s = 60;
    uint32_t max_concurrent_requests = 8;
    uint32_t max_retries = 3;
    uint32_t backoff_initial_ms = 1000;
};

// 8 tokens fit a one-word verdict; think-first replies need room to reason.
uint32_t default_max_tokens(InstructionMode mode);

class ModelClient {
public:
    virtual ~ModelClient() = default;
    // Raw assistant reply for one request. Throws TimeoutError,
    // HttpError, or ExhaustedRetriesError.
    virtual std::string complete(const std::string& system_instruction,
                                 const std::string& user_prompt) = 0;
    virtual const ModelEndpoint& endpoint() const = 0;
};

// POSTs {base_url}/v1/chat/completions with messages [system, user].
// Retries connection failures, timeouts, 429 and 5xx with exponential
// backoff; other statuses raise HttpError at once. A bearer token is read
// from the API_TOKEN environment variable when present.
class HttpModelClient : public ModelClient {
public:
    explicit HttpModelClient(ModelEndpoint endpoint);

    std::string complete(const std::string& system_instruction,
                         const std::string& user_prompt) override;
    const ModelEndpoint& endpoint() const override { return endpoint_; }

private:
    ModelEndpoint endpoint_;
    std::string host_;       // scheme://host:port for the HTTP client
    std::string path_prefix_; // path portion of base_url, usually empty
};

// Offline deterministic stand-in for a model. The reply is keyed on the
// frequency of the prompt's first-mentioned alias: entities at or above
// high_threshold answer positively at high_first_positive_rate, others at
// low_first_positive_rate (rate 1 / rate 0 gives fully deterministic
// rules). Draws are a pure function of (seed, prompt), so identical runs
// see identical replies. The answer vocabulary is inferred from the system
// instruction, as is the think-first reply shape.
struct MockRules {
    std::unordered_map<std::string, uint64_t> alias_frequency;
    uint64_t high_threshold = 100000;
    double high_first_positive_rate = 1.0;
    double low_first_positive_rate = 0.0;
    uint64_t seed = 0;
};

class RuleMockClient : public ModelClient {
public:
    RuleMockClient(MockRules rules, ModelEndpoint endpoint);

    std::string complete(const std::string& system_instruction,
                         const std::string& user_prompt) override;
    const ModelEndpoint& endpoint() const override { return endpoint_; }

    size_t calls() const { return calls_.load(); }

private:
    MockRules rules_;
    ModelEndpoint endpoint_;
    std::atomic<size_t> calls_{0};
};

// Append-only JSONL of raw replies keyed by
// hash(model, system + user prompt, temperature, max_tokens). A hit
// returns the byte-identical reply without a network call. Thread-safe.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path file);

    static std::string key(const ModelEndpoint& endpoint,
                           const std::string& system_instruction,
                           const std::string& user_prompt);

    std::optional<std::string> lookup(const std::string& key) const;
    void put(const std::string& key, const std::string& reply);

    size_t size() const;

private:
    std::filesystem::path file_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::string> replies_;
};

// Cache-first single query: on a miss, calls the client and persists the
// reply. `cache` may be null to force live queries.
std::string query_model(ModelClient& client, ResponseCache* cache,
                        const std::string& system_instruction,
                        const std::string& user_prompt);

enum class Verdict { POSITIVE, NEGATIVE, UNPARSEABLE };

std::string_view verdict_label(Verdict verdict);

// DIRECT: trim whitespace; the reply parses as pos (resp. neg) when it
// starts with that word case-insensitively and everything after is
// punctuation or whitespace. THINK_FIRST: the same rule applied to the
// reply's final whitespace-separated token. Anything else is UNPARSEABLE.
Verdict parse_answer(std::string_view raw, std::string_view positive,
                     std::string_view negative, InstructionMode mode);

struct VariantOutcome {
    std::string subject_alias;
    std::string object_alias;
    std::string prompt;
    std::string raw_reply;
    Verdict verdict = Verdict::UNPARSEABLE;
    bool transport_failed = false; // query failed after retries
};

struct ProbeOutcome {
    Triple triple;
    Direction direction = Direction::FORWARD;
    TemplateKind kind = TemplateKind::QUESTION;
    // Evaluated variants only; short-circuiting skips the rest.
    std::vector<VariantOutcome> variants;
    bool recognized = false;

    size_t transport_failures() const;
};

// Evaluates the variant batch for one direction. recognized is the OR of
// POSITIVE verdicts; with short_circuit the remaining variants are skipped
// after the first POSITIVE, which cannot change the OR. A variant whose
// query fails after retries is recorded UNPARSEABLE and the batch
// continues.
ProbeOutcome probe_fact(const Triple& triple, Direction direction,
                        const PromptTemplate& prompt_template,
                        const EntityTable& entities, ModelClient& client,
                        ResponseCache* cache, uint64_t seed,
                        bool short_circuit = true,
                        size_t alias_cap = kMaxAliasesPerEntity);

// One probed fact with both directional results; the JSONL persistence
// unit. Both directions used the same template kind and alias seed.
struct PairedProbeRecord {
    std::string subject_id;
    std::string object_id;
    std::string relation_id;
    TemplateKind kind = TemplateKind::QUESTION;
    bool forward_recognized = false;
    bool backward_recognized = false;
};

std::vector<PairedProbeRecord> read_paired_outcomes(
    const std::filesystem::path& path);

struct RunOptions {
    uint64_t seed = 0;
    bool short_circuit = true;
    size_t alias_cap = kMaxAliasesPerEntity;
    // Stop once this many pairs are on disk (0 = whole dataset). Used to
    // bound runs and to exercise resume.
    size_t max_pairs = 0;
    size_t workers = 0; // 0: endpoint.max_concurrent_requests
    std::filesystem::path outcomes_path; // empty: no persistence
};

// Probes every dataset row forward and backward and appends one JSON line
// per fact to outcomes_path, always in dataset order, flushing after each
// worker-sized chunk. An existing file is treated as a checkpoint: its
// complete rows are validated against the dataset and skipped, a torn
// trailing line is dropped, and the run continues where it stopped, so an
// interrupted run converges to a byte-identical file. Aborts only when the
// endpoint fails persistently (every variant of a fact failing transport);
// rows already written stay on disk.
std::vector<PairedProbeRecord> run_division(
    const std::vector<DatasetRow>& rows, const PromptTemplate& prompt_template,
    ModelClient& client, ResponseCache* cache, const RunOptions& options);

} // namespace fprobe
