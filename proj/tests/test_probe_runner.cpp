#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "fprobe/errors.hpp"
#include "fprobe/probe_runner.hpp"
#include "fprobe/stats.hpp"
#include "test_support.hpp"

using namespace fprobe;

namespace {

RelationSpec spouse_relation() {
    return {"P26", "spouse", "Is {s} married to {o}?",
            "{s} is married to {o}.", true};
}

ModelEndpoint mock_endpoint() {
    ModelEndpoint endpoint;
    endpoint.base_url = "mock://local";
    endpoint.model_name = "rule-mock";
    return endpoint;
}

// High-frequency subjects, low-frequency objects, one alias each.
MockRules deterministic_rules() {
    MockRules rules;
    rules.alias_frequency = {
        {"Amara Highfield", 900000}, {"Borea Metropolis", 250000},
        {"Cimmer Grandport", 120000}, {"dustvale", 40},
        {"elmwick", 800},             {"fennel hollow", 12},
    };
    return rules;
}

DatasetRow make_row(const std::string& subject_id,
                    const std::string& subject_alias, uint64_t subject_freq,
                    const std::string& object_id,
                    const std::string& object_alias, uint64_t object_freq) {
    DatasetRow row;
    row.subject_id = subject_id;
    row.object_id = object_id;
    row.relation_id = "P26";
    row.subject_aliases = {subject_alias};
    row.object_aliases = {object_alias};
    row.subject_frequency = subject_freq;
    row.object_frequency = object_freq;
    return row;
}

std::vector<DatasetRow> high_to_low_rows() {
    return {
        make_row("Q1", "Amara Highfield", 900000, "Q4", "dustvale", 40),
        make_row("Q2", "Borea Metropolis", 250000, "Q5", "elmwick", 800),
        make_row("Q3", "Cimmer Grandport", 120000, "Q6", "fennel hollow", 12),
    };
}

// Serves /v1/chat/completions on a loopback port picked at bind time.
class LocalServer {
public:
    explicit LocalServer(httplib::Server::Handler handler) {
        server_.Post("/v1/chat/completions", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        REQUIRE(port_ > 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const {
        return "http://127.0.0.1:" + std::to_string(port_);
    }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

std::string completion_body(const std::string& content) {
    const nlohmann::json doc = {
        {"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}},
    };
    return doc.dump();
}

ModelEndpoint fast_retry_endpoint(const std::string& base_url) {
    ModelEndpoint endpoint;
    endpoint.base_url = base_url;
    endpoint.model_name = "srv";
    endpoint.max_retries = 3;
    endpoint.backoff_initial_ms = 5;
    endpoint.request_timeout_s = 5;
    return endpoint;
}

} // namespace

TEST_SUITE("probe_runner") {

TEST_CASE("direct answers parse by leading word with trailing filler") {
    const auto mode = InstructionMode::DIRECT;
    CHECK(parse_answer("Yes", "Yes", "No", mode) == Verdict::POSITIVE);
    CHECK(parse_answer("Yes.", "Yes", "No", mode) == Verdict::POSITIVE);
    CHECK(parse_answer("  yes!\n", "Yes", "No", mode) == Verdict::POSITIVE);
    CHECK(parse_answer("NO", "Yes", "No", mode) == Verdict::NEGATIVE);
    CHECK(parse_answer("false", "True", "False", mode) == Verdict::NEGATIVE);
    CHECK(parse_answer("True...", "True", "False", mode) == Verdict::POSITIVE);

    CHECK(parse_answer("Yesterday", "Yes", "No", mode) == Verdict::UNPARSEABLE);
    CHECK(parse_answer("Notably", "Yes", "No", mode) == Verdict::UNPARSEABLE);
    CHECK(parse_answer("Yes, it is correct", "Yes", "No", mode) ==
          Verdict::UNPARSEABLE);
    CHECK(parse_answer("I am not sure.", "Yes", "No", mode) ==
          Verdict::UNPARSEABLE);
    CHECK(parse_answer("", "Yes", "No", mode) == Verdict::UNPARSEABLE);
    CHECK(parse_answer("  \n ", "Yes", "No", mode) == Verdict::UNPARSEABLE);
}

TEST_CASE("think-first answers parse by final token") {
    const auto mode = InstructionMode::THINK_FIRST;
    CHECK(parse_answer("Both cities appear twinned, so the final answer is "
                       "Yes.",
                       "Yes", "No", mode) == Verdict::POSITIVE);
    CHECK(parse_answer("Reasoning...\nFinal answer: No", "Yes", "No", mode) ==
          Verdict::NEGATIVE);
    CHECK(parse_answer("The claim is wrong.\n\nFalse", "True", "False",
                       mode) == Verdict::NEGATIVE);
    // A verdict buried mid-reply does not count.
    CHECK(parse_answer("Yes is tempting but I cannot conclude", "Yes", "No",
                       mode) == Verdict::UNPARSEABLE);
    CHECK(parse_answer("", "Yes", "No", mode) == Verdict::UNPARSEABLE);
}

TEST_CASE("verdict labels are stable") {
    CHECK(verdict_label(Verdict::POSITIVE) == "positive");
    CHECK(verdict_label(Verdict::NEGATIVE) == "negative");
    CHECK(verdict_label(Verdict::UNPARSEABLE) == "unparseable");
}

TEST_CASE("default token budget depends on instruction mode") {
    CHECK(default_max_tokens(InstructionMode::DIRECT) == 8);
    CHECK(default_max_tokens(InstructionMode::THINK_FIRST) == 512);
}

TEST_CASE("mock answers by the first-mentioned alias's frequency") {
    RuleMockClient client(deterministic_rules(), mock_endpoint());
    const auto question =
        default_system_instruction(TemplateKind::QUESTION, InstructionMode::DIRECT);
    const auto statement =
        default_system_instruction(TemplateKind::STATEMENT, InstructionMode::DIRECT);

    CHECK(client.complete(question, "Is Amara Highfield married to dustvale?") ==
          "Yes.");
    CHECK(client.complete(question, "Is dustvale married to Amara Highfield?") ==
          "No.");
    CHECK(client.complete(statement, "elmwick is married to Borea Metropolis.") ==
          "False.");
    CHECK(client.complete(statement, "Borea Metropolis is married to elmwick.") ==
          "True.");
    CHECK(client.complete(question, "Is Nowhere married to Anywhere?") ==
          "I am not sure.");
    CHECK(client.calls() == 5);
}

TEST_CASE("mock think-first replies end in the final answer") {
    RuleMockClient client(deterministic_rules(), mock_endpoint());
    const auto think = default_system_instruction(TemplateKind::QUESTION,
                                                  InstructionMode::THINK_FIRST);
    const auto reply =
        client.complete(think, "Is Amara Highfield married to dustvale?");
    CHECK(parse_answer(reply, "Yes", "No", InstructionMode::THINK_FIRST) ==
          Verdict::POSITIVE);
    const auto negative =
        client.complete(think, "Is dustvale married to Amara Highfield?");
    CHECK(parse_answer(negative, "Yes", "No", InstructionMode::THINK_FIRST) ==
          Verdict::NEGATIVE);
}

TEST_CASE("mock breaks first-mention ties toward the longer alias") {
    MockRules rules;
    rules.alias_frequency = {{"Anna Swan", 10}, {"Anna Swan senior", 500000}};
    RuleMockClient client(rules, mock_endpoint());
    const auto question =
        default_system_instruction(TemplateKind::QUESTION, InstructionMode::DIRECT);
    CHECK(client.complete(question, "Is Anna Swan senior married to X?") ==
          "Yes.");
    CHECK(client.complete(question, "Is Anna Swan married to X?") == "No.");
}

TEST_CASE("mock draws are reproducible at fractional rates") {
    MockRules rules = deterministic_rules();
    rules.high_first_positive_rate = 0.6;
    rules.low_first_positive_rate = 0.3;
    rules.seed = 42;
    RuleMockClient a(rules, mock_endpoint());
    RuleMockClient b(rules, mock_endpoint());
    const auto question =
        default_system_instruction(TemplateKind::QUESTION, InstructionMode::DIRECT);
    bool any_diff_across_prompts = false;
    std::string first_reply;
    for (int i = 0; i < 32; ++i) {
        const std::string prompt =
            "Is Amara Highfield married to partner " + std::to_string(i) + "?";
        const auto ra = a.complete(question, prompt);
        CHECK(ra == b.complete(question, prompt));
        if (i == 0) first_reply = ra;
        any_diff_across_prompts |= ra != first_reply;
    }
    // At rate 0.6 a run of 32 identical draws would mean a broken PRNG.
    CHECK(any_diff_across_prompts);
}

TEST_CASE("response cache returns byte-identical replies without calls") {
    const testsup::TempDir dir("cache");
    RuleMockClient client(deterministic_rules(), mock_endpoint());
    const auto question =
        default_system_instruction(TemplateKind::QUESTION, InstructionMode::DIRECT);
    const std::string prompt = "Is Amara Highfield married to dustvale?";

    std::string first;
    {
        ResponseCache cache(dir / "replies.jsonl");
        first = query_model(client, &cache, question, prompt);
        CHECK(client.calls() == 1);
        CHECK(query_model(client, &cache, question, prompt) == first);
        CHECK(client.calls() == 1);
        CHECK(cache.size() == 1);
    }
    // A fresh cache object reloads the persisted reply.
    ResponseCache reloaded(dir / "replies.jsonl");
    CHECK(reloaded.size() == 1);
    CHECK(query_model(client, &reloaded, question, prompt) == first);
    CHECK(client.calls() == 1);
}

TEST_CASE("cache keys separate models, prompts, and sampling parameters") {
    ModelEndpoint a = mock_endpoint();
    const std::string base = ResponseCache::key(a, "sys", "user");
    CHECK(base == ResponseCache::key(a, "sys", "user"));

    ModelEndpoint other_model = a;
    other_model.model_name = "rule-mock-2";
    CHECK(ResponseCache::key(other_model, "sys", "user") != base);

    ModelEndpoint warm = a;
    warm.temperature = 0.7;
    CHECK(ResponseCache::key(warm, "sys", "user") != base);

    ModelEndpoint longer = a;
    longer.max_tokens = 512;
    CHECK(ResponseCache::key(longer, "sys", "user") != base);

    CHECK(ResponseCache::key(a, "sys2", "user") != base);
    CHECK(ResponseCache::key(a, "sys", "user2") != base);
    // The field separator keeps boundary shifts from colliding.
    CHECK(ResponseCache::key(a, "sysu", "ser") != base);
}

TEST_CASE("probe_fact ORs variant verdicts and short-circuits") {
    // Q1 has one high and one low alias; only prompts leading with the
    // high alias draw Yes, so recognition needs the OR over variants.
    MockRules rules;
    rules.alias_frequency = {{"Lowname", 5}, {"Highname", 500000},
                             {"partnertown", 7}};
    ModelEndpoint endpoint = mock_endpoint();

    EntityRecord subject{"Q1", {"Lowname", "Highname"}, 500000, std::nullopt};
    EntityRecord object{"Q9", {"partnertown"}, 7, std::nullopt};
    const EntityTable entities = index_entities({subject, object});
    const Triple triple{"Q1", "Q9", "P26"};
    const auto prompt_template = make_template(
        spouse_relation(), TemplateKind::QUESTION, InstructionMode::DIRECT);

    RuleMockClient full_client(rules, endpoint);
    const ProbeOutcome full =
        probe_fact(triple, Direction::FORWARD, prompt_template, entities,
                   full_client, nullptr, 1, false);
    CHECK(full.recognized);
    CHECK(full.variants.size() == 2);

    RuleMockClient short_client(rules, endpoint);
    const ProbeOutcome shortcut =
        probe_fact(triple, Direction::FORWARD, prompt_template, entities,
                   short_client, nullptr, 1, true);
    CHECK(shortcut.recognized == full.recognized);
    CHECK(shortcut.variants.size() <= full.variants.size());
    CHECK(shortcut.variants.back().verdict == Verdict::POSITIVE);
    CHECK(short_client.calls() <= full_client.calls());

    // Backward prompts lead with the low-frequency object, so nothing
    // draws Yes.
    RuleMockClient back_client(rules, endpoint);
    const ProbeOutcome backward =
        probe_fact(triple, Direction::BACKWARD, prompt_template, entities,
                   back_client, nullptr, 1, false);
    CHECK_FALSE(backward.recognized);
    CHECK(backward.variants.size() == 2);
    CHECK(backward.transport_failures() == 0);
}

TEST_CASE("probe_fact surfaces missing aliases by entity") {
    EntityRecord subject{"Q1", {"Somename"}, 10, std::nullopt};
    EntityRecord object{"Q9", {}, 7, std::nullopt};
    const EntityTable entities = index_entities({subject, object});
    RuleMockClient client(deterministic_rules(), mock_endpoint());
    const auto prompt_template = make_template(
        spouse_relation(), TemplateKind::QUESTION, InstructionMode::DIRECT);
    CHECK_THROWS_WITH_AS(
        probe_fact({"Q1", "Q9", "P26"}, Direction::FORWARD, prompt_template,
                   entities, client, nullptr, 1),
        doctest::Contains("Q9"), NoAliasesError);
}

TEST_CASE("high-to-low runs recognize forward and miss backward") {
    const testsup::TempDir dir("run");
    RuleMockClient client(deterministic_rules(), mock_endpoint());
    const auto prompt_template = make_template(
        spouse_relation(), TemplateKind::QUESTION, InstructionMode::DIRECT);
    RunOptions options;
    options.outcomes_path = dir / "outcomes.jsonl";

    const auto records =
        run_division(high_to_low_rows(), prompt_template, client, nullptr,
                     options);
    REQUIRE(records.size() == 3);
    for (const auto& record : records) {
        CHECK(record.forward_recognized);
        CHECK_FALSE(record.backward_recognized);
        CHECK(record.kind == TemplateKind::QUESTION);
    }

    std::vector<PairedOutcome> pairs;
    for (const auto& record : records) {
        pairs.push_back({record.forward_recognized, record.backward_recognized});
    }
    const ContingencyTable table = tabulate(pairs);
    CHECK(table.n_tf == 3);
    CHECK(table.discordant() == 3);

    const auto reread = read_paired_outcomes(dir / "outcomes.jsonl");
    REQUIRE(reread.size() == records.size());
    for (size_t i = 0; i < reread.size(); ++i) {
        CHECK(reread[i].subject_id == records[i].subject_id);
        CHECK(reread[i].object_id == records[i].object_id);
        CHECK(reread[i].forward_recognized == records[i].forward_recognized);
        CHECK(reread[i].backward_recognized == records[i].backward_recognized);
    }
}

TEST_CASE("interrupted runs resume to a byte-identical outcomes file") {
    const testsup::TempDir dir("resume");
    const auto rows = high_to_low_rows();
    const auto prompt_template = make_template(
        spouse_relation(), TemplateKind::STATEMENT, InstructionMode::DIRECT);

    RunOptions full;
    full.outcomes_path = dir / "full.jsonl";
    RuleMockClient full_client(deterministic_rules(), mock_endpoint());
    run_division(rows, prompt_template, full_client, nullptr, full);
    const std::string want = testsup::read_file(dir / "full.jsonl");

    // First pass stops after one pair, as if the process died.
    RunOptions partial;
    partial.outcomes_path = dir / "resumed.jsonl";
    partial.max_pairs = 1;
    RuleMockClient partial_client(deterministic_rules(), mock_endpoint());
    const auto head =
        run_division(rows, prompt_template, partial_client, nullptr, partial);
    CHECK(head.size() == 1);
    const size_t calls_first_pass = partial_client.calls();

    // Simulate a torn trailing line from a mid-write crash.
    {
        std::ofstream out(dir / "resumed.jsonl", std::ios::app);
        out << "{\"subject_id\":\"Q2\",\"obj";
    }

    RunOptions rest;
    rest.outcomes_path = dir / "resumed.jsonl";
    const auto records =
        run_division(rows, prompt_template, partial_client, nullptr, rest);
    CHECK(records.size() == rows.size());
    CHECK(testsup::read_file(dir / "resumed.jsonl") == want);
    // Resume probes only the remaining facts: the two passes together
    // issue exactly the one full run's worth of queries.
    CHECK(partial_client.calls() > calls_first_pass);
    CHECK(partial_client.calls() == full_client.calls());

    // A second full pass finds nothing left to do.
    const size_t calls_before = partial_client.calls();
    const auto again =
        run_division(rows, prompt_template, partial_client, nullptr, rest);
    CHECK(again.size() == rows.size());
    CHECK(partial_client.calls() == calls_before);
    CHECK(testsup::read_file(dir / "resumed.jsonl") == want);
}

TEST_CASE("resume refuses an outcomes file from another dataset") {
    const testsup::TempDir dir("mismatch");
    const auto prompt_template = make_template(
        spouse_relation(), TemplateKind::QUESTION, InstructionMode::DIRECT);
    RuleMockClient client(deterministic_rules(), mock_endpoint());

    RunOptions options;
    options.outcomes_path = dir / "outcomes.jsonl";
    run_division(high_to_low_rows(), prompt_template, client, nullptr, options);

    auto swapped = high_to_low_rows();
    std::swap(swapped[0], swapped[2]);
    CHECK_THROWS_AS(
        run_division(swapped, prompt_template, client, nullptr, options),
        ConfigError);

    // A different template kind on the same rows must also refuse.
    const auto statement_template = make_template(
        spouse_relation(), TemplateKind::STATEMENT, InstructionMode::DIRECT);
    CHECK_THROWS_AS(run_division(high_to_low_rows(), statement_template,
                                 client, nullptr, options),
                    ConfigError);
}

TEST_CASE("http client round-trips a chat completion") {
    std::atomic<int> hits{0};
    nlohmann::json seen_body;
    std::string seen_auth;
    std::mutex seen_mutex;
    LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
        hits.fetch_add(1);
        {
            std::lock_guard<std::mutex> lock(seen_mutex);
            seen_body = nlohmann::json::parse(req.body);
            seen_auth = req.get_header_value("Authorization");
        }
        res.set_content(completion_body("Yes."), "application/json");
    });

    ::setenv("API_TOKEN", "sesame", 1);
    HttpModelClient client(fast_retry_endpoint(server.base_url()));
    const std::string reply = client.complete("Answer in one word.",
                                              "Is A married to B?");
    ::unsetenv("API_TOKEN");

    CHECK(reply == "Yes.");
    CHECK(hits.load() == 1);
    std::lock_guard<std::mutex> lock(seen_mutex);
    CHECK(seen_auth == "Bearer sesame");
    CHECK(seen_body.at("model") == "srv");
    CHECK(seen_body.at("temperature") == 0.0);
    CHECK(seen_body.at("max_tokens") == 8);
    REQUIRE(seen_body.at("messages").size() == 2);
    CHECK(seen_body["messages"][0]["role"] == "system");
    CHECK(seen_body["messages"][0]["content"] == "Answer in one word.");
    CHECK(seen_body["messages"][1]["role"] == "user");
    CHECK(seen_body["messages"][1]["content"] == "Is A married to B?");
}

TEST_CASE("http client retries 429 and 5xx then succeeds") {
    std::atomic<int> hits{0};
    LocalServer server([&](const httplib::Request&, httplib::Response& res) {
        const int n = hits.fetch_add(1);
        if (n == 0) {
            res.status = 429;
        } else if (n == 1) {
            res.status = 503;
        } else {
            res.set_content(completion_body("No"), "application/json");
        }
    });
    HttpModelClient client(fast_retry_endpoint(server.base_url()));
    CHECK(client.complete("sys", "user") == "No");
    CHECK(hits.load() == 3);
}

TEST_CASE("http client fails fast on non-retryable statuses") {
    std::atomic<int> hits{0};
    LocalServer server([&](const httplib::Request&, httplib::Response& res) {
        hits.fetch_add(1);
        res.status = 404;
    });
    HttpModelClient client(fast_retry_endpoint(server.base_url()));
    try {
        client.complete("sys", "user");
        FAIL("expected HttpError");
    } catch (const HttpError& e) {
        CHECK(e.status == 404);
    }
    CHECK(hits.load() == 1);
}

TEST_CASE("http client exhausts retries on persistent 5xx") {
    std::atomic<int> hits{0};
    LocalServer server([&](const httplib::Request&, httplib::Response& res) {
        hits.fetch_add(1);
        res.status = 500;
    });
    ModelEndpoint endpoint = fast_retry_endpoint(server.base_url());
    endpoint.max_retries = 2;
    HttpModelClient client(endpoint);
    CHECK_THROWS_AS(client.complete("sys", "user"), ExhaustedRetriesError);
    CHECK(hits.load() == 3);
}

TEST_CASE("http client rejects malformed completion payloads") {
    LocalServer server([&](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"choices\": []}", "application/json");
    });
    HttpModelClient client(fast_retry_endpoint(server.base_url()));
    CHECK_THROWS_AS(client.complete("sys", "user"), HttpError);
}

TEST_CASE("http client reaches an endpoint behind a path prefix") {
    std::atomic<int> hits{0};
    httplib::Server::Handler handler = [&](const httplib::Request&,
                                           httplib::Response& res) {
        hits.fetch_add(1);
        res.set_content(completion_body("Yes"), "application/json");
    };
    httplib::Server server;
    server.Post("/proxy/v1/chat/completions", handler);
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    ModelEndpoint endpoint = fast_retry_endpoint(
        "http://127.0.0.1:" + std::to_string(port) + "/proxy/");
    HttpModelClient client(endpoint);
    CHECK(client.complete("sys", "user") == "Yes");
    CHECK(hits.load() == 1);

    server.stop();
    thread.join();
}

TEST_CASE("transport failures mark variants without sinking the fact") {
    // Endpoint answers the second request only; with two variants the
    // fact still resolves from the surviving reply.
    std::atomic<int> hits{0};
    LocalServer server([&](const httplib::Request&, httplib::Response& res) {
        if (hits.fetch_add(1) == 0) {
            res.status = 404; // non-retryable, fails the first variant
        } else {
            res.set_content(completion_body("Yes."), "application/json");
        }
    });
    ModelEndpoint endpoint = fast_retry_endpoint(server.base_url());
    HttpModelClient client(endpoint);

    EntityRecord subject{"Q1", {"A1", "A2"}, 10, std::nullopt};
    EntityRecord object{"Q9", {"B1"}, 7, std::nullopt};
    const EntityTable entities = index_entities({subject, object});
    const auto prompt_template = make_template(
        spouse_relation(), TemplateKind::QUESTION, InstructionMode::DIRECT);

    const ProbeOutcome outcome =
        probe_fact({"Q1", "Q9", "P26"}, Direction::FORWARD, prompt_template,
                   entities, client, nullptr, 7, false);
    CHECK(outcome.recognized);
    CHECK(outcome.variants.size() == 2);
    CHECK(outcome.transport_failures() == 1);
}

TEST_CASE("run_division aborts when the endpoint is persistently dead") {
    LocalServer server([&](const httplib::Request&, httplib::Response& res) {
        res.status = 404;
    });
    HttpModelClient client(fast_retry_endpoint(server.base_url()));
    const auto prompt_template = make_template(
        spouse_relation(), TemplateKind::QUESTION, InstructionMode::DIRECT);
    RunOptions options;
    options.workers = 1;
    CHECK_THROWS_AS(run_division(high_to_low_rows(), prompt_template, client,
                                 nullptr, options),
                    ExhaustedRetriesError);
}

} // TEST_SUITE
