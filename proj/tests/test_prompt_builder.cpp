#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fprobe/errors.hpp"
#include "fprobe/prompt_builder.hpp"
#include "test_support.hpp"

using namespace fprobe;

namespace {

RelationSpec sibling_relation() {
    return {"P3373", "sibling", "Does {s} have a sibling named {o}?",
            "{s} has a sibling named {o}.", true};
}

EntityTable two_entities(size_t subject_aliases, size_t object_aliases) {
    EntityRecord s{"QS", {}, 0, std::nullopt};
    for (size_t i = 0; i < subject_aliases; ++i) {
        s.aliases.push_back("S" + std::to_string(i));
    }
    EntityRecord o{"QO", {}, 0, std::nullopt};
    for (size_t i = 0; i < object_aliases; ++i) {
        o.aliases.push_back("O" + std::to_string(i));
    }
    return index_entities({s, o});
}

}  // namespace

TEST_SUITE("prompt_builder") {

TEST_CASE("question templates answer Yes/No, statements True/False") {
    const auto q = make_template(sibling_relation(), TemplateKind::QUESTION,
                                 InstructionMode::DIRECT);
    CHECK(q.positive() == "Yes");
    CHECK(q.negative() == "No");
    CHECK(q.system_instruction.find("'Yes'") != std::string::npos);
    CHECK(q.system_instruction.find("'No'") != std::string::npos);

    const auto s = make_template(sibling_relation(), TemplateKind::STATEMENT,
                                 InstructionMode::DIRECT);
    CHECK(s.positive() == "True");
    CHECK(s.negative() == "False");
    CHECK(s.system_instruction.find("'True'") != std::string::npos);
}

TEST_CASE("direct mode demands one word, think-first asks for reasoning") {
    const auto direct = default_system_instruction(TemplateKind::QUESTION,
                                                   InstructionMode::DIRECT);
    CHECK(direct.find("Respond with only one word") != std::string::npos);
    const auto think = default_system_instruction(TemplateKind::STATEMENT,
                                                  InstructionMode::THINK_FIRST);
    CHECK(think.find("think step by step") != std::string::npos);
    CHECK(think.find("final answer") != std::string::npos);
    CHECK(think.find("'True'") != std::string::npos);
}

TEST_CASE("system instruction override wins") {
    const auto t = make_template(sibling_relation(), TemplateKind::QUESTION,
                                 InstructionMode::DIRECT,
                                 std::string("Custom instruction."));
    CHECK(t.system_instruction == "Custom instruction.");
}

TEST_CASE("verbalization of the worked sibling example") {
    const auto question = make_template(sibling_relation(),
                                        TemplateKind::QUESTION,
                                        InstructionMode::DIRECT);
    const auto statement = make_template(sibling_relation(),
                                         TemplateKind::STATEMENT,
                                         InstructionMode::DIRECT);
    CHECK(verbalize(Direction::FORWARD, "Diego Maradona", "Raul Maradona",
                    question) ==
          "Does Diego Maradona have a sibling named Raul Maradona?");
    CHECK(verbalize(Direction::BACKWARD, "Diego Maradona", "Raul Maradona",
                    statement) ==
          "Raul Maradona has a sibling named Diego Maradona.");
}

TEST_CASE("degenerate template substitutes directly") {
    PromptTemplate t;
    t.body_template = "{s}/{o}";
    CHECK(verbalize(Direction::FORWARD, "A", "B", t) == "A/B");
    CHECK(verbalize(Direction::BACKWARD, "A", "B", t) == "B/A");
}

TEST_CASE("missing placeholder raises TemplateError") {
    PromptTemplate t;
    t.body_template = "only {s} here";
    CHECK_THROWS_AS(verbalize(Direction::FORWARD, "A", "B", t), TemplateError);
}

TEST_CASE("swap symmetry") {
    fprobe::SplitMix64 rng(61);
    const auto t = make_template(sibling_relation(), TemplateKind::QUESTION,
                                 InstructionMode::DIRECT);
    for (int round = 0; round < 40; ++round) {
        const std::string a = testsup::random_text(rng, 1 + rng.next_below(12), 26);
        const std::string b = testsup::random_text(rng, 1 + rng.next_below(12), 26);
        REQUIRE(verbalize(Direction::BACKWARD, a, b, t) ==
                verbalize(Direction::FORWARD, b, a, t));
    }
}

TEST_CASE("variant counts follow min(m,cap) * min(n,cap)") {
    const auto t = make_template(sibling_relation(), TemplateKind::QUESTION,
                                 InstructionMode::DIRECT);
    const Triple triple{"QS", "QO", "P3373"};
    const struct { size_t m, n, cap, expected; } cases[] = {
        {3, 8, 6, 18}, {1, 1, 6, 1}, {8, 9, 6, 36}, {7, 2, 6, 12},
        {5, 5, 6, 25}, {8, 9, 2, 4},
    };
    for (const auto& c : cases) {
        const auto entities = two_entities(c.m, c.n);
        const auto batch =
            expand_variants(triple, Direction::FORWARD, t, entities, 9, c.cap);
        CAPTURE(c.m);
        CAPTURE(c.n);
        CHECK(batch.variants.size() == c.expected);
        const bool within_cap_law = batch.variants.size() <= 36 || c.cap > 6;
        CHECK(within_cap_law);
    }
}

TEST_CASE("expansion is deterministic in the seed") {
    const auto t = make_template(sibling_relation(), TemplateKind::QUESTION,
                                 InstructionMode::DIRECT);
    const Triple triple{"QS", "QO", "P3373"};
    const auto entities = two_entities(10, 10);

    const auto a = expand_variants(triple, Direction::FORWARD, t, entities, 7);
    const auto b = expand_variants(triple, Direction::FORWARD, t, entities, 7);
    REQUIRE(a.variants.size() == b.variants.size());
    for (size_t i = 0; i < a.variants.size(); ++i) {
        CHECK(a.variants[i].prompt == b.variants[i].prompt);
    }

    // A different seed picks a different alias subset (10 choose 6 leaves
    // plenty of room, so a collision would be a bug in the keying).
    const auto c = expand_variants(triple, Direction::FORWARD, t, entities, 8);
    bool any_difference = c.variants.size() != a.variants.size();
    for (size_t i = 0; !any_difference && i < a.variants.size(); ++i) {
        any_difference = a.variants[i].prompt != c.variants[i].prompt;
    }
    CHECK(any_difference);
}

TEST_CASE("forward and backward batches share alias samples") {
    const auto t = make_template(sibling_relation(), TemplateKind::QUESTION,
                                 InstructionMode::DIRECT);
    const Triple triple{"QS", "QO", "P3373"};
    const auto entities = two_entities(9, 11);

    const auto fwd = expand_variants(triple, Direction::FORWARD, t, entities, 3);
    const auto bwd = expand_variants(triple, Direction::BACKWARD, t, entities, 3);

    const auto alias_sets = [](const PromptBatch& batch) {
        std::set<std::string> subjects, objects;
        for (const auto& v : batch.variants) {
            subjects.insert(v.subject_alias);
            objects.insert(v.object_alias);
        }
        return std::make_pair(subjects, objects);
    };
    CHECK(alias_sets(fwd) == alias_sets(bwd));

    // Rendered text swaps the roles.
    CHECK(fwd.variants[0].prompt ==
          verbalize(Direction::FORWARD, fwd.variants[0].subject_alias,
                    fwd.variants[0].object_alias, t));
    CHECK(bwd.variants[0].prompt ==
          verbalize(Direction::BACKWARD, bwd.variants[0].subject_alias,
                    bwd.variants[0].object_alias, t));
}

TEST_CASE("entities without aliases are rejected") {
    const auto t = make_template(sibling_relation(), TemplateKind::QUESTION,
                                 InstructionMode::DIRECT);
    EntityTable entities = two_entities(2, 2);
    entities.erase("QO");
    const Triple triple{"QS", "QO", "P3373"};
    CHECK_THROWS_AS(
        expand_variants(triple, Direction::FORWARD, t, entities, 1),
        NoAliasesError);
}

TEST_CASE("prompt dump is valid JSONL") {
    const testsup::TempDir dir("prompt-dump");
    const auto t = make_template(sibling_relation(), TemplateKind::STATEMENT,
                                 InstructionMode::DIRECT);
    const Triple triple{"QS", "QO", "P3373"};
    const auto entities = two_entities(2, 3);
    const auto batch =
        expand_variants(triple, Direction::BACKWARD, t, entities, 5);

    const auto file = dir / "prompts.jsonl";
    write_prompts_jsonl({batch}, file);

    std::ifstream in(file);
    std::string line;
    size_t lines = 0;
    while (std::getline(in, line)) {
        const auto doc = nlohmann::json::parse(line);
        CHECK(doc.at("direction") == "backward");
        CHECK(doc.at("template") == "statement");
        CHECK(doc.at("prompt").get<std::string>().find("has a sibling") !=
              std::string::npos);
        ++lines;
    }
    CHECK(lines == batch.variants.size());
}

TEST_CASE("labels round-trip") {
    CHECK(template_kind_from_label(template_kind_label(
              TemplateKind::STATEMENT)) == TemplateKind::STATEMENT);
    CHECK(instruction_mode_from_label(instruction_mode_label(
              InstructionMode::THINK_FIRST)) == InstructionMode::THINK_FIRST);
    CHECK(direction_label(Direction::FORWARD) == "forward");
    CHECK_FALSE(template_kind_from_label("riddle").has_value());
}

}  // TEST_SUITE
