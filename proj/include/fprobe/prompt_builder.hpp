#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fprobe/triple_store.hpp"

namespace fprobe {

enum class TemplateKind { QUESTION, STATEMENT };
enum class InstructionMode { DIRECT, THINK_FIRST };
enum class Direction { FORWARD, BACKWARD };

std::string_view template_kind_label(TemplateKind kind);     // "question"
std::string_view instruction_mode_label(InstructionMode mode); // "direct"
std::string_view direction_label(Direction direction);      // "forward"
std::optional<TemplateKind> template_kind_from_label(std::string_view label);
std::optional<InstructionMode> instruction_mode_from_label(std::string_view label);

// At most this many aliases are sampled per entity, capping a batch at 36
// rendered variants.
inline constexpr size_t kMaxAliasesPerEntity = 6;

// A verbalization recipe: the relation's question or statement body plus
// the system instruction and the one-word answer vocabulary. Questions are
// answered Yes/No, statements True/False.
struct PromptTemplate {
    TemplateKind kind = TemplateKind::QUESTION;
    InstructionMode mode = InstructionMode::DIRECT;
    std::string system_instruction;
    std::string body_template;

    std::string_view positive() const {
        return kind == TemplateKind::QUESTION ? "Yes" : "True";
    }
    std::string_view negative() const {
        return kind == TemplateKind::QUESTION ? "No" : "False";
    }
};

// Stock system instruction for a kind/mode combination. DIRECT demands a
// one-word reply; THINK_FIRST asks for step-by-step reasoning before the
// final one-word answer.
std::string default_system_instruction(TemplateKind kind, InstructionMode mode);

// Binds a relation's template to a kind and mode. `system_override`
// replaces the stock instruction when provided.
PromptTemplate make_template(const RelationSpec& relation, TemplateKind kind,
                             InstructionMode mode,
                             const std::optional<std::string>& system_override = {});

// Substitutes aliases into the body template and returns the rendered user
// message. FORWARD puts subject_alias into {s} and object_alias into {o};
// BACKWARD swaps the roles, which preserves meaning because the relations
// are symmetric. The system instruction travels on the template and is
// paired with this body when the chat request is composed.
std::string verbalize(Direction direction, const std::string& subject_alias,
                      const std::string& object_alias,
                      const PromptTemplate& prompt_template);

// One rendered prompt. subject_alias/object_alias always name aliases of
// the triple's subject and object entities, whatever the direction.
struct PromptVariant {
    std::string subject_alias;
    std::string object_alias;
    std::string prompt;
};

struct PromptBatch {
    Triple triple;
    Direction direction = Direction::FORWARD;
    TemplateKind kind = TemplateKind::QUESTION;
    uint64_t seed = 0;
    std::vector<PromptVariant> variants;
};

// Samples up to `cap` aliases per entity with a generator keyed by
// (seed, entity_id), renders the Cartesian product, and returns the batch.
// The alias sample for an entity depends only on seed and entity, so
// forward and backward batches of one triple probe the same alias sets.
// Throws NoAliasesError if either entity lacks aliases.
PromptBatch expand_variants(const Triple& triple, Direction direction,
                            const PromptTemplate& prompt_template,
                            const EntityTable& entities, uint64_t seed,
                            size_t cap = kMaxAliasesPerEntity);

// Audit export: one JSON object per rendered variant.
void write_prompts_jsonl(const std::vector<PromptBatch>& batches,
                         const std::filesystem::path& path);

} // namespace fprobe
