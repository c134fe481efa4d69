#include "fprobe/prompt_builder.hpp"

#include <fstream>

#include <json.hpp>

#include "fprobe/errors.hpp"
#include "fprobe/util/hash.hpp"
#include "fprobe/util/rng.hpp"

namespace fprobe {

std::string_view template_kind_label(TemplateKind kind) {
    return kind == TemplateKind::QUESTION ? "question" : "statement";
}

std::string_view instruction_mode_label(InstructionMode mode) {
    return mode == InstructionMode::DIRECT ? "direct" : "think_first";
}

std::string_view direction_label(Direction direction) {
    return direction == Direction::FORWARD ? "forward" : "backward";
}

std::optional<TemplateKind> template_kind_from_label(std::string_view label) {
    if (label == "question") return TemplateKind::QUESTION;
    if (label == "statement") return TemplateKind::STATEMENT;
    return std::nullopt;
}

std::optional<InstructionMode> instruction_mode_from_label(
    std::string_view label) {
    if (label == "direct") return InstructionMode::DIRECT;
    if (label == "think_first") return InstructionMode::THINK_FIRST;
    return std::nullopt;
}

std::string default_system_instruction(TemplateKind kind,
                                       InstructionMode mode) {
    const bool question = kind == TemplateKind::QUESTION;
    const char* pos = question ? "'Yes'" : "'True'";
    const char* neg = question ? "'No'" : "'False'";
    const char* claim = question ? "question about a factual claim"
                                 : "statement of a factual claim";
    std::string out;
    if (mode == InstructionMode::DIRECT) {
        out = std::string("You will be given a ") + claim +
              ". Respond with only one word: " + pos +
              " if the claim is correct or " + neg + " if it is incorrect.";
    } else {
        out = std::string("You will be given a ") + claim +
              ". Let's first think step by step. After reasoning, give the "
              "final answer: either " +
              pos + " if the claim is correct or " + neg +
              " if it is incorrect.";
    }
    return out;
}

PromptTemplate make_template(const RelationSpec& relation, TemplateKind kind,
                             InstructionMode mode,
                             const std::optional<std::string>& system_override) {
    relation.validate();
    PromptTemplate prompt_template;
    prompt_template.kind = kind;
    prompt_template.mode = mode;
    prompt_template.body_template = kind == TemplateKind::QUESTION
                                        ? relation.question_template
                                        : relation.statement_template;
    prompt_template.system_instruction =
        system_override ? *system_override
                        : default_system_instruction(kind, mode);
    return prompt_template;
}

namespace {

std::string substitute(const std::string& tmpl, const std::string& s_value,
                       const std::string& o_value) {
    std::string out;
    out.reserve(tmpl.size() + s_value.size() + o_value.size());
    size_t pos = 0;
    bool saw_s = false, saw_o = false;
    while (pos < tmpl.size()) {
        const size_t brace = tmpl.find('{', pos);
        if (brace == std::string::npos) {
            out.append(tmpl, pos, std::string::npos);
            break;
        }
        out.append(tmpl, pos, brace - pos);
        if (tmpl.compare(brace, 3, "{s}") == 0) {
            out += s_value;
            saw_s = true;
            pos = brace + 3;
        } else if (tmpl.compare(brace, 3, "{o}") == 0) {
            out += o_value;
            saw_o = true;
            pos = brace + 3;
        } else {
            out.push_back('{');
            pos = brace + 1;
        }
    }
    if (!saw_s || !saw_o) {
        throw TemplateError("template \"" + tmpl +
                            "\" lacks a {s} or {o} placeholder");
    }
    return out;
}

// Stable sample of up to `cap` alias indices, keyed by (seed, entity_id)
// only. Both directions and both template kinds therefore draw identical
// alias sets for a given entity.
std::vector<size_t> sample_alias_indices(const std::string& entity_id,
                                         size_t available, uint64_t seed,
                                         size_t cap) {
    return sample_indices(available, std::min(available, cap),
                          hash_combine(seed, fnv1a64(entity_id)));
}

} // namespace

std::string verbalize(Direction direction, const std::string& subject_alias,
                      const std::string& object_alias,
                      const PromptTemplate& prompt_template) {
    const bool forward = direction == Direction::FORWARD;
    return substitute(prompt_template.body_template,
                      forward ? subject_alias : object_alias,
                      forward ? object_alias : subject_alias);
}

PromptBatch expand_variants(const Triple& triple, Direction direction,
                            const PromptTemplate& prompt_template,
                            const EntityTable& entities, uint64_t seed,
                            size_t cap) {
    const auto aliases_of =
        [&entities](const std::string& id) -> const std::vector<std::string>& {
        const auto it = entities.find(id);
        if (it == entities.end() || it->second.aliases.empty()) {
            throw NoAliasesError("entity " + id + " has no aliases");
        }
        return it->second.aliases;
    };
    const auto& subject_aliases = aliases_of(triple.subject_id);
    const auto& object_aliases = aliases_of(triple.object_id);

    const auto subject_pick =
        sample_alias_indices(triple.subject_id, subject_aliases.size(), seed, cap);
    const auto object_pick =
        sample_alias_indices(triple.object_id, object_aliases.size(), seed, cap);

    PromptBatch batch;
    batch.triple = triple;
    batch.direction = direction;
    batch.kind = prompt_template.kind;
    batch.seed = seed;
    batch.variants.reserve(subject_pick.size() * object_pick.size());
    for (const size_t si : subject_pick) {
        for (const size_t oi : object_pick) {
            PromptVariant variant;
            variant.subject_alias = subject_aliases[si];
            variant.object_alias = object_aliases[oi];
            variant.prompt = verbalize(direction, variant.subject_alias,
                                       variant.object_alias, prompt_template);
            batch.variants.push_back(std::move(variant));
        }
    }
    return batch;
}

void write_prompts_jsonl(const std::vector<PromptBatch>& batches,
                         const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write prompt dump " + path.string());
    for (const PromptBatch& batch : batches) {
        for (const PromptVariant& variant : batch.variants) {
            const nlohmann::json row = {
                {"subject_id", batch.triple.subject_id},
                {"object_id", batch.triple.object_id},
                {"relation_id", batch.triple.relation_id},
                {"direction", direction_label(batch.direction)},
                {"template", template_kind_label(batch.kind)},
                {"seed", batch.seed},
                {"subject_alias", variant.subject_alias},
                {"object_alias", variant.object_alias},
                {"prompt", variant.prompt},
            };
            out << row.dump() << '\n';
        }
    }
    out.flush();
    if (!out) throw IoError("write failed for prompt dump " + path.string());
}

} // namespace fprobe
