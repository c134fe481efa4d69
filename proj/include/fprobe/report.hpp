#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fprobe/prompt_builder.hpp"
#include "fprobe/stats.hpp"
#include "fprobe/triple_store.hpp"

namespace fprobe {

// Human band labels as used in report rows: "0-1K", "1K-10K", "10K-100K",
// and the high band's threshold form.
std::string_view band_display(FrequencyBand band);

// Diff column marker: the sign of forward minus backward accuracy, printed
// even for non-significant rows; exact equality prints "=".
std::string_view diff_marker(double forward_acc, double backward_acc);

// One (setting, relation, low band, template) cell ready for rendering.
struct CellSummary {
    Setting setting = Setting::HIGH_TO_HIGH;
    std::optional<FrequencyBand> low_band; // empty for HIGH_TO_HIGH
    std::string relation_id;
    std::string relation_name; // display name; relation_id when unknown
    TemplateKind kind = TemplateKind::QUESTION;
    size_t total = 0;
    bool underpowered = true;
    double forward_accuracy = 0.0;  // 0 when total == 0
    double backward_accuracy = 0.0; // 0 when total == 0
    McNemarResult test;
};

// Accuracies plus McNemar's test for one probed cell. An empty cell yields
// zero accuracies and an undefined test; it still renders, flagged
// underpowered, rather than failing the report.
CellSummary summarize_cell(Setting setting,
                           std::optional<FrequencyBand> low_band,
                           const std::string& relation_id,
                           const std::string& relation_name, TemplateKind kind,
                           const std::vector<PairedOutcome>& pairs);

// Aligned-text table with columns Relation, Low Freq., Total, then
// Forward / Backward / Diff / Stat Sig. per template kind present, grouped
// into High-to-Low, Low-to-High, and High-to-High blocks. Rows follow
// setting order, then each relation's first appearance in `cells`, then
// band order. Footnote markers flag underpowered cells and cells whose
// test is undefined for lack of discordant pairs.
//
// Throws ConfigError when two cells collide on (setting, relation, band,
// kind) or when template blocks of one row disagree on the cell size.
std::string render_asymmetry_table(const std::vector<CellSummary>& cells);

// The same rows as CSV: setting, relation, low_freq, total, underpowered,
// then forward/backward/diff/stat_sig/chi_square/p_value/defined per
// template kind. Fields of an absent template block stay empty.
void write_asymmetry_csv(const std::vector<CellSummary>& cells,
                         const std::filesystem::path& path);

// Long-form forward/backward accuracy ratios, one row per cell: relation,
// template, low_freq, setting, forward, backward, ratio, stat_sig. An
// undefined ratio (backward accuracy 0) prints "undef".
void write_ratio_csv(const std::vector<CellSummary>& cells,
                     const std::filesystem::path& path);

// One-line rendering of a frequency-correlation result.
std::string render_correlation(const CorrelationReport& report);

void write_correlation_csv(const CorrelationReport& report,
                           const std::filesystem::path& path);

} // namespace fprobe
