#include "fprobe/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include "fprobe/errors.hpp"

namespace fprobe {

std::string_view band_display(FrequencyBand band) {
    switch (band) {
        case FrequencyBand::B0_1K: return "0-1K";
        case FrequencyBand::B1K_10K: return "1K-10K";
        case FrequencyBand::B10K_100K: return "10K-100K";
        case FrequencyBand::HIGH: return "≥100K";
    }
    return "?";
}

std::string_view diff_marker(double forward_acc, double backward_acc) {
    if (forward_acc > backward_acc) return "↑";
    if (forward_acc < backward_acc) return "↓";
    return "=";
}

CellSummary summarize_cell(Setting setting,
                           std::optional<FrequencyBand> low_band,
                           const std::string& relation_id,
                           const std::string& relation_name, TemplateKind kind,
                           const std::vector<PairedOutcome>& pairs) {
    CellSummary cell;
    cell.setting = setting;
    cell.low_band = low_band;
    cell.relation_id = relation_id;
    cell.relation_name = relation_name.empty() ? relation_id : relation_name;
    cell.kind = kind;
    cell.total = pairs.size();
    cell.underpowered = pairs.size() < kMinCellSize;
    const ContingencyTable table = tabulate(pairs);
    if (!pairs.empty()) {
        std::tie(cell.forward_accuracy, cell.backward_accuracy) =
            accuracies(table);
    }
    cell.test = mcnemar(table);
    return cell;
}

namespace {

// Footnote markers used in the text table.
constexpr std::string_view kUnderpoweredMark = "!";
constexpr std::string_view kUndefinedMark = "†"; // dagger

size_t setting_rank(Setting setting) {
    switch (setting) {
        case Setting::HIGH_TO_LOW: return 0;
        case Setting::LOW_TO_HIGH: return 1;
        case Setting::HIGH_TO_HIGH: return 2;
    }
    return 3;
}

size_t band_rank(const std::optional<FrequencyBand>& band) {
    if (!band) return 3; // HIGH_TO_HIGH rows carry no low band
    return static_cast<size_t>(*band);
}

size_t kind_slot(TemplateKind kind) {
    return kind == TemplateKind::QUESTION ? 0 : 1;
}

// One output row: a (setting, relation, band) cell group holding up to one
// summary per template kind.
struct Row {
    Setting setting = Setting::HIGH_TO_HIGH;
    std::optional<FrequencyBand> band;
    std::string relation_id;
    std::string relation_name;
    size_t relation_order = 0;
    const CellSummary* by_kind[2] = {nullptr, nullptr};

    size_t total() const {
        for (const CellSummary* cell : by_kind) {
            if (cell) return cell->total;
        }
        return 0;
    }
    bool underpowered() const {
        for (const CellSummary* cell : by_kind) {
            if (cell) return cell->underpowered;
        }
        return true;
    }
};

std::vector<Row> group_rows(const std::vector<CellSummary>& cells) {
    std::vector<Row> rows;
    std::map<std::string, size_t> relation_order;
    for (const CellSummary& cell : cells) {
        relation_order.emplace(cell.relation_id, relation_order.size());

        Row* row = nullptr;
        for (Row& candidate : rows) {
            if (candidate.setting == cell.setting &&
                candidate.band == cell.low_band &&
                candidate.relation_id == cell.relation_id) {
                row = &candidate;
                break;
            }
        }
        if (!row) {
            rows.push_back({cell.setting, cell.low_band, cell.relation_id,
                            cell.relation_name,
                            relation_order[cell.relation_id],
                            {nullptr, nullptr}});
            row = &rows.back();
        }
        const size_t slot = kind_slot(cell.kind);
        if (row->by_kind[slot]) {
            throw ConfigError("duplicate report cell for relation " +
                              cell.relation_id);
        }
        row->by_kind[slot] = &cell;
    }

    for (const Row& row : rows) {
        const CellSummary* q = row.by_kind[0];
        const CellSummary* s = row.by_kind[1];
        if (q && s && q->total != s->total) {
            throw ConfigError(
                "template blocks disagree on the cell size for relation " +
                row.relation_id + "; refusing to report mixed runs");
        }
    }

    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (setting_rank(a.setting) != setting_rank(b.setting)) {
            return setting_rank(a.setting) < setting_rank(b.setting);
        }
        if (a.relation_order != b.relation_order) {
            return a.relation_order < b.relation_order;
        }
        return band_rank(a.band) < band_rank(b.band);
    });
    return rows;
}

std::vector<TemplateKind> kinds_present(const std::vector<CellSummary>& cells) {
    bool present[2] = {false, false};
    for (const CellSummary& cell : cells) present[kind_slot(cell.kind)] = true;
    std::vector<TemplateKind> kinds;
    if (present[0]) kinds.push_back(TemplateKind::QUESTION);
    if (present[1]) kinds.push_back(TemplateKind::STATEMENT);
    return kinds;
}

std::string fmt3(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", value);
    return buf;
}

std::string fmt6(double value) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    return buf;
}

std::string fmtg(double value) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

// Column width in terminal cells. Every character this report emits is
// single-width, so counting code points suffices.
size_t display_width(std::string_view s) {
    size_t width = 0;
    for (const char ch : s) {
        width += (static_cast<unsigned char>(ch) & 0xC0) != 0x80;
    }
    return width;
}

std::string pad_right(std::string s, size_t width) {
    const size_t have = display_width(s);
    if (have < width) s.append(width - have, ' ');
    return s;
}

std::string pad_left(std::string s, size_t width) {
    const size_t have = display_width(s);
    if (have < width) s.insert(0, width - have, ' ');
    return s;
}

std::string center(std::string s, size_t width) {
    const size_t have = display_width(s);
    if (have >= width) return s;
    const size_t left = (width - have) / 2;
    s.insert(0, left, ' ');
    s.append(width - have - left, ' ');
    return s;
}

// The four per-template value columns of one row.
struct BlockCells {
    std::string forward = "-";
    std::string backward = "-";
    std::string diff = "-";
    std::string stat_sig = "-";
};

BlockCells block_cells(const CellSummary* cell) {
    BlockCells out;
    if (!cell || cell->total == 0) return out;
    out.forward = fmt3(cell->forward_accuracy);
    out.backward = fmt3(cell->backward_accuracy);
    out.diff =
        std::string(diff_marker(cell->forward_accuracy, cell->backward_accuracy));
    out.stat_sig = std::string(significance_label(cell->test.significance));
    if (!cell->test.defined) out.stat_sig += kUndefinedMark;
    return out;
}

std::string csv_field(std::string_view value) {
    if (value.find_first_of(",\"\n") == std::string_view::npos) {
        return std::string(value);
    }
    std::string quoted = "\"";
    for (const char ch : value) {
        if (ch == '"') quoted += '"';
        quoted += ch;
    }
    quoted += '"';
    return quoted;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write report file " + path.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for report file " + path.string());
}

} // namespace

std::string render_asymmetry_table(const std::vector<CellSummary>& cells) {
    const std::vector<Row> rows = group_rows(cells);
    const std::vector<TemplateKind> kinds = kinds_present(cells);

    const std::vector<std::string> block_headers = {"Forward", "Backward",
                                                    "Diff", "Stat Sig."};
    size_t width_relation = display_width("Relation");
    size_t width_band = display_width("Low Freq.");
    size_t width_total = display_width("Total");
    std::vector<size_t> block_widths;
    for (const std::string& header : block_headers) {
        block_widths.push_back(display_width(header));
    }

    struct RenderedRow {
        std::string relation;
        std::string band;
        std::string total;
        std::vector<BlockCells> blocks;
    };
    std::vector<RenderedRow> rendered;
    rendered.reserve(rows.size());
    bool any_underpowered = false;
    bool any_undefined = false;
    for (const Row& row : rows) {
        RenderedRow r;
        r.relation = row.relation_name;
        r.band = row.band ? std::string(band_display(*row.band))
                          : std::string(band_display(FrequencyBand::HIGH));
        r.total = std::to_string(row.total());
        if (row.underpowered()) {
            r.total += kUnderpoweredMark;
            any_underpowered = true;
        }
        for (const TemplateKind kind : kinds) {
            const CellSummary* cell = row.by_kind[kind_slot(kind)];
            r.blocks.push_back(block_cells(cell));
            if (cell && cell->total > 0 && !cell->test.defined) {
                any_undefined = true;
            }
        }
        width_relation = std::max(width_relation, display_width(r.relation));
        width_band = std::max(width_band, display_width(r.band));
        width_total = std::max(width_total, display_width(r.total));
        for (const BlockCells& b : r.blocks) {
            block_widths[0] = std::max(block_widths[0], display_width(b.forward));
            block_widths[1] = std::max(block_widths[1], display_width(b.backward));
            block_widths[2] = std::max(block_widths[2], display_width(b.diff));
            block_widths[3] = std::max(block_widths[3], display_width(b.stat_sig));
        }
        rendered.push_back(std::move(r));
    }

    const std::string gap = "  ";
    const std::string block_gap = "    ";
    const size_t block_span = block_widths[0] + block_widths[1] +
                              block_widths[2] + block_widths[3] +
                              3 * gap.size();
    const size_t id_span =
        width_relation + width_band + width_total + 2 * gap.size();

    std::string out;

    // Template banner above the value blocks, when any block exists.
    if (!kinds.empty()) {
        std::string banner(id_span, ' ');
        for (const TemplateKind kind : kinds) {
            const std::string name = kind == TemplateKind::QUESTION
                                         ? "Question Template"
                                         : "Statement Template";
            banner += block_gap + center(name, block_span);
        }
        while (!banner.empty() && banner.back() == ' ') banner.pop_back();
        out += banner + '\n';
    }

    std::string header = pad_right("Relation", width_relation) + gap +
                         pad_right("Low Freq.", width_band) + gap +
                         pad_left("Total", width_total);
    for (size_t k = 0; k < kinds.size(); ++k) {
        header += block_gap + pad_left(block_headers[0], block_widths[0]) +
                  gap + pad_left(block_headers[1], block_widths[1]) + gap +
                  pad_left(block_headers[2], block_widths[2]) + gap +
                  pad_right(block_headers[3], block_widths[3]);
    }
    while (!header.empty() && header.back() == ' ') header.pop_back();
    const size_t ruler_width =
        id_span + kinds.size() * (block_gap.size() + block_span);
    out += header + '\n';
    out += std::string(ruler_width, '-') + '\n';

    Setting current = Setting::HIGH_TO_HIGH;
    bool first_group = true;
    for (size_t i = 0; i < rows.size(); ++i) {
        if (first_group || rows[i].setting != current) {
            if (!first_group) out += '\n';
            current = rows[i].setting;
            first_group = false;
            out += "== " + std::string(setting_display(current)) + " ==\n";
        }
        const RenderedRow& r = rendered[i];
        std::string line = pad_right(r.relation, width_relation) + gap +
                           pad_right(r.band, width_band) + gap +
                           pad_left(r.total, width_total);
        for (const BlockCells& b : r.blocks) {
            line += block_gap + pad_left(b.forward, block_widths[0]) + gap +
                    pad_left(b.backward, block_widths[1]) + gap +
                    pad_left(b.diff, block_widths[2]) + gap +
                    pad_right(b.stat_sig, block_widths[3]);
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + '\n';
    }

    if (any_underpowered || any_undefined) {
        out += '\n';
        if (any_underpowered) {
            out += std::string(kUnderpoweredMark) + " fewer than " +
                   std::to_string(kMinCellSize) +
                   " pairs; statistics underpowered\n";
        }
        if (any_undefined) {
            out += std::string(kUndefinedMark) +
                   " no discordant pairs; McNemar's test is undefined and p "
                   "is fixed at 1\n";
        }
    }
    return out;
}

void write_asymmetry_csv(const std::vector<CellSummary>& cells,
                         const std::filesystem::path& path) {
    const std::vector<Row> rows = group_rows(cells);
    const std::vector<TemplateKind> kinds = kinds_present(cells);

    std::string out = "setting,relation,low_freq,total,underpowered";
    for (const TemplateKind kind : kinds) {
        const std::string prefix(template_kind_label(kind));
        for (const char* column :
             {"forward", "backward", "diff", "stat_sig", "chi_square",
              "p_value", "defined"}) {
            out += ',' + prefix + '_' + column;
        }
    }
    out += '\n';

    for (const Row& row : rows) {
        out += csv_field(setting_label(row.setting));
        out += ',' + csv_field(row.relation_name);
        out += ',' + csv_field(row.band
                                   ? band_display(*row.band)
                                   : band_display(FrequencyBand::HIGH));
        out += ',' + std::to_string(row.total());
        out += row.underpowered() ? ",true" : ",false";
        for (const TemplateKind kind : kinds) {
            const CellSummary* cell = row.by_kind[kind_slot(kind)];
            if (!cell || cell->total == 0) {
                out += ",,,,,,,";
                continue;
            }
            out += ',' + fmt6(cell->forward_accuracy);
            out += ',' + fmt6(cell->backward_accuracy);
            out += ',' + csv_field(diff_marker(cell->forward_accuracy,
                                               cell->backward_accuracy));
            out += ',' +
                   csv_field(significance_label(cell->test.significance));
            out += ',' + fmt6(cell->test.chi_square);
            out += ',' + fmtg(cell->test.p_value);
            out += cell->test.defined ? ",true" : ",false";
        }
        out += '\n';
    }
    write_text_file(path, out);
}

void write_ratio_csv(const std::vector<CellSummary>& cells,
                     const std::filesystem::path& path) {
    const std::vector<Row> rows = group_rows(cells);
    const std::vector<TemplateKind> kinds = kinds_present(cells);

    std::string out =
        "relation,template,low_freq,setting,forward,backward,ratio,stat_sig\n";
    for (const Row& row : rows) {
        for (const TemplateKind kind : kinds) {
            const CellSummary* cell = row.by_kind[kind_slot(kind)];
            if (!cell || cell->total == 0) continue;
            out += csv_field(row.relation_name);
            out += ',' + std::string(template_kind_label(kind));
            out += ',' + csv_field(row.band
                                       ? band_display(*row.band)
                                       : band_display(FrequencyBand::HIGH));
            out += ',' + std::string(setting_label(row.setting));
            out += ',' + fmt6(cell->forward_accuracy);
            out += ',' + fmt6(cell->backward_accuracy);
            const auto ratio = accuracy_ratio(cell->forward_accuracy,
                                              cell->backward_accuracy);
            out += ',' + (ratio ? fmt6(*ratio) : std::string("undef"));
            out += ',' +
                   csv_field(significance_label(cell->test.significance));
            out += '\n';
        }
    }
    write_text_file(path, out);
}

std::string render_correlation(const CorrelationReport& report) {
    return "Pearson r=" + fmt3(report.pearson_r) +
           ", Spearman rho=" + fmt3(report.spearman_rho) + " on " +
           std::string(CorrelationReport::transform) +
           "-transformed counts (n=" + std::to_string(report.n) + ")";
}

void write_correlation_csv(const CorrelationReport& report,
                           const std::filesystem::path& path) {
    std::string out = "pearson_r,spearman_rho,n,transform\n";
    out += fmt6(report.pearson_r) + ',' + fmt6(report.spearman_rho) + ',' +
           std::to_string(report.n) + ',' +
           std::string(CorrelationReport::transform) + '\n';
    write_text_file(path, out);
}

} // namespace fprobe
