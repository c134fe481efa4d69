#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace fprobe {

// Recognition outcome of one fact probed in both directions.
struct PairedOutcome {
    bool forward_recognized = false;
    bool backward_recognized = false;
};

struct ContingencyTable {
    uint64_t n_tt = 0; // recognized both ways
    uint64_t n_tf = 0; // forward only
    uint64_t n_ft = 0; // backward only
    uint64_t n_ff = 0; // neither

    uint64_t total() const { return n_tt + n_tf + n_ft + n_ff; }
    uint64_t discordant() const { return n_tf + n_ft; }
};

ContingencyTable tabulate(const std::vector<PairedOutcome>& pairs);

enum class Significance { STARS3, STARS2, STARS1, NS };
enum class AsymmetryDirection { FORWARD_FAVOURED, BACKWARD_FAVOURED, TIE };

// "***", "**", "*", or "NS".
std::string_view significance_label(Significance significance);
Significance significance_of(double p_value);

struct McNemarResult {
    double chi_square = 0.0;
    double p_value = 1.0;
    Significance significance = Significance::NS;
    AsymmetryDirection direction = AsymmetryDirection::TIE;
    // False when there were no discordant pairs: the statistic is 0/0 and
    // the row is reported as NS/TIE rather than as a number.
    bool defined = false;
};

// chi^2 = (n_tf - n_ft)^2 / (n_tf + n_ft), no continuity correction.
// p is the 1-dof chi-squared survival function, erfc(sqrt(chi^2 / 2)),
// accurate to well under 1e-12 absolutely.
McNemarResult mcnemar(const ContingencyTable& table);

// 1-dof chi-squared survival probability; exposed for the report and the
// numerical-integration cross-check.
double chi_squared_survival_1dof(double chi_square);

// forward = (n_tt + n_tf) / total, backward = (n_tt + n_ft) / total.
// Throws EmptyInputError on an empty table.
std::pair<double, double> accuracies(const ContingencyTable& table);
std::pair<double, double> accuracies(const std::vector<PairedOutcome>& pairs);

// forward / backward; empty when backward is 0 (printed as "undef", never
// as a number).
std::optional<double> accuracy_ratio(double forward_acc, double backward_acc);

struct CorrelationReport {
    double pearson_r = 0.0;
    double spearman_rho = 0.0;
    size_t n = 0;
    static constexpr std::string_view transform = "log(x+1)";
};

// Pearson and Spearman over log(x+1)-transformed count pairs. Spearman is
// Pearson on mean ranks (ties share their average rank). Throws
// EmptyInputError for n < 2 and DegenerateVarianceError when either
// coordinate is constant.
CorrelationReport log1p_correlations(
    const std::vector<std::pair<uint64_t, uint64_t>>& counts);

// Mean ranks, 1-based; ties receive the average of their positions.
std::vector<double> average_ranks(const std::vector<double>& values);

} // namespace fprobe
