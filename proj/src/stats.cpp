#include "fprobe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fprobe/errors.hpp"

namespace fprobe {

ContingencyTable tabulate(const std::vector<PairedOutcome>& pairs) {
    ContingencyTable table;
    for (const PairedOutcome& pair : pairs) {
        if (pair.forward_recognized && pair.backward_recognized) ++table.n_tt;
        else if (pair.forward_recognized) ++table.n_tf;
        else if (pair.backward_recognized) ++table.n_ft;
        else ++table.n_ff;
    }
    return table;
}

std::string_view significance_label(Significance significance) {
    switch (significance) {
        case Significance::STARS3: return "***";
        case Significance::STARS2: return "**";
        case Significance::STARS1: return "*";
        case Significance::NS: return "NS";
    }
    return "?";
}

Significance significance_of(double p_value) {
    if (p_value < 0.001) return Significance::STARS3;
    if (p_value < 0.01) return Significance::STARS2;
    if (p_value < 0.05) return Significance::STARS1;
    return Significance::NS;
}

double chi_squared_survival_1dof(double chi_square) {
    // For X ~ chi-squared(1), X = Z^2 with Z standard normal, so
    // P(X > x) = P(|Z| > sqrt(x)) = erfc(sqrt(x / 2)).
    return std::erfc(std::sqrt(chi_square / 2.0));
}

McNemarResult mcnemar(const ContingencyTable& table) {
    McNemarResult result;
    if (table.n_tf > table.n_ft) {
        result.direction = AsymmetryDirection::FORWARD_FAVOURED;
    } else if (table.n_tf < table.n_ft) {
        result.direction = AsymmetryDirection::BACKWARD_FAVOURED;
    }

    const uint64_t discordant = table.discordant();
    if (discordant == 0) {
        return result; // defined=false, p=1, NS, TIE
    }
    const double diff = static_cast<double>(table.n_tf) -
                        static_cast<double>(table.n_ft);
    result.chi_square = diff * diff / static_cast<double>(discordant);
    result.p_value = chi_squared_survival_1dof(result.chi_square);
    result.significance = significance_of(result.p_value);
    result.defined = true;
    return result;
}

std::pair<double, double> accuracies(const ContingencyTable& table) {
    const uint64_t total = table.total();
    if (total == 0) throw EmptyInputError("no paired outcomes to score");
    const double denom = static_cast<double>(total);
    return {static_cast<double>(table.n_tt + table.n_tf) / denom,
            static_cast<double>(table.n_tt + table.n_ft) / denom};
}

std::pair<double, double> accuracies(const std::vector<PairedOutcome>& pairs) {
    return accuracies(tabulate(pairs));
}

std::optional<double> accuracy_ratio(double forward_acc, double backward_acc) {
    if (backward_acc == 0.0) return std::nullopt;
    return forward_acc / backward_acc;
}

std::vector<double> average_ranks(const std::vector<double>& values) {
    const size_t n = values.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&values](size_t a, size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        // Positions i..j (0-based) share the mean of ranks i+1..j+1.
        const double mean_rank = static_cast<double>(i + j) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

namespace {

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    const size_t n = xs.size();
    const double mean_x = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double mean_y = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mean_x;
        const double dy = ys[i] - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw DegenerateVarianceError(
            "correlation undefined: a coordinate is constant");
    }
    return sxy / std::sqrt(sxx * syy);
}

} // namespace

CorrelationReport log1p_correlations(
    const std::vector<std::pair<uint64_t, uint64_t>>& counts) {
    if (counts.size() < 2) {
        throw EmptyInputError("need at least two count pairs");
    }
    std::vector<double> xs, ys;
    xs.reserve(counts.size());
    ys.reserve(counts.size());
    for (const auto& [a, b] : counts) {
        xs.push_back(std::log1p(static_cast<double>(a)));
        ys.push_back(std::log1p(static_cast<double>(b)));
    }
    CorrelationReport report;
    report.n = counts.size();
    report.pearson_r = pearson(xs, ys);
    report.spearman_rho = pearson(average_ranks(xs), average_ranks(ys));
    return report;
}

} // namespace fprobe
