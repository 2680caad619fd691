#include "edgesel/bounds.hpp"

#include "edgesel/error.hpp"
#include "edgesel/io.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace edgesel {

SizeOrderStats make_order_stats(std::vector<double> ul_sizes, std::vector<double> dl_sizes)
{
    if (ul_sizes.empty() || ul_sizes.size() != dl_sizes.size()) {
        throw std::invalid_argument("order statistics need equally long, non-empty size vectors");
    }
    std::sort(ul_sizes.begin(), ul_sizes.end());
    std::sort(dl_sizes.begin(), dl_sizes.end());
    return {std::move(ul_sizes), std::move(dl_sizes)};
}

SizeOrderStats order_stats(const ScoreDataset& unlabeled, const CalibratedModel& calibrated, double d_lbl_bits)
{
    const std::size_t n = unlabeled.size();
    if (n == 0) {
        throw std::invalid_argument("order_stats: unlabeled calibration set is empty");
    }
    const auto& scores = unlabeled.score_matrix(calibrated.encoder, calibrated.model);
    std::vector<double> dl(n);
    for (std::size_t i = 0; i < n; ++i) {
        dl[i] = static_cast<double>(prediction_set_size(scores.row(i), calibrated.lambda)) * d_lbl_bits;
    }
    return make_order_stats(unlabeled.ul_sizes[calibrated.encoder], std::move(dl));
}

std::vector<std::size_t> subgrid_indices(std::size_t n_u, const GridOptions& grid)
{
    std::vector<std::size_t> idx;
    if (n_u == 0) {
        return idx;
    }
    const std::size_t top = std::min(grid.top_points, n_u);
    for (std::size_t i = n_u - top + 1; i <= n_u; ++i) {
        idx.push_back(i);
    }
    if (grid.geometric_points >= 2) {
        const double log_n = std::log(static_cast<double>(n_u));
        const double steps = static_cast<double>(grid.geometric_points - 1);
        for (std::size_t i = 0; i < grid.geometric_points; ++i) {
            const double v = std::exp(log_n * static_cast<double>(i) / steps);
            idx.push_back(std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(v)), 1, n_u));
        }
    }
    idx.push_back(n_u);
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
}

double joint_size_lb(std::size_t n, std::size_t m, std::size_t n_u)
{
    if (n < 1 || m < 1 || n > n_u || m > n_u) {
        throw std::out_of_range("joint_size_lb: indices must lie in [1, n_u]");
    }
    return static_cast<double>(n + m) / static_cast<double>(n_u + 1) - 1.0;
}

double marginal_exponent(double d_ul, double d_dl, double tau_ul, double tau_f, const ChannelConfig& config)
{
    const double remaining = config.deadline_s - tau_ul - tau_f;
    const double payload = d_ul + d_dl;
    if (payload <= 0.0) {
        return 0.0;
    }
    if (remaining <= 0.0) {
        return -HUGE_VAL;
    }
    const double scale = 1.0 / config.snr_ul + 1.0 / config.snr_dl;
    return scale * (1.0 - std::exp2(payload / (config.bandwidth_hz * remaining)));
}

double success_lb_marginal(double d_ul, double d_dl, double tau_ul, double tau_f, const ChannelConfig& config)
{
    const double remaining = config.deadline_s - tau_ul - tau_f;
    if (remaining < 0.0 || (remaining == 0.0 && d_ul + d_dl > 0.0)) {
        throw InfeasibleTiming("computation time " + io::format_double(tau_ul + tau_f, 6) +
                               " s leaves no transmission time within the deadline " +
                               io::format_double(config.deadline_s, 6) + " s");
    }
    return std::exp(marginal_exponent(d_ul, d_dl, tau_ul, tau_f, config));
}

double conditional_exponent(double d_ul, double d_dl, double tau_ul, double tau_f, double rate_ul,
                            const ChannelConfig& config)
{
    if (!(rate_ul > 0.0)) {
        throw std::invalid_argument("conditional bound needs a positive uplink rate");
    }
    const double remaining = config.deadline_s - tau_ul - tau_f - d_ul / rate_ul;
    if (!(remaining > 0.0)) {
        return -HUGE_VAL;
    }
    if (d_dl <= 0.0) {
        return 0.0;
    }
    return (1.0 - std::exp2(d_dl / (config.bandwidth_hz * remaining))) / config.snr_dl;
}

double success_lb_conditional(double d_ul, double d_dl, double tau_ul, double tau_f, double rate_ul,
                              const ChannelConfig& config)
{
    return std::exp(conditional_exponent(d_ul, d_dl, tau_ul, tau_f, rate_ul, config));
}

namespace {

/// Descending 1-based indices <= limit at which the sorted value is the last
/// of a run of equal values. Within a run the largest index dominates: same
/// success factor, larger coverage term.
std::vector<std::size_t> run_ends_descending(const std::vector<double>& sorted, std::size_t limit)
{
    std::vector<std::size_t> out;
    for (std::size_t i = limit; i >= 1; --i) {
        if (i == sorted.size() || sorted[i - 1] < sorted[i] || i == limit) {
            out.push_back(i);
        }
    }
    return out;
}

template <typename Success>
BoundResult minimize_bound(const SizeOrderStats& stats, std::size_t n_limit, const GridOptions& grid,
                           Success success)
{
    const std::size_t n_u = stats.size();
    BoundResult best;
    if (n_limit == 0) {
        return best;
    }

    std::vector<std::size_t> ns;
    std::vector<std::size_t> ms;
    if (grid.mode == GridMode::exact) {
        ns = run_ends_descending(stats.sorted_ul, n_limit);
        ms = run_ends_descending(stats.sorted_dl, n_u);
    } else {
        const auto sub = subgrid_indices(n_u, grid);
        for (auto it = sub.rbegin(); it != sub.rend(); ++it) {
            ms.push_back(*it);
            if (*it <= n_limit) {
                ns.push_back(*it);
            }
        }
    }
    if (ns.empty()) {
        return best;
    }

    // Success never increases with n or m, so success(1, m) caps every pair
    // in row m and success(1, 1) caps every remaining row. Coverage shrinks as
    // n and m decrease, so a pair cannot win once 1 - cap * coverage reaches
    // the incumbent.
    const double global_cap = success(1, 1);
    for (const std::size_t m : ms) {
        if (1.0 - global_cap * joint_size_lb(ns.front(), m, n_u) >= best.value) {
            break;
        }
        const double row_cap = success(1, m);
        for (const std::size_t n : ns) {
            const double coverage = joint_size_lb(n, m, n_u);
            if (1.0 - row_cap * coverage >= best.value) {
                break;
            }
            const double value = 1.0 - success(n, m) * coverage;
            if (value < best.value) {
                best = {value, n, m};
            }
        }
    }
    best.value = std::clamp(best.value, 0.0, 1.0);
    return best;
}

}  // namespace

BoundResult violation_bound_marginal(const SizeOrderStats& stats, double tau_ul, double tau_f,
                                     const ChannelConfig& config, const GridOptions& grid)
{
    if (stats.size() == 0) {
        throw std::invalid_argument("violation bound: empty order statistics");
    }
    const double remaining = config.deadline_s - tau_ul - tau_f;
    const bool zero_payload = stats.sorted_ul.back() <= 0.0 && stats.sorted_dl.back() <= 0.0;
    if (remaining < 0.0 || (remaining == 0.0 && !zero_payload)) {
        throw InfeasibleTiming("computation time " + io::format_double(tau_ul + tau_f, 6) +
                               " s exhausts the deadline " + io::format_double(config.deadline_s, 6) + " s");
    }
    return minimize_bound(stats, stats.size(), grid, [&](std::size_t n, std::size_t m) {
        return success_lb_marginal(stats.ul(n), stats.dl(m), tau_ul, tau_f, config);
    });
}

BoundResult violation_bound_conditional(const SizeOrderStats& stats, double tau_ul, double tau_f, double rate_ul,
                                        const ChannelConfig& config, const GridOptions& grid)
{
    if (stats.size() == 0) {
        throw std::invalid_argument("violation bound: empty order statistics");
    }
    if (!(rate_ul > 0.0)) {
        throw std::invalid_argument("conditional bound needs a positive uplink rate");
    }
    // Largest n whose uplink leaves time for the downlink; larger n give success 0.
    const auto feasible_end = std::partition_point(stats.sorted_ul.begin(), stats.sorted_ul.end(), [&](double d) {
        return config.deadline_s - tau_ul - tau_f - d / rate_ul > 0.0;
    });
    const auto n_limit = static_cast<std::size_t>(feasible_end - stats.sorted_ul.begin());
    return minimize_bound(stats, n_limit, grid, [&](std::size_t n, std::size_t m) {
        return success_lb_conditional(stats.ul(n), stats.dl(m), tau_ul, tau_f, rate_ul, config);
    });
}

}  // namespace edgesel
