#pragma once

#include "edgesel/channel.hpp"
#include "edgesel/conformal.hpp"
#include "edgesel/dataset.hpp"

#include <cstddef>
#include <vector>

namespace edgesel {

/// Uplink and downlink payload sizes (bits) over the unlabeled calibration
/// set, each sorted independently in non-decreasing order.
struct SizeOrderStats {
    std::vector<double> sorted_ul;
    std::vector<double> sorted_dl;

    std::size_t size() const { return sorted_ul.size(); }
    /// n-th smallest uplink size, 1-based.
    double ul(std::size_t n) const { return sorted_ul[n - 1]; }
    double dl(std::size_t m) const { return sorted_dl[m - 1]; }
};

/// Sorts both vectors; they must have equal, non-zero length.
SizeOrderStats make_order_stats(std::vector<double> ul_sizes, std::vector<double> dl_sizes);

/// Downlink sizes are |prediction set at lambda| * d_lbl for each sample of `unlabeled`.
SizeOrderStats order_stats(const ScoreDataset& unlabeled, const CalibratedModel& calibrated, double d_lbl_bits);

/// min over (n, m) of 1 - success(n, m) * coverage(n, m), clamped to [0, 1].
/// n_star and m_star are 1-based; both are 0 when no pair beats the trivial bound 1.
struct BoundResult {
    double value = 1.0;
    std::size_t n_star = 0;
    std::size_t m_star = 0;
};

enum class GridMode {
    exact,    ///< every (n, m) pair, with exact dominance pruning
    subgrid,  ///< geometric indices plus the top indices on each axis
};

struct GridOptions {
    GridMode mode = GridMode::exact;
    std::size_t geometric_points = 200;
    std::size_t top_points = 200;
};

/// Ascending 1-based indices scanned per axis in subgrid mode.
std::vector<std::size_t> subgrid_indices(std::size_t n_u, const GridOptions& grid);

/// (n + m) / (n_u + 1) - 1; may be negative. Throws std::out_of_range unless 1 <= n, m <= n_u.
double joint_size_lb(std::size_t n, std::size_t m, std::size_t n_u);

/// ln of the marginal success lower bound:
/// (1/SNR_ul + 1/SNR_dl) * (1 - 2^((d_ul + d_dl) / (B (T - tau_ul - tau_f)))).
double marginal_exponent(double d_ul, double d_dl, double tau_ul, double tau_f, const ChannelConfig& config);

/// Lower bound on P(deadline met | payload sizes). Throws InfeasibleTiming when
/// the computation times leave no transmission time for a positive payload.
double success_lb_marginal(double d_ul, double d_dl, double tau_ul, double tau_f, const ChannelConfig& config);

/// ln of the success bound given the uplink rate:
/// (1/SNR_dl) * (1 - 2^(d_dl / (B (T - tau_ul - tau_f - d_ul / rate_ul)))); -inf when no time remains.
double conditional_exponent(double d_ul, double d_dl, double tau_ul, double tau_f, double rate_ul,
                            const ChannelConfig& config);

/// Lower bound on P(deadline met | payload sizes, uplink rate); 0 when the
/// uplink alone already uses up the frame.
double success_lb_conditional(double d_ul, double d_dl, double tau_ul, double tau_f, double rate_ul,
                              const ChannelConfig& config);

/// Upper bound on P(T_total > T) for one composite model from channel statistics.
/// Any scanned subset of pairs still yields a valid bound; subgrid mode only loses tightness.
BoundResult violation_bound_marginal(const SizeOrderStats& stats, double tau_ul, double tau_f,
                                     const ChannelConfig& config, const GridOptions& grid = {});

/// Upper bound on P(T_total > T | uplink rate). rate_ul must be positive.
BoundResult violation_bound_conditional(const SizeOrderStats& stats, double tau_ul, double tau_f, double rate_ul,
                                        const ChannelConfig& config, const GridOptions& grid = {});

}  // namespace edgesel
