#pragma once

#include "edgesel/bounds.hpp"
#include "edgesel/channel.hpp"
#include "edgesel/conformal.hpp"
#include "edgesel/dataset.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace edgesel {

/// Offline state of one composite model: its threshold, payload order
/// statistics and mean prediction-set size over the unlabeled set.
struct CandidateModel {
    std::size_t encoder = 0;
    std::size_t model = 0;
    std::optional<CalibratedModel> calibration;  ///< empty when calibration is infeasible
    SizeOrderStats stats;
    double mean_set_size = 0.0;                  ///< +inf when calibration is infeasible
    std::string diagnostic;
};

/// Calibrations and order statistics for every (l, k). None of it depends on
/// the channel, so it is built once and reused across SNRs and frames.
class ModelCatalog {
public:
    static ModelCatalog build(const ModelBank& bank, const ScoreDataset& labeled, const ScoreDataset& unlabeled,
                              const LossFunction& loss, double alpha, double beta);

    const ModelBank& bank() const { return bank_; }
    const LossFunction& loss() const { return loss_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    double epsilon() const { return epsilon_; }
    const std::vector<CandidateModel>& candidates() const { return candidates_; }
    const CandidateModel& at(std::size_t encoder, std::size_t model) const
    {
        return candidates_[bank_.combination_index(encoder, model)];
    }

private:
    ModelBank bank_;
    LossFunction loss_;
    double alpha_ = 0.0;
    double beta_ = 0.0;
    double epsilon_ = 0.0;
    std::vector<CandidateModel> candidates_;
};

struct SelectionOutcome {
    std::size_t encoder = 0;
    std::size_t model = 0;
    double lambda = 0.0;
    double set_size = 0.0;  ///< mean prediction-set size over the unlabeled set
    double bound = 1.0;     ///< violation-probability bound
    bool feasible = false;  ///< bound <= beta
};

enum class CandidateStatus { ok, timing_infeasible, calibration_infeasible };

/// One row of the selection trace; the acceptance rule runs over these.
struct CandidateScore {
    std::size_t encoder = 0;
    std::size_t model = 0;
    double bound = 1.0;
    double set_size = 0.0;
    CandidateStatus status = CandidateStatus::ok;
};

/// The incumbent is replaced when the candidate meets beta with a strictly
/// smaller set, or when the incumbent misses beta and the candidate has a
/// strictly smaller bound.
bool replaces_incumbent(double bound, double set_size, double best_bound, double best_set_size, double beta);

/// Applies the acceptance rule over `scores` in order, skipping
/// calibration-infeasible rows. Returns the index of the winner, or nothing
/// when every row is calibration-infeasible.
std::optional<std::size_t> select_best(std::span<const CandidateScore> scores, double beta);

/// Marginal bounds of every composite model at the given channel statistics,
/// l-major then k ascending.
std::vector<CandidateScore> score_fixed(const ModelCatalog& catalog, const ChannelConfig& config,
                                        const GridOptions& grid = {});

/// Offline choice of one (l, k) from channel statistics.
/// Throws InfeasibleCalibration when no composite model could be calibrated.
SelectionOutcome fixed_select(const ModelCatalog& catalog, const ChannelConfig& config,
                              const GridOptions& grid = {});

SelectionOutcome fixed_select(const ModelBank& bank, const ScoreDataset& labeled, const ScoreDataset& unlabeled,
                              const LossFunction& loss, double alpha, double beta, const ChannelConfig& config,
                              const GridOptions& grid = {});

/// Conditional bounds of the encoder's K models at the observed uplink rate.
std::vector<CandidateScore> score_dynamic(std::size_t encoder, const ModelCatalog& catalog,
                                          const ChannelConfig& config, double rate_ul,
                                          const GridOptions& grid = {});

/// Per-frame choice of the inference model for a fixed encoder given the
/// instantaneous uplink rate. Throws std::invalid_argument unless rate_ul > 0.
SelectionOutcome dynamic_select(std::size_t encoder, const ModelCatalog& catalog, const ChannelConfig& config,
                                double rate_ul, const GridOptions& grid = {});

/// max(1, floor(rate_dl * (T - tau_ul - tau_f - t_ul) / d_lbl)), where t_ul is
/// the time already spent on the uplink beyond tau_ul.
std::size_t truncation_cap(double rate_dl, double deadline_s, double tau_ul, double tau_f, double t_ul,
                           double d_lbl_bits);

/// Labels of the threshold set that are also among the `cap` highest scores
/// (ties by lower index), ascending.
std::vector<std::size_t> truncated_set(std::span<const double> scores, double lambda, std::size_t cap);

/// The loss itself when the deadline is met, gamma otherwise.
double relaxed_loss(double base_loss, bool met_deadline, double gamma);

/// (1 - beta) * alpha + beta * gamma
double relaxed_risk_level(double alpha, double beta, double gamma);

std::string selection_json(const SelectionOutcome& outcome, const ModelBank& bank);

}  // namespace edgesel
