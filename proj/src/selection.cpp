#include "edgesel/selection.hpp"

#include "edgesel/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace edgesel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

ModelCatalog ModelCatalog::build(const ModelBank& bank, const ScoreDataset& labeled, const ScoreDataset& unlabeled,
                                 const LossFunction& loss, double alpha, double beta)
{
    bank.validate();
    labeled.validate(bank);
    unlabeled.validate(bank);
    if (unlabeled.size() == 0) {
        throw std::invalid_argument("unlabeled calibration set is empty");
    }

    ModelCatalog catalog;
    catalog.bank_ = bank;
    catalog.loss_ = loss;
    catalog.alpha_ = alpha;
    catalog.beta_ = beta;
    catalog.epsilon_ = corrected_risk_level(alpha, beta);

    const auto labels = labeled.label_span();
    for (std::size_t l = 0; l < bank.encoder_count(); ++l) {
        for (std::size_t k = 0; k < bank.model_count(); ++k) {
            CandidateModel c;
            c.encoder = l;
            c.model = k;
            try {
                c.calibration = calibrate(labeled.score_matrix(l, k), labels, loss, catalog.epsilon_, l, k);
            } catch (const InfeasibleCalibration& e) {
                c.diagnostic = bank.encoders[l].id + "/" + bank.models[k].id + ": " + e.what();
                c.mean_set_size = kInf;
                catalog.candidates_.push_back(std::move(c));
                continue;
            }
            const auto& scores = unlabeled.score_matrix(l, k);
            std::size_t total = 0;
            for (std::size_t i = 0; i < unlabeled.size(); ++i) {
                total += prediction_set_size(scores.row(i), c.calibration->lambda);
            }
            c.mean_set_size = static_cast<double>(total) / static_cast<double>(unlabeled.size());
            c.stats = order_stats(unlabeled, *c.calibration, bank.d_lbl_bits);
            catalog.candidates_.push_back(std::move(c));
        }
    }
    return catalog;
}

bool replaces_incumbent(double bound, double set_size, double best_bound, double best_set_size, double beta)
{
    return (bound <= beta && set_size < best_set_size) || (best_bound >= beta && bound < best_bound);
}

std::optional<std::size_t> select_best(std::span<const CandidateScore> scores, double beta)
{
    std::optional<std::size_t> best;
    double best_bound = kInf;
    double best_size = kInf;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto& s = scores[i];
        if (s.status == CandidateStatus::calibration_infeasible) {
            continue;
        }
        if (replaces_incumbent(s.bound, s.set_size, best_bound, best_size, beta)) {
            best = i;
            best_bound = s.bound;
            best_size = s.set_size;
        }
    }
    return best;
}

std::vector<CandidateScore> score_fixed(const ModelCatalog& catalog, const ChannelConfig& config,
                                        const GridOptions& grid)
{
    config.validate();
    const auto& bank = catalog.bank();
    std::vector<CandidateScore> out;
    out.reserve(catalog.candidates().size());
    for (const auto& c : catalog.candidates()) {
        CandidateScore s{c.encoder, c.model, 1.0, c.mean_set_size, CandidateStatus::ok};
        const double tau_ul = bank.encoders[c.encoder].tau_ul_s;
        const double tau_f = bank.models[c.model].tau_f_s;
        if (!c.calibration) {
            s.status = CandidateStatus::calibration_infeasible;
        } else if (tau_ul + tau_f >= config.deadline_s) {
            s.status = CandidateStatus::timing_infeasible;
        } else {
            s.bound = violation_bound_marginal(c.stats, tau_ul, tau_f, config, grid).value;
        }
        out.push_back(s);
    }
    return out;
}

namespace {

SelectionOutcome outcome_from(const ModelCatalog& catalog, const CandidateScore& s)
{
    SelectionOutcome o;
    o.encoder = s.encoder;
    o.model = s.model;
    o.lambda = catalog.at(s.encoder, s.model).calibration->lambda;
    o.set_size = s.set_size;
    o.bound = s.bound;
    o.feasible = s.bound <= catalog.beta();
    return o;
}

}  // namespace

SelectionOutcome fixed_select(const ModelCatalog& catalog, const ChannelConfig& config, const GridOptions& grid)
{
    const auto scores = score_fixed(catalog, config, grid);
    const auto best = select_best(scores, catalog.beta());
    if (!best) {
        throw InfeasibleCalibration("no composite model could be calibrated at epsilon = " +
                                    std::to_string(catalog.epsilon()));
    }
    return outcome_from(catalog, scores[*best]);
}

SelectionOutcome fixed_select(const ModelBank& bank, const ScoreDataset& labeled, const ScoreDataset& unlabeled,
                              const LossFunction& loss, double alpha, double beta, const ChannelConfig& config,
                              const GridOptions& grid)
{
    const auto catalog = ModelCatalog::build(bank, labeled, unlabeled, loss, alpha, beta);
    return fixed_select(catalog, config, grid);
}

std::vector<CandidateScore> score_dynamic(std::size_t encoder, const ModelCatalog& catalog,
                                          const ChannelConfig& config, double rate_ul, const GridOptions& grid)
{
    if (!(rate_ul > 0.0)) {
        throw std::invalid_argument("dynamic selection needs a positive uplink rate");
    }
    const auto& bank = catalog.bank();
    if (encoder >= bank.encoder_count()) {
        throw std::out_of_range("dynamic selection: encoder index out of range");
    }
    const double tau_ul = bank.encoders[encoder].tau_ul_s;
    std::vector<CandidateScore> out;
    out.reserve(bank.model_count());
    for (std::size_t k = 0; k < bank.model_count(); ++k) {
        const auto& c = catalog.at(encoder, k);
        CandidateScore s{encoder, k, 1.0, c.mean_set_size, CandidateStatus::ok};
        const double tau_f = bank.models[k].tau_f_s;
        if (!c.calibration) {
            s.status = CandidateStatus::calibration_infeasible;
        } else {
            if (tau_ul + tau_f >= config.deadline_s) {
                s.status = CandidateStatus::timing_infeasible;
            }
            s.bound = violation_bound_conditional(c.stats, tau_ul, tau_f, rate_ul, config, grid).value;
        }
        out.push_back(s);
    }
    return out;
}

SelectionOutcome dynamic_select(std::size_t encoder, const ModelCatalog& catalog, const ChannelConfig& config,
                                double rate_ul, const GridOptions& grid)
{
    const auto scores = score_dynamic(encoder, catalog, config, rate_ul, grid);
    const auto best = select_best(scores, catalog.beta());
    if (!best) {
        throw InfeasibleCalibration("no model could be calibrated for encoder " + catalog.bank().encoders[encoder].id);
    }
    return outcome_from(catalog, scores[*best]);
}

std::size_t truncation_cap(double rate_dl, double deadline_s, double tau_ul, double tau_f, double t_ul,
                           double d_lbl_bits)
{
    const double remaining = deadline_s - tau_ul - tau_f - t_ul;
    if (!(rate_dl > 0.0) || !(remaining > 0.0)) {
        return 1;
    }
    const double labels = std::floor(rate_dl * remaining / d_lbl_bits);
    if (!(labels >= 1.0)) {
        return 1;
    }
    // Caps beyond any realistic label count are clamped to stay representable.
    return static_cast<std::size_t>(std::min(labels, 0x1.0p52));
}

std::vector<std::size_t> truncated_set(std::span<const double> scores, double lambda, std::size_t cap)
{
    if (cap < 1) {
        throw std::invalid_argument("truncation cap must be at least 1");
    }
    auto set = prediction_set(scores, lambda);
    if (set.size() <= cap) {
        return set;
    }
    std::stable_sort(set.begin(), set.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    set.resize(cap);
    std::sort(set.begin(), set.end());
    return set;
}

double relaxed_loss(double base_loss, bool met_deadline, double gamma)
{
    return met_deadline ? base_loss : gamma;
}

double relaxed_risk_level(double alpha, double beta, double gamma)
{
    return (1.0 - beta) * alpha + beta * gamma;
}

std::string selection_json(const SelectionOutcome& outcome, const ModelBank& bank)
{
    nlohmann::ordered_json j;
    j["encoder_id"] = bank.encoders.at(outcome.encoder).id;
    j["model_id"] = bank.models.at(outcome.model).id;
    j["encoder_index"] = outcome.encoder + 1;
    j["model_index"] = outcome.model + 1;
    j["lambda"] = outcome.lambda;
    j["expected_set_size"] = outcome.set_size;
    j["bound"] = outcome.bound;
    j["feasible"] = outcome.feasible;
    return j.dump(2);
}

}  // namespace edgesel
