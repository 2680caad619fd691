// Acceptance suite on the pinned bench-a benchmark. Prints one PASS/FAIL line
// per criterion and exits non-zero when any criterion fails.

#include "edgesel/bounds.hpp"
#include "edgesel/channel.hpp"
#include "edgesel/conformal.hpp"
#include "edgesel/dataset.hpp"
#include "edgesel/error.hpp"
#include "edgesel/evaluator.hpp"
#include "edgesel/experiment.hpp"
#include "edgesel/io.hpp"
#include "edgesel/random.hpp"
#include "edgesel/selection.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace edgesel;

namespace {

// Tolerances and sizes, as the criteria state them.
constexpr double kSeMultiplier = 3.0;       // criteria 1, 6, 7, 8, 10
constexpr double kBoundSeMultiplier = 2.0;  // criteria 3, 4, 9, 10
constexpr double kMeanRiskSlack = 0.005;    // criterion 1, second part
constexpr double kRuntimeC1 = 120.0;
constexpr double kRuntimeC2 = 30.0;
constexpr double kRuntimeC3 = 600.0;

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(double v, int digits = 4)
{
    return io::format_double(v, digits);
}

double binomial_se(double p, std::size_t n)
{
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

std::vector<std::size_t> iota_indices(std::size_t begin, std::size_t end)
{
    std::vector<std::size_t> v(end - begin);
    std::iota(v.begin(), v.end(), begin);
    return v;
}

std::string model_name(const ModelBank& bank, std::size_t l, std::size_t k)
{
    return bank.encoders[l].id + "/" + bank.models[k].id;
}

/// Shared bench-a state: the calibrated catalog at the default config and the
/// default pipeline run, computed once.
struct Bench {
    ExperimentConfig config;
    Experiment experiment;
    std::optional<PipelineResult> pipeline;

    Bench() : experiment(prepare(config)) {}

    const PipelineResult& run()
    {
        if (!pipeline) {
            pipeline = run_pipeline(config, experiment);
        }
        return *pipeline;
    }

    const MetricsReport& report(const std::string& scheme, std::size_t point)
    {
        const auto& r = run();
        for (std::size_t s = 0; s < r.schemes.size(); ++s) {
            if (r.schemes[s].name() == scheme) {
                return r.evaluations[s].reports[point];
            }
        }
        throw std::logic_error("scheme not in the default config: " + scheme);
    }
};

Bench& bench()
{
    static Bench b;
    return b;
}

// 1 ------------------------------------------------------------------------

Outcome conformal_validity()
{
    auto& b = bench();
    const auto& bank = b.experiment.bank;
    const double eps = b.experiment.catalog.epsilon();
    const auto& eval = b.experiment.split.evaluation;
    const LossFunction loss;
    Outcome out;
    std::ostringstream d;

    double worst_margin = -1.0;
    std::string worst;
    for (const auto& c : b.experiment.catalog.candidates()) {
        if (!c.calibration) {
            out.pass = false;
            d << model_name(bank, c.encoder, c.model) << " infeasible; ";
            continue;
        }
        const double risk = empirical_risk(eval.score_matrix(c.encoder, c.model), eval.label_span(), loss,
                                           c.calibration->lambda);
        const double limit = eps + kSeMultiplier * binomial_se(risk, eval.size());
        if (risk > limit) {
            out.pass = false;
        }
        if (risk - limit > worst_margin || worst.empty()) {
            worst_margin = risk - limit;
            worst = model_name(bank, c.encoder, c.model) + " risk " + fmt(risk) + " vs " + fmt(limit);
        }
    }
    d << "held-out closest: " << worst;

    // 20 independent draws of a 500-sample calibration set, 4000 held-out each.
    constexpr std::size_t draws = 20;
    constexpr std::size_t n_cal = 500;
    constexpr std::size_t n_test = 4000;
    std::vector<double> mean_risk(bank.combination_count(), 0.0);
    for (std::size_t r = 0; r < draws; ++r) {
        const auto data =
            generate_synthetic(presets::bench_a_synthetic(derive_seed(0xC1, r)), n_cal + n_test, bank);
        const auto cal = data.subset(iota_indices(0, n_cal));
        const auto test = data.subset(iota_indices(n_cal, n_cal + n_test));
        for (std::size_t l = 0; l < bank.encoder_count(); ++l) {
            for (std::size_t k = 0; k < bank.model_count(); ++k) {
                const auto lam = calibrate(cal.score_matrix(l, k), cal.label_span(), loss, eps).lambda;
                mean_risk[bank.combination_index(l, k)] +=
                    empirical_risk(test.score_matrix(l, k), test.label_span(), loss, lam) / draws;
            }
        }
    }
    const double max_mean = *std::max_element(mean_risk.begin(), mean_risk.end());
    if (max_mean > eps + kMeanRiskSlack) {
        out.pass = false;
    }
    d << "; mean over 20 draws max " << fmt(max_mean) << " vs " << fmt(eps + kMeanRiskSlack);
    out.detail = d.str();
    return out;
}

// 2 ------------------------------------------------------------------------

Outcome calibration_exactness()
{
    Rng rng(0xC2);
    std::size_t mismatches = 0;
    std::size_t infeasible = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(50);
        std::vector<double> values;
        std::vector<double> truth(n);
        for (auto& s : truth) {
            s = rng.uniform() < 0.3 ? std::round(rng.uniform() * 10.0) / 10.0 : rng.uniform();
            values.push_back(s);
            values.push_back(1.0 - s);
        }
        const double eps = 0.01 + 0.5 * rng.uniform();
        const ScoreMatrix m(n, 2, values);
        const std::vector<std::uint32_t> y(n, 0);
        const auto want = oracle::calibrate(truth, eps);
        std::optional<double> got;
        try {
            got = calibrate(m, y, LossFunction{}, eps).lambda;
        } catch (const InfeasibleCalibration&) {
        }
        infeasible += want ? 0 : 1;
        if (got != want) {
            ++mismatches;
        }
    }
    return {mismatches == 0, std::to_string(mismatches) + " mismatches in 200 instances (" +
                                 std::to_string(infeasible) + " infeasible)"};
}

// 3, 4 ---------------------------------------------------------------------

/// Fresh unlabeled draws for the bound-averaging protocol, shared by 3 and 4.
const std::vector<ScoreDataset>& unlabeled_redraws()
{
    static const std::vector<ScoreDataset> sets = [] {
        const auto& bank = bench().experiment.bank;
        std::vector<ScoreDataset> out;
        for (std::size_t r = 0; r < 50; ++r) {
            out.push_back(generate_synthetic(presets::bench_a_synthetic(derive_seed(0xC3, r)), 500, bank));
        }
        return out;
    }();
    return sets;
}

/// Fresh test samples, one per Monte Carlo frame.
const ScoreDataset& mc_samples()
{
    static const ScoreDataset data =
        generate_synthetic(presets::bench_a_synthetic(0xC34), 10000, bench().experiment.bank);
    return data;
}

struct Comparison {
    std::size_t checked = 0;
    std::size_t failed = 0;
    double tightest = 1e300;
    std::string tightest_at;
};

void compare(Comparison& c, double bound, double p, double se, const std::string& at)
{
    ++c.checked;
    const double slack = bound - (p - kBoundSeMultiplier * se);
    if (slack < 0.0) {
        ++c.failed;
    }
    if (slack < c.tightest) {
        c.tightest = slack;
        c.tightest_at = at + " bound " + fmt(bound) + " vs MC " + fmt(p) + " (se " + fmt(se, 2) + ")";
    }
}

Outcome marginal_bound_conservative()
{
    auto& b = bench();
    const auto& bank = b.experiment.bank;
    const auto& redraws = unlabeled_redraws();
    const auto& test = mc_samples();
    Comparison cmp;
    for (double snr_db : {5.0, 15.0, 25.0}) {
        const auto cfg = b.config.channel().with_snr_db(snr_db, snr_db);
        for (const auto& c : b.experiment.catalog.candidates()) {
            const double tau_ul = bank.encoders[c.encoder].tau_ul_s;
            const double tau_f = bank.models[c.model].tau_f_s;
            const double lambda = c.calibration->lambda;
            double bound = 0.0;
            for (const auto& u : redraws) {
                bound += violation_bound_marginal(order_stats(u, *c.calibration, bank.d_lbl_bits), tau_ul, tau_f,
                                                  cfg)
                             .value /
                         static_cast<double>(redraws.size());
            }
            std::size_t violations = 0;
            for (std::size_t f = 0; f < test.size(); ++f) {
                Rng rng(derive_seed(0xC35, f));
                const auto link = sample_link(cfg, rng);
                const auto z = prediction_set_size(test.score_matrix(c.encoder, c.model).row(f), lambda);
                const double t = uplink_time(tau_ul, test.ul_sizes[c.encoder][f], link.rate_ul) +
                                 downlink_time(tau_f, z, bank.d_lbl_bits, link.rate_dl);
                violations += meets_deadline(t, cfg.deadline_s) ? 0 : 1;
            }
            const double p = static_cast<double>(violations) / static_cast<double>(test.size());
            compare(cmp, bound, p, binomial_se(p, test.size()),
                    model_name(bank, c.encoder, c.model) + " @" + fmt(snr_db, 3) + " dB");
        }
    }
    return {cmp.failed == 0, std::to_string(cmp.failed) + "/" + std::to_string(cmp.checked) +
                                 " below MC - 2se; tightest " + cmp.tightest_at};
}

Outcome conditional_bound_conservative()
{
    auto& b = bench();
    const auto& bank = b.experiment.bank;
    const auto& redraws = unlabeled_redraws();
    const auto& test = mc_samples();
    Comparison cmp;
    for (double snr_db : {5.0, 15.0, 25.0}) {
        const auto cfg = b.config.channel().with_snr_db(snr_db, snr_db);
        for (double rate : {1e6, 2e6, 4e6, 8e6, 16e6}) {
            for (const auto& c : b.experiment.catalog.candidates()) {
                const double tau_ul = bank.encoders[c.encoder].tau_ul_s;
                const double tau_f = bank.models[c.model].tau_f_s;
                const double lambda = c.calibration->lambda;
                double bound = 0.0;
                for (const auto& u : redraws) {
                    bound += violation_bound_conditional(order_stats(u, *c.calibration, bank.d_lbl_bits), tau_ul,
                                                         tau_f, rate, cfg)
                                 .value /
                             static_cast<double>(redraws.size());
                }
                std::size_t violations = 0;
                for (std::size_t f = 0; f < test.size(); ++f) {
                    Rng rng(derive_seed(0xC45, f));
                    const double rate_dl = shannon_rate(cfg.bandwidth_hz, rng.exponential(), cfg.snr_dl);
                    const auto z = prediction_set_size(test.score_matrix(c.encoder, c.model).row(f), lambda);
                    const double t = uplink_time(tau_ul, test.ul_sizes[c.encoder][f], rate) +
                                     downlink_time(tau_f, z, bank.d_lbl_bits, rate_dl);
                    violations += meets_deadline(t, cfg.deadline_s) ? 0 : 1;
                }
                const double p = static_cast<double>(violations) / static_cast<double>(test.size());
                compare(cmp, bound, p, binomial_se(p, test.size()),
                        model_name(bank, c.encoder, c.model) + " @" + fmt(snr_db, 3) + " dB, " + fmt(rate / 1e6, 3) +
                            " Mbit/s");
            }
        }
    }
    return {cmp.failed == 0, std::to_string(cmp.failed) + "/" + std::to_string(cmp.checked) +
                                 " below MC - 2se; tightest " + cmp.tightest_at};
}

// 5 ------------------------------------------------------------------------

Outcome bound_internals()
{
    Rng rng(0xC5);
    std::size_t positive = 0;
    for (int i = 0; i < 100000; ++i) {
        ChannelConfig c;
        c.snr_ul = std::exp(8.0 * rng.normal());
        c.snr_dl = std::exp(8.0 * rng.normal());
        const double tau_ul = 0.07 * rng.uniform();
        const double tau_f = 0.07 * rng.uniform();
        const double d_ul = rng.uniform() < 0.1 ? 0.0 : std::exp(14.0 * rng.uniform());
        const double d_dl = rng.uniform() < 0.1 ? 0.0 : std::exp(12.0 * rng.uniform());
        const double rate = std::exp(25.0 * rng.uniform());
        positive += marginal_exponent(d_ul, d_dl, tau_ul, tau_f, c) > 0.0 ? 1 : 0;
        positive += conditional_exponent(d_ul, d_dl, tau_ul, tau_f, rate, c) > 0.0 ? 1 : 0;
    }
    std::size_t below = 0;
    std::size_t unequal = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(199);
        std::vector<double> ul(n);
        std::vector<double> dl(n);
        for (std::size_t i = 0; i < n; ++i) {
            ul[i] = std::exp(11.0 + 0.4 * rng.normal());
            dl[i] = 64.0 * static_cast<double>(1 + rng.uniform_index(8));
        }
        const auto stats = make_order_stats(ul, dl);
        ChannelConfig c;
        c.snr_ul = std::exp(4.0 * rng.uniform());
        c.snr_dl = std::exp(4.0 * rng.uniform());
        const GridOptions sparse{GridMode::subgrid, 8, 5};
        const GridOptions full{GridMode::subgrid, 2, n};
        const double exact = violation_bound_marginal(stats, 0.01, 0.03, c).value;
        below += violation_bound_marginal(stats, 0.01, 0.03, c, sparse).value < exact ? 1 : 0;
        unequal += violation_bound_marginal(stats, 0.01, 0.03, c, full).value != exact ? 1 : 0;
        const double rate = 1e6 * std::exp(3.0 * rng.uniform());
        const double exact_c = violation_bound_conditional(stats, 0.01, 0.03, rate, c).value;
        below += violation_bound_conditional(stats, 0.01, 0.03, rate, c, sparse).value < exact_c ? 1 : 0;
        unequal += violation_bound_conditional(stats, 0.01, 0.03, rate, c, full).value != exact_c ? 1 : 0;
    }
    return {positive == 0 && below == 0 && unequal == 0,
            std::to_string(positive) + " positive exponents in 2e5; " + std::to_string(below) +
                " subgrid bounds below exact; " + std::to_string(unequal) + " full-subgrid mismatches"};
}

// 6 ------------------------------------------------------------------------

Outcome order_statistic_coverage()
{
    const auto size = presets::bench_a_synthetic(1).ul_size[1];
    constexpr std::size_t N = 200;
    constexpr std::size_t redraws = 2000;
    const std::vector<std::size_t> ns = {(N + 3) / 4, (N + 1) / 2, N};
    std::vector<std::size_t> hits(ns.size(), 0);
    Rng rng(0xC6);
    std::vector<double> sizes(N);
    for (std::size_t r = 0; r < redraws; ++r) {
        for (auto& s : sizes) {
            s = std::exp(size.log_mean + size.log_sd * rng.normal());
        }
        const double fresh = std::exp(size.log_mean + size.log_sd * rng.normal());
        std::sort(sizes.begin(), sizes.end());
        for (std::size_t i = 0; i < ns.size(); ++i) {
            hits[i] += fresh <= sizes[ns[i] - 1] ? 1 : 0;
        }
    }
    Outcome out;
    std::ostringstream d;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const double target = static_cast<double>(ns[i]) / static_cast<double>(N + 1);
        const double p = static_cast<double>(hits[i]) / redraws;
        const double se = binomial_se(target, redraws);
        if (std::abs(p - target) > kSeMultiplier * se) {
            out.pass = false;
        }
        d << "n=" << ns[i] << ": " << fmt(p) << " vs " << fmt(target) << " +/- " << fmt(kSeMultiplier * se, 2)
          << (i + 1 < ns.size() ? "; " : "");
    }
    out.detail = d.str();
    return out;
}

// 7-10 ---------------------------------------------------------------------

Outcome deadline_property()
{
    auto& b = bench();
    const auto points = b.config.snr_points();
    Outcome out;
    std::ostringstream d;
    std::size_t checked = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& r = b.report("fixed", i);
        if (!r.offline_feasible) {
            continue;
        }
        ++checked;
        const double limit = b.config.beta + kSeMultiplier * r.violation_rate_se;
        if (r.violation_rate > limit) {
            out.pass = false;
            d << fmt(points[i].ul_db, 3) << " dB: " << fmt(r.violation_rate) << " > " << fmt(limit) << "; ";
        }
    }
    d << checked << " feasible SNR points checked, worst rate "
      << fmt([&] {
             double worst = 0.0;
             for (std::size_t i = 0; i < points.size(); ++i) {
                 const auto& r = b.report("fixed", i);
                 worst = r.offline_feasible ? std::max(worst, r.violation_rate) : worst;
             }
             return worst;
         }())
      << " vs beta " << fmt(b.config.beta);
    out.pass = out.pass && checked > 0;
    out.detail = d.str();
    return out;
}

Outcome loss_property()
{
    auto& b = bench();
    const auto points = b.config.snr_points();
    Outcome out;
    std::ostringstream d;
    double worst = -1e300;
    std::string worst_at;
    std::size_t checked = 0;
    std::size_t failed = 0;
    for (const std::string scheme : {"fixed", "dynamic", "baseline_calibrated:3:3"}) {
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto& r = b.report(scheme, i);
            if (!(r.violation_rate < 0.5)) {
                continue;
            }
            ++checked;
            const double limit = b.config.alpha + kSeMultiplier * r.cond_loss_se;
            if (r.cond_loss > limit) {
                ++failed;
            }
            if (r.cond_loss - limit > worst) {
                worst = r.cond_loss - limit;
                worst_at = scheme + " @" + fmt(points[i].ul_db, 3) + " dB: " + fmt(r.cond_loss) + " vs " +
                           fmt(limit);
            }
        }
    }
    out.pass = failed == 0 && checked > 0;
    d << failed << "/" << checked << " points above alpha + 3se; worst " << worst_at;
    out.detail = d.str();
    return out;
}

Outcome trend()
{
    auto& b = bench();
    const auto points = b.config.snr_points();
    Outcome out;
    std::ostringstream d;
    for (const std::string scheme : {"fixed", "dynamic"}) {
        for (std::size_t i = 0; i + 1 < points.size(); ++i) {
            const auto& lo = b.report(scheme, i);
            const auto& hi = b.report(scheme, i + 1);
            const double se = std::hypot(lo.mean_set_size_se, hi.mean_set_size_se);
            if (hi.mean_set_size > lo.mean_set_size + kBoundSeMultiplier * se) {
                out.pass = false;
                d << scheme << " rises " << fmt(lo.mean_set_size) << " -> " << fmt(hi.mean_set_size) << " at "
                  << fmt(points[i + 1].ul_db, 3) << " dB; ";
            }
        }
    }
    std::optional<std::size_t> lowest;
    for (std::size_t i = 0; i < points.size() && !lowest; ++i) {
        if (b.report("fixed", i).offline_feasible && b.report("dynamic", i).offline_feasible) {
            lowest = i;
        }
    }
    if (!lowest) {
        out.pass = false;
        d << "no SNR point where both schemes are feasible";
    } else {
        const auto& f = b.report("fixed", *lowest);
        const auto& g = b.report("dynamic", *lowest);
        const double limit = f.mean_set_size + kBoundSeMultiplier * std::hypot(f.mean_set_size_se, g.mean_set_size_se);
        out.pass = out.pass && g.mean_set_size <= limit;
        d << "set sizes non-increasing; at " << fmt(points[*lowest].ul_db, 3) << " dB dynamic "
          << fmt(g.mean_set_size) << " vs fixed " << fmt(f.mean_set_size);
    }
    out.detail = d.str();
    return out;
}

Outcome truncation_dominance()
{
    auto& b = bench();
    const auto points = b.config.snr_points();
    const double relaxed_level = relaxed_risk_level(b.config.alpha, b.config.beta, b.config.gamma);
    Outcome out;
    std::ostringstream d;
    double worst = -1e300;
    std::string worst_at;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& t = b.report("dynamic_truncated", i);
        const auto& g = b.report("dynamic", i);
        if (t.relaxed_loss > g.relaxed_loss + kBoundSeMultiplier * std::hypot(t.relaxed_loss_se, g.relaxed_loss_se)) {
            out.pass = false;
            d << "truncated above dynamic at " << fmt(points[i].ul_db, 3) << " dB; ";
        }
        if (t.offline_feasible) {
            const double limit = relaxed_level + kSeMultiplier * t.relaxed_loss_se;
            if (t.relaxed_loss > limit) {
                out.pass = false;
            }
            if (t.relaxed_loss - limit > worst) {
                worst = t.relaxed_loss - limit;
                worst_at = fmt(points[i].ul_db, 3) + " dB: " + fmt(t.relaxed_loss) + " vs " + fmt(limit);
            }
        }
    }
    d << "alpha' = " << fmt(relaxed_level) << "; closest feasible point " << worst_at;
    out.detail = d.str();
    return out;
}

// 11 -----------------------------------------------------------------------

Outcome branch_oracle()
{
    Rng rng(0xB11);
    std::size_t mismatches = 0;
    std::size_t both_infeasible = 0;
    for (int trial = 0; trial < 500; ++trial) {
        ModelBank bank;
        const std::size_t L = 1 + rng.uniform_index(3);
        const std::size_t K = 1 + rng.uniform_index(3);
        std::vector<double> tau_ul(L);
        std::vector<double> tau_f(K);
        for (auto& t : tau_ul) {
            t = 0.03 * rng.uniform();
        }
        for (auto& t : tau_f) {
            t = 0.14 * rng.uniform();
        }
        std::sort(tau_ul.begin(), tau_ul.end());
        std::sort(tau_f.begin(), tau_f.end());
        for (std::size_t l = 0; l < L; ++l) {
            bank.encoders.push_back({"e" + std::to_string(l + 1), tau_ul[l]});
        }
        for (std::size_t k = 0; k < K; ++k) {
            bank.models.push_back({"m" + std::to_string(k + 1), tau_f[k]});
        }
        bank.label_count = 3 + rng.uniform_index(6);
        bank.d_lbl_bits = 64.0;
        const std::size_t n_lab = 5 + rng.uniform_index(46);
        const std::size_t n_unl = 1 + rng.uniform_index(50);
        auto synth = presets::default_synthetic(bank, rng.next_u64());
        const auto data = generate_synthetic(synth, n_lab + n_unl, bank);
        const auto labeled = data.subset(iota_indices(0, n_lab));
        const auto unlabeled = data.subset(iota_indices(n_lab, n_lab + n_unl), false);
        const double alpha = 0.05 + 0.45 * rng.uniform();
        const double beta = 0.001 + 0.3 * rng.uniform();
        ChannelConfig cfg;
        cfg.snr_ul = db_to_linear(-5.0 + 35.0 * rng.uniform());
        cfg.snr_dl = db_to_linear(-5.0 + 35.0 * rng.uniform());
        const double eps = corrected_risk_level(alpha, beta);
        const auto catalog = ModelCatalog::build(bank, labeled, unlabeled, LossFunction{}, alpha, beta);

        // Oracle: every quantity recomputed from the raw data.
        std::vector<std::optional<double>> lambdas;
        std::vector<std::vector<double>> dl_sizes;
        std::vector<oracle::Candidate> fixed_cands;
        for (std::size_t l = 0; l < L; ++l) {
            for (std::size_t k = 0; k < K; ++k) {
                const auto& m = labeled.score_matrix(l, k);
                std::vector<double> truth(n_lab);
                for (std::size_t i = 0; i < n_lab; ++i) {
                    truth[i] = m(i, (*labeled.labels)[i]);
                }
                const auto lambda = oracle::calibrate(truth, eps);
                lambdas.push_back(lambda);
                std::vector<double> dl(n_unl, 0.0);
                double total = 0.0;
                if (lambda) {
                    for (std::size_t i = 0; i < n_unl; ++i) {
                        const auto z = oracle::set_size(unlabeled.score_matrix(l, k), i, *lambda);
                        dl[i] = 64.0 * static_cast<double>(z);
                        total += static_cast<double>(z);
                    }
                }
                dl_sizes.push_back(dl);
                const double tau_ul = bank.encoders[l].tau_ul_s;
                const double tau_f = bank.models[k].tau_f_s;
                double bound = 1.0;
                if (lambda && tau_ul + tau_f < cfg.deadline_s) {
                    bound = oracle::marginal_bound(unlabeled.ul_sizes[l], dl, tau_ul, tau_f, cfg.bandwidth_hz,
                                                   cfg.snr_ul, cfg.snr_dl, cfg.deadline_s)
                                .value;
                }
                fixed_cands.push_back({bound, total / static_cast<double>(n_unl), lambda.has_value()});
            }
        }
        const auto want = oracle::argmin_choice(fixed_cands, beta);
        std::optional<SelectionOutcome> got;
        try {
            got = fixed_select(catalog, cfg);
        } catch (const InfeasibleCalibration&) {
        }
        if (!want || !got) {
            both_infeasible += !want && !got ? 1 : 0;
            mismatches += want.has_value() != got.has_value() ? 1 : 0;
            continue;
        }
        if (got->encoder * K + got->model != *want || got->bound != fixed_cands[*want].bound) {
            ++mismatches;
            continue;
        }

        const std::size_t enc = got->encoder;
        const double rate = std::exp(12.0 + 8.0 * rng.uniform());
        std::vector<oracle::Candidate> dyn_cands;
        for (std::size_t k = 0; k < K; ++k) {
            const std::size_t c = enc * K + k;
            double bound = 1.0;
            if (lambdas[c]) {
                bound = oracle::conditional_bound(unlabeled.ul_sizes[enc], dl_sizes[c], bank.encoders[enc].tau_ul_s,
                                                  bank.models[k].tau_f_s, rate, cfg.bandwidth_hz, cfg.snr_dl,
                                                  cfg.deadline_s)
                            .value;
            }
            dyn_cands.push_back({bound, fixed_cands[c].size, lambdas[c].has_value()});
        }
        const auto want_dyn = oracle::argmin_choice(dyn_cands, beta);
        const auto got_dyn = dynamic_select(enc, catalog, cfg, rate);
        if (!want_dyn || got_dyn.model != *want_dyn || got_dyn.bound != dyn_cands[*want_dyn].bound) {
            ++mismatches;
        }
    }
    return {mismatches == 0, std::to_string(mismatches) + " mismatches in 500 instances (" +
                                 std::to_string(both_infeasible) + " with nothing calibratable)"};
}

// 12 -----------------------------------------------------------------------

Outcome determinism()
{
    auto& b = bench();
    const auto& first = b.run().report_csv;
    const auto again = prepare(b.config);
    const auto second = run_pipeline(b.config, again, 3).report_csv;
    const bool same = first == second;
    return {same, same ? "report CSVs byte-identical (" + std::to_string(first.size()) + " bytes)"
                       : "report CSVs differ"};
}

struct Criterion {
    int id;
    std::string name;
    std::function<Outcome()> run;
    double runtime_limit_s;  ///< 0: none stated
};

}  // namespace

int main()
{
    const std::vector<Criterion> criteria = {
        {1, "conformal validity", conformal_validity, kRuntimeC1},
        {2, "calibration exactness", calibration_exactness, kRuntimeC2},
        {3, "marginal bound conservativeness", marginal_bound_conservative, kRuntimeC3},
        {4, "conditional bound conservativeness", conditional_bound_conservative, 0.0},
        {5, "bound internals", bound_internals, 0.0},
        {6, "order-statistic coverage", order_statistic_coverage, 0.0},
        {7, "end-to-end deadline property", deadline_property, 0.0},
        {8, "end-to-end loss property", loss_property, 0.0},
        {9, "set-size trend", trend, 0.0},
        {10, "truncation relaxed-loss dominance", truncation_dominance, 0.0},
        {11, "selection branch oracle", branch_oracle, 0.0},
        {12, "determinism", determinism, 0.0},
    };
    // The shared benchmark setup is not charged to any single criterion.
    bench();

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.runtime_limit_s > 0.0 && secs > c.runtime_limit_s) {
            o.pass = false;
            o.detail += "; runtime " + fmt(secs, 3) + " s exceeds " + fmt(c.runtime_limit_s, 3) + " s";
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s [%2d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(),
                    secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
