#include "edgesel/evaluator.hpp"

#include "edgesel/error.hpp"
#include "edgesel/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace edgesel {

namespace {

std::size_t parse_index(std::string_view text, const char* what)
{
    std::uint64_t v = 0;
    if (!io::parse_uint(text, v) || v == 0) {
        throw std::invalid_argument(std::string("scheme: ") + what + " must be a positive integer, got '" +
                                    std::string(text) + "'");
    }
    return static_cast<std::size_t>(v);
}

}  // namespace

std::string SchemeSpec::name() const
{
    const auto pinned = ":" + std::to_string(encoder + 1) + ":" + std::to_string(model + 1);
    switch (kind) {
    case SchemeKind::fixed: return "fixed";
    case SchemeKind::dynamic: return "dynamic";
    case SchemeKind::dynamic_truncated: return "dynamic_truncated";
    case SchemeKind::baseline_topk: return "baseline_topk:" + std::to_string(kappa) + pinned;
    case SchemeKind::baseline_calibrated: return "baseline_calibrated" + pinned;
    }
    return "unknown";
}

SchemeSpec SchemeSpec::parse(std::string_view text)
{
    const auto parts = io::split(io::trim(text), ':');
    SchemeSpec s;
    const auto head = parts.front();
    std::size_t next = 1;
    if (head == "fixed" || head == "dynamic" || head == "dynamic_truncated") {
        s.kind = head == "fixed" ? SchemeKind::fixed
                 : head == "dynamic" ? SchemeKind::dynamic
                                     : SchemeKind::dynamic_truncated;
        if (parts.size() != 1) {
            throw std::invalid_argument("scheme '" + std::string(text) + "' takes no arguments");
        }
        return s;
    }
    if (head == "baseline_topk") {
        s.kind = SchemeKind::baseline_topk;
        if (parts.size() < 2) {
            throw std::invalid_argument("baseline_topk needs a set size, e.g. baseline_topk:20");
        }
        s.kappa = parse_index(parts[1], "kappa");
        next = 2;
    } else if (head == "baseline_calibrated") {
        s.kind = SchemeKind::baseline_calibrated;
    } else {
        throw std::invalid_argument("unknown scheme '" + std::string(text) + "'");
    }
    const std::size_t rest = parts.size() - next;
    if (rest == 2) {
        s.encoder = parse_index(parts[next], "encoder index") - 1;
        s.model = parse_index(parts[next + 1], "model index") - 1;
    } else if (rest != 0) {
        throw std::invalid_argument("scheme '" + std::string(text) + "': expected ':L:K' after the name");
    }
    return s;
}

void SchemeSpec::validate(const ModelBank& bank) const
{
    if (kind == SchemeKind::baseline_topk || kind == SchemeKind::baseline_calibrated) {
        if (encoder >= bank.encoder_count() || model >= bank.model_count()) {
            throw std::invalid_argument("scheme " + name() + " references a model outside the bank");
        }
    }
    if (kind == SchemeKind::baseline_topk && (kappa < 1 || kappa > bank.label_count)) {
        throw std::invalid_argument("scheme " + name() + ": kappa must lie in [1, " +
                                    std::to_string(bank.label_count) + "]");
    }
}

std::vector<std::size_t> baseline_topk_set(std::span<const double> scores, std::size_t kappa)
{
    if (kappa < 1 || kappa > scores.size()) {
        throw std::invalid_argument("top-k set size out of range");
    }
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(kappa), idx.end(),
                      [&](std::size_t a, std::size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });
    idx.resize(kappa);
    std::sort(idx.begin(), idx.end());
    return idx;
}

ResolvedScheme resolve_scheme(const SchemeSpec& spec, const ModelCatalog& catalog, const ChannelConfig& config,
                              const GridOptions& grid)
{
    spec.validate(catalog.bank());
    ResolvedScheme r;
    r.spec = spec;
    const auto& bank = catalog.bank();
    if (spec.kind == SchemeKind::fixed || spec.kind == SchemeKind::dynamic ||
        spec.kind == SchemeKind::dynamic_truncated) {
        const auto outcome = fixed_select(catalog, config, grid);
        r.encoder = outcome.encoder;
        r.model = outcome.model;
        r.lambda = outcome.lambda;
        r.offline_bound = outcome.bound;
        r.offline_feasible = outcome.feasible;
        return r;
    }
    r.encoder = spec.encoder;
    r.model = spec.model;
    const auto& cand = catalog.at(spec.encoder, spec.model);
    if (spec.kind == SchemeKind::baseline_calibrated) {
        if (!cand.calibration) {
            throw InfeasibleCalibration("baseline " + spec.name() + ": " + cand.diagnostic);
        }
        r.lambda = cand.calibration->lambda;
    }
    const double tau = bank.encoders[spec.encoder].tau_ul_s + bank.models[spec.model].tau_f_s;
    if (cand.calibration && tau < config.deadline_s) {
        r.offline_bound = violation_bound_marginal(cand.stats, bank.encoders[spec.encoder].tau_ul_s,
                                                   bank.models[spec.model].tau_f_s, config, grid)
                              .value;
    }
    r.offline_feasible = r.offline_bound <= catalog.beta();
    return r;
}

FrameResult run_frame(const ResolvedScheme& scheme, const ModelCatalog& catalog, const ScoreDataset& evaluation,
                      std::size_t sample, const LinkDraw& link, const ChannelConfig& config, const GridOptions& grid,
                      std::uint64_t frame_id)
{
    const auto& bank = catalog.bank();
    FrameResult f;
    f.frame_id = frame_id;
    f.sample = sample;
    f.encoder = scheme.encoder;
    f.model = scheme.model;
    f.rate_ul = link.rate_ul;
    f.rate_dl = link.rate_dl;
    f.d_ul = evaluation.ul_sizes[scheme.encoder][sample];

    const double tau_ul = bank.encoders[scheme.encoder].tau_ul_s;
    const double t_ul = uplink_time(tau_ul, f.d_ul, link.rate_ul);

    double lambda = scheme.lambda;
    const bool dynamic =
        scheme.spec.kind == SchemeKind::dynamic || scheme.spec.kind == SchemeKind::dynamic_truncated;
    if (dynamic && link.rate_ul > 0.0) {
        const auto choice = dynamic_select(scheme.encoder, catalog, config, link.rate_ul, grid);
        f.model = choice.model;
        lambda = choice.lambda;
    }
    const double tau_f = bank.models[f.model].tau_f_s;
    const auto scores = evaluation.score_matrix(f.encoder, f.model).row(sample);

    std::vector<std::size_t> set;
    switch (scheme.spec.kind) {
    case SchemeKind::baseline_topk:
        set = baseline_topk_set(scores, scheme.spec.kappa);
        break;
    case SchemeKind::dynamic_truncated: {
        const double t_tx = link.rate_ul > 0.0 ? f.d_ul / link.rate_ul : HUGE_VAL;
        const auto cap = truncation_cap(link.rate_dl, config.deadline_s, tau_ul, tau_f, t_tx, bank.d_lbl_bits);
        set = truncated_set(scores, lambda, cap);
        break;
    }
    default:
        set = prediction_set(scores, lambda);
        break;
    }
    f.set_size = set.size();
    f.t_total = t_ul + downlink_time(tau_f, set.size(), bank.d_lbl_bits, link.rate_dl);
    f.met_deadline = meets_deadline(f.t_total, config.deadline_s);
    f.loss = catalog.loss()(set, (*evaluation.labels)[sample]);
    f.relaxed_loss = relaxed_loss(f.loss, f.met_deadline, catalog.loss().gamma);
    return f;
}

namespace {

struct MeanSe {
    double mean;
    double se;
};

/// Two passes in frame order; the result depends only on the values.
MeanSe mean_and_se(const std::vector<double>& xs)
{
    if (xs.empty()) {
        return {std::nan(""), std::nan("")};
    }
    io::CompensatedSum sum;
    for (double x : xs) {
        sum.add(x);
    }
    const double n = static_cast<double>(xs.size());
    const double mean = sum.value() / n;
    if (xs.size() < 2) {
        return {mean, 0.0};
    }
    io::CompensatedSum sq;
    for (double x : xs) {
        sq.add((x - mean) * (x - mean));
    }
    return {mean, std::sqrt(sq.value() / (n - 1.0)) / std::sqrt(n)};
}

}  // namespace

MetricsReport aggregate(std::span<const FrameResult> frames, std::size_t encoder_count, std::size_t model_count)
{
    const std::size_t combination_count = encoder_count * model_count;
    MetricsReport r;
    r.n_frames = frames.size();
    r.selection.assign(combination_count, 0.0);
    if (frames.empty()) {
        r.cond_loss = r.cond_loss_se = r.violation_rate = r.violation_rate_se = std::nan("");
        r.mean_set_size = r.mean_set_size_se = r.relaxed_loss = r.relaxed_loss_se = std::nan("");
        return r;
    }
    std::vector<double> cond_loss;
    std::vector<double> cond_size;
    std::vector<double> relaxed;
    std::vector<std::size_t> counts(combination_count, 0);
    relaxed.reserve(frames.size());
    for (const auto& f : frames) {
        relaxed.push_back(f.relaxed_loss);
        if (f.met_deadline) {
            cond_loss.push_back(f.loss);
            cond_size.push_back(static_cast<double>(f.set_size));
        }
        if (f.encoder >= encoder_count || f.model >= model_count) {
            throw std::out_of_range("aggregate: frame " + std::to_string(f.frame_id) + " uses a model outside the bank");
        }
        ++counts[f.encoder * model_count + f.model];
    }
    for (std::size_t i = 0; i < combination_count; ++i) {
        r.selection[i] = static_cast<double>(counts[i]) / static_cast<double>(frames.size());
    }
    r.n_met = cond_loss.size();
    const double n = static_cast<double>(frames.size());
    const double p = static_cast<double>(frames.size() - r.n_met) / n;
    r.violation_rate = p;
    r.violation_rate_se = std::sqrt(p * (1.0 - p) / n);
    const auto loss = mean_and_se(cond_loss);
    r.cond_loss = loss.mean;
    r.cond_loss_se = loss.se;
    const auto size = mean_and_se(cond_size);
    r.mean_set_size = size.mean;
    r.mean_set_size_se = size.se;
    const auto rl = mean_and_se(relaxed);
    r.relaxed_loss = rl.mean;
    r.relaxed_loss_se = rl.se;
    return r;
}

std::size_t default_worker_count()
{
    if (const char* env = std::getenv("EDGESEL_WORKERS")) {
        std::uint64_t v = 0;
        if (io::parse_uint(env, v) && v > 0) {
            return static_cast<std::size_t>(v);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

SchemeEvaluation evaluate(const SchemeSpec& scheme, const ModelCatalog& catalog, const ScoreDataset& evaluation,
                          const ChannelConfig& base_config, const EvaluationOptions& options)
{
    if (evaluation.size() == 0) {
        throw std::invalid_argument("evaluation partition is empty");
    }
    if (!evaluation.labeled()) {
        throw std::invalid_argument("evaluation partition has no labels");
    }
    if (options.n_frames < 1) {
        throw std::invalid_argument("at least one frame is required");
    }
    const auto& bank = catalog.bank();
    const std::size_t n_frames = options.n_frames;
    const std::size_t workers =
        std::clamp<std::size_t>(options.workers == 0 ? default_worker_count() : options.workers, 1, n_frames);

    SchemeEvaluation out;
    for (const auto& snr : options.snr_points) {
        const auto config = base_config.with_snr_db(snr.ul_db, snr.dl_db);
        config.validate();
        const auto resolved = resolve_scheme(scheme, catalog, config, options.grid);

        std::vector<FrameResult> frames(n_frames);
        auto work = [&](std::size_t begin, std::size_t end) {
            for (std::size_t f = begin; f < end; ++f) {
                Rng rng(derive_seed(options.seed, f));
                const std::size_t sample = rng.uniform_index(evaluation.size());
                const auto link = sample_link(config, rng);
                frames[f] = run_frame(resolved, catalog, evaluation, sample, link, config, options.grid, f);
            }
        };
        if (workers == 1) {
            work(0, n_frames);
        } else {
            std::vector<std::thread> pool;
            std::vector<std::exception_ptr> errors(workers);
            const std::size_t chunk = (n_frames + workers - 1) / workers;
            for (std::size_t w = 0; w < workers; ++w) {
                const std::size_t begin = std::min(n_frames, w * chunk);
                const std::size_t end = std::min(n_frames, begin + chunk);
                pool.emplace_back([&, w, begin, end] {
                    try {
                        work(begin, end);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
            for (auto& t : pool) {
                t.join();
            }
            for (const auto& e : errors) {
                if (e) {
                    std::rethrow_exception(e);
                }
            }
        }

        auto report = aggregate(frames, bank.encoder_count(), bank.model_count());
        report.scheme = scheme.name();
        report.snr = snr;
        report.offline_bound = resolved.offline_bound;
        report.offline_feasible = resolved.offline_feasible;
        out.reports.push_back(std::move(report));
        out.frames.push_back(options.keep_frames ? std::move(frames) : std::vector<FrameResult>{});
    }
    return out;
}

std::vector<SnrPoint> parse_snr_grid(std::string_view text)
{
    const auto parts = io::split(io::trim(text), ':');
    double start = 0.0;
    double stop = 0.0;
    std::uint64_t count = 0;
    const bool ok = parts.size() == 3 && io::parse_double(parts[0], start) && io::parse_double(parts[1], stop) &&
                    io::parse_uint(parts[2], count) && count >= 1 && std::isfinite(start) && std::isfinite(stop);
    if (!ok) {
        throw std::invalid_argument("SNR grid must be START:STOP:COUNT in dB, got '" + std::string(text) + "'");
    }
    if (count == 1 && start != stop) {
        throw std::invalid_argument("SNR grid with one point needs START == STOP");
    }
    std::vector<SnrPoint> grid;
    for (std::uint64_t i = 0; i < count; ++i) {
        const double v =
            count == 1 ? start : start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1);
        grid.push_back({v, v});
    }
    return grid;
}

std::string frames_csv_header()
{
    return "frame_id,scheme,snr_db,snr_dl_db,sample,l,k,rate_ul,rate_dl,d_ul,set_size,t_total_s,met_deadline,loss,"
           "relaxed_loss";
}

std::string frame_csv_row(const FrameResult& f, const SnrPoint& snr, std::string_view scheme)
{
    std::string row;
    auto put = [&](const std::string& field) {
        if (!row.empty()) {
            row += ',';
        }
        row += field;
    };
    put(std::to_string(f.frame_id));
    put(std::string(scheme));
    put(io::format_exact(snr.ul_db));
    put(io::format_exact(snr.dl_db));
    put(std::to_string(f.sample));
    put(std::to_string(f.encoder + 1));
    put(std::to_string(f.model + 1));
    put(io::format_exact(f.rate_ul));
    put(io::format_exact(f.rate_dl));
    put(io::format_exact(f.d_ul));
    put(std::to_string(f.set_size));
    put(io::format_exact(f.t_total));
    put(f.met_deadline ? "1" : "0");
    put(io::format_exact(f.loss));
    put(io::format_exact(f.relaxed_loss));
    return row;
}

std::vector<FrameResult> parse_frames_csv(std::string_view text)
{
    const std::string file = "frame log";
    std::vector<FrameResult> frames;
    bool header_seen = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        const auto line = io::trim(text.substr(pos, eol - pos));
        pos = eol + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') {
            continue;
        }
        if (!header_seen) {
            if (line != frames_csv_header()) {
                throw ValidationError(ValidationKind::malformed, file, line_no, "unexpected header");
            }
            header_seen = true;
            continue;
        }
        const auto cells = io::split(line, ',');
        if (cells.size() != 15) {
            throw ValidationError(ValidationKind::dimension_mismatch, file, line_no,
                                  "expected 15 fields, got " + std::to_string(cells.size()));
        }
        FrameResult f;
        std::uint64_t u[5] = {};
        double d[6] = {};
        const bool ok = io::parse_uint(cells[0], u[0]) && io::parse_uint(cells[4], u[1]) &&
                        io::parse_uint(cells[5], u[2]) && io::parse_uint(cells[6], u[3]) &&
                        io::parse_double(cells[7], d[0]) && io::parse_double(cells[8], d[1]) &&
                        io::parse_double(cells[9], d[2]) && io::parse_uint(cells[10], u[4]) &&
                        io::parse_double(cells[11], d[3]) && (cells[12] == "0" || cells[12] == "1") &&
                        io::parse_double(cells[13], d[4]) && io::parse_double(cells[14], d[5]) && u[2] >= 1 &&
                        u[3] >= 1;
        if (!ok) {
            throw ValidationError(ValidationKind::malformed, file, line_no, "unparseable field");
        }
        f.frame_id = u[0];
        f.sample = static_cast<std::size_t>(u[1]);
        f.encoder = static_cast<std::size_t>(u[2] - 1);
        f.model = static_cast<std::size_t>(u[3] - 1);
        f.rate_ul = d[0];
        f.rate_dl = d[1];
        f.d_ul = d[2];
        f.set_size = static_cast<std::size_t>(u[4]);
        f.t_total = d[3];
        f.met_deadline = cells[12] == "1";
        f.loss = d[4];
        f.relaxed_loss = d[5];
        frames.push_back(f);
    }
    if (!header_seen) {
        throw ValidationError(ValidationKind::malformed, file, 0, "missing header");
    }
    return frames;
}

std::string report_csv_header()
{
    return "snr_db,snr_dl_db,scheme,n_frames,n_met,cond_loss,cond_loss_se,violation_rate,violation_rate_se,"
           "mean_set_size,mean_set_size_se,relaxed_loss,relaxed_loss_se,offline_bound,offline_feasible,selection";
}

std::string report_csv_row(const MetricsReport& r, const ModelBank& bank)
{
    std::string selection;
    for (std::size_t l = 0; l < bank.encoder_count(); ++l) {
        for (std::size_t k = 0; k < bank.model_count(); ++k) {
            const double p = r.selection.at(bank.combination_index(l, k));
            if (p > 0.0) {
                if (!selection.empty()) {
                    selection += ';';
                }
                selection += bank.encoders[l].id + "/" + bank.models[k].id + "=" + io::format_exact(p);
            }
        }
    }
    const std::string fields[] = {
        io::format_exact(r.snr.ul_db),
        io::format_exact(r.snr.dl_db),
        r.scheme,
        std::to_string(r.n_frames),
        std::to_string(r.n_met),
        io::format_exact(r.cond_loss),
        io::format_exact(r.cond_loss_se),
        io::format_exact(r.violation_rate),
        io::format_exact(r.violation_rate_se),
        io::format_exact(r.mean_set_size),
        io::format_exact(r.mean_set_size_se),
        io::format_exact(r.relaxed_loss),
        io::format_exact(r.relaxed_loss_se),
        io::format_exact(r.offline_bound),
        r.offline_feasible ? "1" : "0",
        selection,
    };
    std::string row;
    for (const auto& f : fields) {
        if (!row.empty()) {
            row += ',';
        }
        row += f;
    }
    return row;
}

}  // namespace edgesel
