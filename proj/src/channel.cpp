#include "edgesel/channel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace edgesel {

void ChannelConfig::validate() const
{
    if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz)) {
        throw std::invalid_argument("bandwidth must be positive");
    }
    if (!(snr_ul > 0.0) || !(snr_dl > 0.0) || !std::isfinite(snr_ul) || !std::isfinite(snr_dl)) {
        throw std::invalid_argument("SNRs must be positive");
    }
    if (!(deadline_s > 0.0) || !std::isfinite(deadline_s)) {
        throw std::invalid_argument("deadline must be positive");
    }
}

ChannelConfig ChannelConfig::with_snr_db(double ul_db, double dl_db) const
{
    ChannelConfig c = *this;
    c.snr_ul = db_to_linear(ul_db);
    c.snr_dl = db_to_linear(dl_db);
    return c;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

double shannon_rate(double bandwidth_hz, double gain, double snr)
{
    return bandwidth_hz * std::log2(1.0 + gain * snr);
}

LinkDraw link_from_gains(const ChannelConfig& config, double gain_ul, double gain_dl)
{
    return {gain_ul, gain_dl, shannon_rate(config.bandwidth_hz, gain_ul, config.snr_ul),
            shannon_rate(config.bandwidth_hz, gain_dl, config.snr_dl)};
}

LinkDraw sample_link(const ChannelConfig& config, Rng& rng)
{
    const double g_ul = rng.exponential();
    const double g_dl = rng.exponential();
    return link_from_gains(config, g_ul, g_dl);
}

double transfer_time(double tau_s, double bits, double rate)
{
    if (bits <= 0.0) {
        return tau_s;
    }
    if (rate <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return tau_s + bits / rate;
}

}  // namespace edgesel
