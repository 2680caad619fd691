#pragma once

#include "edgesel/random.hpp"

#include <cstddef>

namespace edgesel {

/// Quasi-static Rayleigh link parameters. SNRs are linear.
struct ChannelConfig {
    double bandwidth_hz = 30e6;
    double snr_ul = 1.0;
    double snr_dl = 1.0;
    double deadline_s = 0.150;

    void validate() const;
    /// Copy with both SNRs replaced (values in dB).
    ChannelConfig with_snr_db(double ul_db, double dl_db) const;
};

double db_to_linear(double db);
double linear_to_db(double linear);

/// One frame's fading realisation: |h|^2 per direction and the resulting rates.
struct LinkDraw {
    double gain_ul = 0.0;
    double gain_dl = 0.0;
    double rate_ul = 0.0;  ///< bits/s
    double rate_dl = 0.0;  ///< bits/s
};

/// B log2(1 + gain * snr)
double shannon_rate(double bandwidth_hz, double gain, double snr);

LinkDraw link_from_gains(const ChannelConfig& config, double gain_ul, double gain_dl);

/// Draws independent unit-mean exponential gains for uplink then downlink.
LinkDraw sample_link(const ChannelConfig& config, Rng& rng);

/// tau + bits / rate; +inf for a positive payload over a zero-rate link.
double transfer_time(double tau_s, double bits, double rate);

inline double uplink_time(double tau_ul_s, double d_ul_bits, double rate_ul)
{
    return transfer_time(tau_ul_s, d_ul_bits, rate_ul);
}

inline double downlink_time(double tau_f_s, std::size_t set_size, double d_lbl_bits, double rate_dl)
{
    return transfer_time(tau_f_s, static_cast<double>(set_size) * d_lbl_bits, rate_dl);
}

inline bool meets_deadline(double t_total_s, double deadline_s) { return t_total_s <= deadline_s; }

}  // namespace edgesel
