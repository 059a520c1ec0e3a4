#include "kljn/zc_attack.hpp"

#include "kljn/errors.hpp"
#include "kljn/seeding.hpp"

#include <cmath>
#include <string>

namespace kljn {

namespace {

bool opposite_signs(double a, double b) { return (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0); }

// Calls emit(value, position_in_samples) for every crossing in order.
template <typename Emit>
void for_each_crossing(std::span<const double> u, std::span<const double> i, ZcMode mode,
                       Emit&& emit) {
    const std::size_t n = i.size();
    for (std::size_t k = 0; k < n; ++k) {
        if (i[k] == 0.0) emit(u[k], static_cast<double>(k));
        if (k + 1 == n || !opposite_signs(i[k], i[k + 1])) continue;

        const double frac = i[k] / (i[k] - i[k + 1]);
        const double position = static_cast<double>(k) + frac;
        double value = 0.0;
        switch (mode) {
            case ZcMode::interpolated: value = u[k] + frac * (u[k + 1] - u[k]); break;
            case ZcMode::sample_before: value = u[k]; break;
            case ZcMode::sample_after: value = u[k + 1]; break;
            case ZcMode::nearest:
                value = std::abs(i[k]) <= std::abs(i[k + 1]) ? u[k] : u[k + 1];
                break;
        }
        emit(value, position);
    }
}

}  // namespace

std::string_view to_string(Polarity p) {
    switch (p) {
        case Polarity::hl_above: return "hl_above";
        case Polarity::lh_above: return "lh_above";
        case Polarity::indistinct: return "indistinct";
    }
    return "?";
}

CrossingSampleSet detect_zero_crossings(const WireTrace& wire, ZcMode mode) {
    if (wire.u_c.size() != wire.i_c.size())
        throw ArgumentError("detect_zero_crossings: u_c and i_c lengths differ");
    CrossingSampleSet set;
    set.mode = mode;
    const double dt = wire.sample_rate > 0.0 ? 1.0 / wire.sample_rate : 1.0;
    for_each_crossing(wire.u_c, wire.i_c, mode, [&](double value, double position) {
        set.values.push_back(value);
        set.times.push_back(position * dt);
    });
    return set;
}

CrossingSummary summarize_crossings(std::span<const double> u_c, std::span<const double> i_c,
                                    ZcMode mode) {
    if (u_c.size() != i_c.size())
        throw ArgumentError("summarize_crossings: u_c and i_c lengths differ");
    CrossingSummary s;
    for_each_crossing(u_c, i_c, mode, [&](double value, double) {
        ++s.count;
        s.sum_squares += value * value;
    });
    return s;
}

std::optional<double> zc_mean_square(const CrossingSampleSet& set) {
    if (set.values.empty()) return std::nullopt;
    double sum = 0.0;
    for (double v : set.values) sum += v * v;
    return sum / static_cast<double>(set.values.size());
}

AttackCalibration calibrate_from(std::span<const BitObservation> lh,
                                 std::span<const BitObservation> hl) {
    const CaseAggregate a_lh = aggregate(lh);
    const CaseAggregate a_hl = aggregate(hl);
    const double pooled_crossings =
        (a_lh.n_crossings.mean * static_cast<double>(lh.size()) +
         a_hl.n_crossings.mean * static_cast<double>(hl.size())) /
        static_cast<double>(std::max<std::size_t>(1, lh.size() + hl.size()));
    if (pooled_crossings < kMinCrossingsPerBit || a_lh.u_zc2.n == 0 || a_hl.u_zc2.n == 0) {
        throw CalibrationError("calibration: only " + std::to_string(pooled_crossings) +
                               " current zero crossings per bit on average (need >= 10); "
                               "increase samples_per_bit");
    }

    AttackCalibration cal;
    cal.mean_zc_lh = a_lh.u_zc2.mean;
    cal.mean_zc_hl = a_hl.u_zc2.mean;
    cal.std_error_lh = a_lh.u_zc2.std_error;
    cal.std_error_hl = a_hl.u_zc2.std_error;
    cal.mean_crossings_lh = a_lh.n_crossings.mean;
    cal.mean_crossings_hl = a_hl.n_crossings.mean;
    cal.bits_per_case = std::min(lh.size(), hl.size());
    cal.threshold = 0.5 * (cal.mean_zc_lh + cal.mean_zc_hl);

    const double combined = std::hypot(cal.std_error_lh, cal.std_error_hl);
    const double gap = cal.mean_zc_hl - cal.mean_zc_lh;
    if (std::abs(gap) < kPolaritySigmas * combined || gap == 0.0) {
        cal.polarity = Polarity::indistinct;
    } else {
        cal.polarity = gap > 0.0 ? Polarity::hl_above : Polarity::lh_above;
    }
    return cal;
}

AttackCalibration calibrate(const SessionConfig& session, std::size_t calibration_bits,
                            std::uint64_t seed) {
    if (calibration_bits < kMinCalibrationBits)
        throw ConfigurationError("calibrate: calibration_bits must be >= 100");
    session.validate();
    const std::uint64_t stream = derive_seed(seed, {tag(SeedStream::calibration)});
    const auto lh = observe_case(session, kCaseLH, calibration_bits, stream);
    const auto hl = observe_case(session, kCaseHL, calibration_bits, stream);
    return calibrate_from(lh, hl);
}

SecureCase eve_guess_bit(std::optional<double> u_zc2, const AttackCalibration& cal,
                         std::uint64_t tie_seed) {
    if (!u_zc2 || cal.polarity == Polarity::indistinct) {
        return (splitmix64(tie_seed) & 1u) ? SecureCase::hl : SecureCase::lh;
    }
    const bool above = *u_zc2 > cal.threshold;
    if (cal.polarity == Polarity::hl_above) return above ? SecureCase::hl : SecureCase::lh;
    return above ? SecureCase::lh : SecureCase::hl;
}

double binomial_half_width(double p, std::size_t n) {
    if (n == 0) return 1.0;
    return 1.959963984540054 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

AttackOutcome attack_statistics(std::span<const RunResult> runs, const AttackCalibration& cal,
                                std::uint64_t tie_seed) {
    AttackOutcome out;
    for (const auto& run : runs) {
        std::size_t secure = 0;
        std::size_t correct = 0;
        for (const auto& rec : run.records) {
            if (!rec.bit_case.secure()) continue;
            ++secure;
            const auto coin = derive_seed(tie_seed, {tag(SeedStream::eve_coin), rec.run, rec.bit});
            const SecureCase guess = eve_guess_bit(rec.u_zc2, cal, coin);
            const SecureCase truth = rec.bit_case == kCaseHL ? SecureCase::hl : SecureCase::lh;
            if (guess == truth) ++correct;
        }
        if (secure == 0) {
            ++out.excluded_runs;
            continue;
        }
        out.per_run_p.push_back(static_cast<double>(correct) / static_cast<double>(secure));
        out.per_run_secure.push_back(secure);
        out.n_secure_bits += secure;
        out.n_correct += correct;
    }
    out.n_runs = out.per_run_p.size();
    if (out.n_runs == 0) throw ArgumentError("attack_statistics: no run contains a secure bit");

    const auto m = mean_with_error(out.per_run_p);
    out.p = m.mean;
    out.sigma_p = m.std_error * std::sqrt(static_cast<double>(m.n));
    const double pooled = static_cast<double>(out.n_correct) / static_cast<double>(out.n_secure_bits);
    out.ci_half_width = binomial_half_width(pooled, out.n_secure_bits);
    return out;
}

Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi) {
    if (bins == 0) throw ArgumentError("histogram: bins must be >= 1");
    if (!(hi >= lo)) throw ArgumentError("histogram: range upper bound below lower bound");
    Histogram h;
    const double width = (hi - lo) / static_cast<double>(bins);
    h.bins.resize(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        h.bins[b] = {lo + width * static_cast<double>(b),
                     b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1), 0};
    }
    for (double v : values) {
        if (v < lo) {
            ++h.underflow;
        } else if (!(v <= hi)) {
            ++h.overflow;
        } else {
            std::size_t idx = width > 0.0 ? static_cast<std::size_t>((v - lo) / width) : 0;
            ++h.bins[std::min(idx, bins - 1)].count;
        }
    }
    return h;
}

}  // namespace kljn
