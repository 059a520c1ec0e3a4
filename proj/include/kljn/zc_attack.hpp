#pragma once

#include "kljn/exchange_protocol.hpp"
#include "kljn/wire_circuit.hpp"
#include "kljn/zc_mode.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace kljn {

// Wire voltages attributed to the zero crossings of the wire current.
struct CrossingSampleSet {
    std::vector<double> values;  // V
    // Crossing instants in seconds from the first sample. For sign changes
    // this is the linearly interpolated zero of i_c regardless of mode, so
    // times are strictly increasing; exact zero samples sit on their sample time.
    std::vector<double> times;
    ZcMode mode = ZcMode::interpolated;
};

/// A crossing lies between samples k and k+1 iff i_c[k] * i_c[k+1] < 0; a
/// sample with i_c exactly zero is a crossing at that sample and takes u_c
/// there in every mode.
CrossingSampleSet detect_zero_crossings(const WireTrace& wire, ZcMode mode);

struct CrossingSummary {
    std::size_t count = 0;
    double sum_squares = 0.0;
};

/// Count and sum of squared voltages of detect_zero_crossings without
/// materializing the sample set.
CrossingSummary summarize_crossings(std::span<const double> u_c, std::span<const double> i_c,
                                    ZcMode mode);

std::optional<double> zc_mean_square(const CrossingSampleSet& set);

enum class Polarity { hl_above, lh_above, indistinct };

std::string_view to_string(Polarity p);

// Eve's reference values from simulating both secure cases herself.
struct AttackCalibration {
    double mean_zc_lh = 0.0;
    double mean_zc_hl = 0.0;
    double std_error_lh = 0.0;
    double std_error_hl = 0.0;
    double threshold = 0.0;
    Polarity polarity = Polarity::indistinct;
    double mean_crossings_lh = 0.0;
    double mean_crossings_hl = 0.0;
    std::size_t bits_per_case = 0;
};

inline constexpr std::size_t kMinCalibrationBits = 100;
inline constexpr double kMinCrossingsPerBit = 10.0;
inline constexpr double kPolaritySigmas = 4.0;

/// Simulates `calibration_bits` bits of each of LH and HL with the session's
/// scheme and sampling (seeded from `seed`, independent of the session's
/// master seed stream), averages the per-bit u_zc2, and puts the threshold
/// at the midpoint. Polarity is indistinct when the two means differ by less
/// than 4 combined standard errors.
///
/// Throws ConfigurationError when calibration_bits < 100 and
/// CalibrationError when fewer than 10 crossings per bit occur on average.
AttackCalibration calibrate(const SessionConfig& session, std::size_t calibration_bits,
                            std::uint64_t seed);

/// Builds the calibration from already-simulated per-bit u_zc2 values.
AttackCalibration calibrate_from(std::span<const BitObservation> lh,
                                 std::span<const BitObservation> hl);

enum class SecureCase { lh, hl };

/// Threshold decision; a seeded fair coin when polarity is indistinct or
/// the bit had no crossings.
SecureCase eve_guess_bit(std::optional<double> u_zc2, const AttackCalibration& cal,
                         std::uint64_t tie_seed);

struct AttackOutcome {
    double p = 0.0;        // mean of per_run_p
    double sigma_p = 0.0;  // sample standard deviation of per_run_p
    std::size_t n_secure_bits = 0;
    std::size_t n_correct = 0;
    std::size_t n_runs = 0;           // runs that contributed
    std::size_t excluded_runs = 0;    // runs without any secure bit
    std::vector<double> per_run_p;
    std::vector<std::size_t> per_run_secure;
    // 95% normal-approximation binomial half-width on the pooled guess rate.
    double ci_half_width = 0.0;
};

/// Eve guesses every secure bit; per-run success rates over secure bits.
/// Coin flips are seeded from derive_seed(tie_seed, {eve_coin, run, bit}).
AttackOutcome attack_statistics(std::span<const RunResult> runs, const AttackCalibration& cal,
                                std::uint64_t tie_seed);

double binomial_half_width(double p, std::size_t n);

struct HistogramBin {
    double lo;
    double hi;
    std::size_t count;
};

struct Histogram {
    std::vector<HistogramBin> bins;
    std::size_t underflow = 0;  // values < lo
    std::size_t overflow = 0;   // values > hi or NaN
};

/// Fixed-width bins over [lo, hi]; the last bin includes hi.
/// Throws ArgumentError when bins == 0 or hi < lo.
Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi);

}  // namespace kljn
