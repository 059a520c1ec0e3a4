#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace kljn {

inline constexpr double kBoltzmann = 1.380649e-23;  // J/K

/// Mean-square Johnson noise voltage 4kTRB of a resistor.
double johnson_mean_square(double temperature_k, double resistance_ohm, double bandwidth_hz);

/// Noise temperature that yields `mean_square` on `resistance_ohm` over
/// `bandwidth_hz`. Inverse of johnson_mean_square.
double noise_temperature(double mean_square, double resistance_ohm, double bandwidth_hz);

struct NoiseSpec {
    double mean_square = 0.0;    // V^2
    double bandwidth = 500.0;    // Hz
    double sample_rate = 16000.0;  // Hz
    std::size_t num_samples = 0;
    std::uint64_t seed = 0;

    void validate() const;
};

class NoiseTrace {
public:
    NoiseTrace() = default;
    NoiseTrace(std::vector<double> samples, double sample_rate);

    std::span<const double> samples() const noexcept { return samples_; }
    double sample_rate() const noexcept { return sample_rate_; }
    std::size_t size() const noexcept { return samples_.size(); }

private:
    std::vector<double> samples_;
    double sample_rate_ = 0.0;
};

/// Zero-mean stationary Gaussian noise with a one-sided spectrum flat on
/// (0, B] and exactly zero above B.
///
/// Built in the frequency domain: every bin with 0 < f <= B gets independent
/// Gaussian real and imaginary parts, all other bins (DC included) are zero,
/// and an inverse real FFT produces the trace. A Nyquist bin that falls in
/// band is kept real and weighted as half a bin. The per-bin variance is set
/// so the expected sample mean-square equals spec.mean_square.
///
/// Throws ConfigurationError when the spec is invalid or no FFT bin lies in
/// (0, B] (trace shorter than f_s / B samples).
NoiseTrace synthesize(const NoiseSpec& spec);

/// Same as synthesize() but writes into `out` (resized to spec.num_samples).
/// Lets hot loops reuse their buffers.
void synthesize_into(const NoiseSpec& spec, std::vector<double>& out);

struct PsdPoint {
    double frequency;  // Hz
    double density;    // V^2/Hz, one-sided
};

/// Averaged periodogram over `segments` non-overlapping rectangular windows
/// (Bartlett). Integrating the result over frequency gives the mean square of
/// the samples that were used; a trailing remainder shorter than one segment
/// is dropped. Throws ArgumentError when a segment would be shorter than 64
/// samples or segments == 0.
std::vector<PsdPoint> estimate_psd(const NoiseTrace& trace, std::size_t segments);

struct SampleMoments {
    double mean_square_x;
    double mean_square_y;
    double cross_moment;
    // Pearson coefficient; empty when either input has zero variance.
    std::optional<double> correlation;
};

SampleMoments sample_moments(std::span<const double> x, std::span<const double> y);

}  // namespace kljn
