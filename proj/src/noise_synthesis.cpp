#include "kljn/noise_synthesis.hpp"

#include "kljn/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <random>
#include <string>

namespace kljn {

namespace {

// FFTW planning is not thread-safe; execution through the new-array
// interface is. Plans are created once per size and kept for the process
// lifetime.
class PlanCache {
public:
    fftw_plan inverse(std::size_t n) { return get(inverse_, n, true); }
    fftw_plan forward(std::size_t n) { return get(forward_, n, false); }

private:
    fftw_plan get(std::map<std::size_t, fftw_plan>& cache, std::size_t n, bool inverse) {
        std::lock_guard lock(mutex_);
        if (auto it = cache.find(n); it != cache.end()) return it->second;
        std::vector<double> real(n);
        std::vector<std::complex<double>> spectrum(n / 2 + 1);
        auto* c = reinterpret_cast<fftw_complex*>(spectrum.data());
        const int size = static_cast<int>(n);
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan plan = inverse ? fftw_plan_dft_c2r_1d(size, c, real.data(), flags)
                                 : fftw_plan_dft_r2c_1d(size, real.data(), c, flags);
        cache.emplace(n, plan);
        return plan;
    }

    std::mutex mutex_;
    std::map<std::size_t, fftw_plan> inverse_;
    std::map<std::size_t, fftw_plan> forward_;
};

PlanCache& plans() {
    static PlanCache cache;
    return cache;
}

// Highest bin index k with k * f_s / N <= B.
std::size_t top_band_bin(const NoiseSpec& spec) {
    const double x = spec.bandwidth * static_cast<double>(spec.num_samples) / spec.sample_rate;
    auto k = static_cast<std::size_t>(std::floor(x * (1.0 + 1e-12)));
    return std::min(k, spec.num_samples / 2);
}

}  // namespace

double johnson_mean_square(double temperature_k, double resistance_ohm, double bandwidth_hz) {
    return 4.0 * kBoltzmann * temperature_k * resistance_ohm * bandwidth_hz;
}

double noise_temperature(double mean_square, double resistance_ohm, double bandwidth_hz) {
    if (!(resistance_ohm > 0.0)) throw DomainError("noise_temperature: resistance must be > 0");
    if (!(bandwidth_hz > 0.0)) throw DomainError("noise_temperature: bandwidth must be > 0");
    if (mean_square < 0.0) throw DomainError("noise_temperature: mean square must be >= 0");
    return mean_square / (4.0 * kBoltzmann * resistance_ohm * bandwidth_hz);
}

void NoiseSpec::validate() const {
    if (!(mean_square >= 0.0) || !std::isfinite(mean_square))
        throw ConfigurationError("noise spec: mean_square must be finite and >= 0");
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
        throw ConfigurationError("noise spec: bandwidth must be > 0");
    if (!(sample_rate >= 2.0 * bandwidth) || !std::isfinite(sample_rate))
        throw ConfigurationError("noise spec: sample_rate must be >= 2 * bandwidth");
    if (num_samples < 2) throw ConfigurationError("noise spec: num_samples must be >= 2");
}

NoiseTrace::NoiseTrace(std::vector<double> samples, double sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
    if (!(sample_rate > 0.0)) throw ArgumentError("noise trace: sample_rate must be > 0");
    for (double v : samples_) {
        if (!std::isfinite(v)) throw ArgumentError("noise trace: non-finite sample");
    }
}

void synthesize_into(const NoiseSpec& spec, std::vector<double>& out) {
    spec.validate();
    const std::size_t n = spec.num_samples;
    const std::size_t top = top_band_bin(spec);
    if (top == 0) {
        throw ConfigurationError("noise spec: trace of " + std::to_string(n) +
                                 " samples has no frequency bin inside (0, B]");
    }
    out.assign(n, 0.0);
    if (spec.mean_square == 0.0) return;

    const bool has_nyquist = (n % 2 == 0) && top == n / 2;
    const double effective_bins = static_cast<double>(top) - (has_nyquist ? 0.5 : 0.0);
    // Unnormalized c2r: mean square = sum over the full Hermitian spectrum of |X_k|^2.
    const double sigma = std::sqrt(spec.mean_square / (4.0 * effective_bins));

    thread_local std::vector<std::complex<double>> spectrum;
    spectrum.assign(n / 2 + 1, {0.0, 0.0});

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, sigma);
    for (std::size_t k = 1; k <= top; ++k) {
        if (has_nyquist && k == n / 2) {
            spectrum[k] = {std::sqrt(2.0) * normal(rng), 0.0};
        } else {
            const double re = normal(rng);
            const double im = normal(rng);
            spectrum[k] = {re, im};
        }
    }
    fftw_execute_dft_c2r(plans().inverse(n), reinterpret_cast<fftw_complex*>(spectrum.data()),
                         out.data());
}

NoiseTrace synthesize(const NoiseSpec& spec) {
    std::vector<double> samples;
    synthesize_into(spec, samples);
    return NoiseTrace(std::move(samples), spec.sample_rate);
}

std::vector<PsdPoint> estimate_psd(const NoiseTrace& trace, std::size_t segments) {
    if (segments == 0) throw ArgumentError("estimate_psd: segments must be >= 1");
    const std::size_t len = trace.size() / segments;
    if (len < 64) {
        throw ArgumentError("estimate_psd: " + std::to_string(trace.size()) +
                            " samples cannot be split into " + std::to_string(segments) +
                            " segments of >= 64 samples");
    }
    const double fs = trace.sample_rate();
    const std::size_t bins = len / 2 + 1;
    std::vector<double> power(bins, 0.0);
    std::vector<double> chunk(len);
    std::vector<std::complex<double>> spectrum(bins);
    fftw_plan plan = plans().forward(len);
    auto samples = trace.samples();
    for (std::size_t s = 0; s < segments; ++s) {
        std::copy_n(samples.begin() + static_cast<std::ptrdiff_t>(s * len), len, chunk.begin());
        fftw_execute_dft_r2c(plan, chunk.data(), reinterpret_cast<fftw_complex*>(spectrum.data()));
        for (std::size_t k = 0; k < bins; ++k) power[k] += std::norm(spectrum[k]);
    }
    const double ln = static_cast<double>(len);
    std::vector<PsdPoint> out(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        const bool edge = k == 0 || (len % 2 == 0 && k == len / 2);
        const double one_sided = edge ? 1.0 : 2.0;
        out[k] = {static_cast<double>(k) * fs / ln,
                  one_sided * power[k] / (static_cast<double>(segments) * fs * ln)};
    }
    return out;
}

SampleMoments sample_moments(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ArgumentError("sample_moments: length mismatch");
    if (x.size() < 2) throw ArgumentError("sample_moments: need at least 2 samples");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    SampleMoments m{sxx / n, syy / n, sxy / n, std::nullopt};
    const double mx = sx / n, my = sy / n;
    const double vx = m.mean_square_x - mx * mx;
    const double vy = m.mean_square_y - my * my;
    // Relative floor so rounding residue of a constant input reads as zero variance.
    if (vx > 1e-14 * m.mean_square_x && vy > 1e-14 * m.mean_square_y) {
        m.correlation = std::clamp((m.cross_moment - mx * my) / std::sqrt(vx * vy), -1.0, 1.0);
    }
    return m;
}

}  // namespace kljn
