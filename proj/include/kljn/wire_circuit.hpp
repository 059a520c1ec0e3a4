#pragma once

#include "kljn/noise_synthesis.hpp"

#include <optional>
#include <span>
#include <vector>

namespace kljn {

// One resistor with its noise generator, as connected to the wire.
struct Branch {
    double resistance = 0.0;   // ohm
    double mean_square = 0.0;  // V^2 of the generator
    std::optional<NoiseTrace> trace;
};

// Wire voltage and current for one bit period. Positive current flows from
// Alice to Bob.
struct WireTrace {
    std::vector<double> u_c;  // V
    std::vector<double> i_c;  // A
    double sample_rate = 0.0;

    std::size_t size() const noexcept { return u_c.size(); }
};

// Second moments of the wire: mean-square voltage and current, mean power
// flowing from Alice to Bob, and the normalized cross moment rho = p_ab / sqrt(u2 * i2).
struct MomentSummary {
    double u2 = 0.0;
    double i2 = 0.0;
    double p_ab = 0.0;
    double rho = 0.0;
};

struct Resultants {
    double parallel;
    double serial;
};

struct EquilibriumSpectra {
    double s_u;  // V^2/Hz
    double s_i;  // A^2/Hz
};

/// Pointwise voltage divider of the two-generator loop:
///   U_c = (U_A R_B + U_B R_A) / (R_A + R_B),  I_c = (U_A - U_B) / (R_A + R_B).
WireTrace wire_observables(const Branch& alice, const Branch& bob);

/// Raw-buffer form of wire_observables for the simulation hot loop.
void wire_observables_into(std::span<const double> u_alice, double r_alice,
                           std::span<const double> u_bob, double r_bob, WireTrace& out);

MomentSummary analytic_moments(double r_a, double u2_a, double r_b, double u2_b);

/// Moment summary from time averages of a wire trace.
MomentSummary measured_moments(const WireTrace& wire);

Resultants resultants(double r_a, double r_b);

EquilibriumSpectra equilibrium_spectra(double temperature_k, double r_a, double r_b);

/// Variance of U_c conditioned on I_c = 0 for jointly Gaussian (U_c, I_c):
/// u2 * (1 - rho^2). This is the continuous-time limit of the mean-square
/// voltage sampled at current zero crossings.
double conditional_zc_variance(const MomentSummary& m);

}  // namespace kljn
