#pragma once

#include "kljn/wire_circuit.hpp"

#include <array>
#include <string_view>

namespace kljn {

enum class SchemeKind { classic, vmg, fck1 };

enum class BranchId { ha, la, hb, lb };

inline constexpr std::array<BranchId, 4> kAllBranches{BranchId::ha, BranchId::la, BranchId::hb,
                                                      BranchId::lb};

std::string_view to_string(SchemeKind kind);
std::string_view to_string(BranchId id);

enum class Choice { low, high };
enum class Party { alice, bob };

std::string_view to_string(Choice c);  // "L" / "H"

// Which branch a party connects for a given choice.
BranchId branch_of(Party party, Choice choice);

struct BranchParams {
    double resistance = 0.0;   // ohm
    double mean_square = 0.0;  // V^2
};

// The four resistor branches and the common noise bandwidth. Construct via
// classic_kljn, solve_vmg or fck1_scheme; validate() checks positivity and the
// LH/HL security equalities.
struct SchemeConfig {
    std::array<BranchParams, 4> branches{};  // indexed by BranchId
    double bandwidth = 500.0;                // Hz
    SchemeKind kind = SchemeKind::classic;

    const BranchParams& at(BranchId id) const { return branches[static_cast<std::size_t>(id)]; }
    BranchParams& at(BranchId id) { return branches[static_cast<std::size_t>(id)]; }

    void validate() const;
};

struct SecurityReport {
    MomentSummary lh;  // Alice L, Bob H
    MomentSummary hl;  // Alice H, Bob L
    // max over {u2, i2, p_ab} of |lh - hl| / scale, where the scale is
    // max(|lh|, |hl|) for u2 and i2 and sqrt(u2 * i2) for p_ab.
    double max_relative_mismatch = 0.0;
    // |p| <= 1e-12 sqrt(u2 i2) for both secure pairings.
    bool zero_power = false;
};

struct LevelEntry {
    double u2;
    double i2;
};

// Wire levels for the pairings LL, LH, HL, HH (Alice's choice first).
struct LevelTable {
    LevelEntry ll, lh, hl, hh;

    const LevelEntry& at(Choice alice, Choice bob) const;
};

inline constexpr double kSecurityTolerance = 1e-9;
inline constexpr double kZeroPowerTolerance = 1e-12;

/// Classic scheme: identical resistor pairs at both ends, all at one noise
/// temperature. `u2_low` is the mean square of the R_L generators.
/// Throws ConfigurationError unless 0 < r_l < r_h and u2_low > 0.
SchemeConfig classic_kljn(double r_l, double r_h, double u2_low, double bandwidth);

/// Generator mean squares for four freely chosen resistors, with U_LA^2 as
/// the free parameter, that equalize the LH and HL wire statistics.
/// Throws UnphysicalSolution naming the branch if any mean square is <= 0,
/// and UnphysicalSolution with an empty branch if r_ha == r_la.
SchemeConfig solve_vmg(double r_ha, double r_la, double r_hb, double r_lb, double u2_la,
                       double bandwidth);

struct VmgMeanSquares {
    double hb, ha, lb;
};

/// The three solved mean squares, as the expanded rational forms.
VmgMeanSquares vmg_mean_squares(double r_ha, double r_la, double r_hb, double r_lb, double u2_la);

/// The same solution in factorized form; independent evaluation route used
/// to cross-check vmg_mean_squares.
VmgMeanSquares vmg_mean_squares_factorized(double r_ha, double r_la, double r_hb, double r_lb,
                                           double u2_la);

/// R_LB that makes the geometric means of both secure pairings equal:
/// R_HB R_LA / R_HA.
double fck1_fourth_resistor(double r_ha, double r_la, double r_hb);

/// Zero-power scheme: R_LB from fck1_fourth_resistor, mean squares from solve_vmg.
SchemeConfig fck1_scheme(double r_ha, double r_la, double r_hb, double u2_la, double bandwidth);

std::array<double, 4> branch_temperatures(const SchemeConfig& config);  // indexed by BranchId

SecurityReport security_check(const SchemeConfig& config);

LevelTable level_table(const SchemeConfig& config);

}  // namespace kljn
