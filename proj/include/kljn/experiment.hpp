#pragma once

#include "kljn/exchange_protocol.hpp"
#include "kljn/scheme_solver.hpp"
#include "kljn/zc_mode.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kljn {

inline constexpr std::string_view kVersion = "0.1.0";

// Process exit codes of the command-line driver.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitUnphysical = 3,
    kExitRuntime = 4,
};

struct ExperimentConfig {
    SchemeKind scheme = SchemeKind::classic;
    // classic
    std::optional<double> r_l, r_h;
    // vmg / fck1 (fck1 derives r_lb when omitted)
    std::optional<double> r_ha, r_la, r_hb, r_lb;
    double u_la_sq = 1.0;
    double bandwidth_hz = 500.0;
    double oversample = 16.0;
    std::size_t samples_per_bit = 16384;
    std::size_t bits_per_run = 1000;
    std::size_t runs = 10;
    std::uint64_t seed = 1;
    ZcMode zc_mode = ZcMode::sample_after;
    std::size_t calibration_bits = 1000;
    std::string output = "kljn";

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses flat `key = value` text (`#` starts a comment). `overrides` are
/// extra `key=value` strings applied after the text, replacing earlier values.
/// Defaults are applied and the result validated; any problem throws
/// ConfigurationError naming the key and line.
ExperimentConfig parse_config(std::string_view text, std::span<const std::string> overrides = {});

/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

/// FNV-1a 64 of serialize_config, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Shortest decimal text that reads back as the same double.
std::string format_double(double value);

/// May throw UnphysicalSolution.
SchemeConfig build_scheme(const ExperimentConfig& config);

SessionConfig session_config(const ExperimentConfig& config, unsigned threads = 0);

// Subcommands. Each writes its CSV under config.output and a human-readable
// report to `out`; they return an ExitCode and report failures on `err`.
int cmd_solve(const ExperimentConfig& config, std::ostream& out, std::ostream& err);
int cmd_simulate(const ExperimentConfig& config, std::ostream& out, std::ostream& err,
                 unsigned threads = 0);
int cmd_attack(const ExperimentConfig& config, std::ostream& out, std::ostream& err,
               unsigned threads = 0);

enum class HistStatistic { u2, i2, u_zc2 };
std::optional<HistStatistic> parse_hist_statistic(std::string_view text);

int cmd_hist(const ExperimentConfig& config, HistStatistic statistic, std::size_t bins,
             std::ostream& out, std::ostream& err, unsigned threads = 0);

// Published reference rows (moment table and attack table) next to
// simulated values, one row per scheme configuration. Scheme fields of
// `config` are ignored; its sampling fields apply.
int cmd_table1(const ExperimentConfig& config, std::ostream& out, std::ostream& err,
               unsigned threads = 0);
int cmd_table2(const ExperimentConfig& config, std::ostream& out, std::ostream& err,
               unsigned threads = 0);

// Published scheme rows used by table1/table2.
struct ReferenceRow {
    std::string name;
    SchemeKind kind;
    double r_ha, r_la, r_hb, r_lb;
    double u2;            // V^2
    double i2;            // A^2
    double p_ab;          // W
    double u_zc2_lh;      // V^2
    double u_zc2_hl;      // V^2
    double p_guess;       // Eve's success probability
    double sigma_p;
};

std::span<const ReferenceRow> reference_rows();

/// Scheme for a reference row at the given bandwidth with U_LA^2 = u_la_sq.
SchemeConfig reference_scheme(const ReferenceRow& row, double u_la_sq, double bandwidth);

/// The reference row whose four resistances match the config, if any.
const ReferenceRow* find_reference_row(const SchemeConfig& scheme);

}  // namespace kljn
