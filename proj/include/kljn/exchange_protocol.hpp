#pragma once

#include "kljn/scheme_solver.hpp"
#include "kljn/wire_circuit.hpp"
#include "kljn/zc_mode.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kljn {

struct BitCase {
    Choice alice = Choice::low;
    Choice bob = Choice::low;

    std::string label() const;  // "LL", "LH", "HL", "HH"
    bool secure() const noexcept { return alice != bob; }
    std::size_t index() const noexcept;  // LL=0, LH=1, HL=2, HH=3

    friend bool operator==(const BitCase&, const BitCase&) = default;
};

inline constexpr BitCase kCaseLH{Choice::low, Choice::high};
inline constexpr BitCase kCaseHL{Choice::high, Choice::low};

struct SessionConfig {
    SchemeConfig scheme;
    std::size_t samples_per_bit = 16384;
    double oversample = 16.0;  // f_s / (2 B)
    std::size_t bits_per_run = 1000;
    std::size_t runs = 10;
    std::uint64_t master_seed = 1;
    ZcMode zc_mode = ZcMode::sample_after;
    // Worker threads, 0 = hardware concurrency. Results do not depend on it.
    unsigned threads = 0;

    double sample_rate() const noexcept { return 2.0 * oversample * scheme.bandwidth; }
    void validate() const;
};

// Everything measured on the wire during one bit period.
struct BitObservation {
    MomentSummary moments;  // time averages
    std::size_t n_crossings = 0;
    std::optional<double> u_zc2;  // empty iff n_crossings == 0
};

struct ExchangeRecord {
    std::size_t run = 0;
    std::size_t bit = 0;
    BitCase bit_case;
    MomentSummary moments;
    std::size_t n_crossings = 0;
    std::optional<double> u_zc2;
    Choice alice_inference = Choice::low;  // Alice's guess of Bob's choice
    Choice bob_inference = Choice::low;    // Bob's guess of Alice's choice
    bool secure = false;
    bool classification_tie = false;
};

struct RunResult {
    std::vector<ExchangeRecord> records;
    std::size_t secure_count = 0;
    std::size_t classification_error_count = 0;
};

/// Synthesizes both connected branch noises for `bit_case`, forms the wire
/// trace and measures it. Branch seeds are derive_seed(bit_seed, {branch}).
BitObservation observe_bit(const SessionConfig& session, BitCase bit_case,
                           std::uint64_t bit_seed);

/// Same, additionally returning the wire trace.
BitObservation observe_bit(const SessionConfig& session, BitCase bit_case,
                           std::uint64_t bit_seed, WireTrace& wire);

/// `count` independent bits of a fixed case, seeded from (seed, case, index).
std::vector<BitObservation> observe_case(const SessionConfig& session, BitCase bit_case,
                                         std::size_t count, std::uint64_t seed);

/// Random per-bit choices for both parties. Deterministic in (master seed, run, bit).
BitCase draw_choices(std::uint64_t master_seed, std::size_t run, std::size_t bit);

/// Full session: `runs` x `bits_per_run` bit exchanges, each with fresh
/// independent noise, the parties' classifications, and Eve-visible zero
/// crossing statistics in session.zc_mode.
std::vector<RunResult> run_session(const SessionConfig& session);

struct Classification {
    Choice partner = Choice::low;
    bool tie = false;  // both candidate levels equidistant; partner defaults to L
};

/// The party knows its own choice, so only two wire levels are possible;
/// the nearer one to the measured mean-square voltage identifies the
/// partner's choice.
Classification classify_partner_choice(Party own_party, Choice own_choice, double measured_u2,
                                       const LevelTable& levels);

Classification classify_partner_choice(Party own_party, Choice own_choice, const WireTrace& wire,
                                       const SchemeConfig& scheme);

/// Records whose case is LH or HL, in order.
std::vector<ExchangeRecord> filter_secure_bits(std::span<const ExchangeRecord> records);

/// Key bit of a secure record given the publicly agreed value of HL.
bool key_bit(const ExchangeRecord& record, bool hl_value);

struct MeanWithError {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

MeanWithError mean_with_error(std::span<const double> values);

struct CaseAggregate {
    MeanWithError u2, i2, p_ab, u_zc2, n_crossings;
};

/// Per-case (indexed by BitCase::index) averages of per-bit statistics with
/// standard errors from the bit-to-bit spread.
std::array<CaseAggregate, 4> aggregate_by_case(std::span<const RunResult> runs);

CaseAggregate aggregate(std::span<const BitObservation> bits);

/// Runs fn(i) for i in [0, n) on `threads` workers (0 = hardware concurrency).
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace kljn
