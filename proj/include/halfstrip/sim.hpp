#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "halfstrip/model.hpp"
#include "halfstrip/philox.hpp"

namespace halfstrip {

struct Trajectory {
    std::vector<State> states;  // steps + 1 entries
    std::uint64_t seed = 0;
    std::uint64_t steps = 0;
};

/// Exact kernel sampling, one uniform per step from stream 0 of `seed`.
Trajectory simulate(const ChainModel& model, const State& start, std::uint64_t horizon, std::uint64_t seed);

/// One draw of tau = min{n >= 0 : X_n <= level}, censored at `cap`.
struct PassageSample {
    std::uint64_t tau = 0;  // == cap when censored
    bool censored = false;
    std::uint64_t cap = 0;
    State start;
    double level = 0.0;

    std::uint64_t steps() const noexcept { return tau; }
};

/// `n` independent passage times; sample k uses stream k of `master_seed`, so
/// the result does not depend on `threads`. Sample k follows the same path as
/// simulate(model, start, cap, master_seed) when k == 0.
std::vector<PassageSample> sample_passage_times(const ChainModel& model, const State& start, double level,
                                                std::uint64_t cap, std::size_t n, std::uint64_t master_seed,
                                                unsigned threads = 1);

double censored_fraction(const std::vector<PassageSample>& samples) noexcept;

enum class TailMethod { SurvivalRegression, Hill };

const char* to_string(TailMethod m) noexcept;

struct TailOptions {
    TailMethod method = TailMethod::SurvivalRegression;
    double quantile_lo = 0.5;
    double quantile_hi = 0.99;
    std::size_t min_uncensored = 1000;
    int grid_points = 40;
    double curvature_limit = 1.5;  // upper/lower half slope ratio above which the tail is not a power law
};

struct TailEstimate {
    double exponent = 0.0;
    double stderr_ = 0.0;
    std::size_t n_samples = 0;
    double censored_fraction = 0.0;
    TailMethod method = TailMethod::SurvivalRegression;
    double regression_exponent = 0.0;
    double hill_exponent = 0.0;
    double lower_half_exponent = 0.0;
    double upper_half_exponent = 0.0;
    bool power_law_consistent = true;
    double window_lo = 0.0;  // time range actually fitted
    double window_hi = 0.0;
};

/// Kaplan-Meier survival at time t (right-censored samples keep their mass until their censoring time).
class SurvivalCurve {
public:
    explicit SurvivalCurve(const std::vector<PassageSample>& samples);
    double operator()(double t) const noexcept;
    /// Smallest event time with S(t) <= level; nullopt when the curve never gets there.
    std::optional<double> quantile_time(double survival_level) const noexcept;
    double last_event_time() const noexcept { return times_.empty() ? 0.0 : times_.back(); }

private:
    std::vector<double> times_;
    std::vector<double> values_;  // S right after times_[k]
};

TailEstimate tail_exponent(const std::vector<PassageSample>& samples, const TailOptions& options = {});

struct MomentEstimate {
    double estimate = 0.0;
    bool lower_bound = false;  // some sample was censored, so the truth is at least `estimate`
};

/// Mean of min(tau, T)^s with T = `truncate_at` (defaults to each sample's cap).
MomentEstimate empirical_moment(const std::vector<PassageSample>& samples, double s,
                                std::optional<std::uint64_t> truncate_at = std::nullopt);

enum class EmpiricalCall { Escaping, ReturningDivergingMean, ReturningStableMean };

const char* to_string(EmpiricalCall c) noexcept;

struct DiagnosticParams {
    State start;
    double level = 0.0;
    std::uint64_t base_horizon = 10'000;
    int doublings = 3;  // horizons base, 2 base, ..., 2^(doublings-1) base
    std::size_t n = 1000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    double escape_fraction = 0.5;
    double stable_ratio = 1.1;
};

struct DiagnosticReport {
    std::vector<std::uint64_t> horizons;
    std::vector<double> return_fraction;         // share of paths with X_n <= level for some n <= horizon
    std::vector<double> median_position;         // median X at horizon
    std::vector<double> mean_truncated_passage;  // mean of min(tau, horizon)
    std::vector<double> occupation;              // mean share of time spent at X <= level
    double median_growth_ratio = 0.0;            // last two horizons
    double mean_passage_ratio = 0.0;             // last two horizons
    EmpiricalCall call = EmpiricalCall::ReturningStableMean;
    std::string rule;
};

DiagnosticReport recurrence_diagnostic(const ChainModel& model, const DiagnosticParams& params);

}  // namespace halfstrip
