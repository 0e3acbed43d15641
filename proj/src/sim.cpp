#include "halfstrip/sim.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "halfstrip/error.hpp"

namespace halfstrip {

namespace {

/// Runs body(k) for k in [0, n) on up to `threads` workers. Work items are
/// claimed dynamically; callers write results by index, so the outcome is
/// independent of scheduling.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t k = 0; k < n; ++k) body(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < n && !failed; k = next++) {
                try {
                    body(k);
                } catch (...) {
                    if (!failed.exchange(true)) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

struct LineFit {
    double slope = 0.0;
    double stderr_ = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const auto m = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd design(m, 2);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        design(k, 0) = 1.0;
        design(k, 1) = x[static_cast<std::size_t>(k)];
        rhs(k) = y[static_cast<std::size_t>(k)];
    }
    const Eigen::Vector2d beta = design.colPivHouseholderQr().solve(rhs);
    LineFit f{beta(1), 0.0};
    if (m > 2) {
        const double sse = (rhs - design * beta).squaredNorm();
        const double mean_x = design.col(1).mean();
        const double sxx = (design.col(1).array() - mean_x).square().sum();
        if (sxx > 0) f.stderr_ = std::sqrt(sse / static_cast<double>(m - 2) / sxx);
    }
    return f;
}

}  // namespace

Trajectory simulate(const ChainModel& model, const State& start, std::uint64_t horizon, std::uint64_t seed) {
    model.check_state(start);
    Trajectory t;
    t.seed = seed;
    t.steps = horizon;
    t.states.reserve(static_cast<std::size_t>(horizon) + 1);
    t.states.push_back(start);
    StreamRng rng(seed, 0);
    IncrementDistribution dist;
    State s = start;
    for (std::uint64_t n = 0; n < horizon; ++n) {
        const Atom a = model.kernel().sample(s.position, s.label, rng.uniform(), dist);
        s = {s.position + a.jump, a.next_label};
        t.states.push_back(s);
    }
    return t;
}

std::vector<PassageSample> sample_passage_times(const ChainModel& model, const State& start, double level,
                                                std::uint64_t cap, std::size_t n, std::uint64_t master_seed,
                                                unsigned threads) {
    model.check_state(start);
    if (cap < 1) throw Error(ErrorKind::InvalidArgument, "cap must be at least 1");
    std::vector<PassageSample> out(n);
    parallel_for(n, threads, [&](std::size_t k) {
        PassageSample& ps = out[k];
        ps.cap = cap;
        ps.start = start;
        ps.level = level;
        if (start.position <= level) return;  // tau = 0
        StreamRng rng(master_seed, k);
        IncrementDistribution dist;
        State s = start;
        for (std::uint64_t t = 1; t <= cap; ++t) {
            const Atom a = model.kernel().sample(s.position, s.label, rng.uniform(), dist);
            s = {s.position + a.jump, a.next_label};
            if (s.position <= level) {
                ps.tau = t;
                return;
            }
        }
        ps.tau = cap;
        ps.censored = true;
    });
    return out;
}

double censored_fraction(const std::vector<PassageSample>& samples) noexcept {
    if (samples.empty()) return 0.0;
    const auto c = std::count_if(samples.begin(), samples.end(), [](const PassageSample& s) { return s.censored; });
    return static_cast<double>(c) / static_cast<double>(samples.size());
}

const char* to_string(TailMethod m) noexcept {
    return m == TailMethod::Hill ? "hill" : "survival-regression";
}

const char* to_string(EmpiricalCall c) noexcept {
    switch (c) {
        case EmpiricalCall::Escaping: return "escaping";
        case EmpiricalCall::ReturningDivergingMean: return "returning-with-diverging-mean";
        case EmpiricalCall::ReturningStableMean: return "returning-with-stable-mean";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Survival curve and tail fits

SurvivalCurve::SurvivalCurve(const std::vector<PassageSample>& samples) {
    std::vector<std::pair<double, bool>> obs;  // (time, is_event)
    obs.reserve(samples.size());
    for (const PassageSample& s : samples) obs.emplace_back(static_cast<double>(s.tau), !s.censored);
    // Events before censorings at equal times (standard KM convention).
    std::sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) {
        return a.first < b.first || (a.first == b.first && a.second && !b.second);
    });
    double at_risk = static_cast<double>(obs.size());
    double surv = 1.0;
    std::size_t k = 0;
    while (k < obs.size()) {
        const double t = obs[k].first;
        double events = 0.0, leaving = 0.0;
        while (k < obs.size() && obs[k].first == t) {
            if (obs[k].second) events += 1.0;
            leaving += 1.0;
            ++k;
        }
        if (events > 0) {
            surv *= 1.0 - events / at_risk;
            times_.push_back(t);
            values_.push_back(surv);
        }
        at_risk -= leaving;
    }
}

double SurvivalCurve::operator()(double t) const noexcept {
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    if (it == times_.begin()) return 1.0;
    return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

std::optional<double> SurvivalCurve::quantile_time(double survival_level) const noexcept {
    for (std::size_t k = 0; k < times_.size(); ++k)
        if (values_[k] <= survival_level) return times_[k];
    return std::nullopt;
}

TailEstimate tail_exponent(const std::vector<PassageSample>& samples, const TailOptions& options) {
    const auto uncensored = static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [](const PassageSample& s) { return !s.censored; }));
    if (uncensored < options.min_uncensored)
        throw Error(ErrorKind::TooFewSamples, std::to_string(uncensored) + " uncensored samples, need " +
                                                  std::to_string(options.min_uncensored));
    TailEstimate est;
    est.n_samples = samples.size();
    est.censored_fraction = censored_fraction(samples);
    est.method = options.method;

    const SurvivalCurve surv(samples);
    const auto t_lo = surv.quantile_time(1.0 - options.quantile_lo);
    if (!t_lo) throw Error(ErrorKind::TooFewSamples, "survival never reaches the lower quantile");
    const double lo = std::max(*t_lo, 1.0);
    const double hi = surv.quantile_time(1.0 - options.quantile_hi).value_or(surv.last_event_time());
    est.window_lo = lo;
    est.window_hi = hi;
    if (!(hi > lo)) throw Error(ErrorKind::TooFewSamples, "empty survival regression window");

    std::vector<double> lx, ly;
    for (int k = 0; k < options.grid_points; ++k) {
        const double t = std::floor(lo * std::pow(hi / lo, static_cast<double>(k) / (options.grid_points - 1)));
        if (!lx.empty() && std::log(t) <= lx.back()) continue;
        const double s = surv(t);
        if (s <= 0) break;
        lx.push_back(std::log(t));
        ly.push_back(std::log(s));
    }
    if (lx.size() < 6) throw Error(ErrorKind::TooFewSamples, "too few distinct times in the regression window");

    const LineFit all = least_squares(lx, ly);
    est.regression_exponent = -all.slope;
    const std::size_t half = lx.size() / 2;
    const LineFit lower = least_squares({lx.begin(), lx.begin() + static_cast<std::ptrdiff_t>(half) + 1},
                                        {ly.begin(), ly.begin() + static_cast<std::ptrdiff_t>(half) + 1});
    const LineFit upper = least_squares({lx.begin() + static_cast<std::ptrdiff_t>(half), lx.end()},
                                        {ly.begin() + static_cast<std::ptrdiff_t>(half), ly.end()});
    est.lower_half_exponent = -lower.slope;
    est.upper_half_exponent = -upper.slope;

    // Censored Hill estimator over the samples above the lower window edge.
    std::vector<const PassageSample*> top;
    for (const PassageSample& s : samples)
        if (static_cast<double>(s.tau) > lo) top.push_back(&s);
    if (top.size() >= 2) {
        double log_sum = 0.0;
        std::size_t events = 0;
        for (const PassageSample* s : top) {
            log_sum += std::log(static_cast<double>(s->tau) / lo);
            if (!s->censored) ++events;
        }
        const double hill = log_sum / static_cast<double>(top.size());
        const double event_share = static_cast<double>(events) / static_cast<double>(top.size());
        if (hill > 0 && event_share > 0) est.hill_exponent = event_share / hill;
    }

    if (options.method == TailMethod::Hill) {
        est.exponent = est.hill_exponent;
        est.stderr_ = est.hill_exponent / std::sqrt(static_cast<double>(std::max<std::size_t>(top.size(), 1)));
    } else {
        est.exponent = est.regression_exponent;
        est.stderr_ = all.stderr_;
    }
    est.power_law_consistent = est.exponent > 0 && est.lower_half_exponent > 0 &&
                               est.upper_half_exponent / est.lower_half_exponent < options.curvature_limit;
    return est;
}

MomentEstimate empirical_moment(const std::vector<PassageSample>& samples, double s,
                                std::optional<std::uint64_t> truncate_at) {
    if (!(s >= 0)) throw Error(ErrorKind::InvalidArgument, "moment order must be non-negative");
    MomentEstimate out;
    if (samples.empty()) return out;
    double total = 0.0;
    for (const PassageSample& p : samples) {
        std::uint64_t t = p.tau;
        bool cut = p.censored;
        if (truncate_at && t >= *truncate_at && (p.censored || t > *truncate_at)) {
            t = *truncate_at;
            cut = true;
        }
        total += std::pow(static_cast<double>(t), s);
        out.lower_bound = out.lower_bound || cut;
    }
    out.estimate = total / static_cast<double>(samples.size());
    return out;
}

// ---------------------------------------------------------------------------
// Recurrence diagnostic

DiagnosticReport recurrence_diagnostic(const ChainModel& model, const DiagnosticParams& p) {
    model.check_state(p.start);
    if (p.doublings < 2) throw Error(ErrorKind::InvalidArgument, "diagnostic needs at least two horizons");
    if (p.base_horizon < 1 || p.n == 0) throw Error(ErrorKind::InvalidArgument, "empty diagnostic run");
    const auto levels = static_cast<std::size_t>(p.doublings);
    std::vector<std::uint64_t> horizons(levels);
    for (std::size_t h = 0; h < levels; ++h) horizons[h] = p.base_horizon << h;
    const std::uint64_t t_max = horizons.back();

    struct PathSummary {
        std::uint64_t tau = 0;
        bool returned = false;
        std::vector<double> position;
        std::vector<std::uint64_t> visits;
    };
    std::vector<PathSummary> paths(p.n);
    parallel_for(p.n, p.threads, [&](std::size_t k) {
        PathSummary& ps = paths[k];
        ps.position.assign(levels, 0.0);
        ps.visits.assign(levels, 0);
        StreamRng rng(p.seed, k);
        IncrementDistribution dist;
        State s = p.start;
        if (s.position <= p.level) ps.returned = true;
        std::size_t next_h = 0;
        std::uint64_t visits = 0;
        for (std::uint64_t t = 1; t <= t_max; ++t) {
            const Atom a = model.kernel().sample(s.position, s.label, rng.uniform(), dist);
            s = {s.position + a.jump, a.next_label};
            if (s.position <= p.level) {
                ++visits;
                if (!ps.returned) {
                    ps.returned = true;
                    ps.tau = t;
                }
            }
            if (t == horizons[next_h]) {
                ps.position[next_h] = s.position;
                ps.visits[next_h] = visits;
                ++next_h;
            }
        }
        if (!ps.returned) ps.tau = t_max + 1;
    });

    DiagnosticReport rep;
    rep.horizons = horizons;
    for (std::size_t h = 0; h < levels; ++h) {
        const std::uint64_t T = horizons[h];
        std::vector<double> pos;
        pos.reserve(p.n);
        double returned = 0.0, mean_tau = 0.0, occ = 0.0;
        for (const PathSummary& ps : paths) {
            pos.push_back(ps.position[h]);
            if (ps.returned && ps.tau <= T) returned += 1.0;
            mean_tau += static_cast<double>(std::min(ps.tau, T));
            occ += static_cast<double>(ps.visits[h]) / static_cast<double>(T);
        }
        const auto n = static_cast<double>(p.n);
        rep.return_fraction.push_back(returned / n);
        rep.median_position.push_back(median(std::move(pos)));
        rep.mean_truncated_passage.push_back(mean_tau / n);
        rep.occupation.push_back(occ / n);
    }
    const std::size_t last = levels - 1;
    rep.median_growth_ratio = rep.median_position[last - 1] > 0
                                  ? rep.median_position[last] / rep.median_position[last - 1]
                                  : std::numeric_limits<double>::infinity();
    rep.mean_passage_ratio = rep.mean_truncated_passage[last] / rep.mean_truncated_passage[last - 1];

    if (1.0 - rep.return_fraction[last] > p.escape_fraction) {
        rep.call = EmpiricalCall::Escaping;
    } else if (rep.mean_passage_ratio <= p.stable_ratio) {
        rep.call = EmpiricalCall::ReturningStableMean;
    } else {
        rep.call = EmpiricalCall::ReturningDivergingMean;
    }
    std::ostringstream rule;
    rule << "escaping if the share of paths not yet at or below level " << p.level << " by horizon " << t_max
         << " exceeds " << p.escape_fraction << "; otherwise stable mean if mean min(tau, T) grows by at most a factor "
         << p.stable_ratio << " from T=" << horizons[last - 1] << " to T=" << t_max << ", else diverging mean";
    rep.rule = rule.str();
    return rep;
}

}  // namespace halfstrip
