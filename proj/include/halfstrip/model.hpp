#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace halfstrip {

using Label = std::size_t;  // index into ChainModel::labels()

struct State {
    double position = 0.0;
    Label label = 0;
};

/// One outcome of a step: X moves by `jump`, the label becomes `next_label`.
struct Atom {
    double jump = 0.0;
    Label next_label = 0;
    double probability = 0.0;
};

using IncrementDistribution = std::vector<Atom>;

/// Index of the atom selected by inverse CDF for a uniform draw `u`; atoms with
/// zero probability are never selected.
std::size_t sample_atom(const IncrementDistribution& dist, double u) noexcept;

/// One-step law of a half-strip chain.
///
/// Implementations write the atoms of the law at (x, i) into `out`, which the
/// caller reuses across calls; kernels must not keep references to it.
class Kernel {
public:
    virtual ~Kernel() = default;
    virtual void atoms(double position, Label label, IncrementDistribution& out) const = 0;

    /// One step driven by the uniform `u`, same result as inverse CDF over atoms().
    virtual Atom sample(double position, Label label, double u, IncrementDistribution& scratch) const {
        atoms(position, label, scratch);
        return scratch[sample_atom(scratch, u)];
    }
};

/// Wraps a callable; mostly for tests and ad-hoc models.
class FunctionKernel final : public Kernel {
public:
    using Fn = std::function<void(double, Label, IncrementDistribution&)>;
    explicit FunctionKernel(Fn fn) : fn_(std::move(fn)) {}
    void atoms(double position, Label label, IncrementDistribution& out) const override {
        out.clear();
        fn_(position, label, out);
    }

private:
    Fn fn_;
};

/// Immutable half-strip chain: a label set and a finitely supported kernel.
class ChainModel {
public:
    ChainModel(std::vector<std::string> labels, std::shared_ptr<const Kernel> kernel,
               double formula_floor, std::string description);

    const std::vector<std::string>& labels() const noexcept { return labels_; }
    std::size_t label_count() const noexcept { return labels_.size(); }
    double formula_floor() const noexcept { return formula_floor_; }
    const std::string& description() const noexcept { return description_; }
    const Kernel& kernel() const noexcept { return *kernel_; }

    /// Throws InvalidState for negative/non-finite positions or unknown labels.
    void check_state(const State& s) const;
    IncrementDistribution distribution(const State& s) const;
    void distribution(const State& s, IncrementDistribution& out) const;

    /// Index of `name` in the label list; throws InvalidArgument when absent.
    Label label_index(const std::string& name) const;

private:
    std::vector<std::string> labels_;
    std::shared_ptr<const Kernel> kernel_;
    double formula_floor_;
    std::string description_;
};

// ---------------------------------------------------------------------------
// Correlated random walk

struct CrwParams {
    double q = 0.5;
    double c_plus = 0.0;
    double c_minus = 0.0;
    double delta = 1.0;
    double correction_amplitude = 0.0;
    std::optional<double> formula_floor;  // default: smallest valid integer
};

/// Label indices of the correlated walk: 0 is "+1", 1 is "-1".
inline constexpr Label kCrwPlus = 0;
inline constexpr Label kCrwMinus = 1;

/// Probability of continuing in direction i (landing label j == i) at x, before clipping.
double crw_persistence(const CrwParams& p, Label i, double x);

/// Default floor: smallest integer x >= 1 from which every corrected
/// probability stays inside [eps, 1 - eps], eps = min(0.01, q/2, (1-q)/2).
double crw_default_floor(const CrwParams& p);

ChainModel make_crw(const CrwParams& params);

// ---------------------------------------------------------------------------
// Tabular kernels
//
// Each atom's probability is p + p_inv_x / x + p_corr * x^(-1-delta). Lines are
// split into segments; the segment with the largest `from <= x` applies.

struct TabularAtom {
    double jump = 0.0;
    std::string to;
    double p = 0.0;
    double p_inv_x = 0.0;
    double p_corr = 0.0;
};

struct TabularSegment {
    double from = 0.0;
    std::vector<TabularAtom> atoms;
};

enum class BoundaryRule {
    Reflect,   // landing |x + jump|, label kept
    Clamp,     // landing 0, label kept
    Redirect,  // whole step replaced by `boundary_atom` with probability 1
};

struct TabularSpec {
    std::vector<std::string> labels;
    std::vector<std::vector<TabularSegment>> lines;  // indexed like labels
    double delta = 1.0;
    BoundaryRule boundary = BoundaryRule::Reflect;
    std::optional<TabularAtom> boundary_atom;  // Redirect only; p is ignored
    std::string description;
};

ChainModel make_tabular(const TabularSpec& spec);

/// Chain seen through (x, i) -> (x + a_i, i); requires a_i >= 0.
ChainModel shift_model(const ChainModel& model, const Eigen::VectorXd& offsets);

// ---------------------------------------------------------------------------
// Validation

struct StateCheck {
    State state;
    double probability_sum = 0.0;
    bool stochastic = true;
    bool landings_nonnegative = true;
};

struct ValidationReport {
    bool stochastic = true;
    bool landings_nonnegative = true;
    bool irreducible = true;
    Eigen::MatrixXd limiting_q;
    double moment_order = 4.0;
    double moment_bound = 0.0;  // empirical C_p: max over grid of E|jump|^p
    double max_abs_jump = 0.0;
    std::vector<StateCheck> failures;
    bool ok() const noexcept { return stochastic && landings_nonnegative && irreducible; }
};

/// Default validation grid: positions 0..20 plus half-decade steps 10..1e6.
std::vector<double> default_validation_grid();

ValidationReport validate(const ChainModel& model, double moment_order = 4.0,
                          const std::vector<double>& grid = default_validation_grid());

}  // namespace halfstrip
