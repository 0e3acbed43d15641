#include "halfstrip/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <utility>

#include "halfstrip/error.hpp"
#include "halfstrip/markov.hpp"

namespace halfstrip {

std::size_t sample_atom(const IncrementDistribution& dist, double u) noexcept {
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < dist.size(); ++k) {
        if (dist[k].probability <= 0) continue;
        last_positive = k;
        cumulative += dist[k].probability;
        if (u < cumulative) return k;
    }
    return last_positive;
}

ChainModel::ChainModel(std::vector<std::string> labels, std::shared_ptr<const Kernel> kernel,
                       double formula_floor, std::string description)
    : labels_(std::move(labels)),
      kernel_(std::move(kernel)),
      formula_floor_(formula_floor),
      description_(std::move(description)) {
    if (labels_.empty()) throw Error(ErrorKind::InvalidModel, "label set must be non-empty");
    if (!kernel_) throw Error(ErrorKind::InvalidModel, "kernel must be set");
}

void ChainModel::check_state(const State& s) const {
    if (!std::isfinite(s.position) || s.position < 0)
        throw Error(ErrorKind::InvalidState, "position must be finite and non-negative");
    if (s.label >= labels_.size()) throw Error(ErrorKind::InvalidState, "label out of range");
}

IncrementDistribution ChainModel::distribution(const State& s) const {
    IncrementDistribution out;
    distribution(s, out);
    return out;
}

void ChainModel::distribution(const State& s, IncrementDistribution& out) const {
    check_state(s);
    kernel_->atoms(s.position, s.label, out);
}

Label ChainModel::label_index(const std::string& name) const {
    const auto it = std::find(labels_.begin(), labels_.end(), name);
    if (it == labels_.end()) throw Error(ErrorKind::InvalidArgument, "unknown label '" + name + "'");
    return static_cast<Label>(it - labels_.begin());
}

// ---------------------------------------------------------------------------
// Correlated random walk

namespace {

constexpr double kFloorScanLimit = 1e5;

double crw_sign(Label i) { return i == kCrwPlus ? 1.0 : -1.0; }

double crw_c(const CrwParams& p, Label i) { return i == kCrwPlus ? p.c_plus : p.c_minus; }

double crw_band(const CrwParams& p) { return std::min({0.01, p.q / 2, (1 - p.q) / 2}); }

/// Last integer in [1, kFloorScanLimit] where some persistence leaves [lo, hi]; 0 if none.
double crw_last_violation(const CrwParams& p, double lo, double hi, double start = 1.0) {
    double last = 0.0;
    for (double x = start; x <= kFloorScanLimit; x += 1.0) {
        for (Label i : {kCrwPlus, kCrwMinus}) {
            const double r = crw_persistence(p, i, x);
            if (!(r >= lo && r <= hi)) last = x;
        }
    }
    return last;
}

void crw_check_tail(const CrwParams& p, double lo, double hi) {
    // Past the scan the corrections are bounded by their magnitudes at the scan limit.
    const double x = kFloorScanLimit;
    const double bound = (std::max(std::abs(p.c_plus), std::abs(p.c_minus)) / 2) / x +
                         std::abs(p.correction_amplitude) * std::pow(x, -1 - p.delta);
    if (p.q - bound < lo || p.q + bound > hi)
        throw Error(ErrorKind::InvalidArgument, "CRW probabilities do not settle inside the valid band");
}

class CrwKernel final : public Kernel {
public:
    CrwKernel(CrwParams p, double floor) : p_(p), floor_(floor) {}

    void atoms(double x, Label i, IncrementDistribution& out) const override {
        out.clear();
        if (x < 1.0) {
            out.push_back({1.0, kCrwPlus, 1.0});
            return;
        }
        const double stay = x >= floor_ ? crw_persistence(p_, i, x) : p_.q;
        const double s = crw_sign(i);
        const Label other = i == kCrwPlus ? kCrwMinus : kCrwPlus;
        out.push_back({s, i, stay});
        out.push_back({-s, other, 1.0 - stay});
    }

    Atom sample(double x, Label i, double u, IncrementDistribution&) const override {
        if (x < 1.0) return {1.0, kCrwPlus, 1.0};
        const double stay = x >= floor_ ? crw_persistence(p_, i, x) : p_.q;
        const double s = crw_sign(i);
        if (u < stay) return {s, i, stay};
        return {-s, i == kCrwPlus ? kCrwMinus : kCrwPlus, 1.0 - stay};
    }

private:
    CrwParams p_;
    double floor_;
};

}  // namespace

double crw_persistence(const CrwParams& p, Label i, double x) {
    const double s = crw_sign(i);
    double r = p.q + s * crw_c(p, i) / (2 * x);
    if (p.correction_amplitude != 0.0) r += s * p.correction_amplitude * std::pow(x, -1 - p.delta);
    return r;
}

double crw_default_floor(const CrwParams& p) {
    const double eps = crw_band(p);
    crw_check_tail(p, eps, 1 - eps);
    return crw_last_violation(p, eps, 1 - eps) + 1.0;
}

ChainModel make_crw(const CrwParams& params) {
    if (!(params.q > 0 && params.q < 1)) throw Error(ErrorKind::InvalidArgument, "q must lie in (0, 1)");
    if (!(params.delta > 0) || !std::isfinite(params.delta))
        throw Error(ErrorKind::InvalidArgument, "delta must be positive");
    if (!std::isfinite(params.c_plus) || !std::isfinite(params.c_minus) ||
        !std::isfinite(params.correction_amplitude))
        throw Error(ErrorKind::InvalidArgument, "CRW constants must be finite");

    double floor = 0.0;
    if (params.formula_floor) {
        floor = *params.formula_floor;
        if (!(floor >= 1.0) || !std::isfinite(floor))
            throw Error(ErrorKind::InvalidArgument, "formula_floor must be >= 1");
        crw_check_tail(params, 0.0, 1.0);
        if (crw_last_violation(params, 0.0, 1.0, std::ceil(floor)) > 0 ||
            crw_persistence(params, kCrwPlus, floor) < 0 || crw_persistence(params, kCrwPlus, floor) > 1 ||
            crw_persistence(params, kCrwMinus, floor) < 0 || crw_persistence(params, kCrwMinus, floor) > 1)
            throw Error(ErrorKind::InvalidArgument, "CRW probabilities leave [0, 1] above formula_floor");
    } else {
        floor = crw_default_floor(params);
    }

    std::string desc = "correlated random walk q=" + std::to_string(params.q) +
                       " c+=" + std::to_string(params.c_plus) + " c-=" + std::to_string(params.c_minus) +
                       " delta=" + std::to_string(params.delta) +
                       " amp=" + std::to_string(params.correction_amplitude);
    return ChainModel({"+1", "-1"}, std::make_shared<CrwKernel>(params, floor), floor, std::move(desc));
}

// ---------------------------------------------------------------------------
// Tabular

namespace {

constexpr double kRenormalizeTol = 1e-9;

struct ResolvedAtom {
    double jump;
    Label to;
    double p, p_inv_x, p_corr;
};

struct ResolvedSegment {
    double from;
    std::vector<ResolvedAtom> atoms;
};

class TabularKernel final : public Kernel {
public:
    TabularKernel(std::vector<std::vector<ResolvedSegment>> lines, double delta, BoundaryRule rule,
                  std::optional<Atom> redirect)
        : lines_(std::move(lines)), delta_(delta), rule_(rule), redirect_(redirect) {}

    void atoms(double x, Label i, IncrementDistribution& out) const override {
        out.clear();
        const ResolvedSegment& seg = segment(i, x);
        double sum = 0.0;
        for (const ResolvedAtom& a : seg.atoms) {
            double p = a.p;
            if (a.p_inv_x != 0.0) p += a.p_inv_x / x;
            if (a.p_corr != 0.0) p += a.p_corr * std::pow(x, -1 - delta_);
            if (p < 0) {
                if (p < -1e-12)
                    throw Error(ErrorKind::InvalidModel, "negative probability at x=" + std::to_string(x));
                p = 0.0;
            }
            sum += p;
            out.push_back({a.jump, a.to, p});
        }
        if (std::abs(sum - 1.0) > kRenormalizeTol)
            throw Error(ErrorKind::InvalidModel, "probabilities sum to " + std::to_string(sum) +
                                                     " at x=" + std::to_string(x));
        if (sum != 1.0)
            for (Atom& a : out) a.probability /= sum;

        for (Atom& a : out) {
            if (x + a.jump >= 0) continue;
            switch (rule_) {
                case BoundaryRule::Reflect: a.jump = -2 * x - a.jump; break;
                case BoundaryRule::Clamp: a.jump = -x; break;
                case BoundaryRule::Redirect:
                    out.assign(1, *redirect_);
                    if (x + redirect_->jump < 0)
                        throw Error(ErrorKind::InvalidModel, "boundary atom leaves the half-line");
                    return;
            }
        }
    }

    const ResolvedSegment& segment(Label i, double x) const {
        const auto& segs = lines_[i];
        const ResolvedSegment* chosen = &segs.front();
        for (const ResolvedSegment& s : segs)
            if (s.from <= x) chosen = &s;
        return *chosen;
    }

private:
    std::vector<std::vector<ResolvedSegment>> lines_;
    double delta_;
    BoundaryRule rule_;
    std::optional<Atom> redirect_;
};

Label resolve_label(const std::vector<std::string>& labels, const std::string& name) {
    const auto it = std::find(labels.begin(), labels.end(), name);
    if (it == labels.end())
        throw Error(ErrorKind::InvalidModel, "atom targets unknown label '" + name + "'");
    return static_cast<Label>(it - labels.begin());
}

}  // namespace

ChainModel make_tabular(const TabularSpec& spec) {
    if (spec.labels.empty()) throw Error(ErrorKind::InvalidModel, "tabular model needs at least one label");
    if (std::set<std::string>(spec.labels.begin(), spec.labels.end()).size() != spec.labels.size())
        throw Error(ErrorKind::InvalidModel, "labels must be unique");
    if (spec.lines.size() != spec.labels.size())
        throw Error(ErrorKind::InvalidModel, "every label needs exactly one line definition");
    if (!(spec.delta > 0) || !std::isfinite(spec.delta))
        throw Error(ErrorKind::InvalidModel, "delta must be positive");

    std::vector<std::vector<ResolvedSegment>> lines(spec.lines.size());
    double floor = 0.0;
    for (std::size_t i = 0; i < spec.lines.size(); ++i) {
        const auto& segs = spec.lines[i];
        if (segs.empty())
            throw Error(ErrorKind::InvalidModel, "line '" + spec.labels[i] + "' has no segments");
        for (const TabularSegment& seg : segs) {
            if (!std::isfinite(seg.from) || seg.from < 0)
                throw Error(ErrorKind::InvalidModel, "segment start must be finite and non-negative");
            if (seg.atoms.empty())
                throw Error(ErrorKind::InvalidModel, "segment on line '" + spec.labels[i] + "' has no atoms");
            ResolvedSegment rs{seg.from, {}};
            for (const TabularAtom& a : seg.atoms) {
                if (!std::isfinite(a.jump) || !std::isfinite(a.p) || !std::isfinite(a.p_inv_x) ||
                    !std::isfinite(a.p_corr))
                    throw Error(ErrorKind::InvalidModel, "atom fields must be finite");
                if ((a.p_inv_x != 0.0 || a.p_corr != 0.0) && seg.from <= 0)
                    throw Error(ErrorKind::InvalidModel, "x-dependent atoms need a segment start > 0");
                rs.atoms.push_back({a.jump, resolve_label(spec.labels, a.to), a.p, a.p_inv_x, a.p_corr});
            }
            floor = std::max(floor, seg.from);
            lines[i].push_back(std::move(rs));
        }
        std::sort(lines[i].begin(), lines[i].end(),
                  [](const ResolvedSegment& a, const ResolvedSegment& b) { return a.from < b.from; });
    }

    std::optional<Atom> redirect;
    if (spec.boundary == BoundaryRule::Redirect) {
        if (!spec.boundary_atom)
            throw Error(ErrorKind::InvalidModel, "redirect boundary needs a boundary atom");
        redirect = Atom{spec.boundary_atom->jump, resolve_label(spec.labels, spec.boundary_atom->to), 1.0};
    }

    auto kernel = std::make_shared<TabularKernel>(lines, spec.delta, spec.boundary, redirect);

    // Probe each segment at its start and along a geometric sweep of its range.
    IncrementDistribution buf;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        for (std::size_t k = 0; k < lines[i].size(); ++k) {
            const double lo = lines[i][k].from;
            const double hi = k + 1 < lines[i].size() ? lines[i][k + 1].from : 1e9;
            std::vector<double> probes{lo};
            for (double x = std::max(lo, 1.0) * 1.5; x < hi; x *= 1.5) probes.push_back(x);
            for (double x : probes) {
                for (const ResolvedAtom& a : lines[i][k].atoms) {
                    double p = a.p;
                    if (x > 0) p += a.p_inv_x / x + a.p_corr * std::pow(x, -1 - spec.delta);
                    if (p < -1e-12)
                        throw Error(ErrorKind::InvalidModel, "negative probability on line '" +
                                                                 spec.labels[i] + "' at x=" + std::to_string(x));
                }
                kernel->atoms(x, static_cast<Label>(i), buf);
            }
        }
    }
    return ChainModel(spec.labels, std::move(kernel), floor,
                      spec.description.empty() ? std::string("tabular model") : spec.description);
}

// ---------------------------------------------------------------------------
// Shifted view

namespace {

class ShiftedKernel final : public Kernel {
public:
    ShiftedKernel(ChainModel base, Eigen::VectorXd offsets) : base_(std::move(base)), a_(std::move(offsets)) {}

    void atoms(double y, Label i, IncrementDistribution& out) const override {
        const double x = y - a_(static_cast<Eigen::Index>(i));
        if (x < 0) throw Error(ErrorKind::InvalidState, "position below the shifted line start");
        base_.kernel().atoms(x, i, out);
        for (Atom& atom : out)
            atom.jump += a_(static_cast<Eigen::Index>(atom.next_label)) - a_(static_cast<Eigen::Index>(i));
    }

private:
    ChainModel base_;
    Eigen::VectorXd a_;
};

}  // namespace

ChainModel shift_model(const ChainModel& model, const Eigen::VectorXd& offsets) {
    if (offsets.size() != static_cast<Eigen::Index>(model.label_count()))
        throw Error(ErrorKind::InvalidArgument, "one offset per label required");
    if ((offsets.array() < 0).any()) throw Error(ErrorKind::InvalidArgument, "offsets must be non-negative");
    return ChainModel(model.labels(), std::make_shared<ShiftedKernel>(model, offsets),
                      model.formula_floor() + offsets.maxCoeff(), "shifted: " + model.description());
}

// ---------------------------------------------------------------------------
// Validation

std::vector<double> default_validation_grid() {
    std::vector<double> grid;
    for (int x = 0; x <= 20; ++x) grid.push_back(x);
    for (int k = 2; k <= 12; ++k) grid.push_back(std::pow(10.0, k / 2.0));
    return grid;
}

ValidationReport validate(const ChainModel& model, double moment_order, const std::vector<double>& grid) {
    ValidationReport rep;
    rep.moment_order = moment_order;
    const auto n = static_cast<Eigen::Index>(model.label_count());
    IncrementDistribution dist;

    auto row_q = [&](double x, Label i) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
        model.distribution({x, i}, dist);
        for (const Atom& a : dist) row(static_cast<Eigen::Index>(a.next_label)) += a.probability;
        return row;
    };

    for (double x : grid) {
        for (Label i = 0; i < model.label_count(); ++i) {
            StateCheck sc{{x, i}};
            try {
                model.distribution(sc.state, dist);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::InvalidModel) throw;
                sc.stochastic = false;
                rep.stochastic = false;
                rep.failures.push_back(sc);
                continue;
            }
            double moment = 0.0;
            for (const Atom& a : dist) {
                sc.probability_sum += a.probability;
                if (!(a.probability >= 0 && a.probability <= 1)) sc.stochastic = false;
                if (x + a.jump < 0) sc.landings_nonnegative = false;
                moment += a.probability * std::pow(std::abs(a.jump), moment_order);
                rep.max_abs_jump = std::max(rep.max_abs_jump, std::abs(a.jump));
            }
            if (dist.empty() || std::abs(sc.probability_sum - 1.0) > 1e-12) sc.stochastic = false;
            rep.moment_bound = std::max(rep.moment_bound, moment);
            rep.stochastic = rep.stochastic && sc.stochastic;
            rep.landings_nonnegative = rep.landings_nonnegative && sc.landings_nonnegative;
            if (!sc.stochastic || !sc.landings_nonnegative) rep.failures.push_back(sc);
        }
    }

    // Limiting Q by extrapolating q(x) = q + gamma/x from the two largest grid points.
    std::vector<double> sorted = grid;
    std::sort(sorted.begin(), sorted.end());
    const double x2 = sorted.back();
    const double x1 = sorted.size() > 1 ? sorted[sorted.size() - 2] : x2;
    rep.limiting_q.resize(n, n);
    for (Label i = 0; i < model.label_count(); ++i) {
        Eigen::VectorXd r2, r1;
        try {
            r2 = row_q(x2, i);
            r1 = row_q(x1, i);
        } catch (const Error&) {
            rep.irreducible = false;
            return rep;
        }
        Eigen::VectorXd limit = x2 > x1 ? Eigen::VectorXd((x2 * r2 - x1 * r1) / (x2 - x1)) : r2;
        for (Eigen::Index j = 0; j < n; ++j)
            if (limit(j) < 1e-12) limit(j) = 0.0;
        rep.limiting_q.row(static_cast<Eigen::Index>(i)) = limit.transpose();
    }
    rep.irreducible = is_irreducible(rep.limiting_q);
    return rep;
}

}  // namespace halfstrip
