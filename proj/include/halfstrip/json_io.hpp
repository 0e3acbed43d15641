#pragma once

// JSON reading and writing for model specs, coefficients and reports.
//
// Model spec documents:
//   {"type": "crw", "q", "c_plus", "c_minus", "delta", "amp",
//    optional "formula_floor", "description", "refined_rates_hold"}
//   {"type": "tabular", "labels": [...],
//    "lines": {label: [{"from": x, "atoms": [{"jump", "to", "p", "p_inv_x", "p_corr"}]}]},
//    optional "delta", "boundary": "reflect" | "clamp" | "redirect",
//    "boundary_atom", "description", "refined_rates_hold"}
//   {"type": "coefficients", "labels", "Q", "d", "e", "t2", "d_cross", "gamma",
//    optional "pi", "p", "description", "refined_rates_hold"}
// Unknown keys are rejected. Infinite numbers are written as the string "inf".

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>

#include "halfstrip/classify.hpp"
#include "halfstrip/drift.hpp"
#include "halfstrip/lyapunov.hpp"
#include "halfstrip/model.hpp"
#include "halfstrip/sim.hpp"

namespace halfstrip {

using Json = nlohmann::ordered_json;

std::uint64_t fnv1a64(const std::string& bytes) noexcept;

struct LoadedSpec {
    std::optional<ChainModel> model;               // kernel specs
    std::optional<AsymptoticCoefficients> coeffs;  // coefficient specs
    std::optional<CrwParams> crw;                  // set for "crw" specs
    std::string type;
    std::string description;
    bool refined_rates_hold = false;
    std::uint64_t hash = 0;  // FNV-1a of the canonical dump
};

/// Throws Error(Schema) on structural problems; model errors propagate as InvalidModel.
LoadedSpec parse_spec(const Json& doc);
LoadedSpec parse_spec_text(const std::string& text);
LoadedSpec load_spec_file(const std::string& path);

CrwParams crw_from_json(const Json& doc);
TabularSpec tabular_from_json(const Json& doc);
AsymptoticCoefficients coefficients_from_json(const Json& doc);

Json number(double v);
Json to_json(const Eigen::VectorXd& v);
Json to_json(const Eigen::MatrixXd& m);
Json to_json(const AsymptoticCoefficients& c);
Json to_json(const LampertiCoefficients& lc);
Json to_json(const PoissonSolution<double>& s);
Json to_json(const Classification& c);
Json to_json(const Interval& iv);
Json to_json(const MomentReport& m);
Json to_json(const ValidationReport& r);
Json to_json(const TailEstimate& t);
Json to_json(const MomentEstimate& m);
Json to_json(const DiagnosticReport& d);

}  // namespace halfstrip
