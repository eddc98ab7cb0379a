#pragma once

#include <cmath>

#include "qsm/approx.hpp"
#include "qsm/split.hpp"

namespace qsm {

// JSON has no infinity; unbounded values come out as null.
inline nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

inline nlohmann::json vec_json(const Vec& v) {
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        re.push_back(v(i).real());
        im.push_back(v(i).imag());
    }
    return {{"re", re}, {"im", im}};
}

inline nlohmann::json ki_json(const KIDecomposition& d) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : d.blocks) {
        std::vector<double> om;
        for (Eigen::Index i = 0; i < b.omega.rows(); ++i) om.push_back(b.omega(i, i).real());
        blocks.push_back({{"j", b.j},
                          {"dim_L", b.dim_L},
                          {"dim_R", b.dim_R},
                          {"p", b.p},
                          {"lambda0", b.lambda0},
                          {"omega_spectrum", om},
                          {"rank_omega", b.rank_omega},
                          {"dim_bR", b.dim_bR},
                          {"W", matrix_json(b.W)},
                          {"V", matrix_json(b.V)},
                          {"phi", vec_json(b.phi)}});
    }
    return {{"J", d.J()},
            {"dims", {{"R", d.dR}, {"A", d.dA}, {"B", d.dB}}},
            {"refinement_index", d.r},
            {"trajectory", d.trajectory},
            {"blocks", blocks}};
}

inline nlohmann::json cost_json(const CostReport& c) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : c.per_block)
        blocks.push_back({{"j", b.j}, {"lambda0", b.lambda0}, {"dim_R", b.dim_R}, {"product", b.product},
                          {"K_j", b.K_j}, {"L_j", b.L_j}});
    return {{"mode", to_string(c.mode)},
            {"K", c.K},
            {"L", c.L},
            {"cost_bits", c.cost_bits},
            {"j0", c.j0},
            {"delta", c.delta},
            {"lambda_tilde", {c.lambda_tilde.num, c.lambda_tilde.den}},
            {"construction", c.construction},
            {"per_block", blocks}};
}

inline nlohmann::json verification_json(const ProtocolReport& r) {
    return {{"pass", r.pass},
            {"min_fidelity", r.min_fidelity},
            {"completeness_residual", r.completeness_residual},
            {"isometry_residual", r.isometry_residual},
            {"total_probability", r.total_probability},
            {"outcomes", r.outcomes}};
}

inline nlohmann::json converse_json(const ConverseReport& c) {
    return {{"simple_catalytic", num(c.simple_catalytic)},
            {"simple_noncatalytic", num(c.simple_noncatalytic)},
            {"search_catalytic", num(c.search_catalytic)},
            {"search_noncatalytic", num(c.search_noncatalytic)},
            {"K_max", c.K_max},
            {"L_max", c.L_max},
            {"eigenvalue_bound", num(c.eigenvalue_bound)},
            {"h_max", num(c.h_max)},
            {"gap", num(c.gap)},
            {"applicable", c.applicable}};
}

inline nlohmann::json split_json(const SplitReport& r) {
    return {{"rank", r.rank}, {"cost_bits", r.cost_bits}, {"asymptotic_rate", r.asymptotic_rate},
            {"borderline", r.borderline}};
}

inline nlohmann::json smoothing_json(const SmoothingCertificate& c) {
    return {{"candidate", c.candidate.name},
            {"epsilon", c.epsilon},
            {"fidelity_sq", c.fidelity_sq},
            {"cost", cost_json(c.cost)},
            {"output_fidelity_sq", c.output_fidelity_sq},
            {"pass", c.pass}};
}

}  // namespace qsm
