#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "shellopt/cellopt/postprocess.hpp"

namespace shellopt {

struct OptimizeConfig {
    int max_iter = 100;
    double relax = 0.5;        // step s of the convex update
    double h_max = 1.0;
    double h_min = 0.0;        // 0: no lower bound
    double sigma0 = 1.0;
    double fiber = 1.0;        // outer fiber at fiber * h
    double tol = 1e-3;         // relative volume change for convergence
    double init_y = 1.0 / 3.0;
    bool initialize = true;    // reset all blocks to (init_y, h_max) first
    double diagonal_slack = 1.05;
    int divergence_window = 5;
    bool postprocess = true;
    double width_floor = kDefaultWidthFloor;
    double void_width = kDefaultVoidWidth;
    LocalSettings local;

    void validate() const {
        if (max_iter < 1) throw ParameterError("max_iter must be at least 1");
        if (!(relax > 0.0 && relax <= 1.0)) throw ParameterError("relax must lie in (0, 1]");
        if (!(h_max > 0.0)) throw ParameterError("h_max must be positive");
        if (!(h_min >= 0.0 && h_min <= h_max)) throw ParameterError("h_min must lie in [0, h_max]");
        if (!(sigma0 > 0.0)) throw ParameterError("sigma0 must be positive");
        if (!(fiber > 0.0)) throw ParameterError("fiber offset must be positive");
        if (!(tol > 0.0)) throw ParameterError("tol must be positive");
        if (divergence_window < 1) throw ParameterError("divergence_window must be at least 1");
        if (!(width_floor > 0.0)) throw ParameterError("width_floor must be positive");
        if (!(void_width >= 0.0 && void_width < 1.0)) throw ParameterError("void_width must lie in [0, 1)");
        if (!(diagonal_slack >= 1.0)) throw ParameterError("diagonal_slack must be at least 1");
        if (!(init_y >= 0.0 && init_y <= 1.0 / 3.0 + 1e-12)) throw ParameterError("init_y must lie in [0, 1/3]");
    }

    SizingLimits limits() const { return {h_max, h_min, sigma0, fiber, width_floor, void_width}; }
};

struct TraceRow {
    int iteration = 0;
    double volume = 0.0;
    double max_stress = 0.0;  // at the global step of this iteration
    double filled_fraction = 0.0;
    int infeasible_cells = 0;
};

enum class OptimizeStatus { Converged, MaxIter, Diverged };

inline const char* to_string(OptimizeStatus s) {
    switch (s) {
        case OptimizeStatus::Converged: return "converged";
        case OptimizeStatus::MaxIter: return "max-iter";
        case OptimizeStatus::Diverged: return "diverged";
    }
    return "?";
}

struct OptimizeResult {
    OptimizeStatus status = OptimizeStatus::MaxIter;
    int iterations = 0;
    std::vector<TraceRow> trace;
    std::vector<LocalSolution> candidates;  // per subcell, from the last local step
    std::vector<int> case_ids;              // per subcell, chosen candidate's case
    std::vector<bool> infeasible;           // per subcell, last local step
    double volume = 0.0;                    // after postprocessing
    double max_stress = 0.0;                // after postprocessing
    double compliance = 0.0;
    PostprocessReport post;
    Eigen::VectorXd u;
};

inline double filled_fraction(const BeamNetwork& net) {
    const auto n = net.cells().subcells().size();
    if (n == 0) return 0.0;
    int filled = 0;
    for (std::size_t c = 0; c < n; ++c) {
        Triple y = subcell_widths(net, static_cast<int>(c));
        if (y[0] + y[1] + y[2] >= 1.0 - 1e-6) ++filled;
    }
    return static_cast<double>(filled) / n;
}

/// Candidate to use: among those within `slack` of the best volume, the one
/// with the thinnest diagonal blocks.
inline int pick_candidate(const BeamNetwork& net, int cell, const LocalSolution& sol, double slack) {
    if (!sol.feasible) return 0;
    std::array<bool, 3> diag{};
    bool any = false;
    for (int k = 0; k < 3; ++k) any |= diag[k] = net.block(cell, k).diagonal;
    if (!any) return 0;
    const double limit = sol.best().volume * slack;
    int pick = 0;
    double pick_h = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < sol.candidates.size(); ++k) {
        const auto& c = sol.candidates[k];
        if (c.volume > limit) break;
        double h = 0.0;
        for (int i = 0; i < 3; ++i) {
            if (diag[i] && c.y[i] > 0.0) h = std::max(h, c.h[i]);
        }
        if (h < pick_h) {
            pick_h = h;
            pick = static_cast<int>(k);
        }
    }
    return pick;
}

/// Divergence rule: volume grew for `window` consecutive iterations with every
/// step larger than the one before. Slowly decaying growth (recovery after an
/// overshoot) does not count.
class GrowthMonitor {
public:
    explicit GrowthMonitor(int window) : window_(window) {}

    /// Feed one volume change; true once divergence is detected.
    bool update(double change) {
        if (change > 0.0) {
            growing_ = growing_ > 0 && change > last_ ? growing_ + 1 : 1;
            last_ = change;
        } else {
            growing_ = 0;
            last_ = 0.0;
        }
        return growing_ >= window_;
    }

private:
    int window_;
    int growing_ = 0;
    double last_ = 0.0;
};

/// Global/local sizing of all blocks. Iterations follow the best candidate of
/// each local problem; the diagonal preference is applied once, after the loop,
/// since switching between near-equal candidates keeps the loop from settling.
inline OptimizeResult optimize(BeamNetwork& net, const LoadCase& loads, const OptimizeConfig& cfg) {
    cfg.validate();
    loads.validate(net.num_nodes());
    OptimizeResult res;
    const auto& subcells = net.cells().subcells();
    const int ncell = static_cast<int>(subcells.size());
    net.set_reference_thickness(cfg.h_max);
    if (cfg.initialize) {
        for (auto& b : net.blocks()) {
            b.w = cfg.init_y * b.a;
            b.h = cfg.h_max;
        }
    }
    res.candidates.assign(ncell, {});
    res.case_ids.assign(ncell, 0);
    res.infeasible.assign(ncell, false);

    double prev = network_volume(net);
    // unloaded networks shrink geometrically toward zero volume
    const double volume_floor = 1e-9 * prev;
    GrowthMonitor growth(cfg.divergence_window);
    const double z_min = 1.0 / cfg.h_max;
    const double z_max = cfg.h_min > 0.0 ? 1.0 / cfg.h_min : std::numeric_limits<double>::infinity();

    for (int it = 1; it <= cfg.max_iter; ++it) {
        Eigen::VectorXd u = global_solve(net, loads, cfg.width_floor);
        auto forces = block_forces(net, u, cfg.width_floor);
        store_block_forces(net, forces);
        auto stress = max_block_stress(net, u, cfg.fiber);
        TraceRow row;
        row.iteration = it;
        for (std::size_t k = 0; k < stress.size(); ++k) {
            if (holds_material(net.blocks()[k], cfg.void_width)) row.max_stress = std::max(row.max_stress, stress[k]);
        }

        for (int c = 0; c < ncell; ++c) {
            LocalProblem pr;
            pr.geometry = SubcellGeometry::from(subcells[c]);
            for (int k = 0; k < 3; ++k) {
                pr.g_t[k] = net.block(c, k).g_t;
                pr.g_b[k] = net.block(c, k).g_b;
            }
            pr.z_min = z_min;
            pr.z_max = z_max;
            pr.sigma0 = cfg.sigma0;
            pr.fiber = cfg.fiber;
            res.candidates[c] = local_solve(pr, cfg.local);
            res.infeasible[c] = !res.candidates[c].feasible;
            if (res.infeasible[c]) ++row.infeasible_cells;
            const Candidate& cand = res.candidates[c].best();
            res.case_ids[c] = cand.case_id;
            for (int k = 0; k < 3; ++k) {
                Block& b = net.block(c, k);
                // thickness blends through z = 1/h, the local variable; a
                // linear blend of a thin filled block and a narrow rib is
                // wide and thick at once
                b.w = (1 - cfg.relax) * b.w + cfg.relax * cand.y[k] * b.a;
                b.h = 1.0 / ((1 - cfg.relax) / b.h + cfg.relax / cand.h[k]);
                if (cand.y[k] == 0.0 && !holds_material(b, cfg.void_width)) b.w = 0.0;  // cut the geometric tail
            }
        }
        row.volume = network_volume(net);
        row.filled_fraction = filled_fraction(net);
        res.trace.push_back(row);
        res.iterations = it;

        const double change = row.volume - prev;
        const double scale = std::max({std::abs(prev), volume_floor, std::numeric_limits<double>::min()});
        if (std::abs(change) <= cfg.tol * scale || (row.volume == 0.0 && prev == 0.0)) {
            res.status = OptimizeStatus::Converged;
            break;
        }
        prev = row.volume;
        if (growth.update(change)) {
            res.status = OptimizeStatus::Diverged;
            return res;
        }
    }

    if (cfg.diagonal_slack > 1.0) {
        // thinner diagonals where a near-optimal candidate allows it
        for (int c = 0; c < ncell; ++c) {
            if (res.candidates[c].candidates.empty()) continue;
            const int pick = pick_candidate(net, c, res.candidates[c], cfg.diagonal_slack);
            if (pick == 0) continue;
            const Candidate& cand = res.candidates[c].candidates[pick];
            apply_candidate(net, c, cand);
            res.case_ids[c] = cand.case_id;
        }
    }
    if (cfg.postprocess) res.post = postprocess(net, loads, res.candidates, cfg.limits(), cfg.diagonal_slack);
    res.u = global_solve(net, loads, cfg.width_floor);
    auto forces = block_forces(net, res.u, cfg.width_floor);
    store_block_forces(net, forces);
    auto stress = max_block_stress(net, res.u, cfg.fiber);
    for (std::size_t k = 0; k < stress.size(); ++k) {
        if (holds_material(net.blocks()[k], cfg.void_width)) res.max_stress = std::max(res.max_stress, stress[k]);
    }
    res.volume = network_volume(net);
    res.compliance = compliance(loads, res.u);
    return res;
}

inline void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out) {
    out << "iteration,volume,max_stress,filled_fraction,infeasible_cells\n";
    out.precision(17);
    for (const auto& r : trace) {
        out << r.iteration << ',' << r.volume << ',' << r.max_stress << ',' << r.filled_fraction << ','
            << r.infeasible_cells << '\n';
    }
}

inline void save_trace_csv(const std::vector<TraceRow>& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_trace_csv(trace, out);
    if (!out) throw IoError("write failed for " + path.string());
}

/// Per block (w, h, case id of its subcell's chosen candidate).
inline nlohmann::json cell_solution_json(const BeamNetwork& net, const OptimizeResult& res) {
    nlohmann::json cells = nlohmann::json::array();
    const int ncell = static_cast<int>(net.cells().subcells().size());
    for (int c = 0; c < ncell; ++c) {
        nlohmann::json blocks = nlohmann::json::array();
        for (int k = 0; k < 3; ++k) {
            const Block& b = net.block(c, k);
            blocks.push_back({{"edge", {b.i, b.j}}, {"w", b.w}, {"h", b.h}, {"diagonal", b.diagonal}});
        }
        nlohmann::json cell = {{"subcell", c},
                               {"face", net.cells().subcells()[c].face},
                               {"case", c < static_cast<int>(res.case_ids.size()) ? res.case_ids[c] : 0},
                               {"infeasible", c < static_cast<int>(res.infeasible.size()) && res.infeasible[c]},
                               {"volume", subcell_volume(net, c)},
                               {"blocks", blocks}};
        cells.push_back(cell);
    }
    return {{"status", to_string(res.status)},
            {"iterations", res.iterations},
            {"volume", res.volume},
            {"max_stress", res.max_stress},
            {"cells", cells}};
}

}  // namespace shellopt
