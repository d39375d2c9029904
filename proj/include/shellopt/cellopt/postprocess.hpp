#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "shellopt/beam/mechanics.hpp"
#include "shellopt/cellopt/local_solve.hpp"
#include "shellopt/mesh/edge_lines.hpp"

namespace shellopt {

struct SizingLimits {
    double h_max = 1.0;
    double h_min = 0.0;  // 0: no lower bound
    double sigma0 = 1.0;
    double fiber = 1.0;
    double width_floor = kDefaultWidthFloor;
    double void_width = kDefaultVoidWidth;
};

inline Triple subcell_widths(const BeamNetwork& net, int cell) {
    Triple y;
    for (int k = 0; k < 3; ++k) y[k] = net.block(cell, k).y();
    return y;
}

inline Triple subcell_thicknesses(const BeamNetwork& net, int cell) {
    Triple h;
    for (int k = 0; k < 3; ++k) h[k] = net.block(cell, k).h;
    return h;
}

inline double subcell_volume(const BeamNetwork& net, int cell) {
    return cell_volume(net.cells().subcells()[cell].area, subcell_widths(net, cell), subcell_thicknesses(net, cell));
}

/// Exact volume of the whole network (sum over subcells).
inline double network_volume(const BeamNetwork& net) {
    double v = 0.0;
    for (std::size_t c = 0; c < net.cells().subcells().size(); ++c) v += subcell_volume(net, static_cast<int>(c));
    return v;
}

inline void apply_candidate(BeamNetwork& net, int cell, const Candidate& c) {
    for (int k = 0; k < 3; ++k) {
        Block& b = net.block(cell, k);
        b.w = c.y[k] * b.a;
        b.h = c.h[k];
    }
}

namespace detail {

inline double width_room(const BeamNetwork& net, const Block& b) {
    double others = 0.0;
    for (int j = 0; j < 3; ++j) {
        if (j != b.local) others += net.block(b.cell, j).y();
    }
    return std::max(0.0, 1.0 - others) * b.a;
}

}  // namespace detail

/// Pass 1: within each polygonal cell, the diagonal blocks holding material
/// take one thickness. It starts at that of the block with the largest section
/// w h, raised where a block could not keep its section within its width room,
/// and grows until no subcell loses volume with sections kept and widths
/// topped up; raising every diagonal to the thickest is the last resort.
/// Returns blocks changed.
inline int unify_diagonal_thickness(BeamNetwork& net, double void_width = kDefaultVoidWidth) {
    const auto& subcells = net.cells().subcells();
    std::map<int, std::vector<int>> face_blocks;
    for (std::size_t k = 0; k < net.blocks().size(); ++k) {
        const Block& b = net.blocks()[k];
        if (b.diagonal && holds_material(b, void_width)) face_blocks[subcells[b.cell].face].push_back(static_cast<int>(k));
    }
    int changed = 0;
    for (const auto& [face, ks] : face_blocks) {
        if (ks.size() < 2) continue;
        double best_section = -1.0, h = 0.0, h_top = 0.0;
        for (int k : ks) {
            const Block& b = net.blocks()[k];
            h_top = std::max(h_top, b.h);
            if (b.w * b.h > best_section) best_section = b.w * b.h, h = b.h;
        }
        for (int k : ks) {
            const Block& b = net.blocks()[k];
            const double room = detail::width_room(net, b);
            if (room > 0.0) h = std::max(h, b.w * b.h / room);
        }
        bool uniform = true;
        for (int k : ks) uniform = uniform && net.blocks()[k].h == h;
        if (uniform) continue;

        std::map<int, double> v0;
        std::vector<std::pair<double, double>> saved;
        for (int k : ks) {
            const Block& b = net.blocks()[k];
            v0.try_emplace(b.cell, subcell_volume(net, b.cell));
            saved.emplace_back(b.w, b.h);
        }
        auto restore = [&] {
            for (std::size_t q = 0; q < ks.size(); ++q) {
                Block& b = net.blocks()[ks[q]];
                b.w = saved[q].first;
                b.h = saved[q].second;
            }
        };
        // sections kept at thickness t, widths topped up since the exact
        // volume is not linear in w h; true if no subcell lost volume
        auto try_thickness = [&](double t) {
            restore();
            for (std::size_t q = 0; q < ks.size(); ++q) {
                Block& b = net.blocks()[ks[q]];
                b.w = std::min(saved[q].first * saved[q].second / t, detail::width_room(net, b));
                b.h = t;
            }
            bool kept = true;
            for (const auto& [cell, vol] : v0) {
                for (int round = 0; round < 60 && subcell_volume(net, cell) < vol; ++round) {
                    const double grow = std::min(vol / std::max(subcell_volume(net, cell), 1e-300), 2.0);
                    bool grew = false;
                    for (int k : ks) {
                        Block& b = net.blocks()[k];
                        if (b.cell != cell) continue;
                        const double w = std::min(b.w * grow, detail::width_room(net, b));
                        grew = grew || w > b.w;
                        b.w = w;
                    }
                    if (!grew) break;
                }
                kept = kept && subcell_volume(net, cell) >= vol * (1 - 1e-12);
            }
            return kept;
        };
        bool kept = false;
        for (double t = h;; t = std::min(1.1 * t, h_top)) {
            if ((kept = try_thickness(t)) || t >= h_top) break;
        }
        if (!kept) {
            restore();
            for (int k : ks) net.blocks()[k].h = h_top;
        }
        for (std::size_t q = 0; q < ks.size(); ++q) {
            const Block& b = net.blocks()[ks[q]];
            if (b.w != saved[q].first || b.h != saved[q].second) ++changed;
        }
    }
    return changed;
}

/// Index of the candidate whose width on `local` is closest to `target`, among
/// those with volume in [min_volume, max_volume]; -1 if none beats
/// `current_width`.
inline int closest_width_candidate(const std::vector<Candidate>& candidates, int local, double a, double target,
                                   double current_width, double min_volume,
                                   double max_volume = std::numeric_limits<double>::infinity()) {
    int pick = -1;
    double best = std::abs(current_width - target);
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const auto& c = candidates[k];
        if (!c.feasible || c.volume < min_volume * (1 - 1e-12) || c.volume > max_volume) continue;
        double d = std::abs(c.y[local] * a - target);
        if (d < best) {
            best = d;
            pick = static_cast<int>(k);
        }
    }
    return pick;
}

namespace detail {

/// Side of the edge line a subcell lies on, relative to the direction from -> to.
inline int line_side(const BeamNetwork& net, int cell, int from, int to) {
    const auto& cm = net.cells();
    const auto& s = cm.subcells()[cell];
    Vec3 centroid = (cm.nodes()[s.v[0]] + cm.nodes()[s.v[1]] + cm.nodes()[s.v[2]]) / 3.0;
    Vec3 dir = cm.nodes()[to] - cm.nodes()[from];
    Vec3 n = net.node_normals()[from] + net.node_normals()[to];
    double side = n.dot(dir.cross(centroid - cm.nodes()[from]));
    return side >= 0 ? 1 : -1;
}

/// Width of the block on edge (from, to) lying on `side`, or -1.
inline double line_neighbor_width(const BeamNetwork& net, const EdgeLines& lines,
                                  const std::vector<std::vector<int>>& edge_blocks, int from, int to, int side) {
    int e = lines.edge(from, to);
    if (e < 0) return -1.0;
    for (int k : edge_blocks[e]) {
        const Block& b = net.blocks()[k];
        if (line_side(net, b.cell, from, to) == side) return b.w;
    }
    return -1.0;
}

}  // namespace detail

/// Pass 2: along each polygon edge line, switch a subcell to the stored
/// candidate whose width is closest to the mean of the neighboring blocks on
/// the same side. Never lowers a subcell's volume, and only considers
/// candidates within `slack` times the cell's best volume. Returns switches made.
inline int cohere_edge_lines(BeamNetwork& net, const std::vector<LocalSolution>& candidates,
                             double slack = std::numeric_limits<double>::infinity()) {
    const auto& cm = net.cells();
    EdgeLines lines(cm);
    std::vector<std::vector<int>> edge_blocks(cm.edges().size());
    for (std::size_t k = 0; k < net.blocks().size(); ++k) edge_blocks[net.blocks()[k].edge].push_back(static_cast<int>(k));
    int switches = 0;
    for (std::size_t k = 0; k < net.blocks().size(); ++k) {
        const Block b = net.blocks()[k];
        if (b.diagonal || static_cast<std::size_t>(b.cell) >= candidates.size()) continue;
        const int side = detail::line_side(net, b.cell, b.i, b.j);
        double sum = 0.0;
        int count = 0;
        int prev = lines.continuation(b.i, b.j);
        if (prev >= 0) {
            // orientation prev -> i -> j: same side sign as i -> j
            double w = detail::line_neighbor_width(net, lines, edge_blocks, prev, b.i, side);
            if (w >= 0) sum += w, ++count;
        }
        int next = lines.continuation(b.j, b.i);
        if (next >= 0) {
            double w = detail::line_neighbor_width(net, lines, edge_blocks, b.j, next, side);
            if (w >= 0) sum += w, ++count;
        }
        if (count == 0) continue;
        const double target = sum / count;
        const double current = subcell_volume(net, b.cell);
        double lightest = std::numeric_limits<double>::infinity();
        for (const auto& c : candidates[b.cell].candidates) {
            if (c.feasible) lightest = std::min(lightest, c.volume);
        }
        const double cap = std::isfinite(slack) ? std::max(current, slack * lightest) : slack;
        int pick = closest_width_candidate(candidates[b.cell].candidates, b.local, b.a, target, b.w, current, cap);
        if (pick >= 0) {
            apply_candidate(net, b.cell, candidates[b.cell].candidates[pick]);
            ++switches;
        }
    }
    return switches;
}

struct RepairReport {
    int rounds = 0;
    int blocks_changed = 0;
    double max_stress = 0.0;
};

/// Pass 3: grow overstressed blocks (width first, then thickness) until every
/// block holding material is within sigma0. Sizes never decrease.
inline RepairReport repair_stress(BeamNetwork& net, const LoadCase& loads, const SizingLimits& lim,
                                  int max_rounds = 1000) {
    RepairReport rep;
    const double target = lim.sigma0 * (1 - 1e-4);
    const double limit = lim.sigma0 * (1 + 1e-9);
    for (int round = 0; round <= max_rounds; ++round) {
        Eigen::VectorXd u = global_solve(net, loads, lim.width_floor);
        auto stress = max_block_stress(net, u, lim.fiber);
        std::vector<int> over;
        rep.max_stress = 0.0;
        for (std::size_t k = 0; k < stress.size(); ++k) {
            if (!holds_material(net.blocks()[k], lim.void_width)) continue;
            rep.max_stress = std::max(rep.max_stress, stress[k]);
            if (stress[k] > limit) over.push_back(static_cast<int>(k));
        }
        rep.rounds = round;
        if (over.empty()) return rep;
        if (round == max_rounds) break;
        auto forces = block_forces(net, u, lim.width_floor);
        int grown = 0;
        std::vector<int> stuck;
        for (int k : over) {
            Block& b = net.blocks()[k];
            const double gt = forces[k].g_t, gb = forces[k].g_b;
            double others = 0.0;
            for (int j = 0; j < 3; ++j) {
                if (j != b.local) others += net.block(b.cell, j).y();
            }
            const double y_room = std::max(0.0, 1.0 - others);
            const double y_need = critical_width(gt, gb, b.a, b.h, target, lim.fiber);
            const double w0 = b.w, h0 = b.h;
            if (y_need <= y_room) {
                b.w = std::max(b.w, y_need * b.a);
            } else {
                b.w = std::max(b.w, y_room * b.a);
                // thickness for which the available width is critical
                const double rhs = target * b.w;
                const double qq = 6.0 * lim.fiber * gb;
                double z = qq > 0 ? 2.0 * rhs / (gt + std::sqrt(gt * gt + 4.0 * qq * rhs)) : (gt > 0 ? rhs / gt : 0.0);
                double h = z > 0 ? 1.0 / z : lim.h_max;
                b.h = std::max(b.h, std::min(h, lim.h_max));
            }
            if (y_need > y_room && b.w <= w0 && b.h <= h0) {
                // no room left: take slack width from understressed siblings,
                // keeping the subcell volume from dropping
                const double v0 = subcell_volume(net, b.cell);
                Triple y_old = subcell_widths(net, b.cell);
                double deficit = y_need - y_room;
                for (int j = 0; j < 3 && deficit > 0.0; ++j) {
                    if (j == b.local) continue;
                    Block& o = net.block(b.cell, j);
                    const int ko = o.cell * 3 + o.local;
                    const double need = critical_width(forces[ko].g_t, forces[ko].g_b, o.a, o.h, target, lim.fiber);
                    const double give = std::min(deficit, std::max(0.0, o.y() - need));
                    o.w -= give * o.a;
                    b.w += give * b.a;
                    deficit -= give;
                }
                if (subcell_volume(net, b.cell) < v0 * (1 - 1e-12)) {
                    for (int j = 0; j < 3; ++j) net.block(b.cell, j).w = y_old[j] * net.block(b.cell, j).a;
                }
            }
            if (b.w > w0 || b.h > h0) {
                ++grown;
            } else {
                stuck.push_back(k);
            }
        }
        // A block at its width and thickness limits can only be relieved by
        // stiffening the material around it; the ring widens until some block
        // there can still grow.
        if (!stuck.empty()) {
            const auto& fans = net.cells().fans();
            std::vector<double> ratio(net.num_nodes(), 1.0);
            std::vector<int> front;
            for (int k : stuck) {
                const Block& b = net.blocks()[k];
                const double r = std::max(stress[k] / target, 1.02);  // floor keeps the tail short
                for (int v : {b.i, b.j}) {
                    if (ratio[v] == 1.0) front.push_back(v);
                    ratio[v] = std::max(ratio[v], r);
                }
            }
            int ring_grown = 0;
            while (ring_grown == 0 && !front.empty()) {
                for (auto& b : net.blocks()) {
                    const double r = std::max(ratio[b.i], ratio[b.j]);
                    if (r <= 1.0 || !holds_material(b, lim.void_width)) continue;
                    double others = 0.0;
                    for (int j = 0; j < 3; ++j) {
                        if (j != b.local) others += net.block(b.cell, j).y();
                    }
                    const double w0 = b.w, h0 = b.h;
                    b.w = std::max(b.w, std::min(b.w * r, std::max(0.0, 1.0 - others) * b.a));
                    b.h = std::max(b.h, std::min(b.h * r, lim.h_max));
                    if (b.w > w0 || b.h > h0) ++ring_grown;
                }
                std::vector<int> next;
                for (int v : front) {
                    for (int n : fans[v].neighbors) {
                        if (ratio[n] == 1.0) {
                            ratio[n] = ratio[v];
                            next.push_back(n);
                        }
                    }
                }
                front = std::move(next);
            }
            grown += ring_grown;
        }
        rep.blocks_changed += grown;
        if (grown == 0) break;
    }
    std::string msg = "stress repair did not converge; overstressed blocks:";
    Eigen::VectorXd u = global_solve(net, loads, lim.width_floor);
    auto stress = max_block_stress(net, u, lim.fiber);
    int listed = 0;
    for (std::size_t k = 0; k < stress.size() && listed < 10; ++k) {
        if (holds_material(net.blocks()[k], lim.void_width) && stress[k] > limit) {
            msg += " " + std::to_string(k) + " (cell " + std::to_string(net.blocks()[k].cell) + ", stress " +
                   std::to_string(stress[k]) + ")";
            ++listed;
        }
    }
    throw StructureError(msg);
}

struct PostprocessReport {
    int diagonal_changes = 0;
    int coherence_switches = 0;
    RepairReport repair;
};

/// Passes 1, 2, 1 again, then 3.
inline PostprocessReport postprocess(BeamNetwork& net, const LoadCase& loads,
                                     const std::vector<LocalSolution>& candidates, const SizingLimits& lim,
                                     double candidate_slack = std::numeric_limits<double>::infinity()) {
    PostprocessReport rep;
    rep.diagonal_changes = unify_diagonal_thickness(net, lim.void_width);
    rep.coherence_switches = cohere_edge_lines(net, candidates, candidate_slack);
    rep.diagonal_changes += unify_diagonal_thickness(net, lim.void_width);
    rep.repair = repair_stress(net, loads, lim);
    return rep;
}

}  // namespace shellopt
