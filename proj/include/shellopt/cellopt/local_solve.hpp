#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include "shellopt/cellopt/volume.hpp"

namespace shellopt {

/// Local sizing problem of one subcell under frozen block forces.
struct LocalProblem {
    SubcellGeometry geometry;
    Triple g_t{};  // tensile block forces
    Triple g_b{};  // bending block forces
    double z_min = 1.0;  // 1 / h_max
    double z_max = std::numeric_limits<double>::infinity();  // 1 / h_min
    double sigma0 = 1.0;
    double fiber = 1.0;  // surface fiber offset as a fraction of h
};

/// Which boundary piece of the feasible set produced a candidate:
/// 1 thickness bounds only, 2 filled interior, 3 filled with the two thicker
/// blocks equal, 4 filled with the two thinner blocks equal, 5 filled with a
/// thickness bound active.
struct Candidate {
    int case_id = 1;
    std::array<int, 3> order{0, 1, 2};  // block indices by increasing z
    Triple z{};
    Triple y{};
    Triple h{};
    double volume = 0.0;
    bool feasible = true;

    bool filled() const { return std::abs(y[0] + y[1] + y[2] - 1.0) <= kFillTolerance; }
};

struct LocalSolution {
    std::vector<Candidate> candidates;  // sorted by volume, best first
    bool feasible = true;

    const Candidate& best() const { return candidates.front(); }
};

struct LocalSettings {
    int keep = 8;
    int samples = 48;
    int grid = 10;
    int brent_bits = 46;
};

namespace detail {

class LocalSearch {
public:
    LocalSearch(const LocalProblem& pr, const LocalSettings& s) : pr_(pr), s_(s) {
        if (!(pr.sigma0 > 0.0)) throw ParameterError("sigma0 must be positive");
        if (!(pr.z_min > 0.0) || !(pr.z_max >= pr.z_min)) throw ParameterError("invalid thickness bounds");
        if (!(pr.fiber > 0.0)) throw ParameterError("fiber offset must be positive");
        for (int i = 0; i < 3; ++i) {
            if (!(pr.g_t[i] >= 0.0) || !(pr.g_b[i] >= 0.0)) throw ParameterError("block forces must be non-negative");
            if (!(pr.geometry.a[i] > 0.0)) throw ParameterError("subcell heights must be positive");
            p_[i] = pr.g_t[i] / (pr.sigma0 * pr.geometry.a[i]);
            q_[i] = 6.0 * pr.fiber * pr.g_b[i] / (pr.sigma0 * pr.geometry.a[i]);
            loaded_[i] = p_[i] > 0.0 || q_[i] > 0.0;
            cap_[i] = loaded_[i] ? std::min(pr.z_max, root(i, 1.0)) : pr.z_min;
        }
    }

    double y(int i, double z) const { return (p_[i] + q_[i] * z) * z; }

    /// Smallest z >= 0 with y_i(z) = target (target >= 0).
    double root(int i, double target) const {
        if (target <= 0.0) return 0.0;
        if (q_[i] == 0.0) return p_[i] > 0.0 ? target / p_[i] : std::numeric_limits<double>::infinity();
        return 2.0 * target / (p_[i] + std::sqrt(p_[i] * p_[i] + 4.0 * q_[i] * target));
    }

    bool in_bounds(double z) const {
        return z >= pr_.z_min * (1 - 1e-14) && z <= pr_.z_max * (1 + 1e-14);
    }

    /// Volume at z, or +inf outside the feasible set.
    double volume(const Triple& z) const {
        double sum = 0.0;
        Triple yy, hh;
        for (int i = 0; i < 3; ++i) {
            if (!in_bounds(z[i])) return kInf;
            yy[i] = y(i, z[i]);
            hh[i] = 1.0 / z[i];
            sum += yy[i];
        }
        if (sum > 1.0 + kFillTolerance) return kInf;
        return cell_volume(pr_.geometry.area, yy, hh);
    }

    /// z_c that fills the cell given the other blocks' share.
    std::optional<double> fill(int c, double taken) const {
        if (!loaded_[c] || taken > 1.0 + kFillTolerance) return std::nullopt;
        double zc = root(c, std::max(0.0, 1.0 - taken));
        if (!in_bounds(zc)) return std::nullopt;
        return std::clamp(zc, pr_.z_min, pr_.z_max);
    }

    void add(int case_id, const Triple& z) {
        double v = volume(z);
        if (!std::isfinite(v)) return;
        Candidate c;
        c.case_id = case_id;
        for (int i = 0; i < 3; ++i) {
            c.z[i] = loaded_[i] ? z[i] : pr_.z_min;
            c.y[i] = loaded_[i] ? y(i, c.z[i]) : 0.0;
            c.h[i] = 1.0 / c.z[i];
        }
        if (case_id >= 2 && !c.filled()) return;
        if (case_id == 1 && c.filled()) c.case_id = 5;
        c.volume = cell_volume(pr_.geometry.area, c.y, c.h);
        c.order = {0, 1, 2};
        std::stable_sort(c.order.begin(), c.order.end(), [&](int a, int b) { return c.z[a] < c.z[b]; });
        found_.push_back(c);
    }

    /// Minimizes along a one-parameter family, adding every local minimum and
    /// the ends of each feasible run as candidates.
    void search_line(double lo, double hi, const std::function<std::optional<Triple>(double)>& point,
                     const std::function<int(const Triple&)>& label) {
        auto f = [&](double t) {
            auto z = point(t);
            return z ? volume(*z) : kInf;
        };
        auto emit = [&](double t) {
            if (auto z = point(t); z && std::isfinite(volume(*z))) add(label(*z), *z);
        };
        if (!(hi > lo)) {
            emit(lo);
            return;
        }
        const int n = s_.samples;
        const bool geometric = lo > 0.0 && hi / lo > 10.0;
        std::vector<double> t(n + 1), v(n + 1);
        for (int k = 0; k <= n; ++k) {
            double s = static_cast<double>(k) / n;
            t[k] = geometric ? lo * std::pow(hi / lo, s) : lo + s * (hi - lo);
            v[k] = f(t[k]);
        }
        t[n] = hi;
        for (int k = 0; k <= n; ++k) {
            bool ok = std::isfinite(v[k]);
            if (!ok) continue;
            if (k == 0 || k == n) emit(t[k]);
            // feasibility edges
            for (int nb : {k - 1, k + 1}) {
                if (nb < 0 || nb > n || std::isfinite(v[nb])) continue;
                double a = t[k], b = t[nb];
                for (int it = 0; it < 80; ++it) {
                    double m = 0.5 * (a + b);
                    (std::isfinite(f(m)) ? a : b) = m;
                }
                emit(a);
            }
            if (k > 0 && k < n && std::isfinite(v[k - 1]) && std::isfinite(v[k + 1]) && v[k] <= v[k - 1] &&
                v[k] <= v[k + 1]) {
                auto r = boost::math::tools::brent_find_minima(f, t[k - 1], t[k + 1], s_.brent_bits);
                emit(r.first);
            }
        }
    }

    /// Stationary points of the volume on the fill surface, parametrized by
    /// (z_a, z_b) with z_c solved.
    void search_surface(int a, int b, int c) {
        if (!loaded_[a] || !loaded_[b] || !loaded_[c]) return;
        auto point = [&](double za, double zb) -> std::optional<Triple> {
            auto zc = fill(c, y(a, za) + y(b, zb));
            if (!zc) return std::nullopt;
            Triple z;
            z[a] = za;
            z[b] = zb;
            z[c] = *zc;
            return z;
        };
        auto f = [&](double za, double zb) {
            auto z = point(za, zb);
            return z ? volume(*z) : kInf;
        };
        const int n = s_.grid;
        auto axis = [&](int i) {
            std::vector<double> t(n + 1);
            double lo = pr_.z_min, hi = cap_[i];
            for (int k = 0; k <= n; ++k) {
                double s = static_cast<double>(k) / n;
                t[k] = hi / lo > 10.0 ? lo * std::pow(hi / lo, s) : lo + s * (hi - lo);
            }
            return t;
        };
        auto ta = axis(a), tb = axis(b);
        Eigen::MatrixXd v(n + 1, n + 1);
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n; ++j) v(i, j) = f(ta[i], tb[j]);
        for (int i = 1; i < n; ++i) {
            for (int j = 1; j < n; ++j) {
                double c0 = v(i, j);
                if (!std::isfinite(c0)) continue;
                if (c0 > v(i - 1, j) || c0 > v(i + 1, j) || c0 > v(i, j - 1) || c0 > v(i, j + 1)) continue;
                newton(ta[i], tb[j], f, point);
            }
        }
    }

    template <class F, class P>
    void newton(double za, double zb, const F& f, const P& point) {
        Eigen::Vector2d x(za, zb);
        for (int it = 0; it < 40; ++it) {
            const double d = 1e-5 * x.norm();
            double f0 = f(x[0], x[1]);
            double fpp = f(x[0] + d, x[1]), fmp = f(x[0] - d, x[1]);
            double fpq = f(x[0], x[1] + d), fmq = f(x[0], x[1] - d);
            double fxy = f(x[0] + d, x[1] + d) - f(x[0] + d, x[1] - d) - f(x[0] - d, x[1] + d) +
                         f(x[0] - d, x[1] - d);
            if (!std::isfinite(fpp + fmp + fpq + fmq + fxy)) return;
            Eigen::Vector2d g((fpp - fmp) / (2 * d), (fpq - fmq) / (2 * d));
            Eigen::Matrix2d H;
            H << (fpp - 2 * f0 + fmp) / (d * d), fxy / (4 * d * d), fxy / (4 * d * d), (fpq - 2 * f0 + fmq) / (d * d);
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(H);
            if (es.eigenvalues().minCoeff() <= 0.0) return;
            Eigen::Vector2d step = -H.ldlt().solve(g);
            double t = 1.0;
            while (t > 1e-8 && !(f(x[0] + t * step[0], x[1] + t * step[1]) <= f0)) t *= 0.5;
            if (t <= 1e-8) break;
            x += t * step;
            if (step.norm() * t <= 1e-12 * x.norm()) break;
        }
        if (auto z = point(x[0], x[1])) add(2, *z);
    }

    LocalSolution run() {
        const double lo = pr_.z_min, hi = pr_.z_max;
        const bool capped = std::isfinite(hi);
        const std::vector<double> bounds = capped ? std::vector<double>{lo, hi} : std::vector<double>{lo};

        // corners of the thickness box
        for (double b0 : bounds)
            for (double b1 : bounds)
                for (double b2 : bounds) add(1, {b0, b1, b2});

        for (int c = 0; c < 3; ++c) {
            const int a = (c + 1) % 3, b = (c + 2) % 3;
            // two blocks share a thickness, the third fills the cell
            search_line(lo, loaded_[a] || loaded_[b] ? std::min(cap_[a], cap_[b]) : lo,
                        [&](double t) -> std::optional<Triple> {
                            auto zc = fill(c, y(a, t) + y(b, t));
                            if (!zc) return std::nullopt;
                            Triple z;
                            z[a] = z[b] = t;
                            z[c] = *zc;
                            return z;
                        },
                        [&](const Triple& z) { return z[a] <= z[c] ? 3 : 4; });
            // one block at a thickness bound, one free, the third fills the cell
            for (int free : {a, b}) {
                const int fixed = free == a ? b : a;
                for (double bound : bounds) {
                    search_line(lo, loaded_[free] ? cap_[free] : lo,
                                [&, free, fixed, bound](double t) -> std::optional<Triple> {
                                    auto zc = fill(c, y(fixed, bound) + y(free, t));
                                    if (!zc) return std::nullopt;
                                    Triple z;
                                    z[fixed] = bound;
                                    z[free] = t;
                                    z[c] = *zc;
                                    return z;
                                },
                                [](const Triple&) { return 5; });
                }
            }
            // two blocks at bounds, the third free below the fill surface
            for (double b0 : bounds) {
                for (double b1 : bounds) {
                    search_line(lo, loaded_[c] ? cap_[c] : lo,
                                [&, b0, b1](double t) -> std::optional<Triple> {
                                    Triple z;
                                    z[a] = b0;
                                    z[b] = b1;
                                    z[c] = t;
                                    return z;
                                },
                                [](const Triple&) { return 1; });
                }
            }
            search_surface(a, b, c);
        }

        LocalSolution out;
        std::sort(found_.begin(), found_.end(), [](const Candidate& x, const Candidate& y) {
            if (x.volume != y.volume) return x.volume < y.volume;
            if (x.case_id != y.case_id) return x.case_id < y.case_id;
            return x.z < y.z;
        });
        for (const auto& c : found_) {
            bool dup = false;
            for (const auto& k : out.candidates) {
                bool same = true;
                for (int i = 0; i < 3; ++i) same = same && std::abs(k.z[i] - c.z[i]) <= 1e-9 * std::max(1.0, k.z[i]);
                dup = dup || same;
            }
            if (!dup) out.candidates.push_back(c);
            if (static_cast<int>(out.candidates.size()) >= s_.keep) break;
        }
        if (out.candidates.empty()) {
            // forces exceed what a filled cell at maximal thickness carries
            out.feasible = false;
            Candidate c;
            c.feasible = false;
            double sum = 0.0;
            for (int i = 0; i < 3; ++i) {
                c.z[i] = lo;
                c.h[i] = 1.0 / lo;
                c.y[i] = y(i, lo);
                sum += c.y[i];
            }
            if (sum > 1.0) {
                for (double& v : c.y) v /= sum;
            }
            c.volume = cell_volume(pr_.geometry.area, c.y, c.h);
            out.candidates.push_back(c);
        }
        return out;
    }

private:
    static constexpr double kInf = std::numeric_limits<double>::infinity();
    const LocalProblem& pr_;
    LocalSettings s_;
    Triple p_{}, q_{}, cap_{};
    std::array<bool, 3> loaded_{};
    std::vector<Candidate> found_;
};

}  // namespace detail

/// Critically stressed candidates of the local problem, best first. The block
/// constraint is y = (g_t z + 6 f g_b z^2) / (sigma0 a) with z = 1/h and f the
/// fiber offset fraction.
inline LocalSolution local_solve(const LocalProblem& problem, const LocalSettings& settings = {}) {
    detail::LocalSearch search(problem, settings);
    return search.run();
}

/// Normalized width a block needs to be critically stressed at thickness h.
inline double critical_width(double g_t, double g_b, double a, double h, double sigma0 = 1.0, double fiber = 1.0) {
    const double z = 1.0 / h;
    return (g_t * z + 6.0 * fiber * g_b * z * z) / (sigma0 * a);
}

}  // namespace shellopt
