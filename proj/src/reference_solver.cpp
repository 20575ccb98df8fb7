#include "ecm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace ecm {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kFeasTol = 1e-9;
constexpr double kIntTol = 1e-9;

enum class LpStatus { Optimal, Infeasible, Unbounded };

/// Minimise c·x over {A x + s = b, lo <= x <= up} with s bounded by the row
/// sense. Dense tableau, bounded-variable primal simplex, two phases.
/// Pricing is Dantzig's rule; after a run of degenerate pivots it switches
/// to Bland's rule until the objective moves again.
class DenseSimplex {
public:
    DenseSimplex(const MilpModel& model, const std::vector<double>& lo, const std::vector<double>& up)
        : model_(model), m_(static_cast<int>(model.row_count())), n_(static_cast<int>(model.variable_count()))
    {
        setup(lo, up);
    }

    LpStatus solve()
    {
        if (n_art_ > 0) {
            std::vector<double> phase1(cols_, 0.0);
            for (int j = art0_; j < cols_; ++j)
                phase1[j] = 1.0;
            set_costs(phase1);
            if (iterate() == LpStatus::Unbounded)
                throw SolverError("phase 1 unbounded: LP numerical failure");
            double infeas = 0.0;
            for (int j = art0_; j < cols_; ++j)
                infeas += x_[j];
            if (infeas > 1e-7)
                return LpStatus::Infeasible;
            for (int j = art0_; j < cols_; ++j) {
                lo_[j] = up_[j] = 0.0;
                x_[j] = std::clamp(x_[j], 0.0, 0.0);
            }
        }
        std::vector<double> c(cols_, 0.0);
        const double sign = model_.maximize() ? -1.0 : 1.0;
        for (const auto& t : model_.objective())
            c[t.var] += sign * t.coef;
        set_costs(c);
        return iterate();
    }

    /// Structural values after re-solving the basis system from the original
    /// data, which removes the drift accumulated by tableau updates.
    std::vector<double> polished() const
    {
        std::vector<double> x = x_;
        // B x_B = b - N x_N
        std::vector<double> rhs(m_, 0.0);
        for (int r = 0; r < m_; ++r)
            rhs[r] = model_.rows()[r].rhs;
        std::vector<bool> basic(cols_, false);
        for (int r = 0; r < m_; ++r)
            basic[basis_[r]] = true;
        for (int j = 0; j < cols_; ++j) {
            if (basic[j] || x[j] == 0.0)
                continue;
            for (const auto& [r, a] : column(j))
                rhs[r] -= a * x[j];
        }
        std::vector<double> B(static_cast<std::size_t>(m_) * m_, 0.0);
        for (int k = 0; k < m_; ++k)
            for (const auto& [r, a] : column(basis_[k]))
                B[static_cast<std::size_t>(r) * m_ + k] += a;
        // Gaussian elimination with partial pivoting.
        for (int k = 0; k < m_; ++k) {
            int p = k;
            for (int i = k + 1; i < m_; ++i)
                if (std::fabs(B[static_cast<std::size_t>(i) * m_ + k]) > std::fabs(B[static_cast<std::size_t>(p) * m_ + k]))
                    p = i;
            const double piv = B[static_cast<std::size_t>(p) * m_ + k];
            if (std::fabs(piv) < 1e-12)
                return x_;   // singular in floating point: keep the tableau values
            if (p != k) {
                for (int j = 0; j < m_; ++j)
                    std::swap(B[static_cast<std::size_t>(p) * m_ + j], B[static_cast<std::size_t>(k) * m_ + j]);
                std::swap(rhs[p], rhs[k]);
            }
            for (int i = k + 1; i < m_; ++i) {
                const double f = B[static_cast<std::size_t>(i) * m_ + k] / piv;
                if (f == 0.0)
                    continue;
                for (int j = k; j < m_; ++j)
                    B[static_cast<std::size_t>(i) * m_ + j] -= f * B[static_cast<std::size_t>(k) * m_ + j];
                rhs[i] -= f * rhs[k];
            }
        }
        std::vector<double> xb(m_, 0.0);
        for (int k = m_ - 1; k >= 0; --k) {
            double s = rhs[k];
            for (int j = k + 1; j < m_; ++j)
                s -= B[static_cast<std::size_t>(k) * m_ + j] * xb[j];
            xb[k] = s / B[static_cast<std::size_t>(k) * m_ + k];
        }
        for (int k = 0; k < m_; ++k)
            x[basis_[k]] = xb[k];
        x.resize(n_);
        for (int j = 0; j < n_; ++j)
            if (std::fabs(x[j] - lo_[j]) < 1e-10)
                x[j] = lo_[j];
            else if (std::fabs(x[j] - up_[j]) < 1e-10)
                x[j] = up_[j];
        return x;
    }

    std::vector<double> values() const { return {x_.begin(), x_.begin() + n_}; }

private:
    const MilpModel& model_;
    int m_, n_;
    int cols_ = 0, art0_ = 0, n_art_ = 0;
    std::vector<double> T_;    // m_ x cols_
    std::vector<double> d_;    // reduced costs
    std::vector<double> cost_;
    std::vector<double> x_, lo_, up_;
    std::vector<int> basis_;
    std::vector<int> art_row_;
    std::vector<double> art_sign_;
    std::vector<std::vector<std::pair<int, double>>> struct_cols_;

    double& at(int i, int j) { return T_[static_cast<std::size_t>(i) * cols_ + j]; }
    double at(int i, int j) const { return T_[static_cast<std::size_t>(i) * cols_ + j]; }

    // Original column of any tableau variable.
    std::vector<std::pair<int, double>> column(int j) const
    {
        if (j < n_)
            return struct_cols_[j];
        if (j < art0_)
            return {{j - n_, 1.0}};
        return {{art_row_[j - art0_], art_sign_[j - art0_]}};
    }

    void setup(const std::vector<double>& lo, const std::vector<double>& up)
    {
        const auto& rows = model_.rows();
        struct_cols_.assign(n_, {});
        for (int r = 0; r < m_; ++r)
            for (const auto& t : rows[r].terms)
                struct_cols_[t.var].push_back({r, t.coef});

        x_.assign(n_ + m_, 0.0);
        lo_.assign(n_ + m_, 0.0);
        up_.assign(n_ + m_, 0.0);
        for (int j = 0; j < n_; ++j) {
            lo_[j] = lo[j];
            up_[j] = up[j];
            x_[j] = std::isfinite(lo[j]) ? lo[j] : std::isfinite(up[j]) ? up[j] : 0.0;
        }
        std::vector<double> resid(m_, 0.0);
        for (int r = 0; r < m_; ++r) {
            double a = 0.0;
            for (const auto& t : rows[r].terms)
                a += t.coef * x_[t.var];
            resid[r] = rows[r].rhs - a;
            switch (rows[r].sense) {
            case RowSense::LessEqual: lo_[n_ + r] = 0.0; up_[n_ + r] = kInf; break;
            case RowSense::GreaterEqual: lo_[n_ + r] = -kInf; up_[n_ + r] = 0.0; break;
            case RowSense::Equal: lo_[n_ + r] = 0.0; up_[n_ + r] = 0.0; break;
            }
        }
        art0_ = n_ + m_;
        basis_.assign(m_, -1);
        std::vector<double> row_sign(m_, 1.0);
        for (int r = 0; r < m_; ++r) {
            const int s = n_ + r;
            if (resid[r] >= lo_[s] - kFeasTol && resid[r] <= up_[s] + kFeasTol) {
                basis_[r] = s;
                x_[s] = resid[r];
            } else {
                art_row_.push_back(r);
                art_sign_.push_back(resid[r] >= 0.0 ? 1.0 : -1.0);
            }
        }
        n_art_ = static_cast<int>(art_row_.size());
        cols_ = art0_ + n_art_;
        x_.resize(cols_, 0.0);
        lo_.resize(cols_, 0.0);
        up_.resize(cols_, kInf);
        for (int k = 0; k < n_art_; ++k) {
            const int r = art_row_[k];
            basis_[r] = art0_ + k;
            x_[art0_ + k] = std::fabs(resid[r]);
            row_sign[r] = art_sign_[k];
        }
        // T = B^-1 [A I Art] with B diagonal (+1 slacks, +-1 artificials).
        T_.assign(static_cast<std::size_t>(m_) * cols_, 0.0);
        for (int j = 0; j < n_; ++j)
            for (const auto& [r, a] : struct_cols_[j])
                at(r, j) += a * row_sign[r];
        for (int r = 0; r < m_; ++r)
            at(r, n_ + r) = row_sign[r];
        for (int k = 0; k < n_art_; ++k)
            at(art_row_[k], art0_ + k) = 1.0;
    }

    void set_costs(const std::vector<double>& c)
    {
        cost_ = c;
        d_ = c;
        for (int i = 0; i < m_; ++i) {
            const double cb = c[basis_[i]];
            if (cb == 0.0)
                continue;
            for (int j = 0; j < cols_; ++j)
                d_[j] -= cb * at(i, j);
        }
    }

    double objective() const
    {
        double z = 0.0;
        for (int j = 0; j < cols_; ++j)
            z += cost_[j] * x_[j];
        return z;
    }

    LpStatus iterate()
    {
        std::vector<bool> is_basic(cols_, false);
        for (int b : basis_)
            is_basic[b] = true;
        bool bland = false;
        int stall = 0;
        double last = objective();
        const long max_iter = 50L * (m_ + cols_) + 1000;
        for (long iter = 0; iter < max_iter; ++iter) {
            // Pricing.
            int q = -1;
            double dir = 0.0, best = 0.0;
            for (int j = 0; j < cols_; ++j) {
                if (is_basic[j] || lo_[j] == up_[j])
                    continue;
                const double dj = d_[j];
                double dj_dir = 0.0;
                if (dj < -kCostTol && x_[j] < up_[j] - kFeasTol)
                    dj_dir = 1.0;
                else if (dj > kCostTol && x_[j] > lo_[j] + kFeasTol)
                    dj_dir = -1.0;
                if (dj_dir == 0.0)
                    continue;
                if (bland) {
                    q = j;
                    dir = dj_dir;
                    break;
                }
                if (std::fabs(dj) > best) {
                    best = std::fabs(dj);
                    q = j;
                    dir = dj_dir;
                }
            }
            if (q < 0)
                return LpStatus::Optimal;

            // Ratio test.
            double theta = up_[q] - lo_[q];   // bound flip
            int p = -1;
            double p_alpha = 0.0;
            for (int i = 0; i < m_; ++i) {
                const double alpha = dir * at(i, q);
                const int b = basis_[i];
                double lim;
                if (alpha > kPivotTol && std::isfinite(lo_[b]))
                    lim = (x_[b] - lo_[b]) / alpha;
                else if (alpha < -kPivotTol && std::isfinite(up_[b]))
                    lim = (up_[b] - x_[b]) / -alpha;
                else
                    continue;
                lim = std::max(lim, 0.0);
                bool take;
                if (lim < theta - 1e-12)
                    take = true;
                else if (lim > theta + 1e-12 || p < 0)
                    take = false;   // on a tie the bound flip wins
                else
                    take = bland ? b < basis_[p] : std::fabs(alpha) > std::fabs(p_alpha);
                if (take) {
                    theta = lim;
                    p = i;
                    p_alpha = alpha;
                }
            }
            if (std::isinf(theta))
                return LpStatus::Unbounded;

            // Move.
            x_[q] += dir * theta;
            if (theta != 0.0)
                for (int i = 0; i < m_; ++i) {
                    const double a = at(i, q);
                    if (a != 0.0)
                        x_[basis_[i]] -= dir * theta * a;
                }
            if (p < 0) {
                x_[q] = dir > 0 ? up_[q] : lo_[q];
            } else {
                const int leave = basis_[p];
                x_[leave] = p_alpha > 0 ? lo_[leave] : up_[leave];
                pivot(p, q);
                is_basic[leave] = false;
                is_basic[q] = true;
                basis_[p] = q;
            }

            const double z = objective();
            if (z < last - 1e-12 * std::max(1.0, std::fabs(last))) {
                last = z;
                stall = 0;
                bland = false;
            } else if (++stall > 50) {
                bland = true;
            }
        }
        throw SolverError("simplex iteration limit: LP numerical failure");
    }

    void pivot(int p, int q)
    {
        const double piv = at(p, q);
        double* prow = &T_[static_cast<std::size_t>(p) * cols_];
        for (int j = 0; j < cols_; ++j)
            prow[j] /= piv;
        prow[q] = 1.0;
        std::vector<int> nz;
        nz.reserve(cols_);
        for (int j = 0; j < cols_; ++j)
            if (prow[j] != 0.0)
                nz.push_back(j);
        for (int i = 0; i < m_; ++i) {
            if (i == p)
                continue;
            double* row = &T_[static_cast<std::size_t>(i) * cols_];
            const double f = row[q];
            if (f == 0.0)
                continue;
            for (int j : nz)
                row[j] -= f * prow[j];
            row[q] = 0.0;
        }
        const double f = d_[q];
        if (f != 0.0) {
            for (int j : nz)
                d_[j] -= f * prow[j];
            d_[q] = 0.0;
        }
    }
};

struct LpResult {
    LpStatus status;
    double objective = 0.0;   // in the model's sense
    std::vector<double> x;
};

LpResult solve_lp(const MilpModel& model, const std::vector<double>& lo, const std::vector<double>& up, bool polish)
{
    DenseSimplex lp(model, lo, up);
    LpResult res{lp.solve(), 0.0, {}};
    if (res.status != LpStatus::Optimal)
        return res;
    res.x = polish ? lp.polished() : lp.values();
    res.objective = model.evaluate_objective(res.x);
    return res;
}

} // namespace

Solution solve_reference(const MilpModel& model, const ReferenceLimits& limits)
{
    const auto start = std::chrono::steady_clock::now();
    std::vector<int> binaries;
    for (std::size_t j = 0; j < model.variable_count(); ++j)
        if (model.variable(static_cast<int>(j)).kind == VarKind::Binary)
            binaries.push_back(static_cast<int>(j));
    const std::size_t continuous = model.variable_count() - binaries.size();
    if (binaries.size() > limits.max_binaries || continuous > limits.max_continuous)
        throw SolverError("reference solver limited to " + std::to_string(limits.max_binaries) + " binaries and " +
                          std::to_string(limits.max_continuous) + " continuous variables; model has " +
                          std::to_string(binaries.size()) + " and " + std::to_string(continuous));

    std::vector<double> lo(model.variable_count()), up(model.variable_count());
    for (std::size_t j = 0; j < model.variable_count(); ++j) {
        lo[j] = model.variable(static_cast<int>(j)).lower;
        up[j] = model.variable(static_cast<int>(j)).upper;
    }
    // Internally everything is "larger is better".
    const double sense = model.maximize() ? 1.0 : -1.0;

    struct Node {
        std::vector<std::pair<int, double>> fixes;
    };
    std::vector<Node> stack{{}};
    std::optional<std::vector<double>> incumbent;
    double best = -kInf;
    long nodes = 0;
    bool unbounded = false, hit_limit = false;

    while (!stack.empty()) {
        if (++nodes > limits.max_nodes) {
            hit_limit = true;
            break;
        }
        Node node = std::move(stack.back());
        stack.pop_back();
        auto nlo = lo, nup = up;
        for (const auto& [j, v] : node.fixes)
            nlo[j] = nup[j] = v;
        const LpResult lp = solve_lp(model, nlo, nup, false);
        if (lp.status == LpStatus::Infeasible)
            continue;
        if (lp.status == LpStatus::Unbounded) {
            unbounded = true;
            break;
        }
        const double value = sense * lp.objective;
        if (incumbent && value <= best + 1e-9 * std::max(1.0, std::fabs(best)))
            continue;

        // Most fractional binary; ties go to the lowest id.
        int branch = -1;
        double frac_best = kIntTol;
        for (int j : binaries) {
            const double f = std::fabs(lp.x[j] - std::round(lp.x[j]));
            if (f > frac_best + 1e-12) {
                frac_best = f;
                branch = j;
            }
        }
        if (branch < 0) {
            best = value;
            incumbent = lp.x;
            continue;
        }
        // The child on the rounding side is explored first.
        const double first = lp.x[branch] >= 0.5 ? 1.0 : 0.0;
        Node later = node, sooner = std::move(node);
        later.fixes.push_back({branch, 1.0 - first});
        sooner.fixes.push_back({branch, first});
        stack.push_back(std::move(later));
        stack.push_back(std::move(sooner));
    }

    Solution sol;
    sol.solver = "reference";
    if (unbounded) {
        sol.status = SolveStatus::Unbounded;
    } else if (!incumbent) {
        sol.status = hit_limit ? SolveStatus::Limit : SolveStatus::Infeasible;
    } else {
        // Final LP with the binaries pinned, re-solved and polished.
        auto flo = lo, fup = up;
        for (int j : binaries)
            flo[j] = fup[j] = std::round((*incumbent)[j]);
        const LpResult fin = solve_lp(model, flo, fup, true);
        if (fin.status != LpStatus::Optimal)
            throw SolverError("LP numerical failure while polishing the incumbent");
        sol.values = fin.x;
        sol.objective = fin.objective;
        sol.status = hit_limit ? SolveStatus::Limit : SolveStatus::Optimal;
        const auto rep = check_solution(model, sol.values, 1e-7);
        if (!rep.ok())
            throw SolverError("LP numerical failure: residual " + std::to_string(rep.max_residual));
    }
    sol.message = std::to_string(nodes) + " nodes";
    sol.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return sol;
}

} // namespace ecm
