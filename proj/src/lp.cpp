#include "hmlnv/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hmlnv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasTol = 1e-7;   // bound violation below this is feasible
constexpr double kDualTol = 1e-9;   // reduced costs below this are zero
constexpr double kPivotTol = 1e-8;  // smallest acceptable pivot element
constexpr int kDegenerateLimit = 60;  // consecutive zero-steps before Bland

enum class VarState : uint8_t { Basic, AtLo, AtUp, Free };

// Bounded-variable primal simplex over the system  A x + s = b, with slack
// bounds chosen per row sense.  Phase 1 drives the summed bound violation of
// the basic variables to zero with a composite objective; phase 2 maximizes.
class Simplex {
public:
    Simplex(const LpModel& model, std::span<const double> lo_struct,
            std::span<const double> hi_struct)
        : m_(static_cast<int>(model.rows.size())), n_(model.n), total_(n_ + m_) {
        lo_.assign(total_, 0);
        hi_.assign(total_, 0);
        cost_.assign(total_, 0);
        for (int j = 0; j < n_; ++j) {
            lo_[j] = lo_struct[j];
            hi_[j] = hi_struct[j];
            cost_[j] = model.obj[j];
        }
        cols_.resize(total_);
        for (int i = 0; i < m_; ++i) {
            const LinearRow& row = model.rows[i];
            for (const auto& [v, c] : row.terms) {
                if (v < 0 || v >= n_) throw ContractViolation("row references unknown variable");
                if (c != 0) cols_[v].push_back({i, c});
            }
            const int s = n_ + i;
            cols_[s].push_back({i, 1.0});
            switch (row.sense) {
                case RowSense::LE: lo_[s] = 0; hi_[s] = kInf; break;
                case RowSense::GE: lo_[s] = -kInf; hi_[s] = 0; break;
                case RowSense::EQ: lo_[s] = 0; hi_[s] = 0; break;
            }
            b_.push_back(row.rhs);
        }
    }

    LpSolution run() {
        init_basis();
        LpSolution out;
        if (!phase(true)) {
            out.status = infeasible_ ? LpStatus::Infeasible : LpStatus::IterLimit;
            out.iterations = iters_;
            return out;
        }
        if (!phase(false)) {
            out.status = unbounded_ ? LpStatus::Unbounded : LpStatus::IterLimit;
            out.iterations = iters_;
            return out;
        }
        out.status = LpStatus::Optimal;
        out.x.assign(x_.begin(), x_.begin() + n_);
        out.obj = 0;
        for (int j = 0; j < n_; ++j) out.obj += cost_[j] * x_[j];
        out.iterations = iters_;
        return out;
    }

private:
    // --------------------------------------------------------------- setup

    void init_basis() {
        state_.assign(total_, VarState::AtLo);
        basis_.resize(m_);
        in_basis_.assign(total_, -1);
        x_.assign(total_, 0);
        for (int j = 0; j < n_; ++j) {
            if (std::isfinite(lo_[j])) {
                state_[j] = VarState::AtLo;
                x_[j] = lo_[j];
            } else if (std::isfinite(hi_[j])) {
                state_[j] = VarState::AtUp;
                x_[j] = hi_[j];
            } else {
                state_[j] = VarState::Free;
                x_[j] = 0;
            }
        }
        for (int i = 0; i < m_; ++i) {
            const int s = n_ + i;
            basis_[i] = s;
            in_basis_[s] = i;
            state_[s] = VarState::Basic;
        }
        binv_.assign(static_cast<size_t>(m_) * m_, 0);
        for (int i = 0; i < m_; ++i) binv_[static_cast<size_t>(i) * m_ + i] = 1.0;
        recompute_basics();
    }

    // x_B = Binv (b - N x_N); with the initial identity basis Binv = I.
    void recompute_basics() {
        std::vector<double> rhs = b_;
        for (int j = 0; j < total_; ++j) {
            if (state_[j] == VarState::Basic || x_[j] == 0) continue;
            for (const auto& [i, c] : cols_[j]) rhs[i] -= c * x_[j];
        }
        for (int i = 0; i < m_; ++i) {
            double v = 0;
            const double* row = &binv_[static_cast<size_t>(i) * m_];
            for (int k = 0; k < m_; ++k) v += row[k] * rhs[k];
            x_[basis_[i]] = v;
        }
    }

    void refactorize() {
        // Rebuild Binv from scratch by Gauss-Jordan on the basis matrix.
        std::vector<double> mat(static_cast<size_t>(m_) * 2 * m_, 0);
        const int w = 2 * m_;
        for (int k = 0; k < m_; ++k)
            for (const auto& [i, c] : cols_[basis_[k]]) mat[static_cast<size_t>(i) * w + k] = c;
        for (int i = 0; i < m_; ++i) mat[static_cast<size_t>(i) * w + m_ + i] = 1.0;
        for (int col = 0; col < m_; ++col) {
            int piv = -1;
            double best = 0;
            for (int i = col; i < m_; ++i) {
                const double v = std::fabs(mat[static_cast<size_t>(i) * w + col]);
                if (v > best) {
                    best = v;
                    piv = i;
                }
            }
            if (piv < 0 || best < 1e-12) throw ResourceError("singular basis during refactorization");
            if (piv != col)
                for (int k = 0; k < w; ++k)
                    std::swap(mat[static_cast<size_t>(piv) * w + k],
                              mat[static_cast<size_t>(col) * w + k]);
            const double d = mat[static_cast<size_t>(col) * w + col];
            for (int k = 0; k < w; ++k) mat[static_cast<size_t>(col) * w + k] /= d;
            for (int i = 0; i < m_; ++i) {
                if (i == col) continue;
                const double f = mat[static_cast<size_t>(i) * w + col];
                if (f == 0) continue;
                for (int k = 0; k < w; ++k)
                    mat[static_cast<size_t>(i) * w + k] -=
                        f * mat[static_cast<size_t>(col) * w + k];
            }
        }
        for (int i = 0; i < m_; ++i)
            for (int k = 0; k < m_; ++k)
                binv_[static_cast<size_t>(i) * m_ + k] = mat[static_cast<size_t>(i) * w + m_ + k];
        recompute_basics();
    }

    // ------------------------------------------------------------- pricing

    // y = g^T Binv for a cost vector over basics.
    std::vector<double> btran(const std::vector<double>& g) const {
        std::vector<double> y(m_, 0);
        for (int i = 0; i < m_; ++i) {
            if (g[i] == 0) continue;
            const double* row = &binv_[static_cast<size_t>(i) * m_];
            for (int k = 0; k < m_; ++k) y[k] += g[i] * row[k];
        }
        return y;
    }

    double dot_col(const std::vector<double>& y, int j) const {
        double v = 0;
        for (const auto& [i, c] : cols_[j]) v += y[i] * c;
        return v;
    }

    std::vector<double> ftran(int j) const {  // w = Binv A_j
        std::vector<double> w(m_, 0);
        for (const auto& [i, c] : cols_[j]) {
            if (c == 0) continue;
            for (int k = 0; k < m_; ++k) w[k] += binv_[static_cast<size_t>(k) * m_ + i] * c;
        }
        return w;
    }

    double infeasibility() const {
        double sum = 0;
        for (int i = 0; i < m_; ++i) {
            const double v = x_[basis_[i]];
            const int j = basis_[i];
            if (v < lo_[j] - kFeasTol) sum += lo_[j] - v;
            if (v > hi_[j] + kFeasTol) sum += v - hi_[j];
        }
        return sum;
    }

    // --------------------------------------------------------------- phases

    bool phase(bool phase1) {
        const long iter_cap = 20000 + 200L * total_;
        int degenerate_run = 0;
        while (true) {
            if (iters_ >= iter_cap) return false;
            if (phase1 && infeasibility() <= kFeasTol * (1 + m_)) return true;

            // price: reduced costs against the phase objective
            std::vector<double> g(m_, 0);
            if (phase1) {
                // maximize -(sum of violations): gradient on basics
                for (int i = 0; i < m_; ++i) {
                    const int j = basis_[i];
                    if (x_[j] < lo_[j] - kFeasTol) g[i] = 1.0;        // wants to grow
                    else if (x_[j] > hi_[j] + kFeasTol) g[i] = -1.0;  // wants to shrink
                }
            } else {
                for (int i = 0; i < m_; ++i) g[i] = cost_[basis_[i]];
            }
            const std::vector<double> y = btran(g);

            const bool bland = degenerate_run >= kDegenerateLimit;
            int enter = -1;
            double enter_score = 0;
            int enter_dir = 0;
            for (int j = 0; j < total_; ++j) {
                if (state_[j] == VarState::Basic) continue;
                if (hi_[j] - lo_[j] < 1e-14) continue;  // fixed, nothing to move
                double d = phase1 ? -dot_col(y, j) : cost_[j] - dot_col(y, j);
                int dir = 0;
                if (state_[j] == VarState::AtLo && d > kDualTol) dir = +1;
                else if (state_[j] == VarState::AtUp && d < -kDualTol) dir = -1;
                else if (state_[j] == VarState::Free && std::fabs(d) > kDualTol)
                    dir = d > 0 ? +1 : -1;
                if (dir == 0) continue;
                if (bland) {  // first eligible index
                    enter = j;
                    enter_dir = dir;
                    break;
                }
                if (std::fabs(d) > enter_score) {
                    enter_score = std::fabs(d);
                    enter = j;
                    enter_dir = dir;
                }
            }
            if (enter < 0) {
                if (phase1) {
                    infeasible_ = infeasibility() > kFeasTol * (1 + m_);
                    return !infeasible_;
                }
                return true;  // optimal
            }

            if (!ratio_step(enter, enter_dir, phase1, bland, degenerate_run)) return false;
            ++iters_;
            if (iters_ % 500 == 0) refactorize();
        }
    }

    // One pivot or bound flip; false on unboundedness (phase 2).
    bool ratio_step(int enter, int dir, bool phase1, bool bland, int& degenerate_run) {
        const std::vector<double> w = ftran(enter);

        double best_t = kInf;
        int leave_row = -1;      // -1 with finite best_t: bound flip
        double leave_pivot = 0;
        int leave_to_upper = 0;  // blocking bound of the leaving variable

        if (std::isfinite(hi_[enter]) && std::isfinite(lo_[enter]))
            best_t = hi_[enter] - lo_[enter];

        for (int i = 0; i < m_; ++i) {
            const int j = basis_[i];
            const double delta = -dir * w[i];  // d x_Bi / dt
            if (std::fabs(delta) < kPivotTol) continue;
            const double v = x_[j];
            double t = kInf;
            int to_upper = 0;
            if (v < lo_[j] - kFeasTol) {
                // infeasible below: blocks when climbing back to its lower bound
                if (delta > 0) { t = (lo_[j] - v) / delta; to_upper = 0; }
            } else if (v > hi_[j] + kFeasTol) {
                if (delta < 0) { t = (hi_[j] - v) / delta; to_upper = 1; }
            } else if (delta > 0) {
                if (std::isfinite(hi_[j])) { t = (hi_[j] - v) / delta; to_upper = 1; }
            } else {
                if (std::isfinite(lo_[j])) { t = (lo_[j] - v) / delta; to_upper = 0; }
            }
            if (t == kInf) continue;
            t = std::max(t, 0.0);
            const bool better =
                t < best_t - 1e-12 ||
                (t < best_t + 1e-12 && leave_row >= 0 &&
                 (bland ? basis_[i] < basis_[leave_row]
                        : std::fabs(w[i]) > std::fabs(leave_pivot)));
            if (better || (t < best_t && leave_row < 0)) {
                best_t = t;
                leave_row = i;
                leave_pivot = w[i];
                leave_to_upper = to_upper;
            }
        }

        if (best_t == kInf) {
            if (phase1) throw ResourceError("phase-1 step unbounded");  // cannot happen
            unbounded_ = true;
            return false;
        }

        degenerate_run = (best_t < 1e-10) ? degenerate_run + 1 : 0;

        // apply the step
        for (int i = 0; i < m_; ++i) x_[basis_[i]] += -dir * w[i] * best_t;
        x_[enter] += dir * best_t;

        if (leave_row < 0) {  // bound flip
            state_[enter] = (dir > 0) ? VarState::AtUp : VarState::AtLo;
            x_[enter] = (dir > 0) ? hi_[enter] : lo_[enter];
            return true;
        }

        const int leave = basis_[leave_row];
        x_[leave] = leave_to_upper ? hi_[leave] : lo_[leave];  // snap
        state_[leave] = leave_to_upper ? VarState::AtUp : VarState::AtLo;
        state_[enter] = VarState::Basic;
        basis_[leave_row] = enter;
        in_basis_[leave] = -1;
        in_basis_[enter] = leave_row;

        // Binv update: pivot on row leave_row with column w
        const double piv = w[leave_row];
        double* prow = &binv_[static_cast<size_t>(leave_row) * m_];
        for (int k = 0; k < m_; ++k) prow[k] /= piv;
        for (int i = 0; i < m_; ++i) {
            if (i == leave_row || w[i] == 0) continue;
            double* row = &binv_[static_cast<size_t>(i) * m_];
            const double f = w[i];
            for (int k = 0; k < m_; ++k) row[k] -= f * prow[k];
        }
        return true;
    }

    int m_, n_, total_;
    std::vector<std::vector<std::pair<int, double>>> cols_;
    std::vector<double> lo_, hi_, cost_, b_;
    std::vector<int> basis_, in_basis_;
    std::vector<VarState> state_;
    std::vector<double> x_;
    std::vector<double> binv_;
    long iters_ = 0;
    bool infeasible_ = false;
    bool unbounded_ = false;
};

}  // namespace

LpSolution solve_lp(const LpModel& model, std::span<const double> lo,
                    std::span<const double> hi) {
    if (static_cast<int>(lo.size()) != model.n || static_cast<int>(hi.size()) != model.n)
        throw ContractViolation("bound override length mismatch");
    for (int j = 0; j < model.n; ++j)
        if (lo[j] > hi[j] + 1e-12) return {LpStatus::Infeasible, 0, {}, 0};
    if (model.rows.empty()) {
        // pure bound problem: each variable sits at its favourable bound
        LpSolution out;
        out.status = LpStatus::Optimal;
        out.x.resize(model.n);
        for (int j = 0; j < model.n; ++j) {
            const double c = model.obj[j];
            double v;
            if (c > 0) v = hi[j];
            else if (c < 0) v = lo[j];
            else v = std::isfinite(lo[j]) ? lo[j] : (std::isfinite(hi[j]) ? hi[j] : 0);
            if (!std::isfinite(v)) {
                out.status = LpStatus::Unbounded;
                return out;
            }
            out.x[j] = v;
            out.obj += c * v;
        }
        return out;
    }
    Simplex s(model, lo, hi);
    return s.run();
}

LpSolution solve_lp(const LpModel& model) { return solve_lp(model, model.lo, model.hi); }

}  // namespace hmlnv
