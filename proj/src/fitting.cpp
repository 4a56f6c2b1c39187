#include "fluxonium/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace fluxonium {

namespace {

Eigen::VectorXd clamp_to_bounds(const Eigen::VectorXd& x, const FitProblem& p) {
    Eigen::VectorXd out = x;
    if (p.lower.size()) out = out.cwiseMax(p.lower);
    if (p.upper.size()) out = out.cwiseMin(p.upper);
    return out;
}

double fd_step(double x) { return std::max(1e-6 * std::abs(x), 1e-9); }

}  // namespace

FitResult nlls_fit(const FitProblem& problem) {
    const int n = static_cast<int>(problem.init.size());
    if (n == 0) throw std::invalid_argument("empty parameter vector");
    if (!problem.residual) throw std::invalid_argument("missing residual function");
    if (problem.lower.size() && problem.lower.size() != n) {
        throw std::invalid_argument("lower bound dimension mismatch");
    }
    if (problem.upper.size() && problem.upper.size() != n) {
        throw std::invalid_argument("upper bound dimension mismatch");
    }
    if ((clamp_to_bounds(problem.init, problem) - problem.init).norm() != 0.0) {
        throw std::invalid_argument("initial parameters violate bounds");
    }

    Eigen::VectorXd x = problem.init;
    Eigen::VectorXd r = problem.residual(x);
    const int m = static_cast<int>(r.size());
    if (m < n) {
        throw std::invalid_argument("fewer residuals than parameters (" +
                                    std::to_string(m) + " < " + std::to_string(n) + ")");
    }
    if (!r.allFinite()) throw NumericError("residual not finite at the initial point");

    double cost = r.squaredNorm();
    const double cost_floor = problem.cost_tol * std::max(1.0, cost);
    // start almost undamped: a linear problem then converges in one step, and
    // rejected steps are cheap (one residual evaluation each)
    double lambda = 1e-8;

    FitResult result;
    result.iterations = 0;
    result.converged = false;

    Eigen::MatrixXd jac(m, n);
    auto jacobian_at = [&](const Eigen::VectorXd& x0, const Eigen::VectorXd& r0) {
        for (int k = 0; k < n; ++k) {
            Eigen::VectorXd xk = x0;
            const double h = fd_step(x0[k]);
            xk[k] += h;
            jac.col(k) = (problem.residual(xk) - r0) / h;
        }
        if (!jac.allFinite()) throw NumericError("jacobian not finite");
    };

    for (int iter = 0; iter <= problem.max_iterations; ++iter) {
        jacobian_at(x, r);
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd grad = jac.transpose() * r;

        if (grad.lpNorm<Eigen::Infinity>() <= problem.grad_tol) {
            result.converged = true;
            result.message = "gradient below tolerance";
            break;
        }
        if (iter == problem.max_iterations) {
            result.message = "maximum iterations reached";
            break;
        }

        // diagonal damping; floor protects parameters the residual ignores
        Eigen::VectorXd diag = jtj.diagonal();
        const double diag_floor = std::max(1e-12, 1e-12 * diag.maxCoeff());
        diag = diag.cwiseMax(diag_floor);

        bool accepted = false;
        bool step_limited = false;
        Eigen::VectorXd x_new, r_new;
        double cost_new = cost;
        while (!accepted) {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += lambda * diag;
            const Eigen::VectorXd delta = a.ldlt().solve(-grad);
            if (delta.allFinite()) {
                x_new = clamp_to_bounds(x + delta, problem);
                // proposal indistinguishable from the current point: converged
                if ((x_new - x).norm() <= problem.step_tol * (x.norm() + problem.step_tol)) {
                    step_limited = true;
                    break;
                }
                r_new = problem.residual(x_new);
                if (r_new.allFinite()) {
                    cost_new = r_new.squaredNorm();
                    if (cost_new < cost) accepted = true;
                }
            }
            if (!accepted) {
                lambda *= 3.0;
                if (lambda > 1e14) break;
            }
        }
        if (step_limited) {
            result.converged = true;
            result.message = "step below tolerance";
            break;
        }
        if (!accepted) {
            result.message = "damping exhausted without cost reduction";
            break;
        }

        const double drop = cost - cost_new;
        x = x_new;
        r = r_new;
        cost = cost_new;
        lambda = std::max(lambda / 3.0, 1e-12);
        ++result.iterations;

        if (cost <= cost_floor) {
            result.converged = true;
            result.message = "cost negligible";
            break;
        }
        if (drop <= problem.cost_tol * std::max(cost, 1e-300)) {
            result.converged = true;
            result.message = "cost decrease below tolerance";
            break;
        }
    }

    result.params = x;
    result.cost = cost;

    // standard errors from s^2 (J^T J)^{-1} at the solution
    jacobian_at(x, r);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const double s2 = (m > n) ? cost / static_cast<double>(m - n) : 0.0;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(jtj);
    result.std_errors = Eigen::VectorXd::Zero(n);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        const Eigen::MatrixXd cov = s2 * ldlt.solve(Eigen::MatrixXd::Identity(n, n));
        for (int k = 0; k < n; ++k) {
            result.std_errors[k] = std::sqrt(std::max(0.0, cov(k, k)));
        }
    }
    return result;
}

int encode_transition(int i, int j) {
    if (i < 0 || j < 0 || i >= j || j > 9) {
        throw std::invalid_argument("transition levels must satisfy 0 <= i < j <= 9");
    }
    return i * 10 + j;
}

std::pair<int, int> decode_transition(int code) {
    const int i = code / 10;
    const int j = code % 10;
    if (code < 0 || i >= j) {
        throw std::invalid_argument("bad transition code " + std::to_string(code));
    }
    return {i, j};
}

FitResult fit_spectroscopy(const std::vector<SpectroscopyPoint>& data,
                           const CircuitParams& init) {
    init.validate();
    if (data.size() < 6) {
        throw std::invalid_argument("spectroscopy fit needs at least 6 points");
    }
    std::set<std::pair<int, int>> transitions;
    std::set<double> fluxes;
    int max_level = 0;
    for (const auto& pt : data) {
        if (pt.level_i < 0 || pt.level_j <= pt.level_i) {
            throw std::invalid_argument("bad transition indices in spectroscopy data");
        }
        transitions.insert({pt.level_i, pt.level_j});
        fluxes.insert(pt.flux);
        max_level = std::max(max_level, pt.level_j);
    }
    if (transitions.size() < 2) {
        throw std::invalid_argument("spectroscopy fit needs at least 2 distinct transitions");
    }
    if (fluxes.size() < 2) {
        throw std::invalid_argument(
            "spectroscopy data covers a single flux point: fit is rank-deficient");
    }

    const int levels = max_level + 1;
    // one convergence check upfront; the optimizer loop then trusts basis_dim
    solve(init, levels, true);

    auto residual = [&data, &init, levels](const Eigen::VectorXd& p) {
        CircuitParams params = init;
        params.e_c = p[0];
        params.e_l = p[1];
        params.e_j = p[2];
        // one diagonalization per distinct flux for the current params
        std::map<double, EigenSystem> cache;
        Eigen::VectorXd r(static_cast<int>(data.size()));
        for (size_t idx = 0; idx < data.size(); ++idx) {
            const auto& pt = data[idx];
            auto it = cache.find(pt.flux);
            if (it == cache.end()) {
                params.flux = pt.flux;
                it = cache.emplace(pt.flux, solve(params, levels, false)).first;
            }
            r[static_cast<int>(idx)] =
                transition_frequency(it->second, pt.level_i, pt.level_j) - pt.freq_ghz;
        }
        return r;
    };

    FitProblem problem;
    problem.residual = residual;
    problem.init = Eigen::Vector3d(init.e_c, init.e_l, init.e_j);
    problem.lower = Eigen::Vector3d(1e-6, 1e-6, 0.0);
    return nlls_fit(problem);
}

}  // namespace fluxonium
