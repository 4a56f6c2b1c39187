#include "fluxonium/circuit.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace fluxonium {

void CircuitParams::validate() const {
    if (!(std::isfinite(e_c) && std::isfinite(e_l) && std::isfinite(e_j) &&
          std::isfinite(flux))) {
        throw std::invalid_argument("circuit parameters must be finite");
    }
    if (e_c <= 0.0 || e_l <= 0.0) {
        throw std::invalid_argument("e_c and e_l must be positive");
    }
    if (e_j < 0.0) throw std::invalid_argument("e_j must be nonnegative");
    if (basis_dim < 10) {
        throw std::invalid_argument("basis_dim must be at least 10");
    }
}

namespace {

double phi_zpf(const CircuitParams& p) {
    return std::pow(8.0 * p.e_c / p.e_l, 0.25) / std::sqrt(2.0);
}

double n_zpf(const CircuitParams& p) {
    return std::pow(p.e_l / (8.0 * p.e_c), 0.25) / std::sqrt(2.0);
}

// phi = phi_zpf (a + a^dag): real symmetric tridiagonal
Eigen::MatrixXd phase_matrix(const CircuitParams& p) {
    const int n = p.basis_dim;
    const double z = phi_zpf(p);
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n, n);
    for (int m = 0; m + 1 < n; ++m) {
        const double v = z * std::sqrt(static_cast<double>(m + 1));
        phi(m, m + 1) = v;
        phi(m + 1, m) = v;
    }
    return phi;
}

// N with n = i*N, i.e. N = n_zpf (a^dag - a): real antisymmetric
Eigen::MatrixXd charge_im_matrix(const CircuitParams& p) {
    const int n = p.basis_dim;
    const double z = n_zpf(p);
    Eigen::MatrixXd N = Eigen::MatrixXd::Zero(n, n);
    for (int m = 0; m + 1 < n; ++m) {
        const double v = z * std::sqrt(static_cast<double>(m + 1));
        N(m + 1, m) = v;
        N(m, m + 1) = -v;
    }
    return N;
}

struct PhaseSpectral {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

PhaseSpectral decompose_phase(const CircuitParams& p) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(phase_matrix(p));
    if (es.info() != Eigen::Success) {
        throw NumericError("eigendecomposition of the phase operator failed");
    }
    return {es.eigenvalues(), es.eigenvectors()};
}

// f applied to phi via its spectral decomposition
template <typename F>
Eigen::MatrixXd phase_function(const PhaseSpectral& sp, F f) {
    Eigen::VectorXd fv = sp.values.unaryExpr([&](double x) { return f(x); });
    return sp.vectors * fv.asDiagonal() * sp.vectors.transpose();
}

}  // namespace

Eigen::MatrixXd build_hamiltonian(const CircuitParams& params) {
    params.validate();
    const auto sp = decompose_phase(params);
    const Eigen::MatrixXd N = charge_im_matrix(params);
    const double phi_ext = 2.0 * M_PI * params.flux;
    Eigen::MatrixXd h =
        -4.0 * params.e_c * (N * N) +
        0.5 * params.e_l * phase_function(sp, [](double x) { return x * x; }) -
        params.e_j *
            phase_function(sp, [&](double x) { return std::cos(x - phi_ext); });
    // enforce exact symmetry against last-bit roundoff
    h = 0.5 * (h + h.transpose()).eval();
    return h;
}

EigenSystem diagonalize(const Eigen::MatrixXd& hamiltonian, int k,
                        const CircuitParams& params) {
    const int n = static_cast<int>(hamiltonian.rows());
    if (hamiltonian.cols() != n) throw std::invalid_argument("hamiltonian must be square");
    if (k < 1 || k > n) throw std::invalid_argument("level count out of range");
    if (!hamiltonian.isApprox(hamiltonian.transpose(), 1e-12)) {
        throw std::invalid_argument("hamiltonian must be symmetric");
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hamiltonian);
    if (es.info() != Eigen::Success) {
        throw NumericError("hamiltonian eigendecomposition failed");
    }

    EigenSystem eig;
    eig.params = params;
    eig.energies.assign(es.eigenvalues().data(), es.eigenvalues().data() + k);
    eig.eigvecs = es.eigenvectors().leftCols(k);
    for (int c = 0; c < k; ++c) {
        int imax = 0;
        eig.eigvecs.col(c).cwiseAbs().maxCoeff(&imax);
        if (eig.eigvecs(imax, c) < 0.0) eig.eigvecs.col(c) = -eig.eigvecs.col(c);
    }

    const auto sp = decompose_phase(params);
    const double phi_ext = 2.0 * M_PI * params.flux;
    const Eigen::MatrixXd& v = eig.eigvecs;
    eig.charge_im = v.transpose() * charge_im_matrix(params) * v;
    eig.phase = v.transpose() * phase_function(sp, [](double x) { return x; }) * v;
    eig.halfsin =
        v.transpose() *
        phase_function(sp, [&](double x) { return std::sin((x - phi_ext) / 2.0); }) * v;
    eig.halfcos =
        v.transpose() *
        phase_function(sp, [&](double x) { return std::cos((x - phi_ext) / 2.0); }) * v;
    return eig;
}

namespace {

EigenSystem solve_unchecked(const CircuitParams& params, int k) {
    return diagonalize(build_hamiltonian(params), k, params);
}

}  // namespace

EigenSystem solve(const CircuitParams& params, int k, bool check_convergence) {
    params.validate();
    if (k > params.basis_dim) {
        throw std::invalid_argument("level count exceeds basis_dim");
    }
    EigenSystem eig = solve_unchecked(params, k);
    if (check_convergence) {
        CircuitParams doubled = params;
        doubled.basis_dim = 2 * params.basis_dim;
        const int levels = std::min(k, 4);
        EigenSystem ref = solve_unchecked(doubled, levels);
        for (int i = 0; i < levels; ++i) {
            for (int j = i + 1; j < levels; ++j) {
                const double a = eig.energies[j] - eig.energies[i];
                const double b = ref.energies[j] - ref.energies[i];
                if (std::abs(a - b) > 1e-6) {
                    throw NumericError(
                        "basis_dim " + std::to_string(params.basis_dim) +
                        " not converged: transition shifts by " +
                        csv::format_double(std::abs(a - b)) + " GHz on doubling");
                }
            }
        }
    }
    return eig;
}

double transition_frequency(const EigenSystem& eig, int i, int j) {
    if (i < 0 || j < 0 || i >= eig.levels() || j >= eig.levels()) {
        throw std::out_of_range("level index out of range");
    }
    return std::abs(eig.energies[j] - eig.energies[i]);
}

double matrix_element(const EigenSystem& eig, OperatorKind op, int i, int j) {
    if (i < 0 || j < 0 || i >= eig.levels() || j >= eig.levels()) {
        throw std::out_of_range("level index out of range");
    }
    switch (op) {
        case OperatorKind::Charge:
            return eig.charge_im(i, j);
        case OperatorKind::Phase:
            return eig.phase(i, j);
        case OperatorKind::HalfSin:
            return eig.halfsin(i, j);
        case OperatorKind::HalfCos:
            return eig.halfcos(i, j);
    }
    throw std::invalid_argument("unknown operator kind");
}

csv::Table spectrum_vs_flux(const CircuitParams& params,
                            const std::vector<double>& flux_grid,
                            const std::vector<std::pair<int, int>>& transitions) {
    params.validate();
    if (flux_grid.empty()) throw std::invalid_argument("flux grid is empty");
    if (transitions.empty()) throw std::invalid_argument("no transitions requested");
    int max_level = 0;
    for (auto [i, j] : transitions) {
        if (i < 0 || j < 0) throw std::invalid_argument("negative level index");
        max_level = std::max({max_level, i, j});
    }

    csv::Table table;
    table.header.push_back("flux");
    for (auto [i, j] : transitions) {
        table.header.push_back("f" + std::to_string(i) + std::to_string(j));
    }

    for (double flux : flux_grid) {
        if (!std::isfinite(flux)) throw std::invalid_argument("non-finite flux value");
        CircuitParams p = params;
        p.flux = flux;
        EigenSystem eig;
        try {
            eig = solve(p, max_level + 1, false);
        } catch (const NumericError& e) {
            throw NumericError("at flux " + csv::format_double(flux) + ": " + e.what());
        }
        std::vector<double> row;
        row.push_back(flux);
        for (auto [i, j] : transitions) row.push_back(transition_frequency(eig, i, j));
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace fluxonium
