#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "fluxonium/circuit.hpp"

namespace fluxonium {

struct FitProblem {
    // residual vector as a function of the parameter vector
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual;
    Eigen::VectorXd init;
    Eigen::VectorXd lower;  // empty = unbounded
    Eigen::VectorXd upper;
    double grad_tol = 1e-10;
    double step_tol = 1e-12;
    double cost_tol = 1e-16;
    int max_iterations = 200;
};

struct FitResult {
    Eigen::VectorXd params;
    Eigen::VectorXd std_errors;  // from residual variance times inverse approximate Hessian
    double cost = 0.0;           // sum of squared residuals at the solution
    int iterations = 0;          // accepted steps
    bool converged = false;
    std::string message;
};

// Damped Gauss-Newton least squares with a forward-difference Jacobian.
// Damping multiplies the diagonal of J^T J; it shrinks by 3 on accepted steps
// and grows by 3 on rejected ones. Deterministic for a deterministic residual.
FitResult nlls_fit(const FitProblem& problem);

struct SpectroscopyPoint {
    double flux;
    int level_i;
    int level_j;
    double freq_ghz;
};

// Transition column encoding used in spectroscopy CSV files: the two level
// indices as decimal digits, i*10 + j with i < j (1 = f01, 12 = f12, 3 = f03).
int encode_transition(int i, int j);
std::pair<int, int> decode_transition(int code);

// Extracts (E_C, E_L, E_J) by fitting model transition frequencies to the
// data. Flux and basis size are taken from the data rows and init params.
// Requires at least 6 points spanning at least 2 transitions and 2 flux
// values.
FitResult fit_spectroscopy(const std::vector<SpectroscopyPoint>& data,
                           const CircuitParams& init);

}  // namespace fluxonium
