#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "fluxonium/csv.hpp"

namespace fluxonium {

// Numerical failure in a library computation (eigensolver breakdown,
// non-convergence, ill-posed inversion). Distinct from bad configuration.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CircuitParams {
    double e_c = 1.08;   // charging energy E_C/h in GHz
    double e_l = 0.64;   // inductive energy E_L/h in GHz
    double e_j = 5.57;   // Josephson energy E_J/h in GHz
    double flux = 0.5;   // external flux in flux quanta
    int basis_dim = 120; // oscillator basis size

    void validate() const;
};

enum class OperatorKind { Charge, Phase, HalfSin, HalfCos };

// Eigenpairs of the fluxonium Hamiltonian. Matrix elements of the standard
// operators are projected into the eigenbasis at diagonalization time, so
// lookups are O(1).
//
// All stored operator blocks are real. Phase, HalfSin, HalfCos are real
// symmetric in this basis. The charge operator is purely imaginary with real
// eigenvectors: <i|n|j> = i * charge_im(i,j), and charge_im is antisymmetric.
struct EigenSystem {
    std::vector<double> energies; // ascending, GHz
    Eigen::MatrixXd eigvecs;      // basis_dim x k, columns normalized
    CircuitParams params;

    Eigen::MatrixXd charge_im; // k x k, signed coefficient of i
    Eigen::MatrixXd phase;
    Eigen::MatrixXd halfsin;
    Eigen::MatrixXd halfcos;

    int levels() const { return static_cast<int>(energies.size()); }
};

// H = 4 E_C n^2 + (1/2) E_L phi^2 - E_J cos(phi - 2 pi flux), expressed in the
// oscillator ladder basis of the quadratic part. With the charge operator
// written as i*N (N real antisymmetric), n^2 = -N^2 and H is real symmetric.
Eigen::MatrixXd build_hamiltonian(const CircuitParams& params);

// k lowest eigenpairs of H, ascending, with the sign of each eigenvector fixed
// so its largest-magnitude coefficient is positive.
EigenSystem diagonalize(const Eigen::MatrixXd& hamiltonian, int k,
                        const CircuitParams& params);

// build + diagonalize; when check_convergence is set, re-solves at twice the
// basis size and requires the six lowest transition frequencies to agree
// within 1 kHz.
EigenSystem solve(const CircuitParams& params, int k, bool check_convergence = true);

double transition_frequency(const EigenSystem& eig, int i, int j);

// Signed real value r with |<i|Op|j>| = |r|. For Charge the element itself is
// i*r (purely imaginary); for the other operators it is r.
double matrix_element(const EigenSystem& eig, OperatorKind op, int i, int j);

// One row per flux point: flux followed by each requested transition
// frequency. Header: flux,f01,f12,...
csv::Table spectrum_vs_flux(const CircuitParams& params,
                            const std::vector<double>& flux_grid,
                            const std::vector<std::pair<int, int>>& transitions);

}  // namespace fluxonium
