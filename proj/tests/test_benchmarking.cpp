#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "fluxonium/benchmarking.hpp"
#include "fluxonium/circuit.hpp"

using namespace fluxonium;

namespace {

const std::vector<int> kLengths{2, 25, 50, 100, 200, 400, 800};

// generator rotations written out by hand, independent of the table builder
using Rot = std::array<int, 9>;
const std::vector<Rot> kGenerators = {
    {1, 0, 0, 0, -1, 0, 0, 0, -1},  // X
    {1, 0, 0, 0, -1, 0, 0, 0, -1},  // -X (same Bloch action)
    {-1, 0, 0, 0, 1, 0, 0, 0, -1},  // Y
    {-1, 0, 0, 0, 1, 0, 0, 0, -1},  // -Y
    {1, 0, 0, 0, 0, -1, 0, 1, 0},   // X/2
    {1, 0, 0, 0, 0, 1, 0, -1, 0},   // -X/2
    {0, 0, 1, 0, 1, 0, -1, 0, 0},   // Y/2
    {0, 0, -1, 0, 1, 0, 1, 0, 0},   // -Y/2
};

Rot multiply(const Rot& a, const Rot& b) {  // a * b
    Rot out{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            int s = 0;
            for (int k = 0; k < 3; ++k) s += a[i * 3 + k] * b[k * 3 + j];
            out[i * 3 + j] = s;
        }
    }
    return out;
}

Rot to_array(const Eigen::Matrix3i& m) {
    Rot out{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) out[i * 3 + j] = m(i, j);
    }
    return out;
}

}  // namespace

TEST_CASE("clifford table forms the 24-element group") {
    const auto& table = CliffordTable::instance();
    REQUIRE(table.size() == 24);

    // rotations are proper orthogonal integer matrices
    for (int k = 0; k < 24; ++k) {
        const auto& r = table.element(k).rotation;
        CHECK((r.transpose() * r) == Eigen::Matrix3i::Identity());
        CHECK(r.determinant() == 1);
    }

    // closure, identity, inverses
    for (int i = 0; i < 24; ++i) {
        CHECK(table.compose(0, i) == i);
        CHECK(table.compose(i, 0) == i);
        const int inv = table.inverse(i);
        REQUIRE(inv >= 0);
        CHECK(table.compose(i, inv) == 0);
        for (int j = 0; j < 24; ++j) CHECK(table.compose(i, j) >= 0);
    }

    CHECK(table.element(0).gates.size() == 1);
    CHECK(table.element(0).gates[0] == Gate::I);
    CHECK(table.element(0).gate_count == 0);
    CHECK_THROWS_AS(table.element(24), std::out_of_range);
}

TEST_CASE("average physical gate count matches the minimal decompositions") {
    const auto& table = CliffordTable::instance();
    CHECK(std::abs(table.average_gate_count() - 44.0 / 24.0) < 0.001);

    // brute force over all generator strings up to length 3
    std::map<Rot, int> minimal;
    std::vector<Rot> frontier{{1, 0, 0, 0, 1, 0, 0, 0, 1}};
    minimal[frontier[0]] = 0;
    for (int len = 1; len <= 3; ++len) {
        std::vector<Rot> next;
        for (const auto& r : frontier) {
            for (const auto& g : kGenerators) {
                const Rot prod = multiply(g, r);
                if (!minimal.count(prod)) {
                    minimal[prod] = len;
                    next.push_back(prod);
                }
            }
        }
        frontier = std::move(next);
    }
    REQUIRE(minimal.size() == 24);
    for (int k = 0; k < 24; ++k) {
        const auto& e = table.element(k);
        REQUIRE(minimal.count(to_array(e.rotation)) == 1);
        CHECK(e.gate_count == minimal[to_array(e.rotation)]);
    }
}

TEST_CASE("element unitaries realize their rotations on the bloch sphere") {
    const auto& table = CliffordTable::instance();
    using cd = std::complex<double>;
    Eigen::Matrix2cd sigma[3];
    sigma[0] << cd(0, 0), cd(1, 0), cd(1, 0), cd(0, 0);
    sigma[1] << cd(0, 0), cd(0, -1), cd(0, 1), cd(0, 0);
    sigma[2] << cd(1, 0), cd(0, 0), cd(0, 0), cd(-1, 0);
    for (int k = 0; k < 24; ++k) {
        const auto& e = table.element(k);
        // unitarity up to roundoff
        CHECK((e.unitary * e.unitary.adjoint() - Eigen::Matrix2cd::Identity())
                  .norm() < 1e-12);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const double entry = 0.5 * std::real((sigma[i] * e.unitary * sigma[j] *
                                                      e.unitary.adjoint())
                                                         .trace());
                CHECK(entry == doctest::Approx(e.rotation(i, j)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("recovery gate closes every random sequence") {
    const auto& table = CliffordTable::instance();
    const NoiseChannel clean = NoiseChannel::none();
    const SpamReadout ideal = SpamReadout::ideal();
    for (int m : {2, 25, 50, 100}) {
        const auto out = run_rb({m, m + 1}, 250, clean, ideal, 1000 + m);
        for (double v : out.mean) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
        for (double v : out.std_error) CHECK(v < 1e-12);
    }
}

TEST_CASE("spam constants set the noiseless level and the asymptote") {
    const SpamReadout spam;  // defaults
    const auto clean = run_rb(kLengths, 20, NoiseChannel::none(), spam, 4);
    for (double v : clean.mean) CHECK(v == doctest::Approx(0.80).epsilon(1e-12));

    // strong depolarizing noise drives long sequences to the mixed-state level
    const auto noisy = run_rb(kLengths, 40, NoiseChannel::make_depolarizing(0.01), spam, 4);
    CHECK(noisy.mean.back() == doctest::Approx(0.45).epsilon(0.02));
    for (double v : noisy.mean) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("depolarizing decay matches the analytic per-clifford composite") {
    const double lambda = 4e-4;
    const auto out =
        run_rb(kLengths, 50, NoiseChannel::make_depolarizing(lambda), SpamReadout{}, 21);
    const auto fit = fit_rb(out);
    const double expected = depolarizing_clifford_p(lambda);
    CHECK(std::abs(fit.p - expected) / (1.0 - expected) < 0.02);
    CHECK(fit.r_cliff == doctest::Approx(0.5 * (1.0 - expected)).epsilon(0.02));

    // determinism per seed
    const auto again =
        run_rb(kLengths, 50, NoiseChannel::make_depolarizing(lambda), SpamReadout{}, 21);
    for (size_t k = 0; k < out.mean.size(); ++k) CHECK(out.mean[k] == again.mean[k]);
    const auto other =
        run_rb(kLengths, 50, NoiseChannel::make_depolarizing(lambda), SpamReadout{}, 22);
    bool differs = false;
    for (size_t k = 0; k < out.mean.size(); ++k) {
        differs = differs || out.mean[k] != other.mean[k];
    }
    CHECK(differs);
}

TEST_CASE("survival fit recovers exact synthetic curves") {
    RBOutcome synth;
    synth.lengths = kLengths;
    for (int m : kLengths) synth.mean.push_back(0.4 + 0.5 * std::pow(0.9995, m));
    synth.std_error.assign(kLengths.size(), 0.0);
    synth.n_random = 1;
    const auto fit = fit_rb(synth);
    CHECK(fit.a == doctest::Approx(0.4).epsilon(1e-6));
    CHECK(fit.b == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(fit.p == doctest::Approx(0.9995).epsilon(1e-6));
    CHECK(fit.r_cliff == doctest::Approx(0.00025).epsilon(1e-5));

    // the quoted per-Clifford error maps onto the average gate fidelity
    RBOutcome paper;
    paper.lengths = kLengths;
    const double p_quote = 1.0 - 2.0 * 1.7e-4;
    for (int m : kLengths) paper.mean.push_back(0.45 + 0.35 * std::pow(p_quote, m));
    const auto fq = fit_rb(paper);
    CHECK(fq.r_cliff == doctest::Approx(1.7e-4).epsilon(1e-6));
    CHECK(std::abs(fq.avg_fidelity - 0.99991) < 1e-5);

    // a flat curve means no measurable decay
    RBOutcome flat;
    flat.lengths = kLengths;
    flat.mean.assign(kLengths.size(), 0.8);
    const auto ff = fit_rb(flat);
    CHECK(ff.p == 1.0);
    CHECK(ff.r_cliff == 0.0);
    CHECK(ff.avg_fidelity == 1.0);

    // exponential growth has no decay parameter in (0, 1]
    RBOutcome rising;
    rising.lengths = kLengths;
    for (int m : kLengths) rising.mean.push_back(0.4 + 0.001 * std::pow(1.01, m));
    CHECK_THROWS_AS(fit_rb(rising), NumericError);

    RBOutcome too_short;
    too_short.lengths = {2, 25, 50};
    too_short.mean = {0.8, 0.7, 0.6};
    CHECK_THROWS_AS(fit_rb(too_short), std::invalid_argument);
}

TEST_CASE("interleaved benchmarking isolates the target gate error") {
    const double lambda = 2e-4;
    const auto& table = CliffordTable::instance();
    const int target = table.clifford_of_gate(Gate::Xp2);
    REQUIRE(target >= 0);
    const auto noise = NoiseChannel::make_depolarizing(lambda);
    const auto reference = fit_rb(run_rb(kLengths, 50, noise, SpamReadout{}, 31));
    const auto inter =
        fit_rb(run_rb(kLengths, 50, noise, SpamReadout{}, 32, target));
    const double r_gate = interleaved_error(reference, inter);
    // one extra pulse per Clifford: r_gate = lambda/2
    CHECK(std::abs(r_gate - 0.5 * lambda) / (0.5 * lambda) < 0.10);
}

TEST_CASE("purity benchmarking agrees with survival for depolarizing noise") {
    const double lambda = 4e-4;
    const auto noise = NoiseChannel::make_depolarizing(lambda);
    const auto rb = fit_rb(run_rb(kLengths, 50, noise, SpamReadout{}, 41));
    const auto pb = fit_pb(run_pb(kLengths, 50, noise, SpamReadout{}, 42));
    CHECK(pb.r_dec_cliff == doctest::Approx(rb.r_cliff).epsilon(0.05));
    CHECK(pb.r_dec_gate ==
          doctest::Approx(pb.r_dec_cliff / CliffordTable::instance().average_gate_count()));
}

TEST_CASE("coherent errors keep the purity flat") {
    const auto noise = NoiseChannel::make_overrotation(0.05);
    const auto out = run_pb(kLengths, 30, noise, SpamReadout{}, 51);
    // prep infidelity fixes the initial purity; unitaries never lower it
    for (double v : out.mean) CHECK(v == doctest::Approx(0.82).epsilon(1e-9));
    const auto fit = fit_pb(out);
    CHECK(fit.u == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fit.r_dec_cliff < 1e-9);

    // while the survival curve still decays
    const auto rb = fit_rb(run_rb(kLengths, 50, noise, SpamReadout{}, 52));
    CHECK(rb.r_cliff > 1e-4);
}

TEST_CASE("incoherent part alone sets the purity decay under mixed noise") {
    NoiseChannel mixed;
    mixed.overrotation = 0.05;
    mixed.depolarizing = 4e-4;
    mixed.validate();
    const auto rb = fit_rb(run_rb(kLengths, 50, mixed, SpamReadout{}, 61));
    const auto pb = fit_pb(run_pb(kLengths, 50, mixed, SpamReadout{}, 62));
    CHECK(pb.r_dec_cliff < rb.r_cliff);
    // and the bound derived from purity stays close to the depolarizing share
    const double expected = 0.5 * (1.0 - depolarizing_clifford_p(4e-4));
    CHECK(pb.r_dec_cliff == doctest::Approx(expected).epsilon(0.10));
}

TEST_CASE("damping and dephasing channels decay the survival") {
    const auto noise = NoiseChannel::make_amplitude_dephasing(2e-4, 2e-4);
    const auto out = run_rb(kLengths, 40, noise, SpamReadout{}, 71);
    CHECK(out.mean.back() < out.mean.front());
    const auto fit = fit_rb(out);
    CHECK(fit.p < 1.0);
    CHECK(fit.p > 0.99);
    CHECK(fit.r_cliff > 0.0);
}

TEST_CASE("non-physical channels are rejected at construction") {
    CHECK_THROWS_AS(NoiseChannel::make_depolarizing(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(NoiseChannel::make_depolarizing(1.5), std::invalid_argument);
    CHECK_THROWS_AS(NoiseChannel::make_amplitude_dephasing(1.5, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(NoiseChannel::make_amplitude_dephasing(0.0, -0.2),
                    std::invalid_argument);
    CHECK_THROWS_AS(NoiseChannel::make_overrotation(1.0), std::invalid_argument);

    SpamReadout bad;
    bad.meas_offset = 0.5;
    bad.meas_scale = 0.875;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("run argument validation") {
    const auto noise = NoiseChannel::none();
    const SpamReadout spam;
    CHECK_THROWS_AS(run_rb({10}, 5, noise, spam, 1), std::invalid_argument);
    CHECK_THROWS_AS(run_rb({10, 10}, 5, noise, spam, 1), std::invalid_argument);
    CHECK_THROWS_AS(run_rb({0, 10}, 5, noise, spam, 1), std::invalid_argument);
    CHECK_THROWS_AS(run_rb({2, 10}, 0, noise, spam, 1), std::invalid_argument);
    CHECK_THROWS_AS(run_rb({2, 10}, 5, noise, spam, 1, 99), std::invalid_argument);
    CHECK_THROWS_AS(run_pb({2, 10}, 5, noise, spam, 1, -0.1), std::invalid_argument);

    RBOutcome survival = run_rb({2, 10, 20, 40}, 5, noise, spam, 1);
    CHECK_THROWS_AS(fit_pb(survival), std::invalid_argument);
    RBOutcome purity = run_pb({2, 10, 20, 40}, 5, noise, spam, 1);
    CHECK_THROWS_AS(fit_rb(purity), std::invalid_argument);
}
