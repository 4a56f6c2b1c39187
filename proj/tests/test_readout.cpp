#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "fluxonium/readout.hpp"
#include "fluxonium/rng.hpp"

using namespace fluxonium;

namespace {

const std::array<double, 2> kC0{1.0, 1.0};
const std::array<double, 2> kC1{1.8, 1.6};  // separation 1.0 from kC0
constexpr double kSigma = 0.25;             // blobs 4 sigma apart

IQHistogram make_hist(double p0, int n_shots, uint64_t seed) {
    Rng rng(seed);
    return IQHistogram::from_shots(simulate_shots(n_shots, p0, kC0, kC1, kSigma, rng));
}

}  // namespace

TEST_CASE("histogram construction and validation") {
    Rng rng(7);
    const auto shots = simulate_shots(5000, 0.5, kC0, kC1, kSigma, rng);
    const auto h = IQHistogram::from_shots(shots, 64);
    CHECK(h.bins == 64);
    CHECK(h.total == 5000.0);
    double sum = 0.0;
    for (double c : h.counts) {
        CHECK(c >= 0.0);
        sum += c;
    }
    CHECK(sum == h.total);
    CHECK(h.i_min < 1.0);
    CHECK(h.i_max > 1.8);

    CHECK_THROWS_AS(IQHistogram::from_shots({}), std::invalid_argument);
    CHECK_THROWS_AS(IQHistogram::from_shots(shots, 4), std::invalid_argument);
    auto bad = shots;
    bad[0].first = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(IQHistogram::from_shots(bad), std::invalid_argument);

    // a single point lands in the bin whose center is within one bin width
    const auto one = IQHistogram::from_shots({{0.3, -0.2}, {0.3, -0.2}}, 16);
    int hits = 0;
    for (int ix = 0; ix < 16; ++ix) {
        for (int iq = 0; iq < 16; ++iq) {
            if (one.counts[ix * 16 + iq] == 0.0) continue;
            ++hits;
            CHECK(std::abs(one.bin_center_i(ix) - 0.3) <
                  (one.i_max - one.i_min) / 16);
            CHECK(std::abs(one.bin_center_q(iq) + 0.2) <
                  (one.q_max - one.q_min) / 16);
        }
    }
    CHECK(hits == 1);
}

TEST_CASE("double-gaussian fit recovers known populations") {
    const auto fit = fit_double_gaussian(make_hist(0.578, 15000, 42));
    CHECK(fit.p0 == doctest::Approx(0.578).epsilon(0.018));  // 0.01 absolute
    CHECK(std::abs(fit.p0 - 0.578) < 0.01);
    CHECK(fit.p0 + fit.p1 == doctest::Approx(1.0));
    CHECK(!fit.low_population);
    // shared width close to the generating width (binning adds a little)
    CHECK(fit.sigma == doctest::Approx(kSigma).epsilon(0.15));
    // centers land on the generating centers
    CHECK(std::abs(fit.center0[0] - kC0[0]) < 0.05);
    CHECK(std::abs(fit.center0[1] - kC0[1]) < 0.05);
    CHECK(std::abs(fit.center1[0] - kC1[0]) < 0.05);
    CHECK(std::abs(fit.center1[1] - kC1[1]) < 0.05);
}

TEST_CASE("symmetric mixture fits to one half") {
    const auto fit = fit_double_gaussian(make_hist(0.5, 15000, 3));
    CHECK(std::abs(fit.p0 - 0.5) < 0.01);
}

TEST_CASE("population estimate is unbiased across seeds") {
    const double truth = 0.578;
    double sum = 0.0;
    const int n_seeds = 200;
    for (int s = 0; s < n_seeds; ++s) {
        sum += fit_double_gaussian(make_hist(truth, 15000, 1000 + s)).p0;
    }
    const double mean = sum / n_seeds;
    CHECK(std::abs(mean - truth) < 0.003);
}

TEST_CASE("blob labels follow the projected coordinate or the init") {
    // generating centers reversed in I: the lower-coordinate blob is labeled 0,
    // so the fitted p0 is the weight of the OTHER mode
    Rng rng(11);
    const auto shots = simulate_shots(15000, 0.578, {1.0, 0.0}, {0.0, 0.0}, 0.1, rng);
    const auto hist = IQHistogram::from_shots(shots);
    const auto fit = fit_double_gaussian(hist);
    CHECK(std::abs(fit.p0 - 0.422) < 0.01);

    // an init pins the labels to physical modes regardless of geometry
    BlobInit init;
    init.c0 = {1.0, 0.0};
    init.c1 = {0.0, 0.0};
    const auto fit2 = fit_double_gaussian(hist, init);
    CHECK(std::abs(fit2.p0 - 0.578) < 0.01);
    CHECK(std::abs(fit2.center0[0] - 1.0) < 0.05);

    // swapped init swaps the populations
    std::swap(init.c0, init.c1);
    const auto fit3 = fit_double_gaussian(hist, init);
    CHECK(std::abs(fit3.p0 - 0.422) < 0.01);
}

TEST_CASE("single-mode data is flagged with init and rejected without") {
    Rng rng(5);
    const auto shots = simulate_shots(15000, 1.0, kC0, kC1, kSigma, rng);
    const auto hist = IQHistogram::from_shots(shots);
    CHECK_THROWS_AS(fit_double_gaussian(hist), NonIdentifiableError);

    BlobInit init;
    init.c0 = kC0;
    init.c1 = kC1;
    const auto fit = fit_double_gaussian(hist, init);
    CHECK(fit.low_population);
    CHECK(fit.p1 < 0.01);
    CHECK(fit.p0 > 0.99);
}

TEST_CASE("overlapping modes are not identifiable") {
    Rng rng(9);
    // half a width apart: a single merged blob
    const auto shots =
        simulate_shots(15000, 0.5, {0.0, 0.0}, {0.125, 0.0}, 0.25, rng);
    CHECK_THROWS_AS(fit_double_gaussian(IQHistogram::from_shots(shots)),
                    NonIdentifiableError);
}

TEST_CASE("fit input validation") {
    CHECK_THROWS_AS(fit_double_gaussian(make_hist(0.5, 999, 1)), std::invalid_argument);
    IQHistogram h = make_hist(0.5, 2000, 1);
    h.counts[0] = -1.0;
    CHECK_THROWS_AS(fit_double_gaussian(h), std::invalid_argument);
    IQHistogram malformed;
    CHECK_THROWS_AS(fit_double_gaussian(malformed), std::invalid_argument);

    // init centers that coincide on the principal axis cannot split the modes
    BlobInit init;
    init.c0 = {1.0, 1.0};
    init.c1 = {1.0, 1.0};
    CHECK_THROWS_AS(fit_double_gaussian(make_hist(0.5, 2000, 1), init),
                    std::invalid_argument);
}

TEST_CASE("dispersive shift from the blob angle") {
    // chi/kappa = 0.064 at kappa = 20.2 MHz: angle 2*atan(0.128), chi = 1.2928
    const double kappa = 20.2;
    const double angle = 2.0 * std::atan(0.128);
    const double chi = dispersive_shift_from_angle(angle, kappa);
    CHECK(chi == doctest::Approx(1.2928).epsilon(1e-12));
    CHECK(std::abs(chi - 1.29) < 0.01);
    CHECK(chi / kappa == doctest::Approx(0.064).epsilon(1e-12));

    CHECK(dispersive_shift_from_angle(0.0, kappa) == 0.0);

    // round trip over a range of shifts
    Rng rng(21);
    for (int k = 0; k < 50; ++k) {
        const double c = rng.uniform(0.0, 30.0);
        const double kap = rng.uniform(0.1, 50.0);
        const double back = dispersive_shift_from_angle(blob_angle_from_shift(c, kap), kap);
        CHECK(back == doctest::Approx(c).epsilon(1e-12));
    }

    CHECK_THROWS_AS(dispersive_shift_from_angle(M_PI, kappa), std::invalid_argument);
    CHECK_THROWS_AS(dispersive_shift_from_angle(-0.1, kappa), std::invalid_argument);
    CHECK_THROWS_AS(dispersive_shift_from_angle(0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(blob_angle_from_shift(-1.0, kappa), std::invalid_argument);
}

TEST_CASE("effective temperature from populations") {
    // p0 = 0.578 at f01 = 0.163 GHz sits near 25 mK
    const double t = temperature_from_populations(0.578, 0.163);
    CHECK(t == doctest::Approx(0.024868).epsilon(1e-3));
    CHECK(t > 0.024);
    CHECK(t < 0.026);

    // exact inverse of the two-level thermal population
    for (double p0 : {0.51, 0.578, 0.75, 0.95, 0.999}) {
        const double temp = temperature_from_populations(p0, 0.163);
        CHECK(populations_from_temperature(temp, 0.163) ==
              doctest::Approx(p0).epsilon(1e-10));
    }
    CHECK(populations_from_temperature(0.0, 0.163) == 1.0);
    // hotter means closer to an even mixture
    CHECK(populations_from_temperature(0.010, 0.163) >
          populations_from_temperature(0.100, 0.163));

    CHECK_THROWS_AS(temperature_from_populations(0.5, 0.163), std::invalid_argument);
    CHECK_THROWS_AS(temperature_from_populations(0.2, 0.163), std::invalid_argument);
    CHECK_THROWS_AS(temperature_from_populations(1.0, 0.163), std::invalid_argument);
    CHECK_THROWS_AS(temperature_from_populations(0.7, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(populations_from_temperature(-1.0, 0.163), std::invalid_argument);
}

TEST_CASE("readout decay deconvolution") {
    // measured 0.558 averaged over a 20 us window with a 204 us decay toward
    // 0.166 started from 0.5775
    const double p00 = deconvolve_readout_decay(0.558, 0.166, 204.0, 20.0);
    CHECK(p00 == doctest::Approx(0.577529).epsilon(1e-4));
    CHECK(std::abs(p00 - 0.578) < 0.001);

    // an infinitely slow decay leaves the measurement untouched
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(deconvolve_readout_decay(0.558, 0.166, inf, 20.0) == 0.558);
    CHECK(average_during_readout(0.558, 0.166, inf, 20.0) == 0.558);

    // forward and inverse maps cancel
    Rng rng(31);
    for (int k = 0; k < 100; ++k) {
        const double p0 = rng.uniform(0.0, 1.0);
        const double pinf = rng.uniform(0.0, 1.0);
        const double t1 = rng.uniform(10.0, 500.0);
        const double tro = rng.uniform(1.0, 100.0);
        const double meas = average_during_readout(p0, pinf, t1, tro);
        CHECK(deconvolve_readout_decay(meas, pinf, t1, tro) ==
              doctest::Approx(p0).epsilon(1e-10));
    }

    CHECK_THROWS_AS(deconvolve_readout_decay(0.5, 0.2, 204.0, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(deconvolve_readout_decay(0.5, 0.2, 0.0, 20.0),
                    std::invalid_argument);
}

TEST_CASE("reset populations") {
    const auto p = reset_populations(0.95);
    CHECK(p[0] == 0.95);
    CHECK(p[1] == doctest::Approx(0.05));
    CHECK(p[2] == 0.0);
    CHECK_THROWS_AS(reset_populations(1.5), std::invalid_argument);
    CHECK_THROWS_AS(reset_populations(-0.1), std::invalid_argument);
}

TEST_CASE("shot generator validation and determinism") {
    Rng a(77), b(77);
    const auto s1 = simulate_shots(100, 0.5, kC0, kC1, kSigma, a);
    const auto s2 = simulate_shots(100, 0.5, kC0, kC1, kSigma, b);
    REQUIRE(s1.size() == s2.size());
    for (size_t k = 0; k < s1.size(); ++k) {
        CHECK(s1[k].first == s2[k].first);
        CHECK(s1[k].second == s2[k].second);
    }
    Rng rng(1);
    CHECK_THROWS_AS(simulate_shots(0, 0.5, kC0, kC1, kSigma, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(simulate_shots(10, 1.5, kC0, kC1, kSigma, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(simulate_shots(10, 0.5, kC0, kC1, 0.0, rng),
                    std::invalid_argument);
}
