#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "grwlab/hilbert.hpp"
#include "grwlab/rng.hpp"
#include "oracles.hpp"

using namespace grwlab;
using namespace grwlab::hilbert;

namespace {

StateVector gaussian_packet(const SpaceSpec& space, double center, double width,
                            double momentum = 0.0) {
    const Grid& g = space.grid_at(0);
    CVec a(g.n_points);
    for (int k = 0; k < g.n_points; ++k) {
        const double x = g.point(k);
        const double u = x - center;
        a(k) = std::exp(cx(-u * u / (4.0 * width * width), momentum * x));
    }
    StateVector psi(space, std::move(a));
    psi.normalize();
    return psi;
}

StateVector random_state(const SpaceSpec& space, Rng& rng) {
    CVec a(space.dim());
    for (int i = 0; i < space.dim(); ++i)
        a(i) = cx(rng.uniform01() - 0.5, rng.uniform01() - 0.5);
    StateVector psi(space, std::move(a));
    psi.normalize();
    return psi;
}

}  // namespace

TEST_CASE("tensor of basis vectors is a basis vector") {
    auto s2 = SpaceSpec::spin(2);
    auto e0 = StateVector::basis(s2, 0);
    auto e1 = StateVector::basis(s2, 1);

    auto t00 = tensor(e0, e0);
    CHECK(t00.space.dim() == 4);
    CHECK(t00.amplitudes(0) == cx(1, 0));
    for (int i = 1; i < 4; ++i) CHECK(t00.amplitudes(i) == cx(0, 0));

    auto a = tensor(e0, e1);
    auto b = tensor(e1, e0);
    CHECK(std::abs(a.amplitudes.dot(b.amplitudes)) == 0.0);
}

TEST_CASE("tensor of identities is the identity") {
    auto s2 = SpaceSpec::spin(2);
    auto i4 = tensor(Operator::identity(s2), Operator::identity(s2));
    CHECK((i4.matrix - CMat::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tensor is associative on basis inputs") {
    auto s2 = SpaceSpec::spin(2);
    auto s3 = SpaceSpec::spin(3);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 2; ++k) {
                auto left = tensor(tensor(StateVector::basis(s2, i), StateVector::basis(s3, j)),
                                   StateVector::basis(s2, k));
                auto right = tensor(StateVector::basis(s2, i),
                                    tensor(StateVector::basis(s3, j), StateVector::basis(s2, k)));
                CHECK((left.amplitudes - right.amplitudes).norm() == 0.0);
            }
}

TEST_CASE("tensor rejects empty argument lists") {
    CHECK_THROWS_AS(tensor(std::span<const StateVector>{}), std::invalid_argument);
    CHECK_THROWS_AS(tensor(std::span<const Operator>{}), std::invalid_argument);
}

TEST_CASE("localization operator satisfies the completeness sum") {
    const double alpha = 1.0;
    auto space = SpaceSpec::grid1d(Grid::centered(256, 0.125));
    Rng rng(42);
    // Interior-supported states: sum_x dx <psi| L(x)^2 |psi> = 1.
    for (const auto& psi :
         {gaussian_packet(space, 0.7, 0.8), gaussian_packet(space, -3.0, 1.5)}) {
        double total = 0.0;
        const Grid& g = space.grid_at(0);
        for (int k = 0; k < g.n_points; ++k) {
            auto L = localization_operator(space, 0, g.point(k), alpha);
            const auto Lpsi = L.apply(psi);
            total += g.spacing * Lpsi.amplitudes.squaredNorm();
        }
        CHECK(std::abs(total - 1.0) <= 1e-6);
    }
    (void)rng;
}

TEST_CASE("localization of an already narrow packet preserves fidelity") {
    const double alpha = 1.0;
    const double sigma0 = 0.01 / std::sqrt(alpha);
    auto space = SpaceSpec::grid1d(Grid::centered(512, 0.01));
    auto psi = gaussian_packet(space, 0.0, sigma0);
    auto L = localization_operator(space, 0, 0.0, alpha);
    auto lp = L.apply(psi);
    lp.normalize();
    const double fidelity = std::norm(lp.amplitudes.dot(psi.amplitudes));
    CHECK(fidelity >= 0.999);
    // Closed-form oracle: post-collapse width from adding Gaussian precisions.
    const double sig2 = sigma0 * sigma0 / (1.0 + 2.0 * alpha * sigma0 * sigma0);
    CHECK(fidelity == doctest::Approx(oracles::gaussian_fidelity(sigma0, std::sqrt(sig2)))
                          .epsilon(1e-6));
}

TEST_CASE("localization kills the distant branch of a wide superposition") {
    const double alpha = 1.0;
    const double a = 10.0;  // a * sqrt(alpha) = 10
    auto space = SpaceSpec::grid1d(Grid::centered(256, 0.125));
    auto plus = gaussian_packet(space, a, 0.25);
    auto minus = gaussian_packet(space, -a, 0.25);
    StateVector psi(space, (plus.amplitudes + minus.amplitudes) / std::sqrt(2.0));
    psi.normalize();
    auto L = localization_operator(space, 0, a, alpha);
    auto collapsed = L.apply(psi);
    collapsed.normalize();
    double neg_mass = 0.0;
    const Grid& g = space.grid_at(0);
    for (int k = 0; k < g.n_points; ++k)
        if (g.point(k) < 0) neg_mass += std::norm(collapsed.amplitudes(k));
    CHECK(neg_mass <= 1e-8);
}

TEST_CASE("localization operator is Hermitian positive with norm (alpha/pi)^(1/4)") {
    const double alpha = 2.5;
    auto space = SpaceSpec::grid1d(Grid::centered(64, 0.25));
    // Centers produced by collapse sampling are grid points; the operator norm
    // is attained exactly there.
    auto L = localization_operator(space, 0, space.grid_at(0).point(34), alpha);
    CHECK(L.hermitian);
    Eigen::SelfAdjointEigenSolver<CMat> es(L.matrix, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= 0.0);
    CHECK(es.eigenvalues().maxCoeff() ==
          doctest::Approx(std::pow(alpha / kPi, 0.25)).epsilon(1e-12));
}

TEST_CASE("localization operator rejects spin factors and short grids") {
    auto spin = SpaceSpec::spin(2);
    CHECK_THROWS_AS(localization_operator(spin, 0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(localization_operator(spin, 3, 0.0, 1.0), std::invalid_argument);
    // grid length 0.2 < 1/sqrt(alpha) = 1
    auto shortg = SpaceSpec::grid1d(Grid(4, 0.05, 0.0));
    CHECK_THROWS_AS(localization_operator(shortg, 0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("interval projector basics") {
    auto space = SpaceSpec::grid1d(Grid::centered(64, 0.25));
    const Grid& g = space.grid_at(0);

    auto full = interval_projector(space, 0, {{g.origin - 1, g.point(g.n_points - 1) + 1}});
    CHECK((full.matrix - CMat::Identity(64, 64)).cwiseAbs().maxCoeff() == 0.0);

    auto p = interval_projector(space, 0, {{-2.06, 1.07}, {3.0, 4.0}});
    CHECK((p.matrix * p.matrix - p.matrix).cwiseAbs().maxCoeff() == 0.0);

    // Complement split at half-spacing offsets: indicator sums to identity.
    auto inside = interval_projector(space, 0, {{-5.06, 2.06}});
    auto outside = interval_projector(space, 0, {{g.origin - 1, -5.07}, {2.07, g.point(63) + 1}});
    CHECK((inside.matrix + outside.matrix - CMat::Identity(64, 64)).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(interval_projector(space, 0, {{0.0, 2.0}, {1.0, 3.0}}),
                    std::invalid_argument);
}

TEST_CASE("interval projector expectation stays in [0,1] (property)") {
    auto space = SpaceSpec::grid1d(Grid::centered(32, 0.5));
    Rng rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        auto psi = random_state(space, rng);
        const double lo = -8.0 + 16.0 * rng.uniform01();
        const double hi = lo + 8.0 * rng.uniform01();
        auto p = interval_projector(space, 0, {{lo, hi}});
        const double val = expectation(psi, p).real();
        CHECK(val >= -1e-12);
        CHECK(val <= 1.0 + 1e-12);
    }
}

TEST_CASE("position moments of a Gaussian match the analytic values") {
    auto space = SpaceSpec::grid1d(Grid::centered(256, 0.125));
    const double x0 = 1.3, w = 0.9;
    auto psi = gaussian_packet(space, x0, w);
    auto m = position_moments(psi, 0);
    CHECK(std::abs(m.mean - x0) <= 0.0125);  // dx/10
    CHECK(m.spread == doctest::Approx(w).epsilon(0.01));
}

TEST_CASE("position moments: symmetry and delta cases") {
    auto space = SpaceSpec::grid1d(Grid::centered(128, 0.25));
    auto plus = gaussian_packet(space, 3.0, 0.5);
    auto minus = gaussian_packet(space, -3.0, 0.5);
    StateVector sym(space, (plus.amplitudes + minus.amplitudes) / std::sqrt(2.0));
    sym.normalize();
    CHECK(std::abs(position_moments(sym, 0).mean) <= 1e-10);

    auto delta = StateVector::basis(space, 17);
    auto dm = position_moments(delta, 0);
    CHECK(dm.spread == 0.0);
    CHECK(dm.mean == space.grid_at(0).point(17));

    StateVector unnormalized(space, delta.amplitudes * 2.0);
    CHECK_THROWS_AS(position_moments(unnormalized, 0), NumericError);
}

TEST_CASE("expectation values") {
    auto s2 = SpaceSpec::spin(2);
    Rng rng(3);
    auto psi = random_state(s2, rng);
    CHECK(expectation(psi, Operator::identity(s2)).real() == doctest::Approx(1.0).epsilon(1e-12));

    CMat d(2, 2);
    d << 0, 0, 0, 1;
    Operator diag(s2, d, true);
    auto e1 = StateVector::basis(s2, 1);
    CHECK(expectation(e1, diag).real() == doctest::Approx(1.0));

    CVec half(2);
    half << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    StateVector mix(s2, half);
    CHECK(expectation(mix, diag).real() == doctest::Approx(0.5).epsilon(1e-12));

    auto s3 = SpaceSpec::spin(3);
    CHECK_THROWS_AS(expectation(psi, Operator::identity(s3)), std::invalid_argument);
}

TEST_CASE("expectation of Hermitian operators is real (property)") {
    auto space = SpaceSpec::spin(4);
    Rng rng(11);
    for (int rep = 0; rep < 25; ++rep) {
        CMat m(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) m(i, j) = cx(rng.uniform01() - 0.5, rng.uniform01() - 0.5);
        CMat h = 0.5 * (m + m.adjoint().eval());
        Operator op(space, h, true);
        auto psi = random_state(space, rng);
        CHECK(std::abs(expectation(psi, op).imag()) < 1e-12);
    }
}

TEST_CASE("operator hermitian flag is validated") {
    auto s2 = SpaceSpec::spin(2);
    CMat m(2, 2);
    m << 0, 1, 0, 0;
    CHECK_THROWS_AS(Operator(s2, m, true), std::invalid_argument);
    CHECK_NOTHROW(Operator(s2, m, false));
}

TEST_CASE("reduced density and purity defect") {
    auto s2 = SpaceSpec::spin(2);
    auto product = tensor(StateVector::basis(s2, 0), StateVector::basis(s2, 1));
    CHECK(purity_defect(reduced_density(product, 1)) <= 1e-12);

    CVec bell(4);
    bell << 1.0 / std::sqrt(2.0), 0, 0, 1.0 / std::sqrt(2.0);
    StateVector ent(s2.tensored(s2), bell);
    CHECK(purity_defect(reduced_density(ent, 1)) == doctest::Approx(0.5).epsilon(1e-12));
}
