#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "grwlab/measurement.hpp"
#include "oracles.hpp"

using namespace grwlab;
using namespace grwlab::hilbert;
using namespace grwlab::measurement;

namespace {

// Spin-1/2 pointer experiment: S_z coupled to the pointer momentum, pointer
// displaced to +-6, amplified pointer collapse rate.
ExperimentModel spin_half_model() {
    ExperimentModel m{
        SpaceSpec::spin(2),
        Grid::centered(256, 0.125),
        GaussianPacket{0.0, 0.5, 0.0},
        CouplingSpec{(CMat(2, 2) << 1, 0, 0, -1).finished(), 12.0, 0.5},
        grw::GrwParams{0.0, 1.0, {{0, 25.0}}},
        Calibration{{+1.0, -1.0}, {+6.0, -6.0}, 3.0, 8.0},
        1.5};
    return m;
}

StateVector spin_state(cx up, cx down) {
    CVec a(2);
    a << up, down;
    StateVector psi(SpaceSpec::spin(2), std::move(a));
    psi.normalize();
    return psi;
}

}  // namespace

TEST_CASE("calibration maps pointer positions to outcomes") {
    Calibration cal{{+1.0, 0.0, -1.0}, {6.0, 0.0, -6.0}, 2.0, 4.0};
    cal.validate();
    CHECK(cal.calibrate(6.0) == 0);
    CHECK(cal.calibrate(0.3) == 1);
    CHECK(cal.calibrate(-5.2) == 2);
    CHECK(cal.calibrate(3.0) == -1);  // midway between intervals

    // boundary closed on the inside
    const double edge = 0.0 + cal.outer_width / 2;
    CHECK(cal.calibrate(edge - 1e-12) == 1);
    CHECK(cal.calibrate(edge) == 1);
    CHECK(cal.calibrate(edge + 1e-9) == -1);

    CHECK(cal.in_inner(0.9));
    CHECK(!cal.in_inner(1.1));
}

TEST_CASE("calibration validation rejects overlapping intervals") {
    Calibration overlap{{+1.0, -1.0}, {1.0, -1.0}, 0.5, 2.5};
    CHECK_THROWS_AS(overlap.validate(), std::invalid_argument);
    Calibration badwidth{{+1.0}, {0.0}, 2.0, 1.0};
    CHECK_THROWS_AS(badwidth.validate(), std::invalid_argument);
}

TEST_CASE("eigenstate input gives a deterministic outcome") {
    auto model = spin_half_model();
    auto up = spin_state(1, 0);
    int plus = 0;
    const int runs = 1000;
    auto summaries = run_ensemble(101, model, up, runs, 2);
    for (const auto& s : summaries)
        if (s.label == 0) ++plus;
    CHECK(static_cast<double>(plus) / runs >= 0.999);
}

TEST_CASE("equal superposition splits 50/50") {
    auto model = spin_half_model();
    auto psi = spin_state(1, 1);
    const int runs = 10000;
    auto dist = empirical_distribution(202, model, psi, runs, 2);
    CHECK(dist.total == runs);
    CHECK(std::abs(dist.frequency(0) - 0.5) <= 3 * oracles::binom_se(0.5, runs));
    CHECK(dist.counts[0] + dist.counts[1] + dist.null_count == runs);
}

TEST_CASE("zero coupling leaves the pointer unmoved (all null)") {
    auto model = spin_half_model();
    model.coupling.strength = 0.0;
    auto psi = spin_state(1, 1);
    auto dist = empirical_distribution(303, model, psi, 1000, 2);
    CHECK(dist.null_frequency() >= 0.999);
}

TEST_CASE("single run and n_runs=1 bookkeeping") {
    auto model = spin_half_model();
    auto dist = empirical_distribution(9, model, spin_state(0, 1), 1, 1);
    CHECK(dist.total == 1);
    CHECK(dist.counts[1] + dist.counts[0] + dist.null_count == 1);

    Rng rng(5);
    auto r = run_experiment(rng, model, spin_state(0, 1));
    CHECK(r.label == 1);
    CHECK(r.pointer_mean < -2.0);
    CHECK(!r.events.empty());
    CHECK(std::abs(r.final_state.norm() - 1.0) <= 1e-10);
}

TEST_CASE("branch and dense paths agree trajectory by trajectory") {
    ExperimentModel model{
        SpaceSpec::spin(2),
        Grid::centered(64, 0.5),
        GaussianPacket{0.0, 0.7, 0.0},
        CouplingSpec{(CMat(2, 2) << 1, 0, 0, -1).finished(), 8.0, 0.5},
        grw::GrwParams{0.0, 1.0, {{0, 12.0}}},
        Calibration{{+1.0, -1.0}, {+4.0, -4.0}, 2.0, 5.0},
        1.0};
    model.validate();
    auto psi = spin_state(0.6, cx(0.0, 0.8));

    // branch path
    Rng rng_a(42);
    auto fast = run_experiment(rng_a, model, psi);

    // dense path on an equivalent model with a grid factor bolted onto the
    // system side to force the generic route; instead evolve directly.
    Rng rng_b(42);
    const StateVector psi0 = hilbert::tensor(psi, model.apparatus_initial());
    auto hc = coupling_hamiltonian(model);
    auto t1 = grw::evolve_trajectory(rng_b, psi0, grw::Hamiltonian(hc), model.grw_params,
                                     model.coupling.duration);
    auto t2 = grw::evolve_trajectory(rng_b, t1.final_state, grw::Hamiltonian{}, model.grw_params,
                                     model.t_final - model.coupling.duration);

    std::vector<grw::CollapseEvent> dense_events = t1.events;
    for (auto ev : t2.events) {
        ev.time += model.coupling.duration;
        dense_events.push_back(ev);
    }
    REQUIRE(fast.events.size() == dense_events.size());
    for (std::size_t i = 0; i < dense_events.size(); ++i) {
        CHECK(fast.events[i].center == dense_events[i].center);
        CHECK(fast.events[i].time == doctest::Approx(dense_events[i].time).epsilon(1e-12));
    }
    CHECK((fast.final_state.amplitudes - t2.final_state.amplitudes).cwiseAbs().maxCoeff() <=
          1e-8);
}

TEST_CASE("outcome statistics are invariant under a global phase") {
    auto model = spin_half_model();
    auto psi = spin_state(std::sqrt(0.3), std::sqrt(0.7));
    auto rotated = spin_state(std::sqrt(0.3) * std::exp(cx(0, 1.1)),
                              std::sqrt(0.7) * std::exp(cx(0, 1.1)));
    // master mode: exact invariance
    const double qa = q_measure(model, psi, {0}, QMasterEquation{});
    const double qb = q_measure(model, rotated, {0}, QMasterEquation{});
    CHECK(std::abs(qa - qb) <= 1e-10);
    // trajectories: same seeds give identical labels
    auto da = empirical_distribution(77, model, psi, 500, 2);
    auto db = empirical_distribution(77, model, rotated, 500, 2);
    CHECK(da.counts == db.counts);
    CHECK(da.null_count == db.null_count);
}

TEST_CASE("q_measure: measure axioms and mode agreement") {
    auto model = spin_half_model();
    auto psi = spin_state(std::sqrt(0.3), std::sqrt(0.7));

    CHECK(q_measure(model, psi, {}, QMasterEquation{}) == 0.0);

    const double q0 = q_measure(model, psi, {0}, QMasterEquation{});
    const double q1 = q_measure(model, psi, {1}, QMasterEquation{});
    const double q01 = q_measure(model, psi, {0, 1}, QMasterEquation{});
    CHECK(q0 + q1 == doctest::Approx(q01).epsilon(1e-12));
    CHECK(q01 <= 1.0 + 1e-12);
    // the calibration covers the displaced packets: completeness within 1e-9
    CHECK(q01 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(q0 == doctest::Approx(0.3).epsilon(2e-3));

    const long long m = 10000;
    const double q0_traj = q_measure(model, psi, {0}, QTrajectories{m, 404, 2});
    CHECK(std::abs(q0_traj - q0) <= 5.0 / std::sqrt(static_cast<double>(m)));
}

TEST_CASE("theorem1 bound calculator reproduces the textbook-scale number") {
    // sigma_q / ell = 1e-8 and eta = 1e-17 give 2e-16 up to a small factor.
    const double bound = theorem1_bound(1e-8, 1.0, 1e-17);
    CHECK(bound >= 2e-16 / 1.2);
    CHECK(bound <= 2e-16 * 1.2);
    CHECK_THROWS_AS(theorem1_bound(1.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("theorem1 gap stays below the bound at desk scale") {
    auto model = spin_half_model();
    auto psi = spin_state(std::sqrt(0.4), std::sqrt(0.6));
    for (const std::vector<int>& v :
         {std::vector<int>{0}, std::vector<int>{1}, std::vector<int>{0, 1}}) {
        auto res = theorem1_gap(model, psi, v, 2000, 2000, 505, 2);
        CAPTURE(res.gap);
        CAPTURE(res.bound);
        CHECK(res.pass);
        CHECK(res.sigma_q < model.calibration.ell());
    }
}

TEST_CASE("theorem1 pass across a rate/width sweep (property)") {
    auto psi = spin_state(1, 1);
    int config = 0;
    for (double rate : {15.0, 40.0}) {
        for (double outer : {6.0, 8.0}) {
            auto model = spin_half_model();
            model.grw_params.per_particle_rates[0] = rate;
            model.calibration.outer_width = outer;
            auto res = theorem1_gap(model, psi, {0}, 1500, 1500, 606 + config++, 2);
            CAPTURE(rate);
            CAPTURE(outer);
            CHECK(res.pass);
        }
    }
}

TEST_CASE("post-measurement states factorize") {
    auto model = spin_half_model();
    auto psi = spin_state(1, 1);
    Rng rng(31);
    int checked = 0;
    for (int i = 0; i < 20; ++i) {
        auto r = run_experiment(rng, model, psi);
        if (r.label < 0) continue;
        CHECK(factorization_defect(r.final_state, 1) <= 1e-3);
        ++checked;
    }
    CHECK(checked >= 18);

    // exact product state
    auto prod = hilbert::tensor(spin_state(1, 0), model.apparatus_initial());
    CHECK(factorization_defect(prod, 1) <= 1e-12);
}

TEST_CASE("repeated runs reproduce the first outcome") {
    auto model = spin_half_model();
    auto psi = spin_state(std::sqrt(0.5), std::sqrt(0.5));
    Rng rng(61);
    int pairs = 0, agree = 0;
    for (int i = 0; i < 200; ++i) {
        auto first = run_experiment(rng, model, psi);
        if (first.label < 0) continue;
        // project out the post-measurement system state
        CMat rho = hilbert::reduced_density(first.final_state, 1);
        Eigen::SelfAdjointEigenSolver<CMat> es(rho);
        CVec dominant = es.eigenvectors().col(es.eigenvalues().size() - 1);
        StateVector post(model.system_space, dominant);
        post.normalize();
        auto second = run_experiment(rng, model, post);
        if (second.label < 0) continue;
        ++pairs;
        agree += (second.label == first.label);
    }
    REQUIRE(pairs >= 150);
    CHECK(static_cast<double>(agree) / pairs >= 0.99);
}
