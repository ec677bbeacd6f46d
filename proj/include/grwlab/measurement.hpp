#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "grwlab/grw.hpp"

namespace grwlab::measurement {

using grw::GrwParams;
using hilbert::Grid;
using hilbert::SpaceSpec;
using hilbert::StateVector;

/// Outcome labels v_n with their pointer positions x_n and the two interval
/// families: inner intervals delta_n of width `inner_width` (where the
/// pointer mean is expected to land) and outer intervals Delta_n of width
/// `outer_width` = inner + ell (which define the calibration and the
/// projectors). Outer intervals must be pairwise disjoint.
struct Calibration {
    std::vector<double> outcomes;
    std::vector<double> centers;
    double inner_width = 0.0;
    double outer_width = 0.0;
    std::string null_label = "null";

    void validate() const;
    int num_outcomes() const { return static_cast<int>(outcomes.size()); }
    double ell() const { return outer_width - inner_width; }

    /// Outcome index if q lies in some (closed) Delta_n, else -1 (null).
    int calibrate(double q) const;

    /// True if q lies in some inner interval delta_n.
    bool in_inner(double q) const;

    hilbert::Interval outer_interval(int n) const;
    std::vector<hilbert::Interval> outer_intervals(const std::vector<int>& subset) const;
};

/// Pure Gaussian pointer state; `width` is the position std of |psi|^2.
struct GaussianPacket {
    double center = 0.0;
    double width = 1.0;
    double momentum = 0.0;
};

/// Impulsive von Neumann coupling: H = strength * observable (x) pointer
/// momentum, acting for `duration` from t = 0.
struct CouplingSpec {
    CMat observable;
    double strength = 1.0;
    double duration = 1.0;
};

struct ExperimentModel {
    SpaceSpec system_space;
    Grid pointer_grid;
    GaussianPacket apparatus_packet;
    CouplingSpec coupling;
    GrwParams grw_params;  // per-particle rates indexed over combined-space grid factors
    Calibration calibration;
    double t_final = 1.0;

    void validate() const;
    SpaceSpec combined_space() const;
    int pointer_factor() const { return system_space.num_factors(); }
    StateVector apparatus_initial() const;

    /// True when the dynamics is block-diagonal over the observable
    /// eigenbasis (all-spin system; collapses act on the pointer only), which
    /// enables the per-branch representation and the closed-form averaged
    /// evolution.
    bool branch_form_applicable() const;
};

struct OutcomeDistribution {
    std::vector<double> outcomes;
    std::vector<long long> counts;
    long long null_count = 0;
    long long total = 0;

    double frequency(int i) const { return static_cast<double>(counts.at(i)) / total; }
    double se(int i) const;
    double null_frequency() const { return static_cast<double>(null_count) / total; }
    double null_se() const;
};

/// Full single-run record (dense final state, for consumers that need the
/// post-measurement state).
struct RunResult {
    int label;
    double pointer_mean;
    double pointer_spread;
    bool inner_hit;
    StateVector final_state;
    std::vector<grw::CollapseEvent> events;
};

/// Light per-run record for ensembles.
struct RunSummary {
    std::uint64_t seed;
    int label;
    bool inner_hit;
    double pointer_mean;
    double pointer_spread;
    std::vector<double> interval_mass;  // <psi_tF| P_{Delta_v} |psi_tF> per outcome
    int n_events;
};

int calibrate(double q, const Calibration& cal);

RunResult run_experiment(Rng& rng, const ExperimentModel& model, const StateVector& system_state);

std::vector<RunSummary> run_ensemble(std::uint64_t master_seed, const ExperimentModel& model,
                                     const StateVector& system_state, long long n_runs,
                                     int threads = 0);

OutcomeDistribution empirical_distribution(std::uint64_t master_seed, const ExperimentModel& model,
                                           const StateVector& system_state, long long n_runs,
                                           int threads = 0);

struct QTrajectories {
    long long m;
    std::uint64_t seed;
    int threads = 0;
};
struct QMasterEquation {
    double dt = 2e-3;  // used only when the closed form does not apply
};
using QMode = std::variant<QTrajectories, QMasterEquation>;

/// Q_t[V] at t = t_final: Monte Carlo mean of <psi|P_{Delta_V}|psi> over
/// trajectories, or Tr[rho_tF (I (x) P_{Delta_V})] from the averaged
/// evolution.
double q_measure(const ExperimentModel& model, const StateVector& system_state,
                 const std::vector<int>& outcome_subset, const QMode& mode);

double theorem1_bound(double sigma_q, double ell, double eta);

struct Theorem1Result {
    double p_hat = 0.0;
    double q_hat = 0.0;
    double gap = 0.0;
    double sigma_q = 0.0;
    double eta_hat = 0.0;    // inner-interval miss rate + 3 SE (bound input)
    double eta_null = 0.0;   // plain null-outcome rate (reported)
    double bound = 0.0;
    double se_p = 0.0;
    double se_q = 0.0;
    double allowance = 0.0;  // 3 (SE_P + SE_Q)
    bool pass = false;
};

Theorem1Result theorem1_gap(const ExperimentModel& model, const StateVector& system_state,
                            const std::vector<int>& outcome_subset, long long n_runs, long long m,
                            std::uint64_t master_seed, int threads = 0);

/// Purity defect 1 - Tr[(Tr_A |psi><psi|)^2] of the system-side reduced state.
double factorization_defect(const StateVector& state, int n_system_factors);

/// FFT wavenumber convention shared by the momentum operator and the
/// translation phases.
std::vector<double> fft_wavenumbers(const Grid& grid);

/// Dense pointer momentum operator (spectral construction).
hilbert::Operator momentum_operator(const SpaceSpec& space, int factor);

/// Dense coupling Hamiltonian g * observable (x) momentum on the combined
/// space.
hilbert::Operator coupling_hamiltonian(const ExperimentModel& model);

}  // namespace grwlab::measurement
