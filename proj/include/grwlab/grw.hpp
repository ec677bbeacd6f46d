#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "grwlab/common.hpp"
#include "grwlab/hilbert.hpp"
#include "grwlab/rng.hpp"

namespace grwlab::grw {

using hilbert::Grid;
using hilbert::Operator;
using hilbert::SpaceSpec;
using hilbert::StateVector;

/// Collapse-process parameters. `lambda` is the per-particle jump rate,
/// `alpha` the inverse squared localization width. Individual particles
/// (grid factors, indexed by their order among grid factors) may override the
/// rate, e.g. an amplified pointer rate.
struct GrwParams {
    double lambda = 0.0;
    double alpha = 1.0;
    std::map<int, double> per_particle_rates;

    double rate_for(int particle) const {
        auto it = per_particle_rates.find(particle);
        return it == per_particle_rates.end() ? lambda : it->second;
    }

    void validate() const;
};

struct CollapseEvent {
    double time;
    int particle;
    double center;
};

struct Trajectory {
    std::uint64_t seed = 0;
    std::vector<CollapseEvent> events;
    StateVector final_state;
    std::vector<std::pair<double, StateVector>> samples;
    double max_norm_drift = 0.0;
};

class DensityMatrix {
public:
    DensityMatrix(SpaceSpec space, CMat matrix, bool validated = true);

    static DensityMatrix from_state(const StateVector& psi);
    /// Equal-weight ensemble average of pure states.
    static DensityMatrix average(const SpaceSpec& space, const std::vector<StateVector>& states);

    const SpaceSpec& space() const { return space_; }
    const CMat& matrix() const { return matrix_; }

    void validate(double herm_tol = 1e-10, double trace_tol = 1e-10,
                  double eig_tol = 1e-8) const;

private:
    SpaceSpec space_;
    CMat matrix_;
};

/// 0.5 * trace-norm of (a - b).
double trace_distance(const CMat& a, const CMat& b);

struct MassDensityField {
    Grid grid;
    std::vector<double> masses;
    RVec values;
    double time = 0.0;

    double total() const { return values.sum() * grid.spacing; }
};

/// Kinetic-plus-diagonal-potential Hamiltonian on the grid factors of a
/// space, applied by spectral split stepping. `masses` is indexed by grid
/// factor ordinal; `potential` is a position-basis diagonal over the full
/// space (empty means zero). Exact for zero potential.
struct SplitStepSpec {
    SpaceSpec space;
    std::vector<double> masses;
    RVec potential;
    double max_step = 1e-2;
};

/// monostate = zero Hamiltonian.
using Hamiltonian = std::variant<std::monostate, Operator, SplitStepSpec>;

class Propagator {
public:
    virtual ~Propagator() = default;
    virtual void advance(CVec& amplitudes, double dt) const = 0;
};

std::unique_ptr<Propagator> make_propagator(const Hamiltonian& h, const SpaceSpec& space);

/// Merged Poisson jump schedule for n_particles independent streams, sorted
/// by time; entries are (time, particle ordinal).
std::vector<std::pair<double, int>> sample_collapse_schedule(Rng& rng, const GrwParams& params,
                                                             int n_particles, double horizon);

struct CenterDistribution {
    RVec probabilities;  // normalized over grid points
    double raw_total;    // pre-normalization sum; ~1 for interior states
};

/// Discretized collapse-center density p(x) = ||L(x) psi||^2 on the grid of
/// one particle.
CenterDistribution collapse_center_distribution(const StateVector& state, int factor,
                                                const GrwParams& params);

/// Inverse-CDF draw; ties at CDF plateaus resolve toward the lower index.
int sample_index_from_distribution(Rng& rng, const RVec& probabilities);

double sample_collapse_center(Rng& rng, const StateVector& state, int factor,
                              const GrwParams& params);

/// L(center) psi / ||L(center) psi||.
StateVector apply_collapse(const StateVector& state, int factor, double center,
                           const GrwParams& params);

/// Piecewise-deterministic jump trajectory: Schroedinger segments between
/// Poisson-scheduled collapses. Deterministic given the Rng state.
Trajectory evolve_trajectory(Rng& rng, const StateVector& initial, const Hamiltonian& h,
                             const GrwParams& params, double horizon,
                             const std::vector<double>& sample_times = {});

Trajectory evolve_trajectory(std::uint64_t seed, const StateVector& initial,
                             const Hamiltonian& h, const GrwParams& params, double horizon,
                             const std::vector<double>& sample_times = {});

/// Averaged evolution: drho/dt = -i[H,rho] + sum_n lambda_n (K_n o rho - rho),
/// integrated with fixed-step RK4. H must be dense or zero.
DensityMatrix master_equation_evolve(const DensityMatrix& rho0, const Hamiltonian& h,
                                     const GrwParams& params, double horizon, double dt);

enum class PVariant { born, uniform };

/// Affinity defect of one averaged jump under the chosen collapse-center
/// distribution: || Phi(c1 rho1 + c2 rho2) - c1 Phi(rho1) - c2 Phi(rho2) ||_F
/// with c2 = 1 - c1. Born weights make the map linear; uniform weights do not.
double linearity_probe(const GrwParams& params, PVariant variant, const StateVector& psi1,
                       const StateVector& psi2, double c1);

/// m(x) = sum_n m_n * (marginal probability of particle n at x) / spacing.
/// All grid factors must share one grid.
MassDensityField mass_density(const StateVector& state, const std::vector<double>& masses,
                              double time = 0.0);

}  // namespace grwlab::grw
