#include "grwlab/grw.hpp"

#include <algorithm>
#include <cmath>

#include "collapse_kernel.hpp"
#include "fft.hpp"

namespace grwlab::grw {

using hilbert::marginal_probability;

void GrwParams::validate() const {
    if (lambda < 0) throw std::invalid_argument("GrwParams: lambda must be >= 0");
    if (!(alpha > 0)) throw std::invalid_argument("GrwParams: alpha must be positive");
    for (const auto& [p, r] : per_particle_rates)
        if (r < 0) throw std::invalid_argument("GrwParams: per-particle rates must be >= 0");
}

DensityMatrix::DensityMatrix(SpaceSpec space, CMat matrix, bool validate_now)
    : space_(std::move(space)), matrix_(std::move(matrix)) {
    if (matrix_.rows() != space_.dim() || matrix_.cols() != space_.dim())
        throw std::invalid_argument("DensityMatrix: matrix shape != space dimension");
    if (validate_now) validate();
}

DensityMatrix DensityMatrix::from_state(const StateVector& psi) {
    return DensityMatrix(psi.space, psi.amplitudes * psi.amplitudes.adjoint());
}

DensityMatrix DensityMatrix::average(const SpaceSpec& space,
                                     const std::vector<StateVector>& states) {
    if (states.empty()) throw std::invalid_argument("DensityMatrix::average: no states");
    CMat acc = CMat::Zero(space.dim(), space.dim());
    for (const auto& s : states) {
        if (!(s.space == space))
            throw std::invalid_argument("DensityMatrix::average: space mismatch");
        acc.noalias() += s.amplitudes * s.amplitudes.adjoint();
    }
    acc /= static_cast<double>(states.size());
    return DensityMatrix(space, std::move(acc));
}

void DensityMatrix::validate(double herm_tol, double trace_tol, double eig_tol) const {
    const double herm = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
    if (herm > herm_tol)
        throw NumericError("DensityMatrix: hermiticity defect " + std::to_string(herm));
    const double tr = matrix_.trace().real();
    if (std::abs(tr - 1.0) > trace_tol)
        throw NumericError("DensityMatrix: trace deviates from 1 by " +
                           std::to_string(tr - 1.0));
    Eigen::SelfAdjointEigenSolver<CMat> es(matrix_, Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < -eig_tol)
        throw NumericError("DensityMatrix: negative eigenvalue " + std::to_string(min_eig));
}

double trace_distance(const CMat& a, const CMat& b) {
    Eigen::SelfAdjointEigenSolver<CMat> es(a - b, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

// ---------------------------------------------------------------------------
// Propagators

namespace {

class IdentityPropagator final : public Propagator {
public:
    void advance(CVec&, double) const override {}
};

class EigenPropagator final : public Propagator {
public:
    explicit EigenPropagator(const Operator& h) {
        if (!h.hermitian)
            throw std::invalid_argument("Propagator: Hamiltonian must be Hermitian");
        Eigen::SelfAdjointEigenSolver<CMat> es(h.matrix);
        basis_ = es.eigenvectors();
        energies_ = es.eigenvalues();
    }

    void advance(CVec& a, double dt) const override {
        CVec tmp = basis_.adjoint() * a;
        for (int i = 0; i < tmp.size(); ++i)
            tmp(i) *= std::exp(cx(0.0, -energies_(i) * dt));
        a.noalias() = basis_ * tmp;
    }

private:
    CMat basis_;
    RVec energies_;
};

class SplitStepPropagator final : public Propagator {
public:
    explicit SplitStepPropagator(const SplitStepSpec& spec) : spec_(spec) {
        const auto grids = spec.space.grid_factor_indices();
        if (grids.empty())
            throw std::invalid_argument("SplitStepSpec: space has no grid factors");
        if (spec.masses.size() != grids.size())
            throw std::invalid_argument("SplitStepSpec: one mass per grid factor required");
        if (spec.potential.size() != 0 && spec.potential.size() != spec.space.dim())
            throw std::invalid_argument("SplitStepSpec: potential length != space dimension");
        for (std::size_t i = 0; i < grids.size(); ++i) {
            const Grid& g = spec.space.grid_at(grids[i]);
            Axis ax;
            ax.n = g.n_points;
            ax.stride = spec.space.stride(grids[i]);
            ax.fft = std::make_unique<Fft>(g.n_points);
            ax.k2_over_2m.resize(g.n_points);
            const double dk = 2.0 * kPi / g.length();
            for (int j = 0; j < g.n_points; ++j) {
                const int f = (j <= g.n_points / 2) ? j : j - g.n_points;
                const double k = dk * f;
                ax.k2_over_2m[j] = k * k / (2.0 * spec.masses[i]);
            }
            axes_.push_back(std::move(ax));
        }
    }

    void advance(CVec& a, double dt) const override {
        const bool has_v = spec_.potential.size() != 0;
        const int nsub = has_v ? std::max(1, static_cast<int>(std::ceil(std::abs(dt) / spec_.max_step)))
                               : 1;
        const double h = dt / nsub;
        for (int s = 0; s < nsub; ++s) {
            if (has_v) apply_potential(a, 0.5 * h);
            for (const auto& ax : axes_) apply_kinetic(ax, a, h);
            if (has_v) apply_potential(a, 0.5 * h);
        }
    }

private:
    struct Axis {
        int n;
        int stride;
        std::unique_ptr<Fft> fft;
        std::vector<double> k2_over_2m;
    };

    void apply_potential(CVec& a, double tau) const {
        for (int g = 0; g < a.size(); ++g)
            a(g) *= std::exp(cx(0.0, -spec_.potential(g) * tau));
    }

    void apply_kinetic(const Axis& ax, CVec& a, double tau) const {
        const int total = static_cast<int>(a.size());
        const int block = ax.n * ax.stride;
        std::vector<cx> line(ax.n);
        std::vector<cx> phase(ax.n);
        for (int j = 0; j < ax.n; ++j) phase[j] = std::exp(cx(0.0, -ax.k2_over_2m[j] * tau));
        for (int base = 0; base < total; base += block) {
            for (int inner = 0; inner < ax.stride; ++inner) {
                for (int j = 0; j < ax.n; ++j) line[j] = a(base + inner + j * ax.stride);
                ax.fft->forward(line.data());
                for (int j = 0; j < ax.n; ++j) line[j] *= phase[j];
                ax.fft->inverse(line.data());
                for (int j = 0; j < ax.n; ++j) a(base + inner + j * ax.stride) = line[j];
            }
        }
    }

    SplitStepSpec spec_;
    std::vector<Axis> axes_;
};

}  // namespace

std::unique_ptr<Propagator> make_propagator(const Hamiltonian& h, const SpaceSpec& space) {
    if (std::holds_alternative<std::monostate>(h)) return std::make_unique<IdentityPropagator>();
    if (std::holds_alternative<Operator>(h)) {
        const auto& op = std::get<Operator>(h);
        if (!(op.space == space))
            throw std::invalid_argument("make_propagator: Hamiltonian space mismatch");
        return std::make_unique<EigenPropagator>(op);
    }
    const auto& spec = std::get<SplitStepSpec>(h);
    if (!(spec.space == space))
        throw std::invalid_argument("make_propagator: Hamiltonian space mismatch");
    return std::make_unique<SplitStepPropagator>(spec);
}

// ---------------------------------------------------------------------------
// Jump sampling

std::vector<std::pair<double, int>> sample_collapse_schedule(Rng& rng, const GrwParams& params,
                                                             int n_particles, double horizon) {
    params.validate();
    if (!(horizon > 0)) throw std::invalid_argument("sample_collapse_schedule: horizon must be > 0");
    std::vector<std::pair<double, int>> events;
    for (int p = 0; p < n_particles; ++p) {
        const double rate = params.rate_for(p);
        if (rate <= 0) continue;
        double t = rng.exp_waiting(rate);
        while (t < horizon) {
            events.emplace_back(t, p);
            t += rng.exp_waiting(rate);
        }
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    return events;
}

namespace {

CenterDistribution center_distribution_from_marginal(const RVec& w, const CollapseKernel& kernel) {
    RVec p = kernel.convolve(w);
    const double total = p.sum();
    if (total < 1e-12)
        throw NumericError("collapse-center density is degenerate (zero norm)");
    p /= total;
    return {std::move(p), total};
}

}  // namespace

CenterDistribution collapse_center_distribution(const StateVector& state, int factor,
                                                const GrwParams& params) {
    const Grid& grid = state.space.grid_at(factor);
    CollapseKernel kernel(grid, params.alpha);
    return center_distribution_from_marginal(marginal_probability(state, factor), kernel);
}

int sample_index_from_distribution(Rng& rng, const RVec& probabilities) {
    const double u = rng.uniform01_open_left();
    double cum = 0.0;
    int last_positive = -1;
    for (int k = 0; k < probabilities.size(); ++k) {
        if (probabilities(k) > 0) last_positive = k;
        cum += probabilities(k);
        if (cum >= u) return k;
    }
    if (last_positive < 0) throw NumericError("sample_index_from_distribution: empty distribution");
    return last_positive;  // u slipped past the cumulative sum by roundoff
}

double sample_collapse_center(Rng& rng, const StateVector& state, int factor,
                              const GrwParams& params) {
    const Grid& grid = state.space.grid_at(factor);
    const auto dist = collapse_center_distribution(state, factor, params);
    return grid.point(sample_index_from_distribution(rng, dist.probabilities));
}

StateVector apply_collapse(const StateVector& state, int factor, double center,
                           const GrwParams& params) {
    const Grid& grid = state.space.grid_at(factor);
    const RVec profile = hilbert::localization_profile(grid, center, params.alpha);
    StateVector out = state;
    for (int g = 0; g < out.space.dim(); ++g)
        out.amplitudes(g) *= profile(out.space.coordinate(g, factor));
    const double nrm = out.amplitudes.norm();
    if (nrm < 1e-12)
        throw NumericError("apply_collapse: collapse center lies in a zero-support region");
    out.amplitudes /= nrm;
    return out;
}

// ---------------------------------------------------------------------------
// Trajectories

Trajectory evolve_trajectory(Rng& rng, const StateVector& initial, const Hamiltonian& h,
                             const GrwParams& params, double horizon,
                             const std::vector<double>& sample_times) {
    params.validate();
    if (!(horizon > 0)) throw std::invalid_argument("evolve_trajectory: horizon must be > 0");
    if (std::abs(initial.amplitudes.squaredNorm() - 1.0) > 1e-9)
        throw std::invalid_argument("evolve_trajectory: initial state is not normalized");

    const auto particles = initial.space.grid_factor_indices();
    const auto schedule =
        sample_collapse_schedule(rng, params, static_cast<int>(particles.size()), horizon);

    struct Pending {
        double time;
        int kind;  // 0 = jump, 1 = sample
        int particle_ordinal;
    };
    std::vector<Pending> pending;
    pending.reserve(schedule.size() + sample_times.size());
    for (const auto& [t, p] : schedule) pending.push_back({t, 0, p});
    for (double t : sample_times) {
        if (t < 0 || t > horizon)
            throw std::invalid_argument("evolve_trajectory: sample time outside [0, horizon]");
        pending.push_back({t, 1, -1});
    }
    std::stable_sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
        return a.time < b.time || (a.time == b.time && a.kind < b.kind);
    });

    auto propagator = make_propagator(h, initial.space);
    std::vector<std::unique_ptr<JumpSampler>> samplers(particles.size());
    for (std::size_t i = 0; i < particles.size(); ++i)
        if (params.rate_for(static_cast<int>(i)) > 0)
            samplers[i] = std::make_unique<JumpSampler>(initial.space.grid_at(particles[i]),
                                                        params.alpha);

    StateVector state = initial;
    std::vector<CollapseEvent> events;
    std::vector<std::pair<double, StateVector>> samples;
    double max_drift = 0.0;
    double t = 0.0;

    auto advance_to = [&](double target) {
        const double dt = target - t;
        if (dt > 0) {
            propagator->advance(state.amplitudes, dt);
            const double drift = std::abs(state.amplitudes.norm() - 1.0);
            if (drift > 1e-8)
                throw NumericError("evolve_trajectory: unitarity violated beyond 1e-8 in a segment");
            max_drift = std::max(max_drift, drift);
            state.amplitudes /= state.amplitudes.norm();
        }
        t = target;
    };

    for (const auto& ev : pending) {
        advance_to(ev.time);
        if (ev.kind == 0) {
            const int factor = particles[ev.particle_ordinal];
            const int idx = samplers[ev.particle_ordinal]->sample_center_index(
                rng, marginal_probability(state, factor));
            const double center = state.space.grid_at(factor).point(idx);
            const RVec profile =
                hilbert::localization_profile(state.space.grid_at(factor), center, params.alpha);
            for (int g = 0; g < state.space.dim(); ++g)
                state.amplitudes(g) *= profile(state.space.coordinate(g, factor));
            const double nrm = state.amplitudes.norm();
            if (nrm < 1e-12)
                throw NumericError("evolve_trajectory: collapse produced a vanishing state");
            state.amplitudes /= nrm;
            events.push_back({t, factor, center});
        } else {
            samples.emplace_back(t, state);
        }
    }
    advance_to(horizon);
    return Trajectory{0, std::move(events), std::move(state), std::move(samples), max_drift};
}

Trajectory evolve_trajectory(std::uint64_t seed, const StateVector& initial, const Hamiltonian& h,
                             const GrwParams& params, double horizon,
                             const std::vector<double>& sample_times) {
    Rng rng(seed);
    Trajectory traj = evolve_trajectory(rng, initial, h, params, horizon, sample_times);
    traj.seed = seed;
    return traj;
}

// ---------------------------------------------------------------------------
// Master equation

namespace {

// Diagonal-normalized decoherence kernel K(u, v) on one grid: the discrete
// analogue of exp(-alpha (u-v)^2 / 4) with K(u, u) = 1 exactly.
RMat decoherence_kernel(const Grid& grid, double alpha) {
    const int n = grid.n_points;
    RMat profiles(n, n);
    for (int k = 0; k < n; ++k)
        profiles.row(k) = hilbert::localization_profile(grid, grid.point(k), alpha).transpose();
    RMat kern = grid.spacing * profiles.transpose() * profiles;
    RVec d = kern.diagonal().cwiseSqrt();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) kern(i, j) /= d(i) * d(j);
    return kern;
}

}  // namespace

DensityMatrix master_equation_evolve(const DensityMatrix& rho0, const Hamiltonian& h,
                                     const GrwParams& params, double horizon, double dt) {
    params.validate();
    if (!(horizon >= 0)) throw std::invalid_argument("master_equation_evolve: bad horizon");
    if (!(dt > 0)) throw std::invalid_argument("master_equation_evolve: dt must be positive");
    if (std::holds_alternative<SplitStepSpec>(h))
        throw std::invalid_argument("master_equation_evolve: dense or zero Hamiltonian required");

    const SpaceSpec& space = rho0.space();
    const int dim = space.dim();
    const CMat* hm = nullptr;
    if (std::holds_alternative<Operator>(h)) {
        const auto& op = std::get<Operator>(h);
        if (!op.hermitian || !(op.space == space))
            throw std::invalid_argument("master_equation_evolve: invalid Hamiltonian");
        hm = &op.matrix;
    }

    // Fold all jump terms into one elementwise multiplier:
    //   M(i,j) = sum_f lambda_f (K_f(c_i, c_j) - 1).
    const auto particles = space.grid_factor_indices();
    RMat multiplier = RMat::Zero(dim, dim);
    bool any_jump = false;
    for (std::size_t f = 0; f < particles.size(); ++f) {
        const double rate = params.rate_for(static_cast<int>(f));
        if (rate <= 0) continue;
        any_jump = true;
        const RMat kern = decoherence_kernel(space.grid_at(particles[f]), params.alpha);
        std::vector<int> coord(dim);
        for (int g = 0; g < dim; ++g) coord[g] = space.coordinate(g, particles[f]);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                multiplier(i, j) += rate * (kern(coord[i], coord[j]) - 1.0);
    }

    auto rhs = [&](const CMat& rho) -> CMat {
        CMat d = CMat::Zero(dim, dim);
        if (hm) {
            d.noalias() = (*hm) * rho;
            d.noalias() -= rho * (*hm);
            d *= cx(0.0, -1.0);
        }
        if (any_jump) d += multiplier.cwiseProduct(rho.real()).cast<cx>() +
                           cx(0.0, 1.0) * multiplier.cwiseProduct(rho.imag()).cast<cx>();
        return d;
    };

    CMat rho = rho0.matrix();
    const double tr0 = rho.trace().real();
    const int steps = std::max(1, static_cast<int>(std::ceil(horizon / dt)));
    const double hstep = horizon / steps;
    for (int s = 0; s < steps; ++s) {
        const CMat k1 = rhs(rho);
        const CMat k2 = rhs(rho + 0.5 * hstep * k1);
        const CMat k3 = rhs(rho + 0.5 * hstep * k2);
        const CMat k4 = rhs(rho + hstep * k3);
        rho += (hstep / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    rho = 0.5 * (rho + rho.adjoint().eval());
    const double drift = std::abs(rho.trace().real() - tr0);
    if (drift > 1e-6)
        throw NumericError("master_equation_evolve: dt too large, trace drift " +
                           std::to_string(drift));
    return DensityMatrix(space, std::move(rho));
}

// ---------------------------------------------------------------------------
// Linearity probe

namespace {

CMat averaged_jump(const CMat& rho, const SpaceSpec& space, int factor, const GrwParams& params,
                   PVariant variant) {
    const Grid& grid = space.grid_at(factor);
    const int dim = space.dim();
    const int n = grid.n_points;
    std::vector<int> coord(dim);
    for (int g = 0; g < dim; ++g) coord[g] = space.coordinate(g, factor);

    if (variant == PVariant::born) {
        // With Born weights the normalizations cancel jump by jump:
        // Phi(rho) = sum_k dx L_k rho L_k / Z(rho).
        RMat kern(n, n);
        for (int k = 0; k < n; ++k) {
            const RVec g = hilbert::localization_profile(grid, grid.point(k), params.alpha);
            if (k == 0) kern.setZero();
            kern.noalias() += grid.spacing * g * g.transpose();
        }
        double z = 0.0;
        for (int i = 0; i < dim; ++i) z += rho(i, i).real() * kern(coord[i], coord[i]);
        CMat out(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) out(i, j) = rho(i, j) * kern(coord[i], coord[j]) / z;
        return out;
    }

    // Uniform weights over grid points; jumps landing on (numerically) empty
    // regions are dropped.
    CMat out = CMat::Zero(dim, dim);
    const double weight = 1.0 / n;
    for (int k = 0; k < n; ++k) {
        const RVec g = hilbert::localization_profile(grid, grid.point(k), params.alpha);
        double t = 0.0;
        for (int i = 0; i < dim; ++i) t += g(coord[i]) * g(coord[i]) * rho(i, i).real();
        if (t < 1e-12) continue;
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                out(i, j) += weight * g(coord[i]) * g(coord[j]) * rho(i, j) / t;
    }
    return out;
}

}  // namespace

double linearity_probe(const GrwParams& params, PVariant variant, const StateVector& psi1,
                       const StateVector& psi2, double c1) {
    params.validate();
    if (!(psi1.space == psi2.space))
        throw std::invalid_argument("linearity_probe: states live on different spaces");
    if (c1 < 0 || c1 > 1) throw std::invalid_argument("linearity_probe: c1 must be in [0,1]");
    const auto grids = psi1.space.grid_factor_indices();
    if (grids.empty()) throw std::invalid_argument("linearity_probe: no grid factor");
    const int factor = grids.front();
    const double c2 = 1.0 - c1;

    const CMat rho1 = psi1.amplitudes * psi1.amplitudes.adjoint();
    const CMat rho2 = psi2.amplitudes * psi2.amplitudes.adjoint();
    const CMat mix = c1 * rho1 + c2 * rho2;

    const CMat lhs = averaged_jump(mix, psi1.space, factor, params, variant);
    const CMat rhs = c1 * averaged_jump(rho1, psi1.space, factor, params, variant) +
                     c2 * averaged_jump(rho2, psi1.space, factor, params, variant);
    return (lhs - rhs).norm();
}

// ---------------------------------------------------------------------------
// Mass density

MassDensityField mass_density(const StateVector& state, const std::vector<double>& masses,
                              double time) {
    const auto particles = state.space.grid_factor_indices();
    if (particles.empty()) throw std::invalid_argument("mass_density: no grid factors");
    if (masses.size() != particles.size())
        throw std::invalid_argument("mass_density: one mass per grid particle required");
    const Grid& grid = state.space.grid_at(particles[0]);
    for (int f : particles)
        if (!(state.space.grid_at(f) == grid))
            throw std::invalid_argument("mass_density: mismatched grids");
    RVec values = RVec::Zero(grid.n_points);
    for (std::size_t i = 0; i < particles.size(); ++i)
        values += masses[i] * marginal_probability(state, particles[i]);
    values /= grid.spacing;
    return {grid, masses, std::move(values), time};
}

}  // namespace grwlab::grw
