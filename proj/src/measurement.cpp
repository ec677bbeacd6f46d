#include "grwlab/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "collapse_kernel.hpp"
#include "fft.hpp"

namespace grwlab::measurement {

using grw::sample_collapse_schedule;
using hilbert::interval_indicator;
using hilbert::localization_profile;
using hilbert::Operator;

// ---------------------------------------------------------------------------
// Calibration

void Calibration::validate() const {
    if (outcomes.empty()) throw std::invalid_argument("Calibration: no outcomes");
    if (outcomes.size() != centers.size())
        throw std::invalid_argument("Calibration: outcomes/centers size mismatch");
    if (!(inner_width > 0) || !(outer_width > inner_width))
        throw std::invalid_argument("Calibration: need 0 < inner_width < outer_width");
    // outer intervals must be pairwise disjoint
    std::vector<double> sorted = centers;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
        if (sorted[i] + outer_width / 2 >= sorted[i + 1] - outer_width / 2)
            throw std::invalid_argument("Calibration: outer intervals overlap");
}

int Calibration::calibrate(double q) const {
    for (int n = 0; n < num_outcomes(); ++n)
        if (std::abs(q - centers[n]) <= outer_width / 2) return n;
    return -1;
}

bool Calibration::in_inner(double q) const {
    for (int n = 0; n < num_outcomes(); ++n)
        if (std::abs(q - centers[n]) <= inner_width / 2) return true;
    return false;
}

hilbert::Interval Calibration::outer_interval(int n) const {
    return {centers.at(n) - outer_width / 2, centers.at(n) + outer_width / 2};
}

std::vector<hilbert::Interval> Calibration::outer_intervals(const std::vector<int>& subset) const {
    std::vector<hilbert::Interval> out;
    for (int v : subset) out.push_back(outer_interval(v));
    return out;
}

int calibrate(double q, const Calibration& cal) { return cal.calibrate(q); }

// ---------------------------------------------------------------------------
// Experiment model

void ExperimentModel::validate() const {
    calibration.validate();
    grw_params.validate();
    if (!(apparatus_packet.width > 0))
        throw std::invalid_argument("ExperimentModel: packet width must be positive");
    if (!(coupling.duration >= 0) || coupling.duration > t_final)
        throw std::invalid_argument("ExperimentModel: coupling duration must lie in [0, t_final]");
    if (coupling.observable.rows() != system_space.dim() ||
        coupling.observable.cols() != system_space.dim())
        throw std::invalid_argument("ExperimentModel: observable shape != system dimension");
    const double herm = (coupling.observable - coupling.observable.adjoint()).cwiseAbs().maxCoeff();
    if (herm >= 1e-12)
        throw std::invalid_argument("ExperimentModel: observable must be Hermitian");
    if (!(t_final > 0)) throw std::invalid_argument("ExperimentModel: t_final must be positive");
}

SpaceSpec ExperimentModel::combined_space() const {
    return system_space.tensored(SpaceSpec::grid1d(pointer_grid));
}

StateVector ExperimentModel::apparatus_initial() const {
    CVec a(pointer_grid.n_points);
    for (int k = 0; k < pointer_grid.n_points; ++k) {
        const double x = pointer_grid.point(k);
        const double u = x - apparatus_packet.center;
        a(k) = std::exp(cx(-u * u / (4.0 * apparatus_packet.width * apparatus_packet.width),
                           apparatus_packet.momentum * x));
    }
    StateVector psi(SpaceSpec::grid1d(pointer_grid), std::move(a));
    psi.normalize();
    return psi;
}

bool ExperimentModel::branch_form_applicable() const {
    return system_space.grid_factor_indices().empty();
}

// ---------------------------------------------------------------------------
// Spectral momentum and coupling Hamiltonian

std::vector<double> fft_wavenumbers(const Grid& grid) {
    std::vector<double> k(grid.n_points);
    const double dk = 2.0 * kPi / grid.length();
    for (int j = 0; j < grid.n_points; ++j)
        k[j] = dk * ((j <= grid.n_points / 2) ? j : j - grid.n_points);
    return k;
}

Operator momentum_operator(const SpaceSpec& space, int factor) {
    const Grid& grid = space.grid_at(factor);
    const int n = grid.n_points;
    const auto k = fft_wavenumbers(grid);
    CMat f(n, n);
    for (int j = 0; j < n; ++j)
        for (int m = 0; m < n; ++m) f(j, m) = std::exp(cx(0.0, -2.0 * kPi * j * m / n)) / std::sqrt(n);
    CMat p = f.adjoint() * Eigen::Map<const RVec>(k.data(), n).asDiagonal() * f;
    p = 0.5 * (p + p.adjoint().eval());

    // expand over the remaining factors
    std::vector<Operator> parts;
    for (int i = 0; i < space.num_factors(); ++i) {
        if (i == factor)
            parts.emplace_back(SpaceSpec::grid1d(grid), p, true);
        else if (space.is_grid(i))
            parts.push_back(Operator::identity(SpaceSpec::grid1d(space.grid_at(i))));
        else
            parts.push_back(Operator::identity(SpaceSpec::spin(space.factor_dim(i))));
    }
    return hilbert::tensor(std::span<const Operator>(parts));
}

Operator coupling_hamiltonian(const ExperimentModel& model) {
    const SpaceSpec combined = model.combined_space();
    const SpaceSpec grid_space = SpaceSpec::grid1d(model.pointer_grid);
    Operator a(model.system_space, 0.5 * (model.coupling.observable +
                                          model.coupling.observable.adjoint().eval()),
               true);
    Operator p = momentum_operator(grid_space, 0);
    Operator ap = hilbert::tensor(a, p);
    return Operator(combined, model.coupling.strength * ap.matrix, true);
}

// ---------------------------------------------------------------------------
// Branch representation: the system is all-spin, collapses act only on the
// pointer, and the coupling is diagonal in the observable eigenbasis, so the
// full state stays of the form sum_v |w_v> (x) |phi_v> with independent
// pointer wave functions phi_v translating at speed g a_v.

namespace {

class BranchEvolver {
public:
    explicit BranchEvolver(const ExperimentModel& model)
        : model_(model),
          grid_(model.pointer_grid),
          n_(grid_.n_points),
          sampler_(grid_, model.grw_params.alpha) {
        Eigen::SelfAdjointEigenSolver<CMat> es(
            0.5 * (model.coupling.observable + model.coupling.observable.adjoint().eval()));
        basis_ = es.eigenvectors();
        eigenvalues_ = es.eigenvalues();
        d_ = static_cast<int>(basis_.cols());
        fft_ = std::make_unique<FftMany>(n_, d_);
        packet_ = model.apparatus_initial().amplitudes;
        // Gaussian mask lookup by grid-point distance; the prefactor cancels
        // against the renormalization after each collapse.
        const double alpha = model.grw_params.alpha;
        gauss_.resize(n_);
        for (int j = 0; j < n_; ++j) {
            const double u = j * grid_.spacing;
            gauss_[j] = std::exp(-0.5 * alpha * u * u);
        }
        branches_.resize(n_, d_);
        phase_.resize(n_);
        marginal_buf_.resize(n_);
    }

    void init(const StateVector& system_state) {
        const CVec weights = basis_.adjoint() * system_state.amplitudes;
        for (int v = 0; v < d_; ++v) branches_.col(v) = weights(v) * packet_;
        max_norm_drift_ = 0.0;
    }

    // Unitary segment; branch v translates by strength * a_v * dt during the
    // coupling window. Phase factors e^{-i k_j d} are built by geometric
    // recurrence over the integer FFT frequencies.
    void advance(double dt, bool coupling_on) {
        if (dt <= 0 || !coupling_on) return;
        fft_->forward(branches_.data());
        const double dk = 2.0 * kPi / grid_.length();
        for (int v = 0; v < d_; ++v) {
            const double d = model_.coupling.strength * eigenvalues_(v) * dt;
            if (d == 0.0) continue;
            const cx w = std::exp(cx(0.0, -dk * d));
            const cx wc = std::conj(w);
            phase_[0] = cx(1.0, 0.0);
            for (int j = 1; j <= n_ / 2; ++j) phase_[j] = phase_[j - 1] * w;
            if (n_ > 1) {
                phase_[n_ - 1] = wc;
                for (int j = n_ - 2; j > n_ / 2; --j) phase_[j] = phase_[j + 1] * wc;
            }
            branches_.col(v).array() *= Eigen::Map<const CVec>(phase_.data(), n_).array();
        }
        fft_->inverse(branches_.data());
        const double nrm = std::sqrt(total_norm2());
        const double drift = std::abs(nrm - 1.0);
        if (drift > 1e-8) throw NumericError("branch evolution: unitarity violated");
        max_norm_drift_ = std::max(max_norm_drift_, drift);
        branches_ /= nrm;
    }

    double jump(Rng& rng) {
        fill_marginal();
        const int idx = sampler_.sample_center_index(rng, marginal_buf_);
        double nrm2 = 0.0;
        for (int v = 0; v < d_; ++v)
            for (int k = 0; k < n_; ++k) {
                branches_(k, v) *= gauss_[std::abs(k - idx)];
                nrm2 += std::norm(branches_(k, v));
            }
        if (nrm2 < 1e-24) throw NumericError("collapse produced a vanishing state");
        branches_ /= std::sqrt(nrm2);
        return grid_.point(idx);
    }

    RVec marginal() const {
        const_cast<BranchEvolver*>(this)->fill_marginal();
        return marginal_buf_;
    }

    double total_norm2() const { return branches_.squaredNorm(); }

    hilbert::Moments moments() const {
        const RVec w = marginal();
        double mean = 0;
        for (int k = 0; k < n_; ++k) mean += grid_.point(k) * w(k);
        double var = 0;
        for (int k = 0; k < n_; ++k) var += std::pow(grid_.point(k) - mean, 2) * w(k);
        return {mean, std::sqrt(std::max(var, 0.0))};
    }

    StateVector to_dense() const {
        const SpaceSpec space = model_.combined_space();
        CVec amps = CVec::Zero(space.dim());
        for (int s = 0; s < d_; ++s)
            for (int v = 0; v < d_; ++v) amps.segment(s * n_, n_) += basis_(s, v) * branches_.col(v);
        return StateVector(space, std::move(amps));
    }

    double max_norm_drift() const { return max_norm_drift_; }

private:
    void fill_marginal() {
        for (int k = 0; k < n_; ++k) {
            double s = 0.0;
            for (int v = 0; v < d_; ++v) s += std::norm(branches_(k, v));
            marginal_buf_(k) = s;
        }
    }

    const ExperimentModel& model_;
    Grid grid_;
    int n_;
    int d_ = 0;
    grw::JumpSampler sampler_;
    std::unique_ptr<FftMany> fft_;
    CMat basis_;
    RVec eigenvalues_;
    CVec packet_;
    std::vector<double> gauss_;
    CMat branches_;  // n x d, one column per branch
    std::vector<cx> phase_;
    RVec marginal_buf_;
    double max_norm_drift_ = 0.0;
};

// Runs both GRW phases (coupling, then free relaxation) on the branch
// representation. RNG consumption matches the dense path exactly: full phase
// schedule first, then one uniform per jump.
void run_branch_phases(Rng& rng, const ExperimentModel& model, BranchEvolver& ev,
                       std::vector<grw::CollapseEvent>* events) {
    const double tau = model.coupling.duration;
    const int pointer = model.pointer_factor();
    const auto phase = [&](double t0, double t1, bool coupling_on) {
        if (t1 <= t0) return;
        const auto schedule = sample_collapse_schedule(rng, model.grw_params, 1, t1 - t0);
        double t = 0.0;
        for (const auto& [tj, p] : schedule) {
            (void)p;
            ev.advance(tj - t, coupling_on);
            const double center = ev.jump(rng);
            if (events) events->push_back({t0 + tj, pointer, center});
            t = tj;
        }
        ev.advance((t1 - t0) - t, coupling_on);
    };
    phase(0.0, tau, true);
    phase(tau, model.t_final, false);
}

RunResult run_experiment_dense(Rng& rng, const ExperimentModel& model,
                               const StateVector& system_state) {
    const StateVector psi0 = hilbert::tensor(system_state, model.apparatus_initial());
    const double tau = model.coupling.duration;
    const Operator hc = coupling_hamiltonian(model);

    grw::Trajectory phase1 =
        grw::evolve_trajectory(rng, psi0, grw::Hamiltonian(hc), model.grw_params, tau);
    std::vector<grw::CollapseEvent> events = std::move(phase1.events);
    StateVector state = std::move(phase1.final_state);
    if (model.t_final > tau) {
        grw::Trajectory phase2 = grw::evolve_trajectory(rng, state, grw::Hamiltonian{},
                                                        model.grw_params, model.t_final - tau);
        for (auto ev : phase2.events) {
            ev.time += tau;
            events.push_back(ev);
        }
        state = std::move(phase2.final_state);
    }
    const auto m = hilbert::position_moments(state, model.pointer_factor());
    return RunResult{model.calibration.calibrate(m.mean), m.mean,       m.spread,
                     model.calibration.in_inner(m.mean),  std::move(state), std::move(events)};
}

}  // namespace

RunResult run_experiment(Rng& rng, const ExperimentModel& model,
                         const StateVector& system_state) {
    model.validate();
    if (!(system_state.space == model.system_space))
        throw std::invalid_argument("run_experiment: system state space mismatch");
    if (std::abs(system_state.amplitudes.squaredNorm() - 1.0) > 1e-9)
        throw std::invalid_argument("run_experiment: system state is not normalized");

    if (!model.branch_form_applicable()) return run_experiment_dense(rng, model, system_state);

    BranchEvolver ev(model);
    ev.init(system_state);
    std::vector<grw::CollapseEvent> events;
    run_branch_phases(rng, model, ev, &events);
    const auto m = ev.moments();
    return RunResult{model.calibration.calibrate(m.mean), m.mean,        m.spread,
                     model.calibration.in_inner(m.mean),  ev.to_dense(), std::move(events)};
}

std::vector<RunSummary> run_ensemble(std::uint64_t master_seed, const ExperimentModel& model,
                                     const StateVector& system_state, long long n_runs,
                                     int threads) {
    model.validate();
    if (n_runs < 1) throw std::invalid_argument("run_ensemble: n_runs must be >= 1");
    if (!(system_state.space == model.system_space))
        throw std::invalid_argument("run_ensemble: system state space mismatch");

    const int n_out = model.calibration.num_outcomes();
    std::vector<RVec> indicators(n_out);
    for (int v = 0; v < n_out; ++v)
        indicators[v] =
            interval_indicator(model.pointer_grid, {model.calibration.outer_interval(v)});

    std::vector<RunSummary> out(static_cast<std::size_t>(n_runs));
    const bool branch = model.branch_form_applicable();

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int t_count = threads > 0 ? threads : static_cast<int>(hw);

    auto worker = [&](int tid) {
        std::unique_ptr<BranchEvolver> ev;
        if (branch) ev = std::make_unique<BranchEvolver>(model);
        for (long long i = tid; i < n_runs; i += t_count) {
            Rng rng = Rng::stream(master_seed, static_cast<std::uint64_t>(i));
            RunSummary& s = out[static_cast<std::size_t>(i)];
            s.seed = static_cast<std::uint64_t>(i);
            if (branch) {
                ev->init(system_state);
                std::vector<grw::CollapseEvent> events;
                run_branch_phases(rng, model, *ev, &events);
                const auto m = ev->moments();
                s.pointer_mean = m.mean;
                s.pointer_spread = m.spread;
                s.label = model.calibration.calibrate(m.mean);
                s.inner_hit = model.calibration.in_inner(m.mean);
                s.n_events = static_cast<int>(events.size());
                const RVec w = ev->marginal();
                s.interval_mass.resize(n_out);
                for (int v = 0; v < n_out; ++v) s.interval_mass[v] = w.dot(indicators[v]);
            } else {
                RunResult r = run_experiment_dense(rng, model, system_state);
                s.pointer_mean = r.pointer_mean;
                s.pointer_spread = r.pointer_spread;
                s.label = r.label;
                s.inner_hit = r.inner_hit;
                s.n_events = static_cast<int>(r.events.size());
                const RVec w = hilbert::marginal_probability(r.final_state, model.pointer_factor());
                s.interval_mass.resize(n_out);
                for (int v = 0; v < n_out; ++v) s.interval_mass[v] = w.dot(indicators[v]);
            }
        }
    };

    if (t_count == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < t_count; ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }
    return out;
}

OutcomeDistribution empirical_distribution(std::uint64_t master_seed, const ExperimentModel& model,
                                           const StateVector& system_state, long long n_runs,
                                           int threads) {
    const auto runs = run_ensemble(master_seed, model, system_state, n_runs, threads);
    OutcomeDistribution dist;
    dist.outcomes = model.calibration.outcomes;
    dist.counts.assign(dist.outcomes.size(), 0);
    dist.total = n_runs;
    for (const auto& r : runs) {
        if (r.label < 0)
            ++dist.null_count;
        else
            ++dist.counts[r.label];
    }
    return dist;
}

double OutcomeDistribution::se(int i) const {
    const double p = frequency(i);
    return std::sqrt(p * (1.0 - p) / static_cast<double>(total));
}

double OutcomeDistribution::null_se() const {
    const double p = null_frequency();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(total));
}

// ---------------------------------------------------------------------------
// Q measure

namespace {

std::vector<int> checked_subset(const ExperimentModel& model, const std::vector<int>& subset) {
    std::vector<int> v = subset;
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    for (int i : v)
        if (i < 0 || i >= model.calibration.num_outcomes())
            throw std::invalid_argument("q_measure: outcome index out of range");
    return v;
}

// Closed-form averaged evolution for branch-form models: collapses preserve
// the pointer position marginal on average, and the coupling translates each
// branch by g a_v tau, so Tr[rho_tF P_{Delta_V}] needs only the translated
// initial packet.
double q_master_closed_form(const ExperimentModel& model, const StateVector& system_state,
                            const std::vector<int>& subset) {
    Eigen::SelfAdjointEigenSolver<CMat> es(
        0.5 * (model.coupling.observable + model.coupling.observable.adjoint().eval()));
    const CMat& basis = es.eigenvectors();
    const RVec& a = es.eigenvalues();
    const CVec weights = basis.adjoint() * system_state.amplitudes;

    const Grid& grid = model.pointer_grid;
    const RVec ind = interval_indicator(grid, model.calibration.outer_intervals(subset));
    const CVec packet = model.apparatus_initial().amplitudes;
    const auto k = fft_wavenumbers(grid);
    Fft fft(grid.n_points);

    double q = 0.0;
    for (int v = 0; v < a.size(); ++v) {
        const double wgt = std::norm(weights(v));
        if (wgt < 1e-300) continue;
        const double d = model.coupling.strength * a(v) * model.coupling.duration;
        CVec shifted = packet;
        fft.forward(shifted.data());
        for (int j = 0; j < grid.n_points; ++j)
            shifted(j) *= std::exp(cx(0.0, -k[j] * d));
        fft.inverse(shifted.data());
        q += wgt * shifted.cwiseAbs2().dot(ind);
    }
    return q;
}

double q_master_generic(const ExperimentModel& model, const StateVector& system_state,
                        const std::vector<int>& subset, double dt) {
    const StateVector psi0 = hilbert::tensor(system_state, model.apparatus_initial());
    grw::DensityMatrix rho = grw::DensityMatrix::from_state(psi0);
    const double tau = model.coupling.duration;
    if (tau > 0)
        rho = grw::master_equation_evolve(rho, grw::Hamiltonian(coupling_hamiltonian(model)),
                                          model.grw_params, tau, dt);
    if (model.t_final > tau)
        rho = grw::master_equation_evolve(rho, grw::Hamiltonian{}, model.grw_params,
                                          model.t_final - tau, dt);
    const Operator proj = hilbert::interval_projector(model.combined_space(), model.pointer_factor(),
                                                      model.calibration.outer_intervals(subset));
    return (rho.matrix() * proj.matrix).trace().real();
}

}  // namespace

double q_measure(const ExperimentModel& model, const StateVector& system_state,
                 const std::vector<int>& outcome_subset, const QMode& mode) {
    model.validate();
    const auto subset = checked_subset(model, outcome_subset);
    if (subset.empty()) return 0.0;

    if (std::holds_alternative<QTrajectories>(mode)) {
        const auto& tm = std::get<QTrajectories>(mode);
        const auto runs = run_ensemble(tm.seed, model, system_state, tm.m, tm.threads);
        double acc = 0.0;
        for (const auto& r : runs)
            for (int v : subset) acc += r.interval_mass[v];
        return acc / static_cast<double>(runs.size());
    }
    const auto& mm = std::get<QMasterEquation>(mode);
    if (model.branch_form_applicable()) return q_master_closed_form(model, system_state, subset);
    return q_master_generic(model, system_state, subset, mm.dt);
}

// ---------------------------------------------------------------------------
// Theorem 1

double theorem1_bound(double sigma_q, double ell, double eta) {
    if (!(ell > 0)) throw std::invalid_argument("theorem1_bound: ell must be positive");
    const double r = sigma_q / ell;
    return 2.0 * (r * r + eta);
}

Theorem1Result theorem1_gap(const ExperimentModel& model, const StateVector& system_state,
                            const std::vector<int>& outcome_subset, long long n_runs, long long m,
                            std::uint64_t master_seed, int threads) {
    const auto subset = checked_subset(model, outcome_subset);
    const long long total = std::max(n_runs, m);
    const auto runs = run_ensemble(master_seed, model, system_state, total, threads);

    Theorem1Result res;
    long long in_v = 0, inner_miss = 0, nulls = 0;
    for (long long i = 0; i < n_runs; ++i) {
        const auto& r = runs[static_cast<std::size_t>(i)];
        if (std::binary_search(subset.begin(), subset.end(), r.label)) ++in_v;
        if (!r.inner_hit) ++inner_miss;
        if (r.label < 0) ++nulls;
    }
    res.p_hat = static_cast<double>(in_v) / n_runs;
    res.se_p = std::sqrt(res.p_hat * (1 - res.p_hat) / static_cast<double>(n_runs));

    double q_sum = 0, q_sq = 0;
    for (long long i = 0; i < m; ++i) {
        double s = 0;
        for (int v : subset) s += runs[static_cast<std::size_t>(i)].interval_mass[v];
        q_sum += s;
        q_sq += s * s;
    }
    res.q_hat = q_sum / m;
    const double var = std::max(0.0, q_sq / m - res.q_hat * res.q_hat);
    res.se_q = std::sqrt(var / static_cast<double>(m));

    res.sigma_q = 0.0;
    for (const auto& r : runs) res.sigma_q = std::max(res.sigma_q, r.pointer_spread);

    const double miss = static_cast<double>(inner_miss) / n_runs;
    res.eta_hat = miss + 3.0 * std::sqrt(miss * (1 - miss) / static_cast<double>(n_runs));
    res.eta_null = static_cast<double>(nulls) / n_runs;

    res.gap = std::abs(res.p_hat - res.q_hat);
    res.bound = theorem1_bound(res.sigma_q, model.calibration.ell(), res.eta_hat);
    res.allowance = 3.0 * (res.se_p + res.se_q);
    res.pass = res.gap <= res.bound + res.allowance;
    return res;
}

double factorization_defect(const StateVector& state, int n_system_factors) {
    return hilbert::purity_defect(hilbert::reduced_density(state, n_system_factors));
}

}  // namespace grwlab::measurement
