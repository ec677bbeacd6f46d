#include "grwlab/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace grwlab::hilbert {

Grid::Grid(int n, double dx, double x0) : n_points(n), spacing(dx), origin(x0) {
    if (n < 2) throw std::invalid_argument("Grid: n_points must be >= 2");
    if (!(dx > 0)) throw std::invalid_argument("Grid: spacing must be positive");
}

Grid Grid::centered(int n, double dx) {
    return Grid(n, dx, -0.5 * (n - 1) * dx);
}

SpaceSpec::SpaceSpec(std::vector<Factor> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) throw std::invalid_argument("SpaceSpec: at least one factor");
    dim_ = 1;
    for (const auto& f : factors_) {
        const int d = std::holds_alternative<SpinFactor>(f)
                          ? std::get<SpinFactor>(f).dim
                          : std::get<GridFactor>(f).grid.n_points;
        if (d < 1) throw std::invalid_argument("SpaceSpec: factor dimension must be positive");
        dim_ *= d;
    }
    strides_.resize(factors_.size());
    int stride = dim_;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        stride /= factor_dim(static_cast<int>(i));
        strides_[i] = stride;
    }
}

SpaceSpec SpaceSpec::spin(int dim) { return SpaceSpec({SpinFactor{dim}}); }

SpaceSpec SpaceSpec::grid1d(const Grid& grid) { return SpaceSpec({GridFactor{grid}}); }

int SpaceSpec::factor_dim(int i) const {
    const Factor& f = factors_.at(i);
    return std::holds_alternative<SpinFactor>(f) ? std::get<SpinFactor>(f).dim
                                                 : std::get<GridFactor>(f).grid.n_points;
}

bool SpaceSpec::is_grid(int i) const {
    return std::holds_alternative<GridFactor>(factors_.at(i));
}

const Grid& SpaceSpec::grid_at(int i) const {
    if (!is_grid(i)) throw std::invalid_argument("SpaceSpec: factor is spin-type");
    return std::get<GridFactor>(factors_.at(i)).grid;
}

std::vector<int> SpaceSpec::grid_factor_indices() const {
    std::vector<int> out;
    for (int i = 0; i < num_factors(); ++i)
        if (is_grid(i)) out.push_back(i);
    return out;
}

SpaceSpec SpaceSpec::tensored(const SpaceSpec& other) const {
    std::vector<Factor> fs = factors_;
    fs.insert(fs.end(), other.factors_.begin(), other.factors_.end());
    return SpaceSpec(std::move(fs));
}

StateVector::StateVector(SpaceSpec s, CVec a) : space(std::move(s)), amplitudes(std::move(a)) {
    if (amplitudes.size() != space.dim())
        throw std::invalid_argument("StateVector: amplitude length != space dimension");
}

StateVector StateVector::basis(const SpaceSpec& s, int index) {
    CVec a = CVec::Zero(s.dim());
    a(index) = 1.0;
    return StateVector(s, std::move(a));
}

StateVector& StateVector::normalize() {
    const double n = amplitudes.norm();
    if (n < 1e-150) throw NumericError("StateVector: cannot normalize a zero vector");
    amplitudes /= n;
    return *this;
}

Operator::Operator(SpaceSpec s, CMat m, bool hermitian_flag)
    : space(std::move(s)), matrix(std::move(m)), hermitian(hermitian_flag) {
    if (matrix.rows() != space.dim() || matrix.cols() != space.dim())
        throw std::invalid_argument("Operator: matrix shape != space dimension");
    if (hermitian) {
        const double defect = (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
        if (defect >= 1e-12)
            throw std::invalid_argument("Operator: hermitian_flag set but max |M - M^dagger| = " +
                                        std::to_string(defect));
    }
}

Operator Operator::identity(const SpaceSpec& s) {
    return Operator(s, CMat::Identity(s.dim(), s.dim()), true);
}

StateVector Operator::apply(const StateVector& psi) const {
    if (!(psi.space == space)) throw std::invalid_argument("Operator::apply: space mismatch");
    return StateVector(space, matrix * psi.amplitudes);
}

StateVector tensor(const StateVector& a, const StateVector& b) {
    SpaceSpec s = a.space.tensored(b.space);
    const int nb = b.space.dim();
    CVec out(s.dim());
    for (int i = 0; i < a.space.dim(); ++i)
        for (int j = 0; j < nb; ++j) out(i * nb + j) = a.amplitudes(i) * b.amplitudes(j);
    return StateVector(std::move(s), std::move(out));
}

StateVector tensor(std::span<const StateVector> states) {
    if (states.empty()) throw std::invalid_argument("tensor: empty argument list");
    StateVector acc = states[0];
    for (std::size_t i = 1; i < states.size(); ++i) acc = tensor(acc, states[i]);
    return acc;
}

Operator tensor(const Operator& a, const Operator& b) {
    SpaceSpec s = a.space.tensored(b.space);
    const int na = a.space.dim(), nb = b.space.dim();
    CMat out(na * nb, na * nb);
    for (int i = 0; i < na; ++i)
        for (int k = 0; k < na; ++k)
            out.block(i * nb, k * nb, nb, nb) = a.matrix(i, k) * b.matrix;
    return Operator(std::move(s), std::move(out), a.hermitian && b.hermitian);
}

Operator tensor(std::span<const Operator> ops) {
    if (ops.empty()) throw std::invalid_argument("tensor: empty argument list");
    Operator acc = ops[0];
    for (std::size_t i = 1; i < ops.size(); ++i) acc = tensor(acc, ops[i]);
    return acc;
}

RVec localization_profile(const Grid& grid, double center, double alpha) {
    RVec g(grid.n_points);
    const double pref = std::pow(alpha / kPi, 0.25);
    for (int k = 0; k < grid.n_points; ++k) {
        const double u = grid.point(k) - center;
        g(k) = pref * std::exp(-0.5 * alpha * u * u);
    }
    return g;
}

namespace {

// Build a full-space diagonal operator from a per-point profile on one grid
// factor.
Operator diagonal_on_factor(const SpaceSpec& space, int factor, const RVec& profile) {
    CMat m = CMat::Zero(space.dim(), space.dim());
    for (int g = 0; g < space.dim(); ++g) m(g, g) = profile(space.coordinate(g, factor));
    return Operator(space, std::move(m), true);
}

}  // namespace

Operator localization_operator(const SpaceSpec& space, int particle, double center,
                               double alpha) {
    if (particle < 0 || particle >= space.num_factors())
        throw std::invalid_argument("localization_operator: particle index out of range");
    const Grid& grid = space.grid_at(particle);
    if (!(alpha > 0)) throw std::invalid_argument("localization_operator: alpha must be positive");
    if (!(grid.length() > 1.0 / std::sqrt(alpha)))
        throw std::invalid_argument(
            "localization_operator: grid length must exceed the localization width 1/sqrt(alpha)");
    return diagonal_on_factor(space, particle, localization_profile(grid, center, alpha));
}

RVec interval_indicator(const Grid& grid, const std::vector<Interval>& interval_union) {
    std::vector<Interval> sorted = interval_union;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
        if (sorted[i + 1].first <= sorted[i].second)
            throw std::invalid_argument("interval_projector: overlapping intervals");
    RVec ind = RVec::Zero(grid.n_points);
    for (int k = 0; k < grid.n_points; ++k) {
        const double x = grid.point(k);
        for (const auto& [lo, hi] : sorted)
            if (x >= lo && x <= hi) {
                ind(k) = 1.0;
                break;
            }
    }
    return ind;
}

Operator interval_projector(const SpaceSpec& space, int factor,
                            const std::vector<Interval>& interval_union) {
    const Grid& grid = space.grid_at(factor);
    return diagonal_on_factor(space, factor, interval_indicator(grid, interval_union));
}

RVec marginal_probability(const StateVector& state, int factor) {
    const int d = state.space.factor_dim(factor);
    RVec w = RVec::Zero(d);
    for (int g = 0; g < state.space.dim(); ++g)
        w(state.space.coordinate(g, factor)) += std::norm(state.amplitudes(g));
    return w;
}

Moments position_moments(const StateVector& state, int factor) {
    const Grid& grid = state.space.grid_at(factor);
    const double nrm2 = state.amplitudes.squaredNorm();
    if (std::abs(nrm2 - 1.0) > 1e-9)
        throw NumericError("position_moments: state is not normalized");
    const RVec w = marginal_probability(state, factor);
    double mean = 0.0;
    for (int k = 0; k < grid.n_points; ++k) mean += grid.point(k) * w(k);
    double var = 0.0;
    for (int k = 0; k < grid.n_points; ++k) {
        const double u = grid.point(k) - mean;
        var += u * u * w(k);
    }
    return {mean, std::sqrt(std::max(var, 0.0))};
}

cx expectation(const StateVector& state, const Operator& op) {
    if (!(state.space == op.space)) throw std::invalid_argument("expectation: space mismatch");
    return state.amplitudes.dot(op.matrix * state.amplitudes);
}

CMat reduced_density(const StateVector& state, int n_leading_factors) {
    if (n_leading_factors < 1 || n_leading_factors >= state.space.num_factors())
        throw std::invalid_argument("reduced_density: split must leave factors on both sides");
    int d1 = 1;
    for (int i = 0; i < n_leading_factors; ++i) d1 *= state.space.factor_dim(i);
    const int d2 = state.space.dim() / d1;
    Eigen::Map<const CMat> psi(state.amplitudes.data(), d2, d1);
    // amplitudes are row-major over (leading, trailing); Eigen maps are
    // column-major, so psi(j, i) = amplitude(i*d2 + j) and rho = psi^T psi*.
    CMat rho = psi.transpose() * psi.conjugate();
    return rho;
}

double purity_defect(const CMat& rho) {
    return 1.0 - (rho * rho).trace().real();
}

}  // namespace grwlab::hilbert
