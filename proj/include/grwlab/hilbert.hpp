#pragma once

#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "grwlab/common.hpp"

namespace grwlab::hilbert {

/// Uniform 1D spatial grid. Points are x_k = origin + k*spacing.
struct Grid {
    int n_points;
    double spacing;
    double origin;

    Grid(int n, double dx, double x0);

    /// Grid of n points symmetric about 0.
    static Grid centered(int n, double dx);

    double point(int k) const { return origin + k * spacing; }
    double length() const { return n_points * spacing; }

    bool operator==(const Grid&) const = default;
};

struct SpinFactor {
    int dim;
    bool operator==(const SpinFactor&) const = default;
};

struct GridFactor {
    Grid grid;
    bool operator==(const GridFactor&) const = default;
};

using Factor = std::variant<SpinFactor, GridFactor>;

/// Ordered tensor-product structure of a finite-dimensional Hilbert space.
/// The first factor is the most significant index (Kronecker order).
class SpaceSpec {
public:
    explicit SpaceSpec(std::vector<Factor> factors);

    static SpaceSpec spin(int dim);
    static SpaceSpec grid1d(const Grid& grid);

    int dim() const { return dim_; }
    int num_factors() const { return static_cast<int>(factors_.size()); }
    const Factor& factor(int i) const { return factors_.at(i); }
    int factor_dim(int i) const;
    bool is_grid(int i) const;
    const Grid& grid_at(int i) const;

    /// Index stride of factor i within the flattened amplitude array.
    int stride(int i) const { return strides_.at(i); }

    /// Coordinate of factor f in the flattened index g.
    int coordinate(int g, int f) const { return (g / strides_[f]) % factor_dim(f); }

    /// Indices of all grid factors, in factor order (the "particles").
    std::vector<int> grid_factor_indices() const;

    SpaceSpec tensored(const SpaceSpec& other) const;

    bool operator==(const SpaceSpec& other) const { return factors_ == other.factors_; }

private:
    std::vector<Factor> factors_;
    std::vector<int> strides_;
    int dim_;
};

struct StateVector {
    SpaceSpec space;
    CVec amplitudes;

    StateVector(SpaceSpec s, CVec a);

    /// Basis vector e_index.
    static StateVector basis(const SpaceSpec& s, int index);

    double norm() const { return amplitudes.norm(); }
    StateVector& normalize();
};

struct Operator {
    SpaceSpec space;
    CMat matrix;
    bool hermitian;

    Operator(SpaceSpec s, CMat m, bool hermitian_flag);

    static Operator identity(const SpaceSpec& s);

    StateVector apply(const StateVector& psi) const;
};

StateVector tensor(std::span<const StateVector> states);
Operator tensor(std::span<const Operator> ops);
StateVector tensor(const StateVector& a, const StateVector& b);
Operator tensor(const Operator& a, const Operator& b);

/// Gaussian localization operator of inverse-squared width alpha centered at
/// x, acting on one grid factor: diagonal entries (alpha/pi)^(1/4)
/// exp(-alpha (q - x)^2 / 2), identity on all other factors. The 1D prefactor
/// keeps integral L(x)^dagger L(x) dx = identity.
Operator localization_operator(const SpaceSpec& space, int particle, double center,
                               double alpha);

/// Diagonal profile of the localization operator on a single grid.
RVec localization_profile(const Grid& grid, double center, double alpha);

using Interval = std::pair<double, double>;

/// 0/1 diagonal projector onto a union of disjoint closed intervals of one
/// grid factor's coordinate.
Operator interval_projector(const SpaceSpec& space, int factor,
                            const std::vector<Interval>& interval_union);

/// Indicator of the interval union on a single grid.
RVec interval_indicator(const Grid& grid, const std::vector<Interval>& interval_union);

struct Moments {
    double mean;
    double spread;
};

/// Mean and spread of one grid coordinate, marginalized over all other
/// factors. Requires a normalized state.
Moments position_moments(const StateVector& state, int factor);

cx expectation(const StateVector& state, const Operator& op);

/// Probability marginal over one factor's coordinate.
RVec marginal_probability(const StateVector& state, int factor);

/// Partial trace of |psi><psi| keeping the leading n factors.
CMat reduced_density(const StateVector& state, int n_leading_factors);

/// 1 - Tr(rho^2); zero for pure reduced states.
double purity_defect(const CMat& rho);

}  // namespace grwlab::hilbert
