#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "grwlab/common.hpp"
#include "grwlab/hilbert.hpp"
#include "grwlab/rng.hpp"

namespace grwlab::povm {

using hilbert::StateVector;

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

enum class FunctionalMode { exact, monte_carlo };

/// Outcome-probability functional P(V | psi): quadratic in psi for anything
/// produced by the collapse dynamics, which is what makes the operator
/// extraction below possible. `eval` takes a normalized state and a subset of
/// outcome indices.
struct ProbabilityFunctional {
    int dim = 0;
    std::vector<double> outcomes;
    FunctionalMode mode = FunctionalMode::exact;
    long long n_runs = 0;
    std::uint64_t seed = 0;
    std::function<Estimate(const StateVector&, const std::vector<int>&)> eval;
};

struct Provenance {
    FunctionalMode mode = FunctionalMode::exact;
    long long n_runs = 0;
    std::uint64_t seed = 0;
};

struct EffectSet {
    int dim = 0;
    std::vector<double> outcomes;
    std::vector<CMat> effects;  // singleton effects O_v, one per outcome
    std::vector<RMat> se_re;    // per-entry standard errors (monte_carlo mode)
    std::vector<RMat> se_im;
    Provenance provenance;

    /// O_V for a union of outcomes (additivity of the underlying measure).
    CMat effect_union(const std::vector<int>& subset) const;

    /// sum_v v O_v, the self-adjoint operator of a PVM experiment.
    CMat weighted_sum() const;
};

struct PovmValidity {
    double hermiticity_defect = 0.0;
    double min_eigenvalue = 0.0;
    double completeness_defect = 0.0;
    double tol = 0.0;
    bool hermitian = false;
    bool positive = false;
    bool complete = false;
    bool valid() const { return hermitian && positive && complete; }
};

struct PvmReport {
    std::vector<double> idempotency_defects;  // ||O_v^2 - O_v||
    RMat orthogonality_defects;               // ||O_v O_w||, v != w
    double max_defect = 0.0;
    double tol = 0.0;
    bool is_pvm = false;
};

struct ReconstructOptions {
    bool validate_quadratic = true;
    int n_validation_probes = 8;
    std::uint64_t validation_seed = 0x5eedULL;
};

/// Polarization reconstruction: evaluates the functional on the D^2 probe
/// states {e_i}, {(e_i+e_j)/sqrt2}, {(e_i+i e_j)/sqrt2} per outcome and
/// assembles the unique Hermitian matrix matching them. Non-quadratic
/// functionals are detected by re-evaluating on random states against
/// <psi|O_v|psi> (beyond 5 sigma in Monte Carlo mode) and rejected.
EffectSet reconstruct_effects(const ProbabilityFunctional& functional, int dim,
                              const ReconstructOptions& opts = {});

PovmValidity validate_povm(const EffectSet& effects, double tol);

PvmReport pvm_check(const EffectSet& effects, double tol);

/// One repeatable experiment: a single run maps a normalized system state to
/// an outcome label (-1 = null) and the post-measurement system state that a
/// fresh apparatus would receive.
class Experiment {
public:
    virtual ~Experiment() = default;
    virtual int dim() const = 0;
    virtual std::vector<double> outcomes() const = 0;

    struct RunOutcome {
        int label;
        StateVector post_state;
    };
    virtual RunOutcome run(Rng& rng, const StateVector& system_state) = 0;
};

struct ReproducibilityResult {
    double agreement = 0.0;
    long long pairs_used = 0;
    long long null_excluded = 0;
    int span_rank = 0;
    bool span_ok = false;
    double agreement_threshold = 0.0;
    bool pass = false;
};

/// Runs back-to-back pairs (fresh apparatus, the first run's post state feeds
/// the second run) and checks both reproducibility conditions: second-run
/// agreement and the span of post-measurement states.
ReproducibilityResult reproducibility_test(std::uint64_t seed, Experiment& experiment,
                                           const std::vector<StateVector>& probes,
                                           long long n_pairs, double agreement_threshold = 0.999);

struct Theorem3Verdict {
    EffectSet effects;
    PovmValidity validity;
    PvmReport pvm;
    ReproducibilityResult reproducibility;
    bool is_pvm = false;
};

Theorem3Verdict theorem3_pipeline(Experiment& experiment,
                                  const ProbabilityFunctional& functional,
                                  const std::vector<StateVector>& probes, long long n_pairs,
                                  double povm_tol, double pvm_tol, std::uint64_t seed);

}  // namespace grwlab::povm
