#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "z2lgt/effective.hpp"
#include "z2lgt/hilbert.hpp"
#include "z2lgt/lattice.hpp"
#include "z2lgt/linalg.hpp"

namespace z2lgt {

/** Named parameters ("t_<link>", "h_<link>", "lambda_<i>") interpolated linearly within segments. */
class RampSchedule {
public:
    struct Segment {
        double duration = 0.0;
        std::map<std::string, double> start;
        std::map<std::string, double> end;
    };

    RampSchedule() = default;
    explicit RampSchedule(std::map<std::string, double> initial) : initial_(std::move(initial)) {}

    /** Appends a segment ending at `targets`; parameters not listed stay constant. */
    void append(double duration, const std::map<std::string, double>& targets);
    /** Appends a segment with explicit endpoints; validate() checks continuity. */
    void append_explicit(Segment segment) { segments_.push_back(std::move(segment)); }
    /** Throws SchemaError on non-positive durations, discontinuities or missing endpoints. */
    void validate() const;

    double value(const std::string& name, double time) const;
    std::map<std::string, double> values(double time) const;
    double total_duration() const;
    /** 0, end of segment 0, end of segment 1, ... */
    std::vector<double> breakpoints() const;
    const std::vector<Segment>& segments() const { return segments_; }
    const std::map<std::string, double>& initial() const { return initial_; }
    std::vector<std::string> parameter_names() const;

private:
    std::map<std::string, double> initial_;
    std::vector<Segment> segments_;
};

std::string hopping_parameter(int link);
std::string field_parameter(int link);

/** H(time) = sum_k c_k(time) A_k with fixed operators. Linear in the coefficients, which lets the
 *  Magnus integrator combine two nodes into one matrix. */
struct DrivenHamiltonian {
    std::vector<SparseOperator> terms;
    std::function<std::vector<double>(double)> coefficients;
    std::vector<double> breakpoints;  // piecewise-smooth boundaries, first and last are the time window

    SparseMatrix combine(const std::vector<double>& coeffs) const;
    SparseMatrix at(double time) const { return combine(coefficients(time)); }
};

/** Effective-model H driven by a ramp schedule with "t_<l>"/"h_<l>" parameters (missing means 0). */
DrivenHamiltonian lgt_driven_hamiltonian(const LatticeGeometry& geom, BasisPtr basis, const RampSchedule& schedule);

struct EvolutionOptions {
    int steps_per_segment = 100;
    /** Observer is called at time 0, every `sample_stride` steps, and at the end of every segment. */
    int sample_stride = 1;
    double krylov_tol = 1e-13;
};

using Observer = std::function<void(double time, const Vector& state)>;

/** Fourth-order commutator-free Magnus propagation; each segment between breakpoints gets the
 *  same number of equal steps. */
Vector evolve(const Vector& initial, const DrivenHamiltonian& h, const EvolutionOptions& options,
              const Observer& observer = nullptr);

struct ConvergedEvolution {
    Vector final_state;
    int steps_per_segment = 0;
    double last_change = 0.0;
};

/** Doubles steps_per_segment until the metric of the final state changes by less than tol.
 *  Throws ConvergenceError after max_doublings. */
ConvergedEvolution evolve_converged(const Vector& initial, const DrivenHamiltonian& h, int initial_steps,
                                    const std::function<double(const Vector&)>& metric, double tol = 1e-8,
                                    int max_doublings = 8, double krylov_tol = 1e-13);

enum class GrowingVariant { Ground, Vison };

/** Plaquette-by-plaquette growing protocol. */
struct GrowingPlan {
    LatticeGeometry geom;
    GrowingVariant variant = GrowingVariant::Ground;
    double t = 1.0;
    double h0 = 1.0;
    double segment_duration = 20.0;
    std::vector<int> plaquette_order;
    std::vector<std::vector<int>> step_links;  // links first ramped at each step
    std::vector<int> matter_sites;             // initial boson position per plaquette (site ids)
    std::vector<int> gauss_values;             // conserved G_i = (-1)^{N^P_i}
    std::vector<int> flipped_field_links;      // field sign reversed (vison variant)
    std::vector<int> vison_plaquettes;         // target sector
    RampSchedule schedule;

    double field_sign(int link) const;
};

/** Initial boson positions such that (-1)^{N_i} equals the toric Gauss values with all tau^x=+1;
 *  DomainError if no or several assignments exist. */
std::vector<int> growing_matter_sites(const LatticeGeometry& geom);

GrowingPlan make_growing_plan(const LatticeGeometry& geom, GrowingVariant variant = GrowingVariant::Ground, double t = 1.0,
                              double h0 = 1.0, double segment_duration = 20.0);

struct GrowingSample {
    double time = 0.0;
    double fidelity = 0.0;
    double energy = 0.0;
    double gap = 0.0;
    double sector_leakage = 0.0;
};

struct GrowingOptions {
    int initial_steps_per_segment = 50;
    double convergence_tol = 1e-8;
    int samples_per_segment = 20;
    double leakage_threshold = 1e-8;
    bool track_gap = true;
    int threads = 0;
};

struct GrowingResult {
    std::vector<GrowingSample> trace;
    Vector final_state;  // tau^z product basis
    BasisPtr basis;
    double final_fidelity = 0.0;
    int steps_per_segment = 0;
    double convergence_change = 0.0;
};

/** Overlap of U psi with the target toric manifold after tracing out the matter. */
double toric_fidelity(const GaugeTransform& u, const ToricState& target, const Vector& state);

GrowingResult run_growing(const GrowingPlan& plan, const GrowingOptions& options = {});

/** Link parameters at point (t_tilde, h) of growing step `step`: earlier steps are fully grown
 *  (t, 0), the current step's links sit at (t_tilde, h), later links at (0, h0). */
EffectiveParams growing_step_params(const GrowingPlan& plan, int step, double t_tilde, double h);

struct GapPoint {
    double t_tilde = 0.0;
    double h = 0.0;
    double gap = 0.0;
};

/** Many-body gap in the plan's Gauss sector at each (t_tilde, h) grid point of a growing step. */
std::vector<GapPoint> gap_scan(const GrowingPlan& plan, int step, const std::vector<double>& t_tilde_grid,
                               const std::vector<double>& h_grid, int threads = 0);

/** Gap at `n_points` equally spaced points along the two-segment path of a growing step. */
std::vector<GapPoint> path_gaps(const GrowingPlan& plan, int step, int n_points, int threads = 0);

}  // namespace z2lgt
