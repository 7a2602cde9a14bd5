#include "z2lgt/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "z2lgt/errors.hpp"

namespace z2lgt {

void RampSchedule::append(double duration, const std::map<std::string, double>& targets) {
    Segment s;
    s.duration = duration;
    s.start = segments_.empty() ? initial_ : segments_.back().end;
    s.end = s.start;
    for (const auto& [name, value] : targets) {
        if (!s.start.count(name)) throw SchemaError("RampSchedule: parameter '" + name + "' has no initial value");
        s.end[name] = value;
    }
    segments_.push_back(std::move(s));
}

void RampSchedule::validate() const {
    std::map<std::string, double> previous = initial_;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const auto& s = segments_[i];
        if (!(s.duration > 0.0)) throw SchemaError("RampSchedule: segment " + std::to_string(i) + " has non-positive duration");
        for (const auto& [name, value] : previous) {
            auto it = s.start.find(name);
            if (it == s.start.end() || !s.end.count(name))
                throw SchemaError("RampSchedule: segment " + std::to_string(i) + " lacks endpoints for '" + name + "'");
            if (std::abs(it->second - value) > 1e-12)
                throw SchemaError("RampSchedule: parameter '" + name + "' is discontinuous at segment " + std::to_string(i));
        }
        if (s.start.size() != previous.size() || s.end.size() != previous.size())
            throw SchemaError("RampSchedule: segment " + std::to_string(i) + " introduces unknown parameters");
        previous = s.end;
    }
}

double RampSchedule::value(const std::string& name, double time) const {
    const auto init = initial_.find(name);
    if (init == initial_.end()) throw SchemaError("RampSchedule: unknown parameter '" + name + "'");
    if (segments_.empty() || time <= 0.0) return init->second;
    double begin = 0.0;
    for (const auto& s : segments_) {
        if (time <= begin + s.duration) {
            const double frac = (time - begin) / s.duration;
            const double a = s.start.at(name), b = s.end.at(name);
            return a + (b - a) * frac;
        }
        begin += s.duration;
    }
    return segments_.back().end.at(name);
}

std::map<std::string, double> RampSchedule::values(double time) const {
    std::map<std::string, double> out;
    for (const auto& [name, v] : initial_) out[name] = value(name, time);
    return out;
}

double RampSchedule::total_duration() const {
    double total = 0.0;
    for (const auto& s : segments_) total += s.duration;
    return total;
}

std::vector<double> RampSchedule::breakpoints() const {
    std::vector<double> out{0.0};
    for (const auto& s : segments_) out.push_back(out.back() + s.duration);
    return out;
}

std::vector<std::string> RampSchedule::parameter_names() const {
    std::vector<std::string> out;
    for (const auto& [name, v] : initial_) out.push_back(name);
    return out;
}

std::string hopping_parameter(int link) { return "t_" + std::to_string(link); }
std::string field_parameter(int link) { return "h_" + std::to_string(link); }

SparseMatrix DrivenHamiltonian::combine(const std::vector<double>& coeffs) const {
    if (coeffs.size() != terms.size()) throw SchemaError("DrivenHamiltonian: coefficient count mismatch");
    SparseMatrix out(terms.front().matrix.rows(), terms.front().matrix.cols());
    for (std::size_t k = 0; k < terms.size(); ++k)
        if (coeffs[k] != 0.0) out += cplx(coeffs[k]) * terms[k].matrix;
    return out;
}

DrivenHamiltonian lgt_driven_hamiltonian(const LatticeGeometry& geom, BasisPtr basis, const RampSchedule& schedule) {
    schedule.validate();
    const auto comps = build_lgt_components(geom, basis);
    const int n_links = geom.n_links();
    DrivenHamiltonian h;
    h.terms = comps.hopping;
    h.terms.insert(h.terms.end(), comps.field.begin(), comps.field.end());
    std::vector<std::string> names;
    for (int l = 0; l < n_links; ++l) names.push_back(hopping_parameter(l));
    for (int l = 0; l < n_links; ++l) names.push_back(field_parameter(l));
    std::vector<bool> present;
    for (const auto& n : names) present.push_back(schedule.initial().count(n) > 0);
    h.coefficients = [schedule, names, present](double time) {
        std::vector<double> c(names.size(), 0.0);
        for (std::size_t k = 0; k < names.size(); ++k)
            if (present[k]) c[k] = schedule.value(names[k], time);
        return c;
    };
    h.breakpoints = schedule.breakpoints();
    return h;
}

Vector evolve(const Vector& initial, const DrivenHamiltonian& h, const EvolutionOptions& options, const Observer& observer) {
    if (options.steps_per_segment < 1) throw SchemaError("evolve: steps_per_segment must be positive");
    if (h.breakpoints.size() < 2) throw SchemaError("evolve: need at least one time segment");
    if (std::abs(initial.norm() - 1.0) > 1e-10) throw DomainError("evolve: initial state is not normalized");
    const double c1 = 0.5 - std::sqrt(3.0) / 6.0, c2 = 0.5 + std::sqrt(3.0) / 6.0;
    const double a1 = (3.0 - 2.0 * std::sqrt(3.0)) / 12.0, a2 = (3.0 + 2.0 * std::sqrt(3.0)) / 12.0;
    const int stride = std::max(1, options.sample_stride);

    Vector psi = initial;
    if (observer) observer(h.breakpoints.front(), psi);
    for (std::size_t seg = 0; seg + 1 < h.breakpoints.size(); ++seg) {
        const double begin = h.breakpoints[seg];
        const double dt = (h.breakpoints[seg + 1] - begin) / options.steps_per_segment;
        for (int step = 0; step < options.steps_per_segment; ++step) {
            const double t0 = begin + step * dt;
            const auto h1 = h.coefficients(t0 + c1 * dt);
            const auto h2 = h.coefficients(t0 + c2 * dt);
            std::vector<double> first(h1.size()), second(h1.size());
            for (std::size_t k = 0; k < h1.size(); ++k) {
                first[k] = a2 * h1[k] + a1 * h2[k];
                second[k] = a1 * h1[k] + a2 * h2[k];
            }
            psi = expmv_hermitian(h.combine(first), psi, dt, options.krylov_tol);
            psi = expmv_hermitian(h.combine(second), psi, dt, options.krylov_tol);
            const bool last = step + 1 == options.steps_per_segment;
            if (observer && (last || (step + 1) % stride == 0)) observer(t0 + dt, psi);
        }
    }
    return psi;
}

ConvergedEvolution evolve_converged(const Vector& initial, const DrivenHamiltonian& h, int initial_steps,
                                    const std::function<double(const Vector&)>& metric, double tol, int max_doublings,
                                    double krylov_tol) {
    EvolutionOptions opts;
    opts.steps_per_segment = initial_steps;
    opts.krylov_tol = krylov_tol;
    ConvergedEvolution out;
    out.final_state = evolve(initial, h, opts);
    double previous = metric(out.final_state);
    for (int d = 0; d < max_doublings; ++d) {
        opts.steps_per_segment *= 2;
        Vector next = evolve(initial, h, opts);
        const double value = metric(next);
        out.last_change = std::abs(value - previous);
        out.final_state = std::move(next);
        out.steps_per_segment = opts.steps_per_segment;
        if (out.last_change < tol) return out;
        previous = value;
    }
    throw ConvergenceError("evolve_converged: metric still changes by " + std::to_string(out.last_change) +
                           " after step doubling");
}

double GrowingPlan::field_sign(int link) const {
    return std::find(flipped_field_links.begin(), flipped_field_links.end(), link) != flipped_field_links.end() ? -1.0 : 1.0;
}

std::vector<int> growing_matter_sites(const LatticeGeometry& geom) {
    const auto target = geom.toric_gauss_values();
    const int n = geom.n_plaquettes();
    std::vector<int> found;
    int matches = 0;
    std::vector<int> choice(n, 0);
    while (true) {
        std::vector<int> count(geom.n_super_sites(), 0);
        for (int p = 0; p < n; ++p) ++count[geom.plaquettes[p].vertices[choice[p]]];
        bool ok = true;
        for (int i = 0; i < geom.n_super_sites() && ok; ++i) ok = (count[i] % 2 ? -1 : 1) == target[i];
        if (ok) {
            ++matches;
            found.clear();
            for (int p = 0; p < n; ++p) found.push_back(geom.plaquettes[p].sites[choice[p]]);
        }
        int p = 0;
        while (p < n && ++choice[p] == 3) choice[p++] = 0;
        if (p == n) break;
    }
    if (matches != 1)
        throw DomainError("growing_matter_sites: " + std::to_string(matches) + " boson placements satisfy the Gauss law");
    return found;
}

GrowingPlan make_growing_plan(const LatticeGeometry& geom, GrowingVariant variant, double t, double h0,
                              double segment_duration) {
    if (!(t > 0.0) || !(h0 > 0.0)) throw SchemaError("make_growing_plan: t and h0 must be positive");
    if (!(segment_duration > 0.0)) throw SchemaError("make_growing_plan: segment duration must be positive");
    GrowingPlan plan;
    plan.geom = geom;
    plan.variant = variant;
    plan.t = t;
    plan.h0 = h0;
    plan.segment_duration = segment_duration;
    plan.matter_sites = growing_matter_sites(geom);
    plan.gauss_values = geom.toric_gauss_values();

    std::set<int> ramped;
    for (int p = 0; p < geom.n_plaquettes(); ++p) {
        plan.plaquette_order.push_back(p);
        std::vector<int> links;
        for (int l : geom.plaquettes[p].links)
            if (ramped.insert(l).second) links.push_back(l);
        std::sort(links.begin(), links.end());
        plan.step_links.push_back(links);
    }

    if (variant == GrowingVariant::Vison) {
        const int center = geom.center_plaquette();
        int boundary = -1;
        for (int l : geom.plaquettes[center].links)
            if (!geom.links[l].is_double() && (boundary < 0 || l < boundary)) boundary = l;
        if (boundary < 0) throw SchemaError("make_growing_plan: center plaquette has no boundary link");
        plan.flipped_field_links = {boundary};
        plan.vison_plaquettes = {center};
    }

    std::map<std::string, double> initial;
    for (int l = 0; l < geom.n_links(); ++l) {
        initial[hopping_parameter(l)] = 0.0;
        initial[field_parameter(l)] = h0 * plan.field_sign(l);
    }
    plan.schedule = RampSchedule(initial);
    for (const auto& links : plan.step_links) {
        std::map<std::string, double> raise, lower;
        for (int l : links) {
            raise[hopping_parameter(l)] = t;
            lower[field_parameter(l)] = 0.0;
        }
        plan.schedule.append(segment_duration, raise);
        plan.schedule.append(segment_duration, lower);
    }
    return plan;
}

double toric_fidelity(const GaugeTransform& u, const ToricState& target, const Vector& state) {
    const BasisSet& b = *u.basis;
    if (b.n_links() != target.basis->n_links()) throw SchemaError("toric_fidelity: link count mismatch");
    const Vector rotated = u.apply(state);
    double total = 0.0;
    std::size_t k = 0;
    std::vector<cplx> overlaps(target.degeneracy());
    while (k < b.dim()) {
        const std::uint64_t key = b.matter_key(b.occupations(k));
        std::fill(overlaps.begin(), overlaps.end(), cplx(0.0));
        for (; k < b.dim() && b.matter_key(b.occupations(k)) == key; ++k) {
            const auto bits = static_cast<Eigen::Index>(b.link_bits(k));
            for (std::size_t c = 0; c < overlaps.size(); ++c)
                overlaps[c] += std::conj(target.manifold(bits, static_cast<Eigen::Index>(c))) * rotated[static_cast<Eigen::Index>(k)];
        }
        for (const auto& o : overlaps) total += std::norm(o);
    }
    return total;
}

EffectiveParams growing_step_params(const GrowingPlan& plan, int step, double t_tilde, double h) {
    if (step < 0 || step >= static_cast<int>(plan.step_links.size())) throw SchemaError("growing step out of range");
    EffectiveParams p;
    p.t = plan.t;
    for (int s = 0; s < static_cast<int>(plan.step_links.size()); ++s)
        for (int l : plan.step_links[s]) {
            const double tt = s < step ? plan.t : s == step ? t_tilde : 0.0;
            const double hh = s < step ? 0.0 : s == step ? h : plan.h0;
            p.t_tilde_per_link[l] = tt;
            p.h_per_link[l] = hh * plan.field_sign(l);
        }
    return p;
}

namespace {

BasisPtr plan_sector(const GrowingPlan& plan) {
    return enumerate_basis(plan.geom, SectorConstraint::gauss_sector(plan.gauss_values));
}

double sector_gap(const LgtComponents& comps, const GrowingPlan& plan, const EffectiveParams& p) {
    return many_body_gap(hermitian_eigenvalues(comps.assemble(p).dense()), 1e-9 * plan.t);
}

}  // namespace

GrowingResult run_growing(const GrowingPlan& plan, const GrowingOptions& options) {
    const auto& geom = plan.geom;
    GrowingResult result;
    result.basis = enumerate_basis(geom, SectorConstraint::one_boson());
    const auto basis = result.basis;

    std::vector<std::array<cplx, 3>> matter(geom.n_plaquettes(), {cplx(0.0), cplx(0.0), cplx(0.0)});
    for (int p = 0; p < geom.n_plaquettes(); ++p)
        for (int k = 0; k < 3; ++k)
            if (geom.plaquettes[p].sites[k] == plan.matter_sites[p]) matter[p][k] = 1.0;
    const auto links_z = enumerate_link_basis(geom, LinkBasis::TauZ);
    const Vector plus = Vector::Constant(static_cast<Eigen::Index>(links_z->dim()), 1.0 / std::sqrt(double(links_z->dim())));
    const Vector initial = product_state(geom, *basis, matter, plus);

    const DrivenHamiltonian h = lgt_driven_hamiltonian(geom, basis, plan.schedule);
    const GaugeTransform u = build_gauge_transform(geom, basis);
    const ToricState target = toric_code_ground_state(geom, plan.vison_plaquettes);

    SparseOperator projector = identity_operator(basis);
    for (int i = 0; i < geom.n_super_sites(); ++i)
        projector = projector * (0.5 * (identity_operator(basis) + cplx(plan.gauss_values[i]) * gauss_operator(geom, basis, i)));

    const int samples = std::max(1, options.samples_per_segment);
    int steps = std::max(options.initial_steps_per_segment, samples);
    steps = (steps + samples - 1) / samples * samples;
    double previous = -1.0;
    for (int pass = 0;; ++pass) {
        std::vector<GrowingSample> trace;
        EvolutionOptions eo;
        eo.steps_per_segment = steps;
        eo.sample_stride = steps / samples;
        const Vector final_state = evolve(initial, h, eo, [&](double time, const Vector& psi) {
            GrowingSample s;
            s.time = time;
            s.fidelity = toric_fidelity(u, target, psi);
            s.energy = psi.dot(h.at(time) * psi).real();
            s.sector_leakage = 1.0 - projector.expectation(psi).real();
            trace.push_back(s);
        });
        const double fidelity = toric_fidelity(u, target, final_state);
        const double change = std::abs(fidelity - previous);
        if (previous >= 0.0 && change < options.convergence_tol) {
            result.trace = std::move(trace);
            result.final_state = final_state;
            result.final_fidelity = fidelity;
            result.steps_per_segment = steps;
            result.convergence_change = change;
            break;
        }
        if (pass >= 8) throw ConvergenceError("run_growing: final fidelity did not converge under step doubling");
        previous = fidelity;
        steps *= 2;
    }

    for (const auto& s : result.trace)
        if (std::abs(s.sector_leakage) > options.leakage_threshold)
            throw DomainError("run_growing: Gauss-sector leakage " + std::to_string(s.sector_leakage) + " exceeds threshold");

    if (options.track_gap) {
        const auto sector = plan_sector(plan);
        const auto comps = build_lgt_components(geom, sector);
        parallel_for(result.trace.size(), options.threads, [&](std::size_t i) {
            auto& s = result.trace[i];
            std::vector<double> tv(geom.n_links()), hv(geom.n_links());
            for (int l = 0; l < geom.n_links(); ++l) {
                tv[l] = plan.schedule.value(hopping_parameter(l), s.time);
                hv[l] = plan.schedule.value(field_parameter(l), s.time);
            }
            s.gap = many_body_gap(hermitian_eigenvalues(comps.assemble(tv, hv).dense()), 1e-9 * plan.t);
        });
    }
    return result;
}

std::vector<GapPoint> gap_scan(const GrowingPlan& plan, int step, const std::vector<double>& t_tilde_grid,
                               const std::vector<double>& h_grid, int threads) {
    const auto sector = plan_sector(plan);
    const auto comps = build_lgt_components(plan.geom, sector);
    std::vector<GapPoint> out(t_tilde_grid.size() * h_grid.size());
    parallel_for(out.size(), threads, [&](std::size_t k) {
        const double tt = t_tilde_grid[k / h_grid.size()];
        const double hh = h_grid[k % h_grid.size()];
        out[k] = {tt, hh, sector_gap(comps, plan, growing_step_params(plan, step, tt, hh))};
    });
    return out;
}

std::vector<GapPoint> path_gaps(const GrowingPlan& plan, int step, int n_points, int threads) {
    if (n_points < 2) throw SchemaError("path_gaps: need at least two points");
    const auto sector = plan_sector(plan);
    const auto comps = build_lgt_components(plan.geom, sector);
    std::vector<GapPoint> out(n_points);
    parallel_for(out.size(), threads, [&](std::size_t k) {
        const double s = 2.0 * static_cast<double>(k) / (n_points - 1);
        const double tt = s <= 1.0 ? s * plan.t : plan.t;
        const double hh = s <= 1.0 ? plan.h0 : (2.0 - s) * plan.h0;
        out[k] = {tt, hh, sector_gap(comps, plan, growing_step_params(plan, step, tt, hh))};
    });
    return out;
}

}  // namespace z2lgt
