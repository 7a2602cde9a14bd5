#include "z2lgt/microscopic.hpp"

#include <algorithm>
#include <cmath>

#include "z2lgt/errors.hpp"
#include "z2lgt/linalg.hpp"

namespace z2lgt {

namespace {

constexpr std::size_t kDenseLimit = 4000;

int add_oscillator(MicroscopicLayout& layout, std::string name, OscillatorRole role, double frequency, double anharmonicity) {
    layout.oscillators.push_back({std::move(name), role, frequency, anharmonicity});
    return static_cast<int>(layout.oscillators.size()) - 1;
}

/** Couplers C, D between matter a and b; the D-b leg carries the reversed sign. */
void add_block(MicroscopicLayout& layout, int a, int b, const BlockParams& p, double omega, const std::string& suffix) {
    const int c = add_oscillator(layout, "C" + suffix, OscillatorRole::Coupler, omega + p.delta, p.beta);
    const int d = add_oscillator(layout, "D" + suffix, OscillatorRole::Coupler, omega + p.delta, p.beta);
    layout.couplings.push_back({a, c, -p.g});
    layout.couplings.push_back({b, c, -p.g});
    layout.couplings.push_back({a, d, -p.g});
    layout.couplings.push_back({b, d, p.g});
    if (p.h != 0.0) layout.couplings.push_back({c, d, p.h});
    layout.links.push_back({c, d, {a, b}});
}

}  // namespace

std::vector<int> MicroscopicLayout::matter_modes() const {
    std::vector<int> out;
    for (int k = 0; k < static_cast<int>(oscillators.size()); ++k)
        if (oscillators[k].role == OscillatorRole::Matter) out.push_back(k);
    return out;
}

void MicroscopicLayout::validate() const {
    const int n = static_cast<int>(oscillators.size());
    if (n == 0) throw SchemaError("microscopic layout: no oscillators");
    for (const auto& c : couplings)
        if (c.a < 0 || c.a >= n || c.b < 0 || c.b >= n || c.a == c.b)
            throw SchemaError("microscopic layout: coupling references invalid oscillators");
    for (const auto& l : links) {
        if (l.c < 0 || l.c >= n || l.d < 0 || l.d >= n) throw SchemaError("microscopic layout: link references invalid couplers");
        if (oscillators[l.c].role != OscillatorRole::Coupler || oscillators[l.d].role != OscillatorRole::Coupler)
            throw SchemaError("microscopic layout: link endpoints must be couplers");
        for (int m : l.matter)
            if (m < 0 || m >= n || oscillators[m].role != OscillatorRole::Matter)
                throw SchemaError("microscopic layout: link attached to a non-matter oscillator");
    }
}

MicroscopicLayout single_block_layout(const BlockParams& block, double matter_anharmonicity, double omega) {
    MicroscopicLayout layout;
    layout.kind = "single_block";
    const int a = add_oscillator(layout, "A", OscillatorRole::Matter, omega, matter_anharmonicity);
    const int b = add_oscillator(layout, "B", OscillatorRole::Matter, omega, matter_anharmonicity);
    add_block(layout, a, b, block, omega, "");
    return layout;
}

MicroscopicLayout merged_chain_layout(const BlockParams& first, const BlockParams& second, double omega) {
    MicroscopicLayout layout;
    layout.kind = "merged_chain";
    const int a0 = add_oscillator(layout, "A", OscillatorRole::Matter, omega, 0.0);
    const int a1 = add_oscillator(layout, "A'", OscillatorRole::Matter, omega, 0.0);
    const int a2 = add_oscillator(layout, "A''", OscillatorRole::Matter, omega, 0.0);
    add_block(layout, a0, a1, first, omega, "");
    add_block(layout, a1, a2, second, omega, "'");
    return layout;
}

MicroscopicLayout double_link_layout(const BlockParams& block, double g_tilde, double delta_tilde, double omega) {
    MicroscopicLayout layout;
    layout.kind = "double_link";
    const int a = add_oscillator(layout, "A", OscillatorRole::Matter, omega, 0.0);
    const int b = add_oscillator(layout, "B", OscillatorRole::Matter, omega, 0.0);
    const int a2 = add_oscillator(layout, "A'", OscillatorRole::Matter, omega + delta_tilde, 0.0);
    const int b2 = add_oscillator(layout, "B'", OscillatorRole::Matter, omega + delta_tilde, 0.0);
    add_block(layout, a, b, block, omega, "");
    const int c = layout.links.back().c, d = layout.links.back().d;
    layout.couplings.push_back({a2, c, -g_tilde});
    layout.couplings.push_back({b2, c, -g_tilde});
    layout.couplings.push_back({a2, d, -g_tilde});
    layout.couplings.push_back({b2, d, g_tilde});
    layout.links.back().matter = {a, b, a2, b2};
    return layout;
}

MicroscopicLayout full_triangle_layout(const std::vector<BlockParams>& blocks, double omega) {
    if (blocks.size() != 3) throw SchemaError("full_triangle_layout: need three building blocks");
    MicroscopicLayout layout;
    layout.kind = "full_triangle";
    for (int s = 0; s < 3; ++s) add_oscillator(layout, "A" + std::to_string(s + 1), OscillatorRole::Matter, omega, 0.0);
    for (int k = 0; k < 3; ++k) add_block(layout, k, (k + 1) % 3, blocks[k], omega, std::to_string(k + 1));
    return layout;
}

BasisPtr microscopic_basis(const MicroscopicLayout& layout, int levels, std::optional<int> total_excitations) {
    layout.validate();
    if (levels < 3) throw SchemaError("microscopic_basis: need at least 3 levels per oscillator (doubly occupied virtual states)");
    return enumerate_oscillator_basis(static_cast<int>(layout.oscillators.size()), levels, total_excitations);
}

SparseOperator build_microscopic_hamiltonian(const MicroscopicLayout& layout, BasisPtr basis) {
    layout.validate();
    if (basis->n_modes() != static_cast<int>(layout.oscillators.size()))
        throw SchemaError("build_microscopic_hamiltonian: basis does not match the layout");
    TermList terms;
    for (int k = 0; k < static_cast<int>(layout.oscillators.size()); ++k) {
        const auto& o = layout.oscillators[k];
        if (o.frequency != 0.0) terms.push_back({o.frequency, {number(k)}});
        if (o.anharmonicity != 0.0) terms.push_back({-0.5 * o.anharmonicity, {create(k), create(k), annihilate(k), annihilate(k)}});
    }
    for (const auto& c : layout.couplings) {
        terms.push_back({c.amplitude, {create(c.a), annihilate(c.b)}});
        terms.push_back({c.amplitude, {create(c.b), annihilate(c.a)}});
    }
    return build_operator(basis, terms);
}

double effective_coupling(double g, double delta, double beta) {
    if (delta == 0.0 || delta == beta) throw DomainError("effective_coupling: pole at Delta = 0 or Delta = beta");
    return 2.0 * g * g * (1.0 / (delta - beta) - 1.0 / delta);
}

double effective_coupling_main_text(double g, double delta, double beta) {
    const double denom = delta * delta + delta * beta;
    if (denom == 0.0) throw DomainError("effective_coupling_main_text: pole at Delta = 0 or Delta = -beta");
    return 2.0 * g * g * beta / denom;
}

FineTuneSolution fine_tune_triangle(double t_eff, const std::vector<double>& deltas, double g) {
    if (deltas.empty()) throw SchemaError("fine_tune_triangle: no links");
    const double d1 = deltas[0];
    const double denom = 2.0 * g * g + t_eff * d1;
    if (d1 == 0.0 || denom == 0.0) throw DomainError("fine_tune_triangle: vanishing denominator");
    FineTuneSolution s;
    s.t_eff = t_eff;
    s.delta = deltas;
    const double beta1 = t_eff * d1 * d1 / denom;
    for (double d : deltas) {
        const double beta = d * beta1 / d1;
        const double g2 = g * g * beta / beta1;
        if (!(g2 > 0.0)) throw DomainError("fine_tune_triangle: infeasible (non-positive g^2)");
        s.beta.push_back(beta);
        s.g.push_back(std::sqrt(g2));
    }
    return s;
}

double coupler_leakage(double delta_offset, double detuning, double g) {
    if (detuning == 0.0) throw DomainError("coupler_leakage: resonant coupler pairs (detuning 0), rate is 2g^2/Delta");
    if (delta_offset == 0.0) throw DomainError("coupler_leakage: Delta = 0");
    return std::abs(std::pow(g, 4) / (delta_offset * delta_offset * detuning));
}

double resonant_coupler_rate(double delta_offset, double g) {
    if (delta_offset == 0.0) throw DomainError("resonant_coupler_rate: Delta = 0");
    return std::abs(2.0 * g * g / delta_offset);
}

namespace {

SparseOperator single_excitation_projector(const CouplerLink& link, BasisPtr basis) {
    const int pc = basis->mode_position(link.c), pd = basis->mode_position(link.d);
    std::vector<Eigen::Triplet<cplx>> entries;
    for (std::size_t k = 0; k < basis->dim(); ++k) {
        const auto* occ = basis->occupations(k);
        if (occ[pc] + occ[pd] == 1) entries.emplace_back(static_cast<int>(k), static_cast<int>(k), 1.0);
    }
    SparseMatrix m(basis->dim(), basis->dim());
    m.setFromTriplets(entries.begin(), entries.end());
    return SparseOperator(basis, m);
}

const CouplerLink& link_at(const MicroscopicLayout& layout, int link) {
    if (link < 0 || link >= static_cast<int>(layout.links.size())) throw SchemaError("microscopic: unknown link index");
    return layout.links[link];
}

}  // namespace

SparseOperator projected_tau_x(const MicroscopicLayout& layout, BasisPtr basis, int link) {
    const auto& l = link_at(layout, link);
    const auto p = single_excitation_projector(l, basis);
    const auto flip = build_operator(basis, {{1.0, {create(l.c), annihilate(l.d)}}, {1.0, {create(l.d), annihilate(l.c)}}});
    return p * flip * p;
}

SparseOperator microscopic_tau_z(const MicroscopicLayout& layout, BasisPtr basis, int link) {
    const auto& l = link_at(layout, link);
    return build_operator(basis, {{1.0, {number(l.c)}}, {-1.0, {number(l.d)}}});
}

std::vector<SparseOperator> gauss_law_observables(const MicroscopicLayout& layout, BasisPtr basis) {
    std::vector<SparseOperator> tau_x;
    for (int l = 0; l < static_cast<int>(layout.links.size()); ++l) tau_x.push_back(projected_tau_x(layout, basis, l));
    std::vector<SparseOperator> out;
    for (int m : layout.matter_modes()) {
        SparseOperator g = build_operator(basis, {{1.0, {parity(m)}}});
        for (int l = 0; l < static_cast<int>(layout.links.size()); ++l) {
            const auto& attached = layout.links[l].matter;
            if (std::find(attached.begin(), attached.end(), m) != attached.end()) g = g * tau_x[l];
        }
        out.push_back(g);
    }
    return out;
}

Vector microscopic_product_state(const MicroscopicLayout& layout, const BasisSet& basis, const std::vector<int>& matter_occupations,
                                 const std::vector<LinkPreparation>& links) {
    const auto matter = layout.matter_modes();
    if (matter_occupations.size() != matter.size()) throw SchemaError("microscopic_product_state: one occupation per matter site");
    if (links.size() != layout.links.size()) throw SchemaError("microscopic_product_state: one preparation per link");
    Vector psi = Vector::Zero(static_cast<Eigen::Index>(basis.dim()));
    const int n_links = static_cast<int>(links.size());
    // enumerate which coupler of each link holds the excitation
    for (int mask = 0; mask < (1 << n_links); ++mask) {
        std::vector<std::uint8_t> occ(layout.oscillators.size(), 0);
        for (std::size_t j = 0; j < matter.size(); ++j) occ[matter[j]] = static_cast<std::uint8_t>(matter_occupations[j]);
        cplx amp = 1.0;
        for (int l = 0; l < n_links; ++l) {
            const bool on_d = (mask >> l) & 1;
            occ[on_d ? layout.links[l].d : layout.links[l].c] = 1;
            const auto& prep = links[l];
            if (prep.value != 1 && prep.value != -1) throw SchemaError("microscopic_product_state: link value must be +-1");
            if (prep.axis == 'x') {
                amp *= (on_d ? static_cast<double>(prep.value) : 1.0) / std::sqrt(2.0);
            } else if (prep.axis == 'z') {
                if (on_d != (prep.value == -1)) amp = 0.0;
            } else {
                throw SchemaError("microscopic_product_state: link axis must be 'x' or 'z'");
            }
        }
        if (amp == cplx(0.0)) continue;
        std::vector<std::uint8_t> ordered(basis.n_modes());
        for (int m = 0; m < basis.n_modes(); ++m) ordered[m] = occ[basis.mode_labels[m]];
        const auto k = basis.find(ordered.data(), 0);
        if (!k) throw SchemaError("microscopic_product_state: state lies outside the basis");
        psi[static_cast<Eigen::Index>(*k)] += amp;
    }
    return psi;
}

Vector dress_low_energy_state(const MicroscopicLayout& layout, BasisPtr basis, const Vector& bare) {
    if (basis->dim() > kDenseLimit) throw DomainError("dress_low_energy_state: basis too large for dense diagonalisation");
    std::vector<Eigen::Index> low;
    for (std::size_t k = 0; k < basis->dim(); ++k) {
        const auto* occ = basis->occupations(k);
        bool inside = true;
        for (int m : layout.matter_modes())
            if (occ[basis->mode_position(m)] > 1) inside = false;
        for (const auto& l : layout.links)
            if (occ[basis->mode_position(l.c)] + occ[basis->mode_position(l.d)] != 1) inside = false;
        if (inside) low.push_back(static_cast<Eigen::Index>(k));
    }
    const Eigen::Index n0 = static_cast<Eigen::Index>(low.size());
    Vector x0(n0);
    for (Eigen::Index a = 0; a < n0; ++a) x0[a] = bare[low[a]];
    if (std::abs(x0.squaredNorm() - bare.squaredNorm()) > 1e-12) throw DomainError("dress_low_energy_state: state leaves the low-energy manifold");

    const auto h = build_microscopic_hamiltonian(layout, basis);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.dense());
    if (es.info() != Eigen::Success) throw ConvergenceError("dress_low_energy_state: eigensolver failed");
    std::vector<std::pair<double, Eigen::Index>> weight;
    for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
        double w = 0.0;
        for (auto k : low) w += std::norm(es.eigenvectors()(k, j));
        weight.push_back({-w, j});
    }
    std::sort(weight.begin(), weight.end());
    DenseMatrix dressed(es.eigenvectors().rows(), n0), overlap(n0, n0);
    for (Eigen::Index j = 0; j < n0; ++j) dressed.col(j) = es.eigenvectors().col(weight[j].second);
    for (Eigen::Index a = 0; a < n0; ++a)
        for (Eigen::Index j = 0; j < n0; ++j) overlap(a, j) = dressed(low[a], j);
    Eigen::JacobiSVD<DenseMatrix> svd(overlap, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const DenseMatrix polar = svd.matrixU() * svd.matrixV().adjoint();
    return dressed * (polar.adjoint() * x0);
}

MicroscopicTrace evolve_microscopic(const MicroscopicLayout& layout, BasisPtr basis, const Vector& initial,
                                    const std::vector<double>& times, bool keep_states, int threads) {
    if (std::abs(initial.norm() - 1.0) > 1e-10) throw DomainError("evolve_microscopic: initial state is not normalized");
    const auto h = build_microscopic_hamiltonian(layout, basis);
    const auto gauss = gauss_law_observables(layout, basis);
    std::vector<SparseOperator> tx, tz;
    for (int l = 0; l < static_cast<int>(layout.links.size()); ++l) {
        tx.push_back(projected_tau_x(layout, basis, l));
        tz.push_back(microscopic_tau_z(layout, basis, l));
    }
    const auto matter = layout.matter_modes();

    MicroscopicTrace trace;
    trace.times = times;
    const std::size_t n = times.size();
    trace.occupations.resize(n);
    trace.gauss.resize(n);
    trace.tau_x.resize(n);
    trace.tau_z.resize(n);
    if (keep_states) trace.states.resize(n);

    auto record = [&](std::size_t i, const Vector& psi) {
        for (int m : matter) {
            const int pos = basis->mode_position(m);
            double occ = 0.0;
            for (std::size_t k = 0; k < basis->dim(); ++k) occ += std::norm(psi[static_cast<Eigen::Index>(k)]) * basis->occupations(k)[pos];
            trace.occupations[i].push_back(occ);
        }
        for (const auto& g : gauss) trace.gauss[i].push_back(g.expectation(psi).real());
        for (const auto& o : tx) trace.tau_x[i].push_back(o.expectation(psi).real());
        for (const auto& o : tz) trace.tau_z[i].push_back(o.expectation(psi).real());
        if (keep_states) trace.states[i] = psi;
    };

    if (basis->dim() <= kDenseLimit) {
        Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.dense());
        if (es.info() != Eigen::Success) throw ConvergenceError("evolve_microscopic: eigensolver failed");
        const Vector coeffs = es.eigenvectors().adjoint() * initial;
        parallel_for(n, threads, [&](std::size_t i) {
            Vector phased(coeffs.size());
            for (Eigen::Index k = 0; k < coeffs.size(); ++k) phased[k] = coeffs[k] * std::exp(cplx(0.0, -es.eigenvalues()[k] * times[i]));
            record(i, es.eigenvectors() * phased);
        });
    } else {
        Vector psi = initial;
        double now = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (times[i] < now) throw SchemaError("evolve_microscopic: times must be non-decreasing");
            if (times[i] > now) psi = expmv_hermitian(h.matrix, psi, times[i] - now, 1e-12, 60);
            now = times[i];
            record(i, psi);
        }
    }
    return trace;
}

SpectroscopyResult spectroscopy_single_block(const BlockParams& block, int levels, int n_samples) {
    const auto layout = single_block_layout(block);
    const auto basis = microscopic_basis(layout, levels, 2);
    SpectroscopyResult r;
    r.t_appendix = effective_coupling(block.g, block.delta, block.beta);
    r.t_main_text = effective_coupling_main_text(block.g, block.delta, block.beta);
    const double t_pred = std::abs(r.t_appendix);

    // manifold splitting: four eigenstates with the largest weight on n_a + n_b = 1, n_c + n_d = 1
    const auto h = build_microscopic_hamiltonian(layout, basis);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.dense());
    std::vector<std::pair<double, double>> weight_energy;
    for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
        double w = 0.0;
        for (std::size_t k = 0; k < basis->dim(); ++k) {
            const auto* occ = basis->occupations(k);
            if (occ[0] + occ[1] == 1 && occ[2] + occ[3] == 1) w += std::norm(es.eigenvectors()(static_cast<Eigen::Index>(k), j));
        }
        weight_energy.push_back({w, es.eigenvalues()[j]});
    }
    std::sort(weight_energy.begin(), weight_energy.end(), [](auto& a, auto& b) { return a.first > b.first; });
    double lo = weight_energy[0].second, hi = lo;
    for (int j = 1; j < 4; ++j) {
        lo = std::min(lo, weight_energy[j].second);
        hi = std::max(hi, weight_energy[j].second);
    }
    r.t_splitting = 0.5 * (hi - lo);

    // Rabi oscillation A -> B with the link in tau^z = +1
    const Vector psi0 = microscopic_product_state(layout, *basis, {1, 0}, {{'z', 1}});
    const double window = 1.5 * M_PI / t_pred;
    const auto times = linspace(0.0, window, n_samples);
    const auto trace = evolve_microscopic(layout, basis, psi0, times);
    std::vector<double> nb;
    for (const auto& o : trace.occupations) nb.push_back(o[1]);
    auto cost = [&](double w) {
        double s = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double d = nb[i] - std::pow(std::sin(w * times[i]), 2);
            s += d * d;
        }
        return s;
    };
    const int grid = 401;
    double best = 0.5 * t_pred, best_cost = cost(best);
    const double step = t_pred / (grid - 1);
    for (int k = 0; k < grid; ++k) {
        const double w = 0.5 * t_pred + k * step;
        const double c = cost(w);
        if (c < best_cost) {
            best_cost = c;
            best = w;
        }
    }
    double a = best - step, b = best + step;
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - ratio * (b - a), x2 = a + ratio * (b - a);
    double f1 = cost(x1), f2 = cost(x2);
    for (int it = 0; it < 100 && b - a > 1e-14 * t_pred; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = cost(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = cost(x2);
        }
    }
    r.t_fit = 0.5 * (a + b);
    r.fit_residual = std::sqrt(cost(r.t_fit) / static_cast<double>(times.size()));
    return r;
}

}  // namespace z2lgt
