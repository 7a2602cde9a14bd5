#include "z2lgt/effective.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "z2lgt/errors.hpp"

namespace z2lgt {

double EffectiveParams::hopping(int link) const {
    auto it = t_tilde_per_link.find(link);
    return it == t_tilde_per_link.end() ? t : it->second;
}

double EffectiveParams::field(int link) const {
    auto it = h_per_link.find(link);
    return it == h_per_link.end() ? 0.0 : it->second;
}

namespace {

void validate_links(const LatticeGeometry& geom, const EffectiveParams& params) {
    for (const auto* m : {&params.h_per_link, &params.t_tilde_per_link})
        for (const auto& [link, value] : *m)
            if (link < 0 || link >= geom.n_links())
                throw SchemaError("effective parameters reference absent link " + std::to_string(link));
}

}  // namespace

TermList link_hopping_terms(const LatticeGeometry& geom, int link) {
    const Link& l = geom.links.at(link);
    TermList terms;
    for (std::size_t k = 0; k < l.plaquettes.size(); ++k) {
        const int a = l.sites_a[k], b = l.sites_b[k];
        terms.push_back({-1.0, {create(a), tau_z(link), annihilate(b)}});
        terms.push_back({-1.0, {create(b), tau_z(link), annihilate(a)}});
    }
    return terms;
}

TermList lgt_terms(const LatticeGeometry& geom, const EffectiveParams& params) {
    validate_links(geom, params);
    TermList terms;
    for (const auto& l : geom.links) {
        const double t = params.hopping(l.id);
        if (t != 0.0)
            for (auto term : link_hopping_terms(geom, l.id)) {
                term.coefficient *= t;
                terms.push_back(term);
            }
        const double h = params.field(l.id);
        if (h != 0.0) terms.push_back({-h, {tau_x(l.id)}});
    }
    return terms;
}

SparseOperator build_lgt_hamiltonian(const LatticeGeometry& geom, BasisPtr basis, const EffectiveParams& params) {
    return build_operator(std::move(basis), lgt_terms(geom, params));
}

LgtComponents build_lgt_components(const LatticeGeometry& geom, BasisPtr basis) {
    LgtComponents c;
    for (const auto& l : geom.links) {
        c.hopping.push_back(build_operator(basis, link_hopping_terms(geom, l.id)));
        c.field.push_back(build_operator(basis, {{-1.0, {tau_x(l.id)}}}));
    }
    return c;
}

SparseOperator LgtComponents::assemble(const std::vector<double>& t_per_link, const std::vector<double>& h_per_link) const {
    if (t_per_link.size() != hopping.size() || h_per_link.size() != field.size())
        throw SchemaError("LgtComponents::assemble: parameter count mismatch");
    SparseMatrix m(hopping.front().matrix.rows(), hopping.front().matrix.cols());
    for (std::size_t l = 0; l < hopping.size(); ++l) {
        if (t_per_link[l] != 0.0) m += t_per_link[l] * hopping[l].matrix;
        if (h_per_link[l] != 0.0) m += h_per_link[l] * field[l].matrix;
    }
    return SparseOperator(hopping.front().basis, std::move(m));
}

SparseOperator LgtComponents::assemble(const EffectiveParams& params) const {
    std::vector<double> t(hopping.size()), h(field.size());
    for (std::size_t l = 0; l < hopping.size(); ++l) {
        t[l] = params.hopping(static_cast<int>(l));
        h[l] = params.field(static_cast<int>(l));
    }
    for (const auto* m : {&params.h_per_link, &params.t_tilde_per_link})
        for (const auto& [link, value] : *m)
            if (link < 0 || link >= static_cast<int>(hopping.size()))
                throw SchemaError("effective parameters reference absent link " + std::to_string(link));
    return assemble(t, h);
}

SparseOperator GaugeTransform::as_operator() const {
    const int n = static_cast<int>(phases.size());
    SparseMatrix m(n, n);
    m.reserve(Eigen::VectorXi::Constant(n, 1));
    for (int k = 0; k < n; ++k) m.insert(k, k) = phases[k];
    return SparseOperator(basis, std::move(m));
}

SparseOperator GaugeTransform::conjugate(const SparseOperator& op) const {
    SparseMatrix m = op.matrix;
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(m, k); it; ++it)
            it.valueRef() = std::conj(phases[it.row()]) * it.value() * phases[it.col()];
    return SparseOperator(op.basis, std::move(m));
}

GaugeTransform build_gauge_transform(const LatticeGeometry& geom, BasisPtr basis) {
    if (basis->link_basis != LinkBasis::TauZ) throw SchemaError("build_gauge_transform: needs a tau^z link basis");
    static const std::array<cplx, 4> powers_of_i = {cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
    GaugeTransform u;
    u.basis = basis;
    u.phases.resize(static_cast<Eigen::Index>(basis->dim()));
    for (std::size_t k = 0; k < basis->dim(); ++k) {
        const std::uint8_t* occ = basis->occupations(k);
        // theta_j = (pi/2) m_j with integer m_j, so the phase is a power of i.
        long quarter_turns = 0;
        for (const auto& p : geom.plaquettes)
            for (int j = 0; j < 3; ++j) {
                const int n = occ[basis->mode_position(p.sites[j])];
                if (n == 0) continue;
                const int z_next = basis->link_value(k, basis->link_position(p.links[j]));
                const int z_prev = basis->link_value(k, basis->link_position(p.links[(j + 2) % 3]));
                quarter_turns += static_cast<long>(z_next - z_prev) * n;
            }
        u.phases[static_cast<Eigen::Index>(k)] = powers_of_i[((quarter_turns % 4) + 4) % 4];
    }
    return u;
}

SparseOperator plaquette_operator(const LatticeGeometry& geom, BasisPtr basis, int plaquette) {
    const auto& p = geom.plaquettes.at(plaquette);
    return build_operator(std::move(basis), {{1.0, {tau_z(p.links[0]), tau_z(p.links[1]), tau_z(p.links[2])}}});
}

SparseOperator vertex_operator(const LatticeGeometry& geom, BasisPtr basis, int super_site) {
    Term term;
    for (int l : geom.super_sites.at(super_site).incident_links) term.factors.push_back(tau_x(l));
    return build_operator(std::move(basis), {term});
}

SparseOperator gauss_operator(const LatticeGeometry& geom, BasisPtr basis, int super_site) {
    Term term;
    const auto& v = geom.super_sites.at(super_site);
    for (int l : v.incident_links) term.factors.push_back(tau_x(l));
    for (int s : v.member_sites) term.factors.push_back(parity(s));
    return build_operator(std::move(basis), {term});
}

SparseOperator attached_parity_field(const LatticeGeometry& geom, BasisPtr basis, int link) {
    const Link& l = geom.links.at(link);
    Term term;
    term.factors.push_back(tau_x(link));
    for (int s : l.sites_a) term.factors.push_back(parity(s));
    for (int s : l.sites_b) term.factors.push_back(parity(s));
    return build_operator(std::move(basis), {term});
}

ToricState toric_code_ground_state(const LatticeGeometry& geom, const std::vector<int>& vison_plaquettes,
                                   const std::optional<std::vector<int>>& vertex_values) {
    for (int p : vison_plaquettes)
        if (p < 0 || p >= geom.n_plaquettes()) throw SchemaError("toric_code_ground_state: unknown plaquette");
    const std::vector<int> values = vertex_values.value_or(std::vector<int>(geom.n_super_sites(), 1));
    auto sector = enumerate_link_basis(geom, LinkBasis::TauX, values);

    TermList terms;
    for (const auto& p : geom.plaquettes) {
        const bool vison = std::find(vison_plaquettes.begin(), vison_plaquettes.end(), p.id) != vison_plaquettes.end();
        terms.push_back({vison ? 1.0 : -1.0, {tau_z(p.links[0]), tau_z(p.links[1]), tau_z(p.links[2])}});
    }
    const DenseMatrix h = build_operator(sector, terms).dense();
    Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(h);
    const auto& evals = solver.eigenvalues();
    Eigen::Index degeneracy = 1;
    while (degeneracy < evals.size() && evals[degeneracy] - evals[0] < 1e-9) ++degeneracy;

    ToricState out;
    out.basis = enumerate_link_basis(geom, LinkBasis::TauZ);
    out.manifold.resize(static_cast<Eigen::Index>(out.basis->dim()), degeneracy);
    for (Eigen::Index c = 0; c < degeneracy; ++c) {
        Vector v = convert_state(solver.eigenvectors().col(c), *sector, *out.basis);
        Eigen::Index pivot = 0;
        v.cwiseAbs().maxCoeff(&pivot);
        v *= std::abs(v[pivot]) / v[pivot];
        out.manifold.col(c) = v;
    }
    return out;
}

std::vector<double> single_triangle_spectrum(double t, int plaquette_sign) {
    if (plaquette_sign != 1 && plaquette_sign != -1) throw SchemaError("single_triangle_spectrum: sign must be +1 or -1");
    const double flux = plaquette_sign == 1 ? 0.0 : std::numbers::pi;
    std::vector<double> e;
    for (double k : {0.0, 2.0 * std::numbers::pi / 3.0, -2.0 * std::numbers::pi / 3.0}) e.push_back(-2.0 * t * std::cos(k + flux));
    std::sort(e.begin(), e.end());
    return e;
}

Vector product_state(const LatticeGeometry& geom, const BasisSet& basis, const std::vector<std::array<cplx, 3>>& matter,
                     const Vector& links_z) {
    if (basis.link_basis != LinkBasis::TauZ) throw SchemaError("product_state: needs a tau^z link basis");
    if (static_cast<int>(matter.size()) != geom.n_plaquettes()) throw SchemaError("product_state: one matter state per plaquette");
    if (links_z.size() != (Eigen::Index{1} << basis.n_links())) throw SchemaError("product_state: link vector dimension");
    Vector out = Vector::Zero(static_cast<Eigen::Index>(basis.dim()));
    for (std::size_t k = 0; k < basis.dim(); ++k) {
        const std::uint8_t* occ = basis.occupations(k);
        cplx amp = links_z[static_cast<Eigen::Index>(basis.link_bits(k))];
        for (const auto& p : geom.plaquettes) {
            int occupied = -1, count = 0;
            for (int j = 0; j < 3; ++j) {
                const int n = occ[basis.mode_position(p.sites[j])];
                count += n;
                if (n == 1) occupied = j;
            }
            if (count != 1 || occupied < 0) {
                amp = 0.0;
                break;
            }
            amp *= matter[p.id][occupied];
        }
        out[static_cast<Eigen::Index>(k)] = amp;
    }
    return out;
}

Vector lab_frame_eigenstate(const LatticeGeometry& geom, BasisPtr basis_z, const Vector& links_z) {
    const cplx a = 1.0 / std::sqrt(3.0);
    std::vector<std::array<cplx, 3>> matter(geom.n_plaquettes(), {a, a, a});
    const Vector transformed = product_state(geom, *basis_z, matter, links_z);
    return build_gauge_transform(geom, basis_z).apply_adjoint(transformed);
}

}  // namespace z2lgt
