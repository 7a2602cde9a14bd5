#include <algorithm>
#include <numbers>
#include <random>

#include "doctest.h"
#include "z2lgt/effective.hpp"
#include "z2lgt/errors.hpp"

using namespace z2lgt;

namespace {

std::vector<double> eigenvalues(const SparseOperator& h) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> s(h.dense(), Eigen::EigenvaluesOnly);
    const auto& e = s.eigenvalues();
    return std::vector<double>(e.data(), e.data() + e.size());
}

bool same_multiset(std::vector<double> a, std::vector<double> b, double tol) {
    if (a.size() != b.size()) return false;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    for (std::size_t k = 0; k < a.size(); ++k)
        if (std::abs(a[k] - b[k]) > tol) return false;
    return true;
}

EffectiveParams random_params(const LatticeGeometry& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    EffectiveParams p;
    p.t = 1.0;
    for (const auto& l : g.links) {
        p.t_tilde_per_link[l.id] = u(rng);
        p.h_per_link[l.id] = u(rng);
    }
    return p;
}

}  // namespace

TEST_CASE("single triangle spectrum formula") {
    const auto plus = single_triangle_spectrum(1.0, 1);
    const auto minus = single_triangle_spectrum(1.0, -1);
    CHECK(same_multiset(plus, {-2.0, 1.0, 1.0}, 1e-14));
    CHECK(same_multiset(minus, {-1.0, -1.0, 2.0}, 1e-14));
    CHECK(minus.front() - plus.front() == doctest::Approx(1.0));
}

TEST_CASE("single plaquette spectrum per gauge sector") {
    auto g = make_preset("tri1");
    const double t = 1.3;
    EffectiveParams p;
    p.t = t;
    int sectors = 0;
    for (int g0 : {-1, 1})
        for (int g1 : {-1, 1})
            for (int g2 : {-1, 1}) {
                if (g0 * g1 * g2 != -1) continue;  // product of all generators is (-1)^{bosons}
                auto b = enumerate_basis(g, SectorConstraint::gauss_sector({g0, g1, g2}));
                CHECK(b->dim() == 6);
                auto h = build_lgt_hamiltonian(g, b, p);
                auto bp = plaquette_operator(g, b, 0);
                CHECK(commutator_norm(h, bp) < 1e-13);
                Eigen::SelfAdjointEigenSolver<DenseMatrix> s(h.dense());
                std::vector<double> plus, minus;
                for (Eigen::Index k = 0; k < s.eigenvalues().size(); ++k) {
                    const double b_value = bp.expectation(s.eigenvectors().col(k)).real();
                    (b_value > 0 ? plus : minus).push_back(s.eigenvalues()[k]);
                }
                CHECK(same_multiset(plus, single_triangle_spectrum(t, 1), 1e-12));
                CHECK(same_multiset(minus, single_triangle_spectrum(t, -1), 1e-12));
                ++sectors;
            }
    CHECK(sectors == 4);
    CHECK_THROWS_AS(enumerate_basis(g, SectorConstraint::gauss_sector({1, 1, 1})), SchemaError);
}

TEST_CASE("pure field: spectrum +-h per link, ground state tau^x = +1") {
    auto g = make_preset("tri1");
    auto b = enumerate_basis(g, SectorConstraint::one_boson());
    EffectiveParams p;
    p.t = 0.0;
    p.h_per_link = {{0, 0.5}, {1, 0.5}, {2, 0.5}};
    auto h = build_lgt_hamiltonian(g, b, p);
    std::vector<double> expected;
    for (int m = 0; m < 3; ++m)
        for (int s = 0; s < 8; ++s) expected.push_back(-0.5 * ((s & 1 ? -1 : 1) + (s & 2 ? -1 : 1) + (s & 4 ? -1 : 1)));
    CHECK(same_multiset(eigenvalues(h), expected, 1e-12));
    Eigen::SelfAdjointEigenSolver<DenseMatrix> s(h.dense());
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
            CHECK(build_operator(b, {{1.0, {tau_x(l)}}}).expectation(s.eigenvectors().col(k)).real() ==
                  doctest::Approx(1.0));
}

TEST_CASE("gauge invariance for random parameters") {
    auto g = make_preset("tri3");
    auto b = enumerate_basis(g, SectorConstraint::one_boson());
    std::mt19937_64 rng(11);
    std::vector<SparseOperator> gauss;
    for (int i = 0; i < g.n_super_sites(); ++i) gauss.push_back(gauss_operator(g, b, i));
    for (int trial = 0; trial < 5; ++trial) {
        auto h = build_lgt_hamiltonian(g, b, random_params(g, rng));
        CHECK(h.hermiticity_error() < 1e-14);
        CHECK(h.dropped_norm == 0.0);
        for (const auto& gi : gauss) CHECK(commutator_norm(gi, h) < 1e-12);
    }
    EffectiveParams bad;
    bad.h_per_link = {{42, 1.0}};
    CHECK_THROWS_AS(build_lgt_hamiltonian(g, b, bad), SchemaError);
}

TEST_CASE("gauge transform conjugates annihilators by the site phase") {
    auto g = make_preset("tri1");
    auto b = enumerate_basis(g, SectorConstraint::none());
    auto u = build_gauge_transform(g, b);
    CHECK((u.phases.cwiseAbs() - Eigen::VectorXd::Ones(u.phases.size())).cwiseAbs().maxCoeff() < 1e-15);
    const auto& p = g.plaquettes[0];
    for (int j = 0; j < 3; ++j) {
        const int site = p.sites[j];
        // e^{i theta_j} with theta_j = (pi/2)(z_{j,j+1} - z_{j-1,j}), as a diagonal operator
        SparseOperator phase = identity_operator(b);
        for (int k = 0; k < phase.matrix.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(phase.matrix, k); it; ++it) {
                const int zn = b->link_value(it.row(), b->link_position(p.links[j]));
                const int zp = b->link_value(it.row(), b->link_position(p.links[(j + 2) % 3]));
                it.valueRef() = std::exp(cplx(0.0, std::numbers::pi / 2.0 * (zn - zp)));
            }
        const auto a = build_operator(b, {{1.0, {annihilate(site)}}});
        CHECK(difference_norm(u.conjugate(a), a * phase) < 1e-14);
    }
    // zero matter excitations: identity
    for (std::size_t k = 0; k < b->dim(); ++k) {
        bool empty = true;
        for (int m = 0; m < b->n_modes(); ++m) empty &= b->occupations(k)[m] == 0;
        if (empty) CHECK(std::abs(u.phases[k] - 1.0) < 1e-15);
    }
}

TEST_CASE("transformation laws on one and three plaquettes") {
    for (auto name : {"tri1", "tri3"}) {
        auto g = make_preset(name);
        auto b = enumerate_basis(g, SectorConstraint::one_boson());
        auto u = build_gauge_transform(g, b);
        const auto uop = u.as_operator();
        CHECK(difference_norm(uop.adjoint() * uop, identity_operator(b)) < 1e-14);
        for (const auto& l : g.links) {
            const auto x = build_operator(b, {{1.0, {tau_x(l.id)}}});
            CHECK(difference_norm(u.conjugate(x), attached_parity_field(g, b, l.id)) < 1e-12);
            const auto z = build_operator(b, {{1.0, {tau_z(l.id)}}});
            CHECK(difference_norm(u.conjugate(z), z) < 1e-14);
        }
        EffectiveParams p;
        const auto h0 = u.conjugate(build_lgt_hamiltonian(g, b, p));
        for (int n = 0; n < g.n_plaquettes(); ++n) CHECK(commutator_norm(h0, plaquette_operator(g, b, n)) < 1e-12);
        for (int i = 0; i < g.n_super_sites(); ++i) {
            const double sign = g.super_sites[i].n_plaquettes % 2 == 0 ? 1.0 : -1.0;
            CHECK(difference_norm(u.conjugate(gauss_operator(g, b, i)), sign * vertex_operator(g, b, i)) < 1e-12);
        }
    }
}

TEST_CASE("transformed hopping carries the plaquette flux") {
    auto g = make_preset("tri1");
    auto b = enumerate_basis(g, SectorConstraint::one_boson());
    auto u = build_gauge_transform(g, b);
    EffectiveParams p;
    p.t = 0.8;
    const auto transformed = u.conjugate(build_lgt_hamiltonian(g, b, p));
    const auto& pl = g.plaquettes[0];
    TermList ring;
    for (int j = 0; j < 3; ++j) {
        const int a = pl.sites[j], c = pl.sites[(j + 1) % 3];
        ring.push_back({-0.8, {create(a), annihilate(c), tau_z(pl.links[0]), tau_z(pl.links[1]), tau_z(pl.links[2])}});
        ring.push_back({-0.8, {create(c), annihilate(a), tau_z(pl.links[0]), tau_z(pl.links[1]), tau_z(pl.links[2])}});
    }
    CHECK(difference_norm(transformed, build_operator(b, ring)) < 1e-14);
}

TEST_CASE("h=0 spectrum decomposes into cosine bands") {
    auto g = make_preset("tri2");
    auto b = enumerate_basis(g, SectorConstraint::gauss_sector(g.toric_gauss_values()));
    EffectiveParams p;
    p.t = 1.0;
    std::vector<double> expected;
    for (int b0 : {1, -1})
        for (int b1 : {1, -1})
            for (double e0 : single_triangle_spectrum(1.0, b0))
                for (double e1 : single_triangle_spectrum(1.0, b1)) expected.push_back(e0 + e1);
    CHECK(same_multiset(eigenvalues(build_lgt_hamiltonian(g, b, p)), expected, 1e-12));
}

TEST_CASE("field term respects transformed gauge sectors") {
    auto g = make_preset("tri1");
    auto b = enumerate_basis(g, SectorConstraint::one_boson());
    auto u = build_gauge_transform(g, b);
    EffectiveParams p;
    p.h_per_link = {{0, 0.3}, {1, 0.5}, {2, 0.7}};
    const auto transformed = u.conjugate(build_lgt_hamiltonian(g, b, p));
    for (int i = 0; i < 3; ++i) CHECK(commutator_norm(transformed, vertex_operator(g, b, i)) < 1e-13);
}

TEST_CASE("plaquette and vertex operators") {
    auto g = make_preset("tri3");
    auto b = enumerate_basis(g, SectorConstraint::one_boson());
    for (int n = 0; n < g.n_plaquettes(); ++n) {
        const auto bp = plaquette_operator(g, b, n);
        CHECK(difference_norm(bp * bp, identity_operator(b)) < 1e-14);
        for (int i = 0; i < g.n_super_sites(); ++i) CHECK(commutator_norm(bp, vertex_operator(g, b, i)) < 1e-14);
    }
    for (int i = 0; i < g.n_super_sites(); ++i) {
        const auto gv = vertex_operator(g, b, i);
        CHECK(difference_norm(gv * gv, identity_operator(b)) < 1e-14);
    }
    auto links = enumerate_link_basis(g, LinkBasis::TauZ);
    const auto bp0 = plaquette_operator(g, links, 0);
    Vector all_up = Vector::Zero(links->dim());
    all_up[0] = 1.0;
    CHECK(bp0.expectation(all_up).real() == 1.0);
    Vector flipped = Vector::Zero(links->dim());
    flipped[std::size_t{1} << links->bit_shift(g.plaquettes[0].links[1])] = 1.0;
    CHECK(bp0.expectation(flipped).real() == -1.0);
}

TEST_CASE("toric code ground state") {
    auto g1 = make_preset("tri1");
    auto tc1 = toric_code_ground_state(g1);
    CHECK(tc1.degeneracy() == 1);
    // brute force: equal weight over the tau^z configurations with B_P = +1
    Vector expected = Vector::Zero(8);
    for (int bits = 0; bits < 8; ++bits)
        if (__builtin_popcount(bits) % 2 == 0) expected[bits] = 0.5;
    CHECK((tc1.state() - expected).norm() < 1e-12);

    auto g3 = make_preset("tri3");
    auto tc3 = toric_code_ground_state(g3);
    CHECK(tc3.degeneracy() == 1);
    for (int n = 0; n < 3; ++n) CHECK(plaquette_operator(g3, tc3.basis, n).expectation(tc3.state()).real() == doctest::Approx(1.0).epsilon(1e-13));
    for (int i = 0; i < g3.n_super_sites(); ++i) {
        auto links_x = enumerate_link_basis(g3, LinkBasis::TauX);
        const Vector in_x = convert_state(tc3.state(), *tc3.basis, *links_x);
        CHECK(vertex_operator(g3, links_x, i).expectation(in_x).real() == doctest::Approx(1.0).epsilon(1e-13));
    }
    auto vison = toric_code_ground_state(g3, {1});
    CHECK(vison.degeneracy() == 1);
    CHECK(plaquette_operator(g3, vison.basis, 1).expectation(vison.state()).real() == doctest::Approx(-1.0).epsilon(1e-13));
    CHECK(plaquette_operator(g3, vison.basis, 0).expectation(vison.state()).real() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK_THROWS_AS(toric_code_ground_state(g3, {}, std::vector<int>{-1, 1, 1, 1, 1}), SchemaError);
}

TEST_CASE("lab-frame eigenstate of the h=0 model") {
    auto g = make_preset("tri3");
    auto b = enumerate_basis(g, SectorConstraint::one_boson());
    auto tc = toric_code_ground_state(g);
    const Vector psi = lab_frame_eigenstate(g, b, tc.state());
    CHECK(psi.norm() == doctest::Approx(1.0));
    EffectiveParams p;
    const auto h = build_lgt_hamiltonian(g, b, p);
    const Vector hpsi = h.apply(psi);
    CHECK((hpsi + 6.0 * psi).norm() < 1e-12);
    for (int i = 0; i < g.n_super_sites(); ++i) {
        const double sign = g.super_sites[i].n_plaquettes % 2 == 0 ? 1.0 : -1.0;
        CHECK(gauss_operator(g, b, i).expectation(psi).real() == doctest::Approx(sign).epsilon(1e-12));
    }
}
