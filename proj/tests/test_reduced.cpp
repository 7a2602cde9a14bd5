#include <cmath>
#include <random>

#include "doctest.h"
#include "z2lgt/errors.hpp"
#include "z2lgt/reduced.hpp"

using namespace z2lgt;

TEST_CASE("reduced block has six labelled states and the expected couplings") {
    const ReducedBlock b(1.0, 0.4, 0.3, 1.0);
    CHECK(b.matrix.rows() == 6);
    CHECK(b.labels.size() == 6);
    CHECK((b.matrix - b.matrix.adjoint()).norm() < 1e-15);
    // diagonal entries are +-h per edge link, off-diagonals are the three hoppings
    std::vector<double> offdiag;
    for (int r = 0; r < 6; ++r)
        for (int c = r + 1; c < 6; ++c)
            if (std::abs(b.matrix(r, c)) > 1e-14) offdiag.push_back(std::abs(b.matrix(r, c)));
    std::sort(offdiag.begin(), offdiag.end());
    CHECK(offdiag == std::vector<double>{0.4, 0.4, 0.4, 0.4, 1.0, 1.0});
    for (int r = 0; r < 6; ++r) {
        const double d = b.matrix(r, r).real();
        CHECK((std::abs(d) < 1e-14 || std::abs(std::abs(d) - 0.6) < 1e-14));
    }
    CHECK_THROWS_AS(ReducedBlock(1.0, 0.0, 0.0, 1.0, {-1, -1, 1}), DomainError);
    CHECK_THROWS_AS(ReducedBlock(0.0, 0.0, 0.0, 1.0), SchemaError);
}

TEST_CASE("reduced gap at the path corners") {
    CHECK(reduced_gap(1.0, 1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    // trivial corner: h field splits the edge links, hopping on the bulk bond pairs the rest
    const ReducedBlock corner(1.0, 0.0, 0.5, 1.0);
    auto e = corner.eigenvalues();
    std::vector<double> expected{-1.0, -1.0, 1.0, 1.0, -1.0, 1.0};
    std::sort(expected.begin(), expected.end());
    for (std::size_t k = 0; k < e.size(); ++k) CHECK(e[k] == doctest::Approx(expected[k]).epsilon(1e-12));
    // degenerate ground manifold at t_tilde = h = 0
    CHECK(reduced_gap(1.0, 0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (double s : linspace(0.0, 2.0, 41)) {
        const double tt = s <= 1.0 ? s : 1.0;
        const double hh = s <= 1.0 ? 1.0 : 2.0 - s;
        CHECK(std::abs(reduced_gap(1.0, tt, hh) - 1.0) < 1e-10);
    }
}

TEST_CASE("reduced gap equals two-plaquette full ED") {
    const auto grid = linspace(0.0, 1.0, 6);
    const auto cmp = reduced_vs_full(make_preset("tri2"), grid, grid, 1.0, 2);
    CHECK(cmp.full.size() == 36);
    CHECK(cmp.max_deviation < 1e-8);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double tt = u(rng), hh = u(rng);
    const auto point = reduced_vs_full(make_preset("tri2"), {tt}, {hh}, 1.0, 1);
    CHECK(point.max_deviation < 1e-8);
    CHECK_THROWS_AS(reduced_vs_full(make_preset("tri3"), grid, grid), SchemaError);
}

TEST_CASE("bulk ring decouples from the growing operators") {
    auto g = make_preset("tri2");
    auto basis = enumerate_basis(g, SectorConstraint::one_boson());
    const auto plan = make_growing_plan(g);
    const auto h = build_lgt_hamiltonian(g, basis, growing_step_params(plan, 1, 0.37, 0.61));
    // ring hopping of the grown plaquette, including its bond on the shared link
    TermList ring;
    for (int l : g.plaquettes[0].links)
        for (const auto& term : link_hopping_terms(g, l)) {
            const int site = term.factors.front().target;
            if (g.sites[site].plaquette == 0) ring.push_back(term);
        }
    const auto bulk = build_operator(basis, ring);
    CHECK(commutator_norm(bulk, h) < 1e-12);
}

TEST_CASE("third growing step of the three-plaquette chain") {
    const auto plan = make_growing_plan(make_preset("tri3"));
    const auto full = gap_scan(plan, 2, {0.0, 0.3, 0.8}, {0.0, 0.5, 1.0}, 2);
    for (const auto& p : full) CHECK(std::abs(ReducedBlock(1.0, p.t_tilde, p.h, 1.0).gap() - p.gap) < 1e-8);
}
