#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "z2lgt/effective.hpp"
#include "z2lgt/errors.hpp"
#include "z2lgt/linalg.hpp"
#include "z2lgt/microscopic.hpp"

using namespace z2lgt;

namespace {

/** Energy of the eigenstate with the largest overlap onto `probe`. */
double matching_energy(const Eigen::SelfAdjointEigenSolver<DenseMatrix>& es, const Vector& probe) {
    const Vector overlaps = es.eigenvectors().adjoint() * probe;
    Eigen::Index best = 0;
    overlaps.cwiseAbs2().maxCoeff(&best);
    return es.eigenvalues()[best];
}

std::vector<BlockParams> triangle_blocks(const FineTuneSolution& ft) {
    std::vector<BlockParams> blocks;
    for (std::size_t k = 0; k < ft.g.size(); ++k) {
        BlockParams b;
        b.g = ft.g[k];
        b.delta = ft.delta[k];
        b.beta = ft.beta[k];
        blocks.push_back(b);
    }
    return blocks;
}

}  // namespace

TEST_CASE("effective coupling formulas") {
    CHECK(effective_coupling(1.0, 2.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(effective_coupling(1.0, 10.0, 2.0) == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(effective_coupling(0.7, 5.0, 0.0) == 0.0);
    CHECK_THROWS_AS(effective_coupling(1.0, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(effective_coupling(1.0, 2.0, 2.0), DomainError);
    // the two forms have equal magnitude once the anharmonicity changes sign
    for (double beta : {0.3, 1.7, -2.5})
        CHECK(effective_coupling_main_text(0.8, 7.0, beta) == doctest::Approx(-effective_coupling(0.8, 7.0, -beta)).epsilon(1e-13));
}

TEST_CASE("fine tuning of the triangle") {
    const auto ft = fine_tune_triangle(0.02, {10.0, 11.0, 12.0});
    CHECK(ft.beta[0] == doctest::Approx(2.0 / 2.2).epsilon(1e-13));
    CHECK(ft.g[0] == doctest::Approx(1.0).epsilon(1e-15));
    for (int k = 0; k < 3; ++k) {
        CHECK(std::abs(effective_coupling(ft.g[k], ft.delta[k], ft.beta[k]) - 0.02) < 1e-12 * 0.02);
        // equal dispersive shifts: beta / Delta is link independent
        CHECK(ft.beta[k] / ft.delta[k] == doctest::Approx(ft.beta[0] / ft.delta[0]).epsilon(1e-13));
    }
    const auto sym = fine_tune_triangle(0.05, {8.0, 8.0, 8.0});
    CHECK(sym.g[1] == doctest::Approx(sym.g[0]).epsilon(1e-15));
    CHECK(sym.g[2] == doctest::Approx(sym.g[0]).epsilon(1e-15));
    CHECK(sym.beta[2] == doctest::Approx(sym.beta[0]).epsilon(1e-15));
    CHECK_THROWS_AS(fine_tune_triangle(0.02, {-150.0, 10.0, 10.0}), DomainError);
}

TEST_CASE("coupler leakage rates") {
    CHECK(coupler_leakage(10.0, 1.0, 1.0) == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(coupler_leakage(10.0, 1e12, 1.0) < 1e-13);
    CHECK_THROWS_AS(coupler_leakage(10.0, 0.0, 1.0), DomainError);
    CHECK(resonant_coupler_rate(10.0, 1.0) == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("uncoupled block has the bare spectrum") {
    BlockParams p;
    p.g = 0.0;
    p.delta = 3.0;
    p.beta = 0.5;
    const auto layout = single_block_layout(p, 0.0, 2.0);
    const auto basis = microscopic_basis(layout, 3);
    const auto h = build_microscopic_hamiltonian(layout, basis);
    std::vector<double> bare;
    for (std::size_t k = 0; k < basis->dim(); ++k) {
        double e = 0.0;
        for (int m = 0; m < basis->n_modes(); ++m) {
            const auto& osc = layout.oscillators[basis->mode_labels[m]];
            const int n = basis->occupations(k)[m];
            e += osc.frequency * n - 0.5 * osc.anharmonicity * n * (n - 1);
        }
        bare.push_back(e);
    }
    std::sort(bare.begin(), bare.end());
    const auto spec = hermitian_eigenvalues(h.dense());
    REQUIRE(spec.size() == bare.size());
    for (std::size_t k = 0; k < spec.size(); ++k) CHECK(spec[k] == doctest::Approx(bare[k]).epsilon(1e-12));
    CHECK((h.dense() - h.dense().adjoint()).norm() < 1e-14);
}

TEST_CASE("layouts validate and reject bad input") {
    BlockParams p;
    CHECK_THROWS_AS(microscopic_basis(single_block_layout(p), 2), SchemaError);
    CHECK_NOTHROW(merged_chain_layout(p, p).validate());
    CHECK_NOTHROW(double_link_layout(p, 0.8, 3.0).validate());
    const auto tri = full_triangle_layout({p, p, p});
    CHECK(tri.matter_modes().size() == 3);
    CHECK(tri.links.size() == 3);
    // exactly one sign-reversed leg per block
    int negative = 0, positive_g = 0;
    for (const auto& c : single_block_layout(p).couplings) {
        if (c.amplitude == p.g) ++positive_g;
        if (c.amplitude == -p.g) ++negative;
    }
    CHECK(negative == 3);
    CHECK(positive_g == 1);
}

TEST_CASE("Gauss-law observables of the triangle initial state") {
    const auto ft = fine_tune_triangle(0.02, {100.0, 101.0, 102.0});
    const auto layout = full_triangle_layout(triangle_blocks(ft));
    const auto basis = microscopic_basis(layout, 3, 4);
    CHECK(basis->dim() == 414);
    const auto psi = microscopic_product_state(layout, *basis, {1, 0, 0}, {{'x', 1}, {'x', 1}, {'x', 1}});
    const auto gauss = gauss_law_observables(layout, basis);
    REQUIRE(gauss.size() == 3);
    CHECK(gauss[0].expectation(psi).real() == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(gauss[1].expectation(psi).real() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(gauss[2].expectation(psi).real() == doctest::Approx(1.0).epsilon(1e-14));

    // G^2 projects onto one excitation per attached coupler pair
    const auto matter = layout.matter_modes();
    for (std::size_t i = 0; i < gauss.size(); ++i) {
        DenseMatrix projector = DenseMatrix::Identity(basis->dim(), basis->dim());
        for (std::size_t k = 0; k < basis->dim(); ++k) {
            for (const auto& l : layout.links) {
                if (std::find(l.matter.begin(), l.matter.end(), matter[i]) == l.matter.end()) continue;
                const int n = basis->occupations(k)[basis->mode_position(l.c)] + basis->occupations(k)[basis->mode_position(l.d)];
                if (n != 1) projector(k, k) = 0.0;
            }
        }
        const DenseMatrix gd = gauss[i].dense();
        CHECK((gd * gd - projector).norm() < 1e-13);
        CHECK((gd - gd.adjoint()).norm() < 1e-14);
    }
}

TEST_CASE("dressed preparation keeps Gauss laws and follows the effective model") {
    const auto ft = fine_tune_triangle(0.02, {200.0, 201.0, 202.0});
    const auto layout = full_triangle_layout(triangle_blocks(ft));
    const auto basis = microscopic_basis(layout, 3, 4);
    const auto bare = microscopic_product_state(layout, *basis, {1, 0, 0}, {{'x', 1}, {'x', 1}, {'x', 1}});
    const auto psi = dress_low_energy_state(layout, basis, bare);
    CHECK(std::abs(psi.norm() - 1.0) < 1e-12);
    CHECK(std::norm(bare.dot(psi)) > 0.99);

    const auto trace = evolve_microscopic(layout, basis, psi, linspace(0.0, 1000.0, 2001));
    double drift = 0.0;
    for (const auto& g : trace.gauss)
        for (int i = 0; i < 3; ++i) drift = std::max(drift, std::abs(g[i] - trace.gauss[0][i]));
    CHECK(drift < 1e-3);

    // effective three-site ring with the same hopping
    const auto geom = make_preset("tri1");
    const auto eb = enumerate_basis(geom, SectorConstraint::one_boson());
    EffectiveParams params;
    params.t = 0.02;
    const auto h = build_lgt_hamiltonian(geom, eb, params);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.dense());
    const Vector links = Vector::Constant(8, 1.0 / std::sqrt(8.0));
    const Vector e0 = product_state(geom, *eb, {{1.0, 0.0, 0.0}}, links);
    const auto times = linspace(0.0, 2.0 * M_PI / (3.0 * 0.02), 101);
    const auto micro = evolve_microscopic(layout, basis, psi, times);
    const Vector c0 = es.eigenvectors().adjoint() * e0;
    double worst = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        Vector c = c0;
        for (Eigen::Index k = 0; k < c.size(); ++k) c[k] *= std::exp(cplx(0.0, -es.eigenvalues()[k] * times[i]));
        const Vector st = es.eigenvectors() * c;
        for (int s = 0; s < 3; ++s) {
            const int pos = eb->mode_position(geom.sites[s].id);
            double n = 0.0;
            for (std::size_t k = 0; k < eb->dim(); ++k) n += std::norm(st[k]) * eb->occupations(k)[pos];
            worst = std::max(worst, std::abs(n - micro.occupations[i][s]));
        }
    }
    CHECK(worst < 0.05);
    Vector outside = Vector::Zero(basis->dim());
    for (std::size_t k = 0; k < basis->dim(); ++k) {
        const auto& l = layout.links[0];
        if (basis->occupations(k)[basis->mode_position(l.c)] == 2) {
            outside[k] = 1.0;
            break;
        }
    }
    CHECK_THROWS_AS(dress_low_energy_state(layout, basis, outside), DomainError);
}

TEST_CASE("spectroscopic hopping matches second order") {
    for (double ratio : {0.02, 0.05, 0.1}) {
        BlockParams p;
        p.g = 1.0;
        p.delta = 1.0 / ratio;
        p.beta = -2.0 * p.delta;
        const auto r = spectroscopy_single_block(p);
        CHECK(std::abs(r.t_fit / std::abs(r.t_appendix) - 1.0) < 0.05);
        CHECK(std::abs(r.t_splitting / std::abs(r.t_appendix) - 1.0) < 0.05);
        CHECK(r.fit_residual < 0.05);
    }
    // at g/Delta = 0.02 the main-text sign convention is far off while the appendix form is not
    BlockParams p;
    p.g = 1.0;
    p.delta = 50.0;
    p.beta = 25.0;
    const auto r = spectroscopy_single_block(p);
    CHECK(std::abs(r.t_fit / std::abs(r.t_appendix) - 1.0) < 0.02);
    CHECK(std::abs(r.t_fit / std::abs(r.t_main_text) - 1.0) > 0.5);
}

TEST_CASE("hopping amplitude changes sign with the link state") {
    BlockParams p;
    p.g = 0.5;
    p.delta = 10.0;
    p.beta = 2.0;
    const auto layout = single_block_layout(p);
    const auto basis = microscopic_basis(layout, 3, 2);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(build_microscopic_hamiltonian(layout, basis).dense());
    const double t = effective_coupling(p.g, p.delta, p.beta);
    double splitting[2];
    int idx = 0;
    for (int tz : {1, -1}) {
        const Vector a = microscopic_product_state(layout, *basis, {1, 0}, {{'z', tz}});
        const Vector b = microscopic_product_state(layout, *basis, {0, 1}, {{'z', tz}});
        const double even = matching_energy(es, (a + b) / std::sqrt(2.0));
        const double odd = matching_energy(es, (a - b) / std::sqrt(2.0));
        splitting[idx++] = odd - even;
    }
    CHECK(splitting[0] == doctest::Approx(-splitting[1]).epsilon(1e-6));
    CHECK(std::abs(std::abs(splitting[0]) - 2.0 * std::abs(t)) < 0.05 * 2.0 * std::abs(t));
}

TEST_CASE("link flips need matter anharmonicity") {
    BlockParams p;
    p.g = 1.0;
    p.delta = 20.0;
    p.beta = 4.0;
    auto tau_z_drift = [&](double alpha) {
        const auto layout = single_block_layout(p, alpha);
        const auto basis = microscopic_basis(layout, 3, 2);
        const auto bare = microscopic_product_state(layout, *basis, {1, 0}, {{'z', 1}});
        const auto psi = dress_low_energy_state(layout, basis, bare);
        const auto trace = evolve_microscopic(layout, basis, psi, linspace(0.0, 2000.0, 4001));
        double drift = 0.0;
        for (const auto& z : trace.tau_z) drift = std::max(drift, std::abs(z[0] - trace.tau_z[0][0]));
        return drift;
    };
    CHECK(tau_z_drift(0.0) < 1e-3);
    CHECK(tau_z_drift(5.0) > 0.1);
}
