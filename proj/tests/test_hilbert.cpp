#include <random>

#include "doctest.h"
#include "z2lgt/effective.hpp"
#include "z2lgt/errors.hpp"
#include "z2lgt/hilbert.hpp"

using namespace z2lgt;

namespace {

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

DenseMatrix kron_all(const std::vector<DenseMatrix>& factors) {
    DenseMatrix out = DenseMatrix::Identity(1, 1);
    for (const auto& f : factors) out = kron(out, f);
    return out;
}

DenseMatrix pauli_x() {
    DenseMatrix m = DenseMatrix::Zero(2, 2);
    m(0, 1) = m(1, 0) = 1.0;
    return m;
}

DenseMatrix pauli_z() {
    DenseMatrix m = DenseMatrix::Zero(2, 2);
    m(0, 0) = 1.0;
    m(1, 1) = -1.0;
    return m;
}

DenseMatrix lowering(int levels) {
    DenseMatrix m = DenseMatrix::Zero(levels, levels);
    for (int n = 1; n < levels; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n));
    return m;
}

BasisPtr single_link_basis() {
    auto b = std::make_shared<BasisSet>();
    b->link_ids = {0};
    b->push_back(nullptr, 0);
    b->push_back(nullptr, 1);
    return b;
}

}  // namespace

TEST_CASE("basis dimensions") {
    auto g1 = make_preset("tri1");
    CHECK(enumerate_basis(g1, SectorConstraint::one_boson())->dim() == 24);
    auto g3 = make_preset("tri3");
    CHECK(enumerate_basis(g3, SectorConstraint::one_boson())->dim() == 3456);
    CHECK(enumerate_basis(g3, SectorConstraint::gauss_sector(g3.toric_gauss_values()))->dim() == 216);
    CHECK(enumerate_oscillator_basis(9, 3)->dim() == 19683);
    CHECK_THROWS_AS(enumerate_basis(g1, SectorConstraint::one_boson(), 0), SchemaError);
    CHECK_THROWS_AS(enumerate_oscillator_basis(2, 2, 7), SchemaError);
}

TEST_CASE("index round trip and lexicographic order") {
    auto g = make_preset("tri2");
    auto b = enumerate_basis(g, SectorConstraint::one_boson());
    for (std::size_t k = 0; k < b->dim(); ++k) CHECK(b->index(k) == k);
    for (std::size_t k = 1; k < b->dim(); ++k) {
        const auto* prev = b->occupations(k - 1);
        const auto* cur = b->occupations(k);
        const bool occ_less = std::lexicographical_compare(prev, prev + b->n_modes(), cur, cur + b->n_modes());
        const bool occ_equal = std::equal(prev, prev + b->n_modes(), cur);
        CHECK((occ_less || (occ_equal && b->link_bits(k - 1) < b->link_bits(k))));
    }
}

TEST_CASE("gauss sector dimension agrees with brute-force projection") {
    for (auto name : {"tri1", "tri2"}) {
        auto g = make_preset(name);
        auto full = enumerate_basis(g, SectorConstraint::one_boson());
        const auto values = g.toric_gauss_values();
        DenseMatrix projector = DenseMatrix::Identity(full->dim(), full->dim());
        for (int i = 0; i < g.n_super_sites(); ++i) {
            DenseMatrix gi = gauss_operator(g, full, i).dense();
            projector = projector * (DenseMatrix::Identity(full->dim(), full->dim()) + values[i] * gi) * 0.5;
        }
        const double brute = projector.trace().real();
        const auto sector = enumerate_basis(g, SectorConstraint::gauss_sector(values));
        CHECK(static_cast<double>(sector->dim()) == doctest::Approx(brute).epsilon(1e-12));
    }
    CHECK(enumerate_basis(make_preset("tri1"), SectorConstraint::gauss_sector({-1, -1, -1}))->dim() == 6);
}

TEST_CASE("elementary operators") {
    auto b = single_link_basis();
    CHECK((build_operator(b, {{1.0, {tau_x(0)}}}).dense() - pauli_x()).norm() == 0.0);
    CHECK((build_operator(b, {{1.0, {tau_z(0)}}}).dense() - pauli_z()).norm() == 0.0);

    auto osc = enumerate_oscillator_basis(1, 3);
    DenseMatrix n = build_operator(osc, {{1.0, {create(0), annihilate(0)}}}).dense();
    DenseMatrix expected = DenseMatrix::Zero(3, 3);
    expected.diagonal() << 0.0, 1.0, 2.0;
    CHECK((n - expected).norm() < 1e-15);
    CHECK_THROWS_AS(build_operator(osc, {{1.0, {create(5)}}}), SchemaError);
    CHECK_THROWS_AS(build_operator(osc, {{1.0, {tau_x(0)}}}), SchemaError);
}

TEST_CASE("link basis change swaps the roles of tau^x and tau^z") {
    auto b = std::make_shared<BasisSet>();
    b->link_ids = {0};
    b->link_basis = LinkBasis::TauX;
    b->push_back(nullptr, 0);
    b->push_back(nullptr, 1);
    CHECK((build_operator(b, {{1.0, {tau_z(0)}}}).dense() - pauli_x()).norm() == 0.0);
    CHECK((build_operator(b, {{1.0, {tau_x(0)}}}).dense() - pauli_z()).norm() == 0.0);
}

TEST_CASE("hopping term matches a dense Kronecker-product oracle") {
    auto g = make_preset("tri1");
    auto b = enumerate_basis(g, SectorConstraint::none());  // 2^3 occupations x 2^3 links
    REQUIRE(b->dim() == 64);
    const DenseMatrix id2 = DenseMatrix::Identity(2, 2);
    const DenseMatrix a = lowering(2);
    const DenseMatrix adag = a.adjoint();
    // modes 0,1,2 then links 0,1,2, most significant first
    const DenseMatrix oracle = kron_all({adag, id2, id2, id2, id2, id2}) * kron_all({id2, id2, id2, pauli_z(), id2, id2}) *
                               kron_all({id2, a, id2, id2, id2, id2});
    const DenseMatrix built = build_operator(b, {{1.0, {create(0), tau_z(0), annihilate(1)}}}).dense();
    CHECK((built - oracle).norm() < 1e-14);

    const DenseMatrix oracle_x = kron_all({id2, id2, id2, id2, pauli_x(), id2});
    CHECK((build_operator(b, {{1.0, {tau_x(1)}}}).dense() - oracle_x).norm() < 1e-14);
}

TEST_CASE("sector operators equal projections of unconstrained operators") {
    auto g = make_preset("tri1");
    auto full = enumerate_basis(g, SectorConstraint::none());
    auto sector = enumerate_basis(g, SectorConstraint::one_boson());
    EffectiveParams p;
    p.t = 0.7;
    p.t_tilde_per_link = {{1, 0.3}};
    p.h_per_link = {{0, 0.4}, {2, -0.9}};
    const DenseMatrix hf = build_lgt_hamiltonian(g, full, p).dense();
    const SparseOperator hs = build_lgt_hamiltonian(g, sector, p);
    CHECK(hs.dropped_norm == 0.0);
    std::vector<Eigen::Index> rows;
    for (std::size_t k = 0; k < sector->dim(); ++k) rows.push_back(static_cast<Eigen::Index>(*full->find(sector->occupations(k), sector->link_bits(k))));
    DenseMatrix projected(rows.size(), rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows.size(); ++c) projected(r, c) = hf(rows[r], rows[c]);
    CHECK((hs.dense() - projected).norm() < 1e-14);

    // a term that leaves the one-boson sector is dropped and audited
    const SparseOperator leaving = build_operator(sector, {{1.0, {create(0)}}});
    CHECK(leaving.matrix.nonZeros() == 0);
    CHECK(leaving.dropped_norm > 0.0);
}

TEST_CASE("adjoint of generated term lists") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> kind(0, 5), site(0, 2), link(0, 2), length(1, 4);
    std::normal_distribution<double> coef;
    auto g = make_preset("tri1");
    auto b = enumerate_basis(g, SectorConstraint::none(), 2);
    for (int trial = 0; trial < 20; ++trial) {
        TermList terms;
        for (int k = 0; k < 3; ++k) {
            Term t{{coef(rng), coef(rng)}, {}};
            const int len = length(rng);
            for (int f = 0; f < len; ++f) {
                const auto kd = static_cast<OpKind>(kind(rng));
                const bool on_link = kd == OpKind::TauX || kd == OpKind::TauZ;
                t.factors.push_back({kd, on_link ? link(rng) : site(rng)});
            }
            terms.push_back(t);
        }
        const auto a = build_operator(b, terms);
        const auto adag = build_operator(b, adjoint(terms));
        CHECK(difference_norm(a.adjoint(), adag) < 1e-12);
    }
}

TEST_CASE("partial trace over matter") {
    auto g = make_preset("tri1");
    auto b = enumerate_basis(g, SectorConstraint::one_boson());
    Vector links = Vector::Zero(8);
    links[0] = 0.6;
    links[5] = cplx(0.0, 0.8);
    std::vector<std::array<cplx, 3>> matter = {{cplx(0.6), cplx(0.0, 0.8), cplx(0.0)}};
    const Vector psi = product_state(g, *b, matter, links);
    CHECK(psi.norm() == doctest::Approx(1.0));
    const DenseMatrix rho = partial_trace_matter(psi, *b);
    CHECK((rho - links * links.adjoint()).norm() < 1e-14);

    const DenseMatrix rho_from_density = partial_trace_matter(DenseMatrix(psi * psi.adjoint()), *b);
    CHECK((rho_from_density - rho).norm() < 1e-14);

    auto toy = std::make_shared<BasisSet>();
    toy->mode_labels = {0};
    toy->max_occupation = {1};
    toy->link_ids = {0};
    const std::uint8_t zero = 0, one = 1;
    toy->push_back(&zero, 0);
    toy->push_back(&zero, 1);
    toy->push_back(&one, 0);
    toy->push_back(&one, 1);
    Vector bell = Vector::Zero(4);
    bell[0] = bell[3] = 1.0 / std::sqrt(2.0);
    CHECK((partial_trace_matter(bell, *toy) - 0.5 * DenseMatrix::Identity(2, 2)).norm() < 1e-15);
    CHECK_THROWS_AS(partial_trace_matter(Vector(2.0 * bell), *toy), DomainError);
}

TEST_CASE("state conversion between link bases") {
    auto g = make_preset("tri2");
    auto z = enumerate_basis(g, SectorConstraint::one_boson());
    auto x = enumerate_basis(g, SectorConstraint::one_boson(), 1, LinkBasis::TauX);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    Vector psi(z->dim());
    for (auto& v : psi) v = cplx(n(rng), n(rng));
    psi.normalize();
    double lost = 1.0;
    const Vector in_x = convert_state(psi, *z, *x, &lost);
    CHECK(lost < 1e-12);
    CHECK((convert_state(in_x, *x, *z) - psi).norm() < 1e-12);
    const auto hz = build_operator(z, {{1.0, {tau_x(2), tau_z(0)}}});
    const auto hx = build_operator(x, {{1.0, {tau_x(2), tau_z(0)}}});
    CHECK(std::abs(hz.expectation(psi) - hx.expectation(in_x)) < 1e-12);
}
