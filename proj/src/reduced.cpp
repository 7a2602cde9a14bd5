#include "z2lgt/reduced.hpp"

#include <algorithm>
#include <cmath>

#include "z2lgt/effective.hpp"
#include "z2lgt/errors.hpp"
#include "z2lgt/linalg.hpp"

namespace z2lgt {

ReducedBlock::ReducedBlock(double t_, double t_tilde_, double h_, double block_offset_, std::vector<int> gauss_values_)
    : t(t_), t_tilde(t_tilde_), h(h_), block_offset(block_offset_), gauss_values(std::move(gauss_values_)) {
    if (!(t > 0.0)) throw SchemaError("ReducedBlock: t must be positive");
    if (gauss_values.size() != 3) throw SchemaError("ReducedBlock: need three Gauss values");
    const auto plaquette = make_preset("tri1");
    // all one-boson states with tau^x link values, then keep those with the requested Gauss values
    const auto full = enumerate_basis(plaquette, SectorConstraint::one_boson(), 1, LinkBasis::TauX);
    std::vector<SparseOperator> gauss;
    for (int i = 0; i < 3; ++i) gauss.push_back(gauss_operator(plaquette, full, i));
    std::vector<Eigen::Index> kept;
    for (std::size_t k = 0; k < full->dim(); ++k) {
        bool in_sector = true;
        for (int i = 0; i < 3 && in_sector; ++i) {
            const auto ki = static_cast<Eigen::Index>(k);
            in_sector = std::abs(gauss[i].matrix.coeff(ki, ki) - cplx(gauss_values[i])) < 1e-12;
        }
        if (in_sector) kept.push_back(static_cast<Eigen::Index>(k));
    }
    if (kept.size() != 6) throw DomainError("ReducedBlock: Gauss sector has " + std::to_string(kept.size()) + " states, expected 6");

    EffectiveParams p;
    p.t = t;
    const int bulk_bond = plaquette.plaquettes[0].links[0];
    p.t_tilde_per_link[bulk_bond] = t;
    for (int k : {1, 2}) {
        const int edge = plaquette.plaquettes[0].links[k];
        p.t_tilde_per_link[edge] = t_tilde;
        p.h_per_link[edge] = h;
    }
    const DenseMatrix hf = build_lgt_hamiltonian(plaquette, full, p).dense();
    matrix.resize(6, 6);
    for (int r = 0; r < 6; ++r) {
        labels.push_back(full->label(static_cast<std::size_t>(kept[r])));
        for (int c = 0; c < 6; ++c) matrix(r, c) = hf(kept[r], kept[c]);
    }
}

std::vector<double> ReducedBlock::eigenvalues() const { return hermitian_eigenvalues(matrix); }

std::vector<double> ReducedBlock::combined_spectrum() const {
    auto e = eigenvalues();
    const std::size_t n = e.size();
    for (std::size_t k = 0; k < n; ++k) e.push_back(e[k] + block_offset);
    std::sort(e.begin(), e.end());
    return e;
}

double ReducedBlock::gap() const { return many_body_gap(combined_spectrum(), 1e-9 * t); }

double reduced_gap(double t, double t_tilde, double h) { return ReducedBlock(t, t_tilde, h, t).gap(); }

ReducedComparison reduced_vs_full(const LatticeGeometry& geom_2plaquette, const std::vector<double>& t_tilde_grid,
                                  const std::vector<double>& h_grid, double t, int threads) {
    if (geom_2plaquette.n_plaquettes() != 2) throw SchemaError("reduced_vs_full: expects a two-plaquette geometry");
    const auto plan = make_growing_plan(geom_2plaquette, GrowingVariant::Ground, t, t);
    ReducedComparison out;
    out.full = gap_scan(plan, 1, t_tilde_grid, h_grid, threads);
    out.reduced.resize(out.full.size());
    parallel_for(out.full.size(), threads, [&](std::size_t k) {
        const auto& f = out.full[k];
        out.reduced[k] = {f.t_tilde, f.h, reduced_gap(t, f.t_tilde, f.h)};
    });
    for (std::size_t k = 0; k < out.full.size(); ++k)
        out.max_deviation = std::max(out.max_deviation, std::abs(out.full[k].gap - out.reduced[k].gap));
    return out;
}

}  // namespace z2lgt
