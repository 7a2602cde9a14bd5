#pragma once

#include <array>
#include <map>
#include <vector>

#include "z2lgt/hilbert.hpp"
#include "z2lgt/lattice.hpp"

namespace z2lgt {

/** Hopping t on every bond unless overridden per link; the electric term is -h tau^x per link
 *  (positive h favours tau^x = +1), zero unless listed. */
struct EffectiveParams {
    double t = 1.0;
    std::map<int, double> h_per_link;
    std::map<int, double> t_tilde_per_link;

    double hopping(int link) const;
    double field(int link) const;
};

/** Unit-amplitude pieces of the effective Hamiltonian, one per link:
 *  hopping[l] = -sum over bonds on l of (a_i^dag tau^z_l a_j + h.c.), field[l] = -tau^x_l. */
struct LgtComponents {
    std::vector<SparseOperator> hopping;
    std::vector<SparseOperator> field;

    SparseOperator assemble(const EffectiveParams& params) const;
    /** sum_l t_l hopping[l] + sum_l h_l field[l]. */
    SparseOperator assemble(const std::vector<double>& t_per_link, const std::vector<double>& h_per_link) const;
};

TermList link_hopping_terms(const LatticeGeometry& geom, int link);
TermList lgt_terms(const LatticeGeometry& geom, const EffectiveParams& params);

SparseOperator build_lgt_hamiltonian(const LatticeGeometry& geom, BasisPtr basis, const EffectiveParams& params);
LgtComponents build_lgt_components(const LatticeGeometry& geom, BasisPtr basis);

/** Diagonal unitary exp(i sum_j theta_j n_j) on a tau^z product basis. */
struct GaugeTransform {
    BasisPtr basis;
    Vector phases;

    Vector apply(const Vector& state) const { return phases.cwiseProduct(state); }
    Vector apply_adjoint(const Vector& state) const { return phases.conjugate().cwiseProduct(state); }
    SparseOperator as_operator() const;
    /** U^dag O U. */
    SparseOperator conjugate(const SparseOperator& op) const;
};

GaugeTransform build_gauge_transform(const LatticeGeometry& geom, BasisPtr basis);

/** prod tau^z around plaquette n. */
SparseOperator plaquette_operator(const LatticeGeometry& geom, BasisPtr basis, int plaquette);
/** prod tau^x over links incident to super-site i. */
SparseOperator vertex_operator(const LatticeGeometry& geom, BasisPtr basis, int super_site);
/** Gauss-law generator (-1)^{N_i} prod tau^x. */
SparseOperator gauss_operator(const LatticeGeometry& geom, BasisPtr basis, int super_site);
/** (-1)^{Delta n} tau^x on a link, counting only the directly attached matter sites. */
SparseOperator attached_parity_field(const LatticeGeometry& geom, BasisPtr basis, int link);

/** Ground manifold of -t sum_P s_P B_P on the links, where s_P = -1 on vison plaquettes, in the
 *  sector with the given vertex values (default all +1). Columns are expressed in the full
 *  tau^z link basis (index = link bits). */
struct ToricState {
    BasisPtr basis;        // link-only tau^z basis over all links
    DenseMatrix manifold;  // orthonormal columns
    Vector state() const { return manifold.col(0); }
    std::size_t degeneracy() const { return static_cast<std::size_t>(manifold.cols()); }
};

ToricState toric_code_ground_state(const LatticeGeometry& geom, const std::vector<int>& vison_plaquettes = {},
                                   const std::optional<std::vector<int>>& vertex_values = std::nullopt);

/** -2t cos(k + Phi), k in {0, 2pi/3, -2pi/3}, Phi = 0 (B_P = +1) or pi (B_P = -1); sorted. */
std::vector<double> single_triangle_spectrum(double t, int plaquette_sign);

/** prod_P matter_P (x) links, expressed in a tau^z one-boson basis. matter[p][k] is the amplitude
 *  of plaquette p's boson on its k-th site (counterclockwise order). */
Vector product_state(const LatticeGeometry& geom, const BasisSet& basis, const std::vector<std::array<cplx, 3>>& matter,
                     const Vector& links_z);

/** Lab-frame eigenstate U^dag (matter k=0 on every plaquette (x) links) of the h=0 model. */
Vector lab_frame_eigenstate(const LatticeGeometry& geom, BasisPtr basis_z, const Vector& links_z);

}  // namespace z2lgt
