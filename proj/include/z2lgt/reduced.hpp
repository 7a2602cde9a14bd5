#pragma once

#include <string>
#include <vector>

#include "z2lgt/dynamics.hpp"
#include "z2lgt/hilbert.hpp"

namespace z2lgt {

/** Boundary plaquette of a growing step written in the reduced basis: one bond at full hopping t
 *  towards the grown bulk, two edge bonds with hopping t_tilde and field h. The six states are the
 *  Gauss-sector states of one plaquette (boson position x edge-link configuration). */
struct ReducedBlock {
    double t = 1.0;
    double t_tilde = 0.0;
    double h = 0.0;
    /** Energy of the next bulk level above the bulk ground state. */
    double block_offset = 1.0;
    /** Gauss values at the plaquette's three vertices (bulk-side pair first, then the apex). */
    std::vector<int> gauss_values{-1, -1, -1};

    DenseMatrix matrix;
    std::vector<std::string> labels;

    ReducedBlock(double t, double t_tilde, double h, double block_offset, std::vector<int> gauss_values = {-1, -1, -1});

    std::vector<double> eigenvalues() const;
    /** Block spectrum joined with the copy shifted by block_offset. */
    std::vector<double> combined_spectrum() const;
    double gap() const;
};

/** Gap of the lowest block pair with offset t, degenerate manifold tolerance 1e-9 t. */
double reduced_gap(double t, double t_tilde, double h);

struct ReducedComparison {
    std::vector<GapPoint> reduced;
    std::vector<GapPoint> full;
    double max_deviation = 0.0;
};

/** Compares reduced and full-ED gaps for growing the second plaquette of a two-plaquette chain. */
ReducedComparison reduced_vs_full(const LatticeGeometry& geom_2plaquette, const std::vector<double>& t_tilde_grid,
                                  const std::vector<double>& h_grid, double t = 1.0, int threads = 0);

}  // namespace z2lgt
