#pragma once

#include <string>
#include <vector>

#include "z2lgt/hilbert.hpp"

namespace z2lgt {

enum class OscillatorRole { Matter, Coupler };

/** Energies in units of g, times in 1/g. */
struct OscillatorSpec {
    std::string name;
    OscillatorRole role = OscillatorRole::Matter;
    double frequency = 0.0;
    /** Enters as -anharmonicity/2 n(n-1); alpha on matter sites, beta on couplers. */
    double anharmonicity = 0.0;
};

/** amplitude (a^dag b + b^dag a) between oscillators a and b. */
struct CouplingSpec {
    int a = 0;
    int b = 0;
    double amplitude = 0.0;
};

/** A gauge link made of a coupler pair; tau^z = n_c - n_d. */
struct CouplerLink {
    int c = 0;
    int d = 0;
    std::vector<int> matter;  // matter oscillators whose Gauss law contains this link
};

struct MicroscopicLayout {
    std::string kind;
    std::vector<OscillatorSpec> oscillators;
    std::vector<CouplingSpec> couplings;
    std::vector<CouplerLink> links;

    std::vector<int> matter_modes() const;
    /** Throws SchemaError for dangling indices, matter anharmonicity where forbidden, etc. */
    void validate() const;
};

/** Parameters of one building block between two matter sites. */
struct BlockParams {
    double g = 1.0;
    double delta = 10.0;  // coupler detuning Delta
    double beta = 1.0;    // coupler anharmonicity
    double h = 0.0;       // coupler-coupler tunneling (electric term)
};

/** Matter A, B and couplers C, D with -g(A C + B C) - g(A D - B D) + h C D (each + h.c.).
 *  matter_anharmonicity should be 0 for gauge-theory use; other values probe the unwanted terms. */
MicroscopicLayout single_block_layout(const BlockParams& block, double matter_anharmonicity = 0.0, double omega = 0.0);

/** Matter sites A - A' - A'' joined by two building blocks (coupler offsets may differ). */
MicroscopicLayout merged_chain_layout(const BlockParams& first, const BlockParams& second, double omega = 0.0);

/** Two blocks (A, B) and (A', B') sharing one coupler pair; A', B' are offset by delta_tilde and
 *  couple with g_tilde. */
MicroscopicLayout double_link_layout(const BlockParams& block, double g_tilde, double delta_tilde, double omega = 0.0);

/** Matter sites 0, 1, 2 with building block k joining site k and site k+1 (mod 3). */
MicroscopicLayout full_triangle_layout(const std::vector<BlockParams>& blocks, double omega = 0.0);

/** Builds H = sum omega n - anh/2 n(n-1) + couplings on the given oscillator basis. */
SparseOperator build_microscopic_hamiltonian(const MicroscopicLayout& layout, BasisPtr basis);

/** Oscillator basis with `levels` states per mode, optionally fixed total excitations.
 *  levels < 3 is rejected because doubly occupied virtual states must be representable. */
BasisPtr microscopic_basis(const MicroscopicLayout& layout, int levels, std::optional<int> total_excitations = std::nullopt);

/** Appendix form 2 g^2 (1/(Delta - beta) - 1/Delta); DomainError at the poles. */
double effective_coupling(double g, double delta, double beta);
/** Main-text form 2 g^2 beta / (Delta^2 + Delta beta); equals minus the appendix form at -beta. */
double effective_coupling_main_text(double g, double delta, double beta);

struct FineTuneSolution {
    std::vector<double> g;
    std::vector<double> beta;
    std::vector<double> delta;
    double t_eff = 0.0;
};

/** Equal effective hopping and equal dispersive shifts on all links, g_1 = g. */
FineTuneSolution fine_tune_triangle(double t_eff, const std::vector<double>& deltas, double g = 1.0);

/** |g^4 / (Delta^2 delta)|; DomainError for delta = 0. */
double coupler_leakage(double delta_offset, double detuning, double g);
/** 2 g^2 / Delta, the coupler-coupler rate when the offsets are resonant. */
double resonant_coupler_rate(double delta_offset, double g);

/** P (c^dag d + d^dag c) P with P projecting onto n_c + n_d = 1. */
SparseOperator projected_tau_x(const MicroscopicLayout& layout, BasisPtr basis, int link);
SparseOperator microscopic_tau_z(const MicroscopicLayout& layout, BasisPtr basis, int link);
/** One Gauss-law operator (-1)^{n_j} prod tau^x per matter oscillator. */
std::vector<SparseOperator> gauss_law_observables(const MicroscopicLayout& layout, BasisPtr basis);

/** Product state with the given matter occupations and each coupler pair in a single-excitation
 *  state: tau_x = +-1 gives (|10> +- |01>)/sqrt2, tau_z = +-1 gives |10> or |01>. */
struct LinkPreparation {
    char axis = 'x';
    int value = 1;
};
Vector microscopic_product_state(const MicroscopicLayout& layout, const BasisSet& basis, const std::vector<int>& matter_occupations,
                                 const std::vector<LinkPreparation>& links);

/** Maps a state in the bare low-energy manifold (matter occupations <= 1, one excitation per
 *  coupler pair) onto the matching dressed eigenstates of the full Hamiltonian, using the
 *  unitary polar factor of their overlap. This is the state an adiabatic switch-on of the
 *  couplings would prepare. DomainError if the input has weight outside the manifold. */
Vector dress_low_energy_state(const MicroscopicLayout& layout, BasisPtr basis, const Vector& bare);

struct MicroscopicTrace {
    std::vector<double> times;
    std::vector<std::vector<double>> occupations;  // per time, per matter oscillator
    std::vector<std::vector<double>> gauss;        // per time, per matter oscillator
    std::vector<std::vector<double>> tau_x;        // per time, per link
    std::vector<std::vector<double>> tau_z;        // per time, per link
    std::vector<Vector> states;                    // filled when requested
};

/** Exact evolution of a static Hamiltonian via dense eigendecomposition. */
MicroscopicTrace evolve_microscopic(const MicroscopicLayout& layout, BasisPtr basis, const Vector& initial,
                                    const std::vector<double>& times, bool keep_states = false, int threads = 0);

struct SpectroscopyResult {
    double t_fit = 0.0;         // from a fit of <n_B>(t) to sin^2(t_eff t)
    double t_splitting = 0.0;   // half the splitting of the low-energy one-matter manifold
    double t_appendix = 0.0;
    double t_main_text = 0.0;
    double fit_residual = 0.0;  // rms
};

/** Single block, matter on A, couplers in the tau^z = +1 state. */
SpectroscopyResult spectroscopy_single_block(const BlockParams& block, int levels = 3, int n_samples = 400);

}  // namespace z2lgt
