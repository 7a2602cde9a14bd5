#pragma once

#include <array>
#include <complex>
#include <vector>

#include "z2lgt/hilbert.hpp"
#include "z2lgt/lattice.hpp"

namespace z2lgt {

/** Links of the minimal braiding loop. The e pair sits on pair_link; the mobile charge moves
 *  along path_control0 when the control qubit is |0> and along path_control1 when it is |1>. */
struct BraidingPaths {
    int pair_link = 0;
    std::array<int, 2> path_control0{};
    std::array<int, 2> path_control1{};
};

/** Three-plaquette strip: pair on (v0, v1), paths (v1, v3), (v3, v4) and (v1, v2), (v2, v4). */
BraidingPaths default_braiding_paths(const LatticeGeometry& geom);

/** Applies tau^z on the link (basis must be a tau^z basis). */
Vector create_e_pair(const Vector& state, const BasisSet& basis, int link);

/** Rectangular pulses; a pulse of area A on link l acts as exp(-i (A/2) tau^z_l), so area pi
 *  flips the link. Slot 1 drives path links [0] of both branches, slot 2 links [1]. */
struct RamseyConfig {
    BraidingPaths paths;
    std::array<double, 4> pulse_areas{M_PI, M_PI, M_PI, M_PI};  // lambda_1..lambda_4
    double pulse_duration = 1.0;                                  // per slot
    /** Optional static Hamiltonian on the same basis, evolved together with the pulses. */
    const SparseOperator* free_hamiltonian = nullptr;
    int threads = 0;
};

/** Coherence <psi_1|psi_0> between the two branches after the pulses, i.e. twice the
 *  off-diagonal element of the control-qubit density matrix. */
std::complex<double> braiding_coherence(const RamseyConfig& config, const Vector& state, const BasisSet& basis);

/** P(|1>) after R_z(phi) then R_y(pi/2) on the control qubit with the given coherence. */
double ramsey_p1(std::complex<double> coherence, double phi);

struct RamseyFringe {
    std::vector<double> phi;
    std::vector<double> p1;
    std::complex<double> coherence;
    double contrast() const { return std::abs(coherence); }
    double phase() const { return std::arg(coherence); }
};

/** Full protocol; DomainError unless every pulse area is pi within 1e-9. */
RamseyFringe run_ramsey(const RamseyConfig& config, const Vector& state, const BasisSet& basis, const std::vector<double>& phis);

struct CalibrationPoint {
    double pulse_time = 0.0;  // area of every pulse
    double p1 = 0.0;          // at phi = 0
    std::complex<double> coherence;
};

/** Scans the common pulse area T (unit amplitude, duration T per slot). */
std::vector<CalibrationPoint> pi_time_calibration(const RamseyConfig& config, const Vector& state, const BasisSet& basis,
                                                  const std::vector<double>& pulse_times);

/** Period of P(|1>) versus pulse time from a least-squares fit to the first two harmonics
 *  of T: 2 pi if the first harmonic dominates, pi otherwise. */
double calibration_period(const std::vector<CalibrationPoint>& points);

/** Analytic coherence cos^4(T/2) + flux * sin^4(T/2) for an exact toric input. */
double analytic_calibration_coherence(double pulse_time, int flux);

}  // namespace z2lgt
