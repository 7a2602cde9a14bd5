#include "z2lgt/braiding.hpp"

#include <cmath>

#include "z2lgt/errors.hpp"
#include "z2lgt/linalg.hpp"

namespace z2lgt {

BraidingPaths default_braiding_paths(const LatticeGeometry& geom) {
    if (geom.n_plaquettes() != 3 || geom.n_super_sites() != 5) throw SchemaError("default_braiding_paths: needs the three-plaquette strip");
    auto link = [&](int a, int b) {
        const int l = geom.find_link(a, b);
        if (l < 0) throw SchemaError("default_braiding_paths: missing link");
        return l;
    };
    BraidingPaths p;
    p.pair_link = link(0, 1);
    p.path_control0 = {link(1, 3), link(3, 4)};
    p.path_control1 = {link(1, 2), link(2, 4)};
    return p;
}

namespace {

Vector tau_z_diagonal(const BasisSet& basis, int link) {
    if (basis.link_basis != LinkBasis::TauZ) throw SchemaError("braiding: state must be in a tau^z basis");
    const int pos = basis.link_position(link);
    if (pos < 0) throw SchemaError("braiding: unknown link");
    Vector d(static_cast<Eigen::Index>(basis.dim()));
    for (std::size_t k = 0; k < basis.dim(); ++k) d[static_cast<Eigen::Index>(k)] = basis.link_value(k, pos);
    return d;
}

Vector apply_pulse(const RamseyConfig& config, const BasisSet& basis, const Vector& psi, int link, double area) {
    const Vector z = tau_z_diagonal(basis, link);
    if (!config.free_hamiltonian) {
        const cplx c = std::cos(area / 2.0), s = std::sin(area / 2.0);
        return c * psi - cplx(0.0, 1.0) * s * z.cwiseProduct(psi);
    }
    if (config.pulse_duration <= 0.0) throw SchemaError("braiding: pulse duration must be positive");
    const double amplitude = area / config.pulse_duration;
    const SparseMatrix& h = config.free_hamiltonian->matrix;
    if (static_cast<std::size_t>(h.rows()) != basis.dim()) throw SchemaError("braiding: free Hamiltonian lives on another basis");
    LinearMap apply = [&](const Vector& v) -> Vector { return h * v + 0.5 * amplitude * z.cwiseProduct(v); };
    return expmv_hermitian(apply, psi, config.pulse_duration);
}

}  // namespace

Vector create_e_pair(const Vector& state, const BasisSet& basis, int link) { return tau_z_diagonal(basis, link).cwiseProduct(state); }

std::complex<double> braiding_coherence(const RamseyConfig& config, const Vector& state, const BasisSet& basis) {
    if (std::abs(state.norm() - 1.0) > 1e-10) throw DomainError("braiding: state is not normalized");
    const auto& a = config.pulse_areas;
    Vector branch0 = apply_pulse(config, basis, state, config.paths.path_control0[0], a[0]);
    Vector branch1 = apply_pulse(config, basis, state, config.paths.path_control1[0], a[2]);
    branch0 = apply_pulse(config, basis, branch0, config.paths.path_control0[1], a[1]);
    branch1 = apply_pulse(config, basis, branch1, config.paths.path_control1[1], a[3]);
    return branch1.dot(branch0);
}

double ramsey_p1(std::complex<double> coherence, double phi) {
    // control density after the opening pi/2 pulse and the branch evolution
    Eigen::Matrix2cd rho;
    rho << 0.5, 0.5 * coherence, 0.5 * std::conj(coherence), 0.5;
    Eigen::Matrix2cd rz = Eigen::Matrix2cd::Zero();
    rz(0, 0) = std::exp(cplx(0.0, -phi / 2.0));
    rz(1, 1) = std::exp(cplx(0.0, phi / 2.0));
    const double r = std::sqrt(0.5);
    Eigen::Matrix2cd ry;
    ry << r, -r, r, r;
    const Eigen::Matrix2cd m = ry * rz;
    return (m * rho * m.adjoint())(1, 1).real();
}

RamseyFringe run_ramsey(const RamseyConfig& config, const Vector& state, const BasisSet& basis, const std::vector<double>& phis) {
    for (double area : config.pulse_areas)
        if (std::abs(area - M_PI) > 1e-9) throw DomainError("run_ramsey: every pulse area must be pi");
    RamseyFringe f;
    f.phi = phis;
    f.coherence = braiding_coherence(config, state, basis);
    for (double phi : phis) f.p1.push_back(ramsey_p1(f.coherence, phi));
    return f;
}

std::vector<CalibrationPoint> pi_time_calibration(const RamseyConfig& config, const Vector& state, const BasisSet& basis,
                                                  const std::vector<double>& pulse_times) {
    std::vector<CalibrationPoint> out(pulse_times.size());
    parallel_for(pulse_times.size(), config.threads, [&](std::size_t i) {
        RamseyConfig c = config;
        const double t = pulse_times[i];
        c.pulse_areas = {t, t, t, t};
        c.pulse_duration = t > 0.0 ? t : config.pulse_duration;
        CalibrationPoint& p = out[i];
        p.pulse_time = t;
        p.coherence = braiding_coherence(c, state, basis);
        p.p1 = ramsey_p1(p.coherence, 0.0);
    });
    return out;
}

double calibration_period(const std::vector<CalibrationPoint>& points) {
    if (points.size() < 5) throw SchemaError("calibration_period: need at least five points");
    Eigen::MatrixXd design(points.size(), 5);
    Eigen::VectorXd values(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double t = points[i].pulse_time;
        design.row(i) << 1.0, std::cos(t), std::sin(t), std::cos(2.0 * t), std::sin(2.0 * t);
        values[i] = points[i].p1;
    }
    const Eigen::VectorXd c = design.colPivHouseholderQr().solve(values);
    const double first = std::hypot(c[1], c[2]), second = std::hypot(c[3], c[4]);
    return first > second ? 2.0 * M_PI : M_PI;
}

double analytic_calibration_coherence(double pulse_time, int flux) {
    const double c = std::cos(pulse_time / 2.0), s = std::sin(pulse_time / 2.0);
    return std::pow(c, 4) + flux * std::pow(s, 4);
}

}  // namespace z2lgt
