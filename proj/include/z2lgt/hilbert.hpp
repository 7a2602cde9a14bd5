#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "z2lgt/lattice.hpp"

namespace z2lgt {

using cplx = std::complex<double>;
using Vector = Eigen::VectorXcd;
using DenseMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<cplx>;

/** Computational basis used for the link spins. */
enum class LinkBasis { TauZ, TauX };

/** Composable enumeration constraints. An empty constraint keeps every product state. */
struct SectorConstraint {
    bool one_boson_per_plaquette = false;
    std::optional<int> total_excitations;
    /** Gauss-law eigenvalue per super-site, (-1)^{N_i} prod tau^x; forces a tau^x link basis. */
    std::optional<std::vector<int>> gauss_values;

    static SectorConstraint none() { return {}; }
    static SectorConstraint one_boson() { return {true, std::nullopt, std::nullopt}; }
    static SectorConstraint total_excitation_number(int n) { return {false, n, std::nullopt}; }
    static SectorConstraint gauss_sector(std::vector<int> values) { return {true, std::nullopt, std::move(values)}; }
};

/** Ordered product basis of bosonic modes and link spins. A link bit of 1 means eigenvalue -1
 *  in the chosen link basis; link position j maps to bit (L-1-j) so that state keys sort
 *  lexicographically in (occupations, link values). */
class BasisSet {
public:
    std::vector<int> mode_labels;     // matter site ids (or oscillator labels)
    std::vector<int> max_occupation;  // per mode
    std::vector<int> link_ids;
    LinkBasis link_basis = LinkBasis::TauZ;
    SectorConstraint constraint;

    std::size_t dim() const { return link_bits_.size(); }
    int n_modes() const { return static_cast<int>(mode_labels.size()); }
    int n_links() const { return static_cast<int>(link_ids.size()); }

    const std::uint8_t* occupations(std::size_t k) const { return occupations_.data() + k * mode_labels.size(); }
    std::uint64_t link_bits(std::size_t k) const { return link_bits_[k]; }
    /** Eigenvalue (+1/-1) of link position j in state k, in the basis's link basis. */
    int link_value(std::size_t k, int position) const { return (link_bits_[k] >> bit_shift(position)) & 1u ? -1 : 1; }
    int bit_shift(int position) const { return n_links() - 1 - position; }

    /** Mode / link position from an id; -1 when absent. */
    int mode_position(int label) const;
    int link_position(int link_id) const;

    std::uint64_t matter_key(const std::uint8_t* occ) const;
    std::optional<std::size_t> find(const std::uint8_t* occ, std::uint64_t link_bits) const;
    std::size_t index(std::size_t k) const;  // round-trip helper for tests

    /** Adds a state; keys must arrive in increasing order. */
    void push_back(const std::uint8_t* occ, std::uint64_t link_bits);
    void finalize();

    std::string label(std::size_t k) const;

private:
    std::vector<std::uint8_t> occupations_;
    std::vector<std::uint64_t> link_bits_;
    std::vector<std::uint64_t> keys_;
};

using BasisPtr = std::shared_ptr<const BasisSet>;

/** Effective-model basis over all matter sites and links of a geometry. Gauss-sector
 *  constraints enumerate in the tau^x link basis; everything else defaults to tau^z. */
BasisPtr enumerate_basis(const LatticeGeometry& geom, const SectorConstraint& constraint, int max_occupation = 1,
                         std::optional<LinkBasis> link_basis = std::nullopt);

/** Link-only basis; optional vertex values fix prod tau^x per super-site (tau^x basis). */
BasisPtr enumerate_link_basis(const LatticeGeometry& geom, LinkBasis link_basis,
                              const std::optional<std::vector<int>>& vertex_values = std::nullopt);

/** Oscillator basis with `levels` states per mode (occupations 0..levels-1). */
BasisPtr enumerate_oscillator_basis(int n_modes, int levels, std::optional<int> total_excitations = std::nullopt);

enum class OpKind { Create, Annihilate, Number, Parity, TauX, TauZ };

struct Factor {
    OpKind kind;
    int target;  // matter site / mode label, or link id
};

inline Factor create(int site) { return {OpKind::Create, site}; }
inline Factor annihilate(int site) { return {OpKind::Annihilate, site}; }
inline Factor number(int site) { return {OpKind::Number, site}; }
inline Factor parity(int site) { return {OpKind::Parity, site}; }
inline Factor tau_x(int link) { return {OpKind::TauX, link}; }
inline Factor tau_z(int link) { return {OpKind::TauZ, link}; }

/** coefficient * F_0 F_1 ... F_{k-1}; the rightmost factor acts first. */
struct Term {
    cplx coefficient{1.0, 0.0};
    std::vector<Factor> factors;
};

using TermList = std::vector<Term>;

Term adjoint(const Term& term);
TermList adjoint(const TermList& terms);

class SparseOperator {
public:
    BasisPtr basis;
    SparseMatrix matrix;
    /** Norm of amplitude dropped because it left the basis (audit). */
    double dropped_norm = 0.0;

    SparseOperator() = default;
    SparseOperator(BasisPtr b, SparseMatrix m) : basis(std::move(b)), matrix(std::move(m)) {}

    std::size_t dim() const { return static_cast<std::size_t>(matrix.rows()); }
    Vector apply(const Vector& v) const { return matrix * v; }
    cplx expectation(const Vector& v) const { return v.dot(matrix * v); }
    SparseOperator adjoint() const;
    DenseMatrix dense() const { return DenseMatrix(matrix); }
    double hermiticity_error() const;
    /** Coordinate-list dump: "row col re im" per nonzero. */
    std::string dump() const;
};

SparseOperator build_operator(BasisPtr basis, const TermList& terms);
SparseOperator identity_operator(BasisPtr basis);
SparseOperator operator+(const SparseOperator& a, const SparseOperator& b);
SparseOperator operator-(const SparseOperator& a, const SparseOperator& b);
SparseOperator operator*(const SparseOperator& a, const SparseOperator& b);
SparseOperator operator*(cplx s, const SparseOperator& a);

/** Frobenius norm of [A, B]. */
double commutator_norm(const SparseOperator& a, const SparseOperator& b);
/** Frobenius norm of A - B. */
double difference_norm(const SparseOperator& a, const SparseOperator& b);

/** Reduced density matrix on the links (dimension 2^L, indexed by link bits). */
DenseMatrix partial_trace_matter(const Vector& state, const BasisSet& basis);
DenseMatrix partial_trace_matter(const DenseMatrix& density, const BasisSet& basis);

/** Re-expresses a state in another basis over the same modes and links, changing the link
 *  basis with per-link Hadamards if needed. Amplitude outside the target is discarded and
 *  its norm reported through `lost_norm`. */
Vector convert_state(const Vector& state, const BasisSet& from, const BasisSet& to, double* lost_norm = nullptr);

}  // namespace z2lgt
