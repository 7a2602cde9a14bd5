#include "z2lgt/hilbert.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <sstream>

#include "z2lgt/errors.hpp"

namespace z2lgt {

int BasisSet::mode_position(int label) const {
    for (int m = 0; m < n_modes(); ++m)
        if (mode_labels[m] == label) return m;
    return -1;
}

int BasisSet::link_position(int link_id) const {
    for (int j = 0; j < n_links(); ++j)
        if (link_ids[j] == link_id) return j;
    return -1;
}

std::uint64_t BasisSet::matter_key(const std::uint8_t* occ) const {
    std::uint64_t key = 0;
    for (int m = 0; m < n_modes(); ++m) key = key * static_cast<std::uint64_t>(max_occupation[m] + 1) + occ[m];
    return key;
}

std::optional<std::size_t> BasisSet::find(const std::uint8_t* occ, std::uint64_t link_bits) const {
    const std::uint64_t key = (matter_key(occ) << n_links()) | link_bits;
    auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
    if (it == keys_.end() || *it != key) return std::nullopt;
    return static_cast<std::size_t>(it - keys_.begin());
}

std::size_t BasisSet::index(std::size_t k) const {
    auto found = find(occupations(k), link_bits(k));
    if (!found) throw SchemaError("basis state not indexed");
    return *found;
}

void BasisSet::push_back(const std::uint8_t* occ, std::uint64_t link_bits) {
    const std::uint64_t key = (matter_key(occ) << n_links()) | link_bits;
    if (!keys_.empty() && key <= keys_.back()) throw SchemaError("basis states must be pushed in increasing key order");
    occupations_.insert(occupations_.end(), occ, occ + n_modes());
    link_bits_.push_back(link_bits);
    keys_.push_back(key);
}

void BasisSet::finalize() {
    if (dim() == 0) throw SchemaError("empty basis: the requested sector contains no states");
}

std::string BasisSet::label(std::size_t k) const {
    std::ostringstream os;
    os << "n=";
    for (int m = 0; m < n_modes(); ++m) os << static_cast<int>(occupations(k)[m]);
    os << (link_basis == LinkBasis::TauZ ? " z=" : " x=");
    for (int j = 0; j < n_links(); ++j) os << (link_value(k, j) > 0 ? '+' : '-');
    return os.str();
}

namespace {

/** Calls fn(occ) for every occupation tuple in lexicographic order. */
template <class Fn>
void for_each_occupation(const std::vector<int>& max_occ, Fn&& fn) {
    std::vector<std::uint8_t> occ(max_occ.size(), 0);
    while (true) {
        fn(occ.data());
        int m = static_cast<int>(max_occ.size()) - 1;
        while (m >= 0 && occ[m] == max_occ[m]) {
            occ[m] = 0;
            --m;
        }
        if (m < 0) return;
        ++occ[m];
    }
}

std::uint64_t link_mask(int n_links) { return n_links == 0 ? 0 : ((std::uint64_t{1} << n_links) - 1); }

}  // namespace

BasisPtr enumerate_basis(const LatticeGeometry& geom, const SectorConstraint& constraint, int max_occupation,
                         std::optional<LinkBasis> link_basis) {
    if (max_occupation < 1) throw SchemaError("enumerate_basis: max_occupation must be >= 1");
    if (geom.n_links() > 62) throw SchemaError("enumerate_basis: too many links");
    auto basis = std::make_shared<BasisSet>();
    for (const auto& s : geom.sites) basis->mode_labels.push_back(s.id);
    basis->max_occupation.assign(geom.sites.size(), max_occupation);
    for (const auto& l : geom.links) basis->link_ids.push_back(l.id);
    basis->constraint = constraint;

    if (constraint.gauss_values) {
        if (link_basis && *link_basis != LinkBasis::TauX)
            throw SchemaError("enumerate_basis: Gauss sectors are enumerated in the tau^x link basis");
        if (static_cast<int>(constraint.gauss_values->size()) != geom.n_super_sites())
            throw SchemaError("enumerate_basis: Gauss assignment must cover every super-site");
        for (int g : *constraint.gauss_values)
            if (g != 1 && g != -1) throw SchemaError("enumerate_basis: Gauss values must be +1 or -1");
        basis->link_basis = LinkBasis::TauX;
    } else {
        basis->link_basis = link_basis.value_or(LinkBasis::TauZ);
    }

    const int n_links = geom.n_links();
    std::vector<std::uint64_t> vertex_masks;
    for (const auto& v : geom.super_sites) {
        std::uint64_t mask = 0;
        for (int l : v.incident_links) mask |= std::uint64_t{1} << (n_links - 1 - l);
        vertex_masks.push_back(mask);
    }

    for_each_occupation(basis->max_occupation, [&](const std::uint8_t* occ) {
        if (constraint.one_boson_per_plaquette) {
            for (const auto& p : geom.plaquettes)
                if (occ[p.sites[0]] + occ[p.sites[1]] + occ[p.sites[2]] != 1) return;
        }
        if (constraint.total_excitations) {
            int total = 0;
            for (int m = 0; m < basis->n_modes(); ++m) total += occ[m];
            if (total != *constraint.total_excitations) return;
        }
        for (std::uint64_t bits = 0; bits <= link_mask(n_links); ++bits) {
            if (constraint.gauss_values) {
                bool ok = true;
                for (const auto& v : geom.super_sites) {
                    int parity = std::popcount(bits & vertex_masks[v.id]);
                    for (int s : v.member_sites) parity += occ[s];
                    if ((parity % 2 == 0 ? 1 : -1) != (*constraint.gauss_values)[v.id]) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) continue;
            }
            basis->push_back(occ, bits);
        }
    });
    basis->finalize();
    return basis;
}

BasisPtr enumerate_link_basis(const LatticeGeometry& geom, LinkBasis link_basis,
                              const std::optional<std::vector<int>>& vertex_values) {
    auto basis = std::make_shared<BasisSet>();
    for (const auto& l : geom.links) basis->link_ids.push_back(l.id);
    basis->link_basis = link_basis;
    const int n_links = geom.n_links();
    if (vertex_values) {
        if (link_basis != LinkBasis::TauX) throw SchemaError("enumerate_link_basis: vertex sectors need the tau^x basis");
        if (static_cast<int>(vertex_values->size()) != geom.n_super_sites())
            throw SchemaError("enumerate_link_basis: vertex assignment must cover every super-site");
    }
    for (std::uint64_t bits = 0; bits <= link_mask(n_links); ++bits) {
        if (vertex_values) {
            bool ok = true;
            for (const auto& v : geom.super_sites) {
                std::uint64_t mask = 0;
                for (int l : v.incident_links) mask |= std::uint64_t{1} << (n_links - 1 - l);
                const int value = std::popcount(bits & mask) % 2 == 0 ? 1 : -1;
                if (value != (*vertex_values)[v.id]) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
        }
        basis->push_back(nullptr, bits);
    }
    basis->finalize();
    return basis;
}

BasisPtr enumerate_oscillator_basis(int n_modes, int levels, std::optional<int> total_excitations) {
    if (levels < 1) throw SchemaError("enumerate_oscillator_basis: levels must be >= 1");
    auto basis = std::make_shared<BasisSet>();
    for (int m = 0; m < n_modes; ++m) basis->mode_labels.push_back(m);
    basis->max_occupation.assign(n_modes, levels - 1);
    if (total_excitations) basis->constraint = SectorConstraint::total_excitation_number(*total_excitations);
    for_each_occupation(basis->max_occupation, [&](const std::uint8_t* occ) {
        if (total_excitations) {
            int total = 0;
            for (int m = 0; m < n_modes; ++m) total += occ[m];
            if (total != *total_excitations) return;
        }
        basis->push_back(occ, 0);
    });
    basis->finalize();
    return basis;
}

Term adjoint(const Term& term) {
    Term out;
    out.coefficient = std::conj(term.coefficient);
    for (auto it = term.factors.rbegin(); it != term.factors.rend(); ++it) {
        Factor f = *it;
        if (f.kind == OpKind::Create) f.kind = OpKind::Annihilate;
        else if (f.kind == OpKind::Annihilate) f.kind = OpKind::Create;
        out.factors.push_back(f);
    }
    return out;
}

TermList adjoint(const TermList& terms) {
    TermList out;
    out.reserve(terms.size());
    for (const auto& t : terms) out.push_back(adjoint(t));
    return out;
}

SparseOperator SparseOperator::adjoint() const {
    SparseOperator out(basis, SparseMatrix(matrix.adjoint()));
    out.dropped_norm = dropped_norm;
    return out;
}

double SparseOperator::hermiticity_error() const {
    SparseMatrix diff = matrix - SparseMatrix(matrix.adjoint());
    double worst = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
    return worst;
}

std::string SparseOperator::dump() const {
    std::ostringstream os;
    os.precision(17);
    os << "# rows cols nnz\n" << matrix.rows() << ' ' << matrix.cols() << ' ' << matrix.nonZeros() << '\n';
    SparseMatrix rowmajor = matrix;
    std::vector<std::tuple<long, long, cplx>> entries;
    for (int k = 0; k < rowmajor.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(rowmajor, k); it; ++it) entries.emplace_back(it.row(), it.col(), it.value());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    for (const auto& [r, c, v] : entries) os << r << ' ' << c << ' ' << v.real() << ' ' << v.imag() << '\n';
    return os.str();
}

SparseOperator build_operator(BasisPtr basis, const TermList& terms) {
    const BasisSet& b = *basis;
    const int n_modes = b.n_modes();

    struct ResolvedFactor {
        OpKind kind;
        int position;
    };
    std::vector<std::vector<ResolvedFactor>> resolved;
    resolved.reserve(terms.size());
    for (const auto& term : terms) {
        std::vector<ResolvedFactor> rf;
        for (const auto& f : term.factors) {
            const bool on_link = f.kind == OpKind::TauX || f.kind == OpKind::TauZ;
            const int pos = on_link ? b.link_position(f.target) : b.mode_position(f.target);
            if (pos < 0)
                throw SchemaError(std::string("build_operator: unknown ") + (on_link ? "link " : "site ") +
                                  std::to_string(f.target));
            rf.push_back({f.kind, pos});
        }
        resolved.push_back(std::move(rf));
    }

    std::vector<Eigen::Triplet<cplx>> triplets;
    double dropped = 0.0;
    std::vector<std::uint8_t> occ(n_modes);
    const bool z_basis = b.link_basis == LinkBasis::TauZ;
    for (std::size_t col = 0; col < b.dim(); ++col) {
        for (std::size_t t = 0; t < terms.size(); ++t) {
            std::copy(b.occupations(col), b.occupations(col) + n_modes, occ.begin());
            std::uint64_t bits = b.link_bits(col);
            cplx amp = terms[t].coefficient;
            bool truncated = false;
            const auto& rf = resolved[t];
            for (auto it = rf.rbegin(); it != rf.rend() && amp != cplx(0.0); ++it) {
                switch (it->kind) {
                    case OpKind::Annihilate:
                        amp *= std::sqrt(static_cast<double>(occ[it->position]));
                        if (occ[it->position] > 0) --occ[it->position];
                        break;
                    case OpKind::Create:
                        if (occ[it->position] >= b.max_occupation[it->position]) {
                            truncated = true;
                            break;
                        }
                        ++occ[it->position];
                        amp *= std::sqrt(static_cast<double>(occ[it->position]));
                        break;
                    case OpKind::Number:
                        amp *= static_cast<double>(occ[it->position]);
                        break;
                    case OpKind::Parity:
                        if (occ[it->position] % 2) amp = -amp;
                        break;
                    case OpKind::TauX:
                    case OpKind::TauZ: {
                        const std::uint64_t bit = std::uint64_t{1} << b.bit_shift(it->position);
                        const bool diagonal = (it->kind == OpKind::TauZ) == z_basis;
                        if (diagonal) {
                            if (bits & bit) amp = -amp;
                        } else {
                            bits ^= bit;
                        }
                        break;
                    }
                }
                if (truncated) break;
            }
            if (amp == cplx(0.0)) continue;
            if (truncated) {
                dropped += std::norm(amp);
                continue;
            }
            auto row = b.find(occ.data(), bits);
            if (!row) {
                dropped += std::norm(amp);
                continue;
            }
            triplets.emplace_back(static_cast<int>(*row), static_cast<int>(col), amp);
        }
    }
    SparseMatrix m(static_cast<int>(b.dim()), static_cast<int>(b.dim()));
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.prune([](Eigen::Index, Eigen::Index, const cplx& v) { return v != cplx(0.0); });
    SparseOperator op(std::move(basis), std::move(m));
    op.dropped_norm = std::sqrt(dropped);
    return op;
}

SparseOperator identity_operator(BasisPtr basis) {
    const int n = static_cast<int>(basis->dim());
    SparseMatrix m(n, n);
    m.setIdentity();
    return SparseOperator(std::move(basis), std::move(m));
}

namespace {
void require_same_dim(const SparseOperator& a, const SparseOperator& b) {
    if (a.matrix.rows() != b.matrix.rows() || a.matrix.cols() != b.matrix.cols())
        throw SchemaError("operator dimensions differ");
}
}  // namespace

SparseOperator operator+(const SparseOperator& a, const SparseOperator& b) {
    require_same_dim(a, b);
    return SparseOperator(a.basis, SparseMatrix(a.matrix + b.matrix));
}

SparseOperator operator-(const SparseOperator& a, const SparseOperator& b) {
    require_same_dim(a, b);
    return SparseOperator(a.basis, SparseMatrix(a.matrix - b.matrix));
}

SparseOperator operator*(const SparseOperator& a, const SparseOperator& b) {
    require_same_dim(a, b);
    return SparseOperator(a.basis, SparseMatrix(a.matrix * b.matrix));
}

SparseOperator operator*(cplx s, const SparseOperator& a) { return SparseOperator(a.basis, SparseMatrix(s * a.matrix)); }

double commutator_norm(const SparseOperator& a, const SparseOperator& b) {
    require_same_dim(a, b);
    SparseMatrix c = a.matrix * b.matrix - b.matrix * a.matrix;
    return c.norm();
}

double difference_norm(const SparseOperator& a, const SparseOperator& b) {
    require_same_dim(a, b);
    return SparseMatrix(a.matrix - b.matrix).norm();
}

namespace {

void check_normalized(double norm) {
    if (std::abs(norm - 1.0) > 1e-9) throw DomainError("partial_trace_matter: state is not normalized");
}

/** Iterates contiguous runs of states sharing the same matter configuration. */
template <class Fn>
void for_each_matter_block(const BasisSet& b, Fn&& fn) {
    std::size_t start = 0;
    while (start < b.dim()) {
        const std::uint64_t key = b.matter_key(b.occupations(start));
        std::size_t end = start + 1;
        while (end < b.dim() && b.matter_key(b.occupations(end)) == key) ++end;
        fn(start, end);
        start = end;
    }
}

void walsh_hadamard(Vector& v) {
    const std::size_t n = static_cast<std::size_t>(v.size());
    for (std::size_t h = 1; h < n; h <<= 1)
        for (std::size_t i = 0; i < n; i += 2 * h)
            for (std::size_t j = i; j < i + h; ++j) {
                const cplx x = v[j], y = v[j + h];
                v[j] = x + y;
                v[j + h] = x - y;
            }
    v *= 1.0 / std::sqrt(static_cast<double>(n));
}

}  // namespace

DenseMatrix partial_trace_matter(const Vector& state, const BasisSet& basis) {
    if (static_cast<std::size_t>(state.size()) != basis.dim()) throw SchemaError("partial_trace_matter: dimension mismatch");
    check_normalized(state.norm());
    const std::size_t link_dim = std::size_t{1} << basis.n_links();
    DenseMatrix rho = DenseMatrix::Zero(link_dim, link_dim);
    for_each_matter_block(basis, [&](std::size_t start, std::size_t end) {
        Vector block = Vector::Zero(link_dim);
        for (std::size_t k = start; k < end; ++k) block[basis.link_bits(k)] = state[k];
        rho.noalias() += block * block.adjoint();
    });
    return rho;
}

DenseMatrix partial_trace_matter(const DenseMatrix& density, const BasisSet& basis) {
    if (static_cast<std::size_t>(density.rows()) != basis.dim()) throw SchemaError("partial_trace_matter: dimension mismatch");
    check_normalized(density.trace().real());
    const std::size_t link_dim = std::size_t{1} << basis.n_links();
    DenseMatrix rho = DenseMatrix::Zero(link_dim, link_dim);
    for_each_matter_block(basis, [&](std::size_t start, std::size_t end) {
        for (std::size_t r = start; r < end; ++r)
            for (std::size_t c = start; c < end; ++c) rho(basis.link_bits(r), basis.link_bits(c)) += density(r, c);
    });
    return rho;
}

Vector convert_state(const Vector& state, const BasisSet& from, const BasisSet& to, double* lost_norm) {
    if (from.mode_labels != to.mode_labels || from.max_occupation != to.max_occupation || from.link_ids != to.link_ids)
        throw SchemaError("convert_state: bases describe different modes or links");
    if (static_cast<std::size_t>(state.size()) != from.dim()) throw SchemaError("convert_state: dimension mismatch");
    const std::size_t link_dim = std::size_t{1} << from.n_links();
    std::map<std::uint64_t, Vector> blocks;
    for_each_matter_block(from, [&](std::size_t start, std::size_t end) {
        Vector block = Vector::Zero(link_dim);
        for (std::size_t k = start; k < end; ++k) block[from.link_bits(k)] = state[k];
        if (from.link_basis != to.link_basis) walsh_hadamard(block);
        blocks.emplace(from.matter_key(from.occupations(start)), std::move(block));
    });
    Vector out = Vector::Zero(to.dim());
    for (std::size_t k = 0; k < to.dim(); ++k) {
        auto it = blocks.find(to.matter_key(to.occupations(k)));
        if (it != blocks.end()) out[k] = it->second[to.link_bits(k)];
    }
    if (lost_norm) *lost_norm = std::sqrt(std::max(0.0, state.squaredNorm() - out.squaredNorm()));
    return out;
}

}  // namespace z2lgt
