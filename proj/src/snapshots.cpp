#include "z2lgt/snapshots.hpp"

#include <algorithm>
#include <cmath>

#include "z2lgt/errors.hpp"
#include "z2lgt/linalg.hpp"

namespace z2lgt {

std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
    return static_cast<double>(counter_hash(seed, counter) >> 11) * 0x1.0p-53;
}

namespace {

BasisPtr measurement_basis(const LatticeGeometry& geom, const BasisPtr& basis, LinkBasis measure) {
    if (basis->link_basis == measure) return basis;
    if (basis->n_links() != geom.n_links()) throw SchemaError("sample_snapshots: basis does not cover every link");
    if (basis->n_modes() == 0) return enumerate_link_basis(geom, measure);
    SectorConstraint c;
    c.one_boson_per_plaquette = basis->constraint.one_boson_per_plaquette;
    c.total_excitations = basis->constraint.total_excitations;
    const int max_occ = *std::max_element(basis->max_occupation.begin(), basis->max_occupation.end());
    return enumerate_basis(geom, c, max_occ, measure);
}

}  // namespace

std::vector<Snapshot> sample_snapshots(const LatticeGeometry& geom, const Vector& state, BasisPtr basis, LinkBasis measure,
                                       std::size_t n_shots, std::uint64_t seed, int threads) {
    if (std::abs(state.norm() - 1.0) > 1e-10) throw DomainError("sample_snapshots: state is not normalized");
    const auto target = measurement_basis(geom, basis, measure);
    double lost = 0.0;
    const Vector rotated = target == basis ? state : convert_state(state, *basis, *target, &lost);
    if (lost * lost > 1e-12) throw DomainError("sample_snapshots: state has weight outside the measurement basis");

    std::vector<double> cumulative(target->dim());
    double acc = 0.0;
    for (std::size_t k = 0; k < target->dim(); ++k) cumulative[k] = acc += std::norm(rotated[static_cast<Eigen::Index>(k)]);

    std::vector<Snapshot> shots(n_shots);
    parallel_for(n_shots, threads, [&](std::size_t i) {
        const double u = counter_uniform(seed, i) * acc;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        if (it == cumulative.end()) --it;
        const std::size_t k = static_cast<std::size_t>(it - cumulative.begin());
        Snapshot& s = shots[i];
        s.basis = measure;
        s.seed = seed;
        s.shot = i;
        s.link_values.assign(geom.n_links(), 1);
        for (const auto& l : geom.links) s.link_values[l.id] = target->link_value(k, target->link_position(l.id));
        s.occupations.assign(geom.n_sites(), 0);
        for (const auto& site : geom.sites) {
            const int pos = target->mode_position(site.id);
            if (pos >= 0) s.occupations[site.id] = target->occupations(k)[pos];
        }
    });
    return shots;
}

Snapshot apply_string_flip(const Snapshot& snapshot, const LatticeGeometry& geom) {
    if (snapshot.basis != LinkBasis::TauX) throw SchemaError("apply_string_flip: needs a tau^x snapshot");
    Snapshot out = snapshot;
    for (const auto& l : geom.links) {
        int attached = 0;
        for (int s : l.sites_a) attached += snapshot.occupations.at(s);
        for (int s : l.sites_b) attached += snapshot.occupations.at(s);
        if (attached % 2) out.link_values[l.id] = -out.link_values[l.id];
    }
    return out;
}

StringReport classify_strings(const Snapshot& snapshot, const LatticeGeometry& geom, bool dual) {
    if (dual != (snapshot.basis == LinkBasis::TauZ))
        throw SchemaError(dual ? "classify_strings: dual strings need a tau^z snapshot" : "classify_strings: direct strings need a tau^x snapshot");
    StringReport r;
    r.dual = dual;
    if (dual) {
        r.parity.assign(geom.n_plaquettes(), 1);
        for (const auto& p : geom.plaquettes)
            for (int l : p.links)
                if (snapshot.link_values.at(l) == -1) r.parity[p.id] = -r.parity[p.id];
    } else {
        r.parity.assign(geom.n_super_sites(), 1);
        for (const auto& l : geom.links) {
            if (snapshot.link_values.at(l.id) != -1) continue;
            r.parity[l.vertex_a] = -r.parity[l.vertex_a];
            r.parity[l.vertex_b] = -r.parity[l.vertex_b];
        }
    }
    for (std::size_t i = 0; i < r.parity.size(); ++i)
        if (r.parity[i] == -1) r.open_ends.push_back(static_cast<int>(i));
    r.all_closed = r.open_ends.empty();
    return r;
}

}  // namespace z2lgt
