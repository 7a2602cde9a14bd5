#pragma once

#include <cstdint>
#include <vector>

#include "z2lgt/hilbert.hpp"
#include "z2lgt/lattice.hpp"

namespace z2lgt {

/** splitmix64 finaliser applied to seed and counter; the stream for shot k is (seed, k). */
std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t counter);
/** Uniform double in [0, 1) with 53 random bits. */
double counter_uniform(std::uint64_t seed, std::uint64_t counter);

/** One projective measurement of every link (in `basis`) and every matter occupation. */
struct Snapshot {
    LinkBasis basis = LinkBasis::TauZ;
    std::vector<int> link_values;  // by link id, +1 or -1
    std::vector<int> occupations;  // by matter site id
    std::uint64_t seed = 0;
    std::uint64_t shot = 0;
};

/** i.i.d. shots drawn from |amplitude|^2 after rotating the links into `measure` basis.
 *  `basis` may be a full effective basis or a link-only basis over the geometry's links. */
std::vector<Snapshot> sample_snapshots(const LatticeGeometry& geom, const Vector& state, BasisPtr basis, LinkBasis measure,
                                       std::size_t n_shots, std::uint64_t seed, int threads = 0);

/** tau^x -> (-1)^{Delta n} tau^x with Delta n the occupation of the sites attached to the link. */
Snapshot apply_string_flip(const Snapshot& snapshot, const LatticeGeometry& geom);

struct StringReport {
    bool dual = false;
    std::vector<int> parity;     // per super-site (direct) or per plaquette (dual), +1 even / -1 odd
    std::vector<int> open_ends;  // ids with odd parity
    bool all_closed = true;
};

/** Strings are links with value -1. Direct mode counts them per super-site on a tau^x snapshot;
 *  dual mode counts them per plaquette on a tau^z snapshot, where boundary links have a free end. */
StringReport classify_strings(const Snapshot& snapshot, const LatticeGeometry& geom, bool dual);

}  // namespace z2lgt
