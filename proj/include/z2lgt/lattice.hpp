#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace z2lgt {

/** Triangle with its super-site vertices, matter sites and links in counterclockwise order.
 *  sites[k] sits on vertices[k]; links[k] joins vertices[k] and vertices[k+1]. */
struct Plaquette {
    int id = 0;
    std::array<int, 3> vertices{};
    std::array<int, 3> sites{};
    std::array<int, 3> links{};
};

/** Gauge link between two super-sites. sites_a / sites_b are the matter sites attached on
 *  the side of vertex_a / vertex_b (one per plaquette containing the link). */
struct Link {
    int id = 0;
    int vertex_a = 0;
    int vertex_b = 0;
    std::vector<int> plaquettes;
    std::vector<int> sites_a;
    std::vector<int> sites_b;

    bool is_double() const { return plaquettes.size() == 2; }
};

struct MatterSite {
    int id = 0;
    int plaquette = 0;
    int super_site = 0;
};

struct SuperSite {
    int id = 0;
    std::vector<int> member_sites;
    std::vector<int> incident_links;
    int n_plaquettes = 0;
    double x = 0.0;
    double y = 0.0;
};

struct DualSite {
    int id = 0;
    int plaquette = 0;
};

/** Dual of a link: connects the dual sites of its plaquettes; boundary links have a free end. */
struct DualLink {
    int link = 0;
    int dual_a = 0;
    std::optional<int> dual_b;

    bool boundary() const { return !dual_b.has_value(); }
};

struct DualGeometry {
    std::vector<DualSite> sites;
    std::vector<DualLink> links;  // indexed by link id

    int link_of(int dual_link) const { return links.at(dual_link).link; }
    int dual_of(int link) const;
};

enum class ChainPattern {
    Strip,  // alternating up/down triangles along a row
    Fan,    // triangles sharing one central super-site
};

class LatticeGeometry {
public:
    std::string name;
    std::vector<Plaquette> plaquettes;
    std::vector<Link> links;
    std::vector<MatterSite> sites;
    std::vector<SuperSite> super_sites;
    std::vector<DualSite> dual_sites;

    int n_plaquettes() const { return static_cast<int>(plaquettes.size()); }
    int n_links() const { return static_cast<int>(links.size()); }
    int n_sites() const { return static_cast<int>(sites.size()); }
    int n_super_sites() const { return static_cast<int>(super_sites.size()); }

    /** Link joining two super-sites, or -1. */
    int find_link(int vertex_a, int vertex_b) const;
    /** Matter site of plaquette p located on super-site v, or -1. */
    int site_at(int plaquette, int vertex) const;
    /** Toric sector assignment G_i = (-1)^{N^P_i}. */
    std::vector<int> toric_gauss_values() const;
    /** Plaquette with the most neighbours (first one on ties). */
    int center_plaquette() const;

    /** Debug export: plaquette -> links, link -> attached sites per side. */
    std::string to_json() const;
};

LatticeGeometry build_chain_of_plaquettes(int n, ChainPattern pattern = ChainPattern::Strip);

/** Named presets "tri1", "tri2", "tri3" (strip chains with 1..3 plaquettes). */
LatticeGeometry make_preset(const std::string& name);

DualGeometry dual_lattice(const LatticeGeometry& geom);

}  // namespace z2lgt
