#include "z2lgt/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "json.hpp"

#include "z2lgt/errors.hpp"

namespace z2lgt {

int DualGeometry::dual_of(int link) const {
    for (std::size_t k = 0; k < links.size(); ++k)
        if (links[k].link == link) return static_cast<int>(k);
    throw SchemaError("dual_of: unknown link " + std::to_string(link));
}

int LatticeGeometry::find_link(int vertex_a, int vertex_b) const {
    for (const auto& l : links)
        if ((l.vertex_a == vertex_a && l.vertex_b == vertex_b) ||
            (l.vertex_a == vertex_b && l.vertex_b == vertex_a))
            return l.id;
    return -1;
}

int LatticeGeometry::site_at(int plaquette, int vertex) const {
    const auto& p = plaquettes.at(plaquette);
    for (int k = 0; k < 3; ++k)
        if (p.vertices[k] == vertex) return p.sites[k];
    return -1;
}

std::vector<int> LatticeGeometry::toric_gauss_values() const {
    std::vector<int> values;
    values.reserve(super_sites.size());
    for (const auto& s : super_sites) values.push_back(s.n_plaquettes % 2 == 0 ? 1 : -1);
    return values;
}

int LatticeGeometry::center_plaquette() const {
    int best = 0;
    int best_count = -1;
    for (const auto& p : plaquettes) {
        int count = 0;
        for (int l : p.links) count += links[l].is_double() ? 1 : 0;
        if (count > best_count) {
            best = p.id;
            best_count = count;
        }
    }
    return best;
}

std::string LatticeGeometry::to_json() const {
    nlohmann::ordered_json j;
    j["name"] = name;
    for (const auto& p : plaquettes) {
        nlohmann::ordered_json pj;
        pj["id"] = p.id;
        pj["vertices"] = p.vertices;
        pj["sites"] = p.sites;
        pj["links"] = p.links;
        j["plaquettes"].push_back(pj);
    }
    for (const auto& l : links) {
        nlohmann::ordered_json lj;
        lj["id"] = l.id;
        lj["vertices"] = {l.vertex_a, l.vertex_b};
        lj["plaquettes"] = l.plaquettes;
        lj["sites_a"] = l.sites_a;
        lj["sites_b"] = l.sites_b;
        j["links"].push_back(lj);
    }
    for (const auto& s : super_sites) {
        nlohmann::ordered_json sj;
        sj["id"] = s.id;
        sj["member_sites"] = s.member_sites;
        sj["incident_links"] = s.incident_links;
        sj["n_plaquettes"] = s.n_plaquettes;
        j["super_sites"].push_back(sj);
    }
    return j.dump(2);
}

namespace {

struct Point {
    double x, y;
};

std::vector<Point> vertex_positions(int n, ChainPattern pattern) {
    std::vector<Point> pos;
    const double height = std::sqrt(3.0) / 2.0;
    if (pattern == ChainPattern::Strip) {
        for (int k = 0; k < n + 2; ++k) pos.push_back({0.5 * k, (k % 2 == 1) ? height : 0.0});
    } else {
        pos.push_back({0.0, 0.0});
        const int outer = (n == 6) ? 6 : n + 1;
        for (int k = 0; k < outer; ++k) {
            const double angle = k * std::numbers::pi / 3.0;
            pos.push_back({std::cos(angle), std::sin(angle)});
        }
    }
    return pos;
}

std::array<int, 3> triangle_vertices(int k, int n, ChainPattern pattern) {
    if (pattern == ChainPattern::Strip) return {k, k + 1, k + 2};
    const int outer = (n == 6) ? 6 : n + 1;
    return {0, 1 + k, 1 + (k + 1) % outer};
}

}  // namespace

LatticeGeometry build_chain_of_plaquettes(int n, ChainPattern pattern) {
    if (n < 1) throw SchemaError("build_chain_of_plaquettes: n must be >= 1");
    if (pattern == ChainPattern::Fan && n > 6) throw SchemaError("build_chain_of_plaquettes: fan supports at most 6 plaquettes");

    LatticeGeometry g;
    g.name = (pattern == ChainPattern::Strip ? "strip" : "fan") + std::to_string(n);
    const auto pos = vertex_positions(n, pattern);
    for (std::size_t v = 0; v < pos.size(); ++v) {
        SuperSite s;
        s.id = static_cast<int>(v);
        s.x = pos[v].x;
        s.y = pos[v].y;
        g.super_sites.push_back(s);
    }

    std::map<std::pair<int, int>, int> link_ids;
    for (int k = 0; k < n; ++k) {
        auto v = triangle_vertices(k, n, pattern);
        const Point a = pos[v[0]], b = pos[v[1]], c = pos[v[2]];
        const double area = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
        if (area < 0) std::swap(v[1], v[2]);

        Plaquette p;
        p.id = k;
        p.vertices = v;
        for (int j = 0; j < 3; ++j) {
            MatterSite m;
            m.id = static_cast<int>(g.sites.size());
            m.plaquette = k;
            m.super_site = v[j];
            g.sites.push_back(m);
            p.sites[j] = m.id;
            g.super_sites[v[j]].member_sites.push_back(m.id);
            g.super_sites[v[j]].n_plaquettes += 1;
        }
        for (int j = 0; j < 3; ++j) {
            const int va = v[j], vb = v[(j + 1) % 3];
            const auto key = std::minmax(va, vb);
            auto it = link_ids.find(key);
            if (it == link_ids.end()) {
                Link l;
                l.id = static_cast<int>(g.links.size());
                l.vertex_a = key.first;
                l.vertex_b = key.second;
                g.links.push_back(l);
                g.super_sites[va].incident_links.push_back(l.id);
                g.super_sites[vb].incident_links.push_back(l.id);
                it = link_ids.emplace(key, l.id).first;
            }
            Link& l = g.links[it->second];
            l.plaquettes.push_back(k);
            const int site_a = p.sites[(l.vertex_a == va) ? j : (j + 1) % 3];
            const int site_b = p.sites[(l.vertex_a == va) ? (j + 1) % 3 : j];
            l.sites_a.push_back(site_a);
            l.sites_b.push_back(site_b);
            p.links[j] = l.id;
        }
        g.plaquettes.push_back(p);
        g.dual_sites.push_back({k, k});
    }
    return g;
}

LatticeGeometry make_preset(const std::string& name) {
    int n = 0;
    if (name == "tri1") n = 1;
    else if (name == "tri2") n = 2;
    else if (name == "tri3") n = 3;
    else throw SchemaError("unknown geometry preset '" + name + "'");
    auto g = build_chain_of_plaquettes(n, ChainPattern::Strip);
    g.name = name;
    return g;
}

DualGeometry dual_lattice(const LatticeGeometry& geom) {
    DualGeometry d;
    d.sites = geom.dual_sites;
    for (const auto& l : geom.links) {
        DualLink dl;
        dl.link = l.id;
        dl.dual_a = l.plaquettes.at(0);
        if (l.plaquettes.size() > 1) dl.dual_b = l.plaquettes[1];
        d.links.push_back(dl);
    }
    return d;
}

}  // namespace z2lgt
