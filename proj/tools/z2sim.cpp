#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "z2lgt/braiding.hpp"
#include "z2lgt/dynamics.hpp"
#include "z2lgt/effective.hpp"
#include "z2lgt/errors.hpp"
#include "z2lgt/linalg.hpp"
#include "z2lgt/microscopic.hpp"
#include "z2lgt/reduced.hpp"
#include "z2lgt/snapshots.hpp"

using json = nlohmann::json;
using namespace z2lgt;

namespace {

constexpr const char* kVersion = "1.0.0";

/** Reads config fields with defaults, recording every resolved value and rejecting unknown keys. */
class Params {
public:
    Params(json source, std::string scope) : source_(std::move(source)), scope_(std::move(scope)) {
        if (!source_.is_object()) throw SchemaError(scope_ + ": expected an object");
    }

    bool has(const std::string& key) const { return source_.contains(key); }

    template <typename T>
    T get(const std::string& key, const T& fallback) {
        used_.insert(key);
        if (!source_.contains(key)) {
            resolved_[key] = fallback;
            return fallback;
        }
        return read<T>(key);
    }

    template <typename T>
    T require(const std::string& key) {
        used_.insert(key);
        if (!source_.contains(key)) throw SchemaError(field(key) + ": required field is missing");
        return read<T>(key);
    }

    Params child(const std::string& key) {
        used_.insert(key);
        return Params(source_.contains(key) ? source_.at(key) : json::object(), field(key));
    }

    void store_child(const std::string& key, const Params& p) { resolved_[key] = p.resolved(); }

    /** Throws for keys that were never read. */
    void finish() const {
        for (auto it = source_.begin(); it != source_.end(); ++it)
            if (!used_.count(it.key())) throw SchemaError(field(it.key()) + ": unknown field");
    }

    const json& resolved() const { return resolved_; }
    std::string field(const std::string& key) const { return scope_.empty() ? key : scope_ + "." + key; }

private:
    template <typename T>
    T read(const std::string& key) {
        try {
            T value = source_.at(key).get<T>();
            resolved_[key] = source_.at(key);
            return value;
        } catch (const json::exception& e) {
            throw SchemaError(field(key) + ": wrong type (" + e.what() + ")");
        }
    }

    json source_;
    std::string scope_;
    json resolved_ = json::object();
    std::set<std::string> used_;
};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void write(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw SchemaError("cannot write " + path.string());
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
            out << '\n';
        };
        line(header);
        for (const auto& r : rows) line(r);
    }
};

struct Outcome {
    Table table;
    json summary = json::object();
};

struct RunContext {
    std::uint64_t seed = 0;
    int threads = 0;
};

GrowingVariant parse_variant(const std::string& s, const std::string& field) {
    if (s == "ground") return GrowingVariant::Ground;
    if (s == "vison") return GrowingVariant::Vison;
    throw SchemaError(field + ": expected 'ground' or 'vison'");
}

std::vector<double> parse_grid(Params& p, const std::string& key, double lo, double hi, int n) {
    Params g = p.child(key);
    const double a = g.get("min", lo), b = g.get("max", hi);
    const int count = g.get("n", n);
    if (count < 1) throw SchemaError(g.field("n") + ": must be positive");
    g.finish();
    p.store_child(key, g);
    return linspace(a, b, count);
}

LatticeGeometry parse_geometry(Params& p, const std::string& fallback) {
    const auto name = p.get<std::string>("geometry", fallback);
    try {
        return make_preset(name);
    } catch (const SchemaError&) {
        throw SchemaError(p.field("geometry") + ": unknown preset '" + name + "'");
    }
}

/** Eigenstates within each degenerate cluster are rotated to diagonalise the symmetry operators. */
Outcome run_spectrum(Params& p, const RunContext&) {
    const auto geom = parse_geometry(p, "tri1");
    EffectiveParams params;
    params.t = p.get("t", 1.0);
    const double h = p.get("h", 0.0);
    const double t_tilde = p.get("t_tilde", params.t);
    const auto sector = p.get<std::string>("sector", "one_boson");
    p.finish();
    for (const auto& l : geom.links) {
        params.h_per_link[l.id] = h;
        params.t_tilde_per_link[l.id] = t_tilde;
    }
    BasisPtr basis;
    if (sector == "one_boson")
        basis = enumerate_basis(geom, SectorConstraint::one_boson());
    else if (sector == "toric")
        basis = enumerate_basis(geom, SectorConstraint::gauss_sector(geom.toric_gauss_values()));
    else
        throw SchemaError("sector: expected 'one_boson' or 'toric'");

    const DenseMatrix hm = build_lgt_hamiltonian(geom, basis, params).dense();
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(hm);
    if (es.info() != Eigen::Success) throw ConvergenceError("spectrum: eigensolver failed");
    std::vector<SparseOperator> plaquettes, vertices;
    for (int q = 0; q < geom.n_plaquettes(); ++q) plaquettes.push_back(plaquette_operator(geom, basis, q));
    for (int v = 0; v < geom.n_super_sites(); ++v) vertices.push_back(gauss_operator(geom, basis, v));

    DenseMatrix vectors = es.eigenvectors();
    const auto& evals = es.eigenvalues();
    const double tol = 1e-9 * std::max(1.0, std::abs(params.t));
    for (Eigen::Index start = 0; start < evals.size();) {
        Eigen::Index end = start + 1;
        while (end < evals.size() && evals[end] - evals[start] < tol) ++end;
        if (end - start > 1) {
            const DenseMatrix block = vectors.middleCols(start, end - start);
            DenseMatrix probe = DenseMatrix::Zero(block.cols(), block.cols());
            for (std::size_t q = 0; q < plaquettes.size(); ++q) probe += (1.0 + 0.37 * q) * (block.adjoint() * (plaquettes[q].matrix * block));
            for (std::size_t v = 0; v < vertices.size(); ++v) probe += (0.011 + 0.0071 * v) * (block.adjoint() * (vertices[v].matrix * block));
            Eigen::SelfAdjointEigenSolver<DenseMatrix> inner(0.5 * (probe + probe.adjoint()));
            vectors.middleCols(start, end - start) = block * inner.eigenvectors();
        }
        start = end;
    }

    Outcome out;
    out.table.header = {"index", "energy"};
    for (int q = 0; q < geom.n_plaquettes(); ++q) out.table.header.push_back("B_P" + std::to_string(q));
    for (int v = 0; v < geom.n_super_sites(); ++v) out.table.header.push_back("G_V" + std::to_string(v));
    for (Eigen::Index k = 0; k < evals.size(); ++k) {
        const Vector psi = vectors.col(k);
        std::vector<std::string> row = {std::to_string(k), num(evals[k])};
        for (const auto& op : plaquettes) row.push_back(num(op.expectation(psi).real()));
        for (const auto& op : vertices) row.push_back(num(op.expectation(psi).real()));
        out.table.rows.push_back(std::move(row));
    }
    out.summary["dimension"] = basis->dim();
    out.summary["ground_energy"] = evals[0];
    return out;
}

GrowingPlan parse_plan(Params& p, GrowingVariant fallback_variant) {
    const auto geom = parse_geometry(p, "tri3");
    const auto variant = parse_variant(p.get<std::string>("variant", fallback_variant == GrowingVariant::Ground ? "ground" : "vison"), p.field("variant"));
    const double t = p.get("t", 1.0);
    const double h0 = p.get("h0", t);
    const double duration = p.get("segment_duration", 20.0 / t);
    return make_growing_plan(geom, variant, t, h0, duration);
}

GrowingOptions parse_growing_options(Params& p, const RunContext& ctx, bool track_gap_default) {
    GrowingOptions o;
    o.initial_steps_per_segment = p.get("initial_steps_per_segment", o.initial_steps_per_segment);
    o.convergence_tol = p.get("convergence_tol", o.convergence_tol);
    o.samples_per_segment = p.get("samples_per_segment", o.samples_per_segment);
    o.track_gap = p.get("track_gap", track_gap_default);
    o.threads = ctx.threads;
    return o;
}

Outcome run_grow(Params& p, const RunContext& ctx) {
    const auto plan = parse_plan(p, GrowingVariant::Ground);
    const auto options = parse_growing_options(p, ctx, true);
    p.finish();
    const auto r = run_growing(plan, options);
    Outcome out;
    out.table.header = {"time", "fidelity", "energy", "gap", "sector_leakage"};
    for (const auto& s : r.trace) out.table.rows.push_back({num(s.time), num(s.fidelity), num(s.energy), num(s.gap), num(s.sector_leakage)});
    out.summary["final_fidelity"] = r.final_fidelity;
    out.summary["steps_per_segment"] = r.steps_per_segment;
    out.summary["convergence_change"] = r.convergence_change;
    return out;
}

Outcome run_gapscan(Params& p, const RunContext& ctx) {
    const auto plan = parse_plan(p, GrowingVariant::Ground);
    const int step = p.get("step", 1);
    const auto mode = p.get<std::string>("mode", "grid");
    std::vector<GapPoint> points;
    if (mode == "grid") {
        const auto tg = parse_grid(p, "t_tilde", 0.0, plan.t, 21);
        const auto hg = parse_grid(p, "h", 0.0, plan.h0, 21);
        p.finish();
        points = gap_scan(plan, step, tg, hg, ctx.threads);
    } else if (mode == "path") {
        const int n = p.get("n_points", 41);
        p.finish();
        points = path_gaps(plan, step, n, ctx.threads);
    } else {
        throw SchemaError(p.field("mode") + ": expected 'grid' or 'path'");
    }
    Outcome out;
    out.table.header = {"t_tilde", "h", "gap"};
    double lo = points.empty() ? 0.0 : points[0].gap;
    for (const auto& g : points) {
        out.table.rows.push_back({num(g.t_tilde), num(g.h), num(g.gap)});
        lo = std::min(lo, g.gap);
    }
    out.summary["min_gap"] = lo;
    return out;
}

Outcome run_reduced_gap(Params& p, const RunContext& ctx) {
    const double t = p.get("t", 1.0);
    const double offset = p.get("block_offset", t);
    const auto tg = parse_grid(p, "t_tilde", 0.0, t, 21);
    const auto hg = parse_grid(p, "h", 0.0, t, 21);
    const bool compare = p.get("compare_full", false);
    p.finish();
    Outcome out;
    out.table.header = {"t_tilde", "h", "gap"};
    if (compare) {
        out.table.header.push_back("full_gap");
        const auto cmp = reduced_vs_full(make_preset("tri2"), tg, hg, t, ctx.threads);
        for (std::size_t i = 0; i < cmp.reduced.size(); ++i)
            out.table.rows.push_back({num(cmp.reduced[i].t_tilde), num(cmp.reduced[i].h), num(cmp.reduced[i].gap), num(cmp.full[i].gap)});
        out.summary["max_deviation"] = cmp.max_deviation;
        return out;
    }
    for (double tt : tg)
        for (double h : hg) out.table.rows.push_back({num(tt), num(h), num(ReducedBlock(t, tt, h, offset).gap())});
    return out;
}

Outcome run_finetune(Params& p, const RunContext&) {
    const double t_eff = p.require<double>("t_eff");
    const auto deltas = p.require<std::vector<double>>("deltas");
    const double g = p.get("g", 1.0);
    p.finish();
    const auto ft = fine_tune_triangle(t_eff, deltas, g);
    Outcome out;
    out.table.header = {"link", "g", "beta", "delta", "t_eff"};
    for (std::size_t k = 0; k < ft.g.size(); ++k)
        out.table.rows.push_back({std::to_string(k), num(ft.g[k]), num(ft.beta[k]), num(ft.delta[k]), num(effective_coupling(ft.g[k], ft.delta[k], ft.beta[k]))});
    return out;
}

BlockParams parse_block(const json& j, const std::string& scope) {
    Params b(j, scope);
    BlockParams out;
    out.g = b.get("g", out.g);
    out.delta = b.get("delta", out.delta);
    out.beta = b.get("beta", out.beta);
    out.h = b.get("h", out.h);
    b.finish();
    return out;
}

Outcome run_microscopic(Params& p, const RunContext& ctx) {
    const auto kind = p.get<std::string>("layout", "full_triangle");
    const double omega = p.get("omega", 0.0);
    std::vector<BlockParams> blocks;
    if (p.has("finetune")) {
        Params f = p.child("finetune");
        const auto ft = fine_tune_triangle(f.require<double>("t_eff"), f.require<std::vector<double>>("deltas"), f.get("g", 1.0));
        f.finish();
        p.store_child("finetune", f);
        for (std::size_t k = 0; k < ft.g.size(); ++k) blocks.push_back({ft.g[k], ft.delta[k], ft.beta[k], 0.0});
    } else {
        const auto raw = p.require<json>("blocks");
        if (!raw.is_array()) throw SchemaError(p.field("blocks") + ": expected an array");
        for (std::size_t k = 0; k < raw.size(); ++k) blocks.push_back(parse_block(raw[k], p.field("blocks[" + std::to_string(k) + "]")));
    }
    auto need = [&](std::size_t n) {
        if (blocks.size() != n) throw SchemaError(p.field("blocks") + ": layout '" + kind + "' needs " + std::to_string(n) + " block(s)");
    };
    MicroscopicLayout layout;
    if (kind == "single_block") {
        need(1);
        layout = single_block_layout(blocks[0], p.get("matter_anharmonicity", 0.0), omega);
    } else if (kind == "merged_chain") {
        need(2);
        layout = merged_chain_layout(blocks[0], blocks[1], omega);
    } else if (kind == "double_link") {
        need(1);
        layout = double_link_layout(blocks[0], p.require<double>("g_tilde"), p.require<double>("delta_tilde"), omega);
    } else if (kind == "full_triangle") {
        need(3);
        layout = full_triangle_layout(blocks, omega);
    } else {
        throw SchemaError(p.field("layout") + ": unknown layout '" + kind + "'");
    }
    const auto matter = layout.matter_modes();
    std::vector<int> occ(matter.size(), 0);
    occ[0] = 1;
    occ = p.get("matter_occupations", occ);
    json default_links = json::array();
    for (std::size_t k = 0; k < layout.links.size(); ++k) default_links.push_back({{"axis", "x"}, {"value", 1}});
    const auto raw_links = p.get<json>("links", default_links);
    if (!raw_links.is_array()) throw SchemaError(p.field("links") + ": expected an array");
    std::vector<LinkPreparation> links;
    for (std::size_t k = 0; k < raw_links.size(); ++k) {
        Params lp(raw_links[k], p.field("links[" + std::to_string(k) + "]"));
        const auto axis = lp.get<std::string>("axis", "x");
        if (axis.size() != 1) throw SchemaError(lp.field("axis") + ": expected 'x' or 'z'");
        links.push_back({axis[0], lp.get("value", 1)});
        lp.finish();
    }
    int total = static_cast<int>(links.size());
    for (int n : occ) total += n;
    total = p.get("total_excitations", total);
    const int levels = p.get("levels", 3);
    const bool dressed = p.get("dressed", false);
    const double t_final = p.get("t_final", 1000.0);
    const int n_steps = p.get("n_steps", 1000);
    p.finish();
    if (n_steps < 1) throw SchemaError(p.field("n_steps") + ": must be positive");

    const auto basis = microscopic_basis(layout, levels, total);
    Vector psi = microscopic_product_state(layout, *basis, occ, links);
    if (dressed) psi = dress_low_energy_state(layout, basis, psi);
    const auto trace = evolve_microscopic(layout, basis, psi, linspace(0.0, t_final, n_steps + 1), false, ctx.threads);

    Outcome out;
    out.table.header = {"time"};
    for (std::size_t k = 0; k < matter.size(); ++k) out.table.header.push_back("n_site" + std::to_string(k + 1));
    for (std::size_t k = 0; k < matter.size(); ++k) out.table.header.push_back("G_" + std::to_string(k + 1));
    for (std::size_t k = 0; k < layout.links.size(); ++k) out.table.header.push_back("tau_x_link" + std::to_string(k + 1));
    double drift = 0.0;
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        std::vector<std::string> row = {num(trace.times[i])};
        for (double v : trace.occupations[i]) row.push_back(num(v));
        for (std::size_t k = 0; k < trace.gauss[i].size(); ++k) {
            row.push_back(num(trace.gauss[i][k]));
            drift = std::max(drift, std::abs(trace.gauss[i][k] - trace.gauss[0][k]));
        }
        for (double v : trace.tau_x[i]) row.push_back(num(v));
        out.table.rows.push_back(std::move(row));
    }
    out.summary["dimension"] = basis->dim();
    out.summary["max_gauss_drift"] = drift;
    return out;
}

Outcome run_snapshot(Params& p, const RunContext& ctx) {
    const auto geom = parse_geometry(p, "tri3");
    const auto state_kind = p.get<std::string>("state", "ground");
    const auto basis_name = p.get<std::string>("basis", "tau_x");
    const int shots = p.get("shots", 1000);
    const bool flip = p.get("flip", basis_name == "tau_x");
    p.finish();
    if (shots < 0) throw SchemaError(p.field("shots") + ": must be non-negative");
    LinkBasis measure;
    if (basis_name == "tau_x")
        measure = LinkBasis::TauX;
    else if (basis_name == "tau_z")
        measure = LinkBasis::TauZ;
    else
        throw SchemaError(p.field("basis") + ": expected 'tau_x' or 'tau_z'");

    Vector state;
    BasisPtr basis;
    if (state_kind == "ground" || state_kind == "vison") {
        const auto toric = toric_code_ground_state(geom, state_kind == "vison" ? std::vector<int>{geom.center_plaquette()} : std::vector<int>{});
        state = toric.state();
        basis = toric.basis;
    } else if (state_kind == "ground_with_matter") {
        basis = enumerate_basis(geom, SectorConstraint::one_boson());
        state = lab_frame_eigenstate(geom, basis, toric_code_ground_state(geom).state());
    } else {
        throw SchemaError(p.field("state") + ": expected 'ground', 'vison' or 'ground_with_matter'");
    }
    const auto samples = sample_snapshots(geom, state, basis, measure, static_cast<std::size_t>(shots), ctx.seed, ctx.threads);

    Outcome out;
    out.table.header = {"shot_id", "basis"};
    for (const auto& l : geom.links) out.table.header.push_back("link" + std::to_string(l.id));
    for (const auto& s : geom.sites) out.table.header.push_back("n" + std::to_string(s.id));
    out.table.header.push_back("all_closed");
    out.table.header.push_back("open_end_ids");
    std::size_t closed = 0;
    for (const auto& raw : samples) {
        const Snapshot s = measure == LinkBasis::TauX && flip ? apply_string_flip(raw, geom) : raw;
        const auto report = classify_strings(s, geom, measure == LinkBasis::TauZ);
        std::vector<std::string> row = {std::to_string(s.shot), basis_name};
        for (int v : s.link_values) row.push_back(std::to_string(v));
        for (int n : s.occupations) row.push_back(std::to_string(n));
        row.push_back(report.all_closed ? "1" : "0");
        std::string ends;
        for (int e : report.open_ends) ends += (ends.empty() ? "" : " ") + std::to_string(e);
        row.push_back(ends);
        out.table.rows.push_back(std::move(row));
        if (report.all_closed) ++closed;
    }
    out.summary["closed_fraction"] = shots ? static_cast<double>(closed) / shots : 1.0;
    return out;
}

/** Ground and vison inputs with an e pair, plus the optional free Hamiltonian for each. */
struct RamseyInputs {
    BasisPtr basis;
    Vector ground, vison;
    std::optional<SparseOperator> free_ground, free_vison;
    RamseyConfig config;
    json fidelities = json::object();
};

RamseyInputs parse_ramsey_inputs(Params& p, const RunContext& ctx) {
    const auto geom = make_preset("tri3");
    RamseyInputs in;
    in.config.paths = default_braiding_paths(geom);
    in.config.threads = ctx.threads;
    const auto input = p.get<std::string>("input", "exact");
    Params free = p.child("free_evolution");
    const bool with_free = free.get("enabled", false);
    const double field = free.get("field", 0.0);
    in.config.pulse_duration = free.get("pulse_duration", 1.0);
    free.finish();
    p.store_child("free_evolution", free);

    if (input == "exact") {
        p.finish();
        const auto g = toric_code_ground_state(geom);
        const auto v = toric_code_ground_state(geom, {geom.center_plaquette()});
        in.basis = g.basis;
        in.ground = create_e_pair(g.state(), *g.basis, in.config.paths.pair_link);
        in.vison = create_e_pair(v.state(), *v.basis, in.config.paths.pair_link);
        if (with_free) {
            for (int flux : {1, -1}) {
                TermList terms;
                for (const auto& q : geom.plaquettes) {
                    const double sign = (flux == -1 && q.id == geom.center_plaquette()) ? 1.0 : -1.0;
                    terms.push_back({sign, {tau_z(q.links[0]), tau_z(q.links[1]), tau_z(q.links[2])}});
                }
                for (const auto& l : geom.links) terms.push_back({-field, {tau_x(l.id)}});
                (flux == 1 ? in.free_ground : in.free_vison) = build_operator(in.basis, terms);
            }
        }
    } else if (input == "grown") {
        Params grow = p.child("growing");
        const double t = grow.get("t", 1.0);
        const double h0 = grow.get("h0", t);
        const double duration = grow.get("segment_duration", 20.0 / t);
        auto options = parse_growing_options(grow, ctx, false);
        grow.finish();
        p.store_child("growing", grow);
        p.finish();
        for (auto variant : {GrowingVariant::Ground, GrowingVariant::Vison}) {
            const auto plan = make_growing_plan(geom, variant, t, h0, duration);
            const auto r = run_growing(plan, options);
            in.basis = r.basis;
            Vector psi = create_e_pair(r.final_state, *r.basis, in.config.paths.pair_link);
            const bool ground = variant == GrowingVariant::Ground;
            (ground ? in.ground : in.vison) = psi;
            in.fidelities[ground ? "ground" : "vison"] = r.final_fidelity;
            if (with_free) {
                EffectiveParams params;
                params.t = t;
                for (const auto& l : geom.links) params.h_per_link[l.id] = field;
                (ground ? in.free_ground : in.free_vison) = build_lgt_hamiltonian(geom, r.basis, params);
            }
        }
    } else {
        throw SchemaError(p.field("input") + ": expected 'exact' or 'grown'");
    }
    return in;
}

Outcome run_ramsey_experiment(Params& p, const RunContext& ctx) {
    const int n_phi = p.get("phi_points", 41);
    if (n_phi < 1) throw SchemaError(p.field("phi_points") + ": must be positive");
    auto in = parse_ramsey_inputs(p, ctx);
    const auto phis = linspace(0.0, 2.0 * M_PI, n_phi);
    RamseyConfig cg = in.config, cv = in.config;
    if (in.free_ground) cg.free_hamiltonian = &*in.free_ground;
    if (in.free_vison) cv.free_hamiltonian = &*in.free_vison;
    const auto fg = run_ramsey(cg, in.ground, *in.basis, phis);
    const auto fv = run_ramsey(cv, in.vison, *in.basis, phis);
    Outcome out;
    out.table.header = {"phi", "P1_ground", "P1_vison"};
    for (std::size_t i = 0; i < phis.size(); ++i) out.table.rows.push_back({num(phis[i]), num(fg.p1[i]), num(fv.p1[i])});
    out.summary["contrast_ground"] = fg.contrast();
    out.summary["contrast_vison"] = fv.contrast();
    out.summary["phase_shift"] = std::abs(std::remainder(fv.phase() - fg.phase(), 2.0 * M_PI));
    if (!in.fidelities.empty()) out.summary["growing_fidelity"] = in.fidelities;
    return out;
}

Outcome run_ramsey_calibrate(Params& p, const RunContext& ctx) {
    const auto times = parse_grid(p, "pulse_time", 0.0, 4.0 * M_PI, 81);
    auto in = parse_ramsey_inputs(p, ctx);
    RamseyConfig cg = in.config, cv = in.config;
    if (in.free_ground) cg.free_hamiltonian = &*in.free_ground;
    if (in.free_vison) cv.free_hamiltonian = &*in.free_vison;
    const auto g = pi_time_calibration(cg, in.ground, *in.basis, times);
    const auto v = pi_time_calibration(cv, in.vison, *in.basis, times);
    Outcome out;
    out.table.header = {"T", "P1_ground", "P1_vison"};
    for (std::size_t i = 0; i < times.size(); ++i) out.table.rows.push_back({num(times[i]), num(g[i].p1), num(v[i].p1)});
    if (times.size() >= 5) {
        out.summary["period_ground"] = calibration_period(g);
        out.summary["period_vison"] = calibration_period(v);
    }
    if (!in.fidelities.empty()) out.summary["growing_fidelity"] = in.fidelities;
    return out;
}

Outcome dispatch(const std::string& experiment, Params& p, const RunContext& ctx) {
    if (experiment == "spectrum") return run_spectrum(p, ctx);
    if (experiment == "grow") return run_grow(p, ctx);
    if (experiment == "gapscan") return run_gapscan(p, ctx);
    if (experiment == "microscopic-evolve") return run_microscopic(p, ctx);
    if (experiment == "snapshot") return run_snapshot(p, ctx);
    if (experiment == "ramsey") return run_ramsey_experiment(p, ctx);
    if (experiment == "ramsey-calibrate") return run_ramsey_calibrate(p, ctx);
    if (experiment == "reduced-gap") return run_reduced_gap(p, ctx);
    if (experiment == "finetune") return run_finetune(p, ctx);
    throw SchemaError("experiment: unknown experiment '" + experiment + "'");
}

int run(const std::string& config_path, const std::string& out_dir, std::optional<std::uint64_t> seed_flag, int threads) {
    std::ifstream in(config_path);
    if (!in) throw SchemaError("cannot read config file " + config_path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("config is not valid JSON: ") + e.what());
    }
    Params p(doc, "");
    const auto experiment = p.require<std::string>("experiment");
    RunContext ctx;
    ctx.seed = seed_flag ? *seed_flag : p.get<std::uint64_t>("seed", 0);
    ctx.threads = threads;
    p.get<std::string>("output", "");  // accepted for bookkeeping; --out decides the directory
    if (threads > 0) set_default_threads(threads);

    const Outcome outcome = dispatch(experiment, p, ctx);

    std::filesystem::create_directories(out_dir);
    const auto csv = std::filesystem::path(out_dir) / (experiment + ".csv");
    outcome.table.write(csv);
    json meta;
    meta["tool"] = "z2sim";
    meta["version"] = kVersion;
    meta["experiment"] = experiment;
    meta["seed"] = ctx.seed;
    meta["config"] = p.resolved();
    meta["config"]["seed"] = ctx.seed;
    meta["csv"] = csv.filename().string();
    meta["results"] = outcome.summary;
    std::ofstream(std::filesystem::path(out_dir) / "meta.json") << meta.dump(2) << '\n';
    std::cout << csv.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Z2 lattice gauge theory simulator"};
    std::string config, out_dir = ".";
    std::optional<std::uint64_t> seed;
    int threads = 0;
    app.add_option("--config", config, "JSON configuration file")->required();
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "64-bit RNG seed (overrides the config)");
    app.add_option("--threads", threads, "worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
    app.set_version_flag("--version", kVersion);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    try {
        return run(config, out_dir, seed, threads);
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "physics error: " << e.what() << '\n';
        return 3;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
