// dynlab: command-line laboratory for the skew-product attractor family.
// Every subcommand echoes its resolved configuration into its artifacts and
// is deterministic given (config, seed), independent of the thread budget.

#include <CLI11.hpp>
#include <json.hpp>

#include "dynlab/basins.hpp"
#include "dynlab/boxes.hpp"
#include "dynlab/deformation.hpp"
#include "dynlab/dynamics.hpp"
#include "dynlab/measures.hpp"
#include "dynlab/norms.hpp"
#include "dynlab/params.hpp"
#include "dynlab/scans.hpp"
#include "dynlab/transversality.hpp"
#include "dynlab/unstable_field.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using json = nlohmann::json;
using namespace dynlab;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config_error = 1;
constexpr int exit_audit_failed = 2;

struct GlobalOpts {
    std::string params_file;
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    int threads = 0;
    std::optional<int> example, l, n_power;
    std::optional<double> lambda_ss, lambda_c, alpha, lambda_c_plus, delta_bump, mu;
};

void add_global_options(CLI::App& app, GlobalOpts& g) {
    app.add_option("--params", g.params_file, "key=value parameter file");
    app.add_option("--out-dir", g.out_dir, "directory for output artifacts");
    app.add_option("--seed", g.seed, "RNG seed");
    app.add_option("--threads", g.threads, "thread budget (0 = auto / DYNLAB_THREADS)");
    app.add_option("--example", g.example, "map example, 1 or 2");
    app.add_option("--l", g.l, "circle expansion degree");
    app.add_option("--lambda-ss", g.lambda_ss);
    app.add_option("--lambda-c", g.lambda_c);
    app.add_option("--alpha", g.alpha);
    app.add_option("--lambda-c-plus", g.lambda_c_plus);
    app.add_option("--delta-bump", g.delta_bump);
    app.add_option("--mu", g.mu);
    app.add_option("--n-power", g.n_power);
}

// precedence: CLI flag > params file > built-in default
MapParams resolve_params(const GlobalOpts& g) {
    MapParams p = ex1_defaults();
    if (!g.params_file.empty()) p = load_params_file(g.params_file);
    if (g.example) p = *g.example == 2 ? ex2_defaults() : ex1_defaults();
    if (!g.params_file.empty() && g.example) {
        // file values still apply on top of the example switch
        std::ifstream in(g.params_file);
        KeyValues kv = parse_key_values(in);
        kv.erase("example");
        p = apply_config(p, kv);
    }
    if (g.l) p.l = *g.l;
    if (g.lambda_ss) p.lambda_ss = *g.lambda_ss;
    if (g.lambda_c) p.lambda_c = *g.lambda_c;
    if (g.alpha) p.alpha = *g.alpha;
    if (g.lambda_c_plus) p.lambda_c_plus = *g.lambda_c_plus;
    if (g.delta_bump) p.delta_bump = *g.delta_bump;
    if (g.mu) p.mu = *g.mu;
    if (g.n_power) p.n_power = *g.n_power;
    p.custom_cells = false;
    p.finalize();
    return validate_params(p);
}

json config_json(const MapParams& p, const GlobalOpts& g) {
    json cfg;
    for (const auto& [k, v] : params_to_key_values(p)) cfg[k] = v;
    cfg["seed"] = g.seed;
    cfg["threads"] = g.threads;
    return cfg;
}

std::string out_path(const GlobalOpts& g, const std::string& name) {
    std::filesystem::create_directories(g.out_dir);
    return (std::filesystem::path(g.out_dir) / name).string();
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << j.dump(2) << "\n";
}

void write_config_comments(std::ofstream& out, const MapParams& p, const GlobalOpts& g) {
    out << "# schema = " << report_schema_version << "\n";
    for (const auto& [k, v] : params_to_key_values(p)) out << "# " << k << " = " << v << "\n";
    out << "# seed = " << g.seed << "\n";
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    if (out.empty()) throw ConfigError("empty list: " + s);
    return out;
}

std::vector<int> parse_int_list_or_range(const std::string& s) {
    std::vector<int> out;
    if (auto colon = s.find(':'); colon != std::string::npos) {
        const int lo = std::stoi(s.substr(0, colon));
        const int hi = std::stoi(s.substr(colon + 1));
        for (int n = lo; n <= hi; ++n) out.push_back(n);
    } else {
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    }
    if (out.empty()) throw ConfigError("empty list: " + s);
    return out;
}

Point parse_point(const std::string& s) {
    auto v = parse_double_list(s);
    if (v.size() != 3) throw ConfigError("expected x,y,z: " + s);
    return Point{wrap01(v[0]), v[1], v[2]};
}

GridSpec parse_grid(const std::string& s) {
    GridSpec grid;
    if (std::sscanf(s.c_str(), "%dx%dx%d", &grid.nx, &grid.ny, &grid.nz) != 3)
        throw ConfigError("expected NXxNYxNZ: " + s);
    return grid;
}

Itinerary parse_word(const std::string& s, int l) {
    Itinerary w;
    w.orientation = Orientation::backward;
    for (char c : s) {
        if (c == ',') continue;
        if (c < '1' || c > '0' + l) throw ConfigError("word symbols must be 1.." + std::to_string(l));
        w.symbols.push_back(c - '0');
    }
    if (w.symbols.empty()) throw ConfigError("empty word");
    return w;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const GlobalOpts& g, long iters, const std::string& start,
                 const std::string& out_name) {
    MapParams p = resolve_params(g);
    Point pt = parse_point(start);
    const std::string path = out_path(g, out_name);
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    write_config_comments(out, p, g);
    out << "step,x,y,z\n";
    const bool deformed = p.mu > 0.0;
    DeformedMap dmap(deformed ? p : ex1_defaults());
    char line[128];
    for (long i = 0; i < iters; ++i) {
        std::snprintf(line, sizeof line, "%ld,%.17g,%.17g,%.17g\n", i, pt.x, pt.y, pt.z);
        out << line;
        pt = deformed ? dmap.apply(pt) : step(pt, p);
    }
    std::printf("wrote %ld orbit rows to %s\n", iters, path.c_str());
    return exit_ok;
}

int cmd_unstable_field(const GlobalOpts& g, int depth, int words, int period, double tol,
                       const std::string& out_name, bool perturb_audit, const std::string& n_list) {
    MapParams p = resolve_params(g);
    const std::string path = out_path(g, out_name);
    std::ofstream out(path);
    write_config_comments(out, p, g);
    out << "cylinder_word,alpha_uu,residual\n";
    auto word_str = [](const Itinerary& w) {
        std::string s;
        for (int sym : w.symbols) s += static_cast<char>('0' + sym);
        return s;
    };
    if (p.mu == 0.0) {
        for (const auto& e : cylinder_field(p, depth)) {
            char line[96];
            std::snprintf(line, sizeof line, ",%.17g,%.17g\n", e.value, e.residual);
            out << word_str(e.word) << line;
        }
    } else {
        FieldGrid grid;
        grid.n_words = words;
        grid.period = period;
        grid.seed = g.seed;
        SlopeField f = alpha_uu_fixed_point(p, grid, tol, 200, g.threads);
        for (const auto& s : f.samples) {
            char line[96];
            std::snprintf(line, sizeof line, ",%.17g,%.17g\n", s.value, s.residual);
            out << word_str(s.word) << line;
        }
        json rep;
        rep["schema"] = report_schema_version;
        rep["config"] = config_json(p, g);
        rep["eta"] = f.eta;
        rep["iterations"] = f.iterations;
        rep["final_change"] = f.final_change;
        rep["sup_bound"] = f.sup_bound;
        write_json(out_path(g, "field_report.json"), rep);
    }
    std::printf("wrote slope field to %s\n", path.c_str());

    if (perturb_audit) {
        FieldGrid grid;
        grid.n_words = words;
        grid.period = period;
        grid.seed = g.seed;
        json audits = json::array();
        bool all_pass = true;
        for (int n : parse_int_list_or_range(n_list)) {
            MapParams q = p;
            q.n_power = n;
            if (q.mu == 0.0) q.mu = 1.0;
            auto a = perturbation_audit(q, grid, tol, g.threads);
            audits.push_back({{"n", a.n},
                              {"mu", a.mu},
                              {"eta", a.eta},
                              {"sup_diff", a.sup_diff},
                              {"bound_rhs", a.bound_rhs},
                              {"d_A", a.d_A},
                              {"d_lambda", a.d_lambda},
                              {"alpha0_sup", a.alpha0_sup},
                              {"pass", a.pass}});
            all_pass = all_pass && a.pass;
        }
        json rep;
        rep["schema"] = report_schema_version;
        rep["config"] = config_json(p, g);
        rep["audits"] = audits;
        rep["pass"] = all_pass;
        write_json(out_path(g, "perturbation_report.json"), rep);
        std::printf("perturbation audit: %s\n", all_pass ? "pass" : "FAIL");
        if (!all_pass) return exit_audit_failed;
    }
    return exit_ok;
}

int cmd_transversality(const GlobalOpts& g, const std::string& eps_csv, long pairs, int depth,
                       bool exhaustive, int exhaustive_depth) {
    MapParams p = resolve_params(g);
    json rep;
    rep["schema"] = report_schema_version;
    rep["config"] = config_json(p, g);
    bool pass = true;

    if (p.mu > 0.0) {
        // deformed family: pairwise angles of the fixed-point slope field in
        // the fundamental stable window, against the half-angle floor
        FieldGrid grid;
        grid.seed = g.seed;
        auto def = transversality_audit_deformed(p, p.mu, p.n_power, grid, 0.0, 1e-11, g.threads);
        rep["deformed"] = {{"a", def.a},
                           {"n_pairs", def.pairs_found},
                           {"theta_hat", def.theta_hat},
                           {"slope_gap_min", def.slope_gap_min},
                           {"floor_half_theta", def.floor_half_theta},
                           {"pass", def.pass}};
        rep["pass"] = def.pass;
        write_json(out_path(g, "transversality_report.json"), rep);
        std::printf("deformed transversality audit: %s\n", def.pass ? "pass" : "FAIL");
        return def.pass ? exit_ok : exit_audit_failed;
    }

    auto eps_list = parse_double_list(eps_csv);
    auto audit = transversality_audit(p, eps_list, pairs, depth, g.seed, g.threads);
    json audits = json::array();
    for (const auto& a : audit.audits) {
        audits.push_back({{"epsilon", a.epsilon},
                          {"n_pairs", a.pairs_found},
                          {"theta_hat", a.theta_hat},
                          {"slope_gap_min", a.slope_gap_min},
                          {"closed_form_floor", a.closed_form_floor},
                          {"separation_floor", a.separation_floor},
                          {"pass", a.pass}});
    }
    rep["audits"] = audits;
    pass = pass && audit.pass;

    if (exhaustive) {
        if (p.example != Example::ex1)
            throw ConfigError("--exhaustive requires example 1");
        auto ex = transversality_audit_exhaustive(p, p.lambda_ss * p.lambda_ss, exhaustive_depth, g.threads);
        rep["exhaustive"] = {{"epsilon", ex.epsilon},
                             {"depth", ex.depth},
                             {"cylinders", ex.cylinders},
                             {"pairs_compared", ex.pairs_compared},
                             {"min_gap", ex.min_gap},
                             {"floor_C", ex.floor_C},
                             {"pass", ex.pass}};
        pass = pass && ex.pass;
    }
    rep["pass"] = pass;
    write_json(out_path(g, "transversality_report.json"), rep);

    // worst pairs for inspection
    const std::string csv = out_path(g, "transversality_worst_pairs.csv");
    std::ofstream out(csv);
    write_config_comments(out, p, g);
    out << "epsilon,x0,dss,slope_gap,angle,chart_dist\n";
    for (const auto& a : audit.audits)
        for (const auto& w : a.worst) {
            char line[160];
            std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", a.epsilon,
                          w.x0, w.dss, w.slope_gap, w.angle, w.chart_dist);
            out << line;
        }
    std::printf("transversality audit: %s\n", pass ? "pass" : "FAIL");
    return pass ? exit_ok : exit_audit_failed;
}

int cmd_ugibbs(const GlobalOpts& g, const std::string& word_str, int depth, long iters,
               int atoms_per_level, const std::string& out_name) {
    MapParams p = resolve_params(g);
    Itinerary w = word_str.empty() ? [&] {
        Rng rng(g.seed);
        return detail::random_word(rng, p.l, depth);
    }()
                                   : parse_word(word_str, p.l);
    UnstableCurve curve = make_unstable_curve(extend_periodic(w, depth), p, depth);
    EmpiricalMeasure mu = birkhoff_measure(curve, static_cast<int>(iters), p, atoms_per_level);

    const std::string path = out_path(g, out_name);
    std::ofstream out(path);
    write_config_comments(out, p, g);
    out << "x,y,z,weight\n";
    char line[160];
    for (const auto& a : mu.atoms) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", a.x, a.y, a.z, a.w);
        out << line;
    }

    // invariance defect against the default dictionary
    auto dict = ObservableDictionary::standard(p);
    EmpiricalMeasure push = pushforward(mu, p);
    double defect = 0.0;
    std::vector<double> vals(dict.size());
    std::vector<double> ia(dict.size(), 0.0), ib(dict.size(), 0.0);
    for (const auto& a : mu.atoms) {
        dict.evaluate(Point{a.x, a.y, a.z}, vals.data());
        for (int k = 0; k < dict.size(); ++k) ia[k] += a.w * vals[k];
    }
    for (const auto& a : push.atoms) {
        dict.evaluate(Point{a.x, a.y, a.z}, vals.data());
        for (int k = 0; k < dict.size(); ++k) ib[k] += a.w * vals[k];
    }
    for (int k = 0; k < dict.size(); ++k) defect = std::max(defect, std::fabs(ia[k] - ib[k]));

    json rep;
    rep["schema"] = report_schema_version;
    rep["config"] = config_json(p, g);
    rep["n_atoms"] = mu.atoms.size();
    rep["levels"] = iters;
    rep["total_mass"] = mu.total_mass;
    rep["invariance_defect"] = defect;
    rep["invariance_bound"] = 2.0 / static_cast<double>(iters);
    write_json(out_path(g, "ugibbs_report.json"), rep);
    std::printf("wrote %zu atoms to %s (invariance defect %.3g)\n", mu.atoms.size(), path.c_str(),
                defect);
    return exit_ok;
}

int cmd_norm_scan(const GlobalOpts& g, const std::string& source, const std::string& r_csv,
                  long iters, int atoms_per_level, int curve_atoms, const std::string& expect) {
    MapParams p = resolve_params(g);
    auto rs = parse_double_list(r_csv);

    ProjectedMeasure proj;
    Domain2D X{0.0, 1.0, -p.y_max(), p.y_max(), true};
    if (source == "uniform") {
        proj.chart.periodic_x = false;
        X = Domain2D{0.0, 1.0, 0.0, 1.0, false};
        const int n = 400;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                proj.atoms.push_back(
                    {(i + 0.5) / n, (j + 0.5) / n, 1.0 / (static_cast<double>(n) * n)});
        proj.recompute_mass();
    } else {
        Rng rng(g.seed);
        Itinerary w = detail::random_word(rng, p.l, 40);
        UnstableCurve curve = make_unstable_curve(w, p, 40);
        EmpiricalMeasure mu = source == "curve"
                                  ? lebesgue_on_curve(curve, curve_atoms)
                                  : birkhoff_measure(curve, static_cast<int>(iters), p,
                                                     atoms_per_level);
        proj = project_measure(mu, Chart{});
    }

    auto scan = abs_continuity_scan(proj, rs, X, 2.0, g.threads);
    json rep;
    rep["schema"] = report_schema_version;
    rep["config"] = config_json(p, g);
    rep["source"] = source;
    rep["bounded"] = scan.bounded;
    rep["max_min_ratio"] = scan.max_min_ratio;
    rep["fitted_exponent"] = scan.fitted_exponent;
    rep["bounded_threshold"] = scan.bounded_threshold;
    json entries = json::array();
    for (const auto& e : scan.entries)
        entries.push_back({{"r", e.r}, {"norm", e.norm}, {"atoms_per_ball", e.atoms_per_ball}});
    rep["entries"] = entries;

    bool pass = true;
    if (expect == "bounded") pass = scan.bounded;
    if (expect == "unbounded") pass = !scan.bounded;
    rep["pass"] = pass;
    write_json(out_path(g, "norm_scan_report.json"), rep);
    std::printf("norm scan (%s): %s, ratio %.3f, exponent %.3f\n", source.c_str(),
                scan.bounded ? "bounded" : "unbounded", scan.max_min_ratio, scan.fitted_exponent);
    return pass ? exit_ok : exit_audit_failed;
}

int cmd_inequality(const GlobalOpts& g, const std::string& n_spec, double r, double cn_scale,
                   int layers, int atoms_per_level) {
    MapParams p = resolve_params(g);
    auto ns = parse_int_list_or_range(n_spec);
    Rng rng(g.seed);
    Itinerary w = detail::random_word(rng, p.l, 40);
    UnstableCurve curve = make_unstable_curve(w, p, 40);

    InequalityConfig cfg;
    cfg.policy.scale = cn_scale;
    cfg.layers = layers;
    cfg.atoms_per_level = atoms_per_level;
    cfg.threads = g.threads;
    auto rep = main_inequality_table(curve, p, ns, r, cfg);

    json j;
    j["schema"] = report_schema_version;
    j["config"] = config_json(p, g);
    j["r"] = rep.r;
    j["cn_scale"] = rep.cn_scale;
    j["layers"] = rep.layers;
    j["atoms_per_level"] = rep.atoms_per_level;
    j["z_slabs"] = rep.z_slabs;
    j["floor_n"] = rep.floor_n;
    j["floor_value"] = rep.floor_value;
    j["mass_sq"] = rep.mass_sq;
    if (rep.fit_degenerate)
        j["sigma_hat"] = nullptr;
    else
        j["sigma_hat"] = rep.sigma_hat;
    j["fit_degenerate"] = rep.fit_degenerate;
    j["usable_count"] = rep.usable_count;
    j["pass"] = rep.pass;
    json entries = json::array();
    for (const auto& e : rep.entries)
        entries.push_back({{"n", e.n},
                           {"lhs", e.lhs},
                           {"mid", e.mid},
                           {"c_n", e.c_n},
                           {"R_n", e.R_n},
                           {"mid_valid", e.mid_valid},
                           {"usable", e.usable}});
    j["entries"] = entries;
    write_json(out_path(g, "inequality_report.json"), j);
    std::printf("two-norm audit: sigma_hat = %.4f (%s)\n", rep.sigma_hat,
                rep.pass ? "pass" : "FAIL");
    return rep.pass ? exit_ok : exit_audit_failed;
}

int cmd_basins(const GlobalOpts& g, const std::string& grid_spec, long iters, long burn_in,
               double cluster_tol, int expect_k, double min_fraction) {
    MapParams p = resolve_params(g);
    GridSpec grid = parse_grid(grid_spec);
    auto dict = ObservableDictionary::standard(p);
    std::vector<GridPointResult> detail_pts;
    auto rep = survey_basins(grid, dict, iters, burn_in, cluster_tol, p, g.threads, &detail_pts);

    json j;
    j["schema"] = report_schema_version;
    j["config"] = config_json(p, g);
    j["grid"] = grid_spec;
    j["n_iters"] = rep.n_iters;
    j["burn_in"] = rep.burn_in;
    j["cluster_tol"] = rep.cluster_tol;
    j["k_clusters"] = rep.k_clusters;
    j["basin_fractions"] = rep.basin_fractions;
    j["unresolved_fraction"] = rep.unresolved_fraction;
    j["cluster_centers"] = rep.cluster_centers;
    j["observables"] = dict.names;

    const std::string csv = out_path(g, "basins_points.csv");
    std::ofstream out(csv);
    write_config_comments(out, p, g);
    out << "x0,y0,z0";
    for (const auto& n : dict.names) out << ",avg_" << n;
    out << ",conv_gap,cluster_id\n";
    for (const auto& d : detail_pts) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", d.start.x, d.start.y, d.start.z);
        out << buf;
        for (double a : d.averages) {
            std::snprintf(buf, sizeof buf, ",%.17g", a);
            out << buf;
        }
        std::snprintf(buf, sizeof buf, ",%.17g,%d\n", d.conv_gap, d.cluster);
        out << buf;
    }

    bool pass = true;
    if (expect_k > 0) pass = rep.k_clusters == expect_k;
    if (min_fraction > 0.0) {
        double best = 0.0;
        for (double f : rep.basin_fractions) best = std::max(best, f);
        pass = pass && best >= min_fraction;
    }
    j["pass"] = pass;
    write_json(out_path(g, "basins_report.json"), j);
    std::printf("basins: k = %d, unresolved %.4f (%s)\n", rep.k_clusters,
                rep.unresolved_fraction, pass ? "pass" : "FAIL");
    return pass ? exit_ok : exit_audit_failed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynlab: numerical laboratory for skew-product attractors"};
    app.require_subcommand(1);
    GlobalOpts g;

    auto* sim = app.add_subcommand("simulate", "write an orbit as CSV");
    add_global_options(*sim, g);
    long iters = 1000;
    std::string start = "0.3,0.0,0.0", sim_out = "orbit.csv";
    sim->add_option("--iters", iters);
    sim->add_option("--start", start, "initial point x,y,z");
    sim->add_option("--out", sim_out);

    auto* field = app.add_subcommand("unstable-field", "slope field dump and audits");
    add_global_options(*field, g);
    int depth = 6, words = 200, period = 17;
    double tol = 1e-12;
    bool perturb_audit = false;
    std::string field_out = "field.csv", audit_n = "4,6,8";
    field->add_option("--depth", depth, "cylinder depth (mu = 0)");
    field->add_option("--words", words);
    field->add_option("--period", period);
    field->add_option("--tol", tol);
    field->add_option("--out", field_out);
    field->add_flag("--perturbation-audit", perturb_audit, "run the perturbation-bound audit");
    field->add_option("--audit-n", audit_n, "n values for the perturbation audit");

    auto* trans = app.add_subcommand("transversality", "transversality audits");
    add_global_options(*trans, g);
    std::string eps_csv = "0.1,0.05,0.02";
    long pairs = 20000;
    int tdepth = 30, exh_depth = 6;
    bool exhaustive = false;
    trans->add_option("--epsilon", eps_csv);
    trans->add_option("--pairs", pairs);
    trans->add_option("--depth", tdepth);
    trans->add_flag("--exhaustive", exhaustive, "exact depth-6 cylinder enumeration (example 1)");
    trans->add_option("--exhaustive-depth", exh_depth);

    auto* ug = app.add_subcommand("ugibbs", "Birkhoff push-forward measure");
    add_global_options(*ug, g);
    std::string word_str, ug_out = "measure.csv";
    long ug_iters = 10000;
    int ug_atoms = 100, ug_depth = 40;
    ug->add_option("--word", word_str, "backward word, e.g. 1,2,1 (default: random)");
    ug->add_option("--depth", ug_depth);
    ug->add_option("--iters", ug_iters);
    ug->add_option("--atoms-per-level", ug_atoms);
    ug->add_option("--out", ug_out);

    auto* scan = app.add_subcommand("norm-scan", "norm scan across radii");
    add_global_options(*scan, g);
    std::string source = "ugibbs", r_csv = "0.05,0.025,0.0125,0.00625,0.005", expect = "none";
    long scan_iters = 10000;
    int scan_atoms = 100, curve_atoms = 50000;
    scan->add_option("--source", source)->check(CLI::IsMember({"ugibbs", "curve", "uniform"}));
    scan->add_option("--r", r_csv, "decreasing radii, comma separated");
    scan->add_option("--iters", scan_iters);
    scan->add_option("--atoms-per-level", scan_atoms);
    scan->add_option("--curve-atoms", curve_atoms, "atom count for --source curve");
    scan->add_option("--expect", expect)->check(CLI::IsMember({"none", "bounded", "unbounded"}));

    auto* ineq = app.add_subcommand("inequality", "two-norm decay audit");
    add_global_options(*ineq, g);
    std::string n_spec = "1:6";
    double r = 0.002, cn_scale = 1.0;
    int layers = 16, ineq_atoms = 250000;
    ineq->add_option("--n", n_spec, "levels, e.g. 1:6 or 1,2,4");
    ineq->add_option("--r", r);
    ineq->add_option("--cn-scale", cn_scale);
    ineq->add_option("--layers", layers);
    ineq->add_option("--atoms-per-level", ineq_atoms);

    auto* bas = app.add_subcommand("basins", "Birkhoff-average basin survey");
    add_global_options(*bas, g);
    std::string grid_spec = "32x32x8";
    long bas_iters = 100000, burn_in = 1000;
    double cluster_tol = 0.01, min_fraction = 0.0;
    int expect_k = 0;
    bas->add_option("--grid", grid_spec);
    bas->add_option("--iters", bas_iters);
    bas->add_option("--burn-in", burn_in);
    bas->add_option("--cluster-tol", cluster_tol);
    bas->add_option("--expect-k", expect_k, "fail unless exactly this many clusters");
    bas->add_option("--min-fraction", min_fraction, "fail unless the top basin reaches this");

    try {
        app.parse(argc, argv);
        if (sim->parsed()) return cmd_simulate(g, iters, start, sim_out);
        if (field->parsed())
            return cmd_unstable_field(g, depth, words, period, tol, field_out, perturb_audit, audit_n);
        if (trans->parsed())
            return cmd_transversality(g, eps_csv, pairs, tdepth, exhaustive, exh_depth);
        if (ug->parsed()) return cmd_ugibbs(g, word_str, ug_depth, ug_iters, ug_atoms, ug_out);
        if (scan->parsed())
            return cmd_norm_scan(g, source, r_csv, scan_iters, scan_atoms, curve_atoms, expect);
        if (ineq->parsed()) return cmd_inequality(g, n_spec, r, cn_scale, layers, ineq_atoms);
        if (bas->parsed())
            return cmd_basins(g, grid_spec, bas_iters, burn_in, cluster_tol, expect_k,
                              min_fraction);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config_error;
    } catch (const ConstraintError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_config_error;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_config_error;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_config_error;
    }
    return exit_config_error;
}
