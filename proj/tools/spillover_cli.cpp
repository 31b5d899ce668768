// spillover_cli: command-line harness for the spill-over attack library.
//
//   spillover_cli attack --synth toy --seed 7 --out run1
//   spillover_cli attack --config run1/run.cfg --out run2   # reproduces run1
//
// Exit codes: 0 spill-over found (or verification passed), 2 no spill-over,
// 1 usage or data error, 3 invariant violation.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "spillover/attack.hpp"
#include "spillover/theory.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace spillover;

namespace {

using Config = std::map<std::string, std::string>;

constexpr int kExitSpill = 0;
constexpr int kExitError = 1;
constexpr int kExitNoSpill = 2;
constexpr int kExitViolation = 3;

const std::map<std::string, std::set<std::string>>& command_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"attack", {"backend", "budget", "data", "delta", "depth-floor", "header", "optimizer", "project", "seed", "seeds", "source", "synth"}},
        {"toy", {"backend", "budget", "delta", "depth-floor", "optimizer", "seed", "seeds", "source"}},
        {"depth-report", {"backend", "data", "header", "seed", "synth"}},
        {"verify-theorem1", {"data", "header", "seed", "seeds", "source", "synth"}},
        {"verify-theorem2", {"data", "header", "seed", "seeds", "source", "synth", "zeta"}},
    };
    return keys;
}

const std::vector<std::string>& all_keys() {
    static const std::vector<std::string> keys{"backend", "budget", "data", "delta", "depth-floor", "header", "optimizer",
                                               "project", "seed", "seeds", "source", "synth", "zeta"};
    return keys;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << content;
}

/// Reads a config from a key=value file, from the "#config " lines embedded
/// in a CSV or SVG artifact, or from the "config" object of a JSON artifact.
Config load_config_file(const fs::path& path) {
    const std::string text = read_file(path);
    Config cfg;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::exception& e) {
            throw ConfigError("config file " + path.string() + ": " + e.what());
        }
        if (!j.contains("config") || !j["config"].is_object()) throw ConfigError("config file " + path.string() + " has no config object");
        for (const auto& [k, v] : j["config"].items()) {
            if (!v.is_string()) throw ConfigError("config value for " + k + " must be a string");
            cfg[k] = v.get<std::string>();
        }
        return cfg;
    }
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    const bool embedded = std::any_of(lines.begin(), lines.end(), [](const auto& l) { return l.rfind("#config ", 0) == 0; });
    for (std::size_t n = 0; n < lines.size(); ++n) {
        std::string line = lines[n];
        if (embedded) {
            if (line.rfind("#config ", 0) != 0) continue;
            line = line.substr(8);
        }
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config file " + path.string() + " line " + std::to_string(n + 1) + ": expected key=value");
        cfg[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return cfg;
}

std::string config_text(const Config& c, const std::string& prefix = "") {
    std::string s;
    for (const auto& [k, v] : c) s += prefix + k + "=" + v + "\n";
    return s;
}

json config_json(const Config& c) {
    json j = json::object();
    for (const auto& [k, v] : c) j[k] = v;
    return j;
}

// ---------------------------------------------------------------------------
// Value parsing
// ---------------------------------------------------------------------------

double to_real(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size() && std::isfinite(d)) return d;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": expected a real number, got '" + v + "'");
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw ConfigError(key + ": integer out of range");
    }
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

std::vector<std::uint64_t> seed_list(const Config& c) {
    if (!c.count("seeds")) return {to_uint("seed", c.at("seed"))};
    const auto& v = c.at("seeds");
    const auto dots = v.find("..");
    if (dots == std::string::npos) throw ConfigError("seeds: expected a range a..b");
    const auto a = to_uint("seeds", v.substr(0, dots));
    const auto b = to_uint("seeds", v.substr(dots + 2));
    if (b < a) throw ConfigError("seeds: empty range " + v);
    if (b - a >= 10000) throw ConfigError("seeds: range too large");
    std::vector<std::uint64_t> out;
    for (auto s = a; s <= b; ++s) out.push_back(s);
    return out;
}

/// Merges defaults into the user config and rejects keys the command does not use.
Config effective_config(const std::string& command, Config c) {
    const auto& allowed = command_keys().at(command);
    if (c.count("command") && c["command"] != command)
        throw ConfigError("config was written by '" + c["command"] + "', not '" + command + "'");
    c.erase("command");
    for (const auto& [k, v] : c)
        if (!allowed.count(k)) throw ConfigError("option '" + k + "' does not apply to " + command);

    const auto fill = [&](const std::string& k, const std::string& v) {
        if (allowed.count(k) && !c.count(k)) c[k] = v;
    };
    if (c.count("seeds"))
        c.erase("seed");
    else
        fill("seed", "0");
    fill("backend", "kmeans");
    fill("budget", "auto");
    fill("delta", "auto");
    fill("depth-floor", "0.1");
    fill("optimizer", "cors");
    fill("zeta", "0");
    fill("source", command == "verify-theorem2" ? "0" : "auto");
    if (allowed.count("data")) {
        if (c.count("data") && c.count("synth")) throw ConfigError("give either data or synth, not both");
        if (!c.count("data")) {
            if (command == "attack" || command == "depth-report") {
                if (!c.count("synth")) throw ConfigError(command + " needs --data <csv> or --synth toy");
            } else {
                fill("synth", "toy");
            }
            c.erase("header");
        } else {
            fill("header", "false");
        }
    }
    if (c.count("synth") && c["synth"] != "toy") throw ConfigError("unknown synth '" + c["synth"] + "' (available: toy)");
    if (c.count("header") && c["header"] != "true" && c["header"] != "false") throw ConfigError("header: expected true or false");
    if (c.count("backend")) parse_backend(c["backend"]);
    if (c.count("optimizer") && c["optimizer"] != "cors" && c["optimizer"] != "anneal")
        throw ConfigError("optimizer: expected cors or anneal");
    if (c.count("source") && c["source"] != "auto" && c["source"] != "0" && c["source"] != "1")
        throw ConfigError("source: expected auto, 0 or 1");
    if (command == "verify-theorem2" && c["source"] == "auto") throw ConfigError("source: verify-theorem2 takes 0 or 1");
    if (c.count("zeta") && !(to_real("zeta", c["zeta"]) >= 0.0)) throw ConfigError("zeta must be >= 0");
    if (c.count("depth-floor")) {
        const double q = to_real("depth-floor", c["depth-floor"]);
        if (!(q > 0.0 && q < 1.0)) throw ConfigError("depth-floor must lie in (0, 1)");
    }
    seed_list(c);
    c["command"] = command;
    return c;
}

// ---------------------------------------------------------------------------
// Data and roles
// ---------------------------------------------------------------------------

struct Loaded {
    Dataset data;
    std::vector<int> generator;  // generating component per row, synthetic data only
};

Loaded load_data(const Config& c, std::uint64_t seed) {
    if (c.count("data")) return {load_csv(c.at("data"), c.at("header") == "true"), {}};
    const auto specs = toy_specs();
    std::vector<int> gen;
    for (std::size_t k = 0; k < specs.size(); ++k) gen.insert(gen.end(), specs[k].count, static_cast<int>(k));
    return {synth_gaussians(specs, seed), gen};
}

/// "auto" picks the cluster holding most of the broad generator component
/// on synthetic data, and cluster 0 otherwise.
int resolve_source(const Config& c, const Loaded& l, const ClusterAssignment& a) {
    const auto& s = c.at("source");
    if (s != "auto") return std::stoi(s);
    if (l.generator.empty()) return 0;
    std::array<std::size_t, 2> hits{};
    for (std::size_t i = 0; i < a.size(); ++i)
        if (l.generator[i] == 0) ++hits[static_cast<std::size_t>(a.label(i))];
    return hits[1] > hits[0] ? 1 : 0;
}

std::vector<double> vec(const Vector& v) { return {v.data(), v.data() + v.size()}; }

std::vector<std::size_t> ids_of(const Dataset& d, const std::vector<std::size_t>& rows) {
    std::vector<std::size_t> out;
    for (const auto r : rows) out.push_back(d.sample_ids()[r]);
    return out;
}

// ---------------------------------------------------------------------------
// attack / toy
// ---------------------------------------------------------------------------

struct AttackRun {
    Loaded loaded;
    AttackReport report;
    int exit_code = kExitNoSpill;
    double target_alignment = 0.0;
};

AttackConfig attack_config(const Config& c, std::uint64_t seed, const Loaded& l, int source) {
    const auto m = static_cast<Eigen::Index>(l.data.cols());
    AttackConfig ac;
    ac.backend = parse_backend(c.at("backend"));
    ac.cluster_seed = seed;
    ac.optimizer_seed = seed;
    ac.source_cluster = source;
    ac.target_cluster = 1 - source;
    ac.depth_floor = to_real("depth-floor", c.at("depth-floor"));
    ac.optimizer = c.at("optimizer") == "anneal" ? Optimizer::anneal : Optimizer::cors;
    const auto& d = c.at("delta");
    if (d != "auto") {
        const auto parts = split(d, ',');
        Vector delta(m);
        if (parts.size() == 1) {
            delta.setConstant(to_real("delta", parts[0]));
        } else if (static_cast<Eigen::Index>(parts.size()) == m) {
            for (Eigen::Index j = 0; j < m; ++j) delta(j) = to_real("delta", parts[static_cast<std::size_t>(j)]);
        } else {
            throw ConfigError("delta: expected auto, one value, or " + std::to_string(m) + " comma-separated values");
        }
        if ((delta.array() < 0.0).any()) throw ConfigError("delta: half-widths must be >= 0");
        ac.box = PerturbationBox{delta};
    }
    if (c.at("budget") != "auto") {
        const auto total = static_cast<int>(to_uint("budget", c.at("budget")));
        OptimBudget b = OptimBudget::defaults_for(m, seed);
        b.total_evals = total;
        b.init_evals = std::min(b.init_evals, total - 1);
        ac.budget = b;
    }
    return ac;
}

AttackRun execute_attack(const Config& c, std::uint64_t seed) {
    AttackRun run{load_data(c, seed), {}, kExitNoSpill, 0.0};
    const ClusterModel model = cluster(run.loaded.data, parse_backend(c.at("backend")), seed);
    const int source = resolve_source(c, run.loaded, model.assignment);
    run.report = run_attack(run.loaded.data, attack_config(c, seed, run.loaded, source));
    const auto& r = run.report;
    const Matrix& x = run.loaded.data.values();
    const Vector c1 = cluster_rows(x, r.before, r.source_cluster).colwise().mean().transpose();
    const Vector c2 = cluster_rows(x, r.before, r.target_cluster).colwise().mean().transpose();
    run.target_alignment = (r.target_point - c1).dot(c2 - c1);
    run.exit_code = r.spillover.empty() ? kExitNoSpill : kExitSpill;
    return run;
}

json report_json(const Config& c, const AttackRun& run) {
    const auto& r = run.report;
    const auto& d = run.loaded.data;
    json j;
    j["config"] = config_json(c);
    j["n"] = d.rows();
    j["m"] = d.cols();
    j["source_cluster"] = r.source_cluster;
    j["target_cluster"] = r.target_cluster;
    j["cluster_sizes"] = r.cluster_sizes;
    j["target_index"] = r.target_index;
    j["target_sample_id"] = d.sample_ids()[r.target_index];
    j["target_point"] = vec(r.target_point);
    j["target_alignment"] = run.target_alignment;
    j["delta_box"] = vec(r.delta_box);
    j["epsilon_star"] = vec(r.epsilon_star);
    j["perturbed_target"] = vec(r.perturbed_target);
    j["delta_value"] = r.delta_value;
    j["n_s"] = r.spillover.size();
    j["spillover"] = r.spillover;
    j["reverse_spill"] = r.reverse_spill;
    j["target_moved"] = r.target_moved;
    j["depth_of_perturbed"] = r.depth_of_perturbed;
    j["depth_floor"] = r.depth_floor;
    j["depth_floor_value"] = r.depth_floor_value;
    j["depth_quantile"] = r.depth_quantile;
    j["outlier_risk"] = r.outlier_risk;
    j["evaluations"] = r.eval_trace.size();
    json trace = json::array();
    for (const auto& e : r.eval_trace)
        trace.push_back({{"value", e.value}, {"best_so_far", e.best_so_far}, {"beta", e.beta}, {"point", vec(e.point)}});
    j["eval_trace"] = std::move(trace);
    return j;
}

std::string assignments_csv(const Config& c, const AttackRun& run) {
    std::string s = config_text(c, "#config ");
    s += "sample_id,cluster_before,cluster_after\n";
    const auto& r = run.report;
    for (std::size_t i = 0; i < r.before.size(); ++i)
        s += std::to_string(run.loaded.data.sample_ids()[i]) + "," + std::to_string(r.before.label(i)) + "," +
             std::to_string(r.after.label(i)) + "\n";
    return s;
}

const char* kColor[2] = {"#4477aa", "#ee8866"};

struct Projection {
    Eigen::Index a = 0;
    Eigen::Index b = 1;
};

std::optional<Projection> projection_for(const Config& c, const Dataset& d) {
    if (c.count("project")) {
        const auto parts = split(c.at("project"), ',');
        if (parts.size() != 2) throw ConfigError("project: expected two column indices c,c");
        const Projection p{static_cast<Eigen::Index>(to_uint("project", parts[0])),
                           static_cast<Eigen::Index>(to_uint("project", parts[1]))};
        if (p.a >= static_cast<Eigen::Index>(d.cols()) || p.b >= static_cast<Eigen::Index>(d.cols()))
            throw ConfigError("project: column index out of range");
        return p;
    }
    if (d.cols() == 2) return Projection{};
    return std::nullopt;
}

std::vector<std::array<double, 2>> projected(const AttackRun& run, Projection p) {
    std::vector<std::array<double, 2>> pts;
    const Matrix& x = run.loaded.data.values();
    for (Eigen::Index i = 0; i < x.rows(); ++i) pts.push_back({x(i, p.a), x(i, p.b)});
    pts.push_back({run.report.perturbed_target(p.a), run.report.perturbed_target(p.b)});
    return pts;
}

enum class Panel { clusters, perturbed, spillover, depth };

std::string scatter_svg(const Config& c, const AttackRun& run, Projection p, Panel panel, const std::string& title) {
    const auto& r = run.report;
    const auto pts = projected(run, p);
    const auto b = cli::SvgPlot::bounds(pts);
    cli::SvgPlot plot(b[0], b[1], b[2], b[3], title);
    plot.comment(config_text(c, "#config "));
    const std::size_t n = run.loaded.data.rows();
    const auto& labels = panel == Panel::perturbed ? r.after : r.before;

    if (panel == Panel::depth) {
        const ComdModel model(run.loaded.data.values(), r.before);
        const DepthReport dr(run.loaded.data, r.before);
        // Depth field over the projected plane with the other coordinates held at the target.
        const auto field = [&](double u, double v) {
            Vector q = r.target_point;
            q(p.a) = u;
            q(p.b) = v;
            return model(q);
        };
        for (const double q : {0.25, 0.5, 0.75}) plot.path(cli::iso_line(plot, field, dr.floor_value(q), b, 120), "#999999");
        plot.path(cli::iso_line(plot, field, r.depth_floor_value, b, 120), "#cc3311");
        plot.rect(r.target_point(p.a) - r.delta_box(p.a), r.target_point(p.b) - r.delta_box(p.b),
                  r.target_point(p.a) + r.delta_box(p.a), r.target_point(p.b) + r.delta_box(p.b), "#222222");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (i == r.target_index) continue;
        const auto& q = pts[i];
        const std::string fill = panel == Panel::depth ? "#bbbbbb" : kColor[labels.label(i)];
        plot.circle(q[0], q[1], 3.0, fill);
    }
    if (panel == Panel::spillover || panel == Panel::clusters) {
        const std::set<std::size_t> spill(r.spillover.begin(), r.spillover.end());
        if (panel == Panel::spillover)
            for (std::size_t i = 0; i < n; ++i)
                if (spill.count(run.loaded.data.sample_ids()[i])) plot.ring(pts[i][0], pts[i][1], 7.0, "#228833");
    }
    if (panel == Panel::clusters) {
        for (int k = 0; k < 2; ++k) {
            const Vector cen = cluster_rows(run.loaded.data.values(), r.before, k).colwise().mean().transpose();
            plot.cross(cen(p.a), cen(p.b), 6.0, kColor[k]);
        }
    }
    const auto& xt = pts[r.target_index];
    const auto& xp = pts.back();
    plot.square(xt[0], xt[1], 5.0, "black");
    if (panel != Panel::clusters) {
        plot.line(xt[0], xt[1], xp[0], xp[1], "#222222", true);
        plot.triangle(xp[0], xp[1], 6.0, "#cc3311");
    }
    std::vector<std::pair<std::string, std::string>> legend;
    if (panel != Panel::depth) {
        legend.emplace_back(kColor[0], "cluster 0");
        legend.emplace_back(kColor[1], "cluster 1");
    } else {
        legend.emplace_back("#cc3311", "COMD floor");
        legend.emplace_back("#999999", "COMD 25/50/75%");
    }
    legend.emplace_back("black", "target x_t");
    if (panel != Panel::clusters) legend.emplace_back("#cc3311", "perturbed x_t'");
    if (panel == Panel::spillover) legend.emplace_back("#228833", "spill-over (" + std::to_string(r.spillover.size()) + ")");
    plot.legend(legend);
    return plot.str();
}

int write_attack_outputs(const Config& c, const AttackRun& run, const fs::path& out, bool toy) {
    write_file(out / "run.cfg", config_text(c));
    write_file(out / "report.json", report_json(c, run).dump(2) + "\n");
    write_file(out / "assignments.csv", assignments_csv(c, run));
    if (toy) {
        const Projection p{};
        write_file(out / "toy_1_clusters.svg", scatter_svg(c, run, p, Panel::clusters, "original clusters and target"));
        write_file(out / "toy_2_perturbed.svg", scatter_svg(c, run, p, Panel::perturbed, "clusters after perturbing the target"));
        write_file(out / "toy_3_spillover.svg", scatter_svg(c, run, p, Panel::spillover, "spill-over samples"));
        write_file(out / "toy_4_depth.svg", scatter_svg(c, run, p, Panel::depth, "COMD contours and perturbation box"));
    } else if (const auto p = projection_for(c, run.loaded.data)) {
        write_file(out / "clusters.svg", scatter_svg(c, run, *p, Panel::spillover, "clusters, target and spill-over"));
    }
    return run.exit_code;
}

std::string summary_line(std::uint64_t seed, const AttackReport& r) {
    std::ostringstream s;
    s << "seed " << seed << ": target " << r.target_index << ", delta " << r.delta_value << ", spill-over " << r.spillover.size()
      << ", depth quantile " << r.depth_quantile << (r.outlier_risk ? " (outlier risk)" : "");
    return s.str();
}

int cmd_attack(const Config& c, const fs::path& out, bool toy) {
    const auto seeds = seed_list(c);
    if (!c.count("seeds")) {
        const AttackRun run = execute_attack(c, seeds.front());
        std::cout << summary_line(seeds.front(), run.report) << "\n";
        return write_attack_outputs(c, run, out, toy);
    }
    json runs = json::array();
    bool any = false;
    for (const auto s : seeds) {
        Config one = c;
        one.erase("seeds");
        one["seed"] = std::to_string(s);
        const AttackRun run = execute_attack(one, s);
        std::cout << summary_line(s, run.report) << "\n";
        const int code = write_attack_outputs(one, run, out / ("seed_" + std::to_string(s)), toy);
        any = any || code == kExitSpill;
        runs.push_back({{"seed", s},
                        {"n_s", run.report.spillover.size()},
                        {"delta_value", run.report.delta_value},
                        {"target_moved", run.report.target_moved},
                        {"depth_quantile", run.report.depth_quantile},
                        {"outlier_risk", run.report.outlier_risk}});
    }
    json j;
    j["config"] = config_json(c);
    j["runs"] = std::move(runs);
    write_file(out / "run.cfg", config_text(c));
    write_file(out / "sweep.json", j.dump(2) + "\n");
    return any ? kExitSpill : kExitNoSpill;
}

// ---------------------------------------------------------------------------
// depth-report
// ---------------------------------------------------------------------------

int cmd_depth_report(const Config& c, const fs::path& out) {
    const auto seed = seed_list(c).front();
    const Loaded l = load_data(c, seed);
    const ClusterModel model = cluster(l.data, parse_backend(c.at("backend")), seed);
    const DepthReport rep(l.data, model.assignment);
    std::string s = config_text(c, "#config ");
    s += "sample_id,comd,quantile\n";
    char buf[96];
    for (std::size_t i = 0; i < l.data.rows(); ++i) {
        const double v = rep.per_sample_comd()[i];
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", v, rep.quantile_of(v));
        s += std::to_string(l.data.sample_ids()[i]) + buf;
    }
    write_file(out / "run.cfg", config_text(c));
    write_file(out / "depth_report.csv", s);
    std::cout << "depth report: " << l.data.rows() << " samples\n";
    return 0;
}

// ---------------------------------------------------------------------------
// verify-theorem1 / verify-theorem2
// ---------------------------------------------------------------------------

int cmd_theorem1(const Config& c, const fs::path& out) {
    json runs = json::array();
    bool ok = true;
    std::size_t predicted = 0;
    for (const auto seed : seed_list(c)) {
        const Loaded l = load_data(c, seed);
        const ClusterModel model = kmeans(l.data, {seed});
        const int source = resolve_source(c, l, model.assignment);
        const auto cert = theorem1_certify(l.data, model, source);
        const auto violations = certificate_violations(l.data, cert);
        const auto v = theorem1_validate(l.data, cert, seed);
        const bool run_ok = violations.empty() && v.missed.empty() && v.unexpected.empty();
        ok = ok && run_ok;
        predicted += cert.predicted_spill.size();
        json cand = json::array();
        for (const auto& k : cert.candidates)
            if (k.predicted)
                cand.push_back({{"sample_id", l.data.sample_ids()[k.index]}, {"alpha", k.alpha}, {"bound", k.bound}, {"alignment", k.alignment}});
        runs.push_back({{"seed", seed},
                        {"source_cluster", source},
                        {"target_sample_id", l.data.sample_ids()[cert.target]},
                        {"source_size", cert.source_size},
                        {"target_alignment", cert.target_alignment},
                        {"c1", vec(cert.c1)},
                        {"c2", vec(cert.c2)},
                        {"shifted_center", vec(cert.shifted_center)},
                        {"center_shift", vec(cert.center_shift)},
                        {"candidates", cert.candidates.size()},
                        {"predicted_spill", ids_of(l.data, cert.predicted_spill)},
                        {"predicted", std::move(cand)},
                        {"one_pass_spill", ids_of(l.data, v.one_pass_spill)},
                        {"full_spill", ids_of(l.data, v.full_spill)},
                        {"fresh_spill", ids_of(l.data, v.fresh_spill)},
                        {"missed", ids_of(l.data, v.missed)},
                        {"unexpected", ids_of(l.data, v.unexpected)},
                        {"violations", violations},
                        {"pass", run_ok}});
    }
    json j;
    j["config"] = config_json(c);
    j["pass"] = ok;
    j["predicted_spill_total"] = predicted;
    j["runs"] = std::move(runs);
    write_file(out / "run.cfg", config_text(c));
    write_file(out / "theorem1.json", j.dump(2) + "\n");
    std::cout << "theorem 1: " << (ok ? "all checks pass" : "INVARIANT VIOLATION") << ", " << predicted << " predicted spill-over samples\n";
    return ok ? 0 : kExitViolation;
}

int cmd_theorem2(const Config& c, const fs::path& out) {
    const double zeta = to_real("zeta", c.at("zeta"));
    const int source = std::stoi(c.at("source"));
    json runs = json::array();
    std::size_t records = 0;
    std::size_t persisted = 0;
    bool ok = true;
    for (const auto seed : seed_list(c)) {
        const Loaded l = load_data(c, seed);
        const auto rep = theorem2_experiment(l.data, {zeta, seed}, source);
        records += rep.records.size();
        persisted += rep.persisted();
        bool run_ok = rep.metric_violations == 0 && rep.all_inequalities_hold();
        if (zeta == 0.0 && rep.persisted() != rep.records.size()) run_ok = false;
        ok = ok && run_ok;
        json recs = json::array();
        for (const auto& r : rep.records)
            recs.push_back({{"sample_id", l.data.sample_ids()[r.sample]},
                            {"spilled_under_true", r.spilled_under_true},
                            {"margin", r.margin},
                            {"gamma", r.gamma},
                            {"lower_bound", r.lower_bound},
                            {"inequality_holds", r.inequality_holds}});
        runs.push_back({{"seed", seed},
                        {"perturbed_sample_id", l.data.sample_ids()[rep.perturbed]},
                        {"metric_violations", rep.metric_violations},
                        {"noisy_medoids_before", ids_of(l.data, {rep.noisy_medoids_before.begin(), rep.noisy_medoids_before.end()})},
                        {"noisy_medoids_after", ids_of(l.data, {rep.noisy_medoids_after.begin(), rep.noisy_medoids_after.end()})},
                        {"true_medoids_before", ids_of(l.data, {rep.true_medoids_before.begin(), rep.true_medoids_before.end()})},
                        {"true_medoids_after", ids_of(l.data, {rep.true_medoids_after.begin(), rep.true_medoids_after.end()})},
                        {"records", std::move(recs)},
                        {"persisted", rep.persisted()},
                        {"pass", run_ok}});
    }
    json j;
    j["config"] = config_json(c);
    j["pass"] = ok;
    j["zeta"] = zeta;
    j["spilled_under_noisy"] = records;
    j["persisted_under_true"] = persisted;
    j["persistence_rate"] = records ? json(static_cast<double>(persisted) / static_cast<double>(records)) : json(nullptr);
    j["runs"] = std::move(runs);
    write_file(out / "run.cfg", config_text(c));
    write_file(out / "theorem2.json", j.dump(2) + "\n");
    std::cout << "theorem 2: " << (ok ? "all checks pass" : "INVARIANT VIOLATION") << ", " << persisted << " of " << records
              << " spilled samples persist under the true metric\n";
    return ok ? 0 : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spill-over adversarial attack on 2-way clustering"};
    std::string command;
    app.add_option("command", command, "attack | toy | depth-report | verify-theorem1 | verify-theorem2")
        ->required()
        ->check(CLI::IsMember({"attack", "toy", "depth-report", "verify-theorem1", "verify-theorem2"}));
    std::map<std::string, std::string> flags;
    std::map<std::string, CLI::Option*> opts;
    const std::map<std::string, std::string> help{
        {"backend", "kmeans | ward"},
        {"budget", "total objective evaluations, or auto"},
        {"data", "CSV file of numeric features"},
        {"delta", "auto, a scalar, or comma-separated half-widths"},
        {"depth-floor", "COMD quantile floor (default 0.1)"},
        {"header", "true if the CSV has a header row"},
        {"optimizer", "cors | anneal"},
        {"project", "two feature columns for the scatter plot, c,c"},
        {"seed", "seed for data synthesis, clustering and optimizer"},
        {"seeds", "seed sweep a..b"},
        {"source", "cluster to spill from: auto | 0 | 1"},
        {"synth", "synthetic dataset: toy"},
        {"zeta", "noise bound for verify-theorem2"},
    };
    for (const auto& k : all_keys()) opts[k] = app.add_option("--" + k, flags[k], help.at(k));
    std::string config_path;
    std::string out = "spillover_out";
    app.add_option("--config", config_path, "key=value file, or an artifact with an embedded config");
    app.add_option("--out", out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitError;
    }

    try {
        Config c = config_path.empty() ? Config{} : load_config_file(config_path);
        for (const auto& k : all_keys())
            if (opts[k]->count() > 0) c[k] = flags[k];
        c = effective_config(command, c);
        if (command == "attack") return cmd_attack(c, out, false);
        if (command == "toy") return cmd_attack(c, out, true);
        if (command == "depth-report") return cmd_depth_report(c, out);
        if (command == "verify-theorem1") return cmd_theorem1(c, out);
        return cmd_theorem2(c, out);
    } catch (const spillover::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}
