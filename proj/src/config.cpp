#include "qsflow/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace qsflow {

namespace {

[[noreturn]] void bad(const std::string& msg) { fail(ErrorCode::config_error, msg); }

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct KvReader {
    std::map<std::string, std::string> kv;
    mutable std::map<std::string, bool> seen;

    bool has(const std::string& key) const {
        const bool h = kv.count(key) > 0;
        if (h) seen[key] = true;
        return h;
    }
    std::string str(const std::string& key, const std::string& def = "") const {
        return has(key) ? kv.at(key) : def;
    }
    std::string required(const std::string& key) const {
        if (!has(key)) bad("missing required config key: " + key);
        return kv.at(key);
    }
    double num(const std::string& key, double def) const {
        if (!has(key)) return def;
        try {
            std::size_t pos = 0;
            const double v = std::stod(kv.at(key), &pos);
            if (pos != kv.at(key).size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            bad("config key " + key + " is not a number: " + kv.at(key));
        }
    }
    int integer(const std::string& key, int def) const {
        const double v = num(key, def);
        const int i = static_cast<int>(v);
        if (static_cast<double>(i) != v) bad("config key " + key + " must be an integer");
        return i;
    }
    bool flag(const std::string& key, bool def) const {
        if (!has(key)) return def;
        const std::string v = kv.at(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        bad("config key " + key + " must be a boolean: " + v);
    }
    std::vector<double> numbers(const std::string& key) const {
        std::vector<double> out;
        if (!has(key)) return out;
        std::istringstream s(kv.at(key));
        double v;
        while (s >> v) out.push_back(v);
        if (!s.eof()) bad("config key " + key + " must be a list of numbers");
        return out;
    }
};

} // namespace

RunConfig parse_config(const std::string& text) {
    KvReader r;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            bad("config line " + std::to_string(lineno) + " is not 'key = value': " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            bad("config line " + std::to_string(lineno) + " has an empty key or value");
        if (r.kv.count(key)) bad("duplicate config key: " + key);
        r.kv[key] = value;
    }

    RunConfig c;
    c.grid.mode = r.str("grid.mode", c.grid.mode);
    if (c.grid.mode != "axisymmetric" && c.grid.mode != "full2d")
        bad("grid.mode must be axisymmetric or full2d");
    c.grid.ntheta = r.integer("grid.ntheta", 0);
    if (c.grid.ntheta <= 0) bad("grid.ntheta is required and must be positive");
    c.grid.nphi = r.integer("grid.nphi", 0);
    c.grid.dim = r.integer("grid.dim", 3);
    if (c.grid.mode == "full2d" && c.grid.nphi <= 0) bad("full2d grids need grid.nphi");
    if (c.grid.mode == "full2d" && c.grid.dim != 3) bad("full2d grids have grid.dim = 3");

    c.surface.kind = r.str("surface.kind");
    if (c.surface.kind.empty()) bad("surface.kind is required");
    if (c.surface.kind == "sphere") {
        c.surface.radius = r.num("surface.radius", 0.0);
        if (!(c.surface.radius > 0.0)) bad("surface.radius must be positive");
    } else if (c.surface.kind == "ellipsoid") {
        c.surface.equatorial_radius = r.num("surface.equatorial_radius", 0.0);
        c.surface.polar_radius = r.num("surface.polar_radius", 0.0);
        if (!(c.surface.equatorial_radius > 0.0) || !(c.surface.polar_radius > 0.0))
            bad("ellipsoid semi-axes must be positive");
    } else if (c.surface.kind == "perturbed_sphere") {
        c.surface.base_radius = r.num("surface.base_radius", 0.0);
        c.surface.amplitude = r.num("surface.amplitude", 0.0);
        c.surface.mode = r.integer("surface.mode", 2);
        if (!(c.surface.base_radius > 0.0)) bad("surface.base_radius must be positive");
        if (std::abs(c.surface.amplitude) >= 1.0)
            bad("surface.amplitude must keep rho positive (|a| < 1)");
    } else if (c.surface.kind == "snapshot") {
        c.surface.file = r.required("surface.file");
        std::ifstream probe(c.surface.file);
        if (!probe) bad("surface.file does not exist: " + c.surface.file);
    } else {
        bad("unknown surface.kind: " + c.surface.kind);
    }

    c.flow.stop = r.str("flow.stop", c.flow.stop);
    if (c.flow.stop != "t_max" && c.flow.stop != "until_convex")
        bad("flow.stop must be t_max or until_convex");
    c.flow.t_max = r.num("flow.t_max", c.flow.t_max);
    c.flow.cfl = r.num("flow.cfl", c.flow.cfl);
    c.flow.record_dt = r.num("flow.record_dt", c.flow.record_dt);
    c.flow.dt_min = r.num("flow.dt_min", c.flow.dt_min);
    c.flow.snapshot_times = r.numbers("flow.snapshot_times");
    if (!(c.flow.cfl > 0.0) || !(c.flow.dt_min > 0.0) || !(c.flow.t_max > 0.0))
        bad("flow tolerances and t_max must be positive");

    c.foliation.t_max = r.num("foliation.t_max", c.foliation.t_max);
    c.foliation.dt = r.num("foliation.dt", c.foliation.dt);
    c.foliation.dump_fields = r.flag("foliation.dump_fields", false);

    c.lapse.kind = r.str("lapse.kind");
    if (!c.lapse.kind.empty()) {
        if (c.lapse.kind == "schwarzschild") {
            c.lapse.mass = r.num("lapse.mass", 0.0);
            if (!(c.lapse.mass > 0.0)) bad("lapse.mass must be positive");
        } else if (c.lapse.kind == "match_mean_curvature") {
            c.lapse.h_target = r.str("lapse.h_target", c.lapse.h_target);
            if (c.lapse.h_target == "schwarzschild") {
                c.lapse.mass = r.num("lapse.mass", 0.0);
                if (!(c.lapse.mass > 0.0)) bad("lapse.mass must be positive");
            } else if (c.lapse.h_target != "euclidean") {
                bad("lapse.h_target must be euclidean or schwarzschild");
            }
        } else if (c.lapse.kind == "eta_scale") {
            c.lapse.scale = r.num("lapse.scale", 0.0);
            if (!(c.lapse.scale > 0.0)) bad("lapse.scale must be positive");
        } else if (c.lapse.kind == "eta_perturbed") {
            c.lapse.amplitude = r.num("lapse.amplitude", 0.0);
            if (std::abs(c.lapse.amplitude) >= 1.0)
                bad("lapse.amplitude must keep u positive (|a| < 1)");
        } else {
            bad("unknown lapse.kind: " + c.lapse.kind);
        }
    }

    c.solver.rtol = r.num("solver.rtol", c.solver.rtol);
    c.solver.atol = r.num("solver.atol", c.solver.atol);
    c.solver.fixed_substeps = r.integer("solver.fixed_substeps", c.solver.fixed_substeps);
    c.solver.cg_tol = r.num("solver.cg_tol", c.solver.cg_tol);
    if (!(c.solver.rtol > 0.0) || !(c.solver.atol > 0.0) || !(c.solver.cg_tol > 0.0))
        bad("solver tolerances must be positive");

    c.pipeline.flow = r.str("pipeline.flow", c.pipeline.flow);
    if (c.pipeline.flow != "auto" && c.pipeline.flow != "off")
        bad("pipeline.flow must be auto or off");

    for (const auto& [key, value] : r.kv)
        if (!r.seen.count(key)) bad("unknown or unused config key: " + key);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(ErrorCode::config_error, "cannot open config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

} // namespace qsflow
