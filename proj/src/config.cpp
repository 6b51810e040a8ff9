#include "magschrod/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace msw {
namespace cli {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(trim(item)));
    return out;
}

Vec3 parse_vec3(const std::string& s) {
    std::vector<double> v = parse_list(s);
    if (v.size() != 3) throw std::invalid_argument("expected three components: " + s);
    return {v[0], v[1], v[2]};
}

struct KeySpec {
    std::string unit;
    std::function<void(RunConfig&, const std::string&)> apply;
};

const std::map<std::string, KeySpec>& key_table() {
    static const std::map<std::string, KeySpec> table = {
        {"grid.n", {"count", [](RunConfig& c, const std::string& v) { c.grid_n = std::stoi(v); }}},
        {"grid.box_length",
         {"length", [](RunConfig& c, const std::string& v) { c.box_length = std::stod(v); }}},
        {"run.workers",
         {"count", [](RunConfig& c, const std::string& v) { c.workers = std::stoi(v); }}},
        {"run.seed",
         {"seed", [](RunConfig& c, const std::string& v) { c.seed = std::stoull(v); }}},
        {"output.dir", {"path", [](RunConfig& c, const std::string& v) { c.output_dir = v; }}},
        {"sweep.h", {"list", [](RunConfig& c, const std::string& v) { c.h_sweep = parse_list(v); }}},
        {"sweep.tau",
         {"list", [](RunConfig& c, const std::string& v) { c.tau_sweep = parse_list(v); }}},
        {"sweep.epsilon",
         {"list", [](RunConfig& c, const std::string& v) { c.epsilon_sweep = parse_list(v); }}},
        {"cgo.sigma",
         {"dimensionless", [](RunConfig& c, const std::string& v) { c.sigma = std::stod(v); }}},
        {"cgo.h",
         {"dimensionless", [](RunConfig& c, const std::string& v) { c.cgo_h = std::stod(v); }}},
        {"cgo.xi_norm",
         {"dimensionless",
          [](RunConfig& c, const std::string& v) { c.cgo_xi_norm = std::stod(v); }}},
        {"cgo.xi_direction",
         {"list", [](RunConfig& c, const std::string& v) { c.xi_direction = parse_vec3(v); }}},
        {"carleman.epsilon",
         {"dimensionless",
          [](RunConfig& c, const std::string& v) { c.carleman_epsilon = std::stod(v); }}},
        {"carleman.samples",
         {"count", [](RunConfig& c, const std::string& v) { c.probe_samples = std::stoi(v); }}},
        {"recon.xi_ball",
         {"count", [](RunConfig& c, const std::string& v) { c.xi_ball = std::stoi(v); }}},
        {"recon.h_sweep",
         {"list", [](RunConfig& c, const std::string& v) { c.recon_h_sweep = parse_list(v); }}},
        {"recon.sigma",
         {"dimensionless",
          [](RunConfig& c, const std::string& v) { c.recon_sigma = std::stod(v); }}},
        {"recon.grid_n",
         {"count", [](RunConfig& c, const std::string& v) { c.recon_grid_n = std::stoi(v); }}},
        {"cauchy.modes",
         {"count", [](RunConfig& c, const std::string& v) { c.cauchy_modes = std::stoi(v); }}},
        {"forward.nodes",
         {"count", [](RunConfig& c, const std::string& v) { c.forward_nodes = std::stoi(v); }}},
        {"forward.stride",
         {"count", [](RunConfig& c, const std::string& v) { c.forward_stride = std::stoi(v); }}},
        {"potential1.kind",
         {"tag", [](RunConfig& c, const std::string& v) { c.potential1_kind = v; }}},
        {"potential1.amplitude",
         {"dimensionless",
          [](RunConfig& c, const std::string& v) { c.potential1_amplitude = std::stod(v); }}},
        {"potential1.q_amplitude",
         {"dimensionless",
          [](RunConfig& c, const std::string& v) { c.potential1_q_amplitude = std::stod(v); }}},
        {"potential1.direction",
         {"list",
          [](RunConfig& c, const std::string& v) { c.potential1_direction = parse_vec3(v); }}},
        {"potential1.radius_fraction",
         {"dimensionless",
          [](RunConfig& c, const std::string& v) { c.potential1_radius_fraction = std::stod(v); }}},
        {"potential2.kind",
         {"tag", [](RunConfig& c, const std::string& v) { c.potential2_kind = v; }}},
        {"potential2.amplitude",
         {"dimensionless",
          [](RunConfig& c, const std::string& v) { c.potential2_amplitude = std::stod(v); }}},
        {"potential2.q_amplitude",
         {"dimensionless",
          [](RunConfig& c, const std::string& v) { c.potential2_q_amplitude = std::stod(v); }}},
        {"potential2.direction",
         {"list",
          [](RunConfig& c, const std::string& v) { c.potential2_direction = parse_vec3(v); }}},
        {"potential2.radius_fraction",
         {"dimensionless",
          [](RunConfig& c, const std::string& v) { c.potential2_radius_fraction = std::stod(v); }}},
        {"gauge.amplitude",
         {"dimensionless",
          [](RunConfig& c, const std::string& v) { c.gauge_amplitude = std::stod(v); }}},
        {"gauge.width_fraction",
         {"dimensionless",
          [](RunConfig& c, const std::string& v) { c.gauge_width_fraction = std::stod(v); }}},
        {"dbar.samples",
         {"count", [](RunConfig& c, const std::string& v) { c.dbar_samples = std::stoi(v); }}},
        {"dbar.frames",
         {"count", [](RunConfig& c, const std::string& v) { c.dbar_frames = std::stoi(v); }}},
    };
    return table;
}

void check_descending(const std::vector<double>& v, const std::string& name) {
    if (v.empty()) throw std::invalid_argument("config: " + name + " must be nonempty");
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1]))
            throw std::invalid_argument("config: " + name + " must be sorted descending");
}

}  // namespace

RunConfig RunConfig::defaults() { return RunConfig{}; }

RunConfig RunConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: missing '=' at line " + std::to_string(lineno));
        std::string key = trim(t.substr(0, eq));
        std::string rest = trim(t.substr(eq + 1));
        std::size_t lb = rest.rfind('[');
        std::size_t rb = rest.rfind(']');
        if (lb == std::string::npos || rb == std::string::npos || rb < lb)
            throw std::invalid_argument("config: missing [unit] tag at line " +
                                        std::to_string(lineno));
        std::string value = trim(rest.substr(0, lb));
        std::string unit = trim(rest.substr(lb + 1, rb - lb - 1));
        auto it = key_table().find(key);
        if (it == key_table().end())
            throw std::invalid_argument("config: unknown key '" + key + "' at line " +
                                        std::to_string(lineno));
        if (it->second.unit != unit)
            throw std::invalid_argument("config: key '" + key + "' expects unit [" +
                                        it->second.unit + "], got [" + unit + "]");
        it->second.apply(cfg, value);
        cfg.echo[key] = value;
    }
    cfg.validate();
    return cfg;
}

void RunConfig::validate() const {
    check_descending(h_sweep, "sweep.h");
    check_descending(tau_sweep, "sweep.tau");
    check_descending(epsilon_sweep, "sweep.epsilon");
    check_descending(recon_h_sweep, "recon.h_sweep");
    if (!(sigma > 0.0 && sigma < 0.5))
        throw std::invalid_argument("config: cgo.sigma must lie in (0, 1/2)");
    if (!(recon_sigma > 0.0 && recon_sigma < 0.5))
        throw std::invalid_argument("config: recon.sigma must lie in (0, 1/2)");
    if (workers < 1) throw std::invalid_argument("config: run.workers must be positive");
}

}  // namespace cli
}  // namespace msw
