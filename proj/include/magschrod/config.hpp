#ifndef MAGSCHROD_CONFIG_HPP
#define MAGSCHROD_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "magschrod/vec.hpp"

namespace msw {
namespace cli {

/**
 * Flat key = value [unit] configuration. Every key carries an explicit unit
 * tag (dimensionless, length, count, seed, tag, list, path); unknown keys and
 * missing tags are errors, and every value is echoed into the run summary.
 */
struct RunConfig {
    int grid_n = 64;
    double box_length = 8.0;
    int workers = 2;
    std::uint64_t seed = 42;
    std::string output_dir = "out";

    std::vector<double> h_sweep = {0.4, 0.2, 0.1, 0.05};
    std::vector<double> tau_sweep = {0.2, 0.1, 0.05};
    std::vector<double> epsilon_sweep = {0.2, 0.1, 0.05};
    double sigma = 1.0 / 3.0;
    double carleman_epsilon = 0.1;
    int probe_samples = 100;

    int xi_ball = 4;
    std::vector<double> recon_h_sweep = {0.2, 0.1};
    double recon_sigma = 0.45;
    int recon_grid_n = 32;

    int cauchy_modes = 25;
    int forward_nodes = 17;
    int forward_stride = 2;

    double cgo_h = 0.1;
    double cgo_xi_norm = 1.5707963267948966;
    Vec3 xi_direction = {0.0, 0.0, 1.0};

    std::string potential1_kind = "smooth";
    double potential1_amplitude = 0.6;
    double potential1_q_amplitude = 0.4;
    Vec3 potential1_direction = {0.3, 0.9, 0.2};
    double potential1_radius_fraction = 0.2;

    std::string potential2_kind = "zero";
    double potential2_amplitude = 0.0;
    double potential2_q_amplitude = 0.0;
    Vec3 potential2_direction = {1.0, 0.0, 0.0};
    double potential2_radius_fraction = 0.2;

    double gauge_amplitude = 0.1;   // for potential2.kind = gauge_of_1
    double gauge_width_fraction = 0.035;

    int dbar_samples = 10;
    int dbar_frames = 5;

    /** echo of every parsed key for the summary */
    std::map<std::string, std::string> echo;

    static RunConfig parse_file(const std::string& path);
    static RunConfig defaults();
    void validate() const;
};

}  // namespace cli
}  // namespace msw

#endif
