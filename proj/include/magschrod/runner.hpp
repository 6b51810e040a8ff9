#ifndef MAGSCHROD_RUNNER_HPP
#define MAGSCHROD_RUNNER_HPP

#include <string>

#include "magschrod/config.hpp"

namespace msw {
namespace cli {

/** Exit codes: 0 success, 1 validation failure, 2 numerical non-convergence,
 *  64 unknown command or malformed configuration. */
enum ExitCode { kOk = 0, kValidation = 1, kNonConvergence = 2, kUsage = 64 };

int run_forward(const RunConfig& cfg);
int run_cgo(const RunConfig& cfg);
int run_carleman_probe(const RunConfig& cfg);
int run_dbar_verify(const RunConfig& cfg);
int run_reconstruct(const RunConfig& cfg);
int run_verify_gauge(const RunConfig& cfg);
int run_eskin_ralston(const RunConfig& cfg);

/** Dispatch for the CLI; argv-style interface usable from tests. */
int run_command(int argc, const char* const* argv);

}  // namespace cli
}  // namespace msw

#endif
