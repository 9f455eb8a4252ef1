#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace chaoslab {

/*!
 * Resolved experiment settings.
 *
 * Built from an optional JSON config file, then overridden by command-line
 * flags. Zero for m or p means "family default"; after resolve() every
 * field holds the value actually used.
 */
struct ExperimentConfig
{
    std::string command;      // bound | diagnose | mc | selftest
    std::string family;       // qvar | offdiag-rand | pair2d
    std::string kernel_path;  // serialized Kernel, ChaosExpansion or ChaosVector
    std::size_t m = 0;
    int p = 0;
    std::size_t n = 16;
    std::vector<std::size_t> n_grid;
    std::vector<double> t_grid;
    std::size_t N = 100000;
    std::uint64_t seed = 1;
    std::size_t bins = 200;
    std::string pair = "mehler";  // diagnose: mehler | gibbs
    std::string out;              // output prefix; empty prints to stdout only
    bool plot_data = false;

    // Fills family defaults and checks consistency; raises InputError.
    void resolve();

    nlohmann::json to_json() const;
    // Unknown keys and wrong types are input errors.
    static ExperimentConfig from_json(nlohmann::json const& j);

    // FNV-1a of the JSON form without the output fields.
    std::string hash() const;
};

// Runs one command line; returns the process exit code (0 ok, 1 failed
// self-test, 2 input, 3 singular covariance, 4 grid mismatch, 5 budget).
int run_cli(int argc, char const* const* argv, std::ostream& out, std::ostream& err);

}  // namespace chaoslab
