#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "diffeo/grid.hpp"
#include "diffeo/volume_io.hpp"

namespace diffeo::cli {

enum class Subcommand { check, analyze, map, synth };

struct CliConfig {
    Subcommand subcommand = Subcommand::check;
    std::filesystem::path input;
    std::optional<std::filesystem::path> mask;
    std::filesystem::path output;
    io::DisplacementUnits units = io::DisplacementUnits::voxel;
    std::string variant = "severity";
    io::ReportFormat format = io::ReportFormat::json;
    unsigned threads = 0;
    std::uint64_t seed = 7;
    std::string label;
    bool append = false;

    // synth
    std::string kind;
    std::vector<Index> dims;
    std::vector<double> spacing;
    double scale = 1.0;
    std::vector<double> matrix;
    int axis = 0;
    std::vector<Index> point;
    std::vector<double> disp;
    double amplitude = 1.0;
    int radius = 2;
};

// Exit status: 0 success (check: diffeomorphic), 2 check found a violation,
// 1 any error. Diagnostics go to `err`.
int run(const CliConfig& config, std::ostream& out, std::ostream& err);

int cli_main(int argc, const char* const argv[], std::ostream& out, std::ostream& err);

} // namespace diffeo::cli
