#include "cli.hpp"

#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "diffeo/detail/format.hpp"
#include "diffeo/errors.hpp"
#include "diffeo/jacobian.hpp"
#include "diffeo/metrics.hpp"
#include "diffeo/synth.hpp"

namespace diffeo::cli {

namespace fs = std::filesystem;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_violation = 2;

[[noreturn]] void invalid(const std::string& what)
{
    throw Error(ErrorCode::invalid_argument, what);
}

void require_file(const fs::path& path, const char* what)
{
    if (path.empty()) {
        invalid(std::string(what) + " path is required");
    }
    if (!fs::is_regular_file(path)) {
        invalid(std::string(what) + " not found: " + path.string());
    }
}

void require_output(const fs::path& path)
{
    if (path.empty()) {
        invalid("output path (-o) is required");
    }
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    if (!fs::is_directory(dir)) {
        invalid("output directory does not exist: " + dir.string());
    }
}

std::string join_point(const GridPoint& p, int rank)
{
    std::string s;
    for (int a = 0; a < rank; ++a) {
        s += (a ? "," : "") + std::to_string(p[a]);
    }
    return s;
}

DisplacementField load_field(const CliConfig& c)
{
    return io::read_field(c.input, {io::FileFormat::auto_detect, c.units});
}

std::optional<VoxelMask> load_mask(const CliConfig& c)
{
    if (!c.mask) {
        return std::nullopt;
    }
    return io::read_mask(*c.mask);
}

std::string label_for(const CliConfig& c)
{
    return c.label.empty() ? c.input.filename().string() : c.label;
}

std::string summary_line(const DiffeoReport& r)
{
    using detail::format_double;
    const std::string m = to_string(r.measure_kind);
    std::ostringstream s;
    s << "rank=" << r.rank << " points=" << r.points_considered << " partial=" << r.partially_defined_points
      << " central_nonpositive=" << r.central_nonpositive_count
      << " central_nonpositive_pct=" << format_double(r.central_nonpositive_percent)
      << " any_nonpositive=" << r.any_nonpositive_count
      << " any_nonpositive_pct=" << format_double(r.any_nonpositive_percent) << ' ' << m << '='
      << format_double(r.measure) << ' ' << m << "_physical=" << format_double(r.measure_physical) << ' ' << m
      << "_pct=" << format_double(r.measure_percent)
      << " digital_diffeomorphism=" << (r.digital_diffeomorphism ? "true" : "false");
    return s.str();
}

int run_check(const CliConfig& c, std::ostream& out)
{
    require_file(c.input, "input");
    if (c.mask) {
        require_file(*c.mask, "mask");
    }
    const auto field = load_field(c);
    const auto mask = load_mask(c);
    const AnalysisOptions options{c.threads};

    bool ok = true;
    std::optional<Violation> violation;
    if (mask) {
        const auto analysis = analyze(field, &*mask, options);
        ok = analysis.report.digital_diffeomorphism;
        violation = analysis.report.first_violation;
    } else {
        const auto verdict = is_digital_diffeomorphism(field, options);
        ok = verdict.diffeomorphic;
        violation = verdict.first_violation;
    }
    out << "digital_diffeomorphism=" << (ok ? "true" : "false");
    if (violation) {
        out << " first_violation=" << join_point(violation->point, field.rank())
            << " variant=" << to_string(violation->variant) << " value=" << detail::format_double(violation->value);
    }
    out << '\n';
    return ok ? exit_ok : exit_violation;
}

int run_analyze(const CliConfig& c, std::ostream& out)
{
    require_file(c.input, "input");
    if (c.mask) {
        require_file(*c.mask, "mask");
    }
    if (!c.output.empty()) {
        require_output(c.output);
    }
    const auto field = load_field(c);
    const auto mask = load_mask(c);
    const auto analysis = analyze(field, mask ? &*mask : nullptr, AnalysisOptions{c.threads});
    if (!c.output.empty()) {
        io::write_report(analysis.report, c.output, c.format, label_for(c), c.append);
    }
    out << summary_line(analysis.report) << '\n';
    return exit_ok;
}

int run_map(const CliConfig& c, std::ostream& out)
{
    require_file(c.input, "input");
    if (c.mask) {
        require_file(*c.mask, "mask");
    }
    require_output(c.output);
    const bool severity = c.variant == "severity";
    const std::optional<JacobianVariant> variant =
        severity ? std::nullopt : std::optional<JacobianVariant>(parse_variant(c.variant));

    const auto field = load_field(c);
    const auto mask = load_mask(c);
    if (mask && !mask->dims().same_shape(field.dims())) {
        throw Error(ErrorCode::shape_mismatch, "mask grid differs from field grid");
    }
    if (variant && std::holds_alternative<Star>(*variant) && field.rank() != 3) {
        throw Error(ErrorCode::rank_mismatch, "star determinants need a 3D field");
    }
    if (variant && std::holds_alternative<Corner>(*variant) &&
        std::get<Corner>(*variant).pattern.rank() != field.rank()) {
        throw Error(ErrorCode::rank_mismatch, "corner pattern rank differs from field rank");
    }

    ScalarMap map = severity ? analyze(field, mask ? &*mask : nullptr, AnalysisOptions{c.threads}).severity
                             : jacobian_map(field, *variant, c.threads);
    if (mask && !severity) {
        for (std::size_t i = 0; i < map.size(); ++i) {
            if (!(*mask)[i]) {
                map.unset(i);
            }
        }
    }
    io::write_map(map, c.output);
    out << "map=" << (severity ? std::string("severity") : to_string(*variant)) << " defined=" << map.defined_count()
        << " output=" << c.output.string() << '\n';
    return exit_ok;
}

synth::Kind synth_kind(const CliConfig& c, int rank)
{
    const auto r = static_cast<std::size_t>(rank);
    if (c.kind == "identity") {
        return synth::Identity{};
    }
    if (c.kind == "scale") {
        return synth::UniformScale{c.scale};
    }
    if (c.kind == "linear") {
        return synth::Linear{c.matrix};
    }
    if (c.kind == "reflection") {
        return synth::Reflection{c.axis};
    }
    if (c.kind == "single-point") {
        if (c.point.size() != r) {
            invalid("--point needs one coordinate per axis");
        }
        GridPoint p;
        for (int a = 0; a < rank; ++a) {
            p[a] = c.point[static_cast<std::size_t>(a)];
        }
        return synth::SinglePoint{p, c.disp};
    }
    if (c.kind == "random-smooth") {
        return synth::RandomSmooth{c.seed, c.amplitude, c.radius};
    }
    invalid("unknown synth kind '" + c.kind + "'");
}

int run_synth(const CliConfig& c, std::ostream& out)
{
    require_output(c.output);
    if (c.dims.empty()) {
        invalid("--dims is required");
    }
    GridDims dims(c.dims, c.spacing);
    const auto field = synth::generate({dims, synth_kind(c, dims.rank())});
    io::write_field(field, c.output);
    out << "synth=" << c.kind << " rank=" << dims.rank() << " points=" << dims.num_points()
        << " output=" << c.output.string() << '\n';
    return exit_ok;
}

} // namespace

int run(const CliConfig& config, std::ostream& out, std::ostream& err)
{
    try {
        switch (config.subcommand) {
        case Subcommand::check: return run_check(config, out);
        case Subcommand::analyze: return run_analyze(config, out);
        case Subcommand::map: return run_map(config, out);
        case Subcommand::synth: return run_synth(config, out);
        }
    } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
    }
    return exit_error;
}

int cli_main(int argc, const char* const argv[], std::ostream& out, std::ostream& err)
{
    CLI::App app{"Digital diffeomorphism checks for dense displacement fields"};
    app.require_subcommand(1, 1);
    CliConfig c;

    const std::map<std::string, io::DisplacementUnits> units{{"voxel", io::DisplacementUnits::voxel},
                                                             {"physical", io::DisplacementUnits::physical}};
    const std::map<std::string, io::ReportFormat> formats{{"json", io::ReportFormat::json},
                                                          {"csv", io::ReportFormat::csv}};

    auto add_input = [&](CLI::App* sub) {
        sub->add_option("input", c.input, "Displacement field (.nii, .nii.gz, .npy)")->required();
        sub->add_option("--mask", c.mask, "Voxel mask; non-zero voxels are analyzed");
        sub->add_option("--units", c.units, "Displacement units in the file")
            ->transform(CLI::CheckedTransformer(units, CLI::ignore_case));
        sub->add_option("--threads", c.threads, "Worker threads, 0 = all cores");
    };

    auto* check = app.add_subcommand("check", "Print the digital diffeomorphism verdict");
    add_input(check);

    auto* analyze_cmd = app.add_subcommand("analyze", "Compute counts and NDA/NDV and write a report");
    add_input(analyze_cmd);
    analyze_cmd->add_option("-o,--output", c.output, "Report path");
    analyze_cmd->add_option("--format", c.format, "Report format")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
    analyze_cmd->add_option("--label", c.label, "Row label (default: input file name)");
    analyze_cmd->add_flag("--append", c.append, "Append a row to an existing CSV report");

    auto* map_cmd = app.add_subcommand("map", "Write a determinant or severity map");
    add_input(map_cmd);
    map_cmd->add_option("-o,--output", c.output, "Map path (.nii or .nii.gz)")->required();
    map_cmd->add_option("--variant", c.variant, "severity, central, star1, star2 or corner(+,-,+)");

    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic displacement field");
    synth_cmd->add_option("--kind", c.kind, "identity, scale, linear, reflection, single-point, random-smooth")
        ->required();
    synth_cmd->add_option("--dims", c.dims, "Grid extents, e.g. 64,64,64")->delimiter(',')->required();
    synth_cmd->add_option("--spacing", c.spacing, "Voxel spacing per axis")->delimiter(',');
    synth_cmd->add_option("--scale", c.scale, "Uniform scale factor");
    synth_cmd->add_option("--matrix", c.matrix, "Row-major linear map")->delimiter(',');
    synth_cmd->add_option("--axis", c.axis, "Reflection axis");
    synth_cmd->add_option("--point", c.point, "Displaced grid point")->delimiter(',');
    synth_cmd->add_option("--disp", c.disp, "Displacement at --point")->delimiter(',');
    synth_cmd->add_option("--seed", c.seed, "Random seed");
    synth_cmd->add_option("--amplitude", c.amplitude, "Largest displacement component (voxels)");
    synth_cmd->add_option("--radius", c.radius, "Box smoothing radius");
    synth_cmd->add_option("-o,--output", c.output, "Field path (.nii, .nii.gz, .npy)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_error;
    }

    if (check->parsed()) {
        c.subcommand = Subcommand::check;
    } else if (analyze_cmd->parsed()) {
        c.subcommand = Subcommand::analyze;
    } else if (map_cmd->parsed()) {
        c.subcommand = Subcommand::map;
    } else {
        c.subcommand = Subcommand::synth;
    }
    return run(c, out, err);
}

} // namespace diffeo::cli
