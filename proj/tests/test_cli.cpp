#include <doctest.h>

#include <sstream>

#include "cli.hpp"
#include "diffeo/volume_io.hpp"
#include "support/files.hpp"

using testfiles::TempDir;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args)
{
    args.insert(args.begin(), "diffeo");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = diffeo::cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::size_t file_count(const std::filesystem::path& dir)
{
    std::size_t n = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) {
        ++n;
    }
    return n;
}

} // namespace

TEST_CASE("identity field checks clean")
{
    TempDir dir;
    const auto field = (dir / "id.nii").string();
    auto s = run({"synth", "--kind", "identity", "--dims", "4,4,4", "-o", field});
    REQUIRE(s.code == 0);
    const auto c = run({"check", field});
    CHECK(c.code == 0);
    CHECK(c.out == "digital_diffeomorphism=true\n");
}

TEST_CASE("displaced point: check and analyze")
{
    TempDir dir;
    const auto field = (dir / "sp.nii.gz").string();
    REQUIRE(run({"synth", "--kind", "single-point", "--dims", "5,5", "--point", "2,2", "--disp", "1.5,1.5", "-o", field})
                .code == 0);

    const auto c = run({"check", field});
    CHECK(c.code == 2);
    CHECK(c.out == "digital_diffeomorphism=false first_violation=2,2 variant=corner(+,+) value=-2\n");

    const auto a = run({"analyze", field});
    CHECK(a.code == 0);
    CHECK(a.out == "rank=2 points=25 partial=16 central_nonpositive=0 central_nonpositive_pct=0 any_nonpositive=3 "
                   "any_nonpositive_pct=12 nda=1 nda_physical=1 nda_pct=4 digital_diffeomorphism=false\n");

    const auto json = dir / "r.json";
    REQUIRE(run({"analyze", field, "-o", json.string(), "--label", "fixture"}).code == 0);
    const auto r = diffeo::io::read_report_json(json);
    CHECK(r.central_nonpositive_count == 0);
    CHECK(r.any_nonpositive_count == 3);
    CHECK(r.measure == 1.0);
}

TEST_CASE("reflection: NDV and byte-identical reports across thread counts")
{
    TempDir dir;
    const auto field = (dir / "refl.npy").string();
    REQUIRE(run({"synth", "--kind", "reflection", "--dims", "4,4,4", "--axis", "0", "-o", field}).code == 0);
    const auto a = run({"analyze", field});
    CHECK(a.out.find(" ndv=27 ") != std::string::npos);

    std::string first;
    for (const char* t : {"1", "2", "8"}) {
        const auto out = dir / (std::string("r") + t + ".json");
        REQUIRE(run({"analyze", field, "--threads", t, "-o", out.string(), "--label", "refl"}).code == 0);
        const auto bytes = testfiles::read_bytes(out);
        if (first.empty()) {
            first = bytes;
        }
        CHECK(bytes == first);
    }
}

TEST_CASE("csv reports append rows")
{
    TempDir dir;
    const auto f1 = (dir / "a.nii").string();
    const auto f2 = (dir / "b.nii").string();
    REQUIRE(run({"synth", "--kind", "random-smooth", "--dims", "8,8,8", "--amplitude", "2", "--seed", "3", "-o", f1}).code == 0);
    REQUIRE(run({"synth", "--kind", "scale", "--scale", "0.5", "--dims", "6,6", "-o", f2}).code == 0);
    const auto csv = (dir / "t.csv").string();
    REQUIRE(run({"analyze", f1, "--format", "csv", "-o", csv}).code == 0);
    REQUIRE(run({"analyze", f2, "--format", "csv", "-o", csv, "--append"}).code == 0);
    const auto text = testfiles::read_bytes(csv);
    CHECK(text.starts_with(diffeo::io::csv_header()));
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    CHECK(text.find("\na.nii,3,") != std::string::npos);
    CHECK(text.find("\nb.nii,2,") != std::string::npos);
}

TEST_CASE("map subcommand")
{
    TempDir dir;
    const auto field = (dir / "f.nii").string();
    REQUIRE(run({"synth", "--kind", "random-smooth", "--dims", "6,5,4", "--amplitude", "1.5", "-o", field}).code == 0);
    const auto sev = dir / "sev.nii";
    const auto m = run({"map", field, "-o", sev.string()});
    CHECK(m.code == 0);
    CHECK(diffeo::io::read_map(sev).defined_count() == 120);

    for (const char* v : {"central", "star1", "corner(+,-,+)", "corner:---"}) {
        CAPTURE(v);
        const auto out = dir / "v.nii.gz";
        CHECK(run({"map", field, "--variant", v, "-o", out.string()}).code == 0);
        CHECK(diffeo::io::read_map(out).defined_count() > 0);
    }

    // Masked maps are undefined outside the mask.
    diffeo::GridDims d({6, 5, 4});
    std::vector<std::uint8_t> bits(d.num_points(), 0);
    bits[d.linear_index(diffeo::GridPoint{{2, 2, 2}})] = 1;
    diffeo::io::write_mask(diffeo::VoxelMask(d, bits), dir / "mask.nii");
    const auto masked = dir / "masked.nii";
    REQUIRE(run({"map", field, "--variant", "central", "--mask", (dir / "mask.nii").string(), "-o", masked.string()})
                .code == 0);
    CHECK(diffeo::io::read_map(masked).defined_count() == 1);

    CHECK(run({"map", field, "--variant", "corner(+,+)", "-o", (dir / "x.nii").string()}).code == 1);
    CHECK(run({"map", field, "--variant", "bogus", "-o", (dir / "x.nii").string()}).code == 1);
}

TEST_CASE("errors exit 1 and leave no partial output")
{
    TempDir dir;
    const auto field = (dir / "f.nii").string();
    REQUIRE(run({"synth", "--kind", "identity", "--dims", "4,4", "-o", field}).code == 0);
    const std::size_t before = file_count(dir.path());

    auto r = run({"check", (dir / "missing.nii").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("error:") != std::string::npos);
    CHECK(run({"analyze", field, "-o", (dir / "nodir" / "r.json").string()}).code == 1);
    CHECK(run({"analyze", field, "--mask", (dir / "nomask.nii").string()}).code == 1);
    CHECK(run({"synth", "--kind", "nonsense", "--dims", "4,4", "-o", (dir / "x.nii").string()}).code == 1);
    CHECK(run({"synth", "--kind", "scale", "--scale", "-1", "--dims", "4,4", "-o", (dir / "x.nii").string()}).code == 1);
    CHECK(run({"synth", "--kind", "identity", "--dims", "4", "-o", (dir / "x.nii").string()}).code == 1);
    CHECK(run({"synth", "--kind", "single-point", "--dims", "4,4", "--point", "1", "--disp", "1,1", "-o",
               (dir / "x.nii").string()})
              .code == 1);
    CHECK(run({"analyze", field, "--format", "xml"}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
    CHECK(run({}).code == 1);

    // Mask with a different grid.
    diffeo::io::write_mask(diffeo::VoxelMask::all(diffeo::GridDims({3, 3})), dir / "small.nii");
    CHECK(run({"analyze", field, "--mask", (dir / "small.nii").string()}).code == 1);
    std::filesystem::remove(dir / "small.nii");

    CHECK(file_count(dir.path()) == before);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("run accepts a config directly")
{
    TempDir dir;
    diffeo::cli::CliConfig c;
    c.subcommand = diffeo::cli::Subcommand::synth;
    c.kind = "linear";
    c.dims = {4, 4};
    c.matrix = {2.0, 0.0, 0.0, 0.5};
    c.output = dir / "lin.npy";
    std::ostringstream out;
    std::ostringstream err;
    REQUIRE(diffeo::cli::run(c, out, err) == 0);

    c = {};
    c.subcommand = diffeo::cli::Subcommand::check;
    c.input = dir / "lin.npy";
    CHECK(diffeo::cli::run(c, out, err) == 0);
    c.input = dir / "nothing.npy";
    CHECK(diffeo::cli::run(c, out, err) == 1);
}
