#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "effstab/cli.hpp"

using namespace effstab;
namespace fs = std::filesystem;

namespace
{

fs::path scratch_dir(const std::string &name)
{
    const auto p = fs::temp_directory_path() / ("effstab_test_" + name);
    fs::remove_all(p);
    return p;
}

std::vector<std::string> small_run(const fs::path &dir)
{
    return {"--order", "4", "--mc_samples", "2", "--mc_iterations", "3", "--scan_points", "2", "--scan_samples", "1", "--region_samples", "2",
            "--output_dir", dir.string()};
}

int parse(const std::vector<std::string> &args, RunConfig &cfg)
{
    std::ostringstream out, err;
    const auto code = parse_command_line(args, cfg, out, err);
    return code ? *code : -1;
}

int run(const std::vector<std::string> &args)
{
    RunConfig cfg;
    std::ostringstream log;
    if (const int c = parse(args, cfg); c != -1) {
        return c;
    }
    return run_pipeline(cfg, log);
}

std::map<std::string, std::string> read_all(const fs::path &dir)
{
    std::map<std::string, std::string> m;
    for (const auto &e : fs::directory_iterator(dir)) {
        std::ifstream in(e.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        m[e.path().filename().string()] = ss.str();
    }
    return m;
}

// Reference configuration at order 4 for the region checks.
const PipelineResult &small_result()
{
    static const PipelineResult r = [] {
        RunConfig cfg;
        cfg.order = 4;
        cfg.validate = false;
        cfg.angle_precision = "binary64";
        std::ostringstream log;
        return compute_pipeline(cfg, log);
    }();
    return r;
}

} // namespace

TEST_CASE("help and argument errors", "[cli]")
{
    RunConfig cfg;
    CHECK(parse({"--help"}, cfg) == exit_ok);
    CHECK(parse({"--no_such_option", "1"}, cfg) == exit_config);
    CHECK(parse({"--order", "1"}, cfg) == exit_config);
    CHECK(parse({"--order", "abc"}, cfg) == exit_config);
    CHECK(parse({"--jacobi_mode", "sometimes"}, cfg) == exit_config);
    CHECK(parse({"--precision", "binary16"}, cfg) == exit_config);
    CHECK(parse({"--mu", "0.7"}, cfg) == exit_config);
    CHECK(parse({"--tau", "-1"}, cfg) == exit_config);
}

TEST_CASE("options and config files fill RunConfig", "[cli]")
{
    const auto dir = scratch_dir("config");
    fs::create_directories(dir);
    const auto file = dir / "run.ini";
    std::ofstream(file) << "order = 6\nyears = [10, 20]\nmc_seed = 99\n";
    RunConfig cfg;
    REQUIRE(parse({"--config", file.string(), "--tau", "2.5"}, cfg) == -1);
    CHECK(cfg.order == 6);
    CHECK(cfg.years == std::vector<double>{10, 20});
    CHECK(cfg.mc_seed == 99);
    CHECK(cfg.tau == 2.5);
    RunConfig defaults;
    CHECK(parse({}, defaults) == -1);
    CHECK(defaults.order == 15);
    CHECK(defaults.seed_digits == 8);
}

TEST_CASE("a small run writes every artifact with a schema header", "[cli]")
{
    const auto dir = scratch_dir("small");
    REQUIRE(run(small_run(dir)) == exit_ok);
    const auto files = read_all(dir);
    for (const char *name : {"fixed_point.json", "spectrum.json", "map_G.jet", "map_T.jet", "nf_F.jet", "nf_transform.jet", "nf_inverse.jet",
                             "twist.csv", "gamma_table.csv", "normal_form.json", "rho_series.csv", "constants.json", "constants_by_order.csv",
                             "stability_region.csv", "stability_region_physical.csv", "residual_scan.csv", "drift_report.json", "manifest.json"}) {
        INFO(name);
        REQUIRE(files.count(name) == 1);
        const auto &text = files.at(name);
        const std::string n(name);
        if (n.ends_with(".json")) {
            const auto j = nlohmann::json::parse(text);
            CHECK(j.at("schema").get<std::string>().starts_with("effstab."));
        } else {
            CHECK(text.starts_with("# schema: effstab."));
        }
    }
    const auto manifest = nlohmann::json::parse(files.at("manifest.json"));
    CHECK(manifest.at("files").size() == files.size() - 1);
    const auto c = nlohmann::json::parse(files.at("constants.json"));
    CHECK(c.at("N").get<int>() == 4);
}

TEST_CASE("repeated runs are byte-identical", "[cli]")
{
    const auto dir = scratch_dir("determinism");
    REQUIRE(run(small_run(dir)) == exit_ok);
    const auto first = read_all(dir);
    REQUIRE(run(small_run(dir)) == exit_ok);
    CHECK(read_all(dir) == first);
}

TEST_CASE("order 2 completes and warns about N_opt", "[cli]")
{
    const auto dir = scratch_dir("order2");
    auto args = small_run(dir);
    args[1] = "2";
    REQUIRE(run(args) == exit_ok);
    const auto manifest = nlohmann::json::parse(read_all(dir).at("manifest.json"));
    bool warned = false;
    for (const auto &w : manifest.at("warnings")) {
        warned = warned || w.get<std::string>().find("N_opt") != std::string::npos;
    }
    CHECK(warned);
}

TEST_CASE("stage failures map to exit codes", "[cli]")
{
    const auto dir = scratch_dir("fail");
    auto args = small_run(dir);
    args.insert(args.end(), {"--jacobi_mode", "fixed", "--jacobi_value", "3.5"});
    CHECK(run(args) == exit_newton);
}

TEST_CASE("a 15-year mission uses the threshold branch", "[cli]")
{
    const auto &r = small_result();
    REQUIRE(r.constants.missions.size() == 3);
    for (const auto &m : r.constants.missions) {
        CHECK(m.below_C);
        CHECK(m.a == r.constants.a0);
    }
    CHECK(r.constants.missions[1].iterations == 548);
    CHECK_FALSE(r.region.points.empty());
}

TEST_CASE("stability region points keep the Jacobi constant", "[cli]")
{
    const auto &r = small_result();
    const MassRatio<double> mu{r.cfg.mu};
    const auto cloud = emit_stability_region(r.nf, 1e-3, r.fp, mu, 3);
    CHECK(cloud.points.size() == 2 * 3 * 3 * 3);
    CHECK(cloud.skipped == 0);
    for (const auto &p : cloud.points) {
        const State6<double> s{p[0], 0.0, p[1], p[2], p[4], p[3]};
        CHECK(std::abs(jacobi_constant(s, mu) - r.fp.jacobi) < 1e-10);
        CHECK(p[4] < 0);
    }
}

TEST_CASE("region size grows with the radius", "[cli]")
{
    const auto &r = small_result();
    const MassRatio<double> mu{r.cfg.mu};
    const auto zero = emit_stability_region(r.nf, 0.0, r.fp, mu, 3);
    REQUIRE(zero.points.size() == 1);
    CHECK(zero.points[0][0] == r.fp.u0[0]);
    CHECK(region_diameter(zero) == 0.0);
    double prev = 0;
    for (double a : {1e-5, 1e-4, 1e-3, 1e-2}) {
        const double d = region_diameter(emit_stability_region(r.nf, a, r.fp, mu, 3));
        CHECK(d > prev);
        prev = d;
    }
}
