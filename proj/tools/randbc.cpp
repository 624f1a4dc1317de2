// Batch front end: randbc <command> [options]. See README for the config grammar.

#include "randbc/cli.hpp"
#include "randbc/errors.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using Overrides = std::map<std::string, std::string>;

struct Common {
    std::string config_file;
    std::string manifest;
    std::vector<std::string> sets;
    Overrides flags;
};

/// Registers a flag that overrides a config key when given.
void bind(CLI::App* app, Common& common, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(
        flag, [&common, key](const std::string& v) { common.flags[key] = v; }, help + " [" + key + "]");
}

void add_common(CLI::App* app, Common& common) {
    app->add_option("--config", common.config_file, "key = value config file");
    app->add_option("--manifest", common.manifest, "rerun from a manifest.json");
    app->add_option("--set", common.sets, "override any config key: --set key=value")->take_all();
    bind(app, common, "--seed", "seed", "master seed");
    bind(app, common, "--out-dir", "out_dir", "output directory");
    bind(app, common, "--threads", "threads", "worker count (default $RANDBC_THREADS or 1)");
    bind(app, common, "--n", "grid.n", "nodes per side");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"randbc: random boundary data, constraint statistics, Runge approximation and hybrid inversion"};
    app.require_subcommand(1);
    Common common;

    auto* solve = app.add_subcommand("solve", "solve the Dirichlet problem for given coefficients and boundary data");
    add_common(solve, common);
    bind(solve, common, "--a", "coeff.a", "diffusion coefficient expression(s)");
    bind(solve, common, "--q", "coeff.q", "potential expression");
    bind(solve, common, "--bc", "solve.bc", "boundary data expression");

    auto* sample = app.add_subcommand("sample", "draw random boundary functions");
    add_common(sample, common);
    bind(sample, common, "--family", "bc.family", "gaussian | rademacher | uniform");
    bind(sample, common, "--K", "bc.K", "truncation order");
    bind(sample, common, "--count", "sample.count", "number of samples");

    auto* experiment = app.add_subcommand("constraint-experiment", "Monte-Carlo success curve of a constraint");
    add_common(experiment, common);
    bind(experiment, common, "--zeta", "zeta", "nodal | critical | jacobian | augmented");
    bind(experiment, common, "--family", "bc.family", "gaussian | rademacher | uniform");
    bind(experiment, common, "--K", "bc.K", "truncation order");
    bind(experiment, common, "--N-list", "experiment.N_list", "measurement counts, e.g. 1,2,4,8,16");
    bind(experiment, common, "--M", "experiment.M", "trials per N (>= 50)");
    bind(experiment, common, "--tau", "experiment.tau", "threshold or 'auto'");

    auto* variance = app.add_subcommand("variance-check", "Monte-Carlo second moment against the dictionary series");
    add_common(variance, common);
    bind(variance, common, "--zeta", "zeta", "nodal | critical (jacobian for K <= 8)");
    bind(variance, common, "--family", "bc.family", "gaussian | rademacher | uniform");
    bind(variance, common, "--K", "bc.K", "truncation order");
    bind(variance, common, "--M", "variance.M", "samples");

    auto* tail = app.add_subcommand("tail-check", "sub-Gaussian tail fit of the boundary norm");
    add_common(tail, common);
    bind(tail, common, "--family", "bc.family", "gaussian | rademacher | uniform");
    bind(tail, common, "--K", "bc.K", "truncation order");
    bind(tail, common, "--M", "tail.M", "samples (>= 1000)");

    auto* runge = app.add_subcommand("runge", "regularized Runge approximation tradeoff curve");
    add_common(runge, common);
    bind(runge, common, "--pole", "runge.pole", "pole X,Y of the fundamental solution");
    runge->add_option_function<std::string>(
        "--disk",
        [&common](const std::string& v) {
            const auto last = v.rfind(',');
            if (last == std::string::npos) throw CLI::ValidationError("--disk", "expected CX,CY,R");
            common.flags["runge.disk.center"] = v.substr(0, last);
            common.flags["runge.disk.radius"] = v.substr(last + 1);
        },
        "disk CX,CY,R [runge.disk.center, runge.disk.radius]");
    bind(runge, common, "--K", "runge.K", "dictionary size");
    bind(runge, common, "--lambdas", "runge.lambdas", "descending regularization weights");
    bind(runge, common, "--target", "runge.target", "fundamental_solution | dictionary_member | harmonic_poly");

    auto* qpat = app.add_subcommand("qpat", "absorption recovery from internal energy");
    add_common(qpat, common);
    bind(qpat, common, "--mu", "qpat.mu", "absorption: expression or x,y,value CSV file");
    bind(qpat, common, "--bc", "qpat.bc", "random | const:<v>");
    bind(qpat, common, "--N", "qpat.N", "measurements");
    bind(qpat, common, "--tau", "qpat.tau", "division threshold");

    auto* cond = app.add_subcommand("conductivity", "conductivity recovery through the Jacobian");
    add_common(cond, common);
    bind(cond, common, "--a", "conductivity.a", "conductivity expression");
    bind(cond, common, "--bc", "conductivity.bc", "two boundary expressions, e.g. x1,x2");
    bind(cond, common, "--tau", "conductivity.tau", "Jacobian threshold");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        Overrides overrides = common.flags;
        for (const auto& s : common.sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw randbc::ConfigError("--set expects key=value, got '" + s + "'");
            overrides[s.substr(0, eq)] = s.substr(eq + 1);
        }
        overrides["command"] = app.get_subcommands().front()->get_name();

        randbc::cli::RunConfig cfg;
        if (!common.manifest.empty()) {
            cfg = randbc::cli::config_from_manifest(common.manifest, overrides);
        } else {
            std::string text;
            if (!common.config_file.empty()) {
                std::ifstream in(common.config_file);
                if (!in) throw randbc::ConfigError("cannot read config file '" + common.config_file + "'");
                std::ostringstream buf;
                buf << in.rdbuf();
                text = buf.str();
            }
            cfg = randbc::cli::parse_config(text, overrides);
        }
        const auto result = randbc::cli::execute(cfg);
        if (result.status != 0) {
            std::cerr << "randbc: " << result.message << '\n';
            return result.status;
        }
        for (const auto& f : result.files) std::cout << f.string() << '\n';
        return 0;
    } catch (const randbc::ConfigError& e) {
        std::cerr << "randbc: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "randbc: " << e.what() << '\n';
        return 1;
    }
}
