#include "randbc/cli.hpp"

#include "randbc/constraints.hpp"
#include "randbc/elliptic.hpp"
#include "randbc/errors.hpp"
#include "randbc/experiments.hpp"
#include "randbc/expression.hpp"
#include "randbc/inverse.hpp"
#include "randbc/parallel.hpp"
#include "randbc/random_boundary.hpp"
#include "randbc/runge.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace randbc::cli {

namespace fs = std::filesystem;

namespace {

enum class Kind { command, integer, seed, number, point, int_list, number_list, point_list, text,
                  expr, expr_list, family, zeta, tau, qpat_bc, target };

struct KeySpec {
    const char* key;
    Kind kind;
    const char* fallback;
};

// Every accepted key with its default. Keys are listed in manifest order.
const std::vector<KeySpec>& key_table() {
    static const std::vector<KeySpec> table = {
        {"command", Kind::command, ""},
        {"seed", Kind::seed, "1"},
        {"out_dir", Kind::text, "out"},
        {"threads", Kind::integer, ""},
        {"grid.n", Kind::integer, "33"},
        {"omega_prime.lo", Kind::point, "0.25,0.25"},
        {"omega_prime.hi", Kind::point, "0.75,0.75"},
        {"coeff.a", Kind::expr_list, "1"},
        {"coeff.q", Kind::expr, "0"},
        {"solver.rtol", Kind::number, "1e-10"},
        {"solver.maxiter", Kind::integer, "0"},
        {"solve.bc", Kind::expr, "x^2 - y^2"},
        {"bc.family", Kind::family, "gaussian"},
        {"bc.K", Kind::integer, "33"},
        {"bc.sigma.c", Kind::number, "1"},
        {"bc.sigma.s", Kind::number, "1.5"},
        {"sample.count", Kind::integer, "10"},
        {"zeta", Kind::zeta, "nodal"},
        {"zeta.direction", Kind::point, "1,0"},
        {"experiment.N_list", Kind::int_list, "1,2,4,8,16"},
        {"experiment.M", Kind::integer, "200"},
        {"experiment.tau", Kind::tau, "auto"},
        {"variance.M", Kind::integer, "10000"},
        {"variance.points", Kind::point_list,
         "0.3,0.3;0.5,0.3;0.7,0.3;0.3,0.5;0.5,0.5;0.7,0.5;0.3,0.7;0.5,0.7;0.7,0.7"},
        {"tail.M", Kind::integer, "10000"},
        {"tail.t_grid", Kind::number_list, ""},
        {"runge.disk.center", Kind::point, "0.5,0.5"},
        {"runge.disk.radius", Kind::number, "0.2"},
        {"runge.pole", Kind::point, "0.9,0.9"},
        {"runge.K", Kind::integer, "33"},
        {"runge.lambdas", Kind::number_list, "1,1e-2,1e-4,1e-6,1e-8,1e-10"},
        {"runge.target", Kind::target, "fundamental_solution"},
        {"runge.member", Kind::integer, "3"},
        {"runge.degree", Kind::integer, "2"},
        {"qpat.mu", Kind::text, "1 + 0.5*exp(-50*((x-0.5)^2 + (y-0.5)^2))"},
        {"qpat.bc", Kind::qpat_bc, "const:1"},
        {"qpat.N", Kind::integer, "1"},
        {"qpat.tau", Kind::number, "0.05"},
        {"conductivity.a", Kind::expr, "exp(x)"},
        {"conductivity.bc", Kind::expr_list, "x1,x2"},
        {"conductivity.tau", Kind::number, "0.05"},
        {"conductivity.anchor", Kind::point, "0.5,0.5"},
    };
    return table;
}

const KeySpec* find_key(const std::string& key) {
    for (const auto& spec : key_table()) {
        if (key == spec.key) return &spec;
    }
    return nullptr;
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
    throw ConfigError("config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end && !s.empty();
}

double to_double(const std::string& key, const std::string& s) {
    double v = 0;
    if (!parse_number(s, v) || !std::isfinite(v)) bad_value(key, s, "a finite number");
    return v;
}

int to_int(const std::string& key, const std::string& s) {
    int v = 0;
    if (!parse_number(s, v)) bad_value(key, s, "an integer");
    return v;
}

Point to_point(const std::string& key, const std::string& s) {
    const auto parts = split(s, ',');
    if (parts.size() != 2) bad_value(key, s, "a point 'x,y'");
    return {to_double(key, parts[0]), to_double(key, parts[1])};
}

// Splits a list of expressions. ';' separates when present, otherwise ','.
std::vector<std::string> expr_items(const std::string& s) {
    return split(s, s.find(';') != std::string::npos ? ';' : ',');
}

void check_value(const KeySpec& spec, const std::string& value) {
    const std::string key = spec.key;
    switch (spec.kind) {
    case Kind::command:
        if (std::find(commands().begin(), commands().end(), value) == commands().end()) {
            std::string all;
            for (const auto& c : commands()) all += (all.empty() ? "" : ", ") + c;
            bad_value(key, value, "one of " + all);
        }
        break;
    case Kind::integer: to_int(key, value); break;
    case Kind::seed: {
        std::uint64_t v = 0;
        if (!parse_number(value, v)) bad_value(key, value, "an unsigned 64-bit integer");
        break;
    }
    case Kind::number: to_double(key, value); break;
    case Kind::point: to_point(key, value); break;
    case Kind::int_list:
        for (const auto& item : split(value, ',')) to_int(key, item);
        break;
    case Kind::number_list:
        if (!value.empty()) {
            for (const auto& item : split(value, ',')) to_double(key, item);
        }
        break;
    case Kind::point_list:
        for (const auto& item : split(value, ';')) to_point(key, item);
        break;
    case Kind::text: break;
    case Kind::expr:
    case Kind::expr_list:
        try {
            const auto items = spec.kind == Kind::expr ? std::vector<std::string>{value} : expr_items(value);
            for (const auto& item : items) Expression e(item);
        } catch (const std::invalid_argument& err) {
            throw ConfigError("config key '" + key + "': " + err.what());
        }
        break;
    case Kind::family:
        try {
            parse_family(value);
        } catch (const std::invalid_argument& err) {
            throw ConfigError("config key '" + key + "': " + err.what());
        }
        break;
    case Kind::zeta:
        try {
            parse_constraint(value);
        } catch (const std::invalid_argument& err) {
            throw ConfigError("config key '" + key + "': " + err.what());
        }
        break;
    case Kind::tau:
        if (value != "auto") to_double(key, value);
        break;
    case Kind::qpat_bc:
        if (value != "random") {
            if (value.rfind("const:", 0) != 0) bad_value(key, value, "'random' or 'const:<v>'");
            to_double(key, value.substr(6));
        }
        break;
    case Kind::target:
        if (value != "fundamental_solution" && value != "dictionary_member" && value != "harmonic_poly") {
            bad_value(key, value, "fundamental_solution, dictionary_member or harmonic_poly");
        }
        break;
    }
}

// Cross-key checks reusing the library's own preconditions.
void check_semantics(const RunConfig& cfg) {
    auto wrap = [](const std::string& key, auto&& fn) {
        try {
            fn();
        } catch (const ConfigError&) {
            throw;
        } catch (const std::invalid_argument& err) {
            throw ConfigError("config key '" + key + "': " + err.what());
        }
    };
    const int n = cfg.integer("grid.n");
    wrap("grid.n", [&] { build_grid(n); });
    const Grid2D grid(n);
    wrap("omega_prime", [&] { rect_mask(grid, cfg.point("omega_prime.lo"), cfg.point("omega_prime.hi")); });
    wrap("bc", [&] {
        RandomBoundaryModel(cfg.integer("bc.K"), cfg.number("bc.sigma.c"), cfg.number("bc.sigma.s"),
                            parse_family(cfg.text("bc.family")));
    });
    if (!(cfg.number("solver.rtol") > 0)) bad_value("solver.rtol", cfg.text("solver.rtol"), "a positive number");
    if (cfg.integer("solver.maxiter") < 0) bad_value("solver.maxiter", cfg.text("solver.maxiter"), "an integer >= 0");
    if (cfg.threads < 1) bad_value("threads", cfg.text("threads"), "an integer >= 1");
    const auto coeff_a = expr_items(cfg.text("coeff.a"));
    if (coeff_a.size() != 1 && coeff_a.size() != 3) {
        bad_value("coeff.a", cfg.text("coeff.a"), "one expression or three 'a11; a12; a22'");
    }

    const std::string& cmd = cfg.command;
    if (cmd == "constraint-experiment") {
        auto list = cfg.int_list("experiment.N_list");
        for (std::size_t i = 0; i < list.size(); ++i) {
            if (list[i] < 1 || (i > 0 && list[i] <= list[i - 1])) {
                bad_value("experiment.N_list", cfg.text("experiment.N_list"), "increasing positive integers");
            }
        }
        if (cfg.integer("experiment.M") < 50) bad_value("experiment.M", cfg.text("experiment.M"), "an integer >= 50");
    }
    if (cmd == "variance-check" && cfg.integer("variance.M") < 2) {
        bad_value("variance.M", cfg.text("variance.M"), "an integer >= 2");
    }
    if (cmd == "tail-check" && cfg.integer("tail.M") < 1000) {
        bad_value("tail.M", cfg.text("tail.M"), "an integer >= 1000");
    }
    if (cmd == "runge") {
        wrap("runge.disk", [&] { disk_mask(grid, cfg.point("runge.disk.center"), cfg.number("runge.disk.radius")); });
        if (cfg.integer("runge.K") < 1) bad_value("runge.K", cfg.text("runge.K"), "an integer >= 1");
        const auto lambdas = cfg.number_list("runge.lambdas");
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            if (!(lambdas[i] > 0) || (i > 0 && !(lambdas[i] < lambdas[i - 1]))) {
                bad_value("runge.lambdas", cfg.text("runge.lambdas"), "positive values sorted descending");
            }
        }
    }
    if (cmd == "qpat") {
        if (cfg.integer("qpat.N") < 1) bad_value("qpat.N", cfg.text("qpat.N"), "an integer >= 1");
        if (!(cfg.number("qpat.tau") > 0)) bad_value("qpat.tau", cfg.text("qpat.tau"), "a positive number");
        const std::string& mu = cfg.text("qpat.mu");
        if (!fs::is_regular_file(mu)) {
            wrap("qpat.mu", [&] { Expression e(mu); });
        }
    }
    if (cmd == "conductivity") {
        if (expr_items(cfg.text("conductivity.bc")).size() != 2) {
            bad_value("conductivity.bc", cfg.text("conductivity.bc"), "two expressions");
        }
        if (!(cfg.number("conductivity.tau") > 0)) {
            bad_value("conductivity.tau", cfg.text("conductivity.tau"), "a positive number");
        }
    }
}

} // namespace

const std::vector<std::string>& commands() {
    static const std::vector<std::string> all = {"solve", "sample", "constraint-experiment", "variance-check",
                                                 "tail-check", "runge", "qpat", "conductivity"};
    return all;
}

std::vector<std::string> valid_keys() {
    std::vector<std::string> out;
    for (const auto& spec : key_table()) out.emplace_back(spec.key);
    return out;
}

const std::string& RunConfig::text(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) throw ConfigError("config key '" + key + "' is not set");
    return it->second;
}

double RunConfig::number(const std::string& key) const { return to_double(key, text(key)); }
int RunConfig::integer(const std::string& key) const { return to_int(key, text(key)); }
Point RunConfig::point(const std::string& key) const { return to_point(key, text(key)); }

std::vector<int> RunConfig::int_list(const std::string& key) const {
    std::vector<int> out;
    for (const auto& item : split(text(key), ',')) out.push_back(to_int(key, item));
    return out;
}

std::vector<double> RunConfig::number_list(const std::string& key) const {
    std::vector<double> out;
    if (text(key).empty()) return out;
    for (const auto& item : split(text(key), ',')) out.push_back(to_double(key, item));
    return out;
}

std::map<std::string, std::string> parse_key_values(std::string_view text) {
    std::map<std::string, std::string> out;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string content = trim(line);
        if (content.empty()) continue;
        const auto eq = content.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(std::string_view(content).substr(0, eq));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        out[key] = trim(std::string_view(content).substr(eq + 1));
    }
    return out;
}

RunConfig parse_config(std::string_view file_text, const std::map<std::string, std::string>& overrides) {
    std::map<std::string, std::string> merged;
    for (const auto& spec : key_table()) merged[spec.key] = spec.fallback;
    merged["threads"] = std::to_string(default_threads());

    auto apply = [&](const std::map<std::string, std::string>& kv) {
        for (const auto& [key, value] : kv) {
            if (!find_key(key)) {
                std::string keys;
                for (const auto& k : valid_keys()) keys += "\n  " + k;
                throw ConfigError("unknown config key '" + key + "'; valid keys:" + keys);
            }
            merged[key] = value;
        }
    };
    apply(parse_key_values(file_text));
    apply(overrides);

    if (merged["command"].empty()) throw ConfigError("config key 'command' is required");
    for (const auto& spec : key_table()) check_value(spec, merged[spec.key]);

    RunConfig cfg;
    cfg.values = std::move(merged);
    cfg.command = cfg.values["command"];
    parse_number(cfg.values["seed"], cfg.seed);
    cfg.out_dir = cfg.values["out_dir"];
    cfg.threads = to_int("threads", cfg.values["threads"]);
    check_semantics(cfg);
    return cfg;
}

RunConfig config_from_manifest(const fs::path& manifest, const std::map<std::string, std::string>& overrides) {
    std::ifstream in(manifest);
    if (!in) throw ConfigError("cannot read manifest '" + manifest.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& err) {
        throw ConfigError("malformed manifest '" + manifest.string() + "': " + err.what());
    }
    if (!doc.contains("config") || !doc["config"].is_object()) {
        throw ConfigError("manifest '" + manifest.string() + "' has no config object");
    }
    std::map<std::string, std::string> kv;
    for (const auto& [key, value] : doc["config"].items()) kv[key] = value.get<std::string>();
    for (const auto& [key, value] : overrides) kv[key] = value;
    return parse_config("", kv);
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DomainError("cannot read '" + path.string() + "' for hashing");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 15];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

/// CSV writer that registers its file with the run so failures can clean up.
class Artifacts {
public:
    explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {}

    std::ofstream open(const std::string& name) {
        const fs::path path = dir_ / name;
        files_.push_back(path);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw DomainError("cannot write '" + path.string() + "'");
        return out;
    }

    void remove_all() noexcept {
        std::error_code ec;
        for (const auto& f : files_) fs::remove(f, ec);
    }

    const std::vector<fs::path>& files() const noexcept { return files_; }

private:
    fs::path dir_;
    std::vector<fs::path> files_;
};

template <typename... Cols>
void row(std::ofstream& out, const Cols&... cols) {
    bool first = true;
    auto put = [&](const auto& c) {
        if (!first) out << ',';
        first = false;
        if constexpr (std::is_floating_point_v<std::decay_t<decltype(c)>>) out << fmt(c);
        else out << c;
    };
    (put(cols), ...);
    out << '\n';
}

CoefficientField make_coeff(const Grid2D& grid, const RunConfig& cfg) {
    const auto items = expr_items(cfg.text("coeff.a"));
    const Field q = sample_field(grid, Expression(cfg.text("coeff.q")));
    if (items.size() == 1) return CoefficientField::scalar(grid, sample_field(grid, Expression(items[0])), q);
    return CoefficientField::matrix(grid, sample_field(grid, Expression(items[0])),
                                    sample_field(grid, Expression(items[1])),
                                    sample_field(grid, Expression(items[2])), q);
}

SolverOptions solver_options(const RunConfig& cfg) {
    return {cfg.number("solver.rtol"), cfg.integer("solver.maxiter")};
}

RandomBoundaryModel make_model(const RunConfig& cfg, int K) {
    return RandomBoundaryModel(K, cfg.number("bc.sigma.c"), cfg.number("bc.sigma.s"),
                               parse_family(cfg.text("bc.family")));
}

ConstraintMap make_map(const RunConfig& cfg) {
    ConstraintMap map;
    map.kind = parse_constraint(cfg.text("zeta"));
    map.direction = cfg.point("zeta.direction");
    if (!(map.direction.norm() > 0)) bad_value("zeta.direction", cfg.text("zeta.direction"), "a non-zero vector");
    map.direction.normalize();
    return map;
}

SubdomainMask omega_prime(const Grid2D& grid, const RunConfig& cfg) {
    return rect_mask(grid, cfg.point("omega_prime.lo"), cfg.point("omega_prime.hi"));
}

void write_field(std::ofstream& out, const Grid2D& grid, const Field& f) {
    row(out, "x", "y", "value");
    for (int node = 0; node < grid.num_nodes(); ++node) {
        const Point p = grid.point(node);
        row(out, p.x(), p.y(), f[node]);
    }
}

Field read_field(const Grid2D& grid, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read field file '" + path.string() + "'");
    std::string line;
    std::getline(in, line);
    if (trim(line) != "x,y,value") throw ConfigError("field file '" + path.string() + "': expected header x,y,value");
    Field f(grid.num_nodes());
    int node = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto parts = split(line, ',');
        if (parts.size() != 3 || node >= grid.num_nodes()) {
            throw ConfigError("field file '" + path.string() + "': malformed or too many rows");
        }
        const Point p{to_double("qpat.mu", parts[0]), to_double("qpat.mu", parts[1])};
        if ((p - grid.point(node)).norm() > 1e-9) {
            throw ConfigError("field file '" + path.string() + "': node order does not match grid.n");
        }
        f[node++] = to_double("qpat.mu", parts[2]);
    }
    if (node != grid.num_nodes()) throw ConfigError("field file '" + path.string() + "': wrong number of rows");
    return f;
}

void run_solve(const RunConfig& cfg, Artifacts& art) {
    const Grid2D grid(cfg.integer("grid.n"));
    const DiscreteOperator op = assemble(grid, make_coeff(grid, cfg), solver_options(cfg));
    SolveStats stats;
    const Field u = solve_dirichlet(op, sample_boundary(grid, Expression(cfg.text("solve.bc"))), &stats);
    auto out = art.open("solution.csv");
    write_field(out, grid, u);
    auto metrics = art.open("metrics.csv");
    row(metrics, "metric", "value");
    row(metrics, "iterations", stats.iterations);
    row(metrics, "relative_residual", stats.residual);
    row(metrics, "direct", stats.direct ? 1 : 0);
    row(metrics, "min", u.minCoeff());
    row(metrics, "max", u.maxCoeff());
}

void run_sample(const RunConfig& cfg, Artifacts& art) {
    const Grid2D grid(cfg.integer("grid.n"));
    const RandomBoundaryModel model = make_model(cfg, cfg.integer("bc.K"));
    const int count = cfg.integer("sample.count");
    if (count < 1) bad_value("sample.count", cfg.text("sample.count"), "an integer >= 1");
    auto coeffs = art.open("samples.csv");
    row(coeffs, "sample", "k", "a_k");
    auto summary = art.open("sample_norms.csv");
    row(summary, "sample", "sigma_norm", "h12_norm");
    auto values = art.open("boundary_values.csv");
    row(values, "sample", "s", "x", "y", "value");
    for (int m = 0; m < count; ++m) {
        Rng rng = derive_stream(cfg.seed, static_cast<std::uint64_t>(m));
        const BoundaryFunction bf = sample(model, rng);
        for (int k = 1; k <= model.size(); ++k) row(coeffs, m, k, bf.coeffs[k - 1]);
        row(summary, m, sigma_norm(bf, model), surrogate_h12_norm(bf));
        const BoundaryValues g = evaluate(bf, grid);
        for (int b = 0; b < grid.num_boundary(); ++b) {
            const Point p = grid.point(grid.boundary_order()[static_cast<std::size_t>(b)]);
            row(values, m, grid.arclength(b), p.x(), p.y(), g[b]);
        }
    }
}

void run_constraint_experiment(const RunConfig& cfg, Artifacts& art) {
    const Grid2D grid(cfg.integer("grid.n"));
    const Experiment exp(grid, make_coeff(grid, cfg), make_model(cfg, cfg.integer("bc.K")), omega_prime(grid, cfg),
                         solver_options(cfg), cfg.threads);
    const ConstraintMap map = make_map(cfg);
    const auto N_values = cfg.int_list("experiment.N_list");
    const std::string& tau_text = cfg.text("experiment.tau");
    const double tau = tau_text == "auto" ? std::numeric_limits<double>::quiet_NaN() : cfg.number("experiment.tau");
    const SuccessCurve curve =
        success_curve(exp, map, N_values, cfg.integer("experiment.M"), tau, cfg.seed, cfg.threads);

    auto out = art.open("success_curve.csv");
    row(out, "N", "successes", "M", "rate", "lo95", "hi95", "tau");
    for (const auto& r : curve.rows) row(out, r.N, r.successes, r.M, r.rate, r.ci.lo, r.ci.hi, curve.tau);

    auto trials = art.open("trials.csv");
    row(trials, "trial", "N", "min_max");
    for (std::size_t m = 0; m < curve.min_max.size(); ++m) {
        for (std::size_t j = 0; j < N_values.size(); ++j) row(trials, m, N_values[j], curve.min_max[m][j]);
    }

    // Constraint field and cover of trial 0 at the largest N.
    const double ref_tau = curve.tau > 0 ? curve.tau : std::numeric_limits<double>::min();
    const TrialOutcome first = run_trial(exp, map, N_values.back(), trial_seed(cfg.seed, 0), ref_tau);
    auto field = art.open("constraint_field.csv");
    row(field, "x", "y", "value", "label");
    for (int m = 0; m < exp.mask().size(); ++m) {
        const Point p = grid.point(exp.mask().nodes[static_cast<std::size_t>(m)]);
        row(field, p.x(), p.y(), first.max.values[m], first.labels.label[static_cast<std::size_t>(m)]);
    }
}

void run_variance_check(const RunConfig& cfg, Artifacts& art) {
    const Grid2D grid(cfg.integer("grid.n"));
    const Experiment exp(grid, make_coeff(grid, cfg), make_model(cfg, cfg.integer("bc.K")), omega_prime(grid, cfg),
                         solver_options(cfg), cfg.threads);
    std::vector<Point> points;
    for (const auto& item : split(cfg.text("variance.points"), ';')) points.push_back(to_point("variance.points", item));
    const auto rows = variance_identity_check(exp, make_map(cfg), points, cfg.integer("variance.M"), cfg.seed, cfg.threads);
    auto out = art.open("variance_check.csv");
    row(out, "x", "y", "mc", "series", "z");
    for (const auto& r : rows) row(out, r.x.x(), r.x.y(), r.mc, r.series, r.z);
}

void run_tail_check(const RunConfig& cfg, Artifacts& art) {
    const RandomBoundaryModel model = make_model(cfg, cfg.integer("bc.K"));
    const auto t_grid = cfg.number_list("tail.t_grid");
    const TailReport report = tail_check(model, cfg.integer("tail.M"), t_grid, cfg.seed);
    auto out = art.open("tail_check.csv");
    row(out, "t", "survival", "bound");
    for (const auto& r : report.rows) row(out, r.t, r.survival, r.bound);
    auto metrics = art.open("metrics.csv");
    row(metrics, "metric", "value");
    row(metrics, "c1", report.c1);
    row(metrics, "dominated", report.dominated ? 1 : 0);
}

void run_runge(const RunConfig& cfg, Artifacts& art) {
    const Grid2D grid(cfg.integer("grid.n"));
    const DiscreteOperator op = assemble(grid, make_coeff(grid, cfg), solver_options(cfg));
    const Dictionary dict = build_dictionary(op, make_model(cfg, cfg.integer("runge.K")), cfg.threads);
    const SubdomainMask disk = disk_mask(grid, cfg.point("runge.disk.center"), cfg.number("runge.disk.radius"));
    TargetSpec spec;
    const std::string& kind = cfg.text("runge.target");
    spec.kind = kind == "dictionary_member" ? TargetKind::dictionary_member
              : kind == "harmonic_poly"     ? TargetKind::harmonic_poly
                                            : TargetKind::fundamental_solution;
    spec.pole = cfg.point("runge.pole");
    spec.member = cfg.integer("runge.member");
    spec.degree = cfg.integer("runge.degree");
    const LocalTarget target = make_target(grid, disk, spec, &dict);
    const auto lambdas = cfg.number_list("runge.lambdas");
    const auto curve = tradeoff_curve(target, dict, lambdas);
    auto out = art.open("runge.csv");
    row(out, "lambda", "eps", "boundary_cost");
    for (const auto& r : curve) row(out, r.lambda, r.eps_achieved, r.boundary_cost);
}

void run_qpat(const RunConfig& cfg, Artifacts& art) {
    const Grid2D grid(cfg.integer("grid.n"));
    const std::string& mu_text = cfg.text("qpat.mu");
    const Field mu = fs::is_regular_file(mu_text) ? read_field(grid, mu_text) : sample_field(grid, Expression(mu_text));
    const int N = cfg.integer("qpat.N");
    const double tau = cfg.number("qpat.tau");
    const std::string& bc_text = cfg.text("qpat.bc");
    const SolverOptions options = solver_options(cfg);

    std::vector<QpatData> data(static_cast<std::size_t>(N));
    const RandomBoundaryModel model = make_model(cfg, cfg.integer("bc.K"));
    parallel_for(static_cast<std::size_t>(N), cfg.threads, [&](std::size_t l) {
        BoundaryValues g;
        if (bc_text == "random") {
            Rng rng = derive_stream(cfg.seed, l);
            g = evaluate(sample(model, rng), grid);
        } else {
            g = BoundaryValues::Constant(grid.num_boundary(), to_double("qpat.bc", bc_text.substr(6)));
        }
        data[l] = qpat_forward(grid, mu, g, options);
    });
    const SubdomainMask inner = omega_prime(grid, cfg);
    const QpatStitched rec = qpat_reconstruct_multi(grid, data, tau, inner, options);

    std::vector<int> valid_nodes, valid_inner;
    for (int node = 0; node < grid.num_nodes(); ++node) {
        if (rec.valid[static_cast<std::size_t>(node)]) valid_nodes.push_back(node);
    }
    for (int node : inner.nodes) {
        if (rec.valid[static_cast<std::size_t>(node)]) valid_inner.push_back(node);
    }
    auto field = art.open("qpat_mu.csv");
    row(field, "x", "y", "value", "label");
    for (int node = 0; node < grid.num_nodes(); ++node) {
        const Point p = grid.point(node);
        row(field, p.x(), p.y(), rec.mu_hat[node], rec.label[static_cast<std::size_t>(node)]);
    }
    auto metrics = art.open("metrics.csv");
    row(metrics, "metric", "value");
    row(metrics, "relative_l2_error", valid_nodes.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                          : relative_l2(rec.mu_hat, mu, valid_nodes));
    row(metrics, "valid_fraction_omega_prime", static_cast<double>(valid_inner.size()) / inner.size());
    row(metrics, "complete", rec.complete ? 1 : 0);
}

void run_conductivity(const RunConfig& cfg, Artifacts& art) {
    const Grid2D grid(cfg.integer("grid.n"));
    const Field a = sample_field(grid, Expression(cfg.text("conductivity.a")));
    std::vector<BoundaryValues> bcs;
    for (const auto& item : expr_items(cfg.text("conductivity.bc"))) bcs.push_back(sample_boundary(grid, Expression(item)));
    const ConductivityData data = conductivity_forward(grid, a, bcs, solver_options(cfg));
    const SubdomainMask inner = omega_prime(grid, cfg);
    const Point anchor = cfg.point("conductivity.anchor");
    const ConductivityReconstruction rec = conductivity_reconstruct(grid, data, cfg.number("conductivity.tau"), anchor, inner);

    const double anchor_log = std::log(a[grid.nearest_node(anchor)]);
    Field truth = a.array().log() - anchor_log;
    std::vector<int> region;
    for (int node = 0; node < grid.num_nodes(); ++node) {
        if (rec.region[static_cast<std::size_t>(node)]) region.push_back(node);
    }
    auto field = art.open("conductivity_log_a.csv");
    write_field(field, grid, rec.log_a);
    auto metrics = art.open("metrics.csv");
    row(metrics, "metric", "value");
    row(metrics, "jacobian_coverage", rec.coverage);
    row(metrics, "relative_l2_error_log_a", region.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                           : relative_l2(rec.log_a, truth, region));
    row(metrics, "warning", rec.warning ? 1 : 0);
}

void write_manifest(const RunConfig& cfg, Artifacts& art) {
    nlohmann::ordered_json doc;
    doc["command"] = cfg.command;
    doc["seed"] = cfg.seed;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    for (const auto& spec : key_table()) config[spec.key] = cfg.values.at(spec.key);
    doc["config"] = config;
    nlohmann::ordered_json outputs = nlohmann::ordered_json::object();
    for (const auto& f : art.files()) outputs[f.filename().string()] = "sha256:" + sha256_file(f);
    doc["outputs"] = outputs;
    auto out = art.open("manifest.json");
    out << doc.dump(2) << '\n';
}

void prepare_out_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("out_dir '" + dir.string() + "' cannot be created");
    const fs::path probe = dir / ".randbc_write_probe";
    {
        std::ofstream out(probe);
        if (!out) throw ConfigError("out_dir '" + dir.string() + "' is not writable");
    }
    fs::remove(probe, ec);
}

} // namespace

ExecuteResult execute(const RunConfig& cfg) {
    ExecuteResult result;
    try {
        prepare_out_dir(cfg.out_dir);
    } catch (const ConfigError& err) {
        return {2, {}, err.what()};
    }
    Artifacts art(cfg.out_dir);
    try {
        const std::string& c = cfg.command;
        if (c == "solve") run_solve(cfg, art);
        else if (c == "sample") run_sample(cfg, art);
        else if (c == "constraint-experiment") run_constraint_experiment(cfg, art);
        else if (c == "variance-check") run_variance_check(cfg, art);
        else if (c == "tail-check") run_tail_check(cfg, art);
        else if (c == "runge") run_runge(cfg, art);
        else if (c == "qpat") run_qpat(cfg, art);
        else if (c == "conductivity") run_conductivity(cfg, art);
        else throw ConfigError("unknown command '" + c + "'");
        write_manifest(cfg, art);
        result.files = art.files();
        return result;
    } catch (const ConfigError& err) {
        result = {2, {}, err.what()};
    } catch (const std::invalid_argument& err) {
        result = {2, {}, err.what()};
    } catch (const std::exception& err) {
        result = {1, {}, err.what()};
    }
    art.remove_all();
    return result;
}

} // namespace randbc::cli
