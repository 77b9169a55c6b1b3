#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include "sspde/errors.hpp"
#include "sspde/gaussian.hpp"
#include "sspde/io.hpp"
#include "sspde/kramers.hpp"
#include "sspde/lattice.hpp"
#include "sspde/markov.hpp"
#include "sspde/regstruct.hpp"
#include "sspde/spde.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace sspde;

namespace {

struct Common {
    std::uint64_t seed = 1;
    int workers = 1;
    std::string out_dir = ".";
    bool out_flag = false;
};

// An explicit --out wins; otherwise SSPDE_OUTPUT_DIR replaces the config or default value.
fs::path output_dir(const Common& c)
{
    fs::path dir = c.out_dir;
    if (!c.out_flag)
        if (const char* env = std::getenv("SSPDE_OUTPUT_DIR"); env && *env)
            dir = env;
    fs::create_directories(dir);
    return dir;
}

std::ofstream open_output(const fs::path& p)
{
    std::ofstream os(p, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open " + p.string() + " for writing");
    return os;
}

std::string tag(double x)
{
    std::string s = io::format_double(x);
    for (char& ch : s)
        if (ch == '.')
            ch = 'p';
    return s;
}

void write_json(const fs::path& p, const ordered_json& j)
{
    auto os = open_output(p);
    os << j.dump(2) << '\n';
}

// ---- simulate-lattice ----

struct LatticeOpts {
    std::vector<int> N{2};
    double gamma = 1.0;
    std::vector<double> eps{0.1};
    double dt = 1e-3;
    double t_max = 0;
    double hit_radius = 0.2;
    long runs = 100;
};

int run_lattice(const LatticeOpts& o, const Common& c)
{
    const fs::path dir = output_dir(c);
    ordered_json points = ordered_json::array();
    for (int N : o.N)
        for (double eps : o.eps) {
            SdeConfig cfg;
            cfg.eps = eps;
            cfg.dt = o.dt;
            cfg.t_max = o.t_max;
            cfg.seed = c.seed;
            cfg.hit_radius = o.hit_radius;
            cfg.workers = c.workers;
            if (N < 2)
                throw std::invalid_argument("N must be at least 2");
            if (!(eps > 0) || !(o.dt > 0) || o.runs < 1)
                throw std::invalid_argument("eps, dt and runs must be positive");
            const auto runs = lattice_transition_batch(N, o.gamma, cfg, o.runs);
            const std::string stem = fmt::format("lattice_N{}_eps{}", N, tag(eps));
            auto csv = open_output(dir / (stem + ".csv"));
            io::write_runs_csv(csv, runs);
            ordered_json conf{{"subcommand", "simulate-lattice"}, {"N", N},          {"gamma", o.gamma},
                              {"eps", eps},                      {"dt", o.dt},        {"t_max", o.t_max},
                              {"hit_radius", o.hit_radius},      {"runs", o.runs},    {"seed", c.seed},
                              {"workers", c.workers}};
            auto j = io::summary_json(summarise(runs), conf);
            j["eyring_kramers"] = eyring_kramers_time(N, o.gamma, eps);
            j["runs_file"] = stem + ".csv";
            points.push_back(j);
        }
    ordered_json out{{"schema_version", io::schema_version}, {"points", points}};
    write_json(dir / "lattice_summary.json", out);
    std::cout << out.dump(2) << '\n';
    return 0;
}

// ---- simulate-spde ----

struct SpdeOpts {
    int d = 1;
    double L = 1.0;
    std::vector<int> N{32};
    std::vector<double> eps{0.1};
    double dt = 1e-3;
    double t_max = 0;
    std::string renormalize = "auto";
    double theta = 0;
    double hit_radius = 0.2;
    double transverse_scale = 1.0;
    long runs = 20;
};

int run_spde(const SpdeOpts& o, const Common& c)
{
    const fs::path dir = output_dir(c);
    ordered_json points = ordered_json::array();
    for (int N : o.N)
        for (double eps : o.eps) {
            SpdeConfig cfg = SpdeConfig::defaults(o.d);
            cfg.L = o.L;
            cfg.N = N;
            cfg.eps = eps;
            cfg.dt = o.dt;
            cfg.t_max = o.t_max;
            cfg.seed = c.seed;
            cfg.theta = o.theta;
            cfg.hit_radius = o.hit_radius;
            cfg.transverse_scale = o.transverse_scale;
            cfg.workers = c.workers;
            if (o.renormalize != "auto")
                cfg.renormalize = o.renormalize == "on";
            cfg.validate();
            if (o.runs < 1)
                throw std::invalid_argument("runs must be positive");
            const auto runs = transition_time_experiment(cfg, o.runs);
            const std::string stem = fmt::format("spde_d{}_N{}_eps{}", o.d, N, tag(eps));
            auto csv = open_output(dir / (stem + ".csv"));
            io::write_runs_csv(csv, runs);
            ordered_json conf{{"subcommand", "simulate-spde"},
                              {"d", o.d},
                              {"L", o.L},
                              {"N", N},
                              {"eps", eps},
                              {"dt", o.dt},
                              {"t_max", cfg.horizon()},
                              {"renormalize", cfg.renormalize},
                              {"theta", o.theta},
                              {"hit_radius", o.hit_radius},
                              {"transverse_scale", o.transverse_scale},
                              {"runs", o.runs},
                              {"seed", c.seed},
                              {"workers", c.workers}};
            auto j = io::summary_json(summarise(runs), conf);
            if (o.d == 1 && o.L < 2 * std::numbers::pi)
                j["ek_prediction"] = ek_predict_1d(o.L, eps).value;
            else if (o.d == 2 && o.L < 2 * std::numbers::pi)
                j["ek_prediction"] = ek_predict_2d(o.L, eps, 256, o.theta).value;
            j["runs_file"] = stem + ".csv";
            points.push_back(j);
        }
    ordered_json out{{"schema_version", io::schema_version}, {"points", points}};
    write_json(dir / "spde_summary.json", out);
    std::cout << out.dump(2) << '\n';
    return 0;
}

// ---- markov ----

struct MarkovOpts {
    std::string chain;
    std::vector<int> A, B;
};

int run_markov(const MarkovOpts& o)
{
    std::ifstream in(o.chain);
    if (!in)
        throw std::invalid_argument("cannot read chain file " + o.chain);
    const auto chain = read_chain(in);
    const auto sol = committor(chain, o.A, o.B);
    const auto flow = harmonic_unit_flow(chain, o.A, o.B);
    ordered_json j;
    j["schema_version"] = io::schema_version;
    j["config"] = {{"subcommand", "markov"}, {"chain", o.chain}, {"A", o.A}, {"B", o.B}};
    j["capacity"] = sol.cap;
    j["committor"] = std::vector<double>(sol.h.data(), sol.h.data() + sol.h.size());
    j["equilibrium_measure"] = std::vector<double>(sol.e.data(), sol.e.data() + sol.e.size());
    j["bounds"] = {{"dirichlet", dirichlet_upper_bound(chain, o.A, o.B, sol.h)},
                   {"thomson", thomson_lower_bound(chain, o.A, o.B, flow)}};
    std::cout << j.dump(2) << '\n';
    return 0;
}

// ---- predict-ek ----

struct EkOpts {
    int d = 1;
    double L = 0;
    std::vector<double> eps;
    int N = 0;
    double theta = 0;
};

int run_predict(const EkOpts& o)
{
    if (o.d != 1 && o.d != 2)
        throw std::invalid_argument("predict-ek supports d = 1 and d = 2");
    const int N = o.N > 0 ? o.N : (o.d == 1 ? 512 : 256);
    ordered_json points = ordered_json::array();
    for (double eps : o.eps) {
        const auto p = o.d == 1 ? ek_predict_1d(o.L, eps, N) : ek_predict_2d(o.L, eps, N, o.theta);
        ordered_json j;
        j["config"] = {{"subcommand", "predict-ek"}, {"d", o.d}, {"L", o.L}, {"eps", eps}, {"N", N}};
        if (o.d == 2)
            j["config"]["theta"] = o.theta;
        j["prefactor"] = p.prefactor;
        j["exponent_rate"] = p.exponent_rate;
        j["value"] = p.value;
        j["determinant"] = p.determinant;
        j["truncation_error_estimate"] = p.truncation_error_estimate;
        points.push_back(j);
    }
    ordered_json out{{"schema_version", io::schema_version}};
    if (points.size() == 1)
        for (auto& [k, v] : points[0].items())
            out[k] = v;
    else
        out["points"] = points;
    std::cout << out.dump(2) << '\n';
    return 0;
}

// ---- renorm-constants ----

struct ConstOpts {
    int d = 3;
    std::vector<int> N{8, 16, 32};
    double L = 1.0;
};

int run_constants(const ConstOpts& o, const Common& c)
{
    std::vector<io::ConstantRow> rows;
    for (int N : o.N) {
        if (N < 1)
            throw std::invalid_argument("N must be positive");
        if (o.d == 3) {
            const auto k = renorm_constants_3d(N, o.L);
            for (auto [name, v] : {std::pair{"C1", k.C1}, {"C2", k.C2}, {"C3", k.C3}, {"C4", k.C4},
                                   {"triangle", k.triangle}, {"half_triangle", k.half_triangle},
                                   {"quartic", k.quartic}, {"sunset", k.sunset}})
                rows.push_back({name, 3, N, o.L, -1.0, v});
        } else if (o.d == 1 || o.d == 2) {
            rows.push_back({"C_N", o.d, N, o.L, 1.0, wick_constant_CN(o.d, N, o.L, 1.0)});
            rows.push_back({"galerkin_C_N", o.d, N, o.L, 0.0, galerkin_CN(o.d, N, o.L)});
        } else {
            throw std::invalid_argument("d must be 1, 2 or 3");
        }
    }
    const fs::path p = output_dir(c) / fmt::format("constants_d{}.csv", o.d);
    auto os = open_output(p);
    io::write_constants_csv(os, rows);
    io::write_constants_csv(std::cout, rows);
    return 0;
}

// ---- regstruct ----

struct RegOpts {
    bool list = false;
    std::string coproduct_of, renorm_of;
};

// Per-axis variants X1..X3 collapse to one X_i row.
std::string axis_group(std::string name)
{
    for (std::size_t p = name.find('X'); p != std::string::npos; p = name.find('X', p + 1))
        if (p + 1 < name.size() && name[p + 1] >= '1' && name[p + 1] <= '3')
            name.replace(p + 1, 1, "_i");
    return name;
}

int run_regstruct(const RegOpts& o)
{
    using namespace rs;
    const int chosen = int(o.list) + int(!o.coproduct_of.empty()) + int(!o.renorm_of.empty());
    if (chosen != 1)
        throw std::invalid_argument("regstruct needs exactly one of --list, --coproduct, --renorm");
    std::cout << "# schema_version=" << io::schema_version << '\n';
    if (o.list) {
        std::vector<std::string> seen;
        for (const auto& s : generate_fac(Degree{Rat(3, 2), Rat(0)}, Truncation::table)) {
            const std::string g = axis_group(display_name(s));
            if (std::find(seen.begin(), seen.end(), g) != seen.end())
                continue;
            seen.push_back(g);
            std::cout << fmt::format("{:<10} {:<28} {}\n", g, axis_group(to_string(s)), to_string(degree(s)));
        }
    } else if (!o.coproduct_of.empty()) {
        const Symbol s = parse_symbol(o.coproduct_of);
        for (const auto& [key, c] : coproduct(s))
            std::cout << fmt::format("{} {} (x) {}\n", to_string(c), display_name(key.first), to_string(key.second));
    } else {
        const Symbol s = parse_symbol(o.renorm_of);
        for (const auto& [sym, p] : renormalize(s))
            std::cout << fmt::format("({}) {}\n", to_string(p), display_name(sym));
    }
    return 0;
}

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--seed", c.seed, "root seed");
    sub->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option_function<std::string>(
        "--out",
        [&c](const std::string& v) {
            c.out_dir = v;
            c.out_flag = true;
        },
        "output directory");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Stochastic Allen-Cahn metastability toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key = value file with [subcommand] sections; flags win");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.set_help_all_flag("--help-all");

    Common common;

    LatticeOpts lo;
    auto* lat = app.add_subcommand("simulate-lattice", "Euler-Maruyama transition times for the coupled lattice");
    lat->add_option("--N", lo.N, "lattice sizes")->delimiter(',');
    lat->add_option("--gamma", lo.gamma, "coupling");
    lat->add_option("--eps", lo.eps, "noise strengths")->delimiter(',')->required();
    lat->add_option("--dt", lo.dt);
    lat->add_option("--tmax", lo.t_max, "horizon, 0 for 1e4/eps");
    lat->add_option("--hit-radius", lo.hit_radius);
    lat->add_option("--runs", lo.runs);
    add_common(lat, common);

    SpdeOpts so;
    auto* spde = app.add_subcommand("simulate-spde", "Spectral Allen-Cahn transition times");
    spde->add_option("--d", so.d)->check(CLI::IsMember({1, 2}));
    spde->add_option("--L", so.L);
    spde->add_option("--N", so.N, "mode cutoffs")->delimiter(',');
    spde->add_option("--eps", so.eps, "noise strengths")->delimiter(',')->required();
    spde->add_option("--dt", so.dt);
    spde->add_option("--tmax", so.t_max, "horizon, 0 for 1e4/eps");
    spde->add_option("--renormalize", so.renormalize)->check(CLI::IsMember({"auto", "on", "off"}));
    spde->add_option("--theta", so.theta);
    spde->add_option("--hit-radius", so.hit_radius);
    spde->add_option("--transverse-scale", so.transverse_scale);
    spde->add_option("--runs", so.runs);
    add_common(spde, common);

    MarkovOpts mo;
    auto* mk = app.add_subcommand("markov", "Committor, capacity and variational bounds of a reversible chain");
    mk->add_option("--chain", mo.chain, "edge list file")->required();
    mk->add_option("--A", mo.A)->delimiter(',')->required();
    mk->add_option("--B", mo.B)->delimiter(',')->required();

    EkOpts eo;
    auto* ek = app.add_subcommand("predict-ek", "Eyring-Kramers prediction for the field");
    ek->add_option("--d", eo.d)->check(CLI::IsMember({1, 2}));
    ek->add_option("--L", eo.L)->required();
    ek->add_option("--eps", eo.eps)->delimiter(',')->required();
    ek->add_option("--N", eo.N, "determinant cutoff, 0 for the default");
    ek->add_option("--theta", eo.theta);

    ConstOpts co;
    auto* rc = app.add_subcommand("renorm-constants", "Wick and diagram constants");
    rc->add_option("--d", co.d)->check(CLI::IsMember({1, 2, 3}));
    rc->add_option("--N", co.N)->delimiter(',');
    rc->add_option("--L", co.L);
    rc->add_option_function<std::string>("--out", [&common](const std::string& v) {
        common.out_dir = v;
        common.out_flag = true;
    });

    RegOpts ro;
    auto* reg = app.add_subcommand("regstruct", "Symbols, coproducts and renormalization");
    reg->add_flag("--list", ro.list, "table of symbols up to degree 3/2");
    reg->add_option("--coproduct", ro.coproduct_of, "symbol, e.g. RSVV or I(Xi)^2");
    reg->add_option("--renorm", ro.renorm_of, "symbol to renormalize");

    for (auto* sub : app.get_subcommands({}))
        sub->allow_config_extras(CLI::config_extras_mode::error);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        std::cerr << (subs.empty() ? app.help() : subs.front()->help());
        return 1;
    }

    try {
        if (*lat)
            return run_lattice(lo, common);
        if (*spde)
            return run_spde(so, common);
        if (*mk)
            return run_markov(mo);
        if (*ek)
            return run_predict(eo);
        if (*rc)
            return run_constants(co, common);
        if (*reg)
            return run_regstruct(ro);
    } catch (const NumericalError& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n\n";
        std::cerr << app.get_subcommands().front()->help();
        return 1;
    }
    return 1;
}
