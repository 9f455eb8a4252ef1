#include "chaoslab/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "chaoslab/chaos_algebra.hpp"
#include "chaoslab/exchange_pairs.hpp"
#include "chaoslab/families.hpp"
#include "chaoslab/hash.hpp"
#include "chaoslab/mc_lab.hpp"
#include "chaoslab/rng.hpp"
#include "chaoslab/serialize.hpp"
#include "chaoslab/stein_bounds.hpp"

namespace chaoslab {

using nlohmann::json;

//---------------------------------------------------------------------------//
// Config
//---------------------------------------------------------------------------//

void ExperimentConfig::resolve()
{
    if (command != "bound" && command != "diagnose" && command != "mc" && command != "selftest")
        throw InputError("unknown command '" + command + "'");
    if (!family.empty() && !kernel_path.empty())
        throw InputError("give either --family or --kernel, not both");
    if (family.empty() && kernel_path.empty() && command != "selftest")
        throw InputError("no input: pass --family or --kernel");
    if (pair != "mehler" && pair != "gibbs")
        throw InputError("--pair must be mehler or gibbs");
    if (N == 0)
        throw InputError("--N must be at least 1");
    if (bins < 10)
        throw InputError("--bins must be at least 10");
    if (n == 0)
        throw InputError("--n must be at least 1");
    for (auto k : n_grid)
        if (k == 0)
            throw InputError("--n-grid entries must be positive");
    for (double t : t_grid)
        if (!(t > 0) || !std::isfinite(t))
            throw InputError("--t-grid entries must be positive");

    if (family == "qvar")
    {
        if (p != 0 && p != 2)
            throw InputError("qvar is a second-chaos family; --p must be 2");
        p = 2;
    }
    else if (family == "offdiag-rand")
    {
        if (p == 0)
            p = 2;
        if (m == 0)
            m = 8;
    }
    else if (family == "pair2d")
    {
        if (p != 0)
            throw InputError("pair2d has fixed orders (1, 2); drop --p");
    }
    else if (!family.empty())
    {
        throw InputError("unknown family '" + family + "' (qvar, offdiag-rand, pair2d)");
    }
    if (p < 0)
        throw InputError("--p must be positive");

    bool const sweep_family = family == "qvar" || family == "pair2d";
    if (!n_grid.empty())
    {
        if (command == "diagnose" && pair != "gibbs")
            throw InputError("--n-grid with diagnose needs --pair gibbs");
        if ((command == "bound" || command == "mc") && !sweep_family)
            throw InputError("--n-grid sweeps only apply to qvar and pair2d");
    }
    if (command == "diagnose" && pair == "mehler" && t_grid.empty())
        t_grid = {1e-1, 1e-2, 1e-3};
}

json ExperimentConfig::to_json() const
{
    return {{"command", command}, {"family", family}, {"kernel", kernel_path},
            {"m", m},             {"p", p},           {"n", n},
            {"n_grid", n_grid},   {"t_grid", t_grid}, {"N", N},
            {"seed", seed},       {"bins", bins},     {"pair", pair},
            {"out", out},         {"plot_data", plot_data}};
}

ExperimentConfig ExperimentConfig::from_json(json const& j)
{
    if (!j.is_object())
        throw InputError("config must be a JSON object");
    ExperimentConfig c;
    try
    {
        for (auto const& [key, v] : j.items())
        {
            if (key == "command") c.command = v.get<std::string>();
            else if (key == "family") c.family = v.get<std::string>();
            else if (key == "kernel") c.kernel_path = v.get<std::string>();
            else if (key == "m") c.m = v.get<std::size_t>();
            else if (key == "p") c.p = v.get<int>();
            else if (key == "n") c.n = v.get<std::size_t>();
            else if (key == "n_grid") c.n_grid = v.get<std::vector<std::size_t>>();
            else if (key == "t_grid") c.t_grid = v.get<std::vector<double>>();
            else if (key == "N") c.N = v.get<std::size_t>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "bins") c.bins = v.get<std::size_t>();
            else if (key == "pair") c.pair = v.get<std::string>();
            else if (key == "out") c.out = v.get<std::string>();
            else if (key == "plot_data") c.plot_data = v.get<bool>();
            else throw InputError("config: unknown key '" + key + "'");
        }
    }
    catch (json::exception const& e)
    {
        throw InputError(std::string("config: ") + e.what());
    }
    return c;
}

std::string ExperimentConfig::hash() const
{
    json j = to_json();
    j.erase("out");
    j.erase("plot_data");
    return Fnv1a().text(j.dump()).hex();
}

namespace {

//---------------------------------------------------------------------------//
// Inputs
//---------------------------------------------------------------------------//

struct Leg
{
    json params = json::object();
    std::optional<Kernel> kernel;  // scalar input I_p(kernel)
    int p = 0;
    std::optional<ChaosVector> vec;

    std::string label() const
    {
        std::string s;
        for (auto const& [k, v] : params.items())
            s += (s.empty() ? "" : ";") + k + "=" + v.dump();
        return s.empty() ? "-" : s;
    }
};

void load_kernel_file(ExperimentConfig const& cfg, Leg& leg)
{
    json const j = read_json_file(cfg.kernel_path);
    if (!j.is_object())
        throw InputError(cfg.kernel_path + ": expected a JSON object");
    if (j.contains("components"))
    {
        ChaosVector v = vector_from_json(j);
        if (v.size() == 1)
        {
            leg.kernel = v.kernel(0);
            leg.p = v.order(0);
        }
        else
        {
            leg.vec = std::move(v);
        }
    }
    else if (j.contains("terms"))
    {
        ChaosExpansion F = expansion_from_json(j);
        if (F.constant() != 0 || F.terms().size() != 1)
            throw InputError(cfg.kernel_path + ": bounds need a single chaos of one order");
        leg.p = F.terms().begin()->first;
        leg.kernel = F.terms().begin()->second;
    }
    else
    {
        Kernel f = kernel_from_json(j);
        leg.p = f.order();
        leg.kernel = symmetrize(f);
    }
    if (cfg.p != 0 && leg.kernel && cfg.p != leg.p)
        throw InputError("--p " + std::to_string(cfg.p) + " does not match the kernel order "
                         + std::to_string(leg.p));
    leg.params["kernel_hash"] = leg.vec ? leg.vec->hash()
                                        : Fnv1a().values(leg.kernel->coeffs()).hex();
}

Leg make_leg(ExperimentConfig const& cfg, std::size_t n)
{
    Leg leg;
    if (!cfg.kernel_path.empty())
    {
        load_kernel_file(cfg, leg);
        return leg;
    }
    if (cfg.family == "qvar")
    {
        leg.kernel = qvar_kernel(n, cfg.m);
        leg.p = 2;
        leg.params["n"] = n;
    }
    else if (cfg.family == "offdiag-rand")
    {
        leg.kernel = offdiag_rand_kernel(cfg.p, cfg.m, cfg.seed);
        leg.p = cfg.p;
    }
    else
    {
        leg.vec = pair2d_vector(n);
        leg.params["n"] = n;
    }
    return leg;
}

std::vector<Leg> make_legs(ExperimentConfig const& cfg)
{
    std::vector<Leg> legs;
    if (cfg.n_grid.empty() || cfg.command == "diagnose")
        legs.push_back(make_leg(cfg, cfg.n));
    else
        for (auto n : cfg.n_grid)
            legs.push_back(make_leg(cfg, n));
    return legs;
}

//---------------------------------------------------------------------------//
// Output
//---------------------------------------------------------------------------//

std::string fmt(double x)
{
    if (std::isnan(x))
        return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

struct Output
{
    json report;
    std::string csv;
    std::string plot;  // tidy long-format table
    std::string text;  // what goes to stdout
};

json envelope(ExperimentConfig const& cfg)
{
    return {{"config", cfg.to_json()}, {"config_hash", cfg.hash()}};
}

void write_file(std::string const& path, std::string const& content)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw InputError("cannot write " + path);
    os << content;
    if (!os)
        throw InputError("write failed for " + path);
}

void emit(ExperimentConfig const& cfg, Output const& o, std::ostream& out)
{
    out << o.text;
    if (cfg.out.empty())
    {
        if (cfg.plot_data)
            out << "\n" << o.plot;
        return;
    }
    write_file(cfg.out + ".json", o.report.dump(2) + "\n");
    write_file(cfg.out + ".csv", o.csv);
    if (cfg.plot_data)
        write_file(cfg.out + ".plot.csv", o.plot);
}

void ingredient_table(BoundReport const& r, std::ostream& os)
{
    os << std::left << std::setw(34) << r.name << fmt(r.value);
    if (r.vacuous)
        os << "  (vacuous: above 1)";
    os << "\n";
    for (auto const& [k, v] : r.ingredients.items())
    {
        os << "    " << std::setw(30) << k;
        if (v.is_number_float())
            os << fmt(v.get<double>());
        else
            os << v.dump();
        os << "\n";
    }
    for (auto const& note : r.notes)
        os << "    note: " << note << "\n";
}

//---------------------------------------------------------------------------//
// bound
//---------------------------------------------------------------------------//

std::vector<BoundReport> scalar_bounds(Kernel const& f, int p)
{
    ChaosVector const v({{p, f}});
    return {tv_report(f, p), intermediate_report(f, p), wasserstein_bound(v), nprr_bound(v)};
}

std::vector<BoundReport> vector_bounds(ChaosVector const& v)
{
    std::vector<BoundReport> out{wasserstein_bound(v), nprr_bound(v)};
    double const R = battery_box_radius(covariance(v));
    for (auto const& id : battery_ids(v.size()))
    {
        auto rep = smooth_report(v, BatteryFunction::parse(id, v.size()).M2(R), id);
        rep.ingredients["box_radius"] = R;
        out.push_back(std::move(rep));
    }
    return out;
}

Output cmd_bound(ExperimentConfig const& cfg)
{
    Output o;
    o.report = envelope(cfg);
    o.report["results"] = json::array();
    o.csv = "leg,bound,value,vacuous,inputs_hash\n";
    o.plot = "leg,bound,value\n";
    std::ostringstream text;
    for (auto const& leg : make_legs(cfg))
    {
        json res = {{"params", leg.params}};
        std::vector<BoundReport> reps;
        if (leg.vec)
        {
            reps = vector_bounds(*leg.vec);
            res["Sigma"] = covariance(*leg.vec).to_json();
            res["V"] = s_variance_matrix(*leg.vec).to_json();
        }
        else
        {
            reps = scalar_bounds(*leg.kernel, leg.p);
            res["p"] = leg.p;
        }
        res["bounds"] = json::array();
        text << "[" << leg.label() << "]\n";
        for (auto const& r : reps)
        {
            res["bounds"].push_back(r.to_json());
            o.csv += leg.label() + "," + r.name + "," + fmt(r.value) + ","
                     + (r.vacuous ? "1" : "0") + "," + r.inputs_hash + "\n";
            o.plot += leg.label() + "," + r.name + "," + fmt(r.value) + "\n";
            ingredient_table(r, text);
        }
        o.report["results"].push_back(std::move(res));
    }
    o.text = text.str();
    return o;
}

//---------------------------------------------------------------------------//
// diagnose
//---------------------------------------------------------------------------//

Output cmd_diagnose(ExperimentConfig& cfg)
{
    Leg const leg = make_leg(cfg, cfg.n);
    if (!leg.kernel)
        throw InputError("diagnose needs a scalar kernel, not a vector");
    Kernel const& f = *leg.kernel;

    DiagnosticsReport rep;
    if (cfg.pair == "mehler")
    {
        rep = mehler_rate_table(f, leg.p, cfg.t_grid);
    }
    else
    {
        if (cfg.n_grid.empty())
            for (std::size_t k = 1; k <= f.cells(); ++k)
                if (f.cells() % k == 0)
                    cfg.n_grid.push_back(k);
        rep = gibbs_rate_table(f, leg.p, cfg.n_grid);
    }

    Output o;
    o.report = envelope(cfg);
    o.report["pair"] = rep.pair;
    o.report["params"] = leg.params;
    o.report["p"] = leg.p;
    o.report["rows"] = json::array();
    o.plot = "construction,parameter,metric,value\n";
    for (auto const& r : rep.rows)
    {
        o.report["rows"].push_back({{"construction", r.construction},
                                    {"parameter", r.parameter},
                                    {"distance", r.distance},
                                    {"target_norm", r.target_norm},
                                    {"rate_estimate", std::isfinite(r.rate_estimate)
                                                          ? json(r.rate_estimate)
                                                          : json()}});
        std::string const head = r.construction + "," + fmt(r.parameter) + ",";
        o.plot += head + "distance," + fmt(r.distance) + "\n";
        o.plot += head + "target_norm," + fmt(r.target_norm) + "\n";
    }
    o.csv = to_csv(rep);
    o.text = o.csv;
    return o;
}

//---------------------------------------------------------------------------//
// mc
//---------------------------------------------------------------------------//

struct McRow
{
    DistanceEstimate est;
    std::string bound_name;
    double bound;
    double allowance;
};

bool dominated(McRow const& r)
{
    double se = std::isfinite(r.est.std_error) ? r.est.std_error : 0.0;
    return r.est.value <= r.bound + r.allowance + 4 * se;
}

std::string params_field(json const& params)
{
    std::string s;
    for (auto const& [k, v] : params.items())
        s += (s.empty() ? "" : ";") + k + "="
             + (v.is_number_float() ? fmt(v.get<double>()) : v.dump());
    return s;
}

Output cmd_mc(ExperimentConfig const& cfg, unsigned workers)
{
    Output o;
    o.report = envelope(cfg);
    o.report["generator"] = CounterRng::id;
    o.report["normal_cdf"] = "std::erfc (platform)";
    o.report["results"] = json::array();
    o.csv = "estimator,value,stderr,N,seed,params,bound_name,bound,allowance,dominated\n";
    o.plot = "leg,estimator,quantity,value\n";

    for (auto const& leg : make_legs(cfg))
    {
        std::vector<McRow> rows;
        if (leg.vec)
        {
            ChaosVector const& v = *leg.vec;
            SymMatrix const sigma = covariance(v);
            // Same singularity rule as the bounds.
            auto const eig = sym_eig(sigma);
            if (!(eig.values.back() > 1e-12 * eig.values.front()))
                throw SingularCovarianceError("covariance is singular");
            auto const batch = sample(v, cfg.N, cfg.seed, workers);
            double const R = battery_box_radius(sigma);
            for (auto const& id : battery_ids(v.size()))
            {
                double const M2 = BatteryFunction::parse(id, v.size()).M2(R);
                rows.push_back({smooth_discrepancy(batch, sigma, id), "smooth:" + id,
                                smooth_bound(v, M2), 0.0});
            }
        }
        else
        {
            Kernel const& f = *leg.kernel;
            ChaosExpansion const F = ChaosExpansion::from_kernel(leg.p, f);
            double const s2 = variance(F);
            auto const batch = sample(F, cfg.N, cfg.seed, workers);
            ChaosVector const v({{leg.p, f}});
            rows.push_back({tv_binned(batch, s2, cfg.bins), "tv_fourth_moment",
                            tv_bound(f, leg.p), 0.01});
            rows.push_back({w1_empirical(batch, s2), "wasserstein_fourth_moment",
                            nprr_bound(v).value, 0.005 * std::sqrt(s2)});
        }

        json res = {{"params", leg.params}, {"rows", json::array()}};
        for (auto& r : rows)
        {
            for (auto const& [k, val] : leg.params.items())
                r.est.params[k] = val;
            r.est.params["seed"] = cfg.seed;
            bool const ok = dominated(r);
            json row = r.est.to_json();
            row["bound_name"] = r.bound_name;
            row["bound"] = r.bound;
            row["allowance"] = r.allowance;
            row["dominated"] = ok;
            res["rows"].push_back(std::move(row));

            json shown = r.est.params;
            shown.erase("N");
            shown.erase("seed");
            o.csv += r.est.name + "," + fmt(r.est.value) + "," + fmt(r.est.std_error) + ","
                     + std::to_string(cfg.N) + "," + std::to_string(cfg.seed) + ","
                     + params_field(shown) + "," + r.bound_name + "," + fmt(r.bound) + ","
                     + fmt(r.allowance) + "," + (ok ? "1" : "0") + "\n";
            o.plot += leg.label() + "," + r.est.name + ",estimate," + fmt(r.est.value) + "\n";
            o.plot += leg.label() + "," + r.est.name + ",bound," + fmt(r.bound) + "\n";
        }
        o.report["results"].push_back(std::move(res));
    }
    o.text = o.csv;
    return o;
}

//---------------------------------------------------------------------------//
// selftest
//---------------------------------------------------------------------------//

class SelfTest
{
  public:
    explicit SelfTest(std::ostream& out) : out_(out) {}

    void check(std::string const& name, double err, double tol)
    {
        bool const ok = err <= tol;
        failures_ += !ok;
        out_ << (ok ? "PASS " : "FAIL ") << std::left << std::setw(44) << name
             << " err=" << fmt(err) << " tol=" << fmt(tol) << "\n";
    }
    int failures() const { return failures_; }

  private:
    std::ostream& out_;
    int failures_ = 0;
};

Kernel draw_kernel(Grid const& g, int p, CounterRng const& rng, std::uint64_t index)
{
    std::size_t size = 1;
    for (int k = 0; k < p; ++k)
        size *= g.size();
    std::vector<double> c(size);
    rng.normals(index, c);
    return symmetrize(Kernel(g, p, std::move(c)));
}

double rel(double a, double b)
{
    return std::abs(a - b) / std::max(1.0, std::abs(b));
}

double kernel_rel_error(ChaosExpansion const& a, ChaosExpansion const& b)
{
    double const scale = std::max(1.0, std::sqrt(second_moment(b)));
    return l2_distance(a, b) / scale;
}

void identity_checks(SelfTest& st, std::string const& tag, Kernel const& f, int p)
{
    ChaosExpansion const F = ChaosExpansion::from_kernel(p, f);
    for (double t : {1.0, 0.1})
    {
        ChaosExpansion const lhs = condition_on_first_half(mehler_transport(F, t));
        st.check(tag + " E[F_t|B] = e^{-pt}F, t=" + fmt(t),
                 kernel_rel_error(lhs, std::exp(-p * t) * F), 1e-12);
    }
    if (p >= 2)
    {
        double const k = kappa(f, p);
        double const direct = expectation_of_product(multiply(F, F), gradient_norm_residual(f, p));
        st.check(tag + " kappa/3 = E[F^2 (|DF|^2/p - s2)]", rel(k / 3, direct), 1e-10);
        st.check(tag + " kappa >= 0", std::max(0.0, -k), 0.0);
        st.check(tag + " intermediate <= tv",
                 std::max(0.0, intermediate_bound(f, p) - tv_bound(f, p)), 1e-12);
    }
}

int cmd_selftest(ExperimentConfig const& cfg, std::ostream& out)
{
    // Load the user kernel first so a bad file fails before any output.
    std::optional<Leg> user;
    if (!cfg.kernel_path.empty() || !cfg.family.empty())
    {
        user = make_leg(cfg, cfg.n);
        if (!user->kernel)
            throw InputError("selftest takes a scalar kernel");
    }

    SelfTest st(out);
    CounterRng const rng(cfg.seed, 11);
    Grid const g = Grid::uniform(4);
    std::uint64_t draw = 0;

    for (int p = 1; p <= 3; ++p)
        for (int q = 1; q <= 2; ++q)
        {
            ChaosExpansion F = ChaosExpansion::from_kernel(p, draw_kernel(g, p, rng, draw++));
            F.set_constant(0.5);
            ChaosExpansion const G = ChaosExpansion::from_kernel(q, draw_kernel(g, q, rng, draw++));
            ChaosEvaluator const eF(F), eG(G), eFG(multiply(F, G));
            double worst = 0;
            std::vector<double> xi(g.size());
            for (std::uint64_t s = 0; s < 20; ++s)
            {
                rng.normals(1000 + s, xi);
                double const a = eF(xi) * eG(xi);
                worst = std::max(worst, std::abs(eFG(xi) - a) / std::max(1.0, std::abs(a)));
            }
            st.check("product formula p=" + std::to_string(p) + " q=" + std::to_string(q),
                     worst, 1e-9);
        }

    for (int p = 1; p <= 3; ++p)
        identity_checks(st, "random p=" + std::to_string(p), draw_kernel(g, p, rng, draw++), p);

    // Gibbs drift: diagonal-free order 2 with one cell per block is exact.
    Kernel const od = offdiag_rand_kernel(2, 6, cfg.seed);
    st.check("gibbs drift, diagonal-free, n = m",
             gibbs_drift(ChaosExpansion::from_kernel(2, od), 6).distance, 0.0);
    st.check("qvar kappa = 12/n", rel(kappa(qvar_kernel(8), 2), 12.0 / 8), 1e-12);

    if (user)
        identity_checks(st, "input", *user->kernel, user->p);

    out << (st.failures() == 0 ? "selftest: all checks passed\n"
                               : "selftest: " + std::to_string(st.failures()) + " failed\n");
    return st.failures() == 0 ? 0 : 1;
}

}  // namespace

//---------------------------------------------------------------------------//
// Entry point
//---------------------------------------------------------------------------//

int run_cli(int argc, char const* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Wiener chaos normal-approximation toolkit", "chaoslab"};
    app.require_subcommand(1);

    // Raw flag values; only flags actually given override the config file.
    ExperimentConfig flags;
    std::string config_path;
    unsigned workers = 0;
    std::vector<std::pair<CLI::Option*, std::function<void(ExperimentConfig&)>>> overrides;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config; flags override its fields");
        auto bind = [&](CLI::Option* opt, auto apply) { overrides.emplace_back(opt, apply); };
        bind(sub->add_option("--kernel", flags.kernel_path, "serialized kernel or vector (JSON)"),
             [&](ExperimentConfig& c) { c.kernel_path = flags.kernel_path; });
        bind(sub->add_option("--family", flags.family, "qvar | offdiag-rand | pair2d"),
             [&](ExperimentConfig& c) { c.family = flags.family; });
        bind(sub->add_option("--m", flags.m, "grid size"),
             [&](ExperimentConfig& c) { c.m = flags.m; });
        bind(sub->add_option("--p", flags.p, "chaos order"),
             [&](ExperimentConfig& c) { c.p = flags.p; });
        bind(sub->add_option("--n", flags.n, "qvar / pair2d block count"),
             [&](ExperimentConfig& c) { c.n = flags.n; });
        bind(sub->add_option("--n-grid", flags.n_grid, "n values (sweep or Gibbs blocks)")
                 ->delimiter(','),
             [&](ExperimentConfig& c) { c.n_grid = flags.n_grid; });
        bind(sub->add_option("--t-grid", flags.t_grid, "Mehler times")->delimiter(','),
             [&](ExperimentConfig& c) { c.t_grid = flags.t_grid; });
        bind(sub->add_option("--N", flags.N, "Monte Carlo sample count"),
             [&](ExperimentConfig& c) { c.N = flags.N; });
        bind(sub->add_option("--seed", flags.seed, "master seed"),
             [&](ExperimentConfig& c) { c.seed = flags.seed; });
        bind(sub->add_option("--bins", flags.bins, "TV histogram bins"),
             [&](ExperimentConfig& c) { c.bins = flags.bins; });
        bind(sub->add_option("--pair", flags.pair, "mehler | gibbs"),
             [&](ExperimentConfig& c) { c.pair = flags.pair; });
        bind(sub->add_option("--out", flags.out, "output prefix for .json/.csv"),
             [&](ExperimentConfig& c) { c.out = flags.out; });
        bind(sub->add_flag("--plot-data", flags.plot_data, "also emit a long-format table"),
             [&](ExperimentConfig& c) { c.plot_data = flags.plot_data; });
        sub->add_option("--workers", workers, "sampling threads (0 = all cores)");
    };
    for (auto [name, help] : {std::pair{"bound", "compute every applicable bound"},
                              std::pair{"diagnose", "exchangeable-pair rate tables"},
                              std::pair{"mc", "Monte Carlo distances against bounds"},
                              std::pair{"selftest", "exact identities at small sizes"}})
        add_common(app.add_subcommand(name, help));

    std::ostringstream cli_out, cli_err;
    try
    {
        app.parse(argc, const_cast<char**>(argv));
    }
    catch (CLI::ParseError const& e)
    {
        int code = app.exit(e, cli_out, cli_err);
        out << cli_out.str();
        err << cli_err.str();
        return code == 0 ? 0 : 2;
    }

    try
    {
        ExperimentConfig cfg;
        if (!config_path.empty())
            cfg = ExperimentConfig::from_json(read_json_file(config_path));
        std::string const command = app.get_subcommands().front()->get_name();
        if (!cfg.command.empty() && cfg.command != command)
            throw InputError("config is for '" + cfg.command + "', not '" + command + "'");
        cfg.command = command;
        for (auto const& [opt, apply] : overrides)
            if (opt->count() > 0)
                apply(cfg);
        cfg.resolve();

        if (command == "selftest")
            return cmd_selftest(cfg, out);
        Output o = command == "bound"      ? cmd_bound(cfg)
                   : command == "diagnose" ? cmd_diagnose(cfg)
                                           : cmd_mc(cfg, workers);
        emit(cfg, o, out);
        return 0;
    }
    catch (Error const& e)
    {
        err << "error: " << e.what() << "\n";
        return e.exit_code();
    }
    catch (json::exception const& e)
    {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace chaoslab
