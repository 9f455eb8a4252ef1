#include "chaoslab/serialize.hpp"

#include <fstream>

namespace chaoslab {

using nlohmann::json;

json to_json(Grid const& g)
{
    // The doubled flag is carried separately; measures list every cell.
    return {{"m", g.size()},
            {"measures", std::vector<double>(g.measures().begin(), g.measures().end())},
            {"doubled", g.is_doubled()}};
}

json to_json(Kernel const& f)
{
    return {{"grid", to_json(f.grid())},
            {"order", f.order()},
            {"coeffs", std::vector<double>(f.coeffs().begin(), f.coeffs().end())},
            {"symmetric", f.symmetric()}};
}

json to_json(ChaosExpansion const& F)
{
    json terms = json::array();
    for (auto const& [q, f] : F.terms())
        terms.push_back({{"order", q}, {"kernel", to_json(f)}});
    return {{"constant", F.constant()}, {"terms", terms}};
}

json to_json(ChaosVector const& v)
{
    json comps = json::array();
    for (std::size_t k = 0; k < v.size(); ++k)
        comps.push_back({{"order", v.order(k)}, {"kernel", to_json(v.kernel(k))}});
    return {{"components", comps}};
}

namespace {

template<class T>
T field(json const& j, char const* key, char const* what)
{
    if (!j.is_object() || !j.contains(key))
        throw InputError(std::string(what) + ": missing field '" + key + "'");
    try
    {
        return j.at(key).get<T>();
    }
    catch (json::exception const& e)
    {
        throw InputError(std::string(what) + ": bad field '" + key + "': " + e.what());
    }
}

}  // namespace

Grid grid_from_json(json const& j)
{
    auto const m = field<std::size_t>(j, "m", "grid");
    auto measures = j.contains("measures") ? field<std::vector<double>>(j, "measures", "grid")
                                           : std::vector<double>{};
    bool const doubled = j.contains("doubled") && field<bool>(j, "doubled", "grid");
    if (measures.empty())
        return doubled ? Grid::doubled(Grid::uniform(m / 2)) : Grid::uniform(m);
    if (measures.size() != m)
        throw InputError("grid: measures length does not match m");
    if (!doubled)
        return Grid(std::move(measures));
    if (m % 2 != 0)
        throw InputError("grid: a doubled grid needs an even cell count");
    Grid base(std::vector<double>(measures.begin(), measures.begin() + m / 2));
    Grid d = Grid::doubled(base);
    if (!std::equal(measures.begin(), measures.end(), d.measures().begin()))
        throw InputError("grid: doubled halves must carry equal measures");
    return d;
}

Kernel kernel_from_json(json const& j)
{
    if (!j.contains("grid"))
        throw InputError("kernel: missing field 'grid'");
    Grid grid = grid_from_json(j.at("grid"));
    auto const order = field<int>(j, "order", "kernel");
    auto coeffs = field<std::vector<double>>(j, "coeffs", "kernel");
    bool const sym = j.contains("symmetric") && field<bool>(j, "symmetric", "kernel");
    try
    {
        return Kernel(std::move(grid), order, std::move(coeffs), sym);
    }
    catch (InputError const& e)
    {
        throw InputError(std::string("kernel: ") + e.what());
    }
}

ChaosExpansion expansion_from_json(json const& j)
{
    auto const terms = field<json>(j, "terms", "chaos expansion");
    if (!terms.is_array() || terms.empty())
        throw InputError("chaos expansion: 'terms' must be a non-empty array");
    Kernel first = kernel_from_json(field<json>(terms.front(), "kernel", "chaos expansion"));
    ChaosExpansion F(first.grid(), j.contains("constant") ? field<double>(j, "constant", "chaos expansion") : 0.0);
    for (auto const& t : terms)
    {
        Kernel f = kernel_from_json(field<json>(t, "kernel", "chaos expansion"));
        if (field<int>(t, "order", "chaos expansion") != f.order())
            throw InputError("chaos expansion: term order does not match its kernel");
        F.add_kernel(f);
    }
    return F;
}

ChaosVector vector_from_json(json const& j)
{
    auto const comps = field<json>(j, "components", "chaos vector");
    if (!comps.is_array() || comps.empty())
        throw InputError("chaos vector: 'components' must be a non-empty array");
    std::vector<std::pair<int, Kernel>> parts;
    for (auto const& c : comps)
    {
        Kernel f = kernel_from_json(field<json>(c, "kernel", "chaos vector"));
        parts.emplace_back(field<int>(c, "order", "chaos vector"), std::move(f));
    }
    return ChaosVector(std::move(parts));
}

json read_json_file(std::string const& path)
{
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open '" + path + "'");
    try
    {
        return json::parse(in);
    }
    catch (json::exception const& e)
    {
        throw InputError("'" + path + "' is not valid JSON: " + e.what());
    }
}

}  // namespace chaoslab
