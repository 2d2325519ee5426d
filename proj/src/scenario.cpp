#include "tpmf/bench.hpp"
#include "tpmf/errors.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace tpmf {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ParseError("config field '" + path + "': " + what);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            fail(path.empty() ? key : path + "." + key, "unknown field");
        }
    }
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double get_number(const json& obj, const std::string& path, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) fail(join(path, key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(join(path, key), "expected a finite number");
    return d;
}

std::uint64_t get_uint(const json& obj, const std::string& path, const char* key, std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        fail(join(path, key), "expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
}

template <std::size_t N>
std::array<double, N> get_numbers(const json& obj, const std::string& path, const char* key,
                                  const std::array<double, N>& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_array() || v.size() != N) fail(join(path, key), "expected an array of " + std::to_string(N) + " numbers");
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        if (!v[i].is_number()) fail(join(path, key) + "[" + std::to_string(i) + "]", "expected a number");
        out[i] = v[i].get<double>();
    }
    return out;
}

std::array<std::size_t, 4> get_counts(const json& obj, const std::string& path,
                                      const std::array<std::size_t, 4>& fallback) {
    if (!obj.contains("counts")) return fallback;
    const json& v = obj.at("counts");
    const std::string p = join(path, "counts");
    if (v.is_number_unsigned()) {
        const auto n = v.get<std::size_t>();
        return {n, n, n, n};
    }
    if (!v.is_array() || v.size() != 4) fail(p, "expected an odd integer or an array of four");
    std::array<std::size_t, 4> out{};
    for (std::size_t i = 0; i < 4; ++i) {
        if (!v[i].is_number_unsigned()) fail(p + "[" + std::to_string(i) + "]", "expected a positive integer");
        out[i] = v[i].get<std::size_t>();
    }
    return out;
}

FilterSpec parse_filter(const json& v, const std::string& path) {
    FilterSpec f;
    if (v.is_string()) {
        f.name = v.get<std::string>();
        try {
            f.kind = parse_filter_kind(f.name);
        } catch (const InvalidArgument& e) {
            fail(path, e.what());
        }
        return f;
    }
    if (!v.is_object()) fail(path, "expected a filter name or object");
    if (!v.contains("type") || !v.at("type").is_string()) fail(join(path, "type"), "expected a filter type string");
    const std::string type = v.at("type").get<std::string>();
    try {
        f.kind = parse_filter_kind(type);
    } catch (const InvalidArgument& e) {
        fail(join(path, "type"), e.what());
    }
    f.name = type;
    if (v.contains("name")) {
        if (!v.at("name").is_string()) fail(join(path, "name"), "expected a string");
        f.name = v.at("name").get<std::string>();
    }
    if (f.name.empty() || f.name.find_first_of(",\"\n/\\ ") != std::string::npos) {
        fail(join(path, "name"), "names must be nonempty without commas, quotes, slashes or spaces");
    }
    switch (f.kind) {
        case FilterKind::lgbf_cpd:
            check_keys(v, path,
                       {"type", "name", "counts", "sigma_mult", "max_rank", "als_iters", "als_tol", "seed",
                        "svd_energy"});
            f.cpd.counts = get_counts(v, path, f.cpd.counts);
            f.cpd.sigma_mult = get_number(v, path, "sigma_mult", f.cpd.sigma_mult);
            f.cpd.max_rank = static_cast<Index>(get_uint(v, path, "max_rank", static_cast<std::uint64_t>(f.cpd.max_rank)));
            f.cpd.als_iters = static_cast<int>(get_uint(v, path, "als_iters", static_cast<std::uint64_t>(f.cpd.als_iters)));
            f.cpd.als_tol = get_number(v, path, "als_tol", f.cpd.als_tol);
            f.cpd.seed = get_uint(v, path, "seed", f.cpd.seed);
            f.cpd.svd_energy = get_number(v, path, "svd_energy", f.cpd.svd_energy);
            break;
        case FilterKind::lgbf:
            check_keys(v, path, {"type", "name", "counts", "sigma_mult", "cap"});
            f.full.counts = get_counts(v, path, f.full.counts);
            f.full.sigma_mult = get_number(v, path, "sigma_mult", f.full.sigma_mult);
            f.full.cap = static_cast<std::size_t>(get_uint(v, path, "cap", f.full.cap));
            break;
        case FilterKind::pf_bootstrap:
            check_keys(v, path, {"type", "name", "particles"});
            f.particles = static_cast<std::size_t>(get_uint(v, path, "particles", 0));
            break;
        case FilterKind::ukf:
            check_keys(v, path, {"type", "name", "alpha", "beta", "kappa"});
            f.ukf.alpha = get_number(v, path, "alpha", f.ukf.alpha);
            f.ukf.beta = get_number(v, path, "beta", f.ukf.beta);
            f.ukf.kappa = get_number(v, path, "kappa", f.ukf.kappa);
            break;
    }
    return f;
}

json filter_to_json(const FilterSpec& f) {
    json j;
    j["type"] = filter_kind_name(f.kind);
    j["name"] = f.name;
    switch (f.kind) {
        case FilterKind::lgbf_cpd:
            j["counts"] = f.cpd.counts;
            j["sigma_mult"] = f.cpd.sigma_mult;
            j["max_rank"] = f.cpd.max_rank;
            j["als_iters"] = f.cpd.als_iters;
            j["als_tol"] = f.cpd.als_tol;
            j["seed"] = f.cpd.seed;
            j["svd_energy"] = f.cpd.svd_energy;
            break;
        case FilterKind::lgbf:
            j["counts"] = f.full.counts;
            j["sigma_mult"] = f.full.sigma_mult;
            j["cap"] = f.full.cap;
            break;
        case FilterKind::pf_bootstrap:
            j["particles"] = f.particles;
            break;
        case FilterKind::ukf:
            j["alpha"] = f.ukf.alpha;
            j["beta"] = f.ukf.beta;
            j["kappa"] = f.ukf.kappa;
            break;
    }
    return j;
}

std::size_t line_of_offset(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace

FilterKind parse_filter_kind(const std::string& name) {
    if (name == "lgbf_cpd") return FilterKind::lgbf_cpd;
    if (name == "lgbf") return FilterKind::lgbf;
    if (name == "pf_bootstrap") return FilterKind::pf_bootstrap;
    if (name == "ukf") return FilterKind::ukf;
    throw InvalidArgument("unknown filter '" + name + "' (expected lgbf_cpd, lgbf, pf_bootstrap or ukf)");
}

std::string filter_kind_name(FilterKind kind) {
    switch (kind) {
        case FilterKind::lgbf_cpd: return "lgbf_cpd";
        case FilterKind::lgbf: return "lgbf";
        case FilterKind::pf_bootstrap: return "pf_bootstrap";
        case FilterKind::ukf: return "ukf";
    }
    return "unknown";
}

std::string filter_label(FilterKind kind) {
    switch (kind) {
        case FilterKind::lgbf_cpd: return "LGbF CPD";
        case FilterKind::lgbf: return "LGbF";
        case FilterKind::pf_bootstrap: return "PFb";
        case FilterKind::ukf: return "UKF";
    }
    return "unknown";
}

MeasModel ScenarioConfig::meas() const {
    MeasModel m;
    m.r_diag = Eigen::Vector3d(sigma_alt * sigma_alt, vel_std * vel_std, vel_std * vel_std);
    return m;
}

void ScenarioConfig::validate() const {
    if (steps == 0) throw InvalidArgument("steps must be at least 1");
    if (mc_runs == 0) throw InvalidArgument("mc_runs must be at least 1");
    if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
    if (!(sigma_alt > 0.0) || !(vel_std > 0.0)) throw InvalidArgument("measurement noise must be positive");
    model().validate();
    initial.validate();
    if (initial.mean.size() != 4) throw InvalidArgument("initial moments must be four-dimensional");
    if (terrain.dem_path) {
        if (!std::filesystem::exists(*terrain.dem_path)) {
            throw InvalidArgument("DEM file does not exist: " + terrain.dem_path->string());
        }
    } else if (!(terrain.extent > 0.0) || !(terrain.cell > 0.0) || terrain.cell >= terrain.extent ||
               !(terrain.roughness >= 0.0)) {
        throw InvalidArgument("synthetic terrain needs 0 < cell < extent and nonnegative roughness");
    }
    std::set<std::string> names;
    for (const FilterSpec& f : filters) {
        if (!names.insert(f.name).second) throw InvalidArgument("duplicate filter name '" + f.name + "'");
        if (f.kind == FilterKind::lgbf_cpd) f.cpd.validate();
        if (f.kind == FilterKind::lgbf) f.full.validate();
        if (f.kind == FilterKind::ukf && !(f.ukf.alpha > 0.0)) throw InvalidArgument("UKF alpha must be positive");
    }
}

ScenarioConfig default_scenario() {
    ScenarioConfig cfg;
    cfg.initial.mean = Eigen::Vector4d(4000.0, 4000.0, 10.0, 0.0);
    cfg.initial.cov = Eigen::Vector4d(200.0 * 200.0, 200.0 * 200.0, 1.0, 1.0).asDiagonal();
    for (const FilterKind k : {FilterKind::lgbf_cpd, FilterKind::lgbf, FilterKind::pf_bootstrap, FilterKind::ukf}) {
        FilterSpec f;
        f.kind = k;
        f.name = filter_kind_name(k);
        cfg.filters.push_back(f);
    }
    return cfg;
}

ScenarioConfig parse_scenario(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("config syntax error at line " + std::to_string(line_of_offset(text, e.byte)) + ": " +
                         e.what());
    }
    ScenarioConfig cfg = default_scenario();
    check_keys(doc, "", {"terrain", "steps", "dt", "initial", "noise", "filters", "mc_runs", "seed", "output_dir"});
    cfg.steps = static_cast<std::size_t>(get_uint(doc, "", "steps", cfg.steps));
    cfg.dt = get_number(doc, "", "dt", cfg.dt);
    cfg.mc_runs = static_cast<std::size_t>(get_uint(doc, "", "mc_runs", cfg.mc_runs));
    cfg.seed = get_uint(doc, "", "seed", cfg.seed);
    if (doc.contains("output_dir")) {
        if (!doc.at("output_dir").is_string()) fail("output_dir", "expected a string");
        cfg.output_dir = doc.at("output_dir").get<std::string>();
    }
    if (doc.contains("terrain")) {
        const json& t = doc.at("terrain");
        check_keys(t, "terrain", {"dem_path", "seed", "extent", "cell", "roughness"});
        if (t.contains("dem_path")) {
            if (!t.at("dem_path").is_string()) fail("terrain.dem_path", "expected a string");
            cfg.terrain.dem_path = t.at("dem_path").get<std::string>();
        }
        cfg.terrain.seed = get_uint(t, "terrain", "seed", cfg.terrain.seed);
        cfg.terrain.extent = get_number(t, "terrain", "extent", cfg.terrain.extent);
        cfg.terrain.cell = get_number(t, "terrain", "cell", cfg.terrain.cell);
        cfg.terrain.roughness = get_number(t, "terrain", "roughness", cfg.terrain.roughness);
    }
    if (doc.contains("initial")) {
        const json& i = doc.at("initial");
        check_keys(i, "initial", {"mean", "std"});
        const Eigen::Vector4d sd0 = cfg.initial.cov.diagonal().cwiseSqrt();
        const auto mean = get_numbers<4>(i, "initial", "mean",
                                         {cfg.initial.mean(0), cfg.initial.mean(1), cfg.initial.mean(2),
                                          cfg.initial.mean(3)});
        const auto sd = get_numbers<4>(i, "initial", "std", {sd0(0), sd0(1), sd0(2), sd0(3)});
        for (std::size_t k = 0; k < 4; ++k) {
            if (!(sd[k] > 0.0)) fail("initial.std[" + std::to_string(k) + "]", "must be positive");
        }
        cfg.initial.mean = Eigen::Vector4d(mean[0], mean[1], mean[2], mean[3]);
        cfg.initial.cov = Eigen::Vector4d(sd[0] * sd[0], sd[1] * sd[1], sd[2] * sd[2], sd[3] * sd[3]).asDiagonal();
    }
    if (doc.contains("noise")) {
        const json& n = doc.at("noise");
        check_keys(n, "noise", {"q_diag", "sigma_alt", "vel_std"});
        const auto q = get_numbers<4>(n, "noise", "q_diag", {cfg.q_diag(0), cfg.q_diag(1), cfg.q_diag(2), cfg.q_diag(3)});
        for (std::size_t k = 0; k < 4; ++k) {
            if (!(q[k] > 0.0)) fail("noise.q_diag[" + std::to_string(k) + "]", "must be positive");
        }
        cfg.q_diag = Eigen::Vector4d(q[0], q[1], q[2], q[3]);
        cfg.sigma_alt = get_number(n, "noise", "sigma_alt", cfg.sigma_alt);
        cfg.vel_std = get_number(n, "noise", "vel_std", cfg.vel_std);
    }
    if (doc.contains("filters")) {
        const json& f = doc.at("filters");
        if (!f.is_array()) fail("filters", "expected an array");
        cfg.filters.clear();
        for (std::size_t i = 0; i < f.size(); ++i) cfg.filters.push_back(parse_filter(f[i], "filters[" + std::to_string(i) + "]"));
    }
    try {
        cfg.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(std::string("invalid config: ") + e.what());
    }
    return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    // DEM paths are relative to the config file.
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error&) {
        return parse_scenario(text);
    }
    if (doc.is_object() && doc.contains("terrain") && doc["terrain"].is_object() &&
        doc["terrain"].contains("dem_path") && doc["terrain"]["dem_path"].is_string()) {
        const std::filesystem::path dem = doc["terrain"]["dem_path"].get<std::string>();
        if (dem.is_relative()) doc["terrain"]["dem_path"] = (path.parent_path() / dem).string();
        return parse_scenario(doc.dump());
    }
    return parse_scenario(text);
}

nlohmann::json scenario_to_json(const ScenarioConfig& cfg) {
    json j;
    j["steps"] = cfg.steps;
    j["dt"] = cfg.dt;
    j["mc_runs"] = cfg.mc_runs;
    j["seed"] = cfg.seed;
    json t;
    if (cfg.terrain.dem_path) {
        t["dem_path"] = cfg.terrain.dem_path->string();
    } else {
        t["seed"] = cfg.terrain.seed;
        t["extent"] = cfg.terrain.extent;
        t["cell"] = cfg.terrain.cell;
        t["roughness"] = cfg.terrain.roughness;
    }
    j["terrain"] = t;
    j["initial"]["mean"] = std::vector<double>(cfg.initial.mean.data(), cfg.initial.mean.data() + 4);
    const Eigen::Vector4d sd = cfg.initial.cov.diagonal().cwiseSqrt();
    j["initial"]["std"] = std::vector<double>(sd.data(), sd.data() + 4);
    j["noise"]["q_diag"] = std::vector<double>(cfg.q_diag.data(), cfg.q_diag.data() + 4);
    j["noise"]["sigma_alt"] = cfg.sigma_alt;
    j["noise"]["vel_std"] = cfg.vel_std;
    j["filters"] = json::array();
    for (const FilterSpec& f : cfg.filters) j["filters"].push_back(filter_to_json(f));
    return j;
}

void apply_paper_scale(ScenarioConfig& cfg) {
    for (FilterSpec& f : cfg.filters) {
        if (f.kind == FilterKind::lgbf_cpd) f.cpd.counts = {101, 101, 101, 101};
        if (f.kind == FilterKind::lgbf) f.full.counts = {51, 51, 41, 41};
    }
}

void select_filters(ScenarioConfig& cfg, const std::vector<std::string>& names) {
    std::vector<FilterSpec> kept;
    for (const std::string& n : names) {
        const auto it = std::find_if(cfg.filters.begin(), cfg.filters.end(), [&](const FilterSpec& f) { return f.name == n; });
        if (it != cfg.filters.end()) {
            kept.push_back(*it);
            continue;
        }
        FilterSpec f;
        f.kind = parse_filter_kind(n);
        f.name = n;
        kept.push_back(f);
    }
    cfg.filters = std::move(kept);
}

}  // namespace tpmf
