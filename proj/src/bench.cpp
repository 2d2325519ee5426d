#include "tpmf/bench.hpp"
#include "tpmf/errors.hpp"
#include "tpmf/seed.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <regex>
#include <sstream>

namespace tpmf {

namespace {

using nlohmann::json;

constexpr std::size_t kMaxSimulationAttempts = 100;
constexpr double kMassTolerance = 1e-9;

class Fnv1a {
public:
    void add(double v) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (const unsigned char b : bytes) {
            h_ ^= b;
            h_ *= 0x100000001B3ULL;
        }
    }
    std::uint64_t value() const noexcept { return h_; }

private:
    std::uint64_t h_ = 0xCBF29CE484222325ULL;
};

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string csv_number(double v) {
    if (!std::isfinite(v)) return "nan";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

TerrainMap build_terrain(const TerrainSpec& spec) {
    if (spec.dem_path) return load_esri_ascii(*spec.dem_path);
    return synth_terrain(spec.seed, spec.extent, spec.cell, spec.roughness);
}

std::size_t default_particles(const ScenarioConfig& cfg) {
    for (const FilterSpec& f : cfg.filters) {
        const auto& c = f.kind == FilterKind::lgbf_cpd ? f.cpd.counts : f.full.counts;
        if (f.kind == FilterKind::lgbf_cpd || f.kind == FilterKind::lgbf) return c[0] * c[1] * c[2] * c[3];
    }
    return std::size_t{21} * 21 * 21 * 21;
}

Trajectory simulate_truth(const ScenarioConfig& cfg, const CvModel& model, const MeasModel& meas,
                          const TerrainMap& map, RunRecord& rec) {
    const Eigen::Matrix4d l = Eigen::LLT<Eigen::Matrix4d>(Eigen::Matrix4d(cfg.initial.cov)).matrixL();
    for (std::size_t attempt = 0; attempt < kMaxSimulationAttempts; ++attempt) {
        std::mt19937_64 rng(derive_seed(rec.seed, {1, attempt}));
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::Vector4d e;
        for (Index j = 0; j < 4; ++j) e(j) = gauss(rng);
        const Eigen::Vector4d x0 = cfg.initial.mean + l * e;
        try {
            return simulate(model, meas, map, x0, cfg.steps, derive_seed(rec.seed, {2, attempt}));
        } catch (const MapExit&) {
            ++rec.retries;
        }
    }
    throw Error("run " + std::to_string(rec.index) + ": every simulated trajectory left the terrain map");
}

template <class Step>
void drive(FilterRun& out, const Trajectory& truth, Step&& step) {
    Fnv1a hash;
    for (std::size_t k = 0; k < truth.steps(); ++k) {
        const Eigen::Vector3d z = truth.measurement(k);
        const double psi = truth.psi(static_cast<Index>(k));
        for (Index i = 0; i < 3; ++i) hash.add(z(i));
        hash.add(psi);
        try {
            const auto t0 = std::chrono::steady_clock::now();
            const Eigen::Vector4d est = step(k, z, psi);
            const auto t1 = std::chrono::steady_clock::now();
            out.estimates.push_back(est);
            out.step_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
        } catch (const DivergenceError& e) {
            out.diverged = true;
            out.divergence_step = k;
            out.divergence_reason = e.what();
            break;
        }
    }
    out.input_hash = hash.value();
}

void note_mass(FilterRun& out, double err) {
    out.max_mass_error = std::max(out.max_mass_error, err);
    if (!(err <= kMassTolerance)) ++out.mass_violations;
}

FilterRun run_filter(const FilterSpec& spec, const ScenarioConfig& cfg, const Trajectory& truth,
                     const TerrainMap& map, const CvModel& model, const MeasModel& meas, std::uint64_t run_seed) {
    FilterRun out;
    switch (spec.kind) {
        case FilterKind::lgbf_cpd: {
            CpdFilterConfig fc = spec.cpd;
            fc.seed = derive_seed(spec.cpd.seed, {run_seed});
            FilterStateCpd state = init_cpd_state(cfg.initial, fc);
            note_mass(out, std::abs(state.pmd.mass() - 1.0));
            drive(out, truth, [&](std::size_t, const Eigen::Vector3d& z, double psi) {
                CpdStepResult r = lgbf_cpd_step(state, z, psi, map, model, meas, fc);
                note_mass(out, r.diagnostics.mass_error);
                state = std::move(r.prior);
                return r.estimate;
            });
            break;
        }
        case FilterKind::lgbf: {
            FilterStateDense state = init_full_state(cfg.initial, spec.full);
            note_mass(out, std::abs(state.pmd.mass() - 1.0));
            drive(out, truth, [&](std::size_t, const Eigen::Vector3d& z, double psi) {
                DenseStepResult r = lgbf_full_step(state, z, psi, map, model, meas, spec.full);
                note_mass(out, r.mass_error);
                state = std::move(r.prior);
                return r.estimate;
            });
            break;
        }
        case FilterKind::pf_bootstrap: {
            const std::size_t n = spec.particles > 0 ? spec.particles : default_particles(cfg);
            ParticleSet particles = pf_init(cfg.initial, n, derive_seed(run_seed, {3}));
            drive(out, truth, [&](std::size_t k, const Eigen::Vector3d& z, double psi) {
                PfStepResult r = pf_bootstrap_step(particles, z, psi, map, model, meas, derive_seed(run_seed, {4, k}));
                particles = std::move(r.particles);
                return r.estimate;
            });
            break;
        }
        case FilterKind::ukf: {
            UkfState state{cfg.initial, 0};
            drive(out, truth, [&](std::size_t, const Eigen::Vector3d& z, double psi) {
                UkfStepResult r = ukf_step(state, z, psi, map, model, meas, spec.ukf);
                state = std::move(r.prior);
                return r.estimate;
            });
            break;
        }
    }
    return out;
}

}  // namespace

std::uint64_t fnv1a_measurements(const Trajectory& t) {
    Fnv1a hash;
    for (std::size_t k = 0; k < t.steps(); ++k) {
        const Eigen::Vector3d z = t.measurement(k);
        for (Index i = 0; i < 3; ++i) hash.add(z(i));
        hash.add(t.psi(static_cast<Index>(k)));
    }
    return hash.value();
}

bool RunReport::universal_divergence() const {
    if (summary.empty() || runs.empty()) return false;
    for (const FilterSummary& s : summary)
        if (s.divergences < runs.size()) return false;
    return true;
}

RunReport run_benchmark(const ScenarioConfig& cfg_in) {
    ScenarioConfig cfg = cfg_in;
    cfg.validate();
    for (FilterSpec& f : cfg.filters)
        if (f.kind == FilterKind::pf_bootstrap && f.particles == 0) f.particles = default_particles(cfg);
    const TerrainMap map = build_terrain(cfg.terrain);
    const CvModel model = cfg.model();
    const MeasModel meas = cfg.meas();

    RunReport report;
    report.config = cfg;
    for (std::size_t i = 0; i < cfg.mc_runs; ++i) {
        RunRecord rec;
        rec.index = i;
        rec.seed = derive_seed(cfg.seed, {i});
        rec.truth = simulate_truth(cfg, model, meas, map, rec);
        for (const FilterSpec& f : cfg.filters) {
            rec.filters.push_back(run_filter(f, cfg, rec.truth, map, model, meas, rec.seed));
        }
        report.runs.push_back(std::move(rec));
    }
    aggregate(report);
    return report;
}

void aggregate(RunReport& report) {
    report.summary.clear();
    for (std::size_t f = 0; f < report.config.filters.size(); ++f) {
        FilterSummary s;
        s.name = report.config.filters[f].name;
        s.kind = report.config.filters[f].kind;
        double pos = 0.0, vel = 0.0, time = 0.0;
        std::size_t count = 0, timed = 0;
        for (const RunRecord& run : report.runs) {
            const FilterRun& fr = run.filters.at(f);
            s.mass_violations += fr.mass_violations;
            for (const double t : fr.step_seconds) time += t;
            timed += fr.step_seconds.size();
            if (fr.diverged) {
                ++s.divergences;
                continue;
            }
            for (std::size_t k = 0; k < fr.estimates.size(); ++k) {
                const Eigen::Vector4d e = fr.estimates[k] - run.truth.state(k);
                pos += e(0) * e(0) + e(1) * e(1);
                vel += e(2) * e(2) + e(3) * e(3);
                ++count;
            }
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        s.rmse_pos = count > 0 ? std::sqrt(pos / static_cast<double>(count)) : nan;
        s.rmse_vel = count > 0 ? std::sqrt(vel / static_cast<double>(count)) : nan;
        s.mean_step_s = timed > 0 ? time / static_cast<double>(timed) : nan;
        report.summary.push_back(s);
    }
}

nlohmann::json report_to_json(const RunReport& report) {
    json j;
    j["schema"] = "tpmf-report/1";
    j["config"] = scenario_to_json(report.config);
    j["filters"] = json::array();
    for (const FilterSummary& s : report.summary) {
        j["filters"].push_back({{"name", s.name},
                                {"type", filter_kind_name(s.kind)},
                                {"rmse_pos_m", number_or_null(s.rmse_pos)},
                                {"rmse_vel_mps", number_or_null(s.rmse_vel)},
                                {"divergences", s.divergences},
                                {"mass_violations", s.mass_violations}});
    }
    j["runs"] = json::array();
    for (const RunRecord& run : report.runs) {
        json r;
        r["index"] = run.index;
        r["seed"] = run.seed;
        r["retries"] = run.retries;
        r["measurement_hash"] = hex64(fnv1a_measurements(run.truth));
        r["filters"] = json::array();
        for (std::size_t f = 0; f < run.filters.size(); ++f) {
            const FilterRun& fr = run.filters[f];
            json e = json::array();
            for (const Eigen::Vector4d& x : fr.estimates) e.push_back({x(0), x(1), x(2), x(3)});
            json fj{{"name", report.config.filters.at(f).name},
                    {"input_hash", hex64(fr.input_hash)},
                    {"diverged", fr.diverged},
                    {"max_mass_error", fr.max_mass_error},
                    {"mass_violations", fr.mass_violations},
                    {"estimates", std::move(e)}};
            if (fr.diverged) {
                fj["divergence_step"] = fr.divergence_step;
                fj["divergence_reason"] = fr.divergence_reason;
            }
            r["filters"].push_back(std::move(fj));
        }
        j["runs"].push_back(std::move(r));
    }
    return j;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& p) {
    out.flush();
    if (!out) throw IoError("failed writing " + p.string());
}

}  // namespace

void emit_artifacts(const RunReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir / "traces", ec);
    if (ec) throw IoError("cannot create " + (dir / "traces").string() + ": " + ec.message());

    {
        const auto p = dir / "report.json";
        auto out = open_for_write(p);
        out << report_to_json(report).dump(2) << '\n';
        finish(out, p);
    }
    {
        const auto p = dir / "summary.csv";
        auto out = open_for_write(p);
        out << "name,rmse_pos_m,rmse_vel_mps,mean_step_s,divergences\n";
        for (const FilterSummary& s : report.summary) {
            out << s.name << ',' << csv_number(s.rmse_pos) << ',' << csv_number(s.rmse_vel) << ','
                << csv_number(s.mean_step_s) << ',' << s.divergences << '\n';
        }
        finish(out, p);
    }
    {
        const auto p = dir / "timing.json";
        json t;
        t["filters"] = json::array();
        for (std::size_t f = 0; f < report.summary.size(); ++f) {
            json runs = json::array();
            for (const RunRecord& run : report.runs) {
                double total = 0.0;
                for (const double s : run.filters.at(f).step_seconds) total += s;
                runs.push_back(total);
            }
            t["filters"].push_back({{"name", report.summary[f].name},
                                    {"mean_step_s", number_or_null(report.summary[f].mean_step_s)},
                                    {"run_total_s", std::move(runs)}});
        }
        auto out = open_for_write(p);
        out << t.dump(2) << '\n';
        finish(out, p);
    }
    for (const RunRecord& run : report.runs) {
        for (std::size_t f = 0; f < run.filters.size(); ++f) {
            const FilterRun& fr = run.filters[f];
            const auto p = dir / "traces" /
                           ("run_" + std::to_string(run.index) + "_" + report.config.filters.at(f).name + ".csv");
            auto out = open_for_write(p);
            out << "k,true_px,true_py,true_vx,true_vy,est_px,est_py,est_vx,est_vy,step_s\n";
            for (std::size_t k = 0; k < fr.estimates.size(); ++k) {
                const Eigen::Vector4d x = run.truth.state(k);
                out << k;
                for (Index i = 0; i < 4; ++i) out << ',' << csv_number(x(i));
                for (Index i = 0; i < 4; ++i) out << ',' << csv_number(fr.estimates[k](i));
                out << ',' << csv_number(fr.step_seconds[k]) << '\n';
            }
            finish(out, p);
        }
    }
}

std::string render_table_row(const std::string& label, double rmse_pos, double rmse_vel, double step_s) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s %.2f m, %.2f m/s, %.2f s", label.c_str(), rmse_pos, rmse_vel, step_s);
    return buf;
}

TableRow parse_table_row(const std::string& row) {
    static const std::regex re(
        R"(^\s*(.*\S)\s+([-+0-9.eE]+|nan)(?:\s*m)?\s*,\s*([-+0-9.eE]+|nan)(?:\s*m/s)?\s*,\s*([-+0-9.eE]+|nan)(?:\s*s)?\s*$)");
    std::smatch m;
    if (!std::regex_match(row, m, re)) throw ParseError("malformed summary row: '" + row + "'");
    TableRow out;
    out.label = m[1].str();
    try {
        out.rmse_pos = std::stod(m[2].str());
        out.rmse_vel = std::stod(m[3].str());
        out.step_s = std::stod(m[4].str());
    } catch (const std::exception&) {
        throw ParseError("malformed number in summary row: '" + row + "'");
    }
    return out;
}

}  // namespace tpmf
