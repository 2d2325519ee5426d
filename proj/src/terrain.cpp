#include "tpmf/errors.hpp"
#include "tpmf/tan_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

namespace tpmf {

TerrainMap::TerrainMap(double origin_x, double origin_y, double cell, Eigen::MatrixXd heights)
    : origin_x_(origin_x), origin_y_(origin_y), cell_(cell), heights_(std::move(heights)) {
    if (!(cell_ > 0.0)) throw InvalidArgument("terrain cell size must be positive");
    if (heights_.rows() < 2 || heights_.cols() < 2) throw InvalidArgument("terrain raster needs at least 2x2 nodes");
    if (!std::isfinite(origin_x_) || !std::isfinite(origin_y_)) throw InvalidArgument("terrain origin is not finite");
    for (Eigen::Index j = 0; j < heights_.cols(); ++j)
        for (Eigen::Index i = 0; i < heights_.rows(); ++i)
            if (std::isinf(heights_(i, j))) throw InvalidArgument("terrain heights must be finite or NODATA");
}

std::optional<double> TerrainMap::try_sample(double x, double y) const {
    const double fx = (x - origin_x_) / cell_;
    const double fy = (y - origin_y_) / cell_;
    const auto nx = heights_.rows();
    const auto ny = heights_.cols();
    if (!(fx >= 0.0 && fx <= static_cast<double>(nx - 1))) return std::nullopt;
    if (!(fy >= 0.0 && fy <= static_cast<double>(ny - 1))) return std::nullopt;
    const auto i = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(fx)), nx - 2);
    const auto j = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(fy)), ny - 2);
    const double tx = fx - static_cast<double>(i);
    const double ty = fy - static_cast<double>(j);
    const double w[4] = {(1.0 - tx) * (1.0 - ty), tx * (1.0 - ty), (1.0 - tx) * ty, tx * ty};
    const double h[4] = {heights_(i, j), heights_(i + 1, j), heights_(i, j + 1), heights_(i + 1, j + 1)};
    double value = 0.0;
    for (int c = 0; c < 4; ++c) {
        if (w[c] == 0.0) continue;
        if (std::isnan(h[c])) return std::nullopt;
        value += w[c] * h[c];
    }
    return value;
}

double terrain_sample(const TerrainMap& map, double x, double y) {
    if (auto h = map.try_sample(x, y)) return *h;
    std::ostringstream msg;
    msg << "terrain query (" << x << ", " << y << ") is off the map or on NODATA";
    throw OutOfMap(msg.str());
}

TerrainMap synth_terrain(std::uint64_t seed, double extent, double cell, double roughness) {
    if (!(extent > 0.0)) throw InvalidArgument("terrain extent must be positive");
    if (!(cell > 0.0) || cell > extent) throw InvalidArgument("terrain cell must be positive and below the extent");
    const auto n = static_cast<Eigen::Index>(std::floor(extent / cell)) + 1;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Hill widths of 4-8 % of the extent (320-640 m on an 8 km map) keep
    // the relief resolvable by coarse filter grids.
    constexpr int kHills = 300;
    constexpr double kWidthLow = 0.04;
    constexpr double kWidthHigh = 0.08;
    struct Hill {
        double cx, cy, inv2w2, amp;
    };
    std::vector<Hill> hills;
    hills.reserve(kHills);
    for (int h = 0; h < kHills; ++h) {
        const double cx = extent * unit(rng);
        const double cy = extent * unit(rng);
        const double width = extent * (kWidthLow + (kWidthHigh - kWidthLow) * unit(rng));
        const double amp = 40.0 * gauss(rng);
        hills.push_back({cx, cy, 1.0 / (2.0 * width * width), amp});
    }
    const double kx = 2.0 * std::numbers::pi * (0.5 + unit(rng)) / extent;
    const double ky = 2.0 * std::numbers::pi * (0.5 + unit(rng)) / extent;
    const double phx = 2.0 * std::numbers::pi * unit(rng);
    const double phy = 2.0 * std::numbers::pi * unit(rng);

    Eigen::MatrixXd heights(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double y = cell * static_cast<double>(j);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double x = cell * static_cast<double>(i);
            double relief = 30.0 * std::sin(kx * x + phx) + 30.0 * std::cos(ky * y + phy);
            for (const Hill& hill : hills) {
                const double dx = x - hill.cx;
                const double dy = y - hill.cy;
                relief += hill.amp * std::exp(-(dx * dx + dy * dy) * hill.inv2w2);
            }
            heights(i, j) = 300.0 + roughness * relief;
        }
    }
    return TerrainMap(0.0, 0.0, cell, std::move(heights));
}

TerrainMap ramp_terrain(double origin_x, double origin_y, double cell, Eigen::Index nx, Eigen::Index ny,
                        double base, double slope_x, double slope_y) {
    Eigen::MatrixXd heights(nx, ny);
    for (Eigen::Index j = 0; j < ny; ++j)
        for (Eigen::Index i = 0; i < nx; ++i)
            heights(i, j) = base + slope_x * (origin_x + cell * static_cast<double>(i)) +
                            slope_y * (origin_y + cell * static_cast<double>(j));
    return TerrainMap(origin_x, origin_y, cell, std::move(heights));
}

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

double parse_number(const std::string& token, const std::filesystem::path& path, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw ParseError(path.string() + ":" + std::to_string(line) + ": not a number: '" + token + "'");
    }
}

}  // namespace

TerrainMap load_esri_ascii(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open DEM file " + path.string());

    std::map<std::string, double> header;
    std::string line;
    std::size_t line_no = 0;
    std::streampos data_start = in.tellg();
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) {
            data_start = in.tellg();
            continue;
        }
        if (!std::isalpha(static_cast<unsigned char>(key[0]))) break;
        std::string value;
        if (!(ls >> value)) throw ParseError(path.string() + ":" + std::to_string(line_no) + ": header key without value");
        header[lower(key)] = parse_number(value, path, line_no);
        data_start = in.tellg();
    }
    const std::size_t header_lines = header.size();
    auto require = [&](const char* key) {
        auto it = header.find(key);
        if (it == header.end()) throw ParseError(path.string() + ": missing header key '" + key + "'");
        return it->second;
    };
    const double ncols_d = require("ncols");
    const double nrows_d = require("nrows");
    const double cell = require("cellsize");
    if (ncols_d < 2 || nrows_d < 2 || ncols_d != std::floor(ncols_d) || nrows_d != std::floor(nrows_d)) {
        throw ParseError(path.string() + ": ncols/nrows must be integers of at least 2");
    }
    const auto ncols = static_cast<Eigen::Index>(ncols_d);
    const auto nrows = static_cast<Eigen::Index>(nrows_d);
    double ox = 0.0;
    double oy = 0.0;
    if (header.count("xllcenter") && header.count("yllcenter")) {
        ox = header["xllcenter"];
        oy = header["yllcenter"];
    } else {
        ox = require("xllcorner") + 0.5 * cell;
        oy = require("yllcorner") + 0.5 * cell;
    }
    const bool has_nodata = header.count("nodata_value") > 0;
    const double nodata = has_nodata ? header["nodata_value"] : 0.0;

    in.clear();
    in.seekg(data_start);
    line_no = header_lines;
    Eigen::MatrixXd heights(ncols, nrows);
    Eigen::Index row = 0;
    while (row < nrows && std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::vector<std::string> tokens;
        std::string tok;
        while (ls >> tok) tokens.push_back(tok);
        if (tokens.empty()) continue;
        if (static_cast<Eigen::Index>(tokens.size()) != ncols) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": row has " +
                             std::to_string(tokens.size()) + " values, expected " + std::to_string(ncols));
        }
        const Eigen::Index j = nrows - 1 - row;
        for (Eigen::Index i = 0; i < ncols; ++i) {
            const double v = parse_number(tokens[static_cast<std::size_t>(i)], path, line_no);
            heights(i, j) = (has_nodata && v == nodata) ? std::numeric_limits<double>::quiet_NaN() : v;
        }
        ++row;
    }
    if (row != nrows) {
        throw ParseError(path.string() + ": expected " + std::to_string(nrows) + " rows, found " + std::to_string(row));
    }
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            throw ParseError(path.string() + ": trailing data after " + std::to_string(nrows) + " rows");
        }
    }
    return TerrainMap(ox, oy, cell, std::move(heights));
}

void write_esri_ascii(const TerrainMap& map, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write DEM file " + path.string());
    constexpr double kNodata = -9999.0;
    const auto& h = map.heights();
    out << std::setprecision(17);
    out << "ncols " << h.rows() << "\n"
        << "nrows " << h.cols() << "\n"
        << "xllcenter " << map.origin_x() << "\n"
        << "yllcenter " << map.origin_y() << "\n"
        << "cellsize " << map.cell() << "\n"
        << "NODATA_value " << kNodata << "\n";
    for (Eigen::Index j = h.cols(); j-- > 0;) {
        for (Eigen::Index i = 0; i < h.rows(); ++i) {
            if (i) out << ' ';
            out << (std::isnan(h(i, j)) ? kNodata : h(i, j));
        }
        out << "\n";
    }
    if (!out) throw IoError("failed writing DEM file " + path.string());
}

}  // namespace tpmf
