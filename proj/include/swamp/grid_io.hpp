#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lattice.hpp"
#include "mrf.hpp"
#include "util.hpp"

namespace swamp {

// Grid file format: text header lines (dim, N, params, seed, optional
// config) followed by row-major whitespace-separated values.

// All harness outputs go through this: write to a temp file, then rename,
// so partial outputs are never left behind.
inline void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot open for writing: " + tmp);
        out << content;
        if (!out) throw Error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct GridFile {
    LatticeShape shape;
    MrfParams params;
    std::uint64_t seed = 0;
    std::string config; // optional embedded experiment config (one line)
    std::vector<double> values;
};

inline std::string grid_to_string(const GridFile& g) {
    std::ostringstream out;
    out << "dim " << g.shape.dim << "\n";
    out << "N " << g.shape.side << "\n";
    out << "params " << format_double(g.params.p) << " " << format_double(g.params.q) << " "
        << format_double(g.params.r) << " " << format_double(g.params.s) << "\n";
    out << "seed " << g.seed << "\n";
    if (!g.config.empty()) out << "config " << g.config << "\n";
    const long per_line = g.shape.dim >= 2 ? g.shape.side : g.shape.size();
    for (long i = 0; i < static_cast<long>(g.values.size()); ++i) {
        out << format_double(g.values[i]);
        out << ((i + 1) % per_line == 0 ? '\n' : ' ');
    }
    return out.str();
}

inline void write_grid(const std::string& path, const GridFile& g) {
    write_file_atomic(path, grid_to_string(g));
}

inline GridFile read_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open grid file: " + path);
    GridFile g;
    std::string line, key;
    bool have_dim = false, have_n = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        if (!(ls >> key)) continue;
        if (key == "dim") {
            ls >> g.shape.dim;
            have_dim = true;
        } else if (key == "N") {
            ls >> g.shape.side;
            have_n = true;
        } else if (key == "params") {
            ls >> g.params.p >> g.params.q >> g.params.r >> g.params.s;
        } else if (key == "seed") {
            ls >> g.seed;
        } else if (key == "config") {
            std::getline(ls, g.config);
            if (!g.config.empty() && g.config[0] == ' ') g.config.erase(0, 1);
        } else {
            // first payload line
            if (!have_dim || !have_n) throw ValidationError("grid file missing dim/N header");
            std::istringstream first(line);
            double v;
            while (first >> v) g.values.push_back(v);
            while (in >> v) g.values.push_back(v);
            break;
        }
    }
    g.shape.validate();
    if (static_cast<long>(g.values.size()) != g.shape.size())
        throw ValidationError("grid file payload length does not match dim/N");
    return g;
}

} // namespace swamp
