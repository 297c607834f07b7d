#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "snn/adaptive.hpp"
#include "snn/density.hpp"
#include "snn/errors.hpp"
#include "snn/grid.hpp"
#include "snn/particle.hpp"

namespace snn {

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{}) throw io_error("format_double failed");
    return std::string(buf, end);
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::filesystem::path dir = path.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    return out;
}

inline void write_particle_trace(const std::filesystem::path& path,
                                 const ParticleTrace& tr) {
    auto out = open_out(path);
    out << "t,mean_v,firing_rate,n_spikes\n";
    for (std::size_t k = 0; k < tr.times.size(); ++k)
        out << format_double(tr.times[k]) << ',' << format_double(tr.mean_v[k]) << ','
            << format_double(tr.firing_rate[k]) << ',' << tr.n_spikes[k] << '\n';
}

inline void write_particle_snapshot(const std::filesystem::path& path,
                                    const ParticleSnapshot& snap) {
    auto out = open_out(path);
    out << "v,w\n";
    for (std::size_t i = 0; i < snap.v.size(); ++i)
        out << format_double(snap.v[i]) << ',' << format_double(snap.w[i]) << '\n';
}

inline void write_pair_histogram(const std::filesystem::path& path,
                                 const Histogram2D& h) {
    auto out = open_out(path);
    out << "v_i_bin,v_j_bin,count\n";
    for (std::size_t iy = 0; iy < h.bins; ++iy)
        for (std::size_t ix = 0; ix < h.bins; ++ix) {
            std::uint64_t c = h.counts[iy * h.bins + ix];
            if (c == 0) continue;
            double x = h.x_min + (h.x_max - h.x_min) * (static_cast<double>(ix) + 0.5) /
                                     static_cast<double>(h.bins);
            double y = h.y_min + (h.y_max - h.y_min) * (static_cast<double>(iy) + 0.5) /
                                     static_cast<double>(h.bins);
            out << format_double(x) << ',' << format_double(y) << ',' << c << '\n';
        }
}

inline void write_step_log(const std::filesystem::path& path,
                           const std::vector<StepLogRow>& log) {
    auto out = open_out(path);
    out << "t,dt,e,accepted,mass,min_mu,psi,mean_v\n";
    for (const auto& r : log)
        out << format_double(r.t) << ',' << format_double(r.dt) << ','
            << format_double(r.e) << ',' << (r.accepted ? 1 : 0) << ','
            << format_double(r.mass) << ',' << format_double(r.min_mu) << ','
            << format_double(r.psi) << ',' << format_double(r.mean_v) << '\n';
}

inline void write_meanfield_trace(const std::filesystem::path& path,
                                  const MeanFieldTrace& tr) {
    auto out = open_out(path);
    out << "t,mean_v,psi,mass\n";
    for (std::size_t k = 0; k < tr.times.size(); ++k)
        out << format_double(tr.times[k]) << ',' << format_double(tr.mean_v[k]) << ','
            << format_double(tr.psi[k]) << ',' << format_double(tr.mass[k]) << '\n';
}

/// Flat binary density snapshot (row-major over w rows, v fastest, 8-byte
/// little-endian doubles) plus a text sidecar with the grid metadata.
inline void write_density(const std::filesystem::path& base, const Grid2D& g,
                          const Density& d) {
    std::filesystem::path bin = base;
    bin += ".bin";
    std::filesystem::path meta = base;
    meta += ".meta";
    {
        auto out = open_out(bin);
        out.write(reinterpret_cast<const char*>(d.mu.data()),
                  static_cast<std::streamsize>(d.mu.size() * sizeof(double)));
    }
    auto out = open_out(meta);
    out << "format = float64_le_row_major\n";
    out << "file = " << bin.filename().string() << "\n";
    out << "t = " << format_double(d.t) << "\n";
    out << "mass = " << format_double(mass(g, d)) << "\n";
    out << "v_min = " << format_double(g.v_min) << "\n";
    out << "v_max = " << format_double(g.v_max) << "\n";
    out << "w_min = " << format_double(g.w_min) << "\n";
    out << "w_max = " << format_double(g.w_max) << "\n";
    out << "n_v = " << g.n_v << "\n";
    out << "n_w = " << g.n_w << "\n";
    out << "dv = " << format_double(g.dv) << "\n";
    out << "dw = " << format_double(g.dw) << "\n";
    out << "i_reset = " << g.i_reset << "\n";
    out << "j_shift = " << g.j_shift << "\n";
}

inline Density read_density(const std::filesystem::path& bin, std::size_t cells) {
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw io_error("cannot open density file: " + bin.string());
    Density d;
    d.mu.resize(cells);
    in.read(reinterpret_cast<char*>(d.mu.data()),
            static_cast<std::streamsize>(cells * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != cells * sizeof(double))
        throw io_error("density file truncated: " + bin.string());
    return d;
}

inline void write_density_csv(const std::filesystem::path& path, const Grid2D& g,
                              const Density& d) {
    auto out = open_out(path);
    out << "v,w,mu\n";
    for (int j = 0; j < g.n_w; ++j)
        for (int i = 0; i < g.n_v; ++i)
            out << format_double(g.v_at(i)) << ',' << format_double(g.w_at(j)) << ','
                << format_double(d.mu[g.idx(i, j)]) << '\n';
}

/// Two-column summary CSV, e.g. ("N","error") or ("w","density").
inline void write_summary_csv(const std::filesystem::path& path, const std::string& h1,
                              std::span<const double> c1, const std::string& h2,
                              std::span<const double> c2) {
    auto out = open_out(path);
    out << h1 << ',' << h2 << '\n';
    for (std::size_t k = 0; k < c1.size(); ++k)
        out << format_double(c1[k]) << ',' << format_double(c2[k]) << '\n';
}

} // namespace snn
