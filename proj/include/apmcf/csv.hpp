#pragma once

/// CSV artifacts: comma separated, one header row, 17 significant digits,
/// LF line endings.

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "apmcf/errors.hpp"
#include "apmcf/flow.hpp"
#include "apmcf/geometry.hpp"

namespace apmcf {

namespace detail {

inline std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    return os;
}

}  // namespace detail

inline const char* surface_csv_header() { return "theta,phi,rho,H,Aring2,E2,w"; }

inline void write_surface_csv(const std::string& path, const RadialGraph& s,
                              const FirstFundamental& first, const SecondFundamental& second) {
    auto os = detail::open_out(path);
    os << surface_csv_header() << "\n";
    const GridSpec& g = *s.grid;
    for (int i = 0; i < g.n_theta; ++i)
        for (int j = 0; j < g.n_phi; ++j) {
            const auto k = g.idx(i, j);
            os << detail::fmt17(g.theta[i]) << ',' << detail::fmt17(g.phi[j]) << ','
               << detail::fmt17(s.rho[k]) << ',' << detail::fmt17(second.H[k]) << ','
               << detail::fmt17(second.Aring2[k]) << ',' << detail::fmt17(second.E2[k]) << ','
               << detail::fmt17(first.weight[k]) << "\n";
        }
    if (!os) throw IoError("write failed: " + path);
}

inline const char* timeseries_csv_header() {
    return "t,area,vol,h,h0,h0_over_h_minus_1,max_Aring,max_gradAring,minH,maxH,max_r,dt,"
           "area_drift_rel,res_area,res_vol,vol_integrand,res_dtH,res_dth,max_A2,bsigma_ok";
}

inline void write_timeseries_csv(const std::string& path, const FlowRun& run) {
    auto os = detail::open_out(path);
    os << timeseries_csv_header() << "\n";
    for (const auto& r : run.records) {
        const MonitorReport& m = r.monitor;
        os << detail::fmt17(r.t) << ',' << detail::fmt17(r.terms.area) << ','
           << detail::fmt17(r.terms.volume) << ',' << detail::fmt17(r.terms.h) << ','
           << detail::fmt17(r.terms.h0) << ',' << detail::fmt17(m.h0_over_h_minus_1) << ','
           << detail::fmt17(m.max_aring) << ',' << detail::fmt17(m.max_grad_aring) << ','
           << detail::fmt17(m.min_H) << ',' << detail::fmt17(m.max_H) << ','
           << detail::fmt17(m.max_r) << ',' << detail::fmt17(m.dt) << ','
           << detail::fmt17(m.area_drift) << ',' << detail::fmt17(m.res_area) << ','
           << detail::fmt17(m.res_vol) << ',' << detail::fmt17(m.vol_integrand) << ','
           << detail::fmt17(m.res_dtH) << ',' << detail::fmt17(m.res_dth) << ','
           << detail::fmt17(m.max_A2) << ','
           << (m.bsigma.applicable ? (m.bsigma.all_ok() ? "1" : "0") : "1") << "\n";
    }
    if (!os) throw IoError("write failed: " + path);
}

/// Column-indexed read of any CSV written by this library.
struct CsvTable {
    std::vector<std::string> header;
    std::map<std::string, std::vector<double>> columns;

    const std::vector<double>& col(const std::string& name) const {
        const auto it = columns.find(name);
        if (it == columns.end()) throw IoError("missing CSV column: " + name);
        return it->second;
    }
    std::size_t rows() const { return columns.empty() ? 0 : columns.begin()->second.size(); }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(is, line)) throw IoError("empty CSV: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::stringstream hs(line);
    std::string tok;
    while (std::getline(hs, tok, ',')) t.header.push_back(tok);
    for (const auto& h : t.header) t.columns[h] = {};
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::size_t c = 0;
        while (std::getline(ls, tok, ',')) {
            if (c >= t.header.size()) throw IoError("ragged CSV row in " + path);
            t.columns[t.header[c]].push_back(std::strtod(tok.c_str(), nullptr));
            ++c;
        }
        if (c != t.header.size()) throw IoError("ragged CSV row in " + path);
    }
    return t;
}

}  // namespace apmcf
