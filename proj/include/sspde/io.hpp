#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaussian.hpp"
#include "lattice.hpp"

namespace sspde::io {

inline constexpr const char* schema_version = "sspde-1";

// Shortest text that round-trips the double.
inline std::string format_double(double x)
{
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x)
            break;
    }
    return buf;
}

inline void write_runs_csv(std::ostream& os, const std::vector<RunRecord>& runs)
{
    os << "# schema_version=" << schema_version << "\n";
    os << "run_id,seed,hit_time,timed_out\n";
    for (const auto& r : runs)
        os << r.run_id << ',' << r.seed << ',' << format_double(r.hit_time) << ',' << (r.timed_out ? 1 : 0) << '\n';
}

inline std::vector<RunRecord> read_runs_csv(std::istream& is)
{
    std::vector<RunRecord> out;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        if (!header) {
            if (line != "run_id,seed,hit_time,timed_out")
                throw std::runtime_error("runs csv: unexpected header '" + line + "'");
            header = true;
            continue;
        }
        RunRecord r{};
        int timed_out = 0;
        unsigned long long seed = 0;
        if (std::sscanf(line.c_str(), "%ld,%llu,%lf,%d", &r.run_id, &seed, &r.hit_time, &timed_out) != 4)
            throw std::runtime_error("runs csv: malformed row '" + line + "'");
        r.seed = seed;
        r.timed_out = timed_out != 0;
        out.push_back(r);
    }
    return out;
}

inline nlohmann::ordered_json summary_json(const BatchSummary& s, const nlohmann::ordered_json& config)
{
    nlohmann::ordered_json j;
    j["schema_version"] = schema_version;
    j["mean"] = s.mean;
    j["std_error"] = s.std_error;
    j["replicas"] = s.replicas;
    j["timeouts"] = s.timeouts;
    j["config"] = config;
    return j;
}

struct ConstantRow {
    std::string name;
    int d;
    int N;
    double L;
    double mass_sq;
    double value;
};

inline void write_constants_csv(std::ostream& os, const std::vector<ConstantRow>& rows)
{
    os << "# schema_version=" << schema_version << "\n";
    os << "name,d,N,L,mass_sq,value\n";
    for (const auto& r : rows)
        os << r.name << ',' << r.d << ',' << r.N << ',' << format_double(r.L) << ',' << format_double(r.mass_sq) << ','
           << format_double(r.value) << '\n';
}

// Snapshot layout, all little-endian: magic "SSPDSNAP", u32 version, u32 d,
// u32 N, f64 L, u64 count, then count f64 mode coefficients.
inline constexpr std::array<char, 8> snapshot_magic{'S', 'S', 'P', 'D', 'S', 'N', 'A', 'P'};
inline constexpr std::uint32_t snapshot_version = 1;

namespace detail {

template <class T>
void put_le(std::ostream& os, T v)
{
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U u;
    std::memcpy(&u, &v, sizeof u);
    for (std::size_t i = 0; i < sizeof u; ++i)
        os.put(static_cast<char>((u >> (8 * i)) & 0xff));
}

template <class T>
T get_le(std::istream& is)
{
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof u; ++i) {
        const int c = is.get();
        if (c == std::char_traits<char>::eof())
            throw std::runtime_error("snapshot: truncated file");
        u |= static_cast<U>(static_cast<unsigned char>(c)) << (8 * i);
    }
    T v;
    std::memcpy(&v, &u, sizeof v);
    return v;
}

} // namespace detail

inline void write_snapshot(std::ostream& os, const SpectralField& f)
{
    os.write(snapshot_magic.data(), snapshot_magic.size());
    detail::put_le<std::uint32_t>(os, snapshot_version);
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.modes.d));
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.modes.N));
    detail::put_le<double>(os, f.modes.L);
    detail::put_le<std::uint64_t>(os, f.coeffs.size());
    for (double c : f.coeffs)
        detail::put_le<double>(os, c);
}

inline SpectralField read_snapshot(std::istream& is)
{
    std::array<char, 8> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != snapshot_magic)
        throw std::runtime_error("snapshot: bad magic");
    if (const auto v = detail::get_le<std::uint32_t>(is); v != snapshot_version)
        throw std::runtime_error("snapshot: unsupported version " + std::to_string(v));
    const int d = static_cast<int>(detail::get_le<std::uint32_t>(is));
    const int N = static_cast<int>(detail::get_le<std::uint32_t>(is));
    const double L = detail::get_le<double>(is);
    const auto count = detail::get_le<std::uint64_t>(is);
    SpectralField f{l1_ball(d, N, L), {}};
    if (count != f.modes.size())
        throw std::runtime_error("snapshot: coefficient count does not match (d, N)");
    f.coeffs.resize(count);
    for (auto& c : f.coeffs)
        c = detail::get_le<double>(is);
    return f;
}

} // namespace sspde::io
