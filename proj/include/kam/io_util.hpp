#ifndef KAM_IO_UTIL_HPP
#define KAM_IO_UTIL_HPP

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kam/errors.hpp"

namespace kam {

// Shortest round-trip decimal formatting (%.17g trimmed); used everywhere a
// float is written, so identical runs produce byte-identical files.
inline std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt_prec(double v, int prec) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    return buf;
}

class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path) : out_(path) {
        if (!out_) throw ConfigError("cannot open for writing: " + path);
    }
    void header(const std::string& line) { out_ << line << "\n"; }
    void row_begin() { first_ = true; }
    CsvWriter& col(double v) {
        sep();
        out_ << fmt_g(v);
        return *this;
    }
    CsvWriter& col(int v) {
        sep();
        out_ << v;
        return *this;
    }
    CsvWriter& col(long v) {
        sep();
        out_ << v;
        return *this;
    }
    CsvWriter& col(std::size_t v) {
        sep();
        out_ << v;
        return *this;
    }
    CsvWriter& col(const std::string& v) {
        sep();
        out_ << v;
        return *this;
    }
    void row_end() { out_ << "\n"; }

  private:
    void sep() {
        if (!first_) out_ << ",";
        first_ = false;
    }
    std::ofstream out_;
    bool first_ = true;
};

// FNV-1a 64-bit content digest (manifest + cache keys).
inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}
inline std::uint64_t fnv1a64(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a64(s.data(), s.size(), h);
}
std::uint64_t file_digest(const std::string& path);
inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Deterministic uniform doubles in [0,1): fixed mapping from the raw 64-bit
// stream, independent of the standard library's distribution internals.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    int uniform_int(int n) { return int(eng_() % std::uint64_t(n)); }  // small n only
    std::uint64_t raw() { return eng_(); }

  private:
    std::mt19937_64 eng_;
};

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace kam

#endif
