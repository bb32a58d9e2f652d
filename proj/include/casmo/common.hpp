#pragma once

#include <cstdint>
#include <charconv>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace casmo {

// Error taxonomy. The CLI maps ConfigError/ParseError to exit code 2 and
// everything else raised during analysis to exit code 1.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : Error { using Error::Error; };
struct DataError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct WindowingError : Error { using Error::Error; };
struct LifecycleError : Error { using Error::Error; };
struct ContractViolation : Error { using Error::Error; };
struct EvaluationError : Error { using Error::Error; };

using UserId = std::uint32_t;

// Interns user id strings to dense integers. One table per corpus; every
// cascade and diffusion edge in a run shares it so ids are comparable.
class IdTable {
public:
    UserId intern(std::string_view name) {
        auto it = index_.find(std::string(name));
        if (it != index_.end()) return it->second;
        UserId id = static_cast<UserId>(names_.size());
        names_.emplace_back(name);
        index_.emplace(names_.back(), id);
        return id;
    }
    const std::string& name(UserId id) const { return names_.at(id); }
    std::size_t size() const { return names_.size(); }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, UserId> index_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from a master seed. Used so parallel
// workers (per cascade, per ensemble member) draw reproducibly regardless of
// scheduling order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(master ^ splitmix64(stream + 0x51ed2701a3c5e791ULL));
}

using Rng = std::mt19937_64;

// Shortest round-trip decimal form. All emitted files go through this so a
// rerun with the same seed is byte-identical.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_double_fixed(double v, int precision) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
    return std::string(buf, res.ptr);
}

}  // namespace casmo
