#include "casmo/csv.hpp"

#include <cerrno>
#include <cstdlib>

namespace casmo {

void split_csv_line(std::string_view text, std::vector<std::string>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        std::size_t pos = text.find(',', start);
        if (pos == std::string_view::npos) {
            out.emplace_back(text.substr(start));
            break;
        }
        out.emplace_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    for (auto& f : out) {
        while (!f.empty() && (f.back() == '\r' || f.back() == ' ' || f.back() == '\t')) f.pop_back();
        std::size_t i = 0;
        while (i < f.size() && (f[i] == ' ' || f[i] == '\t')) ++i;
        if (i) f.erase(0, i);
    }
}

bool CsvReader::next(std::vector<std::string>& fields) {
    std::string raw;
    while (std::getline(in_, raw)) {
        ++line_;
        std::size_t i = 0;
        while (i < raw.size() && (raw[i] == ' ' || raw[i] == '\t' || raw[i] == '\r')) ++i;
        if (i == raw.size() || raw[i] == '#') continue;
        split_csv_line(raw, fields);
        return true;
    }
    return false;
}

double CsvReader::parse_double(const std::string& field, const char* what) const {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0' || errno == ERANGE)
        fail(std::string("cannot parse ") + what + " from '" + field + "'");
    return v;
}

long CsvReader::parse_long(const std::string& field, const char* what) const {
    errno = 0;
    char* end = nullptr;
    long v = std::strtol(field.c_str(), &end, 10);
    if (end == field.c_str() || *end != '\0' || errno == ERANGE)
        fail(std::string("cannot parse ") + what + " from '" + field + "'");
    return v;
}

}  // namespace casmo
