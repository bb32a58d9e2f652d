#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "casmo/common.hpp"

namespace casmo {

// Minimal delimited reader for the flat formats this tool consumes. Fields
// never contain commas or quotes, so no quoting rules are needed; what is
// needed is a line number on every complaint.
class CsvReader {
public:
    explicit CsvReader(std::istream& in, std::string source_name = "<stream>")
        : in_(in), source_(std::move(source_name)) {}

    // Reads the next non-empty row (comment lines starting with '#' are
    // skipped). Returns false at end of input.
    bool next(std::vector<std::string>& fields);

    std::size_t line() const { return line_; }
    const std::string& source() const { return source_; }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(source_ + ":" + std::to_string(line_) + ": " + what);
    }

    double parse_double(const std::string& field, const char* what) const;
    long parse_long(const std::string& field, const char* what) const;

private:
    std::istream& in_;
    std::string source_;
    std::size_t line_ = 0;
};

void split_csv_line(std::string_view text, std::vector<std::string>& out);

}  // namespace casmo
