#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace hmlab {

/// Shortest round-trip decimal form; "inf", "-inf" and "nan" for
/// non-finite values.
std::string format_double(double v);

/// RFC-4180 writer: comma separated, CRLF-free ("\n") line ends, fields
/// quoted only when they contain a comma, quote or newline.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(&out) {}

    void header(std::initializer_list<std::string_view> names);
    void header(const std::vector<std::string>& names);

    CsvWriter& operator<<(std::string_view field);
    CsvWriter& operator<<(const std::string& field) { return *this << std::string_view(field); }
    CsvWriter& operator<<(const char* field) { return *this << std::string_view(field); }
    CsvWriter& operator<<(double v);
    CsvWriter& operator<<(long long v);
    CsvWriter& operator<<(unsigned long long v);
    CsvWriter& operator<<(int v) { return *this << static_cast<long long>(v); }
    CsvWriter& operator<<(long v) { return *this << static_cast<long long>(v); }
    CsvWriter& operator<<(unsigned long v) { return *this << static_cast<unsigned long long>(v); }
    CsvWriter& operator<<(bool v) { return *this << std::string_view(v ? "true" : "false"); }

    void end_row();

private:
    void raw(std::string_view field);

    std::ostream* out_;
    bool first_ = true;
};

/// Splits one CSV record, honoring quoted fields.
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace hmlab
