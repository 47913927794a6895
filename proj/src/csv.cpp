#include "hmlab/csv.h"

#include <charconv>
#include <cmath>

namespace hmlab {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void CsvWriter::header(std::initializer_list<std::string_view> names) {
    for (auto n : names) *this << n;
    end_row();
}

void CsvWriter::header(const std::vector<std::string>& names) {
    for (const auto& n : names) *this << n;
    end_row();
}

void CsvWriter::raw(std::string_view field) {
    if (!first_) *out_ << ',';
    first_ = false;
    *out_ << field;
}

CsvWriter& CsvWriter::operator<<(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
        raw(field);
        return *this;
    }
    std::string q = "\"";
    for (char c : field) {
        if (c == '"') q += '"';
        q += c;
    }
    q += '"';
    raw(q);
    return *this;
}

CsvWriter& CsvWriter::operator<<(double v) {
    raw(format_double(v));
    return *this;
}

CsvWriter& CsvWriter::operator<<(long long v) {
    raw(std::to_string(v));
    return *this;
}

CsvWriter& CsvWriter::operator<<(unsigned long long v) {
    raw(std::to_string(v));
    return *this;
}

void CsvWriter::end_row() {
    *out_ << '\n';
    first_ = true;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

}  // namespace hmlab
