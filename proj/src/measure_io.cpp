#include "hmlab/measure_io.h"

#include <fstream>
#include <sstream>

#include "hmlab/csv.h"
#include "hmlab/error.h"

namespace hmlab {

namespace {

double parse_number(const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (...) {
        throw Error(ErrorCode::IoError, "not a number: '" + s + "'");
    }
    if (used != s.size()) throw Error(ErrorCode::IoError, "trailing characters in '" + s + "'");
    return v;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

PointMeasure read_measure_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::IoError, "measure CSV is empty");
    const auto head = split_csv_line(line);
    const int d = static_cast<int>(head.size()) - 1;
    if (d < 2 || head.back() != "weight")
        throw Error(ErrorCode::IoError, "measure CSV header must be x1..xd,weight");
    for (int k = 0; k < d; ++k)
        if (head[k] != "x" + std::to_string(k + 1))
            throw Error(ErrorCode::IoError, "measure CSV header must be x1..xd,weight");
    PointMeasure mu(d, d - 1);
    Point p(static_cast<std::size_t>(d));
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != head.size())
            throw Error(ErrorCode::IoError, "measure CSV row " + std::to_string(row) + " has wrong width");
        for (int k = 0; k < d; ++k) p[k] = parse_number(f[k]);
        mu.add(p, parse_number(f.back()));
    }
    return mu;
}

void write_measure_csv(std::ostream& out, const PointMeasure& mu) {
    CsvWriter w(out);
    std::vector<std::string> head;
    for (int k = 0; k < mu.dim(); ++k) head.push_back("x" + std::to_string(k + 1));
    head.push_back("weight");
    w.header(head);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        for (double c : mu.point(i)) w << c;
        w << mu.weight(i);
        w.end_row();
    }
}

nlohmann::json measure_to_json(const PointMeasure& mu) {
    nlohmann::json pts = nlohmann::json::array();
    for (std::size_t i = 0; i < mu.size(); ++i)
        pts.push_back(std::vector<double>(mu.point(i).begin(), mu.point(i).end()));
    return {{"dim", mu.dim()}, {"n", mu.n()}, {"points", pts}, {"weights", mu.weights()}};
}

PointMeasure measure_from_json(const nlohmann::json& j) {
    try {
        const int d = j.at("dim").get<int>();
        const int n = j.contains("n") ? j.at("n").get<int>() : d - 1;
        PointMeasure mu(d, n);
        const auto& pts = j.at("points");
        const auto& ws = j.at("weights");
        if (pts.size() != ws.size()) throw Error(ErrorCode::IoError, "points and weights differ in length");
        for (std::size_t i = 0; i < pts.size(); ++i)
            mu.add(pts[i].get<std::vector<double>>(), ws[i].get<double>());
        return mu;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::IoError, std::string("bad measure JSON: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::IoError) throw;
        throw Error(ErrorCode::IoError, e.what());
    }
}

PointMeasure load_measure(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    if (ends_with(path, ".json")) {
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::IoError, std::string("bad measure JSON: ") + e.what());
        }
        return measure_from_json(j);
    }
    return read_measure_csv(in);
}

void save_measure(const std::string& path, const PointMeasure& mu) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    if (ends_with(path, ".json"))
        out << measure_to_json(mu).dump(2) << '\n';
    else
        write_measure_csv(out, mu);
}

}  // namespace hmlab
