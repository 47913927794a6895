#include "hmlab/report.h"

#include <fstream>
#include <system_error>

#include "hmlab/error.h"

namespace hmlab {

namespace {

nlohmann::json& at_path(nlohmann::json& root, const std::string& path) {
    nlohmann::json* node = &root;
    std::size_t start = 0;
    while (true) {
        const auto slash = path.find('/', start);
        const std::string part = path.substr(start, slash - start);
        if (part.empty()) throw Error(ErrorCode::InvalidArgument, "empty report path segment in '" + path + "'");
        node = &(*node)[part];
        if (slash == std::string::npos) return *node;
        start = slash + 1;
    }
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
    out.close();
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + p.string() + "'");
}

}  // namespace

Report::Report(std::string experiment) : experiment_(std::move(experiment)) {}

void Report::value(const std::string& path, const nlohmann::json& v) { at_path(results_, path) = v; }

void Report::stochastic(const std::string& path, double v, double stderr_, const Sampling& s) {
    at_path(results_, path) = {{"value", v},
                               {"stderr", stderr_},
                               {"N", s.N},
                               {"seed", s.seed},
                               {"shell_eps", s.shell_eps},
                               {"discard_fraction", s.discard_fraction}};
}

void Report::check(const std::string& name, double lhs, double rhs, bool pass) {
    checks_.push_back({name, lhs, rhs, pass});
}

void Report::flag(const std::string& name, bool raised, const std::string& note) {
    flags_[name] = note.empty() ? nlohmann::json(raised) : nlohmann::json{{"raised", raised}, {"note", note}};
}

CsvWriter& Report::table(const std::string& file, const std::vector<std::string>& header) {
    if (tables_.count(file) || file == "checks.csv")
        throw Error(ErrorCode::InvalidArgument, "duplicate report file '" + file + "'");
    auto t = std::make_unique<Table>();
    t->writer.header(header);
    CsvWriter& w = t->writer;
    tables_.emplace(file, std::move(t));
    return w;
}

void Report::json_file(const std::string& file, nlohmann::json j) { json_files_[file] = std::move(j); }

void Report::text_file(const std::string& file, std::string text) { text_files_[file] = std::move(text); }

bool Report::all_passed() const {
    for (const auto& c : checks_)
        if (!c.pass) return false;
    return true;
}

void Report::write(const std::filesystem::path& dir, const nlohmann::json& preamble) const {
    std::vector<std::filesystem::path> written;
    try {
        std::filesystem::create_directories(dir);

        nlohmann::json summary = preamble;
        summary["experiment"] = experiment_;
        summary["results"] = results_;
        nlohmann::json checks = nlohmann::json::array();
        for (const auto& c : checks_)
            checks.push_back({{"check", c.check}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"pass", c.pass}});
        summary["checks"] = checks;
        summary["flags"] = flags_;
        summary["all_checks_passed"] = all_passed();
        std::vector<std::string> files{"checks.csv"};
        for (const auto& [name, t] : tables_) files.push_back(name);
        for (const auto& [name, j] : json_files_) files.push_back(name);
        for (const auto& [name, s] : text_files_) files.push_back(name);
        summary["files"] = files;

        std::ostringstream checks_text;
        CsvWriter cw(checks_text);
        cw.header({"check", "lhs", "rhs", "pass"});
        for (const auto& c : checks_) {
            cw << c.check << c.lhs << c.rhs << c.pass;
            cw.end_row();
        }

        auto emit = [&](const std::string& name, const std::string& text) {
            written.push_back(dir / name);
            write_text(written.back(), text);
        };
        emit("checks.csv", checks_text.str());
        for (const auto& [name, t] : tables_) emit(name, t->text.str());
        for (const auto& [name, j] : json_files_) emit(name, j.dump(1) + "\n");
        for (const auto& [name, s] : text_files_) emit(name, s);
        emit("summary.json", summary.dump(2) + "\n");
    } catch (...) {
        std::error_code ec;
        for (const auto& p : written) std::filesystem::remove(p, ec);
        throw;
    }
}

}  // namespace hmlab
