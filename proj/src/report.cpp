#include "mfbdsvie/report.hpp"

#include "mfbdsvie/error.hpp"

#include <cstdio>
#include <fstream>

namespace mfbdsvie {

std::string format_real(double v) {
    if (v == 0.0) return "0";  // folds -0
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw Error(ErrorKind::IoError, "CSV row width does not match header");
    rows_.push_back(std::move(cells));
}

std::string CsvTable::to_string() const {
    std::string out;
    auto emit = [&out](const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) {
            if (k) out += ',';
            out += cells[k];
        }
        out += '\n';
    };
    emit(header_);
    for (const auto& r : rows_) emit(r);
    return out;
}

void CsvTable::write(const std::filesystem::path& file) const { write_text(file, to_string()); }

void write_text(const std::filesystem::path& file, const std::string& text) {
    std::ofstream os(file, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorKind::IoError, "cannot open " + file.string() + " for writing");
    os << text;
    if (!os) throw Error(ErrorKind::IoError, "write failed for " + file.string());
}

} // namespace mfbdsvie
