#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mfbdsvie {

/// Shortest round-trip decimal form ("%.17g"), stable across runs.
std::string format_real(double v);

/// Small in-memory CSV table; cells are preformatted strings.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    void add_row(std::vector<std::string> cells);
    std::size_t rows() const noexcept { return rows_.size(); }
    const std::vector<std::string>& header() const noexcept { return header_; }
    std::string to_string() const;
    /// Writes the table; IoError on failure.
    void write(const std::filesystem::path& file) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

void write_text(const std::filesystem::path& file, const std::string& text);

} // namespace mfbdsvie
