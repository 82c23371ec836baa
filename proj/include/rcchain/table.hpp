// Small tabular output helpers: CSV / JSON rendering and atomic file writes.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rcchain::io {

enum class Format { csv, json };

std::string format_number(double v);

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row); // throws on width mismatch
    std::string to_csv() const;
    // Array of objects, keys in column order.
    std::string to_json() const;
    std::string render(Format f) const { return f == Format::csv ? to_csv() : to_json(); }
};

// Writes to a sibling temporary and renames over the target.
void write_atomic(const std::filesystem::path& path, std::string_view content);

// Stages several outputs and publishes them together: nothing is renamed into
// place until every temporary has been written.
class OutputSet {
public:
    void add(std::filesystem::path path, std::string content);
    void commit();
    const std::vector<std::pair<std::filesystem::path, std::string>>& files() const {
        return files_;
    }

private:
    std::vector<std::pair<std::filesystem::path, std::string>> files_;
};

} // namespace rcchain::io
