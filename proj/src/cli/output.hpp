#pragma once

#include <json.hpp>

#include <string>
#include <vector>

namespace wkh::cli {

// %.17g; round-trips every finite double.
std::string fmt(double v);

class CsvWriter {
public:
    explicit CsvWriter(const std::vector<std::string>& header);

    void row(const std::vector<std::string>& cells);
    const std::string& text() const noexcept { return text_; }

private:
    std::string text_;
    std::size_t columns_;
};

// Writes to a temporary sibling and renames it over `path`.
void write_atomic(const std::string& path, const std::string& contents);

std::string dump(const nlohmann::json& j);

}  // namespace wkh::cli
