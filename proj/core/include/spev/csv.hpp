#pragma once

// Minimal RFC 4180 CSV with '#' comment lines for provenance headers.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spev {

/// Six significant digits, locale independent; "nan" / "inf" spelled out.
std::string format_number(double v);

std::string csv_escape(std::string_view field);

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void comment(std::string_view text);
    void row(const std::vector<std::string>& fields);

private:
    std::ostream& out_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> comments;

    /// Column position by name.
    std::optional<std::size_t> column(std::string_view name) const;
};

/// First non-comment record is the header. Throws MalformedConfig on an
/// unterminated quote or ragged row.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace spev
