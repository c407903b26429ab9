#include "spev/csv.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "spev/error.hpp"

namespace spev {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    return fmt::format("{:.6g}", v);
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void CsvWriter::comment(std::string_view text) { out_ << "# " << text << '\n'; }

void CsvWriter::row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ',';
        out_ << csv_escape(fields[i]);
    }
    out_ << '\n';
}

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    return std::nullopt;
}

CsvTable parse_csv(std::string_view text) {
    CsvTable table;
    std::size_t pos = 0;
    bool have_header = false;
    while (pos < text.size()) {
        if (text[pos] == '\n' || text[pos] == '\r') {
            ++pos;
            continue;
        }
        if (text[pos] == '#') {
            const auto end = text.find('\n', pos);
            auto line = text.substr(pos + 1, end == std::string_view::npos ? std::string_view::npos : end - pos - 1);
            while (!line.empty() && (line.front() == ' ')) line.remove_prefix(1);
            while (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            table.comments.emplace_back(line);
            pos = end == std::string_view::npos ? text.size() : end + 1;
            continue;
        }
        std::vector<std::string> fields;
        std::string field;
        bool quoted = false;
        bool done = false;
        while (!done) {
            if (pos >= text.size()) {
                if (quoted) fail(Errc::MalformedConfig, "unterminated quoted CSV field");
                done = true;
                break;
            }
            const char c = text[pos++];
            if (quoted) {
                if (c == '"') {
                    if (pos < text.size() && text[pos] == '"') {
                        field += '"';
                        ++pos;
                    } else {
                        quoted = false;
                    }
                } else {
                    field += c;
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                fields.push_back(std::move(field));
                field.clear();
            } else if (c == '\n') {
                done = true;
            } else if (c != '\r') {
                field += c;
            }
        }
        fields.push_back(std::move(field));
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
        } else {
            if (fields.size() != table.header.size()) {
                fail(Errc::MalformedConfig, fmt::format("CSV row {} has {} fields, header has {}",
                                                        table.rows.size() + 1, fields.size(), table.header.size()));
            }
            table.rows.push_back(std::move(fields));
        }
    }
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::UnreadableFile, fmt::format("cannot open '{}'", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str());
}

}  // namespace spev
