#ifndef ASMC_CSV_HPP
#define ASMC_CSV_HPP

// Deterministic CSV text: schema line, comment block, header, rows. Floats are
// printed with 17 significant digits so values round-trip exactly.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace asmc {

using CsvCell = std::variant<std::monostate, double, std::int64_t, std::uint64_t, std::string>;

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv_quote(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

class CsvWriter {
public:
    CsvWriter(std::string schema, std::vector<std::string> columns) : columns_(std::move(columns)) {
        text_ = "schema," + schema + "\n";
        header_pending_ = true;
    }

    // Comment lines must be written before the first row.
    void comment(std::string_view line) {
        text_ += "# ";
        for (char c : line) text_ += c == '\n' ? ' ' : c;
        text_ += '\n';
    }

    void row(const std::vector<CsvCell>& cells) {
        flush_header();
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            text_ += cell_text(cells[i]);
        }
        text_ += '\n';
    }

    // A terminal row recording why the run stopped.
    void failure(std::string_view message) { row({std::string("failure"), csv_quote(message)}); }

    const std::string& text() {
        flush_header();
        return text_;
    }
    std::size_t column_count() const noexcept { return columns_.size(); }

private:
    void flush_header() {
        if (!header_pending_) return;
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            if (i) text_ += ',';
            text_ += columns_[i];
        }
        text_ += '\n';
        header_pending_ = false;
    }

    static std::string cell_text(const CsvCell& c) {
        switch (c.index()) {
            case 0: return "";
            case 1: return format_double(std::get<double>(c));
            case 2: return std::to_string(std::get<std::int64_t>(c));
            case 3: return std::to_string(std::get<std::uint64_t>(c));
            default: return csv_quote(std::get<std::string>(c));
        }
    }

    std::vector<std::string> columns_;
    std::string text_;
    bool header_pending_ = true;
};

}  // namespace asmc

#endif  // ASMC_CSV_HPP
