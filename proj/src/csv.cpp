#include "tfim/csv.hpp"

#include <cmath>
#include <cstdint>
#include <fmt/format.h>
#include <ostream>
#include <sstream>

namespace tfim {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return fmt::format("{:.17g}", x);
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void CsvWriter::header(std::initializer_list<std::string_view> names) {
    std::vector<std::string> cells(names.begin(), names.end());
    write(cells);
}

void CsvWriter::header(const std::vector<std::string>& names) { write(names); }

void CsvWriter::write(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os_ << ',';
        os_ << csv_escape(cells[i]);
    }
    os_ << "\r\n";
}

namespace {

void emit(std::ostream& os, const nlohmann::json& j, int indent, int depth) {
    const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
    const std::string close = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
    const char* nl = indent > 0 ? "\n" : "";
    const char* sep = indent > 0 ? ": " : ":";
    switch (j.type()) {
        case nlohmann::json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << '{' << nl;
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {  // std::map order: sorted
                if (!first) os << ',' << nl;
                first = false;
                os << pad << nlohmann::json(it.key()).dump() << sep;
                emit(os, it.value(), indent, depth + 1);
            }
            os << nl << close << '}';
            return;
        }
        case nlohmann::json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            os << '[' << nl;
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) os << ',' << nl;
                os << pad;
                emit(os, j[i], indent, depth + 1);
            }
            os << nl << close << ']';
            return;
        }
        case nlohmann::json::value_t::number_float: {
            const double x = j.get<double>();
            os << (std::isfinite(x) ? format_double(x) : "null");
            return;
        }
        default:
            os << j.dump();
    }
}

}  // namespace

void write_json(std::ostream& os, const nlohmann::json& j, int indent) {
    emit(os, j, indent, 0);
    os << '\n';
}

std::string dump_json(const nlohmann::json& j, int indent) {
    std::ostringstream ss;
    write_json(ss, j, indent);
    return ss.str();
}

std::string inputs_hash(const nlohmann::json& j) {
    const std::string canon = dump_json(j, 0);
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return fmt::format("{:016x}", h);
}

}  // namespace tfim
