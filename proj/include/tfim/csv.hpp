#pragma once

// Output helpers: RFC-4180 CSV and key-sorted JSON, all floats with 17
// significant digits so files round-trip bit-exactly.

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <json.hpp>

namespace tfim {

std::string format_double(double x);

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    void header(std::initializer_list<std::string_view> names);
    void header(const std::vector<std::string>& names);

    template <class... Ts>
    void row(const Ts&... fields) {
        std::vector<std::string> cells;
        cells.reserve(sizeof...(Ts));
        (cells.push_back(cell(fields)), ...);
        write(cells);
    }
    void write(const std::vector<std::string>& cells);

private:
    template <class T>
    static std::string cell(const T& x) {
        if constexpr (std::is_same_v<T, bool>) {
            return x ? "true" : "false";
        } else if constexpr (std::is_floating_point_v<T>) {
            return format_double(static_cast<double>(x));
        } else if constexpr (std::is_integral_v<T>) {
            return std::to_string(x);
        } else {
            return std::string(std::string_view(x));
        }
    }

    std::ostream& os_;
};

/// Pretty JSON with sorted keys; non-finite numbers become null.
void write_json(std::ostream& os, const nlohmann::json& j, int indent = 2);
std::string dump_json(const nlohmann::json& j, int indent = 2);

/// 64-bit FNV-1a of the canonical (compact, sorted) JSON dump, as 16 hex digits.
std::string inputs_hash(const nlohmann::json& j);

}  // namespace tfim
